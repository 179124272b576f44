//! Bounded convex domains in C^d and their Euclidean boundary queries.

mod affine;
mod queries;

pub use affine::AffineMap;
pub use queries::{local_hausdorff_distance, BoundaryPoint, ComplexHyperplane, HausdorffEstimate, Projection};

use crate::config::Tolerances;
use crate::error::{check_dim, Error, Result};
use crate::linalg::*;

/// A point of C^d.
pub type CPoint = CVec;

#[derive(Debug, Clone, PartialEq)]
pub enum DomainKind {
    Ball { center: CVec, radius: f64 },
    /// sum |z_i|^{2 m_i} < 1
    Ellipsoid { exponents: Vec<u32> },
    Affine { map: AffineMap, base: Box<ConvexDomain> },
    Intersection { parts: Vec<ConvexDomain> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Membership {
    Inside,
    /// Within the boundary tolerance; reported as not contained.
    Boundary,
    Outside,
}

impl Membership {
    pub fn is_inside(self) -> bool {
        self == Membership::Inside
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvexDomain {
    kind: DomainKind,
    dim: usize,
    bound_center: CVec,
    bound_radius: f64,
    interior: CVec,
    tol: Tolerances,
}

impl ConvexDomain {
    pub fn ball(center: CVec, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::invalid("radius", "must be positive and finite"));
        }
        if center.is_empty() || !is_finite(&center) {
            return Err(Error::invalid("center", "must be a finite point of positive dimension"));
        }
        let dim = center.len();
        Ok(ConvexDomain {
            kind: DomainKind::Ball { center: center.clone(), radius },
            dim,
            bound_center: center.clone(),
            bound_radius: radius,
            interior: center,
            tol: Tolerances::default(),
        })
    }

    pub fn unit_ball(dim: usize) -> Self {
        Self::ball(CVec::zeros(dim), 1.0).expect("unit ball")
    }

    pub fn ellipsoid(exponents: &[u32]) -> Result<Self> {
        if exponents.is_empty() {
            return Err(Error::invalid("exponents", "must be nonempty"));
        }
        if let Some(m) = exponents.iter().find(|&&m| m < 1) {
            return Err(Error::invalid("exponents", format!("exponent {m} must be >= 1")));
        }
        let dim = exponents.len();
        Ok(ConvexDomain {
            kind: DomainKind::Ellipsoid { exponents: exponents.to_vec() },
            dim,
            bound_center: CVec::zeros(dim),
            bound_radius: ellipsoid_bound(exponents),
            interior: CVec::zeros(dim),
            tol: Tolerances::default(),
        })
    }

    pub fn affine_image(map: AffineMap, base: ConvexDomain) -> Result<Self> {
        check_dim(base.dim, map.dim())?;
        let bound_center = map.apply(&base.bound_center);
        let bound_radius = opnorm(map.linear()) * base.bound_radius;
        let interior = map.apply(&base.interior);
        let tol = base.tol.clone();
        Ok(ConvexDomain {
            dim: base.dim,
            kind: DomainKind::Affine { map, base: Box::new(base) },
            bound_center,
            bound_radius,
            interior,
            tol,
        })
    }

    pub fn intersection(parts: Vec<ConvexDomain>) -> Result<Self> {
        let first = parts.first().ok_or_else(|| Error::invalid("parts", "must be nonempty"))?;
        let dim = first.dim;
        for p in &parts {
            check_dim(dim, p.dim)?;
        }
        let smallest = parts
            .iter()
            .min_by(|a, b| a.bound_radius.total_cmp(&b.bound_radius))
            .expect("nonempty");
        let (bound_center, bound_radius) = (smallest.bound_center.clone(), smallest.bound_radius);
        let mut start = CVec::zeros(dim);
        for p in &parts {
            start += &p.interior;
        }
        start /= c(parts.len() as f64, 0.0);
        let worst = |z: &CVec| parts.iter().map(|p| p.rho(z)).fold(f64::NEG_INFINITY, f64::max);
        let x0: Vec<f64> = start.iter().map(|x| x.re).chain(start.iter().map(|x| x.im)).collect();
        let unpack = |x: &[f64]| CVec::from_iterator(dim, (0..dim).map(|j| c(x[j], x[dim + j])));
        let (best, val) = nelder_mead(|x| worst(&unpack(x)), &x0, 0.25 * bound_radius, 4000, 1e-14);
        if !(val < 0.0) {
            return Err(Error::Degenerate("intersection has empty interior".into()));
        }
        let tol = first.tol.clone();
        Ok(ConvexDomain {
            kind: DomainKind::Intersection { parts },
            dim,
            bound_center,
            bound_radius,
            interior: unpack(&best),
            tol,
        })
    }

    /// Image under z -> linear z + offset.
    pub fn mapped(&self, map: AffineMap) -> Result<Self> {
        Self::affine_image(map, self.clone())
    }

    pub fn with_tolerances(mut self, tol: Tolerances) -> Self {
        if let DomainKind::Affine { base, .. } = &mut self.kind {
            **base = base.as_ref().clone().with_tolerances(tol.clone());
        }
        if let DomainKind::Intersection { parts } = &mut self.kind {
            for p in parts.iter_mut() {
                *p = p.clone().with_tolerances(tol.clone());
            }
        }
        self.tol = tol;
        self
    }

    pub fn kind(&self) -> &DomainKind {
        &self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn tolerances(&self) -> &Tolerances {
        &self.tol
    }

    /// A point deep inside the domain.
    pub fn interior_point(&self) -> &CVec {
        &self.interior
    }

    /// Centre and radius of a Euclidean ball containing the domain.
    pub fn bounding_ball(&self) -> (&CVec, f64) {
        (&self.bound_center, self.bound_radius)
    }

    /// Upper estimate of the Euclidean diameter.
    pub fn diameter(&self) -> f64 {
        2.0 * self.bound_radius
    }

    /// Absolute boundary tolerance.
    pub fn boundary_tol(&self) -> f64 {
        self.tol.boundary_rel * self.diameter()
    }

    /// Exponents if the domain is a generalized ellipsoid.
    pub fn exponents(&self) -> Option<&[u32]> {
        match &self.kind {
            DomainKind::Ellipsoid { exponents } => Some(exponents),
            _ => None,
        }
    }

    pub fn defining_function(&self, z: &CVec) -> Result<f64> {
        check_dim(self.dim, z.len())?;
        Ok(self.rho(z))
    }

    pub fn defining_gradient(&self, z: &CVec) -> Result<CVec> {
        check_dim(self.dim, z.len())?;
        Ok(self.grad(z))
    }

    pub(crate) fn rho(&self, z: &CVec) -> f64 {
        match &self.kind {
            DomainKind::Ball { center, radius } => {
                let r2 = radius * radius;
                (norm_sqr(&(z - center)) - r2) / r2
            }
            DomainKind::Ellipsoid { exponents } => {
                z.iter().zip(exponents).map(|(x, &m)| x.norm_sqr().powi(m as i32)).sum::<f64>() - 1.0
            }
            DomainKind::Affine { map, base } => base.rho(&map.apply_inverse(z)),
            DomainKind::Intersection { parts } => {
                parts.iter().map(|p| p.rho(z)).fold(f64::NEG_INFINITY, f64::max)
            }
        }
    }

    /// Gradient g with d rho(v) = Re<v, g>.
    pub(crate) fn grad(&self, z: &CVec) -> CVec {
        match &self.kind {
            DomainKind::Ball { center, radius } => scale(&(z - center), 2.0 / (radius * radius)),
            DomainKind::Ellipsoid { exponents } => CVec::from_iterator(
                self.dim,
                z.iter().zip(exponents).map(|(x, &m)| {
                    let mf = m as f64;
                    *x * (2.0 * mf * x.norm_sqr().powi(m as i32 - 1))
                }),
            ),
            DomainKind::Affine { map, base } => {
                let g = base.grad(&map.apply_inverse(z));
                map.inverse_linear().adjoint() * g
            }
            DomainKind::Intersection { parts } => {
                let (i, _) = parts
                    .iter()
                    .enumerate()
                    .map(|(i, p)| (i, p.rho(z)))
                    .fold((0, f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a });
                parts[i].grad(z)
            }
        }
    }

    /// Membership with a boundary band of width `boundary_tol`.
    pub fn contains(&self, z: &CVec) -> Result<Membership> {
        check_dim(self.dim, z.len())?;
        if !is_finite(z) {
            return Err(Error::invalid("point", "non-finite coordinate"));
        }
        let r = self.rho(z);
        let g = norm(&self.grad(z));
        let approx = if g > 1e-300 { r.abs() / g } else { f64::INFINITY };
        if approx <= self.boundary_tol() {
            Ok(Membership::Boundary)
        } else if r < 0.0 {
            Ok(Membership::Inside)
        } else {
            Ok(Membership::Outside)
        }
    }

    /// Raw test rho(z) < 0 without a boundary band.
    pub fn is_inside(&self, z: &CVec) -> bool {
        z.len() == self.dim && is_finite(z) && self.rho(z) < 0.0
    }

    /// sup { t >= 0 : z + t u in D } for z inside D and u != 0.
    pub fn ray_exit(&self, z: &CVec, u: &CVec) -> Result<f64> {
        check_dim(self.dim, z.len())?;
        check_dim(self.dim, u.len())?;
        if !self.is_inside(z) {
            return Err(Error::NotInDomain("ray origin".into()));
        }
        if norm(u) == 0.0 {
            return Err(Error::invalid("direction", "must be nonzero"));
        }
        Ok(self.exit(z, u))
    }

    pub(crate) fn exit(&self, z: &CVec, u: &CVec) -> f64 {
        match &self.kind {
            DomainKind::Ball { center, radius } => {
                let w = z - center;
                let a = norm_sqr(u);
                let b = re_inner(&w, u);
                let nw = norm(&w);
                let cq = -(radius - nw) * (radius + nw);
                let disc = (b * b - a * cq).max(0.0).sqrt();
                if b <= 0.0 {
                    (disc - b) / a
                } else {
                    -cq / (b + disc)
                }
            }
            DomainKind::Ellipsoid { exponents } => ellipsoid_exit(exponents, z, u, self.bound_radius),
            DomainKind::Affine { map, base } => {
                base.exit(&map.apply_inverse(z), &map.apply_linear_inverse(u))
            }
            DomainKind::Intersection { parts } => {
                parts.iter().map(|p| p.exit(z, u)).fold(f64::INFINITY, f64::min)
            }
        }
    }

    /// Upper bound (exact for balls) of sup_{z in D} Re<z, xi>.
    pub fn support(&self, xi: &CVec) -> Result<f64> {
        check_dim(self.dim, xi.len())?;
        Ok(self.support_fn(xi))
    }

    pub(crate) fn support_fn(&self, xi: &CVec) -> f64 {
        match &self.kind {
            DomainKind::Ball { center, radius } => re_inner(center, xi) + radius * norm(xi),
            DomainKind::Ellipsoid { exponents } => ellipsoid_support(exponents, xi),
            DomainKind::Affine { map, base } => {
                base.support_fn(&(map.linear().adjoint() * xi)) + re_inner(map.offset(), xi)
            }
            DomainKind::Intersection { parts } => {
                parts.iter().map(|p| p.support_fn(xi)).fold(f64::INFINITY, f64::min)
            }
        }
    }

    /// Boundary points hit by rays from the interior point in seeded directions.
    pub fn boundary_sample(&self, n: usize, seed: u64) -> Vec<CVec> {
        direction_set(self.dim, n, seed)
            .into_iter()
            .take(n)
            .map(|u| {
                let t = self.exit(&self.interior, &u);
                &self.interior + scale(&u, t)
            })
            .collect()
    }

    /// Seeded interior points, radially spread between the interior point and the boundary.
    pub fn interior_sample(&self, n: usize, seed: u64) -> Vec<CVec> {
        use rand::Rng;
        let mut g = rng(seed);
        (0..n)
            .map(|_| {
                let u = random_unit(&mut g, self.dim);
                let t = self.exit(&self.interior, &u);
                let s: f64 = g.random::<f64>();
                &self.interior + scale(&u, t * s.powf(1.0 / (2.0 * self.dim as f64)) * (1.0 - 1e-9))
            })
            .collect()
    }
}

fn ellipsoid_bound(exponents: &[u32]) -> f64 {
    // max sum s_i subject to sum s_i^{m_i} <= 1, via the concave dual of each coordinate.
    let dual = |lam: f64| -> f64 {
        lam + exponents
            .iter()
            .map(|&m| {
                if m == 1 {
                    (1.0 - lam).max(0.0)
                } else {
                    let mf = m as f64;
                    let s = (1.0 / (mf * lam)).powf(1.0 / (mf - 1.0)).min(1.0);
                    s - lam * s.powf(mf)
                }
            })
            .sum::<f64>()
    };
    let (_, v) = golden_min(|u| dual(u.exp()), -30.0, 30.0, 1e-14);
    v.min(exponents.len() as f64).sqrt() * (1.0 + 1e-12)
}

fn ellipsoid_value(exponents: &[u32], w: &CVec) -> f64 {
    w.iter().zip(exponents).map(|(x, &m)| x.norm_sqr().powi(m as i32)).sum::<f64>() - 1.0
}

fn ellipsoid_exit(exponents: &[u32], z: &CVec, u: &CVec, bound: f64) -> f64 {
    let at = |t: f64| -> CVec { z + scale(u, t) };
    let deriv = |t: f64| -> f64 {
        let w = at(t);
        w.iter()
            .zip(u.iter())
            .zip(exponents)
            .map(|((wi, ui), &m)| {
                let mf = m as f64;
                mf * wi.norm_sqr().powi(m as i32 - 1) * 2.0 * (ui * wi.conj()).re
            })
            .sum()
    };
    let nu = norm(u);
    let mut t = (bound + norm(z)) / nu;
    while ellipsoid_value(exponents, &at(t)) <= 0.0 {
        t *= 2.0;
    }
    // Newton from the right converges monotonically for a convex function.
    for _ in 0..200 {
        let f = ellipsoid_value(exponents, &at(t));
        if f <= 0.0 {
            break;
        }
        let d = deriv(t);
        if !(d > 0.0) {
            break;
        }
        let step = f / d;
        t -= step;
        if step <= 1e-16 * t.abs() {
            break;
        }
    }
    t.max(0.0)
}

fn ellipsoid_support(exponents: &[u32], xi: &CVec) -> f64 {
    let a: Vec<f64> = xi.iter().map(|x| x.norm()).collect();
    if a.iter().all(|&x| x == 0.0) {
        return 0.0;
    }
    // Weak duality: for every lam > 0 the value below bounds the support from above.
    let dual = |lam: f64| -> f64 {
        lam + a
            .iter()
            .zip(exponents)
            .map(|(&ai, &m)| {
                if ai == 0.0 {
                    return 0.0;
                }
                let mf = m as f64;
                let t = (ai / (2.0 * mf * lam)).powf(1.0 / (2.0 * mf - 1.0));
                ai * t * (1.0 - 1.0 / (2.0 * mf))
            })
            .sum::<f64>()
    };
    let (_, v) = golden_min(|u| dual(u.exp()), -60.0, 60.0, 1e-15);
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e12() -> ConvexDomain {
        ConvexDomain::ellipsoid(&[1, 2]).unwrap()
    }

    #[test]
    fn membership_examples() {
        let b = ConvexDomain::unit_ball(2);
        assert_eq!(b.contains(&CVec::zeros(2)).unwrap(), Membership::Inside);
        assert_eq!(b.contains(&cvec_re(&[1.1, 0.0])).unwrap(), Membership::Outside);
        assert_eq!(b.contains(&cvec_re(&[1.0, 0.0])).unwrap(), Membership::Boundary);
        assert_eq!(e12().contains(&cvec_re(&[0.9, 0.5])).unwrap(), Membership::Inside);
        assert!(matches!(b.contains(&CVec::zeros(3)), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn ray_exit_ball_and_ellipsoid() {
        let b = ConvexDomain::unit_ball(2);
        let t = b.ray_exit(&cvec_re(&[0.5, 0.0]), &basis(2, 0)).unwrap();
        assert!((t - 0.5).abs() < 1e-15);
        let t = e12().ray_exit(&CVec::zeros(2), &basis(2, 1)).unwrap();
        assert!((t - 1.0).abs() < 1e-14);
        let u = unit(&cvec(&[(1.0, 0.0), (0.0, 1.0)]));
        let t = e12().ray_exit(&CVec::zeros(2), &u).unwrap();
        let x = scale(&u, t);
        assert!(e12().rho(&x).abs() < 1e-14);
    }

    #[test]
    fn ellipsoid_support_matches_ball_when_exponents_one() {
        let e = ConvexDomain::ellipsoid(&[1, 1]).unwrap();
        let xi = cvec(&[(0.3, -0.4), (1.2, 0.0)]);
        assert!((e.support(&xi).unwrap() - norm(&xi)).abs() < 1e-10);
    }

    #[test]
    fn ellipsoid_support_is_upper_bound() {
        let e = e12();
        for (k, xi) in direction_set(2, 40, 3).iter().enumerate() {
            let h = e.support(xi).unwrap();
            for x in e.boundary_sample(200, k as u64) {
                assert!(re_inner(&x, xi) <= h + 1e-12);
            }
            // tight: the dual gap closes
            let (_, best) = nelder_mead(
                |p| {
                    let u = unit(&cvec(&[(p[0], p[1]), (p[2], p[3])]));
                    let t = e.exit(&CVec::zeros(2), &u);
                    -re_inner(&scale(&u, t), xi)
                },
                &[xi[0].re, xi[0].im, xi[1].re, xi[1].im],
                0.1,
                3000,
                1e-15,
            );
            assert!(h + best < 1e-6, "gap {}", h + best);
        }
    }

    #[test]
    fn ellipsoid_bounding_radius() {
        let (_, r) = e12().bounding_ball();
        assert!((r - 1.25f64.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn affine_gradient_is_pullback() {
        let a = AffineMap::new(
            CMat::from_row_slice(2, 2, &[c(2.0, 0.0), c(0.0, 1.0), c(0.0, 0.0), c(1.0, 0.0)]),
            cvec_re(&[0.1, 0.2]),
        )
        .unwrap();
        let d = ConvexDomain::affine_image(a, e12()).unwrap();
        let z = cvec(&[(0.3, 0.1), (0.2, -0.1)]);
        let v = cvec(&[(0.7, 0.2), (-0.3, 0.5)]);
        let h = 1e-6;
        let fd = (d.rho(&(&z + scale(&v, h))) - d.rho(&(&z - scale(&v, h)))) / (2.0 * h);
        assert!((fd - re_inner(&v, &d.grad(&z))).abs() < 1e-8);
    }

    #[test]
    fn intersection_has_interior_point() {
        let a = ConvexDomain::unit_ball(2);
        let b = ConvexDomain::ball(cvec_re(&[1.5, 0.0]), 1.0).unwrap();
        let d = ConvexDomain::intersection(vec![a, b]).unwrap();
        assert!(d.is_inside(d.interior_point()));
        let far = ConvexDomain::ball(cvec_re(&[5.0, 0.0]), 1.0).unwrap();
        assert!(ConvexDomain::intersection(vec![ConvexDomain::unit_ball(2), far]).is_err());
    }

    #[test]
    fn rejects_bad_exponent() {
        assert!(ConvexDomain::ellipsoid(&[1, 0]).is_err());
    }
}

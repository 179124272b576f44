use super::{ConvexDomain, DomainKind};
use crate::error::{check_dim, Error, Result};
use crate::linalg::*;

#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryPoint {
    pub point: CVec,
    pub inward_normal: CVec,
}

/// Result of a nearest-boundary-point query.
#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    pub boundary: BoundaryPoint,
    pub distance: f64,
    /// The segment to the returned point is normal to the supporting hyperplane there.
    pub certified: bool,
    pub iterations: usize,
}

/// H = { z : <z - anchor, normal> = 0 } with a unit normal.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexHyperplane {
    pub anchor: CVec,
    pub normal: CVec,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HausdorffEstimate {
    pub value: f64,
    /// Gain of the local refinement over the seeded direction set.
    pub discretization_error: f64,
}

impl ComplexHyperplane {
    pub fn new(anchor: CVec, normal: CVec) -> Result<Self> {
        check_dim(anchor.len(), normal.len())?;
        let n = norm(&normal);
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::invalid("normal", "must be a nonzero finite vector"));
        }
        Ok(ComplexHyperplane { anchor, normal: scale(&normal, 1.0 / n) })
    }

    pub fn defect(&self, z: &CVec) -> C64 {
        inner(&(z - &self.anchor), &self.normal)
    }

    /// Euclidean distance from z to H.
    pub fn distance(&self, z: &CVec) -> f64 {
        self.defect(z).norm()
    }

    pub fn contains(&self, z: &CVec, tol: f64) -> bool {
        self.distance(z) < tol
    }

    /// Sine of the angle between the complex lines spanned by the normals.
    pub fn angle(&self, other: &ComplexHyperplane) -> f64 {
        let p = inner(&other.normal, &self.normal);
        norm(&(&other.normal - self.normal.map(|x| x * p)))
    }

    /// Equality up to phase of the normal and translation of the anchor within H.
    pub fn coincides(&self, other: &ComplexHyperplane, tol: f64) -> bool {
        self.angle(other) < tol && self.distance(&other.anchor) < tol && other.distance(&self.anchor) < tol
    }
}

fn project_span(v: &CVec, span: &[CVec]) -> CVec {
    let mut out = CVec::zeros(v.len());
    for b in span {
        out += b.map(|x| x * inner(v, b));
    }
    out
}

impl ConvexDomain {
    /// Nearest boundary point to an interior z.
    pub fn boundary_projection(&self, z: &CVec) -> Result<Projection> {
        check_dim(self.dim, z.len())?;
        if !self.is_inside(z) {
            return Err(Error::NotInDomain("boundary projection needs an interior point".into()));
        }
        if let DomainKind::Ball { center, radius } = &self.kind {
            let w = z - center;
            let nw = norm(&w);
            let dir = if nw <= 1e-15 * radius { basis(self.dim, 0) } else { scale(&w, 1.0 / nw) };
            let point = center + scale(&dir, *radius);
            return Ok(Projection {
                boundary: BoundaryPoint { point, inward_normal: -dir },
                distance: radius - nw,
                certified: true,
                iterations: 0,
            });
        }
        let span: Vec<CVec> = (0..self.dim).map(|j| basis(self.dim, j)).collect();
        self.nearest_in_span(z, &span)
    }

    /// Nearest boundary point within the complex affine slice z + span(W); `span` orthonormal.
    pub fn boundary_projection_in(&self, z: &CVec, span: &[CVec]) -> Result<Projection> {
        check_dim(self.dim, z.len())?;
        if span.is_empty() {
            return Err(Error::Degenerate("empty slice".into()));
        }
        for b in span {
            check_dim(self.dim, b.len())?;
        }
        if !self.is_inside(z) {
            return Err(Error::NotInDomain("slice projection needs an interior point".into()));
        }
        self.nearest_in_span(z, span)
    }

    /// Euclidean distance from an interior point to the boundary.
    pub fn boundary_distance(&self, z: &CVec) -> Result<f64> {
        Ok(self.boundary_projection(z)?.distance)
    }

    fn nearest_in_span(&self, z: &CVec, span: &[CVec]) -> Result<Projection> {
        let d = self.dim;
        let mut starts = Vec::with_capacity(4 * span.len() + 1);
        // The lexicographically largest direction of the slice sphere comes first.
        for k in 0..2 * d {
            let key = if k < d { basis(d, k) } else { basis(d, k - d).map(|x| x * I) };
            let p = project_span(&key, span);
            if norm(&p) > 1e-9 {
                starts.push(unit(&p));
                break;
            }
        }
        for b in span {
            for s in [c(1.0, 0.0), c(-1.0, 0.0), I, -I] {
                starts.push(b.map(|x| x * s));
            }
        }
        let max_iter = self.tol.projection_max_iter;
        let mut runs = Vec::with_capacity(starts.len());
        for u0 in &starts {
            runs.push(self.descend(z, u0, span, max_iter));
        }
        let rmin = runs.iter().map(|r| r.1).fold(f64::INFINITY, f64::min);
        let tie = 1e-9 * rmin + 1e-14 * self.diameter();
        let lex_tol = 1e-9 * self.diameter();
        let mut best: Option<(CVec, f64, f64, usize)> = None;
        for (u, r, gap, it) in runs {
            if r > rmin + tie {
                continue;
            }
            let x = z + scale(&u, r);
            let replace = match &best {
                None => true,
                Some((bx, _, _, _)) => lex_cmp(&x, bx, lex_tol) == std::cmp::Ordering::Greater,
            };
            if replace {
                best = Some((x, r, gap, it));
            }
        }
        let (x, r, gap, iterations) = best.expect("at least one start");
        if gap > 1e-3 {
            return Err(Error::NonConvergence(format!("boundary projection stalled with gap {gap:.3e}")));
        }
        let g = self.grad(&x);
        let ng = norm(&g);
        if ng < 1e-10 {
            return Err(Error::Degenerate("vanishing gradient at projected point".into()));
        }
        let n_out = scale(&g, 1.0 / ng);
        // Distance from z to the supporting hyperplane agrees with r iff the segment is normal.
        let support_gap = r - re_inner(&(&x - z), &project_span(&n_out, span));
        let certified = support_gap.abs() <= 1e-6 * r.max(1e-300) || gap < 1e-6;
        Ok(Projection {
            boundary: BoundaryPoint { point: x, inward_normal: -n_out },
            distance: r,
            certified,
            iterations,
        })
    }

    /// Projected descent of the ray-exit length over unit directions of the span.
    fn descend(&self, z: &CVec, u0: &CVec, span: &[CVec], max_iter: usize) -> (CVec, f64, f64, usize) {
        let mut u = unit(u0);
        let mut r = self.exit(z, &u);
        let mut gap = f64::INFINITY;
        let mut prev_gap = f64::INFINITY;
        for it in 0..max_iter {
            let x = z + scale(&u, r);
            let g = project_span(&self.grad(&x), span);
            let ng = norm(&g);
            if !(ng > 1e-300) {
                return (u, r, gap, it);
            }
            let target = scale(&g, 1.0 / ng);
            gap = norm(&(&target - &u));
            if gap < 1e-14 || (gap < 1e-6 && gap >= prev_gap) {
                return (u, r, gap, it);
            }
            prev_gap = gap;
            let step = &target - &u;
            let mut alpha = 1.0;
            let mut moved = false;
            while alpha >= 1e-10 {
                let cand = &u + scale(&step, alpha);
                let nc = norm(&cand);
                if nc > 1e-12 {
                    let cand = scale(&cand, 1.0 / nc);
                    let rc = self.exit(z, &cand);
                    if rc < r - 1e-4 * alpha * r * gap * gap || (gap < 1e-6 && rc <= r * (1.0 + 1e-15)) {
                        u = cand;
                        r = rc;
                        moved = true;
                        break;
                    }
                }
                alpha *= 0.5;
            }
            if !moved {
                return (u, r, gap, it);
            }
        }
        (u, r, gap, max_iter)
    }

    /// -grad rho / |grad rho| at a boundary point.
    pub fn inward_normal(&self, x: &CVec) -> Result<CVec> {
        check_dim(self.dim, x.len())?;
        let g = self.grad(x);
        let ng = norm(&g);
        if !(ng >= 1e-10) {
            return Err(Error::Degenerate(format!("gradient norm {ng:.3e} below 1e-10")));
        }
        let off = self.rho(x).abs() / ng;
        if off > self.boundary_tol() {
            return Err(Error::Precondition(format!("point is {off:.3e} away from the boundary")));
        }
        Ok(scale(&g, -1.0 / ng))
    }

    pub fn boundary_point(&self, x: &CVec) -> Result<BoundaryPoint> {
        Ok(BoundaryPoint { point: x.clone(), inward_normal: self.inward_normal(x)? })
    }

    pub fn complex_tangent_hyperplane(&self, x: &CVec) -> Result<ComplexHyperplane> {
        let n = self.inward_normal(x)?;
        Ok(ComplexHyperplane { anchor: x.clone(), normal: n })
    }

    pub fn same_complex_face(&self, x: &CVec, y: &CVec, tol: f64) -> Result<bool> {
        let hx = self.complex_tangent_hyperplane(x)?;
        let hy = self.complex_tangent_hyperplane(y)?;
        Ok(hx.coincides(&hy, tol))
    }

    /// Largest r with dist(x + r n(x), boundary) = r, i.e. the radius of the inner rolling ball at x.
    pub fn rolling_radius(&self, x: &CVec) -> Result<f64> {
        let n = self.inward_normal(x)?;
        let eps = 1e-9 * self.diameter();
        let start = x + scale(&n, eps);
        if !self.is_inside(&start) {
            return Ok(0.0);
        }
        let chord = eps + self.exit(&start, &n);
        let ok = |s: f64| -> bool {
            let p = x + scale(&n, s);
            self.is_inside(&p)
                && self.boundary_projection(&p).map(|q| q.distance >= s * (1.0 - 1e-9)).unwrap_or(false)
        };
        let mut lo = 0.0;
        let mut hi = 0.5 * chord;
        if ok(hi) {
            return Ok(hi);
        }
        for _ in 0..50 {
            let mid = 0.5 * (lo + hi);
            if ok(mid) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(lo)
    }

    /// Safety factor times the sampled minimum of the rolling radius over the boundary.
    pub fn uniform_inradius(&self) -> Result<f64> {
        let safety = self.tol.inradius_safety;
        if let DomainKind::Ball { radius, .. } = &self.kind {
            return Ok(safety * radius);
        }
        let c0 = self.interior.clone();
        let dirs = direction_set(self.dim, 256, 0x1a7ad1);
        let mut vals: Vec<(f64, CVec)> = Vec::with_capacity(dirs.len());
        for u in dirs {
            let x = &c0 + scale(&u, self.exit(&c0, &u));
            vals.push((self.rolling_radius(&x)?, u));
        }
        vals.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut best = vals[0].0;
        let mut g = rng(0x5eed);
        for (_, u) in vals.iter().take(4) {
            for k in 0..8 {
                let amp = if k < 4 { 0.05 } else { 0.01 };
                let v = unit(&(u + scale(&random_cvec(&mut g, self.dim), amp)));
                let x = &c0 + scale(&v, self.exit(&c0, &v));
                best = best.min(self.rolling_radius(&x)?);
            }
        }
        if !(best > 1e-12) {
            return Err(Error::Inconsistent("boundary sample without an inner rolling ball".into()));
        }
        Ok(safety * best)
    }

    /// Radial function of D intersected with B_R(0), seen from `center`.
    pub fn truncated_radial(&self, center: &CVec, u: &CVec, radius: f64) -> f64 {
        let a = norm_sqr(u);
        let b = re_inner(center, u);
        let nc = norm(center);
        let cq = -(radius - nc) * (radius + nc);
        let disc = (b * b - a * cq).max(0.0).sqrt();
        let ball = if b <= 0.0 { (disc - b) / a } else { -cq / (b + disc) };
        self.exit(center, u).min(ball)
    }
}

/// Upper estimate of the Hausdorff distance between D1 and D2 intersected with B_R(0).
///
/// Both truncated bodies are star-shaped about a common interior point, so the sup of the
/// difference of radial functions bounds the Hausdorff distance.
pub fn local_hausdorff_distance(a: &ConvexDomain, b: &ConvexDomain, radius: f64) -> Result<HausdorffEstimate> {
    check_dim(a.dim, b.dim)?;
    if !(radius > 0.0) {
        return Err(Error::invalid("R", "must be positive"));
    }
    let d = a.dim;
    let origin = CVec::zeros(d);
    let mid = (a.interior_point() + b.interior_point()).map(|x| x * 0.5);
    let candidates = [origin, mid, a.interior_point().clone(), b.interior_point().clone()];
    let center = candidates
        .iter()
        .find(|p| a.is_inside(p) && b.is_inside(p) && norm(p) < radius)
        .cloned()
        .ok_or_else(|| Error::Degenerate("no common interior point inside the R-ball".into()))?;
    let f = |u: &CVec| (a.truncated_radial(&center, u, radius) - b.truncated_radial(&center, u, radius)).abs();
    radial_sup(f, d, 0x4a05)
}

/// Sup of a function on the unit sphere: seeded directions followed by random hill climbing.
pub(crate) fn radial_sup<F: Fn(&CVec) -> f64>(f: F, d: usize, seed: u64) -> Result<HausdorffEstimate> {
    let dirs = direction_set(d, 256 * d, seed);
    let mut vals: Vec<(f64, CVec)> = dirs.into_iter().map(|u| (f(&u), u)).collect();
    if vals.iter().any(|v| !v.0.is_finite()) {
        return Err(Error::Degenerate("unbounded radial function".into()));
    }
    vals.sort_by(|x, y| y.0.total_cmp(&x.0));
    let coarse = vals[0].0;
    let mut best = coarse;
    let mut g = rng(seed ^ 0x9e37);
    for (v0, u0) in vals.iter().take(6) {
        let (mut v, mut u) = (*v0, u0.clone());
        let mut step = 0.1;
        while step > 1e-4 {
            let mut improved = false;
            for _ in 0..12 {
                let cand = unit(&(&u + scale(&random_cvec(&mut g, d), step)));
                let fc = f(&cand);
                if fc > v {
                    v = fc;
                    u = cand;
                    improved = true;
                }
            }
            if !improved {
                step *= 0.5;
            }
        }
        best = best.max(v);
    }
    Ok(HausdorffEstimate { value: best, discretization_error: best - coarse })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e12() -> ConvexDomain {
        ConvexDomain::ellipsoid(&[1, 2]).unwrap()
    }

    #[test]
    fn projection_examples() {
        let b = ConvexDomain::unit_ball(2);
        let p = b.boundary_projection(&CVec::zeros(2)).unwrap();
        assert!((p.distance - 1.0).abs() < 1e-15);
        assert!(dist(&p.boundary.point, &basis(2, 0)) < 1e-15);
        let p = b.boundary_projection(&cvec_re(&[0.5, 0.0])).unwrap();
        assert!(dist(&p.boundary.point, &basis(2, 0)) < 1e-15 && (p.distance - 0.5).abs() < 1e-15);
    }

    #[test]
    fn general_path_agrees_on_affine_ball() {
        let b = ConvexDomain::unit_ball(2).mapped(super::super::AffineMap::identity(2)).unwrap();
        let p = b.boundary_projection(&cvec(&[(0.2, 0.1), (-0.3, 0.0)])).unwrap();
        assert!((p.distance - (1.0 - (0.05f64 + 0.09).sqrt())).abs() < 1e-12);
        assert!(p.certified);
        // tie at the centre resolved to the lexicographic maximum
        let p = b.boundary_projection(&CVec::zeros(2)).unwrap();
        assert!(dist(&p.boundary.point, &basis(2, 0)) < 1e-9);
    }

    #[test]
    fn ellipsoid_projection_matches_dense_oracle() {
        // oracle: dense sampling of the boundary curve |z1|^2 + |z2|^4 = 1 in the real (x1, x2) plane
        let e = e12();
        let z = cvec_re(&[0.0, 0.5]);
        let mut best = f64::INFINITY;
        let n = 200_000;
        for k in 0..=n {
            let x2 = k as f64 / n as f64;
            let x1 = (1.0 - x2.powi(4)).max(0.0).sqrt();
            best = best.min((x1 * x1 + (x2 - 0.5) * (x2 - 0.5)).sqrt());
        }
        let p = e.boundary_projection(&z).unwrap();
        assert!((p.distance - best).abs() < 1e-8, "{} vs {}", p.distance, best);
        assert!(p.certified);
    }

    #[test]
    fn slice_projection_frame_example() {
        let b = ConvexDomain::unit_ball(2).mapped(super::super::AffineMap::identity(2)).unwrap();
        let p = b.boundary_projection_in(&cvec_re(&[0.5, 0.0]), &[basis(2, 1)]).unwrap();
        assert!(dist(&p.boundary.point, &cvec_re(&[0.5, 0.75f64.sqrt()])) < 1e-9);
    }

    #[test]
    fn normals() {
        let b = ConvexDomain::unit_ball(2);
        assert!(dist(&b.inward_normal(&basis(2, 0)).unwrap(), &-basis(2, 0)) < 1e-15);
        assert!(dist(&e12().inward_normal(&basis(2, 1)).unwrap(), &-basis(2, 1)) < 1e-15);
        assert!(matches!(b.inward_normal(&cvec_re(&[0.5, 0.0])), Err(Error::Precondition(_))));
    }

    #[test]
    fn tangent_hyperplanes() {
        let b = ConvexDomain::unit_ball(2);
        let h = b.complex_tangent_hyperplane(&basis(2, 0)).unwrap();
        assert!(h.contains(&cvec(&[(1.0, 0.0), (3.0, -2.0)]), 1e-12));
        let s = 0.5f64.sqrt();
        let h = b.complex_tangent_hyperplane(&cvec_re(&[s, s])).unwrap();
        assert!(h.contains(&cvec(&[(s + 0.3, 0.1), (s - 0.3, -0.1)]), 1e-12));
        let h = e12().complex_tangent_hyperplane(&basis(2, 1)).unwrap();
        assert!(h.contains(&cvec(&[(5.0, 1.0), (1.0, 0.0)]), 1e-12));
    }

    #[test]
    fn faces_on_ball() {
        let b = ConvexDomain::unit_ball(2);
        let e1 = basis(2, 0);
        assert!(b.same_complex_face(&e1, &e1, 1e-6).unwrap());
        assert!(!b.same_complex_face(&e1, &-e1.clone(), 1e-6).unwrap());
        assert!(!b.same_complex_face(&e1, &cvec(&[(0.0, 1.0), (0.0, 0.0)]), 1e-6).unwrap());
    }

    #[test]
    fn inradius_examples() {
        assert!((ConvexDomain::unit_ball(2).uniform_inradius().unwrap() - 0.9).abs() < 1e-12);
        let b2 = ConvexDomain::ball(CVec::zeros(2), 2.0).unwrap();
        assert!((b2.uniform_inradius().unwrap() - 1.8).abs() < 1e-12);
        let viaaffine = ConvexDomain::unit_ball(2)
            .mapped(super::super::AffineMap::linear_map(identity(2).map(|x| x * 2.0)).unwrap())
            .unwrap();
        assert!((viaaffine.uniform_inradius().unwrap() - 1.8).abs() < 1e-6);
    }

    #[test]
    fn local_hausdorff_examples() {
        let b = ConvexDomain::unit_ball(2);
        let z = local_hausdorff_distance(&b, &b, 2.0).unwrap();
        assert_eq!(z.value, 0.0);
        let big = ConvexDomain::ball(CVec::zeros(2), 1.1).unwrap();
        assert!((local_hausdorff_distance(&b, &big, 2.0).unwrap().value - 0.1).abs() < 1e-12);
        let shifted = ConvexDomain::ball(cvec_re(&[0.05, 0.0]), 1.0).unwrap();
        assert!((local_hausdorff_distance(&b, &shifted, 2.0).unwrap().value - 0.05).abs() < 1e-9);
        let far = ConvexDomain::ball(cvec_re(&[5.0, 0.0]), 1.0).unwrap();
        assert!(local_hausdorff_distance(&b, &far, 2.0).is_err());
    }
}

//! Certified brackets for the Kobayashi metric and distance, Gromov products and almost-geodesics.
//!
//! Normalisation: k_D(0; 1) = 1 on the unit disc, so K_D(0, r) = arctanh r.

pub(crate) mod ball;
mod curves;
mod generic;

pub use curves::{
    almost_geodesic_certificate, directed_hausdorff, geodesic_between, normal_line_curve, normal_line_curve_sampled, orbit_hausdorff_distance,
    visibility_witness, AlmostGeodesic, CurveCertificate, Witness,
};

use crate::config::Tolerances;
use crate::domain_geometry::{AffineMap, ConvexDomain, DomainKind};
use crate::error::{check_dim, Error, Result};
use crate::linalg::*;

#[derive(Debug, Clone, PartialEq)]
pub struct MetricBracket {
    pub lower: f64,
    pub upper: f64,
    /// Which construction produced each bound, lower first.
    pub method_tags: Vec<String>,
}

impl MetricBracket {
    pub fn new(lower: f64, upper: f64, lower_tag: &str, upper_tag: &str) -> Self {
        let lower = lower.max(0.0);
        MetricBracket { lower: lower.min(upper), upper, method_tags: vec![lower_tag.into(), upper_tag.into()] }
    }

    pub fn exact(v: f64, tag: &str) -> Self {
        MetricBracket { lower: v, upper: v, method_tags: vec![tag.into(), tag.into()] }
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lower + self.upper)
    }

    pub fn encloses(&self, x: f64) -> bool {
        self.lower <= x && x <= self.upper
    }

    pub fn overlaps(&self, other: &MetricBracket) -> bool {
        self.lower <= other.upper && other.lower <= self.upper
    }

    /// Intersection with another sound bracket of the same quantity; never wider than either.
    pub fn refine(&self, other: &MetricBracket) -> MetricBracket {
        let (lower, lt) = if other.lower > self.lower {
            (other.lower, other.method_tags[0].clone())
        } else {
            (self.lower, self.method_tags[0].clone())
        };
        let (upper, ut) = if other.upper < self.upper {
            (other.upper, other.method_tags[1].clone())
        } else {
            (self.upper, self.method_tags[1].clone())
        };
        MetricBracket { lower: lower.min(upper), upper, method_tags: vec![lt, ut] }
    }
}

/// Interval for a Gromov product, plus the data it was computed from.
#[derive(Debug, Clone, PartialEq)]
pub struct GromovProduct {
    pub value: MetricBracket,
    pub basepoint: CVec,
    pub endpoints: (CVec, CVec),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Effort {
    /// Few polygon vertices, no path descent; for bulk sampling.
    Quick,
    Full,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricOptions {
    pub polygon: usize,
    pub disc_rounds: usize,
    pub max_levels: usize,
    pub descent: bool,
    pub directions: usize,
    pub local_starts: usize,
    pub target_width: f64,
    pub path_improvement: f64,
    pub path_evaluations: usize,
    pub disc_refinement: bool,
    pub disc_degree: usize,
}

impl MetricOptions {
    pub fn from_tolerances(tol: &Tolerances, effort: Effort) -> Self {
        match effort {
            Effort::Full => MetricOptions {
                polygon: 32,
                disc_rounds: 6,
                max_levels: 3,
                descent: true,
                directions: tol.hyperplane_directions,
                local_starts: 3,
                target_width: 1e-3,
                path_improvement: tol.path_improvement,
                path_evaluations: tol.path_evaluations,
                disc_refinement: tol.disc_refinement,
                disc_degree: tol.disc_degree,
            },
            Effort::Quick => MetricOptions {
                polygon: 16,
                disc_rounds: 3,
                max_levels: 2,
                descent: false,
                directions: 16,
                local_starts: 1,
                target_width: 1e-2,
                path_improvement: tol.path_improvement,
                path_evaluations: 64,
                disc_refinement: false,
                disc_degree: tol.disc_degree,
            },
        }
    }
}

/// Canonical form D = map(base) used to route every query to the cheapest exact model.
pub(crate) enum Canon<'a> {
    UnitBall,
    Ellipsoid(&'a [u32]),
    Other(&'a ConvexDomain),
}

pub(crate) fn canonical(dom: &ConvexDomain) -> (Canon<'_>, AffineMap) {
    match dom.kind() {
        DomainKind::Ball { center, radius } => {
            let d = dom.dim();
            let m = AffineMap::new(identity(d).map(|x| x * *radius), center.clone()).expect("ball map");
            (Canon::UnitBall, m)
        }
        DomainKind::Ellipsoid { exponents } if exponents.iter().all(|&m| m == 1) => {
            (Canon::UnitBall, AffineMap::identity(dom.dim()))
        }
        DomainKind::Ellipsoid { exponents } => (Canon::Ellipsoid(exponents), AffineMap::identity(dom.dim())),
        DomainKind::Affine { map, base } => {
            let (canon, inner) = canonical(base);
            (canon, map.compose(&inner).expect("same dimension"))
        }
        DomainKind::Intersection { .. } => (Canon::Other(dom), AffineMap::identity(dom.dim())),
    }
}

pub(crate) fn check_point(dom: &ConvexDomain, z: &CVec, what: &str) -> Result<()> {
    check_dim(dom.dim(), z.len())?;
    if !dom.is_inside(z) {
        return Err(Error::NotInDomain(format!("{what} is not in the domain")));
    }
    Ok(())
}

pub(crate) fn block_v(exps: &[u32], z: &CVec) -> (CVec, f64) {
    let v: Vec<C64> = exps.iter().zip(z.iter()).filter(|(m, _)| **m == 1).map(|(_, x)| *x).collect();
    let rest = exps.iter().zip(z.iter()).filter(|(m, _)| **m != 1).map(|(_, x)| x.norm_sqr()).sum::<f64>();
    (CVec::from_vec(v), rest.sqrt())
}

/// The ellipsoid automorphism exchanging (a, *) and (0, *) on the ball factor; an involution.
pub(crate) fn lift_recenter(exps: &[u32], a: &CVec, p: &CVec) -> CVec {
    let na2 = norm_sqr(a);
    if a.is_empty() || na2 < 1e-28 {
        return p.clone();
    }
    let sa = ((1.0 - na2.sqrt()) * (1.0 + na2.sqrt())).sqrt();
    let (zeta, _) = block_v(exps, p);
    let den = c(1.0, 0.0) - inner(&zeta, a);
    let pa = a.map(|x| x * (inner(&zeta, a) / na2));
    let qa = &zeta - &pa;
    let img = (a - &pa - qa.map(|x| x * sa)).map(|x| x / den);
    let mut out = p.clone();
    let mut k = 0;
    for (j, &m) in exps.iter().enumerate() {
        if m == 1 {
            out[j] = img[k];
            k += 1;
        } else {
            out[j] = p[j] * (c(sa, 0.0) / den).powf(1.0 / m as f64);
        }
    }
    out
}

fn recenter(exps: &[u32], z: &CVec, w: &CVec) -> (CVec, CVec) {
    let (a, _) = block_v(exps, z);
    (lift_recenter(exps, &a, z), lift_recenter(exps, &a, w))
}

/// Bracket for the infinitesimal metric k_D(z; v).
pub fn infinitesimal_metric(dom: &ConvexDomain, z: &CVec, v: &CVec) -> Result<MetricBracket> {
    infinitesimal_metric_with(dom, z, v, &MetricOptions::from_tolerances(dom.tolerances(), Effort::Full))
}

pub fn infinitesimal_metric_with(dom: &ConvexDomain, z: &CVec, v: &CVec, opts: &MetricOptions) -> Result<MetricBracket> {
    check_point(dom, z, "base point")?;
    check_dim(dom.dim(), v.len())?;
    if !(norm(v) > 0.0) {
        return Err(Error::invalid("v", "tangent vector must be nonzero"));
    }
    let (canon, map) = canonical(dom);
    let zb = map.apply_inverse(z);
    let vb = map.apply_linear_inverse(v);
    match canon {
        Canon::UnitBall => {
            let om = ball::one_minus_sq(&zb);
            let lo = ball::metric_lower(&zb, &vb);
            let up = ball::metric_upper(&zb, &vb);
            let p = up * (1e-13 + 8e-16 / om);
            Ok(MetricBracket::new(lo - p, up + p, "ball-projection", "slice-disc"))
        }
        Canon::Ellipsoid(exps) => {
            let base = ConvexDomain::ellipsoid(exps)?.with_tolerances(dom.tolerances().clone());
            let (zv, zr) = block_v(exps, &zb);
            let (vv, vr) = block_v(exps, &vb);
            let mut b = generic_metric(&base, &zb, &vb, opts);
            if !zv.is_empty() && norm(&vv) > 0.0 {
                let om = ball::one_minus_sq(&zv);
                let lo = ball::metric_lower(&zv, &vv);
                let p = lo * (1e-13 + 8e-16 / om);
                let mut extra = MetricBracket::new(lo - p, f64::INFINITY, "ball-factor", "none");
                if zr == 0.0 && vr == 0.0 {
                    extra.upper = ball::metric_upper(&zv, &vv) + p;
                    extra.method_tags[1] = "ball-slice-embedding".into();
                }
                b = b.refine(&extra);
            }
            Ok(b)
        }
        Canon::Other(d) => Ok(generic_metric(d, &zb, &vb, opts)),
    }
}

fn generic_metric(dom: &ConvexDomain, z: &CVec, v: &CVec, opts: &MetricOptions) -> MetricBracket {
    let (mut lo, mut lt) = generic::metric_lower(dom, z, v, opts);
    let inherited = part_bounds(dom, |p| infinitesimal_metric_with(p, z, v, &quick(p)));
    if inherited > lo {
        (lo, lt) = (inherited, "containing-part");
    }
    let mut up = generic::metric_upper(dom, z, v, opts);
    let mut ut = "slice-disc";
    if opts.disc_refinement {
        let p = generic::polynomial_disc_upper(dom, z, v, opts.disc_degree);
        if p < up {
            up = p;
            ut = "polynomial-disc";
        }
    }
    let p = 1e-12 * (1.0 + up.max(lo));
    MetricBracket::new(lo * (1.0 - 1e-12) - 1e-300, up + p, lt, ut)
}

/// Bracket for the Kobayashi distance K_D(z, w).
pub fn distance(dom: &ConvexDomain, z: &CVec, w: &CVec) -> Result<MetricBracket> {
    distance_with(dom, z, w, &MetricOptions::from_tolerances(dom.tolerances(), Effort::Full))
}

pub fn distance_with(dom: &ConvexDomain, z: &CVec, w: &CVec, opts: &MetricOptions) -> Result<MetricBracket> {
    Ok(distance_and_path(dom, z, w, opts)?.0)
}

/// Distance bracket together with a polyline realising the upper bound (in original coordinates).
pub(crate) fn distance_and_path(
    dom: &ConvexDomain,
    z: &CVec,
    w: &CVec,
    opts: &MetricOptions,
) -> Result<(MetricBracket, Option<Vec<CVec>>)> {
    check_point(dom, z, "first point")?;
    check_point(dom, w, "second point")?;
    if z == w {
        return Ok((MetricBracket::exact(0.0, "identical"), None));
    }
    let (canon, map) = canonical(dom);
    let zb = map.apply_inverse(z);
    let wb = map.apply_inverse(w);
    match canon {
        Canon::UnitBall => {
            let lo = ball::distance_lower(&zb, &wb);
            let up = ball::distance_upper(&zb, &wb);
            let om = ball::one_minus_sq(&zb).min(ball::one_minus_sq(&wb));
            let p = ball::pad(up, om);
            Ok((MetricBracket::new(lo - p, up + p, "ball-projection", "slice-disc"), None))
        }
        Canon::Ellipsoid(exps) => {
            let base = ConvexDomain::ellipsoid(exps)?.with_tolerances(dom.tolerances().clone());
            let (zv, zr) = block_v(exps, &zb);
            let (wv, wr) = block_v(exps, &wb);
            let mut extra = None;
            if !zv.is_empty() && zv != wv {
                let lo = ball::distance_lower(&zv, &wv);
                let om = ball::one_minus_sq(&zv).min(ball::one_minus_sq(&wv));
                let p = ball::pad(lo, om);
                let mut e = MetricBracket::new(lo - p, f64::INFINITY, "ball-factor", "none");
                if zr == 0.0 && wr == 0.0 {
                    e.upper = ball::distance_upper(&zv, &wv) + p;
                    e.method_tags[1] = "ball-slice-embedding".into();
                }
                extra = Some(e);
            }
            if let Some(e) = &extra {
                if e.upper.is_finite() {
                    return Ok((e.clone(), None));
                }
            }
            // Distances are invariant under automorphisms; recentring keeps the work away from the boundary.
            let (zc, wc) = recenter(exps, &zb, &wb);
            let floor = extra.as_ref().map(|e| e.lower).unwrap_or(0.0);
            let (mut b, _) = generic_distance(&base, &zc, &wc, floor, opts);
            b.upper += 1e-12 * (1.0 + b.upper);
            b.lower = (b.lower - 1e-12 * (1.0 + b.lower)).max(0.0);
            if let Some(e) = &extra {
                b = b.refine(e);
            }
            Ok((b, None))
        }
        Canon::Other(d) => {
            let (b, path) = generic_distance(d, &zb, &wb, 0.0, opts);
            Ok((b, Some(path.iter().map(|p| map.apply(p)).collect())))
        }
    }
}

/// Lower bounds inherited from the parts of an intersection, which contain the domain.
fn part_bounds<F: Fn(&ConvexDomain) -> Result<MetricBracket>>(dom: &ConvexDomain, f: F) -> f64 {
    match dom.kind() {
        DomainKind::Intersection { parts } => parts.iter().filter_map(|p| f(p).ok()).map(|b| b.lower).fold(0.0, f64::max),
        _ => 0.0,
    }
}

fn quick(dom: &ConvexDomain) -> MetricOptions {
    MetricOptions::from_tolerances(dom.tolerances(), Effort::Quick)
}

fn generic_distance(dom: &ConvexDomain, z: &CVec, w: &CVec, floor: f64, opts: &MetricOptions) -> (MetricBracket, Vec<CVec>) {
    let (mut lo, mut lt) = generic::distance_lower(dom, z, w, opts);
    let inherited = part_bounds(dom, |p| distance_with(p, z, w, &quick(p)));
    if inherited > lo {
        (lo, lt) = (inherited, "containing-part");
    }
    let lo = lo.max(floor);
    let (up, path) = generic::path_upper(dom, z, w, lo, opts);
    let p = 1e-12 * (1.0 + up.max(lo));
    (MetricBracket::new(lo * (1.0 - 1e-12), up + p, lt, "slice-disc-path"), path)
}

/// Interval for (x|y)_z = (K(x,z) + K(z,y) - K(x,y)) / 2.
pub fn gromov_product(dom: &ConvexDomain, x: &CVec, y: &CVec, z: &CVec) -> Result<GromovProduct> {
    let opts = MetricOptions::from_tolerances(dom.tolerances(), Effort::Full);
    gromov_product_with(dom, x, y, z, &opts)
}

pub fn gromov_product_with(dom: &ConvexDomain, x: &CVec, y: &CVec, z: &CVec, opts: &MetricOptions) -> Result<GromovProduct> {
    let xz = distance_with(dom, x, z, opts)?;
    let zy = distance_with(dom, z, y, opts)?;
    let xy = distance_with(dom, x, y, opts)?;
    let lower = 0.5 * (xz.lower + zy.lower - xy.upper);
    let upper = 0.5 * (xz.upper + zy.upper - xy.lower);
    Ok(GromovProduct {
        value: MetricBracket { lower, upper, method_tags: vec!["interval".into(), "interval".into()] },
        basepoint: z.clone(),
        endpoints: (x.clone(), y.clone()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn disc_and_ball_examples() {
        let disc = ConvexDomain::unit_ball(1);
        let b = infinitesimal_metric(&disc, &CVec::zeros(1), &cvec_re(&[1.0])).unwrap();
        assert!(b.encloses(1.0) && (b.upper - 1.0).abs() < 1e-12);
        let b2 = ConvexDomain::unit_ball(2);
        assert!(infinitesimal_metric(&b2, &CVec::zeros(2), &basis(2, 0)).unwrap().encloses(1.0));
        let m = infinitesimal_metric(&b2, &cvec_re(&[0.5, 0.0]), &basis(2, 0)).unwrap();
        assert!(m.encloses(4.0 / 3.0) && m.width() < 1e-10);
        let d = distance(&b2, &CVec::zeros(2), &cvec_re(&[0.5, 0.0])).unwrap();
        assert!(d.encloses(0.549_306_144_334_054_8));
        let z = cvec_re(&[0.3, 0.0]);
        let w = cvec_re(&[0.0, 0.3]);
        assert!(distance(&b2, &z, &w).unwrap().encloses(ball::oracle(&z, &w)));
        let s = distance(&b2, &z, &z).unwrap();
        assert_eq!((s.lower, s.upper), (0.0, 0.0));
    }

    #[test]
    fn gromov_collinear_example() {
        let b2 = ConvexDomain::unit_ball(2);
        let g = gromov_product(&b2, &cvec_re(&[0.9, 0.0]), &cvec_re(&[0.99, 0.0]), &CVec::zeros(2)).unwrap();
        assert!(g.value.encloses(0.9f64.atanh()));
        assert!(g.value.width() < 1e-10);
    }

    #[test]
    fn translated_ball_uses_exact_route() {
        let d = ConvexDomain::ball(cvec_re(&[1.0, -2.0]), 3.0).unwrap();
        let z = cvec_re(&[1.0, -2.0]);
        let w = cvec_re(&[2.5, -2.0]);
        assert!(distance(&d, &z, &w).unwrap().encloses(0.5f64.atanh()));
    }

    #[test]
    fn generic_brackets_enclose_ball_values() {
        // The ball written as an intersection with a huge ball goes through the generic route.
        let b2 = ConvexDomain::unit_ball(2);
        let big = ConvexDomain::ball(CVec::zeros(2), 50.0).unwrap();
        let d = ConvexDomain::intersection(vec![b2, big]).unwrap();
        let z = cvec(&[(0.2, 0.1), (-0.1, 0.0)]);
        let w = cvec(&[(-0.3, 0.2), (0.4, -0.1)]);
        let want = ball::oracle(&z, &w);
        let b = distance(&d, &z, &w).unwrap();
        assert!(b.encloses(want), "{b:?} vs {want}");
        assert!(b.width() < 2e-2, "{b:?}");
        let m = infinitesimal_metric(&d, &z, &w).unwrap();
        let exact = ball::metric_lower(&z, &w);
        assert!(m.encloses(exact), "{m:?} vs {exact}");
        assert!(m.width() < 1e-2 * exact, "{m:?} vs {exact}");
    }

    #[test]
    fn ellipsoid_slice_is_exact() {
        let e = ConvexDomain::ellipsoid(&[1, 2]).unwrap();
        let z = cvec_re(&[0.3, 0.0]);
        let w = cvec_re(&[-0.6, 0.0]);
        let b = distance(&e, &z, &w).unwrap();
        assert!(b.width() < 1e-10);
        assert!(b.encloses(ball::oracle(&cvec_re(&[0.3]), &cvec_re(&[-0.6]))));
    }

    #[test]
    fn ellipsoid_generic_bracket_is_consistent() {
        let e = ConvexDomain::ellipsoid(&[1, 2]).unwrap();
        let z = cvec_re(&[0.2, 0.5]);
        let w = cvec(&[(0.1, 0.3), (-0.4, 0.2)]);
        let b = distance(&e, &z, &w).unwrap();
        assert!(b.lower > 0.0 && b.lower <= b.upper && b.upper.is_finite());
        let r = distance(&e, &w, &z).unwrap();
        assert!(b.overlaps(&r));
    }
}

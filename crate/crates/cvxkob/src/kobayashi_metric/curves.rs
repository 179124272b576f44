use super::{ball, block_v, canonical, distance_with, generic, infinitesimal_metric_with, lift_recenter, Canon, Effort, MetricBracket, MetricOptions};
use crate::domain_geometry::ConvexDomain;
use crate::error::{Error, Result};
use crate::linalg::*;

/// A sampled curve with its (lambda, kappa) quality data.
#[derive(Debug, Clone, PartialEq)]
pub struct AlmostGeodesic {
    pub samples: Vec<(f64, CVec)>,
    pub lambda: f64,
    /// Additive defect of the two-sided distance condition.
    pub kappa: f64,
    /// ln of the worst ratio of the metric speed to lambda, clipped at zero.
    pub kappa_speed: f64,
    pub certified: bool,
}

impl AlmostGeodesic {
    /// Smallest kappa meeting both the distance and the speed condition.
    pub fn def_kappa(&self) -> f64 {
        self.kappa.max(self.kappa_speed)
    }

    pub fn start(&self) -> &CVec {
        &self.samples[0].1
    }

    pub fn end(&self) -> &CVec {
        &self.samples[self.samples.len() - 1].1
    }

    pub fn points(&self) -> Vec<CVec> {
        self.samples.iter().map(|s| s.1.clone()).collect()
    }

    /// Linear interpolation in the parameter, clamped to the sampled range.
    pub fn at(&self, t: f64) -> CVec {
        let s = &self.samples;
        if t <= s[0].0 {
            return s[0].1.clone();
        }
        let last = s.len() - 1;
        if t >= s[last].0 {
            return s[last].1.clone();
        }
        let k = s.partition_point(|p| p.0 <= t).saturating_sub(1).min(last - 1);
        let (t0, t1) = (s[k].0, s[k + 1].0);
        let a = (t - t0) / (t1 - t0);
        (&s[k].1).map(|x| x * (1.0 - a)) + (&s[k + 1].1).map(|x| x * a)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurveCertificate {
    pub kappa_distance: f64,
    pub kappa_speed: f64,
    /// Sample indices of the pair that determines kappa_distance.
    pub blocking_pair: (usize, usize),
    pub max_width: f64,
}

fn pair_options(dom: &ConvexDomain) -> MetricOptions {
    MetricOptions::from_tolerances(dom.tolerances(), Effort::Quick)
}

/// Smallest kappa for which the sampled curve satisfies both almost-geodesic conditions,
/// using lower bounds where a lower estimate is needed and upper bounds otherwise.
pub fn almost_geodesic_certificate(dom: &ConvexDomain, samples: &[(f64, CVec)], lambda: f64) -> Result<CurveCertificate> {
    if samples.len() < 2 {
        return Err(Error::invalid("curve", "needs at least two samples"));
    }
    if !(lambda >= 1.0) {
        return Err(Error::invalid("lambda", "must be >= 1"));
    }
    if samples.windows(2).any(|w| !(w[1].0 > w[0].0)) {
        return Err(Error::invalid("curve", "parameter must be strictly increasing"));
    }
    let opts = pair_options(dom);
    let n = samples.len();
    let mut kd = 0.0f64;
    let mut block = (0, 0);
    let mut max_width = 0.0f64;
    for i in 0..n {
        for j in i + 1..n {
            let ds = samples[j].0 - samples[i].0;
            let b = distance_with(dom, &samples[i].1, &samples[j].1, &opts)?;
            if !b.upper.is_finite() {
                return Err(Error::Inconclusive(format!("no finite upper bound for samples ({i}, {j})")));
            }
            max_width = max_width.max(b.width());
            let need = (ds / lambda - b.lower).max(b.upper - lambda * ds);
            if need > kd {
                kd = need;
                block = (i, j);
            }
        }
    }
    let mut ks = 0.0f64;
    for i in 1..n - 1 {
        let dt = samples[i + 1].0 - samples[i - 1].0;
        let v = (&samples[i + 1].1 - &samples[i - 1].1).map(|x| x / dt);
        if norm(&v) == 0.0 {
            continue;
        }
        let k = infinitesimal_metric_with(dom, &samples[i].1, &v, &opts)?;
        ks = ks.max((k.upper / lambda).ln());
    }
    Ok(CurveCertificate { kappa_distance: kd, kappa_speed: ks, blocking_pair: block, max_width })
}

fn certify(dom: &ConvexDomain, samples: Vec<(f64, CVec)>) -> Result<AlmostGeodesic> {
    let cert = almost_geodesic_certificate(dom, &samples, 1.0)?;
    Ok(AlmostGeodesic { samples, lambda: 1.0, kappa: cert.kappa_distance, kappa_speed: cert.kappa_speed, certified: true })
}

/// sigma(t) = x + r e^{-2t} n(x) on [0, t_max], 51 samples, certified with lambda = 1.
pub fn normal_line_curve(dom: &ConvexDomain, x: &CVec, r: f64, t_max: f64) -> Result<AlmostGeodesic> {
    normal_line_curve_sampled(dom, x, r, t_max, 51)
}

pub fn normal_line_curve_sampled(dom: &ConvexDomain, x: &CVec, r: f64, t_max: f64, n: usize) -> Result<AlmostGeodesic> {
    if !(t_max > 0.0) {
        return Err(Error::invalid("t_max", "must be positive"));
    }
    if !(r > 0.0) {
        return Err(Error::invalid("r", "must be positive"));
    }
    let normal = dom.inward_normal(x)?;
    let rolling = dom.rolling_radius(x)?;
    if r > rolling * (1.0 + 1e-9) {
        return Err(Error::invalid("r", format!("{r} exceeds the rolling radius {rolling:.6} at x")));
    }
    let samples: Vec<(f64, CVec)> = (0..n)
        .map(|k| {
            let t = t_max * k as f64 / (n - 1) as f64;
            (t, x + scale(&normal, r * (-2.0 * t).exp()))
        })
        .collect();
    certify(dom, samples)
}

/// Exact complex geodesic of the unit ball: the hyperbolic segment inside the slice disc.
fn ball_geodesic(zb: &CVec, wb: &CVec, n: usize) -> Vec<(f64, CVec)> {
    let h = wb - zb;
    let l = norm(&h);
    let u = scale(&h, 1.0 / l);
    let p = inner(zb, &u);
    let rho = (ball::one_minus_sq(zb) + p.norm_sqr()).sqrt();
    let x = p / rho;
    let y = (p + l) / rho;
    let one = c(1.0, 0.0);
    let yp = (y - x) / (one - x.conj() * y);
    let total = ball::distance_upper(zb, wb);
    let dir = yp / yp.norm();
    (0..n)
        .map(|k| {
            let s = total * k as f64 / (n - 1) as f64;
            let zeta = dir * s.tanh();
            let back = (zeta + x) / (one + x.conj() * zeta);
            let lam = rho * back - p;
            (s, zb + u.map(|q| q * lam))
        })
        .collect()
}

/// A curve from z to w parametrised by bracket arclength, certified as a (1, kappa)-almost-geodesic.
pub fn geodesic_between(dom: &ConvexDomain, z: &CVec, w: &CVec) -> Result<AlmostGeodesic> {
    super::check_point(dom, z, "first point")?;
    super::check_point(dom, w, "second point")?;
    if z == w {
        return Err(Error::invalid("endpoints", "must be distinct"));
    }
    let (canon, map) = canonical(dom);
    let zb = map.apply_inverse(z);
    let wb = map.apply_inverse(w);
    let n = 65;
    let samples: Vec<(f64, CVec)> = match canon {
        Canon::UnitBall => {
            let mut s: Vec<(f64, CVec)> = ball_geodesic(&zb, &wb, n).into_iter().map(|(t, p)| (t, map.apply(&p))).collect();
            s[0].1 = z.clone();
            s[n - 1].1 = w.clone();
            s
        }
        Canon::Ellipsoid(exps) => {
            let base = ConvexDomain::ellipsoid(exps)?.with_tolerances(dom.tolerances().clone());
            let (a, _) = block_v(exps, &zb);
            let (zc, wc) = (lift_recenter(exps, &a, &zb), lift_recenter(exps, &a, &wb));
            let nodes = polyline(&base, &zc, &wc)?;
            let nodes: Vec<CVec> = nodes.iter().map(|p| map.apply(&lift_recenter(exps, &a, p))).collect();
            arclength_samples(dom, nodes, z, w, n)
        }
        Canon::Other(d) => {
            let nodes = polyline(d, &zb, &wb)?;
            let nodes: Vec<CVec> = nodes.iter().map(|p| map.apply(p)).collect();
            arclength_samples(dom, nodes, z, w, n)
        }
    };
    certify(dom, samples)
}

fn polyline(dom: &ConvexDomain, z: &CVec, w: &CVec) -> Result<Vec<CVec>> {
    let opts = MetricOptions::from_tolerances(dom.tolerances(), Effort::Full);
    let (lo, _) = generic::distance_lower(dom, z, w, &opts);
    let (up, path) = generic::path_upper(dom, z, w, lo, &opts);
    if !up.is_finite() {
        return Err(Error::NonConvergence("path refinement found no finite upper bound".into()));
    }
    Ok(path)
}

fn arclength_samples(dom: &ConvexDomain, nodes: Vec<CVec>, z: &CVec, w: &CVec, n: usize) -> Vec<(f64, CVec)> {
    let opts = MetricOptions::from_tolerances(dom.tolerances(), Effort::Quick);
    let per = (n - 1).div_ceil(nodes.len() - 1).max(1);
    let mut out: Vec<(f64, CVec)> = vec![(0.0, z.clone())];
    let mut t = 0.0;
    for seg in nodes.windows(2) {
        for k in 1..=per {
            let a = k as f64 / per as f64;
            let p = (&seg[0]).map(|x| x * (1.0 - a)) + (&seg[1]).map(|x| x * a);
            let prev = out[out.len() - 1].1.clone();
            let len = generic::segment_upper(dom, &prev, &p, &opts).max(1e-15);
            t += len;
            out.push((t, p));
        }
    }
    let last = out.len() - 1;
    out[last].1 = w.clone();
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct Witness {
    pub t: f64,
    pub point: CVec,
    /// Euclidean distance of the witness to the boundary.
    pub boundary_distance: f64,
}

/// The point of the curve farthest from the boundary, for a curve joining caps at faces of x and y.
pub fn visibility_witness(dom: &ConvexDomain, x: &CVec, y: &CVec, cap_radius: f64, curve: &AlmostGeodesic) -> Result<Witness> {
    if dom.same_complex_face(x, y, dom.tolerances().face_tol)? {
        return Err(Error::Precondition("x and y lie on the same complex face".into()));
    }
    let (a, b) = (curve.start(), curve.end());
    let forward = dist(a, x) <= cap_radius && dist(b, y) <= cap_radius;
    let backward = dist(a, y) <= cap_radius && dist(b, x) <= cap_radius;
    if !(forward || backward) {
        return Err(Error::Precondition("curve endpoints are not in the caps".into()));
    }
    let mut best: Option<Witness> = None;
    for (t, p) in &curve.samples {
        let d = dom.boundary_distance(p)?;
        if best.as_ref().map(|w| d > w.boundary_distance).unwrap_or(true) {
            best = Some(Witness { t: *t, point: p.clone(), boundary_distance: d });
        }
    }
    let w = best.expect("nonempty curve");
    if !(w.boundary_distance > 0.0) {
        return Err(Error::Inconsistent("curve has no interior witness".into()));
    }
    Ok(w)
}

/// Bracket on sup_{a in A} min_{b in B} K(a, b).
pub fn directed_hausdorff(dom: &ConvexDomain, a: &[CVec], b: &[CVec]) -> Result<MetricBracket> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::invalid("point set", "must be nonempty"));
    }
    let opts = pair_options(dom);
    let (mut lo, mut up) = (0.0f64, 0.0f64);
    for p in a {
        let (mut l, mut u) = (f64::INFINITY, f64::INFINITY);
        for q in b {
            let br = distance_with(dom, p, q, &opts)?;
            l = l.min(br.lower);
            u = u.min(br.upper);
        }
        lo = lo.max(l);
        up = up.max(u);
    }
    Ok(MetricBracket::new(lo, up, "pairwise-lower", "pairwise-upper"))
}

/// Bracket on the symmetric Kobayashi-Hausdorff distance of two finite sets.
pub fn orbit_hausdorff_distance(dom: &ConvexDomain, a: &[CVec], b: &[CVec]) -> Result<MetricBracket> {
    let ab = directed_hausdorff(dom, a, b)?;
    let ba = directed_hausdorff(dom, b, a)?;
    Ok(MetricBracket::new(ab.lower.max(ba.lower), ab.upper.max(ba.upper), "pairwise-lower", "pairwise-upper"))
}

use super::classify::{anchor, gap, radial_boundary, run_to_boundary};
use super::{classify, form_j, Automorphism, AutKind, ClassificationResult, MapType};
use crate::domain_geometry::ConvexDomain;
use crate::error::{Error, Result};
use crate::kobayashi_metric::{almost_geodesic_certificate, distance_with, geodesic_between, normal_line_curve_sampled};
use crate::kobayashi_metric::{AlmostGeodesic, Effort, MetricBracket, MetricOptions};
use crate::linalg::*;

const PROBE_SEED: u64 = 0x6e73_7072_6f62;
const STABILITY_SEED: u64 = 0x7374_6162;

fn quick(dom: &ConvexDomain) -> MetricOptions {
    MetricOptions::from_tolerances(dom.tolerances(), Effort::Quick)
}

fn require_hyperbolic(dom: &ConvexDomain, h: &Automorphism) -> Result<ClassificationResult> {
    let r = classify(dom, h, dom.interior_point())?;
    if r.tag != MapType::Hyperbolic {
        return Err(Error::Precondition(format!("expected a hyperbolic map, got {}", r.tag)));
    }
    Ok(r)
}

fn anchors(r: &ClassificationResult) -> (CVec, CVec) {
    (r.x_plus().expect("hyperbolic").clone(), r.x_minus().expect("hyperbolic").clone())
}

/// Seeded probes: 70% interior sample, the rest just inside the boundary.
fn probe_set(dom: &ConvexDomain, n: usize) -> Vec<CVec> {
    let n_in = n * 7 / 10;
    let o = dom.interior_point();
    let mut pts = dom.interior_sample(n_in, PROBE_SEED);
    pts.extend(dom.boundary_sample(n - n_in, PROBE_SEED ^ 1).into_iter().map(|b| o + (b - o).map(|x| x * (1.0 - 1e-3))));
    pts
}

/// flags[N - 1] says whether h^N maps the probes outside ball(xm, cap_v) into ball(xp, cap_u)
/// and h^{-N} maps the probes outside ball(xp, cap_u) into ball(xm, cap_v).
fn north_south_flags(h: &Automorphism, xp: &CVec, xm: &CVec, cap_u: f64, cap_v: f64, probes: &[CVec], max_n: usize) -> Vec<bool> {
    let hi = h.inverse();
    let mut fwd: Vec<CVec> = probes.iter().filter(|p| dist(p, xm) >= cap_v).cloned().collect();
    let mut bwd: Vec<CVec> = probes.iter().filter(|p| dist(p, xp) >= cap_u).cloned().collect();
    let mut flags = Vec::with_capacity(max_n);
    for _ in 0..max_n {
        fwd.iter_mut().for_each(|p| *p = h.apply(p));
        bwd.iter_mut().for_each(|p| *p = hi.apply(p));
        let ok = fwd.iter().all(|p| dist(p, xp) < cap_u) && bwd.iter().all(|p| dist(p, xm) < cap_v);
        flags.push(ok);
    }
    flags
}

/// Smallest N with h^N(D \ V) inside U and h^{-N}(D \ U) inside V on the probe set, where U and V
/// are Euclidean balls of radius cap_u and cap_v about the attracting and repelling points.
pub fn north_south_check(dom: &ConvexDomain, h: &Automorphism, cap_u: f64, cap_v: f64) -> Result<usize> {
    if !(cap_u > 0.0 && cap_v > 0.0) {
        return Err(Error::invalid("caps", "must be positive"));
    }
    let r = require_hyperbolic(dom, h)?;
    let (xp, xm) = anchors(&r);
    let tol = dom.tolerances();
    let probes = probe_set(dom, tol.north_south_probes);
    let flags = north_south_flags(h, &xp, &xm, cap_u, cap_v, &probes, tol.word_cap);
    flags
        .iter()
        .position(|&f| f)
        .map(|i| i + 1)
        .ok_or_else(|| Error::NonConvergence(format!("no N <= {} moves all probes into the caps", tol.word_cap)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Construction {
    /// phi^m psi^n.
    pub map: Automorphism,
    pub m: usize,
    pub n: usize,
    pub classification: ClassificationResult,
}

/// Boundary point the forward orbit accumulates at, or None for an elliptic map.
fn accumulation(dom: &ConvexDomain, f: &Automorphism, z: &CVec) -> Result<Option<CVec>> {
    let r = classify(dom, f, z)?;
    match r.tag {
        MapType::Elliptic => Ok(None),
        MapType::Parabolic => Ok(Some(r.x_plus().expect("parabolic").clone())),
        MapType::Hyperbolic => Err(Error::Precondition("input map is already hyperbolic".into())),
    }
}

/// Diagonal search for a hyperbolic phi^m psi^n built from two non-hyperbolic maps.
///
/// Two parabolic inputs must accumulate on distinct faces. When one input is elliptic it must
/// move the other's accumulation point off its face.
pub fn construct_hyperbolic(dom: &ConvexDomain, phi: &Automorphism, psi: &Automorphism, z: &CVec, w: &CVec) -> Result<Construction> {
    let tol = dom.tolerances().face_tol;
    let a = accumulation(dom, phi, z)?;
    let b = accumulation(dom, psi, w)?;
    match (&a, &b) {
        (Some(x), Some(y)) => {
            if dom.same_complex_face(x, y, tol)? {
                return Err(Error::Precondition("the orbits accumulate on the same complex face".into()));
            }
        }
        (Some(x), None) => {
            if dom.same_complex_face(x, &psi.apply(x), tol)? {
                return Err(Error::Precondition("the elliptic map preserves the face of the parabolic one".into()));
            }
        }
        (None, Some(y)) => {
            if dom.same_complex_face(y, &phi.apply(y), tol)? {
                return Err(Error::Precondition("the elliptic map preserves the face of the parabolic one".into()));
            }
        }
        (None, None) => return Err(Error::Precondition("neither orbit reaches the boundary".into())),
    }
    let cap = dom.tolerances().word_cap;
    let phis: Vec<Automorphism> = (0..cap).map(|m| phi.power(m as i64)).collect();
    let psis: Vec<Automorphism> = (0..cap).map(|n| psi.power(n as i64)).collect();
    for s in 2..=cap {
        for m in 1..s {
            let n = s - m;
            let g = phis[m].compose(&psis[n])?;
            if let Ok(r) = classify(dom, &g, z) {
                if r.tag == MapType::Hyperbolic {
                    return Ok(Construction { map: g, m, n, classification: r });
                }
            }
        }
    }
    Err(Error::NonConvergence(format!("no hyperbolic phi^m psi^n with m + n <= {cap}")))
}

#[derive(Debug, Clone, PartialEq)]
pub struct PingPongCertificate {
    pub m: usize,
    pub n: usize,
    /// Probes used in each inclusion check.
    pub probes: usize,
    /// h1^m h2^{-n}.
    pub product: Automorphism,
    pub classification: ClassificationResult,
    /// Attracting and repelling points of h1 and h2.
    pub h1_points: (CVec, CVec),
    pub h2_points: (CVec, CVec),
}

/// Exponents (m, n) for which h1^{+-m} and h2^{+-n} satisfy the ping-pong inclusions on probe sets
/// with caps of the given radius, and h1^m h2^{-n} is hyperbolic with its attracting point in the
/// attracting cap of h1 and its repelling point in the attracting cap of h2.
pub fn ping_pong_certificate(dom: &ConvexDomain, h1: &Automorphism, h2: &Automorphism, cap: f64) -> Result<PingPongCertificate> {
    if !(cap > 0.0) {
        return Err(Error::invalid("cap", "must be positive"));
    }
    let r1 = require_hyperbolic(dom, h1)?;
    let r2 = require_hyperbolic(dom, h2)?;
    let (p1, m1) = anchors(&r1);
    let (p2, m2) = anchors(&r2);
    let tol = dom.tolerances();
    for x in [&p1, &m1] {
        for y in [&p2, &m2] {
            if dom.same_complex_face(x, y, tol.face_tol)? {
                return Err(Error::Precondition("the hyperplane sets of the two maps intersect".into()));
            }
        }
    }
    let probes = probe_set(dom, tol.north_south_probes);
    let cap_n = tol.word_cap;
    let f1 = north_south_flags(h1, &p1, &m1, cap, cap, &probes, cap_n);
    let f2 = north_south_flags(h2, &p2, &m2, cap, cap, &probes, cap_n);
    let z0 = dom.interior_point();
    for s in 2..=cap_n {
        for m in 1..s {
            let n = s - m;
            if !(f1[m - 1] && f2[n - 1]) {
                continue;
            }
            let g = h1.power(m as i64).compose(&h2.power(-(n as i64)))?;
            let Ok(r) = classify(dom, &g, z0) else { continue };
            if r.tag != MapType::Hyperbolic {
                continue;
            }
            let (gp, gm) = anchors(&r);
            if dist(&gp, &p1) < cap && dist(&gm, &p2) < cap {
                return Ok(PingPongCertificate {
                    m,
                    n,
                    probes: probes.len(),
                    product: g,
                    classification: r,
                    h1_points: (p1, m1),
                    h2_points: (p2, m2),
                });
            }
        }
    }
    Err(Error::NonConvergence(format!("no certificate with m + n <= {cap_n}")))
}

#[derive(Debug, Clone, PartialEq)]
pub struct QiFit {
    pub alpha: f64,
    pub beta: f64,
    /// Number of (m, n) pairs the sandwich was verified on.
    pub pairs: usize,
    pub max_width: f64,
}

/// Smallest alpha + beta, alpha >= 1, with k / alpha - beta <= lower and upper <= alpha k + beta.
pub(crate) fn fit_sandwich(data: &[(f64, f64, f64)]) -> (f64, f64) {
    let beta = |a: f64| -> f64 {
        data.iter().map(|&(k, lo, up)| (up - a * k).max(k / a - lo)).fold(0.0, f64::max)
    };
    let mut hi = 2.0f64;
    for &(k, lo, up) in data {
        if k > 0.0 {
            hi = hi.max(2.0 * up / k).max(2.0 * k / lo.max(1e-12));
        }
    }
    let hi = hi.min(1e6);
    let (a, _) = golden_min(|a| a + beta(a), 1.0, hi, 1e-12);
    let a = if 1.0 + beta(1.0) <= a + beta(a) { 1.0 } else { a };
    (a, beta(a))
}

/// Fits K(h^m z0, h^n z0) between |m - n| / alpha - beta and alpha |m - n| + beta over
/// 0 <= m, n <= n_max. Each pair is evaluated at the recentred exponents (m - c, n - c).
pub fn orbit_qi_constants(dom: &ConvexDomain, h: &Automorphism, z0: &CVec, n_max: usize) -> Result<QiFit> {
    let r = classify(dom, h, z0)?;
    if r.tag != MapType::Hyperbolic {
        return Err(Error::Precondition(format!("expected a hyperbolic map, got {}", r.tag)));
    }
    let opts = quick(dom);
    let half = (n_max / 2 + 1) as i64;
    let mut orbit = std::collections::BTreeMap::new();
    for k in -half..=half {
        orbit.insert(k, h.power(k).apply(z0));
    }
    let mut cache: std::collections::HashMap<(i64, i64), MetricBracket> = Default::default();
    let mut data = Vec::new();
    let mut max_width = 0.0f64;
    for m in 0..=n_max as i64 {
        for n in 0..=n_max as i64 {
            let c = (m + n).div_euclid(2);
            let key = (m - c, n - c);
            let b = match cache.get(&key) {
                Some(b) => b.clone(),
                None => {
                    let b = if key.0 == key.1 {
                        MetricBracket::exact(0.0, "identical")
                    } else {
                        distance_with(dom, &orbit[&key.0], &orbit[&key.1], &opts)?
                    };
                    cache.insert(key, b.clone());
                    b
                }
            };
            if !b.upper.is_finite() || b.width() > 0.5 * (1.0 + b.upper) {
                return Err(Error::Inconclusive(format!("bracket for ({m}, {n}) is too wide: [{}, {}]", b.lower, b.upper)));
            }
            max_width = max_width.max(b.width());
            data.push(((m - n).abs() as f64, b.lower, b.upper));
        }
    }
    let (alpha, beta) = fit_sandwich(&data);
    Ok(QiFit { alpha, beta, pairs: data.len(), max_width })
}

/// Distance data from a point to the piecewise-linear interpolant of a curve.
pub(crate) struct CurveIndex<'a> {
    curve: &'a AlmostGeodesic,
    /// Upper bounds on the distance between consecutive samples.
    seg: Vec<f64>,
}

pub(crate) struct Nearest {
    pub s: f64,
    pub upper: f64,
    pub lower: f64,
}

impl<'a> CurveIndex<'a> {
    pub(crate) fn new(dom: &ConvexDomain, curve: &'a AlmostGeodesic, opts: &MetricOptions) -> Result<Self> {
        let seg = curve
            .samples
            .windows(2)
            .map(|w| distance_with(dom, &w[0].1, &w[1].1, opts).map(|b| b.upper))
            .collect::<Result<Vec<_>>>()?;
        Ok(CurveIndex { curve, seg })
    }

    /// Smallest minimiser of K(p, sigma(s)) over the interpolant, with a bracket on the minimum.
    /// The lower bound uses convexity of Kobayashi balls: points between samples i and i + 1 are
    /// within seg[i] of both.
    pub(crate) fn nearest(&self, dom: &ConvexDomain, p: &CVec, opts: &MetricOptions) -> Result<Nearest> {
        let s = &self.curve.samples;
        let br = s.iter().map(|(_, q)| distance_with(dom, p, q, opts)).collect::<Result<Vec<_>>>()?;
        let mut lower = f64::INFINITY;
        for i in 0..s.len() - 1 {
            lower = lower.min(br[i].lower.max(br[i + 1].lower) - self.seg[i]);
        }
        let best = br.iter().map(|b| b.upper).fold(f64::INFINITY, f64::min);
        let i = br.iter().position(|b| b.upper <= best + 1e-12 * (1.0 + best)).expect("nonempty");
        let (a, b) = (s[i.saturating_sub(1)].0, s[(i + 1).min(s.len() - 1)].0);
        let f = |t: f64| distance_with(dom, p, &self.curve.at(t), opts).map(|b| b.upper).unwrap_or(f64::INFINITY);
        let (mut t, mut up) = (s[i].0, best);
        if b > a {
            // Two half-intervals keep the leftmost minimiser when the minimum is flat.
            for (lo, hi) in [(a, s[i].0), (s[i].0, b)] {
                if hi > lo {
                    let (x, fx) = golden_min(&f, lo, hi, 1e-12);
                    if fx < up - 1e-13 * (1.0 + up) || (fx <= up + 1e-13 * (1.0 + up) && x < t) {
                        t = x;
                        up = up.min(fx);
                    }
                }
            }
        }
        Ok(Nearest { s: t, upper: up, lower: lower.clamp(0.0, up) })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AxisShadow {
    /// Backward normal line, connecting geodesic and forward normal line, parametrised by
    /// accumulated distance bounds with the middle of the geodesic at 0.
    pub curve: AlmostGeodesic,
    /// sup over the sampled orbit of the distance to the curve.
    pub hausdorff: MetricBracket,
    pub x_plus: CVec,
    pub x_minus: CVec,
    /// Sampled orbit h^k z0 with its exponents.
    pub orbit: Vec<(i64, CVec)>,
    pub classification: ClassificationResult,
}

/// Normal-line length and samples per normal line used by `axis_shadow`.
const AXIS_T_MAX: f64 = 16.0;
const AXIS_SAMPLES: usize = 129;

/// Orbit points stay this far from the boundary, relative to the diameter.
const ORBIT_GAP: f64 = 1e-12;

/// An almost-geodesic through the attracting and repelling points of h, and the distance from
/// the orbit of the interior point to it.
pub fn axis_shadow(dom: &ConvexDomain, h: &Automorphism, r: f64) -> Result<AxisShadow> {
    let cls = require_hyperbolic(dom, h)?;
    if !(r > 0.0) || r > dom.uniform_inradius()? * (1.0 + 1e-12) {
        return Err(Error::invalid("r", "must lie in (0, uniform inradius]"));
    }
    let fwd = run_to_boundary(dom, h, dom.interior_point(), 1 << 16);
    let bwd = run_to_boundary(dom, &h.inverse(), dom.interior_point(), 1 << 16);
    let (xp, xm) = (anchor(dom, &fwd), anchor(dom, &bwd));
    let escaped = 1e-6 * dom.diameter();
    if fwd.gap > escaped || bwd.gap > escaped {
        return Err(Error::NonConvergence("orbit projections did not converge".into()));
    }
    let plus = normal_line_curve_sampled(dom, &xp, r, AXIS_T_MAX, AXIS_SAMPLES)?;
    let minus = normal_line_curve_sampled(dom, &xm, r, AXIS_T_MAX, AXIS_SAMPLES)?;
    let mid = geodesic_between(dom, minus.start(), plus.start())?;
    let mut pts: Vec<CVec> = minus.samples.iter().rev().map(|s| s.1.clone()).collect();
    let centre = pts.len() - 1 + (mid.samples.len() - 1) / 2;
    pts.extend(mid.samples.iter().skip(1).map(|s| s.1.clone()));
    pts.extend(plus.samples.iter().skip(1).map(|s| s.1.clone()));
    // Reparametrise by accumulated segment bounds so the curve has unit speed along its length.
    let opts = quick(dom);
    let mut arc = vec![0.0];
    for w in pts.windows(2) {
        let d = distance_with(dom, &w[0], &w[1], &opts)?.upper.max(1e-15);
        arc.push(arc[arc.len() - 1] + d);
    }
    let shift = arc[centre];
    let samples: Vec<(f64, CVec)> = arc.iter().map(|t| t - shift).zip(pts).collect();
    let cert = almost_geodesic_certificate(dom, &samples, 1.0)?;
    let curve = AlmostGeodesic { samples, lambda: 1.0, kappa: cert.kappa_distance, kappa_speed: cert.kappa_speed, certified: true };

    let orbit = sample_orbit(dom, h, dom.interior_point(), 64);
    let index = CurveIndex::new(dom, &curve, &opts)?;
    let (mut lo, mut up) = (0.0f64, 0.0f64);
    for (_, p) in &orbit {
        let n = index.nearest(dom, p, &opts)?;
        lo = lo.max(n.lower);
        up = up.max(n.upper);
    }
    Ok(AxisShadow {
        curve,
        hausdorff: MetricBracket::new(lo, up, "segment-lower", "refined-upper"),
        x_plus: xp,
        x_minus: xm,
        orbit,
        classification: cls,
    })
}

/// h^k z0 for |k| <= cap, stopping in each direction before the boundary gets closer than ORBIT_GAP.
pub(crate) fn sample_orbit(dom: &ConvexDomain, h: &Automorphism, z0: &CVec, cap: i64) -> Vec<(i64, CVec)> {
    let limit = ORBIT_GAP * dom.diameter();
    let mut out = vec![(0, z0.clone())];
    for (f, sign) in [(h.clone(), 1i64), (h.inverse(), -1)] {
        let mut z = z0.clone();
        for k in 1..=cap {
            z = f.apply(&z);
            if !dom.is_inside(&z) || gap(dom, &z) < limit {
                break;
            }
            out.push((sign * k, z.clone()));
        }
    }
    out.sort_by_key(|p| p.0);
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShadowData {
    /// (m, t, tau(m, t)).
    pub tau: Vec<(i64, f64, f64)>,
    /// Hausdorff distance between the orbit and the part of the curve it shadows.
    pub r: f64,
    /// Largest K(sigma(tau(m,t)), h^m sigma(t)) over the samples.
    pub part1_max: f64,
    /// Allowance for refinement and bracket error in the comparison with 2R.
    pub grid_error: f64,
    pub a: f64,
    pub b: f64,
    pub pairs: usize,
}

impl ShadowData {
    pub fn tau_at(&self, m: i64, t: f64) -> Option<f64> {
        self.tau.iter().find(|x| x.0 == m && x.1 == t).map(|x| x.2)
    }

    pub fn part1_holds(&self) -> bool {
        self.part1_max <= 2.0 * self.r + self.grid_error
    }
}

/// Shadowing function tau(m, t) of h along sigma for |m| <= m_max and t in t_grid, the radius R,
/// and fitted constants (A, B) with (m - n) / A - B <= tau(m,t) - tau(n,t) <= A (m - n) + B.
pub fn shadow_parameters(dom: &ConvexDomain, h: &Automorphism, sigma: &AlmostGeodesic, m_max: i64, t_grid: &[f64]) -> Result<ShadowData> {
    if t_grid.is_empty() || m_max < 0 {
        return Err(Error::invalid("grid", "needs at least one t and m_max >= 0"));
    }
    let opts = quick(dom);
    let index = CurveIndex::new(dom, sigma, &opts)?;
    let (s0, s1) = (sigma.samples[0].0, sigma.samples[sigma.samples.len() - 1].0);
    let orbit = sample_orbit(dom, h, dom.interior_point(), 64);

    // R over the orbit and the stretch of sigma between the orbit's extreme projections.
    let mut r = 0.0f64;
    let mut err = 1e-6f64;
    let mut proj = Vec::new();
    for (_, p) in &orbit {
        let n = index.nearest(dom, p, &opts)?;
        r = r.max(n.upper);
        proj.push(n.s);
    }
    let (lo_s, hi_s) = proj.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |a, &s| (a.0.min(s), a.1.max(s)));
    for (_, q) in sigma.samples.iter().filter(|x| x.0 >= lo_s && x.0 <= hi_s) {
        let mut best = f64::INFINITY;
        for (_, p) in &orbit {
            let b = distance_with(dom, q, p, &opts)?;
            best = best.min(b.upper);
            err = err.max(b.width());
        }
        r = r.max(best);
    }

    let powers: Vec<(i64, Automorphism)> = (-m_max..=m_max).map(|m| (m, h.power(m))).collect();
    let mut tau = Vec::new();
    let mut part1 = 0.0f64;
    for &t in t_grid {
        let st = sigma.at(t);
        for (m, hm) in &powers {
            if *m == 0 {
                tau.push((0, t, t));
                continue;
            }
            let p = hm.apply(&st);
            let n = index.nearest(dom, &p, &opts)?;
            if n.s <= s0 || n.s >= s1 {
                return Err(Error::Inconclusive(format!("tau({m}, {t}) falls at the end of the sampled curve")));
            }
            part1 = part1.max(n.upper);
            tau.push((*m, t, n.s));
        }
    }
    let mut data = Vec::new();
    for &t in t_grid {
        let row: Vec<&(i64, f64, f64)> = tau.iter().filter(|x| x.1 == t).collect();
        for a in &row {
            for b in &row {
                if a.0 > b.0 {
                    let d = a.2 - b.2;
                    data.push(((a.0 - b.0) as f64, d, d));
                }
            }
        }
    }
    let (a, b) = fit_sandwich(&data);
    Ok(ShadowData { tau, r, part1_max: part1, grid_error: err, a, b, pairs: data.len() })
}

#[derive(Debug, Clone, PartialEq)]
pub struct FaceCluster {
    pub representative: CVec,
    pub members: usize,
    /// No boundary point in complex tangent directions near the representative lies on its face.
    pub singleton: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LimitSet {
    pub points: Vec<CVec>,
    pub words: usize,
    pub faces: Vec<FaceCluster>,
}

impl LimitSet {
    pub fn face_count(&self) -> usize {
        self.faces.len()
    }

    pub fn all_singleton(&self) -> bool {
        self.faces.iter().all(|f| f.singleton)
    }
}

/// Whether the complex face at x contains boundary points a fixed distance away along complex
/// tangent directions.
fn singleton_face(dom: &ConvexDomain, x: &CVec) -> Result<bool> {
    let d = dom.dim();
    let n = dom.inward_normal(x)?;
    let tangents: Vec<CVec> = (0..d)
        .map(|j| orth_complement(&basis(d, j), std::slice::from_ref(&n)))
        .filter(|v| norm(v) > 1e-8)
        .map(|v| unit(&v))
        .collect();
    let mut dirs = Vec::new();
    for v in &tangents {
        for ph in [c(1.0, 0.0), I, c(-1.0, 0.0), -I] {
            dirs.push(v.map(|z| z * ph));
        }
    }
    let limit = dom.tolerances().boundary_rel * dom.diameter();
    for delta in [0.05, 0.1] {
        for u in &dirs {
            let y = x + scale(u, delta * dom.diameter());
            let r = dom.rho(&y);
            let g = norm(&dom.grad(&y));
            if r <= 0.0 || (g > 0.0 && r / g <= limit) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Groups boundary points by complex face, first come first served.
pub fn face_clusters(dom: &ConvexDomain, points: &[CVec], tol: f64) -> Result<Vec<FaceCluster>> {
    let mut reps: Vec<(crate::domain_geometry::ComplexHyperplane, usize)> = Vec::new();
    for p in points {
        let hp = dom.complex_tangent_hyperplane(p)?;
        match reps.iter_mut().find(|(h, _)| h.coincides(&hp, tol)) {
            Some(r) => r.1 += 1,
            None => reps.push((hp, 1)),
        }
    }
    reps.into_iter()
        .map(|(h, members)| {
            let singleton = singleton_face(dom, &h.anchor)?;
            Ok(FaceCluster { representative: h.anchor, members, singleton })
        })
        .collect()
}

/// Boundary projections of w(z0) for reduced words w of length 1..=depth in the generators and
/// their inverses, kept when w(z0) lies within the Hausdorff threshold of the boundary.
pub fn limit_set_sample(dom: &ConvexDomain, generators: &[Automorphism], depth: usize, z0: &CVec) -> Result<LimitSet> {
    if generators.is_empty() {
        return Err(Error::invalid("generators", "must be nonempty"));
    }
    if generators.iter().any(|g| g.domain() != dom) {
        return Err(Error::Precondition("a generator acts on a different domain".into()));
    }
    crate::kobayashi_metric::check_point(dom, z0, "base point")?;
    let mut letters = Vec::new();
    for g in generators {
        letters.push(g.clone());
        letters.push(g.inverse());
    }
    let threshold = dom.tolerances().hausdorff_threshold * dom.diameter();
    let mut points = Vec::new();
    let mut words = 0usize;
    // Stack of (point, last letter applied, length).
    let mut stack: Vec<(CVec, Option<usize>, usize)> = vec![(z0.clone(), None, 0)];
    while let Some((p, last, len)) = stack.pop() {
        if len > 0 {
            words += 1;
            if gap(dom, &p) < threshold {
                let q = match dom.boundary_projection(&p) {
                    Ok(pr) => pr.boundary.point,
                    Err(_) => radial_boundary(dom, &p),
                };
                points.push(q);
            }
        }
        if len == depth {
            continue;
        }
        for (i, g) in letters.iter().enumerate() {
            if last.is_some_and(|l| l ^ 1 == i) {
                continue;
            }
            let q = g.apply(&p);
            if is_finite(&q) && dom.is_inside(&q) {
                stack.push((q, Some(i), len + 1));
            }
        }
    }
    let faces = face_clusters(dom, &points, dom.tolerances().face_tol)?;
    Ok(LimitSet { points, words, faces })
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityReport {
    pub samples: usize,
    pub all_hyperbolic: bool,
    /// Perturbation index and what it classified as (None when inconclusive).
    pub failing: Vec<(usize, Option<MapType>)>,
}

/// Random unit-Frobenius element of su(d,1).
pub(crate) fn random_su(d: usize, g: &mut impl rand::Rng) -> CMat {
    let n = d + 1;
    let y = CMat::from_fn(n, n, |_, _| c(gaussian(g), gaussian(g)));
    let j = form_j(n);
    let mut x = (&y - &j * y.adjoint() * &j).map(|z| z * 0.5);
    let tr = x.trace() / n as f64;
    for i in 0..n {
        x[(i, i)] -= tr;
    }
    let f = frob(&x);
    x.map(|z| z / f)
}

/// Classifies h exp(eps X) for seeded unit X in su(d,1).
pub fn stability_probe(dom: &ConvexDomain, h: &Automorphism, eps: f64) -> Result<StabilityReport> {
    if !(eps >= 0.0) {
        return Err(Error::invalid("eps", "must be nonnegative"));
    }
    let AutKind::BallMobius { matrix } = h.kind() else {
        return Err(Error::Precondition("perturbations need a matrix automorphism".into()));
    };
    require_hyperbolic(dom, h)?;
    let n = dom.tolerances().stability_samples;
    let mut g = rng(STABILITY_SEED);
    let mut failing = Vec::new();
    for i in 0..n {
        let x = random_su(dom.dim(), &mut g);
        let p = matrix * x.map(|z| z * eps).exp();
        let hp = Automorphism::ball_mobius(dom, p).map_err(|e| Error::Precondition(format!("perturbation {i} left the group: {e}")))?;
        match classify(dom, &hp, dom.interior_point()) {
            Ok(r) if r.tag == MapType::Hyperbolic => {}
            Ok(r) => failing.push((i, Some(r.tag))),
            Err(Error::Inconclusive(_)) => failing.push((i, None)),
            Err(e) => return Err(e),
        }
    }
    Ok(StabilityReport { samples: n, all_hyperbolic: failing.is_empty(), failing })
}

#[cfg(test)]
mod tests {
    use super::super::*;
    use super::*;

    fn ball() -> ConvexDomain {
        ConvexDomain::unit_ball(2)
    }

    fn a(s: f64) -> Automorphism {
        Automorphism::ball_mobius(&ball(), dilation_matrix(2, s)).unwrap()
    }

    #[test]
    fn north_south_monotone_in_caps() {
        let b = ball();
        let big = north_south_check(&b, &a(1.0), 0.5, 0.5).unwrap();
        let small = north_south_check(&b, &a(1.0), 0.1, 0.1).unwrap();
        assert!(big <= 5, "{big}");
        assert!(small > big);
        let rot = Automorphism::ball_mobius(&b, rotation_matrix(&CMat::from_diagonal_element(2, 2, I))).unwrap();
        assert!(north_south_check(&b, &rot, 0.5, 0.5).is_err());
    }

    #[test]
    fn qi_fit_for_dilations() {
        let b = ball();
        let z0 = CVec::zeros(2);
        let f = orbit_qi_constants(&b, &a(1.0), &z0, 20).unwrap();
        assert!(f.alpha <= 1.000_001 && f.beta <= 1e-6, "{f:?}");
        let f = orbit_qi_constants(&b, &a(2.0), &z0, 10).unwrap();
        assert!(f.alpha >= 2.0 - 1e-6, "{f:?}");
    }

    #[test]
    fn parabolic_pair_gives_hyperbolic() {
        let b = ball();
        let p = Automorphism::ball_mobius(&b, heisenberg_matrix(2, 1.0)).unwrap();
        let flip = Automorphism::ball_mobius(&b, rotation_matrix(&CMat::from_diagonal(&cvec_re(&[-1.0, 1.0])))).unwrap();
        let q = p.conjugate_by(&flip).unwrap();
        let z0 = CVec::zeros(2);
        let c = construct_hyperbolic(&b, &p, &q, &z0, &z0).unwrap();
        assert_eq!(c.classification.tag, MapType::Hyperbolic);
        assert!(matches!(construct_hyperbolic(&b, &p, &p, &z0, &z0), Err(Error::Precondition(_))));
    }

    #[test]
    fn ping_pong_orthogonal_axes() {
        let b = ball();
        let h1 = a(1.0);
        let swap = CMat::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]);
        let h2 = h1.conjugate_by(&Automorphism::ball_mobius(&b, rotation_matrix(&swap)).unwrap()).unwrap();
        let cert = ping_pong_certificate(&b, &h1, &h2, 0.5).unwrap();
        assert!(cert.m <= 10 && cert.n <= 10);
        assert!(matches!(ping_pong_certificate(&b, &h1, &h1, 0.5), Err(Error::Precondition(_))));
    }

    #[test]
    fn random_su_is_in_the_algebra() {
        let mut g = rng(3);
        let x = random_su(2, &mut g);
        let j = form_j(3);
        assert!(frob(&(x.adjoint() * &j + &j * &x)) < 1e-14);
        assert!(x.trace().norm() < 1e-14);
        let e = x.exp();
        assert!(form_defect(&e) < 1e-12);
    }
}

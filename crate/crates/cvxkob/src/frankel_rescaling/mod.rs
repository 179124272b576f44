//! Affine rescaling of a convex domain at base points escaping to the boundary.
//!
//! Each base point p gets a boundary frame (nearest boundary points in successively smaller
//! orthogonal slices through p) and the affine map A = Lambda U T that sends p to 0 and the frame
//! points to the unit vectors. Rescaled domains along a curve are compared on the balls of the
//! radius ladder; their limit is kept as the last rescaled domain together with a point cloud.

mod pullback;

pub use pullback::{pullback_family, pullback_family_with, pullback_one_parameter, PullbackFamily, PullbackOptions, PullbackReport};

use crate::config::Tolerances;
use crate::domain_geometry::{local_hausdorff_distance, AffineMap, ConvexDomain, Membership};
use crate::error::{check_dim, Error, Result};
use crate::kobayashi_metric::AlmostGeodesic;
use crate::linalg::*;

#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryFrame {
    pub base: CVec,
    pub points: Vec<CVec>,
    /// |p - x_i|.
    pub radii: Vec<f64>,
}

impl BoundaryFrame {
    /// Unit vectors (x_i - p) / r_i.
    pub fn directions(&self) -> Vec<CVec> {
        self.points.iter().map(|x| unit(&(x - &self.base))).collect()
    }

    /// Largest |<u_i, u_j>| over distinct frame directions.
    pub fn orthogonality_defect(&self) -> f64 {
        let u = self.directions();
        let mut worst = 0.0f64;
        for i in 0..u.len() {
            for j in 0..i {
                worst = worst.max(inner(&u[i], &u[j]).norm());
            }
        }
        worst
    }
}

/// x_1 is `preferred_first` or the nearest boundary point; x_{k+1} is the nearest boundary point in
/// the complex affine slice through p orthogonal to the first k directions.
pub fn select_boundary_frame(dom: &ConvexDomain, p: &CVec, preferred_first: Option<&CVec>) -> Result<BoundaryFrame> {
    crate::kobayashi_metric::check_point(dom, p, "base point")?;
    let d = dom.dim();
    let first = match preferred_first {
        Some(x) => {
            check_dim(d, x.len())?;
            if dom.contains(x)? != Membership::Boundary {
                return Err(Error::invalid("preferred_first", "must lie on the boundary"));
            }
            x.clone()
        }
        None => dom.boundary_projection(p)?.boundary.point,
    };
    let r1 = dist(&first, p);
    let mut dirs = vec![unit(&(&first - p))];
    let mut points = vec![first];
    let mut radii = vec![r1];
    for k in 1..d {
        let w = complete_unitary(&dirs, d);
        if w.ncols() < d {
            return Err(Error::Degenerate("slice dimension exhausted early".into()));
        }
        let span: Vec<CVec> = (k..d).map(|j| w.column(j).into_owned()).collect();
        let x = dom.boundary_projection_in(p, &span)?.boundary.point;
        let v = &x - p;
        let r = norm(&v);
        if !(r > 0.0) {
            return Err(Error::Degenerate("slice point coincides with the base point".into()));
        }
        dirs.push(unit(&orth_complement(&v, &dirs)));
        points.push(x);
        radii.push(r);
    }
    Ok(BoundaryFrame { base: p.clone(), points, radii })
}

#[derive(Debug, Clone, PartialEq)]
pub struct AffineNormalizer {
    pub frame: BoundaryFrame,
    /// Rows are the conjugated frame directions, so U (x_i - p) = r_i e_i.
    pub unitary: CMat,
    /// Diagonal of Lambda, 1 / r_i.
    pub scales: Vec<f64>,
    /// A = Lambda U T.
    pub map: AffineMap,
}

impl AffineNormalizer {
    pub fn from_frame(frame: BoundaryFrame) -> Result<Self> {
        let d = frame.base.len();
        let mut dirs: Vec<CVec> = Vec::with_capacity(d);
        for u in frame.directions() {
            dirs.push(unit(&orth_complement(&u, &dirs)));
        }
        let unitary = CMat::from_columns(&dirs).adjoint();
        let scales: Vec<f64> = frame.radii.iter().map(|r| 1.0 / r).collect();
        let lam = CMat::from_diagonal(&CVec::from_iterator(d, scales.iter().map(|&s| c(s, 0.0))));
        let linear = lam * &unitary;
        let offset = -(&linear * &frame.base);
        let map = AffineMap::new(linear, offset)?;
        Ok(AffineNormalizer { frame, unitary, scales, map })
    }

    pub fn apply(&self, z: &CVec) -> CVec {
        self.map.apply(z)
    }

    /// Ratio of the largest to the smallest frame radius.
    pub fn condition(&self) -> f64 {
        let r = &self.frame.radii;
        r.iter().cloned().fold(0.0, f64::max) / r.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn normalized(&self, dom: &ConvexDomain) -> Result<ConvexDomain> {
        dom.mapped(self.map.clone())
    }
}

/// Frame, normalizer and a sampled check that the image lies in the normalized family.
pub fn build_normalizer(dom: &ConvexDomain, p: &CVec, preferred_first: Option<&CVec>) -> Result<AffineNormalizer> {
    let n = AffineNormalizer::from_frame(select_boundary_frame(dom, p, preferred_first)?)?;
    let rep = k_membership_check(&n.normalized(dom)?);
    if !rep.passed() {
        return Err(Error::Inconsistent(format!("normalized domain fails the membership check: {rep:?}")));
    }
    Ok(n)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MembershipReport {
    pub spokes_inside: bool,
    /// Smallest first-order boundary distance over the spoke samples (negative when one exits).
    pub spoke_margin: f64,
    pub exclusion_empty: bool,
    /// Smallest first-order outward distance over the exclusion-slice samples.
    pub exclusion_margin: f64,
}

impl MembershipReport {
    pub fn passed(&self) -> bool {
        self.spokes_inside && self.exclusion_empty
    }
}

/// Signed first-order distance to the boundary, positive inside.
pub(crate) fn slack(dom: &ConvexDomain, z: &CVec) -> f64 {
    let r = dom.rho(z);
    let g = norm(&dom.grad(z));
    if g > 0.0 { -r / g } else if r < 0.0 { f64::INFINITY } else { f64::NEG_INFINITY }
}

/// Points within this of the boundary count as not inside the exclusion slices; the second term
/// covers rounding in strongly stretched images, whose diameter grows like the stretch.
fn slice_tol(dom: &ConvexDomain) -> f64 {
    1e-9 + 32.0 * f64::EPSILON * dom.diameter()
}

/// Sampled test of the two conditions: the unit discs in the coordinate axes lie inside, and the
/// slices e_i + span(e_{i+1}, ..., e_d) miss the domain.
pub fn k_membership_check(dom: &ConvexDomain) -> MembershipReport {
    let d = dom.dim();
    let n = dom.tolerances().spoke_points.max(8);
    let n_rad = 8;
    let n_ang = n.div_ceil(n_rad);
    let mut spoke_margin = f64::INFINITY;
    let mut spokes_inside = true;
    for i in 0..d {
        for a in 0..n_rad {
            let rad = if a + 1 == n_rad { 63.0 / 64.0 } else { (a + 1) as f64 / n_rad as f64 };
            for b in 0..n_ang {
                let z = basis(d, i).map(|x| x * C64::from_polar(rad, std::f64::consts::TAU * b as f64 / n_ang as f64));
                spoke_margin = spoke_margin.min(slack(dom, &z));
                spokes_inside &= dom.is_inside(&z);
            }
        }
    }
    let mut exclusion_margin = f64::INFINITY;
    let mut g = rng(0x6b64);
    for i in 0..d {
        let free = d - i - 1;
        let mut pts = vec![basis(d, i)];
        if free > 0 {
            for rad in [0.25, 0.5, 1.0, 2.0, 4.0, 8.0] {
                for _ in 0..32 {
                    let w = random_unit(&mut g, free);
                    let mut z = basis(d, i);
                    for j in 0..free {
                        z[i + 1 + j] = w[j] * rad;
                    }
                    pts.push(z);
                }
            }
        }
        for z in pts {
            exclusion_margin = exclusion_margin.min(-slack(dom, &z));
        }
    }
    MembershipReport { spokes_inside, spoke_margin, exclusion_empty: exclusion_margin >= -slice_tol(dom), exclusion_margin }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RescaleOptions {
    pub ladder: Vec<f64>,
    pub threshold: f64,
    pub consecutive: usize,
    pub condition_abort: f64,
    pub preferred_first: Option<CVec>,
    pub limit_samples: usize,
}

impl RescaleOptions {
    pub fn from_tolerances(t: &Tolerances) -> Self {
        RescaleOptions {
            ladder: t.radius_ladder.clone(),
            threshold: t.hausdorff_threshold,
            consecutive: t.consecutive,
            condition_abort: t.condition_abort,
            preferred_first: None,
            limit_samples: 2000,
        }
    }
}

/// The t_n = n / 2, n = 0..=24 grid.
pub fn default_t_grid() -> Vec<f64> {
    (0..=24).map(|n| 0.5 * n as f64).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct RescaleStep {
    pub t: f64,
    pub normalizer: AffineNormalizer,
    /// Local Hausdorff distances to the previous rescaled domain, one per ladder radius.
    pub residuals: Vec<f64>,
    pub membership: MembershipReport,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RescalingLimit {
    pub ladder: Vec<f64>,
    pub steps: Vec<RescaleStep>,
    /// Index of the step that completes the first run of converged residuals.
    pub converged_at: Option<usize>,
    /// Why the grid was cut short, if it was.
    pub aborted: Option<String>,
    /// Last rescaled domain, used as the limit.
    pub limit: ConvexDomain,
    /// Seeded points of the limit inside the largest ladder ball.
    pub limit_samples: Vec<CVec>,
    /// Filled by a successful invariant-line search when the residuals converged.
    pub invariant_direction: Option<CVec>,
}

impl RescalingLimit {
    pub fn is_converged(&self) -> bool {
        self.converged_at.is_some()
    }

    pub fn contains(&self, z: &CVec) -> bool {
        self.limit.is_inside(z)
    }

    /// Number of consecutive sample pairs whose midpoint falls outside the limit.
    pub fn midpoint_failures(&self) -> usize {
        self.limit_samples.windows(2).filter(|w| !self.limit.is_inside(&(&w[0] + &w[1]).map(|x| x * 0.5))).count()
    }
}

fn window_converged(steps: &[RescaleStep], k: usize, threshold: f64) -> bool {
    if steps.len() < k || k == 0 {
        return false;
    }
    let w = &steps[steps.len() - k..];
    if w.iter().any(|s| s.residuals.is_empty() || s.residuals.iter().any(|&r| !(r < threshold))) {
        return false;
    }
    (0..w[0].residuals.len()).all(|j| w.windows(2).all(|p| p[1].residuals[j] <= p[0].residuals[j]))
}

/// Rescales at sigma(t) for t in t_grid and compares consecutive rescaled domains on the ladder.
///
/// Non-convergence of the residuals is reported through `converged_at`; base points that stay
/// away from the boundary are an error.
pub fn rescale_limit(dom: &ConvexDomain, sigma: &AlmostGeodesic, t_grid: &[f64], opts: &RescaleOptions) -> Result<RescalingLimit> {
    if t_grid.len() < 2 || t_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::invalid("t_grid", "needs two or more increasing values"));
    }
    if opts.ladder.is_empty() || opts.ladder.iter().any(|&r| !(r > 0.0)) {
        return Err(Error::invalid("ladder", "radii must be positive"));
    }
    let mut steps: Vec<RescaleStep> = Vec::new();
    let mut prev: Option<ConvexDomain> = None;
    let mut converged_at = None;
    let mut aborted = None;
    let mut last_base = None;
    for &t in t_grid {
        let p = sigma.at(t);
        let frame = select_boundary_frame(dom, &p, opts.preferred_first.as_ref())?;
        let cond = frame.radii.iter().cloned().fold(0.0, f64::max) / frame.radii.iter().cloned().fold(f64::INFINITY, f64::min);
        if !(cond <= opts.condition_abort) {
            aborted = Some(format!("frame condition {cond:.3e} at t = {t}"));
            break;
        }
        let normalizer = match AffineNormalizer::from_frame(frame) {
            Ok(n) => n,
            Err(e) => {
                aborted = Some(format!("normalizer at t = {t}: {e}"));
                break;
            }
        };
        let img = normalizer.normalized(dom)?;
        let membership = k_membership_check(&img);
        if !membership.passed() {
            return Err(Error::Inconsistent(format!("rescaled domain at t = {t} fails the membership check: {membership:?}")));
        }
        let residuals = match &prev {
            Some(q) => opts.ladder.iter().map(|&r| local_hausdorff_distance(&img, q, r).map(|h| h.value)).collect::<Result<Vec<_>>>()?,
            None => Vec::new(),
        };
        steps.push(RescaleStep { t, normalizer, residuals, membership });
        if converged_at.is_none() && window_converged(&steps, opts.consecutive, opts.threshold) {
            converged_at = Some(steps.len() - 1);
        }
        prev = Some(img);
        last_base = Some(p);
    }
    let limit = prev.ok_or_else(|| Error::NonConvergence("no rescaling step succeeded".into()))?;
    let base = last_base.expect("set with prev");
    if !(crate::automorphism_dynamics::gap(dom, &base) < 1e-6 * dom.diameter()) {
        return Err(Error::NonConvergence("not converged: the base points do not escape to the boundary".into()));
    }
    let r_max = opts.ladder.iter().cloned().fold(0.0, f64::max);
    let mut g = rng(0x6c69);
    let mut limit_samples = Vec::with_capacity(opts.limit_samples);
    let mut tries = 0;
    while limit_samples.len() < opts.limit_samples && tries < 400 * opts.limit_samples.max(1) {
        tries += 1;
        let z = random_in_ball(&mut g, dom.dim(), r_max);
        if limit.is_inside(&z) {
            limit_samples.push(z);
        }
    }
    let mut out = RescalingLimit { ladder: opts.ladder.clone(), steps, converged_at, aborted, limit, limit_samples, invariant_direction: None };
    if out.is_converged() {
        out.invariant_direction = detect_invariant_line(&out).ok().map(|l| l.direction);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct InvariantLine {
    /// Unit vector with z + R u inside the limit for the sampled z.
    pub direction: CVec,
    /// Smallest first-order boundary distance along the sampled lines.
    pub margin: f64,
    /// Best margin among directions at least ~25 degrees away from `direction`.
    pub runner_up: f64,
    pub line_length: f64,
}

const LINE_SEED: u64 = 0x6c6e;

fn line_margin(dom: &ConvexDomain, bases: &[CVec], u: &CVec, s_max: f64) -> f64 {
    let mut m = f64::INFINITY;
    for z in bases {
        for k in 1..=8 {
            let s = s_max * k as f64 / 8.0;
            m = m.min(slack(dom, &(z + scale(u, s)))).min(slack(dom, &(z - scale(u, s))));
        }
    }
    m
}

/// Real direction u maximizing the sampled margin of { z + s u : |s| <= s_max } over the bases.
pub fn invariant_direction(dom: &ConvexDomain, bases: &[CVec], s_max: f64) -> Result<InvariantLine> {
    if bases.is_empty() {
        return Err(Error::invalid("bases", "need at least one base point"));
    }
    let d = dom.dim();
    let cands = direction_set(d, 64 * d, LINE_SEED);
    let scored: Vec<(f64, CVec)> = cands.into_iter().map(|u| (line_margin(dom, bases, &u, s_max), u)).collect();
    let (m0, u0) = scored.iter().max_by(|a, b| a.0.total_cmp(&b.0)).cloned().expect("nonempty");
    let pack = |u: &CVec| -> Vec<f64> { u.iter().map(|x| x.re).chain(u.iter().map(|x| x.im)).collect() };
    let unpack = |x: &[f64]| unit(&CVec::from_iterator(d, (0..d).map(|j| c(x[j], x[d + j]))));
    let (xb, vb) = nelder_mead(|x| -line_margin(dom, bases, &unpack(x), s_max), &pack(&u0), 0.02, 300, 1e-12);
    let (margin, direction) = if -vb > m0 { (-vb, unpack(&xb)) } else { (m0, u0) };
    if !(margin > 0.0) {
        return Err(Error::NonConvergence(format!("no real direction keeps lines of length {s_max} inside")));
    }
    let runner_up = scored
        .iter()
        .filter(|(_, u)| re_inner(u, &direction).abs() < 0.9)
        .map(|s| s.0)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(InvariantLine { direction, margin, runner_up, line_length: s_max })
}

/// Invariant line of a converged limit, tested with lines of length 10^3.
pub fn detect_invariant_line(limit: &RescalingLimit) -> Result<InvariantLine> {
    if !limit.is_converged() {
        return Err(Error::Precondition("the rescaling did not converge".into()));
    }
    let bases: Vec<CVec> = limit.limit_samples.iter().filter(|z| slack(&limit.limit, z) > 0.05).take(32).cloned().collect();
    if bases.len() < 4 {
        return Err(Error::Degenerate("too few limit samples away from the boundary".into()));
    }
    invariant_direction(&limit.limit, &bases, 1e3)
}

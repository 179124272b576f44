//! Pull-back of the limit translations along the backward orbit of a hyperbolic automorphism.
//!
//! With q_k = h^{-k} z0, p_k the foot of q_k on the normal line at x- and A_k the normalizer at p_k
//! (first frame point x-), the maps Phi_k = A_k h^{-k} are tested for a Cauchy window on a fixed
//! probe set. At the index N completing the window, u_t = Phi_N^{-1} (. + t u) Phi_N with u the
//! invariant direction of the rescaling limit at x-, i.e. u_t(z) = h^N(h^{-N} z + t A_N^{-1} u).

use super::{default_t_grid, detect_invariant_line, rescale_limit, slack, AffineNormalizer, InvariantLine, RescaleOptions, RescalingLimit};
use crate::automorphism_dynamics::{classify, form_defect, form_j, gap, Automorphism, ClassificationResult, MapType};
use crate::config::Tolerances;
use crate::domain_geometry::ConvexDomain;
use crate::error::{Error, Result};
use crate::kobayashi_metric::{canonical, distance_with, normal_line_curve, Canon, Effort, MetricOptions};
use crate::linalg::*;

const PROBE_SEED: u64 = 0x7062;
/// Backward iterates closer than this (relative to the diameter) to the boundary are not used.
const DEPTH_LIMIT: f64 = 1e-13;
/// Forward orbit points used by the displacement check stay this far from the boundary.
const DISPLACEMENT_LIMIT: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct PullbackOptions {
    pub cauchy_tol: f64,
    pub cauchy_probes: usize,
    pub consecutive: usize,
    pub max_depth: usize,
    pub condition_abort: f64,
    pub rescale: RescaleOptions,
}

impl PullbackOptions {
    pub fn from_tolerances(t: &Tolerances) -> Self {
        PullbackOptions {
            cauchy_tol: t.cauchy_tol,
            cauchy_probes: t.cauchy_probes,
            consecutive: t.consecutive,
            max_depth: 24,
            condition_abort: t.condition_abort,
            rescale: RescaleOptions::from_tolerances(t),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PullbackFamily {
    pub domain: ConvexDomain,
    pub h: Automorphism,
    pub classification: ClassificationResult,
    pub base: CVec,
    /// The index N.
    pub exponent: usize,
    pub normalizer: AffineNormalizer,
    pub line: InvariantLine,
    pub rescaling: RescalingLimit,
    /// A_N^{-1} u.
    pub velocity: CVec,
    /// sup over the probes of |Phi_k - Phi_{k-1}|, for k = 1, 2, ...
    pub cauchy: Vec<f64>,
    pub probes: Vec<CVec>,
    forward: Automorphism,
    backward: Automorphism,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PullbackReport {
    pub t: f64,
    pub exponent: usize,
    /// u_t sends every domain sample inside the domain.
    pub maps_into: bool,
    /// Smallest first-order boundary distance of the image samples.
    pub image_margin: f64,
    pub identity_error: f64,
    /// Projected group element fitted to u_t, for ball models.
    pub fitted: Option<Automorphism>,
    pub fit_residual: Option<f64>,
    pub classification: Option<ClassificationResult>,
    /// Upper bounds of K(u_t h^n z0, h^n z0) for n = 0, 1, ...
    pub displacement: Vec<f64>,
}

impl PullbackReport {
    pub fn is_parabolic(&self) -> bool {
        self.classification.as_ref().is_some_and(|c| c.tag == MapType::Parabolic)
    }

    pub fn displacement_sup(&self) -> f64 {
        self.displacement.iter().cloned().fold(0.0, f64::max)
    }
}

fn probe_set(dom: &ConvexDomain, n: usize) -> Vec<CVec> {
    let o = dom.interior_point().clone();
    dom.interior_sample(n, PROBE_SEED).into_iter().map(|z| &o + scale(&(z - &o), 0.5)).collect()
}

/// Foot of q on the inward normal line at x, pulled inside if necessary.
fn foot_on_normal(dom: &ConvexDomain, x: &CVec, normal: &CVec, q: &CVec) -> CVec {
    let mut s = re_inner(&(q - x), normal).max(f64::MIN_POSITIVE);
    let mut p = x + scale(normal, s);
    while !dom.is_inside(&p) && s > 0.0 {
        s *= 0.5;
        p = x + scale(normal, s);
    }
    p
}

pub fn pullback_family(dom: &ConvexDomain, h: &Automorphism) -> Result<PullbackFamily> {
    pullback_family_with(dom, h, &dom.interior_point().clone(), &PullbackOptions::from_tolerances(dom.tolerances()))
}

pub fn pullback_family_with(dom: &ConvexDomain, h: &Automorphism, z0: &CVec, opts: &PullbackOptions) -> Result<PullbackFamily> {
    let cls = classify(dom, h, z0)?;
    if cls.tag != MapType::Hyperbolic {
        return Err(Error::Precondition(format!("pullback needs a hyperbolic automorphism, got {}", cls.tag)));
    }
    let x_minus = cls.x_minus().expect("hyperbolic").clone();
    let o = dom.interior_point();
    let u = unit(&(&x_minus - o));
    let x_minus = o + scale(&u, dom.ray_exit(o, &u)?);
    let normal = dom.inward_normal(&x_minus)?;
    let r = 0.5 * dom.rolling_radius(&x_minus)?.max(1e-3 * dom.diameter());
    let sigma = normal_line_curve(dom, &x_minus, r, 12.0)?;
    let mut ropts = opts.rescale.clone();
    ropts.preferred_first = Some(x_minus.clone());
    let rescaling = rescale_limit(dom, &sigma, &default_t_grid(), &ropts)?;
    let line = detect_invariant_line(&rescaling)?;

    let probes = probe_set(dom, opts.cauchy_probes.max(1));
    let hinv = h.inverse();
    let mut q = z0.clone();
    let mut imgs: Vec<CVec> = probes.clone();
    let mut prev: Option<Vec<CVec>> = None;
    let mut cauchy = Vec::new();
    let mut run = 0;
    let mut found = None;
    for k in 1..=opts.max_depth {
        q = hinv.apply(&q);
        for z in imgs.iter_mut() {
            *z = hinv.apply(z);
        }
        if !dom.is_inside(&q) || gap(dom, &q) < DEPTH_LIMIT * dom.diameter() {
            break;
        }
        let p = foot_on_normal(dom, &x_minus, &normal, &q);
        let frame = super::select_boundary_frame(dom, &p, Some(&x_minus))?;
        let n = AffineNormalizer::from_frame(frame)?;
        if !(n.condition() <= opts.condition_abort) {
            break;
        }
        let phi: Vec<CVec> = imgs.iter().map(|z| n.apply(z)).collect();
        if let Some(pp) = &prev {
            let diff = phi.iter().zip(pp).map(|(a, b)| dist(a, b)).fold(0.0, f64::max);
            cauchy.push(diff);
            run = if diff < opts.cauchy_tol { run + 1 } else { 0 };
            if run >= opts.consecutive {
                found = Some((k, p, n));
                break;
            }
        }
        prev = Some(phi);
    }
    let (exponent, base, normalizer) =
        found.ok_or_else(|| Error::NonConvergence(format!("Phi_k not Cauchy at tolerance {} (differences {cauchy:?})", opts.cauchy_tol)))?;
    let velocity = normalizer.map.apply_linear_inverse(&line.direction);
    let forward = h.power(exponent as i64);
    let backward = h.power(-(exponent as i64));
    Ok(PullbackFamily {
        domain: dom.clone(),
        h: h.clone(),
        classification: cls,
        base,
        exponent,
        normalizer,
        line,
        rescaling,
        velocity,
        cauchy,
        probes,
        forward,
        backward,
    })
}

impl PullbackFamily {
    /// u_t(z).
    pub fn apply(&self, t: f64, z: &CVec) -> CVec {
        self.forward.apply(&(self.backward.apply(z) + scale(&self.velocity, t)))
    }

    /// max over the probes of |u_s(u_t z) - u_{s+t}(z)|.
    pub fn group_law_defect(&self, s: f64, t: f64) -> f64 {
        self.probes.iter().map(|z| dist(&self.apply(s, &self.apply(t, z)), &self.apply(s + t, z))).fold(0.0, f64::max)
    }

    pub fn identity_error(&self) -> f64 {
        self.probes.iter().map(|z| dist(&self.apply(0.0, z), z)).fold(0.0, f64::max)
    }

    /// Projective least-squares fit of u_t on the probes, projected onto the group. Ball models only.
    pub fn fit_automorphism(&self, t: f64) -> Result<(Automorphism, f64)> {
        let (canon, map) = canonical(&self.domain);
        if !matches!(canon, Canon::UnitBall) {
            return Err(Error::Precondition("matrix fits need a ball model".into()));
        }
        let d = self.domain.dim();
        let pairs: Vec<(CVec, CVec)> =
            self.probes.iter().map(|z| (map.apply_inverse(z), map.apply_inverse(&self.apply(t, z)))).collect();
        let n = d + 1;
        let mut a = CMat::zeros(d * pairs.len(), n * n);
        for (row, (z, w)) in pairs.iter().enumerate() {
            let zz: Vec<C64> = z.iter().cloned().chain(std::iter::once(c(1.0, 0.0))).collect();
            for i in 0..d {
                let r = row * d + i;
                for b in 0..n {
                    a[(r, i * n + b)] += zz[b];
                    a[(r, d * n + b)] -= w[i] * zz[b];
                }
            }
        }
        let svd = a.svd(false, true);
        let vt = svd.v_t.ok_or_else(|| Error::Degenerate("SVD failed".into()))?;
        let imin = (0..svd.singular_values.len()).min_by(|&i, &j| svd.singular_values[i].total_cmp(&svd.singular_values[j])).expect("nonempty");
        let x: Vec<C64> = vt.row(imin).iter().map(|v| v.conj()).collect();
        let mut m = CMat::from_fn(n, n, |i, j| x[i * n + j]);
        m = project_to_group(&m)?;
        let aut = Automorphism::ball_mobius(&self.domain, m)?;
        let residual = self.probes.iter().map(|z| dist(&aut.apply(z), &self.apply(t, z))).fold(0.0, f64::max);
        Ok((aut, residual))
    }

    /// Upper bounds of K(u_t h^n z0, h^n z0) for n = 0..=n_max, stopping near the boundary.
    pub fn displacement(&self, t: f64, z0: &CVec, n_max: usize) -> Result<Vec<f64>> {
        let opts = MetricOptions::from_tolerances(self.domain.tolerances(), Effort::Quick);
        let mut z = z0.clone();
        let mut out = Vec::new();
        for n in 0..=n_max {
            if n > 0 {
                z = self.h.apply(&z);
            }
            if !self.domain.is_inside(&z) || gap(&self.domain, &z) < DISPLACEMENT_LIMIT * self.domain.diameter() {
                break;
            }
            let w = self.apply(t, &z);
            if !self.domain.is_inside(&w) {
                return Err(Error::Inconsistent(format!("u_t leaves the domain on the orbit at n = {n}")));
            }
            out.push(distance_with(&self.domain, &w, &z, &opts)?.upper);
        }
        Ok(out)
    }
}

/// Nearest U(d,1) element with |det| = 1, by the iteration M <- (M + J M^{-*} J) / 2.
pub(crate) fn project_to_group(m: &CMat) -> Result<CMat> {
    let n = m.nrows();
    let j = form_j(n);
    let det = m.determinant();
    if !(det.norm() > 0.0) || !det.norm().is_finite() {
        return Err(Error::Degenerate("singular matrix".into()));
    }
    let mut g = m.map(|x| x / det.norm().powf(1.0 / n as f64));
    for _ in 0..100 {
        let inv = g.clone().try_inverse().ok_or_else(|| Error::Degenerate("singular iterate".into()))?;
        let next = (&g + &j * inv.adjoint() * &j).map(|x| x * 0.5);
        let step = frob(&(&next - &g));
        g = next;
        if step <= 1e-15 * frob(&g) {
            break;
        }
    }
    let det = g.determinant().norm();
    g = g.map(|x| x / det.powf(1.0 / n as f64));
    if form_defect(&g) > 1e-10 {
        return Err(Error::NonConvergence(format!("group projection stalled (defect {:.3e})", form_defect(&g))));
    }
    Ok(g)
}

/// Builds the family and reports the checks for one t.
pub fn pullback_one_parameter(dom: &ConvexDomain, h: &Automorphism, t: f64) -> Result<PullbackReport> {
    let fam = pullback_family(dom, h)?;
    fam.report(t)
}

impl PullbackFamily {
    pub fn report(&self, t: f64) -> Result<PullbackReport> {
        let dom = &self.domain;
        let mut image_margin = f64::INFINITY;
        let mut maps_into = true;
        for z in dom.interior_sample(200, PROBE_SEED + 1) {
            let w = self.apply(t, &z);
            maps_into &= dom.is_inside(&w);
            image_margin = image_margin.min(slack(dom, &w));
        }
        if !maps_into {
            return Err(Error::Inconsistent(format!("u_{t} maps domain samples outside (margin {image_margin:.3e})")));
        }
        let (fitted, fit_residual, classification) = match self.fit_automorphism(t) {
            Ok((aut, res)) => {
                let cls = classify(dom, &aut, dom.interior_point())?;
                (Some(aut), Some(res), Some(cls))
            }
            Err(Error::Precondition(_)) => (None, None, None),
            Err(e) => return Err(e),
        };
        let displacement = self.displacement(t, dom.interior_point(), 20)?;
        Ok(PullbackReport {
            t,
            exponent: self.exponent,
            maps_into,
            image_margin,
            identity_error: self.identity_error(),
            fitted,
            fit_residual,
            classification,
            displacement,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::automorphism_dynamics::dilation_matrix;

    #[test]
    fn ball_pullback_is_parabolic_at_e1() {
        let b = ConvexDomain::unit_ball(2);
        let a1 = Automorphism::ball_mobius(&b, dilation_matrix(2, 1.0)).unwrap();
        let fam = pullback_family(&b, &a1).unwrap();
        assert!(fam.identity_error() <= 1e-8, "{}", fam.identity_error());
        assert!(fam.group_law_defect(1.0, 1.0) <= 1e-3);
        let rep = fam.report(1.0).unwrap();
        assert!(rep.is_parabolic(), "{:?}", rep.classification.map(|c| c.tag));
        let xp = rep.classification.as_ref().unwrap().x_plus().unwrap().clone();
        assert!(dist(&xp, &basis(2, 0)) < 1e-3, "{xp}");
        assert!(rep.fit_residual.unwrap() < 1e-4, "{:?}", rep.fit_residual);
        assert!(rep.displacement_sup().is_finite() && rep.displacement.len() > 5);
    }

    #[test]
    fn non_hyperbolic_input_is_rejected() {
        let b = ConvexDomain::unit_ball(2);
        let id = Automorphism::identity(&b);
        assert!(pullback_family(&b, &id).is_err());
    }

    #[test]
    fn projection_fixes_group_elements() {
        let m = dilation_matrix(2, 0.7);
        let p = project_to_group(&m.map(|x| x * 3.0)).unwrap();
        assert!(frob(&(p - m)) < 1e-10);
    }
}

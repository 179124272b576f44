use super::Automorphism;
use crate::config::Tolerances;
use crate::domain_geometry::{ComplexHyperplane, ConvexDomain};
use crate::error::{Error, Result};
use crate::kobayashi_metric::{distance_with, Effort, MetricOptions};
use crate::linalg::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MapType {
    Elliptic,
    Parabolic,
    Hyperbolic,
}

impl std::fmt::Display for MapType {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            MapType::Elliptic => "elliptic",
            MapType::Parabolic => "parabolic",
            MapType::Hyperbolic => "hyperbolic",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct OrbitDiagnostics {
    /// Largest upper bracket of K(z0, f^k z0) over the bounded-orbit test.
    pub orbit_radius: f64,
    pub bounded: bool,
    pub fixed_point_residual: Option<f64>,
    pub forward_steps: usize,
    pub backward_steps: usize,
    /// First-order boundary distance at the last forward / backward iterate.
    pub forward_gap: f64,
    pub backward_gap: f64,
    pub forward_anchor: Option<CVec>,
    pub backward_anchor: Option<CVec>,
    /// Separation of the forward and backward tangent hyperplanes.
    pub face_gap: Option<f64>,
}

impl std::fmt::Display for OrbitDiagnostics {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "orbit radius {:.4} (bounded: {}), forward {} steps to gap {:.3e}, backward {} steps to gap {:.3e}",
            self.orbit_radius, self.bounded, self.forward_steps, self.forward_gap, self.backward_steps, self.backward_gap
        )?;
        if let Some(r) = self.fixed_point_residual {
            write!(f, ", fixed-point residual {r:.3e}")?;
        }
        if let Some(g) = self.face_gap {
            write!(f, ", face gap {g:.3e}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassificationResult {
    pub tag: MapType,
    pub fixed_point: Option<CVec>,
    pub h_plus: Option<ComplexHyperplane>,
    pub h_minus: Option<ComplexHyperplane>,
    pub diagnostics: OrbitDiagnostics,
}

impl ClassificationResult {
    /// Boundary point of the attracting hyperplane.
    pub fn x_plus(&self) -> Option<&CVec> {
        self.h_plus.as_ref().map(|h| &h.anchor)
    }

    pub fn x_minus(&self) -> Option<&CVec> {
        self.h_minus.as_ref().map(|h| &h.anchor)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassifyOptions {
    /// Cap on forward and backward iterations.
    pub max_iter: usize,
    pub face_tol: f64,
    pub elliptic_radius: f64,
    pub elliptic_iterations: usize,
}

impl ClassifyOptions {
    pub fn from_tolerances(t: &Tolerances) -> Self {
        ClassifyOptions {
            max_iter: 1 << 16,
            face_tol: t.face_tol,
            elliptic_radius: t.elliptic_radius,
            elliptic_iterations: t.elliptic_iterations,
        }
    }
}

/// Iterates stop once the boundary is this close, relative to the diameter.
const STOP_GAP: f64 = 1e-13;
/// An orbit counts as escaping when its last iterate is this close, relative to the diameter.
const ESCAPED_GAP: f64 = 1e-6;

/// First-order boundary distance -rho / |grad rho|.
pub(crate) fn gap(dom: &ConvexDomain, z: &CVec) -> f64 {
    let r = dom.rho(z);
    let g = norm(&dom.grad(z));
    if g > 0.0 { (-r / g).max(0.0) } else { f64::INFINITY }
}

pub(crate) struct Run {
    pub steps: usize,
    pub end: CVec,
    pub gap: f64,
    /// Iterates at powers of two.
    pub snapshots: Vec<(usize, CVec)>,
}

/// Iterates f from z0 until the boundary is within STOP_GAP or `cap` steps are done.
pub(crate) fn run_to_boundary(dom: &ConvexDomain, f: &Automorphism, z0: &CVec, cap: usize) -> Run {
    let stop = STOP_GAP * dom.diameter();
    let mut z = z0.clone();
    let mut g = gap(dom, &z);
    let mut snapshots = Vec::new();
    let mut k = 0;
    while k < cap && g >= stop {
        let next = f.apply(&z);
        if !is_finite(&next) || !dom.is_inside(&next) {
            break;
        }
        z = next;
        k += 1;
        g = gap(dom, &z);
        if k.is_power_of_two() {
            snapshots.push((k, z.clone()));
        }
    }
    Run { steps: k, end: z, gap: g, snapshots }
}

/// Boundary point where the ray from the interior point through x leaves the domain.
pub(crate) fn radial_boundary(dom: &ConvexDomain, x: &CVec) -> CVec {
    let o = dom.interior_point();
    let u = unit(&(x - o));
    o + scale(&u, dom.exit(o, &u))
}

fn near_projection(dom: &ConvexDomain, z: &CVec) -> CVec {
    match dom.boundary_projection(z) {
        Ok(p) => p.boundary.point,
        Err(_) => radial_boundary(dom, z),
    }
}

/// Limit of the orbit on the boundary. Capped runs use a Richardson step in 1/k.
pub(crate) fn anchor(dom: &ConvexDomain, run: &Run) -> CVec {
    let p_end = near_projection(dom, &run.end);
    if run.gap < STOP_GAP * dom.diameter() * 2.0 {
        return p_end;
    }
    let half = run.snapshots.iter().rev().find(|(k, _)| 2 * k == run.steps);
    match half {
        Some((_, zh)) => {
            let ph = near_projection(dom, zh);
            radial_boundary(dom, &(p_end.map(|x| x * 2.0) - ph))
        }
        None => p_end,
    }
}

fn hyperplane_gap(a: &ComplexHyperplane, b: &ComplexHyperplane) -> f64 {
    a.angle(b).max(a.distance(&b.anchor)).max(b.distance(&a.anchor))
}

/// Damped complex Newton iteration on f(z) - z with least-squares steps.
fn newton_fixed_point(dom: &ConvexDomain, f: &Automorphism, start: &CVec) -> Option<(CVec, f64)> {
    let d = dom.dim();
    let mut z = start.clone();
    for _ in 0..80 {
        let r = f.apply(&z) - &z;
        if norm(&r) <= 1e-15 * (1.0 + norm(&z)) {
            break;
        }
        let j = f.jacobian(&z) - identity(d);
        let step = j.svd(true, true).solve(&(-&r), 1e-12).ok()?;
        let mut t = 1.0;
        while t > 1e-8 && !dom.is_inside(&(&z + step.map(|x| x * t))) {
            t *= 0.5;
        }
        let next = &z + step.map(|x| x * t);
        if !dom.is_inside(&next) {
            return None;
        }
        z = next;
    }
    let res = norm(&(f.apply(&z) - &z));
    let g = gap(dom, &z);
    (g > 1e-8 * dom.diameter() && res <= 1e-10 * g).then_some((z, res))
}

pub(crate) fn find_fixed_point(dom: &ConvexDomain, f: &Automorphism, starts: &[CVec]) -> Option<(CVec, f64)> {
    starts.iter().filter(|s| dom.is_inside(s)).find_map(|s| newton_fixed_point(dom, f, s))
}

pub fn classify(dom: &ConvexDomain, phi: &Automorphism, z0: &CVec) -> Result<ClassificationResult> {
    classify_with(dom, phi, z0, &ClassifyOptions::from_tolerances(dom.tolerances()))
}

/// Wolff-Denjoy classification from orbit data. Returns `Error::Inconclusive` when the finite
/// orbit evidence does not separate the cases.
pub fn classify_with(dom: &ConvexDomain, phi: &Automorphism, z0: &CVec, opts: &ClassifyOptions) -> Result<ClassificationResult> {
    if phi.domain() != dom {
        return Err(Error::Precondition("the automorphism acts on a different domain".into()));
    }
    crate::kobayashi_metric::check_point(dom, z0, "base point")?;
    let mut diag = OrbitDiagnostics::default();
    let quick = MetricOptions::from_tolerances(dom.tolerances(), Effort::Quick);

    // Bounded-orbit test.
    let mut z = z0.clone();
    let mut orbit = vec![z0.clone()];
    diag.bounded = true;
    for _ in 0..opts.elliptic_iterations {
        z = phi.apply(&z);
        if !dom.is_inside(&z) {
            diag.bounded = false;
            break;
        }
        let k = distance_with(dom, z0, &z, &quick)?.upper;
        diag.orbit_radius = diag.orbit_radius.max(k);
        orbit.push(z.clone());
        if k > opts.elliptic_radius {
            diag.bounded = false;
            break;
        }
    }
    let centroid = orbit.iter().fold(CVec::zeros(dom.dim()), |a, b| a + b).map(|x| x / orbit.len() as f64);
    let fixed = find_fixed_point(dom, phi, &[centroid, z0.clone()]);
    if let Some((p, res)) = &fixed {
        diag.fixed_point_residual = Some(*res);
        if diag.bounded {
            return Ok(ClassificationResult { tag: MapType::Elliptic, fixed_point: Some(p.clone()), h_plus: None, h_minus: None, diagnostics: diag });
        }
        return Err(Error::Inconclusive(format!("interior fixed point found but the orbit left the test radius; {diag}")));
    }

    let fwd = run_to_boundary(dom, phi, z0, opts.max_iter);
    let bwd = run_to_boundary(dom, &phi.inverse(), z0, opts.max_iter);
    diag.forward_steps = fwd.steps;
    diag.backward_steps = bwd.steps;
    diag.forward_gap = fwd.gap;
    diag.backward_gap = bwd.gap;
    let escaped = ESCAPED_GAP * dom.diameter();
    if fwd.gap > escaped || bwd.gap > escaped {
        return Err(Error::Inconclusive(format!("orbit did not reach the boundary; {diag}")));
    }
    let xp = anchor(dom, &fwd);
    let xm = anchor(dom, &bwd);
    diag.forward_anchor = Some(xp.clone());
    diag.backward_anchor = Some(xm.clone());
    let hp = dom.complex_tangent_hyperplane(&xp)?;
    let hm = dom.complex_tangent_hyperplane(&xm)?;
    let g = hyperplane_gap(&hp, &hm);
    diag.face_gap = Some(g);
    if g <= opts.face_tol {
        Ok(ClassificationResult { tag: MapType::Parabolic, fixed_point: None, h_plus: Some(hp), h_minus: None, diagnostics: diag })
    } else if g > 100.0 * opts.face_tol {
        Ok(ClassificationResult { tag: MapType::Hyperbolic, fixed_point: None, h_plus: Some(hp), h_minus: Some(hm), diagnostics: diag })
    } else {
        Err(Error::Inconclusive(format!("face gap between the attracting hyperplanes is ambiguous; {diag}")))
    }
}

/// Complex tangent hyperplane at the boundary limit of the forward orbit after at most n_iter steps.
pub fn attracting_hyperplane(dom: &ConvexDomain, phi: &Automorphism, z0: &CVec, n_iter: usize) -> Result<ComplexHyperplane> {
    if phi.domain() != dom {
        return Err(Error::Precondition("the automorphism acts on a different domain".into()));
    }
    crate::kobayashi_metric::check_point(dom, z0, "base point")?;
    let probe: Vec<CVec> = std::iter::successors(Some(z0.clone()), |z| Some(phi.apply(z))).take(8).collect();
    if let Some((p, _)) = find_fixed_point(dom, phi, &probe) {
        return Err(Error::Precondition(format!("the map is elliptic (fixed point near {:?})", p.as_slice())));
    }
    let run = run_to_boundary(dom, phi, z0, n_iter);
    if run.gap > ESCAPED_GAP * dom.diameter() {
        return Err(Error::NonConvergence(format!(
            "after {} steps the orbit is still {:.3e} from the boundary",
            run.steps, run.gap
        )));
    }
    dom.complex_tangent_hyperplane(&anchor(dom, &run))
}

#[cfg(test)]
mod tests {
    use super::super::*;
    use super::*;

    fn ball() -> ConvexDomain {
        ConvexDomain::unit_ball(2)
    }

    #[test]
    fn trichotomy_on_the_ball() {
        let b = ball();
        let z0 = CVec::zeros(2);
        let u = CMat::from_diagonal(&CVec::from_vec(vec![C64::from_polar(1.0, 0.7), C64::from_polar(1.0, 2.1)]));
        let rot = Automorphism::ball_mobius(&b, rotation_matrix(&u)).unwrap();
        let r = classify(&b, &rot, &z0).unwrap();
        assert_eq!(r.tag, MapType::Elliptic);
        assert!(norm(r.fixed_point.as_ref().unwrap()) < 1e-8);

        let a1 = Automorphism::ball_mobius(&b, dilation_matrix(2, 1.0)).unwrap();
        let r = classify(&b, &a1, &z0).unwrap();
        assert_eq!(r.tag, MapType::Hyperbolic);
        assert!(dist(r.x_plus().unwrap(), &basis(2, 0)) < 1e-6);
        assert!(dist(r.x_minus().unwrap(), &-basis(2, 0)) < 1e-6);

        let p = Automorphism::ball_mobius(&b, heisenberg_matrix(2, 1.0)).unwrap();
        let r = classify(&b, &p, &z0).unwrap();
        assert_eq!(r.tag, MapType::Parabolic, "{}", r.diagnostics);
        assert!(dist(r.x_plus().unwrap(), &basis(2, 0)) < 1e-4);
    }

    #[test]
    fn inverse_swaps_hyperplanes() {
        let b = ball();
        let h = Automorphism::ball_mobius(&b, boost_matrix(&cvec(&[(0.3, 0.4), (0.0, -0.6)]), 0.7)).unwrap();
        let z0 = cvec(&[(0.1, 0.0), (0.2, 0.1)]);
        let r = classify(&b, &h, &z0).unwrap();
        let s = classify(&b, &h.inverse(), &z0).unwrap();
        assert_eq!(s.tag, MapType::Hyperbolic);
        assert!(r.h_plus.as_ref().unwrap().coincides(s.h_minus.as_ref().unwrap(), 1e-4));
        assert!(r.h_minus.as_ref().unwrap().coincides(s.h_plus.as_ref().unwrap(), 1e-4));
    }

    #[test]
    fn attracting_hyperplane_examples() {
        let b = ball();
        let a1 = Automorphism::ball_mobius(&b, dilation_matrix(2, 1.0)).unwrap();
        let z0 = CVec::zeros(2);
        let h = attracting_hyperplane(&b, &a1, &z0, 64).unwrap();
        assert!(dist(&h.anchor, &basis(2, 0)) < 1e-9);
        assert!((h.normal[0] + 1.0).norm() < 1e-9);
        let h = attracting_hyperplane(&b, &a1.inverse(), &z0, 64).unwrap();
        assert!(dist(&h.anchor, &-basis(2, 0)) < 1e-9);
        let rot = Automorphism::ball_mobius(&b, rotation_matrix(&CMat::from_diagonal_element(2, 2, I))).unwrap();
        assert!(matches!(attracting_hyperplane(&b, &rot, &z0, 64), Err(Error::Precondition(_))));
        assert!(matches!(attracting_hyperplane(&b, &a1, &z0, 3), Err(Error::NonConvergence(_))));
    }

    #[test]
    fn ellipsoid_lift_classification() {
        let e = ConvexDomain::ellipsoid(&[1, 2]).unwrap();
        let boost = Automorphism::disc_lift(&e, c(-0.6, 0.0), 0.0, identity(1)).unwrap();
        let r = classify(&e, &boost, &CVec::zeros(2)).unwrap();
        assert_eq!(r.tag, MapType::Hyperbolic);
        assert!(dist(r.x_plus().unwrap(), &basis(2, 0)) < 1e-6);
        let rot = Automorphism::disc_lift(&e, c(0.0, 0.0), 1.0, CMat::from_element(1, 1, C64::from_polar(1.0, 0.3))).unwrap();
        let r = classify(&e, &rot, &cvec_re(&[0.2, 0.1])).unwrap();
        assert_eq!(r.tag, MapType::Elliptic);
    }
}

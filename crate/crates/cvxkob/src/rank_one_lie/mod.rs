//! Matrix models of SU(d,1) and SL(2,R): Jordan decomposition, translation length, polar
//! coordinates, the boundary map of K_0 / M_a, adjoint norms and orbit comparisons.
//!
//! Every element has a ball model: the U(d,1) matrix itself, or its Cayley conjugate in SU(1,1)
//! acting on the unit disc. The symmetric-space distance is the Kobayashi distance of that ball,
//! so d(g o, o) = arccosh |g_{dd}| for the centre o.

use crate::automorphism_dynamics::{dilation_matrix, fit_sandwich, form_defect, form_j, random_su, Automorphism};
use crate::domain_geometry::ConvexDomain;
use crate::error::{Error, Result};
use crate::kobayashi_metric::{canonical, distance_with, Canon, Effort, MetricOptions};
use crate::linalg::*;
use nalgebra::DMatrix;
use rand::Rng;

/// Group relations must hold to this, relative to |M|^2.
const GROUP_TOL: f64 = 1e-10;
/// A Jordan part counts as trivial below this Frobenius deviation.
const TRIVIAL_TOL: f64 = 1e-7;
const CONTOUR_NODES: usize = 128;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Group {
    /// SU(d,1) acting on B_d; matrices are (d+1)x(d+1).
    Su(usize),
    Sl2R,
}

impl Group {
    pub fn size(&self) -> usize {
        match self {
            Group::Su(d) => d + 1,
            Group::Sl2R => 2,
        }
    }

    /// Complex dimension of the ball model.
    pub fn ball_dim(&self) -> usize {
        self.size() - 1
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LieElement {
    matrix: CMat,
    group: Group,
}

/// Cayley matrix sending the upper half-plane to the disc, normalised to det 1.
fn cayley() -> CMat {
    let s = c(0.0, 2.0).sqrt();
    CMat::from_row_slice(2, 2, &[c(1.0, 0.0), -I, c(1.0, 0.0), I]).map(|x| x / s)
}

fn cayley_inv() -> CMat {
    cayley().try_inverse().expect("invertible")
}

impl LieElement {
    pub fn new(matrix: CMat, group: Group) -> Result<Self> {
        let n = group.size();
        if matrix.nrows() != n || matrix.ncols() != n {
            return Err(Error::DimensionMismatch { expected: n, got: matrix.nrows() });
        }
        if matrix.iter().any(|x| !x.re.is_finite() || !x.im.is_finite()) {
            return Err(Error::invalid("matrix", "entries must be finite"));
        }
        let scale = frob(&matrix).powi(2).max(1.0);
        match group {
            Group::Su(_) => {
                let defect = form_defect(&matrix);
                if defect > GROUP_TOL {
                    return Err(Error::invalid("matrix", format!("does not preserve the (d,1) form (defect {defect:.3e})")));
                }
                let det = matrix.determinant().norm();
                if (det - 1.0).abs() > GROUP_TOL * scale {
                    return Err(Error::invalid("matrix", format!("|det| = {det} is not 1")));
                }
            }
            Group::Sl2R => {
                let im = matrix.iter().map(|x| x.im.abs()).fold(0.0, f64::max);
                if im > GROUP_TOL * scale.sqrt() {
                    return Err(Error::invalid("matrix", "SL(2,R) elements must be real"));
                }
                let det = matrix.determinant();
                if (det - c(1.0, 0.0)).norm() > GROUP_TOL * scale {
                    return Err(Error::invalid("matrix", format!("det = {det} is not 1")));
                }
            }
        }
        Ok(LieElement { matrix, group })
    }

    pub fn real(m: &[f64; 4]) -> Result<Self> {
        LieElement::new(CMat::from_row_slice(2, 2, &m.map(|x| c(x, 0.0))), Group::Sl2R)
    }

    pub fn identity(group: Group) -> Self {
        LieElement { matrix: identity(group.size()), group }
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    pub fn group(&self) -> Group {
        self.group
    }

    /// self * other.
    pub fn mul(&self, other: &LieElement) -> Result<LieElement> {
        if self.group != other.group {
            return Err(Error::Precondition("elements of different groups".into()));
        }
        Ok(LieElement { matrix: &self.matrix * &other.matrix, group: self.group })
    }

    pub fn inverse(&self) -> LieElement {
        let m = match self.group {
            Group::Su(_) => {
                let j = form_j(self.group.size());
                &j * self.matrix.adjoint() * &j
            }
            Group::Sl2R => {
                let m = &self.matrix;
                CMat::from_row_slice(2, 2, &[m[(1, 1)], -m[(0, 1)], -m[(1, 0)], m[(0, 0)]])
            }
        };
        LieElement { matrix: m, group: self.group }
    }

    /// The U(d,1) matrix acting on the ball model.
    pub fn ball_matrix(&self) -> CMat {
        match self.group {
            Group::Su(_) => self.matrix.clone(),
            Group::Sl2R => cayley() * &self.matrix * cayley_inv(),
        }
    }

    /// Inverse of `ball_matrix`; the SL(2,R) image is made exactly real.
    pub fn from_ball_matrix(m: &CMat, group: Group) -> Result<Self> {
        match group {
            Group::Su(_) => LieElement::new(m.clone(), group),
            Group::Sl2R => LieElement::new((cayley_inv() * m * cayley()).map(|x| c(x.re, 0.0)), group),
        }
    }

    /// Whether g fixes the centre of the ball model.
    pub fn in_k0(&self, tol: f64) -> bool {
        let m = self.ball_matrix();
        let n = m.nrows() - 1;
        (0..n).all(|i| m[(i, n)].norm() <= tol && m[(n, i)].norm() <= tol)
    }

    /// Action on the domain: ball automorphism, or lift of the exponent-one block of an ellipsoid.
    pub fn act_on(&self, dom: &ConvexDomain) -> Result<Automorphism> {
        let m = self.ball_matrix();
        match canonical(dom).0 {
            Canon::UnitBall => Automorphism::ball_mobius(dom, m),
            Canon::Ellipsoid(exps) => {
                let r = exps.iter().filter(|&&e| e != 1).count();
                Automorphism::ellipsoid_lift(dom, m, identity(r))
            }
            Canon::Other(_) => Err(Error::Precondition("no group action on this domain kind".into())),
        }
    }
}

/// The axis a_t: dilation along e1 on the ball model, diag(e^t, e^-t) in SL(2,R).
pub fn axis(group: Group, t: f64) -> LieElement {
    match group {
        Group::Su(d) => LieElement { matrix: dilation_matrix(d, t), group },
        Group::Sl2R => LieElement { matrix: CMat::from_diagonal(&cvec_re(&[t.exp(), (-t).exp()])), group },
    }
}

/// exp(X) for X in the Lie algebra (X must already lie in it).
pub fn exp_algebra(x: &CMat, group: Group) -> Result<LieElement> {
    let m = x.clone().exp();
    match group {
        Group::Su(_) => LieElement::new(m, group),
        Group::Sl2R => LieElement::new(m.map(|z| c(z.re, 0.0)), group),
    }
}

fn random_sl2_algebra(g: &mut impl Rng) -> CMat {
    let (a, b, cc) = (gaussian(g), gaussian(g), gaussian(g));
    let x = CMat::from_row_slice(2, 2, &[c(a, 0.0), c(b, 0.0), c(cc, 0.0), c(-a, 0.0)]);
    let f = frob(&x);
    x.map(|z| z / f)
}

/// exp(s X) with X a random unit element of the algebra and s uniform in [0.5, 2.5].
pub fn random_element(group: Group, g: &mut impl Rng) -> LieElement {
    let x = match group {
        Group::Su(d) => random_su(d, g),
        Group::Sl2R => random_sl2_algebra(g),
    };
    let s = 0.5 + 2.0 * g.random::<f64>();
    exp_algebra(&x.map(|z| z * s), group).expect("exponential of an algebra element")
}

fn random_unitary(n: usize, g: &mut impl Rng) -> CMat {
    let y = CMat::from_fn(n, n, |_, _| c(gaussian(g), gaussian(g)));
    let qr = y.qr();
    let (q, r) = (qr.q(), qr.r());
    let mut q = q;
    for j in 0..n {
        let p = r[(j, j)] / r[(j, j)].norm();
        for i in 0..n {
            q[(i, j)] *= p;
        }
    }
    q
}

/// Seeded element of the stabiliser K_0 of the centre.
pub fn random_k0(group: Group, g: &mut impl Rng) -> LieElement {
    match group {
        Group::Su(d) => {
            let w = random_unitary(d, g);
            let mut m = rotation_block(&w);
            m[(d, d)] = w.determinant().conj();
            LieElement { matrix: m, group }
        }
        Group::Sl2R => {
            let th = std::f64::consts::TAU * g.random::<f64>();
            LieElement::real(&[th.cos(), -th.sin(), th.sin(), th.cos()]).expect("rotation")
        }
    }
}

/// Seeded element of M_a, the centraliser of the axis in K_0.
pub fn random_m_a(group: Group, g: &mut impl Rng) -> LieElement {
    match group {
        Group::Su(d) => {
            let phi = std::f64::consts::TAU * g.random::<f64>();
            let e = C64::from_polar(1.0, phi);
            let u = random_unitary(d - 1, g);
            let mut m = CMat::zeros(d + 1, d + 1);
            m[(0, 0)] = e;
            m[(d, d)] = e;
            m.view_mut((1, 1), (d - 1, d - 1)).copy_from(&u);
            let det = m.determinant();
            m[(1.min(d - 1), 1.min(d - 1))] /= if d > 1 { det } else { c(1.0, 0.0) };
            LieElement { matrix: m, group }
        }
        Group::Sl2R => {
            let s = if g.random::<bool>() { 1.0 } else { -1.0 };
            LieElement::real(&[s, 0.0, 0.0, s]).expect("centre")
        }
    }
}

fn rotation_block(w: &CMat) -> CMat {
    let d = w.nrows();
    let mut m = identity(d + 1);
    m.view_mut((0, 0), (d, d)).copy_from(w);
    m
}

#[derive(Debug, Clone, PartialEq)]
pub struct JordanParts {
    pub elliptic: LieElement,
    pub hyperbolic: LieElement,
    pub unipotent: LieElement,
    /// Largest Frobenius norm of the spectral projectors.
    pub conditioning: f64,
}

fn commutator_norm(a: &CMat, b: &CMat) -> f64 {
    frob(&(a * b - b * a))
}

impl JordanParts {
    /// |g_e g_h g_u - g|.
    pub fn recomposition_error(&self, g: &LieElement) -> f64 {
        frob(&(&self.elliptic.matrix * &self.hyperbolic.matrix * &self.unipotent.matrix - &g.matrix))
    }

    /// Largest pairwise commutator norm.
    pub fn commutation_error(&self) -> f64 {
        let (e, h, u) = (&self.elliptic.matrix, &self.hyperbolic.matrix, &self.unipotent.matrix);
        commutator_norm(e, h).max(commutator_norm(e, u)).max(commutator_norm(h, u))
    }
}

/// Eigenvalue clusters under the relative merge tolerance, by single linkage.
fn clusters(ev: &[C64], tol: f64) -> Vec<Vec<usize>> {
    let n = ev.len();
    let mut label: Vec<usize> = (0..n).collect();
    fn find(l: &mut Vec<usize>, i: usize) -> usize {
        let mut r = i;
        while l[r] != r {
            r = l[r];
        }
        l[i] = r;
        r
    }
    for i in 0..n {
        for j in 0..i {
            if (ev[i] - ev[j]).norm() <= tol * ev[i].norm().max(ev[j].norm()).max(1.0) {
                let (a, b) = (find(&mut label, i), find(&mut label, j));
                label[a] = b;
            }
        }
    }
    let mut out: Vec<Vec<usize>> = Vec::new();
    let mut roots: Vec<usize> = Vec::new();
    for i in 0..n {
        let r = find(&mut label, i);
        match roots.iter().position(|&x| x == r) {
            Some(k) => out[k].push(i),
            None => {
                roots.push(r);
                out.push(vec![i]);
            }
        }
    }
    out
}

/// Riesz projector onto the generalised eigenspace of the eigenvalues inside |z - mu| < rho.
fn contour_projector(m: &CMat, mu: C64, rho: f64) -> Result<CMat> {
    let n = m.nrows();
    let mut p = CMat::zeros(n, n);
    for k in 0..CONTOUR_NODES {
        let w = C64::from_polar(rho, std::f64::consts::TAU * k as f64 / CONTOUR_NODES as f64);
        let r = (identity(n).map(|x| x * (mu + w)) - m)
            .try_inverse()
            .ok_or_else(|| Error::Degenerate("contour passes through an eigenvalue".into()))?;
        p += r.map(|x| x * w);
    }
    Ok(p.map(|x| x / CONTOUR_NODES as f64))
}

/// Multiplicative Jordan decomposition g = g_e g_h g_u.
pub fn jordan_decompose(g: &LieElement) -> Result<JordanParts> {
    jordan_decompose_with(g, crate::config::Tolerances::default().eigen_merge)
}

pub fn jordan_decompose_with(g: &LieElement, merge: f64) -> Result<JordanParts> {
    let m = &g.matrix;
    let n = m.nrows();
    let t = m.clone().schur().unpack().1;
    let ev: Vec<C64> = (0..n).map(|i| t[(i, i)]).collect();
    let groups = clusters(&ev, merge);
    let mut s = CMat::zeros(n, n);
    let mut e = CMat::zeros(n, n);
    let mut h = CMat::zeros(n, n);
    let mut conditioning = 1.0f64;
    for (ci, members) in groups.iter().enumerate() {
        let p = if groups.len() == 1 {
            identity(n)
        } else {
            let mu = members.iter().map(|&i| ev[i]).sum::<C64>() / members.len() as f64;
            let spread = members.iter().map(|&i| (ev[i] - mu).norm()).fold(0.0, f64::max);
            let sep = groups
                .iter()
                .enumerate()
                .filter(|(cj, _)| *cj != ci)
                .flat_map(|(_, o)| o.iter().map(|&i| (ev[i] - mu).norm()))
                .fold(f64::INFINITY, f64::min);
            contour_projector(m, mu, 0.5 * (spread + sep))?
        };
        conditioning = conditioning.max(frob(&p));
        let tr = p.trace();
        let lam = (m * &p).trace() / tr;
        if !(lam.norm() > 0.0) {
            return Err(Error::Degenerate("zero eigenvalue".into()));
        }
        s += p.map(|x| x * lam);
        e += p.map(|x| x * (lam / lam.norm()));
        h += p.map(|x| x * lam.norm());
    }
    let sinv = s.try_inverse().ok_or_else(|| Error::Degenerate("singular semisimple part".into()))?;
    let u = sinv * m;
    let (e, h, u) = match g.group {
        Group::Sl2R => (e, h.map(|x| c(x.re, 0.0)), u.map(|x| c(x.re, 0.0))),
        Group::Su(_) => (e, h, u),
    };
    let wrap = |matrix: CMat| LieElement { matrix, group: g.group };
    Ok(JordanParts { elliptic: wrap(e), hyperbolic: wrap(h), unipotent: wrap(u), conditioning })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LieType {
    Elliptic,
    Hyperbolic,
    Unipotent,
    /// Nontrivial elliptic and hyperbolic parts, trivial unipotent part.
    Axial,
    /// Nontrivial unipotent part together with another nontrivial part.
    Mixed,
}

impl LieType {
    /// Hyperbolic part nontrivial and unipotent part trivial.
    pub fn is_axial(self) -> bool {
        matches!(self, LieType::Hyperbolic | LieType::Axial)
    }
}

impl std::fmt::Display for LieType {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            LieType::Elliptic => "elliptic",
            LieType::Hyperbolic => "hyperbolic",
            LieType::Unipotent => "unipotent",
            LieType::Axial => "axial",
            LieType::Mixed => "mixed",
        };
        f.write_str(s)
    }
}

/// Distance of m from the scalar matrices, i.e. triviality of Ad(m).
fn off_center(m: &CMat) -> f64 {
    let n = m.nrows();
    let s = m.trace() / n as f64;
    frob(&(m - identity(n).map(|x| x * s)))
}

pub fn classify_lie(g: &LieElement) -> Result<LieType> {
    let p = jordan_decompose(g)?;
    let e = off_center(&p.elliptic.matrix) > TRIVIAL_TOL;
    let h = off_center(&p.hyperbolic.matrix) > TRIVIAL_TOL;
    let u = off_center(&p.unipotent.matrix) > TRIVIAL_TOL.sqrt();
    Ok(match (e, h, u) {
        (_, _, true) if e || h => LieType::Mixed,
        (_, _, true) => LieType::Unipotent,
        (true, true, false) => LieType::Axial,
        (false, true, false) => LieType::Hyperbolic,
        _ => LieType::Elliptic,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TranslationLength {
    pub tau: f64,
    pub uncertainty: f64,
    /// (n, d(g^n z0, z0)) at n = 1, 2, 4, ...
    pub levels: Vec<(u64, f64)>,
}

impl TranslationLength {
    /// tau exceeds three times its uncertainty.
    pub fn is_positive(&self) -> bool {
        self.tau > 3.0 * self.uncertainty
    }
}

/// Boost of the ball model moving the centre to z.
fn centre_mover(z: &CVec) -> Result<CMat> {
    let r = norm(z);
    if !(r < 1.0) {
        return Err(Error::NotInDomain("base point must lie in the ball model".into()));
    }
    if r == 0.0 {
        return Ok(identity(z.len() + 1));
    }
    Ok(crate::automorphism_dynamics::boost_matrix(z, atanh_stable(r)))
}

/// arccosh of e^{log_scale} |x|, without overflow.
fn arccosh_scaled(x: f64, log_scale: f64) -> f64 {
    let lx = log_scale + x.abs().ln();
    if lx > 20.0 {
        std::f64::consts::LN_2 + lx
    } else {
        lx.exp().max(1.0).acosh()
    }
}

/// tau(g) = lim d(g^n z0, z0) / n from levels n = 2^k <= n_max (z0 in the ball model).
///
/// Powers are taken by rescaled squaring and the distance is read off the conjugated matrix, so
/// the orbit never has to be represented near the boundary. The estimate is the last difference
/// quotient (d(2n) - d(n)) / n; the uncertainty adds the change from the previous level and the
/// allowance 4 ln(N) / N for the logarithmic growth of non-axial orbits.
pub fn translation_length(g: &LieElement, z0: &CVec, n_max: u64) -> Result<TranslationLength> {
    if n_max < 16 {
        return Err(Error::invalid("n_max", "must be at least 16"));
    }
    if z0.len() != g.group.ball_dim() {
        return Err(Error::DimensionMismatch { expected: g.group.ball_dim(), got: z0.len() });
    }
    let t = centre_mover(z0)?;
    let tinv = group_inverse_u(&t);
    let mut m = &tinv * g.ball_matrix() * &t;
    let last = m.nrows() - 1;
    let mut log_scale = 0.0;
    let mut levels = Vec::new();
    let mut n = 1u64;
    loop {
        levels.push((n, arccosh_scaled(m[(last, last)].norm(), log_scale)));
        if n > n_max / 2 {
            break;
        }
        m = &m * &m;
        log_scale *= 2.0;
        let f = frob(&m);
        m = m.map(|x| x / f);
        log_scale += f.ln();
        n *= 2;
    }
    let quot: Vec<f64> = levels.windows(2).map(|w| (w[1].1 - w[0].1) / w[0].0 as f64).collect();
    let k = quot.len();
    let tau = quot[k - 1].max(0.0);
    let big_n = levels[k].0 as f64;
    let uncertainty = (quot[k - 1] - quot[k - 2]).abs() + 4.0 * big_n.ln() / big_n;
    Ok(TranslationLength { tau, uncertainty, levels })
}

fn group_inverse_u(m: &CMat) -> CMat {
    let j = form_j(m.nrows());
    &j * m.adjoint() * &j
}

/// d(g o, o) for the centre o of the ball model.
pub fn displacement(g: &LieElement) -> f64 {
    let m = g.ball_matrix();
    let n = m.nrows() - 1;
    if m[(n, n)].norm() < 2.0 {
        // arccosh loses half the digits near 1; use |g o| directly.
        let w = CVec::from_iterator(n, (0..n).map(|i| m[(i, n)] / m[(n, n)]));
        return atanh_stable(norm(&w).min(1.0));
    }
    arccosh_scaled(m[(n, n)].norm(), 0.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolarCoordinates {
    pub k1: LieElement,
    pub t: f64,
    pub k2: LieElement,
}

impl PolarCoordinates {
    pub fn recompose(&self) -> CMat {
        self.k1.matrix() * axis(self.k1.group, self.t).matrix() * self.k2.matrix()
    }

    pub fn recomposition_error(&self, g: &LieElement) -> f64 {
        frob(&(self.recompose() - g.matrix()))
    }
}

/// g = k1 a_t k2 with k1, k2 in K_0 and t = d(g o, o) >= 0.
pub fn polar_decompose(g: &LieElement) -> Result<PolarCoordinates> {
    let group = g.group;
    let m = g.ball_matrix();
    let d = m.nrows() - 1;
    let t = displacement(g);
    if t < 1e-8 {
        return Ok(PolarCoordinates { k1: g.clone(), t: 0.0, k2: LieElement::identity(group) });
    }
    let w = CVec::from_iterator(d, (0..d).map(|i| m[(i, d)] / m[(d, d)]));
    let wh = unit(&w);
    let k1b = if d == 1 {
        let a = wh[0].sqrt();
        CMat::from_diagonal(&CVec::from_vec(vec![a, a.conj()]))
    } else {
        let mut w0 = complete_unitary(std::slice::from_ref(&wh), d);
        let det = w0.determinant();
        for i in 0..d {
            w0[(i, d - 1)] /= det;
        }
        rotation_block(&w0)
    };
    let k1 = LieElement::from_ball_matrix(&k1b, group)?;
    let k2m = axis(group, -t).matrix() * k1.inverse().matrix() * g.matrix();
    let k2 = LieElement::new(k2m, group)?;
    Ok(PolarCoordinates { k1, t, k2 })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryImage {
    pub point: CVec,
    /// (T, boundary projection of k a_T k^{-1} o) for each T used.
    pub steps: Vec<(f64, CVec)>,
    pub cauchy: f64,
}

/// T values of the boundary-map Cauchy test. tanh(T) is still below 1 in double precision at 16.
pub const PSI_TIMES: [f64; 3] = [8.0, 12.0, 16.0];

/// psi(k): limit of k a_T k^{-1} o on the boundary of the ball model.
pub fn boundary_map_psi(k: &LieElement) -> Result<BoundaryImage> {
    if !k.in_k0(1e-10) {
        return Err(Error::Precondition("k must fix the centre of the ball model".into()));
    }
    let ball = ConvexDomain::unit_ball(k.group.ball_dim());
    let mut steps = Vec::new();
    for &t in &PSI_TIMES {
        let m = k.matrix() * axis(k.group, t).matrix() * k.inverse().matrix();
        let m = LieElement { matrix: m, group: k.group }.ball_matrix();
        let d = m.nrows() - 1;
        let p = CVec::from_iterator(d, (0..d).map(|i| m[(i, d)] / m[(d, d)]));
        steps.push((t, ball.boundary_projection(&p)?.boundary.point));
    }
    let cauchy = steps.windows(2).map(|w| dist(&w[0].1, &w[1].1)).fold(0.0, f64::max);
    if !(cauchy < 1e-6) {
        return Err(Error::NonConvergence(format!("boundary map not converged (step {cauchy:.3e})")));
    }
    let point = steps.last().expect("nonempty").1.clone();
    Ok(BoundaryImage { point, steps, cauchy })
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrbitQi {
    pub a: f64,
    pub b: f64,
    pub pairs: usize,
    pub max_width: f64,
}

/// Fits (1/A) d_X - B <= K_D(g1 z0, g2 z0) <= A d_X + B over all pairs of the sample.
pub fn orbit_symmetric_space_qi(dom: &ConvexDomain, sample: &[LieElement], z0: &CVec) -> Result<OrbitQi> {
    if sample.is_empty() {
        return Err(Error::invalid("sample", "must not be empty"));
    }
    let opts = MetricOptions::from_tolerances(dom.tolerances(), Effort::Quick);
    let pts: Vec<CVec> = sample.iter().map(|g| g.act_on(dom).and_then(|f| f.try_apply(z0))).collect::<Result<_>>()?;
    let mut data = Vec::new();
    let mut max_width = 0.0f64;
    for i in 0..sample.len() {
        for j in 0..=i {
            let dx = displacement(&sample[i].inverse().mul(&sample[j])?);
            let b = distance_with(dom, &pts[i], &pts[j], &opts)?;
            max_width = max_width.max(b.width());
            data.push((dx, b.lower, b.upper));
        }
    }
    let (a, b) = if data.iter().all(|p| p.0 == 0.0) {
        (1.0, data.iter().map(|p| p.2).fold(0.0, f64::max))
    } else {
        fit_sandwich(&data)
    };
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::Inconsistent("no finite quasi-isometry constants fit the brackets".into()));
    }
    Ok(OrbitQi { a, b, pairs: data.len(), max_width })
}

/// Orthonormal basis of the Lie algebra for the real inner product Re tr(X* Y).
pub fn algebra_basis(group: Group) -> Vec<CMat> {
    let n = group.size();
    let mut span: Vec<CMat> = Vec::new();
    for a in 0..n {
        for b in 0..n {
            for s in [c(1.0, 0.0), I] {
                let mut y = CMat::zeros(n, n);
                y[(a, b)] = s;
                span.push(y);
            }
        }
    }
    let j = form_j(n);
    let project = |y: &CMat| -> CMat {
        match group {
            Group::Su(_) => {
                let mut x = (y - &j * y.adjoint() * &j).map(|z| z * 0.5);
                let tr = x.trace() / n as f64;
                for i in 0..n {
                    x[(i, i)] -= tr;
                }
                x
            }
            Group::Sl2R => {
                let mut x = y.map(|z| c(z.re, 0.0));
                let tr = x.trace() / 2.0;
                x[(0, 0)] -= tr;
                x[(1, 1)] -= tr;
                x
            }
        }
    };
    let ip = |a: &CMat, b: &CMat| (a.adjoint() * b).trace().re;
    let mut basis: Vec<CMat> = Vec::new();
    for y in span {
        let mut x = project(&y);
        for bm in &basis {
            let p = ip(bm, &x);
            x -= bm.map(|z| z * p);
        }
        let f = ip(&x, &x).sqrt();
        if f > 1e-10 {
            basis.push(x.map(|z| z / f));
        }
    }
    basis
}

/// Matrix of Ad(g) in `algebra_basis`.
pub fn adjoint_matrix(g: &LieElement) -> DMatrix<f64> {
    let basis = algebra_basis(g.group);
    let gi = g.inverse();
    let imgs: Vec<CMat> = basis.iter().map(|x| g.matrix() * x * gi.matrix()).collect();
    DMatrix::from_fn(basis.len(), basis.len(), |i, j| (basis[i].adjoint() * &imgs[j]).trace().re)
}

/// Operator norm of Ad(g).
pub fn ad_norm(g: &LieElement) -> f64 {
    adjoint_matrix(g).singular_values().max()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdFit {
    pub alpha: f64,
    pub beta: f64,
    pub samples: usize,
}

/// Smallest-mean line with upper K_D(g z0, z0) <= alpha log |Ad g| + beta on the sample.
pub fn ad_distance_fit(dom: &ConvexDomain, sample: &[LieElement], z0: &CVec) -> Result<AdFit> {
    if sample.is_empty() {
        return Err(Error::invalid("sample", "must not be empty"));
    }
    let opts = MetricOptions::from_tolerances(dom.tolerances(), Effort::Quick);
    let mut pts = Vec::new();
    for g in sample {
        let w = g.act_on(dom)?.try_apply(z0)?;
        pts.push((ad_norm(g).ln().max(0.0), distance_with(dom, &w, z0, &opts)?.upper));
    }
    let beta = |a: f64| pts.iter().map(|&(x, y)| y - a * x).fold(f64::NEG_INFINITY, f64::max);
    let xbar = pts.iter().map(|p| p.0).sum::<f64>() / pts.len() as f64;
    let hi = pts.iter().filter(|p| p.0 > 1e-9).map(|p| p.1 / p.0).fold(1.0, f64::max);
    let (alpha, _) = golden_min(|a| beta(a) + a * xbar, 0.0, hi, 1e-12);
    Ok(AdFit { alpha, beta: beta(alpha), samples: pts.len() })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DimensionGap {
    /// Real dimension of the limit set, the sphere K_0 / M_a of the acting ball factor.
    pub limit_dim: usize,
    pub boundary_dim: usize,
    /// The limit set is the whole boundary.
    pub ball: bool,
    /// limit_dim <= boundary_dim - 2, or the ball alternative.
    pub holds: bool,
}

/// Dimension count for balls and generalized ellipsoids with at least one unit exponent.
pub fn dimension_gap_report(dom: &ConvexDomain) -> Result<DimensionGap> {
    let d = dom.dim();
    let boundary_dim = 2 * d - 1;
    match canonical(dom).0 {
        Canon::UnitBall => Ok(DimensionGap { limit_dim: boundary_dim, boundary_dim, ball: true, holds: true }),
        Canon::Ellipsoid(exps) => {
            let k = exps.iter().filter(|&&e| e == 1).count();
            if k == 0 {
                return Err(Error::Precondition("no unit exponent: no noncompact group model".into()));
            }
            let limit_dim = 2 * k - 1;
            Ok(DimensionGap { limit_dim, boundary_dim, ball: false, holds: limit_dim + 2 <= boundary_dim })
        }
        Canon::Other(_) => Err(Error::Precondition("unknown model for this domain kind".into())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rot_su11(th: f64) -> LieElement {
        let e = C64::from_polar(1.0, th / 2.0);
        LieElement::new(CMat::from_diagonal(&CVec::from_vec(vec![e, e.conj()])), Group::Su(1)).unwrap()
    }

    #[test]
    fn jordan_examples() {
        let id = LieElement::identity(Group::Su(2));
        let p = jordan_decompose(&id).unwrap();
        assert!(frob(&(p.elliptic.matrix() - identity(3))) < 1e-12);
        assert_eq!(classify_lie(&id).unwrap(), LieType::Elliptic);
        let h = LieElement::real(&[2.0, 0.0, 0.0, 0.5]).unwrap();
        let p = jordan_decompose(&h).unwrap();
        assert!(frob(&(p.hyperbolic.matrix() - h.matrix())) < 1e-10);
        assert!(frob(&(p.unipotent.matrix() - identity(2))) < 1e-10);
        let u = LieElement::real(&[1.0, 1.0, 0.0, 1.0]).unwrap();
        let p = jordan_decompose(&u).unwrap();
        assert!(frob(&(p.unipotent.matrix() - u.matrix())) < 1e-10);
        assert_eq!(classify_lie(&u).unwrap(), LieType::Unipotent);
    }

    #[test]
    fn classification_examples() {
        assert_eq!(classify_lie(&rot_su11(0.7)).unwrap(), LieType::Elliptic);
        let s = 0.8f64;
        let b = LieElement::real(&[s.cosh(), s.sinh(), s.sinh(), s.cosh()]).unwrap();
        let t = classify_lie(&b).unwrap();
        assert_eq!(t, LieType::Hyperbolic);
        assert!(t.is_axial());
        let r = LieElement::new(crate::automorphism_dynamics::rotation_matrix(&CMat::from_diagonal(&cvec(&[(1.0, 0.0), (0.0, 1.0)]))), Group::Su(2));
        let r = r.unwrap();
        let a = axis(Group::Su(2), 0.6);
        assert_eq!(classify_lie(&r.mul(&a).unwrap()).unwrap(), LieType::Axial);
    }

    #[test]
    fn translation_length_examples() {
        let z0 = CVec::zeros(2);
        let a = translation_length(&axis(Group::Su(2), 1.0), &z0, 1 << 20).unwrap();
        assert!((a.tau - 1.0).abs() < 1e-3 && a.is_positive());
        let r = LieElement::new(crate::automorphism_dynamics::rotation_matrix(&CMat::from_diagonal(&cvec(&[(0.0, 1.0), (1.0, 0.0)]))), Group::Su(2)).unwrap();
        let t = translation_length(&r, &z0, 1 << 20).unwrap();
        assert!(t.tau.abs() <= 1e-6 && !t.is_positive());
        let p = LieElement::new(crate::automorphism_dynamics::heisenberg_matrix(2, 1.0), Group::Su(2)).unwrap();
        let t = translation_length(&p, &z0, 1 << 20).unwrap();
        assert!(t.tau < 1e-4 && !t.is_positive(), "{t:?}");
        let off = cvec_re(&[0.3, -0.2]);
        let a2 = translation_length(&axis(Group::Su(2), 1.0), &off, 1 << 20).unwrap();
        assert!((a2.tau - 1.0).abs() < 1e-6);
        assert!(translation_length(&r, &z0, 8).is_err());
    }

    #[test]
    fn polar_examples() {
        let a = axis(Group::Su(2), 0.9);
        let p = polar_decompose(&a).unwrap();
        assert!((p.t - 0.9).abs() < 1e-12 && p.recomposition_error(&a) < 1e-10);
        let mut g = rng(5);
        let k = random_k0(Group::Su(2), &mut g);
        assert_eq!(polar_decompose(&k).unwrap().t, 0.0);
        for _ in 0..20 {
            let x = random_element(Group::Su(2), &mut g);
            let p = polar_decompose(&x).unwrap();
            assert!(p.recomposition_error(&x) < 1e-8);
            assert!(p.k1.in_k0(1e-8) && p.k2.in_k0(1e-8));
            let ball = ConvexDomain::unit_ball(2);
            let w = x.act_on(&ball).unwrap().apply(&CVec::zeros(2));
            assert!((p.t - atanh_stable(norm(&w))).abs() < 1e-6);
        }
        let s = LieElement::real(&[2.0, 1.0, 1.0, 1.0]).unwrap();
        let p = polar_decompose(&s).unwrap();
        assert!(p.recomposition_error(&s) < 1e-10);
    }

    #[test]
    fn psi_examples() {
        let id = LieElement::identity(Group::Su(2));
        assert!(dist(&boundary_map_psi(&id).unwrap().point, &basis(2, 0)) < 1e-12);
        let w = CMat::from_row_slice(2, 2, &[c(0.0, 0.0), c(-1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]);
        let k = LieElement::new(rotation_block(&w), Group::Su(2)).unwrap();
        assert!(dist(&boundary_map_psi(&k).unwrap().point, &basis(2, 1)) < 1e-12);
        let mut g = rng(9);
        for _ in 0..10 {
            let k = random_k0(Group::Su(2), &mut g);
            let m = random_m_a(Group::Su(2), &mut g);
            assert!(m.in_k0(1e-12));
            let a = boundary_map_psi(&k).unwrap().point;
            let b = boundary_map_psi(&k.mul(&m).unwrap()).unwrap().point;
            assert!(dist(&a, &b) < 1e-10);
        }
        assert!(boundary_map_psi(&axis(Group::Su(2), 1.0)).is_err());
    }

    #[test]
    fn ad_norm_of_axis() {
        assert_eq!(algebra_basis(Group::Su(2)).len(), 8);
        assert_eq!(algebra_basis(Group::Sl2R).len(), 3);
        let a = axis(Group::Su(2), 0.7);
        assert!((ad_norm(&a).ln() - 1.4).abs() < 1e-10);
        let a = axis(Group::Sl2R, 0.7);
        assert!((ad_norm(&a).ln() - 1.4).abs() < 1e-10);
    }

    #[test]
    fn dimension_examples() {
        let e = dimension_gap_report(&ConvexDomain::ellipsoid(&[1, 2]).unwrap()).unwrap();
        assert_eq!((e.limit_dim, e.boundary_dim, e.holds, e.ball), (1, 3, true, false));
        let b = dimension_gap_report(&ConvexDomain::unit_ball(2)).unwrap();
        assert!(b.ball && b.limit_dim == 3);
        let e = dimension_gap_report(&ConvexDomain::ellipsoid(&[1, 1, 2]).unwrap()).unwrap();
        assert_eq!((e.limit_dim, e.boundary_dim), (3, 5));
        assert!(dimension_gap_report(&ConvexDomain::ellipsoid(&[2, 2]).unwrap()).is_err());
    }

    #[test]
    fn ball_qi_is_isometric() {
        let b = ConvexDomain::unit_ball(2);
        let mut g = rng(3);
        let sample: Vec<_> = (0..12).map(|_| random_element(Group::Su(2), &mut g)).collect();
        let q = orbit_symmetric_space_qi(&b, &sample, &CVec::zeros(2)).unwrap();
        assert!((q.a - 1.0).abs() < 1e-6 && q.b < 1e-6, "{q:?}");
        let one = orbit_symmetric_space_qi(&b, &sample[..1], &CVec::zeros(2)).unwrap();
        assert_eq!(one.a, 1.0);
        let f = ad_distance_fit(&b, &sample, &CVec::zeros(2)).unwrap();
        assert!((f.alpha - 0.5).abs() < 1e-6 && f.beta.abs() < 1e-6, "{f:?}");
    }
}

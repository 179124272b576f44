//! Automorphisms of balls and generalized ellipsoids, their classification and dynamics.
//!
//! Ball automorphisms are projective actions of U(d,1) matrices on the unit-ball model; ellipsoid
//! automorphisms lift a ball automorphism of the exponent-one block and twist the remaining
//! coordinates by a root of the Jacobian factor. Both are conjugated into the user's coordinates
//! by the affine map that realises the domain from its model.

mod classify;
mod dynamics;

pub use classify::{attracting_hyperplane, classify, classify_with, ClassificationResult, ClassifyOptions, MapType, OrbitDiagnostics};
pub use dynamics::{
    axis_shadow, construct_hyperbolic, face_clusters, limit_set_sample, north_south_check, orbit_qi_constants,
    ping_pong_certificate, shadow_parameters, stability_probe, AxisShadow, Construction, FaceCluster, LimitSet,
    PingPongCertificate, QiFit, ShadowData, StabilityReport,
};

pub(crate) use classify::gap;
pub(crate) use dynamics::{fit_sandwich, random_su};

use crate::domain_geometry::{AffineMap, ConvexDomain};
use crate::error::{check_dim, Error, Result};
use crate::kobayashi_metric::{canonical, Canon};
use crate::linalg::*;

/// Tolerance for the form-preservation check, relative to |M|^2.
const FORM_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub enum AutKind {
    /// Projective action of a matrix preserving diag(1, ..., 1, -1) on the unit-ball model.
    BallMobius { matrix: CMat },
    /// Ball automorphism `ball` of the exponent-one coordinates, unitary `rest` on the others,
    /// twisted by the principal root (1 / (c z + d))^{1/m}.
    EllipsoidLift { exponents: Vec<u32>, ball: CMat, rest: CMat },
    /// Maps listed outermost first; the empty list is the identity.
    Composition(Vec<Automorphism>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Automorphism {
    kind: AutKind,
    domain: ConvexDomain,
}

/// diag(1, ..., 1, -1) of size n.
pub fn form_j(n: usize) -> CMat {
    let mut j = identity(n);
    j[(n - 1, n - 1)] = c(-1.0, 0.0);
    j
}

/// |M* J M - J| relative to max(1, |M|^2).
pub fn form_defect(m: &CMat) -> f64 {
    let j = form_j(m.nrows());
    let e = m.adjoint() * &j * m - &j;
    frob(&e) / frob(m).powi(2).max(1.0)
}

/// Boost of the unit ball moving 0 to tanh(s) u, for a unit vector u.
pub fn boost_matrix(u: &CVec, s: f64) -> CMat {
    let d = u.len();
    let u = unit(u);
    let mut m = CMat::zeros(d + 1, d + 1);
    let uu = &u * u.adjoint();
    m.view_mut((0, 0), (d, d)).copy_from(&(identity(d) + uu.map(|x| x * (s.cosh() - 1.0))));
    for i in 0..d {
        m[(i, d)] = u[i] * s.sinh();
        m[(d, i)] = u[i].conj() * s.sinh();
    }
    m[(d, d)] = c(s.cosh(), 0.0);
    m
}

/// The one-parameter dilation a_s along e1.
pub fn dilation_matrix(d: usize, s: f64) -> CMat {
    boost_matrix(&basis(d, 0), s)
}

/// Nilpotent generator of the Heisenberg translations fixing e1.
pub fn heisenberg_generator(d: usize) -> CMat {
    let mut x = CMat::zeros(d + 1, d + 1);
    x[(0, 0)] = I;
    x[(0, d)] = -I;
    x[(d, 0)] = I;
    x[(d, d)] = -I;
    x
}

/// exp(t X) = I + t X for the Heisenberg generator.
pub fn heisenberg_matrix(d: usize, t: f64) -> CMat {
    identity(d + 1) + heisenberg_generator(d).map(|x| x * t)
}

/// diag(U, 1): a unitary rotation fixing the centre.
pub fn rotation_matrix(u: &CMat) -> CMat {
    let d = u.nrows();
    let mut m = identity(d + 1);
    m.view_mut((0, 0), (d, d)).copy_from(u);
    m
}

/// The inverse of an exact U(d,1) matrix, J M* J.
pub fn group_inverse(m: &CMat) -> CMat {
    let j = form_j(m.nrows());
    &j * m.adjoint() * &j
}

enum Model {
    Ball,
    Ellipsoid(Vec<u32>),
}

fn model(dom: &ConvexDomain) -> Result<(Model, AffineMap)> {
    let (canon, map) = canonical(dom);
    match canon {
        Canon::UnitBall => Ok((Model::Ball, map)),
        Canon::Ellipsoid(e) => Ok((Model::Ellipsoid(e.to_vec()), map)),
        Canon::Other(_) => Err(Error::Precondition("automorphisms are modelled only on balls, ellipsoids and their affine images".into())),
    }
}

fn mobius(m: &CMat, z: &CVec) -> CVec {
    let d = z.len();
    let mut h = CVec::from_element(d + 1, c(1.0, 0.0));
    h.rows_mut(0, d).copy_from(z);
    let y = m * h;
    let w = y[d];
    CVec::from_iterator(d, (0..d).map(|i| y[i] / w))
}

fn mobius_derivative(m: &CMat, z: &CVec, v: &CVec) -> CVec {
    let d = z.len();
    let g = mobius(m, z);
    let a = m.view((0, 0), (d, d));
    let cr = m.view((d, 0), (1, d));
    let w = (cr * z)[0] + m[(d, d)];
    let cv = (cr * v)[0];
    (a * v - g.map(|x| x * cv)).map(|x| x / w)
}

fn split(exps: &[u32]) -> (Vec<usize>, Vec<usize>) {
    let v: Vec<usize> = (0..exps.len()).filter(|&i| exps[i] == 1).collect();
    let r: Vec<usize> = (0..exps.len()).filter(|&i| exps[i] != 1).collect();
    (v, r)
}

fn gather(z: &CVec, idx: &[usize]) -> CVec {
    CVec::from_iterator(idx.len(), idx.iter().map(|&i| z[i]))
}

fn lift_apply(exps: &[u32], ball: &CMat, rest: &CMat, z: &CVec) -> CVec {
    let (vi, ri) = split(exps);
    let k = vi.len();
    let zeta = gather(z, &vi);
    let w = if k == 0 { ball[(0, 0)] } else { (ball.view((k, 0), (1, k)) * &zeta)[0] + ball[(k, k)] };
    let mut out = z.clone();
    if k > 0 {
        let g = mobius(ball, &zeta);
        for (a, &i) in vi.iter().enumerate() {
            out[i] = g[a];
        }
    }
    let y = rest * gather(z, &ri);
    for (a, &i) in ri.iter().enumerate() {
        out[i] = y[a] * (c(1.0, 0.0) / w).powf(1.0 / exps[i] as f64);
    }
    out
}

fn lift_derivative(exps: &[u32], ball: &CMat, rest: &CMat, z: &CVec, v: &CVec) -> CVec {
    let (vi, ri) = split(exps);
    let k = vi.len();
    let zeta = gather(z, &vi);
    let dz = gather(v, &vi);
    let (w, dw) = if k == 0 {
        (ball[(0, 0)], c(0.0, 0.0))
    } else {
        let cr = ball.view((k, 0), (1, k));
        ((cr * &zeta)[0] + ball[(k, k)], (cr * &dz)[0])
    };
    let mut out = CVec::zeros(z.len());
    if k > 0 {
        let dg = mobius_derivative(ball, &zeta, &dz);
        for (a, &i) in vi.iter().enumerate() {
            out[i] = dg[a];
        }
    }
    let y = rest * gather(z, &ri);
    let dy = rest * gather(v, &ri);
    for (a, &i) in ri.iter().enumerate() {
        let m = exps[i] as f64;
        let s = (c(1.0, 0.0) / w).powf(1.0 / m);
        let ds = -s * dw / (w * m);
        out[i] = dy[a] * s + y[a] * ds;
    }
    out
}

impl Automorphism {
    /// Projective action of `matrix` on the unit-ball model of `dom`.
    pub fn ball_mobius(dom: &ConvexDomain, matrix: CMat) -> Result<Self> {
        let (m, _) = model(dom)?;
        if !matches!(m, Model::Ball) {
            return Err(Error::Precondition("ball_mobius needs a ball or an affine image of one".into()));
        }
        let d = dom.dim();
        if matrix.nrows() != d + 1 || matrix.ncols() != d + 1 {
            return Err(Error::DimensionMismatch { expected: d + 1, got: matrix.nrows() });
        }
        if matrix.iter().any(|x| !x.re.is_finite() || !x.im.is_finite()) {
            return Err(Error::invalid("matrix", "entries must be finite"));
        }
        let defect = form_defect(&matrix);
        if defect > FORM_TOL {
            return Err(Error::invalid("matrix", format!("does not preserve the (d,1) form (defect {defect:.3e})")));
        }
        let det = matrix.determinant().norm();
        if (det - 1.0).abs() > FORM_TOL * frob(&matrix).powi(2).max(1.0) {
            return Err(Error::invalid("matrix", format!("|det| = {det} is not 1")));
        }
        Ok(Automorphism { kind: AutKind::BallMobius { matrix }, domain: dom.clone() })
    }

    /// Lift of a ball automorphism of the exponent-one block of an ellipsoid.
    ///
    /// `ball` is (k+1)x(k+1) with k the number of unit exponents; `rest` is a unitary on the other
    /// coordinates that only mixes coordinates carrying the same exponent.
    pub fn ellipsoid_lift(dom: &ConvexDomain, ball: CMat, rest: CMat) -> Result<Self> {
        let exps = match model(dom)? {
            (Model::Ellipsoid(e), _) => e,
            (Model::Ball, _) => vec![1; dom.dim()],
        };
        let (vi, ri) = split(&exps);
        let k = vi.len();
        if ball.nrows() != k + 1 || ball.ncols() != k + 1 {
            return Err(Error::DimensionMismatch { expected: k + 1, got: ball.nrows() });
        }
        if rest.nrows() != ri.len() || rest.ncols() != ri.len() {
            return Err(Error::DimensionMismatch { expected: ri.len(), got: rest.nrows() });
        }
        if k > 0 && form_defect(&ball) > FORM_TOL {
            return Err(Error::invalid("ball_part", "does not preserve the (k,1) form"));
        }
        if k == 0 && (ball[(0, 0)].norm() - 1.0).abs() > FORM_TOL {
            return Err(Error::invalid("ball_part", "must be a unit scalar when there is no exponent-one block"));
        }
        let e = rest.adjoint() * &rest - identity(ri.len());
        if frob(&e) > FORM_TOL {
            return Err(Error::invalid("unitary_part", "must be unitary"));
        }
        for (a, &i) in ri.iter().enumerate() {
            for (b, &j) in ri.iter().enumerate() {
                if exps[i] != exps[j] && rest[(a, b)].norm() > FORM_TOL {
                    return Err(Error::invalid("unitary_part", "mixes coordinates with different exponents"));
                }
            }
        }
        if !ri.is_empty() && k > 0 {
            // c z + d ranges over the disc of centre d and radius |c|; the principal root is
            // continuous there iff that disc misses the closed negative real axis.
            let d = ball[(k, k)];
            let r = ball.view((k, 0), (1, k)).iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
            if d.re < 0.0 && d.im.abs() <= r {
                return Err(Error::BranchJump(format!(
                    "denominator disc (centre {d}, radius {r:.6}) meets the negative real axis"
                )));
            }
        }
        Ok(Automorphism { kind: AutKind::EllipsoidLift { exponents: exps, ball, rest }, domain: dom.clone() })
    }

    /// E_{1,m}-style lift from a disc automorphism z -> e^{i theta} (z - a) / (1 - conj(a) z) and a
    /// unit scalar on the second block.
    pub fn disc_lift(dom: &ConvexDomain, a: C64, theta: f64, rest: CMat) -> Result<Self> {
        if !(a.norm() < 1.0) {
            return Err(Error::invalid("a", "must lie in the unit disc"));
        }
        let s = 1.0 / (1.0 - a.norm_sqr()).sqrt();
        let e = C64::from_polar(1.0, theta);
        let ball = CMat::from_row_slice(2, 2, &[e * s, -e * a * s, -a.conj() * s, c(s, 0.0)]);
        Self::ellipsoid_lift(dom, ball, rest)
    }

    pub fn identity(dom: &ConvexDomain) -> Self {
        Automorphism { kind: AutKind::Composition(Vec::new()), domain: dom.clone() }
    }

    pub fn kind(&self) -> &AutKind {
        &self.kind
    }

    pub fn domain(&self) -> &ConvexDomain {
        &self.domain
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    /// Model matrix for ball kinds; products of ball kinds are merged, so this is also their matrix.
    pub fn matrix(&self) -> Option<&CMat> {
        match &self.kind {
            AutKind::BallMobius { matrix } => Some(matrix),
            _ => None,
        }
    }

    fn map(&self) -> AffineMap {
        model(&self.domain).map(|(_, m)| m).expect("validated at construction")
    }

    /// f(z); no membership check, so boundary points and limits can be pushed as well.
    pub fn apply(&self, z: &CVec) -> CVec {
        match &self.kind {
            AutKind::Composition(list) => list.iter().rev().fold(z.clone(), |p, f| f.apply(&p)),
            AutKind::BallMobius { matrix } => {
                let map = self.map();
                map.apply(&mobius(matrix, &map.apply_inverse(z)))
            }
            AutKind::EllipsoidLift { exponents, ball, rest } => {
                let map = self.map();
                map.apply(&lift_apply(exponents, ball, rest, &map.apply_inverse(z)))
            }
        }
    }

    /// f(z) for a point of the domain, with dimension and membership checks.
    pub fn try_apply(&self, z: &CVec) -> Result<CVec> {
        check_dim(self.dim(), z.len())?;
        if !self.domain.is_inside(z) {
            return Err(Error::NotInDomain("argument of the automorphism".into()));
        }
        Ok(self.apply(z))
    }

    /// Exact derivative Df(z) v.
    pub fn derivative(&self, z: &CVec, v: &CVec) -> CVec {
        match &self.kind {
            AutKind::Composition(list) => {
                let mut p = z.clone();
                let mut w = v.clone();
                for f in list.iter().rev() {
                    w = f.derivative(&p, &w);
                    p = f.apply(&p);
                }
                w
            }
            AutKind::BallMobius { matrix } => {
                let map = self.map();
                map.apply_linear(&mobius_derivative(matrix, &map.apply_inverse(z), &map.apply_linear_inverse(v)))
            }
            AutKind::EllipsoidLift { exponents, ball, rest } => {
                let map = self.map();
                let zb = map.apply_inverse(z);
                map.apply_linear(&lift_derivative(exponents, ball, rest, &zb, &map.apply_linear_inverse(v)))
            }
        }
    }

    /// Complex Jacobian at z, columns Df(z) e_j.
    pub fn jacobian(&self, z: &CVec) -> CMat {
        let d = self.dim();
        CMat::from_columns(&(0..d).map(|j| self.derivative(z, &basis(d, j))).collect::<Vec<_>>())
    }

    pub fn inverse(&self) -> Automorphism {
        let kind = match &self.kind {
            AutKind::BallMobius { matrix } => AutKind::BallMobius { matrix: group_inverse(matrix) },
            AutKind::EllipsoidLift { exponents, ball, rest } => {
                let k = ball.nrows() - 1;
                let bi = if k == 0 { ball.map(|x| c(1.0, 0.0) / x) } else { group_inverse(ball) };
                AutKind::EllipsoidLift { exponents: exponents.clone(), ball: bi, rest: rest.adjoint() }
            }
            AutKind::Composition(list) => AutKind::Composition(list.iter().rev().map(|f| f.inverse()).collect()),
        };
        Automorphism { kind, domain: self.domain.clone() }
    }

    /// self after inner. Ball kinds are merged into one matrix.
    pub fn compose(&self, inner: &Automorphism) -> Result<Automorphism> {
        if self.domain != inner.domain {
            return Err(Error::Precondition("automorphisms act on different domains".into()));
        }
        let kind = match (&self.kind, &inner.kind) {
            (AutKind::BallMobius { matrix: a }, AutKind::BallMobius { matrix: b }) => AutKind::BallMobius { matrix: a * b },
            (AutKind::Composition(l), _) if l.is_empty() => inner.kind.clone(),
            (_, AutKind::Composition(l)) if l.is_empty() => self.kind.clone(),
            _ => {
                let mut list = Vec::new();
                for f in [self, inner] {
                    match &f.kind {
                        AutKind::Composition(l) => list.extend(l.iter().cloned()),
                        _ => list.push(f.clone()),
                    }
                }
                AutKind::Composition(list)
            }
        };
        Ok(Automorphism { kind, domain: self.domain.clone() })
    }

    /// self^n for any integer n.
    pub fn power(&self, n: i64) -> Automorphism {
        let base = if n < 0 { self.inverse() } else { self.clone() };
        let mut k = n.unsigned_abs();
        if let AutKind::BallMobius { matrix } = &base.kind {
            let mut acc = identity(matrix.nrows());
            let mut sq = matrix.clone();
            while k > 0 {
                if k & 1 == 1 {
                    acc = &acc * &sq;
                }
                sq = &sq * &sq;
                k >>= 1;
            }
            return Automorphism { kind: AutKind::BallMobius { matrix: acc }, domain: self.domain.clone() };
        }
        let list = (0..k).map(|_| base.clone()).collect();
        Automorphism { kind: AutKind::Composition(list), domain: self.domain.clone() }
    }

    /// Conjugate g self g^{-1}.
    pub fn conjugate_by(&self, g: &Automorphism) -> Result<Automorphism> {
        g.compose(self)?.compose(&g.inverse())
    }

    /// Largest |f(f^{-1}(z)) - z| over the given points.
    pub fn roundtrip_error(&self, pts: &[CVec]) -> f64 {
        let inv = self.inverse();
        pts.iter().map(|z| dist(&self.apply(&inv.apply(z)), z)).fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kobayashi_metric::distance;

    fn e12() -> ConvexDomain {
        ConvexDomain::ellipsoid(&[1, 2]).unwrap()
    }

    #[test]
    fn disc_boost_sends_zero_to_tanh() {
        let disc = ConvexDomain::unit_ball(1);
        let s = 0.7f64;
        let m = CMat::from_row_slice(2, 2, &[c(s.cosh(), 0.0), c(s.sinh(), 0.0), c(s.sinh(), 0.0), c(s.cosh(), 0.0)]);
        let f = Automorphism::ball_mobius(&disc, m).unwrap();
        assert!((f.apply(&cvec_re(&[0.0]))[0] - c(s.tanh(), 0.0)).norm() < 1e-15);
        let id = Automorphism::ball_mobius(&disc, identity(2)).unwrap();
        let z = cvec(&[(0.3, -0.2)]);
        assert!(dist(&id.apply(&z), &z) < 1e-16);
    }

    #[test]
    fn rejects_matrices_outside_the_group() {
        let b = ConvexDomain::unit_ball(2);
        let mut m = dilation_matrix(2, 0.5);
        m[(0, 1)] = c(0.1, 0.0);
        assert!(Automorphism::ball_mobius(&b, m).is_err());
        assert!(Automorphism::ball_mobius(&b, identity(3).map(|x| x * 2.0)).is_err());
        assert!(Automorphism::ball_mobius(&b, identity(2)).is_err());
    }

    #[test]
    fn rotation_fixes_centre_and_heisenberg_fixes_e1() {
        let b = ConvexDomain::unit_ball(2);
        let u = CMat::from_diagonal(&CVec::from_vec(vec![C64::from_polar(1.0, 0.4), C64::from_polar(1.0, -1.1)]));
        let r = Automorphism::ball_mobius(&b, rotation_matrix(&u)).unwrap();
        assert!(norm(&r.apply(&CVec::zeros(2))) < 1e-16);
        let h = Automorphism::ball_mobius(&b, heisenberg_matrix(2, 1.0)).unwrap();
        assert!(dist(&h.apply(&basis(2, 0)), &basis(2, 0)) < 1e-15);
        assert!(frob(&(heisenberg_generator(2) * heisenberg_generator(2))) == 0.0);
    }

    #[test]
    fn inverse_composition_and_power() {
        let b = ConvexDomain::unit_ball(2);
        let f = Automorphism::ball_mobius(&b, boost_matrix(&cvec(&[(0.6, 0.2), (-0.3, 0.5)]), 0.8)).unwrap();
        let g = Automorphism::ball_mobius(&b, heisenberg_matrix(2, 0.7)).unwrap();
        let pts = b.interior_sample(200, 3);
        assert!(f.roundtrip_error(&pts) < 1e-10);
        let fg = f.compose(&g).unwrap();
        assert!(fg.matrix().is_some());
        for z in &pts {
            assert!(dist(&fg.apply(z), &f.apply(&g.apply(z))) < 1e-12);
        }
        let id = Automorphism::identity(&b);
        assert!(pts.iter().all(|z| dist(&id.compose(&g).unwrap().apply(z), &g.apply(z)) < 1e-15));
        let p3 = f.power(3);
        let z = &pts[0];
        assert!(dist(&p3.apply(z), &f.apply(&f.apply(&f.apply(z)))) < 1e-12);
        assert!(dist(&f.power(-2).apply(&f.power(2).apply(z)), z) < 1e-12);
    }

    #[test]
    fn ball_maps_are_isometries() {
        let b = ConvexDomain::ball(cvec_re(&[0.5, -1.0]), 2.0).unwrap();
        let f = Automorphism::ball_mobius(&b, boost_matrix(&cvec(&[(0.0, 1.0), (1.0, 0.0)]), 1.3)).unwrap();
        let pts = b.interior_sample(20, 9);
        for w in pts.windows(2) {
            let d0 = distance(&b, &w[0], &w[1]).unwrap();
            let d1 = distance(&b, &f.apply(&w[0]), &f.apply(&w[1])).unwrap();
            assert!(d0.overlaps(&d1), "{d0:?} {d1:?}");
            assert!(b.is_inside(&f.apply(&w[0])));
        }
    }

    #[test]
    fn derivative_matches_difference_quotient() {
        let e = e12();
        let f = Automorphism::disc_lift(&e, c(0.3, -0.4), 0.9, identity(1)).unwrap();
        let b = ConvexDomain::unit_ball(2);
        let g = Automorphism::ball_mobius(&b, boost_matrix(&cvec(&[(0.6, 0.2), (-0.3, 0.5)]), 0.8)).unwrap();
        for (h, z) in [(&f, cvec(&[(0.2, 0.1), (0.3, -0.2)])), (&g, cvec(&[(0.2, 0.1), (0.3, -0.2)]))] {
            let v = cvec(&[(0.3, 0.7), (-0.5, 0.1)]);
            let eps = 1e-6;
            let fd = (h.apply(&(&z + v.map(|x| x * eps))) - h.apply(&(&z - v.map(|x| x * eps)))).map(|x| x / (2.0 * eps));
            assert!(dist(&fd, &h.derivative(&z, &v)) < 1e-8);
        }
    }

    #[test]
    fn ellipsoid_lifts_preserve_the_defining_function() {
        let e = e12();
        let rot = Automorphism::disc_lift(&e, c(0.0, 0.0), 1.2, identity(1)).unwrap();
        let z = cvec(&[(0.3, 0.2), (0.5, -0.4)]);
        let w = rot.apply(&z);
        assert!((w[1] - z[1]).norm() < 1e-15);
        assert!((e.defining_function(&w).unwrap() - e.defining_function(&z).unwrap()).abs() < 1e-14);
        let boost = Automorphism::disc_lift(&e, c(-0.5, 0.0), 0.0, identity(1)).unwrap();
        let o = boost.apply(&CVec::zeros(2));
        assert!((o[0] - c(0.5, 0.0)).norm() < 1e-15 && o[1].norm() == 0.0);
        let pts = e.interior_sample(10_000, 5);
        assert!(pts.iter().all(|z| e.is_inside(&boost.apply(z))));
        assert!(boost.roundtrip_error(&pts) < 1e-10);
        // Boundary goes to boundary.
        let bd = e.boundary_sample(64, 2);
        for x in &bd {
            assert!(e.defining_function(&boost.apply(x)).unwrap().abs() < 1e-12);
        }
    }

    #[test]
    fn lift_constructor_checks() {
        let e = e12();
        assert!(Automorphism::ellipsoid_lift(&e, identity(2), identity(1)).is_ok());
        assert!(Automorphism::ellipsoid_lift(&e, identity(3), identity(1)).is_err());
        assert!(Automorphism::ellipsoid_lift(&e, identity(2), identity(1).map(|x| x * 2.0)).is_err());
        // Phase e^{i pi} on d with a boost puts the denominator disc across the cut.
        let s = 0.5f64;
        let m = CMat::from_row_slice(2, 2, &[c(-s.cosh(), 0.0), c(-s.sinh(), 0.0), c(-s.sinh(), 0.0), c(-s.cosh(), 0.0)]);
        assert!(matches!(Automorphism::ellipsoid_lift(&e, m, identity(1)), Err(Error::BranchJump(_))));
        let e3 = ConvexDomain::ellipsoid(&[1, 2, 3]).unwrap();
        let mix = CMat::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]);
        assert!(Automorphism::ellipsoid_lift(&e3, identity(2), mix).is_err());
    }

    #[test]
    fn compose_rejects_other_domains() {
        let a = Automorphism::identity(&ConvexDomain::unit_ball(2));
        let b = Automorphism::identity(&e12());
        assert!(a.compose(&b).is_err());
    }
}

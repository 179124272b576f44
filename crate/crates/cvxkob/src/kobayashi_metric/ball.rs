//! Brackets on the unit ball B_d. The upper bound is the Poincare distance in the slice disc of
//! the complex line through the points; the lower bound projects holomorphically after moving
//! one point to the origin. On the ball the two coincide, up to rounding.

use crate::linalg::*;

/// 1 - |z|^2 without cancellation in the product form.
pub(crate) fn one_minus_sq(z: &CVec) -> f64 {
    let n = norm(z);
    (1.0 - n) * (1.0 + n)
}

/// Poincare distance of the unit disc, given 1 - |x|^2 and 1 - |y|^2 separately.
pub(crate) fn disc_dist(x: C64, y: C64, omx: f64, omy: f64) -> f64 {
    let den = (c(1.0, 0.0) - x.conj() * y).norm();
    let s = (x - y).norm() / den;
    if s < 0.5 {
        s.atanh()
    } else {
        let a = omx * omy / (den * den);
        0.5 * ((1.0 + s) * (1.0 + s) / a).ln()
    }
}

/// Distance in the right half-plane {Re w > 0}.
pub(crate) fn half_plane_dist(a: C64, b: C64) -> f64 {
    let den = (a + b.conj()).norm();
    let s = (a - b).norm() / den;
    if s < 0.5 {
        s.atanh()
    } else {
        let q = 4.0 * a.re * b.re / (den * den);
        0.5 * ((1.0 + s) * (1.0 + s) / q).ln()
    }
}

/// Outward padding covering the rounding of 1 - |z|^2 near the sphere.
pub(crate) fn pad(k: f64, om: f64) -> f64 {
    1e-13 * (1.0 + k) + 8e-16 / om.max(1e-300)
}

pub(crate) fn distance_upper(z: &CVec, w: &CVec) -> f64 {
    let h = w - z;
    let l = norm(&h);
    if l == 0.0 {
        return 0.0;
    }
    let u = scale(&h, 1.0 / l);
    let p = inner(z, &u);
    let omz = one_minus_sq(z);
    let omw = one_minus_sq(w);
    let rho2 = omz + p.norm_sqr();
    let rho = rho2.sqrt();
    let x = p / rho;
    let y = (p + l) / rho;
    disc_dist(x, y, omz / rho2, omw / rho2)
}

pub(crate) fn distance_lower(z: &CVec, w: &CVec) -> f64 {
    let h = w - z;
    let omz = one_minus_sq(z);
    let omw = one_minus_sq(w);
    let num = norm_sqr(&h) * omz + inner(&h, z).norm_sqr();
    let den = (c(1.0, 0.0) - inner(w, z)).norm_sqr();
    let s = (num / den).sqrt();
    if s < 0.5 {
        s.atanh()
    } else {
        let a = omz * omw / den;
        0.5 * ((1.0 + s) * (1.0 + s) / a).ln()
    }
}

pub(crate) fn metric_upper(z: &CVec, v: &CVec) -> f64 {
    let nv = norm(v);
    if nv == 0.0 {
        return 0.0;
    }
    let u = scale(v, 1.0 / nv);
    let omz = one_minus_sq(z);
    let rho = (omz + inner(z, &u).norm_sqr()).sqrt();
    rho * nv / omz
}

pub(crate) fn metric_lower(z: &CVec, v: &CVec) -> f64 {
    let omz = one_minus_sq(z);
    (norm_sqr(v) / omz + inner(v, z).norm_sqr() / (omz * omz)).sqrt()
}

/// Closed form used only as an independent test oracle: arctanh |phi_z(w)|.
#[cfg(test)]
pub(crate) fn oracle(z: &CVec, w: &CVec) -> f64 {
    let zz = norm_sqr(z);
    let ww = norm_sqr(w);
    let q = (c(1.0, 0.0) - inner(w, z)).norm_sqr();
    let s2 = 1.0 - (1.0 - zz) * (1.0 - ww) / q;
    s2.max(0.0).sqrt().atanh()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples_from_closed_forms() {
        let z = CVec::zeros(2);
        let w = cvec_re(&[0.5, 0.0]);
        assert!((distance_upper(&z, &w) - 0.5f64.atanh()).abs() < 1e-15);
        assert!((distance_lower(&z, &w) - 0.549_306_144_334_054_8).abs() < 1e-15);
        let a = cvec_re(&[0.3, 0.0]);
        let b = cvec_re(&[0.0, 0.3]);
        // |phi_a(b)|^2 = 1 - 0.91^2 / 1
        let want = (1.0f64 - 0.91 * 0.91).sqrt().atanh();
        assert!((distance_upper(&a, &b) - want).abs() < 1e-14);
        assert!((distance_lower(&a, &b) - want).abs() < 1e-14);
        assert!((metric_upper(&w, &basis(2, 0)) - 4.0 / 3.0).abs() < 1e-15);
        assert!((metric_lower(&w, &basis(2, 0)) - 4.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn collinear_differences() {
        let x = cvec_re(&[0.9, 0.0]);
        let y = cvec_re(&[0.99, 0.0]);
        let want = 0.99f64.atanh() - 0.9f64.atanh();
        assert!((distance_upper(&x, &y) - want).abs() < 1e-13);
        assert!((distance_lower(&x, &y) - want).abs() < 1e-13);
    }

    #[test]
    fn near_boundary_is_stable() {
        let t = 10.0f64;
        let x = cvec_re(&[1.0 - (-2.0 * t).exp(), 0.0]);
        let k = distance_upper(&CVec::zeros(2), &x);
        assert!((k - (t + 0.5 * (2.0 - (-2.0 * t).exp()).ln())).abs() < 1e-6);
    }
}

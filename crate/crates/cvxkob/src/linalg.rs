//! Small complex linear-algebra and optimisation helpers shared by every module.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::cmp::Ordering;

pub type C64 = Complex64;
pub type CVec = DVector<C64>;
pub type CMat = DMatrix<C64>;

pub const I: C64 = C64 { re: 0.0, im: 1.0 };

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Vector from real coordinates.
pub fn cvec_re(xs: &[f64]) -> CVec {
    CVec::from_iterator(xs.len(), xs.iter().map(|&x| c(x, 0.0)))
}

/// Vector from `(re, im)` pairs.
pub fn cvec(xs: &[(f64, f64)]) -> CVec {
    CVec::from_iterator(xs.len(), xs.iter().map(|&(a, b)| c(a, b)))
}

pub fn basis(d: usize, j: usize) -> CVec {
    let mut v = CVec::zeros(d);
    v[j] = c(1.0, 0.0);
    v
}

/// Hermitian inner product, linear in the first slot: sum a_i conj(b_i).
pub fn inner(a: &CVec, b: &CVec) -> C64 {
    b.dotc(a)
}

/// Real part of the Hermitian product, i.e. the Euclidean inner product on R^{2d}.
pub fn re_inner(a: &CVec, b: &CVec) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.re * y.re + x.im * y.im).sum()
}

pub fn norm(v: &CVec) -> f64 {
    v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

pub fn norm_sqr(v: &CVec) -> f64 {
    v.iter().map(|x| x.norm_sqr()).sum()
}

pub fn dist(a: &CVec, b: &CVec) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt()
}

pub fn unit(v: &CVec) -> CVec {
    let n = norm(v);
    v.map(|x| x / n)
}

pub fn scale(v: &CVec, s: f64) -> CVec {
    v.map(|x| x * s)
}

pub fn is_finite(v: &CVec) -> bool {
    v.iter().all(|x| x.re.is_finite() && x.im.is_finite())
}

/// Spectral norm of a complex matrix.
pub fn opnorm(m: &CMat) -> f64 {
    m.clone().singular_values().max()
}

pub fn frob(m: &CMat) -> f64 {
    m.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

/// Lexicographic comparison on (re_1..re_d, im_1..im_d); coordinates closer than `tol` count as equal.
pub fn lex_cmp(a: &CVec, b: &CVec, tol: f64) -> Ordering {
    let keys = |v: &CVec| -> Vec<f64> {
        v.iter().map(|x| x.re).chain(v.iter().map(|x| x.im)).collect()
    };
    for (x, y) in keys(a).into_iter().zip(keys(b)) {
        if (x - y).abs() > tol {
            return x.partial_cmp(&y).unwrap_or(Ordering::Equal);
        }
    }
    Ordering::Equal
}

/// Component of `v` orthogonal to the orthonormal family `basis` (complex projection).
pub fn orth_complement(v: &CVec, basis: &[CVec]) -> CVec {
    let mut w = v.clone();
    for b in basis {
        let coef = inner(&w, b);
        w -= b.map(|x| x * coef);
    }
    w
}

/// Columns of a unitary matrix whose first columns are the given orthonormal vectors.
pub fn complete_unitary(first: &[CVec], d: usize) -> CMat {
    let mut cols: Vec<CVec> = first.to_vec();
    for j in 0..d {
        if cols.len() == d {
            break;
        }
        let w = orth_complement(&basis(d, j), &cols);
        let w = orth_complement(&w, &cols);
        if norm(&w) > 1e-6 {
            cols.push(unit(&w));
        }
    }
    CMat::from_columns(&cols)
}

/// Deterministic seeded generator used by every sampler in the crate.
pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian<R: Rng>(r: &mut R) -> f64 {
    // Box-Muller; avoids pulling in a distribution crate for one helper.
    let u1: f64 = r.random::<f64>().max(1e-300);
    let u2: f64 = r.random::<f64>();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

pub fn random_cvec<R: Rng>(r: &mut R, d: usize) -> CVec {
    CVec::from_iterator(d, (0..d).map(|_| c(gaussian(r), gaussian(r))))
}

pub fn random_unit<R: Rng>(r: &mut R, d: usize) -> CVec {
    loop {
        let v = random_cvec(r, d);
        let n = norm(&v);
        if n > 1e-8 {
            return v.map(|x| x / n);
        }
    }
}

/// Uniform point of the open unit ball of C^d scaled by `radius`.
pub fn random_in_ball<R: Rng>(r: &mut R, d: usize, radius: f64) -> CVec {
    let u = random_unit(r, d);
    let s: f64 = r.random::<f64>();
    scale(&u, radius * s.powf(1.0 / (2.0 * d as f64)))
}

/// Quasi-uniform seeded direction set on the sphere S^{2d-1}, coordinate axes included.
pub fn direction_set(d: usize, n: usize, seed: u64) -> Vec<CVec> {
    let mut out = Vec::with_capacity(n + 4 * d);
    for j in 0..d {
        for s in [c(1.0, 0.0), c(-1.0, 0.0), c(0.0, 1.0), c(0.0, -1.0)] {
            out.push(basis(d, j).map(|x| x * s));
        }
    }
    let mut g = rng(seed);
    while out.len() < n.max(4 * d) {
        out.push(random_unit(&mut g, d));
    }
    out
}

/// Nelder-Mead minimiser on R^n. Returns the best point and value.
pub fn nelder_mead<F: FnMut(&[f64]) -> f64>(
    mut f: F,
    x0: &[f64],
    step: f64,
    max_evals: usize,
    ftol: f64,
) -> (Vec<f64>, f64) {
    let n = x0.len();
    let mut simplex: Vec<Vec<f64>> = vec![x0.to_vec()];
    for i in 0..n {
        let mut x = x0.to_vec();
        x[i] += step;
        simplex.push(x);
    }
    let mut vals: Vec<f64> = simplex.iter().map(|x| f(x)).collect();
    let mut evals = n + 1;
    while evals < max_evals {
        let mut idx: Vec<usize> = (0..=n).collect();
        idx.sort_by(|&a, &b| vals[a].partial_cmp(&vals[b]).unwrap_or(Ordering::Equal));
        simplex = idx.iter().map(|&i| simplex[i].clone()).collect();
        vals = idx.iter().map(|&i| vals[i]).collect();
        let spread = (vals[n] - vals[0]).abs();
        if spread.is_finite() && spread <= ftol * (1.0 + vals[0].abs()) {
            let size = simplex.iter().map(|x| {
                x.iter().zip(&simplex[0]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
            }).fold(0.0, f64::max);
            if size < 1e-13 * (1.0 + simplex[0].iter().map(|v| v.abs()).fold(0.0, f64::max)) || spread == 0.0 {
                break;
            }
        }
        let mut centroid = vec![0.0; n];
        for x in &simplex[..n] {
            for (cj, xj) in centroid.iter_mut().zip(x) {
                *cj += xj / n as f64;
            }
        }
        let lerp = |t: f64| -> Vec<f64> {
            centroid.iter().zip(&simplex[n]).map(|(c, w)| c + t * (c - w)).collect()
        };
        let xr = lerp(1.0);
        let fr = f(&xr);
        evals += 1;
        if fr < vals[0] {
            let xe = lerp(2.0);
            let fe = f(&xe);
            evals += 1;
            if fe < fr {
                simplex[n] = xe;
                vals[n] = fe;
            } else {
                simplex[n] = xr;
                vals[n] = fr;
            }
        } else if fr < vals[n - 1] {
            simplex[n] = xr;
            vals[n] = fr;
        } else {
            let (xc, fc) = if fr < vals[n] {
                let x = lerp(0.5);
                let v = f(&x);
                (x, v)
            } else {
                let x = lerp(-0.5);
                let v = f(&x);
                (x, v)
            };
            evals += 1;
            if fc < vals[n].min(fr) {
                simplex[n] = xc;
                vals[n] = fc;
            } else {
                let best = simplex[0].clone();
                for i in 1..=n {
                    simplex[i] = simplex[i].iter().zip(&best).map(|(x, b)| b + 0.5 * (x - b)).collect();
                    vals[i] = f(&simplex[i]);
                    evals += 1;
                }
            }
        }
    }
    let mut best = 0;
    for i in 1..vals.len() {
        if vals[i] < vals[best] {
            best = i;
        }
    }
    (simplex[best].clone(), vals[best])
}

/// Golden-section minimisation of a unimodal function on [a, b].
pub fn golden_min<F: FnMut(f64) -> f64>(mut f: F, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = b - g * (b - a);
    let mut x2 = a + g * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    let mut iter = 0;
    while (b - a).abs() > tol * (1.0 + a.abs() + b.abs()) && iter < 200 {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = f(x2);
        }
        iter += 1;
    }
    if f1 <= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Least-squares line fit y = a + b x; returns (a, b, max |residual|).
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let b = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let a = my - b * mx;
    let res = xs.iter().zip(ys).map(|(x, y)| (y - a - b * x).abs()).fold(0.0, f64::max);
    (a, b, res)
}

/// Median of a slice (copied and sorted).
pub fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
    let n = v.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// arctanh written to stay accurate as the argument approaches 1.
pub fn atanh_stable(x: f64) -> f64 {
    if x >= 1.0 {
        return f64::INFINITY;
    }
    0.5 * ((1.0 + x) / (1.0 - x)).ln()
}

/// Format a float with 17 significant digits.
pub fn fmt17(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    format!("{x:.16e}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inner_convention() {
        let a = cvec(&[(0.0, 1.0)]);
        let b = cvec(&[(1.0, 0.0)]);
        assert!((inner(&a, &b) - c(0.0, 1.0)).norm() < 1e-15);
        assert!((inner(&b, &a) - c(0.0, -1.0)).norm() < 1e-15);
    }

    #[test]
    fn nelder_mead_quadratic() {
        let (x, fx) = nelder_mead(|x| (x[0] - 1.0).powi(2) + 3.0 * (x[1] + 2.0).powi(2), &[0.0, 0.0], 0.5, 2000, 1e-16);
        assert!((x[0] - 1.0).abs() < 1e-6 && (x[1] + 2.0).abs() < 1e-6 && fx < 1e-10);
    }

    #[test]
    fn golden_finds_minimum() {
        let (x, _) = golden_min(|x| (x - 0.3).powi(2), -1.0, 2.0, 1e-12);
        assert!((x - 0.3).abs() < 1e-6);
    }

    #[test]
    fn complete_unitary_is_unitary() {
        let v = unit(&cvec(&[(1.0, 1.0), (0.5, -0.2), (0.0, 0.3)]));
        let u = complete_unitary(&[v.clone()], 3);
        let e = u.adjoint() * &u - identity(3);
        assert!(frob(&e) < 1e-12);
        assert!(dist(&u.column(0).into_owned(), &v) < 1e-14);
    }

    #[test]
    fn lex_order() {
        let a = cvec_re(&[1.0, 0.0]);
        let b = cvec_re(&[-1.0, 0.0]);
        assert_eq!(lex_cmp(&a, &b, 1e-12), Ordering::Greater);
    }

    #[test]
    fn fmt_is_seventeen_digits() {
        assert_eq!(fmt17(0.1), "1.0000000000000001e-1");
    }
}

use crate::error::{check_dim, Error, Result};
use crate::linalg::*;

/// Complex affine map z -> linear z + offset, stored with its inverse.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineMap {
    linear: CMat,
    offset: CVec,
    inverse: CMat,
}

/// Maps whose linear part is worse conditioned than this are rejected.
pub const MAX_CONDITION: f64 = 1e12;

impl AffineMap {
    pub fn new(linear: CMat, offset: CVec) -> Result<Self> {
        if !linear.is_square() {
            return Err(Error::invalid("linear", "matrix must be square"));
        }
        check_dim(linear.nrows(), offset.len())?;
        if !linear.iter().all(|x| x.re.is_finite() && x.im.is_finite()) || !is_finite(&offset) {
            return Err(Error::invalid("linear", "non-finite entry"));
        }
        let inverse = linear
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::Degenerate("linear part is singular".into()))?;
        let cond = opnorm(&linear) * opnorm(&inverse);
        if !(cond <= MAX_CONDITION) {
            return Err(Error::Degenerate(format!("condition number {cond:.3e} exceeds {MAX_CONDITION:.0e}")));
        }
        Ok(AffineMap { linear, offset, inverse })
    }

    pub fn identity(d: usize) -> Self {
        AffineMap { linear: identity(d), offset: CVec::zeros(d), inverse: identity(d) }
    }

    pub fn translation(b: CVec) -> Self {
        let d = b.len();
        AffineMap { linear: identity(d), offset: b, inverse: identity(d) }
    }

    pub fn linear_map(m: CMat) -> Result<Self> {
        let d = m.nrows();
        Self::new(m, CVec::zeros(d))
    }

    pub fn dim(&self) -> usize {
        self.offset.len()
    }

    pub fn linear(&self) -> &CMat {
        &self.linear
    }

    pub fn offset(&self) -> &CVec {
        &self.offset
    }

    pub fn inverse_linear(&self) -> &CMat {
        &self.inverse
    }

    pub fn condition(&self) -> f64 {
        opnorm(&self.linear) * opnorm(&self.inverse)
    }

    pub fn apply(&self, z: &CVec) -> CVec {
        &self.linear * z + &self.offset
    }

    pub fn apply_inverse(&self, w: &CVec) -> CVec {
        &self.inverse * (w - &self.offset)
    }

    pub fn apply_linear(&self, v: &CVec) -> CVec {
        &self.linear * v
    }

    pub fn apply_linear_inverse(&self, v: &CVec) -> CVec {
        &self.inverse * v
    }

    /// self after inner: z -> self(inner(z)).
    pub fn compose(&self, inner: &AffineMap) -> Result<AffineMap> {
        check_dim(self.dim(), inner.dim())?;
        Ok(AffineMap {
            linear: &self.linear * &inner.linear,
            offset: &self.linear * &inner.offset + &self.offset,
            inverse: &inner.inverse * &self.inverse,
        })
    }

    pub fn inverse(&self) -> AffineMap {
        AffineMap {
            linear: self.inverse.clone(),
            offset: -(&self.inverse * &self.offset),
            inverse: self.linear.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> AffineMap {
        AffineMap::new(
            CMat::from_row_slice(2, 2, &[c(1.0, 1.0), c(0.5, 0.0), c(0.0, -0.3), c(2.0, 0.0)]),
            cvec(&[(0.1, 0.2), (-0.4, 0.0)]),
        )
        .unwrap()
    }

    #[test]
    fn inverse_roundtrip() {
        let a = sample();
        let z = cvec(&[(0.3, -0.7), (1.1, 0.2)]);
        assert!(dist(&a.apply_inverse(&a.apply(&z)), &z) < 1e-14);
        assert!(dist(&a.inverse().apply(&a.apply(&z)), &z) < 1e-14);
    }

    #[test]
    fn composition_is_associative() {
        let a = sample();
        let b = a.inverse().compose(&AffineMap::translation(cvec_re(&[1.0, 2.0]))).unwrap();
        let z = cvec(&[(0.3, -0.7), (1.1, 0.2)]);
        let l = a.compose(&b).unwrap().compose(&a).unwrap().apply(&z);
        let r = a.compose(&b.compose(&a).unwrap()).unwrap().apply(&z);
        assert!(dist(&l, &r) < 1e-13);
    }

    #[test]
    fn rejects_singular_and_ill_conditioned() {
        let s = CMat::from_row_slice(2, 2, &[c(1.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(1.0, 0.0)]);
        assert!(AffineMap::linear_map(s).is_err());
        let m = CMat::from_diagonal(&cvec_re(&[1.0, 1e-13]));
        assert!(AffineMap::linear_map(m).is_err());
    }
}

//! Positive semidefinite helpers for covariance domination.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

/// Residual norm above which a vector is treated as outside the range.
pub const RANGE_TOLERANCE: f64 = 1e-9;

/// Eigenvalues below this fraction of the largest one count as zero.
const RELATIVE_RANK_TOLERANCE: f64 = 1e-10;

/// Spectral pseudo-inverse of a symmetric positive semidefinite matrix.
#[derive(Clone, Debug)]
pub struct PsdPseudoInverse {
    /// Eigenpairs kept in the range, `(λ, v)` with `λ > 0`.
    range: Vec<(f64, DVector<f64>)>,
}

impl PsdPseudoInverse {
    pub fn new(m: &DMatrix<f64>) -> Self {
        let eigen = SymmetricEigen::new(m.clone());
        let top = eigen.eigenvalues.iter().cloned().fold(0.0, f64::max);
        let range = eigen
            .eigenvalues
            .iter()
            .enumerate()
            .filter(|&(_, &l)| top > 0.0 && l > top * RELATIVE_RANK_TOLERANCE)
            .map(|(k, &l)| (l, eigen.eigenvectors.column(k).into_owned()))
            .collect();
        PsdPseudoInverse { range }
    }

    pub fn rank(&self) -> usize {
        self.range.len()
    }

    /// Norm of `u` minus its projection onto the range.
    pub fn residual(&self, u: &DVector<f64>) -> f64 {
        let mut r = u.clone();
        for (_, v) in &self.range {
            r.axpy(-v.dot(u), v, 1.0);
        }
        r.norm()
    }

    pub fn in_range(&self, u: &DVector<f64>) -> bool {
        self.residual(u) <= RANGE_TOLERANCE
    }

    /// `uᵀ M^† u`, or `None` when `u` leaves the range of `M`.
    pub fn quadratic_form(&self, u: &DVector<f64>) -> Option<f64> {
        if !self.in_range(u) {
            return None;
        }
        Some(self.range.iter().map(|(l, v)| v.dot(u).powi(2) / l).sum())
    }

    /// `(M^†)^{1/2}`.
    pub fn inverse_sqrt(&self, dim: usize) -> DMatrix<f64> {
        let mut w = DMatrix::zeros(dim, dim);
        for (l, v) in &self.range {
            w.ger(1.0 / l.sqrt(), v, v, 1.0);
        }
        w
    }
}

/// Largest `c ≥ 0` with `m ⪰ c · target`, for PSD `m` and `target`.
///
/// Equals `1 / λ_max(M^{†/2} T M^{†/2})` when the range of `target` lies in
/// the range of `m`, 0 otherwise, and `+∞` for `target = 0`.
pub fn domination_value(m: &DMatrix<f64>, target: &DMatrix<f64>) -> f64 {
    let pinv = PsdPseudoInverse::new(m);
    let t = PsdPseudoInverse::new(target);
    if t.rank() == 0 {
        return f64::INFINITY;
    }
    if t.range.iter().any(|(_, v)| !pinv.in_range(v)) {
        return 0.0;
    }
    let w = pinv.inverse_sqrt(m.nrows());
    let s = &w * target * &w;
    let s = (&s + s.transpose()) * 0.5;
    let top = SymmetricEigen::new(s).eigenvalues.iter().cloned().fold(0.0, f64::max);
    if top > 0.0 {
        1.0 / top
    } else {
        f64::INFINITY
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_quadratic_form() {
        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 4.0, 0.0]));
        let p = PsdPseudoInverse::new(&m);
        assert_eq!(p.rank(), 2);
        let u = DVector::from_vec(vec![1.0, 1.0, 0.0]);
        assert!((p.quadratic_form(&u).unwrap() - 0.75).abs() < 1e-15);
        assert_eq!(p.quadratic_form(&DVector::from_vec(vec![0.0, 0.0, 1.0])), None);
    }

    #[test]
    fn zero_matrix_has_empty_range() {
        let p = PsdPseudoInverse::new(&DMatrix::zeros(3, 3));
        assert_eq!(p.rank(), 0);
        assert!(p.in_range(&DVector::zeros(3)));
        assert!(!p.in_range(&DVector::from_vec(vec![1.0, 0.0, 0.0])));
    }

    #[test]
    fn rank_one_domination() {
        let u = DVector::from_vec(vec![1.0, 1.0]);
        let m = &u * u.transpose() * 3.0;
        let t = &u * u.transpose();
        assert!((domination_value(&m, &t) - 3.0).abs() < 1e-12);
        let off = DVector::from_vec(vec![1.0, 0.0]);
        assert_eq!(domination_value(&m, &(&off * off.transpose())), 0.0);
        assert_eq!(domination_value(&m, &DMatrix::zeros(2, 2)), f64::INFINITY);
    }
}

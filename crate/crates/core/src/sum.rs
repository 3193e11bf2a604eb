//! Order-fixed floating point reductions.
//!
//! Every reduction over rays or lattice points goes through these so that
//! results do not depend on how work items were scheduled.

use num_complex::Complex64;

const LEAF: usize = 8;

/// Pairwise (cascade) summation in index order.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= LEAF {
        return xs.iter().fold(0.0, |a, &b| a + b);
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

pub fn pairwise_sum_complex(xs: &[Complex64]) -> Complex64 {
    if xs.len() <= LEAF {
        return xs.iter().fold(Complex64::new(0.0, 0.0), |a, &b| a + b);
    }
    let mid = xs.len() / 2;
    pairwise_sum_complex(&xs[..mid]) + pairwise_sum_complex(&xs[mid..])
}

/// Euclidean norm of a sequence of squared magnitudes, summed pairwise.
pub fn l2_from_squares(squares: &[f64]) -> f64 {
    libm::sqrt(pairwise_sum(squares))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec::Vec;

    #[test]
    fn matches_naive_sum_on_integers() {
        let xs: Vec<f64> = (1..=1000).map(|k| k as f64).collect();
        assert_eq!(pairwise_sum(&xs), 500500.0);
        assert_eq!(pairwise_sum(&[]), 0.0);
    }

    #[test]
    fn is_more_accurate_than_left_fold() {
        let xs: Vec<f64> = (0..100_000).map(|_| 0.1).collect();
        let exact = 10_000.0;
        let naive: f64 = xs.iter().sum();
        assert!((pairwise_sum(&xs) - exact).abs() <= (naive - exact).abs());
    }
}

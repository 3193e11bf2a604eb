//! Fixed-size linear algebra on spatial (3), spacetime (4) and phase-space
//! (8) arrays. Two-dimensional problems carry an inert third axis.

use crate::scalar::Scalar;

pub type Vec3 = [f64; 3];
pub type Mat3 = [[f64; 3]; 3];
pub type Vec4 = [f64; 4];
pub type Mat4 = [[f64; 4]; 4];

pub fn dot<const N: usize>(a: &[f64; N], b: &[f64; N]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm<const N: usize>(a: &[f64; N]) -> f64 {
    libm::sqrt(dot(a, a))
}

pub fn sub<const N: usize>(a: &[f64; N], b: &[f64; N]) -> [f64; N] {
    core::array::from_fn(|i| a[i] - b[i])
}

pub fn add<const N: usize>(a: &[f64; N], b: &[f64; N]) -> [f64; N] {
    core::array::from_fn(|i| a[i] + b[i])
}

pub fn scale<const N: usize>(a: &[f64; N], c: f64) -> [f64; N] {
    a.map(|x| x * c)
}

pub fn max_abs_diff<const N: usize>(a: &[f64; N], b: &[f64; N]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

pub fn identity<const N: usize>() -> [[f64; N]; N] {
    core::array::from_fn(|i| core::array::from_fn(|j| if i == j { 1.0 } else { 0.0 }))
}

pub fn mat_vec<const N: usize>(m: &[[f64; N]; N], v: &[f64; N]) -> [f64; N] {
    core::array::from_fn(|i| dot(&m[i], v))
}

pub fn mat_mul<const N: usize>(a: &[[f64; N]; N], b: &[[f64; N]; N]) -> [[f64; N]; N] {
    core::array::from_fn(|i| core::array::from_fn(|j| (0..N).map(|k| a[i][k] * b[k][j]).sum()))
}

pub fn transpose<const N: usize>(a: &[[f64; N]; N]) -> [[f64; N]; N] {
    core::array::from_fn(|i| core::array::from_fn(|j| a[j][i]))
}

/// Max-row-sum norm.
pub fn norm_inf<const N: usize>(a: &[[f64; N]; N]) -> f64 {
    a.iter()
        .map(|r| r.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

pub fn max_abs<const N: usize>(a: &[[f64; N]; N]) -> f64 {
    a.iter().flatten().map(|x| x.abs()).fold(0.0, f64::max)
}

/// LU factorization with partial pivoting; returns `None` for an exactly
/// singular pivot.
pub fn lu<const N: usize>(mut a: [[f64; N]; N]) -> Option<([[f64; N]; N], [usize; N], f64)> {
    let mut perm: [usize; N] = core::array::from_fn(|i| i);
    let mut sign = 1.0;
    for col in 0..N {
        let piv = (col..N).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col] == 0.0 {
            return None;
        }
        if piv != col {
            a.swap(piv, col);
            perm.swap(piv, col);
            sign = -sign;
        }
        for r in col + 1..N {
            let f = a[r][col] / a[col][col];
            a[r][col] = f;
            for c in col + 1..N {
                a[r][c] -= f * a[col][c];
            }
        }
    }
    Some((a, perm, sign))
}

pub fn det<const N: usize>(a: &[[f64; N]; N]) -> f64 {
    match lu(*a) {
        Some((f, _, sign)) => (0..N).fold(sign, |d, i| d * f[i][i]),
        None => 0.0,
    }
}

pub fn solve<const N: usize>(a: &[[f64; N]; N], b: &[f64; N]) -> Option<[f64; N]> {
    let (f, perm, _) = lu(*a)?;
    let mut x: [f64; N] = core::array::from_fn(|i| b[perm[i]]);
    for i in 0..N {
        for k in 0..i {
            x[i] -= f[i][k] * x[k];
        }
    }
    for i in (0..N).rev() {
        for k in i + 1..N {
            x[i] -= f[i][k] * x[k];
        }
        x[i] /= f[i][i];
    }
    Some(x)
}

pub fn inverse<const N: usize>(a: &[[f64; N]; N]) -> Option<[[f64; N]; N]> {
    let mut cols = [[0.0; N]; N];
    for (j, col) in cols.iter_mut().enumerate() {
        let mut e = [0.0; N];
        e[j] = 1.0;
        *col = solve(a, &e)?;
    }
    Some(transpose(&cols))
}

/// Inverse of a symmetric 3x3 matrix by the adjugate; generic so that it
/// differentiates through [`crate::scalar::Dual`].
pub fn inverse3<S: Scalar>(m: &[[S; 3]; 3]) -> [[S; 3]; 3] {
    let c00 = m[1][1] * m[2][2] - m[1][2] * m[2][1];
    let c01 = m[1][2] * m[2][0] - m[1][0] * m[2][2];
    let c02 = m[1][0] * m[2][1] - m[1][1] * m[2][0];
    let det = m[0][0] * c00 + m[0][1] * c01 + m[0][2] * c02;
    let r = det.recip();
    let c10 = m[0][2] * m[2][1] - m[0][1] * m[2][2];
    let c11 = m[0][0] * m[2][2] - m[0][2] * m[2][0];
    let c12 = m[0][1] * m[2][0] - m[0][0] * m[2][1];
    let c20 = m[0][1] * m[1][2] - m[0][2] * m[1][1];
    let c21 = m[0][2] * m[1][0] - m[0][0] * m[1][2];
    let c22 = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    [
        [c00 * r, c10 * r, c20 * r],
        [c01 * r, c11 * r, c21 * r],
        [c02 * r, c12 * r, c22 * r],
    ]
}

pub fn det3<S: Scalar>(m: &[[S; 3]; 3]) -> S {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

pub fn mat3_vec<S: Scalar>(m: &[[S; 3]; 3], v: &[S; 3]) -> [S; 3] {
    core::array::from_fn(|i| m[i][0] * v[0] + m[i][1] * v[1] + m[i][2] * v[2])
}

/// `Aᵀ B A` for generic scalars.
pub fn congruence3<S: Scalar>(a: &[[S; 3]; 3], b: &[[S; 3]; 3]) -> [[S; 3]; 3] {
    let ba: [[S; 3]; 3] = core::array::from_fn(|i| {
        core::array::from_fn(|j| b[i][0] * a[0][j] + b[i][1] * a[1][j] + b[i][2] * a[2][j])
    });
    core::array::from_fn(|i| {
        core::array::from_fn(|j| a[0][i] * ba[0][j] + a[1][i] * ba[1][j] + a[2][i] * ba[2][j])
    })
}

/// Least-squares solve of a dense `rows x cols` system by normal equations
/// with Gaussian elimination. Returns the solution and the 2-norm condition
/// number of the design matrix estimated from the normal matrix.
pub fn least_squares(a: &[alloc::vec::Vec<f64>], b: &[f64]) -> Option<(alloc::vec::Vec<f64>, f64)> {
    use alloc::vec;
    let cols = a.first()?.len();
    let mut ata = vec![vec![0.0; cols]; cols];
    let mut atb = vec![0.0; cols];
    for (row, &bi) in a.iter().zip(b) {
        for i in 0..cols {
            atb[i] += row[i] * bi;
            for j in 0..cols {
                ata[i][j] += row[i] * row[j];
            }
        }
    }
    let (lo, hi) = symmetric_extreme_eigenvalues(&ata);
    if lo <= 0.0 {
        return None;
    }
    let cond = libm::sqrt(hi / lo);
    // Gaussian elimination on the normal system.
    let mut m = ata;
    let mut x = atb;
    for c in 0..cols {
        let p = (c..cols).max_by(|&i, &j| m[i][c].abs().total_cmp(&m[j][c].abs()))?;
        m.swap(p, c);
        x.swap(p, c);
        for r in c + 1..cols {
            let f = m[r][c] / m[c][c];
            for k in c..cols {
                m[r][k] -= f * m[c][k];
            }
            x[r] -= f * x[c];
        }
    }
    for c in (0..cols).rev() {
        for k in c + 1..cols {
            x[c] -= m[c][k] * x[k];
        }
        x[c] /= m[c][c];
    }
    Some((x, cond))
}

/// Extreme eigenvalues of a small symmetric matrix by cyclic Jacobi sweeps.
pub fn symmetric_extreme_eigenvalues(a: &[alloc::vec::Vec<f64>]) -> (f64, f64) {
    let n = a.len();
    let mut m: alloc::vec::Vec<alloc::vec::Vec<f64>> = a.to_vec();
    for _ in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .filter(|(i, j)| i != j)
            .map(|(i, j)| m[i][j] * m[i][j])
            .sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if m[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (m[q][q] - m[p][p]) / (2.0 * m[p][q]);
                let t = theta.signum() / (theta.abs() + libm::sqrt(theta * theta + 1.0));
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / libm::sqrt(t * t + 1.0);
                let s = t * c;
                for k in 0..n {
                    let mkp = m[k][p];
                    let mkq = m[k][q];
                    m[k][p] = c * mkp - s * mkq;
                    m[k][q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[p][k];
                    let mqk = m[q][k];
                    m[p][k] = c * mpk - s * mqk;
                    m[q][k] = s * mpk + c * mqk;
                }
            }
        }
    }
    let diag = (0..n).map(|i| m[i][i]);
    let lo = diag.clone().fold(f64::INFINITY, f64::min);
    let hi = diag.fold(f64::NEG_INFINITY, f64::max);
    (lo, hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn inverse_round_trip() {
        let a = [
            [4.0, 1.0, 0.5, 0.0],
            [1.0, 3.0, 0.0, 0.2],
            [0.5, 0.0, 2.0, 0.1],
            [0.0, 0.2, 0.1, 1.0],
        ];
        let inv = inverse(&a).unwrap();
        let p = mat_mul(&a, &inv);
        let e = identity::<4>();
        for i in 0..4 {
            assert!(max_abs_diff(&p[i], &e[i]) < 1e-14);
        }
    }

    #[test]
    fn adjugate_inverse_matches_lu() {
        let m = [[2.0, 0.3, 0.1], [0.3, 1.5, -0.2], [0.1, -0.2, 1.1]];
        let a = inverse3(&m);
        let b = inverse(&m).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert!((a[i][j] - b[i][j]).abs() < 1e-14);
            }
        }
        assert!((det3(&m) - det(&m)).abs() < 1e-14);
    }

    #[test]
    fn least_squares_recovers_exact_solution() {
        let a = vec![
            vec![1.0, 0.0, 0.0],
            vec![0.5, 1.0, 0.5],
            vec![0.0, 0.0, 1.0],
            vec![0.5, -1.0, 0.5],
        ];
        let x = [0.3, -1.2, 2.0];
        let b: alloc::vec::Vec<f64> = a
            .iter()
            .map(|r| r[0] * x[0] + r[1] * x[1] + r[2] * x[2])
            .collect();
        let (sol, cond) = least_squares(&a, &b).unwrap();
        for i in 0..3 {
            assert!((sol[i] - x[i]).abs() < 1e-12);
        }
        assert!((cond - 2f64.sqrt()).abs() < 1e-9);
    }
}

//! The Riemannian case `g = -dt² + h`: boundary distances, the `B₂₁`
//! factorization along straight rays, recovery of `m̂ᵢⱼ` from the quadratic
//! forms `m̂ p·p`, and the reduced pipeline.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::flow::{self, FlowConfig, PhaseState};
use crate::fourier::{self, ComponentSpectra, CutoffKind, CutoffSpec};
use crate::identity::b_blocks;
use crate::lattice::Lattice;
use crate::linalg;
use crate::metric::{ProductMetric, StationaryMetric};
use crate::straighten::{straighten, tensor_difference};
use crate::sum::pairwise_sum;

pub use crate::boundary::{boundary_distance_table, riemannian_distance};

/// Largest accepted condition number of a recovery matrix.
pub const MAX_CONDITION: f64 = 10.0;

/// Directions `p ∈ S^{n-2}` and the least-squares map from the values
/// `m̂ p·p` to the entries `m̂ᵢⱼ`, `2 ≤ i ≤ j ≤ n`.
#[derive(Clone, Debug, PartialEq)]
pub struct DirectionSet {
    pub n: usize,
    pub directions: Vec<[f64; 2]>,
    /// Rows `p ↦ (p₂², 2p₂p₃, p₃²)` (`n = 3`) or `(p₂²)` (`n = 2`).
    pub matrix: Vec<Vec<f64>>,
    /// `(RᵀR)⁻¹Rᵀ`.
    pub pseudo_inverse: Vec<Vec<f64>>,
    pub condition: f64,
}

/// Index pairs `(i, j)`, `i ≤ j`, of the recovered entries (spatial
/// indices counted from 0, so `x²` is 1).
pub fn recovered_entries(n: usize) -> Vec<(usize, usize)> {
    (1..n).flat_map(|i| (i..n).map(move |j| (i, j))).collect()
}

impl DirectionSet {
    pub fn from_angles(n: usize, angles: &[f64]) -> Result<Self> {
        let directions: Vec<[f64; 2]> =
            angles.iter().map(|&a| fourier::direction_p(n, a)).collect();
        let entries = recovered_entries(n);
        let matrix: Vec<Vec<f64>> = directions
            .iter()
            .map(|p| {
                entries
                    .iter()
                    .map(|&(i, j)| {
                        if i == j {
                            p[i - 1] * p[i - 1]
                        } else {
                            2.0 * p[i - 1] * p[j - 1]
                        }
                    })
                    .collect()
            })
            .collect();
        let cols = entries.len();
        let normal: Vec<Vec<f64>> = (0..cols)
            .map(|a| {
                (0..cols)
                    .map(|b| matrix.iter().map(|r| r[a] * r[b]).sum())
                    .collect()
            })
            .collect();
        let (lo, hi) = linalg::symmetric_extreme_eigenvalues(&normal);
        let condition = if lo > 0.0 {
            libm::sqrt(hi / lo)
        } else {
            f64::INFINITY
        };
        if !(condition < 1e8) || matrix.len() < cols {
            return Err(Error::RankDeficient { condition });
        }
        let mut pseudo_inverse = vec![vec![0.0; matrix.len()]; cols];
        for (r, row) in matrix.iter().enumerate() {
            let mut rhs = [0.0; 3];
            rhs[..cols].copy_from_slice(row);
            let mut a = [[0.0; 3]; 3];
            for i in 0..3 {
                for j in 0..3 {
                    a[i][j] = if i < cols && j < cols {
                        normal[i][j]
                    } else if i == j {
                        1.0
                    } else {
                        0.0
                    };
                }
            }
            let col = linalg::solve(&a, &rhs).ok_or(Error::RankDeficient { condition })?;
            for i in 0..cols {
                pseudo_inverse[i][r] = col[i];
            }
        }
        Ok(DirectionSet {
            n,
            directions,
            matrix,
            pseudo_inverse,
            condition,
        })
    }

    /// Entries `m̂ᵢⱼ` (order of [`recovered_entries`]) from the values at
    /// each direction.
    pub fn recover(&self, values: &[f64]) -> Vec<f64> {
        self.pseudo_inverse
            .iter()
            .map(|row| row.iter().zip(values).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn recover_complex(&self, values: &[Complex64]) -> Vec<Complex64> {
        let re: Vec<f64> = values.iter().map(|v| v.re).collect();
        let im: Vec<f64> = values.iter().map(|v| v.im).collect();
        self.recover(&re)
            .into_iter()
            .zip(self.recover(&im))
            .map(|(a, b)| Complex64::new(a, b))
            .collect()
    }
}

/// `{+1}` for `n = 2`; angles `0, π/4, π/2, 3π/4` for `n = 3`.
pub fn direction_set(n: usize) -> Result<DirectionSet> {
    match n {
        2 => DirectionSet::from_angles(2, &[0.0]),
        3 => DirectionSet::from_angles(3, &[0.0, PI / 4.0, PI / 2.0, 3.0 * PI / 4.0]),
        _ => Err(Error::InvalidInput("dimension must be 2 or 3")),
    }
}

/// Default `μ` of `χ_p`.
pub fn default_mu(n: usize) -> f64 {
    if n == 3 {
        0.05
    } else {
        0.0
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct B21Report {
    /// `max |B₂₁|` over the rays with `ξ⁰ = e₁`.
    pub straight_max: f64,
    /// `(α, max |B₂₁|)` for the tilted rays.
    pub tilted: Vec<(f64, f64)>,
    /// Least-squares slope of `log max|B₂₁|` against `log sin α`.
    pub exponent: f64,
    /// The integer power nearest `exponent` (at least 1).
    pub power: u32,
    /// `(max k - min k)/min k` for `k = max|B₂₁| / sinᵖ α`.
    pub slope_spread: f64,
}

/// Entry state on `∂Ω` of the ray with spatial direction `(cos α, sin α)`
/// and offset `b` along the normal direction.
pub fn tilted_entry(r: f64, alpha: f64, b: f64, varrho: f64) -> PhaseState {
    let d = [libm::cos(alpha), libm::sin(alpha), 0.0];
    let perp = [-d[1], d[0], 0.0];
    let a = libm::sqrt(r * r - b * b);
    let x: [f64; 3] = core::array::from_fn(|k| -a * d[k] + b * perp[k]);
    PhaseState::new([0.0, x[0], x[1], x[2]], [varrho, d[0], d[1], d[2]])
}

fn max_b21<A: StationaryMetric, B: StationaryMetric>(
    g1: &A,
    g2: &B,
    x0: &PhaseState,
    samples: usize,
    cfg: &FlowConfig,
) -> Result<f64> {
    let n = g1.domain().n;
    let (ell, _) = flow::scattering_exit(g1, x0, cfg)?;
    let mut worst: f64 = 0.0;
    for i in 1..=samples {
        let s = ell * i as f64 / (samples + 1) as f64;
        let b = b_blocks(g1, g2, x0, ell, s, cfg)[1][0];
        for r in 0..=n {
            for c in 0..=n {
                worst = worst.max(b[r][c].abs());
            }
        }
    }
    Ok(worst)
}

/// `B₂₁` along rays `ξ⁰ = e₁` (offsets `offsets`) and along rays tilted
/// by each angle (offset 0), with the power law of the tilt dependence.
/// `g₁`, `g₂` should be Riemannian and in the special form; `B₂₁` then
/// vanishes on the straight rays and carries at least one factor `sin α`.
pub fn b21_factorization_check<A: StationaryMetric, B: StationaryMetric>(
    g1: &A,
    g2: &B,
    offsets: &[f64],
    angles: &[f64],
    varrho: f64,
    cfg: &FlowConfig,
) -> Result<B21Report> {
    let r = g1.domain().r_omega;
    let samples = 8;
    let mut straight_max: f64 = 0.0;
    for &b in offsets {
        straight_max = straight_max.max(max_b21(
            g1,
            g2,
            &tilted_entry(r, 0.0, b, varrho),
            samples,
            cfg,
        )?);
    }
    let mut tilted = Vec::new();
    for &a in angles {
        tilted.push((
            a,
            max_b21(g1, g2, &tilted_entry(r, a, 0.0, varrho), samples, cfg)?,
        ));
    }
    let logs: Vec<(f64, f64)> = tilted
        .iter()
        .filter(|(_, v)| *v > 0.0)
        .map(|(a, v)| (libm::log(libm::sin(*a)), libm::log(*v)))
        .collect();
    let exponent = if logs.len() >= 2 {
        let k = logs.len() as f64;
        let (mx, my) = (
            logs.iter().map(|p| p.0).sum::<f64>() / k,
            logs.iter().map(|p| p.1).sum::<f64>() / k,
        );
        let sxy: f64 = logs.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
        let sxx: f64 = logs.iter().map(|(x, _)| (x - mx) * (x - mx)).sum();
        sxy / sxx
    } else {
        0.0
    };
    let power = (libm::round(exponent) as i64).max(1) as u32;
    let slopes: Vec<f64> = tilted
        .iter()
        .map(|(a, v)| v / libm::pow(libm::sin(*a), power as f64))
        .collect();
    let lo = slopes.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = slopes.iter().copied().fold(0.0, f64::max);
    let slope_spread = if slopes.is_empty() || lo == 0.0 {
        0.0
    } else {
        (hi - lo) / lo
    };
    Ok(B21Report {
        straight_max,
        tilted,
        exponent,
        power,
        slope_spread,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RiemannianConfig {
    /// Lattice points per axis.
    pub count: usize,
    /// Grid used to check the straightening for folds.
    pub check: usize,
    /// `μ` of `χ_p`.
    pub mu: f64,
    /// `‖∇m‖` at or below which the metrics already agree.
    pub floor: f64,
}

impl RiemannianConfig {
    pub fn for_dimension(n: usize) -> Self {
        RiemannianConfig {
            count: fourier::TransformGrid::default_count(n),
            check: 9,
            mu: default_mu(n),
            floor: 1e-4,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RiemannianReport {
    pub epsilon: f64,
    /// `max |m|` after straightening.
    pub m_sup: f64,
    /// Largest first row/column entry of `m` before it was zeroed.
    pub first_row: f64,
    pub gradient_norm: f64,
    /// `‖θm̂ᵢⱼ‖` from the direction-set recovery, over `supp χ_p`.
    pub recovered_norm: f64,
    /// Largest recovered-vs-direct difference relative to `max |θm̂|`.
    pub recovery_gap: f64,
    /// Largest `|ξᵀ(θm̂)ξ/ψ_p² - p·(θm̂)p|` relative to `max |θm̂|`.
    pub cancellation_gap: f64,
    /// Lorentzian transform of `-dt² + h` against `ψ_p² p·(θm̂)p`.
    pub corollary_gap: f64,
    /// Fraction of lattice frequencies cut off by some `χ_p`.
    pub excluded_fraction: f64,
    /// `recovered_norm / (√ε ‖∇m‖)`.
    pub ratio: f64,
    pub pass: bool,
}

/// Reduced Fourier analysis of `m` with vanishing first spatial row and
/// column, from its lattice spectra.
pub fn reduced_analysis(
    spectra: &ComponentSpectra,
    set: &DirectionSet,
    mu: f64,
    epsilon: f64,
    floor: f64,
) -> RiemannianReport {
    let l: Lattice = spectra.lattice;
    let n = l.n;
    let entries = recovered_entries(n);
    let cell = libm::pow(PI / l.half, n as f64);
    let mut recovered_sq = Vec::new();
    let (mut recovery_gap, mut cancellation_gap, mut corollary_gap) = (0.0f64, 0.0f64, 0.0f64);
    let mut excluded = 0usize;
    let chi = CutoffSpec::lorentzian(mu.max(1e-3));
    let theta_m_max = (0..l.len())
        .map(|k| {
            let theta = l.frequency_vector(k);
            entries
                .iter()
                .map(|&(i, j)| spectra.entry(1 + i, 1 + j, k).norm() * linalg::norm(&theta))
                .fold(0.0, f64::max)
        })
        .fold(0.0, f64::max);
    let scale = if theta_m_max > 0.0 { theta_m_max } else { 1.0 };
    for k in 0..l.len() {
        let eta = l.frequency_vector(k);
        if linalg::norm(&eta) == 0.0 {
            continue;
        }
        let cutoffs: Vec<f64> = set
            .directions
            .iter()
            .map(|p| {
                fourier::cutoff(
                    &eta,
                    n,
                    &CutoffSpec {
                        mu,
                        kind: CutoffKind::Riemannian { p: *p },
                    },
                )
            })
            .collect();
        if cutoffs.iter().any(|&c| c < 1.0) {
            excluded += 1;
            continue;
        }
        let mhat = |i: usize, j: usize| spectra.entry(1 + i, 1 + j, k);
        for c in 0..n {
            let ie = Complex64::new(0.0, eta[c]);
            let values: Vec<Complex64> = set
                .directions
                .iter()
                .map(|p| {
                    let mut v = Complex64::new(0.0, 0.0);
                    for a in 1..n {
                        for b in 1..n {
                            v += mhat(a, b) * (p[a - 1] * p[b - 1]);
                        }
                    }
                    ie * v
                })
                .collect();
            let rec = set.recover_complex(&values);
            for (q, &(i, j)) in entries.iter().enumerate() {
                let direct = ie * mhat(i, j);
                recovery_gap = recovery_gap.max((rec[q] - direct).norm() / scale);
                recovered_sq.push(rec[q].norm_sqr() * if i == j { 1.0 } else { 2.0 });
            }
            for (p, value) in set.directions.iter().zip(&values) {
                let Ok(psi) = fourier::psi_p(&eta, p, n) else {
                    continue;
                };
                let Ok(xi) = fourier::xi_from_eta_p(&eta, p, n) else {
                    continue;
                };
                let mut full = Complex64::new(0.0, 0.0);
                for a in 0..n {
                    for b in 0..n {
                        full += mhat(a, b) * (xi[a] * xi[b]);
                    }
                }
                let full = ie * full;
                if psi.abs() > mu.max(1e-3) {
                    cancellation_gap =
                        cancellation_gap.max((full / (psi * psi) - value).norm() / scale);
                }
                if fourier::cutoff(&eta, n, &chi) == 1.0 {
                    if let Ok(lorentz) = spectra.oracle_a(k, fourier::DEFAULT_RHO1, p, &chi) {
                        corollary_gap =
                            corollary_gap.max((lorentz[c] - value * (psi * psi)).norm() / scale);
                    }
                }
            }
        }
    }
    let recovered_norm = libm::sqrt(pairwise_sum(&recovered_sq) * cell);
    let gradient_norm = spectra.gradient_norm();
    let ratio = if gradient_norm > 0.0 {
        recovered_norm / (libm::sqrt(epsilon) * gradient_norm)
    } else {
        0.0
    };
    RiemannianReport {
        epsilon,
        m_sup: 0.0,
        first_row: 0.0,
        gradient_norm,
        recovered_norm,
        recovery_gap,
        cancellation_gap,
        corollary_gap,
        excluded_fraction: excluded as f64 / l.len() as f64,
        ratio,
        pass: gradient_norm <= floor || recovered_norm <= 0.5 * gradient_norm,
    }
}

/// Straightens `-dt² + hᵢ`, forms `m` on the lattice and runs the reduced
/// analysis.
pub fn riemannian_pipeline<A: StationaryMetric + Clone, B: StationaryMetric + Clone>(
    h1: &A,
    h2: &B,
    epsilon: f64,
    cfg: &RiemannianConfig,
) -> Result<RiemannianReport> {
    let d = *h1.domain();
    let s1 = straighten(&ProductMetric { base: h1.clone() }, cfg.check)?;
    let s2 = straighten(&ProductMetric { base: h2.clone() }, cfg.check)?;
    let lattice = Lattice::new(d.n, cfg.count, d.rho);
    let td = tensor_difference(&s1, &s2, &lattice)?;
    let spectra = ComponentSpectra::from_difference(&td);
    let set = direction_set(d.n)?;
    let mut report = reduced_analysis(&spectra, &set, cfg.mu, epsilon, cfg.floor);
    report.m_sup = td.sup_norm();
    report.first_row = td.zeroed;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families;
    use crate::metric::SpatialDomain;

    #[test]
    fn b21_vanishes_on_straight_rays_and_grows_with_the_tilt() {
        let d = SpatialDomain::standard(2);
        for eps in [1e-2, 5e-3] {
            let g1 = ProductMetric {
                base: families::special_form(d, eps),
            };
            let g2 = ProductMetric {
                base: families::special_form_alt(d, eps),
            };
            let cfg = FlowConfig::for_rho(d.rho).without_samples();
            let b = b21_factorization_check(
                &g1,
                &g2,
                &[0.0, 0.3],
                &[0.01, 0.02, 0.04, 0.08],
                -1.1,
                &cfg,
            )
            .unwrap();
            assert!(b.straight_max < 1e-12, "{b:?}");
            assert!(b.power >= 1 && b.slope_spread <= 0.1, "{b:?}");
        }
    }

    #[test]
    fn two_dimensional_set_is_trivial() {
        let s = direction_set(2).unwrap();
        assert_eq!(s.directions, vec![[1.0, 0.0]]);
        assert_eq!(s.recover(&[0.7]), vec![0.7]);
        assert_eq!(s.condition, 1.0);
    }

    #[test]
    fn three_dimensional_round_trip() {
        let s = direction_set(3).unwrap();
        assert!((s.condition - libm::sqrt(2.0)).abs() < 1e-12);
        let (m22, m23, m33) = (0.3, -1.2, 0.45);
        let values: Vec<f64> = s
            .directions
            .iter()
            .map(|p| m22 * p[0] * p[0] + 2.0 * m23 * p[0] * p[1] + m33 * p[1] * p[1])
            .collect();
        let got = s.recover(&values);
        for (a, b) in got.iter().zip([m22, m23, m33]) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn repeated_directions_are_rank_deficient() {
        assert!(matches!(
            DirectionSet::from_angles(3, &[0.0, PI, 0.0, PI]),
            Err(Error::RankDeficient { .. })
        ));
    }

    #[test]
    fn flat_metrics_have_no_b() {
        let d = SpatialDomain::standard(2);
        let g = ProductMetric {
            base: families::special_form(d, 0.0),
        };
        let cfg = FlowConfig::for_rho(d.rho).without_samples();
        let r = b21_factorization_check(&g, &g, &[0.0], &[0.05], -1.05, &cfg).unwrap();
        assert!(r.straight_max < 1e-10 && r.tilted[0].1 < 1e-10);
    }

    #[test]
    fn identical_metrics_give_zero_report() {
        let d = SpatialDomain::standard(2);
        let h = families::special_form(d, 1e-2);
        let cfg = RiemannianConfig {
            count: 16,
            ..RiemannianConfig::for_dimension(2)
        };
        let r = riemannian_pipeline(&h, &h, 1e-2, &cfg).unwrap();
        assert_eq!(r.m_sup, 0.0);
        assert_eq!(r.gradient_norm, 0.0);
        assert_eq!(r.excluded_fraction, 0.0);
        assert!(r.pass);
    }
}

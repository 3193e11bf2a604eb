//! The integral identity for a pair of metrics with equal scattering data:
//! `F(s) = X_{g₂}(ℓ-s, X_{g₁}(s, X₀))` has `F(0) = F(ℓ)`, so `∫F′ = 0`,
//! and the covector part of `F′` is the weighted ray transform of
//! `m = g₁⁻¹ - g₂⁻¹`.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::flow::{
    hamilton_field, minkowski_variational, rk4_step, scattering_exit, variational_steps,
    FlowConfig, Phase, PhaseMatrix, PhaseState,
};
use crate::linalg::{self, Mat4, Vec4};
use crate::metric::{inverse_grad, StationaryMetric};
use crate::sum::pairwise_sum;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IdentityConfig {
    pub flow: FlowConfig,
    /// Quadrature nodes on `[0, ℓ]` (rounded up to a multiple of 4).
    pub nodes: usize,
    /// RK4 steps per node interval; `None` derives it from `flow.step`.
    pub substeps: Option<usize>,
    /// Step of the centered differences of `F`.
    pub fd_delta: f64,
    /// Evaluate `F′` (both routes) and the transform, not only `F`.
    pub derivatives: bool,
    /// Evaluate `B` at every node, including nodes where `m` vanishes.
    pub b_norms: bool,
    /// Largest accepted difference of the two scattering data; `None`
    /// skips the check (negative controls).
    pub mismatch_tol: Option<f64>,
}

impl IdentityConfig {
    pub fn for_rho(rho: f64) -> Self {
        IdentityConfig {
            flow: FlowConfig::for_rho(rho).without_samples(),
            nodes: 400,
            substeps: Some(2),
            fd_delta: 1e-3,
            derivatives: true,
            b_norms: true,
            mismatch_tol: Some(1e-5),
        }
    }
}

/// Per-ray record of the identity.
#[derive(Clone, Debug, PartialEq)]
pub struct IdentityRecord {
    pub x0: PhaseState,
    pub ell: f64,
    pub s: Vec<f64>,
    /// `X_{g₁}(s)`.
    pub base: Vec<Phase>,
    pub f: Vec<Phase>,
    /// `F′` from `J_{g₂}·(V_{g₁} - V_{g₂})`.
    pub fprime: Vec<Phase>,
    /// `F′` from centered differences of `F`.
    pub fprime_fd: Vec<Phase>,
    /// `max |B(s)|` entrywise at every node.
    pub b_norms: Vec<f64>,
    /// Integrand of the weighted transform at every node.
    pub integrand: Vec<Vec4>,
    /// Mismatch of the two scattering data.
    pub mismatch: f64,
}

impl IdentityRecord {
    pub fn max_b(&self) -> f64 {
        self.b_norms.iter().copied().fold(0.0, f64::max)
    }

    /// `max_s |F(s) - F(0)|`.
    pub fn f_variation(&self) -> f64 {
        self.f
            .iter()
            .map(|x| linalg::max_abs_diff(x, &self.f[0]))
            .fold(0.0, f64::max)
    }

    /// `∫₀^ℓ` of the weighted integrand.
    pub fn transform(&self) -> Vec4 {
        let h = self.ell / (self.s.len() - 1) as f64;
        core::array::from_fn(|c| {
            romberg_simpson(&self.integrand.iter().map(|v| v[c]).collect::<Vec<_>>(), h)
        })
    }
}

/// Composite Simpson rule on equally spaced samples (odd count).
pub fn simpson(values: &[f64], h: f64) -> f64 {
    let n = values.len();
    if n < 3 {
        return if n == 2 {
            0.5 * h * (values[0] + values[1])
        } else {
            0.0
        };
    }
    let w: Vec<f64> = values
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let c = if i == 0 || i == n - 1 {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            c * v
        })
        .collect();
    pairwise_sum(&w) * h / 3.0
}

/// Simpson on `h` and `2h` combined to cancel the `h⁴` term; needs a
/// sample count of the form `4k + 1`.
pub fn romberg_simpson(values: &[f64], h: f64) -> f64 {
    let fine = simpson(values, h);
    let coarse: Vec<f64> = values.iter().step_by(2).copied().collect();
    fine + (fine - simpson(&coarse, 2.0 * h)) / 15.0
}

fn quadrature_phase(values: &[Phase], h: f64) -> Phase {
    core::array::from_fn(|c| romberg_simpson(&values.iter().map(|v| v[c]).collect::<Vec<_>>(), h))
}

/// Largest component difference between the scattering data of two
/// metrics from the same entry state, including the exit parameters.
pub fn scattering_mismatch<A: StationaryMetric, B: StationaryMetric>(
    g1: &A,
    g2: &B,
    x0: &PhaseState,
    cfg: &FlowConfig,
) -> Result<(f64, f64)> {
    let (l1, e1) = scattering_exit(g1, x0, cfg)?;
    let (l2, e2) = scattering_exit(g2, x0, cfg)?;
    Ok((
        l1,
        linalg::max_abs_diff(&e1.to_array(), &e2.to_array()).max((l1 - l2).abs()),
    ))
}

fn steps_fn(g: &impl Fn(&Phase) -> Phase, x: &Phase, h: f64, n: usize) -> Phase {
    (0..n).fold(*x, |y, _| rk4_step(g, &y, h))
}

/// `F` on `nodes + 1` equally spaced parameters, and, with
/// `cfg.derivatives`, both routes to `F′`, the `B` blocks and the weighted
/// integrand. All flows share the step `ℓ/(nodes·substeps)`.
pub fn identity_record<A: StationaryMetric, B: StationaryMetric>(
    g1: &A,
    g2: &B,
    x0: &PhaseState,
    cfg: &IdentityConfig,
) -> Result<IdentityRecord> {
    let (ell, mismatch) = scattering_mismatch(g1, g2, x0, &cfg.flow)?;
    if let Some(tol) = cfg.mismatch_tol {
        if mismatch > tol {
            return Err(Error::ScatteringMismatch { mismatch });
        }
    }
    let k = cfg.nodes.max(4).next_multiple_of(4);
    let start = x0.to_array();
    let v0 = hamilton_field(g1, &start);
    let speed = libm::sqrt(v0[1] * v0[1] + v0[2] * v0[2] + v0[3] * v0[3]);
    let q = cfg
        .substeps
        .unwrap_or_else(|| (libm::ceil(ell * speed / (k as f64 * cfg.flow.step)) as usize).max(1));
    let h = ell / (k * q) as f64;
    let dt = ell / k as f64;
    let f1 = |x: &Phase| hamilton_field(g1, x);
    let f2 = |x: &Phase| hamilton_field(g2, x);

    let mut base = Vec::with_capacity(k + 1);
    let mut x = start;
    for i in 0..=k {
        if i > 0 {
            x = steps_fn(&f1, &x, h, q);
        }
        base.push(x);
    }
    let f: Vec<Phase> = base
        .iter()
        .enumerate()
        .map(|(i, x)| steps_fn(&f2, x, h, (k - i) * q))
        .collect();
    let s: Vec<f64> = (0..=k).map(|i| i as f64 * dt).collect();

    let mut rec = IdentityRecord {
        x0: *x0,
        ell,
        s,
        base,
        f,
        fprime: Vec::new(),
        fprime_fd: Vec::new(),
        b_norms: Vec::new(),
        integrand: Vec::new(),
        mismatch,
    };
    if !cfg.derivatives {
        return Ok(rec);
    }

    let n = g1.domain().n;
    let active = crate::flow::active_indices(n);
    for i in 0..=k {
        let xb = rec.base[i];
        let rest = (k - i) * q;
        let dv = hamiltonian_field_difference(g1, g2, &PhaseState::from_array(&xb));
        let live = dv.iter().any(|v| *v != 0.0);
        if live || cfg.b_norms {
            let j = variational_steps(g2, &xb, ell - rec.s[i], rest).j;
            rec.fprime.push(core::array::from_fn(|r| {
                (0..8).map(|c| j[r][c] * dv[c]).sum()
            }));
            let b = b_from_variational(&j, ell - rec.s[i]);
            let bmax = active
                .iter()
                .flat_map(|&r| active.iter().map(move |&c| (r, c)))
                .map(|(r, c)| b[r][c].abs());
            rec.b_norms.push(bmax.fold(0.0, f64::max));
            rec.integrand.push(if live {
                weighted_integrand(g1, g2, &xb, &b)
            } else {
                [0.0; 4]
            });
        } else {
            rec.fprime.push([0.0; 8]);
            rec.integrand.push([0.0; 4]);
        }

        // F(s ± δ): one RK4 step off the node, then g₂ with the node's
        // step count; Richardson over δ and 2δ.
        let fd = |d: f64| -> Phase {
            let moved = rk4_step(&f1, &xb, d);
            let len = ell - rec.s[i] - d;
            steps_fn(&f2, &moved, len / rest.max(1) as f64, rest.max(1))
        };
        let centered = |d: f64| -> Phase {
            let (p, m) = (fd(d), fd(-d));
            core::array::from_fn(|c| (p[c] - m[c]) / (2.0 * d))
        };
        let (d1, d2) = (centered(cfg.fd_delta), centered(2.0 * cfg.fd_delta));
        rec.fprime_fd
            .push(core::array::from_fn(|c| (4.0 * d1[c] - d2[c]) / 3.0));
    }
    Ok(rec)
}

/// `F` only.
pub fn f_curve<A: StationaryMetric, B: StationaryMetric>(
    g1: &A,
    g2: &B,
    x0: &PhaseState,
    cfg: &IdentityConfig,
) -> Result<IdentityRecord> {
    identity_record(
        g1,
        g2,
        x0,
        &IdentityConfig {
            derivatives: false,
            ..*cfg
        },
    )
}

/// Observed convergence order of `F(0) = X_{g₂}(ℓ, X₀)` under step halving,
/// from the flows with `steps`, `2·steps` and `4·steps` equal steps.
pub fn step_halving_order<A: StationaryMetric, B: StationaryMetric>(
    g1: &A,
    g2: &B,
    x0: &PhaseState,
    cfg: &FlowConfig,
    steps: usize,
) -> Result<f64> {
    let (ell, _) = scattering_exit(g1, x0, cfg)?;
    let f2 = |x: &Phase| hamilton_field(g2, x);
    let start = x0.to_array();
    let run = |k: usize| steps_fn(&f2, &start, ell / k as f64, k);
    let (a, b, c) = (run(steps), run(2 * steps), run(4 * steps));
    let coarse = linalg::max_abs_diff(&a, &b);
    let fine = linalg::max_abs_diff(&b, &c);
    Ok(libm::log2(coarse / fine))
}

/// Residuals of the identity from a record with derivatives.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IdentityResiduals {
    /// `|∫F′|` with the closed-form `F′`; zero when the data agree.
    pub identity: f64,
    /// `|∫F′ - (F(ℓ) - F(0))|`, closed-form route.
    pub closed: f64,
    /// The same with finite-difference `F′`.
    pub finite_difference: f64,
    /// `max |F′_closed - F′_fd|` over the nodes.
    pub route_gap: f64,
}

pub fn integral_identity_residual(rec: &IdentityRecord) -> IdentityResiduals {
    let h = rec.ell / (rec.s.len() - 1) as f64;
    let jump: Phase = core::array::from_fn(|c| rec.f[rec.f.len() - 1][c] - rec.f[0][c]);
    let closed = quadrature_phase(&rec.fprime, h);
    let fd = quadrature_phase(&rec.fprime_fd, h);
    let norm = |v: &Phase| v.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    let route_gap = rec
        .fprime
        .iter()
        .zip(&rec.fprime_fd)
        .map(|(a, b)| linalg::max_abs_diff(a, b))
        .fold(0.0, f64::max);
    IdentityResiduals {
        identity: norm(&closed),
        closed: norm(&core::array::from_fn(|c| closed[c] - jump[c])),
        finite_difference: norm(&core::array::from_fn(|c| fd[c] - jump[c])),
        route_gap,
    }
}

/// `B = J - [[I, σδ], [0, I]]` for a variational matrix over length `σ`.
pub fn b_from_variational(j: &PhaseMatrix, sigma: f64) -> PhaseMatrix {
    let m = minkowski_variational(sigma);
    core::array::from_fn(|r| core::array::from_fn(|c| j[r][c] - m[r][c]))
}

/// The four `(1+n)`-blocks of `B(s)` (padded to 4×4).
pub fn b_blocks<A: StationaryMetric, B: StationaryMetric>(
    g1: &A,
    g2: &B,
    x0: &PhaseState,
    ell: f64,
    s: f64,
    cfg: &FlowConfig,
) -> [[Mat4; 2]; 2] {
    let xb = crate::flow::flow_for(g1, &x0.to_array(), s, cfg);
    let j = crate::flow::variational_flow(g2, &PhaseState::from_array(&xb), ell - s, cfg).j;
    let b = b_from_variational(&j, ell - s);
    core::array::from_fn(|r| core::array::from_fn(|c| crate::flow::mat4_block(&b, r, c)))
}

/// `(V_{g₁} - V_{g₂})(X) = (mζ, -½ ∇ₓm ζ·ζ)` with `m = g₁⁻¹ - g₂⁻¹`.
pub fn hamiltonian_field_difference<A: StationaryMetric, B: StationaryMetric>(
    g1: &A,
    g2: &B,
    x: &PhaseState,
) -> Phase {
    let (m, dm) = raw_difference(g1, g2, x);
    let mz = linalg::mat_vec(&m, &x.zeta);
    let mut out = [0.0; 8];
    out[..4].copy_from_slice(&mz);
    for k in 0..3 {
        out[5 + k] = -0.5 * linalg::dot(&linalg::mat_vec(&dm[k], &x.zeta), &x.zeta);
    }
    out
}

fn raw_difference<A: StationaryMetric, B: StationaryMetric>(
    g1: &A,
    g2: &B,
    x: &PhaseState,
) -> (Mat4, [Mat4; 3]) {
    let a = inverse_grad(g1, &x.x());
    let b = inverse_grad(g2, &x.x());
    let sub = |p: &Mat4, q: &Mat4| -> Mat4 {
        core::array::from_fn(|i| core::array::from_fn(|j| p[i][j] - q[i][j]))
    };
    (
        sub(&a.ginv, &b.ginv),
        core::array::from_fn(|k| sub(&a.d[k], &b.d[k])),
    )
}

/// `∇ₓmζ·ζ - 2B₂₁mζ + B₂₂∇ₓmζ·ζ` at a point of the `g₁`-ray.
fn weighted_integrand<A: StationaryMetric, B: StationaryMetric>(
    g1: &A,
    g2: &B,
    x: &Phase,
    b: &PhaseMatrix,
) -> Vec4 {
    let state = PhaseState::from_array(x);
    let (m, dm) = raw_difference(g1, g2, &state);
    let zeta = state.zeta;
    let mz = linalg::mat_vec(&m, &zeta);
    let mut grad = [0.0; 4];
    for k in 0..3 {
        grad[1 + k] = linalg::dot(&linalg::mat_vec(&dm[k], &zeta), &zeta);
    }
    let b21 = crate::flow::mat4_block(b, 1, 0);
    let b22 = crate::flow::mat4_block(b, 1, 1);
    let t1 = linalg::mat_vec(&b21, &mz);
    let t2 = linalg::mat_vec(&b22, &grad);
    core::array::from_fn(|c| grad[c] - 2.0 * t1[c] + t2[c])
}

/// `∫₀^ℓ (∇ₓmζ·ζ - 2B₂₁mζ + B₂₂∇ₓmζ·ζ) ds` along the `g₁`-ray.
pub fn weighted_ray_transform<A: StationaryMetric, B: StationaryMetric>(
    g1: &A,
    g2: &B,
    x0: &PhaseState,
    cfg: &IdentityConfig,
) -> Result<Vec4> {
    Ok(identity_record(g1, g2, x0, cfg)?.transform())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::{BumpFamilyParams, BumpMetric, BumpTerm, Minkowski, SpatialDomain};
    use alloc::vec;

    fn bump(eps: f64, omega: f64) -> BumpMetric {
        BumpMetric::new(
            SpatialDomain::standard(2),
            BumpFamilyParams {
                epsilon: eps,
                special_form: false,
                bumps: vec![BumpTerm {
                    center: [0.1, 0.1, 0.0],
                    width: 0.6,
                    lambda: 1.0,
                    omega: [omega, 0.3, 0.0],
                    h: [[0.4, 0.1, 0.0], [0.1, 0.3, 0.0], [0.0; 3]],
                }],
            },
        )
        .unwrap()
    }

    fn entry() -> PhaseState {
        PhaseState::new(
            [0.0, -1.0, 0.0, 0.0],
            [-1.05, 0.95, 0.3122498999199199, 0.0],
        )
    }

    #[test]
    fn simpson_is_exact_for_cubics() {
        let xs: Vec<f64> = (0..=10).map(|i| i as f64 * 0.1).collect();
        let v: Vec<f64> = xs.iter().map(|x| x * x * x - x).collect();
        assert!((simpson(&v, 0.1) - (0.25 - 0.5)).abs() < 1e-15);
    }

    #[test]
    fn same_metric_gives_constant_f_and_zero_residual() {
        let g = bump(1e-2, 0.2);
        let mut cfg = IdentityConfig::for_rho(1.5);
        cfg.nodes = 20;
        let rec = identity_record(&g, &g, &entry(), &cfg).unwrap();
        assert!(rec.f_variation() < 1e-12);
        let r = integral_identity_residual(&rec);
        assert_eq!(r.identity, 0.0);
        assert!(rec.transform().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn minkowski_b_blocks_vanish() {
        let g = Minkowski {
            domain: SpatialDomain::standard(2),
        };
        let cfg = FlowConfig::for_rho(1.5);
        let b = b_blocks(&g, &g, &entry(), 1.9, 0.7, &cfg);
        for row in &b {
            for blk in row {
                assert!(linalg::max_abs(blk) < 1e-12);
            }
        }
    }

    #[test]
    fn field_difference_matches_hamilton_equations() {
        let (a, b) = (bump(1e-2, 0.2), bump(2e-2, -0.1));
        let x = PhaseState::new([0.4, 0.2, -0.1, 0.0], [-1.05, 0.7, 0.5, 0.0]);
        let d = hamiltonian_field_difference(&a, &b, &x);
        let va = hamilton_field(&a, &x.to_array());
        let vb = hamilton_field(&b, &x.to_array());
        for c in 0..8 {
            assert!((d[c] - (va[c] - vb[c])).abs() < 1e-10);
        }
        let zero = PhaseState::new(x.z, [0.0; 4]);
        assert_eq!(hamiltonian_field_difference(&a, &b, &zero), [0.0; 8]);
    }

    #[test]
    fn unequal_data_is_rejected() {
        let (a, b) = (bump(1e-2, 0.2), bump(2e-2, -0.1));
        let r = identity_record(&a, &b, &entry(), &IdentityConfig::for_rho(1.5));
        assert!(matches!(r, Err(Error::ScatteringMismatch { .. })));
    }
}

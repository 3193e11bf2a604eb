//! Null and timelike bicharacteristics of `H = ½⟨g⁻¹ζ,ζ⟩`, the spatial
//! (Riemannian) Hamilton system, and the variational flow.
//!
//! Phase points are stored flat as `[t, x¹, x², x³, ζ₀, ζ₁, ζ₂, ζ₃]`.
//! Every integration uses classical RK4 with equal steps; the step length
//! is chosen so that the spatial distance travelled per step is
//! `FlowConfig::step`.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::{self, Mat4, Vec3, Vec4};
use crate::metric::{inverse_grad, inverse_jet, StationaryMetric};
use crate::scalar::{seed, Scalar};

pub type Phase = [f64; 8];
pub type PhaseMatrix = [[f64; 8]; 8];

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhaseState {
    pub z: Vec4,
    pub zeta: Vec4,
}

impl PhaseState {
    pub fn new(z: Vec4, zeta: Vec4) -> Self {
        PhaseState { z, zeta }
    }

    pub fn to_array(&self) -> Phase {
        core::array::from_fn(|i| if i < 4 { self.z[i] } else { self.zeta[i - 4] })
    }

    pub fn from_array(a: &Phase) -> Self {
        PhaseState {
            z: [a[0], a[1], a[2], a[3]],
            zeta: [a[4], a[5], a[6], a[7]],
        }
    }

    pub fn x(&self) -> Vec3 {
        [self.z[1], self.z[2], self.z[3]]
    }

    /// `(z, -ζ)`: integrating this for the same parameter retraces the ray.
    pub fn reversed(&self) -> Self {
        PhaseState {
            z: self.z,
            zeta: self.zeta.map(|v| -v),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FlowConfig {
    /// Spatial distance per RK4 step.
    pub step: f64,
    /// Spatial arc length after which an unfinished ray is abandoned.
    pub budget: f64,
    /// Minimum `|x·ẋ|/(|x||ẋ|)` accepted at an exit event.
    pub grazing: f64,
    /// Keep every step in the returned trajectory.
    pub record: bool,
}

impl FlowConfig {
    /// `h_s = 10⁻³ρ`, a budget of `20ρ`.
    pub fn for_rho(rho: f64) -> Self {
        FlowConfig {
            step: 1e-3 * rho,
            budget: 20.0 * rho,
            grazing: 1e-4,
            record: true,
        }
    }

    pub fn with_step(mut self, step: f64) -> Self {
        self.step = step;
        self
    }

    pub fn without_samples(mut self) -> Self {
        self.record = false;
        self
    }

    /// Number of equal steps covering parameter length `len` at spatial
    /// coordinate speed `speed`.
    pub fn steps_for(&self, len: f64, speed: f64) -> usize {
        let n = libm::ceil((len * speed / self.step).abs());
        (n as usize).max(8)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum FlowMode {
    UntilExit,
    UntilParameter(f64),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub samples: Vec<(f64, PhaseState)>,
    /// Final parameter: the exit parameter in `UntilExit` mode.
    pub ell: f64,
    pub exit_state: PhaseState,
}

pub fn hamiltonian<M: StationaryMetric>(g: &M, state: &PhaseState) -> f64 {
    let inv = g.fields(&state.x()).inverse();
    0.5 * linalg::dot(&linalg::mat_vec(&inv, &state.zeta), &state.zeta)
}

/// The Hamilton vector field `(g⁻¹ζ, -½ ∂ₓ(g⁻¹)ζ·ζ)`.
pub fn hamilton_field<M: StationaryMetric>(g: &M, x: &Phase) -> Phase {
    let ig = inverse_grad(g, &[x[1], x[2], x[3]]);
    let zeta = [x[4], x[5], x[6], x[7]];
    let dz = linalg::mat_vec(&ig.ginv, &zeta);
    let mut out = [0.0; 8];
    out[..4].copy_from_slice(&dz);
    for k in 0..3 {
        out[5 + k] = -0.5 * linalg::dot(&linalg::mat_vec(&ig.d[k], &zeta), &zeta);
    }
    out
}

/// One classical RK4 step for an autonomous system.
pub fn rk4_step<S: Scalar, const D: usize>(
    f: &impl Fn(&[S; D]) -> [S; D],
    y: &[S; D],
    h: f64,
) -> [S; D] {
    let axpy =
        |a: &[S; D], k: &[S; D], c: f64| -> [S; D] { core::array::from_fn(|i| a[i] + k[i] * c) };
    let k1 = f(y);
    let k2 = f(&axpy(y, &k1, 0.5 * h));
    let k3 = f(&axpy(y, &k2, 0.5 * h));
    let k4 = f(&axpy(y, &k3, h));
    core::array::from_fn(|i| y[i] + (k1[i] + k2[i] * 2.0 + k3[i] * 2.0 + k4[i]) * (h / 6.0))
}

fn spatial_speed(v: &Phase) -> f64 {
    libm::sqrt(v[1] * v[1] + v[2] * v[2] + v[3] * v[3])
}

fn radius_gap<M: StationaryMetric>(g: &M, x: &Phase) -> f64 {
    let d = g.domain();
    d.radius2(&[x[1], x[2], x[3]]) - d.r_omega * d.r_omega
}

/// Flow for parameter length `len` in exactly `steps` equal RK4 steps.
pub fn flow_steps<M: StationaryMetric>(g: &M, x0: &Phase, len: f64, steps: usize) -> Phase {
    let f = |x: &Phase| hamilton_field(g, x);
    let h = len / steps as f64;
    (0..steps).fold(*x0, |x, _| rk4_step(&f, &x, h))
}

/// Flow for parameter length `len` with the configured step.
pub fn flow_for<M: StationaryMetric>(g: &M, x0: &Phase, len: f64, cfg: &FlowConfig) -> Phase {
    let speed = spatial_speed(&hamilton_field(g, x0)).max(1e-3);
    flow_steps(g, x0, len, cfg.steps_for(len, speed))
}

pub fn integrate_bicharacteristic<M: StationaryMetric>(
    g: &M,
    x0: &PhaseState,
    mode: FlowMode,
    cfg: &FlowConfig,
) -> Result<Trajectory> {
    match mode {
        FlowMode::UntilParameter(len) => Ok(integrate_fixed(g, x0, len, cfg)),
        FlowMode::UntilExit => integrate_until_exit(g, x0, cfg),
    }
}

/// Exit parameter and exit state, without recording samples.
pub fn scattering_exit<M: StationaryMetric>(
    g: &M,
    x0: &PhaseState,
    cfg: &FlowConfig,
) -> Result<(f64, PhaseState)> {
    let tr = integrate_until_exit(g, x0, &cfg.without_samples())?;
    Ok((tr.ell, tr.exit_state))
}

fn integrate_fixed<M: StationaryMetric>(
    g: &M,
    x0: &PhaseState,
    len: f64,
    cfg: &FlowConfig,
) -> Trajectory {
    let start = x0.to_array();
    let speed = spatial_speed(&hamilton_field(g, &start)).max(1e-3);
    let steps = cfg.steps_for(len, speed);
    let h = len / steps as f64;
    let f = |x: &Phase| hamilton_field(g, x);
    let mut x = start;
    let mut samples = Vec::new();
    if cfg.record {
        samples.reserve(steps + 1);
        samples.push((0.0, *x0));
    }
    for i in 0..steps {
        x = rk4_step(&f, &x, h);
        if cfg.record {
            samples.push(((i + 1) as f64 * h, PhaseState::from_array(&x)));
        }
    }
    Trajectory {
        samples,
        ell: len,
        exit_state: PhaseState::from_array(&x),
    }
}

/// Integrates until the first crossing of `∂Ω` after the ray has been
/// inside `Ω`; the crossing is located by bisection on a partial RK4 step.
fn integrate_until_exit<M: StationaryMetric>(
    g: &M,
    x0: &PhaseState,
    cfg: &FlowConfig,
) -> Result<Trajectory> {
    let d = *g.domain();
    let f = |x: &Phase| hamilton_field(g, x);
    let start = x0.to_array();
    let v0 = f(&start);
    let speed = spatial_speed(&v0);
    if speed == 0.0 {
        return Err(Error::NoExit { budget: cfg.budget });
    }
    let h = cfg.step / speed;
    let max_steps = libm::ceil(cfg.budget / cfg.step) as usize;

    let gap0 = radius_gap(g, &start);
    let mut inside = gap0 < 0.0;
    if gap0.abs() <= 1e-10 * d.r_omega {
        let radial = start[1] * v0[1] + start[2] * v0[2] + start[3] * v0[3];
        if radial >= 0.0 {
            return Err(Error::NotInward);
        }
    }

    let mut samples = Vec::new();
    if cfg.record {
        samples.push((0.0, *x0));
    }
    let mut x = start;
    let mut s = 0.0;
    let mut prev_gap = gap0;
    let mut falling = false;
    for _ in 0..max_steps {
        let next = rk4_step(&f, &x, h);
        let gap = radius_gap(g, &next);
        if inside && gap >= 0.0 {
            // Bisection on the partial step length.
            let (mut lo, mut hi) = (0.0, h);
            let mut best = next;
            while hi - lo > 1e-12 {
                let mid = 0.5 * (lo + hi);
                let y = rk4_step(&f, &x, mid);
                if radius_gap(g, &y) >= 0.0 {
                    hi = mid;
                    best = y;
                } else {
                    lo = mid;
                }
            }
            let ell = s + hi;
            let v = f(&best);
            let r = libm::sqrt(d.radius2(&[best[1], best[2], best[3]]));
            let ratio =
                (best[1] * v[1] + best[2] * v[2] + best[3] * v[3]).abs() / (r * spatial_speed(&v));
            if ratio < cfg.grazing {
                return Err(Error::GrazingRay { ratio });
            }
            let exit_state = PhaseState::from_array(&best);
            if cfg.record {
                samples.push((ell, exit_state));
            }
            return Ok(Trajectory {
                samples,
                ell,
                exit_state,
            });
        }
        if !inside {
            if gap < 0.0 {
                inside = true;
            } else if falling && gap > prev_gap && prev_gap < 4.0 * cfg.step * cfg.step {
                // Closest approach within a step of the boundary: a
                // tangential touch the step cannot resolve.
                let v = f(&x);
                let r = libm::sqrt(d.radius2(&[x[1], x[2], x[3]]));
                let ratio =
                    (x[1] * v[1] + x[2] * v[2] + x[3] * v[3]).abs() / (r * spatial_speed(&v));
                return Err(Error::GrazingRay { ratio });
            } else if gap > d.rho * d.rho && gap > gap0 {
                return Err(Error::MissesDomain);
            }
            falling = gap < prev_gap;
            prev_gap = gap;
        }
        x = next;
        s += h;
        if cfg.record {
            samples.push((s, PhaseState::from_array(&x)));
        }
    }
    if inside {
        Err(Error::NoExit { budget: cfg.budget })
    } else {
        Err(Error::MissesDomain)
    }
}

/// The linearization `A = DV` of the Hamilton field at `x`.
pub fn field_jacobian<M: StationaryMetric>(g: &M, x: &Phase) -> PhaseMatrix {
    let jet = inverse_jet(g, &[x[1], x[2], x[3]]);
    let zeta = [x[4], x[5], x[6], x[7]];
    let dz: [Vec4; 3] = core::array::from_fn(|k| linalg::mat_vec(&jet.d[k], &zeta));
    let mut a = [[0.0; 8]; 8];
    for r in 0..4 {
        for k in 0..3 {
            a[r][1 + k] = dz[k][r];
        }
        for c in 0..4 {
            a[r][4 + c] = jet.ginv[r][c];
        }
    }
    for k in 0..3 {
        for l in 0..3 {
            a[5 + k][1 + l] = -0.5 * linalg::dot(&linalg::mat_vec(&jet.dd[k][l], &zeta), &zeta);
        }
        for c in 0..4 {
            a[5 + k][4 + c] = -dz[k][c];
        }
    }
    a
}

/// `J(s) = ∂X(s)/∂X(0)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VariationalState {
    pub j: PhaseMatrix,
    /// The base point `X(s)`.
    pub end: Phase,
}

impl VariationalState {
    /// `J` restricted to the `2(1+n)` active coordinates.
    pub fn active(&self, n: usize) -> Vec<Vec<f64>> {
        let idx = active_indices(n);
        idx.iter()
            .map(|&r| idx.iter().map(|&c| self.j[r][c]).collect())
            .collect()
    }
}

/// Indices of the phase coordinates that are live in dimension `n`.
pub fn active_indices(n: usize) -> Vec<usize> {
    (0..=n).chain(4..=4 + n).collect()
}

/// Integrates the base flow together with `dJ/ds = A(X(s)) J`, `J(0) = I`.
pub fn variational_flow<M: StationaryMetric>(
    g: &M,
    x0: &PhaseState,
    s: f64,
    cfg: &FlowConfig,
) -> VariationalState {
    let start = x0.to_array();
    let speed = spatial_speed(&hamilton_field(g, &start)).max(1e-3);
    variational_steps(g, &start, s, cfg.steps_for(s, speed))
}

/// Variational flow in exactly `steps` equal steps.
pub fn variational_steps<M: StationaryMetric>(
    g: &M,
    x0: &Phase,
    s: f64,
    steps: usize,
) -> VariationalState {
    let mut y = [0.0; 72];
    y[..8].copy_from_slice(x0);
    for i in 0..8 {
        y[8 + 9 * i] = 1.0;
    }
    let f = |y: &[f64; 72]| -> [f64; 72] {
        let x: Phase = core::array::from_fn(|i| y[i]);
        let v = hamilton_field(g, &x);
        let a = field_jacobian(g, &x);
        let mut out = [0.0; 72];
        out[..8].copy_from_slice(&v);
        for r in 0..8 {
            for c in 0..8 {
                let mut acc = 0.0;
                for k in 0..8 {
                    acc += a[r][k] * y[8 + 8 * k + c];
                }
                out[8 + 8 * r + c] = acc;
            }
        }
        out
    };
    let h = if steps == 0 { 0.0 } else { s / steps as f64 };
    for _ in 0..steps {
        y = rk4_step(&f, &y, h);
    }
    VariationalState {
        j: core::array::from_fn(|r| core::array::from_fn(|c| y[8 + 8 * r + c])),
        end: core::array::from_fn(|i| y[i]),
    }
}

/// Minkowski variational matrix `[[I, s·δ⁻¹], [0, I]]`.
pub fn minkowski_variational(s: f64) -> PhaseMatrix {
    let mut j = linalg::identity::<8>();
    j[0][4] = -s;
    for k in 1..4 {
        j[k][4 + k] = s;
    }
    j
}

/// Spatial Hamilton field for `½ ξᵀh⁻¹ξ`, generic in the scalar type.
pub fn spatial_field<S: Scalar, M: StationaryMetric>(
    g: &M,
    x: &[S; 3],
    xi: &[S; 3],
) -> ([S; 3], [S; 3]) {
    let f = g.fields(&seed(x));
    let hinv = linalg::inverse3(&f.h);
    let value: [[S; 3]; 3] = core::array::from_fn(|i| core::array::from_fn(|j| hinv[i][j].re));
    let dx = linalg::mat3_vec(&value, xi);
    let dxi = core::array::from_fn(|k| {
        let mut acc = S::zero();
        for i in 0..3 {
            for j in 0..3 {
                acc = acc + hinv[i][j].du[k] * xi[i] * xi[j];
            }
        }
        acc * -0.5
    });
    (dx, dxi)
}

/// Spatial flow for parameter `len` in `steps` equal RK4 steps.
pub fn spatial_flow<S: Scalar, M: StationaryMetric>(
    g: &M,
    x: &[S; 3],
    xi: &[S; 3],
    len: f64,
    steps: usize,
) -> ([S; 3], [S; 3]) {
    let f = |y: &[S; 6]| -> [S; 6] {
        let (dx, dxi) = spatial_field(g, &[y[0], y[1], y[2]], &[y[3], y[4], y[5]]);
        [dx[0], dx[1], dx[2], dxi[0], dxi[1], dxi[2]]
    };
    let mut y = [x[0], x[1], x[2], xi[0], xi[1], xi[2]];
    let h = len / steps as f64;
    for _ in 0..steps {
        y = rk4_step(&f, &y, h);
    }
    ([y[0], y[1], y[2]], [y[3], y[4], y[5]])
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpatialTrajectory {
    /// `(s, x, ξ)` at every step.
    pub samples: Vec<(f64, Vec3, Vec3)>,
}

/// The unit-speed `h`-geodesic leaving `(H_offset, x₀′)` with `ξ = e₁`,
/// followed until it is as far beyond `Ω` as it started before it.
pub fn integrate_riemannian<M: StationaryMetric>(
    g: &M,
    x0_prime: &[f64; 2],
    cfg: &FlowConfig,
) -> SpatialTrajectory {
    let d = g.domain();
    let len = 2.0 * d.h_offset.abs();
    let steps = cfg.steps_for(len, 1.0);
    let h = len / steps as f64;
    let f = |y: &[f64; 6]| -> [f64; 6] {
        let (dx, dxi) = spatial_field(g, &[y[0], y[1], y[2]], &[y[3], y[4], y[5]]);
        [dx[0], dx[1], dx[2], dxi[0], dxi[1], dxi[2]]
    };
    let mut y = [d.h_offset, x0_prime[0], x0_prime[1], 1.0, 0.0, 0.0];
    if d.n == 2 {
        y[2] = 0.0;
    }
    let mut samples = Vec::with_capacity(steps + 1);
    samples.push((0.0, [y[0], y[1], y[2]], [y[3], y[4], y[5]]));
    for i in 0..steps {
        y = rk4_step(&f, &y, h);
        samples.push(((i + 1) as f64 * h, [y[0], y[1], y[2]], [y[3], y[4], y[5]]));
    }
    SpatialTrajectory { samples }
}

/// Drift `|H(X) - H(X₀)|` along recorded samples, per unit parameter.
pub fn hamiltonian_drift<M: StationaryMetric>(g: &M, traj: &Trajectory) -> f64 {
    let Some((_, first)) = traj.samples.first() else {
        return 0.0;
    };
    let h0 = hamiltonian(g, first);
    let worst = traj
        .samples
        .iter()
        .map(|(_, x)| (hamiltonian(g, x) - h0).abs())
        .fold(0.0, f64::max);
    worst / traj.ell.abs().max(1.0)
}

/// `det` of a phase-space matrix.
pub fn phase_det(j: &PhaseMatrix) -> f64 {
    linalg::det(j)
}

/// Minkowski-space matrix used to form `B = J - [[I, (ℓ-s)δ], [0, I]]`.
pub fn phase_identity() -> PhaseMatrix {
    linalg::identity::<8>()
}

pub fn mat4_block(j: &PhaseMatrix, r: usize, c: usize) -> Mat4 {
    core::array::from_fn(|a| core::array::from_fn(|b| j[4 * r + a][4 * c + b]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::{BumpFamilyParams, BumpMetric, BumpTerm, Minkowski, SpatialDomain};
    use alloc::vec;

    fn bump(n: usize, eps: f64) -> BumpMetric {
        BumpMetric::new(
            SpatialDomain::standard(n),
            BumpFamilyParams {
                epsilon: eps,
                special_form: false,
                bumps: vec![BumpTerm {
                    center: [0.1, 0.05, -0.1],
                    width: 0.7,
                    lambda: 1.0,
                    omega: [0.5, -0.4, 0.3],
                    h: [[0.6, 0.2, 0.1], [0.2, -0.4, 0.3], [0.1, 0.3, 0.5]],
                }],
            },
        )
        .unwrap()
    }

    #[test]
    fn hamiltonian_values() {
        let g = Minkowski {
            domain: SpatialDomain::standard(3),
        };
        let h = |zeta| hamiltonian(&g, &PhaseState::new([0.0; 4], zeta));
        assert_eq!(h([-1.0, 0.0, 0.0, 0.0]), -0.5);
        assert_eq!(h([-1.0, 1.0, 0.0, 0.0]), 0.0);
        assert!((h([-1.1, 0.6, 0.8, 0.0]) + 0.105).abs() < 1e-15);
    }

    #[test]
    fn minkowski_rays_are_straight() {
        let g = Minkowski {
            domain: SpatialDomain::standard(2),
        };
        let x0 = PhaseState::new([0.0, -1.0, 0.0, 0.0], [-1.0, 1.0, 0.0, 0.0]);
        let tr =
            integrate_bicharacteristic(&g, &x0, FlowMode::UntilExit, &FlowConfig::for_rho(1.5))
                .unwrap();
        assert!((tr.ell - 2.0).abs() < 1e-11);
        for (s, x) in &tr.samples {
            let want = [*s, -1.0 + s, 0.0, 0.0];
            assert!(linalg::max_abs_diff(&x.z, &want) < 1e-12);
            assert_eq!(x.zeta, x0.zeta);
        }
    }

    #[test]
    fn boundary_start_must_point_inward() {
        let g = Minkowski {
            domain: SpatialDomain::standard(2),
        };
        let x0 = PhaseState::new([0.0, -1.0, 0.0, 0.0], [-1.0, -1.0, 0.0, 0.0]);
        let r = integrate_bicharacteristic(&g, &x0, FlowMode::UntilExit, &FlowConfig::for_rho(1.5));
        assert_eq!(r.unwrap_err(), Error::NotInward);
    }

    #[test]
    fn grazing_and_missing_rays() {
        let g = Minkowski {
            domain: SpatialDomain::standard(2),
        };
        let cfg = FlowConfig::for_rho(1.5);
        let miss = PhaseState::new([0.0, -1.4, 1.2, 0.0], [-1.0, 1.0, 0.0, 0.0]);
        assert_eq!(
            integrate_bicharacteristic(&g, &miss, FlowMode::UntilExit, &cfg).unwrap_err(),
            Error::MissesDomain
        );
        let graze = PhaseState::new([0.0, -1.4, 1.0 - 1e-10, 0.0], [-1.0, 1.0, 0.0, 0.0]);
        assert!(matches!(
            integrate_bicharacteristic(&g, &graze, FlowMode::UntilExit, &cfg),
            Err(Error::GrazingRay { .. })
        ));
    }

    #[test]
    fn exit_lies_on_boundary() {
        let g = bump(3, 1e-2);
        let x0 = PhaseState::new([0.0, -1.0, 0.0, 0.0], [-1.05, 0.9, 0.3, 0.2]);
        let tr =
            integrate_bicharacteristic(&g, &x0, FlowMode::UntilExit, &FlowConfig::for_rho(1.5))
                .unwrap();
        let r = linalg::norm(&tr.exit_state.x());
        assert!((r - 1.0).abs() < 1e-10);
    }

    #[test]
    fn time_reversal_returns() {
        let g = bump(2, 1e-2);
        let cfg = FlowConfig::for_rho(1.5);
        let x0 = PhaseState::new([0.3, -0.6, 0.2, 0.0], [-1.05, 0.8, 0.6, 0.0]);
        let end = flow_steps(&g, &x0.to_array(), 1.3, 1000);
        let back = flow_steps(
            &g,
            &PhaseState::from_array(&end).reversed().to_array(),
            1.3,
            1000,
        );
        let back = PhaseState::from_array(&back);
        assert!(linalg::max_abs_diff(&back.x(), &x0.x()) < 1e-10);
        assert!(linalg::max_abs_diff(&back.reversed().zeta, &x0.zeta) < 1e-10);
        let _ = cfg;
    }

    #[test]
    fn variational_minkowski_and_identity() {
        let g = Minkowski {
            domain: SpatialDomain::standard(3),
        };
        let x0 = PhaseState::new([0.0, -0.5, 0.1, 0.0], [-1.05, 0.6, 0.8, 0.0]);
        let j = variational_steps(&g, &x0.to_array(), 0.7, 50).j;
        let want = minkowski_variational(0.7);
        for r in 0..8 {
            assert!(linalg::max_abs_diff(&j[r], &want[r]) < 1e-13);
        }
        let g = bump(3, 1e-2);
        assert_eq!(
            variational_steps(&g, &x0.to_array(), 0.0, 0).j,
            linalg::identity::<8>()
        );
    }

    #[test]
    fn variational_matches_finite_differences() {
        let g = bump(3, 1e-2);
        let x0 = [0.0, -0.6, 0.1, 0.05, -1.05, 0.8, 0.5, 0.3];
        let steps = 600;
        let j = variational_steps(&g, &x0, 1.0, steps).j;
        let h = 1e-5;
        for c in 0..8 {
            let mut p = x0;
            let mut m = x0;
            p[c] += h;
            m[c] -= h;
            let (fp, fm) = (
                flow_steps(&g, &p, 1.0, steps),
                flow_steps(&g, &m, 1.0, steps),
            );
            for r in 0..8 {
                let fd = (fp[r] - fm[r]) / (2.0 * h);
                assert!(
                    (fd - j[r][c]).abs() < 1e-6,
                    "entry {r},{c}: {fd} vs {}",
                    j[r][c]
                );
            }
        }
        assert!((phase_det(&j) - 1.0).abs() < 1e-6);
    }

    #[test]
    fn special_form_riemannian_flow_keeps_covector() {
        let mut g = bump(3, 1e-2);
        g = BumpMetric::new(
            *g.domain(),
            BumpFamilyParams {
                special_form: true,
                ..g.params().clone()
            },
        )
        .unwrap();
        let tr = integrate_riemannian(&g, &[0.1, -0.2], &FlowConfig::for_rho(1.5));
        for (_, _, xi) in &tr.samples {
            assert!((xi[0] - 1.0).abs() < 1e-14);
        }
    }
}

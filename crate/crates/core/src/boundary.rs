//! Boundary measurements: time separation by shooting, tables of it on the
//! boundary cylinder, the scattering relation, its recovery from `τ`
//! alone, and Riemannian boundary distance.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::flow::{
    flow_steps, hamiltonian, integrate_bicharacteristic, spatial_flow, variational_steps,
    FlowConfig, FlowMode, PhaseState,
};
use crate::linalg::{self, Vec3, Vec4};
use crate::metric::StationaryMetric;
use crate::scalar::{Dual, Scalar};

/// A spacetime event `(t, x)`; in tables `x` lies on `∂Ω`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundaryEvent {
    pub t: f64,
    pub x: Vec3,
}

impl BoundaryEvent {
    pub fn new(t: f64, x: Vec3) -> Self {
        BoundaryEvent { t, x }
    }

    pub fn z(&self) -> Vec4 {
        [self.t, self.x[0], self.x[1], self.x[2]]
    }

    pub fn shifted(&self, dt: f64) -> Self {
        BoundaryEvent {
            t: self.t + dt,
            x: self.x,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum TauStatus {
    Ok,
    NotCausal,
    Failed(Error),
}

#[derive(Clone, Debug, PartialEq)]
pub struct TauSample {
    pub z: BoundaryEvent,
    pub y: BoundaryEvent,
    pub tau: f64,
    pub status: TauStatus,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ShootingConfig {
    pub flow: FlowConfig,
    /// Newton stops once the endpoint misses the target by less than this.
    pub tol: f64,
    pub max_iter: usize,
}

impl ShootingConfig {
    pub fn for_rho(rho: f64) -> Self {
        ShootingConfig {
            flow: FlowConfig::for_rho(rho).without_samples(),
            tol: 1e-11,
            max_iter: 50,
        }
    }
}

/// Converged shooting solution.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Shot {
    pub tau: f64,
    /// Initial covector reaching `y` at flow parameter 1.
    pub zeta: Vec4,
    pub iterations: usize,
    pub residual: f64,
}

/// `τ_g(z, y)`; zero when `y` is not in the causal future of `z`.
pub fn time_separation<M: StationaryMetric>(
    g: &M,
    z: &BoundaryEvent,
    y: &BoundaryEvent,
    cfg: &ShootingConfig,
) -> Result<f64> {
    Ok(shoot_time_separation(g, z, y, cfg)?.map_or(0.0, |s| s.tau))
}

/// Shooting for the timelike geodesic from `z` to `y`. `Ok(None)` marks a
/// pair that is not causally related.
///
/// The unknown is the initial covector with the flow parameter fixed at
/// one, so `τ = √(-2H)`. Newton starts from the Minkowski covector
/// `(-Δt, Δx)` and reuses its Jacobian while the residual contracts.
pub fn shoot_time_separation<M: StationaryMetric>(
    g: &M,
    z: &BoundaryEvent,
    y: &BoundaryEvent,
    cfg: &ShootingConfig,
) -> Result<Option<Shot>> {
    let n = g.domain().n;
    let dt = y.t - z.t;
    let dx = linalg::sub(&y.x, &z.x);
    let dist = linalg::norm(&dx);
    // Outside Ω the metric is Minkowski; pairs outside its closed light
    // cone are treated as causally unrelated.
    if dt <= dist {
        return Ok(None);
    }
    let mut zeta = [-dt, dx[0], dx[1], dx[2]];
    let start = z.z();
    let steps = cfg.flow.steps_for(1.0, dist.max(1e-3));
    let active: Vec<usize> = (0..=n).collect();

    let residual_at = |zeta: &Vec4| -> Vec4 {
        let x0 = PhaseState::new(start, *zeta).to_array();
        let end = flow_steps(g, &x0, 1.0, steps);
        [
            end[0] - y.t,
            end[1] - y.x[0],
            end[2] - y.x[1],
            end[3] - y.x[2],
        ]
    };
    let jacobian_at = |zeta: &Vec4| -> Vec<Vec<f64>> {
        let x0 = PhaseState::new(start, *zeta).to_array();
        let j = variational_steps(g, &x0, 1.0, steps).j;
        active
            .iter()
            .map(|&r| active.iter().map(|&c| j[r][4 + c]).collect())
            .collect()
    };

    let mut r = residual_at(&zeta);
    let mut norm = linalg::norm(&r);
    let mut jac: Option<Vec<Vec<f64>>> = None;
    let mut iterations = 0;
    while norm > cfg.tol {
        if iterations >= cfg.max_iter {
            return Err(Error::NoConvergence {
                iterations,
                residual: norm,
            });
        }
        iterations += 1;
        let j = jac.get_or_insert_with(|| jacobian_at(&zeta));
        let rhs: Vec<f64> = active.iter().map(|&i| -r[i]).collect();
        let step = solve_dense(j, &rhs).ok_or(Error::NoConvergence {
            iterations,
            residual: norm,
        })?;
        let mut trial = zeta;
        for (k, &i) in active.iter().enumerate() {
            trial[i] += step[k];
        }
        let r_new = residual_at(&trial);
        let norm_new = linalg::norm(&r_new);
        if norm_new > 0.5 * norm {
            // Stale Jacobian: refresh before the next step.
            jac = None;
        }
        if norm_new < norm || jac.is_none() {
            zeta = trial;
            r = r_new;
            norm = norm_new;
        }
    }
    let h = hamiltonian(g, &PhaseState::new(start, zeta));
    if h >= 0.0 || zeta[0] >= 0.0 {
        return Ok(None);
    }
    Ok(Some(Shot {
        tau: libm::sqrt(-2.0 * h),
        zeta,
        iterations,
        residual: norm,
    }))
}

fn solve_dense(a: &[Vec<f64>], b: &[f64]) -> Option<Vec<f64>> {
    match a.len() {
        3 => {
            let m: [[f64; 3]; 3] = core::array::from_fn(|i| core::array::from_fn(|j| a[i][j]));
            linalg::solve(&m, &[b[0], b[1], b[2]]).map(|v| v.to_vec())
        }
        4 => {
            let m: [[f64; 4]; 4] = core::array::from_fn(|i| core::array::from_fn(|j| a[i][j]));
            linalg::solve(&m, &[b[0], b[1], b[2], b[3]]).map(|v| v.to_vec())
        }
        2 => {
            let m: [[f64; 2]; 2] = core::array::from_fn(|i| core::array::from_fn(|j| a[i][j]));
            linalg::solve(&m, &[b[0], b[1]]).map(|v| v.to_vec())
        }
        _ => None,
    }
}

/// Spatial cone restricting pairs to chords within `half_angle` of `±e₁`.
pub fn in_cone(x: &Vec3, y: &Vec3, half_angle: Option<f64>) -> bool {
    let Some(a) = half_angle else {
        return true;
    };
    let d = linalg::sub(y, x);
    let len = linalg::norm(&d);
    len > 0.0 && (d[0].abs() / len) >= libm::cos(a)
}

/// `τ` for every pair `(z, y)` in `zs × ys` passing the cone, with all
/// `z` translated to `t = 0` (lossless by stationarity).
pub fn tau_table<M: StationaryMetric>(
    g: &M,
    zs: &[BoundaryEvent],
    ys: &[BoundaryEvent],
    cone: Option<f64>,
    cfg: &ShootingConfig,
) -> Vec<TauSample> {
    table_pairs(zs, ys, cone)
        .into_iter()
        .map(|(z, y)| tau_sample(g, &z, &y, cfg))
        .collect()
}

/// The pairs visited by [`tau_table`], in table order.
pub fn table_pairs(
    zs: &[BoundaryEvent],
    ys: &[BoundaryEvent],
    cone: Option<f64>,
) -> Vec<(BoundaryEvent, BoundaryEvent)> {
    let mut out = Vec::new();
    for z in zs {
        for y in ys {
            if in_cone(&z.x, &y.x, cone) {
                out.push((z.shifted(-z.t), y.shifted(-z.t)));
            }
        }
    }
    out
}

pub fn tau_sample<M: StationaryMetric>(
    g: &M,
    z: &BoundaryEvent,
    y: &BoundaryEvent,
    cfg: &ShootingConfig,
) -> TauSample {
    let (tau, status) = match shoot_time_separation(g, z, y, cfg) {
        Ok(Some(s)) => (s.tau, TauStatus::Ok),
        Ok(None) => (0.0, TauStatus::NotCausal),
        Err(e) => (f64::NAN, TauStatus::Failed(e)),
    };
    TauSample {
        z: *z,
        y: *y,
        tau,
        status,
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScatteringDatum {
    pub entry: PhaseState,
    pub exit: PhaseState,
    pub ell: f64,
}

pub fn scattering_relation<M: StationaryMetric>(
    g: &M,
    entry: &PhaseState,
    cfg: &FlowConfig,
) -> Result<ScatteringDatum> {
    let cfg = cfg.without_samples();
    let tr = integrate_bicharacteristic(g, entry, FlowMode::UntilExit, &cfg)?;
    Ok(ScatteringDatum {
        entry: *entry,
        exit: tr.exit_state,
        ell: tr.ell,
    })
}

/// Anything that can report `τ(z, y)`.
pub trait TauSource {
    fn tau(&self, z: &BoundaryEvent, y: &BoundaryEvent) -> Result<f64>;
}

impl<F: Fn(&BoundaryEvent, &BoundaryEvent) -> Result<f64>> TauSource for F {
    fn tau(&self, z: &BoundaryEvent, y: &BoundaryEvent) -> Result<f64> {
        self(z, y)
    }
}

/// Shooting-based `τ` for a metric.
pub struct ShootingTau<'a, M> {
    pub g: &'a M,
    pub cfg: ShootingConfig,
}

impl<M: StationaryMetric> TauSource for ShootingTau<'_, M> {
    fn tau(&self, z: &BoundaryEvent, y: &BoundaryEvent) -> Result<f64> {
        time_separation(self.g, z, y, &self.cfg)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RecoveryConfig {
    /// Finite-difference step in `t` and in boundary angle.
    pub step: f64,
    /// Largest accepted disagreement between the `h` and `2h` stencils.
    pub smoothness: f64,
    /// Smallest accepted eikonal discriminant.
    pub min_discriminant: f64,
}

impl Default for RecoveryConfig {
    fn default() -> Self {
        RecoveryConfig {
            step: 1e-3,
            smoothness: 1e-3,
            min_discriminant: 1e-8,
        }
    }
}

/// Orthonormal tangent vectors to the sphere `|x| = r` at `x` (first `n-1`
/// are meaningful).
pub fn tangent_basis(x: &Vec3, n: usize) -> [Vec3; 2] {
    let r = linalg::norm(x);
    let u = linalg::scale(x, 1.0 / r);
    if n == 2 {
        return [[-u[1], u[0], 0.0], [0.0; 3]];
    }
    let helper = if u[0].abs() < 0.9 {
        [1.0, 0.0, 0.0]
    } else {
        [0.0, 1.0, 0.0]
    };
    let a = linalg::sub(&helper, &linalg::scale(&u, linalg::dot(&helper, &u)));
    let a = linalg::scale(&a, 1.0 / linalg::norm(&a));
    let b = [
        u[1] * a[2] - u[2] * a[1],
        u[2] * a[0] - u[0] * a[2],
        u[0] * a[1] - u[1] * a[0],
    ];
    [a, b]
}

/// Exit covector at `y` of the geodesic from `z`, recovered from `τ`
/// alone: tangential derivatives by Richardson-extrapolated centered
/// differences, the normal one from `-(∂ₜτ)² + |∇_Tτ|² + (∂_ντ)² = -1` on
/// the exiting branch, then
/// `ζ = -c ∇τ` with `c = √(-2H)` of the entry normalization.
pub fn recover_scattering_from_tau(
    src: &impl TauSource,
    z: &BoundaryEvent,
    y: &BoundaryEvent,
    n: usize,
    entry_hamiltonian: f64,
    cfg: &RecoveryConfig,
) -> Result<Vec4> {
    let r = linalg::norm(&y.x);
    let nu = linalg::scale(&y.x, 1.0 / r);
    let basis = tangent_basis(&y.x, n);

    let along = |dir: Option<usize>, h: f64| -> Result<f64> {
        let shifted = |s: f64| -> BoundaryEvent {
            match dir {
                None => y.shifted(s),
                Some(a) => {
                    let ang = s / r;
                    let e = basis[a];
                    BoundaryEvent::new(
                        y.t,
                        core::array::from_fn(|k| {
                            libm::cos(ang) * y.x[k] + libm::sin(ang) * r * e[k]
                        }),
                    )
                }
            }
        };
        Ok((src.tau(z, &shifted(h))? - src.tau(z, &shifted(-h))?) / (2.0 * h))
    };
    let derivative = |dir: Option<usize>| -> Result<f64> {
        let d1 = along(dir, cfg.step)?;
        let d2 = along(dir, 2.0 * cfg.step)?;
        let mismatch = (d1 - d2).abs();
        if mismatch > cfg.smoothness * d1.abs().max(1.0) {
            return Err(Error::NonsmoothTau { mismatch });
        }
        // Richardson: cancels the h² term of the centered stencil.
        Ok((4.0 * d1 - d2) / 3.0)
    };

    let dt = derivative(None)?;
    let mut grad_x = [0.0; 3];
    let mut tangential2 = 0.0;
    for a in 0..n - 1 {
        let d = derivative(Some(a))?;
        tangential2 += d * d;
        grad_x = linalg::add(&grad_x, &linalg::scale(&basis[a], d));
    }
    let discriminant = dt * dt - tangential2 - 1.0;
    if discriminant < cfg.min_discriminant {
        return Err(Error::DegenerateRoot { discriminant });
    }
    let dnu = -libm::sqrt(discriminant);
    grad_x = linalg::add(&grad_x, &linalg::scale(&nu, dnu));
    let c = libm::sqrt(-2.0 * entry_hamiltonian);
    Ok([-c * dt, -c * grad_x[0], -c * grad_x[1], -c * grad_x[2]])
}

/// Riemannian distance between two points by shooting the spatial Hamilton
/// system; the Jacobian of the endpoint comes from dual numbers carried
/// through the integrator.
pub fn riemannian_distance<M: StationaryMetric>(
    g: &M,
    x: &Vec3,
    y: &Vec3,
    cfg: &ShootingConfig,
) -> Result<f64> {
    let n = g.domain().n;
    let d = linalg::sub(y, x);
    let dist = linalg::norm(&d);
    if dist == 0.0 {
        return Ok(0.0);
    }
    let steps = cfg.flow.steps_for(1.0, dist);
    let mut xi = d;
    let mut iterations = 0;
    loop {
        let seeded: [Dual<f64>; 3] = core::array::from_fn(|k| Dual::variable(xi[k], k));
        let xs: [Dual<f64>; 3] = core::array::from_fn(|k| Dual::constant(x[k]));
        let (end, _) = spatial_flow(g, &xs, &seeded, 1.0, steps);
        let r: Vec3 = core::array::from_fn(|k| end[k].value() - y[k]);
        let norm = linalg::norm(&r);
        if norm <= cfg.tol {
            break;
        }
        if iterations >= cfg.max_iter {
            return Err(Error::NoConvergence {
                iterations,
                residual: norm,
            });
        }
        iterations += 1;
        let jac: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..n).map(|j| end[i].du[j]).collect())
            .collect();
        let rhs: Vec<f64> = (0..n).map(|i| -r[i]).collect();
        let step = solve_dense(&jac, &rhs).ok_or(Error::NoConvergence {
            iterations,
            residual: norm,
        })?;
        for k in 0..n {
            xi[k] += step[k];
        }
    }
    let h = g.fields(x).h;
    let hinv = linalg::inverse(&h).ok_or(Error::Singular {
        condition: f64::INFINITY,
    })?;
    Ok(libm::sqrt(linalg::dot(&linalg::mat_vec(&hinv, &xi), &xi)))
}

/// Distances for every pair in `xs × ys` passing the cone; failures are
/// recorded as `Err`.
pub fn boundary_distance_table<M: StationaryMetric>(
    g: &M,
    xs: &[Vec3],
    ys: &[Vec3],
    cone: Option<f64>,
    cfg: &ShootingConfig,
) -> Vec<(Vec3, Vec3, Result<f64>)> {
    let mut out = Vec::new();
    for x in xs {
        for y in ys {
            if in_cone(x, y, cone) {
                out.push((*x, *y, riemannian_distance(g, x, y, cfg)));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::{Minkowski, SpatialDomain};

    fn flat(n: usize) -> Minkowski {
        Minkowski {
            domain: SpatialDomain::standard(n),
        }
    }

    #[test]
    fn minkowski_time_separation() {
        let g = flat(2);
        let cfg = ShootingConfig::for_rho(1.5);
        let x = [-1.0, 0.0, 0.0];
        let y = [0.0, 0.0, 0.0];
        let tau = time_separation(
            &g,
            &BoundaryEvent::new(0.0, x),
            &BoundaryEvent::new(2.0, y),
            &cfg,
        )
        .unwrap();
        assert!((tau - 3f64.sqrt()).abs() < 1e-12);
        let tau = time_separation(
            &g,
            &BoundaryEvent::new(0.0, x),
            &BoundaryEvent::new(0.5, y),
            &cfg,
        )
        .unwrap();
        assert_eq!(tau, 0.0);
    }

    #[test]
    fn minkowski_recovery() {
        let g = flat(3);
        let cfg = ShootingConfig::for_rho(1.5);
        let src = ShootingTau { g: &g, cfg };
        let z = BoundaryEvent::new(0.0, [-1.0, 0.0, 0.0]);
        let xi = [0.8, 0.6, 0.0];
        let zeta0 = [-1.05, xi[0], xi[1], xi[2]];
        let entry = PhaseState::new(z.z(), zeta0);
        let sc = scattering_relation(&g, &entry, &cfg.flow).unwrap();
        let y = BoundaryEvent::new(sc.exit.z[0], sc.exit.x());
        let h0 = hamiltonian(&g, &entry);
        let rec =
            recover_scattering_from_tau(&src, &z, &y, 3, h0, &RecoveryConfig::default()).unwrap();
        assert!(linalg::max_abs_diff(&rec, &zeta0) < 1e-6, "{rec:?}");
    }

    #[test]
    fn euclidean_distance() {
        let g = flat(3);
        let cfg = ShootingConfig::for_rho(1.5);
        let d = riemannian_distance(&g, &[-1.0, 0.0, 0.0], &[0.6, 0.8, 0.0], &cfg).unwrap();
        assert!((d - (1.6f64 * 1.6 + 0.64).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn cone_filter() {
        assert!(in_cone(&[-1.0, 0.0, 0.0], &[1.0, 0.1, 0.0], Some(0.2)));
        assert!(!in_cone(&[-1.0, 0.0, 0.0], &[0.0, 1.0, 0.0], Some(0.2)));
        assert!(in_cone(&[-1.0, 0.0, 0.0], &[0.0, 1.0, 0.0], None));
    }
}

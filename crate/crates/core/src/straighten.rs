//! Straightening: the change of coordinates that turns the `h`-geodesics
//! leaving the reference hyperplane normally into straight lines, the
//! resulting pullbacks, and the tensor difference `m = g̃₁⁻¹ - g̃₂⁻¹`.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::flow::spatial_field;
use crate::lattice::Lattice;
use crate::linalg::{self, Mat4, Vec3};
use crate::metric::{Pullback, SpatialMap, StationaryMetric};
use crate::scalar::{seed, Dual, Scalar};

/// `ψ(y) = x(y¹ - H_offset; (H_offset, y′))`: follow the unit-speed
/// geodesic leaving `(H_offset, y′)` along `e₁` for the distance `y` sits
/// beyond the hyperplane.
///
/// Before the geodesic meets `Ω` it is the straight line, so integration
/// starts at the entry point `(-√(r² - |y′|²), y′)` with a fixed number of
/// equal substeps; `ψ` is then exactly smooth in `y` inside `Ω`.
#[derive(Clone, Debug)]
pub struct Straightening<M> {
    g: M,
    substeps: usize,
    cache: Option<PsiCache>,
}

/// `ψ` sampled on a lattice for cheap multilinear interpolation.
#[derive(Clone, Debug)]
pub struct PsiCache {
    lattice: Lattice,
    values: Vec<Vec3>,
}

impl<M: StationaryMetric> Straightening<M> {
    pub fn new(g: M, substeps: usize) -> Self {
        Straightening {
            g,
            substeps: substeps.max(1),
            cache: None,
        }
    }

    pub fn metric(&self) -> &M {
        &self.g
    }

    fn generic_map<S: Scalar>(&self, y: &[S; 3]) -> [S; 3] {
        let d = self.g.domain();
        let n = d.n;
        let r2: f64 = (1..n).map(|k| y[k].value() * y[k].value()).sum();
        let rr = d.r_omega * d.r_omega;
        if r2 >= rr {
            return *y;
        }
        let mut q = S::zero();
        for k in 1..n {
            q = q + y[k] * y[k];
        }
        let entry = -((-q + rr).sqrt());
        let len = y[0] - entry;
        if len.value() <= 0.0 {
            return *y;
        }
        let mut state = [entry, y[1], y[2], S::one(), S::zero(), S::zero()];
        // Past the exit chord the metric is flat and the geodesic a line:
        // integrate only up to just beyond it and extend linearly.
        let chord = -entry * 2.0 + EXIT_MARGIN;
        let (span, rest) = if len.value() > chord.value() {
            (chord, len - chord)
        } else {
            (len, S::zero())
        };
        let h = span * (1.0 / self.substeps as f64);
        let f = |u: &[S; 6]| -> [S; 6] {
            let (dx, dxi) = spatial_field(&self.g, &[u[0], u[1], u[2]], &[u[3], u[4], u[5]]);
            [dx[0], dx[1], dx[2], dxi[0], dxi[1], dxi[2]]
        };
        for _ in 0..self.substeps {
            let k1 = f(&state);
            let k2 = f(&core::array::from_fn(|i| state[i] + k1[i] * h * 0.5));
            let k3 = f(&core::array::from_fn(|i| state[i] + k2[i] * h * 0.5));
            let k4 = f(&core::array::from_fn(|i| state[i] + k3[i] * h));
            state = core::array::from_fn(|i| {
                state[i] + (k1[i] + k2[i] * 2.0 + k3[i] * 2.0 + k4[i]) * h * (1.0 / 6.0)
            });
        }
        if rest.value() > 0.0 {
            let v = f(&state);
            return [
                state[0] + v[0] * rest,
                state[1] + v[1] * rest,
                state[2] + v[2] * rest,
            ];
        }
        [state[0], state[1], state[2]]
    }

    /// `ψ⁻¹(x)` by Newton from `y = x`.
    pub fn inverse(&self, x: &Vec3) -> Result<Vec3> {
        let n = self.g.domain().n;
        let mut y = *x;
        let mut norm = f64::INFINITY;
        for _ in 0..50 {
            let r = linalg::sub(&self.map(&y), x);
            let prev = norm;
            norm = linalg::norm(&r);
            // Long integrations leave a round-off floor near 1e-14; a
            // residual that stops shrinking there has converged.
            if norm < 1e-14 || (norm < 1e-11 && norm > 0.5 * prev) {
                return Ok(y);
            }
            let jac = self.jacobian(&y);
            let mut j = jac;
            for k in n..3 {
                j[k] = [0.0; 3];
                j[k][k] = 1.0;
            }
            let det = linalg::det(&j);
            if det <= 0.0 {
                return Err(Error::FoldDetected { det });
            }
            let step = linalg::solve(&j, &r).ok_or(Error::FoldDetected { det })?;
            y = linalg::sub(&y, &step);
        }
        Err(Error::NoConvergence {
            iterations: 50,
            residual: norm,
        })
    }

    /// Samples `ψ` on `lattice` (computed per point, no sharing), enabling
    /// [`Straightening::interpolate`].
    pub fn with_cache(mut self, lattice: Lattice) -> Self {
        let values = lattice.points().iter().map(|y| self.map(y)).collect();
        self.cache = Some(PsiCache { lattice, values });
        self
    }

    /// Multilinear interpolation of the cached lattice; falls back to
    /// direct evaluation outside it or without a cache.
    pub fn interpolate(&self, y: &Vec3) -> Vec3 {
        let Some(c) = &self.cache else {
            return self.map(y);
        };
        let l = &c.lattice;
        let n = l.n;
        let mut base = [0usize; 3];
        let mut frac = [0.0; 3];
        for a in 0..n {
            let u = (y[a] + l.half) / l.spacing();
            let i = libm::floor(u);
            if i < 0.0 || i as usize + 1 >= l.count {
                return self.map(y);
            }
            base[a] = i as usize;
            frac[a] = u - i;
        }
        let mut out = [0.0; 3];
        for corner in 0..(1usize << n) {
            let mut idx = base;
            let mut w = 1.0;
            for a in 0..n {
                if corner >> a & 1 == 1 {
                    idx[a] += 1;
                    w *= frac[a];
                } else {
                    w *= 1.0 - frac[a];
                }
            }
            let v = c.values[l.flat(&idx)];
            for k in 0..3 {
                out[k] += w * v[k];
            }
        }
        if n == 2 {
            out[2] = y[2];
        }
        out
    }

    /// `sup |ψ(y) - y|` over the given points.
    pub fn displacement_sup(&self, points: &[Vec3]) -> f64 {
        points
            .iter()
            .map(|y| linalg::norm(&linalg::sub(&self.map(y), y)))
            .fold(0.0, f64::max)
    }

    /// Smallest `det Dψ` over the given points.
    pub fn min_jacobian_det(&self, points: &[Vec3]) -> f64 {
        points
            .iter()
            .map(|y| linalg::det(&self.jacobian(y)))
            .fold(f64::INFINITY, f64::min)
    }
}

impl<M: StationaryMetric> SpatialMap for Straightening<M> {
    fn map<S: Scalar>(&self, x: &[S; 3]) -> [S; 3] {
        self.generic_map(x)
    }

    fn jacobian<S: Scalar>(&self, x: &[S; 3]) -> [[S; 3]; 3] {
        let m: [Dual<S>; 3] = self.generic_map(&seed(x));
        core::array::from_fn(|i| core::array::from_fn(|j| m[i].du[j]))
    }
}

/// Substeps used for the straightening integration.
pub const DEFAULT_SUBSTEPS: usize = 300;

/// Parameter past the exit chord `2√(r² - |y′|²)` after which straightening
/// geodesics are continued as lines.
const EXIT_MARGIN: f64 = 0.1;

/// Straightening for the spatial part of `g`, checked for folds on the
/// `check^n` lattice covering `Ω̄`.
pub fn build_straightening<M: StationaryMetric>(g: M, check: usize) -> Result<Straightening<M>> {
    let psi = Straightening::new(g, DEFAULT_SUBSTEPS);
    let d = *psi.g.domain();
    let pts = closed_grid(d.n, check, d.r_omega);
    let det = psi.min_jacobian_det(&pts);
    if !(det > 0.0) {
        return Err(Error::FoldDetected { det });
    }
    Ok(psi)
}

/// `check^n` points on `[-r, r]ⁿ` including both faces.
pub fn closed_grid(n: usize, count: usize, r: f64) -> Vec<Vec3> {
    let count = count.max(2);
    let c = |i: usize| -r + 2.0 * r * i as f64 / (count - 1) as f64;
    let mut out = Vec::new();
    for i in 0..count {
        for j in 0..count {
            if n == 2 {
                out.push([c(i), c(j), 0.0]);
            } else {
                for k in 0..count {
                    out.push([c(i), c(j), c(k)]);
                }
            }
        }
    }
    out
}

pub type StraightenedMetric<M> = Pullback<M, Straightening<M>>;

/// `(Id × ψ)*g` in the straightened chart.
pub fn pullback_full<M: StationaryMetric>(g: M, psi: Straightening<M>) -> StraightenedMetric<M> {
    Pullback::unchecked(g, psi)
}

/// Builds the straightening of `g` and pulls `g` back by it.
pub fn straighten<M: StationaryMetric + Clone>(
    g: &M,
    check: usize,
) -> Result<StraightenedMetric<M>> {
    let psi = build_straightening(g.clone(), check)?;
    Ok(pullback_full(g.clone(), psi))
}

/// `max |h̃₁₁ - 1|, |h̃₁ⱼ|, |ω̃₁|` over the points.
pub fn special_form_residual<M: StationaryMetric>(g: &M, points: &[Vec3]) -> f64 {
    let n = g.domain().n;
    points
        .iter()
        .map(|x| {
            let f = g.fields(x);
            let mut r = (f.h[0][0] - 1.0).abs().max(f.omega[0].abs());
            for j in 1..n {
                r = r.max(f.h[0][j].abs()).max(f.h[j][0].abs());
            }
            r
        })
        .fold(0.0, f64::max)
}

/// `m = g̃₁⁻¹ - g̃₂⁻¹` on a lattice, with the special block pattern
/// enforced.
#[derive(Clone, Debug, PartialEq)]
pub struct TensorDifference {
    pub lattice: Lattice,
    /// `m` at every lattice point (time first).
    pub values: Vec<Mat4>,
    /// `grad[k][a][b]` is `∂ₖ m_ab` at every point.
    pub grad: Vec<[Mat4; 3]>,
    /// Largest pattern entry that was zeroed.
    pub zeroed: f64,
    /// Special-form residual of the two inputs.
    pub residual: f64,
}

impl TensorDifference {
    pub fn m_lambda(&self, k: usize) -> f64 {
        self.values[k][0][0]
    }

    pub fn m_omega(&self, k: usize) -> Vec3 {
        [
            self.values[k][0][1],
            self.values[k][0][2],
            self.values[k][0][3],
        ]
    }

    pub fn m_h(&self, k: usize) -> [[f64; 3]; 3] {
        core::array::from_fn(|i| core::array::from_fn(|j| self.values[k][1 + i][1 + j]))
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().map(linalg::max_abs).fold(0.0, f64::max)
    }

    /// Component `(a, b)` of `m` as lattice data.
    pub fn component(&self, a: usize, b: usize) -> Vec<f64> {
        self.values.iter().map(|m| m[a][b]).collect()
    }
}

/// Whether `(a, b)` lies in the special pattern: entries pairing `x¹` with
/// anything vanish.
pub fn is_pattern_entry(a: usize, b: usize) -> bool {
    a == 1 || b == 1
}

pub fn tensor_difference<A: StationaryMetric, B: StationaryMetric>(
    g1: &A,
    g2: &B,
    lattice: &Lattice,
) -> Result<TensorDifference> {
    tensor_difference_with(
        lattice,
        |x| {
            let a = g1.fields(x).inverse();
            let b = g2.fields(x).inverse();
            core::array::from_fn(|i| core::array::from_fn(|j| a[i][j] - b[i][j]))
        },
        {
            let pts = lattice.points();
            special_form_residual(g1, &pts).max(special_form_residual(g2, &pts))
        },
    )
}

/// [`tensor_difference`] from a pointwise `m` evaluator (for callers that
/// evaluate points in parallel) and a known special-form residual.
pub fn tensor_difference_with(
    lattice: &Lattice,
    m_at: impl Fn(&Vec3) -> Mat4,
    residual: f64,
) -> Result<TensorDifference> {
    let values: Vec<Mat4> = lattice.points().iter().map(m_at).collect();
    assemble_tensor_difference(*lattice, values, residual)
}

/// Zeroes the pattern, checks the truncation and differentiates.
pub fn assemble_tensor_difference(
    lattice: Lattice,
    mut values: Vec<Mat4>,
    residual: f64,
) -> Result<TensorDifference> {
    let mut zeroed: f64 = 0.0;
    for m in &mut values {
        for a in 0..4 {
            for b in 0..4 {
                if is_pattern_entry(a, b) {
                    zeroed = zeroed.max(m[a][b].abs());
                    m[a][b] = 0.0;
                }
            }
        }
    }
    // The pattern entries of g̃⁻¹ are fixed by the special form up to
    // rounding; allow rounding-level mass even for exact inputs.
    if zeroed > 10.0 * residual.max(1e-13) {
        return Err(Error::FormViolation { zeroed, residual });
    }
    let comps: Vec<Vec<f64>> = (0..16)
        .map(|c| values.iter().map(|m| m[c / 4][c % 4]).collect())
        .collect();
    let grad = (0..values.len())
        .map(|k| {
            core::array::from_fn(|axis| {
                core::array::from_fn(|a| {
                    core::array::from_fn(|b| {
                        if axis < lattice.n {
                            lattice.derivative(&comps[4 * a + b], k, axis)
                        } else {
                            0.0
                        }
                    })
                })
            })
        })
        .collect();
    Ok(TensorDifference {
        lattice,
        values,
        grad,
        zeroed,
        residual,
    })
}

//! Stationary Lorentzian metrics `-λ dt² + ω⊗dt + dt⊗ω + h` that agree
//! with Minkowski space outside a ball, together with the test families,
//! diffeomorphisms and pullbacks used throughout the crate.
//!
//! Spatial quantities always carry three slots. When the domain has
//! `n = 2` the third axis is inert: no field depends on it and `h` is the
//! identity along it.

use alloc::boxed::Box;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::{self, Mat3, Mat4, Vec3, Vec4};
use crate::scalar::{seed, seed2, Dual, Jet2, Scalar};

/// Covectors with `|⟨g⁻¹ζ,ζ⟩| ≤ NULL_BAND·|ζ|²` are classified null.
pub const NULL_BAND: f64 = 1e-10;

/// Condition bound above which [`inverse_metric`] reports `Singular`.
pub const DEFAULT_CONDITION_BOUND: f64 = 1e8;

/// The ball `Ω` of radius `r_omega`, the enclosing ball `B_ρ` and the
/// reference hyperplane `{x¹ = h_offset}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpatialDomain {
    pub n: usize,
    pub r_omega: f64,
    pub rho: f64,
    pub h_offset: f64,
}

impl SpatialDomain {
    pub fn new(n: usize, r_omega: f64, rho: f64, h_offset: f64) -> Result<Self> {
        if !(n == 2 || n == 3) {
            return Err(Error::InvalidInput("spatial dimension must be 2 or 3"));
        }
        if !(r_omega > 0.0 && r_omega < rho) {
            return Err(Error::InvalidInput("need 0 < r_omega < rho"));
        }
        if h_offset.abs() <= r_omega {
            return Err(Error::InvalidInput(
                "hyperplane must lie outside the domain",
            ));
        }
        Ok(SpatialDomain {
            n,
            r_omega,
            rho,
            h_offset,
        })
    }

    /// Unit ball inside `B_1.5`, hyperplane at `x¹ = -1.2`.
    pub fn standard(n: usize) -> Self {
        SpatialDomain::new(n, 1.0, 1.5, -1.2).expect("standard domain is valid")
    }

    pub fn radius2(&self, x: &Vec3) -> f64 {
        x[..self.n].iter().map(|v| v * v).sum()
    }

    pub fn inside(&self, x: &Vec3) -> bool {
        self.radius2(x) < self.r_omega * self.r_omega
    }

    /// `count` points on `∂Ω`: equally spaced angles for `n = 2`, a
    /// Fibonacci lattice for `n = 3`.
    pub fn boundary_points(&self, count: usize) -> Vec<Vec3> {
        (0..count)
            .map(|k| self.fibonacci_direction(k, count))
            .map(|u| linalg::scale(&u, self.r_omega))
            .collect()
    }

    /// Unit direction number `k` of `count` on the sphere `S^{n-1}`.
    pub fn fibonacci_direction(&self, k: usize, count: usize) -> Vec3 {
        let tau = 2.0 * core::f64::consts::PI;
        if self.n == 2 {
            let a = tau * k as f64 / count as f64;
            [libm::cos(a), libm::sin(a), 0.0]
        } else {
            let golden = (1.0 + libm::sqrt(5.0)) / 2.0;
            let z = 1.0 - (2.0 * k as f64 + 1.0) / count as f64;
            let r = libm::sqrt((1.0 - z * z).max(0.0));
            let a = tau * k as f64 / golden;
            [z, r * libm::cos(a), r * libm::sin(a)]
        }
    }
}

/// `λ`, `ω` and `h` at a point.
#[derive(Clone, Copy, Debug)]
pub struct MetricFields<S> {
    pub lambda: S,
    pub omega: [S; 3],
    pub h: [[S; 3]; 3],
}

impl<S: Scalar> MetricFields<S> {
    pub fn minkowski() -> Self {
        MetricFields {
            lambda: S::one(),
            omega: [S::zero(); 3],
            h: core::array::from_fn(|i| {
                core::array::from_fn(|j| if i == j { S::one() } else { S::zero() })
            }),
        }
    }

    /// Full spacetime metric matrix, time first.
    pub fn matrix(&self) -> [[S; 4]; 4] {
        core::array::from_fn(|a| {
            core::array::from_fn(|b| match (a, b) {
                (0, 0) => -self.lambda,
                (0, j) => self.omega[j - 1],
                (i, 0) => self.omega[i - 1],
                (i, j) => self.h[i - 1][j - 1],
            })
        })
    }

    /// Inverse metric by the Schur complement of the spatial block.
    pub fn inverse(&self) -> [[S; 4]; 4] {
        let hinv = linalg::inverse3(&self.h);
        let a = linalg::mat3_vec(&hinv, &self.omega);
        let kappa =
            -self.lambda - (self.omega[0] * a[0] + self.omega[1] * a[1] + self.omega[2] * a[2]);
        let rk = kappa.recip();
        core::array::from_fn(|i| {
            core::array::from_fn(|j| match (i, j) {
                (0, 0) => rk,
                (0, j) => -(a[j - 1] * rk),
                (i, 0) => -(a[i - 1] * rk),
                (i, j) => hinv[i - 1][j - 1] + a[i - 1] * a[j - 1] * rk,
            })
        })
    }
}

pub trait StationaryMetric {
    fn domain(&self) -> &SpatialDomain;

    /// `λ`, `ω`, `h` at a spatial point, for any scalar type.
    fn fields<S: Scalar>(&self, x: &[S; 3]) -> MetricFields<S>;

    /// Narrowest feature width, when the family knows it.
    fn min_feature_width(&self) -> Option<f64> {
        None
    }
}

impl<M: StationaryMetric + ?Sized> StationaryMetric for &M {
    fn domain(&self) -> &SpatialDomain {
        (**self).domain()
    }
    fn fields<S: Scalar>(&self, x: &[S; 3]) -> MetricFields<S> {
        (**self).fields(x)
    }
    fn min_feature_width(&self) -> Option<f64> {
        (**self).min_feature_width()
    }
}

/// Inverse metric and its first spatial derivatives.
#[derive(Clone, Copy, Debug)]
pub struct InverseGrad {
    pub ginv: Mat4,
    /// `d[k] = ∂_{x^k} g⁻¹`.
    pub d: [Mat4; 3],
}

/// Inverse metric with first and second spatial derivatives.
#[derive(Clone, Copy, Debug)]
pub struct InverseJet {
    pub ginv: Mat4,
    pub d: [Mat4; 3],
    pub dd: [[Mat4; 3]; 3],
}

pub fn eval_metric<M: StationaryMetric>(g: &M, x: &Vec3) -> Mat4 {
    g.fields(x).matrix()
}

pub fn inverse_metric<M: StationaryMetric>(g: &M, x: &Vec3) -> Result<Mat4> {
    inverse_metric_checked(g, x, DEFAULT_CONDITION_BOUND)
}

pub fn inverse_metric_checked<M: StationaryMetric>(g: &M, x: &Vec3, bound: f64) -> Result<Mat4> {
    let f = g.fields(x);
    let inv = f.inverse();
    let finite = inv.iter().flatten().all(|v| v.is_finite());
    let condition = if finite {
        linalg::norm_inf(&f.matrix()) * linalg::norm_inf(&inv)
    } else {
        f64::INFINITY
    };
    if !(condition <= bound) {
        return Err(Error::Singular { condition });
    }
    Ok(inv)
}

pub fn inverse_grad<M: StationaryMetric>(g: &M, x: &Vec3) -> InverseGrad {
    let inv = g.fields(&seed(x)).inverse();
    InverseGrad {
        ginv: core::array::from_fn(|a| core::array::from_fn(|b| inv[a][b].re)),
        d: core::array::from_fn(|k| {
            core::array::from_fn(|a| core::array::from_fn(|b| inv[a][b].du[k]))
        }),
    }
}

pub fn inverse_jet<M: StationaryMetric>(g: &M, x: &Vec3) -> InverseJet {
    let inv = g.fields(&seed2(x)).inverse();
    let jets: [[Jet2; 4]; 4] =
        core::array::from_fn(|a| core::array::from_fn(|b| Jet2::from(inv[a][b])));
    InverseJet {
        ginv: core::array::from_fn(|a| core::array::from_fn(|b| jets[a][b].value)),
        d: core::array::from_fn(|k| {
            core::array::from_fn(|a| core::array::from_fn(|b| jets[a][b].grad[k]))
        }),
        dd: core::array::from_fn(|k| {
            core::array::from_fn(|l| {
                core::array::from_fn(|a| core::array::from_fn(|b| jets[a][b].hess[k][l]))
            })
        }),
    }
}

/// Causal character of a covector.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CausalClass {
    Timelike,
    Null,
    Spacelike,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TimeOrientation {
    Future,
    Past,
}

/// Causal class from the sign of `⟨g⁻¹ζ,ζ⟩`; orientation from the pairing
/// of the dual vector with `∂_t`, which equals `ζ_0`. Spacelike covectors
/// carry no orientation.
pub fn classify_covector<M: StationaryMetric>(
    g: &M,
    x: &Vec3,
    zeta: &Vec4,
) -> (CausalClass, Option<TimeOrientation>) {
    let inv = g.fields(x).inverse();
    let q = linalg::dot(&linalg::mat_vec(&inv, zeta), zeta);
    let band = NULL_BAND * linalg::dot(zeta, zeta);
    let class = if q.abs() <= band {
        CausalClass::Null
    } else if q < 0.0 {
        CausalClass::Timelike
    } else {
        CausalClass::Spacelike
    };
    let orientation = match class {
        CausalClass::Spacelike => None,
        _ if zeta[0] < 0.0 => Some(TimeOrientation::Future),
        _ if zeta[0] > 0.0 => Some(TimeOrientation::Past),
        _ => None,
    };
    (class, orientation)
}

/// Compact bump `exp(1 - 1/(1-|u|²))`, `u = (x - c)/w` over the first `n`
/// coordinates; equal to 1 at the center.
pub fn bump<S: Scalar>(x: &[S; 3], center: &Vec3, width: f64, n: usize) -> S {
    let r2 = bump_radius2(x, center, width, n);
    if r2.value() >= 1.0 {
        return S::zero();
    }
    (-((-r2 + 1.0).recip()) + 1.0).exp()
}

fn bump_radius2<S: Scalar>(x: &[S; 3], center: &Vec3, width: f64, n: usize) -> S {
    let mut r2 = S::zero();
    for k in 0..n {
        let u = (x[k] + (-center[k])) * (1.0 / width);
        r2 = r2 + u * u;
    }
    r2
}

/// Gradient of [`bump`] with respect to `x`.
pub fn bump_gradient<S: Scalar>(x: &[S; 3], center: &Vec3, width: f64, n: usize) -> [S; 3] {
    let r2 = bump_radius2(x, center, width, n);
    if r2.value() >= 1.0 {
        return [S::zero(); 3];
    }
    let q = -r2 + 1.0;
    let b = (-(q.recip()) + 1.0).exp();
    let f = -(b / (q * q)) * (2.0 / (width * width));
    core::array::from_fn(|k| {
        if k < n {
            f * (x[k] + (-center[k]))
        } else {
            S::zero()
        }
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct Minkowski {
    pub domain: SpatialDomain,
}

impl StationaryMetric for Minkowski {
    fn domain(&self) -> &SpatialDomain {
        &self.domain
    }
    fn fields<S: Scalar>(&self, _x: &[S; 3]) -> MetricFields<S> {
        MetricFields::minkowski()
    }
}

/// One bump term: every field perturbation is a multiple of the same bump.
#[derive(Clone, Debug, PartialEq)]
pub struct BumpTerm {
    pub center: Vec3,
    pub width: f64,
    pub lambda: f64,
    pub omega: Vec3,
    pub h: Mat3,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BumpFamilyParams {
    pub epsilon: f64,
    pub special_form: bool,
    pub bumps: Vec<BumpTerm>,
}

/// `λ = 1 + εΣ aₖbₖ`, `ω = εΣ wₖbₖ`, `h = e + εΣ Hₖbₖ`.
#[derive(Clone, Debug, PartialEq)]
pub struct BumpMetric {
    domain: SpatialDomain,
    params: BumpFamilyParams,
}

impl BumpMetric {
    /// Validates supports and, with `special_form`, zeroes `ω₁` and the
    /// first row and column of every `h` perturbation.
    pub fn new(domain: SpatialDomain, mut params: BumpFamilyParams) -> Result<Self> {
        let n = domain.n;
        for b in &mut params.bumps {
            if b.width <= 0.0 {
                return Err(Error::InvalidInput("bump width must be positive"));
            }
            let c = libm::sqrt(domain.radius2(&b.center));
            if c + b.width >= domain.r_omega {
                return Err(Error::InvalidInput(
                    "bump support must lie inside the domain",
                ));
            }
            for k in n..3 {
                b.center[k] = 0.0;
                b.omega[k] = 0.0;
                for j in 0..3 {
                    b.h[k][j] = 0.0;
                    b.h[j][k] = 0.0;
                }
            }
            for i in 0..3 {
                for j in i + 1..3 {
                    let s = 0.5 * (b.h[i][j] + b.h[j][i]);
                    b.h[i][j] = s;
                    b.h[j][i] = s;
                }
            }
            if params.special_form {
                b.omega[0] = 0.0;
                for j in 0..3 {
                    b.h[0][j] = 0.0;
                    b.h[j][0] = 0.0;
                }
            }
        }
        Ok(BumpMetric { domain, params })
    }

    pub fn params(&self) -> &BumpFamilyParams {
        &self.params
    }

    /// Same family with the amplitude replaced.
    pub fn with_epsilon(&self, epsilon: f64) -> Self {
        let mut params = self.params.clone();
        params.epsilon = epsilon;
        BumpMetric {
            domain: self.domain,
            params,
        }
    }
}

impl StationaryMetric for BumpMetric {
    fn domain(&self) -> &SpatialDomain {
        &self.domain
    }

    fn fields<S: Scalar>(&self, x: &[S; 3]) -> MetricFields<S> {
        let mut f = MetricFields::<S>::minkowski();
        let eps = self.params.epsilon;
        for t in &self.params.bumps {
            let b = bump(x, &t.center, t.width, self.domain.n);
            if b.value() == 0.0
                && t.width > 0.0
                && bump_radius2(x, &t.center, t.width, self.domain.n).value() >= 1.0
            {
                continue;
            }
            let eb = b * eps;
            f.lambda = f.lambda + eb * t.lambda;
            for i in 0..3 {
                f.omega[i] = f.omega[i] + eb * t.omega[i];
                for j in 0..3 {
                    f.h[i][j] = f.h[i][j] + eb * t.h[i][j];
                }
            }
        }
        f
    }

    fn min_feature_width(&self) -> Option<f64> {
        self.params.bumps.iter().map(|b| b.width).reduce(f64::min)
    }
}

/// The product metric `-dt² + h` built from the spatial part of `base`.
#[derive(Clone, Debug)]
pub struct ProductMetric<M> {
    pub base: M,
}

impl<M: StationaryMetric> StationaryMetric for ProductMetric<M> {
    fn domain(&self) -> &SpatialDomain {
        self.base.domain()
    }
    fn fields<S: Scalar>(&self, x: &[S; 3]) -> MetricFields<S> {
        let h = self.base.fields(x).h;
        MetricFields {
            lambda: S::one(),
            omega: [S::zero(); 3],
            h,
        }
    }
    fn min_feature_width(&self) -> Option<f64> {
        self.base.min_feature_width()
    }
}

/// A smooth spatial map with its Jacobian, evaluated generically.
pub trait SpatialMap {
    fn map<S: Scalar>(&self, x: &[S; 3]) -> [S; 3];
    fn jacobian<S: Scalar>(&self, x: &[S; 3]) -> [[S; 3]; 3];
}

/// `ψ(x) = x + a·b(x)·v` with `b` the compact bump; a diffeomorphism that
/// fixes everything outside the bump support when `|a|·|v|·max|∇b| < 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct BumpDisplacement {
    pub n: usize,
    pub center: Vec3,
    pub width: f64,
    pub amplitude: f64,
    pub direction: Vec3,
}

impl SpatialMap for BumpDisplacement {
    fn map<S: Scalar>(&self, x: &[S; 3]) -> [S; 3] {
        let b = bump(x, &self.center, self.width, self.n) * self.amplitude;
        core::array::from_fn(|k| x[k] + b * self.direction[k])
    }

    fn jacobian<S: Scalar>(&self, x: &[S; 3]) -> [[S; 3]; 3] {
        let g = bump_gradient(x, &self.center, self.width, self.n);
        core::array::from_fn(|i| {
            core::array::from_fn(|j| {
                let d = g[j] * (self.amplitude * self.direction[i]);
                if i == j {
                    d + 1.0
                } else {
                    d
                }
            })
        })
    }
}

/// Maps assembled from configuration.
#[derive(Clone, Debug, PartialEq)]
pub enum AnyMap {
    Identity,
    Bump(BumpDisplacement),
    /// `maps[last] ∘ … ∘ maps[0]`: the first entry is applied first.
    Compose(Vec<AnyMap>),
}

impl SpatialMap for AnyMap {
    fn map<S: Scalar>(&self, x: &[S; 3]) -> [S; 3] {
        match self {
            AnyMap::Identity => *x,
            AnyMap::Bump(b) => b.map(x),
            AnyMap::Compose(maps) => maps.iter().fold(*x, |y, m| m.map(&y)),
        }
    }

    fn jacobian<S: Scalar>(&self, x: &[S; 3]) -> [[S; 3]; 3] {
        match self {
            AnyMap::Identity => core::array::from_fn(|i| {
                core::array::from_fn(|j| if i == j { S::one() } else { S::zero() })
            }),
            AnyMap::Bump(b) => b.jacobian(x),
            AnyMap::Compose(maps) => {
                let mut y = *x;
                let mut jac = AnyMap::Identity.jacobian::<S>(x);
                for m in maps {
                    let j = m.jacobian(&y);
                    jac = core::array::from_fn(|i| {
                        core::array::from_fn(|k| {
                            j[i][0] * jac[0][k] + j[i][1] * jac[1][k] + j[i][2] * jac[2][k]
                        })
                    });
                    y = m.map(&y);
                }
                jac
            }
        }
    }
}

/// `(Id × ψ)*g`: `λ∘ψ`, `Dψᵀ(ω∘ψ)`, `Dψᵀ(h∘ψ)Dψ`.
#[derive(Clone, Debug)]
pub struct Pullback<M, P> {
    pub base: M,
    pub map: P,
}

impl<M: StationaryMetric, P: SpatialMap> Pullback<M, P> {
    /// Pullback by a map that must fix `∂Ω` (to `1e-12`).
    pub fn new(base: M, map: P) -> Result<Self> {
        let d = *base.domain();
        let count = if d.n == 2 { 256 } else { 1024 };
        let displacement = d
            .boundary_points(count)
            .iter()
            .map(|x| linalg::norm(&linalg::sub(&map.map(x), x)))
            .fold(0.0, f64::max);
        if displacement > 1e-12 {
            return Err(Error::NotBoundaryFixing { displacement });
        }
        Ok(Pullback { base, map })
    }

    /// Pullback without the boundary check (straightening maps do not fix
    /// `∂Ω`).
    pub fn unchecked(base: M, map: P) -> Self {
        Pullback { base, map }
    }
}

impl<M: StationaryMetric, P: SpatialMap> StationaryMetric for Pullback<M, P> {
    fn domain(&self) -> &SpatialDomain {
        self.base.domain()
    }

    fn fields<S: Scalar>(&self, x: &[S; 3]) -> MetricFields<S> {
        let y = self.map.map(x);
        let jac = self.map.jacobian(x);
        let f = self.base.fields(&y);
        let omega = core::array::from_fn(|j| {
            jac[0][j] * f.omega[0] + jac[1][j] * f.omega[1] + jac[2][j] * f.omega[2]
        });
        MetricFields {
            lambda: f.lambda,
            omega,
            h: linalg::congruence3(&jac, &f.h),
        }
    }

    fn min_feature_width(&self) -> Option<f64> {
        self.base.min_feature_width()
    }
}

/// Metrics assembled from configuration.
#[derive(Clone, Debug)]
pub enum AnyMetric {
    Minkowski(Minkowski),
    Bump(BumpMetric),
    Product(Box<ProductMetric<AnyMetric>>),
    Pullback(Box<Pullback<AnyMetric, AnyMap>>),
}

impl StationaryMetric for AnyMetric {
    fn domain(&self) -> &SpatialDomain {
        match self {
            AnyMetric::Minkowski(m) => m.domain(),
            AnyMetric::Bump(m) => m.domain(),
            AnyMetric::Product(m) => m.domain(),
            AnyMetric::Pullback(m) => m.domain(),
        }
    }

    fn fields<S: Scalar>(&self, x: &[S; 3]) -> MetricFields<S> {
        match self {
            AnyMetric::Minkowski(m) => m.fields(x),
            AnyMetric::Bump(m) => m.fields(x),
            AnyMetric::Product(m) => m.fields(x),
            AnyMetric::Pullback(m) => m.fields(x),
        }
    }

    fn min_feature_width(&self) -> Option<f64> {
        match self {
            AnyMetric::Minkowski(m) => m.min_feature_width(),
            AnyMetric::Bump(m) => m.min_feature_width(),
            AnyMetric::Product(m) => m.min_feature_width(),
            AnyMetric::Pullback(m) => m.min_feature_width(),
        }
    }
}

/// Pullback of a metric by `Id × ψ` for a boundary-fixing `ψ`.
pub fn pullback_metric<M: StationaryMetric, P: SpatialMap>(g: M, psi: P) -> Result<Pullback<M, P>> {
    Pullback::new(g, psi)
}

/// Sampled `C^k` seminorm of `(λ-1, ω, h-e)` over an `N^n` grid covering
/// `Ω̄`. Orders up to two are exact; higher orders apply centered
/// differences to the exact Hessians.
pub fn closeness_seminorm<M: StationaryMetric>(g: &M, k: usize, grid: usize) -> Result<f64> {
    let d = *g.domain();
    if grid < 2 {
        return Err(Error::InvalidInput(
            "seminorm grid needs at least two points per axis",
        ));
    }
    if k > 4 {
        return Err(Error::InvalidInput(
            "seminorm order above 4 is not supported",
        ));
    }
    let spacing = 2.0 * d.r_omega / (grid - 1) as f64;
    if let Some(width) = g.min_feature_width() {
        if spacing > width {
            return Err(Error::GridTooCoarse { spacing, width });
        }
    }
    let points = lattice_points(d.n, grid, d.r_omega);
    let mut best: f64 = 0.0;
    for x in &points {
        let jets = perturbation_jets(g, x);
        for j in &jets {
            best = best.max(j.value.abs());
            if k >= 1 {
                best = best.max(
                    j.grad
                        .iter()
                        .take(d.n)
                        .fold(0.0, |a: f64, v| a.max(v.abs())),
                );
            }
            if k >= 2 {
                for a in 0..d.n {
                    for b in 0..d.n {
                        best = best.max(j.hess[a][b].abs());
                    }
                }
            }
        }
        if k >= 3 {
            let hstep = 1e-3 * g.min_feature_width().unwrap_or(d.r_omega);
            best = best.max(higher_order_fd(g, x, k, hstep));
        }
    }
    Ok(best)
}

fn lattice_points(n: usize, grid: usize, half: f64) -> Vec<Vec3> {
    let coord = |i: usize| -half + 2.0 * half * i as f64 / (grid - 1) as f64;
    let mut pts = Vec::new();
    let nz = if n == 3 { grid } else { 1 };
    for i in 0..grid {
        for j in 0..grid {
            for l in 0..nz {
                let z = if n == 3 { coord(l) } else { 0.0 };
                pts.push([coord(i), coord(j), z]);
            }
        }
    }
    pts
}

/// Second-order jets of every component of `(λ-1, ω, h-e)`.
fn perturbation_jets<M: StationaryMetric>(g: &M, x: &Vec3) -> Vec<Jet2> {
    let n = g.domain().n;
    let f = g.fields(&seed2(x));
    let mut out = Vec::with_capacity(1 + n + n * n);
    out.push(Jet2::from(f.lambda + (-1.0)));
    for i in 0..n {
        out.push(Jet2::from(f.omega[i]));
    }
    for i in 0..n {
        for j in 0..n {
            let v: Dual<Dual<f64>> = if i == j {
                f.h[i][j] + (-1.0)
            } else {
                f.h[i][j]
            };
            out.push(Jet2::from(v));
        }
    }
    out
}

fn higher_order_fd<M: StationaryMetric>(g: &M, x: &Vec3, k: usize, h: f64) -> f64 {
    // Third and fourth derivatives from centered differences of Hessians:
    // ∂_c H_ab and ∂_c ∂_d H_ab.
    let n = g.domain().n;
    let at = |p: &Vec3| perturbation_jets(g, p);
    let base = at(x);
    let mut best: f64 = 0.0;
    for c in 0..n {
        let mut xp = *x;
        let mut xm = *x;
        xp[c] += h;
        xm[c] -= h;
        let (jp, jm) = (at(&xp), at(&xm));
        for q in 0..base.len() {
            for a in 0..n {
                for b in 0..n {
                    let d3 = (jp[q].hess[a][b] - jm[q].hess[a][b]) / (2.0 * h);
                    best = best.max(d3.abs());
                    if k >= 4 {
                        let d4 = (jp[q].hess[a][b] - 2.0 * base[q].hess[a][b] + jm[q].hess[a][b])
                            / (h * h);
                        best = best.max(d4.abs());
                    }
                }
            }
        }
    }
    best
}

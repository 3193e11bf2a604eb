//! Fourier-side machinery: the directions `ξ(η, p)`, homogeneous cutoffs,
//! the ray transform `A` and its parity decomposition, a lattice DFT
//! oracle, the phase change of variables, and the operator-norm, cone and
//! contraction experiments.
//!
//! Transforms are unitary with kernel `e^{-iη·x}`:
//! `f̂(η) = (2π)^{-n/2} Σₓ f(x) e^{-iη·x} Δxⁿ`.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::lattice::Lattice;
use crate::linalg::{self, Mat3, Mat4, Vec3, Vec4};
use crate::metric::{bump, bump_gradient, SpatialDomain, SpatialMap, StationaryMetric};
use crate::straighten::{Straightening, TensorDifference};
use crate::sum::{pairwise_sum, pairwise_sum_complex};

pub type CVec = [Complex64; 3];

pub const DEFAULT_RHO1: f64 = -1.05;
pub const DEFAULT_RHO2: f64 = -1.10;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

fn active_norm(v: &Vec3, n: usize) -> f64 {
    libm::sqrt(v[..n].iter().map(|x| x * x).sum())
}

/// `η′·p`, with `p ∈ S^{n-2}` stored in the first `n - 1` slots.
fn eta_prime_dot(eta: &Vec3, p: &[f64; 2], n: usize) -> f64 {
    (0..n - 1).map(|k| eta[1 + k] * p[k]).sum()
}

/// `ξ₁ = -η′·p / D`, `ξ′ = η₁ p / D` with `D = √(|η′·p|² + η₁²)`.
pub fn xi_from_eta_p(eta: &Vec3, p: &[f64; 2], n: usize) -> Result<Vec3> {
    let q = eta_prime_dot(eta, p, n);
    let denominator = libm::sqrt(q * q + eta[0] * eta[0]);
    if denominator < 1e-14 {
        return Err(Error::SingularDirection { denominator });
    }
    let mut xi = [0.0; 3];
    xi[0] = -q / denominator;
    for k in 0..n - 1 {
        xi[1 + k] = eta[0] * p[k] / denominator;
    }
    Ok(xi)
}

/// `η₁ / √(|η′·p|² + η₁²)`.
pub fn psi_p(eta: &Vec3, p: &[f64; 2], n: usize) -> Result<f64> {
    let q = eta_prime_dot(eta, p, n);
    let denominator = libm::sqrt(q * q + eta[0] * eta[0]);
    if denominator < 1e-14 {
        return Err(Error::SingularDirection { denominator });
    }
    Ok(eta[0] / denominator)
}

/// The point of `S^{n-2}` at angle `a` (`n = 3`) or the sign of `a`'s
/// cosine (`n = 2`).
pub fn direction_p(n: usize, angle: f64) -> [f64; 2] {
    if n == 2 {
        [if libm::cos(angle) >= 0.0 { 1.0 } else { -1.0 }, 0.0]
    } else {
        [libm::cos(angle), libm::sin(angle)]
    }
}

/// `ζ⁽⁰⁾ = (ϱ, ξ(η, p))` with its parameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DirectionParams {
    pub varrho: f64,
    pub eta: Vec3,
    pub p: [f64; 2],
    pub xi: Vec3,
}

impl DirectionParams {
    pub fn new(varrho: f64, eta: Vec3, p: [f64; 2], n: usize) -> Result<Self> {
        if varrho >= -1.0 {
            return Err(Error::InvalidInput("varrho must be below -1"));
        }
        Ok(DirectionParams {
            varrho,
            eta,
            p,
            xi: xi_from_eta_p(&eta, &p, n)?,
        })
    }

    pub fn zeta(&self) -> Vec4 {
        [self.varrho, self.xi[0], self.xi[1], self.xi[2]]
    }

    pub fn flipped(&self) -> Self {
        let p = [-self.p[0], -self.p[1]];
        DirectionParams {
            p,
            xi: linalg::scale(&self.xi, -1.0),
            ..*self
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CutoffKind {
    /// Ratio `|η₁|/|η|`.
    Lorentzian,
    /// Ratio `(|η′·p| + |η₁|)/|η|`.
    Riemannian { p: [f64; 2] },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CutoffSpec {
    pub mu: f64,
    pub kind: CutoffKind,
}

impl CutoffSpec {
    pub fn lorentzian(mu: f64) -> Self {
        CutoffSpec {
            mu,
            kind: CutoffKind::Lorentzian,
        }
    }
}

/// `6t⁵ - 15t⁴ + 10t³` clamped to `[0, 1]`.
pub fn smoothstep5(t: f64) -> f64 {
    let t = t.clamp(0.0, 1.0);
    t * t * t * (t * (6.0 * t - 15.0) + 10.0)
}

/// 0 below ratio `μ/2`, 1 above `μ`. `η` is first rescaled by a power of
/// two so that the ratio is computed on a canonical representative.
pub fn cutoff(eta: &Vec3, n: usize, spec: &CutoffSpec) -> f64 {
    let peak = eta[..n].iter().fold(0.0f64, |a, x| a.max(x.abs()));
    if peak == 0.0 {
        return 0.0;
    }
    let (_, e) = libm::frexp(peak);
    let s = libm::ldexp(1.0, -e);
    let eta: Vec3 = core::array::from_fn(|k| eta[k] * s);
    let norm = active_norm(&eta, n);
    let ratio = match spec.kind {
        CutoffKind::Lorentzian => eta[0].abs() / norm,
        CutoffKind::Riemannian { p } => (eta_prime_dot(&eta, &p, n).abs() + eta[0].abs()) / norm,
    };
    smoothstep5((ratio - 0.5 * spec.mu) / (0.5 * spec.mu))
}

/// A periodic lattice over the box `[-ρ, ρ)ⁿ` with the support radius of
/// the fields it carries.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TransformGrid {
    pub lattice: Lattice,
    /// Radius of a ball containing the support of `m`.
    pub support: f64,
    pub r_omega: f64,
    /// Ray samples per lattice spacing.
    pub oversample: usize,
}

impl TransformGrid {
    pub fn new(domain: &SpatialDomain, count: usize) -> Self {
        TransformGrid {
            lattice: Lattice::new(domain.n, count, domain.rho),
            support: domain.r_omega,
            r_omega: domain.r_omega,
            oversample: 2,
        }
    }

    pub fn default_count(n: usize) -> usize {
        if n == 2 {
            64
        } else {
            32
        }
    }

    /// The spatial cutoff `a`: 1 on `Ω̄`, 0 beyond the midpoint to `∂B_ρ`.
    pub fn window(&self, x: &Vec3) -> f64 {
        let r = active_norm(x, self.lattice.n);
        let outer = 0.5 * (self.r_omega + self.lattice.half);
        1.0 - smoothstep5((r - self.r_omega) / (outer - self.r_omega))
    }

    fn ray_spacing(&self) -> f64 {
        self.lattice.spacing() / self.oversample as f64
    }
}

/// A symmetric 4×4 field with spatial gradient (`m = g₁⁻¹ - g₂⁻¹`).
pub trait TensorField {
    fn value(&self, x: &Vec3) -> Mat4;
    fn gradient(&self, x: &Vec3) -> [Mat4; 3];
}

#[derive(Clone, Debug, PartialEq)]
pub struct FourierMode {
    /// Wave index: frequency `π·wave/half`.
    pub wave: [i32; 3],
    pub phase: f64,
    pub coeff: Mat4,
}

/// Radial profile of the compact window of a [`SyntheticField`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum WindowProfile {
    /// `exp(1 - 1/(1 - r²))`: smooth, with steep flanks.
    Bump,
    /// `(1 - r²)ᵖ`: `C^{p-1}` with a much flatter spectrum.
    Polynomial(i32),
}

/// `m(x) = w(x) Σ cₖ cos(κₖ·x + φₖ)` with a compact window `w` of radius
/// `window`.
#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticField {
    pub n: usize,
    pub half: f64,
    pub window: f64,
    pub profile: WindowProfile,
    pub modes: Vec<FourierMode>,
}

impl SyntheticField {
    pub fn new(n: usize, half: f64, window: f64, mut modes: Vec<FourierMode>) -> Self {
        for m in &mut modes {
            m.coeff = core::array::from_fn(|i| {
                core::array::from_fn(|j| 0.5 * (m.coeff[i][j] + m.coeff[j][i]))
            });
            for k in n..3 {
                m.wave[k] = 0;
                for a in 0..4 {
                    m.coeff[1 + k][a] = 0.0;
                    m.coeff[a][1 + k] = 0.0;
                }
            }
        }
        SyntheticField {
            n,
            half,
            window,
            profile: WindowProfile::Bump,
            modes,
        }
    }

    pub fn with_profile(mut self, profile: WindowProfile) -> Self {
        self.profile = profile;
        self
    }

    fn window_value(&self, x: &Vec3) -> f64 {
        match self.profile {
            WindowProfile::Bump => bump(x, &[0.0; 3], self.window, self.n),
            WindowProfile::Polynomial(p) => {
                let r2 = self.window_radius2(x);
                if r2 >= 1.0 {
                    0.0
                } else {
                    libm::pow(1.0 - r2, p as f64)
                }
            }
        }
    }

    fn window_gradient(&self, x: &Vec3) -> Vec3 {
        match self.profile {
            WindowProfile::Bump => bump_gradient(x, &[0.0; 3], self.window, self.n),
            WindowProfile::Polynomial(p) => {
                let r2 = self.window_radius2(x);
                if r2 >= 1.0 {
                    return [0.0; 3];
                }
                let c = -2.0 * p as f64 * libm::pow(1.0 - r2, (p - 1) as f64)
                    / (self.window * self.window);
                core::array::from_fn(|k| if k < self.n { c * x[k] } else { 0.0 })
            }
        }
    }

    fn window_radius2(&self, x: &Vec3) -> f64 {
        (0..self.n).map(|k| x[k] * x[k]).sum::<f64>() / (self.window * self.window)
    }

    fn kappa(&self, m: &FourierMode) -> Vec3 {
        core::array::from_fn(|k| PI * m.wave[k] as f64 / self.half)
    }

    pub fn max_wave(&self) -> i32 {
        self.modes
            .iter()
            .flat_map(|m| m.wave.iter().map(|w| w.abs()))
            .max()
            .unwrap_or(0)
    }

    /// Samples on the lattice.
    pub fn sample(&self, lattice: &Lattice) -> Vec<Mat4> {
        lattice.points().iter().map(|x| self.value(x)).collect()
    }
}

impl TensorField for SyntheticField {
    fn value(&self, x: &Vec3) -> Mat4 {
        let w = self.window_value(x);
        let mut out = [[0.0; 4]; 4];
        if w == 0.0 {
            return out;
        }
        for m in &self.modes {
            let c = w * libm::cos(linalg::dot(&self.kappa(m), x) + m.phase);
            for (i, row) in out.iter_mut().enumerate() {
                for (j, v) in row.iter_mut().enumerate() {
                    *v += m.coeff[i][j] * c;
                }
            }
        }
        out
    }

    fn gradient(&self, x: &Vec3) -> [Mat4; 3] {
        let w = self.window_value(x);
        let mut out = [[[0.0; 4]; 4]; 3];
        if w == 0.0 {
            return out;
        }
        let dw = self.window_gradient(x);
        for m in &self.modes {
            let kappa = self.kappa(m);
            let arg = linalg::dot(&kappa, x) + m.phase;
            let (s, c) = (libm::sin(arg), libm::cos(arg));
            for (k, g) in out.iter_mut().enumerate() {
                let f = dw[k] * c - w * s * kappa[k];
                for (i, row) in g.iter_mut().enumerate() {
                    for (j, v) in row.iter_mut().enumerate() {
                        *v += m.coeff[i][j] * f;
                    }
                }
            }
        }
        out
    }
}

/// The transform of the full contraction and of its three parts.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RayTransforms {
    /// `A = ϱ²A₁ + 2ϱA₂ + A₃`, evaluated from `mζ·ζ` directly.
    pub a: CVec,
    pub a1: CVec,
    pub a2: CVec,
    pub a3: CVec,
}

impl RayTransforms {
    const ZERO: RayTransforms = RayTransforms {
        a: [ZERO; 3],
        a1: [ZERO; 3],
        a2: [ZERO; 3],
        a3: [ZERO; 3],
    };
}

/// Straight rays `y + tξ`, `y ∈ ξ^⊥`: integrates `∇ₓ(mζ·ζ)` (and the
/// three component contractions) in `t`, then Fourier transforms over `y`
/// at `η`, times `χ(η)`.
pub fn transform_a(
    field: &impl TensorField,
    grid: &TransformGrid,
    dir: &DirectionParams,
    chi: &CutoffSpec,
) -> RayTransforms {
    let n = grid.lattice.n;
    let weight = cutoff(&dir.eta, n, chi);
    if weight == 0.0 {
        return RayTransforms::ZERO;
    }
    let zeta = dir.zeta();
    let xi = dir.xi;
    let en = active_norm(&dir.eta, n);
    let ea = linalg::scale(&dir.eta, 1.0 / en);
    let eb = [
        xi[1] * ea[2] - xi[2] * ea[1],
        xi[2] * ea[0] - xi[0] * ea[2],
        xi[0] * ea[1] - xi[1] * ea[0],
    ];
    let d = grid.ray_spacing();
    let j = libm::ceil(grid.support / d) as i64;
    let offsets: Vec<f64> = (-j..=j).map(|i| i as f64 * d).collect();
    let across: Vec<f64> = if n == 3 { offsets.clone() } else { vec![0.0] };
    let r2 = grid.support * grid.support;

    let mut terms: [Vec<Complex64>; 12] = core::array::from_fn(|_| Vec::new());
    for &u in &offsets {
        let phase = Complex64::new(libm::cos(en * u), -libm::sin(en * u));
        for &v in &across {
            let mut ray = [0.0; 12];
            for &t in &offsets {
                let x: Vec3 = core::array::from_fn(|k| u * ea[k] + v * eb[k] + t * xi[k]);
                if linalg::dot(&x, &x) >= r2 {
                    continue;
                }
                let g = field.gradient(&x);
                for k in 0..n {
                    let mk = &g[k];
                    ray[k] += linalg::dot(&linalg::mat_vec(mk, &zeta), &zeta);
                    ray[3 + k] += mk[0][0];
                    ray[6 + k] += (0..3).map(|a| xi[a] * mk[0][1 + a]).sum::<f64>();
                    ray[9 + k] += (0..3)
                        .map(|a| {
                            (0..3)
                                .map(|b| xi[a] * xi[b] * mk[1 + a][1 + b])
                                .sum::<f64>()
                        })
                        .sum::<f64>();
                }
            }
            for (slot, r) in terms.iter_mut().zip(ray) {
                slot.push(phase * r);
            }
        }
    }
    let scale = weight * libm::pow(2.0 * PI, -0.5 * n as f64) * libm::pow(d, n as f64);
    let total: [Complex64; 12] = core::array::from_fn(|i| pairwise_sum_complex(&terms[i]) * scale);
    let pick =
        |o: usize| -> CVec { core::array::from_fn(|k| if k < n { total[o + k] } else { ZERO }) };
    RayTransforms {
        a: pick(0),
        a1: pick(3),
        a2: pick(6),
        a3: pick(9),
    }
}

/// `A₁, A₂, A₃` at `(η, p)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Components {
    pub a1: CVec,
    pub a2: CVec,
    pub a3: CVec,
}

/// `A` at `(ϱ₁, ±p)` and `(ϱ₂, ±p)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ParitySamples {
    pub rho1: f64,
    pub rho2: f64,
    pub rho1_plus: CVec,
    pub rho1_minus: CVec,
    pub rho2_plus: CVec,
    pub rho2_minus: CVec,
}

/// `A₂ = (A(p) - A(-p))/(4ϱ₁)`, `A₁ = (E(ϱ₂) - E(ϱ₁))/(2(ϱ₂² - ϱ₁²))` with
/// `E` the even part `A(p) + A(-p)`, and `A₃ = E(ϱ₁)/2 - ϱ₁²A₁`.
pub fn extract_components(s: &ParitySamples) -> Result<Components> {
    let gap = s.rho2 * s.rho2 - s.rho1 * s.rho1;
    if gap.abs() < 1e-4 {
        return Err(Error::IllConditioned { gap: gap.abs() });
    }
    let even1: CVec = core::array::from_fn(|k| s.rho1_plus[k] + s.rho1_minus[k]);
    let even2: CVec = core::array::from_fn(|k| s.rho2_plus[k] + s.rho2_minus[k]);
    let a1: CVec = core::array::from_fn(|k| (even2[k] - even1[k]) / (2.0 * gap));
    let a2 = core::array::from_fn(|k| (s.rho1_plus[k] - s.rho1_minus[k]) / (4.0 * s.rho1));
    let a3 = core::array::from_fn(|k| even1[k] * 0.5 - a1[k] * (s.rho1 * s.rho1));
    Ok(Components { a1, a2, a3 })
}

/// Evaluates [`transform_a`] at the four parity samples and eliminates.
pub fn transform_components(
    field: &impl TensorField,
    grid: &TransformGrid,
    eta: &Vec3,
    p: &[f64; 2],
    rho: (f64, f64),
    chi: &CutoffSpec,
) -> Result<(Components, RayTransforms)> {
    let n = grid.lattice.n;
    let d1 = DirectionParams::new(rho.0, *eta, *p, n)?;
    let d2 = DirectionParams::new(rho.1, *eta, *p, n)?;
    let t1p = transform_a(field, grid, &d1, chi);
    let samples = ParitySamples {
        rho1: rho.0,
        rho2: rho.1,
        rho1_plus: t1p.a,
        rho1_minus: transform_a(field, grid, &d1.flipped(), chi).a,
        rho2_plus: transform_a(field, grid, &d2, chi).a,
        rho2_minus: transform_a(field, grid, &d2.flipped(), chi).a,
    };
    Ok((extract_components(&samples)?, t1p))
}

/// Unitary DFT of one axis, in place.
fn dft_axis(data: &mut [Complex64], lattice: &Lattice, axis: usize, sign: f64) {
    let n = lattice.count;
    let stride = lattice.count.pow((lattice.n - 1 - axis) as u32);
    let coords: Vec<f64> = (0..n).map(|i| lattice.coord(i)).collect();
    let freqs: Vec<f64> = (0..n).map(|i| lattice.frequency(i)).collect();
    let twiddle: Vec<Complex64> = (0..n * n)
        .map(|q| {
            // Forward maps coordinates to frequencies, inverse the reverse.
            let (out, inp) = (q / n, q % n);
            let arg = if sign < 0.0 {
                sign * freqs[out] * coords[inp]
            } else {
                sign * coords[out] * freqs[inp]
            };
            Complex64::new(libm::cos(arg), libm::sin(arg))
        })
        .collect();
    let mut line = vec![ZERO; n];
    let mut terms = vec![ZERO; n];
    for start in 0..data.len() {
        if (start / stride) % n != 0 {
            continue;
        }
        for (i, v) in line.iter_mut().enumerate() {
            *v = data[start + i * stride];
        }
        for k in 0..n {
            for (i, t) in terms.iter_mut().enumerate() {
                *t = twiddle[k * n + i] * line[i];
            }
            data[start + k * stride] = pairwise_sum_complex(&terms);
        }
    }
}

/// `f̂` at every lattice frequency (index layout as the lattice).
pub fn spectrum(lattice: &Lattice, data: &[f64]) -> Vec<Complex64> {
    let mut out: Vec<Complex64> = data.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    for axis in 0..lattice.n {
        dft_axis(&mut out, lattice, axis, -1.0);
    }
    let scale = libm::pow(lattice.spacing() / libm::sqrt(2.0 * PI), lattice.n as f64);
    out.iter_mut().for_each(|v| *v *= scale);
    out
}

/// Inverse of [`spectrum`].
pub fn inverse_spectrum(lattice: &Lattice, spec: &[Complex64]) -> Vec<Complex64> {
    let mut out = spec.to_vec();
    for axis in 0..lattice.n {
        dft_axis(&mut out, lattice, axis, 1.0);
    }
    let dtheta = PI / lattice.half;
    let scale = libm::pow(dtheta / libm::sqrt(2.0 * PI), lattice.n as f64);
    out.iter_mut().for_each(|v| *v *= scale);
    out
}

/// `f̂(η)` by direct summation at one frequency.
pub fn projection_slice_oracle(lattice: &Lattice, data: &[f64], eta: &Vec3) -> Complex64 {
    let terms: Vec<Complex64> = lattice
        .points()
        .iter()
        .zip(data)
        .map(|(x, &v)| {
            let arg = -linalg::dot(eta, x);
            Complex64::new(libm::cos(arg), libm::sin(arg)) * v
        })
        .collect();
    pairwise_sum_complex(&terms)
        * libm::pow(lattice.spacing() / libm::sqrt(2.0 * PI), lattice.n as f64)
}

/// Spectra of the independent entries of `m` on a lattice.
#[derive(Clone, Debug, PartialEq)]
pub struct ComponentSpectra {
    pub lattice: Lattice,
    /// `spectra[a][b]` for `a ≤ b`; the lower triangle is empty.
    pub spectra: [[Vec<Complex64>; 4]; 4],
}

impl ComponentSpectra {
    pub fn new(lattice: &Lattice, values: &[Mat4]) -> Self {
        let spectra = core::array::from_fn(|a| {
            core::array::from_fn(|b| {
                if a > b || (a > lattice.n || b > lattice.n) {
                    return Vec::new();
                }
                let data: Vec<f64> = values.iter().map(|m| m[a][b]).collect();
                spectrum(lattice, &data)
            })
        });
        ComponentSpectra {
            lattice: *lattice,
            spectra,
        }
    }

    pub fn from_difference(td: &TensorDifference) -> Self {
        Self::new(&td.lattice, &td.values)
    }

    pub fn entry(&self, a: usize, b: usize, k: usize) -> Complex64 {
        let (a, b) = if a <= b { (a, b) } else { (b, a) };
        self.spectra[a][b].get(k).copied().unwrap_or(ZERO)
    }

    /// Each stored entry with its multiplicity in the Frobenius norm.
    fn weighted_entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..4)
            .flat_map(move |a| (a..4).map(move |b| (a, b, if a == b { 1.0 } else { 2.0 })))
            .filter(|&(a, b, _)| !self.spectra[a][b].is_empty())
    }

    /// `iη(ϱ²λ̂ + 2ϱ ξ·ω̂ + ξᵀĥξ) χ(η)`: the straight-ray transform from
    /// lattice data.
    pub fn oracle_a(&self, k: usize, varrho: f64, p: &[f64; 2], chi: &CutoffSpec) -> Result<CVec> {
        let n = self.lattice.n;
        let eta = self.lattice.frequency_vector(k);
        let weight = cutoff(&eta, n, chi);
        if weight == 0.0 {
            return Ok([ZERO; 3]);
        }
        let xi = xi_from_eta_p(&eta, p, n)?;
        let zeta = [varrho, xi[0], xi[1], xi[2]];
        let mut contracted = ZERO;
        for a in 0..4 {
            for b in 0..4 {
                contracted += self.entry(a, b, k) * (zeta[a] * zeta[b]);
            }
        }
        Ok(core::array::from_fn(|c| {
            if c < n {
                Complex64::new(0.0, eta[c]) * contracted * weight
            } else {
                ZERO
            }
        }))
    }

    /// `‖θ f̂‖²` summed over entries, each lattice cell weighted by `w`.
    fn weighted_gradient_sq(
        &self,
        entries: &[(usize, usize, f64)],
        w: impl Fn(usize) -> f64,
    ) -> f64 {
        let l = &self.lattice;
        let cell = libm::pow(PI / l.half, l.n as f64);
        let terms: Vec<f64> = (0..l.len())
            .map(|k| {
                let theta = l.frequency_vector(k);
                let t2 = linalg::dot(&theta, &theta);
                let wk = w(k);
                if wk == 0.0 {
                    return 0.0;
                }
                entries
                    .iter()
                    .map(|&(a, b, mult)| mult * self.spectra[a][b][k].norm_sqr())
                    .sum::<f64>()
                    * t2
                    * wk
            })
            .collect();
        pairwise_sum(&terms) * cell
    }

    /// `‖∇m‖_{L²}` in the Frobenius norm, via Parseval.
    pub fn gradient_norm(&self) -> f64 {
        let all: Vec<_> = self.weighted_entries().collect();
        libm::sqrt(self.weighted_gradient_sq(&all, |_| 1.0))
    }
}

/// Fraction of the lattice cell around frequency `θ` inside the cone
/// `|θ₁| ≤ μ|θ|`, by `sub`ⁿ midpoint subsamples.
pub fn cone_weight(theta: &Vec3, n: usize, cell: f64, mu: f64, sub: usize) -> f64 {
    let offs: Vec<f64> = (0..sub)
        .map(|i| ((i as f64 + 0.5) / sub as f64 - 0.5) * cell)
        .collect();
    let mut inside = 0usize;
    let total = sub.pow(n as u32);
    for q in 0..total {
        let mut t = *theta;
        let mut rest = q;
        for v in t.iter_mut().take(n) {
            *v += offs[rest % sub];
            rest /= sub;
        }
        if t[0].abs() <= mu * active_norm(&t, n) {
            inside += 1;
        }
    }
    inside as f64 / total as f64
}

const CONE_SUBSAMPLES: usize = 8;

fn cone_weights(lattice: &Lattice, mu: f64) -> Vec<f64> {
    let sub = if lattice.n == 2 {
        CONE_SUBSAMPLES
    } else {
        CONE_SUBSAMPLES / 2
    };
    let cell = PI / lattice.half;
    (0..lattice.len())
        .map(|k| cone_weight(&lattice.frequency_vector(k), lattice.n, cell, mu, sub))
        .collect()
}

/// Discrete `H¹` and `H²` norms summed over scalar components.
pub fn sobolev_norms(lattice: &Lattice, spectra: &[Vec<Complex64>]) -> (f64, f64) {
    let cell = libm::pow(PI / lattice.half, lattice.n as f64);
    let (mut h1, mut h2) = (Vec::new(), Vec::new());
    for s in spectra {
        for (k, v) in s.iter().enumerate() {
            let theta = lattice.frequency_vector(k);
            let w = 1.0 + linalg::dot(&theta, &theta);
            h1.push(w * v.norm_sqr());
            h2.push(w * w * v.norm_sqr());
        }
    }
    (
        libm::sqrt(pairwise_sum(&h1) * cell),
        libm::sqrt(pairwise_sum(&h2) * cell),
    )
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConeTable {
    pub mu: Vec<f64>,
    /// `‖θm̂‖` over the cone divided by `‖∇m‖`.
    pub ratio: Vec<f64>,
    pub h1: f64,
    pub h2: f64,
    /// The ratio never increases as `μ` decreases.
    pub monotone: bool,
    /// Largest `μ` below which every tabulated ratio is at most `1/3`.
    pub mu_star: Option<f64>,
}

/// Requires `‖m‖_{H²} ≤ K‖m‖_{H¹}` for the scalar components.
pub fn cone_estimate_experiment(
    lattice: &Lattice,
    components: &[Vec<f64>],
    mus: &[f64],
    k: f64,
) -> Result<ConeTable> {
    let spectra: Vec<Vec<Complex64>> = components.iter().map(|c| spectrum(lattice, c)).collect();
    let (h1, h2) = sobolev_norms(lattice, &spectra);
    if h2 > k * h1 {
        return Err(Error::KViolated { h2, h1, k });
    }
    let cell = libm::pow(PI / lattice.half, lattice.n as f64);
    let grad_sq = |w: &dyn Fn(usize) -> f64| -> f64 {
        let terms: Vec<f64> = (0..lattice.len())
            .map(|q| {
                let theta = lattice.frequency_vector(q);
                let wq = w(q);
                if wq == 0.0 {
                    return 0.0;
                }
                wq * linalg::dot(&theta, &theta)
                    * spectra.iter().map(|s| s[q].norm_sqr()).sum::<f64>()
            })
            .collect();
        pairwise_sum(&terms) * cell
    };
    let full = libm::sqrt(grad_sq(&|_| 1.0));
    let ratio: Vec<f64> = mus
        .iter()
        .map(|&mu| {
            if full == 0.0 {
                return 0.0;
            }
            let w = cone_weights(lattice, mu);
            libm::sqrt(grad_sq(&|q| w[q])) / full
        })
        .collect();
    let mut order: Vec<usize> = (0..mus.len()).collect();
    order.sort_by(|&a, &b| mus[a].total_cmp(&mus[b]));
    let monotone = order.windows(2).all(|w| ratio[w[0]] <= ratio[w[1]]);
    let mut mu_star = None;
    for &i in &order {
        if ratio[i] <= 1.0 / 3.0 {
            mu_star = Some(mus[i]);
        } else {
            break;
        }
    }
    Ok(ConeTable {
        mu: mus.to_vec(),
        ratio,
        h1,
        h2,
        monotone,
        mu_star,
    })
}

/// One region-restricted norm against its bound.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RegionRatio {
    /// `‖θm̂_c‖` over `{|θ₁|/|θ| > μ}`.
    pub measured: f64,
    /// `√ε/μʲ · ‖∇m‖`.
    pub bound: f64,
    /// `measured / bound` (0 when both vanish).
    pub ratio: f64,
}

impl RegionRatio {
    fn new(measured: f64, bound: f64) -> Self {
        let ratio = if bound > 0.0 {
            measured / bound
        } else if measured > 0.0 {
            f64::INFINITY
        } else {
            0.0
        };
        RegionRatio {
            measured,
            bound,
            ratio,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ContractionConfig {
    /// Accepted multiple of each bound.
    pub slack: f64,
    /// `‖∇m‖` at or below which the metrics already agree.
    pub floor: f64,
    pub cone_target: f64,
}

impl Default for ContractionConfig {
    fn default() -> Self {
        ContractionConfig {
            slack: 2.0,
            floor: 1e-4,
            cone_target: 1.0 / 3.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ContractionReport {
    pub epsilon: f64,
    pub mu: f64,
    pub gradient_norm: f64,
    pub lambda: RegionRatio,
    pub omega: RegionRatio,
    pub h: RegionRatio,
    /// `‖θm̂‖` over the cone `{|θ₁|/|θ| ≤ μ}` divided by `‖∇m‖`.
    pub cone_ratio: f64,
    /// Cone ratio plus the three region norms over `‖∇m‖`; below 1 the
    /// estimate closes.
    pub combined: f64,
    /// `‖m‖_{L²}/‖∇m‖_{L²}` on the lattice.
    pub poincare: f64,
    pub pass: bool,
}

/// Region norms of `m̂_λ`, `m̂_ω`, `m̂_h` against `√ε`, `√ε/μ`, `√ε/μ²`
/// times `‖∇m‖`, with `μ = ε^{1/8}`.
pub fn contraction_diagnostic(
    spectra: &ComponentSpectra,
    epsilon: f64,
    cfg: &ContractionConfig,
) -> ContractionReport {
    let l = &spectra.lattice;
    let mu = libm::pow(epsilon, 0.125);
    let cone = cone_weights(l, mu);
    let all: Vec<_> = spectra.weighted_entries().collect();
    let pick = |f: &dyn Fn(usize, usize) -> bool| -> Vec<(usize, usize, f64)> {
        all.iter().copied().filter(|&(a, b, _)| f(a, b)).collect()
    };
    let lambda_e = pick(&|a, b| a == 0 && b == 0);
    let omega_e = pick(&|a, b| a == 0 && b > 0);
    let h_e = pick(&|a, b| a > 0 && b > 0);
    let full = libm::sqrt(spectra.weighted_gradient_sq(&all, |_| 1.0));
    let region =
        |e: &[(usize, usize, f64)]| libm::sqrt(spectra.weighted_gradient_sq(e, |k| 1.0 - cone[k]));
    let se = libm::sqrt(epsilon);
    let lambda = RegionRatio::new(region(&lambda_e), se * full);
    let omega = RegionRatio::new(region(&omega_e), se / mu * full);
    let h = RegionRatio::new(region(&h_e), se / (mu * mu) * full);
    let cone_ratio = if full > 0.0 {
        libm::sqrt(spectra.weighted_gradient_sq(&all, |k| cone[k])) / full
    } else {
        0.0
    };
    let combined = if full > 0.0 {
        cone_ratio + (lambda.measured + omega.measured + h.measured) / full
    } else {
        0.0
    };

    let cell = libm::pow(PI / l.half, l.n as f64);
    let mass: Vec<f64> = (0..l.len())
        .map(|k| {
            all.iter()
                .map(|&(a, b, m)| m * spectra.spectra[a][b][k].norm_sqr())
                .sum::<f64>()
        })
        .collect();
    let m_norm = libm::sqrt(pairwise_sum(&mass) * cell);
    let poincare = if full > 0.0 { m_norm / full } else { 0.0 };

    let within =
        [lambda, omega, h].iter().all(|r| r.ratio <= cfg.slack) && cone_ratio <= cfg.cone_target;
    ContractionReport {
        epsilon,
        mu,
        gradient_norm: full,
        lambda,
        omega,
        h,
        cone_ratio,
        combined,
        poincare,
        pass: full <= cfg.floor || within,
    }
}

/// The map `x ↦ x_δ(x)` to straightened coordinates and its Jacobian.
pub trait StraightCoordinates {
    fn straight(&self, x: &Vec3) -> Result<(Vec3, Mat3)>;
}

/// `x_δ = x` (the `ε = 0` case).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct IdentityCoordinates;

impl StraightCoordinates for IdentityCoordinates {
    fn straight(&self, x: &Vec3) -> Result<(Vec3, Mat3)> {
        Ok((*x, linalg::identity::<3>()))
    }
}

impl<M: StationaryMetric> StraightCoordinates for Straightening<M> {
    fn straight(&self, x: &Vec3) -> Result<(Vec3, Mat3)> {
        let n = self.metric().domain().n;
        let y = self.inverse(x)?;
        let mut j = self.jacobian(&y);
        for k in n..3 {
            j[k] = [0.0; 3];
            j[k][k] = 1.0;
        }
        let det = linalg::det(&j);
        if det <= 0.0 {
            return Err(Error::FoldDetected { det });
        }
        Ok((y, linalg::inverse(&j).ok_or(Error::FoldDetected { det })?))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhaseChange {
    pub theta: Vec3,
    /// `det ∂θ/∂η`.
    pub j2: f64,
}

const PHASE_INTERVALS: usize = 64;

/// `θ(x, y, η) = ∫₀¹ ∇φ(y + t(x - y), η) dt` with `φ = η·x_δ(x)`, by
/// Simpson's rule. `θ` is linear in `η`, so `J₂` is the determinant of the
/// averaged Jacobian.
pub fn phase_change_of_variables(
    map: &impl StraightCoordinates,
    x: &Vec3,
    y: &Vec3,
    eta: &Vec3,
    n: usize,
) -> Result<PhaseChange> {
    let k = PHASE_INTERVALS;
    let mut avg = [[0.0; 3]; 3];
    for i in 0..=k {
        let t = i as f64 / k as f64;
        let z: Vec3 = core::array::from_fn(|a| y[a] + t * (x[a] - y[a]));
        let (_, d) = map.straight(&z)?;
        let w = if i == 0 || i == k {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        } / (3.0 * k as f64);
        for (a, row) in avg.iter_mut().enumerate() {
            for (b, v) in row.iter_mut().enumerate() {
                *v += w * d[b][a];
            }
        }
    }
    for a in n..3 {
        avg[a] = [0.0; 3];
        avg[a][a] = 1.0;
    }
    let theta = linalg::mat3_vec(&avg, eta);
    Ok(PhaseChange {
        theta,
        j2: linalg::det(&avg),
    })
}

/// `a(x, y, ξ) = scale · G_w(x - c_x) G_w(y - c_y) b(ξ)` with Gaussian
/// factors `G_w(u) = exp(-|u|²/2w²)` and symbol `b(ξ) = exp(-|ξ|²/2σ²)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GaussianAmplitude {
    pub scale: f64,
    pub x_center: Vec3,
    pub y_center: Vec3,
    pub width: f64,
    pub symbol_width: f64,
}

fn gauss(u: &Vec3, c: &Vec3, w: f64, n: usize) -> f64 {
    let r2: f64 = (0..n).map(|k| (u[k] - c[k]) * (u[k] - c[k])).sum();
    libm::exp(-0.5 * r2 / (w * w))
}

/// Discretized kernel of `Pf(x) = ∫∫ e^{i(x-y)·ξ} a(x, y, ξ) f(y) dy dξ`
/// on the lattice, as a dense row-major matrix acting on lattice samples
/// (the `Δxⁿ` weight included).
pub fn fio_kernel(a: &GaussianAmplitude, lattice: &Lattice) -> Vec<f64> {
    let n = lattice.n;
    let count = lattice.count;
    let dxi = PI / lattice.half;
    let dx = lattice.spacing();
    // k₁(d) for d = (i - j)Δx, i - j ∈ (-count, count).
    let k1: Vec<f64> = (0..2 * count - 1)
        .map(|q| {
            let d = (q as f64 - (count as f64 - 1.0)) * dx;
            let terms: Vec<f64> = (0..count)
                .map(|i| {
                    let xi = lattice.frequency(i);
                    libm::cos(d * xi)
                        * libm::exp(-0.5 * xi * xi / (a.symbol_width * a.symbol_width))
                })
                .collect();
            pairwise_sum(&terms) * dxi / (2.0 * PI)
        })
        .collect();
    let pts = lattice.points();
    let idx: Vec<[usize; 3]> = (0..lattice.len()).map(|k| lattice.index(k)).collect();
    let ax: Vec<f64> = pts
        .iter()
        .map(|x| gauss(x, &a.x_center, a.width, n))
        .collect();
    let ay: Vec<f64> = pts
        .iter()
        .map(|y| gauss(y, &a.y_center, a.width, n))
        .collect();
    let len = lattice.len();
    let cell = libm::pow(dx, n as f64);
    let mut out = vec![0.0; len * len];
    for i in 0..len {
        for j in 0..len {
            let k: f64 = (0..n)
                .map(|ax| k1[idx[i][ax] + count - 1 - idx[j][ax]])
                .product();
            out[i * len + j] = a.scale * ax[i] * ay[j] * k * cell;
        }
    }
    out
}

/// Largest singular value of a square row-major matrix by power iteration
/// on `KᵀK`.
pub fn power_iteration(k: &[f64], len: usize, tol: f64, max_iter: usize) -> (f64, usize) {
    let mut v: Vec<f64> = (0..len)
        .map(|i| 1.0 + 0.01 * ((i * 7919) % 101) as f64)
        .collect();
    let normalize = |v: &mut Vec<f64>| {
        let s = libm::sqrt(pairwise_sum(&v.iter().map(|x| x * x).collect::<Vec<_>>()));
        if s > 0.0 {
            v.iter_mut().for_each(|x| *x /= s);
        }
        s
    };
    normalize(&mut v);
    let mut sigma2 = 0.0;
    for it in 1..=max_iter {
        let kv: Vec<f64> = (0..len)
            .map(|i| pairwise_sum(&(0..len).map(|j| k[i * len + j] * v[j]).collect::<Vec<_>>()))
            .collect();
        let mut w: Vec<f64> = (0..len)
            .map(|j| pairwise_sum(&(0..len).map(|i| k[i * len + j] * kv[i]).collect::<Vec<_>>()))
            .collect();
        let next = normalize(&mut w);
        v = w;
        if next == 0.0 {
            return (0.0, it);
        }
        if (next - sigma2).abs() <= tol * next {
            return (libm::sqrt(next), it);
        }
        sigma2 = next;
    }
    (libm::sqrt(sigma2), max_iter)
}

/// `∫|dᵏ/duᵏ e^{-u²/2}| du`.
fn gaussian_derivative_l1(k: usize) -> f64 {
    let steps = 24_000;
    let h = 24.0 / steps as f64;
    let terms: Vec<f64> = (0..=steps)
        .map(|i| {
            let v = -12.0 + i as f64 * h;
            let (mut prev, mut he) = (0.0, 1.0);
            for j in 0..k {
                let next = v * he - j as f64 * prev;
                prev = he;
                he = next;
            }
            let w = if i == 0 || i == steps { 0.5 } else { 1.0 };
            w * he.abs() * libm::exp(-0.5 * v * v)
        })
        .collect();
    pairwise_sum(&terms) * h
}

/// `M = Σ_{|α|+|β| ≤ 2n+1} ∫∫ |∂ₓᵅ ∂ᵧᵝ a| dx dy` (with `sup_ξ |b| = 1`).
pub fn fio_bound(a: &GaussianAmplitude, n: usize) -> f64 {
    let top = 2 * n + 1;
    let one_d: Vec<f64> = (0..=top)
        .map(|k| libm::pow(a.width, 1.0 - k as f64) * gaussian_derivative_l1(k))
        .collect();
    // s[j] = Σ_{|α| = j} Π ∫|∂^{α_a} G|.
    let mut s = vec![0.0; top + 1];
    let combos = (top + 1).pow(n as u32);
    for q in 0..combos {
        let mut rest = q;
        let mut order = 0;
        let mut prod = 1.0;
        for _ in 0..n {
            let k = rest % (top + 1);
            rest /= top + 1;
            order += k;
            prod *= one_d[k];
        }
        if order <= top {
            s[order] += prod;
        }
    }
    let mut total = 0.0;
    for j in 0..=top {
        for l in 0..=top - j {
            total += s[j] * s[l];
        }
    }
    a.scale.abs() * total
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FioNorm {
    pub norm: f64,
    pub bound: f64,
    /// `norm / bound`.
    pub ratio: f64,
    pub iterations: usize,
}

pub fn fio_norm_experiment(a: &GaussianAmplitude, lattice: &Lattice) -> FioNorm {
    let k = fio_kernel(a, lattice);
    let (norm, iterations) = power_iteration(&k, lattice.len(), 1e-15, 20_000);
    let bound = fio_bound(a, lattice.n);
    FioNorm {
        norm,
        bound,
        ratio: if bound > 0.0 { norm / bound } else { 0.0 },
        iterations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::Minkowski;

    const R2: f64 = core::f64::consts::FRAC_1_SQRT_2;

    fn close(a: &Vec3, b: &Vec3, tol: f64) -> bool {
        linalg::max_abs_diff(a, b) <= tol
    }

    #[test]
    fn xi_examples() {
        assert!(close(
            &xi_from_eta_p(&[1.0, 0.0, 0.0], &[1.0, 0.0], 3).unwrap(),
            &[0.0, 1.0, 0.0],
            1e-15
        ));
        let xi = xi_from_eta_p(&[1.0, 1.0, 0.0], &[1.0, 0.0], 3).unwrap();
        assert!(close(&xi, &[-R2, R2, 0.0], 1e-15));
        assert!(linalg::dot(&xi, &[1.0, 1.0, 0.0]).abs() < 1e-15);
        let s5 = libm::sqrt(5.0);
        assert!(close(
            &xi_from_eta_p(&[2.0, 1.0, 0.0], &[1.0, 0.0], 2).unwrap(),
            &[-1.0 / s5, 2.0 / s5, 0.0],
            1e-15
        ));
        assert!(matches!(
            xi_from_eta_p(&[0.0, 0.0, 1.0], &[1.0, 0.0], 3),
            Err(Error::SingularDirection { .. })
        ));
    }

    #[test]
    fn cutoff_examples() {
        let chi = CutoffSpec::lorentzian(0.1);
        assert_eq!(cutoff(&[1.0, 0.0, 0.0], 3, &chi), 1.0);
        assert_eq!(cutoff(&[0.01, 1.0, 0.0], 3, &chi), 0.0);
        let chi_p = CutoffSpec {
            mu: 0.05,
            kind: CutoffKind::Riemannian { p: [1.0, 0.0] },
        };
        for eta in [[0.0, 1.0, 0.0], [1.0, -3.0, 0.0], [1e-3, 2.0, 0.0]] {
            assert_eq!(cutoff(&eta, 2, &chi_p), 1.0);
        }
        let mid = cutoff(&[0.075, 1.0, 0.0], 2, &chi);
        assert!(mid > 0.0 && mid < 1.0);
    }

    #[test]
    fn psi_p_examples() {
        assert!((psi_p(&[1.0, 1.0, 0.0], &[1.0, 0.0], 3).unwrap() - R2).abs() < 1e-15);
        assert_eq!(psi_p(&[1.0, 0.0, 0.0], &[0.6, 0.8], 3).unwrap(), 1.0);
        let a = psi_p(&[0.3, -0.7, 0.2], &[0.6, 0.8], 3).unwrap();
        let b = psi_p(&[2.1, -4.9, 1.4], &[0.6, 0.8], 3).unwrap();
        assert!((a - b).abs() < 1e-15);
    }

    #[test]
    fn window_gradients_match_differences() {
        for profile in [WindowProfile::Bump, WindowProfile::Polynomial(3)] {
            let f = field(3).with_profile(profile);
            let x = [0.31, -0.22, 0.4];
            let g = f.gradient(&x);
            for k in 0..3 {
                let h = 1e-6;
                let (mut p, mut q) = (x, x);
                p[k] += h;
                q[k] -= h;
                let (vp, vq) = (f.value(&p), f.value(&q));
                for i in 0..4 {
                    for j in 0..4 {
                        let fd = (vp[i][j] - vq[i][j]) / (2.0 * h);
                        assert!(
                            (fd - g[k][i][j]).abs() < 1e-8,
                            "{profile:?} d{k} [{i}][{j}]: {fd} vs {}",
                            g[k][i][j]
                        );
                    }
                }
            }
        }
    }

    fn field(n: usize) -> SyntheticField {
        let mut c = [[0.0; 4]; 4];
        c[0][0] = 1.0;
        c[0][2] = 0.4;
        c[2][2] = -0.6;
        if n == 3 {
            c[2][3] = 0.3;
            c[0][3] = -0.2;
        }
        let mut d = [[0.0; 4]; 4];
        d[0][0] = -0.5;
        d[0][1] = 0.7;
        d[1][2] = 0.35;
        d[1][1] = 0.2;
        SyntheticField::new(
            n,
            1.5,
            0.9,
            vec![
                FourierMode {
                    wave: [2, 1, 1],
                    phase: 0.3,
                    coeff: c,
                },
                FourierMode {
                    wave: [-1, 3, 0],
                    phase: -1.1,
                    coeff: d,
                },
            ],
        )
    }

    #[test]
    fn synthetic_gradient_matches_differences() {
        let f = field(3);
        let x = [0.2, -0.1, 0.3];
        let g = f.gradient(&x);
        let h = 1e-6;
        for k in 0..3 {
            let mut xp = x;
            let mut xm = x;
            xp[k] += h;
            xm[k] -= h;
            let (a, b) = (f.value(&xp), f.value(&xm));
            for i in 0..4 {
                for j in 0..4 {
                    assert!(((a[i][j] - b[i][j]) / (2.0 * h) - g[k][i][j]).abs() < 1e-7);
                }
            }
        }
    }

    #[test]
    fn separable_dft_matches_direct_sum_and_inverts() {
        let l = Lattice::new(2, 16, 1.5);
        let data: Vec<f64> = l
            .points()
            .iter()
            .map(|x| libm::exp(-4.0 * linalg::dot(x, x)) * (1.0 + x[0]))
            .collect();
        let spec = spectrum(&l, &data);
        for k in [0, 5, 37, 200] {
            let direct = projection_slice_oracle(&l, &data, &l.frequency_vector(k));
            assert!((spec[k] - direct).norm() < 1e-13);
        }
        let back = inverse_spectrum(&l, &spec);
        for (a, b) in back.iter().zip(&data) {
            assert!((a.re - b).abs() < 1e-13 && a.im.abs() < 1e-13, "{a} {b}");
        }
    }

    #[test]
    fn zero_field_gives_zero_transform() {
        let grid = TransformGrid::new(&SpatialDomain::standard(2), 16);
        let f = SyntheticField::new(2, 1.5, 0.9, Vec::new());
        let dir = DirectionParams::new(-1.05, [1.0, 2.0, 0.0], [1.0, 0.0], 2).unwrap();
        let t = transform_a(&f, &grid, &dir, &CutoffSpec::lorentzian(0.1));
        assert!(t.a.iter().all(|c| c.norm() == 0.0));
    }

    #[test]
    fn outside_cutoff_is_exactly_zero() {
        let grid = TransformGrid::new(&SpatialDomain::standard(2), 16);
        let dir = DirectionParams::new(-1.05, [0.01, 2.0, 0.0], [1.0, 0.0], 2).unwrap();
        let t = transform_a(&field(2), &grid, &dir, &CutoffSpec::lorentzian(0.1));
        assert_eq!(t, RayTransforms::ZERO);
    }

    #[test]
    fn straight_rays_match_lattice_oracle_at_a_frequency() {
        let d = SpatialDomain::standard(2);
        let grid = TransformGrid::new(&d, 32);
        let f = field(2);
        let spectra = ComponentSpectra::new(&grid.lattice, &f.sample(&grid.lattice));
        let chi = CutoffSpec::lorentzian(0.1);
        let k = grid.lattice.flat(&[2, 3, 0]);
        let eta = grid.lattice.frequency_vector(k);
        let dir = DirectionParams::new(-1.05, eta, [1.0, 0.0], 2).unwrap();
        let ray = transform_a(&f, &grid, &dir, &chi).a;
        let oracle = spectra.oracle_a(k, -1.05, &[1.0, 0.0], &chi).unwrap();
        let err: f64 = (0..2).map(|c| (ray[c] - oracle[c]).norm_sqr()).sum();
        let size: f64 = (0..2).map(|c| oracle[c].norm_sqr()).sum();
        assert!(libm::sqrt(err / size) < 1e-3, "{ray:?} {oracle:?}");
    }

    #[test]
    fn parity_algebra_recovers_known_components() {
        let c = |re: f64, im: f64| Complex64::new(re, im);
        let a1 = [c(0.3, -0.2), c(1.1, 0.4), ZERO];
        let a2 = [c(-0.7, 0.1), c(0.2, 0.9), ZERO];
        let a3 = [c(0.5, 0.5), c(-1.3, 0.0), ZERO];
        let at = |rho: f64, sign: f64| -> CVec {
            core::array::from_fn(|k| a1[k] * (rho * rho) + a2[k] * (2.0 * rho * sign) + a3[k])
        };
        let s = ParitySamples {
            rho1: -1.05,
            rho2: -1.10,
            rho1_plus: at(-1.05, 1.0),
            rho1_minus: at(-1.05, -1.0),
            rho2_plus: at(-1.10, 1.0),
            rho2_minus: at(-1.10, -1.0),
        };
        let got = extract_components(&s).unwrap();
        for k in 0..3 {
            assert!((got.a1[k] - a1[k]).norm() < 1e-12);
            assert!((got.a2[k] - a2[k]).norm() < 1e-12);
            assert!((got.a3[k] - a3[k]).norm() < 1e-12);
        }
        let same = ParitySamples { rho2: -1.05, ..s };
        assert!(matches!(
            extract_components(&same),
            Err(Error::IllConditioned { .. })
        ));
    }

    #[test]
    fn extracted_components_match_direct_definitions() {
        let grid = TransformGrid::new(&SpatialDomain::standard(3), 16);
        let f = field(3);
        let chi = CutoffSpec::lorentzian(0.1);
        let eta = [PI / 1.5 * 2.0, PI / 1.5, -PI / 1.5];
        let p = [0.6, 0.8];
        let (comp, direct) =
            transform_components(&f, &grid, &eta, &p, (DEFAULT_RHO1, DEFAULT_RHO2), &chi).unwrap();
        let scale = direct
            .a1
            .iter()
            .chain(&direct.a2)
            .chain(&direct.a3)
            .map(|c| c.norm())
            .fold(0.0, f64::max);
        for k in 0..3 {
            assert!((comp.a1[k] - direct.a1[k]).norm() <= 1e-8 * scale);
            assert!((comp.a2[k] - direct.a2[k]).norm() <= 1e-8 * scale);
            assert!((comp.a3[k] - direct.a3[k]).norm() <= 1e-8 * scale);
        }
    }

    #[test]
    fn lambda_only_field_has_no_odd_or_h_part() {
        let mut c = [[0.0; 4]; 4];
        c[0][0] = 1.0;
        let f = SyntheticField::new(
            2,
            1.5,
            0.9,
            vec![FourierMode {
                wave: [1, 2, 0],
                phase: 0.4,
                coeff: c,
            }],
        );
        let grid = TransformGrid::new(&SpatialDomain::standard(2), 16);
        let eta = [PI / 1.5 * 3.0, -PI / 1.5, 0.0];
        let (comp, _) = transform_components(
            &f,
            &grid,
            &eta,
            &[1.0, 0.0],
            (DEFAULT_RHO1, DEFAULT_RHO2),
            &CutoffSpec::lorentzian(0.1),
        )
        .unwrap();
        let scale = comp.a1.iter().map(|c| c.norm()).fold(0.0, f64::max);
        assert!(scale > 1e-3);
        assert!(comp
            .a2
            .iter()
            .chain(&comp.a3)
            .all(|c| c.norm() < 1e-10 * scale));
    }

    #[test]
    fn cone_disjoint_support_has_no_leakage() {
        let l = Lattice::new(2, 32, 1.5);
        // m̂ supported on frequencies with |θ₁|/|θ| > 0.5.
        let data: Vec<f64> = l
            .points()
            .iter()
            .map(|x| {
                let k = PI / 1.5;
                libm::cos(3.0 * k * x[0] + 1.0 * k * x[1])
                    + 0.5 * libm::sin(2.0 * k * x[0] - k * x[1])
            })
            .collect();
        let t = cone_estimate_experiment(&l, &[data], &[0.1], 10.0).unwrap();
        assert!(t.ratio[0] < 1e-6);
    }

    #[test]
    fn cone_ratio_shrinks_with_mu() {
        let l = Lattice::new(2, 32, 1.5);
        let f = field(2);
        let data: Vec<f64> = f.sample(&l).iter().map(|m| m[0][0]).collect();
        let mus = [0.4, 0.2, 0.1, 0.05, 0.02, 0.01];
        let t = cone_estimate_experiment(&l, std::slice::from_ref(&data), &mus, 50.0).unwrap();
        assert!(t.monotone, "{:?}", t.ratio);
        assert!(t.mu_star.is_some());
        assert!(matches!(
            cone_estimate_experiment(&l, &[data], &mus, 1.0),
            Err(Error::KViolated { .. })
        ));
    }

    #[test]
    fn parseval_for_trigonometric_polynomial() {
        let l = Lattice::new(2, 32, 1.5);
        let k = PI / 1.5;
        let mut values = Vec::new();
        let mut grad_sq = Vec::new();
        for x in l.points() {
            let (a, b) = (3.0 * k * x[0] - 2.0 * k * x[1], k * x[0] + 5.0 * k * x[1]);
            let mut m = [[0.0; 4]; 4];
            m[0][0] = libm::cos(a) + 0.3 * libm::sin(b);
            values.push(m);
            let g = [
                -3.0 * k * libm::sin(a) + 0.3 * k * libm::cos(b),
                2.0 * k * libm::sin(a) + 1.5 * k * libm::cos(b),
            ];
            grad_sq.push(g[0] * g[0] + g[1] * g[1]);
        }
        let spectra = ComponentSpectra::new(&l, &values);
        let direct = libm::sqrt(pairwise_sum(&grad_sq) * l.spacing() * l.spacing());
        assert!((spectra.gradient_norm() - direct).abs() <= 1e-8 * direct);
    }

    #[test]
    fn zero_difference_contraction_report_is_zero() {
        let l = Lattice::new(2, 16, 1.5);
        let spectra = ComponentSpectra::new(&l, &vec![[[0.0; 4]; 4]; l.len()]);
        let r = contraction_diagnostic(&spectra, 1e-2, &ContractionConfig::default());
        assert_eq!(r.gradient_norm, 0.0);
        assert_eq!(r.cone_ratio, 0.0);
        assert_eq!(r.lambda.ratio, 0.0);
        assert!(r.pass);
    }

    #[test]
    fn phase_change_is_trivial_without_bending() {
        let eta = [1.3, -0.4, 0.0];
        let r = phase_change_of_variables(
            &IdentityCoordinates,
            &[0.1, 0.2, 0.0],
            &[-0.3, 0.4, 0.0],
            &eta,
            2,
        )
        .unwrap();
        assert_eq!(r.theta, eta);
        assert_eq!(r.j2, 1.0);
        let flat = Straightening::new(
            Minkowski {
                domain: SpatialDomain::standard(2),
            },
            50,
        );
        let r =
            phase_change_of_variables(&flat, &[0.1, 0.2, 0.0], &[-0.3, 0.4, 0.0], &eta, 2).unwrap();
        assert!(close(&r.theta, &eta, 1e-12) && (r.j2 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn phase_change_of_a_bent_map_integrates_the_gradient() {
        let g = crate::families::general(SpatialDomain::standard(2), 1e-2);
        let map = Straightening::new(g, 300);
        let eta = [1.3, -0.4, 0.0];
        let (x, y) = ([0.1, 0.2, 0.0], [-0.3, 0.4, 0.0]);
        let r = phase_change_of_variables(&map, &x, &y, &eta, 2).unwrap();
        let (xd, _) = map.straight(&x).unwrap();
        let (yd, _) = map.straight(&y).unwrap();
        let lhs = linalg::dot(&eta, &linalg::sub(&xd, &yd));
        let rhs = linalg::dot(&r.theta, &linalg::sub(&x, &y));
        assert!((lhs - rhs).abs() < 1e-9, "{lhs} vs {rhs}");
        assert!(
            !close(&r.theta, &eta, 1e-6),
            "bending must show: {:?}",
            r.theta
        );
        assert!(
            close(&r.theta, &eta, 0.1) && r.j2 > 0.0 && (r.j2 - 1.0).abs() < 0.1,
            "{r:?}"
        );
    }

    #[test]
    fn fio_norm_is_linear_in_the_amplitude() {
        let lattice = Lattice::new(2, 10, 1.5);
        let base = GaussianAmplitude {
            scale: 1.0,
            x_center: [0.1, 0.0, 0.0],
            y_center: [0.0, -0.1, 0.0],
            width: 0.3,
            symbol_width: 3.0,
        };
        let one = fio_norm_experiment(&base, &lattice);
        for eps in [1e-2, 5e-3, 2.5e-3] {
            let r = fio_norm_experiment(&GaussianAmplitude { scale: eps, ..base }, &lattice);
            assert!(
                (r.norm - eps * one.norm).abs() <= 1e-12 * one.norm,
                "{eps}: {} vs {}",
                r.norm,
                eps * one.norm
            );
            assert!((r.ratio - one.ratio).abs() <= 1e-10 * one.ratio);
        }
    }

    #[test]
    fn fio_norm_of_zero_amplitude_vanishes() {
        let a = GaussianAmplitude {
            scale: 0.0,
            x_center: [0.0; 3],
            y_center: [0.0; 3],
            width: 0.3,
            symbol_width: 3.0,
        };
        let r = fio_norm_experiment(&a, &Lattice::new(2, 8, 1.5));
        assert_eq!(r.norm, 0.0);
    }

    #[test]
    fn gaussian_derivative_norms() {
        // ∫e^{-u²/2} = √(2π), ∫|u e^{-u²/2}| = 2.
        assert!((gaussian_derivative_l1(0) - libm::sqrt(2.0 * PI)).abs() < 1e-10);
        assert!((gaussian_derivative_l1(1) - 2.0).abs() < 1e-6);
    }
}

//! Parametric metric families used by the experiments and tests.
//!
//! Every family is linear in `ε`: bump amplitudes and diffeomorphism
//! displacements are both proportional to it.

use alloc::boxed::Box;
use alloc::vec;

use crate::metric::{
    AnyMap, AnyMetric, BumpDisplacement, BumpFamilyParams, BumpMetric, BumpTerm, ProductMetric,
    Pullback, SpatialDomain,
};

/// Displacement amplitude per unit `ε` of the pullback maps.
pub const DISPLACEMENT_PER_EPS: f64 = 0.5;

/// A metric in the special block form: `ω₁ = 0`, `h₁ⱼ = δ₁ⱼ`.
pub fn special_form(domain: SpatialDomain, eps: f64) -> BumpMetric {
    BumpMetric::new(
        domain,
        BumpFamilyParams {
            epsilon: eps,
            special_form: true,
            bumps: vec![
                BumpTerm {
                    center: [0.15, -0.1, 0.05],
                    width: 0.75,
                    lambda: 1.0,
                    omega: [0.0, 0.6, -0.3],
                    h: [[0.0; 3], [0.0, 0.8, 0.25], [0.0, 0.25, -0.5]],
                },
                BumpTerm {
                    center: [-0.3, 0.25, -0.1],
                    width: 0.55,
                    lambda: -0.7,
                    omega: [0.0, -0.4, 0.5],
                    h: [[0.0; 3], [0.0, -0.3, 0.1], [0.0, 0.1, 0.6]],
                },
            ],
        },
    )
    .expect("family parameters are valid")
}

/// A second, different special-form metric (negative controls).
pub fn special_form_alt(domain: SpatialDomain, eps: f64) -> BumpMetric {
    BumpMetric::new(
        domain,
        BumpFamilyParams {
            epsilon: eps,
            special_form: true,
            bumps: vec![BumpTerm {
                center: [0.05, 0.2, -0.05],
                width: 0.6,
                lambda: -1.2,
                omega: [0.0, -0.5, 0.4],
                h: [[0.0; 3], [0.0, -0.6, 0.3], [0.0, 0.3, 0.7]],
            }],
        },
    )
    .expect("family parameters are valid")
}

/// A general bump metric with all components perturbed.
pub fn general(domain: SpatialDomain, eps: f64) -> BumpMetric {
    BumpMetric::new(
        domain,
        BumpFamilyParams {
            epsilon: eps,
            special_form: false,
            bumps: vec![BumpTerm {
                center: [0.1, 0.05, -0.1],
                width: 0.65,
                lambda: 1.0,
                omega: [0.5, -0.4, 0.3],
                h: [[0.6, 0.2, 0.1], [0.2, -0.4, 0.3], [0.1, 0.3, 0.5]],
            }],
        },
    )
    .expect("family parameters are valid")
}

/// `h = e`, `λ = 1` and an `ω₁` bump of peak `amplitude` centered at the
/// origin: violates the special form by exactly `amplitude`.
pub fn non_orthogonal(domain: SpatialDomain, amplitude: f64) -> BumpMetric {
    BumpMetric::new(
        domain,
        BumpFamilyParams {
            epsilon: amplitude,
            special_form: false,
            bumps: vec![BumpTerm {
                center: [0.0; 3],
                width: 0.6,
                lambda: 0.0,
                omega: [1.0, 0.0, 0.0],
                h: [[0.0; 3]; 3],
            }],
        },
    )
    .expect("family parameters are valid")
}

pub fn displacement_a(n: usize, eps: f64) -> BumpDisplacement {
    BumpDisplacement {
        n,
        center: [0.05, 0.1, 0.0],
        width: 0.8,
        amplitude: DISPLACEMENT_PER_EPS * eps,
        direction: [0.6, 0.8, 0.0],
    }
}

pub fn displacement_b(n: usize, eps: f64) -> BumpDisplacement {
    BumpDisplacement {
        n,
        center: [-0.1, -0.05, 0.1],
        width: 0.8,
        amplitude: DISPLACEMENT_PER_EPS * eps,
        direction: if n == 3 {
            [-0.48, 0.6, 0.64]
        } else {
            [-0.6, 0.8, 0.0]
        },
    }
}

/// `g₁ = ψ_a* g_s` and `g₂ = ψ_b* g₁` for the special-form `g_s`: equal
/// boundary data, different interiors, both straightening to `g_s`.
pub fn pullback_pair(domain: SpatialDomain, eps: f64) -> (AnyMetric, AnyMetric) {
    let base = AnyMetric::Bump(special_form(domain, eps));
    let g1 = AnyMetric::Pullback(Box::new(
        Pullback::new(base, AnyMap::Bump(displacement_a(domain.n, eps)))
            .expect("map fixes the boundary"),
    ));
    let g2 = AnyMetric::Pullback(Box::new(
        Pullback::new(g1.clone(), AnyMap::Bump(displacement_b(domain.n, eps)))
            .expect("map fixes the boundary"),
    ));
    (g1, g2)
}

/// The Riemannian analogue of [`pullback_pair`]: `-dt² + h` with `h` from
/// the special-form family, pulled back twice.
pub fn riemannian_pullback_pair(domain: SpatialDomain, eps: f64) -> (AnyMetric, AnyMetric) {
    let base = AnyMetric::Product(Box::new(ProductMetric {
        base: AnyMetric::Bump(special_form(domain, eps)),
    }));
    let g1 = AnyMetric::Pullback(Box::new(
        Pullback::new(base, AnyMap::Bump(displacement_a(domain.n, eps)))
            .expect("map fixes the boundary"),
    ));
    let g2 = AnyMetric::Pullback(Box::new(
        Pullback::new(g1.clone(), AnyMap::Bump(displacement_b(domain.n, eps)))
            .expect("map fixes the boundary"),
    ));
    (g1, g2)
}

/// Two special-form metrics with different boundary data.
pub fn unequal_pair(domain: SpatialDomain, eps: f64) -> (AnyMetric, AnyMetric) {
    (
        AnyMetric::Bump(special_form(domain, eps)),
        AnyMetric::Bump(special_form_alt(domain, eps)),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg;
    use crate::metric::{eval_metric, SpatialMap, StationaryMetric};

    #[test]
    fn displacements_are_diffeomorphisms() {
        for psi in [displacement_a(3, 1e-2), displacement_b(3, 1e-2)] {
            for x in crate::straighten::closed_grid(3, 9, 1.0) {
                assert!(linalg::det(&psi.jacobian(&x)) > 0.9);
            }
        }
    }

    #[test]
    fn pair_members_differ_inside() {
        let d = SpatialDomain::standard(2);
        let (g1, g2) = pullback_pair(d, 1e-2);
        let a = eval_metric(&g1, &[0.0, 0.0, 0.0]);
        let b = eval_metric(&g2, &[0.0, 0.0, 0.0]);
        assert!(
            linalg::max_abs(&core::array::from_fn::<[f64; 4], 4, _>(|i| linalg::sub(
                &a[i], &b[i]
            ))) > 1e-4
        );
        assert!(g1.min_feature_width().is_some());
    }
}

use lortomo_core::families;
use lortomo_core::flow::{flow_steps, hamiltonian, PhaseState};
use lortomo_core::fourier::{
    cutoff, extract_components, psi_p, xi_from_eta_p, CVec, CutoffKind, CutoffSpec, ParitySamples,
};
use lortomo_core::metric::{AnyMap, MetricFields, Pullback, SpatialDomain, StationaryMetric};
use lortomo_core::sum::pairwise_sum;
use num_complex::Complex64;
use proptest::prelude::*;

fn max_field_diff(a: &MetricFields<f64>, b: &MetricFields<f64>) -> f64 {
    let mut m = (a.lambda - b.lambda).abs();
    for i in 0..3 {
        m = m.max((a.omega[i] - b.omega[i]).abs());
        for j in 0..3 {
            m = m.max((a.h[i][j] - b.h[i][j]).abs());
        }
    }
    m
}

fn unit_p(angle: f64) -> [f64; 2] {
    [angle.cos(), angle.sin()]
}

fn cvec() -> impl Strategy<Value = CVec> {
    prop::array::uniform6(-5.0..5.0f64)
        .prop_map(|v| core::array::from_fn(|k| Complex64::new(v[2 * k], v[2 * k + 1])))
}

proptest! {
    #[test]
    fn metrics_are_minkowski_off_their_supports(x in -3.0..3.0f64, y in -3.0..3.0f64, eps in -0.2..0.2f64) {
        let d = SpatialDomain::standard(2);
        let g = families::general(d, eps);
        let terms = &g.params().bumps;
        let outside = terms.iter().all(|b| ((x - b.center[0]).powi(2) + (y - b.center[1]).powi(2)).sqrt() >= b.width);
        prop_assume!(outside);
        prop_assert_eq!(max_field_diff(&g.fields(&[x, y, 0.0]), &MetricFields::minkowski()), 0.0);
    }

    #[test]
    fn special_form_keeps_its_block(x in -1.5..1.5f64, y in -1.5..1.5f64, z in -1.5..1.5f64, eps in -0.3..0.3f64) {
        for n in [2, 3] {
            let g = families::special_form(SpatialDomain::standard(n), eps);
            let f = g.fields(&[x, y, if n == 3 { z } else { 0.0 }]);
            prop_assert_eq!(f.omega[0], 0.0);
            prop_assert_eq!(f.h[0], [1.0, 0.0, 0.0]);
            prop_assert_eq!(f.h[1][0], 0.0);
            prop_assert_eq!(f.h[2][0], 0.0);
        }
    }

    #[test]
    fn pullbacks_compose(x in -1.2..1.2f64, y in -1.2..1.2f64, ea in -0.05..0.05f64, eb in -0.05..0.05f64) {
        let d = SpatialDomain::standard(2);
        let g = families::general(d, 0.05);
        let a = AnyMap::Bump(families::displacement_a(2, ea));
        let b = AnyMap::Bump(families::displacement_b(2, eb));
        let nested = Pullback::new(Pullback::new(g.clone(), a.clone()).unwrap(), b.clone()).unwrap();
        let composed = Pullback::new(g, AnyMap::Compose(vec![b, a])).unwrap();
        let p = [x, y, 0.0];
        prop_assert!(max_field_diff(&nested.fields(&p), &composed.fields(&p)) < 1e-12);
    }

    #[test]
    fn direction_maps_are_homogeneous(e in prop::array::uniform3(-4.0..4.0f64), angle in 0.0..6.3f64, t in 0.01..100.0f64) {
        let p = unit_p(angle);
        for n in [2, 3] {
            let p = if n == 2 { [1.0, 0.0] } else { p };
            let (Ok(xi), Ok(psi)) = (xi_from_eta_p(&e, &p, n), psi_p(&e, &p, n)) else { continue };
            let scaled: [f64; 3] = e.map(|v| v * t);
            let xi_t = xi_from_eta_p(&scaled, &p, n).unwrap();
            for k in 0..3 {
                prop_assert!((xi[k] - xi_t[k]).abs() < 1e-12);
            }
            prop_assert!((psi - psi_p(&scaled, &p, n).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn cutoff_is_homogeneous(e in prop::array::uniform3(-4.0..4.0f64), k in -20i32..20, t in 0.01..100.0f64, mu in 0.01..0.5f64, angle in 0.0..6.3f64) {
        for spec in [CutoffSpec::lorentzian(mu), CutoffSpec { mu, kind: CutoffKind::Riemannian { p: unit_p(angle) } }] {
            let c = cutoff(&e, 3, &spec);
            let two = 2f64.powi(k);
            prop_assert_eq!(c, cutoff(&e.map(|v| v * two), 3, &spec));
            prop_assert!((c - cutoff(&e.map(|v| v * t), 3, &spec)).abs() < 1e-9);
            prop_assert!((0.0..=1.0).contains(&c));
        }
    }

    #[test]
    fn parity_elimination_recovers_components(a1 in cvec(), a2 in cvec(), a3 in cvec(), r1 in -1.6..-1.05f64, gap in 0.1..0.6f64) {
        let r2 = r1 - gap;
        let sample = |r: f64, s: f64| -> CVec { core::array::from_fn(|k| a1[k] * (r * r) + a2[k] * (2.0 * s * r) + a3[k]) };
        let c = extract_components(&ParitySamples {
            rho1: r1,
            rho2: r2,
            rho1_plus: sample(r1, 1.0),
            rho1_minus: sample(r1, -1.0),
            rho2_plus: sample(r2, 1.0),
            rho2_minus: sample(r2, -1.0),
        }).unwrap();
        for k in 0..3 {
            prop_assert!((c.a1[k] - a1[k]).norm() < 1e-10);
            prop_assert!((c.a2[k] - a2[k]).norm() < 1e-10);
            prop_assert!((c.a3[k] - a3[k]).norm() < 1e-10);
        }
    }

    #[test]
    fn pairwise_sum_is_exact_on_integers(xs in prop::collection::vec(-1_000_000i64..1_000_000, 0..500)) {
        let fs: Vec<f64> = xs.iter().map(|&v| v as f64).collect();
        prop_assert_eq!(pairwise_sum(&fs), xs.iter().sum::<i64>() as f64);
    }

    #[test]
    fn pairwise_sum_error_is_small(xs in prop::collection::vec(-1.0..1.0f64, 1..2000)) {
        let exact: f64 = xs.iter().sum();
        let bound = 1e-14 * xs.iter().map(|v| v.abs()).sum::<f64>() + 1e-300;
        prop_assert!((pairwise_sum(&xs) - exact).abs() <= bound.max(xs.len() as f64 * f64::EPSILON));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100_000))]

    #[test]
    fn xi_is_a_unit_normal_to_eta(e in prop::array::uniform3(-10.0..10.0f64), angle in 0.0..6.3f64) {
        let p = unit_p(angle);
        for (n, p) in [(2, [1.0, 0.0]), (2, [-1.0, 0.0]), (3, p)] {
            let Ok(xi) = xi_from_eta_p(&e, &p, n) else { continue };
            let norm: f64 = xi[..n].iter().map(|v| v * v).sum::<f64>().sqrt();
            let dot: f64 = (0..n).map(|k| xi[k] * e[k]).sum();
            let scale: f64 = e[..n].iter().map(|v| v * v).sum::<f64>().sqrt();
            prop_assert!((norm - 1.0).abs() < 1e-14);
            prop_assert!(dot.abs() < 1e-13 * scale);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn flow_conserves_the_hamiltonian(x in -0.9..0.9f64, y in -0.9..0.9f64, angle in 0.0..6.3f64, speed in 0.3..1.0f64) {
        let d = SpatialDomain::standard(2);
        let g = families::general(d, 0.08);
        let start = PhaseState::new([0.0, x, y, 0.0], [-1.0, speed * angle.cos(), speed * angle.sin(), 0.0]);
        let h0 = hamiltonian(&g, &start);
        let end = PhaseState::from_array(&flow_steps(&g, &start.to_array(), 2.0, 1000));
        prop_assert!((hamiltonian(&g, &end) - h0).abs() < 1e-10, "{} -> {}", h0, hamiltonian(&g, &end));
    }
}

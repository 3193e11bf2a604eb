//! Library results against independent brute-force computations.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use lortomo_core::boundary::{riemannian_distance, time_separation, BoundaryEvent, ShootingConfig};
use lortomo_core::families;
use lortomo_core::flow::{flow_steps, variational_steps, PhaseState};
use lortomo_core::fourier::{fio_kernel, fio_norm_experiment, GaussianAmplitude};
use lortomo_core::lattice::Lattice;
use lortomo_core::metric::{closeness_seminorm, SpatialDomain, StationaryMetric};
use nalgebra::{DMatrix, DVector};

const GAUSS3: [(f64, f64); 3] = [
    (-0.774_596_669_241_483_4, 5.0 / 9.0),
    (0.0, 8.0 / 9.0),
    (0.774_596_669_241_483_4, 5.0 / 9.0),
];

/// Proper time of the curve through `x0`, the interior nodes `inner` and
/// `x1`, linear in `t` on each of the equal time slabs.
fn proper_time<M: StationaryMetric>(
    g: &M,
    x0: &[f64; 2],
    x1: &[f64; 2],
    t: f64,
    inner: &[f64],
) -> f64 {
    let k = inner.len() / 2 + 1;
    let node = |i: usize| -> [f64; 2] {
        if i == 0 {
            *x0
        } else if i == k {
            *x1
        } else {
            [inner[2 * (i - 1)], inner[2 * (i - 1) + 1]]
        }
    };
    let dt = t / k as f64;
    let mut total = 0.0;
    for i in 0..k {
        let (a, b) = (node(i), node(i + 1));
        let v = [(b[0] - a[0]) / dt, (b[1] - a[1]) / dt];
        for (u, w) in GAUSS3 {
            let s = 0.5 * (u + 1.0);
            let x = [a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1]), 0.0];
            let f = g.fields(&x);
            let q = f.lambda
                - 2.0 * (f.omega[0] * v[0] + f.omega[1] * v[1])
                - (f.h[0][0] * v[0] * v[0]
                    + 2.0 * f.h[0][1] * v[0] * v[1]
                    + f.h[1][1] * v[1] * v[1]);
            total += 0.5 * w * dt * q.max(0.0).sqrt();
        }
    }
    total
}

/// Maximal proper time over piecewise-linear curves with `k` slabs, by
/// Newton's method with difference derivatives.
fn brute_force_tau<M: StationaryMetric>(
    g: &M,
    x0: [f64; 2],
    x1: [f64; 2],
    t: f64,
    k: usize,
) -> f64 {
    let m = 2 * (k - 1);
    let mut v = DVector::from_fn(m, |i, _| {
        let s = (i / 2 + 1) as f64 / k as f64;
        x0[i % 2] + s * (x1[i % 2] - x0[i % 2])
    });
    let f = |v: &DVector<f64>| proper_time(g, &x0, &x1, t, v.as_slice());
    let grad = |v: &DVector<f64>, h: f64| -> DVector<f64> {
        DVector::from_fn(m, |i, _| {
            let (mut p, mut q) = (v.clone(), v.clone());
            p[i] += h;
            q[i] -= h;
            (f(&p) - f(&q)) / (2.0 * h)
        })
    };
    for _ in 0..6 {
        let g0 = grad(&v, 1e-6);
        let hs = 1e-4;
        let mut hess = DMatrix::zeros(m, m);
        for j in 0..m {
            let (mut p, mut q) = (v.clone(), v.clone());
            p[j] += hs;
            q[j] -= hs;
            let col = (grad(&p, 1e-6) - grad(&q, 1e-6)) / (2.0 * hs);
            hess.set_column(j, &col);
        }
        let hess = (&hess + hess.transpose()) * 0.5;
        let step = hess.lu().solve(&(-&g0)).expect("nonsingular Hessian");
        v += &step;
        if step.amax() < 1e-12 {
            break;
        }
    }
    f(&v)
}

#[test]
fn shooting_tau_matches_maximal_proper_time() {
    let d = SpatialDomain::standard(2);
    let g = families::general(d, 0.05);
    let (x0, x1, t) = ([-1.0, 0.0], [0.6, 0.8], 2.4);
    let tau = time_separation(
        &g,
        &BoundaryEvent::new(0.0, [x0[0], x0[1], 0.0]),
        &BoundaryEvent::new(t, [x1[0], x1[1], 0.0]),
        &ShootingConfig::for_rho(1.5),
    )
    .unwrap();
    let coarse = brute_force_tau(&g, x0, x1, t, 16);
    let fine = brute_force_tau(&g, x0, x1, t, 32);
    let extrapolated = (4.0 * fine - coarse) / 3.0;
    let flat = (t * t - (1.6f64 * 1.6 + 0.64)).sqrt();
    assert!(
        (tau - flat).abs() > 1e-3,
        "the metric must matter: {tau} vs {flat}"
    );
    assert!(
        (tau - extrapolated).abs() < 1e-6,
        "shooting {tau}, brute force {extrapolated} ({coarse}, {fine})"
    );
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

/// Shortest path on a `count²` grid over `[-half, half]²` whose edges join
/// nodes offset by primitive vectors of length at most `radius`.
fn dijkstra<M: StationaryMetric>(
    g: &M,
    count: usize,
    half: f64,
    radius: i64,
    from: (usize, usize),
    to: (usize, usize),
) -> f64 {
    let h = 2.0 * half / (count - 1) as f64;
    let coord = |i: usize| -half + h * i as f64;
    let offsets: Vec<(i64, i64)> = (-radius..=radius)
        .flat_map(|a| (-radius..=radius).map(move |b| (a, b)))
        .filter(|&(a, b)| (a, b) != (0, 0) && gcd(a, b) == 1)
        .collect();
    let cost = |i: usize, j: usize, a: i64, b: i64| -> f64 {
        let v = [a as f64 * h, b as f64 * h];
        let mut total = 0.0;
        for (u, w) in GAUSS3 {
            let s = 0.5 * (u + 1.0);
            let x = [coord(i) + s * v[0], coord(j) + s * v[1], 0.0];
            let m = g.fields(&x).h;
            total += 0.5
                * w
                * (m[0][0] * v[0] * v[0] + 2.0 * m[0][1] * v[0] * v[1] + m[1][1] * v[1] * v[1])
                    .sqrt();
        }
        total
    };
    let mut dist = vec![f64::INFINITY; count * count];
    let mut heap = BinaryHeap::new();
    dist[from.0 * count + from.1] = 0.0;
    heap.push(Reverse((0u64, from.0, from.1)));
    while let Some(Reverse((bits, i, j))) = heap.pop() {
        let du = f64::from_bits(bits);
        if du > dist[i * count + j] {
            continue;
        }
        if (i, j) == to {
            return du;
        }
        for &(a, b) in &offsets {
            let (ni, nj) = (i as i64 + a, j as i64 + b);
            if ni < 0 || nj < 0 || ni >= count as i64 || nj >= count as i64 {
                continue;
            }
            let alt = du + cost(i, j, a, b);
            let slot = &mut dist[ni as usize * count + nj as usize];
            if alt < *slot {
                *slot = alt;
                heap.push(Reverse((alt.to_bits(), ni as usize, nj as usize)));
            }
        }
    }
    dist[to.0 * count + to.1]
}

#[test]
fn riemannian_distance_matches_dijkstra() {
    let d = SpatialDomain::standard(2);
    let g = families::general(d, 0.08);
    let (count, half) = (201, 1.2);
    let h = 2.0 * half / (count - 1) as f64;
    let at = |i: usize, j: usize| [-half + h * i as f64, -half + h * j as f64, 0.0];
    for (from, to) in [
        ((50, 70), (150, 140)),
        ((40, 100), (160, 100)),
        ((100, 30), (90, 170)),
    ] {
        let shot = riemannian_distance(
            &g,
            &at(from.0, from.1),
            &at(to.0, to.1),
            &ShootingConfig::for_rho(1.5),
        )
        .unwrap();
        // Near the axes stencil directions are 1/R apart, so graph paths
        // overshoot by about 1/(8R²) relative; R = 20 keeps that below 1e-3.
        let graph = dijkstra(&g, count, half, 20, from, to);
        assert!(
            (shot - graph).abs() < 1e-3,
            "{from:?}->{to:?}: shooting {shot}, dijkstra {graph}"
        );
    }
}

#[test]
fn variational_flow_matches_differences_of_the_flow() {
    let d = SpatialDomain::standard(2);
    let (g, _) = families::pullback_pair(d, 0.05);
    let x0 = PhaseState::new([0.0, -0.9, -0.2, 0.0], [-1.1, 0.95, 0.2, 0.0]).to_array();
    let (s, steps) = (1.4, 1400);
    let j = variational_steps(&g, &x0, s, steps).j;
    let delta = 1e-5;
    for c in [0, 1, 2, 4, 5, 6] {
        let (mut p, mut q) = (x0, x0);
        p[c] += delta;
        q[c] -= delta;
        let (fp, fq) = (flow_steps(&g, &p, s, steps), flow_steps(&g, &q, s, steps));
        for r in 0..8 {
            let fd = (fp[r] - fq[r]) / (2.0 * delta);
            assert!(
                (fd - j[r][c]).abs() < 1e-7 * (1.0 + fd.abs()),
                "J[{r}][{c}] = {} vs {fd}",
                j[r][c]
            );
        }
    }
}

#[test]
fn power_iteration_matches_dense_svd() {
    let amps = [
        GaussianAmplitude {
            scale: 1.0,
            x_center: [0.0; 3],
            y_center: [0.0; 3],
            width: 0.3,
            symbol_width: 3.0,
        },
        GaussianAmplitude {
            scale: 0.7,
            x_center: [0.3, -0.2, 0.0],
            y_center: [-0.1, 0.1, 0.0],
            width: 0.2,
            symbol_width: 5.0,
        },
    ];
    let lattice = Lattice::new(2, 14, 1.5);
    for a in amps {
        let len = lattice.len();
        let k = DMatrix::from_row_slice(len, len, &fio_kernel(&a, &lattice));
        let sigma = k.singular_values().max();
        let norm = fio_norm_experiment(&a, &lattice).norm;
        assert!(
            (norm - sigma).abs() <= 1e-8 * sigma,
            "power {norm}, svd {sigma}"
        );
    }
}

#[test]
fn seminorm_matches_dense_differences() {
    let d = SpatialDomain::standard(2);
    let g = families::general(d, 0.05);
    let grid = 21;
    let pts: Vec<[f64; 3]> = (0..grid)
        .flat_map(|i| (0..grid).map(move |j| (i, j)))
        .map(|(i, j)| {
            let c = |k: usize| -1.0 + 2.0 * k as f64 / (grid - 1) as f64;
            [c(i), c(j), 0.0]
        })
        .collect();
    let comps = |x: &[f64; 3]| -> Vec<f64> {
        let f = g.fields(x);
        vec![
            f.lambda - 1.0,
            f.omega[0],
            f.omega[1],
            f.h[0][0] - 1.0,
            f.h[0][1],
            f.h[1][1] - 1.0,
        ]
    };
    let shift = |x: &[f64; 3], a: usize, s: f64| {
        let mut y = *x;
        y[a] += s;
        y
    };
    let (mut c0, mut c1, mut c2): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for x in &pts {
        let v = comps(x);
        c0 = v.iter().fold(c0, |m, z| m.max(z.abs()));
        for a in 0..2 {
            let h = 1e-5;
            let (p, q) = (comps(&shift(x, a, h)), comps(&shift(x, a, -h)));
            c1 = (0..v.len()).fold(c1, |m, i| m.max(((p[i] - q[i]) / (2.0 * h)).abs()));
            for b in 0..2 {
                let h = 1e-4;
                let pp = comps(&shift(&shift(x, a, h), b, h));
                let pm = comps(&shift(&shift(x, a, h), b, -h));
                let mp = comps(&shift(&shift(x, a, -h), b, h));
                let mm = comps(&shift(&shift(x, a, -h), b, -h));
                c2 = (0..v.len()).fold(c2, |m, i| {
                    m.max(((pp[i] - pm[i] - mp[i] + mm[i]) / (4.0 * h * h)).abs())
                });
            }
        }
    }
    let k0 = closeness_seminorm(&g, 0, grid).unwrap();
    let k1 = closeness_seminorm(&g, 1, grid).unwrap();
    let k2 = closeness_seminorm(&g, 2, grid).unwrap();
    assert_eq!(k0, c0);
    assert!(
        (k1 - c0.max(c1)).abs() < 1e-8 * k1,
        "{k1} vs {}",
        c0.max(c1)
    );
    assert!(
        (k2 - c0.max(c1).max(c2)).abs() < 1e-5 * k2,
        "{k2} vs {}",
        c0.max(c1).max(c2)
    );
}

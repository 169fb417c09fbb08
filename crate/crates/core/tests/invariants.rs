use std::f64::consts::PI;

use discrete_airy::core::{circle_path, transport_saddle};
use discrete_airy::descent::exact_eval;
use discrete_airy::saddle::{contribution, phase, saddle_height, saddle_location};
use discrete_airy::stokes::{Condition, CurveKind, CurvePair, Labels, StokesStructure, Window};
use discrete_airy::transseries::resonance_index;
use discrete_airy::{Branch, BranchState, Params, SaddleId, C64};
use proptest::prelude::*;

const ST: BranchState = BranchState::PRINCIPAL;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn branch(plus: bool) -> Branch {
    if plus {
        Branch::Plus
    } else {
        Branch::Minus
    }
}

/// Away from the real w-axis, which carries every branch cut of `acosh(1 + σ²x/2)`.
fn off_cuts(x: C64, p: &Params) -> bool {
    p.w(x).im.abs() > 1e-6
}

/// Newton continuation of a root of `∂φ/∂z` along a polyline, in small steps.
fn follow_saddle(path: &[C64], z0: C64, p: &Params) -> C64 {
    let mut z = z0;
    for seg in path.windows(2) {
        let n = ((seg[1] - seg[0]).norm() / 0.005).ceil().max(1.0) as usize;
        for k in 1..=n {
            let x = seg[0] + (seg[1] - seg[0]) * (k as f64 / n as f64);
            for _ in 0..30 {
                let v = phase(x, z, p);
                let dz = v.d1 / v.d2;
                z -= dz;
                if dz.norm() < 1e-15 * (1.0 + z.norm()) {
                    break;
                }
            }
        }
    }
    z
}

fn point_in_triangle(q: C64, a: C64, b: C64, t: C64) -> bool {
    let cross = |u: C64, v: C64| u.re * v.im - u.im * v.re;
    let d1 = cross(b - a, q - a);
    let d2 = cross(t - b, q - b);
    let d3 = cross(a - t, q - t);
    let neg = d1 < 0.0 || d2 < 0.0 || d3 < 0.0;
    let pos = d1 > 0.0 || d2 > 0.0 || d3 > 0.0;
    !(neg && pos)
}

fn segment_distance(a: C64, b: C64, q: C64) -> f64 {
    let d = b - a;
    let t = (((q - a) * d.conj()).re / d.norm_sqr()).clamp(0.0, 1.0);
    (a + d * t - q).norm()
}

fn sigma_strategy() -> impl Strategy<Value = C64> {
    (0.6f64..1.8, -0.4f64..0.4).prop_map(|(r, a)| C64::from_polar(r, a))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn saddles_are_simple_critical_points(
        xr in -10.0f64..10.0, xi in -10.0f64..10.0, s in -3i64..=3, plus: bool, sig in sigma_strategy(),
    ) {
        let p = Params::new(0.1, sig).unwrap();
        let x = c(xr, xi);
        prop_assume!(off_cuts(x, &p) && !p.near_turning_point(x, 1e-3));
        let z = saddle_location(x, SaddleId::new(s, branch(plus)), &p, ST);
        let v = phase(x, z, &p);
        prop_assert!(v.d1.norm() < 1e-10 * (1.0 + x.norm()), "residual {}", v.d1.norm());
        prop_assert!(v.d2.norm() > 1e-8);
    }

    #[test]
    fn heights_step_by_a_fixed_amount_between_rows(
        xr in -10.0f64..10.0, xi in -10.0f64..10.0, s in -3i64..=3, plus: bool, sig in sigma_strategy(),
    ) {
        let p = Params::new(0.1, sig).unwrap();
        let x = c(xr, xi);
        prop_assume!(!p.near_turning_point(x, 1e-3));
        let id = SaddleId::new(s, branch(plus));
        let d = saddle_height(x, id.shift(1), &p, ST) - saddle_height(x, id, &p, ST);
        let expect = 2.0 * PI * C64::i() * p.shifted(x) / sig;
        prop_assert!((d - expect).norm() <= 1e-12 * expect.norm().max(1.0) * (1.0 + s.abs() as f64));
    }

    #[test]
    fn transport_is_path_independent_within_a_homotopy_class(
        ar in -9.0f64..5.0, ai in -6.0f64..6.0,
        br in -9.0f64..5.0, bi in -6.0f64..6.0,
        dr in -9.0f64..5.0, di in -6.0f64..6.0,
        s in -2i64..=2, plus: bool,
    ) {
        let p = Params::real(0.1, 1.0).unwrap();
        let (a, b, d) = (c(ar, ai), c(br, bi), c(dr, di));
        let tps = p.turning_points();
        for &tp in &tps {
            prop_assume!(!point_in_triangle(tp, a, b, d));
            for (u, v) in [(a, b), (b, d), (d, a)] {
                prop_assume!(segment_distance(u, v, tp) > 0.05);
            }
        }
        let id = SaddleId::new(s, branch(plus));
        let direct = transport_saddle(&[a, b], id, &p).unwrap();
        let detour = transport_saddle(&[a, d, b], id, &p).unwrap();
        prop_assert_eq!(direct, detour);
        // The continued label names the saddle reached by following the root.
        let z = follow_saddle(&[a, d, b], saddle_location(a, id, &p, ST), &p);
        let zt = saddle_location(b, detour, &p, ST);
        prop_assert!((z - zt).norm() < 1e-10 * (1.0 + zt.norm()), "{} vs {}", z, zt);
    }

    #[test]
    fn rows_coincide_on_a_resonant_lattice(
        n in -80i64..80, eps in 0.02f64..0.3, s in -5i64..=5, plus: bool, sig in sigma_strategy(),
    ) {
        let p = Params::new(eps, sig).unwrap();
        let x = -2.0 / (sig * sig) + p.step() * n as f64;
        prop_assume!(!p.near_turning_point(x, 1e-3));
        prop_assert_eq!(resonance_index(x, &p), Some(n));
        let id = SaddleId::new(s, branch(plus));
        let a = contribution(x, id, &p, ST).unwrap().value;
        let b = contribution(x, SaddleId::new(0, id.branch), &p, ST).unwrap().value;
        prop_assume!(b.norm() > 1e-250 && b.norm() < 1e250);
        // exp(2πi·n·s) = 1 up to the rounding of the exponent itself.
        let tol = 1e-12 * (1.0 + (s.abs() as f64) * (n.abs() as f64 + 1.0) / eps);
        prop_assert!((a / b - 1.0).norm() < tol, "ratio {}", a / b);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn exact_solution_satisfies_the_difference_equation(
        xr in -5.0f64..2.0, xi in 0.3f64..2.0, eps in 0.05f64..0.2,
    ) {
        let p = Params::real(eps, 1.0).unwrap();
        let x = c(xr, xi);
        let h = p.step();
        let ys: Vec<_> = [x - h, x, x + h].iter().map(|&u| exact_eval(u, &p)).collect();
        prop_assume!(ys.iter().all(|y| y.is_ok()));
        let (ym, y0, yp) = (ys[0].clone().unwrap(), ys[1].clone().unwrap(), ys[2].clone().unwrap());
        let s2 = p.sigma() * p.sigma();
        let r = (yp - 2.0 * y0 + ym) / s2 - x * y0;
        prop_assert!(r.norm() < 1e-9 * y0.norm().max(ym.norm()).max(yp.norm()), "residual {}", r.norm() / y0.norm());
    }
}

#[test]
fn coalescence_at_the_outer_turning_point() {
    for sig in [c(1.0, 0.0), c(2.0, 0.0), C64::from_polar(1.3, 0.25)] {
        let p = Params::new(0.1, sig).unwrap();
        let x = -4.0 / (sig * sig);
        for s in -3..=3 {
            let a = saddle_location(x, SaddleId::minus(s), &p, ST);
            let b = saddle_location(x, SaddleId::plus(s + 1), &p, ST);
            assert!((a - b).norm() < 1e-7, "s={s} {a} {b}");
        }
    }
}

#[test]
fn loop_around_both_turning_points_composes_the_single_loops() {
    let p = Params::real(0.1, 1.0).unwrap();
    let base = c(-2.0, 6.0);
    let big = circle_path(c(-2.0, 0.0), 6.0, PI / 2.0, 400);
    // Counter-clockwise from the top the big loop passes −4 first, then 0.
    let lasso = |tp: C64| {
        let top = tp + c(0.0, 1.0);
        let mut path = vec![base];
        path.extend(circle_path(tp, 1.0, PI / 2.0, 200));
        path[1] = top;
        path.push(base);
        path
    };
    let mut composed = lasso(c(-4.0, 0.0));
    composed.extend(lasso(c(0.0, 0.0)).into_iter().skip(1));
    for s in -2..=2 {
        for id in [SaddleId::plus(s), SaddleId::minus(s)] {
            let a = transport_saddle(&big, id, &p).unwrap();
            let b = transport_saddle(&composed, id, &p).unwrap();
            assert_eq!(a, b, "{id}");
            assert_ne!(a, id);
            let z = follow_saddle(&big, saddle_location(base, id, &p, ST), &p);
            assert!((z - saddle_location(base, a, &p, ST)).norm() < 1e-10);
        }
    }
}

/// Label pairs (0,b1),(j,b2); singulants only depend on the row difference.
fn candidate_pairs() -> Vec<CurvePair> {
    let mut out = Vec::new();
    for j in -8..=8 {
        for b1 in [Branch::Plus, Branch::Minus] {
            for b2 in [Branch::Plus, Branch::Minus] {
                if j != 0 || b1 != b2 {
                    out.push(CurvePair::new(SaddleId::new(0, b1), SaddleId::new(j, b2)));
                }
            }
        }
    }
    out
}

#[test]
fn traced_points_satisfy_their_conditions() {
    for sig in [c(1.0, 0.0), C64::from_polar(1.2, 0.2)] {
        let p = Params::new(0.1, sig).unwrap();
        let st = StokesStructure::new(&p).unwrap();
        let window = Window::default_for(&p);
        let curves = st.trace_families(1, &window, &[CurveKind::Stokes, CurveKind::AntiStokes]);
        assert!(!curves.is_empty());
        for curve in &curves {
            let cond = Condition::new(curve.kind, curve.labels, p);
            let x0 = curve.points[0];
            // Recover the labels at the first point, then continue them along the curve.
            let ok = candidate_pairs().into_iter().any(|pair| {
                let mut labels = Labels::Pair(pair);
                let mut prev = x0;
                curve.points.iter().all(|&x| {
                    let Ok(l) = cond.advance(&labels, prev, x) else {
                        return false;
                    };
                    labels = l;
                    prev = x;
                    match cond.eval(&labels, x) {
                        Ok(s) => s.value.abs() < 1e-8 * s.scale,
                        Err(_) => p.near_turning_point(x, 1e-3),
                    }
                })
            });
            assert!(
                ok,
                "{:?} {:?} with {} points",
                curve.kind,
                curve.labels,
                curve.points.len()
            );
        }
    }
}

#[test]
fn region_map_changes_only_across_active_curves() {
    let p = Params::real(0.1, 1.0).unwrap();
    let st = StokesStructure::new(&p).unwrap();
    let n = 200;
    let (re0, re1, im0, im1) = (-8.0, 4.0, -6.0, 6.0);
    let dre = (re1 - re0) / (n - 1) as f64;
    let dim = (im1 - im0) / (n - 1) as f64;
    let at = |i: usize, j: usize| c(re0 + i as f64 * dre, im0 + j as f64 * dim);
    let grid: Vec<Vec<Option<_>>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| st.classify(at(i, j)).ok().map(|r| r.0))
                .collect()
        })
        .collect();
    let cell = dre.hypot(dim);
    let mut seen = std::collections::HashSet::new();
    grid.iter().flatten().flatten().for_each(|r| {
        seen.insert(*r);
    });
    assert_eq!(seen.len(), 3);
    for i in 0..n {
        for j in 0..n {
            let Some(r) = grid[i][j] else { continue };
            let mut same_neighbour = false;
            for (di, dj) in [(1i64, 0i64), (-1, 0), (0, 1), (0, -1)] {
                let (a, b) = (i as i64 + di, j as i64 + dj);
                if a < 0 || b < 0 || a >= n as i64 || b >= n as i64 {
                    continue;
                }
                let Some(q) = grid[a as usize][b as usize] else {
                    continue;
                };
                if q == r {
                    same_neighbour = true;
                } else {
                    let mid = (at(i, j) + at(a as usize, b as usize)) / 2.0;
                    assert!(
                        st.boundary_distance(mid) < cell,
                        "label change away from curves at {mid}"
                    );
                }
            }
            assert!(same_neighbour, "isolated cell at {}", at(i, j));
        }
    }
}

use mpspline::domain1d::*;
use mpspline::line::PlanMode;
use mpspline::spline::BreakPoints;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn split_domain(cuts: &[(f64, usize)], start: f64, boundary: Boundary) -> Domain1D {
    let mut a = start;
    let patches = cuts
        .iter()
        .map(|&(b, n)| {
            let p = BreakPoints::uniform(a, b, n).unwrap();
            a = b;
            p
        })
        .collect();
    Domain1D::new(patches, boundary).unwrap()
}

fn sample(domain: &Domain1D, f: impl Fn(f64) -> f64) -> Vec<Vec<f64>> {
    (0..domain.patches().len())
        .map(|p| domain.axis(p).unwrap().points().iter().map(|&x| f(x)).collect())
        .collect()
}

fn f(x: f64) -> f64 {
    (2.0 * std::f64::consts::PI * x).sin() + 0.3 * (6.0 * std::f64::consts::PI * x + 0.4).cos()
}

fn df(x: f64) -> f64 {
    let pi = std::f64::consts::PI;
    2.0 * pi * (2.0 * pi * x).cos() - 1.8 * pi * (6.0 * pi * x + 0.4).sin()
}

#[test]
fn system_sizes() {
    let d = split_domain(&[(0.3, 6), (0.7, 8), (1.0, 6)], 0.0, Boundary::HermiteKnown);
    let p = assemble_plan(&d, PlanMode::Exact).unwrap();
    assert_eq!(p.line().unwrap().rows().len(), 2);
    let d = split_domain(&[(0.25, 4), (0.5, 4), (0.75, 4), (1.0, 4)], 0.0, Boundary::Periodic);
    let p = assemble_plan(&d, PlanMode::Exact).unwrap();
    assert_eq!(p.line().unwrap().rows().len(), 4);
    let d = split_domain(&[(1.0, 8)], 0.0, Boundary::HermiteKnown);
    assert!(assemble_plan(&d, PlanMode::Exact).unwrap().line().is_none());
}

#[test]
fn exact_plan_reproduces_global_spline() {
    let cuts = [(42.0 / 128.0, 42), (86.0 / 128.0, 44), (1.0, 42)];
    for boundary in [Boundary::HermiteKnown, Boundary::GrevilleExtra, Boundary::Periodic] {
        let d = split_domain(&cuts, 0.0, boundary);
        let vals = sample(&d, f);
        let bd = Some([df(0.0), df(1.0)]);
        let plan = assemble_plan(&d, PlanMode::Exact).unwrap();
        let derivs = solve_interface_derivs_1d(&plan, &vals, bd).unwrap();
        let local = build_local_splines_1d(&d, &vals, &derivs, bd).unwrap();
        let global = equivalent_global_spline_1d(&d, &vals, bd).unwrap();
        for &x in &d.nodes()[1..d.nodes().len() - 1] {
            let gd = global.eval_deriv(x).unwrap();
            let ld = eval_piecewise(&d, &local, x, true).unwrap();
            assert!((gd - ld).abs() < 1e-11, "{boundary:?} x={x}: {gd} vs {ld}");
        }
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..1000 {
            let x: f64 = rng.gen_range(0.0..1.0);
            let g = global.eval(x).unwrap();
            let l = eval_piecewise(&d, &local, x, false).unwrap();
            assert!((g - l).abs() < 1e-12, "{boundary:?} x={x}");
        }
    }
}

#[test]
fn linear_data_and_truncated_ladder() {
    let cuts = [(0.3, 12), (0.55, 10), (1.0, 12)];
    let d = split_domain(&cuts, 0.0, Boundary::HermiteKnown);
    let vals = sample(&d, |x| 2.0 * x + 1.0);
    let plan = assemble_plan(&d, PlanMode::Exact).unwrap();
    for v in solve_interface_derivs_1d(&plan, &vals, Some([2.0, 2.0])).unwrap() {
        assert!((v - 2.0).abs() < 1e-12);
    }

    let cuts = [(42.0 / 128.0, 42), (86.0 / 128.0, 44), (1.0, 42)];
    let d = split_domain(&cuts, 0.0, Boundary::GrevilleExtra);
    let vals = sample(&d, f);
    let exact = solve_interface_derivs_1d(&assemble_plan(&d, PlanMode::Exact).unwrap(), &vals, None).unwrap();
    let mut last = f64::INFINITY;
    for n in [5usize, 10, 20] {
        let t = solve_interface_derivs_1d(&assemble_plan(&d, PlanMode::Truncated(n)).unwrap(), &vals, None).unwrap();
        let err = exact.iter().zip(&t).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let dropped = mpspline::interface::truncation_bound(n, 1.0 / 128.0, 1.0 / 128.0).unwrap();
        let max_slope = 3.8 * std::f64::consts::PI;
        assert!(err <= 1.5 * dropped * max_slope, "N={n}: {err} vs {dropped}");
        assert!(err < last);
        last = err;
    }
}

#[test]
fn interface_rows_are_diagonally_dominant() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..50 {
        let mut cuts = vec![];
        let mut x = 0.0;
        for _ in 0..rng.gen_range(2..6) {
            x += rng.gen_range(0.2..1.0);
            cuts.push((x, rng.gen_range(4..12)));
        }
        let d = split_domain(&cuts, 0.0, Boundary::HermiteKnown);
        let plan = assemble_plan(&d, PlanMode::Exact).unwrap();
        for r in plan.line().unwrap().rows() {
            assert!(r.stencil.a.abs() + r.stencil.b.abs() < 0.5);
        }
    }
}

#[test]
fn periodic_label_rotation() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let lengths: Vec<(f64, usize)> = (0..4).map(|_| (rng.gen_range(0.5..1.5), rng.gen_range(4..10))).collect();
    let period: f64 = lengths.iter().map(|l| l.0).sum();
    let g = |x: f64| (2.0 * std::f64::consts::PI * x / period).sin().exp();
    let solve = |order: &[usize]| {
        let mut cuts = vec![];
        let mut x = 0.0;
        for &p in order {
            x += lengths[p].0;
            cuts.push((x, lengths[p].1));
        }
        let d = split_domain(&cuts, 0.0, Boundary::Periodic);
        let vals = sample(&d, g);
        solve_interface_derivs_1d(&assemble_plan(&d, PlanMode::Exact).unwrap(), &vals, None).unwrap()
    };
    // Rotating labels with the function shifted along gives the same derivatives, permuted.
    let base = {
        let shift = lengths[0].0;
        let mut cuts = vec![];
        let mut x = 0.0;
        for p in [1usize, 2, 3, 0] {
            x += lengths[p].0;
            cuts.push((x, lengths[p].1));
        }
        let d = split_domain(&cuts, 0.0, Boundary::Periodic);
        let vals = sample(&d, |x| g(x + shift));
        solve_interface_derivs_1d(&assemble_plan(&d, PlanMode::Exact).unwrap(), &vals, None).unwrap()
    };
    let orig = solve(&[0, 1, 2, 3]);
    for i in 0..4 {
        assert!((orig[(i + 1) % 4] - base[i]).abs() < 1e-12);
    }
}

#[test]
fn mismatched_shared_values_are_rejected() {
    let d = split_domain(&[(0.5, 5), (1.0, 5)], 0.0, Boundary::HermiteKnown);
    let mut vals = sample(&d, f);
    vals[1][0] += 1e-6;
    let plan = assemble_plan(&d, PlanMode::Exact).unwrap();
    assert!(solve_interface_derivs_1d(&plan, &vals, Some([0.0, 0.0])).is_err());
}

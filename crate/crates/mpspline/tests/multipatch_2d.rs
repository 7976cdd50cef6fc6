use std::f64::consts::PI;

use mpspline::domain1d::Boundary;
use mpspline::domain2d::{Band, Domain2D, LocalSplines, PatchField};
use mpspline::line::PlanMode;
use mpspline::reconstruct::*;
use mpspline::spline::BreakPoints;
use mpspline::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn bp(a: f64, b: f64, n: usize) -> BreakPoints {
    BreakPoints::uniform(a, b, n).unwrap()
}

fn stretched(a: f64, b: f64, n: usize, s: f64) -> BreakPoints {
    let pts = (0..=n)
        .map(|i| {
            let t = i as f64 / n as f64;
            a + (b - a) * (t + s * (PI * t).sin() / PI)
        })
        .collect();
    BreakPoints::new(pts).unwrap()
}

/// Five-patch ring layout with T-joints: full ring, three sectors, full ring.
fn tjoint_layout(nr: [usize; 3], nt: usize) -> Domain2D {
    let r = [0.0, 42.0 / 128.0, 80.0 / 128.0, 1.0];
    let third = 2.0 * PI / 3.0;
    let sector = |k: usize| bp(k as f64 * third, (k + 1) as f64 * third, nt / 3);
    let bands = vec![
        Band { r: bp(r[0], r[1], nr[0]), theta: vec![bp(0.0, 2.0 * PI, nt)] },
        Band { r: bp(r[1], r[2], nr[1]), theta: (0..3).map(sector).collect() },
        Band { r: bp(r[2], r[3], nr[2]), theta: vec![bp(0.0, 2.0 * PI, nt)] },
    ];
    Domain2D::new(bands, Boundary::GrevilleExtra, Boundary::Periodic).unwrap()
}

/// Three rings, the middle one twice as fine in θ.
fn nonconforming_layout(nr: [usize; 3], nt: usize) -> Domain2D {
    let r = [0.0, 42.0 / 128.0, 80.0 / 128.0, 1.0];
    let bands = vec![
        Band { r: bp(r[0], r[1], nr[0]), theta: vec![bp(0.0, 2.0 * PI, nt)] },
        Band { r: bp(r[1], r[2], nr[1]), theta: vec![bp(0.0, 2.0 * PI, 2 * nt)] },
        Band { r: bp(r[2], r[3], nr[2]), theta: vec![bp(0.0, 2.0 * PI, nt)] },
    ];
    Domain2D::new(bands, Boundary::GrevilleExtra, Boundary::Periodic).unwrap()
}

fn smooth(r: f64, th: f64) -> f64 {
    (-(r - 0.45).powi(2) * 6.0).exp() * (1.0 + 0.4 * (3.0 * th + 0.2).cos()) + r * r * th.sin()
}

fn patch_of(domain: &Domain2D, b: usize, th: f64) -> usize {
    let pats = &domain.bands()[b].theta;
    (0..pats.len()).rev().find(|&j| th >= pats[j].first()).unwrap_or(0)
}

/// Largest mismatch of value, ∂r and ∂θ across every interface, sampled at
/// `samples` points per interface.
fn c1_mismatch(domain: &Domain2D, local: &LocalSplines, samples: usize) -> f64 {
    let mut worst: f64 = 0.0;
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let (th0, th1) = domain.theta_range();
    let nb = domain.n_bands();
    for b in 0..nb.saturating_sub(1) {
        let rr = domain.bands()[b].r.last();
        for _ in 0..samples {
            let th = rng.gen_range(th0..th1);
            let lo = &local.splines[b][patch_of(domain, b, th)];
            let hi = &local.splines[b + 1][patch_of(domain, b + 1, th)];
            worst = worst
                .max((lo.eval(rr, th).unwrap() - hi.eval(rr, th).unwrap()).abs())
                .max((lo.eval_dr(rr, th).unwrap() - hi.eval_dr(rr, th).unwrap()).abs())
                .max((lo.eval_dth(rr, th).unwrap() - hi.eval_dth(rr, th).unwrap()).abs());
        }
    }
    for (b, band) in domain.bands().iter().enumerate() {
        let np = band.theta.len();
        if np == 1 {
            continue;
        }
        for j in 0..np {
            let left = &local.splines[b][j];
            let (right, tr) = if j + 1 < np {
                (&local.splines[b][j + 1], band.theta[j].last())
            } else {
                (&local.splines[b][0], band.theta[0].first())
            };
            let tl = band.theta[j].last();
            for _ in 0..samples {
                let r = rng.gen_range(band.r.first()..band.r.last());
                worst = worst
                    .max((left.eval(r, tl).unwrap() - right.eval(r, tr).unwrap()).abs())
                    .max((left.eval_dr(r, tl).unwrap() - right.eval_dr(r, tr).unwrap()).abs())
                    .max((left.eval_dth(r, tl).unwrap() - right.eval_dth(r, tr).unwrap()).abs());
            }
        }
    }
    worst
}

fn reconstructed(domain: &Domain2D, f: impl Fn(f64, f64) -> f64, opts: ReconstructOptions) -> PatchField {
    let mut field = domain.sample(f);
    Reconstructor::new(domain.clone(), opts).unwrap().reconstruct(&mut field).unwrap();
    field
}

#[test]
fn bicubic_data_is_reproduced_exactly() {
    // Open θ direction with extra points: cubic polynomials lie in every local
    // spline space, so all reconstructed derivatives are exact.
    let f = |r: f64, t: f64| r * r * r - 2.0 * r * r * t + r * t * t + 0.5 * t * t * t + r * t - t;
    let fr = |r: f64, t: f64| 3.0 * r * r - 4.0 * r * t + t * t + t;
    let ft = |r: f64, t: f64| -2.0 * r * r + 2.0 * r * t + 1.5 * t * t + r - 1.0;
    let frt = |r: f64, t: f64| -4.0 * r + 2.0 * t + 1.0;
    let domain = Domain2D::tensor(
        vec![stretched(0.2, 0.6, 7, 0.3), bp(0.6, 0.9, 5), stretched(0.9, 1.5, 9, -0.2)],
        vec![bp(-1.0, 0.0, 6), stretched(0.0, 0.7, 5, 0.4), bp(0.7, 2.0, 8)],
        Boundary::GrevilleExtra,
        Boundary::GrevilleExtra,
    )
    .unwrap();
    for cross in [CrossMethod::RLines, CrossMethod::ThetaLines] {
        let opts = ReconstructOptions { cross, ..Default::default() };
        let field = reconstructed(&domain, f, opts);
        for (b, band) in domain.bands().iter().enumerate() {
            for (j, th) in band.theta.iter().enumerate() {
                let it = domain.interpolator(b, j);
                let e = &field.edges[b][j];
                let rs = [band.r.first(), band.r.last()];
                let ts = [th.first(), th.last()];
                for s in 0..2 {
                    if (s == 0 && b > 0) || (s == 1 && b + 1 < domain.n_bands()) {
                        for (k, &t) in it.th.points().iter().enumerate() {
                            assert!((e.dr[s][k] - fr(rs[s], t)).abs() < 1e-10);
                        }
                    }
                    if (s == 0 && j > 0) || (s == 1 && j + 1 < band.theta.len()) {
                        for (k, &r) in it.r.points().iter().enumerate() {
                            assert!((e.dth[s][k] - ft(r, ts[s])).abs() < 1e-10);
                        }
                    }
                }
                for sr in 0..2 {
                    for st in 0..2 {
                        let interior_r = (sr == 0 && b > 0) || (sr == 1 && b + 1 < domain.n_bands());
                        let interior_t = (st == 0 && j > 0) || (st == 1 && j + 1 < band.theta.len());
                        if interior_r && interior_t {
                            assert!((e.cross[sr][st] - frt(rs[sr], ts[st])).abs() < 1e-10, "{cross:?}");
                        }
                    }
                }
            }
        }
    }

    // r·θ on uniform patches: unit cross-derivative at every interior corner.
    let domain = Domain2D::tensor(
        vec![bp(0.0, 1.0, 6), bp(1.0, 2.0, 6)],
        vec![bp(0.0, 1.0, 6), bp(1.0, 2.0, 6), bp(2.0, 3.0, 6)],
        Boundary::GrevilleExtra,
        Boundary::GrevilleExtra,
    )
    .unwrap();
    let mut field = domain.sample(|r, t| r * t);
    conforming_2d_derivs(&domain, &mut field, PlanMode::Exact).unwrap();
    for j in 0..2 {
        assert!((field.edges[0][j].cross[1][1] - 1.0).abs() < 1e-12);
        assert!((field.edges[1][j + 1].cross[0][0] - 1.0).abs() < 1e-12);
    }
}

#[test]
fn cross_derivative_directions_agree() {
    let domain = Domain2D::tensor(
        vec![stretched(0.1, 0.4, 9, 0.3), bp(0.4, 0.7, 8), bp(0.7, 1.0, 11)],
        vec![bp(0.0, 2.0, 10), stretched(2.0, 4.5, 13, 0.5), bp(4.5, 2.0 * PI, 7)],
        Boundary::HermiteKnown,
        Boundary::Periodic,
    )
    .unwrap();
    let dr = |r: f64, t: f64| {
        let h = 1e-6;
        (smooth(r + h, t) - smooth(r - h, t)) / (2.0 * h)
    };
    let run = |cross| {
        let mut field = domain.sample(smooth);
        domain.set_r_boundary_slopes(&mut field, dr);
        let opts = ReconstructOptions { cross, ..Default::default() };
        Reconstructor::new(domain.clone(), opts).unwrap().reconstruct(&mut field).unwrap();
        field
    };
    let a = run(CrossMethod::RLines);
    let b = run(CrossMethod::ThetaLines);
    for (ea, eb) in a.edges.iter().flatten().zip(b.edges.iter().flatten()) {
        for sr in 0..2 {
            for st in 0..2 {
                assert!((ea.cross[sr][st] - eb.cross[sr][st]).abs() < 1e-11);
            }
        }
    }
    // Hermite r ends: compare with the global spline carrying the same end slopes.
    let global = domain.equivalent_global_spline(&a).unwrap();
    let local = LocalSplines::new(&domain, &a).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..2000 {
        let r = rng.gen_range(0.1..1.0);
        let t = rng.gen_range(0.0..2.0 * PI);
        assert!((global.eval(r, t).unwrap() - local.eval(r, t).unwrap()).abs() < 1e-11);
    }
    assert!(c1_mismatch(&domain, &local, 200) < 1e-10);
}

#[test]
fn tjoint_layout_matches_global_spline() {
    let domain = tjoint_layout([42, 38, 48], 255);
    assert!(domain.is_conforming() && !domain.is_tensor());
    assert_eq!(domain.total_cells(), (128, 255));
    let mut field = domain.sample(smooth);
    tjoint_derivs(&domain, &mut field, PlanMode::Exact).unwrap();
    let global = domain.equivalent_global_spline(&field).unwrap();
    let local = LocalSplines::new(&domain, &field).unwrap();

    let mut worst: f64 = 0.0;
    for (b, band) in domain.bands().iter().enumerate() {
        for (j, th) in band.theta.iter().enumerate() {
            let it = domain.interpolator(b, j);
            let e = &field.edges[b][j];
            let (r0, r1, t0, t1) = (band.r.first(), band.r.last(), th.first(), th.last());
            for (k, &t) in it.th.points().iter().enumerate() {
                if b > 0 {
                    worst = worst.max((e.dr[0][k] - global.eval_dr(r0, t).unwrap()).abs());
                }
                if b + 1 < domain.n_bands() {
                    worst = worst.max((e.dr[1][k] - global.eval_dr(r1, t).unwrap()).abs());
                }
            }
            if band.theta.len() > 1 {
                for (k, &r) in it.r.points().iter().enumerate() {
                    worst = worst.max((e.dth[0][k] - global.eval_dth(r, t0).unwrap()).abs());
                    worst = worst.max((e.dth[1][k] - global.eval_dth(r, t1).unwrap()).abs());
                }
                for (sr, r) in [(0, r0), (1, r1)] {
                    for (st, t) in [(0, t0), (1, t1)] {
                        worst = worst.max((e.cross[sr][st] - global.eval_drth(r, t).unwrap()).abs());
                    }
                }
            }
        }
    }
    assert!(worst <= 1e-11, "derivative mismatch {worst}");

    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut off: f64 = 0.0;
    for _ in 0..10_000 {
        let r = rng.gen_range(0.0..1.0);
        let t = rng.gen_range(0.0..2.0 * PI);
        off = off.max((global.eval(r, t).unwrap() - local.eval(r, t).unwrap()).abs());
    }
    assert!(off <= 1e-11, "value mismatch {off}");
    assert!(c1_mismatch(&domain, &local, 200) <= 1e-11);
}

#[test]
fn radial_quadratic_and_constant_fields() {
    let domain = tjoint_layout([8, 7, 9], 30);
    let mut field = domain.sample(|r, _| r * r);
    tjoint_derivs(&domain, &mut field, PlanMode::Exact).unwrap();
    for (b, band) in domain.bands().iter().enumerate() {
        for e in &field.edges[b] {
            if b > 0 {
                assert!(e.dr[0].iter().all(|v| (v - 2.0 * band.r.first()).abs() < 1e-12));
            }
            if b + 1 < domain.n_bands() {
                assert!(e.dr[1].iter().all(|v| (v - 2.0 * band.r.last()).abs() < 1e-12));
            }
            assert!(e.dth.iter().flatten().all(|v| v.abs() < 1e-12));
            assert!(e.cross.iter().flatten().all(|v| v.abs() < 1e-12));
        }
    }
    let mut field = domain.sample(|_, _| 3.5);
    tjoint_derivs(&domain, &mut field, PlanMode::Exact).unwrap();
    for e in field.edges.iter().flatten() {
        assert!(e.dr.iter().chain(&e.dth).flatten().all(|v| v.abs() < 1e-12));
        assert!(e.cross.iter().flatten().all(|v| v.abs() < 1e-12));
    }
}

#[test]
fn truncated_mode_keeps_c1() {
    let domain = tjoint_layout([20, 18, 22], 60);
    let exact = reconstructed(&domain, smooth, ReconstructOptions::default());
    let trunc = reconstructed(&domain, smooth, ReconstructOptions { mode: PlanMode::Truncated(5), ..Default::default() });
    let local = LocalSplines::new(&domain, &trunc).unwrap();
    assert!(c1_mismatch(&domain, &local, 200) < 1e-11);
    let el = LocalSplines::new(&domain, &exact).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut dev: f64 = 0.0;
    for _ in 0..2000 {
        let r = rng.gen_range(0.0..1.0);
        let t = rng.gen_range(0.0..2.0 * PI);
        dev = dev.max((el.eval(r, t).unwrap() - local.eval(r, t).unwrap()).abs());
    }
    assert!(dev > 0.0 && dev < 1e-3, "{dev}");
}

#[test]
fn conforming_input_gives_same_result_through_every_entry_point() {
    let domain = tjoint_layout([6, 6, 6], 24);
    let mut a = domain.sample(smooth);
    let mut b = a.clone();
    tjoint_derivs(&domain, &mut a, PlanMode::Exact).unwrap();
    nonconforming_derivs(&domain, &mut b, PlanMode::Exact).unwrap();
    for (x, y) in a.edges.iter().flatten().zip(b.edges.iter().flatten()) {
        assert_eq!(x, y);
    }
    let nc = nonconforming_layout([6, 6, 6], 12);
    let mut f = nc.sample(smooth);
    assert!(matches!(conforming_2d_derivs(&nc, &mut f, PlanMode::Exact), Err(Error::Layout(_))));
}

#[test]
fn nonconforming_layout_is_c1_and_bounded() {
    let domain = nonconforming_layout([21, 76, 24], 128);
    let mut field = domain.sample(smooth);
    nonconforming_derivs(&domain, &mut field, PlanMode::Exact).unwrap();
    let local = LocalSplines::new(&domain, &field).unwrap();
    // Every fine-side node of each interface: value, ∂r and ∂θ agree with the coarse side.
    for (b, rr) in [(0usize, 42.0 / 128.0), (1, 80.0 / 128.0)] {
        let fine = &local.splines[1][0];
        let coarse = &local.splines[if b == 0 { 0 } else { 2 }][0];
        let on_coarse_grid = |k: usize| k % 2 == 0;
        for k in 0..256 {
            let t = k as f64 * 2.0 * PI / 256.0;
            assert!((fine.eval_dr(rr, t).unwrap() - coarse.eval_dr(rr, t).unwrap()).abs() < 1e-12);
            if on_coarse_grid(k) {
                assert!((fine.eval(rr, t).unwrap() - coarse.eval(rr, t).unwrap()).abs() < 1e-12);
            }
        }
    }
    // With value projection the traces agree everywhere along the interface.
    let opts = ReconstructOptions { project_values: true, ..Default::default() };
    let projected = reconstructed(&domain, smooth, opts);
    assert!(c1_mismatch(&domain, &LocalSplines::new(&domain, &projected).unwrap(), 200) < 1e-11);

    // Error against the function lies between the refined and coarse global
    // splines. The bands here share the global r spacing so that only the θ
    // resolution differs.
    let domain = nonconforming_layout([42, 38, 48], 128);
    let mut field = domain.sample(smooth);
    nonconforming_derivs(&domain, &mut field, PlanMode::Exact).unwrap();
    let local = LocalSplines::new(&domain, &field).unwrap();
    let global = |nt: usize| {
        let d = Domain2D::tensor(vec![bp(0.0, 1.0, 128)], vec![bp(0.0, 2.0 * PI, nt)], Boundary::GrevilleExtra, Boundary::Periodic)
            .unwrap();
        let f = d.sample(smooth);
        d.equivalent_global_spline(&f).unwrap()
    };
    let (fine, coarse) = (global(256), global(128));
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let (mut el, mut ef, mut ec): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for _ in 0..20_000 {
        let r = rng.gen_range(0.0..1.0);
        let t = rng.gen_range(0.0..2.0 * PI);
        let exact = smooth(r, t);
        el = el.max((local.eval(r, t).unwrap() - exact).abs());
        ef = ef.max((fine.eval(r, t).unwrap() - exact).abs());
        ec = ec.max((coarse.eval(r, t).unwrap() - exact).abs());
    }
    assert!(ef < ec);
    assert!(el >= 0.9 * ef && el <= 1.1 * ec, "local {el} refined {ef} coarse {ec}");
}

#[test]
fn layout_without_elimination_order_is_rejected() {
    let two_pi = 2.0 * PI;
    let outer: Vec<f64> = [0, 1, 3, 5, 7, 9, 11, 13, 16].iter().map(|&k| k as f64 * two_pi / 16.0).collect();
    let bands = vec![
        Band { r: bp(0.0, 0.3, 5), theta: vec![bp(0.0, two_pi, 8)] },
        Band { r: bp(0.3, 0.6, 5), theta: vec![bp(0.0, two_pi, 16)] },
        Band { r: bp(0.6, 1.0, 5), theta: vec![BreakPoints::new(outer).unwrap()] },
    ];
    let domain = Domain2D::new(bands, Boundary::GrevilleExtra, Boundary::Periodic).unwrap();
    let err = Reconstructor::new(domain.clone(), ReconstructOptions::default()).unwrap_err();
    assert!(matches!(err, Error::NoEliminationOrder(_)));
    assert!(err.to_string().to_lowercase().contains("truncat"));
    // Stencils reaching across the middle band keep the cycle.
    let wide = ReconstructOptions { mode: PlanMode::Truncated(5), ..Default::default() };
    assert!(matches!(Reconstructor::new(domain.clone(), wide), Err(Error::NoEliminationOrder(_))));
    // Short stencils break it, and the result is still C¹.
    let short = ReconstructOptions { mode: PlanMode::Truncated(4), project_values: true, ..Default::default() };
    let rec = Reconstructor::new(domain.clone(), short).unwrap();
    let mut field = domain.sample(smooth);
    rec.reconstruct(&mut field).unwrap();
    let local = LocalSplines::new(&domain, &field).unwrap();
    assert!(c1_mismatch(&domain, &local, 200) < 1e-11);

    // Neither θ set containing the other is a layout error.
    let bands = vec![
        Band { r: bp(0.0, 0.5, 5), theta: vec![bp(0.0, two_pi, 6)] },
        Band { r: bp(0.5, 1.0, 5), theta: vec![bp(0.0, two_pi, 9)] },
    ];
    let domain = Domain2D::new(bands, Boundary::GrevilleExtra, Boundary::Periodic).unwrap();
    assert!(matches!(Reconstructor::new(domain, ReconstructOptions::default()), Err(Error::Layout(_))));
}

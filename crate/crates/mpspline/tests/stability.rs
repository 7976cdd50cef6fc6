use mpspline::spline::{interpolate_1d, BreakPoints, Closure};
use mpspline::stability::*;
use ndarray::Array2;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

fn matmul(a: &Array2<Complex64>, b: &Array2<Complex64>) -> Array2<Complex64> {
    let n = a.nrows();
    Array2::from_shape_fn((n, n), |(i, j)| (0..n).map(|k| a[[i, k]] * b[[k, j]]).sum())
}

fn trace(a: &Array2<Complex64>) -> Complex64 {
    (0..a.nrows()).map(|i| a[[i, i]]).sum()
}

/// Power sums tr(Aᵐ) = Σ λᵐ for m = 1..n pin down the spectrum without any eigen-solver.
fn check_power_sums(a: &Array2<Complex64>, tol: f64) {
    let eig = eigenvalues(a).unwrap();
    let mut p = a.clone();
    for m in 1..=a.nrows() {
        let s: Complex64 = eig.iter().map(|l| l.powu(m as u32)).sum();
        let t = trace(&p);
        assert!((s - t).norm() <= tol * (1.0 + t.norm()), "m={m}: {s} vs {t}");
        p = matmul(&p, a);
    }
}

#[test]
fn shift_zero_and_row_sums() {
    for n_c in [3, 4, 7] {
        let op = build_c0_blocks(n_c, 0.0).unwrap().with_patches(5);
        let m = n_c + 2;
        let eye = Array2::<f64>::eye(m);
        assert!(op.blocks[0].iter().zip(eye.iter()).all(|(a, b)| (a - b).abs() < 1e-13));
        assert!(op.blocks[1].iter().chain(op.blocks[2].iter()).all(|v| v.abs() < 1e-13));
        for k in 0..5 {
            assert!((spectral_radius(&op.symbol(k).unwrap().matrix).unwrap() - 1.0).abs() < 1e-12);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(n_c as u64);
        for _ in 0..50 {
            let s = rng.gen_range(0.0..n_c as f64);
            let op = build_c0_blocks(n_c, s).unwrap();
            for i in 0..m {
                let sum: f64 = op.blocks.iter().map(|b| b.row(i).sum()).sum();
                assert!((sum - 1.0).abs() < 1e-13, "{n_c} {s} {sum}");
            }
        }
    }
}

#[test]
fn one_cell_shift_moves_node_values() {
    // N_c = 3: Greville nodes 0, 1/3, 1, 2, 8/3 and 3 (the next patch's first).
    let op = build_c0_blocks(3, 1.0).unwrap();
    let unit = |src: usize, i: usize, col: usize| {
        for (b, blk) in op.blocks.iter().enumerate() {
            for c in 0..5 {
                let want = if b == src && c == col { 1.0 } else { 0.0 };
                assert!((blk[[i, c]] - want).abs() < 1e-13, "row {i} block {b} col {c}: {}", blk[[i, c]]);
            }
        }
    };
    unit(0, 0, 2);
    unit(0, 2, 3);
    unit(1, 3, 0);
    assert!(build_c0_blocks(3, 3.0).is_err());
    assert!(build_c0_blocks(3, -0.1).is_err());
}

#[test]
fn dense_construction_matches_open_knot_builders() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for n_c in [4, 5, 9] {
        for h in [1.0, 0.1, 2.5] {
            let breaks = BreakPoints::uniform(0.0, n_c as f64 * h, n_c).unwrap();
            let vals: Vec<f64> = (0..n_c + 3).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let reference = interpolate_1d(&breaks, &vals, Closure::GrevillePoints).unwrap();
            let dense = DenseLocalSpline::greville(n_c, h).unwrap();
            let nodal: Vec<f64> = vals[..n_c + 1].to_vec();
            let (dl, dr) = (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            let herm_ref = interpolate_1d(&breaks, &nodal, Closure::Hermite(dl, dr)).unwrap();
            let herm = DenseLocalSpline::hermite(n_c, h).unwrap();
            let mut herm_data = vec![nodal[0], dl];
            herm_data.extend_from_slice(&nodal[1..n_c]);
            herm_data.extend([dr, nodal[n_c]]);
            for _ in 0..200 {
                let x = rng.gen_range(0.0..n_c as f64 * h);
                let w = dense.eval_weights(x).unwrap();
                let v: f64 = w.iter().zip(&vals).map(|(a, b)| a * b).sum();
                assert!((v - reference.eval(x).unwrap()).abs() < 1e-12);
                let w = herm.eval_weights(x).unwrap();
                let v: f64 = w.iter().zip(&herm_data).map(|(a, b)| a * b).sum();
                assert!((v - herm_ref.eval(x).unwrap()).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn fourier_symbol_properties() {
    let op = build_c0_blocks(3, 0.37).unwrap().with_patches(5);
    let s0 = op.symbol(0).unwrap().matrix;
    let sum = &op.blocks[0] + &op.blocks[1] + &op.blocks[2];
    for ((i, j), z) in s0.indexed_iter() {
        assert!(z.im.abs() < 1e-15 && (z.re - sum[[i, j]]).abs() < 1e-15);
    }
    for k in 1..5 {
        let a = op.symbol(k).unwrap().matrix;
        let b = op.symbol(5 - k).unwrap().matrix;
        assert!(a.iter().zip(b.iter()).all(|(x, y)| (x - y.conj()).norm() < 1e-14));
    }
    assert!(op.symbol(5).is_err());
    // The symbols block-diagonalise the full operator: tr(Aᵐ) = Σ_k tr(Â_kᵐ).
    let dense = op.dense().mapv(c);
    let syms: Vec<_> = (0..5).map(|k| op.symbol(k).unwrap().matrix).collect();
    let (mut pd, mut ps) = (dense.clone(), syms.clone());
    for _ in 0..6 {
        let t: Complex64 = ps.iter().map(trace).sum();
        assert!((trace(&pd) - t).norm() < 1e-12);
        pd = matmul(&pd, &dense);
        ps = ps.iter().zip(&syms).map(|(p, s)| matmul(p, s)).collect();
    }
}

#[test]
fn eigenvalues_match_power_sums() {
    assert_eq!(spectral_radius(&Array2::eye(4).mapv(c)).unwrap(), 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for n in 1..=10 {
        for _ in 0..20 {
            let a = Array2::from_shape_fn((n, n), |_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
            check_power_sums(&a, 1e-10);
        }
    }
    // A triangular matrix shows its eigenvalues on the diagonal.
    let t = Array2::from_shape_fn((4, 4), |(i, j)| if i <= j { c((i + 1) as f64 + j as f64 * 0.1) } else { c(0.0) });
    assert!((spectral_radius(&t).unwrap() - 4.3).abs() < 1e-12);
    for k in 0..5 {
        check_power_sums(&build_c0_blocks(3, 0.00405).unwrap().with_patches(5).symbol(k).unwrap().matrix, 1e-12);
    }
}

#[test]
fn c0_coupling_is_unstable() {
    let op = build_c0_blocks(3, 405.0 / 100000.0).unwrap().with_patches(5);
    let r = spectral_radius(&op.symbol(1).unwrap().matrix).unwrap();
    assert!(r > 1.0 + 5e-8, "{r}");
    // Rescaling the grid leaves the blocks unchanged.
    for h in [0.1, 1.0 / 15.0, 3.0] {
        let scaled = build_c0_blocks_scaled(3, 405.0 / 100000.0, h).unwrap().with_patches(5);
        let rs = spectral_radius(&scaled.symbol(1).unwrap().matrix).unwrap();
        assert!((rs - r).abs() < 1e-12, "{h}: {rs} vs {r}");
    }
    let shifts: Vec<f64> = (1..1000).map(|j| j as f64 / 1000.0).collect();
    let pts = scan(5, 3, &shifts, false).unwrap();
    assert!(pts.iter().any(|p| p.radius > 1.0));
}

#[test]
fn c1_coupling_matches_the_periodic_spline_and_is_stable() {
    // The exact plan reproduces the periodic spline on the merged 15-cell line.
    let (n_p, n_c) = (5, 3);
    let n = n_p * n_c;
    let breaks = BreakPoints::uniform(0.0, n as f64, n).unwrap();
    for s in [0.0, 0.25, 0.6, 1.7] {
        let op = build_c1_operator(n_p, n_c, s).unwrap();
        let dense = op.dense();
        for col in 0..n {
            let e: Vec<f64> = (0..n).map(|i| if i == col { 1.0 } else { 0.0 }).collect();
            let sp = interpolate_1d(&breaks, &e, Closure::Periodic).unwrap();
            for row in 0..n {
                let x = (row as f64 + s).rem_euclid(n as f64);
                assert!((dense[[row, col]] - sp.eval(x).unwrap()).abs() < 1e-12);
            }
        }
    }
    for j in 1..=50 {
        let op = build_c1_operator(n_p, n_c, j as f64 / 51.0).unwrap();
        let (r, _) = op.max_radius().unwrap();
        assert!(r <= 1.0 + 1e-10, "{j}: {r}");
    }
}

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use urm::linalg::banded::{bandwidth, rcm};
use urm::linalg::cg::pcg_monitored;
use urm::linalg::{io, solve_lu, solve_sparse, sym_eig, CgOptions, DenseMatrix, SparseMatrix};

/// Textbook Gaussian elimination with partial pivoting on a row-major copy.
fn gauss_oracle(a: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
    let n = b.len();
    let mut m: Vec<Vec<f64>> = a
        .iter()
        .zip(b)
        .map(|(r, &bi)| [r.clone(), vec![bi]].concat())
        .collect();
    for k in 0..n {
        let p = (k..n)
            .max_by(|&i, &j| m[i][k].abs().partial_cmp(&m[j][k].abs()).unwrap())
            .unwrap();
        m.swap(k, p);
        for i in k + 1..n {
            let f = m[i][k] / m[k][k];
            for j in k..=n {
                m[i][j] -= f * m[k][j];
            }
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|j| m[i][j] * x[j]).sum();
        x[i] = (m[i][n] - s) / m[i][i];
    }
    x
}

fn random_dense(n: usize, m: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect())
        .collect()
}

fn spd(n: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let b = random_dense(n, n, rng);
    let mut a = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            a[i][j] =
                (0..n).map(|k| b[k][i] * b[k][j]).sum::<f64>() + if i == j { 1.0 } else { 0.0 };
        }
    }
    a
}

fn to_sparse(a: &[Vec<f64>]) -> SparseMatrix {
    SparseMatrix::from_dense(&DenseMatrix::from_rows(a).unwrap())
}

#[test]
fn identity_and_diagonal_solves() {
    let b = [1.0, -2.0, 3.5, 0.0, 7.0];
    for sym in [true, false] {
        assert_eq!(
            solve_sparse(&SparseMatrix::identity(5), &b, sym).unwrap(),
            b.to_vec()
        );
        let x = solve_sparse(&SparseMatrix::from_diagonal(&[2.0, 4.0]), &[2.0, 8.0], sym).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-15 && (x[1] - 2.0).abs() < 1e-15);
    }
}

#[test]
fn random_spd_matches_gauss_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let a = spd(50, &mut rng);
    let b: Vec<f64> = (0..50).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let expect = gauss_oracle(&a, &b);
    for sym in [true, false] {
        let x = solve_sparse(&to_sparse(&a), &b, sym).unwrap();
        let err = x
            .iter()
            .zip(&expect)
            .map(|(p, q)| (p - q).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-8, "sym={sym} err={err}");
    }
}

/// Random banded nonsymmetric system on a scrambled numbering.
fn scrambled_band(n: usize, rng: &mut ChaCha8Rng) -> (Vec<Vec<f64>>, Vec<usize>) {
    let mut perm: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        perm.swap(i, rng.gen_range(0..=i));
    }
    let mut a = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i.saturating_sub(3)..(i + 4).min(n) {
            a[perm[i]][perm[j]] = rng.gen_range(-1.0..1.0);
        }
        a[perm[i]][perm[i]] += if i % 2 == 0 { 0.3 } else { -0.3 };
    }
    (a, perm)
}

#[test]
fn general_lu_matches_gauss_oracle_after_reordering() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (a, _) = scrambled_band(120, &mut rng);
    let b: Vec<f64> = (0..120).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let sa = to_sparse(&a);
    let p = rcm(&sa);
    let (kl, ku) = bandwidth(&sa, &p);
    assert!(kl + ku < 60, "rcm bandwidth {kl}+{ku}");
    let x = solve_lu(&sa, &b).unwrap();
    let expect = gauss_oracle(&a, &b);
    let err = x
        .iter()
        .zip(&expect)
        .map(|(p, q)| (p - q).abs())
        .fold(0.0, f64::max);
    assert!(err < 1e-8, "err={err}");
}

#[test]
fn permuted_rows_give_same_solution() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let (a, _) = scrambled_band(40, &mut rng);
    let b: Vec<f64> = (0..40).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let x = solve_lu(&to_sparse(&a), &b).unwrap();
    let mut rows: Vec<usize> = (0..40).rev().collect();
    rows.rotate_left(7);
    let pa: Vec<Vec<f64>> = rows.iter().map(|&i| a[i].clone()).collect();
    let pb: Vec<f64> = rows.iter().map(|&i| b[i]).collect();
    let y = solve_lu(&to_sparse(&pa), &pb).unwrap();
    assert!(x.iter().zip(&y).all(|(p, q)| (p - q).abs() < 1e-10));
}

#[test]
fn singular_matrix_is_a_solver_failure() {
    let a = to_sparse(&[vec![1.0, 2.0], vec![2.0, 4.0]]);
    assert!(matches!(
        solve_lu(&a, &[1.0, 1.0]),
        Err(urm::Error::SolverFailure { .. })
    ));
}

#[test]
fn cg_error_decreases_in_energy_norm() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let a = spd(40, &mut rng);
    let b: Vec<f64> = (0..40).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let exact = gauss_oracle(&a, &b);
    let sa = to_sparse(&a);
    let mut errs = Vec::new();
    let out = pcg_monitored(&sa, &b, CgOptions::default(), |_, x| {
        let e: Vec<f64> = x.iter().zip(&exact).map(|(p, q)| p - q).collect();
        let ae = sa.matvec(&e);
        errs.push(e.iter().zip(&ae).map(|(p, q)| p * q).sum::<f64>().sqrt());
    })
    .unwrap();
    assert!(out.iterations > 3);
    for w in errs.windows(2) {
        assert!(w[1] <= w[0] * (1.0 + 1e-9), "{} > {}", w[1], w[0]);
    }
}

#[test]
fn sym_eig_reconstructs_random_matrix() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let r = random_dense(30, 30, &mut rng);
    let c: Vec<Vec<f64>> = (0..30)
        .map(|i| (0..30).map(|j| r[i][j] + r[j][i]).collect())
        .collect();
    let c = DenseMatrix::from_rows(&c).unwrap();
    let e = sym_eig(&c).unwrap();
    let mut ql = e.vectors.clone();
    for j in 0..30 {
        for i in 0..30 {
            ql[(i, j)] *= e.values[j];
        }
    }
    let rec = ql.matmul(&e.vectors.transpose()).unwrap();
    let fro = c.frobenius_norm();
    let mut diff = rec.clone();
    diff.as_mut_slice()
        .iter_mut()
        .zip(c.as_slice())
        .for_each(|(d, x)| *d -= x);
    assert!(diff.frobenius_norm() < 1e-10 * fro);
    let qtq = e.vectors.t_matmul(&e.vectors).unwrap();
    assert!(qtq.max_abs_diff(&DenseMatrix::identity(30)) < 1e-10);
    assert!(e.values.windows(2).all(|w| w[0] >= w[1]));
}

#[test]
fn sparse_dense_product_matches_naive() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut t = Vec::new();
    for _ in 0..300 {
        t.push((
            rng.gen_range(0..60),
            rng.gen_range(0..60),
            rng.gen_range(-1.0..1.0),
        ));
    }
    let a = SparseMatrix::from_triplets(60, 60, &t).unwrap();
    let l = DenseMatrix::from_rows(&random_dense(60, 5, &mut rng)).unwrap();
    let fast = a.mul_dense(&l).unwrap();
    let ad = a.to_dense();
    let mut naive = DenseMatrix::zeros(60, 5);
    for i in 0..60 {
        for j in 0..5 {
            naive[(i, j)] = (0..60).map(|k| ad[(i, k)] * l[(k, j)]).sum();
        }
    }
    assert!(fast.max_abs_diff(&naive) < 1e-12);
}

#[test]
fn urm_files_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let m = DenseMatrix::from_rows(&[vec![1.0, f64::MIN_POSITIVE], vec![-0.0, 1e300]]).unwrap();
    io::write_dense(dir.path().join("m.urm"), &m).unwrap();
    assert_eq!(io::read_dense(dir.path().join("m.urm")).unwrap(), m);
    io::write_vector(dir.path().join("v.urm"), &[3.0, 4.0]).unwrap();
    assert_eq!(
        io::read_vector(dir.path().join("v.urm")).unwrap(),
        vec![3.0, 4.0]
    );
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn eigenvalues_sum_to_trace(seed in any::<u64>(), n in 1usize..12) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let r = random_dense(n, n, &mut rng);
        let c: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| r[i][j] + r[j][i]).collect()).collect();
        let trace: f64 = (0..n).map(|i| c[i][i]).sum();
        let e = sym_eig(&DenseMatrix::from_rows(&c).unwrap()).unwrap();
        let s: f64 = e.values.iter().sum();
        let scale = c.iter().flatten().map(|x| x.abs()).sum::<f64>().max(1.0);
        prop_assert!((s - trace).abs() <= 1e-10 * scale);
    }

    #[test]
    fn triplet_assembly_is_order_independent_for_distinct_entries(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut t: Vec<(usize, usize, f64)> = (0..20).map(|k| (k % 5, k / 5, rng.gen_range(-1.0..1.0))).collect();
        let a = SparseMatrix::from_triplets(5, 4, &t).unwrap();
        t.reverse();
        prop_assert_eq!(a, SparseMatrix::from_triplets(5, 4, &t).unwrap());
    }
}

use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::*;
use crate::binning::Binning;
use crate::harmonic::harmonic_tensor;
use crate::models::{random_frame, sample_mim, sample_sphere, Dataset, LinkSpec, Provenance};
use crate::tensor_core::{frame_distance, unfold, Frame};

fn random_dataset(d: usize, n: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut inputs = Vec::new();
    let mut labels = Vec::new();
    for _ in 0..n {
        inputs.extend(sample_sphere(d, &mut rng));
        labels.push(rng.sample::<f64, _>(StandardNormal));
    }
    Dataset::new(d, 1, labels, inputs, Provenance::default()).unwrap()
}

fn table_kernel(rank: usize, seed: u64) -> Kernel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let binning = Binning { edges: vec![vec![-0.5, 0.0, 0.7]] };
    let features = (0..4 * rank).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
    Kernel::new(FeatureMap::Table(BinTable { binning, rank, features }), 1e6).unwrap()
}

fn mats(data: &Dataset, l: usize, a: usize, b: usize) -> Vec<DMatrix<f64>> {
    (0..data.len())
        .map(|i| {
            let h = harmonic_tensor(data.input(i), l).unwrap();
            let m = unfold(h.tensor(), a, b).unwrap();
            DMatrix::from_row_slice(m.rows, m.cols, &m.data)
        })
        .collect()
}

/// Double-sum form: `(1/n^2) sum_{i,j}` for `a = b`, `(1/(n(n-1))) sum_{i != j}` otherwise.
fn explicit_mhat(data: &Dataset, k: &Kernel, l: usize, a: usize, b: usize) -> DMatrix<f64> {
    let ms = mats(data, l, a, b);
    let n = data.len();
    let mut out = DMatrix::zeros(ms[0].nrows(), ms[0].nrows());
    for i in 0..n {
        for j in 0..n {
            if a != b && i == j {
                continue;
            }
            out += &ms[i] * ms[j].transpose() * k.eval(data.label(i), data.label(j));
        }
    }
    let nf = n as f64;
    if a == b {
        out / (nf * nf)
    } else {
        out / (nf * (nf - 1.0))
    }
}

#[test]
fn mhat_matches_double_sum() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for (d, n) in [(3, 40), (4, 25), (5, 12)] {
        let data = random_dataset(d, n, d as u64);
        for rank in [1, 3] {
            let k = table_kernel(rank, rank as u64);
            for l in 1..=3 {
                for a in 1..=l {
                    let b = l - a;
                    let op = MhatOperator::new(&data, &k, l, a, b).unwrap();
                    let dense = explicit_mhat(&data, &k, l, a, b);
                    let v: Vec<f64> = (0..op.dim()).map(|_| rng.sample(StandardNormal)).collect();
                    let got = mhat_matvec(&op, &v).unwrap();
                    let want = &dense * nalgebra::DVector::from_column_slice(&v);
                    let scale = want.amax().max(1.0);
                    for (g, w) in got.iter().zip(want.iter()) {
                        assert!((g - w).abs() <= 1e-9 * scale, "d={d} l={l} ({a},{b}): {g} vs {w}");
                    }
                }
            }
        }
    }
}

#[test]
fn mhat_rank_one_mm_formula() {
    let d = 5;
    let data = random_dataset(d, 50, 9);
    let k = table_kernel(1, 4);
    let op = MhatOperator::new(&data, &k, 2, 1, 1).unwrap();
    let dense = explicit_mhat(&data, &k, 2, 1, 1);
    assert!((op.to_dense() - dense).amax() < 1e-9);
}

#[test]
fn mhat_two_samples_off_diagonal() {
    let d = 4;
    let data = random_dataset(d, 2, 11);
    let k = table_kernel(1, 2);
    let (l, a, b) = (3, 1, 2);
    let ms = mats(&data, l, a, b);
    let k12 = k.eval(data.label(0), data.label(1));
    let want = (&ms[0] * ms[1].transpose() + &ms[1] * ms[0].transpose()) * (k12 / 2.0);
    let op = MhatOperator::new(&data, &k, l, a, b).unwrap();
    assert!((op.to_dense() - want).amax() < 1e-9);
}

#[test]
fn mhat_symmetric_split_is_psd() {
    let data = random_dataset(5, 30, 3);
    let k = table_kernel(2, 8);
    let op = MhatOperator::new(&data, &k, 2, 1, 1).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..20 {
        let v: Vec<f64> = (0..5).map(|_| rng.sample(StandardNormal)).collect();
        let mv = op.apply(&v);
        assert!(v.iter().zip(&mv).map(|(a, b)| a * b).sum::<f64>() >= -1e-12);
    }
    assert_eq!(op.psd_shift(), 0.0);
    let op = MhatOperator::new(&data, &k, 3, 1, 2).unwrap();
    let (vals, _) = crate::linalg::sym_eigen_desc(&op.to_dense());
    assert!(vals.last().unwrap() + op.psd_shift() >= -1e-12);
}

#[test]
fn subspace_iteration_examples() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let diag = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![5.0, 3.0, 1.0, 0.0, 0.0, 0.0]));
    let opts = PowerOptions { tol: 1e-10, max_iter: 500, oversample: 2, shift: 0.0 };
    let r = subspace_iteration(|x| &diag * x, 6, 2, &opts, None, &mut rng).unwrap();
    assert!(r.converged);
    assert!((r.values[0] - 5.0).abs() < 1e-9 && (r.values[1] - 3.0).abs() < 1e-9);
    assert!(r.vectors[(0, 0)].abs() > 1.0 - 1e-9 && r.vectors[(1, 1)].abs() > 1.0 - 1e-9);

    let u = nalgebra::DVector::from_vec(vec![1.0, -2.0, 0.5, 3.0]);
    let m = &u * u.transpose();
    let r = subspace_iteration(|x| &m * x, 4, 1, &opts, None, &mut rng).unwrap();
    assert!((r.values[0] - u.norm_squared()).abs() < 1e-9);
    assert!((r.vectors.column(0).dot(&u).abs() - u.norm()).abs() < 1e-9);

    let g = DMatrix::<f64>::from_fn(50, 50, |_, _| rng.sample(StandardNormal));
    let mut a = &g * g.transpose() / 50.0;
    for i in 0..3 {
        a[(i, i)] += 10.0 * (3 - i) as f64;
    }
    let r = subspace_iteration(|x| &a * x, 50, 3, &opts, None, &mut rng).unwrap();
    let (_, vecs) = crate::linalg::sym_eigen_desc(&a);
    let want = Frame::new(vecs.columns(0, 3).into_owned()).unwrap();
    let got = Frame::orthonormalized(&r.vectors).unwrap();
    assert!(frame_distance(&want, &got).unwrap() < 1e-8);
    assert!(subspace_iteration(|x| &a * x, 50, 51, &opts, None, &mut rng).is_err());
}

#[test]
fn kernel_clamp_and_json() {
    let k = Kernel::linear(0, 2.0, 9.0).unwrap();
    assert_eq!(k.features(&[1.0]), vec![2.0]);
    assert_eq!(k.features(&[10.0]), vec![3.0]);
    let t = table_kernel(3, 5);
    let back = Kernel::from_json(&t.to_json()).unwrap();
    assert_eq!(back, t);
    assert!(Kernel::from_json("{\"map\":{\"kind\":\"nope\"},\"bound\":1}").is_err());
}

#[test]
fn symmetrization_rank_and_sign_invariance() {
    // base depends on r only through |r|
    let binning = Binning { edges: vec![vec![0.0], vec![-0.5, 0.5]] };
    let base = Kernel::new(
        FeatureMap::Table(BinTable { binning, rank: 1, features: vec![1.0, -2.0, 1.0, 0.5, 3.0, 0.5] }),
        100.0,
    )
    .unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let sym = symmetrize_kernel(&base, 2, 1, 5, &mut rng).unwrap();
    assert_eq!(sym.rank(), 5);
    for y in [[-1.0, 0.7], [0.3, -0.9], [2.0, 0.1]] {
        for y2 in [[-1.0, -0.7], [0.3, 0.2]] {
            assert!((sym.eval(&y, &y2) - base.eval(&y, &y2)).abs() < 1e-12);
        }
    }
    assert!(symmetrize_kernel(&base, 2, 0, 5, &mut rng).is_err());
}

/// Mean `|K(gy, gy') - K(y, y')|` over random rotations `g` of the `r` block.
fn asymmetry(k: &Kernel, s: usize, rng: &mut ChaCha8Rng) -> f64 {
    let mut acc = 0.0;
    let trials = 400;
    for _ in 0..trials {
        let y: Vec<f64> = (0..=s).map(|_| rng.sample(StandardNormal)).collect();
        let y2: Vec<f64> = (0..=s).map(|_| rng.sample(StandardNormal)).collect();
        let g = haar_orthogonal(s, rng);
        let rot = |v: &[f64]| {
            let mut out = v.to_vec();
            for i in 0..s {
                out[1 + i] = (0..s).map(|k| g[i * s + k] * v[1 + k]).sum();
            }
            out
        };
        acc += (k.eval(&rot(&y), &rot(&y2)) - k.eval(&y, &y2)).abs();
    }
    acc / trials as f64
}

#[test]
fn symmetrization_converges_with_more_rotations() {
    let s = 2;
    let y: Vec<f64> = {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        (0..3000).map(|_| rng.sample(StandardNormal)).collect()
    };
    let binning = Binning::equal_mass(&y, 3, &[2, 4, 4]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let features = (0..binning.n_cells()).map(|_| rng.sample(StandardNormal)).collect();
    let base = Kernel::new(FeatureMap::Table(BinTable { binning, rank: 1, features }), 1e6).unwrap();
    let errs: Vec<f64> = [4, 16, 64]
        .iter()
        .map(|&n_rot| {
            let mut r = ChaCha8Rng::seed_from_u64(10 + n_rot as u64);
            let k = symmetrize_kernel(&base, 3, s, n_rot, &mut r).unwrap();
            asymmetry(&k, s, &mut ChaCha8Rng::seed_from_u64(99))
        })
        .collect();
    assert!(errs[0] > errs[1] && errs[1] > errs[2], "{errs:?}");
}

#[test]
fn oracle_kernel_noiseless_parity() {
    let link = LinkSpec::Parity { s: 2, sigma: 0.0 };
    let opts = OracleOptions { n_cal: 20_000, ..Default::default() };
    let k = oracle_kernel(&link, 20, 2, &opts, 1).unwrap();
    assert!(k.rank() <= 2);
    assert!(k.eval(&[1.0], &[1.0]) > 0.0 && k.eval(&[-1.0], &[-1.0]) > 0.0);
    assert!(k.eval(&[1.0], &[-1.0]) <= 0.0);
}

#[test]
fn oracle_kernel_rank_bound_and_degeneracy() {
    let link = LinkSpec::Parity { s: 2, sigma: 0.1 };
    let opts = OracleOptions { n_cal: 20_000, ..Default::default() };
    let k = oracle_kernel(&link, 20, 2, &opts, 2).unwrap();
    assert!(k.rank() <= 2usize.pow(2) + 1);
    let null = LinkSpec::Independent { s: 2, sigma: 1.0 };
    assert!(matches!(oracle_kernel(&null, 20, 2, &opts, 3), Err(crate::Error::Degenerate(_))));
}

fn parity_kernel(d: usize) -> Kernel {
    let link = LinkSpec::Parity { s: 2, sigma: 0.1 };
    oracle_kernel(&link, d, 2, &OracleOptions { n_cal: 20_000, ..Default::default() }, 7).unwrap()
}

#[test]
fn one_step_parity_recovery() {
    let d = 20;
    let link = LinkSpec::Parity { s: 2, sigma: 0.1 };
    let kernel = parity_kernel(d);
    let cfg = UnfoldConfig::new(2, d, RankRule::Fixed { t: 2, s0: 2 });
    let mut ok = 0;
    for trial in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(100 + trial);
        let w = random_frame(d, 2, &mut rng).unwrap();
        let data = sample_mim(&link, &w, 4000, trial).unwrap();
        let res = one_step(&data, &cfg, &kernel).unwrap();
        if frame_distance(&res.frame, &w).unwrap() <= 0.3 {
            ok += 1;
        }
    }
    assert!(ok >= 16, "{ok}/20 successes");
}

#[test]
fn one_step_null_gap() {
    let d = 20;
    let kernel = parity_kernel(d);
    let cfg = UnfoldConfig::new(2, d, RankRule::Fixed { t: 2, s0: 2 });
    let w = random_frame(d, 2, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
    let signal = sample_mim(&LinkSpec::Parity { s: 2, sigma: 0.1 }, &w, 4000, 5).unwrap();
    let mut null = sample_mim(&LinkSpec::Parity { s: 2, sigma: 0.1 }, &w, 4000, 6).unwrap();
    // permuting labels against inputs leaves the label law intact and removes all dependence
    let mut labels = null.labels().to_vec();
    labels.rotate_left(1);
    null = Dataset::new(d, 1, labels, null.inputs().to_vec(), Provenance::default()).unwrap();
    let top_signal = one_step(&signal, &cfg, &kernel).unwrap().diagnostics.mhat_eigenvalues[0];
    let top_null = one_step(&null, &cfg, &kernel).unwrap().diagnostics.mhat_eigenvalues[0];
    assert!(top_signal >= 5.0 * top_null, "{top_signal} vs {top_null}");
}

#[test]
fn one_step_degree_one() {
    let d = 50;
    let link = LinkSpec::Polynomial { s: 1, c0: 0.0, coeffs: vec![vec![1.0]], sigma: 0.5 };
    let kernel = Kernel::linear(0, 1.0, 50.0).unwrap();
    let cfg = UnfoldConfig::new(1, d, RankRule::Fixed { t: 1, s0: 1 });
    let mut aligns = Vec::new();
    for trial in 0..9u64 {
        let w = random_frame(d, 1, &mut ChaCha8Rng::seed_from_u64(trial)).unwrap();
        let data = sample_mim(&link, &w, 2000, 50 + trial).unwrap();
        let res = one_step(&data, &cfg, &kernel).unwrap();
        let c = res.frame.column(0);
        let wc = w.column(0);
        aligns.push(c.iter().zip(&wc).map(|(a, b)| a * b).sum::<f64>().powi(2));
    }
    aligns.sort_by(|a, b| a.total_cmp(b));
    assert!(aligns[4] >= 0.8, "{aligns:?}");
}

#[test]
fn one_step_rotation_equivariance() {
    let d = 12;
    let link = LinkSpec::Parity { s: 2, sigma: 0.1 };
    let kernel = parity_kernel(d);
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let w = random_frame(d, 2, &mut rng).unwrap();
    let data = sample_mim(&link, &w, 1500, 3).unwrap();
    let q = crate::linalg::orthonormalize(&DMatrix::<f64>::from_fn(d, d, |_, _| rng.sample(StandardNormal)));
    let mut rotated = Vec::with_capacity(data.inputs().len());
    for i in 0..data.len() {
        let z = nalgebra::DVector::from_column_slice(data.input(i));
        rotated.extend((&q * z).iter());
    }
    let data_q = Dataset::new(d, 1, data.labels().to_vec(), rotated, data.provenance).unwrap();
    let mut cfg = UnfoldConfig::new(2, d, RankRule::Fixed { t: 2, s0: 2 });
    cfg.solver = Solver::Subspace;
    cfg.power.tol = 1e-12;
    cfg.power.max_iter = 5000;
    let init = DMatrix::<f64>::from_fn(d, 6, |_, _| rng.sample(StandardNormal));
    let a = one_step_with_init(&data, &cfg, &kernel, Some(&init)).unwrap();
    let b = one_step_with_init(&data_q, &cfg, &kernel, Some(&(&q * &init))).unwrap();
    let qa = a.frame.rotated(&q).unwrap();
    assert!(frame_distance(&qa, &b.frame).unwrap() <= 1e-6);
    // and the dense solver agrees with the iterative one
    cfg.solver = Solver::Dense;
    let c = one_step(&data, &cfg, &kernel).unwrap();
    assert!(frame_distance(&a.frame, &c.frame).unwrap() <= 1e-5);
}

#[test]
fn one_step_adaptive_and_deficiency() {
    let d = 20;
    let link = LinkSpec::Parity { s: 2, sigma: 0.1 };
    let kernel = parity_kernel(d);
    let w = random_frame(d, 2, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
    let data = sample_mim(&link, &w, 6000, 8).unwrap();
    let res = one_step(&data, &UnfoldConfig::new(2, d, RankRule::Adaptive), &kernel).unwrap();
    assert_eq!((res.diagnostics.t, res.diagnostics.s0), (2, 2));
    assert!(frame_distance(&res.frame, &w).unwrap() < 0.3);
    // with a = 1 the contracted matrix has rank t, so s0 > t is flagged
    let res = one_step(&data, &UnfoldConfig::new(2, d, RankRule::Fixed { t: 1, s0: 3 }), &kernel).unwrap();
    assert!(res.diagnostics.rank_deficient);
    assert_eq!(mad_count(&[10.0, 1.0, 1.1, 0.9, 1.0, 0.95]), 1);
}

#[test]
fn multi_step_single_step_equals_one_step() {
    let d = 15;
    let link = LinkSpec::Parity { s: 2, sigma: 0.1 };
    let kernel = parity_kernel(d);
    let w = random_frame(d, 2, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
    let data = sample_mim(&link, &w, 2000, 4).unwrap();
    let ranks = RankRule::Fixed { t: 2, s0: 2 };
    for solver in [Solver::Dense, Solver::Subspace] {
        let opts = MultiStepOptions { seed: 17, solver, ..Default::default() };
        let out = multi_step(&[data.clone()], &[2], &[kernel.clone()], &[ranks], &opts).unwrap();
        let mut cfg = UnfoldConfig::new(2, d, ranks);
        cfg.seed = step_seed(17, 0);
        cfg.solver = solver;
        let single = one_step(&data, &cfg, &kernel).unwrap();
        assert_eq!(out.frame.matrix(), single.frame.matrix());
        assert!(out.stalled.is_none());
        assert_eq!(out.trace.steps.len(), 1);
    }
}

#[test]
fn multi_step_staircase() {
    let d = 30;
    let link = LinkSpec::Staircase { terms: crate::models::default_staircase(), sigma: 0.1 };
    let w = random_frame(d, 3, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
    let data = sample_mim(&link, &w, 16_000, 5).unwrap();
    let batches = data.split(2).unwrap();
    let opts = OracleOptions { n_cal: 40_000, ..Default::default() };
    let k1 = Kernel::linear(0, 1.0, 50.0).unwrap();
    let w1 = DMatrix::from_fn(3, 1, |i, _| if i == 0 { 1.0 } else { 0.0 });
    let red = crate::models::PlantedReduction::new(&link, d, &w1).unwrap();
    let k2 = oracle_kernel_reduced(&red, 2, &opts, 6).unwrap();
    let out = multi_step(
        &batches,
        &[1, 2],
        &[k1, k2],
        &[RankRule::Fixed { t: 1, s0: 1 }, RankRule::Fixed { t: 2, s0: 2 }],
        &MultiStepOptions::default(),
    )
    .unwrap();
    assert_eq!(out.frame.rank(), 3);
    let dist = frame_distance(&out.frame, &w).unwrap();
    assert!(dist <= 0.4, "distance {dist}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]
    #[test]
    fn mhat_linear_in_v(seed in 0u64..1000, c in -3.0f64..3.0) {
        let data = random_dataset(4, 20, seed);
        let k = table_kernel(2, seed);
        let op = MhatOperator::new(&data, &k, 3, 1, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v: Vec<f64> = (0..4).map(|_| rng.sample(StandardNormal)).collect();
        let w: Vec<f64> = (0..4).map(|_| rng.sample(StandardNormal)).collect();
        let comb: Vec<f64> = v.iter().zip(&w).map(|(a, b)| a + c * b).collect();
        let lhs = op.apply(&comb);
        let (mv, mw) = (op.apply(&v), op.apply(&w));
        for i in 0..4 {
            prop_assert!((lhs[i] - mv[i] - c * mw[i]).abs() < 1e-9 * (1.0 + lhs[i].abs()));
        }
    }
}

use super::*;
use crate::tensor_core::{diamond, sym_project, unfold, Tensor};
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::Rng;
use rand_distr::StandardNormal;

fn unit(rng: &mut impl Rng, d: usize) -> Vec<f64> {
    let g: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
    let n = g.iter().map(|x| x * x).sum::<f64>().sqrt();
    g.into_iter().map(|x| x / n).collect()
}

fn random_traceless(rng: &mut impl Rng, d: usize, l: usize) -> TracelessSymTensor {
    let n = d.pow(l as u32);
    let t = Tensor::from_vec(d, l, (0..n).map(|_| rng.sample(StandardNormal)).collect()).unwrap();
    tf_project(&t).unwrap()
}

fn random_rotation(rng: &mut impl Rng, d: usize) -> DMatrix<f64> {
    let g = DMatrix::from_fn(d, d, |_, _| rng.sample::<f64, _>(StandardNormal));
    crate::linalg::orthonormalize(&g)
}

fn rotate_tensor(q: &DMatrix<f64>, t: &Tensor) -> Tensor {
    let f = Frame::new(q.clone()).unwrap();
    crate::tensor_core::apply_frame(&f, t).unwrap()
}

#[test]
fn low_degree_tensors() {
    let mut rng = crate::rng::stream(11, &[]);
    let d = 5;
    let z = unit(&mut rng, d);
    let h1 = harmonic_tensor(&z, 1).unwrap();
    for i in 0..d {
        assert!((h1.tensor().data()[i] - (d as f64).sqrt() * z[i]).abs() < 1e-14);
    }
    let h2 = harmonic_tensor(&z, 2).unwrap();
    let c = (((d + 2) * d) as f64 / 2.0).sqrt();
    for i in 0..d {
        for k in 0..d {
            let delta = if i == k { 1.0 / d as f64 } else { 0.0 };
            let expect = c * (z[i] * z[k] - delta);
            assert!((h2.tensor().get(&[i, k]) - expect).abs() < 1e-13);
        }
    }
    let z6 = unit(&mut rng, 6);
    let h3 = harmonic_tensor(&z6, 3).unwrap();
    assert!((h3.tensor().norm() - (harmonic_dim(6, 3) as f64).sqrt()).abs() < 1e-10);
    assert!(harmonic_tensor(&[1.0, 1.0, 0.0], 2).is_err());
}

#[test]
fn eval_matches_dense() {
    let mut rng = crate::rng::stream(12, &[]);
    for (d, l) in [(4, 2), (5, 3), (3, 4), (6, 1)] {
        let a = random_traceless(&mut rng, d, l);
        let z = unit(&mut rng, d);
        let dense = a.tensor().dot(harmonic_tensor(&z, l).unwrap().tensor());
        let fast = harmonic_eval(&a, &z).unwrap();
        assert!((dense - fast).abs() < 1e-10 * (1.0 + dense.abs()));
    }
    // degree one and degree zero
    let w = unit(&mut rng, 4);
    let z = unit(&mut rng, 4);
    let a = TracelessSymTensor::new(Tensor::vector(&w)).unwrap();
    let wz: f64 = w.iter().zip(&z).map(|(x, y)| x * y).sum();
    assert!((harmonic_eval(&a, &z).unwrap() - 2.0 * wz).abs() < 1e-14);
    let c = TracelessSymTensor::new(Tensor::scalar(4, 3.5)).unwrap();
    assert_eq!(harmonic_eval(&c, &z).unwrap(), 3.5);
    // zonal case at the pole, d = 4, l = 2
    let pw = tf_project(&Tensor::outer_power(&w, 2)).unwrap();
    let dense = pw.tensor().dot(harmonic_tensor(&w, 2).unwrap().tensor());
    assert!((harmonic_eval(&pw, &w).unwrap() - dense).abs() < 1e-12);
}

#[test]
fn eval_factored_matches_dense() {
    let mut rng = crate::rng::stream(13, &[]);
    for (d, s, l) in [(6, 2, 2), (5, 2, 3), (4, 3, 4)] {
        let g = DMatrix::from_fn(d, s, |_, _| rng.sample::<f64, _>(StandardNormal));
        let w = Frame::orthonormalized(&g).unwrap();
        let n = s.pow(l as u32);
        let b = sym_project(&Tensor::from_vec(s, l, (0..n).map(|_| rng.sample(StandardNormal)).collect()).unwrap()).unwrap();
        let lifted = tf_project(&crate::tensor_core::apply_frame(&w, b.tensor()).unwrap()).unwrap();
        let z = unit(&mut rng, d);
        let ev = HarmonicEvaluator::new(d, l).unwrap();
        let dense = lifted.tensor().dot(ev.tensor(&z).unwrap().tensor());
        let fast = ev.eval_factored(&w, &b, &z).unwrap();
        assert!((dense - fast).abs() < 1e-10 * (1.0 + dense.abs()));
    }
}

#[test]
fn reproducing_identity() {
    let mut rng = crate::rng::stream(14, &[]);
    for d in [3, 6, 12] {
        for l in 0..=4 {
            if d == 12 && l == 4 {
                // 12^4 dense tensors are fine but slow in debug builds; use l <= 3 there
                continue;
            }
            for _ in 0..100 {
                let w = unit(&mut rng, d);
                let z = unit(&mut rng, d);
                let hw = harmonic_tensor(&w, l).unwrap();
                let hz = harmonic_tensor(&z, l).unwrap();
                let t: f64 = w.iter().zip(&z).map(|(x, y)| x * y).sum();
                let lhs = hw.tensor().dot(hz.tensor());
                let rhs = (harmonic_dim(d, l) as f64).sqrt() * gegenbauer(d, l, t).unwrap();
                assert!((lhs - rhs).abs() < 1e-9, "d={d} l={l}: {lhs} vs {rhs}");
            }
        }
    }
}

#[test]
fn gegenbauer_closed_form_cross_check() {
    // Q_l(t) = kappa^2 sqrt(N) sum_j h_j t^{l-2j}
    for d in [3, 7, 30] {
        for l in 0..=6 {
            let ev = HarmonicEvaluator::new(d, l).unwrap();
            for &t in &[-0.8f64, -0.1, 0.0, 0.45, 0.99] {
                let poly: f64 = ev.h().iter().enumerate().map(|(j, h)| h * t.powi((l - 2 * j) as i32)).sum();
                let closed = ev.kappa().powi(2) * ev.harmonic_dim().sqrt() * poly;
                let rec = gegenbauer(d, l, t).unwrap();
                assert!((closed - rec).abs() < 1e-10 * (1.0 + rec.abs()));
            }
        }
    }
}

#[test]
fn equivariance() {
    let mut rng = crate::rng::stream(15, &[]);
    for d in [3, 4, 6] {
        for l in 1..=3 {
            let q = random_rotation(&mut rng, d);
            let z = unit(&mut rng, d);
            let qz: Vec<f64> = (q.clone() * nalgebra::DVector::from_column_slice(&z)).iter().copied().collect();
            let lhs = harmonic_tensor(&qz, l).unwrap();
            let rhs = rotate_tensor(&q, harmonic_tensor(&z, l).unwrap().tensor());
            assert!(lhs.tensor().sub(&rhs).norm() < 1e-10);
        }
    }
}

#[test]
fn matvec_matches_dense_all_splits() {
    let mut rng = crate::rng::stream(16, &[]);
    for d in 3..=6 {
        for l in 1..=4 {
            for a in 0..=l {
                let b = l - a;
                let op = UnfoldedHarmonic::new(d, l, a, b).unwrap();
                for _ in 0..10 {
                    let z = unit(&mut rng, d);
                    let v: Vec<f64> = (0..op.cols()).map(|_| rng.sample(StandardNormal)).collect();
                    let m = unfold(harmonic_tensor(&z, l).unwrap().tensor(), a, b).unwrap();
                    let dense = m.matvec(&v);
                    let fast = op.matvec(&z, &v);
                    let err = dense.iter().zip(&fast).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
                    assert!(err < 1e-10, "d={d} l={l} a={a}: {err}");
                }
            }
        }
    }
}

#[test]
fn product_coefficients() {
    let mut rng = crate::rng::stream(17, &[]);
    for (d, p, q) in [(5, 1, 1), (5, 2, 1), (4, 2, 2), (5, 3, 1)] {
        let a = random_traceless(&mut rng, d, p);
        let b = random_traceless(&mut rng, d, q);
        let z = unit(&mut rng, d);
        let hp = harmonic_tensor(&z, p).unwrap();
        let hq = harmonic_tensor(&z, q).unwrap();
        let lhs = a.tensor().dot(hp.tensor()) * b.tensor().dot(hq.tensor());
        let mut rhs = 0.0;
        for j in 0..=p.min(q) {
            let ab = diamond(&a, &b, j).unwrap();
            rhs += product_b_coeff(d, p, q, j).unwrap() * harmonic_eval(&ab, &z).unwrap();
        }
        assert!((lhs - rhs).abs() < 1e-10 * (1.0 + lhs.abs()), "d={d} p={p} q={q}: {lhs} vs {rhs}");
    }
    let r = product_b_coeff(50, 2, 2, 1).unwrap() / product_b_coeff(200, 2, 2, 1).unwrap();
    assert!((0.5..=2.0).contains(&r));
    assert!(product_b_coeff(5, 1, 2, 2).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn harmonic_norm_is_sqrt_n(seed in any::<u64>(), d in 3usize..7, l in 0usize..4) {
        let mut rng = crate::rng::stream(seed, &[]);
        let z = unit(&mut rng, d);
        let h = harmonic_tensor(&z, l).unwrap();
        prop_assert!((h.tensor().norm() - (harmonic_dim(d, l) as f64).sqrt()).abs() < 1e-10);
    }

    #[test]
    fn matvec_linear_in_v(seed in any::<u64>(), d in 3usize..6, l in 1usize..5) {
        let mut rng = crate::rng::stream(seed, &[1]);
        let a = l / 2;
        let op = UnfoldedHarmonic::new(d, l, a, l - a).unwrap();
        let z = unit(&mut rng, d);
        let v: Vec<f64> = (0..op.cols()).map(|_| rng.sample(StandardNormal)).collect();
        let w: Vec<f64> = (0..op.cols()).map(|_| rng.sample(StandardNormal)).collect();
        let vw: Vec<f64> = v.iter().zip(&w).map(|(x, y)| 2.0 * x - y).collect();
        let lhs = op.matvec(&z, &vw);
        let (mv, mw) = (op.matvec(&z, &v), op.matvec(&z, &w));
        for i in 0..lhs.len() {
            prop_assert!((lhs[i] - (2.0 * mv[i] - mw[i])).abs() < 1e-9);
        }
    }
}

//! Back-end, metric and classifier-head checks against brute-force oracles.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use gauss::normal;

use wavespoof_core::gmm::{gmm_fit, gmm_loglik, llr_score, total_loglik, GmmConfig, GmmModel};
use wavespoof_core::metrics::{eer, fuse, min_tdcf, FusionWeights};
use wavespoof_core::wd::{pool, pool_backward, ToyNet};
use wavespoof_core::{Key, Matrix, ScoreSet};

mod gauss {
    use rand::Rng;

    /// Box-Muller standard normal.
    pub fn normal(rng: &mut impl Rng) -> f64 {
        let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
        let u2: f64 = rng.gen();
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    }
}

/// Error rates at every candidate threshold by direct counting.
fn brute_rates(bona: &[f64], spoof: &[f64]) -> Vec<(f64, f64)> {
    let mut t: Vec<f64> = bona.iter().chain(spoof).copied().collect();
    t.sort_by(f64::total_cmp);
    t.dedup();
    let mut thresholds = vec![f64::NEG_INFINITY];
    thresholds.extend(t);
    thresholds.push(f64::INFINITY);
    thresholds
        .iter()
        .map(|&th| {
            let miss = bona.iter().filter(|&&s| s < th).count() as f64 / bona.len() as f64;
            let fa = spoof.iter().filter(|&&s| s >= th).count() as f64 / spoof.len() as f64;
            (miss, fa)
        })
        .collect()
}

fn brute_eer(bona: &[f64], spoof: &[f64]) -> f64 {
    let r = brute_rates(bona, spoof);
    for i in 0..r.len() {
        let d = r[i].0 - r[i].1;
        if d >= 0.0 {
            if d == 0.0 || i == 0 {
                return r[i].0;
            }
            let d0 = r[i - 1].0 - r[i - 1].1;
            let lam = -d0 / (d - d0);
            return r[i - 1].0 + lam * (r[i].0 - r[i - 1].0);
        }
    }
    unreachable!("rejecting everything always misses every bonafide trial")
}

fn brute_tdcf(bona: &[f64], spoof: &[f64], beta: f64) -> f64 {
    brute_rates(bona, spoof).iter().map(|(m, f)| beta * m + f).fold(f64::INFINITY, f64::min) / beta.min(1.0)
}

#[test]
fn metrics_match_brute_force_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..1000 {
        let n = rng.gen_range(10..=200);
        let nb = rng.gen_range(1..n);
        let coarse = rng.gen_bool(0.3);
        let mut draw = |shift: f64| {
            let v = normal(&mut rng) + shift;
            if coarse {
                (v * 2.0).round() / 2.0
            } else {
                v
            }
        };
        let bona: Vec<f64> = (0..nb).map(|_| draw(1.0)).collect();
        let spoof: Vec<f64> = (0..n - nb).map(|_| draw(0.0)).collect();
        let set = ScoreSet::from_classes(&bona, &spoof).unwrap();
        let beta = rng.gen_range(0.1..10.0);
        assert!((eer(&set).unwrap() - brute_eer(&bona, &spoof)).abs() <= 1e-12);
        let t = min_tdcf(&set, beta).unwrap();
        assert!((t - brute_tdcf(&bona, &spoof, beta)).abs() <= 1e-12);
        assert!((0.0..=1.0).contains(&t));
    }
}

#[test]
fn separated_and_inverted_extremes() {
    let sep = ScoreSet::from_classes(&[2.0, 3.0, 4.0], &[-1.0, 0.0, 1.0]).unwrap();
    assert_eq!(eer(&sep).unwrap(), 0.0);
    assert_eq!(min_tdcf(&sep, 2.5).unwrap(), 0.0);
    let inv = ScoreSet::from_classes(&[-1.0, 0.0, 1.0], &[2.0, 3.0, 4.0]).unwrap();
    assert_eq!(eer(&inv).unwrap(), 1.0);
}

#[test]
fn fusion_one_is_a_weighted_average() {
    let ids = ["a", "b", "c", "d"];
    let keys = [Key::Bonafide, Key::Spoof, Key::Spoof, Key::Bonafide];
    let cols = [[1.5, -2.0, 0.25, 3.0], [0.5, 0.0, -4.0, 1.0], [-1.0, 8.0, 2.0, 0.0]];
    let sets: Vec<ScoreSet> = cols
        .iter()
        .map(|c| ScoreSet::from_triples(ids.iter().zip(keys).zip(c).map(|((i, k), s)| (*i, k, *s))).unwrap())
        .collect();
    let fused = fuse(&sets, &FusionWeights::fusion_1()).unwrap();
    for (j, e) in fused.entries().iter().enumerate() {
        assert_eq!(e.utt_id, ids[j]);
        assert_eq!(e.key, keys[j]);
        let want = 0.75 * cols[0][j] + 0.125 * cols[1][j] + 0.125 * cols[2][j];
        assert!((e.score - want).abs() <= 1e-12);
    }
}

fn blob(rng: &mut ChaCha8Rng, n: usize, mean: &[f64], sd: f64) -> Vec<Vec<f64>> {
    (0..n).map(|_| mean.iter().map(|m| m + sd * normal(rng)).collect()).collect()
}

#[test]
fn single_component_recovers_closed_form_mle() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let rows = blob(&mut rng, 300, &[1.0, -2.0, 0.5], 1.7);
    let x = Matrix::from_rows(&rows).unwrap();
    let cfg = GmmConfig { components: 1, ..GmmConfig::default() };
    let fit = gmm_fit(&x, &cfg, 0).unwrap();
    let n = rows.len() as f64;
    for j in 0..3 {
        let mean = rows.iter().map(|r| r[j]).sum::<f64>() / n;
        let var = rows.iter().map(|r| (r[j] - mean).powi(2)).sum::<f64>() / n;
        assert!((fit.model.means[(0, j)] - mean).abs() <= 1e-8);
        assert!((fit.model.variances[(0, j)] - var).abs() <= 1e-8);
    }
    assert!((fit.model.weights[0] - 1.0).abs() <= 1e-12);
}

#[test]
fn em_is_monotone_and_respects_the_floor() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for seed in 0..8u64 {
        let mut rows = blob(&mut rng, 150, &[0.0, 0.0], 1.0);
        rows.extend(blob(&mut rng, 150, &[4.0, 1.0], 0.5));
        rows.extend(blob(&mut rng, 60, &[-3.0, 5.0], 0.2));
        // a dimension with no spread pushes variances onto the floor
        rows.iter_mut().for_each(|r| r.push(7.0));
        let x = Matrix::from_rows(&rows).unwrap();
        let cfg = GmmConfig { components: 1 + seed as usize % 5, ..GmmConfig::default() };
        let fit = gmm_fit(&x, &cfg, seed).unwrap();
        for w in fit.loglik_trace.windows(2) {
            assert!(w[1] - w[0] >= -1e-8, "trace decreased: {:?}", fit.loglik_trace);
        }
        assert!(fit.model.variances.as_slice().iter().all(|&v| v >= cfg.var_floor));
    }
}

#[test]
fn two_clusters_are_recovered() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let mut rows = blob(&mut rng, 400, &[-5.0, 0.0], 1.0);
    rows.extend(blob(&mut rng, 400, &[5.0, 2.0], 1.0));
    let fit = gmm_fit(&Matrix::from_rows(&rows).unwrap(), &GmmConfig { components: 2, ..GmmConfig::default() }, 3).unwrap();
    let mut means: Vec<Vec<f64>> = (0..2).map(|c| fit.model.means.row(c).to_vec()).collect();
    means.sort_by(|a, b| a[0].total_cmp(&b[0]));
    assert!((means[0][0] + 5.0).abs() < 0.2 && means[0][1].abs() < 0.2);
    assert!((means[1][0] - 5.0).abs() < 0.2 && (means[1][1] - 2.0).abs() < 0.2);
    for w in &fit.model.weights {
        assert!((w - 0.5).abs() < 0.02);
    }
}

#[test]
fn loglik_matches_direct_mixture_density() {
    let model = GmmModel::new(
        vec![0.3, 0.7],
        Matrix::from_rows(&[vec![0.0, 1.0], vec![2.0, -1.0]]).unwrap(),
        Matrix::from_rows(&[vec![1.0, 0.5], vec![2.0, 0.25]]).unwrap(),
    )
    .unwrap();
    let x = [0.7, -0.2];
    let mut density = 0.0;
    for c in 0..2 {
        let mut p = model.weights[c];
        for (j, xj) in x.iter().enumerate() {
            let (m, v) = (model.means[(c, j)], model.variances[(c, j)]);
            p *= (-(xj - m) * (xj - m) / (2.0 * v)).exp() / (2.0 * std::f64::consts::PI * v).sqrt();
        }
        density += p;
    }
    assert!((gmm_loglik(&model, &x).unwrap() - density.ln()).abs() < 1e-12);

    let swapped = GmmModel::new(
        vec![0.7, 0.3],
        Matrix::from_rows(&[vec![2.0, -1.0], vec![0.0, 1.0]]).unwrap(),
        Matrix::from_rows(&[vec![2.0, 0.25], vec![1.0, 0.5]]).unwrap(),
    )
    .unwrap();
    assert!((gmm_loglik(&swapped, &x).unwrap() - gmm_loglik(&model, &x).unwrap()).abs() < 1e-12);

    let frames = Matrix::from_rows(&[x.to_vec(), vec![3.0, 0.0], vec![-1.0, 1.0]]).unwrap();
    let other = GmmModel::new(vec![1.0], Matrix::from_rows(&[vec![1.0, 0.0]]).unwrap(), Matrix::from_rows(&[vec![1.0, 1.0]]).unwrap()).unwrap();
    let ab = llr_score(&frames, &model, &other).unwrap();
    assert_eq!(ab, -llr_score(&frames, &other, &model).unwrap());
    let want = (total_loglik(&model, &frames).unwrap() - total_loglik(&other, &frames).unwrap()) / 3.0;
    assert!((ab - want).abs() < 1e-12);
}

#[test]
fn head_gradients_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    let z = Matrix::from_vec(4, 30, (0..120).map(|_| normal(&mut rng)).collect()).unwrap();
    let net = ToyNet::new(8, 6, 2).unwrap();
    for label in [0usize, 1] {
        let pooled = pool(&z).unwrap();
        let fw = net.forward(&pooled.features).unwrap();
        let (grads, d_feat) = net.backward(&fw, label).unwrap();
        let dz = pool_backward(&d_feat, &pooled).unwrap();
        let loss = |net: &ToyNet, z: &Matrix| net.forward(&pool(z).unwrap().features).unwrap().nll(label);
        let h = 1e-6;

        let check = |analytic: f64, plus: f64, minus: f64| {
            let numeric = (plus - minus) / (2.0 * h);
            assert!((analytic - numeric).abs() <= 1e-6 * (1.0 + numeric.abs()), "{analytic} vs {numeric}");
        };
        for idx in [0usize, 5, 17, 40] {
            let (mut p, mut m) = (net.clone(), net.clone());
            p.w1.as_mut_slice()[idx] += h;
            m.w1.as_mut_slice()[idx] -= h;
            check(grads.w1.as_slice()[idx], loss(&p, &z), loss(&m, &z));
        }
        for idx in 0..6 {
            let (mut p, mut m) = (net.clone(), net.clone());
            p.b1[idx] += h;
            m.b1[idx] -= h;
            check(grads.b1[idx], loss(&p, &z), loss(&m, &z));
        }
        for idx in 0..12 {
            let (mut p, mut m) = (net.clone(), net.clone());
            p.w2.as_mut_slice()[idx] += h;
            m.w2.as_mut_slice()[idx] -= h;
            check(grads.w2.as_slice()[idx], loss(&p, &z), loss(&m, &z));
        }
        for idx in [0usize, 31, 77, 119] {
            let (mut p, mut m) = (z.clone(), z.clone());
            p.as_mut_slice()[idx] += h;
            m.as_mut_slice()[idx] -= h;
            check(dz.as_slice()[idx], loss(&net, &p), loss(&net, &m));
        }
    }
}

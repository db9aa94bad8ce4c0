//! Front-end transforms checked against slow, direct re-implementations.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use wavespoof_core::cwt::{cwt_scales, mexican_hat_center_frequency, scale_grid, KernelRule};
use wavespoof_core::fft::rfft;
use wavespoof_core::mwpc::{mwpc_mel_features, subband_mel_matrix, MwpcConfig};
use wavespoof_core::signal::{dct2, power_spectrum, Waveform};
use wavespoof_core::wd::{wd_backward, wd_forward, ScaleVector};
use wavespoof_core::wpt::{wpt, Wavelet, DB4_LOWPASS};
use wavespoof_core::Matrix;

fn noise(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

fn naive_dft(x: &[f64], n: usize) -> Vec<Complex64> {
    (0..n)
        .map(|k| {
            x.iter().enumerate().fold(Complex64::new(0.0, 0.0), |acc, (t, &v)| {
                acc + v * Complex64::from_polar(1.0, -2.0 * PI * (k * t) as f64 / n as f64)
            })
        })
        .collect()
}

#[test]
fn fft_matches_direct_dft() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for n in [1usize, 2, 4, 16, 64, 512] {
        let x = noise(&mut rng, n.min(400));
        let fast = rfft(&x, n).unwrap();
        let slow = naive_dft(&x, n);
        for (a, b) in fast.iter().zip(&slow) {
            assert!((a - b).norm() < 1e-9 * n as f64, "n={n}");
        }
    }
}

#[test]
fn power_spectrum_satisfies_parseval() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for (len, nfft) in [(400usize, 512usize), (256, 256), (100, 1024)] {
        let x = noise(&mut rng, len);
        let p = power_spectrum(&x, nfft).unwrap();
        assert_eq!(p.len(), nfft / 2 + 1);
        // mirror the one-sided spectrum back to all nfft bins
        let full: f64 = p[0] + p[nfft / 2] + 2.0 * p[1..nfft / 2].iter().sum::<f64>();
        let energy: f64 = x.iter().map(|v| v * v).sum();
        assert!((full - energy).abs() <= 1e-8 * energy, "{full} vs {energy}");
    }
}

#[test]
fn dct_matches_cosine_sum() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for n in [1usize, 5, 20, 33] {
        let v = noise(&mut rng, n);
        let got = dct2(&v, n).unwrap();
        for (k, g) in got.iter().enumerate() {
            let scale = if k == 0 { (1.0 / n as f64).sqrt() } else { (2.0 / n as f64).sqrt() };
            let want: f64 = scale
                * v.iter()
                    .enumerate()
                    .map(|(i, x)| x * (PI * k as f64 * (2 * i + 1) as f64 / (2 * n) as f64).cos())
                    .sum::<f64>();
            assert!((g - want).abs() < 1e-12);
        }
    }
}

fn hat(u: f64) -> f64 {
    2.0 / (PI.powf(0.25) * 3f64.sqrt()) * (u * u - 1.0) * (-u * u).exp()
}

/// `out[m] = (1/√s) Σ_n ψ((n − m)/s)·x[n]` over `|n − m| ≤ h`.
fn cwt_oracle(x: &[f64], s: f64, h: i64) -> Vec<f64> {
    let n = x.len() as i64;
    (0..n)
        .map(|m| {
            let mut acc = 0.0;
            for i in 0..n {
                if (i - m).abs() <= h {
                    acc += hat((i - m) as f64 / s) / s.sqrt() * x[i as usize];
                }
            }
            acc
        })
        .collect()
}

/// `z[j] = Σ_t 2/(π^{1/4}√(3s))·(t²/s² − 1)·e^{−t²/s²}·x[j + t]`.
fn wd_oracle(x: &[f64], s: f64, k: usize) -> Vec<f64> {
    let h = ((k - 1) / 2) as i64;
    let n = x.len() as i64;
    let a = 2.0 / (PI.powf(0.25) * (3.0 * s).sqrt());
    (0..n)
        .map(|j| {
            let mut acc = 0.0;
            for t in -h..=h {
                if j + t >= 0 && j + t < n {
                    let u = (t * t) as f64 / (s * s);
                    acc += a * (u - 1.0) * (-u).exp() * x[(j + t) as usize];
                }
            }
            acc
        })
        .collect()
}

#[test]
fn cwt_and_wd_match_double_loop() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for trial in 0..20 {
        let len = rng.gen_range(64..=256);
        let x = noise(&mut rng, len);
        let scales = [1.0, 2.0, 4.0, rng.gen_range(0.5..10.0)];
        let sg = cwt_scales(&x, &scales, KernelRule::default()).unwrap();
        for (i, &s) in scales.iter().enumerate() {
            let want = cwt_oracle(&x, s, (5.0 * s).ceil() as i64);
            for (a, b) in sg.coeffs.row(i).iter().zip(&want) {
                assert!((a - b).abs() <= 1e-12, "cwt trial {trial} scale {s}");
            }
        }
        let k = [33usize, 65, 251][trial % 3];
        let sv = ScaleVector::with_default_bounds(scales.to_vec()).unwrap();
        let z = wd_forward(&x, &sv, k).unwrap();
        for (i, &s) in scales.iter().enumerate() {
            let want = wd_oracle(&x, s, k);
            for (a, b) in z.z.row(i).iter().zip(&want) {
                assert!((a - b).abs() <= 1e-12, "wd trial {trial} scale {s}");
            }
        }
    }
}

#[test]
fn wd_rows_are_fixed_multiples_of_cwt_rows() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let x = noise(&mut rng, 300);
    let grid = scale_grid(1.0, 1.0, 8, 1.0).unwrap();
    let k = 101;
    let cwt = cwt_scales(&x, &grid.scales, KernelRule::Fixed(k)).unwrap();
    let wd = wd_forward(&x, &ScaleVector::with_default_bounds(grid.scales.clone()).unwrap(), k).unwrap();
    for i in 0..grid.len() {
        let (a, b) = (cwt.coeffs.row(i), wd.z.row(i));
        let j = (0..a.len()).max_by(|&p, &q| a[p].abs().total_cmp(&a[q].abs())).unwrap();
        let ratio = b[j] / a[j];
        for (p, q) in a.iter().zip(b) {
            assert!((q - ratio * p).abs() <= 1e-10 * (1.0 + p.abs()), "scale {}", grid.scales[i]);
        }
        assert!((ratio - 1.0).abs() < 1e-12);
    }
}

#[test]
fn pure_tone_peaks_at_matching_scale() {
    let fs = 16_000.0;
    let fc = mexican_hat_center_frequency();
    let grid = scale_grid(1.0, 0.25, 4000, 0.1).unwrap();
    for f0 in [500.0, 1200.0, 3000.0] {
        let x: Vec<f64> = (0..4000).map(|n| (2.0 * PI * f0 * n as f64 / fs).sin()).collect();
        let target = grid.nearest(fc * fs / f0);

        let energy: Vec<f64> = {
            let sg = cwt_scales(&x, &grid.scales, KernelRule::default()).unwrap();
            sg.coeffs.iter_rows().map(|r| r[400..3600].iter().map(|v| v * v).sum()).collect()
        };
        let argmax = (0..energy.len()).max_by(|&a, &b| energy[a].total_cmp(&energy[b])).unwrap();
        assert_eq!(argmax, target, "cwt f0={f0}");

        let sv = ScaleVector::with_default_bounds(grid.scales.clone()).unwrap();
        let z = wd_forward(&x, &sv, 251).unwrap();
        let act: Vec<f64> = z.z.iter_rows().map(|r| r[400..3600].iter().map(|v| v.abs()).sum()).collect();
        let argmax = (0..act.len()).max_by(|&a, &b| act[a].total_cmp(&act[b])).unwrap();
        assert_eq!(argmax, target, "wd f0={f0}");
    }
}

#[test]
fn wd_gradient_matches_central_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst: f64 = 0.0;
    for trial in 0..100 {
        let k = [33usize, 65, 251][trial % 3];
        let x = noise(&mut rng, 512);
        let s = (rng.gen_range(0.5f64.ln()..128f64.ln())).exp();
        let dz = Matrix::from_vec(1, 512, noise(&mut rng, 512)).unwrap();
        let loss = |s: f64| -> f64 {
            let z = wd_forward(&x, &ScaleVector::with_default_bounds(vec![s]).unwrap(), k).unwrap();
            z.z.row(0).iter().zip(dz.row(0)).map(|(a, b)| a * b).sum()
        };
        let analytic = wd_backward(&x, &ScaleVector::with_default_bounds(vec![s]).unwrap(), &dz, k).unwrap()[0];
        let h = 1e-5 * s;
        let numeric = (loss(s + h) - loss(s - h)) / (2.0 * h);
        let rel = (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-300);
        worst = worst.max(rel);
    }
    assert!(worst <= 1e-5, "max relative error {worst}");
}

/// Periodized filter-and-downsample.
fn split(x: &[f64], f: &[f64]) -> Vec<f64> {
    let n = x.len();
    (0..n / 2).map(|k| f.iter().enumerate().map(|(i, h)| h * x[(2 * k + i) % n]).sum()).collect()
}

/// Packet tree in frequency order: the branch order flips under every node
/// that itself sits at an odd frequency position.
fn packet_oracle(x: &[f64], level: usize) -> Vec<Vec<f64>> {
    let h = DB4_LOWPASS.to_vec();
    let g: Vec<f64> = (0..8).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 } * h[7 - i]).collect();
    let mut nodes = vec![x.to_vec()];
    for _ in 0..level {
        let mut next = Vec::new();
        for (pos, node) in nodes.iter().enumerate() {
            let (lo, hi) = (split(node, &h), split(node, &g));
            if pos % 2 == 0 {
                next.push(lo);
                next.push(hi);
            } else {
                next.push(hi);
                next.push(lo);
            }
        }
        nodes = next;
    }
    nodes
}

#[test]
fn wavelet_packets_match_recursive_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for len in [16usize, 64, 400] {
        let x = noise(&mut rng, len);
        let tree = wpt(&x, Wavelet::Db4, 4).unwrap();
        let mut padded = x.clone();
        padded.resize(len.div_ceil(16) * 16, 0.0);
        let want = packet_oracle(&padded, 4);
        assert_eq!(tree.leaf_coeffs.len(), 16);
        for (a, b) in tree.leaf_coeffs.iter().zip(&want) {
            assert_eq!(a.len(), b.len());
            for (p, q) in a.iter().zip(b) {
                assert!((p - q).abs() < 1e-12);
            }
        }
        let e_in: f64 = padded.iter().map(|v| v * v).sum();
        let e_out: f64 = tree.leaf_energies().iter().sum();
        assert!((e_in - e_out).abs() <= 1e-8 * e_in);
    }
}

fn mel(f: f64) -> f64 {
    2595.0 * (1.0 + f / 700.0).log10()
}

fn inv_mel(m: f64) -> f64 {
    700.0 * (10f64.powf(m / 2595.0) - 1.0)
}

#[test]
fn mwpc_matches_straight_line_pipeline() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let fs = 16_000u32;
    let x = noise(&mut rng, 4000);
    let cfg = MwpcConfig::default();
    let got = mwpc_mel_features(&Waveform::new(x.clone(), fs).unwrap(), &cfg).unwrap();

    let mut e = vec![x[0]];
    e.extend((1..x.len()).map(|i| x[i] - 0.97 * x[i - 1]));
    let (len, hop) = (400usize, 160usize);
    let n_frames = 1 + (e.len() - len) / hop;
    assert_eq!(got.rows(), n_frames);

    let edges: Vec<f64> = (0..22).map(|i| inv_mel(mel(8000.0) * i as f64 / 21.0)).collect();
    let tri = |f: f64, lo: f64, mid: f64, hi: f64| {
        if f < lo || f > hi {
            0.0
        } else if f <= mid {
            (f - lo) / (mid - lo)
        } else {
            (hi - f) / (hi - mid)
        }
    };
    let weights = subband_mel_matrix(20, 4, fs).unwrap();
    for m in 0..20 {
        for b in 0..16 {
            let center = (b as f64 + 0.5) * 500.0;
            assert!((weights[(m, b)] - tri(center, edges[m], edges[m + 1], edges[m + 2])).abs() < 1e-12);
        }
    }

    for r in 0..n_frames {
        let frame: Vec<f64> = (0..len)
            .map(|t| e[r * hop + t] * (0.54 - 0.46 * (2.0 * PI * t as f64 / (len - 1) as f64).cos()))
            .collect();
        let mut psi: Vec<f64> = (0..len)
            .map(|t| if t == 0 || t == len - 1 { 0.0 } else { frame[t] * frame[t] - frame[t - 1] * frame[t + 1] })
            .collect();
        psi[0] = psi[1];
        psi[len - 1] = psi[len - 2];
        psi.resize(400, 0.0);
        let leaves = packet_oracle(&psi, 4);
        let log_e: Vec<f64> = leaves.iter().map(|l| (l.iter().map(|v| v * v).sum::<f64>() + 1e-10).ln()).collect();
        for m in 0..20 {
            let want: f64 = (0..16).map(|b| tri((b as f64 + 0.5) * 500.0, edges[m], edges[m + 1], edges[m + 2]) * log_e[b]).sum();
            assert!((got[(r, m)] - want).abs() < 1e-9 * (1.0 + want.abs()), "frame {r} filter {m}");
        }
    }
}

//! In-place radix-2 FFT.

use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;

use crate::{Error, Result};

/// Forward DFT, `X[k] = Σ_n x[n]·e^{-2πikn/N}`. Length must be a power of two.
pub fn fft_in_place(buf: &mut [Complex64]) -> Result<()> {
    transform(buf, false)
}

/// Inverse DFT including the `1/N` factor.
pub fn ifft_in_place(buf: &mut [Complex64]) -> Result<()> {
    transform(buf, true)?;
    let n = buf.len() as f64;
    buf.iter_mut().for_each(|v| *v /= n);
    Ok(())
}

/// Forward DFT of a real sequence zero-padded to `n`.
pub fn rfft(x: &[f64], n: usize) -> Result<Vec<Complex64>> {
    if x.len() > n {
        return Err(Error::param("nfft", "frame longer than transform size"));
    }
    let mut buf: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    buf.resize(n, Complex64::new(0.0, 0.0));
    fft_in_place(&mut buf)?;
    Ok(buf)
}

fn transform(buf: &mut [Complex64], inverse: bool) -> Result<()> {
    let n = buf.len();
    if n == 0 || !n.is_power_of_two() {
        return Err(Error::param("nfft", "transform length must be a nonzero power of two"));
    }
    let bits = n.trailing_zeros();
    if bits > 0 {
        for i in 0..n {
            let j = i.reverse_bits() >> (usize::BITS - bits);
            if j > i {
                buf.swap(i, j);
            }
        }
    }
    let sign = if inverse { 1.0 } else { -1.0 };
    let mut len = 2;
    while len <= n {
        let ang = sign * 2.0 * PI / len as f64;
        let half = len / 2;
        // twiddles computed directly per index to avoid recurrence drift
        let tw: Vec<Complex64> =
            (0..half).map(|k| Complex64::new(libm::cos(ang * k as f64), libm::sin(ang * k as f64))).collect();
        for start in (0..n).step_by(len) {
            for k in 0..half {
                let a = buf[start + k];
                let b = buf[start + k + half] * tw[k];
                buf[start + k] = a + b;
                buf[start + k + half] = a - b;
            }
        }
        len <<= 1;
    }
    Ok(())
}

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::real::Real;

/// DFT of `samples` at one pulsation, `X(w) = sum_n x[n] e^{-j w n dt}`, by the Goertzel
/// recurrence.
pub fn goertzel<T: Real>(samples: &[T], pulsation: T, sample_rate: T) -> Complex<T> {
    let w = pulsation / sample_rate;
    let coeff = T::lit(2.0) * w.cos();
    let (mut s1, mut s2) = (T::zero(), T::zero());
    for x in samples {
        let s0 = *x + coeff * s1 - s2;
        s2 = s1;
        s1 = s0;
    }
    // y = s[N-1] - e^{-jw} s[N-2] equals e^{jw(N-1)} X(w)
    let (sin, cos) = w.sin_cos();
    let y = Complex::new(s1 - cos * s2, sin * s2);
    let n = T::count(samples.len().saturating_sub(1));
    let (sn, cn) = (w * n).sin_cos();
    y * Complex::new(cn, -sn)
}

/// Amplitude `2 |X(w)| / N`: a sinusoid of amplitude `A` on a DFT bin returns `A`.
pub fn goertzel_magnitude<T: Real>(samples: &[T], pulsation: T, sample_rate: T, window: usize) -> Result<T> {
    if samples.len() < window || window == 0 {
        return Err(Error::WindowNotFull {
            have: samples.len(),
            need: window,
        });
    }
    let nyquist = T::pi() * sample_rate;
    if pulsation >= nyquist {
        return Err(Error::AboveNyquist {
            pulsation: pulsation.as_f64(),
            nyquist: nyquist.as_f64(),
        });
    }
    let tail = &samples[samples.len() - window..];
    Ok(amplitude(goertzel(tail, pulsation, sample_rate).norm_sqr().sqrt(), window))
}

#[inline]
pub(crate) fn amplitude<T: Real>(dft_norm: T, n: usize) -> T {
    dft_norm * T::lit(2.0) / T::count(n)
}

/// Direct evaluation of the same DFT sum, used as a reference.
pub fn dense_dft<T: Real>(samples: &[T], pulsation: T, sample_rate: T) -> Complex<T> {
    let w = pulsation / sample_rate;
    samples.iter().enumerate().fold(Complex::new(T::zero(), T::zero()), |acc, (n, x)| {
        let (s, c) = (w * T::count(n)).sin_cos();
        acc + Complex::new(c, -s) * *x
    })
}

//! FFT helpers shared by the encoder, the filter network and the DSP chain.

use num_complex::Complex64;
use rustfft::FftPlanner;

pub fn fft_in_place(x: &mut [Complex64]) {
    if x.is_empty() {
        return;
    }
    FftPlanner::new().plan_fft_forward(x.len()).process(x);
}

/// Inverse FFT including the `1/N` normalisation.
pub fn ifft_in_place(x: &mut [Complex64]) {
    if x.is_empty() {
        return;
    }
    let n = x.len();
    FftPlanner::new().plan_fft_inverse(n).process(x);
    let s = 1.0 / n as f64;
    for v in x.iter_mut() {
        *v *= s;
    }
}

/// Signed frequency of FFT bin `k` for an `n`-point transform.
pub fn bin_frequency(k: usize, n: usize, rate: f64) -> f64 {
    let k = if k <= n / 2 { k as f64 } else { k as f64 - n as f64 };
    k * rate / n as f64
}

/// Applies a frequency response `h(f)` to `x` by a full-length FFT.
///
/// This is a circular operation; callers pad the record where wrap-around
/// matters.
pub fn apply_response<F>(x: &[Complex64], rate: f64, h: F) -> Vec<Complex64>
where
    F: Fn(f64) -> Complex64,
{
    let n = x.len();
    let mut buf = x.to_vec();
    fft_in_place(&mut buf);
    for (k, v) in buf.iter_mut().enumerate() {
        *v *= h(bin_frequency(k, n, rate));
    }
    ifft_in_place(&mut buf);
    buf
}

/// Linear convolution of `x` with an odd-length kernel centred on its middle
/// tap, truncated to the length of `x` ("same" mode, zero phase for symmetric
/// kernels).
pub fn convolve_same(x: &[Complex64], kernel: &[Complex64]) -> Vec<Complex64> {
    if x.is_empty() || kernel.is_empty() {
        return x.to_vec();
    }
    let m = kernel.len();
    let n = (x.len() + m - 1).next_power_of_two();
    let mut a = vec![Complex64::new(0.0, 0.0); n];
    a[..x.len()].copy_from_slice(x);
    let mut b = vec![Complex64::new(0.0, 0.0); n];
    b[..m].copy_from_slice(kernel);
    fft_in_place(&mut a);
    fft_in_place(&mut b);
    for (u, v) in a.iter_mut().zip(&b) {
        *u *= v;
    }
    ifft_in_place(&mut a);
    let off = (m - 1) / 2;
    a[off..off + x.len()].to_vec()
}

/// Real-valued counterpart of [`convolve_same`].
pub fn convolve_same_real(x: &[f64], kernel: &[f64]) -> Vec<f64> {
    if x.len() < 64 || kernel.len() < 16 {
        return direct_same(x, kernel);
    }
    let xc: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    let kc: Vec<Complex64> = kernel.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    convolve_same(&xc, &kc).into_iter().map(|c| c.re).collect()
}

fn direct_same(x: &[f64], kernel: &[f64]) -> Vec<f64> {
    let m = kernel.len();
    let off = (m as isize - 1) / 2;
    (0..x.len() as isize)
        .map(|i| {
            let mut acc = 0.0;
            for (j, &k) in kernel.iter().enumerate() {
                let idx = i + off - j as isize;
                if idx >= 0 && (idx as usize) < x.len() {
                    acc += k * x[idx as usize];
                }
            }
            acc
        })
        .collect()
}

/// Total energy `Σ|x|²`.
pub fn energy(x: &[Complex64]) -> f64 {
    x.iter().map(|v| v.norm_sqr()).sum()
}

/// Energy of `x` inside the frequency interval `[lo, hi]` (Parseval, so the
/// sum over all bins equals [`energy`]).
pub fn band_energy(x: &[Complex64], rate: f64, lo: f64, hi: f64) -> f64 {
    let n = x.len();
    let mut buf = x.to_vec();
    fft_in_place(&mut buf);
    buf.iter()
        .enumerate()
        .filter(|(k, _)| {
            let f = bin_frequency(*k, n, rate);
            f >= lo && f <= hi
        })
        .map(|(_, v)| v.norm_sqr())
        .sum::<f64>()
        / n as f64
}

/// Wraps an angle into `(-π, π]`.
pub fn wrap_phase(x: f64) -> f64 {
    use std::f64::consts::PI;
    let mut y = x.rem_euclid(2.0 * PI);
    if y > PI {
        y -= 2.0 * PI;
    }
    y
}

/// Unwraps a sequence of angles so that adjacent samples differ by at most π.
pub fn unwrap(phases: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(phases.len());
    let mut offset = 0.0;
    let mut prev: Option<f64> = None;
    for &p in phases {
        if let Some(q) = prev {
            offset += wrap_phase(p - q) - (p - q);
        }
        out.push(p + offset);
        prev = Some(p);
    }
    out
}

/// Least-squares straight line `a + b·i` through `y`, returned as `(a, b)`.
pub fn linear_fit(y: &[f64]) -> (f64, f64) {
    let n = y.len() as f64;
    if y.len() < 2 {
        return (y.first().copied().unwrap_or(0.0), 0.0);
    }
    let mx = (n - 1.0) / 2.0;
    let my = y.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    for (i, &v) in y.iter().enumerate() {
        let dx = i as f64 - mx;
        sxy += dx * (v - my);
        sxx += dx * dx;
    }
    let b = sxy / sxx;
    (my - b * mx, b)
}

/// Zeroth-order modified Bessel function of the first kind (power series).
pub fn bessel_i0(x: f64) -> f64 {
    let mut sum = 1.0;
    let mut term = 1.0;
    let q = x * x / 4.0;
    for k in 1..500 {
        term *= q / (k as f64 * k as f64);
        sum += term;
        if term < sum * 1e-17 {
            break;
        }
    }
    sum
}

/// Kaiser window of length `n` with shape parameter `beta`.
pub fn kaiser_window(n: usize, beta: f64) -> Vec<f64> {
    if n == 1 {
        return vec![1.0];
    }
    let d = bessel_i0(beta);
    (0..n)
        .map(|i| {
            let r = 2.0 * i as f64 / (n - 1) as f64 - 1.0;
            bessel_i0(beta * (1.0 - r * r).max(0.0).sqrt()) / d
        })
        .collect()
}

/// Windowed-sinc low-pass kernel, cutoff `fc` (Hz), unity DC gain.
pub fn lowpass_kernel(taps: usize, fc: f64, rate: f64, window: &[f64]) -> Vec<f64> {
    let m = (taps - 1) as f64 / 2.0;
    let wc = fc / rate;
    let mut h: Vec<f64> = (0..taps)
        .map(|i| {
            let x = i as f64 - m;
            let s = if x == 0.0 {
                2.0 * wc
            } else {
                (2.0 * std::f64::consts::PI * wc * x).sin() / (std::f64::consts::PI * x)
            };
            s * window[i]
        })
        .collect();
    let g: f64 = h.iter().sum();
    for v in h.iter_mut() {
        *v /= g;
    }
    h
}

/// Kaiser design rule: `(beta, taps)` for a given stopband attenuation (dB)
/// and transition width (Hz). Taps are forced odd.
pub fn kaiser_design(atten_db: f64, transition: f64, rate: f64) -> (f64, usize) {
    let beta = if atten_db > 50.0 {
        0.1102 * (atten_db - 8.7)
    } else if atten_db >= 21.0 {
        0.5842 * (atten_db - 21.0).powf(0.4) + 0.07886 * (atten_db - 21.0)
    } else {
        0.0
    };
    let dw = 2.0 * std::f64::consts::PI * transition / rate;
    let mut n = ((atten_db - 7.95) / (2.285 * dw)).ceil() as usize + 1;
    if n % 2 == 0 {
        n += 1;
    }
    (beta, n.max(3))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn fft_roundtrip() {
        let x: Vec<Complex64> = (0..37).map(|i| Complex64::new(i as f64, -(i as f64).sin())).collect();
        let mut y = x.clone();
        fft_in_place(&mut y);
        ifft_in_place(&mut y);
        for (a, b) in x.iter().zip(&y) {
            assert!((a - b).norm() < 1e-10);
        }
    }

    #[test]
    fn convolution_matches_direct_sum() {
        let x: Vec<f64> = (0..300).map(|i| ((i * 7) % 13) as f64 - 6.0).collect();
        let k: Vec<f64> = (0..31).map(|i| 1.0 / (1.0 + i as f64)).collect();
        let fast = convolve_same_real(&x, &k);
        let slow = direct_same(&x, &k);
        for (a, b) in fast.iter().zip(&slow) {
            assert_relative_eq!(a, b, epsilon = 1e-9);
        }
    }

    #[test]
    fn delta_kernel_is_identity() {
        let x: Vec<Complex64> = (0..10).map(|i| c(i as f64)).collect();
        let y = convolve_same(&x, &[c(0.0), c(1.0), c(0.0)]);
        for (a, b) in x.iter().zip(&y) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn band_energy_sums_to_total() {
        let x: Vec<Complex64> = (0..64).map(|i| Complex64::from_polar(1.0, 0.3 * i as f64)).collect();
        let all = band_energy(&x, 64.0, -1e9, 1e9);
        assert_relative_eq!(all, energy(&x), max_relative = 1e-12);
    }

    #[test]
    fn linear_fit_recovers_line() {
        let y: Vec<f64> = (0..50).map(|i| 2.0 - 0.25 * i as f64).collect();
        let (a, b) = linear_fit(&y);
        assert_relative_eq!(a, 2.0, epsilon = 1e-12);
        assert_relative_eq!(b, -0.25, epsilon = 1e-12);
    }

    #[test]
    fn bessel_reference_values() {
        // I0(1) and I0(5) from standard tables
        assert_relative_eq!(bessel_i0(1.0), 1.266_065_877_752_008_4, max_relative = 1e-14);
        assert_relative_eq!(bessel_i0(5.0), 27.239_871_823_604_44, max_relative = 1e-13);
    }

    proptest! {
        #[test]
        fn unwrap_never_jumps_more_than_pi(v in proptest::collection::vec(-10.0f64..10.0, 2..200)) {
            let w: Vec<f64> = v.iter().map(|&x| wrap_phase(x)).collect();
            let u = unwrap(&w);
            for pair in u.windows(2) {
                prop_assert!((pair[1] - pair[0]).abs() <= std::f64::consts::PI + 1e-12);
            }
            for (a, b) in u.iter().zip(&w) {
                prop_assert!(wrap_phase(a - b).abs() < 1e-9);
            }
        }
    }
}

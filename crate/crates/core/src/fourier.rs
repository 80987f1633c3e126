//! FFT helpers with the conventions used everywhere in the crate:
//! `c_m = (1/P) sum_j u_j e^{-2 pi i m j / P}` and `u_j = sum_m c_m e^{2 pi i m j / P}`
//! with `m` in the centred range `[-floor(P/2), ceil(P/2) - 1]`.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

pub type C64 = Complex64;

pub const I: C64 = C64::new(0.0, 1.0);

#[derive(Clone)]
pub struct Transform {
    len: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Transform {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Transform").field("len", &self.len).finish()
    }
}

impl Transform {
    pub fn new(len: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self { len, forward: planner.plan_fft_forward(len), inverse: planner.plan_fft_inverse(len) }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Samples to normalized coefficients (DFT order, in place).
    pub fn analyze(&self, buf: &mut [C64]) {
        self.forward.process(buf);
        let s = 1.0 / self.len as f64;
        for z in buf.iter_mut() {
            *z *= s;
        }
    }

    /// Coefficients (DFT order) to samples, in place.
    pub fn synthesize(&self, buf: &mut [C64]) {
        self.inverse.process(buf);
    }

    /// Strided variant: transform every component of point-major data `data[j * n + comp]`.
    pub fn analyze_components(&self, data: &[C64], n: usize) -> Vec<Vec<C64>> {
        (0..n)
            .map(|comp| {
                let mut buf: Vec<C64> = (0..self.len).map(|j| data[j * n + comp]).collect();
                self.analyze(&mut buf);
                buf
            })
            .collect()
    }
}

/// Centred mode number of DFT slot `idx` for a transform of length `len`.
#[inline]
pub fn mode_of_slot(idx: usize, len: usize) -> i64 {
    let half = len.div_ceil(2);
    if idx < half {
        idx as i64
    } else {
        idx as i64 - len as i64
    }
}

/// DFT slot of centred mode `m`; `m` must lie in the centred range.
#[inline]
pub fn slot_of_mode(m: i64, len: usize) -> usize {
    m.rem_euclid(len as i64) as usize
}

/// Centred mode range `[lo, hi]` of a length-`len` transform.
pub fn mode_range(len: usize) -> (i64, i64) {
    let lo = -((len / 2) as i64);
    (lo, lo + len as i64 - 1)
}

/// Evaluate the trigonometric polynomial with centred coefficients `c[l + m]`, `l in [-m, m]`,
/// at period-1 points, returning `sum_l (2 pi i l)^deriv c_l e^{2 pi i l x}`.
pub fn eval_series(coeffs: &[C64], x: f64, deriv: u32) -> C64 {
    let m = (coeffs.len() / 2) as i64;
    let w = 2.0 * std::f64::consts::PI;
    let base = C64::from_polar(1.0, w * x);
    let factor = |l: i64| (I * (w * l as f64)).powu(deriv);
    let mut acc = coeffs[m as usize] * factor(0);
    // direct recurrence for e^{2 pi i l x}; accurate for the few hundred modes used here
    let mut pos = C64::new(1.0, 0.0);
    let mut neg = C64::new(1.0, 0.0);
    for l in 1..=m {
        pos *= base;
        neg *= base.conj();
        acc += coeffs[(m + l) as usize] * factor(l) * pos;
        acc += coeffs[(m - l) as usize] * factor(-l) * neg;
    }
    acc
}

/// Samples of a real-valued trigonometric polynomial (centred coefficients) on `p` equispaced points.
pub fn sample_series(coeffs: &[C64], p: usize, deriv: u32, plan: &Transform) -> Vec<f64> {
    debug_assert_eq!(plan.len(), p);
    let m = (coeffs.len() / 2) as i64;
    assert!(2 * m < p as i64, "grid of {p} points cannot hold modes |l| <= {m}");
    let w = 2.0 * std::f64::consts::PI;
    let mut buf = vec![C64::new(0.0, 0.0); p];
    for l in -m..=m {
        let factor = if deriv == 0 { C64::new(1.0, 0.0) } else { (I * (w * l as f64)).powu(deriv) };
        buf[slot_of_mode(l, p)] = coeffs[(l + m) as usize] * factor;
    }
    plan.synthesize(&mut buf);
    buf.into_iter().map(|z| z.re).collect()
}

/// Centred coefficients `|l| <= m` from `p` real samples.
pub fn coefficients_of(samples: &[f64], m: usize, plan: &Transform) -> Vec<C64> {
    let p = samples.len();
    debug_assert_eq!(plan.len(), p);
    let mut buf: Vec<C64> = samples.iter().map(|&x| C64::new(x, 0.0)).collect();
    plan.analyze(&mut buf);
    let m = m as i64;
    (-m..=m).map(|l| buf[slot_of_mode(l, p)]).collect()
}

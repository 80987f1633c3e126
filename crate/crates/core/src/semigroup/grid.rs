use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fourier::{mode_range, slot_of_mode, Transform, C64, I};
use crate::profile::WaveProfile;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Samples of an `N`-periodic, `n`-component function on `x_j = j / m_x`, stored point-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridFunction {
    pub n_periods: usize,
    pub m_x: usize,
    pub n: usize,
    pub values: Vec<C64>,
}

impl GridFunction {
    pub fn zeros(n_periods: usize, m_x: usize, n: usize) -> Self {
        Self { n_periods, m_x, n, values: vec![C64::new(0.0, 0.0); n_periods * m_x * n] }
    }

    pub fn from_fn(n_periods: usize, m_x: usize, n: usize, f: impl Fn(f64, usize) -> C64) -> Self {
        let p = n_periods * m_x;
        let mut values = Vec::with_capacity(p * n);
        for j in 0..p {
            let x = j as f64 / m_x as f64;
            for comp in 0..n {
                values.push(f(x, comp));
            }
        }
        Self { n_periods, m_x, n, values }
    }

    pub fn from_real(n_periods: usize, m_x: usize, n: usize, values: &[f64]) -> Result<Self> {
        if values.len() != n_periods * m_x * n {
            return Err(Error::DimensionMismatch { expected: n_periods * m_x * n, got: values.len() });
        }
        Ok(Self { n_periods, m_x, n, values: values.iter().map(|&v| C64::new(v, 0.0)).collect() })
    }

    /// `d^deriv phi` sampled on the grid.
    pub fn from_profile(profile: &WaveProfile, n_periods: usize, m_x: usize, deriv: u32) -> Self {
        let p = n_periods * m_x;
        let n = profile.n();
        let plan = Transform::new(p);
        let mut values = vec![C64::new(0.0, 0.0); p * n];
        let d = profile.derivative_coeffs(deriv);
        let (lo, hi) = mode_range(p);
        let m = profile.m_f as i64;
        for (comp, coeffs) in d.iter().enumerate() {
            let mut buf = vec![C64::new(0.0, 0.0); p];
            for l in -m..=m {
                let mode = l * n_periods as i64;
                if mode < lo || mode > hi {
                    continue;
                }
                buf[slot_of_mode(mode, p)] += coeffs[(l + m) as usize];
            }
            plan.synthesize(&mut buf);
            for j in 0..p {
                values[j * n + comp] = C64::new(buf[j].re, 0.0);
            }
        }
        Self { n_periods, m_x, n, values }
    }

    /// Random band-limited field (unit-cell frequencies up to `band`) under a Gaussian envelope
    /// of width `width` centred at `x = N / 2`.
    pub fn localized_random(n_periods: usize, m_x: usize, n: usize, band: f64, width: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = n_periods * m_x;
        let (lo, hi) = mode_range(p);
        let max_mode = ((band * n_periods as f64).floor() as i64).min(hi).min(-lo - 1).max(0);
        let mut coeffs = vec![vec![C64::new(0.0, 0.0); p]; n];
        for c in coeffs.iter_mut() {
            c[0] = C64::new(rng.sample(StandardNormal), 0.0);
            for m in 1..=max_mode {
                let z = C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)) * std::f64::consts::FRAC_1_SQRT_2;
                c[slot_of_mode(m, p)] = z;
                c[slot_of_mode(-m, p)] = z.conj();
            }
        }
        let raw = Self::from_coefficients(n_periods, m_x, &coeffs);
        let centre = 0.5 * n_periods as f64;
        let mut out = raw.to_real();
        for j in 0..p {
            let x = out.x(j);
            let env = (-((x - centre) / width).powi(2)).exp();
            for comp in 0..n {
                out.values[j * n + comp] *= env;
            }
        }
        out
    }

    /// The same field on an `n_periods` domain: zero-padded or cropped symmetrically about the
    /// domain centre, so grid values are shared wherever both domains cover them.
    pub fn recentered(&self, n_periods: usize) -> Self {
        let offset = (n_periods as i64 - self.n_periods as i64) * self.m_x as i64 / 2;
        let mut out = Self::zeros(n_periods, self.m_x, self.n);
        for j in 0..out.points() {
            let src = j as i64 - offset;
            if src >= 0 && (src as usize) < self.points() {
                for comp in 0..self.n {
                    out.values[j * self.n + comp] = self.at(src as usize, comp);
                }
            }
        }
        out
    }

    pub fn points(&self) -> usize {
        self.n_periods * self.m_x
    }

    pub fn spacing(&self) -> f64 {
        1.0 / self.m_x as f64
    }

    pub fn x(&self, j: usize) -> f64 {
        j as f64 / self.m_x as f64
    }

    pub fn at(&self, j: usize, comp: usize) -> C64 {
        self.values[j * self.n + comp]
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.n_periods == other.n_periods && self.m_x == other.m_x && self.n == other.n
    }

    pub fn real_parts(&self) -> Vec<f64> {
        self.values.iter().map(|z| z.re).collect()
    }

    pub fn max_imag(&self) -> f64 {
        self.values.iter().map(|z| z.im.abs()).fold(0.0, f64::max)
    }

    pub fn to_real(&self) -> Self {
        Self { values: self.values.iter().map(|z| C64::new(z.re, 0.0)).collect(), ..self.clone() }
    }

    pub fn scale(&self, s: f64) -> Self {
        Self { values: self.values.iter().map(|z| z * s).collect(), ..self.clone() }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert!(self.same_shape(other));
        Self { values: self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect(), ..self.clone() }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert!(self.same_shape(other));
        Self { values: self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect(), ..self.clone() }
    }

    pub fn axpy(&mut self, a: f64, other: &Self) {
        assert!(self.same_shape(other));
        for (x, y) in self.values.iter_mut().zip(&other.values) {
            *x += y * a;
        }
    }

    /// Pointwise product of a vector field with a scalar field (`n = 1`).
    pub fn mul_scalar_field(&self, s: &Self) -> Self {
        assert!(s.n == 1 && s.points() == self.points());
        let n = self.n;
        Self {
            values: self.values.iter().enumerate().map(|(i, z)| z * s.values[i / n]).collect(),
            ..self.clone()
        }
    }

    /// `||u||_{L^1(0,N)}` by the trapezoid rule with the Euclidean pointwise norm.
    pub fn l1(&self) -> f64 {
        let n = self.n;
        self.values.chunks(n).map(|p| p.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()).sum::<f64>()
            * self.spacing()
    }

    pub fn l2(&self) -> f64 {
        (self.values.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.spacing()).sqrt()
    }

    pub fn sup(&self) -> f64 {
        let n = self.n;
        self.values.chunks(n).map(|p| p.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()).fold(0.0, f64::max)
    }

    pub fn inner(&self, other: &Self) -> C64 {
        assert!(self.same_shape(other));
        self.values.iter().zip(&other.values).map(|(a, b)| a.conj() * b).sum::<C64>() * self.spacing()
    }

    /// Normalized DFT coefficients per component, DFT slot order.
    pub fn coefficients(&self) -> Vec<Vec<C64>> {
        Transform::new(self.points()).analyze_components(&self.values, self.n)
    }

    pub fn from_coefficients(n_periods: usize, m_x: usize, coeffs: &[Vec<C64>]) -> Self {
        let p = n_periods * m_x;
        let n = coeffs.len();
        let plan = Transform::new(p);
        let mut values = vec![C64::new(0.0, 0.0); p * n];
        for (comp, c) in coeffs.iter().enumerate() {
            let mut buf = c.clone();
            plan.synthesize(&mut buf);
            for j in 0..p {
                values[j * n + comp] = buf[j];
            }
        }
        Self { n_periods, m_x, n, values }
    }

    /// Angular frequency `2 pi m / N` of DFT slot `idx`.
    pub fn omega(&self, idx: usize) -> f64 {
        2.0 * PI * crate::fourier::mode_of_slot(idx, self.points()) as f64 / self.n_periods as f64
    }

    /// `H^s` norm with weights `(1 + omega^2)^s` by Parseval.
    pub fn hs(&self, s: f64) -> f64 {
        let coeffs = self.coefficients();
        let mut acc = 0.0;
        for c in &coeffs {
            for (idx, z) in c.iter().enumerate() {
                let w = self.omega(idx);
                acc += (1.0 + w * w).powf(s) * z.norm_sqr();
            }
        }
        (acc * self.n_periods as f64).sqrt()
    }

    /// Spectral derivative; the unpaired Nyquist mode is dropped for odd orders.
    pub fn derivative(&self, order: u32) -> Self {
        if order == 0 {
            return self.clone();
        }
        let p = self.points();
        let mut coeffs = self.coefficients();
        for c in coeffs.iter_mut() {
            for (idx, z) in c.iter_mut().enumerate() {
                if order % 2 == 1 && p % 2 == 0 && idx == p / 2 {
                    *z = C64::new(0.0, 0.0);
                } else {
                    *z *= (I * self.omega(idx)).powu(order);
                }
            }
        }
        Self::from_coefficients(self.n_periods, self.m_x, &coeffs)
    }

    /// Trigonometric interpolant evaluated at arbitrary points; returns `[point][comp]`.
    ///
    /// The Nyquist mode of an even grid is split symmetrically so real data interpolate to
    /// real values.
    pub fn interpolate(&self, points: &[f64]) -> Vec<Vec<C64>> {
        let coeffs = self.coefficients();
        let p = self.points();
        let (lo, hi) = mode_range(p);
        let period = self.n_periods as f64;
        points
            .iter()
            .map(|&x| {
                let base = C64::from_polar(1.0, 2.0 * PI * x / period);
                let mut out = vec![C64::new(0.0, 0.0); self.n];
                for (comp, c) in coeffs.iter().enumerate() {
                    let mut acc = c[0];
                    let mut pos = C64::new(1.0, 0.0);
                    let mut neg = C64::new(1.0, 0.0);
                    for m in 1..=hi.max(-lo) {
                        pos *= base;
                        neg *= base.conj();
                        if m <= hi {
                            acc += c[slot_of_mode(m, p)] * pos;
                        }
                        if -m >= lo {
                            let z = c[slot_of_mode(-m, p)];
                            if -m == lo && p % 2 == 0 {
                                acc += z * 0.5 * (pos + neg);
                            } else {
                                acc += z * neg;
                            }
                        }
                    }
                    out[comp] = acc;
                }
                out
            })
            .collect()
    }
}

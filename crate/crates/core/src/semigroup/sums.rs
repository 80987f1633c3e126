use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::bloch::omega_grid;
use crate::error::{arg, Error, Result};

use super::decay::linear_fit;

/// `(1/N) sum_{xi in Omega_N \ {0}} xi^{2r} e^{-2 d xi^2 t}`.
pub fn lattice_sum(d: f64, n_periods: usize, r: u32, t: f64) -> f64 {
    let grid = omega_grid(n_periods as i64).expect("N >= 1");
    grid.frequencies
        .iter()
        .filter(|&&xi| xi != 0.0)
        .map(|&xi| xi.powi(2 * r as i32) * (-2.0 * d * xi * xi * t).exp())
        .sum::<f64>()
        / n_periods as f64
}

/// `(1/2pi) int_{-pi}^{pi} xi^{2r} e^{-2 d xi^2 t} dxi` by composite Simpson on the
/// effective support of the Gaussian.
pub fn continuum_integral(d: f64, r: u32, t: f64) -> f64 {
    let upper = if t > 0.0 { PI.min(12.0 / (2.0 * d * t).sqrt()) } else { PI };
    let intervals = 4000;
    let h = upper / intervals as f64;
    let g = |xi: f64| xi.powi(2 * r as i32) * (-2.0 * d * xi * xi * t).exp();
    let mut acc = g(0.0) + g(upper);
    for i in 1..intervals {
        acc += g(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    // even integrand: twice the half-line value
    2.0 * acc * h / 3.0 / (2.0 * PI)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SumBoundRow {
    pub n_periods: usize,
    pub r: u32,
    pub t: f64,
    pub sum: f64,
    /// `sum (1 + t)^{r + 1/2}`.
    pub envelope_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SumBoundTable {
    pub d: f64,
    pub r: u32,
    pub rows: Vec<SumBoundRow>,
    pub c_min_per_n: Vec<(usize, f64)>,
    pub c_min: f64,
    /// Supremum over the same times of the continuum integral times `(1 + t)^{r + 1/2}`.
    pub continuum_constant: f64,
}

impl SumBoundTable {
    pub fn ratio_to_continuum(&self) -> f64 {
        self.c_min / self.continuum_constant
    }
}

pub fn sum_bound_check(d: f64, r: u32, n_list: &[usize], t_grid: &[f64]) -> Result<SumBoundTable> {
    if !(d > 0.0 && d.is_finite()) {
        return arg("diffusion coefficient d must be positive");
    }
    if n_list.contains(&0) || t_grid.iter().any(|&t| !(t >= 0.0)) {
        return arg("periods must be >= 1 and times >= 0");
    }
    let expo = r as f64 + 0.5;
    let mut rows = Vec::with_capacity(n_list.len() * t_grid.len());
    let mut c_min_per_n = Vec::with_capacity(n_list.len());
    for &n in n_list {
        let mut c = 0.0f64;
        for &t in t_grid {
            let sum = lattice_sum(d, n, r, t);
            let envelope_ratio = sum * (1.0 + t).powf(expo);
            c = c.max(envelope_ratio);
            rows.push(SumBoundRow { n_periods: n, r, t, sum, envelope_ratio });
        }
        c_min_per_n.push((n, c));
    }
    let c_min = c_min_per_n.iter().map(|p| p.1).fold(0.0, f64::max);
    let continuum_constant = t_grid.iter().map(|&t| continuum_integral(d, r, t) * (1.0 + t).powf(expo)).fold(0.0, f64::max);
    Ok(SumBoundTable { d, r, rows, c_min_per_n, c_min, continuum_constant })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossoverProbe {
    pub n_periods: usize,
    pub r: u32,
    pub d: f64,
    /// `Omega_N \ {0}` is empty.
    pub degenerate: bool,
    /// First time the lattice sum leaves `[1/2, 2]` times the continuum integral.
    pub t_star: Option<f64>,
    pub late_rate: Option<f64>,
    /// `2 d (2 pi / N)^2`, the decay of the slowest surviving summand.
    pub predicted_rate: f64,
    pub fit_window: Option<(f64, f64)>,
}

pub fn crossover_probe(d: f64, n_periods: usize, r: u32, t_max: f64) -> Result<CrossoverProbe> {
    if !(d > 0.0) || n_periods == 0 || !(t_max > 0.0) {
        return arg("crossover probe needs d > 0, N >= 1, t_max > 0");
    }
    let xi_min = 2.0 * PI / n_periods as f64;
    let predicted_rate = 2.0 * d * xi_min * xi_min;
    let mut out = CrossoverProbe { n_periods, r, d, degenerate: n_periods == 1, t_star: None, late_rate: None, predicted_rate, fit_window: None };
    if out.degenerate {
        return Ok(out);
    }
    let t_lo = 1e-3f64.min(t_max / 10.0);
    let times = super::decay::log_time_grid(t_lo, t_max, 4000)?;
    let t_star = times.iter().copied().find(|&t| {
        let ratio = lattice_sum(d, n_periods, r, t) / continuum_integral(d, r, t);
        !(0.5..=2.0).contains(&ratio)
    });
    let Some(t_star) = t_star else {
        return Err(Error::Range(format!("no crossover before t_max = {t_max}; increase t_max")));
    };
    let (mut x, mut y) = (Vec::new(), Vec::new());
    for &t in times.iter().filter(|&&t| t > 4.0 * t_star) {
        let s = lattice_sum(d, n_periods, r, t);
        if s > 1e-250 {
            x.push(t);
            y.push(s.ln());
        }
    }
    if x.len() < 10 || x[x.len() - 1] < 8.0 * t_star {
        return Err(Error::Range(format!(
            "crossover at t* = {t_star:.4} leaves too little late-time data before t_max = {t_max}; increase t_max beyond {:.4}",
            8.0 * t_star
        )));
    }
    let (_, slope, _) = linear_fit(&x, &y);
    out.t_star = Some(t_star);
    out.late_rate = Some(-slope);
    out.fit_window = Some((x[0], x[x.len() - 1]));
    Ok(out)
}

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fourier::C64;
use crate::linalg::{eigen_decompose, eigenvalues};
use crate::profile::WaveProfile;

use super::operator::{derivative_vector, BlochOperator};
use super::spectrum::{angle_sine, sort_spectrum};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StabilityOptions {
    /// Number of uniformly spaced scan frequencies on `[-pi, pi)`; `xi = 0` is always added.
    pub scan: usize,
    /// Bloch truncation; `None` uses the profile's own.
    pub m_f: Option<usize>,
    pub zero_tol: f64,
    pub angle_tol: f64,
    /// `xi_1` is the largest radius on which the critical branch stays separated from the rest
    /// by at least this fraction of its separation at `xi = 0`.
    pub isolation_fraction: f64,
}

impl Default for StabilityOptions {
    fn default() -> Self {
        Self { scan: 256, m_f: None, zero_tol: 1e-8, angle_tol: 1e-6, isolation_fraction: 0.25 }
    }
}

/// Per-frequency summary kept in the report so the scan can be audited.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanPoint {
    pub xi: f64,
    /// Rightmost eigenvalue (the critical candidate).
    pub top: C64,
    /// Real part of the second rightmost eigenvalue.
    pub second_re: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionDetails {
    pub condition_i: bool,
    pub condition_ii: bool,
    pub condition_iii: bool,
    /// Largest real part over the scan, excluding the zero eigenvalue.
    pub max_re_nonzero: f64,
    pub worst_xi: f64,
    /// Number of eigenvalues of `L_0` with modulus at most `zero_tol`.
    pub zero_count: usize,
    /// Sine of the angle between the zero eigenvector and `phi'`.
    pub kernel_angle: f64,
    pub zero_eigenvalue: C64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub verdict: bool,
    pub theta: f64,
    pub xi_1: f64,
    pub delta_1: f64,
    /// `(xi_0, delta_0(xi_0))` with `delta_0 = -max Re sigma(L_xi)` over scanned `|xi| >= xi_0`.
    pub delta_0: Vec<(f64, f64)>,
    pub zero_simplicity: f64,
    pub details: ConditionDetails,
    pub options: StabilityOptions,
    pub m_f: usize,
    pub scan: Vec<ScanPoint>,
}

impl StabilityReport {
    /// High-frequency gap for `|xi| >= xi_0` from the stored scan.
    pub fn delta_0_at(&self, xi_0: f64) -> f64 {
        -self
            .scan
            .iter()
            .filter(|s| s.xi.abs() >= xi_0 && s.xi != 0.0)
            .map(|s| s.top.re)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

pub fn scan_frequencies(scan: usize) -> Vec<f64> {
    let mut xs: Vec<f64> = (0..scan).map(|j| -PI + 2.0 * PI * j as f64 / scan as f64).collect();
    if !xs.contains(&0.0) {
        xs.push(0.0);
        xs.sort_by(f64::total_cmp);
    }
    xs
}

/// Sorted spectra of `L_xi` at each frequency, computed in parallel with canonical output order.
pub fn spectra(profile: &WaveProfile, xis: &[f64], m_f: usize) -> Result<Vec<Vec<C64>>> {
    let m = m_f as i64;
    let op = BlochOperator::new(profile, 2 * m_f);
    xis.par_iter()
        .map(|&xi| {
            let bm = op.matrix(xi, -m, m);
            let mut vals =
                eigenvalues(&bm.entries).map_err(|message| Error::Eigen { xi, rows: bm.dim(), message })?;
            sort_spectrum(&mut vals);
            Ok(vals)
        })
        .collect()
}

/// Numerical check of the three diffusive spectral stability conditions.
pub fn verify_diffusive_stability(profile: &WaveProfile, opts: &StabilityOptions) -> Result<StabilityReport> {
    if opts.scan == 0 {
        return Err(Error::Argument("scan resolution must be positive".into()));
    }
    let m_f = opts.m_f.unwrap_or(profile.m_f).max(profile.m_f);
    let xis = scan_frequencies(opts.scan);
    let specs = spectra(profile, &xis, m_f)?;

    // condition (iii) with eigenvectors at xi = 0
    let m = m_f as i64;
    let bm0 = BlochOperator::new(profile, 2 * m_f).matrix(0.0, -m, m);
    let ed0 = eigen_decompose(&bm0.entries).map_err(|message| Error::Eigen { xi: 0.0, rows: bm0.dim(), message })?;
    let mut by_mod: Vec<usize> = (0..ed0.values.len()).collect();
    by_mod.sort_by(|&a, &b| ed0.values[a].norm().total_cmp(&ed0.values[b].norm()));
    let zero_idx = by_mod[0];
    let zero_eigenvalue = ed0.values[zero_idx];
    let zero_count = ed0.values.iter().filter(|z| z.norm() <= opts.zero_tol).count();
    let zero_simplicity = ed0.values[by_mod[1]].norm();
    let v0: Vec<C64> = (0..bm0.dim()).map(|r| ed0.vectors[(r, zero_idx)]).collect();
    let kernel_angle = angle_sine(&v0, &derivative_vector(profile, -m, m));
    let condition_iii = zero_count == 1 && kernel_angle <= opts.angle_tol;

    // conditions (i) and (ii)
    let mut max_re_nonzero = f64::NEG_INFINITY;
    let mut worst_xi = 0.0;
    let mut theta = f64::INFINITY;
    let mut scan = Vec::with_capacity(xis.len());
    for (&xi, vals) in xis.iter().zip(&specs) {
        let mut rest: Vec<C64> = vals.clone();
        if xi == 0.0 {
            // drop the translation eigenvalue (minimal modulus)
            let i = (0..rest.len()).min_by(|&a, &b| rest[a].norm().total_cmp(&rest[b].norm())).unwrap();
            rest.remove(i);
        }
        let top_re = rest[0].re;
        if top_re > max_re_nonzero {
            max_re_nonzero = top_re;
            worst_xi = xi;
        }
        if xi != 0.0 {
            theta = theta.min(-vals[0].re / (xi * xi));
        }
        scan.push(ScanPoint { xi, top: vals[0], second_re: vals.get(1).map_or(f64::NEG_INFINITY, |z| z.re) });
    }
    let condition_i = max_re_nonzero < 0.0;
    let condition_ii = theta > 0.0;

    let (xi_1, delta_1) = isolation_radius(&scan, opts.isolation_fraction);
    let delta_0 = (1..=8)
        .map(|j| {
            let xi0 = PI * j as f64 / 8.0;
            let d0 = -scan
                .iter()
                .filter(|s| s.xi.abs() >= xi0 - 1e-12)
                .map(|s| s.top.re)
                .fold(f64::NEG_INFINITY, f64::max);
            (xi0, d0)
        })
        .collect();

    Ok(StabilityReport {
        verdict: condition_i && condition_ii && condition_iii,
        theta,
        xi_1,
        delta_1,
        delta_0,
        zero_simplicity,
        details: ConditionDetails {
            condition_i,
            condition_ii,
            condition_iii,
            max_re_nonzero,
            worst_xi,
            zero_count,
            kernel_angle,
            zero_eigenvalue,
        },
        options: *opts,
        m_f,
        scan,
    })
}

/// Largest scanned radius on which the rightmost eigenvalue is separated from the rest by at
/// least `fraction` of the separation at `xi = 0`, and stays strictly to the right of the rest
/// over the whole disc; `delta_1` sits midway between the two groups.
fn isolation_radius(scan: &[ScanPoint], fraction: f64) -> (f64, f64) {
    let at0 = scan.iter().find(|s| s.xi == 0.0).expect("scan contains 0");
    let sep0 = at0.top.re - at0.second_re;
    let mut radii: Vec<f64> = scan.iter().map(|s| s.xi.abs()).filter(|&r| r > 0.0).collect();
    radii.sort_by(f64::total_cmp);
    radii.dedup();
    let mut best = (0.0, -0.5 * at0.second_re);
    for &r in &radii {
        let disc: Vec<&ScanPoint> = scan.iter().filter(|s| s.xi.abs() <= r).collect();
        let min_crit = disc.iter().map(|s| s.top.re).fold(f64::INFINITY, f64::min);
        let max_rest = disc.iter().map(|s| s.second_re).fold(f64::NEG_INFINITY, f64::max);
        let separated = disc.iter().all(|s| s.top.re - s.second_re >= fraction * sep0);
        if !(separated && max_rest < min_crit) {
            break;
        }
        best = (r, -0.5 * (min_crit + max_rest));
    }
    best
}

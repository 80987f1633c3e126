use serde::{Deserialize, Serialize};

use crate::error::{arg, Error, Result};
use crate::fourier::C64;
use crate::linalg::eigen_decompose;
use crate::profile::WaveProfile;

use super::operator::{derivative_vector, BlochOperator};
use super::spectrum::{angle_sine, inner, norm, CriticalMode};

/// Tracked critical branch `lambda_c(xi)` with its gauge-fixed eigenfunctions.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CriticalCurve {
    pub xi_samples: Vec<f64>,
    pub lambda_c: Vec<C64>,
    /// `Im lambda_c ~ a xi`.
    pub a: f64,
    /// `Re lambda_c ~ -d xi^2`.
    pub d: f64,
    pub m_f: usize,
    pub phi_xi: Vec<Vec<C64>>,
    pub phi_tilde_xi: Vec<Vec<C64>>,
}

impl CriticalCurve {
    pub fn lambda_at(&self, xi: f64) -> Option<C64> {
        self.xi_samples.iter().position(|&x| x == xi).map(|i| self.lambda_c[i])
    }
}

/// Least-squares fit of `y = sum_j coef_j x^{p_j}`.
pub(crate) fn fit_powers(x: &[f64], y: &[f64], powers: &[i32]) -> Vec<f64> {
    let k = powers.len();
    let mut ata = faer::Mat::<f64>::zeros(k, k);
    let mut aty = vec![0.0; k];
    for (&xi, &yi) in x.iter().zip(y) {
        let row: Vec<f64> = powers.iter().map(|&p| xi.powi(p)).collect();
        for a in 0..k {
            aty[a] += row[a] * yi;
            for b in 0..k {
                ata[(a, b)] += row[a] * row[b];
            }
        }
    }
    crate::linalg::solve_real(&ata, &aty).unwrap_or_else(|| vec![f64::NAN; k])
}

/// Fit `a` and `d` from branch samples: `Im = a xi + c3 xi^3`, `Re = -d xi^2 + c4 xi^4`.
pub fn fit_expansion(xi: &[f64], lambda: &[C64]) -> (f64, f64) {
    let im: Vec<f64> = lambda.iter().map(|z| z.im).collect();
    let re: Vec<f64> = lambda.iter().map(|z| z.re).collect();
    let a = fit_powers(xi, &im, &[1, 3])[0];
    let d = -fit_powers(xi, &re, &[2, 4])[0];
    (a, d)
}

/// Follow the critical eigenvalue from `xi = 0` to `+-xi_max` in `samples` steps per side,
/// matching eigenvectors by overlap.
pub fn critical_curve(profile: &WaveProfile, xi_max: f64, samples: usize, m_f: usize) -> Result<CriticalCurve> {
    if !(xi_max > 0.0 && xi_max <= std::f64::consts::PI) || samples < 3 {
        return arg("critical curve needs 0 < xi_max <= pi and at least 3 samples per side");
    }
    if m_f < profile.m_f {
        return arg("Bloch truncation below profile truncation");
    }
    let m = m_f as i64;
    let op = BlochOperator::new(profile, 2 * m_f);
    let dphi = derivative_vector(profile, -m, m);
    let decompose = |xi: f64| {
        let bm = op.matrix(xi, -m, m);
        eigen_decompose(&bm.entries).map_err(|message| Error::Eigen { xi, rows: bm.dim(), message })
    };

    let ed0 = decompose(0.0)?;
    let (idx0, _) = ed0
        .values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
        .expect("nonempty spectrum");
    let zero = CriticalMode::from_decomposition(0.0, &ed0, idx0, &dphi)?;
    if angle_sine(&zero.phi, &dphi) > 1e-6 {
        return Err(Error::BranchTracking { xi: 0.0, message: "zero eigenvector is not parallel to phi'".into() });
    }

    let mut sides: Vec<Vec<CriticalMode>> = Vec::new();
    for sign in [-1.0, 1.0] {
        let mut prev = zero.phi.clone();
        let mut side = Vec::with_capacity(samples);
        for s in 1..=samples {
            let xi = sign * xi_max * s as f64 / samples as f64;
            let ed = decompose(xi)?;
            let dim = ed.values.len();
            let pn = norm(&prev);
            let mut scores: Vec<(f64, usize)> = (0..dim)
                .map(|j| {
                    let v: Vec<C64> = (0..dim).map(|r| ed.vectors[(r, j)]).collect();
                    (inner(&prev, &v).norm() / (pn * norm(&v)), j)
                })
                .collect();
            scores.sort_by(|a, b| b.0.total_cmp(&a.0));
            if scores.len() > 1 && scores[1].0 > 0.5 {
                return Err(Error::BranchTracking {
                    xi,
                    message: format!("ambiguous overlaps {:.3} and {:.3}", scores[0].0, scores[1].0),
                });
            }
            let mode = CriticalMode::from_decomposition(xi, &ed, scores[0].1, &dphi)?;
            prev = mode.phi.clone();
            side.push(mode);
        }
        sides.push(side);
    }
    let mut modes: Vec<CriticalMode> = sides[0].iter().rev().cloned().collect();
    modes.push(zero);
    modes.extend(sides[1].iter().cloned());

    let xi_samples: Vec<f64> = modes.iter().map(|m| m.xi).collect();
    let lambda_c: Vec<C64> = modes.iter().map(|m| m.lambda).collect();
    let (a, d) = fit_expansion(&xi_samples, &lambda_c);
    Ok(CriticalCurve {
        xi_samples,
        lambda_c,
        a,
        d,
        m_f,
        phi_xi: modes.iter().map(|m| m.phi.clone()).collect(),
        phi_tilde_xi: modes.into_iter().map(|m| m.phi_tilde).collect(),
    })
}

/// Critical eigenvalue and gauge-fixed eigenfunction pair at `xi`; `xi_1` is the resolved
/// branch radius (from a stability report).
pub fn critical_mode_data(profile: &WaveProfile, xi: f64, xi_1: f64, m_f: usize) -> Result<CriticalMode> {
    if xi.abs() >= xi_1 && xi != 0.0 {
        return Err(Error::Range(format!("xi = {xi} outside the resolved critical branch |xi| < {xi_1}")));
    }
    let m = m_f.max(profile.m_f) as i64;
    let op = BlochOperator::new(profile, 2 * m as usize);
    let bm = op.matrix(xi, -m, m);
    let ed = eigen_decompose(&bm.entries).map_err(|message| Error::Eigen { xi, rows: bm.dim(), message })?;
    let dphi = derivative_vector(profile, -m, m);
    let idx = critical_index(&ed.values, xi);
    CriticalMode::from_decomposition(xi, &ed, idx, &dphi)
}

/// Index of the critical eigenvalue inside the isolation radius: minimal modulus at `xi = 0`,
/// maximal real part elsewhere.
pub fn critical_index(values: &[C64], xi: f64) -> usize {
    let it = values.iter().enumerate();
    if xi == 0.0 {
        it.min_by(|a, b| a.1.norm().total_cmp(&b.1.norm())).map(|p| p.0).unwrap()
    } else {
        it.max_by(|a, b| a.1.re.total_cmp(&b.1.re)).map(|p| p.0).unwrap()
    }
}

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{arg, Error, Result};
use crate::fourier::C64;
use crate::linalg::{eigen_decompose, eigenvalues, EigenData};

use super::BlochMatrix;

/// The lattice `Omega_N = { xi in [-pi, pi) : e^{i xi N} = 1 }`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubharmonicFrequencyGrid {
    pub n_periods: usize,
    /// Lattice indices `j` with `xi_j = 2 pi j / N`, ascending.
    pub indices: Vec<i64>,
    pub frequencies: Vec<f64>,
}

impl SubharmonicFrequencyGrid {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        self.indices.iter().copied().zip(self.frequencies.iter().copied())
    }
}

pub fn omega_grid(n: i64) -> Result<SubharmonicFrequencyGrid> {
    if n < 1 {
        return arg(format!("number of periods must be at least 1, got {n}"));
    }
    let lo = if n % 2 == 0 { -n / 2 } else { -(n - 1) / 2 };
    let indices: Vec<i64> = (lo..lo + n).collect();
    // j / N first keeps xi = -pi exact for even N
    let frequencies = indices.iter().map(|&j| 2.0 * PI * (j as f64 / n as f64)).collect();
    Ok(SubharmonicFrequencyGrid { n_periods: n as usize, indices, frequencies })
}

#[derive(Debug, Clone)]
pub struct EigenPair {
    pub value: C64,
    pub vector: Option<Vec<C64>>,
}

/// Canonical ordering: descending real part, then descending imaginary part.
pub fn sort_spectrum(values: &mut [C64]) {
    values.sort_by(|a, b| b.re.total_cmp(&a.re).then(b.im.total_cmp(&a.im)));
}

pub fn bloch_spectrum(matrix: &BlochMatrix, want_vectors: bool) -> Result<Vec<EigenPair>> {
    let fail = |message: String| Error::Eigen { xi: matrix.xi, rows: matrix.dim(), message };
    if !want_vectors {
        let mut vals = eigenvalues(&matrix.entries).map_err(fail)?;
        sort_spectrum(&mut vals);
        return Ok(vals.into_iter().map(|value| EigenPair { value, vector: None }).collect());
    }
    let ed = eigen_decompose(&matrix.entries).map_err(fail)?;
    let mut order: Vec<usize> = (0..ed.values.len()).collect();
    order.sort_by(|&a, &b| {
        let (x, y) = (ed.values[a], ed.values[b]);
        y.re.total_cmp(&x.re).then(y.im.total_cmp(&x.im))
    });
    Ok(order
        .into_iter()
        .map(|i| {
            let mut v: Vec<C64> = (0..matrix.dim()).map(|r| ed.vectors[(r, i)]).collect();
            let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            v.iter_mut().for_each(|z| *z /= norm);
            EigenPair { value: ed.values[i], vector: Some(v) }
        })
        .collect())
}

/// `<a, b> = sum conj(a) b`, the `L^2(0,1)` product of Fourier coefficient vectors.
pub fn inner(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn norm(a: &[C64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Sine of the angle between two vectors.
pub fn angle_sine(a: &[C64], b: &[C64]) -> f64 {
    let (na, nb) = (norm(a), norm(b));
    let proj = inner(b, a) / (nb * nb);
    let resid: f64 = a.iter().zip(b).map(|(x, y)| (x - proj * y).norm_sqr()).sum::<f64>().sqrt();
    resid / na
}

/// Critical eigenpair in the gauge `<phi', Phi> = ||phi'||^2`, `<Phi~, Phi> = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct CriticalMode {
    pub xi: f64,
    pub lambda: C64,
    pub phi: Vec<C64>,
    pub phi_tilde: Vec<C64>,
}

impl CriticalMode {
    /// Gauge-fix eigenpair `idx` of a decomposition against the translation mode `dphi`.
    pub fn from_decomposition(xi: f64, ed: &EigenData, idx: usize, dphi: &[C64]) -> Result<Self> {
        let dim = ed.values.len();
        let v: Vec<C64> = (0..dim).map(|r| ed.vectors[(r, idx)]).collect();
        let row: Vec<C64> = (0..dim).map(|c| ed.inverse[(idx, c)]).collect();
        let overlap = inner(dphi, &v);
        if overlap.norm() < 1e-12 * norm(dphi) * norm(&v) {
            return Err(Error::BranchTracking { xi, message: "critical eigenvector orthogonal to phi'".into() });
        }
        let alpha = norm(dphi).powi(2) / overlap;
        let phi: Vec<C64> = v.iter().map(|z| z * alpha).collect();
        let ca = alpha.conj();
        let phi_tilde: Vec<C64> = row.iter().map(|z| z.conj() / ca).collect();
        Ok(Self { xi, lambda: ed.values[idx], phi, phi_tilde })
    }

    /// Coefficient `<Phi~, g>` of the spectral projection.
    pub fn project(&self, g: &[C64]) -> C64 {
        inner(&self.phi_tilde, g)
    }
}

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::fourier::C64;
use crate::profile::WaveProfile;

use super::spectrum::omega_grid;
use super::stability::spectra;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaggedEigenvalue {
    pub xi: f64,
    pub value: C64,
}

/// Spectrum of `L[phi]` on `L^2_per(0, N)` and its gap `delta_N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubharmonicGapReport {
    pub n_periods: usize,
    pub delta_n: f64,
    pub attaining_xi: f64,
    pub m_f: usize,
    /// The excluded translation eigenvalue at `xi = 0`.
    pub zero_eigenvalue: C64,
    pub spectrum: Vec<TaggedEigenvalue>,
}

pub fn subharmonic_spectrum(profile: &WaveProfile, n_periods: i64, m_f: usize) -> Result<SubharmonicGapReport> {
    let grid = omega_grid(n_periods)?;
    let m_f = m_f.max(profile.m_f);
    let specs = spectra(profile, &grid.frequencies, m_f)?;
    let mut spectrum = Vec::new();
    let mut zero_eigenvalue = C64::new(0.0, 0.0);
    let mut best = (f64::NEG_INFINITY, 0.0);
    for (&xi, vals) in grid.frequencies.iter().zip(specs) {
        let skip = if xi == 0.0 {
            (0..vals.len()).min_by(|&a, &b| vals[a].norm().total_cmp(&vals[b].norm()))
        } else {
            None
        };
        for (i, v) in vals.into_iter().enumerate() {
            if Some(i) == skip {
                zero_eigenvalue = v;
                continue;
            }
            if v.re > best.0 {
                best = (v.re, xi);
            }
            spectrum.push(TaggedEigenvalue { xi, value: v });
        }
    }
    Ok(SubharmonicGapReport {
        n_periods: grid.n_periods,
        delta_n: -best.0,
        attaining_xi: best.1,
        m_f,
        zero_eigenvalue,
        spectrum,
    })
}

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::bloch::omega_grid;
use crate::error::{arg, Result};
use crate::fourier::{mode_range, slot_of_mode, C64};

use super::grid::GridFunction;

/// Bloch components `B_1(g)(xi, .)` of an `N`-periodic grid function.
///
/// Component `i` belongs to `xis[i] = 2 pi js[i] / N` and stores the Fourier coefficients
/// for `l in l_lo[i]..=l_hi[i]` mode-major (`(l - l_lo) * n + comp`). The `l` ranges are
/// exactly those global modes `m = j + l N` present on the grid, so every grid mode is
/// owned by one `(xi, l)` pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlochDecomposition {
    pub n_periods: usize,
    pub m_x: usize,
    pub n: usize,
    pub xis: Vec<f64>,
    pub js: Vec<i64>,
    pub l_lo: Vec<i64>,
    pub l_hi: Vec<i64>,
    pub comps: Vec<Vec<C64>>,
}

/// Index layout shared by decompositions of one grid shape.
pub fn bloch_layout(n_periods: usize, m_x: usize) -> Vec<(i64, f64, i64, i64)> {
    let p = (n_periods * m_x) as i64;
    let (lo, hi) = mode_range(p as usize);
    let nn = n_periods as i64;
    omega_grid(nn)
        .expect("n_periods >= 1")
        .iter()
        .map(|(j, xi)| {
            let l_lo = (lo - j).div_euclid(nn) + i64::from((lo - j).rem_euclid(nn) != 0);
            let l_hi = (hi - j).div_euclid(nn);
            (j, xi, l_lo, l_hi)
        })
        .collect()
}

impl BlochDecomposition {
    pub fn zeros_like(&self) -> Self {
        Self { comps: self.comps.iter().map(|c| vec![C64::new(0.0, 0.0); c.len()]).collect(), ..self.clone() }
    }

    pub fn empty(n_periods: usize, m_x: usize, n: usize) -> Self {
        let layout = bloch_layout(n_periods, m_x);
        Self {
            n_periods,
            m_x,
            n,
            xis: layout.iter().map(|t| t.1).collect(),
            js: layout.iter().map(|t| t.0).collect(),
            l_lo: layout.iter().map(|t| t.2).collect(),
            l_hi: layout.iter().map(|t| t.3).collect(),
            comps: layout.iter().map(|t| vec![C64::new(0.0, 0.0); ((t.3 - t.2 + 1) as usize) * n]).collect(),
        }
    }

    pub fn index_of_xi(&self, xi: f64) -> Option<usize> {
        self.xis.iter().position(|&x| x == xi)
    }

    /// `B_1(g)(xi_i, x)` at the unit-cell points `x = p / m_x`, point-major.
    pub fn unit_cell_values(&self, i: usize) -> Vec<C64> {
        let n = self.n;
        let mut out = vec![C64::new(0.0, 0.0); self.m_x * n];
        for pt in 0..self.m_x {
            let x = pt as f64 / self.m_x as f64;
            for (k, l) in (self.l_lo[i]..=self.l_hi[i]).enumerate() {
                let e = C64::from_polar(1.0, 2.0 * PI * l as f64 * x);
                for comp in 0..n {
                    out[pt * n + comp] += e * self.comps[i][k * n + comp];
                }
            }
        }
        out
    }
}

pub fn bloch_transform(g: &GridFunction) -> Result<BlochDecomposition> {
    if g.m_x < 2 {
        return arg("Bloch transform needs at least 2 samples per unit cell");
    }
    let p = g.points();
    let coeffs = g.coefficients();
    let mut dec = BlochDecomposition::empty(g.n_periods, g.m_x, g.n);
    let nn = g.n_periods as i64;
    let scale = g.n_periods as f64;
    for i in 0..dec.xis.len() {
        let j = dec.js[i];
        for (k, l) in (dec.l_lo[i]..=dec.l_hi[i]).enumerate() {
            let slot = slot_of_mode(j + l * nn, p);
            for comp in 0..g.n {
                dec.comps[i][k * g.n + comp] = coeffs[comp][slot] * scale;
            }
        }
    }
    Ok(dec)
}

pub fn inverse_bloch(dec: &BlochDecomposition) -> GridFunction {
    let p = dec.n_periods * dec.m_x;
    let n = dec.n;
    let nn = dec.n_periods as i64;
    let mut coeffs = vec![vec![C64::new(0.0, 0.0); p]; n];
    let scale = 1.0 / dec.n_periods as f64;
    for i in 0..dec.xis.len() {
        let j = dec.js[i];
        for (k, l) in (dec.l_lo[i]..=dec.l_hi[i]).enumerate() {
            let slot = slot_of_mode(j + l * nn, p);
            for comp in 0..n {
                coeffs[comp][slot] += dec.comps[i][k * n + comp] * scale;
            }
        }
    }
    GridFunction::from_coefficients(dec.n_periods, dec.m_x, &coeffs)
}

/// `|<f, g>_{L^2_N} - (1/N) sum_xi <B_1 f, B_1 g>_{L^2(0,1)}|`.
pub fn parseval_gap(f: &GridFunction, g: &GridFunction) -> Result<f64> {
    if !f.same_shape(g) {
        return arg("Parseval probe needs functions on the same grid");
    }
    let lhs = f.inner(g);
    let (bf, bg) = (bloch_transform(f)?, bloch_transform(g)?);
    let rhs: C64 = bf
        .comps
        .iter()
        .zip(&bg.comps)
        .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x.conj() * y).sum::<C64>())
        .sum::<C64>()
        / f.n_periods as f64;
    Ok((lhs - rhs).norm())
}

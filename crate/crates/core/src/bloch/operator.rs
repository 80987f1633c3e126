use std::f64::consts::PI;

use faer::Mat;

use crate::error::{arg, Result};
use crate::fourier::{slot_of_mode, Transform, C64};
use crate::linalg::CMat;
use crate::profile::WaveProfile;

/// Hill-method matrix of `L_xi` on the Fourier modes `l_lo..=l_hi`.
///
/// Entries are ordered mode-major: row `(l - l_lo) * n + comp`. The operator is
/// `L = (k^2 d^2 + k c d + Df(phi)) / k`, i.e. the generator of the time-`t` flow.
#[derive(Debug, Clone)]
pub struct BlochMatrix {
    pub xi: f64,
    pub l_lo: i64,
    pub l_hi: i64,
    pub n: usize,
    pub entries: CMat,
}

impl BlochMatrix {
    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn modes(&self) -> usize {
        (self.l_hi - self.l_lo + 1) as usize
    }

    /// Symmetric truncation order, when the mode range is `[-m, m]`.
    pub fn m_f(&self) -> Option<usize> {
        (self.l_lo == -self.l_hi).then_some(self.l_hi as usize)
    }
}

/// Precomputed Fourier data of `Df(phi)` for repeated Bloch-matrix assembly.
#[derive(Debug, Clone)]
pub struct BlochOperator {
    pub k: f64,
    pub c: f64,
    pub n: usize,
    span: i64,
    /// `dcoef[((m + span) * n + r) * n + s]` is the mode-`m` coefficient of `Df(phi)_{rs}`.
    dcoef: Vec<C64>,
}

impl BlochOperator {
    /// Resolve `Df(phi)` coefficients for shifts `|m| <= span`.
    pub fn new(profile: &WaveProfile, span: usize) -> Self {
        let n = profile.n();
        let span = span as i64;
        // Df(phi) of a cubic nonlinearity has modes |m| <= 2 m_f; this grid keeps them alias-free
        let p = (2 * span as usize + 4 * profile.m_f + 2).max(8);
        let plan = Transform::new(p);
        let phi: Vec<Vec<f64>> = profile
            .coeffs
            .iter()
            .map(|c| crate::fourier::sample_series(c, p, 0, &plan))
            .collect();
        let mut entries = vec![vec![C64::new(0.0, 0.0); p]; n * n];
        let mut u = vec![0.0; n];
        let mut jac = vec![0.0; n * n];
        for j in 0..p {
            for comp in 0..n {
                u[comp] = phi[comp][j];
            }
            profile.model.jacobian_into(&u, &mut jac);
            for (e, v) in entries.iter_mut().zip(&jac) {
                e[j] = C64::new(*v, 0.0);
            }
        }
        for e in entries.iter_mut() {
            plan.analyze(e);
        }
        let mut dcoef = vec![C64::new(0.0, 0.0); (2 * span as usize + 1) * n * n];
        for m in -span..=span {
            for rs in 0..n * n {
                dcoef[(m + span) as usize * n * n + rs] = entries[rs][slot_of_mode(m, p)];
            }
        }
        Self { k: profile.k, c: profile.c, n, span, dcoef }
    }

    pub fn span(&self) -> usize {
        self.span as usize
    }

    #[inline]
    pub fn df_coeff(&self, m: i64, r: usize, s: usize) -> C64 {
        debug_assert!(m.abs() <= self.span);
        self.dcoef[((m + self.span) as usize * self.n + r) * self.n + s]
    }

    /// Diagonal symbol `(k^2 (i nu)^2 + k c (i nu)) / k` at `nu = xi + 2 pi l`.
    #[inline]
    pub fn symbol(&self, nu: f64) -> C64 {
        C64::new(-self.k * nu * nu, self.c * nu)
    }

    pub fn matrix(&self, xi: f64, l_lo: i64, l_hi: i64) -> BlochMatrix {
        assert!(l_hi >= l_lo && l_hi - l_lo <= self.span, "mode range exceeds resolved span");
        let n = self.n;
        let modes = (l_hi - l_lo + 1) as usize;
        let inv_k = 1.0 / self.k;
        let entries = Mat::from_fn(modes * n, modes * n, |row, col| {
            let (li, r) = ((row / n) as i64 + l_lo, row % n);
            let (lj, s) = ((col / n) as i64 + l_lo, col % n);
            let mut v = self.df_coeff(li - lj, r, s) * inv_k;
            if row == col {
                v += self.symbol(xi + 2.0 * PI * li as f64);
            }
            v
        });
        BlochMatrix { xi, l_lo, l_hi, n, entries }
    }
}

/// Hill matrix of `L_xi` on modes `[-m_f, m_f]`.
pub fn assemble_bloch(profile: &WaveProfile, xi: f64, m_f: usize) -> Result<BlochMatrix> {
    if m_f < profile.m_f {
        return arg(format!("Bloch truncation {m_f} cannot resolve a profile with m_f = {}", profile.m_f));
    }
    if !(-PI..=PI).contains(&xi) {
        return arg(format!("Bloch frequency {xi} outside [-pi, pi]"));
    }
    let m = m_f as i64;
    Ok(BlochOperator::new(profile, 2 * m_f).matrix(xi, -m, m))
}

/// Coefficients of `phi'` in the mode-major layout of a Bloch matrix.
pub fn derivative_vector(profile: &WaveProfile, l_lo: i64, l_hi: i64) -> Vec<C64> {
    let d = profile.derivative_coeffs(1);
    let m = profile.m_f as i64;
    let n = profile.n();
    let mut out = Vec::with_capacity((l_hi - l_lo + 1) as usize * n);
    for l in l_lo..=l_hi {
        for comp in d.iter().take(n) {
            out.push(if l.abs() <= m { comp[(l + m) as usize] } else { C64::new(0.0, 0.0) });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{eigenvalues, mat_vec};
    use crate::model::ReactionModel;

    #[test]
    fn constant_coefficient_spectrum_is_explicit() {
        // the realGL zero profile has Df = I; scale k, c arbitrary
        let model = ReactionModel::real_gl(0.3).unwrap();
        let mut p = WaveProfile::analytic(&model, 8).unwrap();
        for c in p.coeffs.iter_mut() {
            c.iter_mut().for_each(|z| *z = C64::new(0.0, 0.0));
        }
        p.k = 0.07;
        p.c = 0.4;
        let xi = 0.9;
        let bm = assemble_bloch(&p, xi, 8).unwrap();
        let mut got = eigenvalues(&bm.entries).unwrap();
        let mut want: Vec<C64> = (-8..=8)
            .flat_map(|l| {
                let nu = xi + 2.0 * PI * l as f64;
                let v = (C64::new(-p.k * p.k * nu * nu, p.k * p.c * nu) + 1.0) / p.k;
                [v, v]
            })
            .collect();
        let key = |z: &C64| (z.re, z.im);
        got.sort_by(|a, b| key(a).partial_cmp(&key(b)).unwrap());
        want.sort_by(|a, b| key(a).partial_cmp(&key(b)).unwrap());
        for (g, w) in got.iter().zip(&want) {
            assert!((g - w).norm() < 1e-10 * (1.0 + w.norm()), "{g} vs {w}");
        }
    }

    #[test]
    fn derivative_spans_kernel_at_zero() {
        let model = ReactionModel::real_gl(0.3).unwrap();
        let p = WaveProfile::analytic(&model, 16).unwrap();
        let bm = assemble_bloch(&p, 0.0, 16).unwrap();
        let d = derivative_vector(&p, -16, 16);
        let norm = d.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let r = mat_vec(&bm.entries, &d);
        let res = r.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt() / norm;
        assert!(res < 1e-8, "{res}");
    }

    #[test]
    fn truncation_must_cover_profile() {
        let model = ReactionModel::real_gl(0.3).unwrap();
        let p = WaveProfile::analytic(&model, 16).unwrap();
        assert!(assemble_bloch(&p, 0.0, 8).is_err());
        assert!(assemble_bloch(&p, 4.0, 16).is_err());
    }
}

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{arg, Error, Result};
use crate::fourier::C64;
use crate::profile::WaveProfile;
use crate::semigroup::{CutoffSpec, GridFunction, LinearPropagator, PropagatorOptions};

use super::config::TimeCutoff;

/// Finite-difference weights for the `order`-th derivative at `x0` on arbitrary nodes
/// (Fornberg's recursion).
pub fn fornberg_weights(x0: f64, xs: &[f64], order: usize) -> Vec<f64> {
    let n = xs.len();
    let mut c = vec![vec![0.0; order + 1]; n];
    c[0][0] = 1.0;
    let mut c1 = 1.0;
    let mut c4 = xs[0] - x0;
    for i in 1..n {
        let mn = i.min(order);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = xs[i] - x0;
        for j in 0..i {
            let c3 = xs[i] - xs[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    c.into_iter().map(|row| row[order]).collect()
}

/// Five-point (or fewer, for short series) first-derivative stencil at sample `idx`.
fn time_stencil(times: &[f64], idx: usize) -> (usize, Vec<f64>) {
    let width = times.len().min(5);
    let start = idx.saturating_sub(width / 2).min(times.len() - width);
    (start, fornberg_weights(times[idx], &times[start..start + width], 1))
}

/// `d/dt` of a sampled scalar series.
pub fn series_derivative(times: &[f64], y: &[f64]) -> Vec<f64> {
    if times.len() < 2 {
        return vec![0.0; times.len()];
    }
    (0..times.len())
        .map(|i| {
            let (s, w) = time_stencil(times, i);
            w.iter().enumerate().map(|(k, wk)| wk * y[s + k]).sum()
        })
        .collect()
}

/// `d/dt` of a sampled field series.
pub fn field_derivative(times: &[f64], y: &[GridFunction]) -> Vec<GridFunction> {
    if times.len() < 2 {
        return y.iter().map(|g| g.scale(0.0)).collect();
    }
    (0..times.len())
        .map(|i| {
            let (s, w) = time_stencil(times, i);
            let mut out = y[i].scale(0.0);
            for (k, wk) in w.iter().enumerate() {
                out.axpy(*wk, &y[s + k]);
            }
            out
        })
        .collect()
}

/// Modulated decomposition of one state: `u(x) = phi(x) + v(x)` after undoing the phase
/// shift `gamma / N + psi(x)`.
#[derive(Debug, Clone)]
pub struct Modulation {
    pub gamma: f64,
    /// `d gamma / dt` from the projected equation `chi' <Phi~_0, u - phi> + chi <Phi~_0, Q / k>`.
    pub gamma_t: f64,
    pub psi: GridFunction,
    pub v: GridFunction,
}

/// Time series of modulation data; `psi`, `psi_x`, `psi_t` are scalar fields.
#[derive(Debug, Clone, Default)]
pub struct ModulationTrace {
    pub times: Vec<f64>,
    pub gamma: Vec<f64>,
    pub gamma_t: Vec<f64>,
    pub psi: Vec<GridFunction>,
    pub psi_x: Vec<GridFunction>,
    pub psi_t: Vec<GridFunction>,
    pub v: Vec<GridFunction>,
    /// Snapshots the extraction could not handle, with the reason; their entries are NaN.
    pub failures: Vec<(usize, String)>,
}

impl ModulationTrace {
    fn assemble(
        times: &[f64],
        gamma: Vec<f64>,
        gamma_t: Vec<f64>,
        psi: Vec<GridFunction>,
        v: Vec<GridFunction>,
        failures: Vec<(usize, String)>,
    ) -> Self {
        let psi_x = psi.iter().map(|p| p.derivative(1).to_real()).collect();
        let psi_t = field_derivative(times, &psi);
        Self { times: times.to_vec(), gamma, gamma_t, psi, psi_x, psi_t, v, failures }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// Pieces of the nonlinear remainder `N = Q / k + R_x`.
#[derive(Debug, Clone)]
pub struct Residuals {
    pub q: GridFunction,
    pub r: GridFunction,
    pub total: GridFunction,
}

/// `Q = (1 - psi_x)[f(phi + v) - f(phi) - Df(phi) v]` and
/// `R = -psi_t v - gamma_t v / N + c psi_x v + k (psi_x v)_x + k psi_x/(1 - psi_x) v_x
///      + k psi_x^2/(1 - psi_x) phi'`.
pub fn nonlinear_residuals(profile: &WaveProfile, v: &GridFunction, psi_x: &GridFunction, psi_t: &GridFunction, gamma_t: f64) -> Result<Residuals> {
    let (np, m_x, n) = (v.n_periods, v.m_x, v.n);
    if n != profile.n() || psi_x.n != 1 || psi_t.n != 1 || !psi_x.same_shape(psi_t) || psi_x.points() != v.points() {
        return arg("residual inputs do not share one grid");
    }
    let worst = psi_x.values.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
    if worst >= 1.0 {
        return Err(Error::Singularity(format!("max psi_x = {worst:.4} >= 1; the warp is not invertible")));
    }
    let (k, c) = (profile.k, profile.c);
    let phi = GridFunction::from_profile(profile, np, m_x, 0);
    let dphi = GridFunction::from_profile(profile, np, m_x, 1);
    let p = v.points();
    let mut q = GridFunction::zeros(np, m_x, n);
    let mut rem = vec![0.0; n];
    for j in 0..p {
        let base: Vec<f64> = (0..n).map(|i| phi.values[j * n + i].re).collect();
        let pert: Vec<f64> = (0..n).map(|i| v.values[j * n + i].re).collect();
        profile.model.remainder_into(&base, &pert, &mut rem);
        let w = 1.0 - psi_x.values[j].re;
        for i in 0..n {
            q.values[j * n + i] = C64::new(w * rem[i], 0.0);
        }
    }
    let psi_x_v = v.mul_scalar_field(psi_x);
    let ratio = GridFunction { values: psi_x.values.iter().map(|z| C64::new(z.re / (1.0 - z.re), 0.0)).collect(), ..psi_x.clone() };
    let ratio2 = ratio.mul_scalar_field(psi_x);
    let mut r = v.mul_scalar_field(psi_t).scale(-1.0);
    r.axpy(-gamma_t / np as f64, v);
    r.axpy(c, &psi_x_v);
    r.axpy(k, &psi_x_v.derivative(1));
    r.axpy(k, &v.derivative(1).mul_scalar_field(&ratio));
    r.axpy(k, &dphi.mul_scalar_field(&ratio2));
    let r = r.to_real();
    let mut total = q.scale(1.0 / k);
    total.axpy(1.0, &r.derivative(1));
    Ok(Residuals { q, r, total: total.to_real() })
}

/// Linear machinery shared by both extraction methods.
#[derive(Debug, Clone)]
pub struct Extractor {
    pub profile: WaveProfile,
    pub prop: LinearPropagator,
    pub phi: GridFunction,
    pub chi: TimeCutoff,
    /// Largest `||u - phi||_{L^2_N}` accepted.
    pub radius: f64,
}

impl Extractor {
    pub fn new(profile: &WaveProfile, n_periods: usize, m_x: usize, cutoff: CutoffSpec, chi: TimeCutoff, radius: f64) -> Result<Self> {
        let prop = LinearPropagator::new(profile, n_periods, m_x, cutoff, &PropagatorOptions::default())?;
        Ok(Self { profile: profile.clone(), phi: GridFunction::from_profile(profile, n_periods, m_x, 0), prop, chi, radius })
    }

    /// Un-cut-off projections `gamma = <Phi~_0, u - phi>_{L^2_N}` and `psi = s_p(0)(u - phi)`.
    pub fn project(&self, u: &GridFunction) -> Result<(f64, GridFunction)> {
        let w = u.sub(&self.phi);
        let size = w.l2();
        if !(size <= self.radius) {
            return Err(Error::Extraction(format!("||u - phi|| = {size:.3e} exceeds the extraction radius {}", self.radius)));
        }
        let gamma = self.prop.mean_phase(&w)?.re * self.prop.n_periods as f64;
        let psi = self.prop.sp_apply(&w, 0.0, 0, 0)?.to_real();
        Ok((gamma, psi))
    }

    /// `v(x) = u(x - gamma / N - psi(x)) - phi(x)`; refuses warps with `max |psi_x| >= 1/2`.
    pub fn compose(&self, u: &GridFunction, gamma: f64, psi: &GridFunction) -> Result<GridFunction> {
        let slope = psi.derivative(1).values.iter().map(|z| z.re.abs()).fold(0.0, f64::max);
        if slope >= 0.5 {
            return Err(Error::Extraction(format!("max |psi_x| = {slope:.3} >= 1/2; the warp is too strong to undo")));
        }
        let shift = gamma / u.n_periods as f64;
        let pts: Vec<f64> = (0..u.points()).map(|j| u.x(j) - shift - psi.values[j].re).collect();
        let n = u.n;
        let chunks: Vec<Vec<Vec<C64>>> = pts.par_chunks(64).map(|c| u.interpolate(c)).collect();
        let mut values = Vec::with_capacity(pts.len() * n);
        for row in chunks.into_iter().flatten() {
            values.extend(row.into_iter().map(|z| C64::new(z.re, 0.0)));
        }
        Ok(GridFunction { values, ..u.clone() }.sub(&self.phi))
    }

    /// `<Phi~_0, Q(u - phi) / k>_{L^2_N}`: the rate of the raw phase projection, since
    /// `Phi~_0` annihilates the linear part. Differencing `gamma` in time instead loses the
    /// `O(E_0^2)` drift to round-off.
    pub fn phase_drift(&self, u: &GridFunction) -> Result<f64> {
        let n = self.prop.n;
        let model = &self.profile.model;
        let mut q = u.sub(&self.phi);
        let mut rem = vec![0.0; n];
        for j in 0..u.points() {
            let base: Vec<f64> = (0..n).map(|i| self.phi.values[j * n + i].re).collect();
            let pert: Vec<f64> = (0..n).map(|i| q.values[j * n + i].re).collect();
            model.remainder_into(&base, &pert, &mut rem);
            for i in 0..n {
                q.values[j * n + i] = C64::new(rem[i] / self.profile.k, 0.0);
            }
        }
        Ok(self.prop.mean_phase(&q)?.re * self.prop.n_periods as f64)
    }

    /// Projection extraction at time `t` (the cutoff `chi(t)` multiplies `gamma` and `psi`).
    pub fn extract_projection(&self, u: &GridFunction, t: f64) -> Result<Modulation> {
        let (raw, psi) = self.project(u)?;
        let x = self.chi.value(t);
        let psi = psi.scale(x);
        let gamma = raw * x;
        let gamma_t = self.chi.derivative(t) * raw + if x > 0.0 { x * self.phase_drift(u)? } else { 0.0 };
        let v = self.compose(u, gamma, &psi)?;
        Ok(Modulation { gamma, gamma_t, psi, v })
    }

    fn nan_slot(&self) -> (f64, GridFunction, GridFunction) {
        let (np, m_x, n) = (self.prop.n_periods, self.prop.m_x, self.prop.n);
        let nan = |c| GridFunction::from_fn(np, m_x, c, |_, _| C64::new(f64::NAN, 0.0));
        (f64::NAN, nan(1), nan(n))
    }

    /// Projection extraction over a trajectory; failures are recorded, not fatal.
    pub fn projection_trace(&self, times: &[f64], states: &[GridFunction]) -> Result<ModulationTrace> {
        if times.len() != states.len() {
            return arg("one state per time required");
        }
        let results: Vec<Result<Modulation>> = times.par_iter().zip(states).map(|(&t, u)| self.extract_projection(u, t)).collect();
        let (mut gamma, mut gamma_t, mut psi, mut v, mut failures) = (vec![], vec![], vec![], vec![], vec![]);
        for (i, r) in results.into_iter().enumerate() {
            match r {
                Ok(m) => {
                    gamma.push(m.gamma);
                    gamma_t.push(m.gamma_t);
                    psi.push(m.psi);
                    v.push(m.v);
                }
                Err(e) => {
                    let (g, p, w) = self.nan_slot();
                    gamma.push(g);
                    gamma_t.push(g);
                    psi.push(p);
                    v.push(w);
                    failures.push((i, e.to_string()));
                }
            }
        }
        Ok(ModulationTrace::assemble(times, gamma, gamma_t, psi, v, failures))
    }

    /// Fixed point of the Duhamel formulation
    /// `gamma = chi [<Phi~_0, v_0> + int <Phi~_0, N>]`, `psi = chi [s_p(t) v_0 + int s_p(t - s) N]`,
    /// `v = (1 - chi)[e^{Lt} v_0 + int e^{L(t-s)} N] + chi [psi_x v + S~(t) v_0 + int S~(t - s) N]`,
    /// with `N` re-evaluated from the previous iterate. Starts from the projection trace.
    pub fn duhamel_trace(&self, times: &[f64], states: &[GridFunction], tol: f64, max_iter: usize) -> Result<(ModulationTrace, DuhamelReport)> {
        if times.is_empty() || times.len() != states.len() {
            return arg("one state per time required");
        }
        if times[0] != 0.0 {
            return arg("the Duhamel formulation starts from the t = 0 state");
        }
        let init = self.projection_trace(times, states)?;
        let v0 = states[0].sub(&self.phi);
        let chi: Vec<f64> = times.iter().map(|&t| self.chi.value(t)).collect();
        let linear: Vec<_> = times.par_iter().map(|&t| self.prop.decompose(&v0, t)).collect::<Result<_>>()?;
        let phase0 = linear[0].mean_phase.re * self.prop.n_periods as f64;

        let finite_or_zero = |g: &f64| if g.is_finite() { *g } else { 0.0 };
        let mut gamma: Vec<f64> = init.gamma.iter().map(finite_or_zero).collect();
        let mut gamma_t: Vec<f64> = init.gamma_t.iter().map(finite_or_zero).collect();
        let (np, m_x) = (self.prop.n_periods, self.prop.m_x);
        let mut psi: Vec<GridFunction> =
            init.psi.iter().map(|p| if p.values[0].re.is_finite() { p.clone() } else { GridFunction::zeros(np, m_x, 1) }).collect();
        let mut v: Vec<GridFunction> = init
            .v
            .iter()
            .zip(states)
            .map(|(w, u)| if w.values[0].re.is_finite() { w.clone() } else { u.sub(&self.phi) })
            .collect();

        let mut updates = Vec::new();
        let mut rises = 0;
        let mut converged = false;
        for iter in 1..=max_iter {
            let (g_new, gt_new, p_new, v_new) = self.duhamel_sweep(times, &chi, &linear, phase0, &gamma_t, &psi, &v)?;
            let delta = (0..times.len())
                .map(|j| p_new[j].sub(&psi[j]).l2() + (g_new[j] - gamma[j]).abs())
                .fold(0.0, f64::max);
            if !delta.is_finite() {
                return Err(Error::Divergence { iteration: iter, message: "non-finite update".into() });
            }
            rises = if updates.last().is_some_and(|&u: &f64| delta > u) { rises + 1 } else { 0 };
            updates.push(delta);
            gamma = g_new;
            gamma_t = gt_new;
            psi = p_new;
            v = v_new;
            if delta < tol {
                converged = true;
                break;
            }
            if rises >= 2 {
                return Err(Error::Divergence { iteration: iter, message: format!("update grew twice in a row (last {delta:.3e})") });
            }
        }
        if !converged {
            return Err(Error::Divergence {
                iteration: max_iter,
                message: format!("no convergence to {tol:.1e} (last update {:.3e})", updates.last().copied().unwrap_or(f64::NAN)),
            });
        }
        // residual of the v equation at the returned iterate
        let (_, _, _, v_check) = self.duhamel_sweep(times, &chi, &linear, phase0, &gamma_t, &psi, &v)?;
        let v2_defect = v.iter().zip(&v_check).map(|(a, b)| a.sub(b).l2()).fold(0.0, f64::max);
        let v_scale = v.iter().map(|a| a.l2()).fold(0.0, f64::max);
        let composition_defect = states
            .par_iter()
            .zip(&gamma)
            .zip(&psi)
            .zip(&v)
            .map(|(((u, g), p), w)| self.compose(u, *g, p).map(|c| c.sub(w).l2()).unwrap_or(f64::NAN))
            .reduce(|| 0.0, f64::max);
        let report = DuhamelReport {
            iterations: updates.len(),
            updates,
            v2_defect,
            v2_defect_relative: if v_scale > 0.0 { v2_defect / v_scale } else { 0.0 },
            composition_defect,
        };
        Ok((ModulationTrace::assemble(times, gamma, gamma_t, psi, v, vec![]), report))
    }

    #[allow(clippy::too_many_arguments)]
    fn duhamel_sweep(
        &self,
        times: &[f64],
        chi: &[f64],
        linear: &[crate::semigroup::SemigroupParts],
        phase0: f64,
        gamma_t: &[f64],
        psi: &[GridFunction],
        v: &[GridFunction],
    ) -> Result<(Vec<f64>, Vec<f64>, Vec<GridFunction>, Vec<GridFunction>)> {
        let psi_x: Vec<GridFunction> = psi.iter().map(|p| p.derivative(1).to_real()).collect();
        let psi_t = field_derivative(times, psi);
        let forcing: Vec<GridFunction> = (0..times.len())
            .into_par_iter()
            .map(|j| nonlinear_residuals(&self.profile, &v[j], &psi_x[j], &psi_t[j], gamma_t[j]).map(|r| r.total))
            .collect::<Result<_>>()?;
        let ints = self.prop.duhamel(times, &forcing)?;
        let drift: Vec<f64> = forcing.par_iter().map(|f| self.prop.mean_phase(f).map(|z| z.re)).collect::<Result<_>>()?;
        let np = self.prop.n_periods as f64;
        let mut g_new = Vec::with_capacity(times.len());
        let mut gt_new = Vec::with_capacity(times.len());
        let mut p_new = Vec::with_capacity(times.len());
        let mut v_new = Vec::with_capacity(times.len());
        for j in 0..times.len() {
            let x = chi[j];
            g_new.push(x * (phase0 + ints.phase[j].re));
            gt_new.push(self.chi.derivative(times[j]) * (phase0 + ints.phase[j].re) + x * np * drift[j]);
            let p = linear[j].sp.add(&ints.sp[j]).to_real().scale(x);
            let px = p.derivative(1).to_real();
            let outer = linear[j].total.add(&ints.full[j]).scale(1.0 - x);
            let inner = v[j].mul_scalar_field(&px).add(&linear[j].stilde).add(&ints.stilde[j]).scale(x);
            v_new.push(outer.add(&inner).to_real());
            p_new.push(p);
        }
        Ok((g_new, gt_new, p_new, v_new))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DuhamelReport {
    pub iterations: usize,
    /// `sup_t (||psi_new - psi|| + |gamma_new - gamma|)` per iteration.
    pub updates: Vec<f64>,
    /// `sup_t ||v - RHS(v)||_{L^2_N}` of the `v` equation at the returned iterate.
    pub v2_defect: f64,
    pub v2_defect_relative: f64,
    /// `sup_t ||v - (u(. - gamma/N - psi) - phi)||`: how well the fixed point matches the
    /// solution it was extracted from.
    pub composition_defect: f64,
}

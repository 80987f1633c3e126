use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bloch::{subharmonic_spectrum, verify_diffusive_stability, StabilityOptions};
use crate::error::{arg, Result};
use crate::model::ReactionModel;
use crate::profile::{solve_profile, WaveProfile};
use crate::semigroup::{CutoffSpec, GridFunction};

use super::config::{initial_perturbation, ExtractionMode, SimulationConfig};
use super::diagnostics::{
    crossover_fit, damping_check, envelope_slope, phase_convergence, zeta, CrossoverReport, DampingReport, FitSummary,
    PhaseReport,
};
use super::extract::{DuhamelReport, Extractor, ModulationTrace};
use super::stepper::Stepper;

pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone)]
pub struct Snapshot {
    pub t: f64,
    pub u: GridFunction,
}

/// Per-snapshot norms of a modulation trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub t: f64,
    pub gamma: f64,
    pub gamma_t: f64,
    pub v_hk: f64,
    pub v_l2: f64,
    pub psi_x_hk1: f64,
    pub psi_t_hk: f64,
    /// `||u(. - psi~) - phi||_{H^K}`; the composition defining `v`, so equal to `v_hk`.
    pub warp_hk: f64,
    /// `||(psi_x, psi_t + gamma_t / N)||_{H^K}`.
    pub grad_psi_hk: f64,
    /// `||u - phi(. + gamma_inf / N)||_{H^1}`.
    pub translate_h1: f64,
    pub zeta: f64,
}

/// One pass/fail line of the report; `lo`/`hi` are the bounds applied to `value`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub lo: Option<f64>,
    pub hi: Option<f64>,
    pub pass: bool,
}

impl Check {
    fn new(name: &str, value: f64, lo: Option<f64>, hi: Option<f64>) -> Self {
        let pass = value.is_finite() && lo.is_none_or(|l| value >= l) && hi.is_none_or(|h| value <= h);
        Self { name: name.into(), value, lo, hi, pass }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Agreement {
    /// `sup_t |gamma_d - gamma_p| / sup_t |gamma_p|`, and likewise for `psi` and `v` in `L^2_N`.
    pub gamma_rel: f64,
    pub psi_rel: f64,
    pub v_rel: f64,
}

impl Agreement {
    pub fn worst(&self) -> f64 {
        self.gamma_rel.max(self.psi_rel).max(self.v_rel)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub schema_version: u32,
    pub config: SimulationConfig,
    pub model: String,
    pub k: f64,
    pub c: f64,
    /// `||u_0 - phi||_{L^1} + ||u_0 - phi||_{H^K}`.
    pub e0: f64,
    pub stability_verdict: bool,
    pub xi_1: f64,
    pub delta_n: f64,
    pub steps: u64,
    pub snapshots: usize,
    pub warnings: Vec<String>,
    pub extraction_failures: Vec<(f64, String)>,
    /// `<Phi~_0, v(0)>_{L^2_N}`, the linear prediction of `gamma_inf`.
    pub gamma_linear: f64,
    pub decay_window: (f64, f64),
    pub warp_fit: Option<FitSummary>,
    pub grad_fit: Option<FitSummary>,
    pub zeta_10: f64,
    pub zeta_final: f64,
    /// `max_t ||v||_{H^K} (1 + t)^{3/4} / E_0`.
    pub uniform_constant: f64,
    pub phase: Option<PhaseReport>,
    pub phase_error: Option<String>,
    /// Best rigid translate `sigma` of the final state, against `gamma_inf / N`.
    pub sigma_fit: Option<f64>,
    pub sigma_from_gamma: Option<f64>,
    pub crossover: Option<CrossoverReport>,
    pub crossover_error: Option<String>,
    pub damping: DampingReport,
    pub duhamel: Option<DuhamelReport>,
    pub agreement: Option<Agreement>,
    pub checks: Vec<Check>,
    pub pass: bool,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub snapshots: Vec<Snapshot>,
    /// The trace the report is computed from (projection unless only Duhamel was asked for).
    pub trace: ModulationTrace,
    pub rows: Vec<TraceRow>,
    pub duhamel_trace: Option<ModulationTrace>,
    pub report: ExperimentReport,
}

/// Profile named by a config: a saved file, the analytic family, or a Newton solve from the
/// model's initial guess.
pub fn resolve_profile(cfg: &SimulationConfig) -> Result<WaveProfile> {
    if let Some(path) = &cfg.profile {
        return WaveProfile::load(path);
    }
    let Some(id) = &cfg.model else {
        return arg("config names neither a profile file nor a model");
    };
    let model = ReactionModel::new(id, &cfg.params)?;
    if model.analytic_wave().is_some() {
        return WaveProfile::analytic(&model, cfg.modes);
    }
    let guess = WaveProfile::initial_guess(&model, cfg.modes)?;
    solve_profile(&model, &guess, Default::default(), &Default::default())
}

/// Integrates the perturbed wave train and records snapshots on the config's schedule.
pub fn integrate(profile: &WaveProfile, cfg: &SimulationConfig, v0: &GridFunction) -> Result<Vec<Snapshot>> {
    let phi = GridFunction::from_profile(profile, cfg.n_periods, cfg.m_x, 0);
    let mut st = Stepper::new(profile, cfg.n_periods, cfg.m_x, cfg.dt, cfg.scheme, &phi.add(v0))?;
    let mut out = vec![Snapshot { t: 0.0, u: st.state() }];
    for &s in cfg.snapshot_steps().iter().skip(1) {
        st.advance(s - st.steps)?;
        out.push(Snapshot { t: st.t, u: st.state() });
    }
    Ok(out)
}

/// `min_s ||u - phi(. + s)||_{L^2_N}` by Newton on the first-order condition.
pub fn best_translate(profile: &WaveProfile, u: &GridFunction, start: f64) -> f64 {
    let (np, m_x) = (u.n_periods, u.m_x);
    let mut s = start;
    for _ in 0..30 {
        let sh = profile.shifted(s);
        let phi = GridFunction::from_profile(&sh, np, m_x, 0);
        let d1 = GridFunction::from_profile(&sh, np, m_x, 1);
        let d2 = GridFunction::from_profile(&sh, np, m_x, 2);
        let diff = phi.sub(u);
        let g = d1.inner(&diff).re;
        let gp = d1.inner(&d1).re + d2.inner(&diff).re;
        if !(gp > 0.0) {
            break;
        }
        let step = g / gp;
        s -= step;
        if step.abs() < 1e-15 {
            break;
        }
    }
    s
}

fn sup_rel(a: impl Iterator<Item = f64>, b: impl Iterator<Item = f64>) -> f64 {
    let (num, den) = a.zip(b).fold((0.0f64, 0.0f64), |(n, d), (x, y)| (n.max(x), d.max(y)));
    if den > 0.0 {
        num / den
    } else if num == 0.0 {
        0.0
    } else {
        f64::INFINITY
    }
}

fn agreement(p: &ModulationTrace, d: &ModulationTrace) -> Agreement {
    Agreement {
        gamma_rel: sup_rel(p.gamma.iter().zip(&d.gamma).map(|(a, b)| (a - b).abs()), p.gamma.iter().map(|g| g.abs())),
        psi_rel: sup_rel(p.psi.iter().zip(&d.psi).map(|(a, b)| a.sub(b).l2()), p.psi.iter().map(|g| g.l2())),
        v_rel: sup_rel(p.v.iter().zip(&d.v).map(|(a, b)| a.sub(b).l2()), p.v.iter().map(|g| g.l2())),
    }
}

pub fn run_experiment(profile: &WaveProfile, cfg: &SimulationConfig) -> Result<ExperimentOutput> {
    cfg.validate(profile)?;
    let (np, m_x, kk) = (cfg.n_periods, cfg.m_x, cfg.k_sobolev as f64);
    let mut warnings = Vec::new();
    let stab = verify_diffusive_stability(profile, &StabilityOptions { scan: 128, ..Default::default() })?;
    if !stab.verdict {
        warnings.push("the wave train fails the diffusive stability conditions; decay rates need not apply".into());
    }
    let xi_1 = match cfg.extraction.cutoff {
        Some(x) => x,
        None if stab.xi_1 > 0.0 => stab.xi_1,
        None => {
            warnings.push("no isolated critical branch; using the cutoff radius pi / 2".into());
            std::f64::consts::FRAC_PI_2
        }
    };
    let delta_n = subharmonic_spectrum(profile, np as i64, profile.m_f)?.delta_n;
    let ex = Extractor::new(profile, np, m_x, CutoffSpec::new(xi_1)?, cfg.extraction.chi, cfg.extraction.radius)?;

    let v0 = initial_perturbation(profile, cfg);
    let e0 = v0.l1() + v0.hs(kk);
    if v0.l2() > cfg.extraction.radius {
        return arg(format!("initial perturbation ||v0|| = {:.3e} exceeds the extraction radius", v0.l2()));
    }
    let gamma_linear = ex.prop.mean_phase(&v0)?.re * np as f64;
    let snapshots = integrate(profile, cfg, &v0)?;
    let times: Vec<f64> = snapshots.iter().map(|s| s.t).collect();
    let states: Vec<GridFunction> = snapshots.iter().map(|s| s.u.clone()).collect();

    let mode = cfg.extraction.mode;
    let projection = if mode != ExtractionMode::Duhamel { Some(ex.projection_trace(&times, &states)?) } else { None };
    let duhamel = if mode != ExtractionMode::Projection {
        Some(ex.duhamel_trace(&times, &states, cfg.extraction.tol, cfg.extraction.max_iter)?)
    } else {
        None
    };
    let agree = match (&projection, &duhamel) {
        (Some(p), Some((d, _))) => Some(agreement(p, d)),
        _ => None,
    };
    let (trace, duhamel_trace, duhamel_report) = match (projection, duhamel) {
        (Some(p), Some((d, r))) => (p, Some(d), Some(r)),
        (Some(p), None) => (p, None, None),
        (None, Some((d, r))) => (d.clone(), Some(d), Some(r)),
        (None, None) => unreachable!("some extraction mode is always selected"),
    };

    // norms
    let n = times.len();
    let per: Vec<(f64, f64, f64, f64, f64)> = (0..n)
        .into_par_iter()
        .map(|j| {
            let grad = GridFunction {
                values: trace.psi_t[j].values.iter().map(|z| z + trace.gamma_t[j] / np as f64).collect(),
                ..trace.psi_t[j].clone()
            };
            let grad_hk = (trace.psi_x[j].hs(kk).powi(2) + grad.hs(kk).powi(2)).sqrt();
            (trace.v[j].hs(kk), trace.v[j].l2(), trace.psi_x[j].hs(kk + 1.0), trace.psi_t[j].hs(kk), grad_hk)
        })
        .collect();
    let v_hk: Vec<f64> = per.iter().map(|p| p.0).collect();
    let v_l2: Vec<f64> = per.iter().map(|p| p.1).collect();
    let psi_x_hk1: Vec<f64> = per.iter().map(|p| p.2).collect();
    let psi_t_hk: Vec<f64> = per.iter().map(|p| p.3).collect();
    let grad_hk: Vec<f64> = per.iter().map(|p| p.4).collect();
    let zeta_series = zeta(&times, &v_hk, &psi_x_hk1, &psi_t_hk, &trace.gamma_t);
    let at_or_before = |t0: f64| times.iter().rposition(|&t| t <= t0).unwrap_or(0);
    let zeta_10 = zeta_series[at_or_before(10.0)];
    let zeta_final = zeta_series[n - 1];
    let uniform_constant = if e0 > 0.0 {
        times.iter().zip(&v_hk).filter(|p| p.1.is_finite()).map(|(t, v)| v * (1.0 + t).powf(0.75) / e0).fold(0.0, f64::max)
    } else {
        0.0
    };

    let t_max = times[n - 1];
    let n2 = (np * np) as f64;
    let decay_window = (10.0, n2 / 10.0);
    let phase_window = (10.0, n2.min(t_max));
    let signal = e0 > 0.0;
    let warp_fit = signal.then(|| envelope_slope(&times, &v_hk, decay_window).ok()).flatten();
    let grad_fit = signal.then(|| envelope_slope(&times, &grad_hk, decay_window).ok()).flatten();
    let (phase, phase_error) = match phase_convergence(&times, &trace.gamma, &trace.gamma_t, phase_window) {
        Ok(p) => (Some(p), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let gamma_inf = phase.as_ref().map(|p| p.gamma_inf).unwrap_or(trace.gamma[n - 1]);
    let sigma_from_gamma = gamma_inf / np as f64;
    let sigma_fit = signal.then(|| best_translate(profile, &states[n - 1], sigma_from_gamma));
    let shifted = GridFunction::from_profile(&profile.shifted(sigma_from_gamma), np, m_x, 0);
    let translate_h1: Vec<f64> = states.par_iter().map(|u| u.sub(&shifted).hs(1.0)).collect();

    let (crossover, crossover_error) = if !signal {
        (None, Some("zero perturbation".to_string()))
    } else if t_max < 4.0 * n2 {
        (None, Some(format!("horizon t_max = {t_max} is below 4 N^2 = {}", 4.0 * n2)))
    } else {
        match crossover_fit(&times, &translate_h1, delta_n, 10.0) {
            Ok(c) => (Some(c), None),
            Err(e) => (None, Some(e.to_string())),
        }
    };

    let mut thetas = vec![0.0, 0.25 * delta_n, 0.5 * delta_n, delta_n, 2.0 * delta_n, 0.01, 0.05];
    thetas.sort_by(f64::total_cmp);
    thetas.dedup();
    let damping = damping_check(&times, &v_hk, &v_l2, &psi_x_hk1, &psi_t_hk, &trace.gamma_t, &thetas);

    let mut checks = Vec::new();
    if let Some(f) = &warp_fit {
        checks.push(Check::new("warp_envelope_slope", f.slope, None, Some(-0.6)));
    }
    if let Some(f) = &grad_fit {
        checks.push(Check::new("phase_gradient_envelope_slope", f.slope, None, Some(-0.6)));
    }
    checks.push(Check::new("zeta_final_over_4_zeta_10", if zeta_10 > 0.0 { zeta_final / (4.0 * zeta_10) } else { 0.0 }, None, Some(1.0)));
    if let Some(p) = &phase {
        if signal {
            checks.push(Check::new("gamma_t_envelope_slope", p.gamma_t_fit.slope, None, Some(-1.2)));
            let rel = (p.gamma_inf - gamma_linear).abs() / gamma_linear.abs();
            checks.push(Check::new("gamma_inf_vs_linear_relative", rel, None, Some(10.0 * e0)));
        }
    }
    if t_max >= 4.0 * n2 && signal {
        let ratio = crossover.as_ref().map(|c| c.rate_over_delta).unwrap_or(f64::NAN);
        checks.push(Check::new("crossover_rate_over_delta_n", ratio, Some(0.5), Some(1.1)));
    }
    let half = damping.at(0.5 * delta_n).copied();
    checks.push(Check::new("damping_constant_at_half_delta_n", half.map(|r| r.c).unwrap_or(f64::INFINITY), None, None));
    checks.push(Check::new("damping_violations", half.map(|r| r.violations as f64).unwrap_or(f64::NAN), None, Some(0.0)));
    if let (Some(a), Some(d)) = (&agree, &duhamel_report) {
        checks.push(Check::new("duhamel_projection_relative_gap", a.worst(), None, Some(1e-3)));
        checks.push(Check::new("duhamel_v2_defect_relative", d.v2_defect_relative, None, Some(10.0 * cfg.extraction.tol)));
    }
    checks.push(Check::new("extraction_failures", trace.failures.len() as f64, None, Some(0.0)));
    let pass = checks.iter().all(|c| c.pass);

    let rows = (0..n)
        .map(|j| TraceRow {
            t: times[j],
            gamma: trace.gamma[j],
            gamma_t: trace.gamma_t[j],
            v_hk: v_hk[j],
            v_l2: v_l2[j],
            psi_x_hk1: psi_x_hk1[j],
            psi_t_hk: psi_t_hk[j],
            warp_hk: v_hk[j],
            grad_psi_hk: grad_hk[j],
            translate_h1: translate_h1[j],
            zeta: zeta_series[j],
        })
        .collect();
    let report = ExperimentReport {
        schema_version: REPORT_SCHEMA_VERSION,
        config: cfg.clone(),
        model: profile.model.id().to_string(),
        k: profile.k,
        c: profile.c,
        e0,
        stability_verdict: stab.verdict,
        xi_1,
        delta_n,
        steps: cfg.steps(),
        snapshots: n,
        warnings,
        extraction_failures: trace.failures.iter().map(|(i, m)| (times[*i], m.clone())).collect(),
        gamma_linear,
        decay_window,
        warp_fit,
        grad_fit,
        zeta_10,
        zeta_final,
        uniform_constant,
        phase,
        phase_error,
        sigma_fit,
        sigma_from_gamma: signal.then_some(sigma_from_gamma),
        crossover,
        crossover_error,
        damping,
        duhamel: duhamel_report,
        agreement: agree,
        checks,
        pass,
    };
    Ok(ExperimentOutput { snapshots, trace, rows, duhamel_trace, report })
}

impl ExperimentOutput {
    /// Real-valuedness of the extracted fields.
    pub fn max_imag(&self) -> f64 {
        let t = &self.trace;
        t.psi.iter().chain(&t.v).map(|g| g.max_imag()).fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evolve::{PerturbationShape, PerturbationSpec};
    use crate::fourier::C64;

    fn small(n_periods: usize, t_max: f64, perturbation: PerturbationSpec) -> SimulationConfig {
        SimulationConfig { n_periods, t_max, perturbation, ..Default::default() }
    }

    #[test]
    fn zero_perturbation_gives_a_zero_trace() {
        let cfg = small(4, 20.0, PerturbationSpec { amplitude: 0.0, ..Default::default() });
        let p = resolve_profile(&cfg).unwrap();
        let out = run_experiment(&p, &cfg).unwrap();
        let t = &out.trace;
        assert!(t.gamma.iter().all(|g| g.abs() < 1e-12));
        assert!(t.psi.iter().all(|g| g.sup() < 1e-12));
        assert!(t.v.iter().all(|g| g.sup() < 1e-12), "{}", t.v.iter().map(|g| g.sup()).fold(0.0, f64::max));
        // zeta carries |gamma_t|^{1/2}, so round-off of 1e-14 shows up near 1e-7
        assert!(out.rows.iter().all(|r| r.zeta < 1e-5));
        assert!(out.report.pass, "{:?}", out.report.checks);
        assert_eq!(out.max_imag(), 0.0);
    }

    #[test]
    fn pure_translate_is_a_pure_phase() {
        let s = 2e-4;
        let cfg = small(4, 20.0, PerturbationSpec { shape: PerturbationShape::Translate, shift: s, ..Default::default() });
        let p = resolve_profile(&cfg).unwrap();
        let out = run_experiment(&p, &cfg).unwrap();
        let t = &out.trace;
        let last = t.len() - 1;
        // gamma = +N s under the x - gamma/N composition
        assert!((t.gamma[last] - 4.0 * s).abs() < 10.0 * 4.0 * s * s, "{}", t.gamma[last]);
        // before chi reaches 1 only part of the phase is removed
        assert!(t.times.iter().zip(&t.v).filter(|p| *p.0 >= 1.0).all(|(_, v)| v.sup() < 1e-6));
        assert!(t.psi.iter().all(|g| g.sup() < 1e-10));
        assert!((out.report.sigma_fit.unwrap() - s).abs() < 1e-9);
    }

    /// Undoing the warp: `u(y) = phi(x) + v(x)` with `x = y + gamma / N + psi(x)`.
    #[test]
    fn recomposition_reproduces_the_state() {
        let cfg = small(4, 12.0, PerturbationSpec { amplitude: 1e-4, ..Default::default() });
        let p = resolve_profile(&cfg).unwrap();
        let out = run_experiment(&p, &cfg).unwrap();
        let t = &out.trace;
        let phi = GridFunction::from_profile(&p, 4, 17, 0);
        let mut worst: f64 = 0.0;
        for j in (0..t.len()).step_by(7) {
            let u = &out.snapshots[j].u;
            let shift = t.gamma[j] / 4.0;
            let w = phi.add(&t.v[j]);
            let pts: Vec<f64> = (0..u.points())
                .map(|i| {
                    let y = u.x(i);
                    let mut x = y;
                    for _ in 0..50 {
                        x = y + shift + t.psi[j].interpolate(&[x])[0][0].re;
                    }
                    x
                })
                .collect();
            let vals = w.interpolate(&pts);
            let rec = GridFunction { values: vals.into_iter().flatten().map(|z| C64::new(z.re, 0.0)).collect(), ..u.clone() };
            worst = worst.max(rec.sub(u).l2() / u.l2());
        }
        assert!(worst <= 1e-6, "{worst}");
        assert!(out.max_imag() < 1e-12);
    }
}

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::semigroup::linear_fit;

/// `zeta(t) = sup_{s <= t} (||v||_{H^K}^2 + ||psi_x||_{H^{K+1}}^2 + ||psi_t||_{H^K}^2 + |gamma_t|)^{1/2} (1 + s)^{3/4}`.
///
/// Non-finite samples (failed extractions) leave the running supremum unchanged.
pub fn zeta(times: &[f64], v_hk: &[f64], psi_x_hk1: &[f64], psi_t_hk: &[f64], gamma_t: &[f64]) -> Vec<f64> {
    let mut sup: f64 = 0.0;
    times
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            let inner = v_hk[i].powi(2) + psi_x_hk1[i].powi(2) + psi_t_hk[i].powi(2) + gamma_t[i].abs();
            let z = inner.sqrt() * (1.0 + t).powf(0.75);
            if z.is_finite() {
                sup = sup.max(z);
            }
            sup
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DampingRow {
    pub theta: f64,
    /// Smallest constant making the damping inequality hold at every snapshot (`inf` when
    /// the right side vanishes where the left does not).
    pub c: f64,
    pub violations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DampingReport {
    pub rows: Vec<DampingRow>,
    /// Row minimizing `C (1 + theta)`.
    pub best_theta: f64,
    pub best_c: f64,
    pub violations: usize,
}

impl DampingReport {
    pub fn at(&self, theta: f64) -> Option<&DampingRow> {
        self.rows.iter().find(|r| r.theta == theta)
    }
}

/// Feasibility of `||v(t)||_{H^K}^2 <= C [e^{-theta t} ||v(0)||_{H^K}^2
/// + int_0^t e^{-theta(t-s)} (||v||_{L^2}^2 + ||psi_x||_{H^{K+1}}^2 + ||psi_t||_{H^K}^2 + |gamma_t|^2) ds]`
/// on the snapshot grid; the integral uses the trapezoid rule with the exponential kernel
/// carried exactly between samples.
pub fn damping_check(times: &[f64], v_hk: &[f64], v_l2: &[f64], psi_x_hk1: &[f64], psi_t_hk: &[f64], gamma_t: &[f64], thetas: &[f64]) -> DampingReport {
    let g: Vec<f64> = (0..times.len())
        .map(|i| v_l2[i].powi(2) + psi_x_hk1[i].powi(2) + psi_t_hk[i].powi(2) + gamma_t[i].powi(2))
        .collect();
    let v0 = v_hk.first().copied().unwrap_or(0.0).powi(2);
    let rows: Vec<DampingRow> = thetas
        .iter()
        .map(|&theta| {
            let (mut integral, mut c, mut violations) = (0.0, 0.0f64, 0);
            for i in 0..times.len() {
                if i > 0 {
                    let h = times[i] - times[i - 1];
                    let decay = (-theta * h).exp();
                    integral = decay * integral + 0.5 * h * (decay * g[i - 1] + g[i]);
                }
                let lhs = v_hk[i].powi(2);
                let rhs = (-theta * times[i]).exp() * v0 + integral;
                if !(lhs.is_finite() && rhs.is_finite()) {
                    continue;
                }
                if rhs > 0.0 {
                    c = c.max(lhs / rhs);
                } else if lhs > 0.0 {
                    violations += 1;
                    c = f64::INFINITY;
                }
            }
            DampingRow { theta, c, violations }
        })
        .collect();
    let best = rows
        .iter()
        .min_by(|a, b| (a.c * (1.0 + a.theta)).total_cmp(&(b.c * (1.0 + b.theta))))
        .copied()
        .unwrap_or(DampingRow { theta: 0.0, c: 0.0, violations: 0 });
    DampingReport { rows, best_theta: best.theta, best_c: best.c, violations: best.violations }
}

/// Power-law fit of a decreasing envelope.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitSummary {
    pub window: (f64, f64),
    pub slope: f64,
    pub constant: f64,
    pub samples: usize,
}

/// `env(t_i) = max_{j >= i} |y_j|`, the smallest nonincreasing majorant.
pub fn envelope(y: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; y.len()];
    let mut m: f64 = 0.0;
    for i in (0..y.len()).rev() {
        if y[i].is_finite() {
            m = m.max(y[i].abs());
        }
        out[i] = m;
    }
    out
}

/// Slope of `log env` against `log(1 + t)` over `window`.
pub fn envelope_slope(times: &[f64], y: &[f64], window: (f64, f64)) -> Result<FitSummary> {
    let env = envelope(y);
    let (mut x, mut ly) = (Vec::new(), Vec::new());
    for (&t, &e) in times.iter().zip(&env) {
        if t >= window.0 && t <= window.1 && e > 0.0 {
            x.push((1.0 + t).ln());
            ly.push(e.ln());
        }
    }
    if x.len() < 10 {
        return Err(Error::Range(format!("window [{}, {}] holds {} usable samples; need 10", window.0, window.1, x.len())));
    }
    let (a, b, _) = linear_fit(&x, &ly);
    Ok(FitSummary { window, slope: b, constant: a.exp(), samples: x.len() })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseReport {
    pub gamma_final: f64,
    /// Estimated `int_{t_max}^inf gamma_t`.
    pub tail: f64,
    /// The tail came from a decaying fit of the late `|gamma_t|`.
    pub tail_reliable: bool,
    pub gamma_inf: f64,
    pub gamma_t_fit: FitSummary,
    pub gamma_gap_fit: Option<FitSummary>,
}

/// Asymptotic phase `gamma_inf` and envelope rates of `|gamma_t|` and `|gamma - gamma_inf|`.
pub fn phase_convergence(times: &[f64], gamma: &[f64], gamma_t: &[f64], window: (f64, f64)) -> Result<PhaseReport> {
    let t_max = times.last().copied().unwrap_or(0.0);
    if t_max < 10.0 {
        return Err(Error::Range(format!("phase convergence needs a horizon of at least t = 10 (have {t_max})")));
    }
    let last = times.len() - 1;
    // late |gamma_t|: exponential or power-law tail, whichever fits the last quarter better
    let start = times.iter().position(|&t| t >= 0.75 * t_max).unwrap_or(last).min(last.saturating_sub(4));
    let (mut tx, mut lx, mut ly) = (Vec::new(), Vec::new(), Vec::new());
    for i in start..=last {
        if gamma_t[i].abs() > 0.0 && gamma_t[i].is_finite() {
            tx.push(times[i]);
            lx.push((1.0 + times[i]).ln());
            ly.push(gamma_t[i].abs().ln());
        }
    }
    let g_end = gamma_t[last];
    let (mut tail, mut tail_reliable) = (0.0, false);
    if tx.len() >= 4 {
        let (_, rate, sse_e) = linear_fit(&tx, &ly);
        let (_, p, sse_p) = linear_fit(&lx, &ly);
        if rate < 0.0 && (sse_e <= sse_p || p >= -1.0) {
            tail = g_end / -rate;
            tail_reliable = true;
        } else if p < -1.0 {
            tail = g_end * (1.0 + t_max) / (-p - 1.0);
            tail_reliable = true;
        }
    } else if g_end == 0.0 {
        tail_reliable = true;
    }
    let gamma_final = gamma[last];
    let gamma_inf = gamma_final + tail;
    let gamma_t_fit = envelope_slope(times, gamma_t, window)?;
    let gap: Vec<f64> = gamma.iter().map(|g| g - gamma_inf).collect();
    let gamma_gap_fit = envelope_slope(times, &gap, window).ok();
    Ok(PhaseReport { gamma_final, tail, tail_reliable, gamma_inf, gamma_t_fit, gamma_gap_fit })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrossoverReport {
    pub t_cross: f64,
    /// Exponential rate fitted after the knee.
    pub rate: f64,
    /// Power-law exponent fitted before the knee.
    pub exponent: f64,
    pub delta_n: f64,
    pub rate_over_delta: f64,
    pub samples_before: usize,
    pub samples_after: usize,
}

/// Two-segment fit of a decaying series: a power law in `log(1 + t)` up to the knee, an
/// exponential in `t` after it; the knee minimizes the combined squared error.
pub fn crossover_fit(times: &[f64], values: &[f64], delta_n: f64, t_min: f64) -> Result<CrossoverReport> {
    let (mut t, mut ly) = (Vec::new(), Vec::new());
    for (&ti, &yi) in times.iter().zip(values) {
        if ti >= t_min && yi > 0.0 && yi.is_finite() {
            t.push(ti);
            ly.push(yi.ln());
        }
    }
    const MIN_SEG: usize = 6;
    if t.len() < 2 * MIN_SEG + 1 {
        return Err(Error::Range(format!("crossover fit needs at least {} samples after t = {t_min}", 2 * MIN_SEG + 1)));
    }
    let lx: Vec<f64> = t.iter().map(|t| (1.0 + t).ln()).collect();
    let mut best: Option<(f64, usize, f64, f64)> = None;
    for k in MIN_SEG..=t.len() - MIN_SEG {
        let (_, p, sse_a) = linear_fit(&lx[..k], &ly[..k]);
        let (_, r, sse_b) = linear_fit(&t[k..], &ly[k..]);
        let sse = sse_a + sse_b;
        if best.is_none_or(|b| sse < b.0) {
            best = Some((sse, k, p, -r));
        }
    }
    let (_, k, exponent, rate) = best.expect("at least one split");
    if k == MIN_SEG || k == t.len() - MIN_SEG {
        return Err(Error::Range(format!("no knee detected before t = {}; extend t_max", t[t.len() - 1])));
    }
    if !(rate > 0.0) {
        return Err(Error::Range(format!("post-knee segment does not decay (rate {rate:.3e}); extend t_max")));
    }
    Ok(CrossoverReport {
        t_cross: t[k],
        rate,
        exponent,
        delta_n,
        rate_over_delta: rate / delta_n,
        samples_before: k,
        samples_after: t.len() - k,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::semigroup::log_time_grid;

    #[test]
    fn zeta_is_a_running_sup() {
        let t: Vec<f64> = (0..50).map(|i| i as f64).collect();
        let zero = vec![0.0; 50];
        assert!(zeta(&t, &zero, &zero, &zero, &zero).iter().all(|&z| z == 0.0));
        let v: Vec<f64> = t.iter().map(|t| (1.0 + t).powf(-0.75) * (1.0 + 0.5 * (t).sin())).collect();
        let mut gt = zero.clone();
        gt[10] = f64::NAN;
        let z = zeta(&t, &v, &zero, &zero, &gt);
        assert!(z.windows(2).all(|w| w[1] >= w[0]));
        assert!(z[49] <= 1.5 + 1e-12 && z[49] > 1.0);
    }

    #[test]
    fn damping_constants() {
        let t: Vec<f64> = (0..200).map(|i| i as f64 * 0.1).collect();
        let zero = vec![0.0; 200];
        let r = damping_check(&t, &zero, &zero, &zero, &zero, &zero, &[0.0, 0.5]);
        assert_eq!(r.best_c, 0.0);
        assert_eq!(r.violations, 0);
        // pure exponential decay e^{-t}: lhs = e^{-2t} <= e^{-theta t} for theta <= 2 with C = 1
        let v: Vec<f64> = t.iter().map(|t| (-t).exp()).collect();
        let r = damping_check(&t, &v, &zero, &zero, &zero, &zero, &[0.5, 1.0, 2.0, 3.0]);
        assert!((r.at(2.0).unwrap().c - 1.0).abs() < 1e-12);
        assert!((r.at(0.5).unwrap().c - 1.0).abs() < 1e-12);
        assert!(r.at(3.0).unwrap().c > 2.0);
        assert_eq!(r.best_theta, 0.5);
        // growth with no forcing on the right is a violation
        let mut w = v.clone();
        w[0] = 0.0;
        let r = damping_check(&t, &w, &zero, &zero, &zero, &zero, &[1.0]);
        assert!(r.best_c.is_infinite() && r.violations == 199);
    }

    #[test]
    fn envelope_of_oscillating_decay() {
        let t = log_time_grid(1.0, 1e3, 200).unwrap();
        let y: Vec<f64> = t.iter().map(|t| (1.0 + t).powf(-1.5) * (0.5 + 0.5 * (3.0 * t).cos().abs())).collect();
        let env = envelope(&y);
        assert!(env.windows(2).all(|w| w[1] <= w[0]));
        let f = envelope_slope(&t, &y, (10.0, 1e3)).unwrap();
        assert!((f.slope + 1.5).abs() < 0.05, "{}", f.slope);
        assert!(envelope_slope(&t, &y, (2e3, 3e3)).is_err());
    }

    #[test]
    fn phase_limit_with_power_tail() {
        let t = log_time_grid(0.1, 500.0, 300).unwrap();
        let gamma: Vec<f64> = t.iter().map(|t| 2.0 - (1.0 + t).powf(-0.5)).collect();
        let gamma_t: Vec<f64> = t.iter().map(|t| 0.5 * (1.0 + t).powf(-1.5)).collect();
        let r = phase_convergence(&t, &gamma, &gamma_t, (10.0, 500.0)).unwrap();
        assert!(r.tail_reliable);
        assert!((r.gamma_inf - 2.0).abs() < 1e-3 * (1.0 + 500.0f64).powf(-0.5), "{}", r.gamma_inf);
        assert!((r.gamma_t_fit.slope + 1.5).abs() < 1e-6);
        assert!((r.gamma_gap_fit.unwrap().slope + 0.5).abs() < 0.05);
        assert!(phase_convergence(&t[..10], &gamma[..10], &gamma_t[..10], (10.0, 500.0)).is_err());
    }

    #[test]
    fn crossover_of_a_piecewise_bound() {
        let delta = 0.02;
        let t: Vec<f64> = (0..400).map(|i| 1.0 + i as f64 * 2.0).collect();
        // power law until the exponential bound takes over
        let y: Vec<f64> = t.iter().map(|t| ((1.0 + t).powf(-0.25)).min(3.0 * (-delta * t).exp())).collect();
        let r = crossover_fit(&t, &y, delta, 1.0).unwrap();
        assert!((r.rate / delta - 1.0).abs() < 0.05, "{r:?}");
        assert!((r.exponent + 0.25).abs() < 0.05);
        // the two bounds meet near t = 113
        assert!((90.0..140.0).contains(&r.t_cross), "{}", r.t_cross);
        // a pure power law has no knee
        let p: Vec<f64> = t.iter().map(|t| (1.0 + t).powf(-0.25)).collect();
        assert!(crossover_fit(&t, &p, delta, 1.0).is_err());
    }
}

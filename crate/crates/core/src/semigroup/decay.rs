use serde::{Deserialize, Serialize};

use crate::error::{arg, Result};

use super::grid::GridFunction;
use super::propagator::LinearPropagator;

/// Power-law fit `norm ~ C (1 + t)^p` over a time window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub t: Vec<f64>,
    pub norms: Vec<f64>,
    pub window: (f64, f64),
    pub samples_in_window: usize,
    pub exponent: f64,
    pub constant: f64,
    pub claimed_exponent: f64,
    /// `max_t norm(t) (1 + t)^{-claimed}` over the whole series.
    pub uniform_constant: f64,
    /// The window is better described by `log norm` linear in `t` than in `log(1 + t)`.
    pub super_polynomial: bool,
}

/// Ordinary least squares `y = a + b x`; returns `(a, b, sse)`.
pub(crate) fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let b = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let a = my - b * mx;
    let sse = x.iter().zip(y).map(|(u, v)| (v - a - b * u).powi(2)).sum();
    (a, b, sse)
}

pub fn measure_decay(t: &[f64], norms: &[f64], claimed_exponent: f64, window: (f64, f64)) -> Result<DecayFit> {
    if t.len() != norms.len() {
        return arg("time and norm series differ in length");
    }
    let (mut lx, mut tx, mut ly) = (Vec::new(), Vec::new(), Vec::new());
    for (&ti, &ni) in t.iter().zip(norms) {
        if ti >= window.0 && ti <= window.1 && ni > 0.0 && ni.is_finite() {
            lx.push((1.0 + ti).ln());
            tx.push(ti);
            ly.push(ni.ln());
        }
    }
    if lx.len() < 10 {
        return arg(format!(
            "decay window [{}, {}] holds {} usable samples; need at least 10 (extend the horizon or add samples)",
            window.0,
            window.1,
            lx.len()
        ));
    }
    let (a, b, sse_log) = linear_fit(&lx, &ly);
    let (_, rate, sse_lin) = linear_fit(&tx, &ly);
    let uniform_constant = t
        .iter()
        .zip(norms)
        .map(|(&ti, &ni)| ni * (1.0 + ti).powf(-claimed_exponent))
        .fold(0.0, f64::max);
    Ok(DecayFit {
        t: t.to_vec(),
        norms: norms.to_vec(),
        window,
        samples_in_window: lx.len(),
        exponent: b,
        constant: a.exp(),
        claimed_exponent,
        uniform_constant,
        super_polynomial: rate < 0.0 && sse_lin < 0.5 * sse_log,
    })
}

/// `n` log-spaced times from `t_lo` to `t_hi` inclusive.
pub fn log_time_grid(t_lo: f64, t_hi: f64, n: usize) -> Result<Vec<f64>> {
    if !(t_lo > 0.0 && t_hi > t_lo) || n < 2 {
        return arg("log grid needs 0 < t_lo < t_hi and at least 2 points");
    }
    let (a, b) = (t_lo.ln(), t_hi.ln());
    Ok((0..n).map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp()).collect())
}

/// One row of a linear decay study.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayRow {
    pub n_periods: usize,
    pub t: f64,
    pub norm_total: f64,
    /// `|mean_phase| ||phi'||`; constant in time.
    pub norm_mean_phase: f64,
    /// `||d_x^l d_t^m s_p(t) v||`.
    pub norm_sp: f64,
    pub norm_stilde: f64,
    pub l: u32,
    pub m: u32,
}

/// `L^2_N` norms of the decomposition of `e^{Lt} v` at each time.
pub fn linear_decay_series(prop: &LinearPropagator, v: &GridFunction, times: &[f64], l: u32, m: u32) -> Result<Vec<DecayRow>> {
    let dphi_norm = prop.dphi.l2();
    times
        .iter()
        .map(|&t| {
            let parts = prop.decompose(v, t)?;
            let sp = if l == 0 && m == 0 { parts.sp.clone() } else { prop.sp_apply(v, t, l, m)? };
            Ok(DecayRow {
                n_periods: prop.n_periods,
                t,
                norm_total: parts.total.l2(),
                norm_mean_phase: parts.mean_phase.norm() * dphi_norm,
                norm_sp: sp.l2(),
                norm_stilde: parts.stilde.l2(),
                l,
                m,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bloch::{verify_diffusive_stability, StabilityOptions};
    use crate::model::ReactionModel;
    use crate::profile::WaveProfile;
    use crate::semigroup::CutoffSpec;

    #[test]
    fn exact_power_law() {
        let t = log_time_grid(1.0, 1e3, 40).unwrap();
        let y: Vec<f64> = t.iter().map(|t| 3.0 * (1.0 + t).powf(-0.75)).collect();
        let fit = measure_decay(&t, &y, -0.75, (10.0, 1e3)).unwrap();
        assert!((fit.exponent + 0.75).abs() < 1e-6);
        assert!((fit.constant - 3.0).abs() < 1e-6);
        assert!((fit.uniform_constant - 3.0).abs() < 1e-12);
        assert!(!fit.super_polynomial);
    }

    #[test]
    fn exponential_flagged() {
        let t = log_time_grid(1.0, 60.0, 40).unwrap();
        let y: Vec<f64> = t.iter().map(|t| (-t).exp()).collect();
        let fit = measure_decay(&t, &y, -0.75, (10.0, 60.0)).unwrap();
        assert!(fit.exponent < -5.0);
        assert!(fit.super_polynomial);
    }

    #[test]
    fn short_window_rejected() {
        let t = log_time_grid(1.0, 100.0, 40).unwrap();
        let y = vec![1.0; 40];
        assert!(measure_decay(&t, &y, -0.75, (200.0, 300.0)).is_err());
        assert!(measure_decay(&t, &y[..3], -0.75, (1.0, 100.0)).is_err());
        assert!(log_time_grid(0.0, 1.0, 5).is_err());
    }

    #[test]
    fn remainder_and_phase_rates_at_n64() {
        let p = WaveProfile::analytic(&ReactionModel::real_gl(0.3).unwrap(), 8).unwrap();
        let rep = verify_diffusive_stability(&p, &StabilityOptions { scan: 64, ..Default::default() }).unwrap();
        let n_periods = 64;
        let prop = LinearPropagator::new(&p, n_periods, 8, CutoffSpec::new(rep.xi_1).unwrap(), &Default::default()).unwrap();
        let v = GridFunction::localized_random(n_periods, 8, 2, 3.0, 1.0, 1);
        let v = v.scale(1.0 / v.l1());
        let t = log_time_grid(1.0, 409.6, 40).unwrap();
        let rows = linear_decay_series(&prop, &v, &t, 0, 0).unwrap();
        let sp = measure_decay(&t, &rows.iter().map(|r| r.norm_sp).collect::<Vec<_>>(), -0.25, (10.0, 409.6)).unwrap();
        assert!((sp.exponent + 0.25).abs() < 0.1, "s_p slope {}", sp.exponent);
        // the high-frequency part decays only like e^{-0.05 t} here, so the algebraic rate
        // shows once that transient is gone
        let st = measure_decay(&t, &rows.iter().map(|r| r.norm_stilde).collect::<Vec<_>>(), -0.75, (100.0, 409.6)).unwrap();
        assert!((st.exponent + 0.75).abs() < 0.15, "S~ slope {}", st.exponent);
        let mp = rows[0].norm_mean_phase;
        assert!(rows.iter().all(|r| (r.norm_mean_phase - mp).abs() <= 1e-12 * mp));
    }
}

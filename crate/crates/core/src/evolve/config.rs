use std::collections::BTreeMap;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{arg, Result};
use crate::profile::WaveProfile;
use crate::semigroup::GridFunction;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum Scheme {
    /// Crank–Nicolson on the linear part, second-order Adams–Bashforth on `f / k`.
    #[default]
    #[serde(rename = "imex-cn")]
    ImexCn,
    /// Fourth-order exponential time differencing (Cox–Matthews, Kassam–Trefethen contour).
    #[serde(rename = "etdrk4")]
    Etdrk4,
}

impl std::str::FromStr for Scheme {
    type Err = crate::error::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "imex-cn" => Ok(Self::ImexCn),
            "etdrk4" => Ok(Self::Etdrk4),
            other => arg(format!("unknown scheme '{other}' (expected imex-cn or etdrk4)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum PerturbationShape {
    /// Random band-limited field under a Gaussian envelope, scaled to `E_0` in `L^1 ∩ H^K`.
    #[default]
    Localized,
    /// `u_0 = phi(x + shift)`.
    Translate,
    Zero,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PerturbationSpec {
    pub shape: PerturbationShape,
    /// `E_0 = ||u_0 - phi||_{L^1} + ||u_0 - phi||_{H^K}` for localized data.
    pub amplitude: f64,
    pub seed: u64,
    /// Highest frequency, in cycles per unit cell, of the random field.
    pub band: f64,
    /// Gaussian envelope width.
    pub width: f64,
    pub shift: f64,
}

impl Default for PerturbationSpec {
    fn default() -> Self {
        Self { shape: PerturbationShape::Localized, amplitude: 1e-2, seed: 1, band: 1.0, width: 4.0, shift: 0.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ExtractionMode {
    #[default]
    Projection,
    Duhamel,
    Both,
}

impl std::str::FromStr for ExtractionMode {
    type Err = crate::error::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "projection" => Ok(Self::Projection),
            "duhamel" => Ok(Self::Duhamel),
            "both" => Ok(Self::Both),
            other => arg(format!("unknown extraction mode '{other}' (expected projection, duhamel or both)")),
        }
    }
}

/// Smooth ramp `chi`: 0 for `t <= lo`, 1 for `t >= hi`, quintic smoothstep in between.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeCutoff {
    pub lo: f64,
    pub hi: f64,
}

impl Default for TimeCutoff {
    fn default() -> Self {
        Self { lo: 0.5, hi: 1.0 }
    }
}

impl TimeCutoff {
    pub fn value(&self, t: f64) -> f64 {
        let s = ((t - self.lo) / (self.hi - self.lo)).clamp(0.0, 1.0);
        s * s * s * (10.0 - 15.0 * s + 6.0 * s * s)
    }

    pub fn derivative(&self, t: f64) -> f64 {
        let w = self.hi - self.lo;
        let s = (t - self.lo) / w;
        if s <= 0.0 || s >= 1.0 {
            return 0.0;
        }
        30.0 * s * s * (1.0 - s) * (1.0 - s) / w
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExtractionSpec {
    pub mode: ExtractionMode,
    /// Cutoff radius `xi_1`; taken from the stability report when absent.
    pub cutoff: Option<f64>,
    pub chi: TimeCutoff,
    pub tol: f64,
    pub max_iter: usize,
    /// Largest `||u - phi||_{L^2_N}` the projection extraction accepts.
    pub radius: f64,
}

impl Default for ExtractionSpec {
    fn default() -> Self {
        Self { mode: ExtractionMode::Projection, cutoff: None, chi: TimeCutoff::default(), tol: 1e-8, max_iter: 25, radius: 1.0 }
    }
}

/// Full description of a nonlinear run; serializes to the TOML experiment document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationConfig {
    /// Model id used when no profile file is given (analytic or Newton-solved profile).
    pub model: Option<String>,
    pub params: BTreeMap<String, f64>,
    pub profile: Option<PathBuf>,
    /// Fourier truncation `M_F` for profiles built from `model`.
    pub modes: usize,
    pub n_periods: usize,
    pub m_x: usize,
    pub dt: f64,
    pub t_max: f64,
    pub scheme: Scheme,
    /// Sobolev order `K` of the diagnostics.
    pub k_sobolev: u32,
    /// Snapshot spacing on `[0, 10]`; finer (a fifth) on the cutoff layer `t < 1.5`.
    pub snapshot_stride: f64,
    /// Geometric growth of the spacing after `t = 10`.
    pub snapshot_growth: f64,
    pub snapshot_max_stride: f64,
    pub perturbation: PerturbationSpec,
    pub extraction: ExtractionSpec,
    pub output_dir: Option<PathBuf>,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            model: Some("rgl".into()),
            params: BTreeMap::new(),
            profile: None,
            modes: 8,
            n_periods: 16,
            m_x: 17,
            dt: 0.01,
            t_max: 1024.0,
            scheme: Scheme::ImexCn,
            k_sobolev: 3,
            snapshot_stride: 0.25,
            snapshot_growth: 1.03,
            snapshot_max_stride: 5.0,
            perturbation: PerturbationSpec::default(),
            extraction: ExtractionSpec::default(),
            output_dir: None,
        }
    }
}

impl SimulationConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| crate::error::Error::Argument(format!("config: {e}")))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn steps(&self) -> u64 {
        (self.t_max / self.dt).round() as u64
    }

    /// Checks the grid and time step against the profile; returns the explicit-stiffness
    /// bound `0.5 k / sup|Df(phi)|` the time step must respect.
    pub fn validate(&self, profile: &WaveProfile) -> Result<f64> {
        if self.n_periods == 0 {
            return arg("N must be at least 1");
        }
        if self.m_x < 2 * profile.m_f + 1 {
            return arg(format!(
                "m_x = {} must be at least 2 M_F + 1 = {} for the profile truncation",
                self.m_x,
                2 * profile.m_f + 1
            ));
        }
        if !(self.dt > 0.0 && self.t_max > 0.0 && self.t_max.is_finite()) {
            return arg("dt and t_max must be positive");
        }
        if !(self.snapshot_stride > 0.0 && self.snapshot_growth >= 1.0 && self.snapshot_max_stride >= self.snapshot_stride) {
            return arg("snapshot stride must be positive, growth >= 1, max stride >= stride");
        }
        if self.k_sobolev == 0 {
            return arg("Sobolev order K must be at least 1");
        }
        let p = &self.perturbation;
        if !(p.amplitude >= 0.0 && p.amplitude.is_finite()) || !(p.width > 0.0) || !(p.band >= 0.0) {
            return arg("perturbation amplitude must be >= 0, width > 0, band >= 0");
        }
        let e = &self.extraction;
        if e.chi.hi <= e.chi.lo || e.chi.lo < 0.0 || !(e.tol > 0.0) || e.max_iter == 0 {
            return arg("extraction: chi needs 0 <= lo < hi, tol > 0, max_iter >= 1");
        }
        let phi = GridFunction::from_profile(profile, 1, 4 * profile.m_f + 4, 0);
        let n = profile.n();
        let bound = profile.model.jacobian_bound(phi.values.chunks(n).map(|c| c.iter().map(|z| z.re).collect()));
        let dt_max = if bound > 0.0 { 0.5 * profile.k / bound } else { f64::INFINITY };
        if self.dt > dt_max {
            return arg(format!("dt = {} exceeds the explicit stability bound {dt_max:.4e}", self.dt));
        }
        Ok(dt_max)
    }

    /// Step indices at which snapshots are recorded (always includes 0 and the final step).
    pub fn snapshot_steps(&self) -> Vec<u64> {
        let total = self.steps();
        let mut out = vec![0u64];
        let mut t = 0.0;
        let mut stride = self.snapshot_stride;
        loop {
            let h = if t < 1.5 { self.snapshot_stride / 5.0 } else if t < 10.0 { self.snapshot_stride } else {
                stride = (stride * self.snapshot_growth).min(self.snapshot_max_stride);
                stride
            };
            t += h;
            let s = ((t / self.dt).round() as u64).min(total);
            if s > *out.last().unwrap() {
                out.push(s);
            }
            if s >= total {
                break;
            }
        }
        out
    }
}

/// Initial perturbation `u_0 - phi` on the simulation grid.
pub fn initial_perturbation(profile: &WaveProfile, cfg: &SimulationConfig) -> GridFunction {
    let (np, m_x, n) = (cfg.n_periods, cfg.m_x, profile.n());
    let p = &cfg.perturbation;
    match p.shape {
        PerturbationShape::Zero => GridFunction::zeros(np, m_x, n),
        PerturbationShape::Translate => {
            let phi = GridFunction::from_profile(profile, np, m_x, 0);
            GridFunction::from_profile(&profile.shifted(p.shift), np, m_x, 0).sub(&phi)
        }
        PerturbationShape::Localized => {
            if p.amplitude == 0.0 {
                return GridFunction::zeros(np, m_x, n);
            }
            let raw = GridFunction::localized_random(np, m_x, n, p.band, p.width, p.seed);
            let size = raw.l1() + raw.hs(cfg.k_sobolev as f64);
            raw.scale(p.amplitude / size)
        }
    }
}

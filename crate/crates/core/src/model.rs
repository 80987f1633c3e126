//! Reaction terms `f` and their Jacobians for the built-in systems.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{arg, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModelKind {
    /// Real form of `u_t = u_xx + u - |u|^2 u`.
    RealGl,
    /// Lambda-omega system `f(u) = (1 - |u|^2) u - beta |u|^2 J u` (nonzero group velocity).
    Cgl,
    Brusselator,
    Nagumo,
}

impl ModelKind {
    pub fn from_id(id: &str) -> Result<Self> {
        match id.to_ascii_lowercase().as_str() {
            "rgl" | "realgl" => Ok(Self::RealGl),
            "cgl" | "lambda-omega" => Ok(Self::Cgl),
            "brusselator" | "bruss" => Ok(Self::Brusselator),
            "nagumo" => Ok(Self::Nagumo),
            other => arg(format!("unknown model '{other}' (expected rgl, cgl, brusselator, nagumo)")),
        }
    }

    pub fn id(self) -> &'static str {
        match self {
            Self::RealGl => "rgl",
            Self::Cgl => "cgl",
            Self::Brusselator => "brusselator",
            Self::Nagumo => "nagumo",
        }
    }

    pub fn n(self) -> usize {
        match self {
            Self::Nagumo => 1,
            _ => 2,
        }
    }

    fn defaults(self) -> &'static [(&'static str, f64)] {
        match self {
            Self::RealGl => &[("q", 0.3)],
            Self::Cgl => &[("q", 0.3), ("beta", 0.5)],
            Self::Brusselator => &[("A", 2.0), ("B", 5.2)],
            Self::Nagumo => &[("alpha", 0.25)],
        }
    }
}

/// A reaction-diffusion nonlinearity with validated parameters.
///
/// Parameters are resolved once at construction into plain fields so the
/// inner-loop evaluators do no map lookups.
#[derive(Debug, Clone, PartialEq)]
pub struct ReactionModel {
    kind: ModelKind,
    params: BTreeMap<String, f64>,
    p0: f64,
    p1: f64,
}

impl ReactionModel {
    pub fn new(id: &str, params: &BTreeMap<String, f64>) -> Result<Self> {
        Self::from_kind(ModelKind::from_id(id)?, params)
    }

    pub fn from_kind(kind: ModelKind, overrides: &BTreeMap<String, f64>) -> Result<Self> {
        let mut params: BTreeMap<String, f64> =
            kind.defaults().iter().map(|(k, v)| (k.to_string(), *v)).collect();
        for (key, value) in overrides {
            match params.get_mut(key.as_str()) {
                Some(slot) => *slot = *value,
                None => {
                    let known: Vec<_> = kind.defaults().iter().map(|(k, _)| *k).collect();
                    return arg(format!(
                        "model {} has no parameter '{key}' (known: {})",
                        kind.id(),
                        known.join(", ")
                    ));
                }
            }
        }
        for (key, value) in &params {
            if !value.is_finite() {
                return arg(format!("parameter {key} must be finite"));
            }
        }
        let get = |k: &str| params[k];
        let (p0, p1) = match kind {
            ModelKind::RealGl => {
                let q = get("q");
                check_wavenumber(q)?;
                (q, 0.0)
            }
            ModelKind::Cgl => {
                let q = get("q");
                check_wavenumber(q)?;
                (q, get("beta"))
            }
            ModelKind::Brusselator => {
                let (a, b) = (get("A"), get("B"));
                if a <= 0.0 || b <= 0.0 {
                    return arg("brusselator requires A > 0 and B > 0");
                }
                (a, b)
            }
            ModelKind::Nagumo => {
                let alpha = get("alpha");
                if !(alpha > 0.0 && alpha < 1.0) {
                    return arg("nagumo requires 0 < alpha < 1");
                }
                (alpha, 0.0)
            }
        };
        Ok(Self { kind, params, p0, p1 })
    }

    pub fn real_gl(q: f64) -> Result<Self> {
        Self::from_kind(ModelKind::RealGl, &BTreeMap::from([("q".to_string(), q)]))
    }

    pub fn cgl(q: f64, beta: f64) -> Result<Self> {
        Self::from_kind(
            ModelKind::Cgl,
            &BTreeMap::from([("q".to_string(), q), ("beta".to_string(), beta)]),
        )
    }

    pub fn brusselator(a: f64, b: f64) -> Result<Self> {
        Self::from_kind(
            ModelKind::Brusselator,
            &BTreeMap::from([("A".to_string(), a), ("B".to_string(), b)]),
        )
    }

    pub fn nagumo(alpha: f64) -> Result<Self> {
        Self::from_kind(ModelKind::Nagumo, &BTreeMap::from([("alpha".to_string(), alpha)]))
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn id(&self) -> &'static str {
        self.kind.id()
    }

    pub fn n(&self) -> usize {
        self.kind.n()
    }

    pub fn params(&self) -> &BTreeMap<String, f64> {
        &self.params
    }

    pub fn param(&self, name: &str) -> Option<f64> {
        self.params.get(name).copied()
    }

    pub fn has_param(&self, name: &str) -> bool {
        self.params.contains_key(name)
    }

    pub fn with_param(&self, name: &str, value: f64) -> Result<Self> {
        let mut p = self.params.clone();
        p.insert(name.to_string(), value);
        Self::from_kind(self.kind, &p)
    }

    pub fn eval_f(&self, u: &[f64]) -> Result<Vec<f64>> {
        self.check_len(u)?;
        let mut out = vec![0.0; self.n()];
        self.f_into(u, &mut out);
        Ok(out)
    }

    /// Row-major `n x n` Jacobian.
    pub fn eval_jacobian(&self, u: &[f64]) -> Result<Vec<f64>> {
        self.check_len(u)?;
        let n = self.n();
        let mut out = vec![0.0; n * n];
        self.jacobian_into(u, &mut out);
        Ok(out)
    }

    fn check_len(&self, u: &[f64]) -> Result<()> {
        if u.len() != self.n() {
            return Err(Error::DimensionMismatch { expected: self.n(), got: u.len() });
        }
        Ok(())
    }

    /// Unchecked evaluation for inner loops; `u` and `out` must have length `n`.
    #[inline]
    pub fn f_into(&self, u: &[f64], out: &mut [f64]) {
        match self.kind {
            ModelKind::RealGl => {
                let g = 1.0 - u[0] * u[0] - u[1] * u[1];
                out[0] = g * u[0];
                out[1] = g * u[1];
            }
            ModelKind::Cgl => {
                let r2 = u[0] * u[0] + u[1] * u[1];
                let g = 1.0 - r2;
                let b = self.p1 * r2;
                out[0] = g * u[0] + b * u[1];
                out[1] = g * u[1] - b * u[0];
            }
            ModelKind::Brusselator => {
                let (a, b) = (self.p0, self.p1);
                let uuv = u[0] * u[0] * u[1];
                out[0] = a - (b + 1.0) * u[0] + uuv;
                out[1] = b * u[0] - uuv;
            }
            ModelKind::Nagumo => {
                out[0] = u[0] * (1.0 - u[0]) * (u[0] - self.p0);
            }
        }
    }

    #[inline]
    pub fn jacobian_into(&self, u: &[f64], out: &mut [f64]) {
        match self.kind {
            ModelKind::RealGl => {
                let g = 1.0 - u[0] * u[0] - u[1] * u[1];
                let cross = -2.0 * u[0] * u[1];
                out[0] = g - 2.0 * u[0] * u[0];
                out[1] = cross;
                out[2] = cross;
                out[3] = g - 2.0 * u[1] * u[1];
            }
            ModelKind::Cgl => {
                let beta = self.p1;
                let r2 = u[0] * u[0] + u[1] * u[1];
                let g = 1.0 - r2;
                let uv = u[0] * u[1];
                out[0] = g - 2.0 * u[0] * u[0] + 2.0 * beta * uv;
                out[1] = -2.0 * uv + beta * (r2 + 2.0 * u[1] * u[1]);
                out[2] = -2.0 * uv - beta * (r2 + 2.0 * u[0] * u[0]);
                out[3] = g - 2.0 * u[1] * u[1] - 2.0 * beta * uv;
            }
            ModelKind::Brusselator => {
                let b = self.p1;
                let uv2 = 2.0 * u[0] * u[1];
                let uu = u[0] * u[0];
                out[0] = -(b + 1.0) + uv2;
                out[1] = uu;
                out[2] = b - uv2;
                out[3] = -uu;
            }
            ModelKind::Nagumo => {
                let a = self.p0;
                out[0] = -3.0 * u[0] * u[0] + 2.0 * (1.0 + a) * u[0] - a;
            }
        }
    }

    /// Second-order Taylor remainder `f(a + p) - f(a) - Df(a) p`, expanded in closed form so
    /// small `p` does not lose digits to cancellation.
    #[inline]
    pub fn remainder_into(&self, a: &[f64], p: &[f64], out: &mut [f64]) {
        match self.kind {
            ModelKind::RealGl | ModelKind::Cgl => {
                let s = 2.0 * (a[0] * p[0] + a[1] * p[1]) + p[0] * p[0] + p[1] * p[1];
                let pp = p[0] * p[0] + p[1] * p[1];
                out[0] = -s * p[0] - pp * a[0];
                out[1] = -s * p[1] - pp * a[1];
                if self.kind == ModelKind::Cgl {
                    let beta = self.p1;
                    out[0] += beta * (s * p[1] + pp * a[1]);
                    out[1] -= beta * (s * p[0] + pp * a[0]);
                }
            }
            ModelKind::Brusselator => {
                let r = a[1] * p[0] * p[0] + 2.0 * a[0] * p[0] * p[1] + p[0] * p[0] * p[1];
                out[0] = r;
                out[1] = -r;
            }
            ModelKind::Nagumo => {
                let q = p[0] * p[0];
                out[0] = (1.0 + self.p0 - 3.0 * a[0]) * q - q * p[0];
            }
        }
    }

    /// Homogeneous equilibria used as reference states.
    pub fn equilibrium(&self) -> Vec<f64> {
        match self.kind {
            ModelKind::RealGl | ModelKind::Cgl => vec![0.0, 0.0],
            ModelKind::Brusselator => vec![self.p0, self.p1 / self.p0],
            ModelKind::Nagumo => vec![self.p0],
        }
    }

    /// Closed-form wave `(k, c, amplitude)` for the Ginzburg–Landau type models:
    /// `phi(y) = amp (cos 2 pi y, sin 2 pi y)`.
    pub fn analytic_wave(&self) -> Option<(f64, f64, f64)> {
        match self.kind {
            ModelKind::RealGl => {
                let q = self.p0;
                Some((q / (2.0 * PI), 0.0, (1.0 - q * q).sqrt()))
            }
            ModelKind::Cgl => {
                let q = self.p0;
                Some((q / (2.0 * PI), self.p1 * (1.0 - q * q) / q, (1.0 - q * q).sqrt()))
            }
            _ => None,
        }
    }

    /// Upper estimate of `sup |Df|` (spectral norm) over the range of `values`.
    pub fn jacobian_bound(&self, values: impl Iterator<Item = Vec<f64>>) -> f64 {
        let n = self.n();
        let mut jac = vec![0.0; n * n];
        let mut best: f64 = 0.0;
        for u in values {
            self.jacobian_into(&u, &mut jac);
            // Frobenius norm bounds the spectral norm
            let fro = jac.iter().map(|x| x * x).sum::<f64>().sqrt();
            best = best.max(fro);
        }
        best
    }
}

fn check_wavenumber(q: f64) -> Result<()> {
    if q == 0.0 {
        return arg("q = 0 gives a constant state, not a wave train");
    }
    if q * q >= 1.0 {
        return arg(format!("q = {q} outside the wave family (requires q^2 < 1; amplitude sqrt(1-q^2) is imaginary)"));
    }
    Ok(())
}

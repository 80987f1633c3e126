//! Periodic wave profiles: Fourier–Galerkin Newton solver and natural-parameter continuation.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::Path;

use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::error::{arg, Error, Result};
use crate::fourier::{coefficients_of, eval_series, sample_series, slot_of_mode, Transform, C64, I};
use crate::linalg::solve_real;
use crate::model::{ModelKind, ReactionModel};

const TWO_PI: f64 = 2.0 * PI;

/// A 1-periodic stationary solution of `k^2 phi'' + k c phi' + f(phi) = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveProfile {
    pub model: ReactionModel,
    pub k: f64,
    pub c: f64,
    pub m_f: usize,
    /// `coeffs[comp][l + m_f]` for `l in [-m_f, m_f]`.
    pub coeffs: Vec<Vec<C64>>,
    pub residual_norm: f64,
}

/// Which scalar balances the phase condition in the Newton system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum SolveFor {
    /// Coefficients plus the speed `c` at fixed `k`.
    #[default]
    #[serde(rename = "c")]
    Speed,
    /// Coefficients plus the wavenumber `k` at fixed `c`.
    #[serde(rename = "k")]
    Wavenumber,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Minimum `||phi'||_{L^2(0,1)}` for a profile to count as a wave.
    pub deriv_floor: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self { tol: 1e-10, max_iter: 50, deriv_floor: 1e-6 }
    }
}

/// Residual history of a Newton solve, one entry per iterate (including the initial guess).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct NewtonReport {
    pub residuals: Vec<f64>,
}

impl WaveProfile {
    /// Build a profile from coefficient data, computing its residual.
    pub fn new(model: ReactionModel, k: f64, c: f64, coeffs: Vec<Vec<C64>>) -> Result<Self> {
        if coeffs.len() != model.n() {
            return Err(Error::DimensionMismatch { expected: model.n(), got: coeffs.len() });
        }
        let len = coeffs[0].len();
        if len % 2 == 0 || coeffs.iter().any(|c| c.len() != len) {
            return arg("coefficient sequences must share an odd length 2*m_f+1");
        }
        if !(k.is_finite() && k > 0.0 && c.is_finite()) {
            return arg("k must be positive and c finite");
        }
        let mut p = Self { model, k, c, m_f: len / 2, coeffs, residual_norm: f64::NAN };
        p.enforce_hermitian();
        p.residual_norm = profile_residual(&p);
        Ok(p)
    }

    /// Closed-form wave of the Ginzburg–Landau type models, `amp (cos 2 pi y, sin 2 pi y)`.
    pub fn analytic(model: &ReactionModel, m_f: usize) -> Result<Self> {
        let Some((k, c, amp)) = model.analytic_wave() else {
            return arg(format!("model {} has no closed-form wave", model.id()));
        };
        let mut coeffs = vec![vec![C64::new(0.0, 0.0); 2 * m_f + 1]; 2];
        coeffs[0][m_f + 1] = C64::new(amp / 2.0, 0.0);
        coeffs[0][m_f - 1] = C64::new(amp / 2.0, 0.0);
        coeffs[1][m_f + 1] = C64::new(0.0, -amp / 2.0);
        coeffs[1][m_f - 1] = C64::new(0.0, amp / 2.0);
        Self::new(model.clone(), k, c, coeffs)
    }

    /// Model-specific starting point for Newton: the closed form where one exists,
    /// otherwise a small-amplitude mode near the onset of the homogeneous instability.
    pub fn initial_guess(model: &ReactionModel, m_f: usize) -> Result<Self> {
        let zero = || vec![C64::new(0.0, 0.0); 2 * m_f + 1];
        match model.kind() {
            ModelKind::RealGl | ModelKind::Cgl => Self::analytic(model, m_f),
            ModelKind::Nagumo => {
                let alpha = model.param("alpha").unwrap_or(0.25);
                let growth = alpha * (1.0 - alpha);
                let k = (0.9 * growth).sqrt() / TWO_PI;
                let mut c0 = zero();
                c0[m_f] = C64::new(alpha, 0.0);
                c0[m_f + 1] = C64::new(0.1, 0.0);
                c0[m_f - 1] = C64::new(0.1, 0.0);
                Self::new(model.clone(), k, 0.0, vec![c0])
            }
            ModelKind::Brusselator => {
                let a = model.param("A").unwrap_or(2.0);
                let b = model.param("B").unwrap_or(5.2);
                let mu_r = (b - 1.0 - a * a) / 2.0;
                if mu_r <= 0.0 {
                    return arg("brusselator wave trains need B > 1 + A^2 (oscillatory instability)");
                }
                let mu_i = (a * a - mu_r * mu_r).max(1e-12).sqrt();
                // stationary in the co-moving frame when mu = 4 pi^2 k^2 - 2 pi i k c; back off to
                // half the linear growth so the amplitude is finite
                let k = (0.5 * mu_r).sqrt() / TWO_PI;
                let c = -mu_i / (TWO_PI * k);
                // small amplitudes let Newton collapse onto the equilibrium
                let eps = 4.0 * mu_r.sqrt();
                let v = [C64::new(a * a, 0.0), -(C64::new(b - 1.0, 0.0) - C64::new(mu_r, -mu_i))];
                let scale = eps / (v[0].norm_sqr() + v[1].norm_sqr()).sqrt();
                let eq = model.equilibrium();
                let mut coeffs = vec![zero(), zero()];
                for comp in 0..2 {
                    coeffs[comp][m_f] = C64::new(eq[comp], 0.0);
                    coeffs[comp][m_f + 1] = v[comp] * (scale / 2.0);
                    coeffs[comp][m_f - 1] = v[comp].conj() * (scale / 2.0);
                }
                Self::new(model.clone(), k, c, coeffs)
            }
        }
    }

    pub fn n(&self) -> usize {
        self.model.n()
    }

    pub fn coeff(&self, comp: usize, l: i64) -> C64 {
        if l.unsigned_abs() as usize > self.m_f {
            return C64::new(0.0, 0.0);
        }
        self.coeffs[comp][(l + self.m_f as i64) as usize]
    }

    /// Coefficients of `d^deriv phi / dx^deriv`.
    pub fn derivative_coeffs(&self, deriv: u32) -> Vec<Vec<C64>> {
        let m = self.m_f as i64;
        self.coeffs
            .iter()
            .map(|c| {
                (-m..=m)
                    .map(|l| c[(l + m) as usize] * (I * (TWO_PI * l as f64)).powu(deriv))
                    .collect()
            })
            .collect()
    }

    /// `||phi'||_{L^2(0,1)}` by Parseval.
    pub fn derivative_norm(&self) -> f64 {
        self.derivative_coeffs(1).iter().flatten().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_amplitude(&self, samples: usize) -> f64 {
        let pts: Vec<f64> = (0..samples).map(|j| j as f64 / samples as f64).collect();
        evaluate_profile(self, &pts, 0)
            .expect("deriv 0 is valid")
            .iter()
            .map(|row| row.iter().map(|x| x * x).sum::<f64>().sqrt())
            .fold(0.0, f64::max)
    }

    /// Same wave with truncation order `m_new` (zero-padded or truncated).
    pub fn resampled(&self, m_new: usize) -> Result<Self> {
        let coeffs = (0..self.n())
            .map(|comp| (-(m_new as i64)..=m_new as i64).map(|l| self.coeff(comp, l)).collect())
            .collect();
        Self::new(self.model.clone(), self.k, self.c, coeffs)
    }

    /// Translate `phi(. + s)`.
    pub fn shifted(&self, s: f64) -> Self {
        let m = self.m_f as i64;
        let mut out = self.clone();
        for c in out.coeffs.iter_mut() {
            for l in -m..=m {
                c[(l + m) as usize] *= C64::from_polar(1.0, TWO_PI * l as f64 * s);
            }
        }
        out
    }

    /// Energy fraction in the outer quarter of modes; a cheap resolution indicator.
    pub fn tail_fraction(&self) -> f64 {
        let m = self.m_f as i64;
        let cut = (3 * m) / 4;
        let (mut tail, mut total) = (0.0, 0.0);
        for c in &self.coeffs {
            for l in -m..=m {
                let e = c[(l + m) as usize].norm_sqr();
                total += e;
                if l.abs() > cut {
                    tail += e;
                }
            }
        }
        if total == 0.0 { 0.0 } else { (tail / total).sqrt() }
    }

    fn enforce_hermitian(&mut self) {
        let m = self.m_f;
        for c in self.coeffs.iter_mut() {
            c[m].im = 0.0;
            for l in 1..=m {
                let avg = (c[m + l] + c[m - l].conj()) * 0.5;
                c[m + l] = avg;
                c[m - l] = avg.conj();
            }
        }
    }

    pub fn to_document(&self) -> ProfileDocument {
        ProfileDocument {
            model_id: self.model.id().to_string(),
            params: self.model.params().clone(),
            n: self.n(),
            m_f: self.m_f,
            k: self.k,
            c: self.c,
            coeffs: self.coeffs.iter().map(|c| c.iter().map(|z| [z.re, z.im]).collect()).collect(),
            residual_norm: self.residual_norm,
        }
    }

    /// Rebuild from a document without recomputing anything, so a save/load round trip is exact.
    pub fn from_document(doc: &ProfileDocument) -> Result<Self> {
        let model = ReactionModel::new(&doc.model_id, &doc.params)?;
        if doc.n != model.n() || doc.coeffs.len() != doc.n {
            return Err(Error::DimensionMismatch { expected: model.n(), got: doc.coeffs.len() });
        }
        if doc.coeffs.iter().any(|c| c.len() != 2 * doc.m_f + 1) {
            return arg("coefficient list length does not match m_f");
        }
        Ok(Self {
            model,
            k: doc.k,
            c: doc.c,
            m_f: doc.m_f,
            coeffs: doc.coeffs.iter().map(|c| c.iter().map(|p| C64::new(p[0], p[1])).collect()).collect(),
            residual_norm: doc.residual_norm,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(&self.to_document())?;
        std::fs::write(path, text)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let doc: ProfileDocument = serde_json::from_str(&text)?;
        Self::from_document(&doc)
    }
}

/// On-disk profile representation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileDocument {
    pub model_id: String,
    pub params: BTreeMap<String, f64>,
    pub n: usize,
    pub m_f: usize,
    pub k: f64,
    pub c: f64,
    pub coeffs: Vec<Vec<[f64; 2]>>,
    pub residual_norm: f64,
}

/// Values of `d^deriv phi` at `points`, indexed `[point][component]`.
pub fn evaluate_profile(profile: &WaveProfile, points: &[f64], deriv: u32) -> Result<Vec<Vec<f64>>> {
    if deriv > 4 {
        return arg("profile derivatives are limited to order 4");
    }
    Ok(points
        .iter()
        .map(|&x| {
            // reduce to [0, 1) so periodicity holds to rounding of the reduction only
            let xr = x - x.floor();
            profile.coeffs.iter().map(|c| eval_series(c, xr, deriv).re).collect()
        })
        .collect())
}

/// `L^2(0,1)` norm of `k^2 phi'' + k c phi' + f(phi)` on a grid of `4(2 m_f + 1)` points.
pub fn profile_residual(profile: &WaveProfile) -> f64 {
    let p = 4 * (2 * profile.m_f + 1);
    let plan = Transform::new(p);
    let n = profile.n();
    let phi: Vec<Vec<f64>> = profile.coeffs.iter().map(|c| sample_series(c, p, 0, &plan)).collect();
    let d1: Vec<Vec<f64>> = profile.coeffs.iter().map(|c| sample_series(c, p, 1, &plan)).collect();
    let d2: Vec<Vec<f64>> = profile.coeffs.iter().map(|c| sample_series(c, p, 2, &plan)).collect();
    let (k, c) = (profile.k, profile.c);
    let mut u = vec![0.0; n];
    let mut f = vec![0.0; n];
    let mut acc = 0.0;
    for j in 0..p {
        for comp in 0..n {
            u[comp] = phi[comp][j];
        }
        profile.model.f_into(&u, &mut f);
        for comp in 0..n {
            let r = k * k * d2[comp][j] + k * c * d1[comp][j] + f[comp];
            acc += r * r;
        }
    }
    (acc / p as f64).sqrt()
}

/// Layout of the real Newton unknowns: per component `[Re z_0, Re z_1, Im z_1, ..., Re z_M, Im z_M]`,
/// followed by the free scalar.
struct Layout {
    n: usize,
    m: usize,
}

impl Layout {
    fn block(&self) -> usize {
        2 * self.m + 1
    }
    fn dim(&self) -> usize {
        self.n * self.block() + 1
    }
    fn re(&self, comp: usize, l: usize) -> usize {
        comp * self.block() + if l == 0 { 0 } else { 2 * l - 1 }
    }
    fn im(&self, comp: usize, l: usize) -> usize {
        debug_assert!(l > 0);
        comp * self.block() + 2 * l
    }
}

struct Galerkin<'a> {
    model: &'a ReactionModel,
    n: usize,
    m: usize,
    plan: Transform,
}

impl<'a> Galerkin<'a> {
    fn new(model: &'a ReactionModel, m: usize) -> Self {
        Self { model, n: model.n(), m, plan: Transform::new(2 * (2 * m + 1)) }
    }

    fn grid(&self) -> usize {
        self.plan.len()
    }

    fn samples(&self, coeffs: &[Vec<C64>]) -> Vec<Vec<f64>> {
        coeffs.iter().map(|c| sample_series(c, self.grid(), 0, &self.plan)).collect()
    }

    /// Galerkin residual coefficients `F[comp][l + m]`.
    fn residual(&self, coeffs: &[Vec<C64>], k: f64, c: f64) -> Vec<Vec<C64>> {
        let (n, m, p) = (self.n, self.m, self.grid());
        let phi = self.samples(coeffs);
        let mut fvals = vec![vec![0.0; p]; n];
        let mut u = vec![0.0; n];
        let mut f = vec![0.0; n];
        for j in 0..p {
            for comp in 0..n {
                u[comp] = phi[comp][j];
            }
            self.model.f_into(&u, &mut f);
            for comp in 0..n {
                fvals[comp][j] = f[comp];
            }
        }
        (0..n)
            .map(|comp| {
                let fc = coefficients_of(&fvals[comp], m, &self.plan);
                (0..=2 * m)
                    .map(|idx| {
                        let w = TWO_PI * (idx as f64 - m as f64);
                        let sym = C64::new(-k * k * w * w, k * c * w);
                        sym * coeffs[comp][idx] + fc[idx]
                    })
                    .collect()
            })
            .collect()
    }

    /// Fourier coefficients of `Df(phi)`: `[row][col][slot]` in DFT order on the Galerkin grid.
    fn jacobian_coeffs(&self, coeffs: &[Vec<C64>]) -> Vec<Vec<Vec<C64>>> {
        let (n, p) = (self.n, self.grid());
        let phi = self.samples(coeffs);
        let mut entries = vec![vec![vec![C64::new(0.0, 0.0); p]; n]; n];
        let mut u = vec![0.0; n];
        let mut jac = vec![0.0; n * n];
        for j in 0..p {
            for comp in 0..n {
                u[comp] = phi[comp][j];
            }
            self.model.jacobian_into(&u, &mut jac);
            for r in 0..n {
                for s in 0..n {
                    entries[r][s][j] = C64::new(jac[r * n + s], 0.0);
                }
            }
        }
        for row in entries.iter_mut() {
            for e in row.iter_mut() {
                self.plan.analyze(e);
            }
        }
        entries
    }
}

fn pack(layout: &Layout, coeffs: &[Vec<C64>], extra: f64) -> Vec<f64> {
    let mut p = vec![0.0; layout.dim()];
    let m = layout.m;
    for (comp, c) in coeffs.iter().enumerate() {
        p[layout.re(comp, 0)] = c[m].re;
        for l in 1..=m {
            p[layout.re(comp, l)] = c[m + l].re;
            p[layout.im(comp, l)] = c[m + l].im;
        }
    }
    p[layout.dim() - 1] = extra;
    p
}

fn unpack(layout: &Layout, p: &[f64]) -> (Vec<Vec<C64>>, f64) {
    let m = layout.m;
    let coeffs = (0..layout.n)
        .map(|comp| {
            let mut c = vec![C64::new(0.0, 0.0); 2 * m + 1];
            c[m] = C64::new(p[layout.re(comp, 0)], 0.0);
            for l in 1..=m {
                let z = C64::new(p[layout.re(comp, l)], p[layout.im(comp, l)]);
                c[m + l] = z;
                c[m - l] = z.conj();
            }
            c
        })
        .collect();
    (coeffs, p[layout.dim() - 1])
}

/// Newton's method for the profile equation; see [`solve_profile_with_report`].
pub fn solve_profile(
    model: &ReactionModel,
    guess: &WaveProfile,
    unknowns: SolveFor,
    options: &SolveOptions,
) -> Result<WaveProfile> {
    solve_profile_with_report(model, guess, unknowns, options).map(|(p, _)| p)
}

/// Solve `k^2 phi'' + k c phi' + f(phi) = 0` for the Fourier coefficients and one of `c` or `k`,
/// pinning the phase by `<guess', phi> = 0`.
pub fn solve_profile_with_report(
    model: &ReactionModel,
    guess: &WaveProfile,
    unknowns: SolveFor,
    options: &SolveOptions,
) -> Result<(WaveProfile, NewtonReport)> {
    let m = guess.m_f;
    if m < 8 {
        return arg(format!("truncation order m_f = {m} is below the minimum of 8"));
    }
    if guess.n() != model.n() {
        return Err(Error::DimensionMismatch { expected: model.n(), got: guess.n() });
    }
    if guess.derivative_norm() < options.deriv_floor {
        return Err(Error::Degenerate("initial guess is constant (phi' = 0)".into()));
    }
    let n = model.n();
    let layout = Layout { n, m };
    let galerkin = Galerkin::new(model, m);
    let p_grid = galerkin.grid();
    let dim = layout.dim();

    // phase-condition gradient from the fixed guess derivative
    let gd = guess.derivative_coeffs(1);
    let mut phase_row = vec![0.0; dim];
    for comp in 0..n {
        phase_row[layout.re(comp, 0)] = gd[comp][m].re;
        for l in 1..=m {
            phase_row[layout.re(comp, l)] = 2.0 * gd[comp][m + l].re;
            phase_row[layout.im(comp, l)] = 2.0 * gd[comp][m + l].im;
        }
    }

    let (mut k, mut c) = (guess.k, guess.c);
    let extra0 = match unknowns {
        SolveFor::Speed => c,
        SolveFor::Wavenumber => k,
    };
    let mut p = pack(&layout, &guess.coeffs, extra0);
    let mut report = NewtonReport::default();

    for iter in 0..=options.max_iter {
        let (coeffs, extra) = unpack(&layout, &p);
        match unknowns {
            SolveFor::Speed => c = extra,
            SolveFor::Wavenumber => k = extra,
        }
        let f = galerkin.residual(&coeffs, k, c);
        let phase: f64 = phase_row[..dim - 1].iter().zip(&p[..dim - 1]).map(|(a, b)| a * b).sum();
        let res = f.iter().flatten().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        report.residuals.push(res);
        if !res.is_finite() || !k.is_finite() || !c.is_finite() {
            return Err(Error::Convergence { iterations: iter, residual: res });
        }
        if res < options.tol && phase.abs() < options.tol.max(1e-12) {
            let profile = WaveProfile::new(model.clone(), k, c, coeffs)?;
            if profile.derivative_norm() < options.deriv_floor {
                return Err(Error::Degenerate(format!(
                    "Newton converged to a constant state (||phi'|| = {:.3e})",
                    profile.derivative_norm()
                )));
            }
            if !(profile.residual_norm < options.tol) {
                // Galerkin system solved but modes beyond m_f still carry residual
                return Err(Error::Convergence { iterations: iter, residual: profile.residual_norm });
            }
            return Ok((profile, report));
        }
        if iter == options.max_iter {
            return Err(Error::Convergence { iterations: iter, residual: res });
        }

        // bordered real Jacobian
        let dcoef = galerkin.jacobian_coeffs(&coeffs);
        let dhat = |r: usize, s: usize, shift: i64| dcoef[r][s][slot_of_mode(shift, p_grid)];
        let mut jac = Mat::<f64>::zeros(dim, dim);
        // complex derivative dF(beta, l) / dz(alpha, l')
        let jc = |beta: usize, l: i64, alpha: usize, lp: i64| -> C64 {
            let mut v = dhat(beta, alpha, l - lp);
            if beta == alpha && l == lp {
                let w = TWO_PI * l as f64;
                v += C64::new(-k * k * w * w, k * c * w);
            }
            v
        };
        for beta in 0..n {
            for l in 0..=m {
                let li = l as i64;
                let mut put = |col: usize, d: C64| {
                    jac[(layout.re(beta, l), col)] = d.re;
                    if l > 0 {
                        jac[(layout.im(beta, l), col)] = d.im;
                    }
                };
                for alpha in 0..n {
                    put(layout.re(alpha, 0), jc(beta, li, alpha, 0));
                    for lp in 1..=m as i64 {
                        let plus = jc(beta, li, alpha, lp);
                        let minus = jc(beta, li, alpha, -lp);
                        put(layout.re(alpha, lp as usize), plus + minus);
                        put(layout.im(alpha, lp as usize), I * (plus - minus));
                    }
                }
                let w = TWO_PI * li as f64;
                let z = coeffs[beta][m + l];
                let d_extra = match unknowns {
                    SolveFor::Speed => C64::new(0.0, k * w) * z,
                    SolveFor::Wavenumber => (C64::new(-2.0 * k * w * w, c * w)) * z,
                };
                put(dim - 1, d_extra);
            }
        }
        for col in 0..dim {
            jac[(dim - 1, col)] = phase_row[col];
        }
        jac[(dim - 1, dim - 1)] = 0.0;

        let mut rhs = vec![0.0; dim];
        for beta in 0..n {
            rhs[layout.re(beta, 0)] = -f[beta][m].re;
            for l in 1..=m {
                rhs[layout.re(beta, l)] = -f[beta][m + l].re;
                rhs[layout.im(beta, l)] = -f[beta][m + l].im;
            }
        }
        rhs[dim - 1] = -phase;
        let Some(step) = solve_real(&jac, &rhs) else {
            return Err(Error::Convergence { iterations: iter, residual: res });
        };
        for (pi, si) in p.iter_mut().zip(&step) {
            *pi += si;
        }
    }
    unreachable!("loop returns on the final iteration")
}

/// Natural-parameter continuation of `profile` in `param` up to `target` in `steps` equal steps.
///
/// `param` is `k`, `c`, a model parameter, or `q` for the Ginzburg–Landau models (which moves
/// `k = q / 2 pi` together with the model's `q`).
pub fn continue_profile(
    profile: &WaveProfile,
    param: &str,
    target: f64,
    steps: usize,
    options: &SolveOptions,
) -> Result<Vec<WaveProfile>> {
    if steps == 0 {
        return Ok(vec![profile.clone()]);
    }
    let gl = matches!(profile.model.kind(), ModelKind::RealGl | ModelKind::Cgl);
    let start = match param {
        "k" => profile.k,
        "c" => profile.c,
        other => match profile.model.param(other) {
            Some(v) => v,
            None => return arg(format!("model {} has no parameter '{other}'", profile.model.id())),
        },
    };
    let unknowns = if param == "c" { SolveFor::Wavenumber } else { SolveFor::Speed };
    let mut out = Vec::with_capacity(steps);
    let mut prev = profile.clone();
    let mut last_good = start;
    for j in 1..=steps {
        let value = start + (target - start) * j as f64 / steps as f64;
        let attempt = (|| -> Result<WaveProfile> {
            let mut guess = prev.clone();
            match param {
                "k" => guess.k = value,
                "c" => guess.c = value,
                name => {
                    guess.model = prev.model.with_param(name, value)?;
                    if gl && name == "q" {
                        guess.k = value / TWO_PI;
                    }
                }
            }
            solve_profile(&guess.model.clone(), &guess, unknowns, options)
        })();
        match attempt {
            Ok(p) => {
                last_good = value;
                prev = p.clone();
                out.push(p);
            }
            Err(e) => return Err(Error::Continuation { last_good, source: Box::new(e) }),
        }
    }
    Ok(out)
}

use std::f64::consts::PI;

use faer::Mat;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bloch::{critical_index, derivative_vector, BlochOperator, CriticalMode};
use crate::error::{arg, Error, Result};
use crate::fourier::C64;
use crate::linalg::{eigen_decompose, expm, mat_vec, CMat, EigenData};
use crate::profile::WaveProfile;

use super::grid::GridFunction;
use super::transform::{bloch_layout, bloch_transform, inverse_bloch, BlochDecomposition};

/// Raised-cosine low-frequency cutoff supported in `|xi| < xi_1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CutoffSpec {
    pub xi_1: f64,
}

impl CutoffSpec {
    pub fn new(xi_1: f64) -> Result<Self> {
        if !(xi_1 > 0.0 && xi_1.is_finite()) {
            return arg("cutoff radius must be positive");
        }
        Ok(Self { xi_1 })
    }

    pub fn rho(&self, xi: f64) -> f64 {
        let a = xi.abs();
        let half = 0.5 * self.xi_1;
        if a <= half {
            1.0
        } else if a >= self.xi_1 {
            0.0
        } else {
            (PI * (a - half) / self.xi_1).cos().powi(2)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PropagatorOptions {
    /// Eigenvector condition number above which a block uses Padé exponentials instead.
    pub condition_limit: f64,
    /// Relative profile energy allowed outside the modes the grid can represent.
    pub resolution_tol: f64,
}

impl Default for PropagatorOptions {
    fn default() -> Self {
        Self { condition_limit: 1e8, resolution_tol: 1e-12 }
    }
}

#[derive(Debug, Clone)]
struct Block {
    xi: f64,
    rho: f64,
    matrix: CMat,
    eig: Option<EigenData>,
    critical: Option<CriticalMode>,
    /// Eigenvalue index of the critical mode.
    crit_idx: usize,
    dphi: Vec<C64>,
    /// Leading entries (the unpaired Nyquist mode) the block ignores and returns as zero.
    skip: usize,
}

impl Block {
    fn evolve(&self, b: &[C64], t: f64) -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); self.skip];
        out.extend(self.evolve_reduced(&b[self.skip..], t));
        out
    }

    fn evolve_reduced(&self, b: &[C64], t: f64) -> Vec<C64> {
        if t == 0.0 {
            return b.to_vec();
        }
        match &self.eig {
            Some(ed) => {
                let mut y = mat_vec(&ed.inverse, b);
                for (yi, lam) in y.iter_mut().zip(&ed.values) {
                    *yi *= (lam * t).exp();
                }
                mat_vec(&ed.vectors, &y)
            }
            None => {
                let scaled = Mat::from_fn(self.matrix.nrows(), self.matrix.ncols(), |i, j| self.matrix[(i, j)] * t);
                mat_vec(&expm(&scaled), b)
            }
        }
    }
}

/// The four pieces of `e^{Lt} v` used by the linear decomposition.
#[derive(Debug, Clone)]
pub struct SemigroupParts {
    pub total: GridFunction,
    /// `(1/N) <Phi~_0, v>_{L^2_N}`.
    pub mean_phase: C64,
    /// Scalar field `s_p(t) v`.
    pub sp: GridFunction,
    pub stilde: GridFunction,
}

/// `S~` split into high-frequency, low-frequency non-critical and critical-correction parts.
#[derive(Debug, Clone)]
pub struct RemainderParts {
    pub s_hf: GridFunction,
    pub s_lf: GridFunction,
    pub s_c: GridFunction,
}

/// Convolutions `int_{t_0}^{t_j} K(t_j - s) g(s) ds` of a sampled forcing history.
#[derive(Debug, Clone)]
pub struct DuhamelIntegrals {
    /// Kernel `e^{Lt}`.
    pub full: Vec<GridFunction>,
    /// Kernel `<Phi~_0, .>_{L^2_N}` (no decay).
    pub phase: Vec<C64>,
    /// Kernel `s_p(t)`, scalar fields.
    pub sp: Vec<GridFunction>,
    /// Kernel `S~(t)`.
    pub stilde: Vec<GridFunction>,
}

/// `phi_1(z) = (e^z - 1) / z` and `phi_2(z) = (e^z - 1 - z) / z^2`.
fn phi12(z: C64) -> (C64, C64) {
    if z.norm() < 1e-3 {
        let one = C64::new(1.0, 0.0);
        (one + z / 2.0 + z * z / 6.0 + z * z * z / 24.0, one / 2.0 + z / 6.0 + z * z / 24.0 + z * z * z / 120.0)
    } else {
        let e = z.exp();
        ((e - 1.0) / z, (e - 1.0 - z) / (z * z))
    }
}

/// Exact linear evolution `e^{L[phi] t}` on an `N`-periodic grid.
///
/// Each Bloch frequency gets the Hill matrix on exactly the Fourier modes the grid carries
/// (minus the unpaired Nyquist mode of even grids, which is zeroed), so the propagator is the
/// true semigroup of the spatially discretized operator and maps real data to real data.
#[derive(Debug, Clone)]
pub struct LinearPropagator {
    pub n_periods: usize,
    pub m_x: usize,
    pub n: usize,
    pub cutoff: CutoffSpec,
    blocks: Vec<Block>,
    layout: BlochDecomposition,
    /// `phi'` on the grid.
    pub dphi: GridFunction,
    /// Blocks that fell back to Padé exponentials because of ill-conditioned eigenvectors.
    pub fallback_blocks: usize,
    pub max_condition: f64,
}

impl LinearPropagator {
    pub fn new(profile: &WaveProfile, n_periods: usize, m_x: usize, cutoff: CutoffSpec, opts: &PropagatorOptions) -> Result<Self> {
        if n_periods == 0 || m_x < 2 {
            return arg("propagator needs N >= 1 and m_x >= 2");
        }
        // modes the grid represents at xi = 0 are |l| < m_x / 2
        let representable = (m_x as i64 - 1) / 2;
        let (mut tail, mut total) = (0.0, 0.0);
        for c in &profile.coeffs {
            for (idx, z) in c.iter().enumerate() {
                let l = idx as i64 - profile.m_f as i64;
                total += z.norm_sqr();
                if l.abs() > representable {
                    tail += z.norm_sqr();
                }
            }
        }
        if tail > opts.resolution_tol.powi(2) * total {
            return arg(format!(
                "grid with m_x = {m_x} under-resolves the profile (relative tail {:.2e}); increase m_x",
                (tail / total).sqrt()
            ));
        }
        let layout = BlochDecomposition::empty(n_periods, m_x, profile.n());
        let (p, n) = (n_periods * m_x, profile.n());
        let op = BlochOperator::new(profile, m_x + 1);
        let blocks: Vec<Block> = bloch_layout(n_periods, m_x)
            .into_par_iter()
            .map(|(j, xi, lo, hi)| -> Result<Block> {
                // mode -P/2 of an even grid has no conjugate partner; evolving it alone would
                // break realness, so the propagator acts on the complement
                let nyquist = p % 2 == 0 && j + lo * n_periods as i64 == -(p as i64) / 2;
                let lo_eff = lo + i64::from(nyquist);
                let skip = usize::from(nyquist) * n;
                let pad = |v: Vec<C64>| {
                    let mut out = vec![C64::new(0.0, 0.0); skip];
                    out.extend(v);
                    out
                };
                let bm = op.matrix(xi, lo_eff, hi);
                let rho = cutoff.rho(xi);
                let dphi = derivative_vector(profile, lo_eff, hi);
                let ed = eigen_decompose(&bm.entries).map_err(|message| Error::Eigen { xi, rows: bm.dim(), message })?;
                let crit_idx = critical_index(&ed.values, xi);
                let critical = if rho > 0.0 || xi == 0.0 {
                    let idx = crit_idx;
                    let mut cm = CriticalMode::from_decomposition(xi, &ed, idx, &dphi)?;
                    cm.phi = pad(cm.phi);
                    cm.phi_tilde = pad(cm.phi_tilde);
                    Some(cm)
                } else {
                    None
                };
                let eig = (ed.condition <= opts.condition_limit).then_some(ed);
                Ok(Block { xi, rho, matrix: bm.entries, eig, critical, crit_idx, dphi: pad(dphi), skip })
            })
            .collect::<Result<_>>()?;
        let fallback_blocks = blocks.iter().filter(|b| b.eig.is_none()).count();
        let max_condition = blocks.iter().filter_map(|b| b.eig.as_ref().map(|e| e.condition)).fold(0.0, f64::max);
        Ok(Self {
            n_periods,
            m_x,
            n: profile.n(),
            cutoff,
            blocks,
            layout,
            dphi: GridFunction::from_profile(profile, n_periods, m_x, 1),
            fallback_blocks,
            max_condition,
        })
    }

    pub fn flagged(&self) -> bool {
        self.fallback_blocks > 0
    }

    fn check(&self, v: &GridFunction) -> Result<()> {
        if v.n_periods != self.n_periods || v.m_x != self.m_x || v.n != self.n {
            return arg("grid function does not match the propagator grid");
        }
        Ok(())
    }

    fn map_blocks(&self, v: &GridFunction, f: impl Fn(&Block, &[C64]) -> Vec<C64> + Sync) -> Result<BlochDecomposition> {
        self.check(v)?;
        let dec = bloch_transform(v)?;
        let comps: Vec<Vec<C64>> = self.blocks.par_iter().zip(dec.comps.par_iter()).map(|(b, c)| f(b, c)).collect();
        Ok(BlochDecomposition { comps, ..dec })
    }

    pub fn apply(&self, v: &GridFunction, t: f64) -> Result<GridFunction> {
        if t < 0.0 {
            return arg("semigroup time must be nonnegative");
        }
        Ok(inverse_bloch(&self.map_blocks(v, |b, c| b.evolve(c, t))?))
    }

    /// `(1/N) <Phi~_0, v>_{L^2_N}`.
    pub fn mean_phase(&self, v: &GridFunction) -> Result<C64> {
        self.check(v)?;
        let dec = bloch_transform(v)?;
        let i0 = dec.index_of_xi(0.0).expect("0 in lattice");
        let crit = self.blocks[i0].critical.as_ref().expect("xi = 0 carries critical data");
        Ok(crit.project(&dec.comps[i0]) / self.n_periods as f64)
    }

    /// `d_x^l d_t^m s_p(t) v` as a scalar grid field.
    pub fn sp_apply(&self, v: &GridFunction, t: f64, l: u32, m: u32) -> Result<GridFunction> {
        self.check(v)?;
        let dec = bloch_transform(v)?;
        Ok(self.sp_from_dec(&dec, t, l, m))
    }

    fn sp_from_dec(&self, dec: &BlochDecomposition, t: f64, l: u32, m: u32) -> GridFunction {
        let p = self.n_periods * self.m_x;
        let mut coeffs = vec![C64::new(0.0, 0.0); p];
        for ((b, c), &j) in self.blocks.iter().zip(&dec.comps).zip(&dec.js) {
            if b.xi == 0.0 || b.rho == 0.0 {
                continue;
            }
            let crit = b.critical.as_ref().expect("critical data inside cutoff");
            let beta = crit.project(c);
            let mult = C64::new(0.0, b.xi).powu(l) * crit.lambda.powu(m) * (crit.lambda * t).exp() * b.rho;
            coeffs[crate::fourier::slot_of_mode(j, p)] = mult * beta / self.n_periods as f64;
        }
        GridFunction::from_coefficients(self.n_periods, self.m_x, &[coeffs])
    }

    /// `e^{Lt} v = mean_phase phi' + phi' s_p(t) v + S~(t) v`.
    pub fn decompose(&self, v: &GridFunction, t: f64) -> Result<SemigroupParts> {
        self.check(v)?;
        let dec = bloch_transform(v)?;
        let total_dec = BlochDecomposition {
            comps: self.blocks.iter().zip(&dec.comps).map(|(b, c)| b.evolve(c, t)).collect(),
            ..dec.clone()
        };
        let mut rem = total_dec.clone();
        let mut mean_phase = C64::new(0.0, 0.0);
        for (i, b) in self.blocks.iter().enumerate() {
            let Some(crit) = &b.critical else { continue };
            let beta = crit.project(&dec.comps[i]);
            let coef = if b.xi == 0.0 {
                mean_phase = beta / self.n_periods as f64;
                beta
            } else {
                beta * (crit.lambda * t).exp() * b.rho
            };
            for (r, d) in rem.comps[i].iter_mut().zip(&b.dphi) {
                *r -= coef * d;
            }
        }
        Ok(SemigroupParts {
            total: inverse_bloch(&total_dec),
            mean_phase,
            sp: self.sp_from_dec(&dec, t, 0, 0),
            stilde: inverse_bloch(&rem),
        })
    }

    /// `S~ = S_hf + S~_lf + S~_c`, each assembled separately per Bloch frequency.
    pub fn remainder_parts(&self, v: &GridFunction, t: f64) -> Result<RemainderParts> {
        self.check(v)?;
        let dec = bloch_transform(v)?;
        let mut hf = dec.zeros_like();
        let mut lf = dec.zeros_like();
        let mut cc = dec.zeros_like();
        for (i, b) in self.blocks.iter().enumerate() {
            let e = b.evolve(&dec.comps[i], t);
            let rho = if b.xi == 0.0 { 1.0 } else { b.rho };
            for (h, x) in hf.comps[i].iter_mut().zip(&e) {
                *h = x * (1.0 - rho);
            }
            let Some(crit) = &b.critical else { continue };
            if rho == 0.0 {
                continue;
            }
            let beta = crit.project(&dec.comps[i]);
            let growth = (crit.lambda * t).exp();
            for k in 0..e.len() {
                lf.comps[i][k] = rho * (e[k] - growth * beta * crit.phi[k]);
                cc.comps[i][k] = rho * growth * beta * (crit.phi[k] - b.dphi[k]);
                if b.xi == 0.0 {
                    cc.comps[i][k] += (growth - 1.0) * beta * b.dphi[k];
                }
            }
        }
        Ok(RemainderParts { s_hf: inverse_bloch(&hf), s_lf: inverse_bloch(&lf), s_c: inverse_bloch(&cc) })
    }

    /// Duhamel integrals of `forcing` sampled at increasing `times`.
    ///
    /// Each eigenmode is integrated with the exponential trapezoid rule (forcing linear
    /// between samples, kernel exact), so stiff modes need no time-step restriction.
    pub fn duhamel(&self, times: &[f64], forcing: &[GridFunction]) -> Result<DuhamelIntegrals> {
        if times.len() != forcing.len() || times.is_empty() {
            return arg("Duhamel quadrature needs one forcing sample per time");
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return arg("Duhamel sample times must increase strictly");
        }
        if self.flagged() {
            return Err(Error::Extraction(format!(
                "{} Bloch block(s) have ill-conditioned eigenvectors; Duhamel quadrature needs a diagonalization",
                self.fallback_blocks
            )));
        }
        for g in forcing {
            self.check(g)?;
        }
        let decs: Vec<BlochDecomposition> = forcing.par_iter().map(bloch_transform).collect::<Result<_>>()?;
        let n_t = times.len();
        let zero = C64::new(0.0, 0.0);
        // per block, per time: (full, stilde, sp coefficient, phase)
        type Column = (Vec<C64>, Vec<C64>, C64, C64);
        let per_block: Vec<Vec<Column>> = self
            .blocks
            .par_iter()
            .enumerate()
            .map(|(i, b)| {
                let ed = b.eig.as_ref().expect("checked above");
                let dim = ed.values.len();
                let mu: Vec<C64> = (0..dim).map(|m| if b.xi == 0.0 && m == b.crit_idx { zero } else { ed.values[m] }).collect();
                let unit = b.critical.as_ref().map(|crit| {
                    let mut col = vec![zero; b.skip];
                    col.extend((0..dim).map(|r| ed.vectors[(r, b.crit_idx)]));
                    crit.project(&col)
                });
                let mut acc = vec![zero; dim];
                let mut y_prev = mat_vec(&ed.inverse, &decs[0].comps[i][b.skip..]);
                let mut out = Vec::with_capacity(n_t);
                for j in 0..n_t {
                    let y = if j == 0 { y_prev.clone() } else { mat_vec(&ed.inverse, &decs[j].comps[i][b.skip..]) };
                    if j > 0 {
                        let h = times[j] - times[j - 1];
                        for m in 0..dim {
                            let z = mu[m] * h;
                            let (p1, p2) = phi12(z);
                            acc[m] = z.exp() * acc[m] + h * ((p1 - p2) * y_prev[m] + p2 * y[m]);
                        }
                    }
                    let mut full = vec![zero; b.skip];
                    full.extend(mat_vec(&ed.vectors, &acc));
                    let mut stilde = full.clone();
                    let (mut spc, mut phase) = (zero, zero);
                    if let Some(u) = unit {
                        let beta = u * acc[b.crit_idx];
                        let coef = if b.xi == 0.0 {
                            phase = beta;
                            beta
                        } else {
                            spc = beta * b.rho;
                            spc
                        };
                        for (s, d) in stilde.iter_mut().zip(&b.dphi) {
                            *s -= coef * d;
                        }
                    }
                    out.push((full, stilde, spc, phase));
                    y_prev = y;
                }
                out
            })
            .collect();
        let p = self.n_periods * self.m_x;
        let mut res = DuhamelIntegrals { full: vec![], phase: vec![], sp: vec![], stilde: vec![] };
        for j in 0..n_t {
            let full = BlochDecomposition { comps: per_block.iter().map(|c| c[j].0.clone()).collect(), ..self.layout.clone() };
            let stilde = BlochDecomposition { comps: per_block.iter().map(|c| c[j].1.clone()).collect(), ..self.layout.clone() };
            let mut coeffs = vec![zero; p];
            let mut phase = zero;
            for (c, &jj) in per_block.iter().zip(&self.layout.js) {
                coeffs[crate::fourier::slot_of_mode(jj, p)] += c[j].2 / self.n_periods as f64;
                phase += c[j].3;
            }
            res.full.push(inverse_bloch(&full));
            res.stilde.push(inverse_bloch(&stilde));
            res.sp.push(GridFunction::from_coefficients(self.n_periods, self.m_x, &[coeffs]));
            res.phase.push(phase);
        }
        Ok(res)
    }

    /// Critical data of the block at lattice frequency `xi`, if inside the cutoff.
    pub fn critical_at(&self, xi: f64) -> Option<&CriticalMode> {
        self.blocks.iter().find(|b| b.xi == xi).and_then(|b| b.critical.as_ref())
    }

    pub fn rho_values(&self) -> Vec<(f64, f64)> {
        self.blocks.iter().map(|b| (b.xi, b.rho)).collect()
    }

    /// Rightmost eigenvalue per Bloch frequency of the discretized operator, excluding the
    /// translation eigenvalue; its negation is the grid's `delta_N`.
    pub fn gap(&self) -> f64 {
        let mut best = f64::NEG_INFINITY;
        for b in &self.blocks {
            let vals: Vec<C64> = match &b.eig {
                Some(ed) => ed.values.clone(),
                None => crate::linalg::eigenvalues(&b.matrix).unwrap_or_default(),
            };
            let skip = (b.xi == 0.0).then(|| critical_index(&vals, 0.0));
            for (i, v) in vals.iter().enumerate() {
                if Some(i) != skip {
                    best = best.max(v.re);
                }
            }
        }
        -best
    }

    pub fn layout(&self) -> &BlochDecomposition {
        &self.layout
    }
}

/// One-shot `e^{L[phi] t} v`; build a [`LinearPropagator`] to reuse the eigendecompositions.
pub fn apply_semigroup(profile: &WaveProfile, v: &GridFunction, t: f64) -> Result<GridFunction> {
    // no frequency needs critical data beyond xi = 0
    let cutoff = CutoffSpec { xi_1: f64::MIN_POSITIVE };
    LinearPropagator::new(profile, v.n_periods, v.m_x, cutoff, &PropagatorOptions::default())?.apply(v, t)
}

pub fn decompose_semigroup(profile: &WaveProfile, v: &GridFunction, t: f64, cutoff: CutoffSpec) -> Result<SemigroupParts> {
    LinearPropagator::new(profile, v.n_periods, v.m_x, cutoff, &PropagatorOptions::default())?.decompose(v, t)
}

pub fn sp_apply(profile: &WaveProfile, v: &GridFunction, t: f64, l: u32, m: u32, cutoff: CutoffSpec) -> Result<GridFunction> {
    LinearPropagator::new(profile, v.n_periods, v.m_x, cutoff, &PropagatorOptions::default())?.sp_apply(v, t, l, m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bloch::{subharmonic_spectrum, verify_diffusive_stability, StabilityOptions};
    use crate::model::ReactionModel;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rgl() -> WaveProfile {
        WaveProfile::analytic(&ReactionModel::real_gl(0.3).unwrap(), 8).unwrap()
    }

    fn random_real(n_periods: usize, m_x: usize, seed: u64) -> GridFunction {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        // smooth random field: a few low modes
        let amps: Vec<(f64, f64, f64)> = (0..12).map(|_| (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(0.0..1.0))).collect();
        GridFunction::from_fn(n_periods, m_x, 2, |x, comp| {
            let mut s = 0.0;
            for (k, (a, b, ph)) in amps.iter().enumerate() {
                let w = 2.0 * PI * (k as f64 + 1.0) / n_periods as f64;
                s += if comp == 0 { a } else { b } * (w * x + 2.0 * PI * ph).cos() / (1.0 + k as f64);
            }
            C64::new(s, 0.0)
        })
    }

    #[test]
    fn duhamel_of_a_free_orbit() {
        // g(s) = e^{Ls} v gives t e^{Lt} v for every kernel
        let p = rgl();
        let prop = LinearPropagator::new(&p, 4, 8, CutoffSpec::new(2.0).unwrap(), &Default::default()).unwrap();
        let v = random_real(4, 8, 2);
        let times: Vec<f64> = (0..=200).map(|i| i as f64 * 0.01).collect();
        let g: Vec<GridFunction> = times.iter().map(|&t| prop.apply(&v, t).unwrap()).collect();
        let d = prop.duhamel(&times, &g).unwrap();
        let t = 2.0;
        let parts = prop.decompose(&v, t).unwrap();
        let tol = 1e-4 * v.l2();
        assert!(d.full[200].sub(&parts.total.scale(t)).l2() < tol);
        assert!(d.stilde[200].sub(&parts.stilde.scale(t)).l2() < tol);
        assert!(d.sp[200].sub(&parts.sp.scale(t)).l2() < tol);
        assert!((d.phase[200] - parts.mean_phase * 4.0 * t).norm() < 1e-10);
        assert_eq!(d.full[0].l2(), 0.0);
        assert!(prop.duhamel(&[0.0, 0.0], &g[..2]).is_err());
    }

    #[test]
    fn cutoff_shape() {
        let c = CutoffSpec::new(2.0).unwrap();
        assert_eq!(c.rho(0.0), 1.0);
        assert_eq!(c.rho(1.0), 1.0);
        assert_eq!(c.rho(-2.0), 0.0);
        assert!((c.rho(1.5) - 0.5).abs() < 1e-15);
        assert_eq!(c.rho(0.7), c.rho(-0.7));
        assert!(CutoffSpec::new(0.0).is_err());
    }

    #[test]
    fn translation_mode_is_stationary() {
        let p = rgl();
        for n_periods in [4, 16] {
            let prop = LinearPropagator::new(&p, n_periods, 8, CutoffSpec::new(2.0).unwrap(), &Default::default()).unwrap();
            for t in [1.0, 10.0] {
                let out = prop.apply(&prop.dphi, t).unwrap();
                assert!(out.sub(&prop.dphi).l2() <= 1e-8, "N={n_periods} t={t}");
            }
            let v = random_real(n_periods, 8, 3);
            let same = prop.apply(&v, 0.0).unwrap();
            assert!(same.sub(&v).l2() <= 1e-12 * v.l2());
        }
    }

    #[test]
    fn semigroup_law_and_linearity() {
        let p = rgl();
        let prop = LinearPropagator::new(&p, 6, 8, CutoffSpec::new(2.0).unwrap(), &Default::default()).unwrap();
        let v = random_real(6, 8, 5);
        let w = random_real(6, 8, 6);
        for (t, s) in [(0.5, 2.0), (2.0, 0.5), (0.5, 0.5), (2.0, 2.0)] {
            let a = prop.apply(&v, t + s).unwrap();
            let b = prop.apply(&prop.apply(&v, s).unwrap(), t).unwrap();
            assert!(a.sub(&b).l2() <= 1e-8 * v.l2());
        }
        let lin = prop.apply(&v.add(&w.scale(2.0)), 1.3).unwrap();
        let sep = prop.apply(&v, 1.3).unwrap().add(&prop.apply(&w, 1.3).unwrap().scale(2.0));
        assert!(lin.sub(&sep).l2() < 1e-12 * lin.l2());
        assert!(prop.apply(&v, 1.0).unwrap().max_imag() < 1e-12);
    }

    #[test]
    fn decomposition_reconstructs() {
        let p = rgl();
        let cut = CutoffSpec::new(2.3).unwrap();
        for n_periods in [4, 16] {
            let prop = LinearPropagator::new(&p, n_periods, 8, cut, &Default::default()).unwrap();
            let v = random_real(n_periods, 8, 11);
            for t in [0.0, 1.0, 100.0] {
                let parts = prop.decompose(&v, t).unwrap();
                let recon = prop.dphi.scale(parts.mean_phase.re).add(&prop.dphi.mul_scalar_field(&parts.sp)).add(&parts.stilde);
                assert!(recon.sub(&parts.total).l2() <= 1e-8 * parts.total.l2().max(1e-300));
                assert!(parts.sp.max_imag() < 1e-10 * (1.0 + parts.sp.sup()));
                assert!(parts.mean_phase.im.abs() < 1e-12);
                let rp = prop.remainder_parts(&v, t).unwrap();
                let sum = rp.s_hf.add(&rp.s_lf).add(&rp.s_c);
                assert!(sum.sub(&parts.stilde).l2() <= 1e-10 * (1.0 + parts.stilde.l2()));
            }
        }
    }

    #[test]
    fn normalization_and_support() {
        let p = rgl();
        let prop = LinearPropagator::new(&p, 8, 8, CutoffSpec::new(2.3).unwrap(), &Default::default()).unwrap();
        // v = phi': mean phase 1 (the L^2_N pairing carries a factor N)
        let parts = prop.decompose(&prop.dphi, 0.0).unwrap();
        assert!((parts.mean_phase - 1.0).norm() < 1e-10);
        assert!(parts.sp.l2() < 1e-10);
        // v built only from |xi| > xi_1 components has no s_p
        let mut dec = bloch_transform(&random_real(8, 8, 2)).unwrap();
        for (i, c) in dec.comps.iter_mut().enumerate() {
            if dec.xis[i].abs() < 2.3 {
                c.iter_mut().for_each(|z| *z = C64::new(0.0, 0.0));
            }
        }
        let v = inverse_bloch(&dec);
        assert!(v.l2() > 1e-3);
        assert!(prop.sp_apply(&v, 3.0, 0, 0).unwrap().l2() < 1e-14);
        assert!(prop.sp_apply(&GridFunction::zeros(8, 8, 2), 3.0, 1, 1).unwrap().l2() == 0.0);
    }

    #[test]
    fn gap_matches_bloch_module_and_rates() {
        let p = rgl();
        let n_periods = 8;
        let prop = LinearPropagator::new(&p, n_periods, 16, CutoffSpec::new(2.3).unwrap(), &Default::default()).unwrap();
        let rep = subharmonic_spectrum(&p, n_periods as i64, 8).unwrap();
        assert!((prop.gap() - rep.delta_n).abs() < 1e-6 * rep.delta_n);
        // e^{Lt}(1 - P_1) v decays like e^{-delta_N t}
        let v = random_real(n_periods, 16, 9);
        let mp = prop.mean_phase(&v).unwrap().re;
        let w = v.sub(&prop.dphi.scale(mp));
        let (t1, t2) = (150.0, 250.0);
        let n1 = prop.apply(&w, t1).unwrap().l2();
        let n2 = prop.apply(&w, t2).unwrap().l2();
        let rate = (n1 / n2).ln() / (t2 - t1);
        assert!((rate - rep.delta_n).abs() < 0.1 * rep.delta_n, "rate {rate} vs {}", rep.delta_n);
    }

    #[test]
    fn high_frequency_part_decays_at_least_at_the_high_frequency_gap() {
        let p = rgl();
        let rep = verify_diffusive_stability(&p, &StabilityOptions { scan: 128, ..Default::default() }).unwrap();
        let cut = CutoffSpec::new(rep.xi_1).unwrap();
        let prop = LinearPropagator::new(&p, 16, 8, cut, &Default::default()).unwrap();
        let v = random_real(16, 8, 4);
        let (t1, t2) = (3.0, 6.0);
        let n1 = prop.remainder_parts(&v, t1).unwrap().s_hf.l2();
        let n2 = prop.remainder_parts(&v, t2).unwrap().s_hf.l2();
        let rate = (n1 / n2).ln() / (t2 - t1);
        let d0 = rep.delta_0_at(0.5 * rep.xi_1);
        assert!(rate >= 0.9 * d0, "rate {rate} vs delta_0 {d0}");
    }

    #[test]
    fn under_resolved_grid_rejected() {
        let model = ReactionModel::brusselator(2.0, 5.2).unwrap();
        let g = WaveProfile::initial_guess(&model, 24).unwrap();
        let p = crate::profile::solve_profile(&model, &g, Default::default(), &Default::default()).unwrap();
        assert!(LinearPropagator::new(&p, 2, 4, CutoffSpec::new(1.0).unwrap(), &Default::default()).is_err());
    }
}

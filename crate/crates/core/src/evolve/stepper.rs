use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::fourier::{mode_of_slot, Transform, C64};
use crate::model::ReactionModel;
use crate::profile::WaveProfile;
use crate::semigroup::GridFunction;

use super::config::Scheme;

/// Contour points for the `phi`-function evaluations of ETDRK4.
const CONTOUR: usize = 32;

#[derive(Debug, Clone)]
struct EtdCoefficients {
    e: Vec<C64>,
    e2: Vec<C64>,
    q: Vec<C64>,
    f1: Vec<C64>,
    f2: Vec<C64>,
    f3: Vec<C64>,
}

impl EtdCoefficients {
    fn new(symbol: &[C64], h: f64) -> Self {
        let roots: Vec<C64> = (0..CONTOUR).map(|j| C64::from_polar(1.0, PI * (j as f64 + 0.5) / (CONTOUR as f64 / 2.0))).collect();
        let mean = |z: C64, g: &dyn Fn(C64) -> C64| roots.iter().map(|r| g(z + r)).sum::<C64>() / CONTOUR as f64;
        let mut out = Self { e: vec![], e2: vec![], q: vec![], f1: vec![], f2: vec![], f3: vec![] };
        for &l in symbol {
            let z = l * h;
            out.e.push(z.exp());
            out.e2.push((z * 0.5).exp());
            out.q.push(mean(z, &|w| ((w * 0.5).exp() - 1.0) / w) * h);
            out.f1.push(mean(z, &|w| (-4.0 - w + w.exp() * (4.0 - 3.0 * w + w * w)) / (w * w * w)) * h);
            out.f2.push(mean(z, &|w| (2.0 + w + w.exp() * (w - 2.0)) / (w * w * w)) * h);
            out.f3.push(mean(z, &|w| (-4.0 - 3.0 * w - w * w + w.exp() * (4.0 - w)) / (w * w * w)) * h);
        }
        out
    }
}

/// Pseudospectral integrator for `u_t = k u_xx + c u_x + f(u) / k` on `[0, N)`.
///
/// The state lives in Fourier space (normalized DFT coefficients per component); the linear
/// part is diagonal there and `f` is evaluated pointwise on the grid.
#[derive(Debug, Clone)]
pub struct Stepper {
    pub n_periods: usize,
    pub m_x: usize,
    pub n: usize,
    pub dt: f64,
    pub scheme: Scheme,
    model: ReactionModel,
    k: f64,
    plan: Transform,
    symbol: Vec<C64>,
    cn_num: Vec<C64>,
    cn_den: Vec<C64>,
    etd: Option<EtdCoefficients>,
    prev: Option<Vec<Vec<C64>>>,
    coeffs: Vec<Vec<C64>>,
    pub t: f64,
    pub steps: u64,
}

impl Stepper {
    pub fn new(profile: &WaveProfile, n_periods: usize, m_x: usize, dt: f64, scheme: Scheme, initial: &GridFunction) -> Result<Self> {
        if initial.n_periods != n_periods || initial.m_x != m_x || initial.n != profile.n() {
            return Err(Error::Argument("initial state does not match the grid".into()));
        }
        let p = n_periods * m_x;
        let (k, c) = (profile.k, profile.c);
        let symbol: Vec<C64> = (0..p)
            .map(|idx| {
                let m = mode_of_slot(idx, p);
                let w = 2.0 * PI * m as f64 / n_periods as f64;
                // the unpaired Nyquist mode keeps only the real (diffusive) part
                let adv = if p % 2 == 0 && idx == p / 2 { 0.0 } else { c * w };
                C64::new(-k * w * w, adv)
            })
            .collect();
        let cn_num = symbol.iter().map(|l| 1.0 + l * (0.5 * dt)).collect();
        let cn_den = symbol.iter().map(|l| 1.0 / (1.0 - l * (0.5 * dt))).collect();
        let etd = (scheme == Scheme::Etdrk4).then(|| EtdCoefficients::new(&symbol, dt));
        let mut s = Self {
            n_periods,
            m_x,
            n: profile.n(),
            dt,
            scheme,
            model: profile.model.clone(),
            k,
            plan: Transform::new(p),
            symbol,
            cn_num,
            cn_den,
            etd,
            prev: None,
            coeffs: vec![],
            t: 0.0,
            steps: 0,
        };
        s.coeffs = s.plan.analyze_components(&initial.to_real().values, s.n);
        Ok(s)
    }

    pub fn state(&self) -> GridFunction {
        GridFunction::from_coefficients(self.n_periods, self.m_x, &self.coeffs).to_real()
    }

    /// Reset the state (and the multistep history) without rebuilding the coefficients.
    pub fn set_state(&mut self, u: &GridFunction, t: f64) {
        self.coeffs = self.plan.analyze_components(&u.to_real().values, self.n);
        self.prev = None;
        self.t = t;
    }

    /// `f(u) / k` in Fourier space.
    fn nonlinear(&self, coeffs: &[Vec<C64>]) -> Vec<Vec<C64>> {
        let p = self.plan.len();
        let n = self.n;
        let mut grid = vec![0.0; p * n];
        for (comp, c) in coeffs.iter().enumerate() {
            let mut buf = c.clone();
            self.plan.synthesize(&mut buf);
            for j in 0..p {
                grid[j * n + comp] = buf[j].re;
            }
        }
        let mut fval = vec![0.0; n];
        let mut out = vec![vec![C64::new(0.0, 0.0); p]; n];
        for j in 0..p {
            self.model.f_into(&grid[j * n..(j + 1) * n], &mut fval);
            for comp in 0..n {
                out[comp][j] = C64::new(fval[comp] / self.k, 0.0);
            }
        }
        out.iter_mut().for_each(|b| self.plan.analyze(b));
        out
    }

    pub fn step(&mut self) -> Result<()> {
        let nl = self.nonlinear(&self.coeffs);
        match self.scheme {
            Scheme::ImexCn => {
                for comp in 0..self.n {
                    let c = &mut self.coeffs[comp];
                    for i in 0..c.len() {
                        // forward Euler on the first step, AB2 afterwards
                        let forcing = match &self.prev {
                            Some(prev) => nl[comp][i] * 1.5 - prev[comp][i] * 0.5,
                            None => nl[comp][i],
                        };
                        c[i] = (self.cn_num[i] * c[i] + forcing * self.dt) * self.cn_den[i];
                    }
                }
                self.prev = Some(nl);
            }
            Scheme::Etdrk4 => {
                let e = self.etd.as_ref().expect("etd coefficients");
                let stage = |base: &[Vec<C64>], scale: &[C64], forcing: &[Vec<C64>], qq: &[C64]| -> Vec<Vec<C64>> {
                    base.iter()
                        .zip(forcing)
                        .map(|(b, f)| b.iter().zip(f).enumerate().map(|(i, (x, y))| scale[i] * x + qq[i] * y).collect())
                        .collect()
                };
                let a = stage(&self.coeffs, &e.e2, &nl, &e.q);
                let na = self.nonlinear(&a);
                let b = stage(&self.coeffs, &e.e2, &na, &e.q);
                let nb = self.nonlinear(&b);
                let mix: Vec<Vec<C64>> = nb.iter().zip(&nl).map(|(x, y)| x.iter().zip(y).map(|(p, q)| p * 2.0 - q).collect()).collect();
                let c = stage(&a, &e.e2, &mix, &e.q);
                let nc = self.nonlinear(&c);
                for comp in 0..self.n {
                    let u = &mut self.coeffs[comp];
                    for i in 0..u.len() {
                        u[i] = e.e[i] * u[i]
                            + e.f1[i] * nl[comp][i]
                            + e.f2[i] * (na[comp][i] + nb[comp][i]) * 2.0
                            + e.f3[i] * nc[comp][i];
                    }
                }
            }
        }
        if self.coeffs.iter().flatten().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::BlowUp { t: self.t });
        }
        self.steps += 1;
        self.t = self.steps as f64 * self.dt;
        Ok(())
    }

    pub fn advance(&mut self, steps: u64) -> Result<()> {
        for _ in 0..steps {
            self.step()?;
        }
        Ok(())
    }

    /// Linear symbol `-k w^2 + i c w` per DFT slot.
    pub fn symbol(&self) -> &[C64] {
        &self.symbol
    }
}

/// One step of the scheme from `state` (multistep schemes start with their one-step starter).
pub fn step(profile: &WaveProfile, state: &GridFunction, dt: f64, scheme: Scheme) -> Result<GridFunction> {
    let mut s = Stepper::new(profile, state.n_periods, state.m_x, dt, scheme, state)?;
    s.step()?;
    Ok(s.state())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ReactionModel;

    fn rgl() -> WaveProfile {
        WaveProfile::analytic(&ReactionModel::real_gl(0.3).unwrap(), 8).unwrap()
    }

    #[test]
    fn wave_is_stationary() {
        let p = rgl();
        let phi = GridFunction::from_profile(&p, 4, 17, 0);
        for scheme in [Scheme::ImexCn, Scheme::Etdrk4] {
            let once = step(&p, &phi, 0.01, scheme).unwrap();
            assert!(once.sub(&phi).sup() < 1e-12, "{scheme:?}");
            let mut s = Stepper::new(&p, 4, 17, 0.01, scheme, &phi).unwrap();
            s.advance(1000).unwrap();
            assert!(s.state().sub(&phi).l2() < 1e-10, "{scheme:?}: {}", s.state().sub(&phi).l2());
        }
    }

    #[test]
    fn equilibrium_is_fixed() {
        let model = ReactionModel::brusselator(2.0, 5.2).unwrap();
        let g = WaveProfile::initial_guess(&model, 24).unwrap();
        let p = crate::profile::solve_profile(&model, &g, Default::default(), &Default::default()).unwrap();
        let eq = model.equilibrium();
        let u = GridFunction::from_fn(2, 49, 2, |_, c| C64::new(eq[c], 0.0));
        for scheme in [Scheme::ImexCn, Scheme::Etdrk4] {
            let mut s = Stepper::new(&p, 2, 49, 1e-3, scheme, &u).unwrap();
            s.advance(20).unwrap();
            assert!(s.state().sub(&u).sup() < 1e-14, "{scheme:?}");
        }
    }

    fn final_state(p: &WaveProfile, u0: &GridFunction, dt: f64, scheme: Scheme) -> GridFunction {
        let mut s = Stepper::new(p, u0.n_periods, u0.m_x, dt, scheme, u0).unwrap();
        s.advance((1.0 / dt).round() as u64).unwrap();
        s.state()
    }

    #[test]
    fn orders_of_accuracy() {
        let p = rgl();
        let phi = GridFunction::from_profile(&p, 4, 17, 0);
        let u0 = phi.add(&GridFunction::localized_random(4, 17, 2, 2.0, 0.7, 3).scale(0.05));
        let r = |scheme, dts: [f64; 3]| {
            let a = final_state(&p, &u0, dts[0], scheme);
            let b = final_state(&p, &u0, dts[1], scheme);
            let c = final_state(&p, &u0, dts[2], scheme);
            a.sub(&b).l2() / b.sub(&c).l2()
        };
        let cn = r(Scheme::ImexCn, [0.002, 0.001, 0.0005]);
        assert!((cn - 4.0).abs() < 0.5, "imex-cn ratio {cn}");
        let etd = r(Scheme::Etdrk4, [0.005, 0.0025, 0.00125]);
        assert!((etd - 16.0).abs() < 3.0, "etdrk4 ratio {etd}");
    }

    #[test]
    fn blow_up_detected() {
        let p = rgl();
        let phi = GridFunction::from_profile(&p, 1, 17, 0);
        let mut s = Stepper::new(&p, 1, 17, 1.0, Scheme::ImexCn, &phi.scale(50.0)).unwrap();
        let err = s.advance(200).unwrap_err();
        assert!(matches!(err, Error::BlowUp { .. }));
    }
}

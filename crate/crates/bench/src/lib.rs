//! Fixtures shared by the kernel benchmarks: the real Ginzburg–Landau wave at `q = 0.3` and a
//! perturbed state on its `N`-periodic grid.

use wavetrain::bloch::{verify_diffusive_stability, StabilityOptions};
use wavetrain::model::ReactionModel;
use wavetrain::profile::WaveProfile;
use wavetrain::semigroup::GridFunction;

pub const Q: f64 = 0.3;

pub fn wave(m_f: usize) -> WaveProfile {
    WaveProfile::analytic(&ReactionModel::real_gl(Q).expect("q in range"), m_f).expect("analytic family")
}

/// `phi + v` with a localized perturbation of unit `L^1` size times `amplitude`.
pub fn perturbed(profile: &WaveProfile, n_periods: usize, m_x: usize, amplitude: f64) -> GridFunction {
    let phi = GridFunction::from_profile(profile, n_periods, m_x, 0);
    let v = GridFunction::localized_random(n_periods, m_x, profile.n(), 1.0, 4.0, 1);
    phi.add(&v.scale(amplitude / v.l1()))
}

pub fn cutoff_radius(profile: &WaveProfile) -> f64 {
    verify_diffusive_stability(profile, &StabilityOptions { scan: 64, ..Default::default() }).expect("stability scan").xi_1
}

//! Closed-form excitation energies, critical lines and phase classification.

use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::PI;

#[cfg_attr(feature = "std", allow(unused_imports))]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::params::ModelParams;
use crate::spectrum::linspace;

/// An excitation energy `sqrt(radicand)`; a negative radicand marks the formula's
/// validity boundary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Excitation {
    Real(f64),
    /// Imaginary frequency; holds `sqrt(-radicand)`.
    Imaginary(f64),
    /// The quadratic cavity form itself is not positive, so no normal-mode expansion exists.
    Unbounded,
}

impl Excitation {
    pub fn from_square(sq: f64) -> Self {
        if sq >= 0.0 {
            Self::Real(sq.sqrt())
        } else {
            Self::Imaginary((-sq).sqrt())
        }
    }

    pub fn real(self) -> Option<f64> {
        match self {
            Self::Real(v) => Some(v),
            _ => None,
        }
    }

    pub fn is_real(self) -> bool {
        matches!(self, Self::Real(_))
    }
}

/// `epsilon_np = (1/2) sqrt(1 - gamma^2)`.
pub fn epsilon_np(gamma: f64) -> Excitation {
    Excitation::from_square(0.25 * (1.0 - gamma * gamma))
}

fn direction(theta: f64) -> Result<f64> {
    let t = crate::params::wrap_angle(theta);
    if t.abs() < 1e-12 || (2.0 * PI - t).abs() < 1e-12 {
        Ok(-1.0)
    } else if (t - PI).abs() < 1e-12 {
        Ok(1.0)
    } else {
        Err(Error::UnsupportedDirection(theta))
    }
}

/// Excitation under a two-photon drive: `(1/2) sqrt(1 - gamma^2 e^{-2 xi})` for `theta = 0`,
/// `(1/2) sqrt(1 - gamma^2 e^{2 xi})` for `theta = pi`.
pub fn epsilon_squeezed(gamma: f64, xi: f64, theta: f64) -> Result<Excitation> {
    let s = direction(theta)?;
    Ok(Excitation::from_square(0.25 * (1.0 - gamma * gamma * (2.0 * s * xi).exp())))
}

/// The `theta = 0`, `xi = 2 ln gamma` branch, `(1/2) sqrt(1 - gamma^{-2})`.
pub fn epsilon_matched_squeeze(gamma: f64) -> Excitation {
    Excitation::from_square(0.25 * (1.0 - 1.0 / (gamma * gamma)))
}

/// Coupling at which the driven excitation closes: `e^{xi}` for `theta = 0`, `e^{-xi}` for `theta = pi`.
pub fn critical_gamma_squeezed(xi: f64, theta: f64) -> Result<f64> {
    Ok((direction(theta)? * -xi).exp())
}

/// Renormalized quantities of the hybrid model in its normal phase.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HybridTilde {
    /// Cavity squeezing `r = -(1/4) ln(1 + alpha mu^2 - gamma^2)`.
    pub r: f64,
    pub omega_c: f64,
    pub lambda: f64,
    /// `2 lambda~ / sqrt(omega_a omega_c~)`.
    pub delta: f64,
}

pub fn hybrid_tilde(params: &ModelParams) -> Result<HybridTilde> {
    let arg = 1.0 + params.alpha_a2 * params.mu().powi(2) - params.gamma().powi(2);
    if !(arg > 0.0) {
        return Err(Error::InvalidRegime(format!(
            "1 + alpha mu^2 - gamma^2 = {arg} leaves no bounded cavity quadratic form"
        )));
    }
    let r = -0.25 * arg.ln();
    let omega_c = params.omega_c * (-2.0 * r).exp();
    let lambda = params.lambda * r.exp();
    let delta = 2.0 * lambda / (params.omega_a * omega_c).sqrt();
    Ok(HybridTilde { r, omega_c, lambda, delta })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HybridSpectrum {
    pub eps_plus: Excitation,
    pub eps_minus: Excitation,
}

/// Polariton branches on the normal side:
/// `eps^2 = (1/2)(w~c^2 + wa^2 +- sqrt((w~c^2 - wa^2)^2 + 16 l~^2 w~c wa))`.
pub fn hybrid_spectrum_np(params: &ModelParams) -> Result<HybridSpectrum> {
    let t = hybrid_tilde(params)?;
    let (wc2, wa) = (t.omega_c * t.omega_c, params.omega_a);
    let wa2 = wa * wa;
    let root = ((wc2 - wa2).powi(2) + 16.0 * t.lambda * t.lambda * t.omega_c * wa).sqrt();
    let plus = 0.5 * (wc2 + wa2 + root);
    // eps+^2 eps-^2 = w~c wa (w~c wa - 4 l~^2) and w~c wa - 4 l~^2 = -e^{2r} w_c w_a x with
    // x = mu^2 (1 - alpha) + gamma^2 - 1, so both the sign and the size of eps-^2 come from x.
    let excess = critical_excess(params.mu(), params.gamma(), params.alpha_a2);
    let normal = excess <= BOUNDARY_TOL;
    let minus = -t.omega_c * wa * (2.0 * t.r).exp() * params.omega_c * wa * excess / plus;
    let eps_minus = if normal { Excitation::Real(minus.max(0.0).sqrt()) } else { Excitation::Imaginary((-minus).max(0.0).sqrt()) };
    Ok(HybridSpectrum { eps_plus: Excitation::from_square(plus), eps_minus })
}

/// Branches on the superradiant side:
/// `eps^2 = (1/2)(w~c^2 + d~^4 wa^2 +- sqrt((w~c^2 - d~^4 wa^2)^2 + 4 w~c^2 wa^2))`.
pub fn hybrid_spectrum_sp(delta_tilde: f64, omega_tilde_c: f64, omega_a: f64) -> Result<(f64, f64)> {
    if !(delta_tilde >= 1.0) {
        return Err(Error::InvalidRegime(format!("delta~ = {delta_tilde} < 1 is the normal side")));
    }
    let wc2 = omega_tilde_c * omega_tilde_c;
    let d4 = delta_tilde.powi(4) * omega_a * omega_a;
    let root = ((wc2 - d4).powi(2) + 4.0 * wc2 * omega_a * omega_a).sqrt();
    let plus = 0.5 * (wc2 + d4 + root);
    // eps+^2 eps-^2 = w~c^2 wa^2 (d~^4 - 1): divide instead of subtracting near-equal terms.
    let minus = wc2 * omega_a * omega_a * (delta_tilde.powi(4) - 1.0) / plus;
    Ok((plus.sqrt(), minus.max(0.0).sqrt()))
}

/// `gamma_c = sqrt(1 - mu^2 (1 - alpha))`, or `None` when the line is not reachable along gamma.
pub fn critical_gamma(mu: f64, alpha_a2: f64) -> Option<f64> {
    let rad = 1.0 - mu * mu * (1.0 - alpha_a2);
    (rad >= 0.0).then(|| rad.sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Phase {
    Normal,
    Superradiant,
}

impl Phase {
    pub fn name(self) -> &'static str {
        match self {
            Phase::Normal => "normal",
            Phase::Superradiant => "superradiant",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhasePoint {
    pub mu: f64,
    pub gamma: f64,
    pub alpha_a2: f64,
    pub phase: Phase,
    pub epsilon_minus: Excitation,
}

const BOUNDARY_TOL: f64 = 1e-12;

/// `mu^2 (1 - alpha) + gamma^2 - 1`, positive on the superradiant side.
pub fn critical_excess(mu: f64, gamma: f64, alpha_a2: f64) -> f64 {
    mu * mu * (1.0 - alpha_a2) + gamma * gamma - 1.0
}

/// Classify one `(mu, gamma)` point at resonance `omega_c = omega_a = 1`.
pub fn classify_phase(mu: f64, gamma: f64, alpha_a2: f64) -> PhasePoint {
    let phase = if critical_excess(mu, gamma, alpha_a2) > BOUNDARY_TOL { Phase::Superradiant } else { Phase::Normal };
    let params = ModelParams { omega_c: 1.0, omega_a: 1.0, alpha_a2, ..Default::default() }
        .with_gamma(gamma)
        .with_mu(mu);
    let epsilon_minus = hybrid_spectrum_np(&params).map_or(Excitation::Unbounded, |s| s.eps_minus);
    PhasePoint { mu, gamma, alpha_a2, phase, epsilon_minus }
}

/// Phase diagram over a `steps.0 x steps.1` grid; rows run over `mu`, columns over `gamma`.
pub fn classify_phase_grid(mu_range: [f64; 2], gamma_range: [f64; 2], steps: [usize; 2], alpha_a2: f64) -> Result<Vec<PhasePoint>> {
    for (name, r) in [("mu", mu_range), ("gamma", gamma_range)] {
        if !(r[0] >= 0.0 && r[1] > r[0] && r[1].is_finite()) {
            return Err(Error::InvalidGrid(format!("{name} range [{}, {}]", r[0], r[1])));
        }
    }
    if steps[0] < 2 || steps[1] < 2 {
        return Err(Error::InvalidGrid(format!("grid {}x{}", steps[0], steps[1])));
    }
    if !(alpha_a2 >= 0.0) {
        return Err(Error::InvalidParameter(format!("alpha_A2 = {alpha_a2}")));
    }
    let mus = linspace(mu_range[0], mu_range[1], steps[0]);
    let gammas = linspace(gamma_range[0], gamma_range[1], steps[1]);
    Ok(mus
        .iter()
        .flat_map(|&m| gammas.iter().map(move |&g| classify_phase(m, g, alpha_a2)))
        .collect())
}

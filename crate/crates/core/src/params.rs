use alloc::format;

#[cfg_attr(feature = "std", allow(unused_imports))]
use num_traits::Float;

use crate::error::{Error, Result};

/// Physical parameters. Frequencies and couplings share one (arbitrary) energy unit;
/// builders rescale everything by `omega_c`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    pub omega_c: f64,
    pub omega_m: f64,
    /// Single-photon optomechanical coupling.
    pub g: f64,
    pub omega_a: f64,
    /// Light-atom coupling.
    pub lambda: f64,
    pub n_atoms: u32,
    /// Weight of the A^2 term, `chi = alpha lambda^2 / omega_a`.
    pub alpha_a2: f64,
    pub xi: f64,
    pub theta: f64,
    pub eps1: f64,
    pub eps2: f64,
    pub n_factor: f64,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self {
            omega_c: 1.0,
            omega_m: 0.01,
            g: 0.0,
            omega_a: 1.0,
            lambda: 0.0,
            n_atoms: 1,
            alpha_a2: 0.0,
            xi: 0.0,
            theta: 0.0,
            eps1: 0.0,
            eps2: 0.0,
            n_factor: 1.0,
        }
    }
}

/// `theta` reduced to `[0, 2 pi)`.
pub fn wrap_angle(theta: f64) -> f64 {
    let tau = 2.0 * core::f64::consts::PI;
    let t = theta % tau;
    if t < 0.0 {
        t + tau
    } else {
        t
    }
}

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        let finite = [
            ("omega_c", self.omega_c),
            ("omega_m", self.omega_m),
            ("g", self.g),
            ("omega_a", self.omega_a),
            ("lambda", self.lambda),
            ("alpha_A2", self.alpha_a2),
            ("xi", self.xi),
            ("theta", self.theta),
            ("eps1", self.eps1),
            ("eps2", self.eps2),
            ("N_factor", self.n_factor),
        ];
        for (name, v) in finite {
            if !v.is_finite() {
                return Err(Error::InvalidParameter(format!("{name} = {v} is not finite")));
            }
        }
        let positive = [("omega_c", self.omega_c), ("omega_m", self.omega_m), ("omega_a", self.omega_a)];
        for (name, v) in positive {
            if v <= 0.0 {
                return Err(Error::InvalidParameter(format!("{name} = {v} must be > 0")));
            }
        }
        let nonneg = [("g", self.g), ("lambda", self.lambda), ("alpha_A2", self.alpha_a2), ("xi", self.xi)];
        for (name, v) in nonneg {
            if v < 0.0 {
                return Err(Error::InvalidParameter(format!("{name} = {v} must be >= 0")));
            }
        }
        if self.n_atoms < 1 {
            return Err(Error::InvalidParameter("N_a must be >= 1".into()));
        }
        if self.n_factor < 1.0 {
            return Err(Error::InvalidParameter(format!("N_factor = {} must be >= 1", self.n_factor)));
        }
        Ok(())
    }

    /// `eta = omega_c / omega_m`.
    pub fn eta(&self) -> f64 {
        self.omega_c / self.omega_m
    }

    /// `kappa = sqrt(omega_c omega_m) / (2 g)`; infinite at `g = 0`.
    pub fn kappa(&self) -> f64 {
        (self.omega_c * self.omega_m).sqrt() / (2.0 * self.g)
    }

    /// `gamma = 2 sqrt(2) g / sqrt(omega_c omega_m)`.
    pub fn gamma(&self) -> f64 {
        2.0 * 2f64.sqrt() * self.g / (self.omega_c * self.omega_m).sqrt()
    }

    /// `mu = 2 lambda / sqrt(omega_a omega_c)`.
    pub fn mu(&self) -> f64 {
        2.0 * self.lambda / (self.omega_a * self.omega_c).sqrt()
    }

    /// A^2 coefficient `chi = alpha lambda^2 / omega_a`.
    pub fn chi(&self) -> f64 {
        self.alpha_a2 * self.lambda * self.lambda / self.omega_a
    }

    pub fn with_gamma(mut self, gamma: f64) -> Self {
        self.g = gamma * (self.omega_c * self.omega_m).sqrt() / (2.0 * 2f64.sqrt());
        self
    }

    pub fn with_kappa(mut self, kappa: f64) -> Self {
        self.g = (self.omega_c * self.omega_m).sqrt() / (2.0 * kappa);
        self
    }

    /// Change `omega_m` to reach `eta` while keeping `gamma` fixed.
    pub fn with_eta(self, eta: f64) -> Self {
        let gamma = self.gamma();
        let mut p = self;
        p.omega_m = p.omega_c / eta;
        p.with_gamma(gamma)
    }

    pub fn with_mu(mut self, mu: f64) -> Self {
        self.lambda = mu * (self.omega_a * self.omega_c).sqrt() / 2.0;
        self
    }

    pub fn with_xi(mut self, xi: f64) -> Self {
        self.xi = xi;
        self
    }

    /// Quartic coefficients `eps1 = eps2 = (4 omega_m^2 / omega_c)(gamma^6 - gamma^2)` under which
    /// the superradiant closed form holds.
    pub fn with_consistent_quartic(mut self) -> Self {
        let g2 = self.gamma().powi(2);
        let e = 4.0 * self.omega_m * self.omega_m / self.omega_c * (g2 * g2 * g2 - g2);
        self.eps1 = e;
        self.eps2 = e;
        self
    }
}

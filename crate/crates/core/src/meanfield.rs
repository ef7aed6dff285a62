//! Coherent-state (mean-field) energy landscapes and their minimizers.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use faer::{Mat, Side};
#[cfg_attr(feature = "std", allow(unused_imports))]
use num_traits::Float;

use crate::c64;
use crate::error::{Error, Result};
use crate::params::ModelParams;
use crate::spectrum::Frame;

/// Tolerance on Hessian eigenvalues when classifying a stationary point.
pub const HESSIAN_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Classification {
    Minimum,
    Saddle,
    Maximum,
}

impl Classification {
    pub fn from_eigenvalues(eigs: &[f64], tol: f64) -> Self {
        if eigs.iter().all(|&e| e >= -tol) {
            Classification::Minimum
        } else if eigs.iter().all(|&e| e <= tol) {
            Classification::Maximum
        } else {
            Classification::Saddle
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Classification::Minimum => "minimum",
            Classification::Saddle => "saddle",
            Classification::Maximum => "maximum",
        }
    }
}

impl fmt::Display for Classification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeanFieldPoint {
    pub alpha_mag: f64,
    /// In `[0, 2 pi)`. Reported as 0 on a degenerate ring.
    pub alpha_phase: f64,
    pub beta: f64,
    /// Energy in units of `omega_c`. For the Goldstone landscape this is the printed value.
    pub energy: f64,
    pub classification: Classification,
    /// Landscape frame the classification refers to.
    pub frame: Frame,
    /// The minimum is a ring in the phase of `alpha`.
    pub degenerate_ring: bool,
    pub hessian_eigenvalues: Vec<f64>,
}

fn sym_eigenvalues(h: &[f64], n: usize) -> Vec<f64> {
    let m = Mat::from_fn(n, n, |i, j| h[i * n + j]);
    match m.self_adjoint_eigen(Side::Lower) {
        Ok(e) => (0..n).map(|k| e.S().column_vector()[k]).collect(),
        Err(_) => vec![f64::NAN; n],
    }
}

// ---------------------------------------------------------------------------
// Goldstone landscape

/// `|a|^2 + |b|^2/eta - (|a|^2 + |a|^4)/kappa^2`.
pub fn mf_energy_hom(alpha: c64, beta: c64, kappa: f64, eta: f64) -> f64 {
    mf_energy_hom_in(alpha, beta, kappa, eta, Frame::Printed)
}

/// Same landscape; the flipped frame reverses the photon part only.
pub fn mf_energy_hom_in(alpha: c64, beta: c64, kappa: f64, eta: f64, frame: Frame) -> f64 {
    let rho = alpha.norm_sqr();
    let photon = rho - (rho + rho * rho) / (kappa * kappa);
    frame.sign() * photon + beta.norm_sqr() / eta
}

/// Hessian of the landscape in `(Re a, Im a, Re b, Im b)` at real `alpha`.
pub fn hessian_hom(alpha: f64, kappa: f64, eta: f64, frame: Frame) -> [f64; 16] {
    let s = frame.sign();
    let k2 = kappa * kappa;
    let rho = alpha * alpha;
    // photon part f(rho) = rho - (rho + rho^2)/k^2 as a function of rho = x^2 + y^2
    let f1 = s * (1.0 - (1.0 + 2.0 * rho) / k2);
    let f2 = s * (-2.0 / k2);
    let mut h = [0.0; 16];
    h[0] = 2.0 * f1 + 4.0 * alpha * alpha * f2;
    h[5] = 2.0 * f1;
    h[10] = 2.0 / eta;
    h[15] = 2.0 / eta;
    h
}

/// Minimum of the (flipped-frame) Goldstone landscape. `energy` is the printed value
/// `(kappa^2 + kappa^-2 - 2)/4` on the broken branch.
pub fn mf_minimize_hom(kappa: f64, eta: f64) -> Result<MeanFieldPoint> {
    if !(kappa > 0.0) || !(eta > 0.0) {
        return Err(Error::InvalidParameter(format!("kappa = {kappa}, eta = {eta} must be > 0")));
    }
    let (alpha, ring) = if kappa > 1.0 { (((kappa * kappa - 1.0) / 2.0).sqrt(), true) } else { (0.0, false) };
    let eigs = sym_eigenvalues(&hessian_hom(alpha, kappa, eta, Frame::Flipped), 4);
    Ok(MeanFieldPoint {
        alpha_mag: alpha,
        alpha_phase: 0.0,
        beta: 0.0,
        energy: mf_energy_hom(c64::new(alpha, 0.0), c64::new(0.0, 0.0), kappa, eta),
        classification: Classification::from_eigenvalues(&eigs, HESSIAN_TOL),
        frame: Frame::Flipped,
        degenerate_ring: ring,
        hessian_eigenvalues: eigs,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanRow {
    pub kappa: f64,
    pub energy: f64,
    pub d2: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SecondDerivativeScan {
    pub rows: Vec<ScanRow>,
    pub kink: f64,
    pub d2_left: f64,
    pub d2_right: f64,
    pub jump: f64,
}

/// Second derivative at `x` of the cubic through four samples.
fn cubic_d2(xs: &[f64; 4], ys: &[f64; 4], x: f64) -> f64 {
    let (x0, x1, x2, x3) = (xs[0], xs[1], xs[2], xs[3]);
    let d01 = (ys[1] - ys[0]) / (x1 - x0);
    let d12 = (ys[2] - ys[1]) / (x2 - x1);
    let d23 = (ys[3] - ys[2]) / (x3 - x2);
    let d012 = (d12 - d01) / (x2 - x0);
    let d123 = (d23 - d12) / (x3 - x1);
    let d0123 = (d123 - d012) / (x3 - x0);
    2.0 * d012 + 2.0 * d0123 * ((x - x0) + (x - x1) + (x - x2))
}

/// Ground-state mean-field energy and its second derivative on a uniform `kappa` grid.
/// Rows are the interior grid points (central differences); the jump at the kink is from
/// cubic fits through the four samples nearest to it on each side.
pub fn mf_second_derivative_scan(kappa_range: [f64; 2], steps: usize) -> Result<SecondDerivativeScan> {
    let [lo, hi] = kappa_range;
    if !(lo > 0.0 && lo < 1.0 && hi > 1.0) {
        return Err(Error::InvalidGrid(format!("range [{lo}, {hi}] must straddle 1 with lo > 0")));
    }
    let grid = crate::spectrum::linspace(lo, hi, steps);
    let energy = |k: f64| mf_minimize_hom(k, 1.0).map(|p| p.energy);
    let ys = grid.iter().map(|&k| energy(k)).collect::<Result<Vec<_>>>()?;
    let broken = |k: f64| mf_minimize_hom(k, 1.0).map(|p| p.alpha_mag > 0.0).unwrap_or(false);
    let first = grid.iter().position(|&k| broken(k)).ok_or_else(|| Error::InvalidGrid("no broken branch".into()))?;
    if first < 4 || grid.len() - first < 4 {
        return Err(Error::InvalidGrid(format!("need 4 samples per side of the kink, have {} and {}", first, grid.len() - first)));
    }
    let (mut a, mut b) = (grid[first - 1], grid[first]);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        if broken(m) {
            b = m;
        } else {
            a = m;
        }
    }
    let kink = b;
    let pick = |i0: usize| -> ([f64; 4], [f64; 4]) {
        let mut xs = [0.0; 4];
        let mut vs = [0.0; 4];
        for j in 0..4 {
            xs[j] = grid[i0 + j];
            vs[j] = ys[i0 + j];
        }
        (xs, vs)
    };
    let (xl, yl) = pick(first - 4);
    let (xr, yr) = pick(first);
    let d2_left = cubic_d2(&xl, &yl, kink);
    let d2_right = cubic_d2(&xr, &yr, kink);
    let h = if grid.len() > 1 { grid[1] - grid[0] } else { 0.0 };
    let rows = (1..grid.len() - 1)
        .map(|i| ScanRow { kappa: grid[i], energy: ys[i], d2: (ys[i + 1] - 2.0 * ys[i] + ys[i - 1]) / (h * h) })
        .collect();
    Ok(SecondDerivativeScan { rows, kink, d2_left, d2_right, jump: d2_right - d2_left })
}

// ---------------------------------------------------------------------------
// Quartic-stabilized landscape

/// `N w_c a^2 + w_m b^2 + 2 g b (N + 4 a^2) + (e1/N^2) a^4 + (e2/N^2) b^4`, in units of `omega_c`.
pub fn mf_energy_hop(alpha: f64, beta: f64, params: &ModelParams, n_factor: f64) -> f64 {
    hop_raw(alpha, beta, params, n_factor) / params.omega_c
}

fn hop_raw(a: f64, b: f64, p: &ModelParams, n: f64) -> f64 {
    let n2 = n * n;
    n * p.omega_c * a * a + p.omega_m * b * b + 2.0 * p.g * b * (n + 4.0 * a * a) + p.eps1 / n2 * a.powi(4) + p.eps2 / n2 * b.powi(4)
}

/// Gradient `(dE/da, dE/db)` in units of `omega_c`.
pub fn mf_gradient_hop(alpha: f64, beta: f64, params: &ModelParams, n_factor: f64) -> [f64; 2] {
    let p = params;
    let n2 = n_factor * n_factor;
    let ga = 2.0 * n_factor * p.omega_c * alpha + 16.0 * p.g * beta * alpha + 4.0 * p.eps1 * alpha.powi(3) / n2;
    let gb = 2.0 * p.omega_m * beta + 2.0 * p.g * (n_factor + 4.0 * alpha * alpha) + 4.0 * p.eps2 * beta.powi(3) / n2;
    [ga / p.omega_c, gb / p.omega_c]
}

/// Hessian `[E_aa, E_ab, E_ba, E_bb]` in units of `omega_c`.
pub fn mf_hessian_hop(alpha: f64, beta: f64, params: &ModelParams, n_factor: f64) -> [f64; 4] {
    let p = params;
    let n2 = n_factor * n_factor;
    let haa = 2.0 * n_factor * p.omega_c + 16.0 * p.g * beta + 12.0 * p.eps1 * alpha * alpha / n2;
    let hbb = 2.0 * p.omega_m + 12.0 * p.eps2 * beta * beta / n2;
    let hab = 16.0 * p.g * alpha;
    let w = p.omega_c;
    [haa / w, hab / w, hab / w, hbb / w]
}

/// Quartic coefficient for which the superradiant closed form applies.
pub fn consistent_quartic(params: &ModelParams) -> f64 {
    params.with_consistent_quartic().eps1
}

fn is_consistent(params: &ModelParams) -> bool {
    let e = consistent_quartic(params);
    let tol = 1e-9 * e.abs().max(f64::MIN_POSITIVE);
    (params.eps1 - e).abs() <= tol && (params.eps2 - e).abs() <= tol
}

fn hop_point(alpha: f64, beta: f64, params: &ModelParams, n: f64) -> MeanFieldPoint {
    let eigs = sym_eigenvalues(&mf_hessian_hop(alpha, beta, params, n), 2);
    MeanFieldPoint {
        alpha_mag: alpha.abs(),
        alpha_phase: if alpha < 0.0 { core::f64::consts::PI } else { 0.0 },
        beta,
        energy: mf_energy_hop(alpha, beta, params, n),
        classification: Classification::from_eigenvalues(&eigs, HESSIAN_TOL),
        frame: Frame::Printed,
        degenerate_ring: false,
        hessian_eigenvalues: eigs,
    }
}

/// Newton on `dE/db` at fixed `alpha`, started from `beta0`.
fn newton_beta(alpha: f64, beta0: f64, p: &ModelParams, n: f64) -> f64 {
    let mut b = beta0;
    for _ in 0..200 {
        let g = mf_gradient_hop(alpha, b, p, n)[1];
        let h = mf_hessian_hop(alpha, b, p, n)[3];
        if h == 0.0 || !h.is_finite() {
            break;
        }
        let step = g / h;
        b -= step;
        if step.abs() <= 1e-15 * b.abs().max(1.0) {
            break;
        }
    }
    b
}

/// Stationary point of the quartic hop mean-field energy for the parity-broken phase.
///
/// With `eps1 = eps2 = (4 w_m^2 / w_c)(gamma^6 - gamma^2)` the closed form
/// `a^2 = (N/4)(gamma^2 - 1)`, `b = -N w_c/(8 g)` is returned for `gamma > 1` and the `a = 0`
/// branch otherwise. Other quartic coefficients go to a numeric global search, which needs
/// `eps1, eps2 > 0` for the landscape to be bounded below.
pub fn mf_minimize_hop(params: &ModelParams, n_factor: f64) -> Result<MeanFieldPoint> {
    params.validate()?;
    if !(n_factor >= 1.0) {
        return Err(Error::InvalidParameter(format!("N_factor = {n_factor} must be >= 1")));
    }
    let p = params;
    let n = n_factor;
    if is_consistent(p) {
        let gamma = p.gamma();
        if gamma > 1.0 {
            let alpha = (n / 4.0 * (gamma * gamma - 1.0)).sqrt();
            let beta = -n * p.omega_c / (8.0 * p.g);
            return Ok(hop_point(alpha, beta, p, n));
        }
        let beta = if p.g == 0.0 { 0.0 } else { newton_beta(0.0, -p.g * n / p.omega_m, p, n) };
        return Ok(hop_point(0.0, beta, p, n));
    }
    if !(p.eps1 > 0.0 && p.eps2 > 0.0) {
        return Err(Error::InvalidRegime(format!("eps1 = {}, eps2 = {}: quartic landscape unbounded below", p.eps1, p.eps2)));
    }
    let (a, b) = hop_global(p, n);
    Ok(hop_point(a, b, p, n))
}

/// Profile `E(a, b*(a))`: for `eps2 > 0`, `dE/db` is strictly increasing in `b`.
fn beta_star(alpha: f64, p: &ModelParams, n: f64) -> f64 {
    let g = |b: f64| mf_gradient_hop(alpha, b, p, n)[1];
    let (mut lo, mut hi) = (-1.0, 1.0);
    while g(lo) > 0.0 {
        lo *= 2.0;
    }
    while g(hi) < 0.0 {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let m = 0.5 * (lo + hi);
        if m <= lo || m >= hi {
            break;
        }
        if g(m) > 0.0 {
            hi = m;
        } else {
            lo = m;
        }
    }
    newton_beta(alpha, 0.5 * (lo + hi), p, n)
}

fn hop_global(p: &ModelParams, n: f64) -> (f64, f64) {
    let profile = |a: f64| hop_raw(a, beta_star(a, p, n), p, n);
    // geometric scan in alpha, 30 points per decade
    let mut grid = vec![0.0];
    let mut a = 1e-4;
    while a < 1e14 * n {
        grid.push(a);
        a *= 10f64.powf(1.0 / 30.0);
    }
    let vals: Vec<f64> = grid.iter().map(|&a| profile(a)).collect();
    let best = (0..vals.len()).fold(0, |k, i| if vals[i] < vals[k] { i } else { k });
    let lo = if best == 0 { 0.0 } else { grid[best - 1] };
    let hi = if best + 1 < grid.len() { grid[best + 1] } else { grid[best] };
    let (mut x0, mut x1) = (lo, hi);
    let r = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..200 {
        if x1 - x0 <= 1e-15 * x1.abs().max(1e-300) {
            break;
        }
        let c = x1 - r * (x1 - x0);
        let d = x0 + r * (x1 - x0);
        if profile(c) < profile(d) {
            x1 = d;
        } else {
            x0 = c;
        }
    }
    let mut a = 0.5 * (x0 + x1);
    let mut b = beta_star(a, p, n);
    // Newton polish on the full gradient
    for _ in 0..50 {
        let g = mf_gradient_hop(a, b, p, n);
        let h = mf_hessian_hop(a, b, p, n);
        let det = h[0] * h[3] - h[1] * h[2];
        if det <= 0.0 || !det.is_finite() {
            break;
        }
        let da = (h[3] * g[0] - h[1] * g[1]) / det;
        let db = (h[0] * g[1] - h[2] * g[0]) / det;
        let (na, nb) = (a - da, b - db);
        if hop_raw(na, nb, p, n) > hop_raw(a, b, p, n) + 1e-12 * hop_raw(a, b, p, n).abs() {
            break;
        }
        a = na;
        b = nb;
        if da.abs() <= 1e-15 * a.abs().max(1.0) && db.abs() <= 1e-15 * b.abs().max(1.0) {
            break;
        }
    }
    (a.abs(), b)
}

// ---------------------------------------------------------------------------
// Hybrid light-atom landscape

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HybridMeanField {
    /// Per-atom boson coherence.
    pub zeta: f64,
    pub beta_spin: f64,
    /// Ground energy per atom in units of `omega_a`.
    pub energy: f64,
    pub delta_tilde: f64,
}

/// `N_a w_a b^2 + N_a w~_c z^2 + 4 l~ N_a z b sqrt(1 - b^2) - N_a w_a / 2` with
/// `l~ = delta~ sqrt(w_a w~_c) / 2`. `NaN` for `|b| > 1`.
pub fn hybrid_mf_energy(zeta: f64, beta: f64, delta_tilde: f64, omega_tilde_c: f64, omega_a: f64, n_atoms: f64) -> f64 {
    let lambda = delta_tilde * (omega_a * omega_tilde_c).sqrt() / 2.0;
    n_atoms
        * (omega_a * beta * beta + omega_tilde_c * zeta * zeta + 4.0 * lambda * zeta * beta * (1.0 - beta * beta).sqrt()
            - omega_a / 2.0)
}

/// Resonant (`w~_c = w_a`) hybrid mean field.
pub fn hybrid_meanfield(delta_tilde: f64) -> Result<HybridMeanField> {
    hybrid_meanfield_with(delta_tilde, 1.0, 1.0)
}

/// Minimum of the hybrid landscape on the `beta >= 0` branch.
pub fn hybrid_meanfield_with(delta_tilde: f64, omega_tilde_c: f64, omega_a: f64) -> Result<HybridMeanField> {
    if !(delta_tilde > 0.0) || !(omega_tilde_c > 0.0) || !(omega_a > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "delta~ = {delta_tilde}, w~_c = {omega_tilde_c}, w_a = {omega_a} must be > 0"
        )));
    }
    if delta_tilde <= 1.0 {
        return Ok(HybridMeanField { zeta: 0.0, beta_spin: 0.0, energy: -0.5, delta_tilde });
    }
    let d2 = delta_tilde * delta_tilde;
    let beta = (0.5 * (1.0 - 1.0 / d2)).sqrt();
    let zeta = -(omega_a / (4.0 * omega_tilde_c)).sqrt() * (d2 - 1.0 / d2).sqrt();
    let energy = hybrid_mf_energy(zeta, beta, delta_tilde, omega_tilde_c, omega_a, 1.0) / omega_a;
    Ok(HybridMeanField { zeta, beta_spin: beta, energy, delta_tilde })
}

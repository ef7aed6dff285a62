//! Hamiltonian builders. Every matrix is returned in units of `omega_c`.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

#[cfg_attr(feature = "std", allow(unused_imports))]
use num_traits::Float;

use crate::algebra::{
    accumulate_kron, annihilation, hp_jz, hp_raise, identity, number, position_quadrature, spin_jz,
    spin_raise, squeeze, FockSpaceLayout, Mode, OperatorMatrix,
};
use crate::c64;
use crate::error::{Error, Result};
use crate::params::ModelParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum HamiltonianKind {
    /// `a^+a + b^+b/eta + (g/omega_c)(a+a^+)^2(b+b^+)`.
    FullH,
    /// Radiation-pressure form with coupling `2g a^+a(b+b^+)`.
    ApproxHom,
    /// Diagonal `n - n^2/kappa^2` after eliminating the mechanics.
    EffectiveHomTilde,
    /// Full model after displacing the mechanics by `g/omega_m`.
    DisplacedHbar,
    /// Classical-oscillator limit `a^+a - (gamma^2/4)(a+a^+)^2 + gamma^2/8`.
    QuadraticLimitHbarF,
    /// Full model plus a two-photon drive, conjugated by the drive's squeeze.
    SqueezedDrive,
    /// Quartic-stabilized model with macroscopic factor `N`.
    QuarticHop,
    HybridFullSpin,
    HybridHp,
}

impl HamiltonianKind {
    pub const ALL: [Self; 9] = [
        Self::FullH,
        Self::ApproxHom,
        Self::EffectiveHomTilde,
        Self::DisplacedHbar,
        Self::QuadraticLimitHbarF,
        Self::SqueezedDrive,
        Self::QuarticHop,
        Self::HybridFullSpin,
        Self::HybridHp,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::FullH => "FullH",
            Self::ApproxHom => "ApproxHom",
            Self::EffectiveHomTilde => "EffectiveHomTilde",
            Self::DisplacedHbar => "DisplacedHbar",
            Self::QuadraticLimitHbarF => "QuadraticLimitHbarF",
            Self::SqueezedDrive => "SqueezedDrive",
            Self::QuarticHop => "QuarticHop",
            Self::HybridFullSpin => "HybridFullSpin",
            Self::HybridHp => "HybridHP",
        }
    }

    /// Mode labels expected by the builder, in layout order.
    pub fn modes(self) -> &'static [Mode] {
        match self {
            Self::EffectiveHomTilde | Self::QuadraticLimitHbarF => &[Mode::Cavity],
            Self::HybridFullSpin => &[Mode::Cavity, Mode::Mechanical, Mode::Spin],
            Self::HybridHp => &[Mode::Cavity, Mode::Mechanical, Mode::AtomHp],
            _ => &[Mode::Cavity, Mode::Mechanical],
        }
    }

    /// Modes whose excitation number enters the conserved parity. For the optomechanical
    /// models this is the photon parity `exp(i pi a^+a)`; the light-atom coupling only
    /// conserves the photon-plus-atom parity.
    pub fn parity_modes(self) -> &'static [Mode] {
        match self {
            Self::HybridFullSpin => &[Mode::Cavity, Mode::Spin],
            Self::HybridHp => &[Mode::Cavity, Mode::AtomHp],
            _ => &[Mode::Cavity],
        }
    }

    /// Starting truncation for automatic convergence: 16 photons, 40 phonons,
    /// the whole spin multiplet.
    pub fn default_layout(self, params: &ModelParams) -> Result<FockSpaceLayout> {
        let spin = params.n_atoms as usize + 1;
        let dims: Vec<(Mode, usize)> = self
            .modes()
            .iter()
            .map(|&m| {
                let d = match m {
                    Mode::Cavity => 16,
                    Mode::Mechanical => 40,
                    Mode::Spin => spin,
                    Mode::AtomHp => spin.min(16),
                    Mode::Boson => 16,
                };
                (m, d.max(2))
            })
            .collect();
        FockSpaceLayout::new(&dims)
    }

    /// Layout from explicit per-mode dimensions.
    pub fn layout_with_dims(self, dims: &[usize]) -> Result<FockSpaceLayout> {
        let modes = self.modes();
        if dims.len() != modes.len() {
            return Err(Error::LayoutMismatch(format!(
                "{} expects {} mode dimensions, got {}",
                self.name(),
                modes.len(),
                dims.len()
            )));
        }
        let pairs: Vec<(Mode, usize)> = modes.iter().copied().zip(dims.iter().copied()).collect();
        FockSpaceLayout::new(&pairs)
    }
}

impl fmt::Display for HamiltonianKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for HamiltonianKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .iter()
            .copied()
            .find(|k| k.name().eq_ignore_ascii_case(s) || (s == "QuadraticLimit" && *k == Self::QuadraticLimitHbarF))
            .ok_or_else(|| Error::InvalidParameter(format!("unknown model {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum BuildWarning {
    /// Holstein-Primakoff boson truncated below `N_a + 1` levels.
    HpTruncated { dim: usize, n_atoms: u32 },
    /// Holstein-Primakoff levels above `N_a` are kept; they are decoupled artifacts.
    HpUnphysicalLevels { dim: usize, n_atoms: u32 },
    /// Squeezing direction other than 0 or pi.
    UnvalidatedDirection { theta: f64 },
}

impl fmt::Display for BuildWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::HpTruncated { dim, n_atoms } => {
                write!(f, "HP boson truncated to {dim} levels for N_a = {n_atoms}")
            }
            Self::HpUnphysicalLevels { dim, n_atoms } => {
                write!(f, "HP boson keeps {dim} levels, more than N_a + 1 = {}", n_atoms + 1)
            }
            Self::UnvalidatedDirection { theta } => {
                write!(f, "squeezing direction theta = {theta} has no closed-form check")
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct Hamiltonian {
    pub kind: HamiltonianKind,
    pub matrix: OperatorMatrix,
    pub warnings: Vec<BuildWarning>,
}

/// Build any model on `layout`.
pub fn build(kind: HamiltonianKind, params: &ModelParams, layout: &FockSpaceLayout) -> Result<Hamiltonian> {
    params.validate()?;
    let mut warnings = Vec::new();
    let matrix = match kind {
        HamiltonianKind::FullH => build_full_h(params, layout)?,
        HamiltonianKind::ApproxHom => build_approx_hom(params, layout)?,
        HamiltonianKind::EffectiveHomTilde => {
            expect_modes(kind, layout)?;
            build_effective_hom_tilde(params.kappa(), layout.mode_dims()[0])?
        }
        HamiltonianKind::DisplacedHbar => build_displaced_hbar(params, layout)?,
        HamiltonianKind::QuadraticLimitHbarF => {
            expect_modes(kind, layout)?;
            build_quadratic_limit(params.gamma(), layout.mode_dims()[0])?
        }
        HamiltonianKind::SqueezedDrive => {
            if !is_closed_form_direction(params.theta) {
                warnings.push(BuildWarning::UnvalidatedDirection { theta: params.theta });
            }
            build_squeezed_drive(params, layout)?
        }
        HamiltonianKind::QuarticHop => build_quartic_hop(params, layout)?,
        HamiltonianKind::HybridFullSpin | HamiltonianKind::HybridHp => {
            if kind == HamiltonianKind::HybridHp {
                expect_modes(kind, layout)?;
                let dim = layout.mode_dims()[2];
                let full = params.n_atoms as usize + 1;
                if dim < full {
                    warnings.push(BuildWarning::HpTruncated { dim, n_atoms: params.n_atoms });
                } else if dim > full {
                    warnings.push(BuildWarning::HpUnphysicalLevels { dim, n_atoms: params.n_atoms });
                }
            }
            build_hybrid(params, layout, kind)?
        }
    };
    Ok(Hamiltonian { kind, matrix, warnings })
}

fn is_closed_form_direction(theta: f64) -> bool {
    let t = crate::params::wrap_angle(theta);
    t.abs() < 1e-12 || (t - core::f64::consts::PI).abs() < 1e-12
}

fn expect_modes(kind: HamiltonianKind, layout: &FockSpaceLayout) -> Result<()> {
    if layout.modes() != kind.modes() {
        let got: Vec<&str> = layout.labels().collect();
        let want: Vec<&str> = kind.modes().iter().map(|m| m.label()).collect();
        return Err(Error::LayoutMismatch(format!("{} needs modes {want:?}, got {got:?}", kind.name())));
    }
    Ok(())
}

/// Single-mode cavity operators shared by the two-mode builders.
struct CavityOps {
    n: OperatorMatrix,
    x: OperatorMatrix,
    x2: OperatorMatrix,
    a2: OperatorMatrix,
    ad2: OperatorMatrix,
}

impl CavityOps {
    fn canonical(dim: usize) -> Result<Self> {
        let a = annihilation(dim)?;
        let x = position_quadrature(dim)?;
        let x2 = (&x * &x).with_hint(true);
        let a2 = &a * &a;
        let ad2 = a2.adjoint();
        Ok(Self { n: number(dim)?, x, x2, a2, ad2 })
    }
}

struct MechOps {
    n: OperatorMatrix,
    x: OperatorMatrix,
    eye: OperatorMatrix,
}

impl MechOps {
    fn new(dim: usize) -> Result<Self> {
        Ok(Self { n: number(dim)?, x: position_quadrature(dim)?, eye: identity(dim)? })
    }
}

fn real(v: f64) -> c64 {
    c64::new(v, 0.0)
}

fn two_mode_dims(kind: HamiltonianKind, layout: &FockSpaceLayout) -> Result<(usize, usize)> {
    expect_modes(kind, layout)?;
    Ok((layout.mode_dims()[0], layout.mode_dims()[1]))
}

/// `H = omega_c a^+a + omega_m b^+b + g (a+a^+)^2 (b+b^+)`.
pub fn build_full_h(params: &ModelParams, layout: &FockSpaceLayout) -> Result<OperatorMatrix> {
    let (dc, dm) = two_mode_dims(HamiltonianKind::FullH, layout)?;
    optomech_core(params, layout, &CavityOps::canonical(dc)?, &MechOps::new(dm)?)
}

fn optomech_core(params: &ModelParams, layout: &FockSpaceLayout, c: &CavityOps, m: &MechOps) -> Result<OperatorMatrix> {
    let eye_c = identity(c.n.dim())?;
    let mut h = OperatorMatrix::zeros(layout);
    accumulate_kron(&mut h, real(1.0), &[&c.n, &m.eye])?;
    accumulate_kron(&mut h, real(1.0 / params.eta()), &[&eye_c, &m.n])?;
    accumulate_kron(&mut h, real(params.g / params.omega_c), &[&c.x2, &m.x])?;
    Ok(h.with_hint(true))
}

/// `H_om = omega_c a^+a + omega_m b^+b + 2g a^+a (b+b^+)`.
pub fn build_approx_hom(params: &ModelParams, layout: &FockSpaceLayout) -> Result<OperatorMatrix> {
    let (dc, dm) = two_mode_dims(HamiltonianKind::ApproxHom, layout)?;
    let m = MechOps::new(dm)?;
    let n = number(dc)?;
    let eye_c = identity(dc)?;
    let mut h = OperatorMatrix::zeros(layout);
    accumulate_kron(&mut h, real(1.0), &[&n, &m.eye])?;
    accumulate_kron(&mut h, real(1.0 / params.eta()), &[&eye_c, &m.n])?;
    accumulate_kron(&mut h, real(2.0 * params.g / params.omega_c), &[&n, &m.x])?;
    Ok(h.with_hint(true))
}

/// Diagonal `n - n^2/kappa^2`, as printed (unbounded below for large `n`).
pub fn build_effective_hom_tilde(kappa: f64, dim: usize) -> Result<OperatorMatrix> {
    if !(kappa > 0.0) {
        return Err(Error::InvalidParameter(format!("kappa = {kappa} must be > 0")));
    }
    let layout = FockSpaceLayout::single(Mode::Cavity, dim)?;
    let k2 = kappa * kappa;
    Ok(OperatorMatrix::from_diagonal(&layout, |n| {
        let n = n as f64;
        n - n * n / k2
    }))
}

/// Full model with the mechanics displaced by `g/omega_m`:
/// `w_c a^+a + w_m b^+b - (2g^2/w_m)(a+a^+)^2 + g^2/w_m + g(a^2 + a^{+2} + 2a^+a)(b+b^+)`.
pub fn build_displaced_hbar(params: &ModelParams, layout: &FockSpaceLayout) -> Result<OperatorMatrix> {
    let (dc, dm) = two_mode_dims(HamiltonianKind::DisplacedHbar, layout)?;
    let c = CavityOps::canonical(dc)?;
    let m = MechOps::new(dm)?;
    let eye_c = identity(dc)?;
    let g = params.g / params.omega_c;
    let shift = params.g * params.g / (params.omega_m * params.omega_c);
    let quad = &(&c.a2 + &c.ad2) + &(&c.n * 2.0);
    let mut h = OperatorMatrix::zeros(layout);
    accumulate_kron(&mut h, real(1.0), &[&c.n, &m.eye])?;
    accumulate_kron(&mut h, real(1.0 / params.eta()), &[&eye_c, &m.n])?;
    accumulate_kron(&mut h, real(-2.0 * shift), &[&c.x2, &m.eye])?;
    accumulate_kron(&mut h, real(shift), &[&eye_c, &m.eye])?;
    accumulate_kron(&mut h, real(g), &[&quad, &m.x])?;
    Ok(h.with_hint(true))
}

/// `a^+a - (gamma^2/4)(a+a^+)^2 + gamma^2/8`.
pub fn build_quadratic_limit(gamma: f64, dim: usize) -> Result<OperatorMatrix> {
    if !gamma.is_finite() {
        return Err(Error::InvalidParameter(format!("gamma = {gamma} must be finite")));
    }
    let layout = FockSpaceLayout::single(Mode::Cavity, dim)?;
    let c = CavityOps::canonical(dim)?;
    let g2 = gamma * gamma;
    let mut h = OperatorMatrix::zeros(&layout);
    accumulate_kron(&mut h, real(1.0), &[&c.n])?;
    accumulate_kron(&mut h, real(-g2 / 4.0), &[&c.x2])?;
    accumulate_kron(&mut h, real(g2 / 8.0), &[&identity(dim)?])?;
    Ok(h.with_hint(true))
}

/// Padding used when conjugating cavity operators by the drive squeeze.
pub fn squeeze_padding(dim: usize) -> usize {
    2 * dim + 32
}

/// `S^+ [H + xi (a^{+2} e^{-i theta} + a^2 e^{i theta})] S` with `S = exp[(1/2)(zeta^* a^2 - zeta a^{+2})]`,
/// `zeta = xi e^{i theta}`. Cavity operators are conjugated in a padded space and then truncated.
pub fn build_squeezed_drive(params: &ModelParams, layout: &FockSpaceLayout) -> Result<OperatorMatrix> {
    let (dc, dm) = two_mode_dims(HamiltonianKind::SqueezedDrive, layout)?;
    let m = MechOps::new(dm)?;
    if params.xi == 0.0 {
        return optomech_core(params, layout, &CavityOps::canonical(dc)?, &m);
    }
    let pad = squeeze_padding(dc);
    let phase = c64::new(params.theta.cos(), params.theta.sin());
    let zeta = phase * params.xi;
    let s = squeeze(pad, -zeta)?;
    let p = CavityOps::canonical(pad)?;
    let drive_p = &(&p.ad2 * phase.conj()) + &(&p.a2 * phase);
    let conj = |op: &OperatorMatrix| -> Result<OperatorMatrix> { op.conjugate_by(&s)?.truncate(dc) };
    let n = conj(&p.n)?;
    let x2 = conj(&p.x2)?;
    let drive = conj(&drive_p.with_hint(true))?;
    let eye_c = identity(dc)?;
    let mut h = OperatorMatrix::zeros(layout);
    accumulate_kron(&mut h, real(1.0), &[&n, &m.eye])?;
    accumulate_kron(&mut h, real(1.0 / params.eta()), &[&eye_c, &m.n])?;
    accumulate_kron(&mut h, real(params.g / params.omega_c), &[&x2, &m.x])?;
    accumulate_kron(&mut h, real(params.xi / params.omega_c), &[&drive, &m.eye])?;
    Ok(h.with_hint(true))
}

/// `N w_c a^+a + w_m b^+b + g(a^2 + a^{+2} + 2a^+a)(b+b^+) + N g (b+b^+)
///  + (eps1/N^2) a^+a^+aa + (eps2/N^2) b^+b^+bb`.
pub fn build_quartic_hop(params: &ModelParams, layout: &FockSpaceLayout) -> Result<OperatorMatrix> {
    let (dc, dm) = two_mode_dims(HamiltonianKind::QuarticHop, layout)?;
    let c = CavityOps::canonical(dc)?;
    let m = MechOps::new(dm)?;
    let eye_c = identity(dc)?;
    let nf = params.n_factor;
    let wc = params.omega_c;
    let g = params.g / wc;
    let quad = &(&c.a2 + &c.ad2) + &(&c.n * 2.0);
    let pairs = |d: usize| OperatorMatrix::from_diagonal(&FockSpaceLayout::single(Mode::Boson, d).unwrap(), |k| {
        let k = k as f64;
        k * (k - 1.0)
    });
    let mut h = OperatorMatrix::zeros(layout);
    accumulate_kron(&mut h, real(nf), &[&c.n, &m.eye])?;
    accumulate_kron(&mut h, real(1.0 / params.eta()), &[&eye_c, &m.n])?;
    accumulate_kron(&mut h, real(g), &[&quad, &m.x])?;
    accumulate_kron(&mut h, real(nf * g), &[&eye_c, &m.x])?;
    accumulate_kron(&mut h, real(params.eps1 / (nf * nf * wc)), &[&pairs(dc), &m.eye])?;
    accumulate_kron(&mut h, real(params.eps2 / (nf * nf * wc)), &[&eye_c, &pairs(dm)])?;
    Ok(h.with_hint(true))
}

/// `H_h = H + w_a J_z + (lambda/sqrt(N_a))(a+a^+)(J_+ + J_-) + chi (a+a^+)^2`, with `chi = alpha lambda^2/w_a`.
pub fn build_hybrid(params: &ModelParams, layout: &FockSpaceLayout, representation: HamiltonianKind) -> Result<OperatorMatrix> {
    expect_modes(representation, layout)?;
    let dims = layout.mode_dims();
    let (dc, dm, da) = (dims[0], dims[1], dims[2]);
    let (jz, jp) = match representation {
        HamiltonianKind::HybridFullSpin => {
            if da != params.n_atoms as usize + 1 {
                return Err(Error::LayoutMismatch(format!(
                    "spin mode needs dimension N_a + 1 = {}, got {da}",
                    params.n_atoms + 1
                )));
            }
            (spin_jz(params.n_atoms)?, spin_raise(params.n_atoms)?)
        }
        HamiltonianKind::HybridHp => (hp_jz(params.n_atoms, da)?, hp_raise(params.n_atoms, da)?),
        other => {
            return Err(Error::InvalidParameter(format!("{} is not a hybrid representation", other.name())))
        }
    };
    let jx = (&jp + &jp.adjoint()).with_hint(true);
    let c = CavityOps::canonical(dc)?;
    let m = MechOps::new(dm)?;
    let eye_c = identity(dc)?;
    let eye_a = identity(da)?;
    let wc = params.omega_c;
    let mut h = OperatorMatrix::zeros(layout);
    accumulate_kron(&mut h, real(1.0), &[&c.n, &m.eye, &eye_a])?;
    accumulate_kron(&mut h, real(1.0 / params.eta()), &[&eye_c, &m.n, &eye_a])?;
    accumulate_kron(&mut h, real(params.g / wc), &[&c.x2, &m.x, &eye_a])?;
    accumulate_kron(&mut h, real(params.omega_a / wc), &[&eye_c, &m.eye, &jz])?;
    let lam = params.lambda / (wc * (params.n_atoms as f64).sqrt());
    accumulate_kron(&mut h, real(lam), &[&c.x, &m.eye, &jx])?;
    accumulate_kron(&mut h, real(params.chi() / wc), &[&c.x2, &m.eye, &eye_a])?;
    Ok(h.with_hint(true))
}

/// Polaron transform `U = exp[-(2g/w_m) a^+a (b^+ - b)]` that diagonalizes `H_om`, conjugated
/// entrywise in the photon-number basis: within the `n`-photon block it is the displacement by `2gn/w_m`.
pub fn polaron_unitary(params: &ModelParams, layout: &FockSpaceLayout) -> Result<OperatorMatrix> {
    let (dc, dm) = two_mode_dims(HamiltonianKind::ApproxHom, layout)?;
    let mut u = OperatorMatrix::zeros(layout);
    for n in 0..dc {
        let x = 2.0 * params.g * n as f64 / params.omega_m;
        let d = crate::algebra::displacement(dm, x)?;
        for i in 0..dm {
            for j in 0..dm {
                u.set(n * dm + i, n * dm + j, d.get(i, j));
            }
        }
    }
    Ok(u.with_hint(false))
}

/// Names of all builder kinds, for diagnostics.
pub fn kind_names() -> String {
    let names: Vec<&str> = HamiltonianKind::ALL.iter().map(|k| k.name()).collect();
    names.join(", ")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{commutator, displacement, matrix_exp, parity, tensor_embed};

    fn two(dc: usize, dm: usize) -> FockSpaceLayout {
        FockSpaceLayout::new(&[(Mode::Cavity, dc), (Mode::Mechanical, dm)]).unwrap()
    }

    fn params(eta: f64, gamma: f64) -> ModelParams {
        ModelParams { omega_c: 1.0, omega_m: 1.0 / eta, ..Default::default() }.with_gamma(gamma)
    }

    #[test]
    fn decoupled_is_diagonal() {
        let p = ModelParams { omega_m: 0.3, ..Default::default() };
        let l = two(5, 6);
        for h in [build_full_h(&p, &l).unwrap(), build_approx_hom(&p, &l).unwrap(), build_displaced_hbar(&p, &l).unwrap()] {
            for i in 0..30 {
                for j in 0..30 {
                    let (n, k) = (i / 6, i % 6);
                    let want = if i == j { n as f64 + 0.3 * k as f64 } else { 0.0 };
                    assert!((h.get(i, j) - real(want)).norm() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn full_h_conserves_parity() {
        let p = params(5.0, 0.7);
        let l = two(10, 10);
        let h = build_full_h(&p, &l).unwrap();
        assert!(h.hermiticity_defect() < 1e-12);
        let pc = tensor_embed(&parity(10).unwrap(), 0, &l).unwrap();
        assert!(commutator(&h, &pc).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn wrong_mode_count() {
        let p = params(5.0, 0.3);
        let one = FockSpaceLayout::single(Mode::Cavity, 4).unwrap();
        assert!(matches!(build_full_h(&p, &one), Err(Error::LayoutMismatch(_))));
    }

    #[test]
    fn effective_levels() {
        let h = build_effective_hom_tilde(1.0, 4).unwrap();
        assert_eq!(h.get(0, 0).re, 0.0);
        assert_eq!(h.get(1, 1).re, 0.0);
        let h = build_effective_hom_tilde(2.0, 6).unwrap();
        assert_eq!(h.get(1, 1).re, 0.75);
        assert_eq!(h.get(4, 4).re, 0.0);
        assert!(build_effective_hom_tilde(0.0, 4).is_err());
    }

    #[test]
    fn approx_hom_sector_energy() {
        // E = n - n^2/kappa^2 + k/eta in the displaced basis.
        let p = ModelParams { omega_m: 0.5, g: 0.1, ..Default::default() };
        let l = two(8, 60);
        let h = build_approx_hom(&p, &l).unwrap();
        let u = polaron_unitary(&p, &l).unwrap();
        let d = h.conjugate_by(&u).unwrap();
        let k2 = p.kappa().powi(2);
        for n in 0..4 {
            for k in 0..20 {
                let i = n * 60 + k;
                let want = n as f64 - (n * n) as f64 / k2 + k as f64 * 0.5;
                assert!((d.get(i, i).re - want).abs() < 1e-8, "n={n} k={k}");
                for j in 0..(8 * 60) {
                    let (nj, kj) = (j / 60, j % 60);
                    if j != i && nj < 4 && kj < 20 {
                        assert!(d.get(i, j).norm() < 1e-8);
                    }
                }
            }
        }
        let n2 = 2.0 - 4.0 / k2;
        assert!((d.get(120, 120).re - n2).abs() < 1e-8);
    }

    #[test]
    fn displaced_matches_conjugated_full() {
        let p = ModelParams { omega_m: 0.5, g: 0.2, ..Default::default() };
        let (dc, dm, pad) = (12, 30, 90);
        let big = build_full_h(&p, &two(dc, pad)).unwrap();
        let u1 = tensor_embed(&identity(dc).unwrap(), 0, &two(dc, pad)).unwrap();
        let d = tensor_embed(&displacement(pad, p.g / p.omega_m).unwrap(), 1, &two(dc, pad)).unwrap();
        let u1 = &u1 * &d;
        let conj = big.conjugate_by(&u1).unwrap();
        let hb = build_displaced_hbar(&p, &two(dc, dm)).unwrap();
        // Interior block: away from the cavity edge (degree 2) and the mechanical edge.
        for n in 0..dc - 2 {
            for k in 0..dm - 10 {
                for n2 in 0..dc - 2 {
                    for k2 in 0..dm - 10 {
                        let a = conj.get(n * pad + k, n2 * pad + k2);
                        let b = hb.get(n * dm + k, n2 * dm + k2);
                        assert!((a - b).norm() < 1e-9, "({n},{k}),({n2},{k2})");
                    }
                }
            }
        }
    }

    #[test]
    fn quadratic_limit_terms() {
        let h = build_quadratic_limit(0.0, 6).unwrap();
        assert_eq!((&h - &number(6).unwrap().relabel(h.layout()).unwrap()).max_abs(), 0.0);
        let h = build_quadratic_limit(0.6, 10).unwrap();
        assert!((h.get(0, 0).re - (0.045 - 0.09)).abs() < 1e-15);
    }

    #[test]
    fn squeezed_drive_zero_is_full_h() {
        let p = ModelParams { xi: 0.0, ..params(10.0, 0.4) };
        let l = two(8, 12);
        let a = build_squeezed_drive(&p, &l).unwrap();
        let b = build_full_h(&p, &l).unwrap();
        for i in 0..96 {
            for j in 0..96 {
                assert_eq!(a.get(i, j), b.get(i, j));
            }
        }
    }

    fn coupling_block(h: &OperatorMatrix, dm: usize, n: usize, n2: usize) -> c64 {
        // <n,1| H |n2,0> carries g_eff <n|X^2|n2>.
        h.get(n * dm + 1, n2 * dm)
    }

    #[test]
    fn squeezed_drive_coupling_scales() {
        use core::f64::consts::PI;
        let base = params(10.0, 0.3);
        let (dc, dm) = (16, 4);
        let l = two(dc, dm);
        let x2 = {
            let x = position_quadrature(dc).unwrap();
            &x * &x
        };
        for (theta, sign) in [(0.0, -1.0), (PI, 1.0)] {
            let xi = 0.3;
            let p = ModelParams { xi, theta, ..base };
            let h = build_squeezed_drive(&p, &l).unwrap();
            assert!(h.hermiticity_defect() < 1e-12);
            let geff = p.g * (2.0 * sign * xi).exp();
            for (n, n2) in [(0, 0), (0, 2), (1, 1), (3, 5)] {
                let want = x2.get(n, n2) * geff;
                assert!((coupling_block(&h, dm, n, n2) - want).norm() < 1e-10, "theta={theta} ({n},{n2})");
            }
        }
    }

    #[test]
    fn quartic_hop_reduces_to_full_h() {
        let p = ModelParams { eps1: 0.0, eps2: 0.0, n_factor: 1.0, ..params(4.0, 0.5) };
        let (dc, dm) = (10, 14);
        let l = two(dc, dm);
        let a = build_quartic_hop(&p, &l).unwrap();
        let b = build_full_h(&p, &l).unwrap();
        for i in 0..dc * dm {
            for j in 0..dc * dm {
                if i / dm < dc - 1 && j / dm < dc - 1 {
                    assert!((a.get(i, j) - b.get(i, j)).norm() < 1e-13);
                }
            }
        }
    }

    #[test]
    fn quartic_diagonal_sector() {
        let p = ModelParams { eps1: 0.7, eps2: 0.0, n_factor: 3.0, g: 0.0, ..Default::default() };
        let (dc, dm) = (8, 3);
        let h = build_quartic_hop(&p, &two(dc, dm)).unwrap();
        for n in 0..dc {
            let want = 3.0 * n as f64 + 0.7 * (n * n.saturating_sub(1)) as f64 / 9.0;
            assert!((h.get(n * dm, n * dm).re - want).abs() < 1e-13);
        }
    }

    #[test]
    fn hybrid_decouples_at_zero_lambda() {
        let p = ModelParams { n_atoms: 3, lambda: 0.0, ..params(5.0, 0.4) };
        let l = FockSpaceLayout::new(&[(Mode::Cavity, 6), (Mode::Mechanical, 5), (Mode::Spin, 4)]).unwrap();
        let h = build_hybrid(&p, &l, HamiltonianKind::HybridFullSpin).unwrap();
        let hom = build_full_h(&p, &two(6, 5)).unwrap();
        for i in 0..120 {
            for j in 0..120 {
                let (ij, ia) = (i / 4, i % 4);
                let (jj, ja) = (j / 4, j % 4);
                let mut want = if ia == ja { hom.get(ij, jj) } else { real(0.0) };
                if i == j {
                    want += real(ia as f64 - 1.5);
                }
                assert!((h.get(i, j) - want).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn hybrid_hp_matches_full_spin_at_full_dimension() {
        let p = ModelParams { n_atoms: 4, alpha_a2: 0.5, ..params(3.0, 0.4) }.with_mu(0.7);
        let ls = FockSpaceLayout::new(&[(Mode::Cavity, 6), (Mode::Mechanical, 4), (Mode::Spin, 5)]).unwrap();
        let lh = FockSpaceLayout::new(&[(Mode::Cavity, 6), (Mode::Mechanical, 4), (Mode::AtomHp, 5)]).unwrap();
        let a = build_hybrid(&p, &ls, HamiltonianKind::HybridFullSpin).unwrap();
        let b = build_hybrid(&p, &lh, HamiltonianKind::HybridHp).unwrap();
        assert!((&a - &b.relabel(&ls).unwrap()).max_abs() < 1e-15);
        assert!(a.hermiticity_defect() < 1e-12);
        let small = build(HamiltonianKind::HybridHp, &p, &lh.with_dim(2, 3).unwrap()).unwrap();
        assert_eq!(small.warnings, vec![BuildWarning::HpTruncated { dim: 3, n_atoms: 4 }]);
    }

    #[test]
    fn unvalidated_direction_is_flagged() {
        let p = ModelParams { xi: 0.2, theta: 1.0, ..params(10.0, 0.3) };
        let h = build(HamiltonianKind::SqueezedDrive, &p, &two(6, 4)).unwrap();
        assert_eq!(h.warnings.len(), 1);
        let p = ModelParams { theta: core::f64::consts::PI, ..p };
        assert!(build(HamiltonianKind::SqueezedDrive, &p, &two(6, 4)).unwrap().warnings.is_empty());
    }

    #[test]
    fn polaron_conserved_operator() {
        // P = U exp(i theta N) U^+ commutes with H_om on the interior block.
        let p = ModelParams { omega_m: 0.5, g: 0.1, ..Default::default() };
        let (dc, dm) = (6, 90);
        let l = two(dc, dm);
        let h = build_approx_hom(&p, &l).unwrap();
        let u = polaron_unitary(&p, &l).unwrap();
        let nt = &tensor_embed(&number(dc).unwrap(), 0, &l).unwrap() + &tensor_embed(&number(dm).unwrap(), 1, &l).unwrap();
        let e = matrix_exp(&(&nt * c64::new(0.0, 0.8))).unwrap();
        let pm = &(&u * &e) * &u.adjoint();
        let c = commutator(&h, &pm).unwrap();
        for i in 0..dc * dm {
            for j in 0..dc * dm {
                if i % dm < 25 && j % dm < 25 {
                    assert!(c.get(i, j).norm() < 1e-8, "({i},{j})");
                }
            }
        }
    }

    #[test]
    fn kind_names_round_trip() {
        for k in HamiltonianKind::ALL {
            assert_eq!(k.name().parse::<HamiltonianKind>().unwrap(), k);
        }
        assert!("Nope".parse::<HamiltonianKind>().is_err());
        assert!(kind_names().contains("HybridHP"));
    }
}

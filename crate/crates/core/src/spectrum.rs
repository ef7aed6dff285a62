//! Dense diagonalization, ground-state observables, truncation convergence and sweeps.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use faer::{Mat, Side};
#[cfg_attr(feature = "std", allow(unused_imports))]
use num_traits::Float;

use crate::algebra::{accumulate_kron, identity, position_quadrature, FockSpaceLayout, Mode, Modulus, OperatorMatrix};
use crate::c64;
use crate::error::{Error, Result};
use crate::model::{build, build_effective_hom_tilde, BuildWarning, HamiltonianKind};
use crate::params::ModelParams;

/// Sign convention for reported energies. `Flipped` diagonalizes `-H`, the frame in which
/// the bare anharmonic staircase is bounded below.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Frame {
    #[default]
    Printed,
    Flipped,
}

impl Frame {
    pub fn sign(self) -> f64 {
        match self {
            Frame::Printed => 1.0,
            Frame::Flipped => -1.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Frame::Printed => "printed",
            Frame::Flipped => "flipped",
        }
    }
}

impl FromStr for Frame {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "printed" => Ok(Frame::Printed),
            "flipped" => Ok(Frame::Flipped),
            _ => Err(Error::InvalidParameter(format!("unknown frame {s:?}"))),
        }
    }
}

impl fmt::Display for Frame {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Single-mode moments; quadratures are `x = (a+a^+)/sqrt 2`, `p = i(a^+-a)/sqrt 2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeObservables {
    pub number: f64,
    pub coherence: c64,
    pub var_x: f64,
    pub var_p: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Observables {
    pub cavity: Option<ModeObservables>,
    pub mechanical: Option<ModeObservables>,
    /// `<exp(i pi a^+a)>`.
    pub parity_c: Option<f64>,
}

impl Observables {
    pub fn photon_number(&self) -> Option<f64> {
        self.cavity.map(|m| m.number)
    }

    pub fn phonon_number(&self) -> Option<f64> {
        self.mechanical.map(|m| m.number)
    }
}

#[derive(Debug, Clone)]
pub struct SpectrumResult {
    /// Lowest eigenvalues in ascending order, in the reporting frame.
    pub eigenvalues: Vec<f64>,
    /// Eigenvectors matching `eigenvalues`; the first is the ground vector.
    pub eigenvectors: Vec<Vec<c64>>,
    /// Conserved parity (+1/-1) of each returned level when the matrix was block-diagonalized.
    pub level_parities: Vec<Option<i8>>,
    /// Lowest eigenvalue in the even and odd parity sectors.
    pub sector_minima: Option<[f64; 2]>,
    pub gap: f64,
    pub observables: Observables,
    pub converged: bool,
    pub layout: FockSpaceLayout,
    pub frame: Frame,
}

impl SpectrumResult {
    pub fn ground_energy(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn ground_vector(&self) -> &[c64] {
        &self.eigenvectors[0]
    }

    /// Distance between the lowest levels of the two parity sectors.
    pub fn parity_gap(&self) -> Option<f64> {
        self.sector_minima.map(|[e, o]| (e - o).abs())
    }
}

const HERMITIAN_TOL: f64 = 1e-10;
/// Couplings below this (relative) size are treated as zero when splitting into sectors.
const BLOCK_TOL: f64 = 1e-14;

fn parity_labels(layout: &FockSpaceLayout, modes: &[Mode]) -> Option<Vec<u8>> {
    let pos: Vec<usize> = modes.iter().map(|&m| layout.position(m)).collect::<Option<_>>()?;
    Some(
        (0..layout.total_dim())
            .map(|i| {
                let occ = layout.occupations(i);
                (pos.iter().map(|&p| occ[p]).sum::<usize>() % 2) as u8
            })
            .collect(),
    )
}

fn detect_sectors(h: &OperatorMatrix, scale: f64) -> Option<Vec<u8>> {
    let candidates: [&[Mode]; 3] = [&[Mode::Cavity], &[Mode::Cavity, Mode::Spin], &[Mode::Cavity, Mode::AtomHp]];
    let n = h.dim();
    let m = h.entries();
    'cand: for modes in candidates {
        let Some(labels) = parity_labels(h.layout(), modes) else { continue };
        if labels.iter().all(|&l| l == labels[0]) {
            continue;
        }
        for j in 0..n {
            for i in 0..n {
                if labels[i] != labels[j] && m[(i, j)].modulus() > BLOCK_TOL * scale {
                    continue 'cand;
                }
            }
        }
        return Some(labels);
    }
    None
}

/// All eigenpairs of the Hermitian part of `sign * H[idx, idx]`.
fn block_eigen(h: &OperatorMatrix, idx: &[usize], sign: f64, scale: f64) -> Result<(Vec<f64>, Mat<c64>)> {
    let m = h.entries();
    let n = idx.len();
    let sub = Mat::from_fn(n, n, |i, j| {
        let (a, b) = (m[(idx[i], idx[j])], m[(idx[j], idx[i])]);
        (a + b.conj()) * (0.5 * sign)
    });
    let real = (0..n).all(|j| (0..n).all(|i| sub[(i, j)].im.abs() <= BLOCK_TOL * scale));
    let fail = |e| Error::NumericFailure(format!("eigensolver: {e:?}"));
    if real {
        let r = Mat::from_fn(n, n, |i, j| sub[(i, j)].re);
        let eig = r.self_adjoint_eigen(Side::Lower).map_err(fail)?;
        let vals: Vec<f64> = (0..n).map(|k| eig.S().column_vector()[k]).collect();
        let u = eig.U();
        Ok((vals, Mat::from_fn(n, n, |i, j| c64::new(u[(i, j)], 0.0))))
    } else {
        let eig = sub.self_adjoint_eigen(Side::Lower).map_err(fail)?;
        let vals: Vec<f64> = (0..n).map(|k| eig.S().column_vector()[k].re).collect();
        Ok((vals, eig.U().to_owned()))
    }
}

/// Lowest `k_lowest` eigenpairs of `H` in the printed frame.
pub fn eigendecompose(h: &OperatorMatrix, k_lowest: usize) -> Result<SpectrumResult> {
    eigendecompose_in(h, k_lowest, Frame::Printed)
}

/// Lowest `k_lowest` eigenpairs of `frame.sign() * H`. Matrices that commute with a photon
/// (or photon-plus-atom) parity are split into the two sectors first.
pub fn eigendecompose_in(h: &OperatorMatrix, k_lowest: usize, frame: Frame) -> Result<SpectrumResult> {
    let n = h.dim();
    let scale = h.max_abs().max(1.0);
    for j in 0..n {
        for i in 0..n {
            let v = h.get(i, j);
            if !(v.re.is_finite() && v.im.is_finite()) {
                return Err(Error::NumericFailure("non-finite matrix entry".into()));
            }
        }
    }
    let defect = h.hermiticity_defect();
    if defect > HERMITIAN_TOL * scale {
        return Err(Error::HermiticityViolation { defect });
    }
    let sign = frame.sign();
    let sectors = detect_sectors(h, scale);
    let blocks: Vec<(Option<i8>, Vec<usize>)> = match &sectors {
        Some(labels) => [0u8, 1]
            .iter()
            .map(|&p| {
                let idx: Vec<usize> = (0..n).filter(|&i| labels[i] == p).collect();
                (Some(if p == 0 { 1i8 } else { -1 }), idx)
            })
            .filter(|(_, idx)| !idx.is_empty())
            .collect(),
        None => vec![(None, (0..n).collect())],
    };
    let mut levels: Vec<(f64, usize, usize)> = Vec::with_capacity(n);
    let mut decomps = Vec::with_capacity(blocks.len());
    let mut minima = [f64::INFINITY; 2];
    for (b, (par, idx)) in blocks.iter().enumerate() {
        let (vals, vecs) = block_eigen(h, idx, sign, scale)?;
        if let Some(p) = par {
            minima[if *p > 0 { 0 } else { 1 }] = vals[0];
        }
        levels.extend(vals.iter().enumerate().map(|(c, &v)| (v, b, c)));
        decomps.push(vecs);
    }
    levels.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));
    let k = k_lowest.max(2).min(n);
    let mut eigenvalues = Vec::with_capacity(k);
    let mut eigenvectors = Vec::with_capacity(k);
    let mut level_parities = Vec::with_capacity(k);
    for &(v, b, c) in levels.iter().take(k) {
        let idx = &blocks[b].1;
        let mut psi = vec![c64::new(0.0, 0.0); n];
        for (r, &i) in idx.iter().enumerate() {
            psi[i] = decomps[b][(r, c)];
        }
        eigenvalues.push(v);
        eigenvectors.push(psi);
        level_parities.push(blocks[b].0);
    }
    let gap = (eigenvalues[1] - eigenvalues[0]).max(0.0);
    let observables = observables(h.layout(), &eigenvectors[0]);
    let sector_minima = (sectors.is_some() && minima.iter().all(|m| m.is_finite())).then_some(minima);
    Ok(SpectrumResult {
        eigenvalues,
        eigenvectors,
        level_parities,
        sector_minima,
        gap,
        observables,
        converged: false,
        layout: h.layout().clone(),
        frame,
    })
}

fn mode_observables(layout: &FockSpaceLayout, psi: &[c64], mode: usize) -> ModeObservables {
    let d = layout.mode_dims()[mode];
    let s = layout.strides()[mode];
    let zero = c64::new(0.0, 0.0);
    let occ = |i: usize| (i / s) % d;
    let a_psi: Vec<c64> = (0..psi.len())
        .map(|i| {
            let k = occ(i);
            if k + 1 < d {
                psi[i + s] * ((k + 1) as f64).sqrt()
            } else {
                zero
            }
        })
        .collect();
    let ad_psi: Vec<c64> = (0..psi.len())
        .map(|i| {
            let k = occ(i);
            if k > 0 {
                psi[i - s] * (k as f64).sqrt()
            } else {
                zero
            }
        })
        .collect();
    let number: f64 = a_psi.iter().map(|v| v.norm_sqr()).sum();
    let coherence: c64 = psi.iter().zip(&a_psi).map(|(p, q)| p.conj() * q).sum();
    let r2 = core::f64::consts::FRAC_1_SQRT_2;
    let x2: f64 = a_psi.iter().zip(&ad_psi).map(|(a, b)| ((a + b) * r2).norm_sqr()).sum();
    let p2: f64 = a_psi.iter().zip(&ad_psi).map(|(a, b)| ((b - a) * r2).norm_sqr()).sum();
    let xm = 2f64.sqrt() * coherence.re;
    let pm = 2f64.sqrt() * coherence.im;
    ModeObservables { number, coherence, var_x: x2 - xm * xm, var_p: p2 - pm * pm }
}

/// Ground-state moments of every cavity and mechanical mode in `layout`.
pub fn observables(layout: &FockSpaceLayout, psi: &[c64]) -> Observables {
    let cav = layout.position(Mode::Cavity);
    let mech = layout.position(Mode::Mechanical);
    let parity_c = cav.map(|c| {
        let d = layout.mode_dims()[c];
        let s = layout.strides()[c];
        psi.iter()
            .enumerate()
            .map(|(i, v)| if (i / s) % d % 2 == 0 { v.norm_sqr() } else { -v.norm_sqr() })
            .sum()
    });
    Observables {
        cavity: cav.map(|c| mode_observables(layout, psi, c)),
        mechanical: mech.map(|m| mode_observables(layout, psi, m)),
        parity_c,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceOptions {
    pub eigen_tol: f64,
    pub photon_tol: f64,
    pub levels: usize,
    pub max_total_dim: usize,
}

impl Default for ConvergenceOptions {
    fn default() -> Self {
        Self { eigen_tol: 1e-7, photon_tol: 1e-5, levels: 3, max_total_dim: 4096 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ConvergenceStatus {
    Converged,
    Unconverged,
    /// The doubled truncation would exceed the dimension cap.
    ResourceLimit,
}

#[derive(Debug, Clone)]
pub struct ConvergenceReport {
    pub status: ConvergenceStatus,
    /// Layout the check started from.
    pub base_layout: FockSpaceLayout,
    /// Most refined spectrum computed: the doubled truncation when it fit under the cap.
    pub result: SpectrumResult,
    /// Largest shift among the lowest levels between base and doubled truncation.
    pub eigenvalue_shift: Option<f64>,
    pub photon_shift: Option<f64>,
    pub warnings: Vec<BuildWarning>,
}

impl ConvergenceReport {
    pub fn converged(&self) -> bool {
        self.status == ConvergenceStatus::Converged
    }
}

/// Doubled truncation; spin multiplets and complete HP spaces do not grow.
pub fn doubled_layout(layout: &FockSpaceLayout, params: &ModelParams) -> Result<FockSpaceLayout> {
    let full_spin = params.n_atoms as usize + 1;
    let pairs: Vec<(Mode, usize)> = layout
        .modes()
        .iter()
        .zip(layout.mode_dims())
        .map(|(&m, &d)| {
            let nd = match m {
                Mode::Spin => d,
                Mode::AtomHp => (2 * d).min(full_spin.max(d)),
                _ => 2 * d,
            };
            (m, nd)
        })
        .collect();
    FockSpaceLayout::new(&pairs)
}

fn spectrum_of(kind: HamiltonianKind, params: &ModelParams, layout: &FockSpaceLayout, frame: Frame, k: usize) -> Result<(SpectrumResult, Vec<BuildWarning>)> {
    let h = build(kind, params, layout)?;
    Ok((eigendecompose_in(&h.matrix, k, frame)?, h.warnings))
}

/// Compare the spectrum on `base_layout` with the one on the doubled truncation.
pub fn convergence_check(
    kind: HamiltonianKind,
    params: &ModelParams,
    base_layout: &FockSpaceLayout,
    frame: Frame,
    opts: &ConvergenceOptions,
) -> Result<ConvergenceReport> {
    let k = opts.levels.max(2);
    let (mut base, warnings) = spectrum_of(kind, params, base_layout, frame, k)?;
    let doubled = doubled_layout(base_layout, params)?;
    if doubled == *base_layout {
        base.converged = true;
        return Ok(ConvergenceReport {
            status: ConvergenceStatus::Converged,
            base_layout: base_layout.clone(),
            result: base,
            eigenvalue_shift: Some(0.0),
            photon_shift: Some(0.0),
            warnings,
        });
    }
    if doubled.total_dim() > opts.max_total_dim {
        return Ok(ConvergenceReport {
            status: ConvergenceStatus::ResourceLimit,
            base_layout: base_layout.clone(),
            result: base,
            eigenvalue_shift: None,
            photon_shift: None,
            warnings,
        });
    }
    let (mut fine, fine_warnings) = spectrum_of(kind, params, &doubled, frame, k)?;
    let m = opts.levels.min(base.eigenvalues.len()).min(fine.eigenvalues.len());
    let eshift = (0..m).map(|i| (fine.eigenvalues[i] - base.eigenvalues[i]).abs()).fold(0.0, f64::max);
    let nshift = match (base.observables.photon_number(), fine.observables.photon_number()) {
        (Some(a), Some(b)) => Some((a - b).abs()),
        _ => None,
    };
    let ok = eshift < opts.eigen_tol && nshift.map_or(true, |s| s < opts.photon_tol);
    fine.converged = ok;
    Ok(ConvergenceReport {
        status: if ok { ConvergenceStatus::Converged } else { ConvergenceStatus::Unconverged },
        base_layout: base_layout.clone(),
        result: fine,
        eigenvalue_shift: Some(eshift),
        photon_shift: nshift,
        warnings: fine_warnings,
    })
}

/// Double the truncation from `start` until [`convergence_check`] passes or the cap is hit.
pub fn auto_converge(
    kind: HamiltonianKind,
    params: &ModelParams,
    start: &FockSpaceLayout,
    frame: Frame,
    opts: &ConvergenceOptions,
) -> Result<ConvergenceReport> {
    let mut layout = start.clone();
    loop {
        let report = convergence_check(kind, params, &layout, frame, opts)?;
        if report.status != ConvergenceStatus::Unconverged {
            return Ok(report);
        }
        let next = doubled_layout(&layout, params)?;
        if doubled_layout(&next, params)?.total_dim() > opts.max_total_dim {
            return Ok(report);
        }
        layout = next;
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Crossing {
    pub kappa: f64,
    pub lower: usize,
    pub upper: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CrossingReport {
    pub crossings: Vec<Crossing>,
    /// Ground-state photon number at each sampled `kappa`.
    pub staircase: Vec<(f64, usize)>,
}

pub fn linspace(lo: f64, hi: f64, steps: usize) -> Vec<f64> {
    if steps == 1 {
        return vec![lo];
    }
    (0..steps)
        .map(|i| if i + 1 == steps { hi } else { lo + (hi - lo) * i as f64 / (steps - 1) as f64 })
        .collect()
}

fn degeneracy_tol(e0: f64) -> f64 {
    1e-9 * e0.abs().max(1.0)
}

/// Ground occupation of the flipped anharmonic staircase; ties go to the lower occupation.
fn staircase_occupation(kappa: f64, dim: usize) -> Result<usize> {
    if kappa == 0.0 {
        return Ok(0);
    }
    let h = build_effective_hom_tilde(kappa, dim)?;
    let spec = eigendecompose_in(&h, dim, Frame::Flipped)?;
    let e0 = spec.eigenvalues[0];
    let tol = degeneracy_tol(e0);
    let occ = spec
        .eigenvalues
        .iter()
        .zip(&spec.eigenvectors)
        .take_while(|(e, _)| **e - e0 <= tol)
        .map(|(_, v)| v.iter().position(|c| c.modulus() > 0.5).unwrap_or(0))
        .min()
        .unwrap_or(0);
    Ok(occ)
}

/// Flipped-frame `E(m+1) - E(m)` read off the diagonal.
fn level_difference(kappa: f64, m: usize, dim: usize) -> Result<f64> {
    let h = build_effective_hom_tilde(kappa, dim)?;
    Ok(-(h.get(m + 1, m + 1).re - h.get(m, m).re))
}

/// Sample the ground-state photon staircase of the anharmonic model and locate the
/// crossings between successive Fock levels by bisection.
pub fn level_crossing_scan(kappa_lo: f64, kappa_hi: f64, steps: usize, dim: usize) -> Result<CrossingReport> {
    if !(kappa_lo >= 0.0 && kappa_hi > kappa_lo && kappa_hi.is_finite()) {
        return Err(Error::InvalidGrid(format!("kappa range [{kappa_lo}, {kappa_hi}]")));
    }
    if steps < 2 {
        return Err(Error::InvalidGrid(format!("{steps} steps")));
    }
    let ks = linspace(kappa_lo, kappa_hi, steps);
    let mut report = CrossingReport::default();
    let mut prev: Option<(f64, usize)> = None;
    for &k in &ks {
        let occ = staircase_occupation(k, dim)?;
        if let Some((k0, n0)) = prev {
            for m in n0..occ.max(n0) {
                if m + 1 >= dim {
                    break;
                }
                let (mut lo, mut hi) = (k0.max(f64::MIN_POSITIVE), k);
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if mid <= lo || mid >= hi {
                        break;
                    }
                    if level_difference(mid, m, dim)? < 0.0 {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                report.crossings.push(Crossing { kappa: 0.5 * (lo + hi), lower: m, upper: m + 1 });
            }
        }
        report.staircase.push((k, occ));
        prev = Some((k, occ));
    }
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ControlParam {
    Gamma,
    Kappa,
    Mu,
    Xi,
    Eta,
}

impl ControlParam {
    pub const ALL: [Self; 5] = [Self::Gamma, Self::Kappa, Self::Mu, Self::Xi, Self::Eta];

    pub fn name(self) -> &'static str {
        match self {
            Self::Gamma => "gamma",
            Self::Kappa => "kappa",
            Self::Mu => "mu",
            Self::Xi => "xi",
            Self::Eta => "eta",
        }
    }

    pub fn apply(self, params: &ModelParams, value: f64) -> ModelParams {
        match self {
            Self::Gamma => params.with_gamma(value),
            Self::Kappa => params.with_kappa(value),
            Self::Mu => params.with_mu(value),
            Self::Xi => params.with_xi(value),
            Self::Eta => params.with_eta(value),
        }
    }

    pub fn value(self, params: &ModelParams) -> f64 {
        match self {
            Self::Gamma => params.gamma(),
            Self::Kappa => params.kappa(),
            Self::Mu => params.mu(),
            Self::Xi => params.xi,
            Self::Eta => params.eta(),
        }
    }
}

impl FromStr for ControlParam {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .iter()
            .copied()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown control parameter {s:?}")))
    }
}

impl fmt::Display for ControlParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DimsPolicy {
    /// Check convergence once against the doubled truncation.
    Fixed(Vec<usize>),
    /// Start from the model's default truncation and double until converged or capped.
    Auto,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PointStatus {
    Converged,
    Unconverged,
    Failed,
}

impl PointStatus {
    pub fn name(self) -> &'static str {
        match self {
            Self::Converged => "converged",
            Self::Unconverged => "unconverged",
            Self::Failed => "failed",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GapPoint {
    pub control: f64,
    pub gap: f64,
    pub parity_gap: Option<f64>,
    pub ground_energy: f64,
    pub photon_number: Option<f64>,
    pub parity: Option<f64>,
    pub status: PointStatus,
    pub layout: Option<FockSpaceLayout>,
    pub message: Option<String>,
}

/// One convergence-checked spectrum summary. Errors are folded into a `Failed` point.
pub fn gap_point(
    kind: HamiltonianKind,
    params: &ModelParams,
    dims: &DimsPolicy,
    frame: Frame,
    opts: &ConvergenceOptions,
    control: f64,
) -> GapPoint {
    let report = (|| {
        let layout = match dims {
            DimsPolicy::Fixed(d) => kind.layout_with_dims(d)?,
            DimsPolicy::Auto => kind.default_layout(params)?,
        };
        match dims {
            DimsPolicy::Fixed(_) => convergence_check(kind, params, &layout, frame, opts),
            DimsPolicy::Auto => auto_converge(kind, params, &layout, frame, opts),
        }
    })();
    match report {
        Ok(r) => {
            let s = &r.result;
            let mut message: Vec<String> = r.warnings.iter().map(|w| w.to_string()).collect();
            if r.status == ConvergenceStatus::ResourceLimit {
                message.push(format!("dimension cap {} reached", opts.max_total_dim));
            }
            GapPoint {
                control,
                gap: s.gap,
                parity_gap: s.parity_gap(),
                ground_energy: s.ground_energy(),
                photon_number: s.observables.photon_number(),
                parity: s.observables.parity_c,
                status: if r.converged() { PointStatus::Converged } else { PointStatus::Unconverged },
                layout: Some(s.layout.clone()),
                message: (!message.is_empty()).then(|| message.join("; ")),
            }
        }
        Err(e) => GapPoint {
            control,
            gap: f64::NAN,
            parity_gap: None,
            ground_energy: f64::NAN,
            photon_number: None,
            parity: None,
            status: PointStatus::Failed,
            layout: None,
            message: Some(e.to_string()),
        },
    }
}

/// Gap, photon number and parity along a control parameter, each point convergence-checked.
#[allow(clippy::too_many_arguments)]
pub fn gap_sweep(
    kind: HamiltonianKind,
    params: &ModelParams,
    control: ControlParam,
    lo: f64,
    hi: f64,
    steps: usize,
    dims: &DimsPolicy,
    frame: Frame,
    opts: &ConvergenceOptions,
) -> Result<Vec<GapPoint>> {
    if steps < 2 || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::InvalidGrid(format!("{steps} steps over [{lo}, {hi}]")));
    }
    Ok(linspace(lo, hi, steps)
        .into_iter()
        .map(|v| gap_point(kind, &control.apply(params, v), dims, frame, opts, v))
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SqueezingEstimate {
    pub r_eff: f64,
    pub s_eff: Option<f64>,
}

/// Quadrature-variance squeezing `r = (1/4) ln(var_x / var_p)` of the ground state.
pub fn squeezing_extract(result: &SpectrumResult) -> Result<SqueezingEstimate> {
    if !result.converged {
        return Err(Error::TruncationUnresolved("squeezing needs a convergence-checked spectrum".into()));
    }
    let cav = result
        .observables
        .cavity
        .ok_or_else(|| Error::LayoutMismatch("no cavity mode".into()))?;
    let r = |m: ModeObservables| 0.25 * (m.var_x / m.var_p).ln();
    Ok(SqueezingEstimate { r_eff: r(cav), s_eff: result.observables.mechanical.map(r) })
}

/// Ground-state coherence `<a>` with a pinning field `delta (a+a^+)` added to `H`.
pub fn pinned_coherence(h: &OperatorMatrix, delta: f64, frame: Frame) -> Result<c64> {
    let layout = h.layout();
    let c = layout
        .position(Mode::Cavity)
        .ok_or_else(|| Error::LayoutMismatch("no cavity mode".into()))?;
    let eyes: Vec<OperatorMatrix> = layout.mode_dims().iter().map(|&d| identity(d)).collect::<Result<_>>()?;
    let x = position_quadrature(layout.mode_dims()[c])?;
    let factors: Vec<&OperatorMatrix> = (0..eyes.len()).map(|k| if k == c { &x } else { &eyes[k] }).collect();
    let mut pinned = h.clone();
    accumulate_kron(&mut pinned, c64::new(frame.sign() * delta, 0.0), &factors)?;
    let spec = eigendecompose_in(&pinned.with_hint(true), 2, frame)?;
    Ok(spec.observables.cavity.map(|m| m.coherence).unwrap_or(c64::new(0.0, 0.0)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::number;
    use crate::model::build_quadratic_limit;

    #[test]
    fn number_operator_spectrum() {
        let h = number(10).unwrap();
        let s = eigendecompose(&h, 10).unwrap();
        for (i, e) in s.eigenvalues.iter().enumerate() {
            assert!((e - i as f64).abs() < 1e-12);
        }
        assert!((s.gap - 1.0).abs() < 1e-12);
    }

    #[test]
    fn quadratic_limit_gap() {
        let h = build_quadratic_limit(0.8, 160).unwrap();
        let s = eigendecompose(&h, 3).unwrap();
        assert!((s.gap - 0.6).abs() < 1e-6);
        assert_eq!(s.sector_minima.map(|m| m[0] < m[1]), Some(true));
    }

    #[test]
    fn rejects_non_hermitian() {
        let a = crate::algebra::annihilation(4).unwrap();
        assert!(matches!(eigendecompose(&a, 2), Err(Error::HermiticityViolation { .. })));
    }

    #[test]
    fn flipped_frame_negates() {
        let h = build_effective_hom_tilde(2.0, 10).unwrap();
        let s = eigendecompose_in(&h, 3, Frame::Flipped).unwrap();
        // -(n - n^2/4) is minimal at n = 2 (value -1).
        assert!((s.eigenvalues[0] + 1.0).abs() < 1e-14);
        assert!((s.observables.photon_number().unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn staircase_small() {
        let r = level_crossing_scan(0.5, 2.1, 9, 16).unwrap();
        assert_eq!(r.staircase.last().unwrap().1, 2);
        assert!((r.crossings[0].kappa - 1.0).abs() < 1e-9);
        assert!((r.crossings[1].kappa - 3f64.sqrt()).abs() < 1e-9);
        assert!(level_crossing_scan(1.0, 2.0, 1, 8).is_err());
    }

    #[test]
    fn decoupled_converges_immediately() {
        let p = ModelParams::default();
        let l = HamiltonianKind::FullH.layout_with_dims(&[4, 4]).unwrap();
        let r = convergence_check(HamiltonianKind::FullH, &p, &l, Frame::Printed, &Default::default()).unwrap();
        assert!(r.converged());
        let l = HamiltonianKind::EffectiveHomTilde.layout_with_dims(&[8]).unwrap();
        let p = ModelParams::default().with_kappa(2.0);
        let r = convergence_check(HamiltonianKind::EffectiveHomTilde, &p, &l, Frame::Flipped, &Default::default()).unwrap();
        assert!(r.converged());
    }

    #[test]
    fn resource_cap_is_reported() {
        let p = ModelParams::default().with_gamma(0.3);
        let l = HamiltonianKind::FullH.layout_with_dims(&[8, 8]).unwrap();
        let opts = ConvergenceOptions { max_total_dim: 100, ..Default::default() };
        let r = convergence_check(HamiltonianKind::FullH, &p, &l, Frame::Printed, &opts).unwrap();
        assert_eq!(r.status, ConvergenceStatus::ResourceLimit);
        assert!(!r.result.converged);
    }

    #[test]
    fn squeezing_requires_convergence() {
        let h = build_quadratic_limit(0.6, 40).unwrap();
        let s = eigendecompose(&h, 2).unwrap();
        assert!(matches!(squeezing_extract(&s), Err(Error::TruncationUnresolved(_))));
    }

    #[test]
    fn control_round_trip() {
        let p = ModelParams::default();
        for c in ControlParam::ALL {
            let q = c.apply(&p, 0.7);
            assert!((c.value(&q) - 0.7).abs() < 1e-12, "{c}");
            assert_eq!(c.name().parse::<ControlParam>().unwrap(), c);
        }
    }

    #[test]
    fn linspace_endpoints() {
        let v = linspace(0.5, 4.0, 500);
        assert_eq!(v.len(), 500);
        assert_eq!(v[0], 0.5);
        assert_eq!(v[499], 4.0);
    }
}

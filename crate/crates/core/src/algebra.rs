//! Truncated bosonic and collective-spin operators over a labeled product basis.
//!
//! Basis ordering follows the Kronecker convention: the last mode in a
//! [`FockSpaceLayout`] varies fastest.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::ops::{Add, Mul, Neg, Sub};

use faer::linalg::solvers::Solve;
use faer::{Mat, MatRef, Side};
#[cfg_attr(feature = "std", allow(unused_imports))]
use num_traits::Float;

use crate::c64;
use crate::error::{Error, Result};

/// Complex modulus that does not need std.
pub(crate) trait Modulus {
    fn modulus(&self) -> f64;
}

impl Modulus for c64 {
    fn modulus(&self) -> f64 {
        self.re.hypot(self.im)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Mode {
    /// Unlabeled single oscillator, used by the free-standing constructors.
    Boson,
    Cavity,
    Mechanical,
    /// Collective spin of `N_a` two-level atoms in the symmetric subspace.
    Spin,
    /// Holstein-Primakoff boson standing in for the collective spin.
    AtomHp,
}

impl Mode {
    pub fn label(self) -> &'static str {
        match self {
            Mode::Boson => "mode",
            Mode::Cavity => "cavity",
            Mode::Mechanical => "mechanical",
            Mode::Spin => "atom-spin",
            Mode::AtomHp => "atom-HP",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FockSpaceLayout {
    modes: Vec<Mode>,
    dims: Vec<usize>,
}

impl FockSpaceLayout {
    pub fn new(modes: &[(Mode, usize)]) -> Result<Self> {
        if modes.is_empty() {
            return Err(Error::InvalidDimension("layout needs at least one mode".into()));
        }
        for (i, &(mode, dim)) in modes.iter().enumerate() {
            if dim < 2 {
                return Err(Error::InvalidDimension(format!("{mode} has dimension {dim} < 2")));
            }
            if modes[..i].iter().any(|&(m, _)| m == mode) {
                return Err(Error::LayoutMismatch(format!("duplicate mode label {mode}")));
            }
        }
        modes
            .iter()
            .try_fold(1usize, |acc, &(_, d)| acc.checked_mul(d))
            .ok_or_else(|| Error::InvalidDimension("total dimension overflows".into()))?;
        Ok(Self {
            modes: modes.iter().map(|m| m.0).collect(),
            dims: modes.iter().map(|m| m.1).collect(),
        })
    }

    pub fn single(mode: Mode, dim: usize) -> Result<Self> {
        Self::new(&[(mode, dim)])
    }

    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    pub fn mode_dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn labels(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.modes.iter().map(|m| m.label())
    }

    pub fn n_modes(&self) -> usize {
        self.modes.len()
    }

    pub fn total_dim(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn position(&self, mode: Mode) -> Option<usize> {
        self.modes.iter().position(|&m| m == mode)
    }

    pub fn dim_of(&self, mode: Mode) -> Option<usize> {
        self.position(mode).map(|i| self.dims[i])
    }

    /// Index step in the flattened basis for one quantum of each mode.
    pub fn strides(&self) -> Vec<usize> {
        let mut s = vec![1usize; self.dims.len()];
        for i in (0..self.dims.len().saturating_sub(1)).rev() {
            s[i] = s[i + 1] * self.dims[i + 1];
        }
        s
    }

    pub fn with_dim(&self, mode_index: usize, dim: usize) -> Result<Self> {
        if mode_index >= self.dims.len() {
            return Err(Error::LayoutMismatch(format!("no mode at index {mode_index}")));
        }
        let pairs: Vec<(Mode, usize)> = self
            .modes
            .iter()
            .zip(&self.dims)
            .enumerate()
            .map(|(i, (&m, &d))| (m, if i == mode_index { dim } else { d }))
            .collect();
        Self::new(&pairs)
    }

    /// Occupation numbers of a flattened basis index.
    pub fn occupations(&self, mut index: usize) -> Vec<usize> {
        let mut occ = vec![0; self.dims.len()];
        for i in (0..self.dims.len()).rev() {
            occ[i] = index % self.dims[i];
            index /= self.dims[i];
        }
        occ
    }

    pub fn index_of(&self, occupations: &[usize]) -> Option<usize> {
        if occupations.len() != self.dims.len() {
            return None;
        }
        let mut idx = 0;
        for (&n, &d) in occupations.iter().zip(&self.dims) {
            if n >= d {
                return None;
            }
            idx = idx * d + n;
        }
        Some(idx)
    }
}

impl fmt::Display for FockSpaceLayout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (m, d)) in self.modes.iter().zip(&self.dims).enumerate() {
            if i > 0 {
                f.write_str(" x ")?;
            }
            write!(f, "{m}[{d}]")?;
        }
        Ok(())
    }
}

#[derive(Clone)]
pub struct OperatorMatrix {
    layout: FockSpaceLayout,
    entries: Mat<c64>,
    hermitian_hint: bool,
}

impl fmt::Debug for OperatorMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("OperatorMatrix")
            .field("layout", &self.layout)
            .field("hermitian_hint", &self.hermitian_hint)
            .finish_non_exhaustive()
    }
}

impl OperatorMatrix {
    pub fn new(layout: FockSpaceLayout, entries: Mat<c64>, hermitian_hint: bool) -> Result<Self> {
        let n = layout.total_dim();
        if entries.nrows() != n || entries.ncols() != n {
            return Err(Error::LayoutMismatch(format!(
                "{}x{} matrix for layout {layout} of dimension {n}",
                entries.nrows(),
                entries.ncols()
            )));
        }
        Ok(Self { layout, entries, hermitian_hint })
    }

    pub fn zeros(layout: &FockSpaceLayout) -> Self {
        let n = layout.total_dim();
        Self { layout: layout.clone(), entries: Mat::zeros(n, n), hermitian_hint: true }
    }

    pub fn identity(layout: &FockSpaceLayout) -> Self {
        let n = layout.total_dim();
        Self { layout: layout.clone(), entries: Mat::identity(n, n), hermitian_hint: true }
    }

    pub fn from_diagonal(layout: &FockSpaceLayout, diag: impl Fn(usize) -> f64) -> Self {
        let mut op = Self::zeros(layout);
        for i in 0..op.dim() {
            op.entries[(i, i)] = c64::new(diag(i), 0.0);
        }
        op
    }

    pub fn layout(&self) -> &FockSpaceLayout {
        &self.layout
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> MatRef<'_, c64> {
        self.entries.as_ref()
    }

    pub fn into_entries(self) -> Mat<c64> {
        self.entries
    }

    pub fn get(&self, row: usize, col: usize) -> c64 {
        self.entries[(row, col)]
    }

    pub fn set(&mut self, row: usize, col: usize, value: c64) {
        self.entries[(row, col)] = value;
    }

    pub fn hermitian_hint(&self) -> bool {
        self.hermitian_hint
    }

    pub fn with_hint(mut self, hermitian: bool) -> Self {
        self.hermitian_hint = hermitian;
        self
    }

    /// Same entries relabeled onto another layout of equal total dimension.
    pub fn relabel(self, layout: &FockSpaceLayout) -> Result<Self> {
        Self::new(layout.clone(), self.entries, self.hermitian_hint)
    }

    /// max |M - M^+|.
    pub fn hermiticity_defect(&self) -> f64 {
        let n = self.dim();
        let mut worst = 0.0f64;
        for j in 0..n {
            for i in j..n {
                let d = self.entries[(i, j)] - self.entries[(j, i)].conj();
                worst = worst.max(d.modulus());
            }
        }
        worst
    }

    /// max |M + M^+|.
    pub fn anti_hermiticity_defect(&self) -> f64 {
        let n = self.dim();
        let mut worst = 0.0f64;
        for j in 0..n {
            for i in j..n {
                let d = self.entries[(i, j)] + self.entries[(j, i)].conj();
                worst = worst.max(d.modulus());
            }
        }
        worst
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_defect() <= tol
    }

    pub fn max_abs(&self) -> f64 {
        let n = self.dim();
        let mut m = 0.0f64;
        for j in 0..n {
            for i in 0..n {
                m = m.max(self.entries[(i, j)].modulus());
            }
        }
        m
    }

    /// Induced 1-norm (largest column sum).
    pub fn norm_one(&self) -> f64 {
        one_norm(self.entries.as_ref())
    }

    pub fn is_real(&self) -> bool {
        let n = self.dim();
        (0..n).all(|j| (0..n).all(|i| self.entries[(i, j)].im == 0.0))
    }

    /// Real part of the entries if every imaginary part is exactly zero.
    pub fn to_real(&self) -> Option<Mat<f64>> {
        self.is_real().then(|| {
            let n = self.dim();
            Mat::from_fn(n, n, |i, j| self.entries[(i, j)].re)
        })
    }

    pub fn adjoint(&self) -> Self {
        Self {
            layout: self.layout.clone(),
            entries: self.entries.adjoint().to_owned(),
            hermitian_hint: self.hermitian_hint,
        }
    }

    pub fn scale(&self, c: c64) -> Self {
        Self {
            layout: self.layout.clone(),
            entries: Mat::from_fn(self.dim(), self.dim(), |i, j| self.entries[(i, j)] * c),
            hermitian_hint: self.hermitian_hint && c.im == 0.0,
        }
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        Ok(Self {
            layout: self.layout.clone(),
            entries: &self.entries + &other.entries,
            hermitian_hint: self.hermitian_hint && other.hermitian_hint,
        })
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        Ok(Self {
            layout: self.layout.clone(),
            entries: &self.entries - &other.entries,
            hermitian_hint: self.hermitian_hint && other.hermitian_hint,
        })
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        Ok(Self {
            layout: self.layout.clone(),
            entries: &self.entries * &other.entries,
            hermitian_hint: false,
        })
    }

    /// U^+ M U.
    pub fn conjugate_by(&self, u: &Self) -> Result<Self> {
        self.check_same(u)?;
        let entries = u.entries.adjoint() * &self.entries * &u.entries;
        Ok(Self { layout: self.layout.clone(), entries, hermitian_hint: self.hermitian_hint })
    }

    /// Leading `dim` x `dim` block of a single-mode operator.
    pub fn truncate(&self, dim: usize) -> Result<Self> {
        if self.layout.n_modes() != 1 || dim > self.dim() {
            return Err(Error::LayoutMismatch(format!("cannot truncate {} to {dim}", self.layout)));
        }
        let layout = FockSpaceLayout::single(self.layout.modes()[0], dim)?;
        let entries = self.entries.as_ref().submatrix(0, 0, dim, dim).to_owned();
        Ok(Self { layout, entries, hermitian_hint: self.hermitian_hint })
    }

    /// Apply to a state vector.
    pub fn apply(&self, psi: &[c64]) -> Result<Vec<c64>> {
        if psi.len() != self.dim() {
            return Err(Error::LayoutMismatch(format!(
                "vector of length {} for operator of dimension {}",
                psi.len(),
                self.dim()
            )));
        }
        let n = self.dim();
        let mut out = vec![c64::new(0.0, 0.0); n];
        for (j, &p) in psi.iter().enumerate() {
            if p == c64::new(0.0, 0.0) {
                continue;
            }
            for (i, o) in out.iter_mut().enumerate() {
                *o += self.entries[(i, j)] * p;
            }
        }
        Ok(out)
    }

    /// <psi|M|psi>.
    pub fn expectation(&self, psi: &[c64]) -> Result<c64> {
        let m = self.apply(psi)?;
        Ok(psi.iter().zip(&m).map(|(a, b)| a.conj() * b).sum())
    }

    fn check_same(&self, other: &Self) -> Result<()> {
        if self.layout != other.layout {
            return Err(Error::LayoutMismatch(format!("{} vs {}", self.layout, other.layout)));
        }
        Ok(())
    }
}

impl Add for &OperatorMatrix {
    type Output = OperatorMatrix;
    /// Panics on layout mismatch; use [`OperatorMatrix::try_add`] to recover.
    fn add(self, rhs: Self) -> OperatorMatrix {
        self.try_add(rhs).expect("operator layouts differ")
    }
}

impl Sub for &OperatorMatrix {
    type Output = OperatorMatrix;
    fn sub(self, rhs: Self) -> OperatorMatrix {
        self.try_sub(rhs).expect("operator layouts differ")
    }
}

impl Mul for &OperatorMatrix {
    type Output = OperatorMatrix;
    fn mul(self, rhs: Self) -> OperatorMatrix {
        self.matmul(rhs).expect("operator layouts differ")
    }
}

impl Mul<f64> for &OperatorMatrix {
    type Output = OperatorMatrix;
    fn mul(self, rhs: f64) -> OperatorMatrix {
        self.scale(c64::new(rhs, 0.0))
    }
}

impl Mul<c64> for &OperatorMatrix {
    type Output = OperatorMatrix;
    fn mul(self, rhs: c64) -> OperatorMatrix {
        self.scale(rhs)
    }
}

impl Neg for &OperatorMatrix {
    type Output = OperatorMatrix;
    fn neg(self) -> OperatorMatrix {
        self.scale(c64::new(-1.0, 0.0))
    }
}

pub fn commutator(a: &OperatorMatrix, b: &OperatorMatrix) -> Result<OperatorMatrix> {
    let ab = a.matmul(b)?;
    let ba = b.matmul(a)?;
    Ok(&ab - &ba)
}

fn check_dim(dim: usize) -> Result<()> {
    if dim < 2 {
        return Err(Error::InvalidDimension(format!("mode dimension {dim} < 2")));
    }
    Ok(())
}

fn single_mode(dim: usize, hermitian: bool, f: impl Fn(usize, usize) -> f64) -> Result<OperatorMatrix> {
    check_dim(dim)?;
    let layout = FockSpaceLayout::single(Mode::Boson, dim)?;
    let entries = Mat::from_fn(dim, dim, |i, j| c64::new(f(i, j), 0.0));
    OperatorMatrix::new(layout, entries, hermitian)
}

/// `a` with `<n-1|a|n> = sqrt(n)`.
pub fn annihilation(dim: usize) -> Result<OperatorMatrix> {
    single_mode(dim, false, |i, j| if j == i + 1 { (j as f64).sqrt() } else { 0.0 })
}

pub fn creation(dim: usize) -> Result<OperatorMatrix> {
    single_mode(dim, false, |i, j| if i == j + 1 { (i as f64).sqrt() } else { 0.0 })
}

pub fn number(dim: usize) -> Result<OperatorMatrix> {
    single_mode(dim, true, |i, j| if i == j { i as f64 } else { 0.0 })
}

pub fn identity(dim: usize) -> Result<OperatorMatrix> {
    single_mode(dim, true, |i, j| if i == j { 1.0 } else { 0.0 })
}

/// `exp(i pi a^+a)`, exact.
pub fn parity(dim: usize) -> Result<OperatorMatrix> {
    single_mode(dim, true, |i, j| match (i == j, i % 2) {
        (true, 0) => 1.0,
        (true, _) => -1.0,
        _ => 0.0,
    })
}

/// `a + a^+`.
pub fn position_quadrature(dim: usize) -> Result<OperatorMatrix> {
    single_mode(dim, true, |i, j| {
        if j == i + 1 {
            (j as f64).sqrt()
        } else if i == j + 1 {
            (i as f64).sqrt()
        } else {
            0.0
        }
    })
}

fn spin_dim(n_atoms: u32) -> Result<usize> {
    if n_atoms == 0 {
        return Err(Error::InvalidParameter("N_a must be at least 1".into()));
    }
    Ok(n_atoms as usize + 1)
}

/// `J_z = (1/2) sum sigma_z` on the symmetric spin-`N_a/2` space, basis index `j = m + N_a/2`.
pub fn spin_jz(n_atoms: u32) -> Result<OperatorMatrix> {
    let d = spin_dim(n_atoms)?;
    let half = n_atoms as f64 / 2.0;
    let mut op = single_mode(d, true, |i, j| if i == j { i as f64 - half } else { 0.0 })?;
    op.layout = FockSpaceLayout::single(Mode::Spin, d)?;
    Ok(op)
}

/// `J_+ = sum sigma_+`, raising `j` by one.
pub fn spin_raise(n_atoms: u32) -> Result<OperatorMatrix> {
    let d = spin_dim(n_atoms)?;
    let n = n_atoms as f64;
    let mut op = single_mode(d, false, |i, j| {
        if i == j + 1 {
            ((j as f64 + 1.0) * (n - j as f64)).sqrt()
        } else {
            0.0
        }
    })?;
    op.layout = FockSpaceLayout::single(Mode::Spin, d)?;
    Ok(op)
}

pub fn spin_lower(n_atoms: u32) -> Result<OperatorMatrix> {
    Ok(spin_raise(n_atoms)?.adjoint())
}

/// Holstein-Primakoff `J_+ = c^+ sqrt(N_a - c^+c)` truncated to `dim` levels; the
/// square root is clamped at zero beyond `N_a`.
pub fn hp_raise(n_atoms: u32, dim: usize) -> Result<OperatorMatrix> {
    spin_dim(n_atoms)?;
    let n = n_atoms as f64;
    let mut op = single_mode(dim, false, |i, j| {
        if i == j + 1 {
            (j as f64 + 1.0).sqrt() * (n - j as f64).max(0.0).sqrt()
        } else {
            0.0
        }
    })?;
    op.layout = FockSpaceLayout::single(Mode::AtomHp, dim)?;
    Ok(op)
}

/// Holstein-Primakoff `J_z = c^+c - N_a/2`.
pub fn hp_jz(n_atoms: u32, dim: usize) -> Result<OperatorMatrix> {
    spin_dim(n_atoms)?;
    let half = n_atoms as f64 / 2.0;
    let mut op = single_mode(dim, true, |i, j| if i == j { i as f64 - half } else { 0.0 })?;
    op.layout = FockSpaceLayout::single(Mode::AtomHp, dim)?;
    Ok(op)
}

fn nonzeros(m: MatRef<'_, c64>) -> Vec<(usize, usize, c64)> {
    let mut out = Vec::new();
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            let v = m[(i, j)];
            if v != c64::new(0.0, 0.0) {
                out.push((i, j, v));
            }
        }
    }
    out
}

/// Adds `coeff * (f_0 (x) f_1 (x) ...)` to `target`, one factor per mode of its layout.
/// Only nonzero entries of the factors are visited.
pub fn accumulate_kron(target: &mut OperatorMatrix, coeff: c64, factors: &[&OperatorMatrix]) -> Result<()> {
    let dims = target.layout.mode_dims().to_vec();
    if factors.len() != dims.len() {
        return Err(Error::LayoutMismatch(format!(
            "{} factors for layout {}",
            factors.len(),
            target.layout
        )));
    }
    for (k, (f, &d)) in factors.iter().zip(&dims).enumerate() {
        if f.dim() != d {
            return Err(Error::LayoutMismatch(format!(
                "factor {k} has dimension {} but mode {} has {d}",
                f.dim(),
                target.layout.modes()[k]
            )));
        }
    }
    let mut acc = vec![(0usize, 0usize, coeff)];
    for (f, &d) in factors.iter().zip(&dims) {
        let nz = nonzeros(f.entries());
        let mut next = Vec::with_capacity(acc.len() * nz.len());
        for &(r, c, v) in &acc {
            for &(i, j, w) in &nz {
                next.push((r * d + i, c * d + j, v * w));
            }
        }
        acc = next;
    }
    for (r, c, v) in acc {
        target.entries[(r, c)] += v;
    }
    if coeff.im != 0.0 || factors.iter().any(|f| !f.hermitian_hint) {
        target.hermitian_hint = false;
    }
    Ok(())
}

/// Kronecker product ordered `a (x) b`; the layouts are concatenated.
pub fn kron(a: &OperatorMatrix, b: &OperatorMatrix) -> Result<OperatorMatrix> {
    let mut pairs: Vec<(Mode, usize)> = a.layout.modes.iter().copied().zip(a.layout.dims.iter().copied()).collect();
    pairs.extend(b.layout.modes.iter().copied().zip(b.layout.dims.iter().copied()));
    let layout = FockSpaceLayout::new(&pairs)?;
    let (na, nb) = (a.dim(), b.dim());
    let mut out = OperatorMatrix::zeros(&layout);
    let nza = nonzeros(a.entries());
    let nzb = nonzeros(b.entries());
    for &(i, j, v) in &nza {
        for &(k, l, w) in &nzb {
            out.entries[(i * nb + k, j * nb + l)] = v * w;
        }
    }
    debug_assert_eq!(out.dim(), na * nb);
    out.hermitian_hint = a.hermitian_hint && b.hermitian_hint;
    Ok(out)
}

/// Embed a single-mode operator at `mode_index`, identities elsewhere.
pub fn tensor_embed(op: &OperatorMatrix, mode_index: usize, layout: &FockSpaceLayout) -> Result<OperatorMatrix> {
    let dims = layout.mode_dims();
    if mode_index >= dims.len() {
        return Err(Error::LayoutMismatch(format!("no mode at index {mode_index} in {layout}")));
    }
    if op.dim() != dims[mode_index] {
        return Err(Error::LayoutMismatch(format!(
            "operator of dimension {} embedded at mode {} of dimension {}",
            op.dim(),
            layout.modes()[mode_index],
            dims[mode_index]
        )));
    }
    let eyes: Vec<OperatorMatrix> =
        dims.iter().map(|&d| identity(d)).collect::<Result<_>>()?;
    let factors: Vec<&OperatorMatrix> =
        (0..dims.len()).map(|k| if k == mode_index { op } else { &eyes[k] }).collect();
    let mut out = OperatorMatrix::zeros(layout);
    accumulate_kron(&mut out, c64::new(1.0, 0.0), &factors)?;
    out.hermitian_hint = op.hermitian_hint;
    Ok(out)
}

fn one_norm(m: MatRef<'_, c64>) -> f64 {
    (0..m.ncols())
        .map(|j| (0..m.nrows()).map(|i| m[(i, j)].modulus()).sum::<f64>())
        .fold(0.0, f64::max)
}

fn check_finite(m: &Mat<c64>) -> Result<()> {
    let n = m.nrows();
    for j in 0..m.ncols() {
        for i in 0..n {
            let v = m[(i, j)];
            if !(v.re.is_finite() && v.im.is_finite()) {
                return Err(Error::NumericFailure("matrix exponential overflowed".into()));
            }
        }
    }
    Ok(())
}

const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];
const THETA13: f64 = 5.371920351148152;

/// Degree-13 Pade approximant with scaling and squaring.
pub fn expm_pade(op: &OperatorMatrix) -> Result<OperatorMatrix> {
    check_finite(&op.entries)?;
    let n = op.dim();
    let norm = one_norm(op.entries.as_ref());
    let s = if norm > THETA13 { (norm / THETA13).log2().ceil() as i32 } else { 0 };
    let scale = 0.5f64.powi(s);
    let a = Mat::from_fn(n, n, |i, j| op.entries[(i, j)] * scale);
    let eye = Mat::<c64>::identity(n, n);
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let b = |k: usize| c64::new(PADE13[k], 0.0);
    let lin = |c6: usize, c4: usize, c2: usize, c0: Option<usize>| {
        Mat::from_fn(n, n, |i, j| {
            let mut v = a6[(i, j)] * b(c6) + a4[(i, j)] * b(c4) + a2[(i, j)] * b(c2);
            if let Some(c0) = c0 {
                v += eye[(i, j)] * b(c0);
            }
            v
        })
    };
    let u_inner = &a6 * lin(13, 11, 9, None);
    let u_rest = lin(7, 5, 3, Some(1));
    let u = &a * (&u_inner + &u_rest);
    let v_inner = &a6 * lin(12, 10, 8, None);
    let v = &v_inner + lin(6, 4, 2, Some(0));
    let p = &v + &u;
    let q = &v - &u;
    let mut x = p;
    q.partial_piv_lu().solve_in_place(x.as_mut());
    for _ in 0..s {
        x = &x * &x;
    }
    check_finite(&x)?;
    OperatorMatrix::new(op.layout.clone(), x, false)
}

const STRUCTURE_TOL: f64 = 1e-14;

/// Eigendecomposition route, valid for Hermitian or anti-Hermitian input.
pub fn expm_eig(op: &OperatorMatrix) -> Result<OperatorMatrix> {
    check_finite(&op.entries)?;
    let n = op.dim();
    let tol = STRUCTURE_TOL * op.max_abs().max(1.0);
    let (h, anti) = if op.hermiticity_defect() <= tol {
        (op.entries.clone(), false)
    } else if op.anti_hermiticity_defect() <= tol {
        (Mat::from_fn(n, n, |i, j| op.entries[(i, j)] * c64::new(0.0, -1.0)), true)
    } else {
        return Err(Error::InvalidParameter(
            "eigendecomposition exponential needs a Hermitian or anti-Hermitian matrix".into(),
        ));
    };
    let eig = h
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::NumericFailure(format!("eigensolver: {e:?}")))?;
    let vals = eig.S().column_vector();
    let vecs = eig.U();
    let phase: Vec<c64> = (0..n)
        .map(|k| {
            let l = vals[k].re;
            if anti {
                c64::new(l.cos(), l.sin())
            } else {
                c64::new(l.exp(), 0.0)
            }
        })
        .collect();
    let scaled = Mat::from_fn(n, n, |i, k| vecs[(i, k)] * phase[k]);
    let x = &scaled * vecs.adjoint();
    check_finite(&x)?;
    OperatorMatrix::new(op.layout.clone(), x, !anti)
}

/// Matrix exponential. Real input goes through Pade scaling-and-squaring, which keeps the
/// result exactly real; complex (anti-)Hermitian input uses the eigendecomposition.
pub fn matrix_exp(op: &OperatorMatrix) -> Result<OperatorMatrix> {
    if op.max_abs() == 0.0 {
        return Ok(OperatorMatrix::identity(&op.layout));
    }
    if op.is_real() {
        return expm_pade(op);
    }
    match expm_eig(op) {
        Ok(x) => Ok(x),
        Err(Error::InvalidParameter(_)) => expm_pade(op),
        Err(e) => Err(e),
    }
}

/// `D(x) = exp[x(b - b^+)]`.
pub fn displacement(dim: usize, x: f64) -> Result<OperatorMatrix> {
    let b = annihilation(dim)?;
    let gen = &(&b - &b.adjoint()) * x;
    matrix_exp(&gen)
}

/// `S(z) = exp[(z/2) a^{+2} - (z^*/2) a^2]`.
pub fn squeeze(dim: usize, z: c64) -> Result<OperatorMatrix> {
    let a = annihilation(dim)?;
    let a2 = &a * &a;
    let ad2 = a2.adjoint();
    let gen = &(&ad2 * (z * 0.5)) - &(&a2 * (z.conj() * 0.5));
    matrix_exp(&gen)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn max_diff(a: &OperatorMatrix, b: &OperatorMatrix) -> f64 {
        (a - b).max_abs()
    }

    fn unitarity_defect(u: &OperatorMatrix) -> f64 {
        let p = &u.adjoint() * u;
        max_diff(&p, &OperatorMatrix::identity(u.layout()))
    }

    #[test]
    fn annihilation_small() {
        let a = annihilation(2).unwrap();
        assert_eq!(a.get(0, 1), c64::new(1.0, 0.0));
        assert_eq!(a.get(0, 0), c64::new(0.0, 0.0));
        assert_eq!(a.get(1, 0), c64::new(0.0, 0.0));
        let a3 = annihilation(3).unwrap();
        assert_eq!(a3.get(1, 2).re, 2f64.sqrt());
        assert!(annihilation(1).is_err());
    }

    #[test]
    fn truncated_commutator_edge() {
        let a = annihilation(8).unwrap();
        let c = commutator(&a, &a.adjoint()).unwrap();
        for i in 0..8 {
            for j in 0..8 {
                let want = match (i == j, i) {
                    (true, 7) => -7.0,
                    (true, _) => 1.0,
                    _ => 0.0,
                };
                assert!((c.get(i, j) - c64::new(want, 0.0)).modulus() < 1e-14);
            }
        }
    }

    #[test]
    fn embed_and_modes_commute() {
        let l = FockSpaceLayout::new(&[(Mode::Cavity, 4), (Mode::Mechanical, 4)]).unwrap();
        let a = tensor_embed(&annihilation(4).unwrap(), 0, &l).unwrap();
        let b = tensor_embed(&annihilation(4).unwrap(), 1, &l).unwrap();
        assert_eq!(commutator(&a, &b).unwrap().max_abs(), 0.0);
        assert!(kron(&annihilation(4).unwrap(), &identity(4).unwrap()).is_err());
    }

    #[test]
    fn embed_identity_and_mismatch() {
        let l = FockSpaceLayout::new(&[(Mode::Cavity, 3), (Mode::Mechanical, 5)]).unwrap();
        let e = tensor_embed(&identity(5).unwrap(), 1, &l).unwrap();
        assert_eq!(max_diff(&e, &OperatorMatrix::identity(&l)), 0.0);
        assert!(matches!(tensor_embed(&identity(4).unwrap(), 1, &l), Err(Error::LayoutMismatch(_))));
    }

    #[test]
    fn embed_matches_kron() {
        let a = annihilation(2).unwrap();
        let l = FockSpaceLayout::new(&[(Mode::Boson, 2), (Mode::Mechanical, 2)]).unwrap();
        let e = tensor_embed(&a, 0, &l).unwrap();
        let i2 = identity(2).unwrap().relabel(&FockSpaceLayout::single(Mode::Mechanical, 2).unwrap()).unwrap();
        let k = kron(&a, &i2).unwrap();
        assert_eq!(max_diff(&e, &k), 0.0);
        assert_eq!(e.get(0, 2).re, 1.0);
        assert_eq!(e.get(1, 3).re, 1.0);
    }

    #[test]
    fn layout_invariants() {
        assert!(FockSpaceLayout::new(&[(Mode::Cavity, 1)]).is_err());
        assert!(FockSpaceLayout::new(&[(Mode::Cavity, 3), (Mode::Cavity, 3)]).is_err());
        let l = FockSpaceLayout::new(&[(Mode::Cavity, 3), (Mode::Mechanical, 5), (Mode::AtomHp, 2)]).unwrap();
        assert_eq!(l.total_dim(), 30);
        assert_eq!(l.strides(), vec![10, 2, 1]);
        assert_eq!(l.occupations(l.index_of(&[2, 3, 1]).unwrap()), vec![2, 3, 1]);
        assert_eq!(l.labels().collect::<Vec<_>>(), vec!["cavity", "mechanical", "atom-HP"]);
    }

    #[test]
    fn exp_zero_and_parity() {
        let z = OperatorMatrix::zeros(&FockSpaceLayout::single(Mode::Boson, 5).unwrap());
        assert_eq!(max_diff(&matrix_exp(&z).unwrap(), &OperatorMatrix::identity(z.layout())), 0.0);
        let gen = &number(4).unwrap() * c64::new(0.0, core::f64::consts::PI);
        let p = matrix_exp(&gen).unwrap();
        assert!(max_diff(&p, &parity(4).unwrap()) < 1e-14);
    }

    #[test]
    fn displacement_inverse_and_occupation() {
        let d = displacement(40, 0.5).unwrap();
        let dm = displacement(40, -0.5).unwrap();
        assert!(max_diff(&(&d * &dm), &OperatorMatrix::identity(d.layout())) < 1e-10);
        assert_eq!(max_diff(&displacement(10, 0.0).unwrap(), &identity(10).unwrap()), 0.0);

        let d = displacement(60, 1.2).unwrap();
        let mut vac = vec![c64::new(0.0, 0.0); 60];
        vac[0] = c64::new(1.0, 0.0);
        let psi = d.apply(&vac).unwrap();
        let n = number(60).unwrap().expectation(&psi).unwrap();
        assert!((n.re - 1.44).abs() < 1e-8);
    }

    #[test]
    fn displacement_shifts_interior() {
        let dim = 80;
        let x = 0.7;
        let d = displacement(dim, x).unwrap();
        let b = annihilation(dim).unwrap();
        let shifted = b.conjugate_by(&d).unwrap();
        for i in 0..30 {
            for j in 0..30 {
                let mut want = b.get(i, j);
                if i == j {
                    want -= c64::new(x, 0.0);
                }
                assert!((shifted.get(i, j) - want).modulus() < 1e-10, "({i},{j})");
            }
        }
    }

    #[test]
    fn squeeze_quadrature_and_inverse() {
        let s = squeeze(80, c64::new(0.3, 0.0)).unwrap();
        let mut vac = vec![c64::new(0.0, 0.0); 80];
        vac[0] = c64::new(1.0, 0.0);
        let psi = s.apply(&vac).unwrap();
        let x = position_quadrature(80).unwrap();
        let x2 = &x * &x;
        let v = x2.expectation(&psi).unwrap().re;
        assert!((v - 0.6f64.exp()).abs() < 1e-6);
        let z = c64::new(0.4, -0.7);
        let prod = &squeeze(60, z).unwrap() * &squeeze(60, -z).unwrap();
        assert!(max_diff(&prod, &identity(60).unwrap()) < 1e-9);
        assert!(unitarity_defect(&squeeze(60, z).unwrap()) < 1e-10);
    }

    #[test]
    fn pade_agrees_with_eig_route() {
        let a = annihilation(30).unwrap();
        let gen = &(&a.adjoint() - &a) * 0.8;
        let e1 = expm_eig(&gen).unwrap();
        let e2 = expm_pade(&gen).unwrap();
        assert!(max_diff(&e1, &e2) < 1e-12);
        let h = &(&a + &a.adjoint()) * 0.3;
        assert!(max_diff(&expm_eig(&h).unwrap(), &expm_pade(&h).unwrap()) < 1e-11);
    }

    #[test]
    fn pade_general_matrix() {
        // Nilpotent: exp(a) = sum a^k / k!, exactly a finite series.
        let a = &annihilation(6).unwrap() * 2.0;
        let e = matrix_exp(&a).unwrap();
        let mut want = identity(6).unwrap();
        let mut term = identity(6).unwrap();
        for k in 1..6 {
            term = &(&term * &a) * (1.0 / k as f64);
            want = &want + &term;
        }
        assert!(max_diff(&e, &want) < 1e-12 * want.max_abs());
    }

    #[test]
    fn exp_overflow_is_signaled() {
        let h = &number(4).unwrap() * 1000.0;
        assert!(matches!(matrix_exp(&h), Err(Error::NumericFailure(_))));
        let mut m = OperatorMatrix::zeros(&FockSpaceLayout::single(Mode::Boson, 3).unwrap());
        m.set(0, 1, c64::new(1.0e6, 0.0));
        m.set(1, 0, c64::new(3.0, 0.0));
        assert!(matches!(matrix_exp(&m), Err(Error::NumericFailure(_))));
    }

    #[test]
    fn spin_algebra() {
        for n in [1u32, 2, 5, 10] {
            let jz = spin_jz(n).unwrap();
            let jp = spin_raise(n).unwrap();
            let jm = spin_lower(n).unwrap();
            let c = commutator(&jm, &jp).unwrap();
            let want = &jz * -2.0;
            assert!(max_diff(&c, &want) < 1e-12, "N_a = {n}");
            let hp = hp_raise(n, n as usize + 1).unwrap();
            assert!(max_diff(&hp.relabel(jp.layout()).unwrap(), &jp) < 1e-15);
        }
    }

    #[test]
    fn hp_clamps_beyond_ensemble() {
        let jp = hp_raise(3, 8).unwrap();
        for j in 3..7 {
            assert_eq!(jp.get(j + 1, j).re, 0.0);
        }
        assert!(jp.get(3, 2).re > 0.0);
    }
}

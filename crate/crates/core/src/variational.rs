//! Two-mode squeezed-vacuum variational energy and its self-consistent squeezing parameters.

use alloc::format;
use core::fmt;
use core::str::FromStr;

#[cfg_attr(feature = "std", allow(unused_imports))]
use num_traits::Float;

use crate::error::{Error, Result};

/// Largest `n` the full series ever reaches.
pub const MAX_SERIES_ORDER: usize = 40;
pub const DEFAULT_SERIES_ORDER: SeriesOrder = SeriesOrder::Truncated(4);
/// Successive-term ratio above which a truncation is flagged.
pub const TERM_RATIO_WARN: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SeriesOrder {
    /// Keep terms up to `n = n_max`.
    Truncated(usize),
    /// Sum until every series' last term is below `1e-14` of its partial sum (or `n = 40`).
    Full,
}

impl SeriesOrder {
    fn validate(self) -> Result<()> {
        match self {
            SeriesOrder::Truncated(n) if n < 1 || n > MAX_SERIES_ORDER => {
                Err(Error::InvalidParameter(format!("series order {n} outside 1..={MAX_SERIES_ORDER}")))
            }
            _ => Ok(()),
        }
    }
}

impl fmt::Display for SeriesOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SeriesOrder::Truncated(n) => write!(f, "{n}"),
            SeriesOrder::Full => f.write_str("full"),
        }
    }
}

impl FromStr for SeriesOrder {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("full") {
            return Ok(SeriesOrder::Full);
        }
        let n: usize = s.parse().map_err(|_| Error::InvalidParameter(format!("series order '{s}'")))?;
        let o = SeriesOrder::Truncated(n);
        o.validate()?;
        Ok(o)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Regime {
    FiniteEta,
    /// `eta -> infinity`: `r` decouples from `s`.
    ClassicalLimit,
}

impl Regime {
    pub fn name(self) -> &'static str {
        match self {
            Regime::FiniteEta => "finite_eta",
            Regime::ClassicalLimit => "classical_limit",
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Regime {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "finite_eta" | "finite" => Ok(Regime::FiniteEta),
            "classical_limit" | "classical" => Ok(Regime::ClassicalLimit),
            _ => Err(Error::InvalidParameter(format!("unknown regime '{s}'"))),
        }
    }
}

/// The three `s`-dependent series of the energy, `F = sum_n t_n e^{2 n s}`:
/// `f1` multiplies `8 sinh^2 r + 4`, `f2` multiplies `-e^{2r}`, `f3` multiplies `-sinh 2r`.
#[derive(Debug, Clone, Copy, Default)]
struct Series {
    f1: f64,
    f2: f64,
    f3: f64,
    /// `s`-derivatives restricted to `n >= 2`.
    tail1: f64,
    tail2: f64,
    tail3: f64,
    term_ratio: f64,
    terms: usize,
}

fn series(s: f64, gamma: f64, eta: f64, order: SeriesOrder) -> Series {
    let inv_eta = if eta.is_infinite() { 0.0 } else { 1.0 / eta };
    let g2 = gamma * gamma;
    let n_max = match order {
        SeriesOrder::Truncated(n) => n,
        SeriesOrder::Full => MAX_SERIES_ORDER,
    };
    let mut out = Series::default();
    // c_n = gamma^{2n} eta^{-n} (2n-1)!! / 8^n, carried together with e^{2ns}
    let mut c = 1.0;
    let mut fact_2n = 1.0; // (2n)!
    let mut pow4 = 1.0; // 2^{2n}
    let e2s = (2.0 * s).exp();
    let mut last = [0.0f64; 3];
    let mut prev = [0.0f64; 3];
    out.f2 = g2 / 4.0;
    last[1] = out.f2;
    for n in 1..=n_max {
        let nf = n as f64;
        c *= g2 * inv_eta * (2.0 * nf - 1.0) / 8.0 * e2s;
        let fact_2n1 = fact_2n * (2.0 * nf - 1.0);
        fact_2n = fact_2n1 * 2.0 * nf;
        pow4 *= 4.0;
        let t1 = (1.0 / fact_2n - 1.0 / fact_2n1) * pow4 / 8.0 * c;
        let t2 = g2 / 8.0 * 2.0 * pow4 * c / fact_2n;
        let t3 = pow4 / 2.0 * c / fact_2n1;
        prev = last;
        last = [t1, t2, t3];
        out.f1 += t1;
        out.f2 += t2;
        out.f3 += t3;
        if n >= 2 {
            out.tail1 += 2.0 * nf * t1;
            out.tail2 += 2.0 * nf * t2;
            out.tail3 += 2.0 * nf * t3;
        }
        out.terms = n;
        if matches!(order, SeriesOrder::Full) {
            let small = |t: f64, f: f64| t.abs() <= 1e-14 * f.abs();
            if small(t1, out.f1) && small(t2, out.f2) && small(t3, out.f3) {
                break;
            }
        }
    }
    let mut ratio: f64 = 0.0;
    for k in 0..3 {
        if prev[k] != 0.0 && last[k] != 0.0 {
            ratio = ratio.max((last[k] / prev[k]).abs());
        }
    }
    out.term_ratio = ratio;
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VariationalEnergy {
    /// In units of `omega_c`.
    pub energy: f64,
    /// Largest ratio of the last kept term to the one before it.
    pub term_ratio: f64,
    pub terms: usize,
    /// `term_ratio > 0.5`: the truncation is not trustworthy.
    pub flagged: bool,
}

/// Energy of the squeezed vacuum `S_a(r) S_b(s)|0,0>` of the transformed Hamiltonian.
/// `eta = infinity` is accepted and drops every `eta^{-n}` term.
pub fn variational_energy(r: f64, s: f64, gamma: f64, eta: f64, order: SeriesOrder) -> Result<VariationalEnergy> {
    order.validate()?;
    if !(eta > 0.0) || !gamma.is_finite() || !r.is_finite() || !s.is_finite() {
        return Err(Error::InvalidParameter(format!("r = {r}, s = {s}, gamma = {gamma}, eta = {eta}")));
    }
    let f = series(s, gamma, eta, order);
    Ok(VariationalEnergy {
        energy: energy_from(r, s, gamma, eta, &f),
        term_ratio: f.term_ratio,
        terms: f.terms,
        flagged: f.term_ratio > TERM_RATIO_WARN,
    })
}

fn energy_from(r: f64, s: f64, gamma: f64, eta: f64, f: &Series) -> f64 {
    let sh_r = r.sinh();
    let phonon = if eta.is_infinite() { 0.0 } else { s.sinh().powi(2) / eta };
    sh_r * sh_r + phonon + f.f1 * (8.0 * sh_r * sh_r + 4.0) + gamma * gamma / 8.0
        - f.f2 * (2.0 * r).exp()
        - f.f3 * (2.0 * r).sinh()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SqueezingSolution {
    pub r: f64,
    pub s: f64,
    pub energy: f64,
    pub iterations: usize,
    /// Largest change of `(r, s)` under one undamped application of the fixed-point map.
    pub residual: f64,
    pub series_order: SeriesOrder,
    /// Number of terms the series actually used at the solution.
    pub terms: usize,
    pub regime: Regime,
    pub flagged: bool,
}

/// Right-hand sides `(e^{4r}, e^{4s})` of the stationarity conditions, `None` when either has no
/// positive value (no real squeezing).
fn fixed_point_map(r: f64, s: f64, gamma: f64, eta: f64, order: SeriesOrder, regime: Regime) -> Option<(f64, f64)> {
    let g2 = gamma * gamma;
    let sh_r = r.sinh();
    let e2r = (2.0 * r).exp();
    let sh2r = (2.0 * r).sinh();
    let s_den = 1.0 - g2 * (sh_r * sh_r + 0.5 + sh2r + 0.25 * g2 * e2r);
    let (x, y) = match regime {
        Regime::ClassicalLimit => (1.0 / (1.0 - g2), 1.0 / s_den),
        Regime::FiniteEta => {
            let f = series(s, gamma, eta, order);
            let num = 1.0 + 8.0 * f.f1 + 2.0 * f.f3;
            let den = 1.0 + 8.0 * f.f1 - 4.0 * f.f2 - 2.0 * f.f3;
            let a2 = -2.0 * eta * (2.0 * s).exp() * ((8.0 * sh_r * sh_r + 4.0) * f.tail1 - e2r * f.tail2 - sh2r * f.tail3);
            (num / den, (1.0 + a2) / s_den)
        }
    };
    let ok = |v: f64| v.is_finite() && v > 0.0 && v < 1e300;
    if ok(x) && ok(y) && s_den > 0.0 {
        Some((x, y))
    } else {
        None
    }
}

/// `(r, s)` from the closed forms of the classical limit.
pub fn classical_closed_form(gamma: f64) -> Result<(f64, f64)> {
    match fixed_point_map(0.0, 0.0, gamma, f64::INFINITY, SeriesOrder::Truncated(1), Regime::ClassicalLimit) {
        Some((x, _)) => {
            let r = 0.25 * x.ln();
            fixed_point_map(r, 0.0, gamma, f64::INFINITY, SeriesOrder::Truncated(1), Regime::ClassicalLimit)
                .map(|(_, y)| (r, 0.25 * y.ln()))
                .ok_or(Error::DivergenceSuspected { iterations: 0, residual: f64::INFINITY })
        }
        None => Err(Error::DivergenceSuspected { iterations: 0, residual: f64::INFINITY }),
    }
}

pub const MAX_ITERATIONS: usize = 100_000;
const TARGET_RESIDUAL: f64 = 1e-13;
const ACCEPT_RESIDUAL: f64 = 1e-10;

/// Damped fixed-point iteration from `r = s = 0`.
pub fn solve_squeezing(gamma: f64, eta: f64, order: SeriesOrder, regime: Regime) -> Result<SqueezingSolution> {
    solve_squeezing_from(gamma, eta, order, regime, (0.0, 0.0))
}

/// As [`solve_squeezing`] from a chosen starting point. In the classical limit `eta` is ignored.
pub fn solve_squeezing_from(
    gamma: f64,
    eta: f64,
    order: SeriesOrder,
    regime: Regime,
    start: (f64, f64),
) -> Result<SqueezingSolution> {
    order.validate()?;
    if !(gamma >= 0.0) || !gamma.is_finite() {
        return Err(Error::InvalidParameter(format!("gamma = {gamma} must be finite and >= 0")));
    }
    let eta = match regime {
        Regime::ClassicalLimit => f64::INFINITY,
        Regime::FiniteEta if eta > 0.0 && eta.is_finite() => eta,
        Regime::FiniteEta => return Err(Error::InvalidParameter(format!("eta = {eta} must be finite and > 0"))),
    };
    let map = |r: f64, s: f64| fixed_point_map(r, s, gamma, eta, order, regime);
    let (mut r, mut s) = start;
    let diverged = |iterations: usize, residual: f64| Error::DivergenceSuspected { iterations, residual };
    let Some(mut image) = map(r, s) else {
        return Err(diverged(0, f64::INFINITY));
    };
    let mut w = 0.5;
    let mut best = f64::INFINITY;
    let mut checkpoint = f64::INFINITY;
    let mut residual = f64::INFINITY;
    for it in 0..MAX_ITERATIONS {
        let (x_new, y_new) = image;
        residual = (0.25 * x_new.ln() - r).abs().max((0.25 * y_new.ln() - s).abs());
        if residual <= TARGET_RESIDUAL {
            return finish(r, s, gamma, eta, order, regime, it, residual);
        }
        best = best.min(residual);
        if it > 0 && it % 2000 == 0 {
            // under-relax further when the last stretch did not halve the residual
            if best > 0.5 * checkpoint {
                w *= 0.5;
            }
            checkpoint = best;
        }
        loop {
            let x = (1.0 - w) * (4.0 * r).exp() + w * x_new;
            let y = (1.0 - w) * (4.0 * s).exp() + w * y_new;
            let (rn, sn) = (0.25 * x.ln(), 0.25 * y.ln());
            if let Some(next) = map(rn, sn) {
                r = rn;
                s = sn;
                image = next;
                break;
            }
            w *= 0.5;
            if w < 1e-8 {
                return Err(diverged(it, residual));
            }
        }
    }
    if residual < ACCEPT_RESIDUAL {
        return finish(r, s, gamma, eta, order, regime, MAX_ITERATIONS, residual);
    }
    Err(diverged(MAX_ITERATIONS, residual))
}

#[allow(clippy::too_many_arguments)]
fn finish(
    r: f64,
    s: f64,
    gamma: f64,
    eta: f64,
    order: SeriesOrder,
    regime: Regime,
    iterations: usize,
    residual: f64,
) -> Result<SqueezingSolution> {
    let e = variational_energy(r, s, gamma, eta, order)?;
    Ok(SqueezingSolution {
        r,
        s,
        energy: e.energy,
        iterations,
        residual,
        series_order: order,
        terms: e.terms,
        regime,
        flagged: e.flagged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const O4: SeriesOrder = SeriesOrder::Truncated(4);

    #[test]
    fn energy_hand_values() {
        assert_eq!(variational_energy(0.0, 0.0, 0.0, 50.0, O4).unwrap().energy, 0.0);
        let e = variational_energy(0.0, 0.0, 0.4, 50.0, SeriesOrder::Truncated(1)).unwrap();
        let g2: f64 = 0.16;
        let hand = g2 / 8.0 - g2 / 4.0 - g2 / (8.0 * 50.0) - g2 * g2 / (16.0 * 50.0);
        assert!((e.energy - hand).abs() < 1e-15, "{}", e.energy);
        assert!((e.energy + 0.020432).abs() < 1e-15);
    }

    #[test]
    fn classical_examples() {
        let (r, s) = classical_closed_form(0.6).unwrap();
        assert!((r - 0.25 * (1.0f64 / 0.64).ln()).abs() < 1e-15);
        assert!((r - 0.111572).abs() < 1e-6);
        // e^{2r} = 1.25 exactly, so sinh^2 r = 0.0125 and sinh 2r = 0.225
        let y = 1.0 / (1.0 - 0.36 * (0.0125 + 0.225 + 0.5 + 0.09 * 1.25));
        assert!(((4.0 * s).exp() - y).abs() < 1e-12);
        let sol = solve_squeezing(0.6, 1.0, O4, Regime::ClassicalLimit).unwrap();
        assert!(sol.residual < 1e-10);
        assert!((sol.r - r).abs() < 1e-10 && (sol.s - s).abs() < 1e-10);
    }

    #[test]
    fn divergence_is_flagged() {
        for regime in [Regime::ClassicalLimit, Regime::FiniteEta] {
            for g in [0.99, 1.0, 1.2] {
                assert!(matches!(solve_squeezing(g, 20.0, O4, regime), Err(Error::DivergenceSuspected { .. })), "{regime} {g}");
            }
        }
    }

    #[test]
    fn fixed_point_is_stationary() {
        let sol = solve_squeezing(0.5, 20.0, O4, Regime::FiniteEta).unwrap();
        assert!(sol.residual < 1e-10);
        let h = 1e-6;
        let e = |r: f64, s: f64| variational_energy(r, s, 0.5, 20.0, O4).unwrap().energy;
        let dr = (e(sol.r + h, sol.s) - e(sol.r - h, sol.s)) / (2.0 * h);
        let ds = (e(sol.r, sol.s + h) - e(sol.r, sol.s - h)) / (2.0 * h);
        assert!(dr.abs() < 1e-8 && ds.abs() < 1e-8, "{dr} {ds}");
    }

    #[test]
    fn full_series_terminates() {
        let f = series(0.3, 0.7, 10.0, SeriesOrder::Full);
        assert!(f.terms < MAX_SERIES_ORDER);
        let t = series(0.3, 0.7, 10.0, SeriesOrder::Truncated(f.terms));
        assert_eq!(f.f2, t.f2);
        assert!("full".parse::<SeriesOrder>().is_ok() && "0".parse::<SeriesOrder>().is_err());
    }
}

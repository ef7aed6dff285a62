//! Dispatch of each task to the core modules.

use std::str::FromStr;
use std::time::Instant;

use optomech_core::analytic::{
    classify_phase_grid, critical_excess, hybrid_spectrum_np, hybrid_spectrum_sp, hybrid_tilde, Excitation, Phase,
};
use optomech_core::c64;
use optomech_core::meanfield::{hybrid_meanfield_with, mf_energy_hom_in, mf_energy_hop, mf_minimize_hom, mf_minimize_hop};
use optomech_core::model::HamiltonianKind;
use optomech_core::params::ModelParams;
use optomech_core::spectrum::{
    convergence_check, doubled_layout, gap_point, level_crossing_scan, ControlParam, ConvergenceStatus, DimsPolicy, Frame,
    PointStatus,
};
use optomech_core::variational::{solve_squeezing, Regime};
use rayon::prelude::*;
use serde_json::{json, Map, Value as Json};

use crate::config::{Control, RunConfig, Task};
use crate::error::{QptError, Result};
use crate::table::{Column, ResultTable, Row, Value};

/// Rows and the task summary, before metadata is attached.
struct Output {
    columns: Vec<Column>,
    rows: Vec<Row>,
    notes: Map<String, Json>,
}

/// Execute a run. `workers` sizes the thread pool (`None`: one per core); row order never
/// depends on it.
pub fn run(cfg: &RunConfig, workers: Option<usize>) -> Result<ResultTable> {
    let start = Instant::now();
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = workers {
        pool = pool.num_threads(n.max(1));
    }
    let pool = pool.build().map_err(|e| QptError::Pool(e.to_string()))?;
    let out = pool.install(|| match cfg.task {
        Task::Staircase => staircase(cfg),
        Task::CrossingScan => crossing_scan(cfg),
        Task::GapSweep => gap_sweep(cfg),
        Task::ConvergenceAudit => convergence_audit(cfg),
        Task::Landscape => landscape(cfg),
        Task::Variational => variational(cfg),
        Task::PhaseDiagram => phase_diagram(cfg),
        Task::HybridSpectrum => hybrid_spectrum(cfg),
    })?;
    let p = &cfg.params;
    let mut derived = Map::new();
    for (k, v) in [("eta", p.eta()), ("kappa", p.kappa()), ("gamma", p.gamma()), ("mu", p.mu()), ("chi", p.chi())] {
        derived.insert(k.into(), json!(v));
    }
    Ok(ResultTable {
        task: cfg.task,
        columns: out.columns,
        rows: out.rows,
        config: cfg.to_file(),
        derived,
        notes: out.notes,
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}

fn row(values: Vec<Value>, flagged: bool) -> Row {
    Row { values, flagged }
}

fn fixed_dim(cfg: &RunConfig) -> usize {
    match &cfg.dims {
        Some(DimsPolicy::Fixed(d)) => d[0],
        _ => unreachable!("staircase dims are resolved at parse time"),
    }
}

fn staircase(cfg: &RunConfig) -> Result<Output> {
    let c = &cfg.control;
    let dim = fixed_dim(cfg);
    let rep = level_crossing_scan(c.lo, c.hi, c.steps, dim)?;
    let sign = cfg.frame.sign();
    let rows = rep
        .staircase
        .iter()
        .map(|&(k, n)| {
            let nf = n as f64;
            let n_g = if k > 1.0 { 0.5 * (k * k - 1.0) } else { 0.0 };
            let energy = if k > 0.0 { sign * (nf - nf * nf / (k * k)) } else { f64::NAN };
            row(vec![Value::Float(k), Value::Int(n as i64), Value::Float(n_g), Value::Float(energy)], n + 1 >= dim)
        })
        .collect();
    let mut notes = Map::new();
    notes.insert("dim".into(), json!(dim));
    notes.insert("crossings".into(), json!(rep.crossings.len()));
    Ok(Output {
        columns: vec![
            Column::new("kappa", "1"),
            Column::new("photon_number", "photons"),
            Column::new("mean_field_photon_number", "photons"),
            Column::new("level_energy", "omega_c"),
        ],
        rows,
        notes,
    })
}

fn crossing_scan(cfg: &RunConfig) -> Result<Output> {
    let c = &cfg.control;
    let dim = fixed_dim(cfg);
    let rep = level_crossing_scan(c.lo, c.hi, c.steps, dim)?;
    let rows = rep
        .crossings
        .iter()
        .map(|x| {
            let exact = ((2 * x.lower + 1) as f64).sqrt();
            row(
                vec![
                    Value::Float(x.kappa),
                    Value::Int(x.lower as i64),
                    Value::Int(x.upper as i64),
                    Value::Float(exact),
                    Value::Float(x.kappa - exact),
                ],
                false,
            )
        })
        .collect();
    let mut notes = Map::new();
    notes.insert("dim".into(), json!(dim));
    Ok(Output {
        columns: vec![
            Column::new("kappa", "1"),
            Column::new("lower_level", "photons"),
            Column::new("upper_level", "photons"),
            Column::new("kappa_exact", "1"),
            Column::new("deviation", "1"),
        ],
        rows,
        notes,
    })
}

fn control_param(c: &Control) -> Result<ControlParam> {
    Ok(ControlParam::from_str(&c.name)?)
}

fn gap_sweep(cfg: &RunConfig) -> Result<Output> {
    let param = control_param(&cfg.control)?;
    let dims = cfg.dims.clone().unwrap_or(DimsPolicy::Auto);
    let points: Vec<_> = cfg
        .control
        .values()
        .par_iter()
        .map(|&v| {
            let p = cfg.params_at(param.name(), v, &cfg.params);
            gap_point(cfg.model, &p, &dims, cfg.frame, &cfg.convergence, v)
        })
        .collect();
    let rows = points
        .into_iter()
        .map(|pt| {
            let flagged = pt.status != PointStatus::Converged;
            row(
                vec![
                    Value::Float(pt.control),
                    Value::Float(pt.gap),
                    Value::opt(pt.parity_gap),
                    Value::Float(pt.ground_energy),
                    Value::opt(pt.photon_number),
                    Value::opt(pt.parity),
                    Value::Bool(pt.status == PointStatus::Converged),
                    Value::text(pt.status.name()),
                    Value::text(pt.layout.map(|l| l.to_string()).unwrap_or_default()),
                    Value::text(pt.message.unwrap_or_default()),
                ],
                flagged,
            )
        })
        .collect();
    Ok(Output {
        columns: vec![
            Column::new(param.name(), "1"),
            Column::new("gap", "omega_c"),
            Column::new("parity_gap", "omega_c"),
            Column::new("ground_energy", "omega_c"),
            Column::new("photon_number", "photons"),
            Column::new("parity", "1"),
            Column::new("converged", "bool"),
            Column::new("status", "text"),
            Column::new("dims", "text"),
            Column::new("message", "text"),
        ],
        rows,
        notes: Map::new(),
    })
}

fn status_name(s: ConvergenceStatus) -> &'static str {
    match s {
        ConvergenceStatus::Converged => "converged",
        ConvergenceStatus::Unconverged => "unconverged",
        ConvergenceStatus::ResourceLimit => "resource_limit",
    }
}

/// Doubling sequence at one control value, one row per check.
fn audit_point(cfg: &RunConfig, param: ControlParam, v: f64) -> Vec<Row> {
    let p = cfg.params_at(param.name(), v, &cfg.params);
    let start = match cfg.dims.as_ref().unwrap_or(&DimsPolicy::Auto) {
        DimsPolicy::Fixed(d) => cfg.model.layout_with_dims(d),
        DimsPolicy::Auto => cfg.model.default_layout(&p),
    };
    let failed = |step: usize, msg: String| {
        row(
            vec![
                Value::Float(v),
                Value::Int(step as i64),
                Value::Missing,
                Value::Missing,
                Value::Missing,
                Value::text("failed"),
                Value::Missing,
                Value::Missing,
                Value::Missing,
                Value::Missing,
                Value::text(msg),
            ],
            true,
        )
    };
    let mut layout = match start {
        Ok(l) => l,
        Err(e) => return vec![failed(0, e.to_string())],
    };
    let mut rows = Vec::new();
    for step in 0.. {
        let report = match convergence_check(cfg.model, &p, &layout, cfg.frame, &cfg.convergence) {
            Ok(r) => r,
            Err(e) => {
                rows.push(failed(step, e.to_string()));
                break;
            }
        };
        let next = doubled_layout(&layout, &p).ok();
        let capped = next
            .as_ref()
            .and_then(|n| doubled_layout(n, &p).ok())
            .map_or(true, |nn| nn.total_dim() > cfg.convergence.max_total_dim);
        let last = report.status != ConvergenceStatus::Unconverged || capped;
        let s = &report.result;
        rows.push(row(
            vec![
                Value::Float(v),
                Value::Int(step as i64),
                Value::text(layout.to_string()),
                Value::text(s.layout.to_string()),
                Value::Int(s.layout.total_dim() as i64),
                Value::text(status_name(report.status)),
                Value::opt(report.eigenvalue_shift),
                Value::opt(report.photon_shift),
                Value::Float(s.ground_energy()),
                Value::Float(s.gap),
                Value::text(report.warnings.iter().map(|w| w.to_string()).collect::<Vec<_>>().join("; ")),
            ],
            last && !report.converged(),
        ));
        if last {
            break;
        }
        layout = next.expect("checked above");
    }
    rows
}

fn convergence_audit(cfg: &RunConfig) -> Result<Output> {
    let param = control_param(&cfg.control)?;
    let per_point: Vec<Vec<Row>> = cfg.control.values().par_iter().map(|&v| audit_point(cfg, param, v)).collect();
    Ok(Output {
        columns: vec![
            Column::new(param.name(), "1"),
            Column::new("step", "count"),
            Column::new("base_dims", "text"),
            Column::new("checked_dims", "text"),
            Column::new("total_dim", "count"),
            Column::new("status", "text"),
            Column::new("eigenvalue_shift", "omega_c"),
            Column::new("photon_shift", "photons"),
            Column::new("ground_energy", "omega_c"),
            Column::new("gap", "omega_c"),
            Column::new("message", "text"),
        ],
        rows: per_point.into_iter().flatten().collect(),
        notes: Map::new(),
    })
}

fn landscape(cfg: &RunConfig) -> Result<Output> {
    let c2 = cfg.control2.as_ref().expect("landscape has two axes");
    let (xs, ys) = (cfg.control.values(), c2.values());
    let p = &cfg.params;
    let mut notes = Map::new();
    let grid = |f: &dyn Fn(f64, f64) -> f64| -> Vec<Row> {
        xs.iter()
            .flat_map(|&x| ys.iter().map(move |&y| (x, y)))
            .map(|(x, y)| row(vec![Value::Float(x), Value::Float(y), Value::Float(f(x, y))], false))
            .collect()
    };
    let rows = if cfg.model == HamiltonianKind::QuarticHop {
        if cfg.frame == Frame::Flipped {
            return Err(QptError::Config("the quartic landscape has no flipped frame".into()));
        }
        let note = match mf_minimize_hop(p, p.n_factor) {
            Ok(m) => json!({"alpha": m.alpha_mag, "beta": m.beta, "energy": m.energy, "classification": m.classification.name()}),
            Err(e) => json!({"error": e.to_string()}),
        };
        notes.insert("stationary_point".into(), note);
        grid(&|a, b| mf_energy_hop(a, b, p, p.n_factor))
    } else {
        let (kappa, eta) = (p.kappa(), p.eta());
        if !kappa.is_finite() {
            return Err(QptError::Config("the Goldstone landscape needs g > 0 (finite kappa)".into()));
        }
        let m = mf_minimize_hom(kappa, eta)?;
        notes.insert(
            "minimum".into(),
            json!({
                "alpha_mag": m.alpha_mag,
                "energy_printed": m.energy,
                "classification": m.classification.name(),
                "classified_in": m.frame.name(),
                "degenerate_ring": m.degenerate_ring,
            }),
        );
        let zero = c64::new(0.0, 0.0);
        grid(&|re, im| mf_energy_hom_in(c64::new(re, im), zero, kappa, eta, cfg.frame))
    };
    let (cx, cy) = if cfg.model == HamiltonianKind::QuarticHop {
        (Column::new("alpha", "sqrt(photons)"), Column::new("beta", "sqrt(phonons)"))
    } else {
        (Column::new("re_alpha", "sqrt(photons)"), Column::new("im_alpha", "sqrt(photons)"))
    };
    Ok(Output { columns: vec![cx, cy, Column::new("energy", "omega_c")], rows, notes })
}

fn variational(cfg: &RunConfig) -> Result<Output> {
    let base = &cfg.params;
    let by_gamma = cfg.control.name == "gamma";
    let rows = cfg
        .control
        .values()
        .par_iter()
        .map(|&v| {
            let (gamma, eta) = if by_gamma { (v, base.eta()) } else { (base.gamma(), v) };
            let eta_used = if cfg.regime == Regime::ClassicalLimit { f64::INFINITY } else { eta };
            match solve_squeezing(gamma, eta, cfg.series_order, cfg.regime) {
                Ok(s) => row(
                    vec![
                        Value::Float(gamma),
                        Value::Float(eta_used),
                        Value::Float(s.r),
                        Value::Float(s.s),
                        Value::Float(s.energy),
                        Value::Int(s.iterations as i64),
                        Value::Float(s.residual),
                        Value::Int(s.terms as i64),
                        Value::Bool(s.flagged),
                        Value::text(if s.flagged { "series_flagged" } else { "converged" }),
                    ],
                    s.flagged,
                ),
                Err(e) => {
                    let status = match e {
                        optomech_core::Error::DivergenceSuspected { .. } => "divergence_suspected".to_string(),
                        other => other.to_string(),
                    };
                    row(
                        vec![
                            Value::Float(gamma),
                            Value::Float(eta_used),
                            Value::Missing,
                            Value::Missing,
                            Value::Missing,
                            Value::Missing,
                            Value::Missing,
                            Value::Missing,
                            Value::Bool(true),
                            Value::Text(status),
                        ],
                        true,
                    )
                }
            }
        })
        .collect();
    let mut notes = Map::new();
    notes.insert("series_order".into(), json!(cfg.series_order.to_string()));
    notes.insert("regime".into(), json!(cfg.regime.name()));
    Ok(Output {
        columns: vec![
            Column::new("gamma", "1"),
            Column::new("eta", "1"),
            Column::new("r", "1"),
            Column::new("s", "1"),
            Column::new("energy", "omega_c"),
            Column::new("iterations", "count"),
            Column::new("residual", "1"),
            Column::new("series_terms", "count"),
            Column::new("flagged", "bool"),
            Column::new("status", "text"),
        ],
        rows,
        notes,
    })
}

fn excitation_values(e: Excitation, scale: f64) -> (Value, &'static str) {
    match e {
        Excitation::Real(v) => (Value::Float(v / scale), "real"),
        Excitation::Imaginary(v) => (Value::Float(v / scale), "imaginary"),
        Excitation::Unbounded => (Value::Missing, "unbounded"),
    }
}

fn phase_diagram(cfg: &RunConfig) -> Result<Output> {
    let (m, g) = (&cfg.control, cfg.control2.as_ref().expect("phase diagram has two axes"));
    let alpha = cfg.params.alpha_a2;
    let grid = classify_phase_grid([m.lo, m.hi], [g.lo, g.hi], [m.steps, g.steps], alpha)?;
    let rows = grid
        .into_iter()
        .map(|pt| {
            let (eps, kind) = excitation_values(pt.epsilon_minus, 1.0);
            row(
                vec![
                    Value::Float(pt.mu),
                    Value::Float(pt.gamma),
                    Value::text(pt.phase.name()),
                    Value::Float(critical_excess(pt.mu, pt.gamma, alpha)),
                    eps,
                    Value::text(kind),
                ],
                false,
            )
        })
        .collect();
    let mut notes = Map::new();
    notes.insert("alpha_A2".into(), json!(alpha));
    notes.insert("resonance".into(), json!("omega_c = omega_a = 1"));
    Ok(Output {
        columns: vec![
            Column::new("mu", "1"),
            Column::new("gamma", "1"),
            Column::new("phase", "text"),
            Column::new("critical_excess", "1"),
            Column::new("eps_minus", "omega_c"),
            Column::new("eps_minus_kind", "text"),
        ],
        rows,
        notes,
    })
}

fn hybrid_point(cfg: &RunConfig, p: &ModelParams, v: f64) -> Row {
    let scale = p.omega_c;
    let excess = critical_excess(p.mu(), p.gamma(), p.alpha_a2);
    let phase = if excess > 1e-12 { Phase::Superradiant } else { Phase::Normal };
    let mut values = vec![Value::Float(p.mu()), Value::Float(p.gamma()), Value::text(phase.name())];
    let mut flagged = false;
    let mut status = Vec::new();
    match hybrid_tilde(p) {
        Ok(t) => {
            let (plus, minus, kind) = match phase {
                Phase::Normal => match hybrid_spectrum_np(p) {
                    Ok(s) => {
                        let (plus, _) = excitation_values(s.eps_plus, scale);
                        let (minus, kind) = excitation_values(s.eps_minus, scale);
                        (plus, minus, kind)
                    }
                    Err(e) => {
                        flagged = true;
                        status.push(e.to_string());
                        (Value::Missing, Value::Missing, "unbounded")
                    }
                },
                Phase::Superradiant => match hybrid_spectrum_sp(t.delta, t.omega_c, p.omega_a) {
                    Ok((a, b)) => (Value::Float(a / scale), Value::Float(b / scale), "real"),
                    Err(e) => {
                        flagged = true;
                        status.push(e.to_string());
                        (Value::Missing, Value::Missing, "unbounded")
                    }
                },
            };
            values.extend([plus, minus, Value::text(kind), Value::Float(t.delta)]);
            match hybrid_meanfield_with(t.delta, t.omega_c, p.omega_a) {
                Ok(mf) => values.extend([Value::Float(mf.zeta), Value::Float(mf.beta_spin), Value::Float(mf.energy)]),
                Err(e) => {
                    flagged = true;
                    status.push(e.to_string());
                    values.extend([Value::Missing, Value::Missing, Value::Missing]);
                }
            }
        }
        Err(e) => {
            flagged = true;
            status.push(e.to_string());
            values.extend([Value::Missing, Value::Missing, Value::text("unbounded"), Value::Missing]);
            values.extend([Value::Missing, Value::Missing, Value::Missing]);
        }
    }
    match &cfg.dims {
        Some(dims) => {
            let pt = gap_point(cfg.model, p, dims, Frame::Printed, &cfg.convergence, v);
            flagged |= pt.status != PointStatus::Converged;
            if let Some(m) = &pt.message {
                status.push(m.clone());
            }
            values.extend([Value::Float(pt.gap), Value::Bool(pt.status == PointStatus::Converged)]);
        }
        None => values.extend([Value::Missing, Value::Missing]),
    }
    values.push(Value::Text(status.join("; ")));
    row(values, flagged)
}

fn hybrid_spectrum(cfg: &RunConfig) -> Result<Output> {
    let rows = cfg
        .control
        .values()
        .par_iter()
        .map(|&v| hybrid_point(cfg, &cfg.params_at(&cfg.control.name, v, &cfg.params), v))
        .collect();
    Ok(Output {
        columns: vec![
            Column::new("mu", "1"),
            Column::new("gamma", "1"),
            Column::new("phase", "text"),
            Column::new("eps_plus", "omega_c"),
            Column::new("eps_minus", "omega_c"),
            Column::new("eps_minus_kind", "text"),
            Column::new("delta_tilde", "1"),
            Column::new("zeta", "1"),
            Column::new("beta_spin", "1"),
            Column::new("mean_field_energy", "omega_a per atom"),
            Column::new("numeric_gap", "omega_c"),
            Column::new("converged", "bool"),
            Column::new("message", "text"),
        ],
        rows,
        notes: Map::new(),
    })
}

//! Command pipelines and the artifacts they leave in the output directory.

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use pqlap_core::eigen::{
    canonical_signs, check_sign_structure, isolation_scan, simplicity_check, solve_lambda1, solve_lambda2,
    SignCounts,
};
use pqlap_core::functionals::{j_value, phi, psi, ResonantData};
use pqlap_core::params::ExponentOrder;
use pqlap_core::picone::{picone_fields, verify_picone};
use pqlap_core::resonance::{
    check_bound, check_limits, ll_classify, normalize_eigenpair_unitnorm, solve_coercive, solve_saddle, LLReport,
    Nonlinearity, Regime, ResonantSolution,
};
use pqlap_core::starts::{bump, sine_mode};
use pqlap_core::state::Branch;
use pqlap_core::{EigenResult, HistoryRecord, Mesh, Params, SolverOptions, StateVector};
use serde_json::{json, Map, Value};

use crate::config::{
    self, Command, Component, FieldSpec, MeshSpec, RegimeChoice, ResonanceSpec, RunConfig, Severity, SweepCell,
};
use crate::error::CliError;
use crate::output::{
    format_float, mesh_json, timestamp, write_csv, write_eigenfunction, write_history, write_json, EIGENFUNCTION_FILE,
    HISTORY_FILE, MESH_FILE, RESULT_FILE, SWEEP_FILE,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Converged,
    NotConverged,
    /// Resonant run in `auto` mode whose classification gives no regime.
    NoRegime,
    /// The solver stopped with an error; the message is in `result.json`.
    Failed,
}

impl Status {
    pub fn label(self) -> &'static str {
        match self {
            Status::Converged => "converged",
            Status::NotConverged => "not_converged",
            Status::NoRegime => "no_regime",
            Status::Failed => "error",
        }
    }

    pub fn exit_code(self) -> i32 {
        match self {
            Status::Converged => 0,
            _ => 2,
        }
    }

    fn from_converged(ok: bool) -> Self {
        if ok {
            Status::Converged
        } else {
            Status::NotConverged
        }
    }
}

/// What a pipeline produced before it is written out.
struct Outcome {
    status: Status,
    results: Value,
    history: Vec<HistoryRecord>,
    state: Option<StateVector>,
}

pub struct RunOptions {
    pub out_dir: PathBuf,
    pub jobs: usize,
}

/// Runs a validated configuration and writes its artifacts.
pub fn run(cfg: &RunConfig, opts: &RunOptions) -> Result<Status, CliError> {
    let diags = config::validate(cfg);
    if config::has_errors(&diags) {
        return Err(CliError::Invalid(diags));
    }
    std::fs::create_dir_all(&opts.out_dir).map_err(|e| CliError::io(&opts.out_dir, e))?;
    let warnings: Vec<Value> = diags
        .iter()
        .filter(|d| d.severity == Severity::Warning)
        .map(|d| serde_json::to_value(d).expect("diagnostic serializes"))
        .collect();
    let mesh = cfg.mesh.build()?;
    if cfg.output.mesh {
        write_json(&opts.out_dir.join(MESH_FILE), &mesh_json(&mesh))?;
    }

    let outcome = if cfg.command == Command::Sweep {
        Ok(run_sweep(cfg, &mesh, opts)?)
    } else {
        let params = cfg.params().build()?;
        dispatch(cfg, &mesh, &params)
    };
    let outcome = outcome.unwrap_or_else(|e| Outcome {
        status: Status::Failed,
        results: json!({ "error": e.to_string() }),
        history: Vec::new(),
        state: None,
    });

    let params = cfg.params.as_ref().map(|p| params_json(p.p, p.q, p.alpha, p.beta()));
    write_outcome(&opts.out_dir, cfg, cfg.command.name(), params, warnings, &mesh, outcome)
}

/// Writes `result.json`, `history.csv`, and (when there is a state)
/// `eigenfunction.csv` into `dir`.
fn write_outcome(
    dir: &Path,
    cfg: &RunConfig,
    command: &str,
    params: Option<Value>,
    diagnostics: Vec<Value>,
    mesh: &Mesh,
    outcome: Outcome,
) -> Result<Status, CliError> {
    let doc = json!({
        "command": command,
        "status": outcome.status.label(),
        "converged": outcome.status == Status::Converged,
        "timestamp": timestamp(),
        "seed": cfg.seed,
        "params": params,
        "mesh": mesh_summary(&cfg.mesh, mesh),
        "solver": serde_json::to_value(&cfg.solver).expect("solver options serialize"),
        "diagnostics": diagnostics,
        "results": outcome.results,
    });
    write_json(&dir.join(RESULT_FILE), &doc)?;
    write_history(&dir.join(HISTORY_FILE), &outcome.history)?;
    if let Some(z) = &outcome.state {
        write_eigenfunction(&dir.join(EIGENFUNCTION_FILE), mesh, z)?;
    }
    Ok(outcome.status)
}

fn dispatch(cfg: &RunConfig, mesh: &Mesh, params: &Params) -> pqlap_core::Result<Outcome> {
    let opts = cfg.solver_options();
    match cfg.command {
        Command::Eigen1 => eigen1(cfg, mesh, params, &opts),
        Command::Eigen2 => eigen2(mesh, params, &opts),
        Command::Picone => picone(cfg, mesh, params, &opts),
        Command::Classify => classify(cfg, mesh, params, &opts),
        Command::Resonant => resonant(cfg, mesh, params, &opts),
        Command::Isolation => isolation(cfg, mesh, params, &opts),
        Command::Sweep => unreachable!("handled by run_sweep"),
    }
}

fn params_json(p: f64, q: f64, alpha: f64, beta: f64) -> Value {
    json!({ "p": p, "q": q, "alpha": alpha, "beta": beta })
}

fn mesh_summary(spec: &MeshSpec, mesh: &Mesh) -> Value {
    let mut v = serde_json::to_value(spec).expect("mesh spec serializes");
    let map = v.as_object_mut().expect("tagged enum is an object");
    map.insert("dim".into(), json!(mesh.dim()));
    map.insert("vertices".into(), json!(mesh.vertex_count()));
    map.insert("elements".into(), json!(mesh.element_count()));
    v
}

fn signs_json(s: &SignCounts) -> Value {
    json!({ "u_pos": s.u_pos, "u_neg": s.u_neg, "v_pos": s.v_pos, "v_neg": s.v_neg })
}

fn eigen_json(mesh: &Mesh, params: &Params, r: &EigenResult) -> pqlap_core::Result<Value> {
    Ok(json!({
        "lambda": r.lambda,
        "residual": r.residual,
        "iterations": r.iterations,
        "converged": r.converged,
        "phi": phi(mesh, params, &r.z)?,
        "psi": psi(mesh, params, &r.z)?,
        "sign_counts": signs_json(&check_sign_structure(mesh, &r.z)),
    }))
}

fn eigen1(cfg: &RunConfig, mesh: &Mesh, params: &Params, opts: &SolverOptions) -> pqlap_core::Result<Outcome> {
    let first = solve_lambda1(mesh, params, opts, None)?;
    let signs = check_sign_structure(mesh, &first.z);
    let mut results = json!({
        "lambda1": first.lambda,
        "residual": first.residual,
        "first": eigen_json(mesh, params, &first)?,
        "positive": signs.both_positive(),
    });
    let mut ok = first.converged;
    if cfg.eigen.simplicity {
        let rep = simplicity_check(mesh, params, opts)?;
        ok &= rep.failed.is_empty();
        results["simplicity"] = json!({
            "runs": rep.runs,
            "failed": rep.failed,
            "max_deviation": rep.max_deviation,
            "lambda_spread": rep.lambda_spread,
            "lambdas": rep.lambdas,
        });
    }
    Ok(Outcome { status: Status::from_converged(ok), results, history: first.history, state: Some(first.z) })
}

/// λ1 then λ2; stops after λ1 if that does not converge.
fn both_eigenpairs(
    mesh: &Mesh,
    params: &Params,
    opts: &SolverOptions,
) -> pqlap_core::Result<(EigenResult, Option<EigenResult>)> {
    let first = solve_lambda1(mesh, params, opts, None)?;
    if !first.converged {
        return Ok((first, None));
    }
    let second = solve_lambda2(mesh, params, opts, &first)?;
    Ok((first, Some(second)))
}

fn eigen2(mesh: &Mesh, params: &Params, opts: &SolverOptions) -> pqlap_core::Result<Outcome> {
    let (first, second) = both_eigenpairs(mesh, params, opts)?;
    let Some(second) = second else {
        return Ok(Outcome {
            status: Status::NotConverged,
            results: json!({ "lambda1": first.lambda, "first": eigen_json(mesh, params, &first)? }),
            history: first.history,
            state: Some(first.z),
        });
    };
    let signs = check_sign_structure(mesh, &second.z);
    let results = json!({
        "lambda1": first.lambda,
        "lambda2": second.lambda,
        "residual": second.residual,
        "first": eigen_json(mesh, params, &first)?,
        "second": eigen_json(mesh, params, &second)?,
        "both_change_sign": signs.both_change_sign(),
    });
    Ok(Outcome {
        status: Status::from_converged(second.converged),
        results,
        history: second.history,
        state: Some(second.z),
    })
}

fn field_values(mesh: &Mesh, spec: &FieldSpec, first: Option<&EigenResult>) -> Vec<f64> {
    let raw: Vec<f64> = match *spec {
        FieldSpec::Bump { scale } => bump(mesh).into_iter().map(|x| scale * x).collect(),
        FieldSpec::Sine { scale, kx, ky } => sine_mode(mesh, kx, ky).into_iter().map(|x| scale * x).collect(),
        FieldSpec::Eigen { component, scale } => {
            let z = canonical_signs(mesh, &first.expect("eigenpair solved when requested").z);
            let w = if component == Component::U { z.u } else { z.v };
            w.into_iter().map(|x| scale * x).collect()
        }
    };
    raw.into_iter().map(|x| x.max(0.0)).collect()
}

fn picone(cfg: &RunConfig, mesh: &Mesh, params: &Params, opts: &SolverOptions) -> pqlap_core::Result<Outcome> {
    let spec = cfg.picone.as_ref().expect("validated");
    let mut history = Vec::new();
    let mut status = Status::Converged;
    let first = if spec.u.needs_eigenpair() || spec.v.needs_eigenpair() {
        let first = solve_lambda1(mesh, params, opts, None)?;
        status = Status::from_converged(first.converged);
        history = first.history.clone();
        Some(first)
    } else {
        None
    };
    let u = field_values(mesh, &spec.u, first.as_ref());
    let v = field_values(mesh, &spec.v, first.as_ref());
    let rep = verify_picone(mesh, spec.r, &u, &v, spec.tol)?;
    let fields = picone_fields(mesh, spec.r, &u, &v)?;
    let max_l = fields.l_values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let results = json!({
        "r": spec.r,
        "tol": spec.tol,
        "identity_gap": rep.identity_gap,
        "min_l": rep.min_l,
        "max_l": max_l,
        "pass": rep.pass,
        "elements": fields.l_values.len(),
    });
    Ok(Outcome { status, results, history, state: Some(StateVector { u, v }) })
}

fn regime_label(r: Regime) -> &'static str {
    match r {
        Regime::Coercive => "coercive",
        Regime::Saddle => "saddle",
        Regime::None => "none",
    }
}

fn classification_json(rep: &LLReport) -> Value {
    let quad = |a: &[f64; 4]| json!({ "pp": a[0], "pm": a[1], "mp": a[2], "mm": a[3] });
    let mut holds = Map::new();
    let conditions = match rep.case {
        ExponentOrder::Less => [7, 8],
        ExponentOrder::Equal => [9, 10],
        ExponentOrder::Greater => [11, 12],
    };
    for k in conditions {
        holds.insert(k.to_string(), json!(rep.holds(k)));
    }
    json!({
        "regime": regime_label(rep.regime),
        "case": match rep.case {
            ExponentOrder::Less => "p<q",
            ExponentOrder::Equal => "p=q",
            ExponentOrder::Greater => "p>q",
        },
        "borderline": rep.borderline,
        "conditions": holds,
        "integrals": {
            "fs_phi": quad(&rep.integrals.fs_phi),
            "ft_psi": quad(&rep.integrals.ft_psi),
            "h1_phi": rep.integrals.h1_phi,
            "h2_psi": rep.integrals.h2_psi,
        },
    })
}

struct Classified {
    first: EigenResult,
    h1: Vec<f64>,
    h2: Vec<f64>,
    report: LLReport,
    json: Value,
}

const LIMIT_PROBE: f64 = 1e8;
const LIMIT_TOL: f64 = 1e-6;
const BOUND_SAMPLES: usize = 1000;

/// λ1, forcings, spot checks of the nonlinearity, and the classification.
/// `None` when λ1 does not converge.
fn classify_problem(
    spec: &ResonanceSpec,
    mesh: &Mesh,
    params: &Params,
    opts: &SolverOptions,
) -> pqlap_core::Result<(EigenResult, Option<Classified>)> {
    let first = solve_lambda1(mesh, params, opts, None)?;
    if !first.converged {
        return Ok((first, None));
    }
    let nl = spec.nonlinearity.build();
    let largest = check_bound(&nl, mesh, opts.seed, BOUND_SAMPLES)?;
    let limit_gap = check_limits(&nl, mesh, LIMIT_PROBE, LIMIT_TOL)?;
    let unit = normalize_eigenpair_unitnorm(mesh, params, &first)?;
    let h1 = spec.h1.build().nodal(mesh, &unit.u)?;
    let h2 = spec.h2.build().nodal(mesh, &unit.v)?;
    let report = ll_classify(mesh, params, &nl, &h1, &h2, &unit)?;
    let mut json = classification_json(&report);
    json["lambda1"] = json!(first.lambda);
    json["spot_checks"] = json!({ "largest_derivative": largest, "bound": nl.bound(), "limit_gap": limit_gap });
    Ok((first.clone(), Some(Classified { first, h1, h2, report, json })))
}

fn classify(cfg: &RunConfig, mesh: &Mesh, params: &Params, opts: &SolverOptions) -> pqlap_core::Result<Outcome> {
    let spec = cfg.resonance.as_ref().expect("validated");
    let (first, classified) = classify_problem(spec, mesh, params, opts)?;
    match classified {
        None => Ok(Outcome {
            status: Status::NotConverged,
            results: json!({ "lambda1": first.lambda, "first": eigen_json(mesh, params, &first)? }),
            history: first.history,
            state: Some(first.z),
        }),
        Some(c) => Ok(Outcome { status: Status::Converged, results: c.json, history: first.history, state: Some(first.z) }),
    }
}

fn solution_json(s: &ResonantSolution) -> Value {
    let monotone = s.history.windows(2).all(|w| w[1].value <= w[0].value);
    json!({
        "j": s.j,
        "residual": s.residual,
        "iterations": s.iterations,
        "converged": s.converged,
        "j_history_monotone": monotone,
    })
}

fn branch_label(b: Branch) -> &'static str {
    match b {
        Branch::Aligned => "aligned",
        Branch::Mirrored => "mirrored",
    }
}

fn resonant(cfg: &RunConfig, mesh: &Mesh, params: &Params, opts: &SolverOptions) -> pqlap_core::Result<Outcome> {
    let spec = cfg.resonance.as_ref().expect("validated");
    let (first, classified) = classify_problem(spec, mesh, params, opts)?;
    let Some(c) = classified else {
        return Ok(Outcome {
            status: Status::NotConverged,
            results: json!({ "lambda1": first.lambda, "first": eigen_json(mesh, params, &first)? }),
            history: first.history,
            state: Some(first.z),
        });
    };
    let regime = match spec.regime {
        RegimeChoice::Coercive => Regime::Coercive,
        RegimeChoice::Saddle => Regime::Saddle,
        RegimeChoice::Auto => c.report.regime,
    };
    let mut results = json!({ "classification": c.json, "regime_used": regime_label(regime) });
    let nl = spec.nonlinearity.build();
    let data = ResonantData::new(&nl, &c.h1, &c.h2, c.first.lambda);
    let j_at_zero = j_value(mesh, params, &StateVector::zeros(mesh.vertex_count()), &data)?;
    results["j_at_zero"] = json!(j_at_zero);
    match regime {
        Regime::None => Ok(Outcome { status: Status::NoRegime, results, history: Vec::new(), state: None }),
        Regime::Coercive => {
            let sol = solve_coercive(mesh, params, &nl, &c.h1, &c.h2, &c.first, opts)?;
            results["solution"] = solution_json(&sol);
            Ok(Outcome { status: Status::from_converged(sol.converged), results, history: sol.history, state: Some(sol.z) })
        }
        Regime::Saddle => {
            let second = solve_lambda2(mesh, params, opts, &c.first)?;
            results["lambda2"] = json!(second.lambda);
            results["lambda2_residual"] = json!(second.residual);
            if !second.converged {
                return Ok(Outcome { status: Status::NotConverged, results, history: second.history, state: Some(second.z) });
            }
            let sad = solve_saddle(mesh, params, &nl, &c.h1, &c.h2, &c.first, &second, opts, spec.theta_big)?;
            let samples: Vec<Value> = sad
                .samples
                .iter()
                .map(|s| json!({ "branch": branch_label(s.branch), "theta": s.theta, "j": s.j }))
                .collect();
            results["solution"] = solution_json(&sad.solution);
            results["saddle"] = json!({
                "theta": sad.theta,
                "j_at_zero": sad.j_at_zero,
                "branch_samples": samples,
                "branches_decreasing": sad.branches_decreasing,
                "endpoint_max_j": sad.endpoint_max_j,
                "path_values": sad.path_values,
                "path_lambda2_gap": sad.path_lambda2_gap,
                "min_path_lambda2_gap": sad.min_path_lambda2_gap,
            });
            Ok(Outcome {
                status: Status::from_converged(sad.solution.converged),
                results,
                history: sad.solution.history,
                state: Some(sad.solution.z),
            })
        }
    }
}

fn isolation(cfg: &RunConfig, mesh: &Mesh, params: &Params, opts: &SolverOptions) -> pqlap_core::Result<Outcome> {
    let (first, second) = both_eigenpairs(mesh, params, opts)?;
    let second = match second {
        Some(s) if s.converged => s,
        other => {
            let mut results = json!({ "first": eigen_json(mesh, params, &first)? });
            if let Some(s) = &other {
                results["second"] = eigen_json(mesh, params, s)?;
            }
            return Ok(Outcome { status: Status::NotConverged, results, history: first.history, state: Some(first.z) });
        }
    };
    let margin = cfg.isolation.margin;
    let range = (first.lambda + margin, second.lambda - margin);
    let points = isolation_scan(mesh, params, opts, &[&first, &second], range, cfg.isolation.n_grid)?;
    let floor = points.iter().map(|p| p.min_residual).fold(f64::INFINITY, f64::min);
    let attained = first.residual.max(second.residual);
    let results = json!({
        "lambda1": first.lambda,
        "lambda2": second.lambda,
        "first": eigen_json(mesh, params, &first)?,
        "second": eigen_json(mesh, params, &second)?,
        "range": [range.0, range.1],
        "points": points.iter().map(|p| json!({ "lambda": p.lambda, "min_residual": p.min_residual })).collect::<Vec<_>>(),
        "floor": floor,
        "tol_residual": opts.tol_residual,
        "attained_residual": attained,
        "floor_ratio": floor / opts.tol_residual,
        "pass": floor >= 10.0 * opts.tol_residual,
    });
    Ok(Outcome { status: Status::Converged, results, history: first.history, state: Some(first.z) })
}

struct CellResult {
    cell: SweepCell,
    status: Status,
    lambda1: Option<f64>,
    lambda2: Option<f64>,
    residual1: Option<f64>,
    residual2: Option<f64>,
    error: Option<String>,
}

fn solve_cell(cfg: &RunConfig, cell: SweepCell, mesh: &Mesh, with_lambda2: bool, dir: &Path) -> Result<CellResult, CliError> {
    let opts = &cfg.solver_options();
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let mut res = CellResult {
        cell,
        status: Status::Failed,
        lambda1: None,
        lambda2: None,
        residual1: None,
        residual2: None,
        error: None,
    };
    let outcome = (|| -> pqlap_core::Result<Outcome> {
        let params = Params::new(cell.p, cell.q, cell.alpha, cell.beta)?;
        let first = solve_lambda1(mesh, &params, opts, None)?;
        res.lambda1 = Some(first.lambda);
        res.residual1 = Some(first.residual);
        let mut results = json!({
            "lambda1": first.lambda,
            "residual": first.residual,
            "first": eigen_json(mesh, &params, &first)?,
        });
        let mut ok = first.converged;
        let mut history = first.history.clone();
        let mut state = first.z.clone();
        if with_lambda2 && first.converged {
            let second = solve_lambda2(mesh, &params, opts, &first)?;
            res.lambda2 = Some(second.lambda);
            res.residual2 = Some(second.residual);
            results["lambda2"] = json!(second.lambda);
            results["residual"] = json!(second.residual);
            results["second"] = eigen_json(mesh, &params, &second)?;
            ok &= second.converged;
            history = second.history;
            state = second.z;
        }
        Ok(Outcome { status: Status::from_converged(ok), results, history, state: Some(state) })
    })();
    let outcome = outcome.unwrap_or_else(|e| {
        res.error = Some(e.to_string());
        Outcome { status: Status::Failed, results: json!({ "error": e.to_string() }), history: Vec::new(), state: None }
    });
    res.status = outcome.status;
    let command = if with_lambda2 { Command::Eigen2 } else { Command::Eigen1 };
    let params = Some(params_json(cell.p, cell.q, cell.alpha, cell.beta));
    write_outcome(dir, cfg, command.name(), params, Vec::new(), mesh, outcome)?;
    Ok(res)
}

/// Cells run on up to `jobs` threads, each in its own `cell_NNN` directory;
/// the summary is assembled in cell order.
fn run_sweep(cfg: &RunConfig, mesh: &Mesh, opts: &RunOptions) -> Result<Outcome, CliError> {
    let spec = cfg.sweep.as_ref().expect("validated");
    let cells = spec.cells();
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<Result<CellResult, CliError>>>> = Mutex::new((0..cells.len()).map(|_| None).collect());
    std::thread::scope(|scope| {
        for _ in 0..opts.jobs.clamp(1, cells.len().max(1)) {
            scope.spawn(|| loop {
                let k = next.fetch_add(1, Ordering::SeqCst);
                let Some(&cell) = cells.get(k) else { break };
                let dir = opts.out_dir.join(format!("cell_{k:03}"));
                let r = solve_cell(cfg, cell, mesh, spec.lambda2, &dir);
                slots.lock().expect("no panics while holding the lock")[k] = Some(r);
            });
        }
    });
    let mut done = Vec::with_capacity(cells.len());
    for slot in slots.into_inner().expect("threads joined") {
        done.push(slot.expect("every cell ran")?);
    }

    let opt = |x: Option<f64>| x.map(format_float).unwrap_or_default();
    let rows: Vec<Vec<String>> = done
        .iter()
        .map(|r| {
            vec![
                format_float(r.cell.p),
                format_float(r.cell.q),
                format_float(r.cell.alpha),
                format_float(r.cell.beta),
                opt(r.lambda1),
                opt(r.lambda2),
                opt(r.residual1),
                opt(r.residual2),
                r.status.label().to_string(),
            ]
        })
        .collect();
    write_csv(
        &opts.out_dir.join(SWEEP_FILE),
        &["p", "q", "alpha", "beta", "lambda1", "lambda2", "residual1", "residual2", "status"],
        &rows,
    )?;
    let all_ok = done.iter().all(|r| r.status == Status::Converged);
    let cells_json: Vec<Value> = done
        .iter()
        .map(|r| {
            json!({
                "index": r.cell.index,
                "params": params_json(r.cell.p, r.cell.q, r.cell.alpha, r.cell.beta),
                "lambda1": r.lambda1,
                "lambda2": r.lambda2,
                "residual1": r.residual1,
                "residual2": r.residual2,
                "status": r.status.label(),
                "error": r.error,
            })
        })
        .collect();
    Ok(Outcome {
        status: Status::from_converged(all_ok),
        results: json!({ "cells": cells_json }),
        history: Vec::new(),
        state: None,
    })
}

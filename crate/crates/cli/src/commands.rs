//! The four drivers. Each writes its files into an [`OutDir`] and returns the
//! JSON summary it wrote.

use std::time::{Instant, SystemTime, UNIX_EPOCH};

use laxol::{
    estimate_hbar_drift, estimate_hbar_matrix, evolve_observed, EffectiveHEstimate, EvolutionTrace, EvolveOptions,
    GridFn,
};
use serde_json::{json, Value};

use crate::config::{Built, EpsRule, InitialConfig, KineticConfig, PotentialConfig, RunConfig, TauSpec};
use crate::error::CliError;
use crate::output::{sha256_hex, Cell, OutDir};

#[derive(Clone, Copy, Debug, Default)]
pub struct Options {
    /// Write `u(t,·) - u(t, x_min)` in snapshot files.
    pub rescale_left: bool,
}

fn metadata(cfg: &RunConfig, command: &str) -> Value {
    let resolved = cfg.resolved();
    let text = serde_json::to_string(&resolved).expect("config serializes");
    json!({
        "command": command,
        "code_version": env!("CARGO_PKG_VERSION"),
        "config_hash": sha256_hex(text.as_bytes()),
        "config": resolved,
    })
}

fn merge(mut base: Value, extra: Value) -> Value {
    if let (Value::Object(a), Value::Object(b)) = (&mut base, extra) {
        a.extend(b);
    }
    base
}

fn write_timing(out: &OutDir, command: &str, total: f64, extra: Value) -> Result<(), CliError> {
    let timestamp = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    out.write_json(
        "timing.json",
        &merge(
            json!({"command": command, "total_seconds": total, "timestamp_unix": timestamp}),
            extra,
        ),
    )
}

/// Whole number of steps covering `duration`.
pub fn steps_for(duration: f64, tau: f64) -> Result<usize, CliError> {
    if !(duration >= 0.0) {
        return Err(CliError::Config(format!("negative duration {duration}")));
    }
    let r = duration / tau;
    let n = r.round();
    if (n - r).abs() > 1e-6 * r.max(1.0) {
        return Err(CliError::Config(format!(
            "duration {duration} is not a whole number of steps of size {tau}"
        )));
    }
    Ok(n as usize)
}

fn horizon(cfg: &RunConfig, tau: f64) -> Result<usize, CliError> {
    match (cfg.run.steps, cfg.run.t_final) {
        (Some(n), None) => Ok(n),
        (None, Some(t)) => steps_for(t - cfg.run.t0, tau),
        _ => Err(CliError::Config("run needs exactly one of t_final and steps".into())),
    }
}

fn track_index(b: &Built, x: f64) -> Result<usize, CliError> {
    let n = b.u0.len() as isize;
    let k = ((x - b.x_min) / b.eps()).round() as isize;
    if b.u0.is_periodic() {
        Ok(k.rem_euclid(n) as usize)
    } else if (0..n).contains(&k) {
        Ok(k as usize)
    } else {
        Err(CliError::Config(format!("tracked point {x} lies outside the domain")))
    }
}

fn snapshot_rows(u: &GridFn, rescale_left: bool) -> Vec<Vec<Cell>> {
    let shift = if rescale_left { u.values()[0] } else { 0.0 };
    u.coordinates()
        .zip(u.values())
        .map(|(x, v)| vec![Cell::Float(x), Cell::Float(v - shift)])
        .collect()
}

fn mean_blocks(trace: &EvolutionTrace) -> f64 {
    if trace.per_step.is_empty() {
        return 0.0;
    }
    trace.per_step.iter().map(|r| r.blocks as f64).sum::<f64>() / trace.per_step.len() as f64
}

fn initial_trace(u0: &GridFn, t0: f64, tau: f64) -> EvolutionTrace {
    EvolutionTrace {
        t0,
        tau,
        snapshots: vec![u0.clone()],
        snapshot_steps: vec![0],
        times: vec![t0],
        per_step: Vec::new(),
    }
}

/// Runs the scheme; a blow-up yields the partial trace and the failing step.
fn run_scheme(
    b: &Built,
    t0: f64,
    steps: usize,
    options: &EvolveOptions,
    observe: impl FnMut(usize, &GridFn),
) -> Result<(EvolutionTrace, Option<usize>), CliError> {
    if steps == 0 {
        return Ok((initial_trace(&b.u0, t0, b.params.tau()), None));
    }
    match evolve_observed(&b.u0, t0, steps, &b.spec, &b.params, options, observe) {
        Ok(trace) => Ok((trace, None)),
        Err(laxol::Error::NonFinite { step, partial }) => Ok((*partial, Some(step))),
        Err(e) => Err(e.into()),
    }
}

/// Least-squares line `y ≈ intercept + slope·x`.
pub fn fit_line(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    (slope, my - slope * mx)
}

pub fn evolve(cfg: &RunConfig, out: &OutDir, opts: Options) -> Result<Value, CliError> {
    let b = cfg.build()?;
    let tau = b.params.tau();
    let t0 = cfg.run.t0;
    let steps = horizon(cfg, tau)?;
    let mut wanted = cfg
        .run
        .snapshot_times
        .iter()
        .map(|&t| steps_for(t - t0, tau))
        .collect::<Result<Vec<_>, _>>()?;
    if let Some(&s) = wanted.iter().find(|&&s| s > steps) {
        return Err(CliError::Config(format!("snapshot step {s} lies beyond the last step {steps}")));
    }
    if wanted.is_empty() {
        wanted = vec![0, steps];
    }
    wanted.sort_unstable();
    wanted.dedup();
    let track = match &cfg.run.track_x {
        Some(x) => Some((x.value()?, track_index(&b, x.value()?)?)),
        None => None,
    };
    let mut trajectory: Vec<(f64, f64)> = track
        .map(|(_, i)| vec![(t0, b.u0.values()[i])])
        .unwrap_or_default();

    // One analysis period before the end, for the stationarity measure.
    let period_steps = b
        .spec
        .analysis_period()
        .and_then(|p| steps_for(p, tau).ok())
        .filter(|&l| l > 0 && l <= steps);
    let mut keep = wanted.clone();
    keep.extend(period_steps.map(|l| steps - l));
    let options = EvolveOptions {
        stride: cfg.run.snapshot_stride,
        keep_steps: keep,
    };
    let clock = Instant::now();
    let (trace, failed) = run_scheme(&b, t0, steps, &options, |n, u| {
        if let Some((_, i)) = track {
            trajectory.push((t0 + n as f64 * tau, u.values()[i]));
        }
    })?;
    let total = clock.elapsed().as_secs_f64();

    let csv = cfg.output.csv();
    let mut snapshots = Vec::new();
    if cfg.output.wants("snapshots") {
        for &s in &wanted {
            if let Some(u) = trace.at_step(s) {
                let file = format!("snapshot_step{s:07}.csv");
                if csv {
                    out.write_csv(&file, &["x", "u"], &snapshot_rows(u, opts.rescale_left))?;
                }
                snapshots.push(json!({"step": s, "time": t0 + s as f64 * tau, "file": file}));
            }
        }
        if failed.is_some() {
            let s = *trace.snapshot_steps.last().expect("initial state");
            let file = "snapshot_last_finite.csv".to_string();
            if csv {
                out.write_csv(&file, &["x", "u"], &snapshot_rows(trace.last(), opts.rescale_left))?;
            }
            snapshots.push(json!({"step": s, "time": t0 + s as f64 * tau, "file": file}));
        }
    }
    let per_step: Vec<Value> = trace
        .per_step
        .iter()
        .map(|r| json!({"step": r.step, "time": r.time, "blocks": r.blocks, "drift": r.drift}))
        .collect();
    if cfg.output.wants("steps") && csv {
        let rows: Vec<Vec<Cell>> = trace
            .per_step
            .iter()
            .map(|r| vec![r.step.into(), r.time.into(), r.blocks.into(), r.drift.into()])
            .collect();
        out.write_csv("steps.csv", &["step", "time", "blocks", "drift"], &rows)?;
    }
    if track.is_some() && cfg.output.wants("trajectory") && csv {
        let rows: Vec<Vec<Cell>> = trajectory.iter().map(|&(t, u)| vec![t.into(), u.into()]).collect();
        out.write_csv("trajectory.csv", &["time", "u"], &rows)?;
    }

    // Oscillation of u(t) - u(t - period): zero once the solution is
    // stationary up to its drift.
    let period_change = match (failed, period_steps) {
        (None, Some(l)) => trace.at_step(steps - l).map(|u| {
            let d: Vec<f64> = trace.last().values().iter().zip(u.values()).map(|(a, b)| a - b).collect();
            let (lo, hi) = d.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
            json!({"period_steps": l, "oscillation": hi - lo, "mean_increment": d.iter().sum::<f64>() / d.len() as f64})
        }),
        _ => None,
    };
    let summary = merge(
        metadata(cfg, "evolve"),
        json!({
            "status": if failed.is_some() { "non_finite" } else { "ok" },
            "failed_step": failed,
            "n_space": b.params.n_space(),
            "eps": b.eps(),
            "tau": tau,
            "eta": b.params.eta(),
            "t0": t0,
            "steps_requested": steps,
            "steps_completed": trace.steps(),
            "t_final": trace.final_time(),
            "rescale_left": opts.rescale_left,
            "snapshots": snapshots,
            "blocks_mean": mean_blocks(&trace),
            "blocks_max": trace.per_step.iter().map(|r| r.blocks).max().unwrap_or(0),
            "final_drift": trace.per_step.last().map(|r| r.drift),
            "period_change": period_change,
            "track": track.map(|(x, i)| json!({"x": x, "index": i, "grid_x": b.u0.x(i)})),
            "per_step": if cfg.output.wants("steps") { Value::from(per_step) } else { Value::Null },
        }),
    );
    if cfg.output.json() {
        out.write_json("summary.json", &summary)?;
    }
    let wall: Vec<f64> = trace.per_step.iter().map(|r| r.wall_seconds).collect();
    write_timing(out, "evolve", total, json!({"step_wall_seconds": wall}))?;
    if let Some(step) = failed {
        return Err(CliError::Numeric(format!(
            "non-finite values at step {step}; partial outputs written"
        )));
    }
    Ok(summary)
}

/// Exact solution of `u_t + ½(u_x + P)² = 0` with `u(0,x) = a|x - c|`, `a ≥ 0`.
pub fn hopf_lax_abs(x: f64, t: f64, slope: f64, center: f64, drift: f64) -> f64 {
    let z = x - center - drift * t;
    let envelope = if z.abs() < slope * t {
        z * z / (2.0 * t)
    } else {
        slope * z.abs() - slope * slope * t / 2.0
    };
    envelope - drift * drift * t / 2.0
}

pub fn convergence(cfg: &RunConfig, out: &OutDir, _opts: Options) -> Result<Value, CliError> {
    let conv = cfg
        .convergence
        .as_ref()
        .ok_or_else(|| CliError::Config("convergence needs a \"convergence\" section".into()))?;
    let drift = match cfg.problem.kinetic {
        KineticConfig::Mechanical { drift } => drift,
        _ => return Err(CliError::Config("convergence needs a mechanical kinetic part".into())),
    };
    if !matches!(cfg.problem.potential, PotentialConfig::Zero) {
        return Err(CliError::Config("convergence needs a zero potential (exact solution)".into()));
    }
    let (slope, center) = match cfg.problem.initial {
        InitialConfig::Abs { slope, center } if slope >= 0.0 => (slope, center),
        _ => return Err(CliError::Config("convergence needs an abs initial condition with slope >= 0".into())),
    };
    if cfg.problem.domain.periodic {
        return Err(CliError::Config("convergence runs on a non-periodic domain".into()));
    }
    let t0 = cfg.run.t0;
    let t_final = cfg
        .run
        .t_final
        .ok_or_else(|| CliError::Config("convergence needs run.t_final".into()))?;
    let length = cfg.problem.domain.length.value()?;
    let x_min = cfg.problem.domain.x_min.value()?;
    let window = match &conv.error_window {
        Some([a, b]) => (a.value()?, b.value()?),
        None => (x_min, x_min + length),
    };

    let clock = Instant::now();
    let mut rows = Vec::new();
    let mut errors = Vec::new();
    let mut hs = Vec::new();
    for &tau in &conv.taus {
        let eps = match conv.eps_rule {
            EpsRule::TauSquared => tau * tau,
            EpsRule::FixedRatio => conv.ratio.expect("validated") * tau,
        };
        let n = (length / eps).round() as usize;
        if n < 2 {
            return Err(CliError::Config(format!("tau = {tau} gives fewer than two grid points")));
        }
        let b = cfg.build_with(n, &TauSpec::Value(tau), &cfg.discretization.eta)?;
        let steps = steps_for(t_final - t0, tau)?;
        if steps == 0 {
            return Err(CliError::Config("convergence needs t_final > t0".into()));
        }
        let (trace, failed) = run_scheme(&b, t0, steps, &EvolveOptions::every(steps), |_, _| {})?;
        if let Some(step) = failed {
            return Err(CliError::Numeric(format!("tau = {tau}: non-finite values at step {step}")));
        }
        let elapsed = steps as f64 * tau;
        let u = trace.last();
        let err = u
            .coordinates()
            .zip(u.values())
            .filter(|(x, _)| *x >= window.0 && *x <= window.1)
            .map(|(x, v)| (v - hopf_lax_abs(x, elapsed, slope, center, drift)).abs())
            .fold(0.0, f64::max);
        let h = b.eps() / tau + tau;
        errors.push(err);
        hs.push(h);
        rows.push(json!({
            "tau": tau,
            "eps": b.eps(),
            "n_space": n,
            "steps": steps,
            "h": h,
            "error": err,
            "mean_blocks": mean_blocks(&trace),
        }));
    }
    let orders: Vec<f64> = (1..errors.len())
        .map(|i| (errors[i - 1] / errors[i]).ln() / (hs[i - 1] / hs[i]).ln())
        .collect();
    let fitted = if errors.len() >= 2 {
        let lx: Vec<f64> = hs.iter().map(|h| h.ln()).collect();
        let ly: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
        Some(fit_line(&lx, &ly).0)
    } else {
        None
    };
    let decreasing = errors.windows(2).all(|w| w[1] < w[0]);
    let order_ok = fitted.is_none_or(|p| p >= conv.min_order);
    let checks = json!([
        {"name": "error_decreases", "passed": decreasing},
        {"name": "fitted_order", "passed": order_ok, "value": fitted, "min": conv.min_order},
    ]);

    if cfg.output.csv() {
        let table: Vec<Vec<Cell>> = rows
            .iter()
            .map(|r| {
                vec![
                    r["tau"].as_f64().unwrap().into(),
                    r["eps"].as_f64().unwrap().into(),
                    (r["n_space"].as_u64().unwrap() as usize).into(),
                    (r["steps"].as_u64().unwrap() as usize).into(),
                    r["h"].as_f64().unwrap().into(),
                    r["error"].as_f64().unwrap().into(),
                    r["mean_blocks"].as_f64().unwrap().into(),
                ]
            })
            .collect();
        out.write_csv(
            "convergence.csv",
            &["tau", "eps", "n_space", "steps", "h", "error", "mean_blocks"],
            &table,
        )?;
    }
    let report = merge(
        metadata(cfg, "convergence"),
        json!({"rows": rows, "observed_orders": orders, "fitted_order": fitted, "checks": checks}),
    );
    if cfg.output.json() {
        out.write_json("report.json", &report)?;
    }
    write_timing(out, "convergence", clock.elapsed().as_secs_f64(), json!({}))?;
    if !(decreasing && order_ok) {
        return Err(CliError::Check(format!(
            "convergence checks failed (decreasing: {decreasing}, fitted order: {fitted:?})"
        )));
    }
    Ok(report)
}

pub fn tolsweep(cfg: &RunConfig, out: &OutDir, _opts: Options) -> Result<Value, CliError> {
    let sweep = cfg
        .tolsweep
        .as_ref()
        .ok_or_else(|| CliError::Config("tolsweep needs a \"tolsweep\" section".into()))?;
    let base = cfg.build()?;
    let tau = base.params.tau();
    let steps = horizon(cfg, tau)?;
    if steps == 0 {
        return Err(CliError::Config("tolsweep needs at least one step".into()));
    }
    let etas = sweep
        .etas
        .iter()
        .map(|e| crate::config::resolve_eta(e, base.params.n_space()))
        .collect::<Result<Vec<_>, _>>()?;
    let baseline = etas
        .iter()
        .position(|&e| e == 0.0)
        .ok_or_else(|| CliError::Config("tolsweep.etas must include 0".into()))?;

    let mut finals = Vec::new();
    let mut stats = Vec::new();
    let mut runtimes = Vec::new();
    for &eta in &etas {
        let b = cfg.build_with(
            cfg.discretization.n_space,
            &cfg.discretization.tau,
            &crate::config::EtaSpec::Value(eta),
        )?;
        let clock = Instant::now();
        let (trace, failed) = run_scheme(&b, cfg.run.t0, steps, &EvolveOptions::every(steps), |_, _| {})?;
        runtimes.push(json!({"eta": eta, "seconds": clock.elapsed().as_secs_f64()}));
        if let Some(step) = failed {
            return Err(CliError::Numeric(format!("eta = {eta}: non-finite values at step {step}")));
        }
        let blocks: Vec<usize> = trace.per_step.iter().map(|r| r.blocks).collect();
        let tail = &blocks[blocks.len() - (blocks.len() / 4).max(1)..];
        stats.push((
            mean_blocks(&trace),
            *blocks.iter().max().expect("steps > 0"),
            tail.iter().sum::<usize>() as f64 / tail.len() as f64,
            *blocks.last().expect("steps > 0"),
        ));
        finals.push(trace.last().clone());
    }
    let reference = finals[baseline].clone();
    let rows: Vec<Value> = etas
        .iter()
        .zip(&finals)
        .zip(&stats)
        .map(|((&eta, u), &(mean, max, tail, last))| {
            json!({
                "eta": eta,
                "deviation": u.sup_distance(&reference),
                "mean_blocks": mean,
                "max_blocks": max,
                "tail_mean_blocks": tail,
                "final_blocks": last,
            })
        })
        .collect();
    if cfg.output.csv() {
        let table: Vec<Vec<Cell>> = rows
            .iter()
            .map(|r| {
                vec![
                    r["eta"].as_f64().unwrap().into(),
                    r["deviation"].as_f64().unwrap().into(),
                    r["mean_blocks"].as_f64().unwrap().into(),
                    (r["max_blocks"].as_u64().unwrap() as usize).into(),
                    r["tail_mean_blocks"].as_f64().unwrap().into(),
                    (r["final_blocks"].as_u64().unwrap() as usize).into(),
                ]
            })
            .collect();
        out.write_csv(
            "tolsweep.csv",
            &["eta", "deviation", "mean_blocks", "max_blocks", "tail_mean_blocks", "final_blocks"],
            &table,
        )?;
    }
    let report = merge(
        metadata(cfg, "tolsweep"),
        json!({
            "n_space": base.params.n_space(),
            "eps": base.eps(),
            "tau": tau,
            "steps": steps,
            "rows": rows,
        }),
    );
    if cfg.output.json() {
        out.write_json("report.json", &report)?;
    }
    let total: f64 = runtimes.iter().map(|r| r["seconds"].as_f64().unwrap()).sum();
    write_timing(out, "tolsweep", total, json!({"runs": runtimes}))?;
    Ok(report)
}

fn estimate_json(e: &Option<EffectiveHEstimate>) -> Value {
    match e {
        Some(e) => json!({
            "h_bar": e.h_bar,
            "n_steps": e.n_steps,
            "residual": e.residual,
            "converged": e.converged,
            "cycle": e.cycle,
        }),
        None => Value::Null,
    }
}

fn opt_cell(v: Option<f64>) -> Cell {
    v.map(Cell::Float).unwrap_or(Cell::Text(String::new()))
}

pub fn hbar(cfg: &RunConfig, out: &OutDir, _opts: Options) -> Result<Value, CliError> {
    let hc = cfg
        .hbar
        .as_ref()
        .ok_or_else(|| CliError::Config("hbar needs an \"hbar\" section".into()))?;
    let points: Vec<(usize, TauSpec)> = if hc.ladder.is_empty() {
        vec![(cfg.discretization.n_space, cfg.discretization.tau.clone())]
    } else {
        hc.ladder.iter().map(|p| (p.n_space, p.tau.clone())).collect()
    };
    let clock = Instant::now();
    let mut rows = Vec::new();
    let mut table = Vec::new();
    let mut fit_points = Vec::new();
    let mut all_estimates = Vec::new();
    for (n, tau) in &points {
        let b = cfg.build_with(*n, tau, &cfg.discretization.eta)?;
        let tol = hc.tol.unwrap_or(if b.spec.is_autonomous() {
            laxol::weakkam::DEFAULT_FIXED_POINT_TOL
        } else {
            laxol::weakkam::DEFAULT_DRIFT_TOL
        });
        let mut notes = Vec::new();
        let drift = match estimate_hbar_drift(&b.u0, &b.spec, &b.params, hc.max_periods, tol) {
            Ok(e) => Some(e),
            Err(laxol::Error::InvalidInput(m)) => {
                notes.push(format!("drift skipped: {m}"));
                None
            }
            Err(e) => return Err(e.into()),
        };
        let matrix = if *n <= hc.matrix_max_n {
            match estimate_hbar_matrix(&b.spec, &b.params, b.x_min) {
                Ok(e) => Some(e),
                Err(laxol::Error::InvalidInput(m)) => {
                    notes.push(format!("matrix skipped: {m}"));
                    None
                }
                Err(e) => return Err(e.into()),
            }
        } else {
            notes.push(format!("matrix skipped: n_space {n} > matrix_max_n {}", hc.matrix_max_n));
            None
        };
        let agreement = match (&drift, &matrix) {
            (Some(d), Some(m)) => Some((d.h_bar - m.h_bar).abs()),
            _ => None,
        };
        let h = b.eps() / b.params.tau() + b.params.tau();
        if let Some(e) = drift.as_ref().or(matrix.as_ref()) {
            fit_points.push((h, e.h_bar));
        }
        all_estimates.extend(drift.iter().chain(matrix.iter()).map(|e| e.h_bar));
        table.push(vec![
            (*n).into(),
            b.eps().into(),
            b.params.tau().into(),
            opt_cell(drift.as_ref().map(|e| e.h_bar)),
            drift.as_ref().map(|e| Cell::from(e.converged)).unwrap_or(Cell::Text(String::new())),
            opt_cell(drift.as_ref().map(|e| e.residual)),
            opt_cell(matrix.as_ref().map(|e| e.h_bar)),
            opt_cell(matrix.as_ref().map(|e| e.residual)),
            opt_cell(agreement),
        ]);
        rows.push(json!({
            "n_space": n,
            "eps": b.eps(),
            "tau": b.params.tau(),
            "h": h,
            "drift": estimate_json(&drift),
            "matrix": estimate_json(&matrix),
            "agreement": agreement,
            "notes": notes,
        }));
    }
    let extrapolated = if fit_points.len() >= 2 {
        let xs: Vec<f64> = fit_points.iter().map(|p| p.0).collect();
        let ys: Vec<f64> = fit_points.iter().map(|p| p.1).collect();
        Some(fit_line(&xs, &ys).1)
    } else {
        None
    };
    let mut failures = Vec::new();
    let expected_check = hc.expected.map(|want| {
        let worst = all_estimates.iter().map(|h| (h - want).abs()).fold(0.0, f64::max);
        let passed = !all_estimates.is_empty() && worst <= hc.expected_tol;
        if !passed {
            failures.push(format!("estimates deviate from {want} by {worst}"));
        }
        json!({"expected": want, "max_deviation": worst, "tolerance": hc.expected_tol, "passed": passed})
    });

    let mut trajectory_json = Value::Null;
    let mut failed_step = None;
    if let Some(tr) = &hc.trajectory {
        let b = cfg.build()?;
        let tau = b.params.tau();
        let t0 = cfg.run.t0;
        let steps = steps_for(tr.t_final - t0, tau)?;
        let x = tr.x.value()?;
        let idx = track_index(&b, x)?;
        let mut samples = vec![(t0, b.u0.values()[idx])];
        let (_, failed) = run_scheme(&b, t0, steps, &EvolveOptions::every(steps.max(1)), |n, u| {
            samples.push((t0 + n as f64 * tau, u.values()[idx]));
        })?;
        failed_step = failed;
        let ts: Vec<f64> = samples.iter().map(|s| s.0).collect();
        let us: Vec<f64> = samples.iter().map(|s| s.1).collect();
        let (slope, intercept) = fit_line(&ts, &us);
        let max_residual = ts
            .iter()
            .zip(&us)
            .map(|(t, u)| (u - intercept - slope * t).abs())
            .fold(0.0, f64::max);
        let growth = us.last().expect("initial sample") - us[0];
        if cfg.output.csv() {
            let rows: Vec<Vec<Cell>> = samples.iter().map(|&(t, u)| vec![t.into(), u.into()]).collect();
            out.write_csv("trajectory.csv", &["time", "u"], &rows)?;
        }
        trajectory_json = json!({
            "x": x,
            "grid_x": b.u0.x(idx),
            "steps": samples.len() - 1,
            "slope": slope,
            "intercept": intercept,
            "max_residual": max_residual,
            "growth": growth,
            "relative_residual": if growth != 0.0 { max_residual / growth.abs() } else { f64::INFINITY },
            "status": if failed.is_some() { "non_finite" } else { "ok" },
        });
    }

    if cfg.output.csv() {
        out.write_csv(
            "hbar.csv",
            &[
                "n_space",
                "eps",
                "tau",
                "h_drift",
                "drift_converged",
                "drift_residual",
                "h_matrix",
                "matrix_residual",
                "agreement",
            ],
            &table,
        )?;
    }
    let report = merge(
        metadata(cfg, "hbar"),
        json!({
            "rows": rows,
            "extrapolated": extrapolated,
            "expected_check": expected_check,
            "trajectory": trajectory_json,
        }),
    );
    if cfg.output.json() {
        out.write_json("report.json", &report)?;
    }
    write_timing(out, "hbar", clock.elapsed().as_secs_f64(), json!({}))?;
    if let Some(step) = failed_step {
        return Err(CliError::Numeric(format!(
            "trajectory: non-finite values at step {step}; partial outputs written"
        )));
    }
    if !failures.is_empty() {
        return Err(CliError::Check(failures.join("; ")));
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hopf_lax_abs_matches_direct_minimization() {
        let (a, c, p, t) = (0.37, 0.1, 0.4, 0.8);
        for i in 0..41 {
            let x = -1.0 + i as f64 * 0.05;
            // The y grid contains the kink at c.
            let direct = (-300_000..=300_000)
                .map(|k| {
                    let y = c + k as f64 * 1e-5;
                    a * (y - c).abs() + t * (0.5 * ((x - y) / t).powi(2) - p * (x - y) / t)
                })
                .fold(f64::INFINITY, f64::min);
            assert!((direct - hopf_lax_abs(x, t, a, c, p)).abs() < 1e-8, "{x}");
        }
    }

    #[test]
    fn steps_for_requires_whole_steps() {
        assert_eq!(steps_for(1.0, 0.1).unwrap(), 10);
        assert_eq!(steps_for(0.0, 0.1).unwrap(), 0);
        assert!(steps_for(1.05, 0.1).is_err());
        assert!(steps_for(-1.0, 0.1).is_err());
    }

    #[test]
    fn line_fit_is_exact_on_lines() {
        let xs = [0.0, 1.0, 2.0, 3.0];
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 - 0.5 * x).collect();
        let (s, i) = fit_line(&xs, &ys);
        assert!((s + 0.5).abs() < 1e-15 && (i - 2.0).abs() < 1e-15);
    }
}

//! The four subcommands. Each returns the process exit code; artifacts go to
//! `out` when given and a human-readable summary to `log`.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use mmrd::{
    check_nr_initial, kaplan_threshold, kaplan_y, kaplan_z, local_existence_horizon,
    principal_eigenpair, rayleigh_quotient, riccati_blowup_time, run_pair, run_with, Check,
    Dominance, EigenMethod, EigenPair64, Mesh64, NrVerdict, Overrides, Reaction64, RunOutcome,
    Status,
};
use serde_json::{json, Value};

use crate::error::{CliError, CliResult};
use crate::output::{self, num};
use crate::presets::{expand_preset, parse_sets};
use crate::scenario::{load_scenario, resolve_ref, Scenario};

pub const EXIT_COMPLETED: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_BLOWUP: i32 = 2;
pub const EXIT_ORDERING: i32 = 3;
pub const EXIT_ASSUMPTIONS: i32 = 4;
pub const EXIT_SOLVER: i32 = 5;

/// Where a scenario comes from.
#[derive(Debug, Clone, Default)]
pub struct Source {
    pub scenario: Option<PathBuf>,
    pub preset: Option<String>,
    pub set: Vec<String>,
}

impl Source {
    pub fn is_given(&self) -> bool {
        self.scenario.is_some() || self.preset.is_some()
    }

    /// Loads the scenario and the directory relative paths resolve against.
    pub fn load(&self) -> CliResult<(Scenario, PathBuf)> {
        match (&self.scenario, &self.preset) {
            (Some(_), Some(_)) => Err(CliError::Usage(
                "give either --scenario or --preset, not both".into(),
            )),
            (Some(path), None) => {
                if !self.set.is_empty() {
                    return Err(CliError::Usage("--set applies to presets only".into()));
                }
                let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
                Ok((load_scenario(path)?, base))
            }
            (None, Some(name)) => Ok((
                expand_preset(name, &parse_sets(&self.set)?)?,
                PathBuf::new(),
            )),
            (None, None) => Err(CliError::Usage(
                "one of --scenario or --preset is required".into(),
            )),
        }
    }
}

fn label(sc: &Scenario) -> String {
    match &sc.name {
        Some(n) => format!("scenario={n}"),
        None => "scenario=unnamed".to_string(),
    }
}

fn prepare_out(out: Option<&Path>) -> CliResult<()> {
    if let Some(dir) = out {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    Ok(())
}

fn write_scenario(dir: &Path, file: &str, sc: &Scenario) -> CliResult<()> {
    let path = dir.join(file);
    fs::write(&path, sc.to_json() + "\n").map_err(|e| CliError::io(&path, e))
}

fn say(log: &mut dyn Write, line: String) {
    // Logging to a closed stdout is not worth failing a finished run over.
    let _ = writeln!(log, "{line}");
}

fn status_code(status: &Status<f64>) -> i32 {
    match status {
        Status::Completed => EXIT_COMPLETED,
        Status::Blowup { .. } => EXIT_BLOWUP,
        Status::SolverFailure { .. } => EXIT_SOLVER,
    }
}

fn describe(status: &Status<f64>) -> String {
    match status {
        Status::Completed => "completed".into(),
        Status::Blowup { t_b, ci_width } => {
            format!("blowup T_b={t_b:.6} (ci width {ci_width:.2e})")
        }
        Status::SolverFailure { residual, note } => {
            format!("solver_failure residual={residual:.2e} ({note})")
        }
    }
}

/// Integrates one scenario; writes `trajectory.csv`, `summary.json` and the
/// expanded `scenario.json`.
pub fn cmd_run(sc: &Scenario, out: Option<&Path>, log: &mut dyn Write) -> CliResult<i32> {
    let problem = sc.problem()?;
    let tc = sc.time.time_control();
    let nuclear = match sc.nuclear_coefficients() {
        Some(ab) => Some((
            ab,
            principal_eigenpair(problem.mesh(), EigenMethod::Analytic)?,
        )),
        None => None,
    };
    let mut yz: Vec<(f64, f64)> = Vec::new();
    let mut observe_err: Option<mmrd::Error> = None;
    let traj = run_with(&problem, &tc, |s| {
        if let Some(((a, b), ep)) = &nuclear {
            match (
                kaplan_y(&s.u[1], ep),
                kaplan_z(&s.u[0], &s.u[1], *a, *b, ep),
            ) {
                (Ok(y), Ok(z)) => yz.push((y, z)),
                (Err(e), _) | (_, Err(e)) => observe_err = Some(e),
            }
        }
    })?;
    if let Some(e) = observe_err {
        return Err(e.into());
    }

    say(log, format!("{}: {}", label(sc), describe(&traj.status)));
    say(
        log,
        format!(
            "steps={} final_t={:.6} max_sup={:.6e} min={:.3e}",
            traj.times.len() - 1,
            traj.final_time(),
            traj.sup_series().iter().copied().fold(0.0, f64::max),
            traj.min_values
                .iter()
                .copied()
                .fold(f64::INFINITY, f64::min),
        ),
    );

    if let Some(dir) = out {
        prepare_out(Some(dir))?;
        let yz_ref = nuclear.as_ref().map(|_| yz.as_slice());
        output::write_trajectory_csv(&dir.join("trajectory.csv"), &label(sc), &traj, yz_ref)?;
        let mut summary = output::trajectory_summary(&traj);
        summary["version"] = json!(output::VERSION);
        summary["scenario"] = json!(sc.name);
        if !yz.is_empty() {
            let zmin = yz.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
            summary["y0"] = num(yz[0].0);
            summary["z_min"] = num(zmin);
        }
        output::write_json(&dir.join("summary.json"), &summary)?;
        write_scenario(dir, "scenario.json", sc)?;
    }
    Ok(status_code(&traj.status))
}

fn dominance_json(d: &Dominance<f64>) -> Value {
    match d {
        Dominance::Holds(mode) => json!({"holds": true, "mode": format!("{mode:?}")}),
        Dominance::Fails { r1, r2 } => json!({"holds": false, "witness": [num(*r1), num(*r2)]}),
        Dominance::Inconclusive => json!({"holds": false, "inconclusive": true}),
    }
}

fn outcome_json(o: &RunOutcome<f64>) -> Value {
    match o {
        RunOutcome::Finished(s) => output::status_json(s),
        RunOutcome::Stopped { t } => json!({"status": "stopped", "t": num(*t)}),
    }
}

/// Resolves the second problem of a pair: `--pair-preset` wins over the
/// scenario's `pair` block.
pub fn resolve_second(
    first: &Scenario,
    base: &Path,
    pair_preset: Option<&str>,
    pair_set: &[String],
) -> CliResult<(Scenario, Overrides)> {
    let mut overrides = Overrides::default();
    if let Some(p) = &first.pair {
        overrides.a3 = p.override_a3;
        overrides.a4 = p.override_a4;
    }
    let second = match (pair_preset, &first.pair) {
        (Some(name), _) => expand_preset(name, &parse_sets(pair_set)?)?,
        (None, Some(p)) => {
            if !pair_set.is_empty() {
                return Err(CliError::Usage("--pair-set needs --pair-preset".into()));
            }
            resolve_ref(&p.second, base)?
        }
        (None, None) => {
            return Err(CliError::Usage(
                "compare needs a second problem: a `pair` block or --pair-preset".into(),
            ))
        }
    };
    Ok((second, overrides))
}

/// Runs the ordered pair `first <= second` and writes `comparison.json`,
/// `comparison.csv` and both trajectories.
pub fn cmd_compare(
    first: &Scenario,
    second: &Scenario,
    overrides: Overrides,
    out: Option<&Path>,
    log: &mut dyn Write,
) -> CliResult<i32> {
    let p1 = first.problem()?;
    let p2 = second.problem()?;
    let tc = first.time.time_control();
    let r = run_pair(&p1, &p2, &tc, overrides)?;
    let a = &r.assumptions;

    say(
        log,
        format!("first {}: {}", label(first), outcome_text(&r.outcome_first)),
    );
    say(
        log,
        format!(
            "second {}: {}",
            label(second),
            outcome_text(&r.outcome_second)
        ),
    );
    say(
        log,
        format!(
            "assumptions: {} (boundary modes {:?})",
            if a.passes() { "pass" } else { "FAIL" },
            a.boundary_modes()
        ),
    );
    for f in a.failures() {
        say(log, format!("  failed: {f}"));
    }
    say(
        log,
        format!(
            "max defect {:.3e} (tol {:.3e}), max gronwall margin {:.3e} (tol {:.3e}), blowup order {:?}",
            r.max_defect(),
            r.tol_order,
            r.max_gronwall_margin(),
            r.tol_gronwall,
            r.blowup_order_holds()
        ),
    );

    let ordering_ok =
        r.ordering_holds() && r.gronwall_holds() && r.blowup_order_holds() != Some(false);
    let code = if r.any_solver_failure() {
        EXIT_SOLVER
    } else if !a.passes() {
        EXIT_ASSUMPTIONS
    } else if !ordering_ok {
        EXIT_ORDERING
    } else if r.outcome_first.blowup_time().is_some() || r.outcome_second.blowup_time().is_some() {
        EXIT_BLOWUP
    } else {
        EXIT_COMPLETED
    };

    if let Some(dir) = out {
        prepare_out(Some(dir))?;
        let reaction = match &a.reaction {
            Check::Overridden => json!("overridden"),
            Check::Checked(rc) => json!({
                "holds": rc.holds(),
                "order": format!("{:?}", rc.order),
                "sc_first": format!("{:?}", rc.sc_first),
                "sc_second": format!("{:?}", rc.sc_second),
            }),
        };
        let report = json!({
            "version": output::VERSION,
            "first": first.name,
            "second": second.name,
            "exit_code": code,
            "assumptions": {
                "passes": a.passes(),
                "failures": a.failures(),
                "initial": {"holds": a.initial.holds, "max_violation": num(a.initial.max_violation)},
                "interior": a.interior.iter().map(dominance_json).collect::<Vec<_>>(),
                "boundary": a.boundary.iter().map(|c| match c {
                    Check::Checked(d) => dominance_json(d),
                    Check::Overridden => json!("overridden"),
                }).collect::<Vec<_>>(),
                "reaction": reaction,
                "sample_box": {"lo": num(a.sample_box.lo), "hi": num(a.sample_box.hi), "samples": a.sample_box.samples},
                "override_a3": overrides.a3,
                "override_a4": overrides.a4,
            },
            "l_m": num(r.l_m),
            "tol_order": num(r.tol_order),
            "tol_gronwall": num(r.tol_gronwall),
            "max_defect": num(r.max_defect()),
            "max_gronwall_margin": num(r.max_gronwall_margin()),
            "energy_at_onset": num(r.energy_at_onset()),
            "ordering_holds": r.ordering_holds(),
            "gronwall_holds": r.gronwall_holds(),
            "blowup_order_holds": r.blowup_order_holds(),
            "max_dt": num(r.max_dt()),
            "outcome_first": outcome_json(&r.outcome_first),
            "outcome_second": outcome_json(&r.outcome_second),
        });
        output::write_json(&dir.join("comparison.json"), &report)?;
        output::write_comparison_csv(&dir.join("comparison.csv"), &label(first), &r)?;
        output::write_trajectory_csv(&dir.join("first.csv"), &label(first), &r.first, None)?;
        output::write_trajectory_csv(&dir.join("second.csv"), &label(second), &r.second, None)?;
        write_scenario(dir, "first.json", first)?;
        write_scenario(dir, "second.json", second)?;
    }
    Ok(code)
}

fn outcome_text(o: &RunOutcome<f64>) -> String {
    match o {
        RunOutcome::Finished(s) => describe(s),
        RunOutcome::Stopped { t } => format!("stopped at t={t:.6} when its partner terminated"),
    }
}

/// Principal Dirichlet eigenpair of the box; writes `phi1.csv`.
pub fn cmd_eigen(
    mesh: &Mesh64,
    method: EigenMethod,
    out: Option<&Path>,
    log: &mut dyn Write,
) -> CliResult<i32> {
    let ep = principal_eigenpair(mesh, method)?;
    let exact: f64 = mesh
        .lengths()
        .iter()
        .map(|l| (std::f64::consts::PI / l).powi(2))
        .sum();
    let rel = (ep.lambda1 - exact).abs() / exact;
    say(log, format!("lambda1 = {:.12}", ep.lambda1));
    say(
        log,
        format!("continuum value {exact:.12}, relative difference {rel:.3e}"),
    );
    say(
        log,
        format!("|integral(phi1) - 1| = {:.3e}", ep.normalization_residual),
    );
    let rq = match method {
        EigenMethod::Discrete => {
            let rq = rayleigh_quotient(mesh, &ep.phi1)?;
            say(log, format!("rayleigh quotient {rq:.12}"));
            Some(rq)
        }
        EigenMethod::Analytic => None,
    };
    if let Some(dir) = out {
        prepare_out(Some(dir))?;
        output::write_field_csv(
            &dir.join("phi1.csv"),
            &format!("lambda1={:.12e}", ep.lambda1),
            mesh,
            &ep.phi1,
        )?;
        output::write_json(
            &dir.join("eigen.json"),
            &json!({
                "version": output::VERSION,
                "method": format!("{method:?}").to_lowercase(),
                "lambda1": num(ep.lambda1),
                "continuum_lambda1": num(exact),
                "relative_difference": num(rel),
                "normalization_residual": num(ep.normalization_residual),
                "rayleigh_quotient": rq.map(num),
            }),
        )?;
    }
    Ok(EXIT_COMPLETED)
}

/// Quantities of the a-priori analysis, computed from the initial data.
#[derive(Debug, Clone, PartialEq)]
pub struct Bounds {
    /// Sum of the component sup-norms of the initial data.
    pub u0_sup: f64,
    pub t0: f64,
    pub lambda1: f64,
    /// `(∫u₀φ₁, λ₁^{1/(p-2)})` for scalar power-type reactions.
    pub kaplan: Option<(f64, f64)>,
    /// Coupled system: initial functionals, verdict and the Riccati time.
    pub nuclear: Option<NuclearBounds>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NuclearBounds {
    pub y0: f64,
    pub z0: f64,
    pub y_threshold: f64,
    pub verdict: Option<NrVerdict>,
    pub riccati_t: f64,
}

pub fn compute_bounds(sc: &Scenario) -> CliResult<Bounds> {
    let problem = sc.problem()?;
    let s0 = problem.initial_state();
    let u0_sup: f64 = s0.sup_norms().iter().sum();
    let t0 = local_existence_horizon(u0_sup, problem.reaction())?;
    let ep: EigenPair64 = principal_eigenpair(problem.mesh(), EigenMethod::Analytic)?;
    let kaplan = match problem.reaction() {
        Reaction64::Power { p } | Reaction64::PowerPlus { p, .. } => {
            Some((kaplan_y(&s0.u[0], &ep)?, kaplan_threshold(*p, ep.lambda1)?))
        }
        _ => None,
    };
    let nuclear = match sc.nuclear_coefficients() {
        Some((a, b)) => {
            let (u1, u2) = (&s0.u[0], &s0.u[1]);
            let y0 = kaplan_y(u2, &ep)?;
            let z0 = kaplan_z(u1, u2, a, b, &ep)?;
            let verdict = if a > 0.0 {
                Some(check_nr_initial(u1, u2, a, b, &ep)?.verdict)
            } else {
                None
            };
            Some(NuclearBounds {
                y0,
                z0,
                y_threshold: 2.0 * (b + ep.lambda1),
                verdict,
                riccati_t: riccati_blowup_time(y0, b + ep.lambda1)?,
            })
        }
        None => None,
    };
    Ok(Bounds {
        u0_sup,
        t0,
        lambda1: ep.lambda1,
        kaplan,
        nuclear,
    })
}

pub fn cmd_bound(sc: &Scenario, out: Option<&Path>, log: &mut dyn Write) -> CliResult<i32> {
    let b = compute_bounds(sc)?;
    say(log, label(sc));
    say(log, format!("sup|u0| = {:.6}", b.u0_sup));
    say(
        log,
        format!(
            "T0 = {:.6e} (sup-norm stays below {:.6} until then)",
            b.t0,
            b.u0_sup + 1.0
        ),
    );
    say(log, format!("lambda1 = {:.9}", b.lambda1));
    let mut report = json!({
        "version": output::VERSION,
        "scenario": sc.name,
        "u0_sup": num(b.u0_sup),
        "t0": num(b.t0),
        "lambda1": num(b.lambda1),
    });
    if let Some((y0, thr)) = b.kaplan {
        say(
            log,
            format!(
                "integral(u0 phi1) = {y0:.6} vs threshold {thr:.6}: {}",
                if y0 > thr {
                    "blow-up guaranteed"
                } else {
                    "criterion not met"
                }
            ),
        );
        report["kaplan"] = json!({"y0": num(y0), "threshold": num(thr), "satisfied": y0 > thr});
    }
    if let Some(n) = &b.nuclear {
        say(
            log,
            format!(
                "y0 = {:.6}, z0 = {:.6e}, 2(b+lambda1) = {:.6}",
                n.y0, n.z0, n.y_threshold
            ),
        );
        let verdict = match n.verdict {
            Some(NrVerdict::Satisfied) => "satisfied".to_string(),
            Some(NrVerdict::Violated(c)) => format!("violated ({c:?})"),
            None => "not applicable (a = 0)".to_string(),
        };
        say(log, format!("initial conditions: {verdict}"));
        say(log, format!("riccati T* = {:.6e}", n.riccati_t));
        report["nuclear"] = json!({
            "y0": num(n.y0),
            "z0": num(n.z0),
            "y_threshold": num(n.y_threshold),
            "verdict": verdict,
            "riccati_t": num(n.riccati_t),
        });
    }
    if let Some(dir) = out {
        prepare_out(Some(dir))?;
        output::write_json(&dir.join("bound.json"), &report)?;
    }
    Ok(EXIT_COMPLETED)
}

/// Writes the expanded preset as a scenario document.
pub fn cmd_expand(name: &str, set: &[String], log: &mut dyn Write) -> CliResult<i32> {
    let sets: BTreeMap<String, f64> = parse_sets(set)?;
    say(log, expand_preset(name, &sets)?.to_json());
    Ok(EXIT_COMPLETED)
}

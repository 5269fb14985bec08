//! CSV and JSON artifacts.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use mmrd::{ComparisonReport64, Field64, Mesh64, Status, Trajectory64};
use serde_json::{json, Value};

use crate::error::{CliError, CliResult};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// First line of every CSV artifact.
pub fn stamp(label: &str) -> String {
    format!("# mmrd {VERSION} {label}")
}

fn create(path: &Path) -> CliResult<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::io(path, e))
}

fn csv_err(path: &Path, e: csv::Error) -> CliError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => CliError::io(path, io),
        other => CliError::io(path, std::io::Error::other(format!("{other:?}"))),
    }
}

fn cell(v: f64) -> String {
    format!("{v:e}")
}

pub fn status_line(status: &Status<f64>) -> String {
    match status {
        Status::Completed => "# status=completed".to_string(),
        Status::Blowup { t_b, ci_width } => {
            format!("# status=blowup T_b={t_b:.9e} ci_width={ci_width:.3e}")
        }
        Status::SolverFailure { residual, note } => {
            format!("# status=solver_failure residual={residual:.3e} note={note}")
        }
    }
}

/// Writes one row per accepted sample: `t,dt,supnorm_k1..,y,z,status`.
/// `yz` holds the reduction functionals per sample for the coupled system.
pub fn write_trajectory_csv(
    path: &Path,
    label: &str,
    traj: &Trajectory64,
    yz: Option<&[(f64, f64)]>,
) -> CliResult<()> {
    let mut out = create(path)?;
    writeln!(out, "{}", stamp(label)).map_err(|e| CliError::io(path, e))?;
    let mut w = csv::Writer::from_writer(out);
    let m = traj.sup_norms.first().map_or(0, Vec::len);
    let mut header = vec!["t".to_string(), "dt".to_string()];
    header.extend((1..=m).map(|k| format!("supnorm_k{k}")));
    header.extend(["y", "z", "status"].map(String::from));
    w.write_record(&header).map_err(|e| csv_err(path, e))?;
    let last = traj.times.len() - 1;
    for i in 0..traj.times.len() {
        let mut row = vec![cell(traj.times[i]), cell(traj.dts[i])];
        row.extend(traj.sup_norms[i].iter().map(|v| cell(*v)));
        match yz.and_then(|v| v.get(i)) {
            Some((y, z)) => row.extend([cell(*y), cell(*z)]),
            None => row.extend([String::new(), String::new()]),
        }
        row.push(
            if i == last {
                traj.status.name()
            } else {
                "running"
            }
            .to_string(),
        );
        w.write_record(&row).map_err(|e| csv_err(path, e))?;
    }
    let mut out = w
        .into_inner()
        .map_err(|e| CliError::io(path, e.into_error()))?;
    writeln!(out, "{}", status_line(&traj.status)).map_err(|e| CliError::io(path, e))?;
    out.flush().map_err(|e| CliError::io(path, e))
}

/// Nodal field as `x[,y],value`.
pub fn write_field_csv(path: &Path, label: &str, mesh: &Mesh64, field: &Field64) -> CliResult<()> {
    let mut out = create(path)?;
    writeln!(out, "{}", stamp(label)).map_err(|e| CliError::io(path, e))?;
    let mut w = csv::Writer::from_writer(out);
    let header: &[&str] = if mesh.dim() == 1 {
        &["x", "value"]
    } else {
        &["x", "y", "value"]
    };
    w.write_record(header).map_err(|e| csv_err(path, e))?;
    for (i, v) in field.values().iter().enumerate() {
        let x = mesh.coords(i);
        let mut row: Vec<String> = x[..mesh.dim()].iter().map(|c| cell(*c)).collect();
        row.push(cell(*v));
        w.write_record(&row).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

/// Per-step comparison monitors: `t,dt,defect,energy,gronwall_margin`.
pub fn write_comparison_csv(path: &Path, label: &str, r: &ComparisonReport64) -> CliResult<()> {
    let mut out = create(path)?;
    writeln!(out, "{}", stamp(label)).map_err(|e| CliError::io(path, e))?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "dt", "defect", "energy", "gronwall_margin"])
        .map_err(|e| csv_err(path, e))?;
    for i in 0..r.times.len() {
        w.write_record([
            cell(r.times[i]),
            cell(r.dts[i]),
            cell(r.defects[i]),
            cell(r.energy[i]),
            cell(r.gronwall_margin[i]),
        ])
        .map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

pub fn write_json(path: &Path, value: &Value) -> CliResult<()> {
    let mut out = create(path)?;
    serde_json::to_writer_pretty(&mut out, value)
        .map_err(|e| CliError::io(path, std::io::Error::other(e)))?;
    writeln!(out).map_err(|e| CliError::io(path, e))?;
    out.flush().map_err(|e| CliError::io(path, e))
}

/// Non-finite numbers become strings so the document stays valid JSON.
pub fn num(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else {
        json!(v.to_string())
    }
}

pub fn status_json(status: &Status<f64>) -> Value {
    match status {
        Status::Completed => json!({"status": "completed"}),
        Status::Blowup { t_b, ci_width } => {
            json!({"status": "blowup", "t_b": num(*t_b), "ci_width": num(*ci_width)})
        }
        Status::SolverFailure { residual, note } => {
            json!({"status": "solver_failure", "residual": num(*residual), "note": note})
        }
    }
}

pub fn trajectory_summary(traj: &Trajectory64) -> Value {
    let sup = traj.sup_series();
    json!({
        "outcome": status_json(&traj.status),
        "steps": traj.times.len() - 1,
        "final_time": num(traj.final_time()),
        "final_supnorms": traj.sup_norms.last().map(|s| s.iter().map(|v| num(*v)).collect::<Vec<_>>()),
        "max_supnorm": num(sup.iter().copied().fold(0.0, f64::max)),
        "min_value": num(traj.min_values.iter().copied().fold(f64::INFINITY, f64::min)),
        "max_dt": num(traj.max_dt()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use mmrd::{
        build_mesh, make_graph, run, ComponentSpec, GraphSpec, Problem64, Reaction64, TimeControl64,
    };

    #[test]
    fn zero_solution_csv() {
        let mesh = build_mesh(1, &[1.0], &[11]).unwrap();
        let comp = ComponentSpec {
            diffusion: 1.0,
            interior_graph: make_graph(GraphSpec::Zero).unwrap(),
            boundary_graph: make_graph(GraphSpec::Dirichlet).unwrap(),
            initial: Field64::zeros(&mesh),
        };
        let p = Problem64::new(mesh, vec![comp], Reaction64::Power { p: 3.0 }).unwrap();
        let traj = run(&p, &TimeControl64::new(0.01)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        write_trajectory_csv(&path, "test", &traj, None).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert!(lines[0].starts_with("# mmrd "));
        assert_eq!(lines[1], "t,dt,supnorm_k1,y,z,status");
        assert_eq!(lines.last().unwrap(), &"# status=completed");
        for row in &lines[2..lines.len() - 1] {
            let cols: Vec<&str> = row.split(',').collect();
            assert_eq!(cols[2].parse::<f64>().unwrap(), 0.0);
            assert!(cols[3].is_empty() && cols[4].is_empty());
        }
        assert!(lines[lines.len() - 2].ends_with(",completed"));
    }
}

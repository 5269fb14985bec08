//! Acceptance criteria, one PASS/FAIL line each. Runs as a plain binary so the
//! lines are always printed and timings are not skewed by parallel tests.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use mmrd::*;
use mmrd_cli::presets::expand_preset;
use mmrd_cli::Scenario;
use rand::{rngs::StdRng, Rng, SeedableRng};

struct Outcome {
    ok: bool,
    detail: String,
}

fn preset(name: &str, set: &[(&str, f64)]) -> Scenario {
    let set: BTreeMap<String, f64> = set.iter().map(|(k, v)| (k.to_string(), *v)).collect();
    expand_preset(name, &set).expect("preset expands")
}

fn problem(sc: &Scenario) -> Problem64 {
    sc.problem().expect("scenario builds")
}

/// Resolvent of a graph with domain `[lo, hi]`, continuous selection `g` on it
/// and vertical half-lines at finite endpoints, by bisection on
/// `x + λ g(x) = r` after clamping to the domain.
fn oracle_resolvent(lo: f64, hi: f64, g: &dyn Fn(f64) -> f64, lambda: f64, r: f64) -> f64 {
    let phi = |x: f64| x + lambda * g(x);
    if lo.is_finite() && r <= phi(lo) {
        return lo;
    }
    if hi.is_finite() && r >= phi(hi) {
        return hi;
    }
    let (mut a, mut b) = (lo.max(-1e3), hi.min(1e3));
    for _ in 0..400 {
        let mid = 0.5 * (a + b);
        if phi(mid) > r {
            b = mid;
        } else {
            a = mid;
        }
    }
    0.5 * (a + b)
}

fn criterion_1() -> Outcome {
    let inf = f64::INFINITY;
    type Sel = Box<dyn Fn(f64) -> f64>;
    let cases: Vec<(&str, GraphSpec<f64>, f64, f64, Sel)> = vec![
        (
            "linear",
            GraphSpec::Linear { alpha: 1.0 },
            -inf,
            inf,
            Box::new(|x| x),
        ),
        (
            "power(1,1.5)",
            GraphSpec::Power { alpha: 1.0, q: 1.5 },
            -inf,
            inf,
            Box::new(|x: f64| x.signum() * x.abs().sqrt()),
        ),
        (
            "power(1,3)",
            GraphSpec::Power { alpha: 1.0, q: 3.0 },
            -inf,
            inf,
            Box::new(|x: f64| x.abs() * x),
        ),
        (
            "obstacle(1)",
            GraphSpec::Obstacle { m: 1.0 },
            -1.0,
            1.0,
            Box::new(|_| 0.0),
        ),
        (
            "extended_power(1,2.5)",
            GraphSpec::ExtendedPower { alpha: 1.0, q: 2.5 },
            0.0,
            inf,
            Box::new(|x: f64| x.powf(1.5)),
        ),
        (
            "dirichlet",
            GraphSpec::Dirichlet,
            0.0,
            0.0,
            Box::new(|_| 0.0),
        ),
    ];
    let mut rng = StdRng::seed_from_u64(20261018);
    let mut worst: (f64, &str) = (0.0, "");
    for (name, spec, lo, hi, g) in &cases {
        let graph = make_graph(*spec).unwrap();
        for _ in 0..1000 {
            let lambda = rng.gen_range(1e-3..=10.0);
            let r = rng.gen_range(-10.0..=10.0);
            let got = graph.resolvent(lambda, r).unwrap();
            let err = (got - oracle_resolvent(*lo, *hi, g.as_ref(), lambda, r)).abs();
            if err > worst.0 {
                worst = (err, name);
            }
        }
    }
    let m = 1.0;
    let obstacle = make_graph(GraphSpec::Obstacle { m }).unwrap();
    let mut yosida_err: f64 = 0.0;
    for _ in 0..1000 {
        let lambda = rng.gen_range(1e-3..=10.0);
        let r: f64 = rng.gen_range(-10.0..=10.0);
        let closed = if r >= m {
            (r - m) / lambda
        } else if r <= -m {
            (r + m) / lambda
        } else {
            0.0
        };
        yosida_err = yosida_err.max((obstacle.yosida(lambda, r).unwrap() - closed).abs());
    }
    Outcome {
        ok: worst.0 <= 1e-10 && yosida_err <= 1e-12,
        detail: format!(
            "max |resolvent - oracle| = {:.2e} ({}), max |yosida - closed form| = {yosida_err:.2e}",
            worst.0, worst.1
        ),
    }
}

fn criterion_2() -> Outcome {
    let mut errs = Vec::new();
    let mut norm_res: f64 = 0.0;
    for n in [101, 201, 401] {
        let mesh = build_mesh::<f64>(1, &[1.0], &[n]).unwrap();
        let ep = principal_eigenpair(&mesh, EigenMethod::Discrete).unwrap();
        errs.push((ep.lambda1 - PI * PI).abs());
        norm_res = norm_res.max(ep.normalization_residual);
    }
    let orders = [(errs[0] / errs[1]).log2(), (errs[1] / errs[2]).log2()];
    let rel = errs[2] / (PI * PI);
    Outcome {
        ok: orders.iter().all(|o| *o >= 1.9) && rel <= 1e-3 && norm_res <= 1e-10,
        detail: format!(
            "orders {:.3}, {:.3}; rel err at n=401 {rel:.2e}; max |int phi1 - 1| = {norm_res:.1e}",
            orders[0], orders[1]
        ),
    }
}

fn pair_check(first: &str, second: &str, mode: DominanceMode) -> (bool, String) {
    let start = Instant::now();
    let p1 = problem(&preset(first, &[]));
    let p2 = problem(&preset(second, &[]));
    let r = run_pair(&p1, &p2, &TimeControl::new(1.0), Overrides::default()).unwrap();
    let elapsed = start.elapsed();
    let modes = r.assumptions.boundary_modes();
    let ok = r.assumptions.passes()
        && modes == vec![Some(mode)]
        && r.max_defect() <= r.tol_order
        && r.gronwall_holds()
        && elapsed < Duration::from_secs(60);
    let detail = format!(
        "{first} <= {second}: modes {modes:?}, defect {:.1e} <= {:.1e}, gronwall {:.1e} (tol {:.1e}), {:.2}s",
        r.max_defect(),
        r.tol_order,
        r.max_gronwall_margin(),
        r.tol_gronwall,
        elapsed.as_secs_f64()
    );
    (ok, detail)
}

fn criterion_3() -> Outcome {
    let (ok1, d1) = pair_check("Pp_dirichlet", "Pp_gamma", DominanceMode::Domains);
    let (ok2, d2) = pair_check("Pp_gamma", "Pp_neumann", DominanceMode::Values);
    Outcome {
        ok: ok1 && ok2,
        detail: format!("{d1}; {d2}"),
    }
}

fn criterion_4() -> Outcome {
    let names = ["Pp_neumann", "Pp_gamma", "Pp_dirichlet"];
    let specs: Vec<Problem64> = names.iter().map(|n| problem(&preset(n, &[]))).collect();
    let report = blowup_order_experiment(&specs, &TimeControl::new(1.0)).unwrap();
    let exits: Vec<Option<i32>> = names
        .iter()
        .map(|n| {
            Command::new(env!("CARGO_BIN_EXE_mmrd"))
                .args(["run", "--preset", n])
                .output()
                .expect("binary runs")
                .status
                .code()
        })
        .collect();
    let times: Vec<String> = report
        .blowup_times
        .iter()
        .map(|t| t.map_or("none".into(), |t| format!("{t:.5}")))
        .collect();
    Outcome {
        ok: report.holds
            && report.blowup_times.iter().all(Option::is_some)
            && exits.iter().all(|c| *c == Some(2)),
        detail: format!(
            "T_b N/gamma/D = {} (slack {:.1e}), exit codes {exits:?}",
            times.join(" <= "),
            report.slack
        ),
    }
}

fn criterion_5() -> Outcome {
    let p = 3.0;
    let base = preset("Pp_dirichlet", &[("c", 1.0)]);
    let ep = principal_eigenpair(&base.mesh().unwrap(), EigenMethod::Analytic).unwrap();
    let threshold = kaplan_threshold(p, ep.lambda1).unwrap();
    let phi_sq = kaplan_y(&ep.phi1, &ep).unwrap();
    let mut parts = Vec::new();
    let mut ok = true;
    for factor in [1.5, 0.5] {
        let c = factor * threshold / phi_sq;
        let sc = preset("Pp_dirichlet", &[("c", c), ("t_end", 5.0)]);
        let pr = problem(&sc);
        let y0 = kaplan_y(&pr.initial_state().u[0], &ep).unwrap();
        let traj = run(&pr, &sc.time.time_control()).unwrap();
        if factor > 1.0 {
            ok &= traj.status.is_blowup() && y0 > threshold;
        }
        parts.push(format!(
            "{factor}x (y0 {y0:.3} vs {threshold:.3}): {}",
            traj.status.name()
        ));
    }
    Outcome {
        ok,
        detail: parts.join("; "),
    }
}

fn criterion_6() -> Outcome {
    let start = Instant::now();
    let p = 3.0;
    let f: Reaction64 = Reaction::Power { p };
    let t0 = local_existence_horizon(1.0, &f).unwrap();
    let mesh = build_mesh::<f64>(1, &[1.0], &[201]).unwrap();
    let comp = ComponentSpec {
        diffusion: 1.0,
        interior_graph: make_graph(GraphSpec::Zero).unwrap(),
        boundary_graph: make_graph(GraphSpec::Dirichlet).unwrap(),
        initial: Field::constant(&mesh, 1.0),
    };
    let pr = Problem64::new(mesh, vec![comp], f).unwrap();
    let traj = run(&pr, &TimeControl::new(t0)).unwrap();
    let max_sup = traj.sup_series().into_iter().fold(0.0, f64::max);
    let elapsed = start.elapsed();
    Outcome {
        ok: (t0 - 1.0 / 12.0).abs() <= 1e-12
            && traj.status == Status::Completed
            && max_sup <= 2.0 + 1e-6
            && elapsed < Duration::from_secs(10),
        detail: format!(
            "T0 = {t0:.12}, max sup on [0, T0] = {max_sup:.6}, {:.2}s",
            elapsed.as_secs_f64()
        ),
    }
}

fn criterion_7() -> Outcome {
    let start = Instant::now();
    let (a, b) = (1.0, 1.0);
    let sc = preset("NR_dirichlet", &[]);
    let pr = problem(&sc);
    let ep = principal_eigenpair(pr.mesh(), EigenMethod::Analytic).unwrap();
    let s0 = pr.initial_state();
    let init = check_nr_initial(&s0.u[0], &s0.u[1], a, b, &ep).unwrap();
    let t_star = riccati_blowup_time(init.y0, b + ep.lambda1).unwrap();
    // Quadrature tolerance for the sampled functional.
    let eps_quad = 1e-8 * (1.0 + init.z0.abs());
    let mut z_min = f64::INFINITY;
    let traj = run_with(&pr, &sc.time.time_control(), |s| {
        z_min = z_min.min(kaplan_z(&s.u[0], &s.u[1], a, b, &ep).unwrap());
    })
    .unwrap();
    let t_b = traj.blowup_time();
    let riccati_ok = matches!(t_b, Some(t) if t <= t_star + traj.max_dt());

    let gamma = problem(&preset("NR", &[]));
    let r = run_pair(&pr, &gamma, &sc.time.time_control(), Overrides::default()).unwrap();
    let elapsed = start.elapsed();
    let ok = init.verdict == NrVerdict::Satisfied
        && init.y0 > init.y_threshold
        && riccati_ok
        && z_min >= -eps_quad
        && r.max_defect() <= r.tol_order
        && r.blowup_order_holds() == Some(true)
        && elapsed < Duration::from_secs(180);
    Outcome {
        ok,
        detail: format!(
            "y0 {:.3} > {:.3}; T_b^D {} <= T* {t_star:.4}; z min {z_min:.3e}; pair defect {:.1e} <= {:.1e}, T_b^gamma {} ; {:.2}s",
            init.y0,
            init.y_threshold,
            t_b.map_or("none".into(), |t| format!("{t:.4}")),
            r.max_defect(),
            r.tol_order,
            r.outcome_second
                .blowup_time()
                .map_or("none".into(), |t| format!("{t:.4}")),
            elapsed.as_secs_f64()
        ),
    }
}

fn criterion_8() -> Outcome {
    let start = Instant::now();
    let mut worst_min = f64::INFINITY;
    for name in mmrd_cli::presets::PRESETS {
        let sc = preset(name, &[]);
        let traj = run(&problem(&sc), &sc.time.time_control()).unwrap();
        worst_min = worst_min.min(
            traj.min_values
                .iter()
                .copied()
                .fold(f64::INFINITY, f64::min),
        );
    }

    let sc = preset(
        "NR",
        &[
            ("a", 0.0),
            ("alpha1", 0.0),
            ("alpha2", 0.0),
            ("t_end", 2.0),
            ("blowup_threshold", 1e30),
        ],
    );
    let pr = problem(&sc);
    let s0 = pr.initial_state();
    let (u10, u20) = (s0.u[0].max(), s0.u[1].max());
    let traj = run(&pr, &sc.time.time_control()).unwrap();
    let mut worst_ratio: f64 = 0.0;
    for (t, sup) in traj.times.iter().zip(traj.sup_series()) {
        worst_ratio = worst_ratio.max(sup / (u10 * (u20 * t).exp()));
    }
    worst_min = worst_min.min(
        traj.min_values
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min),
    );
    let elapsed = start.elapsed();
    Outcome {
        ok: worst_min >= -1e-12
            && traj.status == Status::Completed
            && (traj.final_time() - 2.0).abs() <= 1e-12
            && worst_ratio <= 1.05
            && elapsed < Duration::from_secs(30),
        detail: format!(
            "min over all preset runs {worst_min:.1e}; a=0 run {} at t={}, max sup/bound {worst_ratio:.3e}; {:.2}s",
            traj.status.name(),
            traj.final_time(),
            elapsed.as_secs_f64()
        ),
    }
}

fn main() -> ExitCode {
    type Criterion = (&'static str, fn() -> Outcome, u64);
    let criteria: [Criterion; 8] = [
        ("resolvent and yosida oracles", criterion_1, 5),
        ("discrete eigenpair convergence", criterion_2, 5),
        ("comparison ordering", criterion_3, 120),
        ("blow-up time ordering", criterion_4, 120),
        ("kaplan criterion", criterion_5, 600),
        ("local existence envelope", criterion_6, 10),
        ("coupled system blow-up", criterion_7, 180),
        ("positivity and trivial comparison", criterion_8, 30),
    ];
    let mut failed = 0;
    for (i, (name, check, budget)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let out = check();
        let secs = start.elapsed().as_secs_f64();
        let ok = out.ok && secs < *budget as f64;
        if !ok {
            failed += 1;
        }
        println!(
            "{} criterion {}: {name}: {} [{secs:.2}s, budget {budget}s]",
            if ok { "PASS" } else { "FAIL" },
            i + 1,
            out.detail
        );
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

use mmrd::*;
use proptest::prelude::*;

fn problem(bc: GraphSpec<f64>, f: Reaction<f64>, initial: Vec<f64>) -> Problem64 {
    let mesh = build_mesh::<f64>(1, &[1.0], &[initial.len()]).unwrap();
    let comp = ComponentSpec {
        diffusion: 1.0,
        interior_graph: make_graph(GraphSpec::Zero).unwrap(),
        boundary_graph: make_graph(bc).unwrap(),
        initial: Field(initial),
    };
    ProblemSpec::new(mesh, vec![comp], f).unwrap()
}

fn boundary_graph() -> impl Strategy<Value = GraphSpec<f64>> {
    prop_oneof![
        Just(GraphSpec::Zero),
        Just(GraphSpec::Dirichlet),
        Just(GraphSpec::ExtendedNeumann),
        (0.1f64..3.0, 1.2f64..4.0).prop_map(|(alpha, q)| GraphSpec::ExtendedPower { alpha, q }),
        (0.1f64..3.0, 1.2f64..4.0).prop_map(|(alpha, q)| GraphSpec::Power { alpha, q }),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn step_preserves_nodewise_order(
        bc in boundary_graph(),
        base in prop::collection::vec(0.0f64..2.0, 21),
        bump in prop::collection::vec(0.0f64..1.0, 21),
        dt in 1e-4f64..2e-3,
    ) {
        let f = Reaction::Power { p: 3.0 };
        let upper: Vec<f64> = base.iter().zip(&bump).map(|(a, b)| a + b).collect();
        let p1 = problem(bc, f.clone(), base);
        let p2 = problem(bc, f, upper);
        let (s1, s2) = (p1.initial_state(), p2.initial_state());
        prop_assert_eq!(ordering_defect(&s1, &s2).unwrap(), 0.0);
        let (n1, n2) = (step(&p1, &s1, dt).unwrap(), step(&p2, &s2, dt).unwrap());
        prop_assert!(ordering_defect(&n1, &n2).unwrap() <= 1e-12);
    }

    #[test]
    fn nonnegative_data_stay_nonnegative(
        bc in boundary_graph(),
        u0 in prop::collection::vec(0.0f64..3.0, 21),
    ) {
        let p = problem(bc, Reaction::PowerPlus { p: 3.0, c: 1.0 }, u0);
        let traj = run(&p, &TimeControl::new(0.02)).unwrap();
        prop_assert!(traj.min_values.iter().all(|m| *m >= -1e-12));
    }

    #[test]
    fn constants_are_neumann_fixed_points(c in -10.0f64..10.0, dt in 1e-5f64..1e-2, two_d in any::<bool>()) {
        let mesh = if two_d {
            build_mesh::<f64>(2, &[1.0, 0.5], &[9, 7]).unwrap()
        } else {
            build_mesh::<f64>(1, &[2.0], &[17]).unwrap()
        };
        let comp = ComponentSpec {
            diffusion: 0.7,
            interior_graph: make_graph(GraphSpec::Zero).unwrap(),
            boundary_graph: make_graph(GraphSpec::Zero).unwrap(),
            initial: Field::constant(&mesh, c),
        };
        let p = ProblemSpec::new(mesh, vec![comp], Reaction::Zero { m: 1 }).unwrap();
        let next = step(&p, &p.initial_state(), dt).unwrap();
        prop_assert!(next.u[0].values().iter().all(|v| (v - c).abs() <= 1e-14));
    }

    #[test]
    fn sup_norm_stays_in_envelope_up_to_horizon(level in 0.2f64..3.0) {
        let f = Reaction::Power { p: 3.0 };
        let p = problem(GraphSpec::Dirichlet, f.clone(), vec![level; 41]);
        let t0 = local_existence_horizon(level, &f).unwrap();
        let traj = run(&p, &TimeControl::new(t0)).unwrap();
        prop_assert_eq!(&traj.status, &Status::Completed);
        prop_assert!(traj.sup_series().iter().all(|s| *s <= level + 1.0 + 1e-6));
    }

    #[test]
    fn horizon_decreases_with_data_size(a in 0.0f64..50.0, b in 0.0f64..50.0) {
        let f = Reaction::Nuclear { a: 1.0, b: 1.0 };
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(local_existence_horizon(hi, &f).unwrap() <= local_existence_horizon(lo, &f).unwrap());
    }

    #[test]
    fn ell_is_nondecreasing_and_power_is_odd(r1 in 0.0f64..20.0, r2 in 0.0f64..20.0, p in 2.1f64..5.0, u in -20.0f64..20.0) {
        let (lo, hi) = if r1 <= r2 { (r1, r2) } else { (r2, r1) };
        for f in [Reaction::Power { p }, Reaction::PowerPlus { p, c: 0.5 }, Reaction::Nuclear { a: 2.0, b: 1.0 }] {
            prop_assert!(ell(&f, lo) <= ell(&f, hi));
        }
        let pw = Reaction::Power { p };
        prop_assert_eq!(eval_reaction(&pw, &[-u])[0], -eval_reaction(&pw, &[u])[0]);
    }
}

#[test]
fn zero_data_give_the_trivial_solution() {
    let p = problem(
        GraphSpec::ExtendedNeumann,
        Reaction::Power { p: 3.0 },
        vec![0.0; 31],
    );
    let traj = run(&p, &TimeControl::new(0.5)).unwrap();
    assert_eq!(traj.status, Status::Completed);
    assert!(traj.sup_series().iter().all(|s| *s == 0.0));
    assert_eq!(detect_blowup(&traj), BlowupVerdict::None);
}

#[test]
fn dirichlet_heat_decays_monotonically() {
    let n = 101;
    let init: Vec<f64> = (0..n)
        .map(|i| (std::f64::consts::PI * i as f64 / (n - 1) as f64).sin())
        .collect();
    let p = problem(GraphSpec::Dirichlet, Reaction::Zero { m: 1 }, init);
    let traj = run(&p, &TimeControl::new(0.1)).unwrap();
    let sups = traj.sup_series();
    assert!(sups.windows(2).all(|w| w[1] < w[0]));
}

#[test]
fn dt_collapse_without_growth_is_a_solver_failure() {
    // A reaction whose derivative is huge but whose size does not grow.
    let f = Reaction::scalar(|u: f64| -1e14 * u);
    let p = problem(GraphSpec::Zero, f, vec![1.0; 11]);
    let traj = run(&p, &TimeControl::new(1.0)).unwrap();
    assert!(
        matches!(traj.status, Status::SolverFailure { .. }),
        "{:?}",
        traj.status
    );
    assert_eq!(detect_blowup(&traj), BlowupVerdict::None);
}

#[test]
fn blowup_run_reports_finite_time() {
    let n = 101;
    let phi: Vec<f64> = (0..n)
        .map(|i| {
            12.0 * std::f64::consts::FRAC_PI_2
                * (std::f64::consts::PI * i as f64 / (n - 1) as f64).sin()
        })
        .collect();
    let p = problem(GraphSpec::Dirichlet, Reaction::Power { p: 3.0 }, phi);
    let traj = run(&p, &TimeControl::new(1.0)).unwrap();
    let BlowupVerdict::Blowup { t_b, ci_width } = detect_blowup(&traj) else {
        panic!("{:?}", traj.status)
    };
    assert!(t_b > 0.0 && t_b < 1.0 && ci_width < 1e-3);
    assert!(traj.final_state.sup_norm() >= 1e8);
    assert!(traj.times.windows(2).all(|w| w[1] > w[0]));
}

//! Hypothesis checks for ordering two problems, lock-step co-evolution with
//! the ordering defect and Gronwall monitor, and blow-up time ordering runs.

use std::thread;

use crate::error::{config, Result};
use crate::graphs::{dominates, Dominance, DominanceMode, RGrid};
use crate::mesh::positive_part_l2;
use crate::num::Real;
use crate::reactions::{
    check_order_f, check_sc, lipschitz_bound, OrderVerdict, SampleBox, ScVerdict,
};
use crate::stepper::{run, ProblemSpec, Simulation, State, Status, TimeControl, Trajectory};

/// Node count above which the two runs of a pair step on separate threads.
const PARALLEL_NODES: usize = 4096;

/// A-priori orderings that replace a hypothesis check.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Overrides {
    /// Boundary flux ordering known a priori; skips the boundary graph check.
    pub a3: bool,
    /// Reaction ordering known a priori; skips the reaction checks.
    pub a4: bool,
}

/// Result of a hypothesis that may have been waived.
#[derive(Debug, Clone, PartialEq)]
pub enum Check<V> {
    Checked(V),
    Overridden,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InitialOrder<T> {
    pub holds: bool,
    /// `max_k max_i (a^k_1 - a^k_2)⁺`.
    pub max_violation: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReactionChecks<T> {
    pub order: OrderVerdict<T>,
    pub sc_first: ScVerdict<T>,
    pub sc_second: ScVerdict<T>,
}

impl<T: Real> ReactionChecks<T> {
    pub fn holds(&self) -> bool {
        self.order.holds() && (self.sc_first.is_ok() || self.sc_second.is_ok())
    }

    /// Largest certified Lipschitz bound, if either reaction passed.
    pub fn l_m(&self) -> Option<T> {
        [&self.sc_first, &self.sc_second]
            .iter()
            .filter_map(|v| match v {
                ScVerdict::Ok { l_m } => Some(*l_m),
                _ => None,
            })
            .reduce(T::max)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssumptionReport<T> {
    pub initial: InitialOrder<T>,
    /// Interior graph ordering per component.
    pub interior: Vec<Dominance<T>>,
    /// Boundary graph ordering per component.
    pub boundary: Vec<Check<Dominance<T>>>,
    pub reaction: Check<ReactionChecks<T>>,
    pub sample_box: SampleBox<T>,
    pub overrides: Overrides,
}

impl<T: Real> AssumptionReport<T> {
    pub fn passes(&self) -> bool {
        self.initial.holds
            && self.interior.iter().all(Dominance::holds)
            && self.boundary.iter().all(|c| match c {
                Check::Checked(d) => d.holds(),
                Check::Overridden => true,
            })
            && match &self.reaction {
                Check::Checked(r) => r.holds(),
                Check::Overridden => true,
            }
    }

    /// Certified modes of the boundary check per component (`None` if
    /// overridden or not holding).
    pub fn boundary_modes(&self) -> Vec<Option<DominanceMode>> {
        self.boundary
            .iter()
            .map(|c| match c {
                Check::Checked(Dominance::Holds(m)) => Some(*m),
                _ => None,
            })
            .collect()
    }

    /// Human-readable list of failed hypotheses.
    pub fn failures(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !self.initial.holds {
            out.push(format!(
                "initial data not ordered (max violation {})",
                self.initial.max_violation
            ));
        }
        for (k, d) in self.interior.iter().enumerate() {
            if !d.holds() {
                out.push(format!("interior graphs of component {k}: {d:?}"));
            }
        }
        for (k, c) in self.boundary.iter().enumerate() {
            if let Check::Checked(d) = c {
                if !d.holds() {
                    out.push(format!("boundary graphs of component {k}: {d:?}"));
                }
            }
        }
        if let Check::Checked(r) = &self.reaction {
            if !r.order.holds() {
                out.push(format!("reaction ordering: {:?}", r.order));
            }
            if !r.sc_first.is_ok() && !r.sc_second.is_ok() {
                out.push(format!("structure condition: {:?}", r.sc_first));
            }
        }
        out
    }
}

fn check_compatible<T: Real>(p1: &ProblemSpec<T>, p2: &ProblemSpec<T>) -> Result<()> {
    if p1.m() != p2.m() {
        return config(format!(
            "problems have {} and {} components",
            p1.m(),
            p2.m()
        ));
    }
    if p1.mesh() != p2.mesh() {
        return config("problems live on different meshes");
    }
    for (k, (c1, c2)) in p1.components().iter().zip(p2.components()).enumerate() {
        if c1.diffusion != c2.diffusion {
            return config(format!(
                "component {k} has diffusion {} vs {}; the ordering needs common coefficients",
                c1.diffusion, c2.diffusion
            ));
        }
    }
    Ok(())
}

/// Sampling box for the reaction checks: nonnegative when both initial data
/// are, radius `max(1, 2 max ‖u₀‖_∞)`.
pub fn default_box<T: Real>(p1: &ProblemSpec<T>, p2: &ProblemSpec<T>) -> SampleBox<T> {
    let (s1, s2) = (p1.initial_state(), p2.initial_state());
    let radius = (T::lit(2.0) * s1.sup_norm().max(s2.sup_norm())).max(T::one());
    box_for(
        p1.m(),
        radius,
        s1.min_value() >= T::zero() && s2.min_value() >= T::zero(),
    )
}

fn box_for<T: Real>(m: usize, radius: T, nonnegative: bool) -> SampleBox<T> {
    let samples = if m == 1 { 201 } else { 41 };
    if nonnegative {
        SampleBox::nonnegative(radius, samples)
    } else {
        SampleBox::symmetric(radius, samples)
    }
}

/// Checks the ordering hypotheses for `P1` (sub-solution side) and `P2`.
pub fn check_assumptions<T: Real>(
    p1: &ProblemSpec<T>,
    p2: &ProblemSpec<T>,
    bx: &SampleBox<T>,
    overrides: Overrides,
) -> Result<AssumptionReport<T>> {
    check_compatible(p1, p2)?;
    let (s1, s2) = (p1.initial_state(), p2.initial_state());
    let max_violation = ordering_defect(&s1, &s2)?;
    let grid = RGrid::default();
    let interior = p1
        .components()
        .iter()
        .zip(p2.components())
        .map(|(c1, c2)| dominates(&c1.interior_graph, &c2.interior_graph, &grid))
        .collect();
    let boundary = p1
        .components()
        .iter()
        .zip(p2.components())
        .map(|(c1, c2)| {
            if overrides.a3 {
                Check::Overridden
            } else {
                Check::Checked(dominates(&c1.boundary_graph, &c2.boundary_graph, &grid))
            }
        })
        .collect();
    let reaction = if overrides.a4 {
        Check::Overridden
    } else {
        Check::Checked(ReactionChecks {
            order: check_order_f(p1.reaction(), p2.reaction(), bx)?,
            sc_first: check_sc(p1.reaction(), bx)?,
            sc_second: check_sc(p2.reaction(), bx)?,
        })
    };
    Ok(AssumptionReport {
        initial: InitialOrder {
            holds: max_violation <= T::zero(),
            max_violation,
        },
        interior,
        boundary,
        reaction,
        sample_box: *bx,
        overrides,
    })
}

/// `max_k max_i (u₁^k - u₂^k)⁺`.
pub fn ordering_defect<T: Real>(s1: &State<T>, s2: &State<T>) -> Result<T> {
    if s1.u.len() != s2.u.len() {
        return config(format!(
            "states have {} and {} components",
            s1.u.len(),
            s2.u.len()
        ));
    }
    let mut d = T::zero();
    for (a, b) in s1.u.iter().zip(&s2.u) {
        if a.len() != b.len() {
            return config(format!("fields have {} and {} nodes", a.len(), b.len()));
        }
        for (x, y) in a.values().iter().zip(b.values()) {
            d = d.max(*x - *y);
        }
    }
    Ok(d)
}

/// `Σ_k ‖(u₁^k - u₂^k)⁺‖²_{L²}`.
fn positive_energy<T: Real>(p: &ProblemSpec<T>, s1: &State<T>, s2: &State<T>) -> Result<T> {
    let mut w = T::zero();
    for (a, b) in s1.u.iter().zip(&s2.u) {
        let n = positive_part_l2(p.mesh(), &a.zip_with(b, |x, y| x - y))?;
        w = w + n * n;
    }
    Ok(w)
}

/// `1e-6 + 10 (h² + dt_max)(1 + max sup)`.
pub fn tol_order<T: Real>(h_squared: T, dt_max: T, max_sup: T) -> T {
    T::lit(1e-6) + T::lit(10.0) * (h_squared + dt_max) * (T::one() + max_sup)
}

/// `m |Ω| tol_order²`, the energy a defect of size `tol_order` can carry.
pub fn tol_gronwall<T: Real>(m: usize, volume: T, tol_order: T) -> T {
    T::from_count(m) * volume * tol_order * tol_order
}

/// How one run of a pair ended.
#[derive(Debug, Clone, PartialEq)]
pub enum RunOutcome<T> {
    Finished(Status<T>),
    /// Still running when the partner terminated at `t`.
    Stopped {
        t: T,
    },
}

impl<T: Real> RunOutcome<T> {
    pub fn blowup_time(&self) -> Option<T> {
        match self {
            RunOutcome::Finished(Status::Blowup { t_b, .. }) => Some(*t_b),
            _ => None,
        }
    }

    pub fn is_solver_failure(&self) -> bool {
        matches!(self, RunOutcome::Finished(Status::SolverFailure { .. }))
    }
}

#[derive(Debug, Clone)]
pub struct ComparisonReport<T> {
    pub assumptions: AssumptionReport<T>,
    /// Shared sample times; index 0 is the initial time.
    pub times: Vec<T>,
    pub dts: Vec<T>,
    /// Ordering defect `d(t)`.
    pub defects: Vec<T>,
    /// Positive-part energy `W(t)`.
    pub energy: Vec<T>,
    /// `G(t) = W(t) - W(s) e^{2 m L_M (t - s)}`, `s` the first time with `W > 0`.
    pub gronwall_margin: Vec<T>,
    pub l_m: T,
    pub tol_order: T,
    pub tol_gronwall: T,
    pub first: Trajectory<T>,
    pub second: Trajectory<T>,
    pub outcome_first: RunOutcome<T>,
    pub outcome_second: RunOutcome<T>,
}

impl<T: Real> ComparisonReport<T> {
    pub fn max_defect(&self) -> T {
        self.defects.iter().copied().fold(T::zero(), T::max)
    }

    pub fn max_gronwall_margin(&self) -> T {
        self.gronwall_margin
            .iter()
            .copied()
            .fold(T::neg_infinity(), T::max)
    }

    /// `W(s)` at the first time the energy is positive (zero if never).
    pub fn energy_at_onset(&self) -> T {
        self.energy
            .iter()
            .copied()
            .find(|w| *w > T::zero())
            .unwrap_or(T::zero())
    }

    pub fn ordering_holds(&self) -> bool {
        self.max_defect() <= self.tol_order
    }

    pub fn gronwall_holds(&self) -> bool {
        self.max_gronwall_margin() <= self.tol_gronwall * (T::one() + self.energy_at_onset())
    }

    pub fn max_dt(&self) -> T {
        self.dts.iter().copied().fold(T::zero(), T::max)
    }

    /// The larger problem blows up no later than the smaller one:
    /// `T_b(second) <= T_b(first) + max dt`. A first run that was stopped at
    /// `t` is alive until at least `t`. `None` if neither run blew up.
    pub fn blowup_order_holds(&self) -> Option<bool> {
        let t1 = match &self.outcome_first {
            RunOutcome::Finished(Status::Blowup { t_b, .. }) => Some(*t_b),
            RunOutcome::Stopped { t } => Some(*t),
            RunOutcome::Finished(_) => None,
        };
        match (self.outcome_second.blowup_time(), t1) {
            (Some(t2), Some(t1)) => Some(t2 <= t1 + self.max_dt()),
            (Some(_), None) => Some(true),
            (None, _) if self.outcome_first.blowup_time().is_some() => Some(false),
            (None, _) => None,
        }
    }

    pub fn any_solver_failure(&self) -> bool {
        self.outcome_first.is_solver_failure() || self.outcome_second.is_solver_failure()
    }
}

/// Advances both problems on one shared step sequence (the smaller of the two
/// proposals) until either terminates, recording the ordering defect and the
/// Gronwall monitor.
pub fn run_pair<T: Real>(
    p1: &ProblemSpec<T>,
    p2: &ProblemSpec<T>,
    tc: &TimeControl<T>,
    overrides: Overrides,
) -> Result<ComparisonReport<T>> {
    let assumptions = check_assumptions(p1, p2, &default_box(p1, p2), overrides)?;
    let mut a = Simulation::new(p1, tc.clone())?;
    let mut b = Simulation::new(p2, tc.clone())?;
    let parallel = p1.mesh().n_nodes() * p1.m() >= PARALLEL_NODES;

    let mut times = vec![T::zero()];
    let mut dts = vec![T::zero()];
    let mut defects = vec![ordering_defect(a.state(), b.state())?];
    let mut energy = vec![positive_energy(p1, a.state(), b.state())?];

    while !a.is_finished() && !b.is_finished() {
        let dt = a.propose_dt().min(b.propose_dt());
        if !(dt >= tc.dt_min) {
            a.collapse(dt);
            b.collapse(dt);
            break;
        }
        let (ra, rb) = if parallel {
            thread::scope(|sc| {
                let ha = sc.spawn(|| a.try_step(dt));
                let rb = b.try_step(dt);
                (ha.join().expect("stepping thread panicked"), rb)
            })
        } else {
            (a.try_step(dt), b.try_step(dt))
        };
        match (ra, rb) {
            (Ok((sa, ra)), Ok((sb, rb))) => {
                a.accept(sa, dt, &ra);
                b.accept(sb, dt, &rb);
                times.push(a.state().t);
                dts.push(dt);
                defects.push(ordering_defect(a.state(), b.state())?);
                energy.push(positive_energy(p1, a.state(), b.state())?);
            }
            (ra, rb) => {
                if let Err(e) = ra {
                    a.reject(dt, &e);
                }
                if let Err(e) = rb {
                    b.reject(dt, &e);
                }
            }
        }
    }

    let outcome = |s: &Simulation<T>, other: &Simulation<T>| {
        if s.is_finished() {
            RunOutcome::Finished(s.trajectory().status.clone())
        } else {
            RunOutcome::Stopped { t: other.state().t }
        }
    };
    let outcome_first = outcome(&a, &b);
    let outcome_second = outcome(&b, &a);

    let max_sup = a
        .trajectory()
        .sup_series()
        .into_iter()
        .chain(b.trajectory().sup_series())
        .filter(|v| v.is_finite())
        .fold(T::zero(), T::max);
    let nonneg =
        a.trajectory().min_values[0] >= T::zero() && b.trajectory().min_values[0] >= T::zero();
    let bx = box_for(p1.m(), max_sup.max(T::one()), nonneg);
    let l_m = lipschitz_bound(p1.reaction(), &bx)?.max(lipschitz_bound(p2.reaction(), &bx)?);

    let rate = T::lit(2.0) * T::from_count(p1.m()) * l_m;
    let onset = energy.iter().position(|w| *w > T::zero());
    let gronwall_margin = energy
        .iter()
        .zip(&times)
        .enumerate()
        .map(|(i, (w, t))| match onset {
            Some(s) if i >= s => {
                let growth = (rate * (*t - times[s])).exp();
                *w - energy[s] * growth
            }
            _ => *w,
        })
        .collect();

    let dt_max = dts.iter().copied().fold(T::zero(), T::max);
    let tol_order = tol_order(p1.mesh().h_squared(), dt_max, max_sup);
    let tol_gronwall = tol_gronwall(p1.m(), p1.mesh().volume(), tol_order);

    Ok(ComparisonReport {
        assumptions,
        times,
        dts,
        defects,
        energy,
        gronwall_margin,
        l_m,
        tol_order,
        tol_gronwall,
        first: a.into_trajectory(),
        second: b.into_trajectory(),
        outcome_first,
        outcome_second,
    })
}

#[derive(Debug, Clone)]
pub struct BlowupOrderReport<T> {
    pub trajectories: Vec<Trajectory<T>>,
    /// Estimated blow-up time per spec (`None` if it did not blow up).
    pub blowup_times: Vec<Option<T>>,
    /// Largest accepted step over all runs.
    pub slack: T,
    pub holds: bool,
    pub diagnostics: Vec<String>,
}

/// Runs every spec independently and checks that the blow-up times are
/// nondecreasing along the list, within `slack`.
pub fn blowup_order_experiment<T: Real>(
    specs: &[ProblemSpec<T>],
    tc: &TimeControl<T>,
) -> Result<BlowupOrderReport<T>> {
    let trajectories = thread::scope(|sc| {
        let handles: Vec<_> = specs.iter().map(|p| sc.spawn(move || run(p, tc))).collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("run thread panicked"))
            .collect::<Result<Vec<_>>>()
    })?;
    let blowup_times: Vec<Option<T>> = trajectories.iter().map(Trajectory::blowup_time).collect();
    let slack = trajectories
        .iter()
        .map(Trajectory::max_dt)
        .fold(T::zero(), T::max);
    let mut diagnostics = Vec::new();
    for (i, tr) in trajectories.iter().enumerate() {
        if !tr.status.is_blowup() {
            diagnostics.push(format!(
                "run {i} ended with status {} at t={} (sup {})",
                tr.status.name(),
                tr.final_time(),
                tr.final_state.sup_norm()
            ));
        }
    }
    for i in 1..blowup_times.len() {
        if let (Some(a), Some(b)) = (blowup_times[i - 1], blowup_times[i]) {
            if a > b + slack {
                diagnostics.push(format!(
                    "T_b[{}]={a} exceeds T_b[{i}]={b} by more than {slack}",
                    i - 1
                ));
            }
        }
    }
    Ok(BlowupOrderReport {
        holds: diagnostics.is_empty(),
        trajectories,
        blowup_times,
        slack,
        diagnostics,
    })
}

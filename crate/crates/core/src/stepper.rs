//! Semi-implicit time integration: reaction frozen at the previous state,
//! diffusion and graphs implicit, nodal inclusions solved by nonlinear
//! Gauss–Seidel. Adaptive steps, blow-up detection and the local existence
//! horizon live here as well.

use crate::error::{config, Error, Result};
use crate::graphs::{solve_inclusion, MonotoneGraph};
use crate::mesh::{diffusion_stencil, sup_norm, Field, Mesh, NodeStencil};
use crate::num::{abs_tol, Real};
use crate::reactions::{ell, Reaction};

const SWEEP_TOL: f64 = 1e-10;
const MAX_SWEEPS: usize = 500;
/// Sweeps below which a step counts as easy and the solver cap may grow.
const EASY_SWEEPS: usize = 60;
const BLOWUP_FIT_LONG: usize = 10;
const BLOWUP_FIT_SHORT: usize = 5;

/// One unknown `u^k` of the system.
#[derive(Debug, Clone)]
pub struct ComponentSpec<T> {
    pub diffusion: T,
    pub interior_graph: MonotoneGraph<T>,
    pub boundary_graph: MonotoneGraph<T>,
    pub initial: Field<T>,
}

/// `u_t - a^k Δu + β^k(u) ∋ F^k(U)` in Ω, `-a^k ∂_ν u ∈ γ^k(u)` on ∂Ω.
#[derive(Debug, Clone)]
pub struct ProblemSpec<T> {
    mesh: Mesh<T>,
    components: Vec<ComponentSpec<T>>,
    reaction: Reaction<T>,
}

impl<T: Real> ProblemSpec<T> {
    pub fn new(
        mesh: Mesh<T>,
        components: Vec<ComponentSpec<T>>,
        reaction: Reaction<T>,
    ) -> Result<Self> {
        if components.is_empty() {
            return config("problem needs at least one component");
        }
        reaction.validate()?;
        if reaction.components() != components.len() {
            return config(format!(
                "reaction has {} components but the problem has {}",
                reaction.components(),
                components.len()
            ));
        }
        for (k, c) in components.iter().enumerate() {
            if !(c.diffusion > T::zero()) || !c.diffusion.is_finite() {
                return config(format!(
                    "components[{k}].diffusion must be > 0, got {}",
                    c.diffusion
                ));
            }
            mesh.check(&c.initial)?;
            if !c.initial.is_finite() {
                return config(format!("components[{k}].initial must be finite"));
            }
        }
        Ok(Self {
            mesh,
            components,
            reaction,
        })
    }

    pub fn mesh(&self) -> &Mesh<T> {
        &self.mesh
    }

    pub fn components(&self) -> &[ComponentSpec<T>] {
        &self.components
    }

    pub fn reaction(&self) -> &Reaction<T> {
        &self.reaction
    }

    pub fn m(&self) -> usize {
        self.components.len()
    }

    /// Initial data projected onto the closed graph domains: `D(β)` at every
    /// node, additionally `D(γ)` on boundary nodes.
    pub fn initial_state(&self) -> State<T> {
        let u = self
            .components
            .iter()
            .map(|c| {
                let vals = c
                    .initial
                    .values()
                    .iter()
                    .enumerate()
                    .map(|(node, &v)| {
                        let v = c.interior_graph.project(v);
                        if self.mesh.is_boundary(node) {
                            c.interior_graph.project(c.boundary_graph.project(v))
                        } else {
                            v
                        }
                    })
                    .collect();
                Field(vals)
            })
            .collect();
        State { t: T::zero(), u }
    }

    /// Same problem with different initial data.
    pub fn with_initial(&self, initial: Vec<Field<T>>) -> Result<Self> {
        if initial.len() != self.m() {
            return config(format!(
                "expected {} initial fields, got {}",
                self.m(),
                initial.len()
            ));
        }
        let mut components = self.components.clone();
        for (c, f) in components.iter_mut().zip(initial) {
            c.initial = f;
        }
        Self::new(self.mesh.clone(), components, self.reaction.clone())
    }
}

/// Time and one field per component.
#[derive(Debug, Clone, PartialEq)]
pub struct State<T> {
    pub t: T,
    pub u: Vec<Field<T>>,
}

impl<T: Real> State<T> {
    pub fn sup_norms(&self) -> Vec<T> {
        self.u.iter().map(sup_norm).collect()
    }

    /// Largest sup-norm over components.
    pub fn sup_norm(&self) -> T {
        self.u.iter().map(sup_norm).fold(T::zero(), T::max)
    }

    /// Smallest nodal value over all components.
    pub fn min_value(&self) -> T {
        self.u.iter().map(Field::min).fold(T::infinity(), T::min)
    }

    pub fn is_finite(&self) -> bool {
        self.u.iter().all(Field::is_finite)
    }

    /// Nodal vector `U_i = (u^1_i, ..., u^m_i)`.
    pub fn node(&self, i: usize) -> Vec<T> {
        self.u.iter().map(|f| f.0[i]).collect()
    }
}

/// Adaptive stepping parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeControl<T> {
    pub t_end: T,
    pub dt_init: T,
    pub dt_min: T,
    /// Sup-norm at which a run is declared to blow up.
    pub blowup_threshold: T,
    /// Fraction of the reaction time scale allowed per step.
    pub safety: T,
    pub max_steps: usize,
}

impl<T: Real> TimeControl<T> {
    /// Defaults: `dt_init = 1e-3`, `dt_min = 1e-12`, `B = 1e8`, `safety = 0.05`.
    pub fn new(t_end: T) -> Self {
        Self {
            t_end,
            dt_init: T::lit(1e-3),
            dt_min: T::lit(1e-12),
            blowup_threshold: T::lit(1e8),
            safety: T::lit(0.05),
            max_steps: 1_000_000,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_end > T::zero()) || !self.t_end.is_finite() {
            return config(format!("t_end must be > 0, got {}", self.t_end));
        }
        if !(self.dt_min > T::zero() && self.dt_min <= self.dt_init) {
            return config(format!(
                "need 0 < dt_min <= dt_init, got dt_min={}, dt_init={}",
                self.dt_min, self.dt_init
            ));
        }
        if !(self.blowup_threshold >= T::lit(1e3)) {
            return config(format!(
                "blowup_threshold must be >= 1e3, got {}",
                self.blowup_threshold
            ));
        }
        if !(self.safety > T::zero() && self.safety <= T::one()) {
            return config(format!("safety must lie in (0, 1], got {}", self.safety));
        }
        if self.max_steps == 0 {
            return config("max_steps must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Status<T> {
    Completed,
    /// `t_b` is the reciprocal-extrapolation estimate of the blow-up time.
    Blowup {
        t_b: T,
        ci_width: T,
    },
    SolverFailure {
        residual: f64,
        note: String,
    },
}

impl<T> Status<T> {
    pub fn name(&self) -> &'static str {
        match self {
            Status::Completed => "completed",
            Status::Blowup { .. } => "blowup",
            Status::SolverFailure { .. } => "solver_failure",
        }
    }

    pub fn is_blowup(&self) -> bool {
        matches!(self, Status::Blowup { .. })
    }
}

/// Accepted samples of a run; index 0 is the initial state.
#[derive(Debug, Clone)]
pub struct Trajectory<T> {
    pub times: Vec<T>,
    /// Step that produced each sample (0 for the initial one).
    pub dts: Vec<T>,
    /// `sup_norms[i][k]` is `‖u^k(times[i])‖_∞`.
    pub sup_norms: Vec<Vec<T>>,
    /// Smallest nodal value over all components per sample.
    pub min_values: Vec<T>,
    pub snapshots: Vec<State<T>>,
    pub final_state: State<T>,
    pub status: Status<T>,
}

impl<T: Real> Trajectory<T> {
    /// Largest component sup-norm per sample.
    pub fn sup_series(&self) -> Vec<T> {
        self.sup_norms
            .iter()
            .map(|s| s.iter().copied().fold(T::zero(), T::max))
            .collect()
    }

    pub fn max_dt(&self) -> T {
        self.dts.iter().copied().fold(T::zero(), T::max)
    }

    pub fn final_time(&self) -> T {
        *self
            .times
            .last()
            .expect("trajectory holds the initial sample")
    }

    /// Estimated blow-up time, if the run blew up.
    pub fn blowup_time(&self) -> Option<T> {
        match self.status {
            Status::Blowup { t_b, .. } => Some(t_b),
            _ => None,
        }
    }
}

/// Verdict of [`detect_blowup`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BlowupVerdict<T> {
    None,
    Blowup { t_b: T, ci_width: T },
}

/// Zero crossing of the least-squares line through `(t, 1/sup)`.
fn reciprocal_fit<T: Real>(times: &[T], sups: &[T]) -> Option<T> {
    let n = times.len();
    if n < 2 {
        return None;
    }
    let nn = T::from_count(n);
    let inv: Vec<T> = sups.iter().map(|s| T::one() / *s).collect();
    let tm = times.iter().fold(T::zero(), |a, t| a + *t) / nn;
    let ym = inv.iter().fold(T::zero(), |a, y| a + *y) / nn;
    let (mut sxy, mut sxx) = (T::zero(), T::zero());
    for (t, y) in times.iter().zip(&inv) {
        sxy = sxy + (*t - tm) * (*y - ym);
        sxx = sxx + (*t - tm) * (*t - tm);
    }
    if !(sxx > T::zero()) {
        return None;
    }
    let slope = sxy / sxx;
    if !(slope < T::zero()) {
        return None;
    }
    let tb = tm - ym / slope;
    tb.is_finite().then_some(tb)
}

/// Extrapolates `1/sup` over the last 10 samples (and the last 5 for the
/// spread) to its zero crossing.
pub fn extrapolate_blowup<T: Real>(times: &[T], sups: &[T]) -> Option<(T, T)> {
    let valid: Vec<(T, T)> = times
        .iter()
        .zip(sups)
        .filter(|(_, s)| s.is_finite() && **s > T::zero())
        .map(|(t, s)| (*t, *s))
        .collect();
    let tail = |n: usize| {
        let start = valid.len().saturating_sub(n);
        let (t, s): (Vec<T>, Vec<T>) = valid[start..].iter().copied().unzip();
        reciprocal_fit(&t, &s)
    };
    let long = tail(BLOWUP_FIT_LONG)?;
    let width = tail(BLOWUP_FIT_SHORT).map_or(T::zero(), |short| (long - short).abs());
    Some((long, width))
}

/// Blow-up verdict of a finished trajectory. Only runs whose status is
/// blow-up are classified as such; the estimate is recomputed from the samples.
pub fn detect_blowup<T: Real>(traj: &Trajectory<T>) -> BlowupVerdict<T> {
    let Status::Blowup { t_b, ci_width } = traj.status else {
        return BlowupVerdict::None;
    };
    match extrapolate_blowup(&traj.times, &traj.sup_series()) {
        Some((t_b, ci_width)) => BlowupVerdict::Blowup { t_b, ci_width },
        None => BlowupVerdict::Blowup { t_b, ci_width },
    }
}

/// `T_0 = 1 / (2 ℓ(‖u_0‖_∞ + 1))`, the horizon on which `‖u(t)‖_∞ <= ‖u_0‖_∞ + 1`.
pub fn local_existence_horizon<T: Real>(u0_sup: T, f: &Reaction<T>) -> Result<T> {
    if !(u0_sup >= T::zero()) {
        return config(format!("u0_sup must be >= 0, got {u0_sup}"));
    }
    Ok(T::one() / (T::lit(2.0) * ell(f, u0_sup + T::one())))
}

/// Precomputed per-problem data used by every step.
#[derive(Debug, Clone)]
struct Stepper<'p, T> {
    problem: &'p ProblemSpec<T>,
    stencil: Vec<NodeStencil<T>>,
}

/// Outcome of one backward-Euler solve.
#[derive(Debug, Clone)]
pub struct StepReport {
    pub sweeps: usize,
    pub residual: f64,
}

impl<'p, T: Real> Stepper<'p, T> {
    fn new(problem: &'p ProblemSpec<T>) -> Self {
        Self {
            problem,
            stencil: diffusion_stencil(&problem.mesh),
        }
    }

    /// `S^k + dt F^k(S)` at every node.
    fn explicit_rhs(&self, s: &State<T>, dt: T) -> Vec<Vec<T>> {
        let m = self.problem.m();
        let n = self.problem.mesh.n_nodes();
        let mut rhs = vec![vec![T::zero(); n]; m];
        let mut f = vec![T::zero(); m];
        for i in 0..n {
            self.problem.reaction.eval_into(&s.node(i), &mut f);
            for (k, row) in rhs.iter_mut().enumerate() {
                row[i] = s.u[k].0[i] + dt * f[k];
            }
        }
        rhs
    }

    fn step(&self, s: &State<T>, dt: T) -> Result<(State<T>, StepReport)> {
        if !(dt > T::zero()) || !dt.is_finite() {
            return config(format!("time step must be > 0, got {dt}"));
        }
        if !s.is_finite() {
            return Err(Error::InvariantViolation("state is not finite".into()));
        }
        let rhs = self.explicit_rhs(s, dt);
        let mut out = Vec::with_capacity(self.problem.m());
        let mut report = StepReport {
            sweeps: 0,
            residual: 0.0,
        };
        for (k, comp) in self.problem.components.iter().enumerate() {
            let (field, r) = self.solve_component(comp, &s.u[k].0, &rhs[k], dt)?;
            report.sweeps = report.sweeps.max(r.sweeps);
            report.residual = report.residual.max(r.residual);
            out.push(Field(field));
        }
        Ok((
            State {
                t: s.t + dt,
                u: out,
            },
            report,
        ))
    }

    /// Gauss–Seidel on `u + dt a (-Δ_h u) + dt flux γ(u) + dt β(u) ∋ rhs`.
    fn solve_component(
        &self,
        comp: &ComponentSpec<T>,
        start: &[T],
        rhs: &[T],
        dt: T,
    ) -> Result<(Vec<T>, StepReport)> {
        if rhs.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvariantViolation(
                "non-finite reaction update".into(),
            ));
        }
        let a = comp.diffusion;
        let mut u = start.to_vec();
        let mut change = T::zero();
        let rel_tol = T::lit(SWEEP_TOL).max(T::epsilon() * T::lit(8.0));
        for sweep in 1..=MAX_SWEEPS {
            change = T::zero();
            let mut scale = T::one();
            for (i, st) in self.stencil.iter().enumerate() {
                let d = T::one() + dt * a * st.diag;
                let coupling = st
                    .neighbors()
                    .iter()
                    .fold(T::zero(), |acc, (j, w)| acc + *w * u[*j]);
                let s = (rhs[i] + dt * a * coupling) / d;
                let terms = [
                    (dt * st.flux / d, &comp.boundary_graph),
                    (dt / d, &comp.interior_graph),
                ];
                let new = solve_inclusion(&terms, s)?;
                change = change.max((new - u[i]).abs());
                scale = scale.max(new.abs());
                u[i] = new;
            }
            if change <= rel_tol * scale {
                return Ok((
                    u,
                    StepReport {
                        sweeps: sweep,
                        residual: change.to_f64_lossy(),
                    },
                ));
            }
        }
        Err(Error::NonConvergence {
            iterations: MAX_SWEEPS,
            residual: change.to_f64_lossy(),
        })
    }
}

/// One backward-Euler step with the reaction frozen at `s`.
pub fn step<T: Real>(p: &ProblemSpec<T>, s: &State<T>, dt: T) -> Result<State<T>> {
    Stepper::new(p).step(s, dt).map(|(next, _)| next)
}

/// A run in progress. Exposes proposal, trial and acceptance separately so
/// that two runs can share one step sequence.
#[derive(Debug, Clone)]
pub struct Simulation<'p, T> {
    stepper: Stepper<'p, T>,
    tc: TimeControl<T>,
    state: State<T>,
    solver_cap: T,
    last_residual: f64,
    snapshot_times: Vec<T>,
    traj: Trajectory<T>,
    finished: bool,
}

impl<'p, T: Real> Simulation<'p, T> {
    pub fn new(problem: &'p ProblemSpec<T>, tc: TimeControl<T>) -> Result<Self> {
        tc.validate()?;
        let state = problem.initial_state();
        let traj = Trajectory {
            times: vec![state.t],
            dts: vec![T::zero()],
            sup_norms: vec![state.sup_norms()],
            min_values: vec![state.min_value()],
            snapshots: Vec::new(),
            final_state: state.clone(),
            status: Status::Completed,
        };
        let mut sim = Self {
            stepper: Stepper::new(problem),
            tc,
            state,
            solver_cap: T::infinity(),
            last_residual: 0.0,
            snapshot_times: Vec::new(),
            traj,
            finished: false,
        };
        if !sim.state.is_finite() {
            sim.finish(Status::SolverFailure {
                residual: f64::NAN,
                note: "initial data not finite".into(),
            });
        }
        Ok(sim)
    }

    /// Requests full state snapshots at the given times; steps are shortened
    /// to land on them exactly.
    pub fn with_snapshots(mut self, times: &[T]) -> Self {
        let mut ts: Vec<T> = times
            .iter()
            .copied()
            .filter(|t| *t >= T::zero() && *t <= self.tc.t_end)
            .collect();
        ts.sort_by(|a, b| a.partial_cmp(b).expect("finite snapshot times"));
        ts.dedup();
        if ts.first() == Some(&T::zero()) {
            self.traj.snapshots.push(self.state.clone());
            ts.remove(0);
        }
        self.snapshot_times = ts;
        self
    }

    pub fn state(&self) -> &State<T> {
        &self.state
    }

    pub fn problem(&self) -> &'p ProblemSpec<T> {
        self.stepper.problem
    }

    pub fn time_control(&self) -> &TimeControl<T> {
        &self.tc
    }

    pub fn is_finished(&self) -> bool {
        self.finished
    }

    pub fn trajectory(&self) -> &Trajectory<T> {
        &self.traj
    }

    pub fn into_trajectory(self) -> Trajectory<T> {
        self.traj
    }

    /// Step size this run would take next:
    /// `min(dt_init, growth cap, stability cap, solver cap, time to the next stop)`.
    ///
    /// The growth cap limits the explicit reaction update to a `safety`
    /// fraction of `1 + ‖u^k‖_∞`; the stability cap keeps
    /// `dt |∂F^k/∂u_k| <= safety` so the explicit part stays monotone.
    pub fn propose_dt(&self) -> T {
        let p = self.stepper.problem;
        let m = p.m();
        let n = p.mesh.n_nodes();
        let mut f_sup = vec![T::zero(); m];
        let mut diag_sup = T::zero();
        let mut f = vec![T::zero(); m];
        for i in 0..n {
            let node = self.state.node(i);
            p.reaction.eval_into(&node, &mut f);
            for k in 0..m {
                f_sup[k] = f_sup[k].max(f[k].abs());
                diag_sup = diag_sup.max(p.reaction.diag_partial(&node, k).abs());
            }
        }
        let sups = self.state.sup_norms();
        let mut dt = self.tc.dt_init.min(self.solver_cap);
        for k in 0..m {
            if f_sup[k] > T::zero() {
                dt = dt.min(self.tc.safety * (T::one() + sups[k]) / f_sup[k]);
            }
        }
        if diag_sup > T::zero() {
            dt = dt.min(self.tc.safety / diag_sup);
        }
        let mut stop = self.tc.t_end;
        if let Some(&snap) = self.snapshot_times.first() {
            stop = stop.min(snap);
        }
        dt.min(stop - self.state.t)
    }

    /// Backward-Euler trial from the current state; does not modify the run.
    pub fn try_step(&self, dt: T) -> Result<(State<T>, StepReport)> {
        self.stepper.step(&self.state, dt)
    }

    /// Records a failed trial: the solver cap drops to half the attempted step.
    pub fn reject(&mut self, dt: T, err: &Error) {
        self.solver_cap = dt / T::lit(2.0);
        self.last_residual = match err {
            Error::NonConvergence { residual, .. } => *residual,
            _ => f64::NAN,
        };
    }

    /// Accepts a trial state and classifies termination.
    pub fn accept(&mut self, next: State<T>, dt: T, report: &StepReport) {
        if report.sweeps <= EASY_SWEEPS && self.solver_cap.is_finite() {
            self.solver_cap = self.solver_cap * T::lit(1.25);
        }
        let mut next = next;
        let t_end = self.tc.t_end;
        if t_end - next.t <= self.tc.dt_min.max(abs_tol(1e-14, t_end)) {
            next.t = t_end;
        }
        if let Some(&snap) = self.snapshot_times.first() {
            if (snap - next.t).abs() <= self.tc.dt_min.max(abs_tol(1e-14, snap)) {
                next.t = snap;
                self.traj.snapshots.push(next.clone());
                self.snapshot_times.remove(0);
            }
        }
        self.traj.times.push(next.t);
        self.traj.dts.push(dt);
        self.traj.sup_norms.push(next.sup_norms());
        self.traj.min_values.push(next.min_value());
        self.state = next;
        let sup = self.state.sup_norm();
        if !self.state.is_finite() || sup >= self.tc.blowup_threshold {
            self.finish_blowup();
        } else if self.state.t >= t_end {
            self.finish(Status::Completed);
        } else if self.traj.times.len() > self.tc.max_steps {
            self.finish(Status::SolverFailure {
                residual: self.last_residual,
                note: format!("step budget of {} exhausted", self.tc.max_steps),
            });
        }
    }

    fn sup_increasing(&self) -> bool {
        let s = self.traj.sup_series();
        s.len() >= 2 && s[s.len() - 1] > s[s.len() - 2]
    }

    /// Handles a proposal below `dt_min`: blow-up if the norm is growing,
    /// solver failure otherwise.
    pub fn collapse(&mut self, dt: T) {
        if self.sup_increasing() {
            self.finish_blowup();
        } else {
            self.finish(Status::SolverFailure {
                residual: self.last_residual,
                note: format!("time step collapsed to {dt} without norm growth"),
            });
        }
    }

    fn finish_blowup(&mut self) {
        let (t_b, ci_width) = extrapolate_blowup(&self.traj.times, &self.traj.sup_series())
            .unwrap_or((self.state.t, T::zero()));
        self.finish(Status::Blowup { t_b, ci_width });
    }

    fn finish(&mut self, status: Status<T>) {
        self.traj.status = status;
        self.traj.final_state = self.state.clone();
        self.finished = true;
    }

    /// Advances by one accepted step (retrying with smaller steps as needed).
    /// Returns `false` once the run has terminated.
    pub fn advance(&mut self) -> bool {
        while !self.finished {
            let dt = self.propose_dt();
            if !(dt >= self.tc.dt_min) {
                self.collapse(dt);
                break;
            }
            match self.try_step(dt) {
                Ok((next, report)) => {
                    self.accept(next, dt, &report);
                    return true;
                }
                Err(e) => self.reject(dt, &e),
            }
        }
        false
    }
}

/// Runs to `t_end`, blow-up, or solver failure.
pub fn run<T: Real>(p: &ProblemSpec<T>, tc: &TimeControl<T>) -> Result<Trajectory<T>> {
    run_with(p, tc, |_| {})
}

/// Like [`run`], calling `observer` on the initial state and every accepted state.
pub fn run_with<T: Real>(
    p: &ProblemSpec<T>,
    tc: &TimeControl<T>,
    mut observer: impl FnMut(&State<T>),
) -> Result<Trajectory<T>> {
    let mut sim = Simulation::new(p, tc.clone())?;
    observer(sim.state());
    while sim.advance() {
        observer(sim.state());
    }
    Ok(sim.into_trajectory())
}

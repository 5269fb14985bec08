//! Finite-difference solver and comparison harness for reaction–diffusion
//! systems whose absorption and boundary flux laws are maximal monotone graphs.
//!
//! Everything numerical is generic over [`Real`] (`f32` or `f64`); the `*64`
//! and `*32` aliases below name the common instantiations.
//!
//! ```
//! use mmrd::{build_mesh, make_graph, run, ComponentSpec, Field, GraphSpec, Problem64, Reaction, TimeControl};
//!
//! let mesh = build_mesh(1, &[1.0], &[21]).unwrap();
//! let comp = ComponentSpec {
//!     diffusion: 1.0,
//!     interior_graph: make_graph(GraphSpec::Zero).unwrap(),
//!     boundary_graph: make_graph(GraphSpec::Dirichlet).unwrap(),
//!     initial: Field::constant(&mesh, 1.0),
//! };
//! let problem: Problem64 = mmrd::ProblemSpec::new(mesh, vec![comp], Reaction::Power { p: 3.0 }).unwrap();
//! let traj = run(&problem, &TimeControl::new(0.01)).unwrap();
//! assert_eq!(traj.status.name(), "completed");
//! ```

// `!(x > 0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod compare;
pub mod error;
pub mod graphs;
pub mod mesh;
pub mod num;
pub mod reactions;
pub mod spectral;
pub mod stepper;

pub use compare::{
    blowup_order_experiment, check_assumptions, default_box, ordering_defect, run_pair,
    tol_gronwall, tol_order, AssumptionReport, BlowupOrderReport, Check, ComparisonReport,
    InitialOrder, Overrides, ReactionChecks, RunOutcome,
};
pub use error::{Error, Result};
pub use graphs::{
    dominates, make_graph, solve_inclusion, Dominance, DominanceMode, GraphKind, GraphSpec,
    MonotoneGraph, RGrid, ValueSet,
};
pub use mesh::{
    apply_diffusion, build_mesh, diffusion_stencil, integrate, positive_part_l2, sup_norm, Field,
    Mesh, NodeStencil,
};
pub use num::Real;
pub use reactions::{
    check_order_f, check_sc, ell, eval_reaction, lipschitz_bound, OrderVerdict, Reaction,
    SampleBox, ScVerdict,
};
pub use spectral::{
    check_nr_initial, kaplan_threshold, kaplan_y, kaplan_z, principal_eigenpair, rayleigh_quotient,
    riccati_blowup_time, EigenMethod, EigenPair, NrCondition, NrInitialCheck, NrVerdict,
};
pub use stepper::{
    detect_blowup, extrapolate_blowup, local_existence_horizon, run, run_with, step, BlowupVerdict,
    ComponentSpec, ProblemSpec, Simulation, State, Status, StepReport, TimeControl, Trajectory,
};

pub type Graph64 = MonotoneGraph<f64>;
pub type Mesh64 = Mesh<f64>;
pub type Field64 = Field<f64>;
pub type Reaction64 = Reaction<f64>;
pub type Problem64 = ProblemSpec<f64>;
pub type State64 = State<f64>;
pub type TimeControl64 = TimeControl<f64>;
pub type Trajectory64 = Trajectory<f64>;
pub type EigenPair64 = EigenPair<f64>;
pub type ComparisonReport64 = ComparisonReport<f64>;

pub type Graph32 = MonotoneGraph<f32>;
pub type Mesh32 = Mesh<f32>;
pub type Field32 = Field<f32>;
pub type Problem32 = ProblemSpec<f32>;
pub type Trajectory32 = Trajectory<f32>;

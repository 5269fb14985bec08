//! Scalar maximal monotone graphs.
//!
//! A graph is stored as a closed domain interval `[lo, hi]` (endpoints may be
//! infinite), a single-valued nondecreasing selection `g` on the interior, and
//! optional vertical half-lines attached at finite endpoints. Every graph the
//! solvers need (Dirichlet, Neumann, power-law flux, the nonnegative extensions
//! and the obstacle cut-off) has at most endpoint multivaluedness, so this
//! representation is exact for them.
//!
//! Graphs only enter the time stepper through [`solve_inclusion`], i.e. through
//! resolvents `(I + λγ)^{-1}`.

use std::fmt;
use std::sync::Arc;

use crate::error::{config, Error, Result};
use crate::num::{abs_tol, Real};

const BISECTION_TOL: f64 = 1e-12;
const BISECTION_MAX_ITER: usize = 200;

/// Constructor parameters for the named graph families.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GraphSpec<T> {
    /// `γ ≡ 0` on ℝ (homogeneous Neumann flux, or no interior term).
    Zero,
    /// `γ(r) = α r`.
    Linear { alpha: T },
    /// `γ(r) = α |r|^{q-2} r` on ℝ.
    Power { alpha: T, q: T },
    /// Domain `{0}` with `γ(0) = ℝ` (homogeneous Dirichlet condition).
    Dirichlet,
    /// Power law on `[0, ∞)` with `γ(0) = (-∞, 0]`.
    ExtendedPower { alpha: T, q: T },
    /// Zero on `[0, ∞)` with `γ(0) = (-∞, 0]`.
    ExtendedNeumann,
    /// Subdifferential of the indicator of `[-M, M]`.
    Obstacle { m: T },
}

/// Family a constructed graph came from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GraphKind<T> {
    Zero,
    Linear { alpha: T },
    Power { alpha: T, q: T },
    Dirichlet,
    ExtendedPower { alpha: T, q: T },
    ExtendedNeumann,
    Obstacle { m: T },
    Custom,
}

type SelectionFn<T> = Arc<dyn Fn(T) -> T + Send + Sync>;

#[derive(Clone)]
enum Selection<T> {
    Zero,
    /// `α sign(r) |r|^{q-1}`.
    Power {
        alpha: T,
        q: T,
    },
    Custom(SelectionFn<T>),
}

impl<T: Real> Selection<T> {
    fn eval(&self, r: T) -> T {
        match self {
            Selection::Zero => T::zero(),
            Selection::Power { alpha, q } => {
                if *q == T::lit(2.0) {
                    *alpha * r
                } else if r == T::zero() {
                    T::zero()
                } else {
                    *alpha * r.signum() * r.abs().powf(*q - T::one())
                }
            }
            Selection::Custom(f) => f(r),
        }
    }
}

/// Closed, possibly unbounded, interval of graph values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValueSet<T> {
    pub lo: T,
    pub hi: T,
}

impl<T: Real> ValueSet<T> {
    pub fn singleton(v: T) -> Self {
        Self { lo: v, hi: v }
    }

    pub fn contains(&self, v: T) -> bool {
        self.lo <= v && v <= self.hi
    }

    pub fn is_singleton(&self) -> bool {
        self.lo == self.hi
    }

    /// Element of minimal absolute value.
    pub fn min_abs(&self) -> T {
        T::zero().max(self.lo).min(self.hi)
    }
}

/// Scalar maximal monotone graph; immutable once built.
#[derive(Clone)]
pub struct MonotoneGraph<T> {
    lo: T,
    hi: T,
    selection: Selection<T>,
    seg_lo: bool,
    seg_hi: bool,
    kind: GraphKind<T>,
}

impl<T: fmt::Debug> fmt::Debug for MonotoneGraph<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MonotoneGraph")
            .field("kind", &self.kind)
            .field("domain", &(&self.lo, &self.hi))
            .field("seg_lo", &self.seg_lo)
            .field("seg_hi", &self.seg_hi)
            .finish()
    }
}

fn check_power<T: Real>(alpha: T, q: T) -> Result<()> {
    if !(alpha >= T::zero()) || !alpha.is_finite() {
        return config(format!("alpha must be >= 0, got {alpha}"));
    }
    if !(q > T::one()) || !q.is_finite() {
        return config(format!("q must be > 1, got {q}"));
    }
    Ok(())
}

impl<T: Real> GraphSpec<T> {
    pub fn validate(&self) -> Result<()> {
        match *self {
            GraphSpec::Zero | GraphSpec::Dirichlet | GraphSpec::ExtendedNeumann => Ok(()),
            GraphSpec::Linear { alpha } => {
                if alpha >= T::zero() && alpha.is_finite() {
                    Ok(())
                } else {
                    config(format!("alpha must be >= 0, got {alpha}"))
                }
            }
            GraphSpec::Power { alpha, q } | GraphSpec::ExtendedPower { alpha, q } => {
                check_power(alpha, q)
            }
            GraphSpec::Obstacle { m } => {
                if m > T::zero() && m.is_finite() {
                    Ok(())
                } else {
                    config(format!("obstacle level M must be > 0, got {m}"))
                }
            }
        }
    }
}

/// Builds the graph described by `spec`.
pub fn make_graph<T: Real>(spec: GraphSpec<T>) -> Result<MonotoneGraph<T>> {
    spec.validate()?;
    let inf = T::infinity();
    let g = match spec {
        GraphSpec::Zero => MonotoneGraph {
            lo: -inf,
            hi: inf,
            selection: Selection::Zero,
            seg_lo: false,
            seg_hi: false,
            kind: GraphKind::Zero,
        },
        GraphSpec::Linear { alpha } => MonotoneGraph {
            lo: -inf,
            hi: inf,
            selection: Selection::Power {
                alpha,
                q: T::lit(2.0),
            },
            seg_lo: false,
            seg_hi: false,
            kind: GraphKind::Linear { alpha },
        },
        GraphSpec::Power { alpha, q } => MonotoneGraph {
            lo: -inf,
            hi: inf,
            selection: Selection::Power { alpha, q },
            seg_lo: false,
            seg_hi: false,
            kind: GraphKind::Power { alpha, q },
        },
        GraphSpec::Dirichlet => MonotoneGraph {
            lo: T::zero(),
            hi: T::zero(),
            selection: Selection::Zero,
            seg_lo: true,
            seg_hi: true,
            kind: GraphKind::Dirichlet,
        },
        GraphSpec::ExtendedPower { alpha, q } => MonotoneGraph {
            lo: T::zero(),
            hi: inf,
            selection: Selection::Power { alpha, q },
            seg_lo: true,
            seg_hi: false,
            kind: GraphKind::ExtendedPower { alpha, q },
        },
        GraphSpec::ExtendedNeumann => MonotoneGraph {
            lo: T::zero(),
            hi: inf,
            selection: Selection::Zero,
            seg_lo: true,
            seg_hi: false,
            kind: GraphKind::ExtendedNeumann,
        },
        GraphSpec::Obstacle { m } => MonotoneGraph {
            lo: -m,
            hi: m,
            selection: Selection::Zero,
            seg_lo: true,
            seg_hi: true,
            kind: GraphKind::Obstacle { m },
        },
    };
    Ok(g)
}

impl<T: Real> MonotoneGraph<T> {
    /// User-supplied graph. `selection` must be nondecreasing and continuous up
    /// to the finite endpoints of `[lo, hi]`; segments may only sit at finite
    /// endpoints.
    pub fn custom<F>(lo: T, hi: T, seg_lo: bool, seg_hi: bool, selection: F) -> Result<Self>
    where
        F: Fn(T) -> T + Send + Sync + 'static,
    {
        if lo.is_nan() || hi.is_nan() || lo > hi {
            return config(format!("invalid graph domain [{lo}, {hi}]"));
        }
        if (seg_lo && lo.is_infinite()) || (seg_hi && hi.is_infinite()) {
            return config("vertical segments require finite endpoints");
        }
        Ok(Self {
            lo,
            hi,
            selection: Selection::Custom(Arc::new(selection)),
            seg_lo,
            seg_hi,
            kind: GraphKind::Custom,
        })
    }

    /// Restriction to `[0, ∞)` with `(-∞, 0]` added to the value set at 0.
    /// Requires `0 ∈ γ(0)`.
    pub fn extended_nonnegative(&self) -> Result<Self> {
        match self.eval(T::zero()) {
            Some(v) if v.contains(T::zero()) => {}
            _ => return config("extension requires 0 in the value set at 0"),
        }
        if self.hi.is_finite() && !self.seg_hi {
            return Err(Error::InvariantViolation(
                "base graph is not maximal at its upper endpoint".into(),
            ));
        }
        let kind = match self.kind {
            GraphKind::Zero => GraphKind::ExtendedNeumann,
            GraphKind::Power { alpha, q } => GraphKind::ExtendedPower { alpha, q },
            GraphKind::Linear { alpha } => GraphKind::ExtendedPower {
                alpha,
                q: T::lit(2.0),
            },
            GraphKind::ExtendedPower { .. } | GraphKind::ExtendedNeumann => self.kind,
            _ => GraphKind::Custom,
        };
        Ok(Self {
            lo: T::zero(),
            hi: self.hi,
            selection: self.selection.clone(),
            seg_lo: true,
            seg_hi: self.seg_hi,
            kind,
        })
    }

    pub fn kind(&self) -> GraphKind<T> {
        self.kind
    }

    /// Domain endpoints `(lo, hi)`, possibly infinite.
    pub fn domain(&self) -> (T, T) {
        (self.lo, self.hi)
    }

    pub fn segments(&self) -> (bool, bool) {
        (self.seg_lo, self.seg_hi)
    }

    pub fn in_domain(&self, r: T) -> bool {
        self.lo <= r && r <= self.hi
    }

    /// Nearest point of the closed domain.
    pub fn project(&self, r: T) -> T {
        r.max(self.lo).min(self.hi)
    }

    /// Selection value, one-sided limits at the endpoints.
    fn g(&self, r: T) -> T {
        self.selection.eval(self.project(r))
    }

    /// Structural equality: same constructor and parameters.
    pub fn same_as(&self, other: &Self) -> bool {
        if let (Selection::Custom(a), Selection::Custom(b)) = (&self.selection, &other.selection) {
            return Arc::ptr_eq(a, b)
                && self.lo == other.lo
                && self.hi == other.hi
                && self.seg_lo == other.seg_lo
                && self.seg_hi == other.seg_hi;
        }
        self.kind != GraphKind::Custom && self.kind == other.kind
    }

    fn is_closed_form(&self) -> bool {
        self.kind != GraphKind::Custom
    }

    /// Value set `γ(r)`, or `None` outside the domain.
    pub fn eval(&self, r: T) -> Option<ValueSet<T>> {
        if r.is_nan() || !self.in_domain(r) {
            return None;
        }
        let v = self.g(r);
        let mut set = ValueSet::singleton(v);
        if r == self.lo && self.seg_lo {
            set.lo = T::neg_infinity();
        }
        if r == self.hi && self.seg_hi {
            set.hi = T::infinity();
        }
        Some(set)
    }

    /// Minimal-absolute-value element of `γ(r)`.
    pub fn min_section(&self, r: T) -> Option<T> {
        self.eval(r).map(|s| s.min_abs())
    }

    /// Unique `x` in the closed domain with `x + λγ(x) ∋ r`.
    pub fn resolvent(&self, lambda: T, r: T) -> Result<T> {
        if !(lambda > T::zero()) {
            return config(format!("resolvent parameter must be > 0, got {lambda}"));
        }
        solve_inclusion(&[(lambda, self)], r)
    }

    /// Yosida approximation `(r - J_λ(r)) / λ`.
    pub fn yosida(&self, lambda: T, r: T) -> Result<T> {
        let x = self.resolvent(lambda, r)?;
        Ok((r - x) / lambda)
    }

    /// Sampled check of `(z1 - z2)(r1 - r2) >= 0` and of the nondecreasing selection.
    pub fn check_monotone(&self, grid: &RGrid<T>) -> Result<()> {
        let pts: Vec<T> = grid
            .points()
            .into_iter()
            .chain([self.lo, self.hi])
            .filter(|r| r.is_finite() && self.in_domain(*r))
            .collect();
        let mut sorted = pts.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite sample points"));
        for w in sorted.windows(2) {
            let (a, b) = (self.eval(w[0]).unwrap(), self.eval(w[1]).unwrap());
            if w[0] < w[1] && a.lo > b.hi {
                return Err(Error::InvariantViolation(format!(
                    "graph decreases between r={} and r={}",
                    w[0], w[1]
                )));
            }
        }
        Ok(())
    }
}

/// Uniform sampling grid on `[lo, hi]` with `n` points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RGrid<T> {
    pub lo: T,
    pub hi: T,
    pub n: usize,
}

impl<T: Real> RGrid<T> {
    pub fn new(lo: T, hi: T, n: usize) -> Self {
        Self { lo, hi, n }
    }

    pub fn points(&self) -> Vec<T> {
        if self.n < 2 {
            return vec![self.lo];
        }
        let step = (self.hi - self.lo) / T::from_count(self.n - 1);
        (0..self.n)
            .map(|i| self.lo + step * T::from_count(i))
            .collect()
    }
}

impl<T: Real> Default for RGrid<T> {
    fn default() -> Self {
        Self::new(T::lit(-10.0), T::lit(10.0), 201)
    }
}

/// Which alternative of the graph-ordering hypothesis was certified.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DominanceMode {
    /// (i): the two graphs coincide.
    Identical,
    /// (ii): `sup γ2(r2) <= inf γ1(r1)` whenever `r1 > r2`.
    Values,
    /// (iii): `sup D(γ1) <= inf D(γ2)`.
    Domains,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Dominance<T> {
    Holds(DominanceMode),
    Fails { r1: T, r2: T },
    Inconclusive,
}

impl<T> Dominance<T> {
    pub fn holds(&self) -> bool {
        matches!(self, Dominance::Holds(_))
    }
}

/// Checks whether `g1` is dominated by `g2` in the sense needed for ordering
/// solutions `u1 <= u2` (the graph of problem 1 pushes harder against growth).
pub fn dominates<T: Real>(
    g1: &MonotoneGraph<T>,
    g2: &MonotoneGraph<T>,
    grid: &RGrid<T>,
) -> Dominance<T> {
    if g1.same_as(g2) {
        return Dominance::Holds(DominanceMode::Identical);
    }
    if g1.hi <= g2.lo {
        return Dominance::Holds(DominanceMode::Domains);
    }
    let mut pts = grid.points();
    pts.extend([g1.lo, g1.hi, g2.lo, g2.hi, T::zero()]);
    pts.retain(|r| r.is_finite());
    pts.sort_by(|a, b| a.partial_cmp(b).expect("finite sample points"));
    pts.dedup();
    let tol = |v: T| abs_tol(1e-12, v);
    for &r1 in &pts {
        let Some(v1) = g1.eval(r1) else { continue };
        for &r2 in pts.iter().take_while(|r2| **r2 < r1) {
            let Some(v2) = g2.eval(r2) else { continue };
            if v2.hi > v1.lo + tol(v1.lo.abs().max(v2.hi.abs()).min(T::max_value())) {
                return Dominance::Fails { r1, r2 };
            }
        }
    }
    let grid_lo = pts.first().copied().unwrap_or(T::zero());
    let grid_hi = pts.last().copied().unwrap_or(T::zero());
    let beyond = |g: &MonotoneGraph<T>| g.lo < grid_lo || g.hi > grid_hi;
    let closed = g1.is_closed_form() && g2.is_closed_form();
    if !closed && (beyond(g1) || beyond(g2)) {
        return Dominance::Inconclusive;
    }
    Dominance::Holds(DominanceMode::Values)
}

/// Solves the scalar inclusion `x + Σ c_i γ_i(x) ∋ s` for `c_i >= 0`.
///
/// The left side is a maximal monotone graph plus the identity, so the
/// solution is unique. Closed forms are used for single projection-type
/// graphs; everything else goes through monotone bisection with capture of the
/// endpoint segments.
pub fn solve_inclusion<T: Real>(terms: &[(T, &MonotoneGraph<T>)], s: T) -> Result<T> {
    if !s.is_finite() {
        return Err(Error::InvariantViolation(format!(
            "non-finite inclusion right-hand side {s}"
        )));
    }
    let live = |&&(c, g): &&(T, &MonotoneGraph<T>)| c > T::zero() && g.kind != GraphKind::Zero;
    let mut lo = T::neg_infinity();
    let mut hi = T::infinity();
    for &(c, g) in terms.iter().filter(live) {
        if c.is_infinite() {
            return config("graph coefficient must be finite");
        }
        lo = lo.max(g.lo);
        hi = hi.min(g.hi);
    }
    if lo > hi {
        return Err(Error::InvariantViolation(
            "empty domain intersection".into(),
        ));
    }
    let mut it = terms.iter().filter(live);
    let (first, second) = (it.next(), it.next());
    match (first, second) {
        (None, _) => return Ok(s),
        (Some(&(c, g)), None) => match g.kind {
            GraphKind::Dirichlet => return Ok(T::zero()),
            GraphKind::Obstacle { m } => return Ok(s.max(-m).min(m)),
            GraphKind::ExtendedNeumann => return Ok(s.max(T::zero())),
            GraphKind::Linear { alpha } => return Ok(s / (T::one() + c * alpha)),
            _ => {}
        },
        _ => {}
    }

    // Value set of x + Σ c_i γ_i(x) at a common domain point.
    let lifted = |x: T| -> ValueSet<T> {
        let mut set = ValueSet::singleton(x);
        for &(c, g) in terms.iter().filter(live) {
            let v = g.eval(x).expect("x lies in every domain");
            set.lo = set.lo + c * v.lo;
            set.hi = set.hi + c * v.hi;
        }
        set
    };
    // Single-valued part on the open domain.
    let h = |x: T| -> T {
        let mut acc = x - s;
        for &(c, g) in terms.iter().filter(live) {
            acc = acc + c * g.g(x);
        }
        acc
    };

    if lo.is_finite() {
        let at = lifted(lo);
        if at.contains(s) {
            return Ok(lo);
        }
        if s < at.lo {
            return Err(Error::InvariantViolation(format!(
                "no solution below the domain endpoint {lo} for r = {s}"
            )));
        }
    }
    if hi.is_finite() {
        let at = lifted(hi);
        if at.contains(s) {
            return Ok(hi);
        }
        if s > at.hi {
            return Err(Error::InvariantViolation(format!(
                "no solution above the domain endpoint {hi} for r = {s}"
            )));
        }
    }
    if lo == hi {
        return Err(Error::InvariantViolation(
            "degenerate domain misses r".into(),
        ));
    }

    let x0 = s.max(lo).min(hi);
    let c0 = h(x0) - (x0 - s);
    let mut a = if lo.is_finite() { lo } else { x0.min(s - c0) };
    let mut b = if hi.is_finite() { hi } else { x0.max(s - c0) };
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::InvariantViolation(
            "unbounded bisection bracket".into(),
        ));
    }
    for _ in 0..BISECTION_MAX_ITER {
        let tol = abs_tol(BISECTION_TOL, a.abs().max(b.abs()));
        if b - a <= tol {
            break;
        }
        let mid = a + (b - a) / T::lit(2.0);
        if mid <= a || mid >= b {
            break;
        }
        if h(mid) >= T::zero() {
            b = mid;
        } else {
            a = mid;
        }
    }
    Ok(b)
}

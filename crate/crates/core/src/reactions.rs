//! Reaction terms `F^k(U)`, the quasimonotone structure check, pointwise
//! ordering of two reactions, and the growth envelope `ℓ(r)`.

use std::fmt;
use std::sync::Arc;

use crate::error::{config, Result};
use crate::num::Real;

type CustomFn<T> = Arc<dyn Fn(&[T], &mut [T]) + Send + Sync>;

/// Single-valued, locally Lipschitz reaction.
#[derive(Clone)]
pub enum Reaction<T> {
    /// `F ≡ 0` with `m` components.
    Zero { m: usize },
    /// `F(u) = |u|^{p-2} u`, `p > 2`.
    Power { p: T },
    /// `F(u) = |u|^{p-2} u + c u⁺`, `p > 2`, `c >= 0`.
    PowerPlus { p: T, c: T },
    /// `F¹ = u₁u₂ - b u₁`, `F² = a u₁`.
    Nuclear { a: T, b: T },
    /// Scalar reaction interpolated linearly from a table (linear extrapolation
    /// outside the knots).
    Table { u: Vec<T>, f: Vec<T> },
    /// Arbitrary closure `(U, out)`.
    Custom { m: usize, f: CustomFn<T> },
}

impl<T: fmt::Debug> fmt::Debug for Reaction<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Reaction::Zero { m } => write!(f, "Zero {{ m: {m} }}"),
            Reaction::Power { p } => write!(f, "Power {{ p: {p:?} }}"),
            Reaction::PowerPlus { p, c } => write!(f, "PowerPlus {{ p: {p:?}, c: {c:?} }}"),
            Reaction::Nuclear { a, b } => write!(f, "Nuclear {{ a: {a:?}, b: {b:?} }}"),
            Reaction::Table { u, .. } => write!(f, "Table {{ knots: {} }}", u.len()),
            Reaction::Custom { m, .. } => write!(f, "Custom {{ m: {m} }}"),
        }
    }
}

impl<T: Real> Reaction<T> {
    pub fn custom<F>(m: usize, f: F) -> Self
    where
        F: Fn(&[T], &mut [T]) + Send + Sync + 'static,
    {
        Reaction::Custom { m, f: Arc::new(f) }
    }

    /// Scalar closure reaction.
    pub fn scalar<F>(f: F) -> Self
    where
        F: Fn(T) -> T + Send + Sync + 'static,
    {
        Self::custom(1, move |u, out| out[0] = f(u[0]))
    }

    pub fn components(&self) -> usize {
        match self {
            Reaction::Zero { m } | Reaction::Custom { m, .. } => *m,
            Reaction::Nuclear { .. } => 2,
            _ => 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Reaction::Zero { m } | Reaction::Custom { m, .. } if *m == 0 => {
                config("reaction needs at least one component")
            }
            Reaction::Power { p } if !(*p > T::lit(2.0)) => {
                config(format!("power reaction needs p > 2, got {p}"))
            }
            Reaction::PowerPlus { p, c } if !(*p > T::lit(2.0)) || !(*c >= T::zero()) => config(
                format!("power_plus reaction needs p > 2 and c >= 0, got p={p}, c={c}"),
            ),
            // a = 0 is admitted: it is the decoupled case with global solutions.
            Reaction::Nuclear { a, b } if !(*a >= T::zero()) || !(*b > T::zero()) => config(
                format!("nuclear reaction needs a >= 0 and b > 0, got a={a}, b={b}"),
            ),
            Reaction::Table { u, f } => {
                if u.len() < 2 || u.len() != f.len() {
                    return config("table reaction needs >= 2 knots and matching value count");
                }
                if u.windows(2).any(|w| !(w[0] < w[1])) {
                    return config("table knots must be strictly increasing");
                }
                if f.iter().chain(u).any(|v| !v.is_finite()) {
                    return config("table entries must be finite");
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// Evaluates all components at `u` into `out`.
    pub fn eval_into(&self, u: &[T], out: &mut [T]) {
        match self {
            Reaction::Zero { .. } => out.iter_mut().for_each(|o| *o = T::zero()),
            Reaction::Power { p } => out[0] = signed_power(u[0], *p - T::one()),
            Reaction::PowerPlus { p, c } => {
                out[0] = signed_power(u[0], *p - T::one()) + *c * u[0].max(T::zero())
            }
            Reaction::Nuclear { a, b } => {
                out[0] = u[0] * u[1] - *b * u[0];
                out[1] = *a * u[0];
            }
            Reaction::Table { u: knots, f } => out[0] = interpolate(knots, f, u[0]),
            Reaction::Custom { f, .. } => f(u, out),
        }
    }

    /// `∂F^k/∂u_k` at `u`; analytic where available.
    pub fn diag_partial(&self, u: &[T], k: usize) -> T {
        match self {
            Reaction::Zero { .. } => T::zero(),
            Reaction::Power { p } => (*p - T::one()) * u[0].abs().powf(*p - T::lit(2.0)),
            Reaction::PowerPlus { p, c } => {
                let pos = if u[0] > T::zero() { *c } else { T::zero() };
                (*p - T::one()) * u[0].abs().powf(*p - T::lit(2.0)) + pos
            }
            Reaction::Nuclear { b, .. } => {
                if k == 0 {
                    u[1] - *b
                } else {
                    T::zero()
                }
            }
            _ => {
                let scale = u.iter().fold(T::one(), |acc, v| acc.max(v.abs()));
                central_difference(self, u, k, k, T::lit(1e-6) * scale)
            }
        }
    }

    /// `F(0) = 0` in every component.
    pub fn vanishes_at_zero(&self) -> bool {
        let m = self.components();
        let zero = vec![T::zero(); m];
        eval_reaction(self, &zero).iter().all(|v| *v == T::zero())
    }
}

fn signed_power<T: Real>(u: T, e: T) -> T {
    if u == T::zero() {
        T::zero()
    } else {
        u.signum() * u.abs().powf(e)
    }
}

fn interpolate<T: Real>(knots: &[T], f: &[T], x: T) -> T {
    let n = knots.len();
    let seg = match knots.iter().position(|k| *k > x) {
        Some(0) => 0,
        Some(i) => i - 1,
        None => n - 2,
    };
    let (x0, x1) = (knots[seg], knots[seg + 1]);
    let t = (x - x0) / (x1 - x0);
    f[seg] + t * (f[seg + 1] - f[seg])
}

/// `F(U)` as a fresh vector.
pub fn eval_reaction<T: Real>(f: &Reaction<T>, u: &[T]) -> Vec<T> {
    let mut out = vec![T::zero(); f.components()];
    f.eval_into(u, &mut out);
    out
}

fn central_difference<T: Real>(f: &Reaction<T>, u: &[T], k: usize, j: usize, step: T) -> T {
    let mut up = u.to_vec();
    let mut dn = u.to_vec();
    up[j] = up[j] + step;
    dn[j] = dn[j] - step;
    let (fu, fd) = (eval_reaction(f, &up), eval_reaction(f, &dn));
    (fu[k] - fd[k]) / (step + step)
}

/// Axis-aligned sampling box `[lo, hi]^m` with `samples` points per axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleBox<T> {
    pub lo: T,
    pub hi: T,
    pub samples: usize,
}

impl<T: Real> SampleBox<T> {
    /// `|U|_∞ <= radius`.
    pub fn symmetric(radius: T, samples: usize) -> Self {
        Self {
            lo: -radius,
            hi: radius,
            samples,
        }
    }

    /// `0 <= U_k <= radius`, the box seen by nonnegative solutions.
    pub fn nonnegative(radius: T, samples: usize) -> Self {
        Self {
            lo: T::zero(),
            hi: radius,
            samples,
        }
    }

    pub fn radius(&self) -> T {
        self.lo.abs().max(self.hi.abs())
    }

    fn axis(&self) -> Vec<T> {
        let n = self.samples.max(2);
        let step = (self.hi - self.lo) / T::from_count(n - 1);
        (0..n).map(|i| self.lo + step * T::from_count(i)).collect()
    }

    /// Tensor grid of sample points in `m` dimensions.
    pub fn points(&self, m: usize) -> Vec<Vec<T>> {
        let axis = self.axis();
        let mut pts: Vec<Vec<T>> = vec![Vec::new()];
        for _ in 0..m {
            pts = pts
                .into_iter()
                .flat_map(|p| {
                    axis.iter().map(move |v| {
                        let mut q = p.clone();
                        q.push(*v);
                        q
                    })
                })
                .collect();
        }
        pts
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ScVerdict<T> {
    /// Off-diagonal partials are nonnegative on the box; `l_m` bounds all partials.
    Ok { l_m: T },
    /// `∂F^k/∂u_j < 0` at `u`.
    Fail { k: usize, j: usize, u: Vec<T> },
}

impl<T> ScVerdict<T> {
    pub fn is_ok(&self) -> bool {
        matches!(self, ScVerdict::Ok { .. })
    }
}

/// Sampled check of the structure condition: off-diagonal partials `>= 0`
/// and a Lipschitz bound `L_M` over the box (largest sampled partial, plus 10%).
pub fn check_sc<T: Real>(f: &Reaction<T>, bx: &SampleBox<T>) -> Result<ScVerdict<T>> {
    let (fail, l_m) = scan_partials(f, bx, true)?;
    Ok(match fail {
        Some((k, j, u)) => ScVerdict::Fail { k, j, u },
        None => ScVerdict::Ok { l_m },
    })
}

/// Largest sampled `|∂F^k/∂u_j|` on the box, inflated by 10%, regardless of
/// the sign structure.
pub fn lipschitz_bound<T: Real>(f: &Reaction<T>, bx: &SampleBox<T>) -> Result<T> {
    scan_partials(f, bx, false).map(|(_, l)| l)
}

type SignFailure<T> = Option<(usize, usize, Vec<T>)>;

fn scan_partials<T: Real>(
    f: &Reaction<T>,
    bx: &SampleBox<T>,
    stop_on_sign: bool,
) -> Result<(SignFailure<T>, T)> {
    if !(bx.radius() > T::zero()) {
        return config("structure-condition box must have positive radius");
    }
    let m = f.components();
    let step = T::lit(1e-6) * bx.radius().max(T::one());
    let floor = T::lit(-1e-8);
    let mut l_max = T::zero();
    for u in bx.points(m) {
        for k in 0..m {
            for j in 0..m {
                let d = central_difference(f, &u, k, j, step);
                if stop_on_sign && j != k && d < floor {
                    return Ok((Some((k, j, u)), l_max));
                }
                if d.is_finite() {
                    l_max = l_max.max(d.abs());
                }
            }
        }
    }
    Ok((None, l_max * T::lit(1.1)))
}

#[derive(Debug, Clone, PartialEq)]
pub enum OrderVerdict<T> {
    /// `F1^k <= F2^k` at every sample of the box.
    HoldsOnBox,
    Fails {
        k: usize,
        u: Vec<T>,
    },
    Inconclusive,
}

impl<T> OrderVerdict<T> {
    pub fn holds(&self) -> bool {
        matches!(self, OrderVerdict::HoldsOnBox)
    }
}

/// Sampled check of `F1^k(U) <= F2^k(U)` on the box.
pub fn check_order_f<T: Real>(
    f1: &Reaction<T>,
    f2: &Reaction<T>,
    bx: &SampleBox<T>,
) -> Result<OrderVerdict<T>> {
    let m = f1.components();
    if f2.components() != m {
        return config(format!(
            "reactions have {} and {} components",
            m,
            f2.components()
        ));
    }
    let mut inconclusive = false;
    for u in bx.points(m) {
        let (a, b) = (eval_reaction(f1, &u), eval_reaction(f2, &u));
        for k in 0..m {
            if !a[k].is_finite() || !b[k].is_finite() {
                inconclusive = true;
                continue;
            }
            if a[k] > b[k] + T::lit(1e-12) {
                return Ok(OrderVerdict::Fails { k, u });
            }
        }
    }
    Ok(if inconclusive {
        OrderVerdict::Inconclusive
    } else {
        OrderVerdict::HoldsOnBox
    })
}

/// Growth envelope `ℓ(r) = r + sup{|F(τ)| : |τ| <= r}`; for the coupled
/// system the closed form `a r + r²` is used.
pub fn ell<T: Real>(f: &Reaction<T>, r: T) -> T {
    let r = r.max(T::zero());
    match f {
        Reaction::Zero { .. } => r,
        Reaction::Power { p } => r + r.powf(*p - T::one()),
        Reaction::PowerPlus { p, c } => r + r.powf(*p - T::one()) + *c * r,
        Reaction::Nuclear { a, .. } => *a * r + r * r,
        _ => {
            let m = f.components();
            let samples = if m == 1 { 401 } else { 21 };
            let sup = SampleBox::symmetric(r, samples)
                .points(m)
                .iter()
                .flat_map(|u| eval_reaction(f, u))
                .fold(T::zero(), |acc, v| acc.max(v.abs()));
            r + sup
        }
    }
}

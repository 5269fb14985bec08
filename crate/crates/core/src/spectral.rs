//! Principal Dirichlet eigenpair, the eigenfunction-weighted functionals and
//! the blow-up thresholds built on them.

use crate::error::{config, Error, Result};
use crate::mesh::{integrate, Field, Mesh};
use crate::num::Real;

const EIGEN_TOL: f64 = 1e-10;
const EIGEN_MAX_ITER: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EigenMethod {
    /// Product sine mode of the continuous problem.
    Analytic,
    /// Inverse power iteration on the discrete Dirichlet Laplacian.
    Discrete,
}

/// `(λ₁, φ₁)` of `-Δφ = λφ` with `φ = 0` on the boundary, `∫φ₁ = 1`.
#[derive(Debug, Clone)]
pub struct EigenPair<T> {
    pub lambda1: T,
    pub phi1: Field<T>,
    /// `|∫φ₁ - 1|` after normalization.
    pub normalization_residual: T,
    mesh: Mesh<T>,
}

impl<T: Real> EigenPair<T> {
    pub fn mesh(&self) -> &Mesh<T> {
        &self.mesh
    }
}

pub fn principal_eigenpair<T: Real>(mesh: &Mesh<T>, method: EigenMethod) -> Result<EigenPair<T>> {
    let (lambda1, raw) = match method {
        EigenMethod::Analytic => analytic(mesh),
        EigenMethod::Discrete => discrete(mesh)?,
    };
    let mass = integrate(mesh, &raw)?;
    let phi1 = raw.map(|v| v / mass);
    let normalization_residual = (integrate(mesh, &phi1)? - T::one()).abs();
    Ok(EigenPair {
        lambda1,
        phi1,
        normalization_residual,
        mesh: mesh.clone(),
    })
}

fn analytic<T: Real>(mesh: &Mesh<T>) -> (T, Field<T>) {
    let pi = T::PI();
    let lengths = mesh.lengths();
    let lambda = lengths
        .iter()
        .fold(T::zero(), |acc, l| acc + (pi / *l) * (pi / *l));
    let mut phi = Field::from_fn(mesh, |x| {
        lengths
            .iter()
            .enumerate()
            .fold(T::one(), |acc, (d, l)| acc * (pi * x[d] / *l).sin())
    });
    for node in mesh.boundary_nodes() {
        phi.0[node] = T::zero();
    }
    (lambda, phi)
}

/// Interior-node Dirichlet Laplacian `-Δ_h` applied to `x`.
fn apply_interior<T: Real>(shape: &[usize], inv_h2: &[T], x: &[T], out: &mut [T]) {
    let nx = shape[0];
    let ny = shape.get(1).copied().unwrap_or(1);
    for j in 0..ny {
        for i in 0..nx {
            let id = i + nx * j;
            let mut acc = T::zero();
            let left = if i > 0 { x[id - 1] } else { T::zero() };
            let right = if i + 1 < nx { x[id + 1] } else { T::zero() };
            acc = acc + (x[id] + x[id] - left - right) * inv_h2[0];
            if shape.len() == 2 {
                let down = if j > 0 { x[id - nx] } else { T::zero() };
                let up = if j + 1 < ny { x[id + nx] } else { T::zero() };
                acc = acc + (x[id] + x[id] - down - up) * inv_h2[1];
            }
            out[id] = acc;
        }
    }
}

fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (x, y)| acc + *x * *y)
}

/// Thomas algorithm for the constant tridiagonal `(-c, 2c, -c)` system.
fn solve_tridiagonal<T: Real>(c: T, rhs: &[T]) -> Vec<T> {
    let n = rhs.len();
    let mut cp = vec![T::zero(); n];
    let mut dp = vec![T::zero(); n];
    let (sub, diag) = (-c, c + c);
    cp[0] = sub / diag;
    dp[0] = rhs[0] / diag;
    for i in 1..n {
        let denom = diag - sub * cp[i - 1];
        cp[i] = sub / denom;
        dp[i] = (rhs[i] - sub * dp[i - 1]) / denom;
    }
    let mut x = vec![T::zero(); n];
    x[n - 1] = dp[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = dp[i] - cp[i] * x[i + 1];
    }
    x
}

/// Conjugate gradients for the SPD interior Laplacian.
fn solve_cg<T: Real>(shape: &[usize], inv_h2: &[T], rhs: &[T]) -> Result<Vec<T>> {
    let n = rhs.len();
    let mut x = vec![T::zero(); n];
    let mut r = rhs.to_vec();
    let mut p = r.clone();
    let mut ap = vec![T::zero(); n];
    let mut rr = dot(&r, &r);
    let target = rr * T::lit(1e-28);
    for _ in 0..EIGEN_MAX_ITER {
        if rr <= target {
            return Ok(x);
        }
        apply_interior(shape, inv_h2, &p, &mut ap);
        let alpha = rr / dot(&p, &ap);
        for i in 0..n {
            x[i] = x[i] + alpha * p[i];
            r[i] = r[i] - alpha * ap[i];
        }
        let rr_new = dot(&r, &r);
        let beta = rr_new / rr;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
        rr = rr_new;
    }
    Err(Error::NonConvergence {
        iterations: EIGEN_MAX_ITER,
        residual: rr.sqrt().to_f64_lossy(),
    })
}

fn discrete<T: Real>(mesh: &Mesh<T>) -> Result<(T, Field<T>)> {
    let shape: Vec<usize> = mesh.counts().iter().map(|c| c - 2).collect();
    let inv_h2: Vec<T> = mesh
        .spacing()
        .iter()
        .map(|h| T::one() / (*h * *h))
        .collect();
    let n: usize = shape.iter().product();
    let mut v = vec![T::one(); n];
    let mut av = vec![T::zero(); n];
    let mut lambda = T::zero();
    let mut converged = false;
    for _ in 0..EIGEN_MAX_ITER {
        let w = if shape.len() == 1 {
            solve_tridiagonal(inv_h2[0], &v)
        } else {
            solve_cg(&shape, &inv_h2, &v)?
        };
        let norm = dot(&w, &w).sqrt();
        v = w.into_iter().map(|x| x / norm).collect();
        apply_interior(&shape, &inv_h2, &v, &mut av);
        let next = dot(&v, &av);
        if (next - lambda).abs() <= T::lit(EIGEN_TOL) * next {
            lambda = next;
            converged = true;
            break;
        }
        lambda = next;
    }
    if !converged {
        return Err(Error::NonConvergence {
            iterations: EIGEN_MAX_ITER,
            residual: lambda.to_f64_lossy(),
        });
    }
    // Scatter interior values back onto the full grid.
    let nx = mesh.counts()[0];
    let mut phi = Field::zeros(mesh);
    for (id, val) in v.iter().enumerate() {
        let (i, j) = (id % shape[0], id / shape[0]);
        let node = if shape.len() == 1 {
            i + 1
        } else {
            (i + 1) + nx * (j + 1)
        };
        phi.0[node] = val.abs();
    }
    Ok((lambda, phi))
}

/// Discrete Rayleigh quotient `<-Δ_h φ, φ> / <φ, φ>` over interior nodes,
/// with `φ = 0` on the boundary.
pub fn rayleigh_quotient<T: Real>(mesh: &Mesh<T>, phi: &Field<T>) -> Result<T> {
    mesh.check(phi)?;
    let shape: Vec<usize> = mesh.counts().iter().map(|c| c - 2).collect();
    let inv_h2: Vec<T> = mesh
        .spacing()
        .iter()
        .map(|h| T::one() / (*h * *h))
        .collect();
    let nx = mesh.counts()[0];
    let interior: Vec<T> = (0..shape.iter().product::<usize>())
        .map(|id| {
            let (i, j) = (id % shape[0], id / shape[0]);
            let node = if shape.len() == 1 {
                i + 1
            } else {
                (i + 1) + nx * (j + 1)
            };
            phi.0[node]
        })
        .collect();
    let mut out = vec![T::zero(); interior.len()];
    apply_interior(&shape, &inv_h2, &interior, &mut out);
    Ok(dot(&interior, &out) / dot(&interior, &interior))
}

/// `y = ∫ u φ₁`.
pub fn kaplan_y<T: Real>(u: &Field<T>, ep: &EigenPair<T>) -> Result<T> {
    integrate(&ep.mesh, &u.zip_with(&ep.phi1, |a, b| a * b))
}

/// `z = ∫ (a u₁ + b u₂ - u₂²/2) φ₁`.
pub fn kaplan_z<T: Real>(u1: &Field<T>, u2: &Field<T>, a: T, b: T, ep: &EigenPair<T>) -> Result<T> {
    ep.mesh.check(u1)?;
    ep.mesh.check(u2)?;
    let half = T::lit(0.5);
    let g = u1.zip_with(u2, |x, y| a * x + b * y - half * y * y);
    kaplan_y(&g, ep)
}

/// `λ₁^{1/(p-2)}`: initial data with `∫u₀φ₁` above this value blow up.
pub fn kaplan_threshold<T: Real>(p: T, lambda1: T) -> Result<T> {
    if !(p > T::lit(2.0)) {
        return config(format!("kaplan threshold needs p > 2, got {p}"));
    }
    Ok(lambda1.powf(T::one() / (p - T::lit(2.0))))
}

/// Blow-up time of `y' = y (y - 2c) / 2`, `y(0) = y0`:
/// `(1/c) ln(y0 / (y0 - 2c))` for `y0 > 2c`, `+∞` otherwise.
pub fn riccati_blowup_time<T: Real>(y0: T, c: T) -> Result<T> {
    if !(c > T::zero()) {
        return config(format!("riccati constant must be > 0, got {c}"));
    }
    let two_c = c + c;
    if y0 <= two_c {
        return Ok(T::infinity());
    }
    Ok((y0 / (y0 - two_c)).ln() / c)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NrCondition {
    /// `∫(a u₁₀ + b u₂₀ - u₂₀²/2) φ₁ >= 0`.
    First,
    /// `∫u₂₀ φ₁ > 2 (b + λ₁)`.
    Second,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NrVerdict {
    Satisfied,
    Violated(NrCondition),
}

/// Initial functionals of the coupled system and the verdict on both conditions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NrInitialCheck<T> {
    pub z0: T,
    pub y0: T,
    /// `2 (b + λ₁)`.
    pub y_threshold: T,
    /// `a u₁₀ >= u₂₀²/2` at every node, which implies the first condition.
    pub pointwise_sufficient: bool,
    pub verdict: NrVerdict,
}

pub fn check_nr_initial<T: Real>(
    u10: &Field<T>,
    u20: &Field<T>,
    a: T,
    b: T,
    ep: &EigenPair<T>,
) -> Result<NrInitialCheck<T>> {
    if !(a > T::zero() && b > T::zero()) {
        return config(format!(
            "initial-condition check needs a, b > 0, got a={a}, b={b}"
        ));
    }
    let z0 = kaplan_z(u10, u20, a, b, ep)?;
    let y0 = kaplan_y(u20, ep)?;
    let y_threshold = T::lit(2.0) * (b + ep.lambda1);
    let pointwise_sufficient = u10
        .values()
        .iter()
        .zip(u20.values())
        .all(|(x, y)| a * *x >= T::lit(0.5) * *y * *y);
    let first = z0 >= T::zero();
    let second = y0 > y_threshold;
    let verdict = match (first, second) {
        (true, true) => NrVerdict::Satisfied,
        (false, true) => NrVerdict::Violated(NrCondition::First),
        (true, false) => NrVerdict::Violated(NrCondition::Second),
        (false, false) => NrVerdict::Violated(NrCondition::Both),
    };
    Ok(NrInitialCheck {
        z0,
        y0,
        y_threshold,
        pointwise_sufficient,
        verdict,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::build_mesh;
    use std::f64::consts::PI;

    #[test]
    fn analytic_interval_and_square() {
        let m = build_mesh(1, &[1.0], &[201]).unwrap();
        let ep = principal_eigenpair(&m, EigenMethod::Analytic).unwrap();
        assert!((ep.lambda1 - PI * PI).abs() < 1e-12);
        assert!(ep.normalization_residual <= 1e-12);
        let sq = build_mesh(2, &[1.0, 1.0], &[21, 21]).unwrap();
        let ep2 = principal_eigenpair(&sq, EigenMethod::Analytic).unwrap();
        assert!((ep2.lambda1 - 2.0 * PI * PI).abs() < 1e-12);
    }

    #[test]
    fn discrete_matches_closed_form_eigenvalue() {
        // Discrete Dirichlet eigenvalue is (4/h²) sin²(πh/2).
        let m = build_mesh(1, &[1.0], &[101]).unwrap();
        let ep = principal_eigenpair(&m, EigenMethod::Discrete).unwrap();
        let h = 0.01_f64;
        let exact = 4.0 / (h * h) * (PI * h / 2.0).sin().powi(2);
        assert!((ep.lambda1 - exact).abs() < 1e-8 * exact);
        let rq = rayleigh_quotient(&m, &ep.phi1).unwrap();
        assert!((rq - ep.lambda1).abs() < 1e-8 * ep.lambda1);
        assert!(ep.phi1.values()[1..100].iter().all(|v| *v > 0.0));
    }

    #[test]
    fn discrete_square_uses_cg() {
        let m = build_mesh(2, &[1.0, 2.0], &[21, 31]).unwrap();
        let ep = principal_eigenpair(&m, EigenMethod::Discrete).unwrap();
        let (hx, hy) = (0.05_f64, 2.0 / 30.0);
        let exact = 4.0 / (hx * hx) * (PI * hx / 2.0).sin().powi(2)
            + 4.0 / (hy * hy) * (PI * hy / 4.0).sin().powi(2);
        assert!((ep.lambda1 - exact).abs() < 1e-8 * exact);
        assert!(ep.normalization_residual < 1e-12);
    }

    #[test]
    fn thresholds() {
        assert!((kaplan_threshold(3.0_f64, PI * PI).unwrap() - PI * PI).abs() < 1e-12);
        assert!((kaplan_threshold(4.0, PI * PI).unwrap() - PI).abs() < 1e-12);
        assert_eq!(kaplan_threshold(7.5, 1.0).unwrap(), 1.0);
        assert!(kaplan_threshold(2.0, 1.0).is_err());
        assert_eq!(riccati_blowup_time(2.0, 1.0).unwrap(), f64::INFINITY);
        assert!((riccati_blowup_time(4.0_f64, 1.0).unwrap() - 2f64.ln()).abs() < 1e-15);
        assert!(riccati_blowup_time(4.0, 0.0).is_err());
    }

    #[test]
    fn functionals() {
        let m = build_mesh(1, &[1.0_f64], &[401]).unwrap();
        let ep = principal_eigenpair(&m, EigenMethod::Analytic).unwrap();
        assert_eq!(kaplan_y(&Field::zeros(&m), &ep).unwrap(), 0.0);
        assert!((kaplan_y(&Field::constant(&m, 1.0), &ep).unwrap() - 1.0).abs() < 1e-10);
        assert!((kaplan_y(&ep.phi1, &ep).unwrap() - PI * PI / 8.0).abs() < 1e-4);
        let z = kaplan_z(&Field::constant(&m, 3.0), &Field::zeros(&m), 2.0, 1.0, &ep).unwrap();
        assert!((z - 6.0).abs() < 1e-10);
        let other = build_mesh(1, &[1.0], &[11]).unwrap();
        assert!(kaplan_y(&Field::zeros(&other), &ep).is_err());
    }

    #[test]
    fn nr_initial_examples() {
        let m = build_mesh(1, &[1.0], &[201]).unwrap();
        let ep = principal_eigenpair(&m, EigenMethod::Analytic).unwrap();
        let u20 = ep.phi1.map(|v| 18.0 * v);
        let u10 = Field::constant(&m, 400.0);
        let c = check_nr_initial(&u10, &u20, 1.0, 1.0, &ep).unwrap();
        assert_eq!(c.verdict, NrVerdict::Satisfied);
        assert!(c.pointwise_sufficient);
        assert!((c.y0 - 18.0 * PI * PI / 8.0).abs() < 1e-3);
        let zero = Field::zeros(&m);
        let v = check_nr_initial(&u10, &zero, 1.0, 1.0, &ep).unwrap();
        assert_eq!(v.verdict, NrVerdict::Violated(NrCondition::Second));
    }
}

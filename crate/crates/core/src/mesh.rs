//! Uniform tensor grids on intervals and rectangles, trapezoidal quadrature,
//! and the ghost-node diffusion stencil.

use crate::error::{config, Error, Result};
use crate::graphs::MonotoneGraph;
use crate::num::Real;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Axis<T> {
    pub length: T,
    pub count: usize,
    pub spacing: T,
}

/// Uniform grid on `[0, L1]` or `[0, L1] x [0, L2]`, boundary nodes included.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh<T> {
    axes: Vec<Axis<T>>,
    weights: Vec<T>,
}

/// Builds a uniform mesh with `counts[d]` nodes along axis `d`.
pub fn build_mesh<T: Real>(dim: usize, lengths: &[T], counts: &[usize]) -> Result<Mesh<T>> {
    if dim != 1 && dim != 2 {
        return config(format!("dimension must be 1 or 2, got {dim}"));
    }
    if lengths.len() != dim || counts.len() != dim {
        return config(format!(
            "expected {dim} lengths and counts, got {} and {}",
            lengths.len(),
            counts.len()
        ));
    }
    let mut axes = Vec::with_capacity(dim);
    for (&length, &count) in lengths.iter().zip(counts) {
        if !(length > T::zero()) || !length.is_finite() {
            return config(format!("axis length must be > 0, got {length}"));
        }
        if count < 3 {
            return config(format!("axis node count must be >= 3, got {count}"));
        }
        axes.push(Axis {
            length,
            count,
            spacing: length / T::from_count(count - 1),
        });
    }
    let axis_weights: Vec<Vec<T>> = axes
        .iter()
        .map(|a| {
            (0..a.count)
                .map(|i| {
                    if i == 0 || i == a.count - 1 {
                        a.spacing / T::lit(2.0)
                    } else {
                        a.spacing
                    }
                })
                .collect()
        })
        .collect();
    let weights = if dim == 1 {
        axis_weights[0].clone()
    } else {
        let mut w = Vec::with_capacity(axes[0].count * axes[1].count);
        for wy in &axis_weights[1] {
            for wx in &axis_weights[0] {
                w.push(*wx * *wy);
            }
        }
        w
    };
    Ok(Mesh { axes, weights })
}

impl<T: Real> Mesh<T> {
    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn axes(&self) -> &[Axis<T>] {
        &self.axes
    }

    pub fn spacing(&self) -> Vec<T> {
        self.axes.iter().map(|a| a.spacing).collect()
    }

    pub fn lengths(&self) -> Vec<T> {
        self.axes.iter().map(|a| a.length).collect()
    }

    pub fn counts(&self) -> Vec<usize> {
        self.axes.iter().map(|a| a.count).collect()
    }

    pub fn n_nodes(&self) -> usize {
        self.axes.iter().map(|a| a.count).product()
    }

    /// Measure of the domain.
    pub fn volume(&self) -> T {
        self.axes.iter().fold(T::one(), |acc, a| acc * a.length)
    }

    /// Smallest squared spacing, the `h²` of consistency estimates.
    pub fn h_squared(&self) -> T {
        self.axes
            .iter()
            .map(|a| a.spacing * a.spacing)
            .fold(T::infinity(), T::min)
    }

    /// Per-axis integer coordinates of a node.
    pub fn multi_index(&self, node: usize) -> [usize; 2] {
        let nx = self.axes[0].count;
        [node % nx, node / nx]
    }

    /// Physical coordinates; the second entry is 0 in 1D.
    pub fn coords(&self, node: usize) -> [T; 2] {
        let [i, j] = self.multi_index(node);
        let x = self.axes[0].spacing * T::from_count(i);
        let y = self
            .axes
            .get(1)
            .map_or(T::zero(), |a| a.spacing * T::from_count(j));
        [x, y]
    }

    pub fn is_boundary(&self, node: usize) -> bool {
        let idx = self.multi_index(node);
        self.axes
            .iter()
            .zip(idx)
            .any(|(a, i)| i == 0 || i == a.count - 1)
    }

    pub fn boundary_nodes(&self) -> Vec<usize> {
        (0..self.n_nodes())
            .filter(|&n| self.is_boundary(n))
            .collect()
    }

    /// Trapezoidal quadrature weights.
    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn check(&self, f: &Field<T>) -> Result<()> {
        if f.len() == self.n_nodes() {
            Ok(())
        } else {
            Err(Error::MeshMismatch {
                expected: self.n_nodes(),
                found: f.len(),
            })
        }
    }
}

/// Nodal values of one scalar component.
#[derive(Debug, Clone, PartialEq)]
pub struct Field<T>(pub Vec<T>);

impl<T: Real> Field<T> {
    pub fn zeros(mesh: &Mesh<T>) -> Self {
        Self(vec![T::zero(); mesh.n_nodes()])
    }

    pub fn constant(mesh: &Mesh<T>, value: T) -> Self {
        Self(vec![value; mesh.n_nodes()])
    }

    pub fn from_fn(mesh: &Mesh<T>, f: impl Fn([T; 2]) -> T) -> Self {
        Self((0..mesh.n_nodes()).map(|n| f(mesh.coords(n))).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn values(&self) -> &[T] {
        &self.0
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    pub fn min(&self) -> T {
        self.0.iter().copied().fold(T::infinity(), T::min)
    }

    pub fn max(&self) -> T {
        self.0.iter().copied().fold(T::neg_infinity(), T::max)
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self(self.0.iter().map(|v| f(*v)).collect())
    }

    pub fn zip_with(&self, other: &Self, f: impl Fn(T, T) -> T) -> Self {
        Self(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(a, b)| f(*a, *b))
                .collect(),
        )
    }
}

/// Composite trapezoidal rule (tensorized in 2D).
pub fn integrate<T: Real>(mesh: &Mesh<T>, f: &Field<T>) -> Result<T> {
    mesh.check(f)?;
    Ok(mesh
        .weights()
        .iter()
        .zip(f.values())
        .fold(T::zero(), |acc, (w, v)| acc + *w * *v))
}

pub fn sup_norm<T: Real>(f: &Field<T>) -> T {
    f.values().iter().fold(T::zero(), |acc, v| acc.max(v.abs()))
}

/// `‖max(f, 0)‖_{L²}` by quadrature.
pub fn positive_part_l2<T: Real>(mesh: &Mesh<T>, f: &Field<T>) -> Result<T> {
    let sq = f.map(|v| {
        let p = v.max(T::zero());
        p * p
    });
    Ok(integrate(mesh, &sq)?.sqrt())
}

/// Row of the ghost-node diffusion operator at one node.
///
/// `(-Δ_h u)_i = diag·u_i - Σ w_j u_j + flux·g_i / a` where `g_i` is the
/// boundary flux value and `flux` collects `2/h` for every boundary face the
/// node touches (corners get both faces).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeStencil<T> {
    pub diag: T,
    pub neighbors: [(usize, T); 4],
    pub n_neighbors: usize,
    pub flux: T,
}

impl<T: Real> NodeStencil<T> {
    pub fn neighbors(&self) -> &[(usize, T)] {
        &self.neighbors[..self.n_neighbors]
    }

    /// `diag·u_i - Σ w_j u_j`.
    pub fn apply(&self, u: &[T], node: usize) -> T {
        self.neighbors()
            .iter()
            .fold(self.diag * u[node], |acc, (j, w)| acc - *w * u[*j])
    }
}

/// Builds the per-node stencil of `-Δ_h` with ghost nodes mirrored through
/// each boundary face.
pub fn diffusion_stencil<T: Real>(mesh: &Mesh<T>) -> Vec<NodeStencil<T>> {
    let nx = mesh.axes[0].count;
    let strides = [1, nx];
    (0..mesh.n_nodes())
        .map(|node| {
            let idx = mesh.multi_index(node);
            let mut st = NodeStencil {
                diag: T::zero(),
                neighbors: [(0, T::zero()); 4],
                n_neighbors: 0,
                flux: T::zero(),
            };
            let push = |st: &mut NodeStencil<T>, j: usize, w: T| {
                st.neighbors[st.n_neighbors] = (j, w);
                st.n_neighbors += 1;
            };
            for (d, axis) in mesh.axes.iter().enumerate() {
                let h2 = axis.spacing * axis.spacing;
                let i = idx[d];
                st.diag = st.diag + T::lit(2.0) / h2;
                if i == 0 {
                    push(&mut st, node + strides[d], T::lit(2.0) / h2);
                    st.flux = st.flux + T::lit(2.0) / axis.spacing;
                } else if i == axis.count - 1 {
                    push(&mut st, node - strides[d], T::lit(2.0) / h2);
                    st.flux = st.flux + T::lit(2.0) / axis.spacing;
                } else {
                    push(&mut st, node - strides[d], T::one() / h2);
                    push(&mut st, node + strides[d], T::one() / h2);
                }
            }
            st
        })
        .collect()
}

/// Residual of the diffusion operator `-a Δ_h u` with boundary flux law
/// `-a ∂_ν u ∈ γ(u)` closed by ghost nodes.
///
/// Interior rows hold the 3-point/5-point stencil. On a boundary row the
/// entry is the element of minimal magnitude of `a(-Δ_h u)_i + flux·γ(u_i)`;
/// if `u_i` lies outside `D(γ)` the row holds the constraint residual
/// `u_i - proj_{D(γ)}(u_i)` instead (so Dirichlet rows reduce to `u_b = 0`).
pub fn apply_diffusion<T: Real>(
    mesh: &Mesh<T>,
    f: &Field<T>,
    a: T,
    bc: &MonotoneGraph<T>,
    out: &mut Field<T>,
) -> Result<()> {
    mesh.check(f)?;
    mesh.check(out)?;
    if !(a > T::zero()) {
        return config(format!("diffusion coefficient must be > 0, got {a}"));
    }
    let stencil = diffusion_stencil(mesh);
    let u = f.values();
    for (node, st) in stencil.iter().enumerate() {
        let base = a * st.apply(u, node);
        out.0[node] = if st.flux == T::zero() {
            base
        } else {
            match bc.eval(u[node]) {
                None => u[node] - bc.project(u[node]),
                Some(v) => {
                    let lo = if v.lo.is_infinite() {
                        v.lo
                    } else {
                        base + st.flux * v.lo
                    };
                    let hi = if v.hi.is_infinite() {
                        v.hi
                    } else {
                        base + st.flux * v.hi
                    };
                    T::zero().max(lo).min(hi)
                }
            }
        };
    }
    Ok(())
}

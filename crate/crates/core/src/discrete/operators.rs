//! Assembly of A_λ, B and A_{λ,ν}, the traces, the two Poisson operators
//! and the transmission solve.
//!
//! Operators are stored in weak form S (symmetric) together with the
//! lumped mass M of their unknowns; the difference operator is M⁻¹S. A
//! solve of "op u = f" is therefore S u = M f.

use crate::discrete::grid::{Grid, Region, Side};
use crate::error::{Error, Result};
use crate::linalg::{SolverKind, SpdSolver, SymSparse, DEFAULT_TOL};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryTag {
    /// Neumann at Γ, coupled across Γ₁ (A_λ).
    NeumannOuter,
    /// Dirichlet at Γ₁, Neumann at Γ (B).
    DirichletInterface,
    /// Neumann at Γ₁ on Ω₁ ∪ Γ₁ (A_{λ,ν}).
    NeumannInterface,
}

/// Outer condition for the exterior Poisson operator 𝒦.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OuterCondition {
    #[default]
    Neumann,
    Dirichlet,
}

#[derive(Debug, Clone)]
pub struct SparseOperator {
    pub matrix: SymSparse,
    pub mass: Vec<f64>,
    /// Grid node of each unknown.
    pub nodes: Vec<usize>,
    pub bc: BoundaryTag,
}

impl SparseOperator {
    pub fn dim(&self) -> usize {
        self.mass.len()
    }

    /// M⁻¹ S u, the finite-difference form.
    pub fn apply(&self, u: &[f64]) -> Vec<f64> {
        let su = self.matrix.matvec(u);
        su.iter().zip(&self.mass).map(|(s, m)| s / m).collect()
    }

    pub fn difference_entry(&self, i: usize, j: usize) -> f64 {
        self.matrix.get(i, j) / self.mass[i]
    }

    /// (S u, u): the discrete energy ‖∇_h u‖² + λ‖u‖²_{Ω₁}.
    pub fn quadratic_form(&self, u: &[f64]) -> f64 {
        self.matrix.matvec(u).iter().zip(u).map(|(a, b)| a * b).sum()
    }

    pub fn solver(&self) -> Result<SpdSolver> {
        SpdSolver::new(&self.matrix, SolverKind::Auto, DEFAULT_TOL)
    }

    /// Solves op u = f.
    pub fn solve(&self, f: &[f64]) -> Result<Vec<f64>> {
        self.solver()?.solve(&self.weighted(f))
    }

    pub fn weighted(&self, f: &[f64]) -> Vec<f64> {
        f.iter().zip(&self.mass).map(|(a, m)| a * m).collect()
    }
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::Domain(format!("lambda must be positive, got {lambda}")));
    }
    Ok(())
}

fn check_len(got: usize, want: usize, what: &str) -> Result<()> {
    if got != want {
        return Err(Error::Contract(format!("{what}: expected length {want}, got {got}")));
    }
    Ok(())
}

pub fn assemble_a_lambda(grid: &Grid, lambda: f64) -> Result<SparseOperator> {
    check_lambda(lambda)?;
    Ok(SparseOperator {
        matrix: grid.stiffness().add_scaled(&grid.potential, lambda)?,
        mass: grid.mass(),
        nodes: (0..grid.len()).collect(),
        bc: BoundaryTag::NeumannOuter,
    })
}

pub fn assemble_b(grid: &Grid) -> Result<SparseOperator> {
    if grid.outer_nodes.is_empty() {
        return Err(Error::Domain("empty exterior".into()));
    }
    Ok(SparseOperator {
        matrix: grid.k2.submatrix(&grid.outer_nodes),
        mass: grid.outer_mass(),
        nodes: grid.outer_nodes.clone(),
        bc: BoundaryTag::DirichletInterface,
    })
}

pub fn assemble_a_lambda_nu(grid: &Grid, lambda: f64) -> Result<SparseOperator> {
    check_lambda(lambda)?;
    let s = grid.k1.add_scaled(&grid.potential, lambda)?;
    Ok(SparseOperator {
        matrix: s.submatrix(&grid.inner_nodes),
        mass: grid.inner_mass(),
        nodes: grid.inner_nodes.clone(),
        bc: BoundaryTag::NeumannInterface,
    })
}

/// Ω-field → Ω₂-field.
pub fn restrict(grid: &Grid, f: &[f64]) -> Result<Vec<f64>> {
    check_len(f.len(), grid.len(), "restrict")?;
    Ok(grid.outer_nodes.iter().map(|&i| f[i]).collect())
}

/// Ω₂-field → Ω-field, zero on Ω₁ ∪ Γ₁.
pub fn extend(grid: &Grid, g: &[f64]) -> Result<Vec<f64>> {
    extend_with_interface(grid, g, &vec![0.0; grid.interface.len()])
}

/// Ω₂-field plus Γ₁ values → Ω-field, zero on Ω₁.
pub fn extend_with_interface(grid: &Grid, g: &[f64], phi: &[f64]) -> Result<Vec<f64>> {
    check_len(g.len(), grid.outer_nodes.len(), "extend")?;
    check_len(phi.len(), grid.interface.len(), "interface values")?;
    let mut f = vec![0.0; grid.len()];
    for (&i, &v) in grid.outer_nodes.iter().zip(g) {
        f[i] = v;
    }
    for (&i, &v) in grid.interface.iter().zip(phi) {
        f[i] = v;
    }
    Ok(f)
}

/// (Ω₁ ∪ Γ₁)-field → Ω-field, zero on Ω₂.
pub fn extend_inner(grid: &Grid, w: &[f64]) -> Result<Vec<f64>> {
    check_len(w.len(), grid.inner_nodes.len(), "extend_inner")?;
    let mut f = vec![0.0; grid.len()];
    for (&i, &v) in grid.inner_nodes.iter().zip(w) {
        f[i] = v;
    }
    Ok(f)
}

pub fn trace_gamma0(grid: &Grid, field: &[f64], _side: Side) -> Result<Vec<f64>> {
    check_len(field.len(), grid.len(), "trace_gamma0")?;
    Ok(grid.interface.iter().map(|&i| field[i]).collect())
}

/// Derivative along the normal pointing into Ω₁, from the given side.
pub fn trace_gamma1(grid: &Grid, field: &[f64], side: Side) -> Result<Vec<f64>> {
    check_len(field.len(), grid.len(), "trace_gamma1")?;
    let stencils = match side {
        Side::Interior => &grid.gamma1_interior,
        Side::Exterior => &grid.gamma1_exterior,
    };
    Ok(stencils
        .iter()
        .map(|st| st.iter().map(|&(j, c)| c * field[j]).sum())
        .collect())
}

/// 𝒦φ: discrete harmonic in Ω₂ with value φ on Γ₁. Returned on
/// `grid.outer_nodes`.
pub fn poisson_k(grid: &Grid, phi: &[f64], outer: OuterCondition) -> Result<Vec<f64>> {
    check_len(phi.len(), grid.interface.len(), "poisson_k")?;
    let unknowns: Vec<usize> = match outer {
        OuterCondition::Neumann => grid.outer_nodes.clone(),
        OuterCondition::Dirichlet => grid
            .outer_nodes
            .iter()
            .copied()
            .filter(|&i| !grid.on_outer_boundary[i])
            .collect(),
    };
    let rhs: Vec<f64> = grid
        .k2
        .block_matvec(&unknowns, &grid.interface, phi)
        .into_iter()
        .map(|v| -v)
        .collect();
    let solver = SpdSolver::new(&grid.k2.submatrix(&unknowns), SolverKind::Auto, DEFAULT_TOL)?;
    let v = solver.solve(&rhs)?;
    let mut out = vec![0.0; grid.outer_nodes.len()];
    for (&i, x) in unknowns.iter().zip(v) {
        out[grid.outer_index[i].expect("unknown lies in the exterior")] = x;
    }
    Ok(out)
}

/// Boundary load for Neumann data φ = γ₁w on Γ₁, indexed like
/// `grid.inner_nodes`.
pub fn neumann_load(grid: &Grid, phi: &[f64]) -> Result<Vec<f64>> {
    check_len(phi.len(), grid.interface.len(), "neumann data")?;
    let mut rhs = vec![0.0; grid.inner_nodes.len()];
    for ((&i, &w), &p) in grid.interface.iter().zip(&grid.interface_weights).zip(phi) {
        // γ₁ points into Ω₁, i.e. against the outward normal of Ω₁
        rhs[grid.inner_index[i].expect("interface node is an inner unknown")] = -w * p;
    }
    Ok(rhs)
}

/// 𝒦_λφ: solves (−Δ + λ)w = 0 in Ω₁ with γ₁w = φ. Returned on
/// `grid.inner_nodes`.
pub fn poisson_k_lambda(grid: &Grid, lambda: f64, phi: &[f64]) -> Result<Vec<f64>> {
    let op = assemble_a_lambda_nu(grid, lambda)?;
    op.solver()?.solve(&neumann_load(grid, phi)?)
}

/// u = A_λ⁻¹ f on the whole grid.
pub fn transmission_solve(grid: &Grid, lambda: f64, f: &[f64]) -> Result<Vec<f64>> {
    check_len(f.len(), grid.len(), "transmission_solve")?;
    assemble_a_lambda(grid, lambda)?.solve(f)
}

/// Largest jump of γ₁ across Γ₁, scaled by the largest |γ₁|.
pub fn transmission_mismatch(grid: &Grid, u: &[f64]) -> Result<f64> {
    let a = trace_gamma1(grid, u, Side::Interior)?;
    let b = trace_gamma1(grid, u, Side::Exterior)?;
    let scale = a.iter().chain(&b).fold(0.0f64, |m, v| m.max(v.abs()));
    let jump = a.iter().zip(&b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    Ok(if scale == 0.0 { 0.0 } else { jump / scale })
}

/// Node regions of the unknowns of `op`, for diagnostics.
pub fn unknown_regions(grid: &Grid, op: &SparseOperator) -> Vec<Region> {
    op.nodes.iter().map(|&i| grid.region[i]).collect()
}

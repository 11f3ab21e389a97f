//! P1 Galerkin assembly and Dirichlet-constrained solve.

pub mod sparse;

use crate::error::{Error, Result};
use crate::mesh::{BoundaryLabel, Mesh};
use crate::problems::ProblemSpec;
use crate::quadrature::{GAUSS3, RADON7};
use crate::trace::DirichletTrace;

pub use sparse::{pcg, CgReport, CsrMatrix};

/// Relative residual at which conjugate gradients stop.
pub const CG_TOLERANCE: f64 = 1e-10;

/// Continuous piecewise-linear function given by its vertex values.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteFunction {
    coefficients: Vec<f64>,
}

impl DiscreteFunction {
    pub fn new(coefficients: Vec<f64>) -> Self {
        Self { coefficients }
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn into_coefficients(self) -> Vec<f64> {
        self.coefficients
    }

    pub fn check_mesh(&self, mesh: &Mesh) -> Result<()> {
        if self.coefficients.len() != mesh.num_vertices() {
            return Err(Error::Input(format!(
                "discrete function has {} coefficients but the mesh has {} vertices",
                self.coefficients.len(),
                mesh.num_vertices()
            )));
        }
        if let Some(i) = self.coefficients.iter().position(|c| !c.is_finite()) {
            return Err(Error::Input(format!("coefficient {i} is not finite")));
        }
        Ok(())
    }
}

/// Gradients of the three barycentric hat functions on element `t`.
pub fn hat_gradients(mesh: &Mesh, t: usize) -> [[f64; 2]; 3] {
    let [p0, p1, p2] = mesh.element_points(t);
    let two_area = (p1[0] - p0[0]) * (p2[1] - p0[1]) - (p1[1] - p0[1]) * (p2[0] - p0[0]);
    [
        [(p1[1] - p2[1]) / two_area, (p2[0] - p1[0]) / two_area],
        [(p2[1] - p0[1]) / two_area, (p0[0] - p2[0]) / two_area],
        [(p0[1] - p1[1]) / two_area, (p1[0] - p0[0]) / two_area],
    ]
}

/// Constant gradient of a P1 function on element `t`.
pub fn element_gradient(mesh: &Mesh, t: usize, coefficients: &[f64]) -> [f64; 2] {
    let grads = hat_gradients(mesh, t);
    let tri = mesh.elements()[t];
    let mut g = [0.0; 2];
    for k in 0..3 {
        g[0] += coefficients[tri[k]] * grads[k][0];
        g[1] += coefficients[tri[k]] * grads[k][1];
    }
    g
}

/// Stiffness matrix over all vertices, load vector, and Dirichlet constraint flags.
#[derive(Debug, Clone)]
pub struct SparseSystem {
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
    pub constrained: Vec<bool>,
}

/// Assembles `⟨∇φ_i, ∇φ_j⟩` and `∫ f φ_i + ∫_{Γ_N} φ φ_i`; Dirichlet vertices
/// are flagged as constrained.
pub fn assemble(mesh: &Mesh, spec: &ProblemSpec) -> Result<SparseSystem> {
    let n = mesh.num_vertices();
    let mut triplets = Vec::with_capacity(9 * mesh.num_elements());
    let mut rhs = vec![0.0; n];
    for t in 0..mesh.num_elements() {
        let tri = mesh.elements()[t];
        let area = mesh.element_size(t);
        let grads = hat_gradients(mesh, t);
        for i in 0..3 {
            for j in 0..3 {
                let k = area * (grads[i][0] * grads[j][0] + grads[i][1] * grads[j][1]);
                triplets.push((tri[i], tri[j], k));
            }
        }
        let points = mesh.element_points(t);
        for i in 0..3 {
            rhs[tri[i]] += RADON7.integrate(&points, |x, l| (spec.volume_load)(x) * l[i])?;
        }
    }
    let owners = mesh.boundary_owners();
    for (facet, &owner) in mesh.boundary().iter().zip(&owners) {
        if facet.label != BoundaryLabel::Neumann {
            continue;
        }
        let (_, normal) = mesh.facet_frame(facet, owner);
        let [p, q] = mesh.facet_points(facet);
        let [a, b] = facet.vertices;
        rhs[a] += GAUSS3.integrate(p, q, |x, s| (spec.neumann_flux)(x, normal) * (1.0 - s))?;
        rhs[b] += GAUSS3.integrate(p, q, |x, s| (spec.neumann_flux)(x, normal) * s)?;
    }
    let mut constrained = vec![false; n];
    for v in mesh.dirichlet_vertices() {
        constrained[v] = true;
    }
    Ok(SparseSystem {
        matrix: CsrMatrix::from_triplets(n, &triplets),
        rhs,
        constrained,
    })
}

/// Fixes constrained coefficients to the trace values, eliminates them, and
/// solves the reduced SPD system by preconditioned CG.
pub fn solve(system: &SparseSystem, dirichlet: &DirichletTrace) -> Result<DiscreteFunction> {
    solve_with_tolerance(system, dirichlet, CG_TOLERANCE).map(|(u, _)| u)
}

pub fn solve_with_tolerance(
    system: &SparseSystem,
    dirichlet: &DirichletTrace,
    rel_tol: f64,
) -> Result<(DiscreteFunction, CgReport)> {
    let n = system.matrix.dim();
    if system.rhs.len() != n || system.constrained.len() != n {
        return Err(Error::Input("system dimensions are inconsistent".into()));
    }
    let mut u = vec![0.0; n];
    for (i, &c) in system.constrained.iter().enumerate() {
        if c {
            u[i] = dirichlet.value(i).ok_or_else(|| {
                Error::Input(format!("Dirichlet trace has no value for vertex {i}"))
            })?;
        }
    }
    if let Some(v) = dirichlet
        .vertices()
        .find(|&v| v >= n || !system.constrained[v])
    {
        return Err(Error::Input(format!(
            "Dirichlet trace prescribes vertex {v}, which is not a Dirichlet vertex"
        )));
    }

    let free: Vec<bool> = system.constrained.iter().map(|c| !c).collect();
    let (reduced, kept) = system.matrix.submatrix(&free);
    let mut b: Vec<f64> = kept.iter().map(|&i| system.rhs[i]).collect();
    for (row, &i) in kept.iter().enumerate() {
        for (j, a) in system.matrix.row(i) {
            if system.constrained[j] {
                b[row] -= a * u[j];
            }
        }
    }
    let mut x = vec![0.0; kept.len()];
    let report = if kept.is_empty() {
        CgReport {
            iterations: 0,
            relative_residual: 0.0,
        }
    } else {
        pcg(&reduced, &b, &mut x, rel_tol)?
    };
    for (&i, xi) in kept.iter().zip(x) {
        u[i] = xi;
    }
    Ok((DiscreteFunction::new(u), report))
}

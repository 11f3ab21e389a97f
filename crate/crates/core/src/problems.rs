//! Benchmark boundary-value problems.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::fem::{element_gradient, DiscreteFunction};
use crate::mesh::{BoundaryFacet, BoundaryLabel, Mesh, Point};
use crate::quadrature::{GAUSS3, RADON7};

pub type ScalarField = Arc<dyn Fn(Point) -> f64 + Send + Sync>;
pub type VectorField = Arc<dyn Fn(Point) -> [f64; 2] + Send + Sync>;
/// Field on a boundary facet, evaluated at a point with the facet's unit
/// tangent (Dirichlet data) or outward unit normal (Neumann data).
pub type FacetField = Arc<dyn Fn(Point, [f64; 2]) -> f64 + Send + Sync>;

#[derive(Clone)]
pub struct ExactSolution {
    pub value: ScalarField,
    pub gradient: VectorField,
}

/// Data of `-Δu = f`, `u = g` on Γ_D, `∂_n u = φ` on Γ_N, with an initial mesh
/// resolving the boundary partition.
#[derive(Clone)]
pub struct ProblemSpec {
    pub name: String,
    pub volume_load: ScalarField,
    pub dirichlet_trace: ScalarField,
    pub dirichlet_tangential_derivative: FacetField,
    pub neumann_flux: FacetField,
    pub exact_solution: Option<ExactSolution>,
    pub initial_mesh: Mesh,
    /// Points where the exact gradient is singular; used by error quadrature.
    pub singular_points: Vec<Point>,
}

impl fmt::Debug for ProblemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("name", &self.name)
            .field("has_exact_solution", &self.exact_solution.is_some())
            .field("initial_elements", &self.initial_mesh.num_elements())
            .finish_non_exhaustive()
    }
}

const COMPATIBILITY_TOL: f64 = 1e-10;
const SINGULAR_DEPTH: u32 = 3;

impl ProblemSpec {
    /// Problem whose boundary data are all derived from a known solution.
    pub fn from_exact_solution(
        name: impl Into<String>,
        initial_mesh: Mesh,
        volume_load: ScalarField,
        exact: ExactSolution,
    ) -> Result<Self> {
        let grad_t = exact.gradient.clone();
        let grad_n = exact.gradient.clone();
        let spec = Self {
            name: name.into(),
            volume_load,
            dirichlet_trace: exact.value.clone(),
            dirichlet_tangential_derivative: Arc::new(move |x, t| {
                let g = grad_t(x);
                g[0] * t[0] + g[1] * t[1]
            }),
            neumann_flux: Arc::new(move |x, n| {
                let g = grad_n(x);
                g[0] * n[0] + g[1] * n[1]
            }),
            exact_solution: Some(exact),
            initial_mesh,
            singular_points: Vec::new(),
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Problem with independently given data and no known solution.
    pub fn from_data(
        name: impl Into<String>,
        initial_mesh: Mesh,
        volume_load: ScalarField,
        dirichlet_trace: ScalarField,
        dirichlet_tangential_derivative: FacetField,
        neumann_flux: FacetField,
    ) -> Result<Self> {
        let spec = Self {
            name: name.into(),
            volume_load,
            dirichlet_trace,
            dirichlet_tangential_derivative,
            neumann_flux,
            exact_solution: None,
            initial_mesh,
            singular_points: Vec::new(),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_singular_points(mut self, points: Vec<Point>) -> Self {
        self.singular_points = points;
        self
    }

    /// Checks |Γ_D| > 0 and, when a solution is known, that g and φ agree with
    /// u and ∂_n u at the quadrature nodes of the initial boundary facets.
    pub fn validate(&self) -> Result<()> {
        let mesh = &self.initial_mesh;
        if mesh.boundary_length(BoundaryLabel::Dirichlet) <= 0.0 {
            return Err(Error::Input(format!(
                "problem `{}` has an empty Dirichlet boundary",
                self.name
            )));
        }
        let Some(exact) = &self.exact_solution else {
            return Ok(());
        };
        let owners = mesh.boundary_owners();
        for (facet, &owner) in mesh.boundary().iter().zip(&owners) {
            let (t, n) = mesh.facet_frame(facet, owner);
            let [p, q] = mesh.facet_points(facet);
            for &s in GAUSS3.nodes {
                let x = crate::quadrature::lerp(p, q, s);
                let grad = (exact.gradient)(x);
                let (given, expected) = match facet.label {
                    BoundaryLabel::Dirichlet => ((self.dirichlet_trace)(x), (exact.value)(x)),
                    BoundaryLabel::Neumann => {
                        ((self.neumann_flux)(x, n), grad[0] * n[0] + grad[1] * n[1])
                    }
                };
                let tangential = (self.dirichlet_tangential_derivative)(x, t);
                let tangential_expected = grad[0] * t[0] + grad[1] * t[1];
                let scale = 1.0 + expected.abs().max(tangential_expected.abs());
                if (given - expected).abs() > COMPATIBILITY_TOL * scale
                    || (facet.label == BoundaryLabel::Dirichlet
                        && (tangential - tangential_expected).abs() > COMPATIBILITY_TOL * scale)
                {
                    return Err(Error::Input(format!(
                        "problem `{}`: boundary data incompatible with the exact solution at ({}, {})",
                        self.name, x[0], x[1]
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn exact(&self) -> Result<&ExactSolution> {
        self.exact_solution.as_ref().ok_or_else(|| {
            Error::Capability(format!("problem `{}` has no exact solution", self.name))
        })
    }

    /// Vertex interpolant of the exact solution.
    pub fn interpolate_exact(&self, mesh: &Mesh) -> Result<DiscreteFunction> {
        let exact = self.exact()?;
        Ok(DiscreteFunction::new(
            mesh.vertices().iter().map(|&p| (exact.value)(p)).collect(),
        ))
    }
}

/// Energy error `‖∇(u − U)‖_{L²(Ω)}`. Elements touching a singular point of the
/// problem are integrated with three levels of subdivision.
pub fn evaluate_energy_error(
    spec: &ProblemSpec,
    mesh: &Mesh,
    solution: &DiscreteFunction,
) -> Result<f64> {
    evaluate_energy_error_with_depth(spec, mesh, solution, SINGULAR_DEPTH)
}

pub fn evaluate_energy_error_with_depth(
    spec: &ProblemSpec,
    mesh: &Mesh,
    solution: &DiscreteFunction,
    depth: u32,
) -> Result<f64> {
    let exact = spec.exact()?;
    solution.check_mesh(mesh)?;
    let mut total = 0.0;
    for t in 0..mesh.num_elements() {
        let tri = mesh.element_points(t);
        let grad_u = element_gradient(mesh, t, solution.coefficients());
        let mut err = |x: Point| {
            let g = (exact.gradient)(x);
            (g[0] - grad_u[0]).powi(2) + (g[1] - grad_u[1]).powi(2)
        };
        total += RADON7.integrate_subdivided(&tri, &spec.singular_points, depth, &mut err)?;
    }
    Ok(total.sqrt())
}

/// Shipped benchmark problems, selectable by name.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProblemName {
    ZShape2d,
    LinearPatch,
}

impl ProblemName {
    pub fn build(self) -> Result<ProblemSpec> {
        match self {
            ProblemName::ZShape2d => zshape_problem(),
            ProblemName::LinearPatch => linear_patch_problem(),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ProblemName::ZShape2d => "zshape2d",
            ProblemName::LinearPatch => "linear-patch",
        }
    }
}

impl fmt::Display for ProblemName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ProblemName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "zshape2d" => Ok(ProblemName::ZShape2d),
            "linear-patch" => Ok(ProblemName::LinearPatch),
            other => Err(Error::Input(format!(
                "unknown problem `{other}` (expected `zshape2d` or `linear-patch`)"
            ))),
        }
    }
}

const ZSHAPE_EXPONENT: f64 = 4.0 / 7.0;

/// Polar angle on the Z-shaped domain, continuous on Ω with values in
/// [-π/2, 5π/4]; the branch cut runs through the removed triangle.
pub fn zshape_angle(x: Point) -> f64 {
    let phi = x[1].atan2(x[0]);
    if phi < -5.0 * PI / 8.0 {
        phi + 2.0 * PI
    } else {
        phi
    }
}

/// `u = r^{4/7} cos(4φ/7)`.
pub fn zshape_solution(x: Point) -> f64 {
    let r = x[0].hypot(x[1]);
    r.powf(ZSHAPE_EXPONENT) * (ZSHAPE_EXPONENT * zshape_angle(x)).cos()
}

pub fn zshape_gradient(x: Point) -> [f64; 2] {
    let r = x[0].hypot(x[1]);
    if r == 0.0 {
        return [f64::INFINITY, f64::INFINITY];
    }
    let phi = zshape_angle(x);
    let a = ZSHAPE_EXPONENT;
    let rp = a * r.powf(a - 1.0);
    let du_dr = rp * (a * phi).cos();
    let du_dphi_over_r = -rp * (a * phi).sin();
    let (c, s) = (x[0] / r, x[1] / r);
    [
        du_dr * c - du_dphi_over_r * s,
        du_dr * s + du_dphi_over_r * c,
    ]
}

/// Z-shaped domain `(-1,1)² \ conv{(0,0), (-1,-1), (0,-1)}` with exact solution
/// `r^{4/7} cos(4φ/7)` and `f = 0`. Γ_D consists of the re-entrant segment from
/// the origin to (-1,-1) and the left side of the square; Γ_N is the rest.
pub fn zshape_problem() -> Result<ProblemSpec> {
    let vertices = vec![
        [0.0, 0.0],
        [0.0, -1.0],
        [1.0, -1.0],
        [1.0, 0.0],
        [1.0, 1.0],
        [-1.0, 1.0],
        [-1.0, 0.0],
        [-1.0, -1.0],
    ];
    let elements = (1..7).map(|k| [0, k, k + 1]).collect();
    let facet = |a, b, label| BoundaryFacet {
        vertices: [a, b],
        label,
    };
    use BoundaryLabel::{Dirichlet as D, Neumann as N};
    let boundary = vec![
        facet(0, 1, N),
        facet(1, 2, N),
        facet(2, 3, N),
        facet(3, 4, N),
        facet(4, 5, N),
        facet(5, 6, D),
        facet(6, 7, D),
        facet(7, 0, D),
    ];
    let mesh = Mesh::with_longest_edge_seed(vertices, elements, boundary)?;
    Ok(ProblemSpec::from_exact_solution(
        "zshape2d",
        mesh,
        Arc::new(|_| 0.0),
        ExactSolution {
            value: Arc::new(zshape_solution),
            gradient: Arc::new(zshape_gradient),
        },
    )?
    .with_singular_points(vec![[0.0, 0.0]]))
}

/// Unit square with `u = 2x + 3y - 1`, `f = 0`, Dirichlet on the left and
/// bottom sides, Neumann on the right and top.
pub fn linear_patch_problem() -> Result<ProblemSpec> {
    let mut vertices = Vec::new();
    for j in 0..3 {
        for i in 0..3 {
            vertices.push([0.5 * f64::from(i), 0.5 * f64::from(j)]);
        }
    }
    let id = |i: usize, j: usize| j * 3 + i;
    let mut elements = Vec::new();
    for j in 0..2 {
        for i in 0..2 {
            elements.push([id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
            elements.push([id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
        }
    }
    let mut boundary = Vec::new();
    use BoundaryLabel::{Dirichlet as D, Neumann as N};
    for i in 0..2 {
        boundary.push(BoundaryFacet {
            vertices: [id(i, 0), id(i + 1, 0)],
            label: D,
        });
        boundary.push(BoundaryFacet {
            vertices: [id(2, i), id(2, i + 1)],
            label: N,
        });
        boundary.push(BoundaryFacet {
            vertices: [id(2 - i, 2), id(1 - i, 2)],
            label: N,
        });
        boundary.push(BoundaryFacet {
            vertices: [id(0, 2 - i), id(0, 1 - i)],
            label: D,
        });
    }
    let mesh = Mesh::with_longest_edge_seed(vertices, elements, boundary)?;
    ProblemSpec::from_exact_solution(
        "linear-patch",
        mesh,
        Arc::new(|_| 0.0),
        ExactSolution {
            value: Arc::new(|x| 2.0 * x[0] + 3.0 * x[1] - 1.0),
            gradient: Arc::new(|_| [2.0, 3.0]),
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zshape_values() {
        assert!((zshape_solution([1.0, 0.0]) - 1.0).abs() < 1e-15);
        let g = zshape_gradient([1.0, 0.0]);
        assert!((g[0].hypot(g[1]) - 4.0 / 7.0).abs() < 1e-15);
        // |∇u| = (4/7) r^{-3/7} everywhere
        for &x in &[[0.3, 0.4], [-0.5, -0.7], [-0.2, 0.9], [0.01, -0.5]] {
            let g = zshape_gradient(x);
            let r: f64 = f64::hypot(x[0], x[1]);
            assert!((g[0].hypot(g[1]) - 4.0 / 7.0 * r.powf(-3.0 / 7.0)).abs() < 1e-13);
        }
        let expected = 2f64.powf(2.0 / 7.0) * (5.0 * PI / 7.0).cos();
        assert!((zshape_solution([-1.0, -1.0]) - expected).abs() < 1e-15);
        assert!((expected + 0.7600).abs() < 1e-3);
    }

    #[test]
    fn zshape_gradient_matches_finite_differences() {
        let h = 1e-6;
        for &x in &[
            [0.5, 0.2],
            [-0.6, 0.3],
            [-0.8, -0.5],
            [0.2, -0.9],
            [0.0, 0.7],
        ] {
            let g = zshape_gradient(x);
            let dx =
                (zshape_solution([x[0] + h, x[1]]) - zshape_solution([x[0] - h, x[1]])) / (2.0 * h);
            let dy =
                (zshape_solution([x[0], x[1] + h]) - zshape_solution([x[0], x[1] - h])) / (2.0 * h);
            assert!(
                (g[0] - dx).abs() < 1e-7 && (g[1] - dy).abs() < 1e-7,
                "{x:?}"
            );
        }
    }

    #[test]
    fn zshape_solution_is_harmonic() {
        let h = 1e-3;
        for &x in &[[0.5, 0.2], [-0.6, 0.3], [-0.8, -0.5], [0.4, -0.6]] {
            let u = zshape_solution;
            let lap = (u([x[0] + h, x[1]])
                + u([x[0] - h, x[1]])
                + u([x[0], x[1] + h])
                + u([x[0], x[1] - h])
                - 4.0 * u(x))
                / (h * h);
            assert!(lap.abs() < 1e-5, "{x:?}: {lap}");
        }
    }

    #[test]
    fn zshape_setup() {
        let spec = zshape_problem().unwrap();
        let mesh = &spec.initial_mesh;
        assert_eq!(mesh.num_elements(), 6);
        let area: f64 = (0..6).map(|t| mesh.element_size(t)).sum();
        assert!((area - 3.5).abs() < 1e-15);
        assert!(mesh.violations().is_empty());
        assert_eq!((spec.volume_load)([0.3, 0.1]), 0.0);
        let d = mesh.boundary_length(BoundaryLabel::Dirichlet);
        assert!((d - (2.0 + 2f64.sqrt())).abs() < 1e-14);
        // the origin lies on Γ_D
        assert!(mesh.dirichlet_vertices().contains(&0));
    }

    #[test]
    fn linear_patch_data() {
        let spec = linear_patch_problem().unwrap();
        assert!(((spec.dirichlet_trace)([0.0, 0.5]) - 0.5).abs() < 1e-15);
        assert!(((spec.neumann_flux)([1.0, 0.3], [1.0, 0.0]) - 2.0).abs() < 1e-15);
        assert!(
            ((spec.dirichlet_tangential_derivative)([0.4, 0.0], [1.0, 0.0]) - 2.0).abs() < 1e-15
        );
        assert!(spec.initial_mesh.violations().is_empty());
    }

    #[test]
    fn incompatible_data_is_rejected() {
        let good = linear_patch_problem().unwrap();
        let mut bad = good.clone();
        bad.neumann_flux = Arc::new(|_, _| 1.0);
        assert!(bad.validate().is_err());
        let mut bad = good.clone();
        bad.dirichlet_trace = Arc::new(|x| x[0]);
        assert!(bad.validate().is_err());
    }

    #[test]
    fn empty_dirichlet_boundary_is_rejected() {
        let good = linear_patch_problem().unwrap();
        let m = &good.initial_mesh;
        let all_neumann: Vec<_> = m
            .boundary()
            .iter()
            .map(|f| BoundaryFacet {
                vertices: f.vertices,
                label: BoundaryLabel::Neumann,
            })
            .collect();
        let mesh = Mesh::new(m.vertices().to_vec(), m.elements().to_vec(), all_neumann).unwrap();
        let res = ProblemSpec::from_data(
            "neumann-only",
            mesh,
            Arc::new(|_| 0.0),
            Arc::new(|_| 0.0),
            Arc::new(|_, _| 0.0),
            Arc::new(|_, _| 0.0),
        );
        assert!(matches!(res, Err(Error::Input(_))));
    }

    #[test]
    fn energy_error_of_linear_patch() {
        let spec = linear_patch_problem().unwrap();
        let mesh = &spec.initial_mesh;
        let interp = spec.interpolate_exact(mesh).unwrap();
        assert!(evaluate_energy_error(&spec, mesh, &interp).unwrap() < 1e-10);
        let zero = DiscreteFunction::new(vec![0.0; mesh.num_vertices()]);
        let e = evaluate_energy_error(&spec, mesh, &zero).unwrap();
        assert!((e - 13f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn energy_error_requires_exact_solution() {
        let spec = linear_patch_problem().unwrap();
        let mut nosol = spec.clone();
        nosol.exact_solution = None;
        let zero = DiscreteFunction::new(vec![0.0; spec.initial_mesh.num_vertices()]);
        let err = evaluate_energy_error(&nosol, &spec.initial_mesh, &zero).unwrap_err();
        assert!(matches!(err, Error::Capability(_)));
    }

    #[test]
    fn problem_names_parse() {
        assert_eq!(
            "zshape2d".parse::<ProblemName>().unwrap(),
            ProblemName::ZShape2d
        );
        assert_eq!(
            "linear-patch".parse::<ProblemName>().unwrap(),
            ProblemName::LinearPatch
        );
        assert!("fichera".parse::<ProblemName>().is_err());
    }
}

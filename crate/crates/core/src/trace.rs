//! Discretization of Dirichlet data on the trace space of continuous
//! piecewise-linear functions on the Dirichlet facets.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::fem::{pcg, CsrMatrix};
use crate::mesh::{edge_key, BoundaryLabel, Mesh, Point};
use crate::problems::ProblemSpec;
use crate::quadrature::GAUSS3;

/// Nodal values of a discrete Dirichlet trace, keyed by vertex index.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DirichletTrace {
    nodal_values: BTreeMap<usize, f64>,
}

impl DirichletTrace {
    pub fn value(&self, vertex: usize) -> Option<f64> {
        self.nodal_values.get(&vertex).copied()
    }

    pub fn vertices(&self) -> impl Iterator<Item = usize> + '_ {
        self.nodal_values.keys().copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.nodal_values.iter().map(|(&k, &v)| (k, v))
    }

    pub fn len(&self) -> usize {
        self.nodal_values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodal_values.is_empty()
    }

    /// `‖g − trace‖_{L²(Γ_D)}`.
    pub fn l2_error(&self, mesh: &Mesh, g: &dyn Fn(Point) -> f64) -> Result<f64> {
        let mut sum = 0.0;
        for f in mesh
            .boundary()
            .iter()
            .filter(|f| f.label == BoundaryLabel::Dirichlet)
        {
            let [a, b] = f.vertices;
            let (va, vb) = (
                self.value(a).unwrap_or(f64::NAN),
                self.value(b).unwrap_or(f64::NAN),
            );
            let [p, q] = mesh.facet_points(f);
            sum += GAUSS3.integrate(p, q, |x, s| (g(x) - (va + s * (vb - va))).powi(2))?;
        }
        Ok(sum.sqrt())
    }
}

impl FromIterator<(usize, f64)> for DirichletTrace {
    fn from_iter<I: IntoIterator<Item = (usize, f64)>>(iter: I) -> Self {
        Self {
            nodal_values: iter.into_iter().collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ProjectionKind {
    L2,
    ScottZhang,
    Nodal,
}

impl ProjectionKind {
    pub const ALL: [ProjectionKind; 3] = [
        ProjectionKind::L2,
        ProjectionKind::ScottZhang,
        ProjectionKind::Nodal,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ProjectionKind::L2 => "l2",
            ProjectionKind::ScottZhang => "scott-zhang",
            ProjectionKind::Nodal => "nodal",
        }
    }

    pub fn project(self, mesh: &Mesh, spec: &ProblemSpec) -> Result<DirichletTrace> {
        let g = &*spec.dirichlet_trace;
        match self {
            ProjectionKind::L2 => project_l2(mesh, g),
            ProjectionKind::ScottZhang => project_scott_zhang(mesh, g),
            ProjectionKind::Nodal => interpolate_nodal(mesh, g),
        }
    }
}

impl fmt::Display for ProjectionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ProjectionKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "l2" => Ok(ProjectionKind::L2),
            "scott-zhang" => Ok(ProjectionKind::ScottZhang),
            "nodal" => Ok(ProjectionKind::Nodal),
            other => Err(Error::Input(format!(
                "unknown projection `{other}` (expected `l2`, `scott-zhang` or `nodal`)"
            ))),
        }
    }
}

fn require_dirichlet(mesh: &Mesh) -> Result<Vec<usize>> {
    let vertices = mesh.dirichlet_vertices();
    if vertices.is_empty() {
        return Err(Error::Input("mesh has no Dirichlet facets".into()));
    }
    Ok(vertices)
}

/// L²(Γ_D)-orthogonal projection: solves the boundary mass-matrix system
/// `M a = (∫ g ψ_z)_z`. Disconnected Dirichlet components decouple into
/// independent blocks of the same system.
pub fn project_l2(mesh: &Mesh, g: &dyn Fn(Point) -> f64) -> Result<DirichletTrace> {
    let vertices = require_dirichlet(mesh)?;
    let local = |v: usize| vertices.binary_search(&v).expect("Dirichlet vertex");
    let n = vertices.len();
    let mut triplets = Vec::new();
    let mut load = vec![0.0; n];
    for f in mesh
        .boundary()
        .iter()
        .filter(|f| f.label == BoundaryLabel::Dirichlet)
    {
        let len = mesh.facet_length(f);
        let [a, b] = f.vertices.map(local);
        triplets.extend([
            (a, a, len / 3.0),
            (b, b, len / 3.0),
            (a, b, len / 6.0),
            (b, a, len / 6.0),
        ]);
        let [p, q] = mesh.facet_points(f);
        load[a] += GAUSS3.integrate(p, q, |x, s| g(x) * (1.0 - s))?;
        load[b] += GAUSS3.integrate(p, q, |x, s| g(x) * s)?;
    }
    let mass = CsrMatrix::from_triplets(n, &triplets);
    let mut coeffs = vec![0.0; n];
    pcg(&mass, &load, &mut coeffs, 1e-13)?;
    debug_assert!(
        coeffs.iter().all(|c| c.is_finite()),
        "boundary mass matrix is SPD"
    );
    Ok(vertices.into_iter().zip(coeffs).collect())
}

/// Scott-Zhang projection restricted to Γ_D. Vertex `z` uses the Dirichlet
/// facet `E_z ∋ z` with the smallest sorted vertex pair and the dual basis
/// function `ψ_z(t) = (4 − 6t)/|E_z|`, where `t` runs from `z` to the other end.
pub fn project_scott_zhang(mesh: &Mesh, g: &dyn Fn(Point) -> f64) -> Result<DirichletTrace> {
    require_dirichlet(mesh)?;
    let mut chosen: BTreeMap<usize, (usize, usize)> = BTreeMap::new();
    for f in mesh
        .boundary()
        .iter()
        .filter(|f| f.label == BoundaryLabel::Dirichlet)
    {
        let key = edge_key(f.vertices[0], f.vertices[1]);
        for z in f.vertices {
            chosen
                .entry(z)
                .and_modify(|best| *best = (*best).min(key))
                .or_insert(key);
        }
    }
    let mut values = BTreeMap::new();
    for (z, (a, b)) in chosen {
        let other = if a == z { b } else { a };
        let (p, q) = (mesh.vertices()[z], mesh.vertices()[other]);
        // ∫_E ψ_z g ds with ds = |E| dt cancels the 1/|E| in ψ_z
        let len = ((q[0] - p[0]).powi(2) + (q[1] - p[1]).powi(2)).sqrt();
        let v = GAUSS3.integrate(p, q, |x, t| (4.0 - 6.0 * t) * g(x))? / len;
        values.insert(z, v);
    }
    Ok(DirichletTrace {
        nodal_values: values,
    })
}

/// Nodal interpolation `z ↦ g(z)` at the Dirichlet vertices.
pub fn interpolate_nodal(mesh: &Mesh, g: &dyn Fn(Point) -> f64) -> Result<DirichletTrace> {
    let vertices = require_dirichlet(mesh)?;
    vertices
        .into_iter()
        .map(|v| {
            let p = mesh.vertices()[v];
            let value = g(p);
            if value.is_finite() {
                Ok((v, value))
            } else {
                Err(Error::Evaluation {
                    x: p[0],
                    y: p[1],
                    value,
                })
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{BoundaryFacet, BoundaryLabel::*};
    use crate::problems::{zshape_problem, zshape_solution};

    /// Single Dirichlet facet [0,1] × {0}.
    fn single_facet_mesh() -> Mesh {
        Mesh::new(
            vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
            vec![[0, 1, 2]],
            vec![
                BoundaryFacet {
                    vertices: [0, 1],
                    label: Dirichlet,
                },
                BoundaryFacet {
                    vertices: [1, 2],
                    label: Neumann,
                },
                BoundaryFacet {
                    vertices: [2, 0],
                    label: Neumann,
                },
            ],
        )
        .unwrap()
    }

    #[test]
    fn l2_projection_of_quadratic_on_one_facet() {
        // [[1/3, 1/6], [1/6, 1/3]] a = [1/12, 1/4]  =>  a = (-1/6, 5/6)
        let trace = project_l2(&single_facet_mesh(), &|x| x[0] * x[0]).unwrap();
        assert!((trace.value(0).unwrap() + 1.0 / 6.0).abs() < 1e-10);
        assert!((trace.value(1).unwrap() - 5.0 / 6.0).abs() < 1e-10);
        assert_eq!(trace.len(), 2);
    }

    #[test]
    fn scott_zhang_dual_basis_on_quadratic() {
        // ∫_0^1 (4 - 6t) t² dt = 4/3 - 3/2 = -1/6
        let trace = project_scott_zhang(&single_facet_mesh(), &|x| x[0] * x[0]).unwrap();
        assert!((trace.value(0).unwrap() + 1.0 / 6.0).abs() < 1e-10);
        // at the other end t runs from 1 back to 0: ∫ (4 - 6t)(1 - t)² dt = 4/3 - 1/2 = 5/6
        assert!((trace.value(1).unwrap() - 5.0 / 6.0).abs() < 1e-10);
    }

    #[test]
    fn all_strategies_reproduce_affine_and_constant_data() {
        let spec = zshape_problem().unwrap();
        let mesh = spec.initial_mesh.refine_uniform();
        for kind in ProjectionKind::ALL {
            let g = |x: Point| 0.3 - 1.7 * x[0] + 0.4 * x[1];
            let trace = match kind {
                ProjectionKind::L2 => project_l2(&mesh, &g),
                ProjectionKind::ScottZhang => project_scott_zhang(&mesh, &g),
                ProjectionKind::Nodal => interpolate_nodal(&mesh, &g),
            }
            .unwrap();
            for (v, val) in trace.iter() {
                assert!((val - g(mesh.vertices()[v])).abs() < 1e-12, "{kind}");
            }
            let c = match kind {
                ProjectionKind::L2 => project_l2(&mesh, &|_| 2.5),
                ProjectionKind::ScottZhang => project_scott_zhang(&mesh, &|_| 2.5),
                ProjectionKind::Nodal => interpolate_nodal(&mesh, &|_| 2.5),
            }
            .unwrap();
            assert!(c.iter().all(|(_, v)| (v - 2.5).abs() < 1e-12));
            assert_eq!(c.len(), mesh.dirichlet_vertices().len());
        }
    }

    #[test]
    fn piecewise_linear_data_is_reproduced_by_all_strategies() {
        // a kinked, continuous, piecewise-linear g on the initial Z-shape Γ_D
        let spec = zshape_problem().unwrap();
        let mesh = spec.initial_mesh.clone();
        let g = |x: Point| {
            if x[0] > -1.0 + 1e-12 {
                // diagonal segment from the origin to (-1,-1)
                2.0 * x[0]
            } else {
                if x[1] <= 0.0 {
                    1.0 + 3.0 * x[1]
                } else {
                    1.0 - x[1]
                }
            }
        };
        let nodal = interpolate_nodal(&mesh, &g).unwrap();
        let l2 = project_l2(&mesh, &g).unwrap();
        let sz = project_scott_zhang(&mesh, &g).unwrap();
        for (v, val) in nodal.iter() {
            assert!((l2.value(v).unwrap() - val).abs() < 1e-12);
            assert!((sz.value(v).unwrap() - val).abs() < 1e-12);
        }
    }

    #[test]
    fn zshape_nodal_value_at_corner() {
        let spec = zshape_problem().unwrap();
        let trace = ProjectionKind::Nodal
            .project(&spec.initial_mesh, &spec)
            .unwrap();
        let corner = spec
            .initial_mesh
            .vertices()
            .iter()
            .position(|&p| p == [-1.0, -1.0])
            .unwrap();
        let expected = 2f64.powf(2.0 / 7.0) * (5.0 * std::f64::consts::PI / 7.0).cos();
        assert_eq!(trace.value(corner).unwrap(), expected);
        assert!((expected - (-0.7600)).abs() < 5e-4);
        assert_eq!(zshape_solution([-1.0, -1.0]), expected);
    }

    #[test]
    fn scott_zhang_is_local() {
        let spec = zshape_problem().unwrap();
        let mesh = spec.initial_mesh.refine_uniform();
        let base = |x: Point| (3.0 * x[0]).sin() + x[1] * x[1];
        let reference = project_scott_zhang(&mesh, &base).unwrap();
        for (z, _) in reference.iter() {
            let key = mesh
                .boundary()
                .iter()
                .filter(|f| f.label == Dirichlet && f.vertices.contains(&z))
                .map(|f| edge_key(f.vertices[0], f.vertices[1]))
                .min()
                .unwrap();
            let (p, q) = (mesh.vertices()[key.0], mesh.vertices()[key.1]);
            // perturb g by an indicator of everything off the chosen facet
            let on_facet = move |x: Point| {
                let cross = (q[0] - p[0]) * (x[1] - p[1]) - (q[1] - p[1]) * (x[0] - p[0]);
                let dot = (q[0] - p[0]) * (x[0] - p[0]) + (q[1] - p[1]) * (x[1] - p[1]);
                let len2 = (q[0] - p[0]).powi(2) + (q[1] - p[1]).powi(2);
                cross.abs() < 1e-12 && dot >= -1e-12 && dot <= len2 + 1e-12
            };
            let perturbed = move |x: Point| base(x) + if on_facet(x) { 0.0 } else { 10.0 };
            let other = project_scott_zhang(&mesh, &perturbed).unwrap();
            assert_eq!(other.value(z), reference.value(z));
        }
    }

    #[test]
    fn l2_error_is_non_increasing_under_uniform_refinement() {
        let spec = zshape_problem().unwrap();
        let g = &*spec.dirichlet_trace;
        let mut mesh = spec.initial_mesh.clone();
        let mut last = f64::INFINITY;
        for _ in 0..5 {
            let err = project_l2(&mesh, g).unwrap().l2_error(&mesh, g).unwrap();
            assert!(err <= last * (1.0 + 1e-12), "{err} > {last}");
            last = err;
            mesh = mesh.refine_uniform();
        }
    }

    #[test]
    fn projection_names() {
        for kind in ProjectionKind::ALL {
            assert_eq!(kind.as_str().parse::<ProjectionKind>().unwrap(), kind);
        }
        assert!("h12".parse::<ProjectionKind>().is_err());
    }
}

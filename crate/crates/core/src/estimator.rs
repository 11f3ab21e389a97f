//! Residual error estimator `η² = ϱ² + osc_D²` for P1 solutions.
//!
//! For each element
//!
//! ```text
//! ϱ(T)² = |T| ‖f‖²_T + |T|^{1/2} ( ‖[∂_n U]‖²_{∂T∩Ω} + ‖φ − ∂_n U‖²_{∂T∩Γ_N} )
//! ```
//!
//! (ΔU vanishes elementwise for P1). Facet weights always use the area of an
//! element containing the facet. The per-edge jump split counts every interior
//! edge once with the mean of the two neighbours' `|T|^{1/2}`, so the jump
//! contributions to `Σ ϱ(T)²` equal exactly twice the split sum.

use crate::error::Result;
use crate::fem::{element_gradient, DiscreteFunction};
use crate::mesh::{BoundaryLabel, Mesh, Point};
use crate::problems::ProblemSpec;
use crate::quadrature::{GAUSS3, RADON7};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct EstimatorBreakdown {
    /// ϱ(T)² per element.
    pub rho_sq: Vec<f64>,
    /// osc_T(T)² per element.
    pub osc_t_sq: Vec<f64>,
    /// Volume part |T| ‖f‖²_T per element.
    pub volume_sq: Vec<f64>,
    /// Boundary facet indices of Γ_D, their owner elements, and osc_D(E)².
    pub dirichlet_facets: Vec<usize>,
    pub dirichlet_owners: Vec<usize>,
    pub osc_d_sq: Vec<f64>,
    /// Boundary facet indices of Γ_N, their owner elements, osc_N(E)², and the
    /// Neumann residual |T|^{1/2} ‖φ − ∂_n U‖²_E.
    pub neumann_facets: Vec<usize>,
    pub neumann_owners: Vec<usize>,
    pub osc_n_sq: Vec<f64>,
    pub neumann_sq: Vec<f64>,
    /// Interior edges (as adjacent element pairs) and their split jump term.
    pub interior_edges: Vec<[usize; 2]>,
    pub jump_sq: Vec<f64>,
}

impl EstimatorBreakdown {
    pub fn rho_total(&self) -> f64 {
        self.rho_sq.iter().sum()
    }

    pub fn osc_d_total(&self) -> f64 {
        self.osc_d_sq.iter().sum()
    }

    pub fn osc_n_total(&self) -> f64 {
        self.osc_n_sq.iter().sum()
    }

    pub fn osc_t_total(&self) -> f64 {
        self.osc_t_sq.iter().sum()
    }

    pub fn jump_total(&self) -> f64 {
        self.jump_sq.iter().sum()
    }

    pub fn volume_total(&self) -> f64 {
        self.volume_sq.iter().sum()
    }

    pub fn neumann_total(&self) -> f64 {
        self.neumann_sq.iter().sum()
    }

    /// η² = ϱ² + osc_D².
    pub fn eta_sq(&self) -> f64 {
        self.rho_total() + self.osc_d_total()
    }

    /// Element-localized η(T)² = ϱ(T)² plus osc_D(E)² of the Dirichlet facets of T.
    pub fn localized_eta_sq(&self) -> Vec<f64> {
        let mut out = self.rho_sq.clone();
        for (&owner, &osc) in self.dirichlet_owners.iter().zip(&self.osc_d_sq) {
            out[owner] += osc;
        }
        out
    }
}

/// `∫_E (h − mean_E h)²` for a facet field `h`, with the mean taken by the same rule.
fn facet_oscillation(p: Point, q: Point, h: impl Fn(Point) -> f64) -> Result<f64> {
    let len = ((q[0] - p[0]).powi(2) + (q[1] - p[1]).powi(2)).sqrt();
    let mean = GAUSS3.integrate(p, q, |x, _| h(x))? / len;
    GAUSS3.integrate(p, q, |x, _| (h(x) - mean).powi(2))
}

/// osc_D(E)² = |T|^{1/2} ‖(1 − Π_E) ∇_Γ g‖²_E per Dirichlet facet, in the
/// order of [`Mesh::facets_with_label`].
pub fn oscillations_dirichlet(mesh: &Mesh, spec: &ProblemSpec) -> Result<Vec<f64>> {
    let owners = mesh.boundary_owners();
    let mut out = Vec::new();
    for (facet, &owner) in mesh.boundary().iter().zip(&owners) {
        if facet.label != BoundaryLabel::Dirichlet {
            continue;
        }
        let (tangent, _) = mesh.facet_frame(facet, owner);
        let [p, q] = mesh.facet_points(facet);
        let osc = facet_oscillation(p, q, |x| (spec.dirichlet_tangential_derivative)(x, tangent))?;
        out.push(mesh.element_size(owner).sqrt() * osc);
    }
    Ok(out)
}

/// osc_N(E)² = |T|^{1/2} ‖(1 − Π_E) φ‖²_E per Neumann facet.
pub fn oscillations_neumann(mesh: &Mesh, spec: &ProblemSpec) -> Result<Vec<f64>> {
    let owners = mesh.boundary_owners();
    let mut out = Vec::new();
    for (facet, &owner) in mesh.boundary().iter().zip(&owners) {
        if facet.label != BoundaryLabel::Neumann {
            continue;
        }
        let (_, normal) = mesh.facet_frame(facet, owner);
        let [p, q] = mesh.facet_points(facet);
        let osc = facet_oscillation(p, q, |x| (spec.neumann_flux)(x, normal))?;
        out.push(mesh.element_size(owner).sqrt() * osc);
    }
    Ok(out)
}

/// osc_T(T)² = |T| ‖(1 − Π_T) f‖²_T per element.
pub fn oscillations_element(mesh: &Mesh, spec: &ProblemSpec) -> Result<Vec<f64>> {
    (0..mesh.num_elements())
        .map(|t| {
            let tri = mesh.element_points(t);
            let area = mesh.element_size(t);
            let mean = RADON7.integrate(&tri, |x, _| (spec.volume_load)(x))? / area;
            let osc = RADON7.integrate(&tri, |x, _| ((spec.volume_load)(x) - mean).powi(2))?;
            Ok(area * osc)
        })
        .collect()
}

/// Computes all indicator and oscillation terms for `solution` on `mesh`.
pub fn estimate(
    mesh: &Mesh,
    spec: &ProblemSpec,
    solution: &DiscreteFunction,
) -> Result<EstimatorBreakdown> {
    solution.check_mesh(mesh)?;
    let u = solution.coefficients();
    let ne = mesh.num_elements();
    let gradients: Vec<[f64; 2]> = (0..ne).map(|t| element_gradient(mesh, t, u)).collect();
    let sqrt_area: Vec<f64> = (0..ne).map(|t| mesh.element_size(t).sqrt()).collect();

    let mut volume_sq = Vec::with_capacity(ne);
    for t in 0..ne {
        let tri = mesh.element_points(t);
        let f_sq = RADON7.integrate(&tri, |x, _| (spec.volume_load)(x).powi(2))?;
        volume_sq.push(mesh.element_size(t) * f_sq);
    }
    let mut rho_sq = volume_sq.clone();

    let edges = mesh.interior_edges();
    let mut interior_edges = Vec::with_capacity(edges.len());
    let mut jump_sq = Vec::with_capacity(edges.len());
    for e in &edges {
        let [p, q] = e.vertices.map(|v| mesh.vertices()[v]);
        let len = ((q[0] - p[0]).powi(2) + (q[1] - p[1]).powi(2)).sqrt();
        let n = [(q[1] - p[1]) / len, -(q[0] - p[0]) / len];
        let (gl, gr) = (gradients[e.left], gradients[e.right]);
        let jump = (gl[0] - gr[0]) * n[0] + (gl[1] - gr[1]) * n[1];
        let norm_sq = len * jump * jump;
        rho_sq[e.left] += sqrt_area[e.left] * norm_sq;
        rho_sq[e.right] += sqrt_area[e.right] * norm_sq;
        interior_edges.push([e.left, e.right]);
        jump_sq.push(0.5 * (sqrt_area[e.left] + sqrt_area[e.right]) * norm_sq);
    }

    let owners = mesh.boundary_owners();
    let mut out = EstimatorBreakdown {
        osc_t_sq: oscillations_element(mesh, spec)?,
        interior_edges,
        jump_sq,
        ..Default::default()
    };
    for (i, (facet, &owner)) in mesh.boundary().iter().zip(&owners).enumerate() {
        let (tangent, normal) = mesh.facet_frame(facet, owner);
        let [p, q] = mesh.facet_points(facet);
        match facet.label {
            BoundaryLabel::Dirichlet => {
                let osc = facet_oscillation(p, q, |x| {
                    (spec.dirichlet_tangential_derivative)(x, tangent)
                })?;
                out.dirichlet_facets.push(i);
                out.dirichlet_owners.push(owner);
                out.osc_d_sq.push(sqrt_area[owner] * osc);
            }
            BoundaryLabel::Neumann => {
                let g = gradients[owner];
                let du_dn = g[0] * normal[0] + g[1] * normal[1];
                let residual = GAUSS3.integrate(p, q, |x, _| {
                    ((spec.neumann_flux)(x, normal) - du_dn).powi(2)
                })?;
                let osc = facet_oscillation(p, q, |x| (spec.neumann_flux)(x, normal))?;
                let weighted = sqrt_area[owner] * residual;
                rho_sq[owner] += weighted;
                out.neumann_facets.push(i);
                out.neumann_owners.push(owner);
                out.neumann_sq.push(weighted);
                out.osc_n_sq.push(sqrt_area[owner] * osc);
            }
        }
    }
    out.rho_sq = rho_sq;
    out.volume_sq = volume_sq;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::{assemble, solve};
    use crate::mesh::{BoundaryFacet, BoundaryLabel::*};
    use crate::problems::{linear_patch_problem, zshape_problem};
    use crate::trace::ProjectionKind;
    use std::sync::Arc;

    fn reference_triangle(labels: [BoundaryLabel; 3]) -> Mesh {
        Mesh::new(
            vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
            vec![[0, 1, 2]],
            vec![
                BoundaryFacet {
                    vertices: [0, 1],
                    label: labels[0],
                },
                BoundaryFacet {
                    vertices: [1, 2],
                    label: labels[1],
                },
                BoundaryFacet {
                    vertices: [2, 0],
                    label: labels[2],
                },
            ],
        )
        .unwrap()
    }

    fn data_problem(
        mesh: Mesh,
        f: impl Fn(Point) -> f64 + Send + Sync + 'static,
        g: impl Fn(Point) -> f64 + Send + Sync + 'static,
        dg: impl Fn(Point, [f64; 2]) -> f64 + Send + Sync + 'static,
        phi: impl Fn(Point, [f64; 2]) -> f64 + Send + Sync + 'static,
    ) -> ProblemSpec {
        ProblemSpec::from_data(
            "test",
            mesh,
            Arc::new(f),
            Arc::new(g),
            Arc::new(dg),
            Arc::new(phi),
        )
        .unwrap()
    }

    #[test]
    fn volume_indicator_on_reference_triangle() {
        let mesh = reference_triangle([Dirichlet; 3]);
        let spec = data_problem(mesh.clone(), |_| 1.0, |_| 0.0, |_, _| 0.0, |_, _| 0.0);
        let est = estimate(&mesh, &spec, &DiscreteFunction::new(vec![0.0; 3])).unwrap();
        assert!((est.rho_sq[0] - 0.25).abs() < 1e-10);
        assert!(est.jump_sq.is_empty() && est.neumann_sq.is_empty());
        assert!(est.osc_t_sq[0].abs() < 1e-15);
    }

    #[test]
    fn dirichlet_oscillation_of_quadratic_trace() {
        // g = x² on [0,1]×{0}: g' = 2x, mean 1, ∫(2x−1)² = 1/3, weight √(1/2)
        let mesh = reference_triangle([Dirichlet, Neumann, Neumann]);
        let spec = data_problem(
            mesh.clone(),
            |_| 0.0,
            |x| x[0] * x[0],
            |x, t| 2.0 * x[0] * t[0],
            |_, _| 0.0,
        );
        let osc = oscillations_dirichlet(&mesh, &spec).unwrap();
        assert_eq!(osc.len(), 1);
        assert!((osc[0] - 0.5f64.sqrt() / 3.0).abs() < 1e-10);
    }

    #[test]
    fn neumann_oscillation_of_linear_flux() {
        // φ = x on [0,1]×{0}: ∫(x − 1/2)² = 1/12, weight √(1/2)
        let mesh = reference_triangle([Neumann, Dirichlet, Dirichlet]);
        let spec = data_problem(mesh.clone(), |_| 0.0, |_| 0.0, |_, _| 0.0, |x, _| x[0]);
        let osc = oscillations_neumann(&mesh, &spec).unwrap();
        assert!((osc[0] - 0.5f64.sqrt() / 12.0).abs() < 1e-10);
        let spec = data_problem(mesh.clone(), |_| 0.0, |_| 0.0, |_, _| 0.0, |_, _| 4.0);
        assert!(oscillations_neumann(&mesh, &spec).unwrap()[0].abs() < 1e-15);
    }

    #[test]
    fn element_oscillation_of_linear_load() {
        // f = x: mean 1/3, ∫(x − 1/3)² = 1/36, weight |T| = 1/2
        let mesh = reference_triangle([Dirichlet; 3]);
        let spec = data_problem(mesh.clone(), |x| x[0], |_| 0.0, |_, _| 0.0, |_, _| 0.0);
        let osc = oscillations_element(&mesh, &spec).unwrap();
        assert!((osc[0] - 1.0 / 72.0).abs() < 1e-10);
        let spec = data_problem(mesh.clone(), |_| 3.0, |_| 0.0, |_, _| 0.0, |_, _| 0.0);
        assert!(oscillations_element(&mesh, &spec).unwrap()[0].abs() < 1e-15);
    }

    #[test]
    fn affine_trace_has_no_dirichlet_oscillation() {
        let mesh = reference_triangle([Dirichlet, Neumann, Dirichlet]);
        let spec = data_problem(
            mesh.clone(),
            |_| 0.0,
            |x| 1.0 + 2.0 * x[0] - x[1],
            |_, t| 2.0 * t[0] - t[1],
            |_, _| 0.0,
        );
        assert!(oscillations_dirichlet(&mesh, &spec)
            .unwrap()
            .iter()
            .all(|&o| o.abs() < 1e-15));
    }

    #[test]
    fn jump_across_square_diagonal() {
        // hat function at vertex 0 of the unit square split along 0–2
        let mesh = crate::mesh::tests::unit_square();
        let spec = data_problem(mesh.clone(), |_| 0.0, |_| 0.0, |_, _| 0.0, |_, _| 0.0);
        let hat = DiscreteFunction::new(vec![1.0, 0.0, 0.0, 0.0]);
        let est = estimate(&mesh, &spec, &hat).unwrap();
        // element [0,2,3] (upper-left): U = 1 − y, ∇U = (0, −1)
        // element [2,0,1] (lower-right): U = 1 − x, ∇U = (−1, 0)
        // normal of the diagonal (1,−1)/√2: jump = ((0,−1) − (−1,0))·n = √2
        let jump_norm_sq = 2f64.sqrt() * 2.0; // |E| · jump²
        let w = 0.5f64.sqrt();
        assert_eq!(est.interior_edges.len(), 1);
        assert!((est.jump_sq[0] - w * jump_norm_sq).abs() < 1e-14);
        // right and top sides: ∂_n U = −1 with φ = 0, unit length
        assert_eq!(est.neumann_sq.len(), 2);
        assert!(est.neumann_sq.iter().all(|&v| (v - w).abs() < 1e-15));
        // both neighbours see the full jump term
        assert!((est.rho_total() - (2.0 * w * jump_norm_sq + 2.0 * w)).abs() < 1e-14);
    }

    #[test]
    fn linear_patch_has_zero_estimator() {
        let spec = linear_patch_problem().unwrap();
        let mesh = spec.initial_mesh.refine_uniform();
        let u = spec.interpolate_exact(&mesh).unwrap();
        let est = estimate(&mesh, &spec, &u).unwrap();
        for v in est
            .rho_sq
            .iter()
            .chain(&est.osc_d_sq)
            .chain(&est.osc_n_sq)
            .chain(&est.osc_t_sq)
            .chain(&est.jump_sq)
            .chain(&est.neumann_sq)
            .chain(&est.volume_sq)
        {
            assert!(v.abs() < 1e-10);
        }
        // and a non-exact function is detected
        let mut c = u.coefficients().to_vec();
        c[4] += 0.1;
        let est = estimate(&mesh, &spec, &DiscreteFunction::new(c)).unwrap();
        assert!(est.eta_sq() > 1e-6);
    }

    #[test]
    fn split_accounts_for_every_element_contribution() {
        let spec = zshape_problem().unwrap();
        let mesh = spec
            .initial_mesh
            .refine_uniform()
            .refine(&[0, 3, 7].into_iter().collect())
            .unwrap();
        let sys = assemble(&mesh, &spec).unwrap();
        let trace = ProjectionKind::L2.project(&mesh, &spec).unwrap();
        let u = solve(&sys, &trace).unwrap();
        let est = estimate(&mesh, &spec, &u).unwrap();
        let split = 2.0 * est.jump_total() + est.volume_total() + est.neumann_total();
        assert!((est.rho_total() - split).abs() <= 1e-10 * est.rho_total());
        assert!((est.eta_sq() - est.rho_total() - est.osc_d_total()).abs() < 1e-15);
        assert_eq!(est.osc_d_sq, oscillations_dirichlet(&mesh, &spec).unwrap());
        assert_eq!(est.osc_n_sq, oscillations_neumann(&mesh, &spec).unwrap());
        assert!(est.osc_t_sq.iter().all(|&o| o == 0.0));
        assert!(est.volume_sq.iter().all(|&o| o == 0.0));
        let all_nonneg = [
            &est.rho_sq,
            &est.osc_d_sq,
            &est.osc_n_sq,
            &est.jump_sq,
            &est.neumann_sq,
        ]
        .iter()
        .all(|v| v.iter().all(|&x| x >= 0.0));
        assert!(all_nonneg);
        let loc: f64 = est.localized_eta_sq().iter().sum();
        assert!((loc - est.eta_sq()).abs() <= 1e-12 * est.eta_sq());
    }

    #[test]
    fn zshape_dirichlet_oscillation_peaks_at_origin() {
        let spec = zshape_problem().unwrap();
        let mut mesh = spec.initial_mesh.clone();
        for _ in 0..=3 {
            let osc = oscillations_dirichlet(&mesh, &spec).unwrap();
            let facets = mesh.facets_with_label(Dirichlet);
            let (imax, _) =
                osc.iter().enumerate().fold(
                    (0, f64::MIN),
                    |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc },
                );
            let f = mesh.boundary()[facets[imax]];
            assert!(f.vertices.iter().any(|&v| mesh.vertices()[v] == [0.0, 0.0]));
            mesh = mesh.refine_uniform();
        }
    }

    #[test]
    fn data_oscillations_decrease_under_uniform_refinement() {
        let spec = zshape_problem().unwrap();
        let mut mesh = spec.initial_mesh.clone();
        let mut last = (f64::INFINITY, f64::INFINITY);
        for _ in 0..5 {
            let d: f64 = oscillations_dirichlet(&mesh, &spec).unwrap().iter().sum();
            let n: f64 = oscillations_neumann(&mesh, &spec).unwrap().iter().sum();
            assert!(d <= last.0 && n <= last.1, "{d} {n} vs {last:?}");
            last = (d, n);
            mesh = mesh.refine_uniform();
        }
    }

    #[test]
    fn mismatched_solution_is_rejected() {
        let spec = linear_patch_problem().unwrap();
        let bad = DiscreteFunction::new(vec![0.0; 2]);
        assert!(estimate(&spec.initial_mesh, &spec, &bad).is_err());
    }
}

//! Piecewise-constant isotropic materials and the diagonal material matrices.

use serde::{Deserialize, Serialize};

use crate::fit::grid::StaggeredGrid;
use crate::fit::FitError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Region {
    /// Conducting: `σ > 0`.
    Conductor,
    /// Source (coil) region: winding and `τ_eq` live here.
    Source,
    /// Excitation-free, non-conducting.
    Free,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaterialField {
    pub eps: Vec<f64>,
    pub sigma: Vec<f64>,
    pub nu: Vec<f64>,
    pub tau: Vec<f64>,
    /// Artificial gauge materials.
    pub zeta: Vec<f64>,
    pub xi: Vec<f64>,
    pub region: Vec<Region>,
}

impl MaterialField {
    /// `ε = ν = 1`, `σ = τ = 0`, everything free.
    pub fn uniform(grid: &StaggeredGrid) -> Self {
        let n = grid.n_cells();
        Self {
            eps: vec![1.0; n],
            sigma: vec![0.0; n],
            nu: vec![1.0; n],
            tau: vec![0.0; n],
            zeta: vec![1.0; n],
            xi: vec![1.0; n],
            region: vec![Region::Free; n],
        }
    }

    pub fn set_conductor(&mut self, cell: usize, sigma: f64) -> &mut Self {
        self.region[cell] = Region::Conductor;
        self.sigma[cell] = sigma;
        self
    }

    pub fn set_source(&mut self, cell: usize, tau: f64) -> &mut Self {
        self.region[cell] = Region::Source;
        self.tau[cell] = tau;
        self
    }

    pub fn cells_in(&self, r: Region) -> Vec<usize> {
        (0..self.region.len()).filter(|&k| self.region[k] == r).collect()
    }

    pub fn validate(&self, grid: &StaggeredGrid) -> Result<(), FitError> {
        let n = grid.n_cells();
        let fields = [
            ("eps", &self.eps),
            ("sigma", &self.sigma),
            ("nu", &self.nu),
            ("tau", &self.tau),
            ("zeta", &self.zeta),
            ("xi", &self.xi),
        ];
        for (name, v) in fields {
            if v.len() != n {
                return Err(FitError::InvalidMaterial(format!("{name} has {} entries, grid has {n} cells", v.len())));
            }
            if let Some(k) = v.iter().position(|x| !(*x >= 0.0) || !x.is_finite()) {
                return Err(FitError::InvalidMaterial(format!("{name} is negative or not finite in cell {k}")));
            }
        }
        if self.region.len() != n {
            return Err(FitError::InvalidMaterial(format!("region has {} entries, grid has {n} cells", self.region.len())));
        }
        for k in 0..n {
            if self.eps[k] == 0.0 || self.nu[k] == 0.0 || self.zeta[k] == 0.0 || self.xi[k] == 0.0 {
                return Err(FitError::InvalidMaterial(format!("eps, nu, zeta and xi must be positive (cell {k})")));
            }
            let conducting = self.region[k] == Region::Conductor;
            if conducting != (self.sigma[k] > 0.0) {
                return Err(FitError::InvalidMaterial(format!(
                    "sigma must be positive exactly on conductor cells (cell {k}: sigma = {})",
                    self.sigma[k]
                )));
            }
            if self.tau[k] > 0.0 && self.region[k] != Region::Source {
                return Err(FitError::InvalidMaterial(format!("tau_eq is positive outside the source region (cell {k})")));
            }
        }
        Ok(())
    }
}

/// Diagonals over the full (unreduced) entity lists.
#[derive(Debug, Clone, PartialEq)]
pub struct MaterialMatrices {
    /// Edges.
    pub eps: Vec<f64>,
    pub sigma: Vec<f64>,
    pub zeta: Vec<f64>,
    /// Facets.
    pub nu: Vec<f64>,
    pub nu_tau: Vec<f64>,
    /// Points.
    pub xi: Vec<f64>,
}

/// Dual-facet weighted sum over the cells around an edge, per unit length.
fn edge_average(grid: &StaggeredGrid, field: &[f64]) -> Vec<f64> {
    (0..grid.n_edges())
        .map(|k| grid.edge_cells(k).iter().map(|&(c, a)| field[c] * a).sum::<f64>() / grid.edge_length(k))
        .collect()
}

/// Arithmetic ε/σ/ζ on dual facets, harmonic ν along dual edges, and
/// length-weighted arithmetic `ν·τ_eq` (harmonic would vanish wherever a
/// dual edge leaves the coil). `ξ` is scaled by the mean edge permittivity.
pub fn build_material_matrices(grid: &StaggeredGrid, mat: &MaterialField) -> Result<MaterialMatrices, FitError> {
    mat.validate(grid)?;
    let eps = edge_average(grid, &mat.eps);
    let sigma = edge_average(grid, &mat.sigma);
    let zeta = edge_average(grid, &mat.zeta);
    let mut nu = Vec::with_capacity(grid.n_facets());
    let mut nu_tau = Vec::with_capacity(grid.n_facets());
    for k in 0..grid.n_facets() {
        let cells = grid.facet_cells(k);
        let len: f64 = cells.iter().map(|&(_, l)| l).sum();
        let resist: f64 = cells.iter().map(|&(c, l)| l / mat.nu[c]).sum();
        let area = grid.facet_area(k);
        nu.push(len * len / resist / area);
        nu_tau.push(cells.iter().map(|&(c, l)| mat.nu[c] * mat.tau[c] * l).sum::<f64>() / area);
    }
    let scale = eps.iter().sum::<f64>() / eps.len() as f64;
    let xi = (0..grid.n_points())
        .map(|k| {
            let cs = grid.point_cells(k);
            scale * cs.iter().map(|&c| mat.xi[c]).sum::<f64>() / cs.len() as f64
        })
        .collect();
    Ok(MaterialMatrices { eps, sigma, zeta, nu, nu_tau, xi })
}

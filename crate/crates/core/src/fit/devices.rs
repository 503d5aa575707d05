//! Device builders. Every builder returns the descriptor element together
//! with the numerical checks its strength argument relies on; classification
//! itself is left to the element classifier.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::elements::DescriptorElement;
use crate::fit::grid::{build_grid_operators, Boundary, StaggeredGrid};
use crate::fit::material::{build_material_matrices, MaterialField, Region};
use crate::fit::FitError;
use crate::linalg::{is_positive_definite, projector_onto_kernel, rank_svd, Lu};
use crate::matrix::Matrix;

/// `Φ̄ = Q_s Φ + P_s Φ_s`, `Φ_s = Λ_s v`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundarySplit {
    /// Free (unknown) points, global indices.
    pub free: Vec<usize>,
    /// Terminal points, global indices, grouped terminal by terminal.
    pub terminal: Vec<usize>,
    pub lambda: Matrix<f64>,
}

impl BoundarySplit {
    /// Free points followed by terminal points: the columns of `Φ̄`.
    pub fn points(&self) -> Vec<usize> {
        self.free.iter().chain(&self.terminal).copied().collect()
    }

    pub fn q_s(&self) -> Matrix<f64> {
        Matrix::identity(self.free.len()).vstack(&Matrix::zeros(self.terminal.len(), self.free.len()))
    }

    pub fn p_s(&self) -> Matrix<f64> {
        Matrix::zeros(self.free.len(), self.terminal.len()).vstack(&Matrix::identity(self.terminal.len()))
    }

    pub fn y_s(&self) -> Matrix<f64> {
        self.p_s().matmul(&self.lambda)
    }
}

pub fn boundary_split(
    grid: &StaggeredGrid,
    bc: &Boundary,
    terminals: &[Vec<[usize; 3]>],
) -> Result<BoundarySplit, FitError> {
    let ops = build_grid_operators(grid, bc)?;
    if terminals.is_empty() {
        return Err(FitError::BuildError("at least one terminal is required".into()));
    }
    let mut terminal = Vec::new();
    let mut lambda_cols = Vec::new();
    for (j, t) in terminals.iter().enumerate() {
        if t.is_empty() {
            return Err(FitError::BuildError(format!("terminal {} is empty", j + 1)));
        }
        for &p in t {
            if (0..3).any(|a| p[a] > grid.cells[a]) {
                return Err(FitError::BuildError(format!("terminal {} point {p:?} is outside the grid", j + 1)));
            }
            let k = grid.point(p);
            if ops.points.binary_search(&k).is_ok() {
                return Err(FitError::BuildError(format!(
                    "terminal {} point {p:?} is not on a Dirichlet face",
                    j + 1
                )));
            }
            if terminal.contains(&k) {
                return Err(FitError::BuildError(format!("terminal point {p:?} used twice")));
            }
            terminal.push(k);
            lambda_cols.push(j);
        }
    }
    let mut lambda = Matrix::zeros(terminal.len(), terminals.len());
    for (r, &j) in lambda_cols.iter().enumerate() {
        lambda[(r, j)] = 1.0;
    }
    Ok(BoundarySplit { free: ops.points, terminal, lambda })
}

fn row_scale(d: &[f64], m: &Matrix<f64>) -> Matrix<f64> {
    Matrix::from_fn(m.rows(), m.cols(), |i, j| d[i] * m[(i, j)])
}

fn pick(v: &[f64], idx: &[usize]) -> Vec<f64> {
    idx.iter().map(|&k| v[k]).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmChecks {
    pub m_nonsingular: bool,
    /// `‖F·M⁻¹·N‖∞`.
    pub fm_inv_n_norm: f64,
    /// `‖F·M⁻¹·B‖∞`, assumed zero by the strength argument.
    pub f_b_tilde_norm: f64,
    /// `λ_min` of the symmetric part of `F·Ã·Ñ`.
    pub s_l_lambda_min: f64,
    pub s_l_positive_definite: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EqsChecks {
    pub e_q_lambda_min: f64,
    pub schur_lambda_min: f64,
    pub schur_symmetry_defect: f64,
    pub schur_positive_definite: bool,
    /// `max |Q_sᵀ Y_s|`; zero when the supports are disjoint.
    pub support_overlap: f64,
    pub schur: Matrix<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MqsChecks {
    pub cotree_edges: usize,
    pub curl_rank: usize,
    /// `‖Q_τ X‖∞` before and after the projection.
    pub projection_norm: f64,
    pub q_t_x_norm: f64,
    /// `‖K·Q_τ‖∞`, `K = Cᵀ M_{ν,τ} C`.
    pub k_q_norm: f64,
    pub projector_defect: f64,
    /// `Xᵀ P_τ (K + Q_τᵀQ_τ)⁻¹ P_τᵀ X`.
    pub g_inverse: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "device", rename_all = "lowercase")]
pub enum DeviceChecks {
    Em(EmChecks),
    Eqs(EqsChecks),
    Mqs(MqsChecks),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Device {
    pub element: DescriptorElement<f64>,
    pub checks: DeviceChecks,
}

fn prepare(grid: &StaggeredGrid, mat: &MaterialField, allow_large: bool) -> Result<crate::fit::MaterialMatrices, FitError> {
    grid.check_cap(allow_large)?;
    build_material_matrices(grid, mat)
}

fn element(
    label: &str,
    parts: [Matrix<f64>; 6],
) -> Result<DescriptorElement<f64>, FitError> {
    let [k_x, k_i, k_v, l_x, l_i, l_v] = parts;
    DescriptorElement::new(label, k_x, k_i, k_v, l_x, l_i, l_v).map_err(|e| FitError::BuildError(e.to_string()))
}

/// Full-wave potential formulation with `x = (Φ, a, π)`.
pub fn build_em_device(
    grid: &StaggeredGrid,
    bc: &Boundary,
    mat: &MaterialField,
    terminals: &[Vec<[usize; 3]>],
    allow_large: bool,
) -> Result<Device, FitError> {
    if bc.has_neumann() {
        return Err(FitError::AssumptionViolated("the full-wave device needs a Neumann-free boundary".into()));
    }
    if !mat.cells_in(Region::Source).is_empty() {
        return Err(FitError::AssumptionViolated("the full-wave device admits no source region".into()));
    }
    let mm = prepare(grid, mat, allow_large)?;
    let ops = build_grid_operators(grid, bc)?;
    let split = boundary_split(grid, bc, terminals)?;
    let phi = split.points();
    let (nq, ne, k) = (split.free.len(), ops.edges.len(), terminals.len());

    let g = grid.gradient().select_rows(&ops.edges).select_cols(&phi).to_f64();
    let st = grid.dual_divergence().select_rows(&phi).select_cols(&ops.edges).to_f64();
    let c = ops.c.to_f64();
    let ct = ops.c_dual.to_f64();
    let (m_eps, m_sig, m_zeta) = (pick(&mm.eps, &ops.edges), pick(&mm.sigma, &ops.edges), pick(&mm.zeta, &ops.edges));
    let m_nu = pick(&mm.nu, &ops.facets);
    let m_xi = pick(&mm.xi, &phi);

    let gq = g.block(0, ne, 0, nq);
    let gy = g.block(0, ne, nq, phi.len()).matmul(&split.lambda);
    let stq = st.block(0, nq, 0, ne);
    let sty = split.lambda.transpose().matmul(&st.block(nq, phi.len(), 0, ne));
    let k_nu = ct.matmul(&row_scale(&m_nu, &c));
    let l_q = stq.matmul(&row_scale(&m_eps, &gq));
    let h = stq.matmul(&row_scale(&m_zeta, &g)).matmul(&row_scale(&m_xi, &st)).matmul(&Matrix::diag(&m_zeta));
    let f_a = sty.matmul(&k_nu);

    let n = nq + 2 * ne;
    let eye = Matrix::identity(ne);
    let mut m = Matrix::zeros(n, n);
    m.set_block(0, 0, &l_q);
    m.set_block(nq, 0, &row_scale(&m_eps, &gq));
    m.set_block(nq, nq, &Matrix::diag(&m_sig));
    m.set_block(nq, nq + ne, &Matrix::diag(&m_eps));
    m.set_block(nq + ne, nq, &eye);
    let mut a = Matrix::zeros(n, n);
    a.set_block(0, nq, &h);
    a.set_block(nq, 0, &row_scale(&m_sig, &gq));
    a.set_block(nq, nq, &k_nu);
    a.set_block(nq + ne, nq + ne, &-&eye);
    let mut nn = Matrix::zeros(n, k);
    nn.set_block(nq, 0, &row_scale(&m_eps, &gy));
    let mut b = Matrix::zeros(n, k);
    b.set_block(nq, 0, &row_scale(&m_sig, &gy));
    let mut f = Matrix::zeros(k, n);
    f.set_block(0, nq, &f_a);

    let lu = Lu::new(&m, 1e-12 * m.max_abs()).map_err(|_| FitError::BuildError("M is singular".into()))?;
    let n_t = lu.solve(&nn);
    let b_t = lu.solve(&b);
    let s_l = f.matmul(&lu.solve(&a.matmul(&n_t)));
    let pd = is_positive_definite(&s_l, None)?;
    let checks = EmChecks {
        m_nonsingular: true,
        fm_inv_n_norm: f.matmul(&n_t).norm_inf(),
        f_b_tilde_norm: f.matmul(&b_t).norm_inf(),
        s_l_lambda_min: pd.lambda_min,
        s_l_positive_definite: pd.positive_definite,
    };

    let zk = Matrix::zeros(k, k);
    let el = element(
        "em-device",
        [
            m.vstack(&Matrix::zeros(k, n)),
            Matrix::zeros(n + k, k),
            nn.vstack(&zk),
            a.vstack(&-&f),
            Matrix::zeros(n, k).vstack(&Matrix::identity(k)),
            b.vstack(&zk),
        ],
    )?;
    Ok(Device { element: el, checks: DeviceChecks::Em(checks) })
}

/// Electroquasistatic device with `x = Φ` on the free points.
pub fn build_eqs_device(
    grid: &StaggeredGrid,
    bc: &Boundary,
    mat: &MaterialField,
    terminals: &[Vec<[usize; 3]>],
    allow_large: bool,
) -> Result<Device, FitError> {
    let mm = prepare(grid, mat, allow_large)?;
    let ops = build_grid_operators(grid, bc)?;
    let split = boundary_split(grid, bc, terminals)?;
    let phi = split.points();
    let (nq, k) = (split.free.len(), terminals.len());
    let st = grid.dual_divergence().select_rows(&phi).select_cols(&ops.edges).to_f64();
    let laplace = |d: &[f64]| st.matmul(&row_scale(&pick(d, &ops.edges), &st.transpose()));
    let (l_eps, l_sig) = (laplace(&mm.eps), laplace(&mm.sigma));
    let (qs, ys) = (split.q_s(), split.y_s());
    let part = |l: &Matrix<f64>, a: &Matrix<f64>, b: &Matrix<f64>| a.transpose().matmul(l).matmul(b);

    let e_q = part(&l_eps, &qs, &qs);
    let eq_pd = is_positive_definite(&e_q, None)?;
    if !eq_pd.positive_definite {
        return Err(FitError::GaugeError(format!(
            "Q_sᵀ L_ε Q_s is not positive definite (λ_min = {:e}); is a Dirichlet face missing?",
            eq_pd.lambda_min
        )));
    }
    let lu = Lu::new(&e_q, 1e-12 * e_q.max_abs())?;
    let qly = part(&l_eps, &qs, &ys);
    let schur = &part(&l_eps, &ys, &ys) - &qly.transpose().matmul(&lu.solve(&qly));
    let s_pd = is_positive_definite(&schur, None)?;
    let checks = EqsChecks {
        e_q_lambda_min: eq_pd.lambda_min,
        schur_lambda_min: s_pd.lambda_min,
        schur_symmetry_defect: (&schur - &schur.transpose()).max_abs(),
        schur_positive_definite: s_pd.positive_definite,
        support_overlap: qs.transpose().matmul(&ys).max_abs(),
        schur,
    };

    let w = qs.hstack(&ys);
    let top = |l: &Matrix<f64>| part(l, &w, &qs);
    let side = |l: &Matrix<f64>| part(l, &w, &ys);
    let mut l_i = Matrix::zeros(nq + k, k);
    l_i.set_block(nq, 0, &-&Matrix::identity(k));
    let el = element(
        "eqs-device",
        [top(&l_eps), Matrix::zeros(nq + k, k), side(&l_eps), top(&l_sig), l_i, side(&l_sig)],
    )?;
    Ok(Device { element: el, checks: DeviceChecks::Eqs(checks) })
}

/// Edges left after removing a breadth-first spanning tree of the free
/// points (all Dirichlet points merged into one root).
pub fn tree_cotree(grid: &StaggeredGrid, points: &[usize], edges: &[usize]) -> Vec<usize> {
    let root = points.len();
    let node = |p: usize| points.binary_search(&p).unwrap_or(root);
    let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); root + 1];
    for (e, &k) in edges.iter().enumerate() {
        let (a, p) = grid.edge_coords(k);
        let mut q = p;
        q[a] += 1;
        let (u, v) = (node(grid.point(p)), node(grid.point(q)));
        if u != v {
            adj[u].push((v, e));
            adj[v].push((u, e));
        }
    }
    let mut seen = vec![false; root + 1];
    let mut tree = vec![false; edges.len()];
    let mut queue = VecDeque::from([root]);
    seen[root] = true;
    while let Some(u) = queue.pop_front() {
        for &(v, e) in &adj[u] {
            if !seen[v] {
                seen[v] = true;
                tree[e] = true;
                queue.push_back(v);
            }
        }
    }
    edges.iter().zip(tree).filter(|(_, t)| !t).map(|(&k, _)| k).collect()
}

/// Go-and-return winding in `z`: coil cells left of the coil's mean `x`
/// carry `+1`, the rest `−1`, integrated over each z-edge's dual facet.
pub fn winding_from_coil(grid: &StaggeredGrid, coil: &[usize]) -> Vec<f64> {
    let xs: Vec<f64> = coil.iter().map(|&c| grid.cell_coords(c)[0] as f64).collect();
    let mean = xs.iter().sum::<f64>() / xs.len().max(1) as f64;
    let uniform = xs.iter().all(|&x| x == mean);
    let mut density = vec![0.0; grid.n_cells()];
    for (&c, &x) in coil.iter().zip(&xs) {
        density[c] = if uniform || x < mean { 1.0 } else { -1.0 };
    }
    (0..grid.n_edges())
        .map(|k| {
            if grid.edge_coords(k).0 != 2 {
                return 0.0;
            }
            grid.edge_cells(k).iter().map(|&(c, a)| density[c] * a).sum()
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MqsOptions {
    /// Project the winding onto `range P_τ` instead of rejecting it.
    pub enforce_support: bool,
    pub allow_large: bool,
}

impl Default for MqsOptions {
    fn default() -> Self {
        Self { enforce_support: true, allow_large: false }
    }
}

/// Homogenized eddy-current device with `x = a` on the cotree edges and
/// one port; `winding` is indexed by global edge.
pub fn build_mqs_device(
    grid: &StaggeredGrid,
    bc: &Boundary,
    mat: &MaterialField,
    winding: &[f64],
    opts: &MqsOptions,
) -> Result<Device, FitError> {
    let mm = prepare(grid, mat, opts.allow_large)?;
    if winding.len() != grid.n_edges() {
        return Err(FitError::BuildError(format!("winding has {} entries, grid has {} edges", winding.len(), grid.n_edges())));
    }
    if mat.tau.iter().all(|&t| t == 0.0) {
        return Err(FitError::DegenerateDevice("tau_eq vanishes everywhere, so P_tau = 0".into()));
    }
    for (k, &w) in winding.iter().enumerate() {
        if w != 0.0 && grid.edge_cells(k).iter().all(|&(c, _)| mat.region[c] != Region::Source) {
            return Err(FitError::AssumptionViolated(format!("winding is nonzero on edge {k} outside the source region")));
        }
    }
    let ops = build_grid_operators(grid, bc)?;
    let cotree = tree_cotree(grid, &ops.points, &ops.edges);
    let c = grid.curl().select_rows(&ops.facets).select_cols(&cotree).to_f64();
    let rank = rank_svd(&c, None)?;
    if rank < cotree.len() {
        return Err(FitError::GaugeError(format!("gauged curl has rank {rank} < {} columns", cotree.len())));
    }
    let kk = c.transpose().matmul(&row_scale(&pick(&mm.nu_tau, &ops.facets), &c));
    let k_nu = c.transpose().matmul(&row_scale(&pick(&mm.nu, &ops.facets), &c));
    let proj = projector_onto_kernel(&kk, None, "C^T M_nu,tau C")?;
    let q = proj.matrix.clone();
    let p = proj.complement().matrix;

    let raw = pick(winding, &cotree);
    let qx = q.mul_vec(&raw);
    let projection_norm = qx.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if !opts.enforce_support && projection_norm > 1e-12 {
        return Err(FitError::AssumptionViolated(format!("Q_tau^T X = {projection_norm:e} != 0")));
    }
    let x = p.mul_vec(&raw);
    if x.iter().all(|v| v.abs() <= 1e-14) {
        return Err(FitError::DegenerateDevice("winding has no component outside ker K".into()));
    }
    let q_t_x_norm = q.mul_vec(&x).iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let reg = &kk + &q.transpose().matmul(&q);
    let lu = Lu::new(&reg, 1e-12 * reg.max_abs())?;
    let px = p.transpose().mul_vec(&x);
    let sol = lu.solve_vec(&px);
    let g_inverse: f64 = px.iter().zip(&sol).map(|(a, b)| a * b).sum();
    let checks = MqsChecks {
        cotree_edges: cotree.len(),
        curl_rank: rank,
        projection_norm,
        q_t_x_norm,
        k_q_norm: kk.matmul(&q).norm_inf(),
        projector_defect: proj.idempotence_defect(),
        g_inverse,
    };

    let m = cotree.len();
    let xcol = Matrix::column_vector(&x);
    let mut l_i = Matrix::zeros(m + 1, 1);
    l_i.set_block(0, 0, &-&xcol);
    let mut l_v = Matrix::zeros(m + 1, 1);
    l_v[(m, 0)] = -1.0;
    let el = element(
        "mqs-device",
        [kk.vstack(&xcol.transpose()), Matrix::zeros(m + 1, 1), Matrix::zeros(m + 1, 1), k_nu.vstack(&Matrix::zeros(1, m)), l_i, l_v],
    )?;
    Ok(Device { element: el, checks: DeviceChecks::Mqs(checks) })
}

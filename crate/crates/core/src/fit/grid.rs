//! Uniform Cartesian staggered grid and its integer incidence operators.
//!
//! Entity numbering is lexicographic with `x` fastest. Edges and facets are
//! grouped by axis (x-, y-, z-directed edges; x-, y-, z-normal facets).

use serde::{Deserialize, Serialize};

use crate::fit::FitError;
use crate::matrix::Matrix;

/// Cells per axis above which builders refuse without an override.
pub const DESK_SCALE_CAP: usize = 12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StaggeredGrid {
    pub cells: [usize; 3],
    pub spacing: [f64; 3],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FaceKind {
    Dirichlet,
    Neumann,
}

/// Boundary condition per face in the order x−, x+, y−, y+, z−, z+.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Boundary {
    pub faces: [FaceKind; 6],
}

impl Boundary {
    pub fn dirichlet_shell() -> Self {
        Self { faces: [FaceKind::Dirichlet; 6] }
    }

    /// Dirichlet on the four side faces, Neumann on both z faces.
    pub fn planar() -> Self {
        use FaceKind::*;
        Self { faces: [Dirichlet, Dirichlet, Dirichlet, Dirichlet, Neumann, Neumann] }
    }

    pub fn has_dirichlet(&self) -> bool {
        self.faces.contains(&FaceKind::Dirichlet)
    }

    pub fn has_neumann(&self) -> bool {
        self.faces.contains(&FaceKind::Neumann)
    }
}

fn unit(a: usize) -> [usize; 3] {
    let mut e = [0; 3];
    e[a] = 1;
    e
}

impl StaggeredGrid {
    pub fn new(cells: [usize; 3], spacing: [f64; 3]) -> Result<Self, FitError> {
        if cells.iter().any(|&n| n == 0) {
            return Err(FitError::InvalidGrid(format!("every axis needs at least one cell, got {cells:?}")));
        }
        if spacing.iter().any(|h| !(*h > 0.0) || !h.is_finite()) {
            return Err(FitError::InvalidGrid(format!("spacings must be positive, got {spacing:?}")));
        }
        Ok(Self { cells, spacing })
    }

    pub fn uniform(nx: usize, ny: usize, nz: usize) -> Result<Self, FitError> {
        Self::new([nx, ny, nz], [1.0; 3])
    }

    pub fn check_cap(&self, allow_large: bool) -> Result<(), FitError> {
        if !allow_large && self.cells.iter().any(|&n| n > DESK_SCALE_CAP) {
            return Err(FitError::InvalidGrid(format!(
                "grid {:?} exceeds {DESK_SCALE_CAP} cells per axis; pass the override to build anyway",
                self.cells
            )));
        }
        Ok(())
    }

    fn npts(&self) -> [usize; 3] {
        [self.cells[0] + 1, self.cells[1] + 1, self.cells[2] + 1]
    }

    /// Extent per axis of the entities directed along (edges) or normal
    /// to (facets) axis `a`.
    fn edge_dims(&self, a: usize) -> [usize; 3] {
        let mut d = self.npts();
        d[a] = self.cells[a];
        d
    }

    fn facet_dims(&self, a: usize) -> [usize; 3] {
        let mut d = self.cells;
        d[a] += 1;
        d
    }

    fn lin(p: [usize; 3], d: [usize; 3]) -> usize {
        p[0] + d[0] * (p[1] + d[1] * p[2])
    }

    fn unlin(mut k: usize, d: [usize; 3]) -> [usize; 3] {
        let x = k % d[0];
        k /= d[0];
        [x, k % d[1], k / d[1]]
    }

    fn count(d: [usize; 3]) -> usize {
        d[0] * d[1] * d[2]
    }

    pub fn n_points(&self) -> usize {
        Self::count(self.npts())
    }

    pub fn n_edges(&self) -> usize {
        (0..3).map(|a| Self::count(self.edge_dims(a))).sum()
    }

    pub fn n_facets(&self) -> usize {
        (0..3).map(|a| Self::count(self.facet_dims(a))).sum()
    }

    pub fn n_cells(&self) -> usize {
        Self::count(self.cells)
    }

    pub fn point(&self, p: [usize; 3]) -> usize {
        Self::lin(p, self.npts())
    }

    pub fn point_coords(&self, k: usize) -> [usize; 3] {
        Self::unlin(k, self.npts())
    }

    pub fn cell(&self, c: [usize; 3]) -> usize {
        Self::lin(c, self.cells)
    }

    pub fn cell_coords(&self, k: usize) -> [usize; 3] {
        Self::unlin(k, self.cells)
    }

    fn offset<F: Fn(usize) -> [usize; 3]>(a: usize, dims: F) -> usize {
        (0..a).map(|b| Self::count(dims(b))).sum()
    }

    /// Edge along axis `a` starting at point `p`.
    pub fn edge(&self, a: usize, p: [usize; 3]) -> usize {
        Self::offset(a, |b| self.edge_dims(b)) + Self::lin(p, self.edge_dims(a))
    }

    /// `(axis, start point)` of edge `k`.
    pub fn edge_coords(&self, k: usize) -> (usize, [usize; 3]) {
        let mut k = k;
        for a in 0..3 {
            let n = Self::count(self.edge_dims(a));
            if k < n {
                return (a, Self::unlin(k, self.edge_dims(a)));
            }
            k -= n;
        }
        panic!("edge index out of range")
    }

    /// Facet with normal `a` whose lowest corner is `p`.
    pub fn facet(&self, a: usize, p: [usize; 3]) -> usize {
        Self::offset(a, |b| self.facet_dims(b)) + Self::lin(p, self.facet_dims(a))
    }

    pub fn facet_coords(&self, k: usize) -> (usize, [usize; 3]) {
        let mut k = k;
        for a in 0..3 {
            let n = Self::count(self.facet_dims(a));
            if k < n {
                return (a, Self::unlin(k, self.facet_dims(a)));
            }
            k -= n;
        }
        panic!("facet index out of range")
    }

    /// Whether point `p` lies on face `f` (x−, x+, y−, y+, z−, z+).
    fn on_face(&self, p: [usize; 3], f: usize) -> bool {
        let a = f / 2;
        if f % 2 == 0 {
            p[a] == 0
        } else {
            p[a] == self.cells[a]
        }
    }

    pub fn point_on_face(&self, k: usize, f: usize) -> bool {
        self.on_face(self.point_coords(k), f)
    }

    /// An edge lies in a face if it is tangential to it and both endpoints are on it.
    pub fn edge_on_face(&self, k: usize, f: usize) -> bool {
        let (a, p) = self.edge_coords(k);
        a != f / 2 && self.on_face(p, f)
    }

    pub fn facet_on_face(&self, k: usize, f: usize) -> bool {
        let (a, p) = self.facet_coords(k);
        a == f / 2 && self.on_face(p, f)
    }

    /// Cells sharing edge `k`, with the portion of the dual facet each holds.
    pub fn edge_cells(&self, k: usize) -> Vec<(usize, f64)> {
        let (a, p) = self.edge_coords(k);
        let (b, c) = ((a + 1) % 3, (a + 2) % 3);
        let quarter = self.spacing[b] * self.spacing[c] / 4.0;
        let mut out = Vec::new();
        for db in [0usize, 1] {
            for dc in [0usize, 1] {
                if p[b] + db == 0 || p[c] + dc == 0 || p[b] + db > self.cells[b] || p[c] + dc > self.cells[c] {
                    continue;
                }
                let mut q = p;
                q[b] = p[b] + db - 1;
                q[c] = p[c] + dc - 1;
                out.push((self.cell(q), quarter));
            }
        }
        out
    }

    /// Cells pierced by the dual edge through facet `k`, with the length inside each.
    pub fn facet_cells(&self, k: usize) -> Vec<(usize, f64)> {
        let (a, p) = self.facet_coords(k);
        let half = self.spacing[a] / 2.0;
        let mut out = Vec::new();
        if p[a] > 0 {
            let mut q = p;
            q[a] -= 1;
            out.push((self.cell(q), half));
        }
        if p[a] < self.cells[a] {
            out.push((self.cell(p), half));
        }
        out
    }

    /// Cells touching point `k`.
    pub fn point_cells(&self, k: usize) -> Vec<usize> {
        let p = self.point_coords(k);
        let mut out = Vec::new();
        for d in 0..8usize {
            let mut q = [0; 3];
            let mut ok = true;
            for a in 0..3 {
                let s = (d >> a) & 1;
                if p[a] + s == 0 || p[a] + s > self.cells[a] {
                    ok = false;
                    break;
                }
                q[a] = p[a] + s - 1;
            }
            if ok {
                out.push(self.cell(q));
            }
        }
        out
    }

    pub fn edge_length(&self, k: usize) -> f64 {
        self.spacing[self.edge_coords(k).0]
    }

    pub fn facet_area(&self, k: usize) -> f64 {
        let a = self.facet_coords(k).0;
        self.spacing[(a + 1) % 3] * self.spacing[(a + 2) % 3]
    }

    /// Gradient: edges × points, `+1` at the edge's end, `−1` at its start.
    pub fn gradient(&self) -> Matrix<i64> {
        let mut g = Matrix::zeros(self.n_edges(), self.n_points());
        for k in 0..self.n_edges() {
            let (a, p) = self.edge_coords(k);
            let e = unit(a);
            g[(k, self.point(p))] = -1;
            g[(k, self.point([p[0] + e[0], p[1] + e[1], p[2] + e[2]]))] = 1;
        }
        g
    }

    /// Curl: facets × edges, circulation by the right-hand rule about the normal.
    pub fn curl(&self) -> Matrix<i64> {
        let mut c = Matrix::zeros(self.n_facets(), self.n_edges());
        for k in 0..self.n_facets() {
            let (a, p) = self.facet_coords(k);
            let (b, d) = ((a + 1) % 3, (a + 2) % 3);
            let add = |q: [usize; 3], e: [usize; 3]| [q[0] + e[0], q[1] + e[1], q[2] + e[2]];
            c[(k, self.edge(b, p))] = 1;
            c[(k, self.edge(d, add(p, unit(b))))] = 1;
            c[(k, self.edge(b, add(p, unit(d))))] = -1;
            c[(k, self.edge(d, p))] = -1;
        }
        c
    }

    /// Divergence: cells × facets, outward orientation.
    pub fn divergence(&self) -> Matrix<i64> {
        let mut s = Matrix::zeros(self.n_cells(), self.n_facets());
        for k in 0..self.n_cells() {
            let q = self.cell_coords(k);
            for a in 0..3 {
                let e = unit(a);
                s[(k, self.facet(a, q))] = -1;
                s[(k, self.facet(a, [q[0] + e[0], q[1] + e[1], q[2] + e[2]]))] = 1;
            }
        }
        s
    }

    /// Dual curl: primal edges (dual facets) × primal facets (dual edges),
    /// assembled edge by edge from the facets around each edge.
    pub fn dual_curl(&self) -> Matrix<i64> {
        let mut ct = Matrix::zeros(self.n_edges(), self.n_facets());
        for k in 0..self.n_edges() {
            let (a, p) = self.edge_coords(k);
            for n in 0..3 {
                if n == a {
                    continue;
                }
                // Facet with normal n is spanned by (s1, s2) = (n+1, n+2).
                let (s1, s2) = ((n + 1) % 3, (n + 2) % 3);
                let (other, sign_at_p) = if a == s1 { (s2, 1) } else { (s1, -1) };
                let fd = self.facet_dims(n);
                let inside = |q: [usize; 3]| (0..3).all(|i| q[i] < fd[i]);
                if inside(p) {
                    ct[(k, self.facet(n, p))] = sign_at_p;
                }
                if p[other] > 0 {
                    let mut q = p;
                    q[other] -= 1;
                    if inside(q) {
                        ct[(k, self.facet(n, q))] = -sign_at_p;
                    }
                }
            }
        }
        ct
    }

    /// Dual divergence: primal points (dual cells) × primal edges (dual
    /// facets), outflow taken along the edge direction.
    pub fn dual_divergence(&self) -> Matrix<i64> {
        let mut st = Matrix::zeros(self.n_points(), self.n_edges());
        for k in 0..self.n_edges() {
            let (a, p) = self.edge_coords(k);
            let e = unit(a);
            st[(self.point(p), k)] = 1;
            st[(self.point([p[0] + e[0], p[1] + e[1], p[2] + e[2]]), k)] = -1;
        }
        st
    }
}

/// Operators with homogeneous Dirichlet entities removed.
#[derive(Debug, Clone)]
pub struct GridOperators {
    pub g: Matrix<i64>,
    pub c: Matrix<i64>,
    pub s: Matrix<i64>,
    pub c_dual: Matrix<i64>,
    pub s_dual: Matrix<i64>,
    /// Kept global indices per entity type.
    pub points: Vec<usize>,
    pub edges: Vec<usize>,
    pub facets: Vec<usize>,
}

/// Kept (non-Dirichlet) entities.
pub fn free_entities(grid: &StaggeredGrid, bc: &Boundary) -> (Vec<usize>, Vec<usize>, Vec<usize>) {
    let dir: Vec<usize> = (0..6).filter(|&f| bc.faces[f] == FaceKind::Dirichlet).collect();
    let points = (0..grid.n_points()).filter(|&k| !dir.iter().any(|&f| grid.point_on_face(k, f))).collect();
    let edges = (0..grid.n_edges()).filter(|&k| !dir.iter().any(|&f| grid.edge_on_face(k, f))).collect();
    let facets = (0..grid.n_facets()).filter(|&k| !dir.iter().any(|&f| grid.facet_on_face(k, f))).collect();
    (points, edges, facets)
}

pub fn build_grid_operators(grid: &StaggeredGrid, bc: &Boundary) -> Result<GridOperators, FitError> {
    if !bc.has_dirichlet() {
        return Err(FitError::GaugeError("no Dirichlet face: the gradient would be rank deficient".into()));
    }
    let (points, edges, facets) = free_entities(grid, bc);
    let all_cells: Vec<usize> = (0..grid.n_cells()).collect();
    let pick = |m: Matrix<i64>, r: &[usize], c: &[usize]| m.select_rows(r).select_cols(c);
    Ok(GridOperators {
        g: pick(grid.gradient(), &edges, &points),
        c: pick(grid.curl(), &facets, &edges),
        s: pick(grid.divergence(), &all_cells, &facets),
        c_dual: pick(grid.dual_curl(), &edges, &facets),
        s_dual: pick(grid.dual_divergence(), &points, &edges),
        points,
        edges,
        facets,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn entity_counts() {
        let g = StaggeredGrid::uniform(2, 3, 4).unwrap();
        assert_eq!(g.n_points(), 3 * 4 * 5);
        assert_eq!(g.n_edges(), 2 * 4 * 5 + 3 * 3 * 5 + 3 * 4 * 4);
        assert_eq!(g.n_facets(), 3 * 3 * 4 + 2 * 4 * 4 + 2 * 3 * 5);
        assert_eq!(g.n_cells(), 24);
        for k in 0..g.n_edges() {
            let (a, p) = g.edge_coords(k);
            assert_eq!(g.edge(a, p), k);
        }
    }

    #[test]
    fn exact_identities_on_full_grid() {
        let g = StaggeredGrid::uniform(2, 2, 3).unwrap();
        assert!((&g.curl() * &g.gradient()).is_zero_matrix());
        assert!((&g.divergence() * &g.curl()).is_zero_matrix());
        assert_eq!(g.dual_curl(), g.curl().transpose());
        assert_eq!(g.dual_divergence(), -&g.gradient().transpose());
    }

    #[test]
    fn shell_keeps_interior_points() {
        let g = StaggeredGrid::uniform(2, 2, 2).unwrap();
        let ops = build_grid_operators(&g, &Boundary::dirichlet_shell()).unwrap();
        assert_eq!(ops.points.len(), 1);
        assert!((&ops.c * &ops.g).is_zero_matrix());
        assert!(build_grid_operators(&g, &Boundary { faces: [FaceKind::Neumann; 6] }).is_err());
    }
}

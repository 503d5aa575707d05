//! Circuit graph, reduced incidence matrices and the rank criteria for
//! V-loops, I-cutsets, CV-loops and LI-cutsets, including per-branch
//! membership.

use petgraph::unionfind::UnionFind;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{projector_onto_kernel, rank_svd, LinalgError, Svd};
use crate::matrix::Matrix;

/// Kernel entries at or below this are treated as zero when deciding
/// membership, unless the caller supplies a larger tolerance.
pub const MEMBERSHIP_FLOOR: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BranchClass {
    C,
    L,
    R,
    V,
    I,
}

impl BranchClass {
    pub const ALL: [BranchClass; 5] = [BranchClass::C, BranchClass::L, BranchClass::R, BranchClass::V, BranchClass::I];

    pub fn letter(self) -> char {
        match self {
            BranchClass::C => 'C',
            BranchClass::L => 'L',
            BranchClass::R => 'R',
            BranchClass::V => 'V',
            BranchClass::I => 'I',
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Branch {
    pub id: String,
    pub from: usize,
    pub to: usize,
    pub class: BranchClass,
    /// Element this branch is a port of, and which port.
    pub element: String,
    pub port: usize,
}

impl Branch {
    /// Single-port branch whose element shares its id.
    pub fn simple(id: &str, from: usize, to: usize, class: BranchClass) -> Self {
        Self { id: id.into(), from, to, class, element: id.into(), port: 0 }
    }
}

/// Node 0 is the mass (ground) node.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct CircuitGraph {
    pub node_count: usize,
    pub branches: Vec<Branch>,
}

impl CircuitGraph {
    pub fn new(node_count: usize) -> Self {
        Self { node_count, branches: Vec::new() }
    }

    pub fn add(&mut self, b: Branch) -> &mut Self {
        self.branches.push(b);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TopologyError {
    #[error("circuit graph is not connected (node {0} unreachable from node 0)")]
    NotConnected(usize),
    #[error("invalid branch '{id}': {reason}")]
    InvalidBranch { id: String, reason: String },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Reduced incidence matrices, one per class, columns in declaration order.
#[derive(Debug, Clone, PartialEq)]
pub struct IncidenceSet {
    pub a_c: Matrix<f64>,
    pub a_l: Matrix<f64>,
    pub a_r: Matrix<f64>,
    pub a_v: Matrix<f64>,
    pub a_i: Matrix<f64>,
    /// Branch ids per class, matching the matrix columns.
    pub ids: [Vec<String>; 5],
}

fn class_slot(c: BranchClass) -> usize {
    BranchClass::ALL.iter().position(|&k| k == c).unwrap_or(0)
}

impl IncidenceSet {
    pub fn nodes(&self) -> usize {
        self.a_c.rows()
    }

    pub fn matrix(&self, c: BranchClass) -> &Matrix<f64> {
        match c {
            BranchClass::C => &self.a_c,
            BranchClass::L => &self.a_l,
            BranchClass::R => &self.a_r,
            BranchClass::V => &self.a_v,
            BranchClass::I => &self.a_i,
        }
    }

    pub fn ids(&self, c: BranchClass) -> &[String] {
        &self.ids[class_slot(c)]
    }

    /// Horizontal concatenation of the given classes, in the given order.
    pub fn concat(&self, classes: &[BranchClass]) -> Matrix<f64> {
        let parts: Vec<&Matrix<f64>> = classes.iter().map(|&c| self.matrix(c)).collect();
        if parts.is_empty() {
            return Matrix::zeros(self.nodes(), 0);
        }
        Matrix::hcat(&parts)
    }

    fn concat_ids(&self, classes: &[BranchClass]) -> Vec<String> {
        classes.iter().flat_map(|&c| self.ids(c).iter().cloned()).collect()
    }
}

pub fn validate(g: &CircuitGraph) -> Result<(), TopologyError> {
    let mut seen = std::collections::HashSet::new();
    for b in &g.branches {
        let bad = |reason: String| TopologyError::InvalidBranch { id: b.id.clone(), reason };
        if !seen.insert(b.id.as_str()) {
            return Err(bad("duplicate branch id".into()));
        }
        if b.from == b.to {
            return Err(bad(format!("self-loop at node {}", b.from)));
        }
        if b.from >= g.node_count || b.to >= g.node_count {
            return Err(bad(format!("node index out of range (node count {})", g.node_count)));
        }
    }
    let mut uf = UnionFind::<usize>::new(g.node_count.max(1));
    for b in &g.branches {
        uf.union(b.from, b.to);
    }
    if let Some(n) = (1..g.node_count).find(|&n| !uf.equiv(0, n)) {
        return Err(TopologyError::NotConnected(n));
    }
    Ok(())
}

/// Entry `(n−1, j)` is +1 if branch j leaves node n, −1 if it enters it.
pub fn build_incidence(g: &CircuitGraph) -> Result<IncidenceSet, TopologyError> {
    validate(g)?;
    let rows = g.node_count.saturating_sub(1);
    let mut cols: [Vec<&Branch>; 5] = Default::default();
    for b in &g.branches {
        cols[class_slot(b.class)].push(b);
    }
    let build = |bs: &[&Branch]| {
        let mut m = Matrix::zeros(rows, bs.len());
        for (j, b) in bs.iter().enumerate() {
            if b.from > 0 {
                m[(b.from - 1, j)] = 1.0;
            }
            if b.to > 0 {
                m[(b.to - 1, j)] = -1.0;
            }
        }
        m
    };
    let ids = cols.clone().map(|bs| bs.iter().map(|b| b.id.clone()).collect());
    Ok(IncidenceSet {
        a_c: build(&cols[0]),
        a_l: build(&cols[1]),
        a_r: build(&cols[2]),
        a_v: build(&cols[3]),
        a_i: build(&cols[4]),
        ids,
    })
}

fn full_column_rank(m: &Matrix<f64>, tol: Option<f64>) -> Result<bool, LinalgError> {
    Ok(rank_svd(m, tol)? == m.cols())
}

fn full_row_rank(m: &Matrix<f64>, tol: Option<f64>) -> Result<bool, LinalgError> {
    Ok(rank_svd(m, tol)? == m.rows())
}

use BranchClass::{C, I, L, R, V};

/// `(no_v_loops, no_i_cutsets)`.
pub fn check_source_sanity(inc: &IncidenceSet, tol: Option<f64>) -> Result<(bool, bool), LinalgError> {
    Ok((full_column_rank(&inc.a_v, tol)?, full_row_rank(&inc.concat(&[C, L, R, V]), tol)?))
}

pub fn detect_cv_loops(inc: &IncidenceSet, tol: Option<f64>) -> Result<bool, LinalgError> {
    Ok(!full_column_rank(&inc.concat(&[C, V]), tol)?)
}

pub fn detect_li_cutsets(inc: &IncidenceSet, tol: Option<f64>) -> Result<bool, LinalgError> {
    Ok(!full_row_rank(&inc.concat(&[C, R, V]), tol)?)
}

/// Evidence behind the membership sets.
#[derive(Debug, Clone, PartialEq)]
pub struct MembershipWitness {
    /// Orthonormal kernel basis of `[A_C A_V]`; rows follow the C then V ids.
    pub cv_kernel: Matrix<f64>,
    /// `[A_L A_I]ᵀ·Q` with `Q` the projector onto `ker [A_C A_R A_V]ᵀ`.
    pub li_rows: Matrix<f64>,
    pub threshold: f64,
}

/// Branch ids in some CV-loop and in some LI-cutset.
pub fn branch_membership(
    inc: &IncidenceSet,
    tol: Option<f64>,
) -> Result<(Vec<String>, Vec<String>, MembershipWitness), LinalgError> {
    let threshold = tol.unwrap_or(0.0).max(MEMBERSHIP_FLOOR);
    let cv = inc.concat(&[C, V]);
    let cv_ids = inc.concat_ids(&[C, V]);
    let kernel = Svd::new(&cv)?.kernel(tol);
    let cv_members = (0..kernel.rows())
        .filter(|&r| kernel.row(r).iter().any(|x| x.abs() > threshold))
        .map(|r| cv_ids[r].clone())
        .collect();

    let q = projector_onto_kernel(&inc.concat(&[C, R, V]).transpose(), tol, "[A_C A_R A_V]^T")?;
    let li = inc.concat(&[L, I]);
    let li_ids = inc.concat_ids(&[L, I]);
    let li_rows = li.transpose().matmul(&q.matrix);
    let li_members = (0..li_rows.rows())
        .filter(|&r| li_rows.row(r).iter().any(|x| x.abs() > threshold))
        .map(|r| li_ids[r].clone())
        .collect();
    Ok((cv_members, li_members, MembershipWitness { cv_kernel: kernel, li_rows, threshold }))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopologyReport {
    pub has_v_loop: bool,
    pub has_i_cutset: bool,
    pub has_cv_loop: bool,
    pub has_li_cutset: bool,
    pub cv_loop_branches: Vec<String>,
    pub li_cutset_branches: Vec<String>,
}

pub fn analyze_topology(inc: &IncidenceSet, tol: Option<f64>) -> Result<(TopologyReport, MembershipWitness), LinalgError> {
    let (no_v, no_i) = check_source_sanity(inc, tol)?;
    let (cv_loop_branches, li_cutset_branches, w) = branch_membership(inc, tol)?;
    let report = TopologyReport {
        has_v_loop: !no_v,
        has_i_cutset: !no_i,
        has_cv_loop: detect_cv_loops(inc, tol)?,
        has_li_cutset: detect_li_cutsets(inc, tol)?,
        cv_loop_branches,
        li_cutset_branches,
    };
    Ok((report, w))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn graph(n: usize, bs: &[(&str, usize, usize, BranchClass)]) -> CircuitGraph {
        let mut g = CircuitGraph::new(n);
        for &(id, a, b, c) in bs {
            g.add(Branch::simple(id, a, b, c));
        }
        g
    }

    #[test]
    fn incidence_examples() {
        let inc = build_incidence(&graph(2, &[("R1", 1, 0, R)])).unwrap();
        assert_eq!(inc.a_r, Matrix::from_rows(&[vec![1.0]]));

        let inc = build_incidence(&graph(3, &[("V1", 1, 0, V), ("R1", 1, 2, R), ("C1", 2, 0, C)])).unwrap();
        assert_eq!(inc.a_v, Matrix::from_rows(&[vec![1.0], vec![0.0]]));
        assert_eq!(inc.a_r, Matrix::from_rows(&[vec![1.0], vec![-1.0]]));
        assert_eq!(inc.a_c, Matrix::from_rows(&[vec![0.0], vec![1.0]]));

        let inc = build_incidence(&graph(3, &[("R1", 2, 0, R), ("R2", 1, 2, R)])).unwrap();
        assert_eq!(inc.a_r.column(0), vec![0.0, 1.0]);
    }

    #[test]
    fn invalid_graphs() {
        assert!(matches!(build_incidence(&graph(2, &[("R1", 1, 1, R)])), Err(TopologyError::InvalidBranch { .. })));
        assert_eq!(build_incidence(&graph(3, &[("R1", 1, 0, R)])), Err(TopologyError::NotConnected(2)));
    }

    #[test]
    fn source_sanity() {
        let inc = build_incidence(&graph(2, &[("V1", 1, 0, V), ("V2", 1, 0, V)])).unwrap();
        assert!(!check_source_sanity(&inc, None).unwrap().0);
        let inc = build_incidence(&graph(2, &[("I1", 1, 0, I), ("R1", 1, 0, R)])).unwrap();
        assert!(check_source_sanity(&inc, None).unwrap().1);
        let inc = build_incidence(&graph(3, &[("R1", 1, 0, R), ("I1", 1, 2, I), ("I2", 2, 0, I)])).unwrap();
        assert!(!check_source_sanity(&inc, None).unwrap().1);
    }

    #[test]
    fn loop_and_cutset_examples() {
        let inc = build_incidence(&graph(2, &[("C1", 1, 0, C), ("V1", 1, 0, V)])).unwrap();
        assert!(detect_cv_loops(&inc, None).unwrap());
        let (cv, li, _) = branch_membership(&inc, None).unwrap();
        assert_eq!(cv, vec!["C1", "V1"]);
        assert!(li.is_empty());

        let inc = build_incidence(&graph(4, &[("V1", 1, 0, V), ("R1", 1, 2, R), ("C1", 2, 3, C), ("L1", 3, 0, L)])).unwrap();
        assert!(!detect_cv_loops(&inc, None).unwrap());
        assert!(!detect_li_cutsets(&inc, None).unwrap());
        let (cv, li, _) = branch_membership(&inc, None).unwrap();
        assert!(cv.is_empty() && li.is_empty());

        let inc = build_incidence(&graph(3, &[("R1", 1, 0, R), ("I1", 1, 2, I), ("L1", 2, 0, L)])).unwrap();
        assert!(detect_li_cutsets(&inc, None).unwrap());
        let (_, li, _) = branch_membership(&inc, None).unwrap();
        assert_eq!(li, vec!["L1", "I1"]);
    }

    #[test]
    fn only_looped_capacitor_is_member() {
        // C1 ∥ V1 at node 1; C2 in series with R1 from node 1 to ground.
        let inc = build_incidence(&graph(
            3,
            &[("V1", 1, 0, V), ("C1", 1, 0, C), ("R1", 1, 2, R), ("C2", 2, 0, C)],
        ))
        .unwrap();
        let (cv, _, _) = branch_membership(&inc, None).unwrap();
        assert_eq!(cv, vec!["C1", "V1"]);
    }
}

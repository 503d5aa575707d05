//! Constructive reduction of a linear MNA system to an explicit ODE
//! `z' = J z + J_σ σ(t)` through a chain of projectors:
//!
//! 1. C/V rows fix `P_CV e'` (`P_CV` along `ker [A_C A_V]ᵀ`).
//! 2. KCL projected with `Q_CV` and the strong resistors fix the remaining
//!    part outside the LI-cutset directions (`P_R-CV` along `ker A_Rᵀ Q_CV`).
//! 3. With LI-cutsets, the twice-differentiated cutset equations and the
//!    strong inductors fix the cutset directions.
//! 4. KCL gives `(i_C', i_V')` modulo `ker [A_C A_V]`; with CV-loops the
//!    twice-differentiated loop equations and the strong capacitors fix
//!    the loop part.
//! 5. Internal states follow from the element reductions.

use crate::elements::ElementReduction;
use crate::linalg::{projector_along_kernel, projector_onto_kernel, pseudo_inverse};
use crate::matrix::Matrix;
use crate::mna::bound::{classify_elements, index_bound, BoundOptions, TheoremBound};
use crate::mna::signals::SignalSet;
use crate::mna::{BoundElement, MnaError, MnaSystem};
use crate::topology::BranchClass;

/// Affine expression `Z·z + S·σ`.
#[derive(Debug, Clone)]
struct Expr {
    z: Matrix<f64>,
    s: Matrix<f64>,
}

impl Expr {
    fn zeros(rows: usize, n: usize, s: usize) -> Self {
        Self { z: Matrix::zeros(rows, n), s: Matrix::zeros(rows, s) }
    }
    fn left(&self, m: &Matrix<f64>) -> Self {
        Self { z: m.matmul(&self.z), s: m.matmul(&self.s) }
    }
    fn add(&self, o: &Self) -> Self {
        Self { z: &self.z + &o.z, s: &self.s + &o.s }
    }
    fn neg(&self) -> Self {
        Self { z: -&self.z, s: -&self.s }
    }
    fn vstack(&self, o: &Self) -> Self {
        Self { z: self.z.vstack(&o.z), s: self.s.vstack(&o.s) }
    }
    fn rows_range(&self, r0: usize, r1: usize) -> Self {
        Self { z: self.z.block(r0, r1, 0, self.z.cols()), s: self.s.block(r0, r1, 0, self.s.cols()) }
    }
    /// Accumulate `self` into rows `rows` of `dst`.
    fn scatter_into(&self, dst: &mut Expr, rows: &[usize]) {
        for (k, &r) in rows.iter().enumerate() {
            for j in 0..self.z.cols() {
                dst.z[(r, j)] += self.z[(k, j)];
            }
            for j in 0..self.s.cols() {
                dst.s[(r, j)] += self.s[(k, j)];
            }
        }
    }
}

/// Projectors built during the reduction. Optional ones exist only on the
/// second-stage path.
#[derive(Debug, Clone)]
pub struct ProjectorChain {
    pub q_cv: Matrix<f64>,
    pub p_cv: Matrix<f64>,
    pub p_r_cv: Matrix<f64>,
    pub q_li_cut: Option<Matrix<f64>>,
    pub p_li_cut: Option<Matrix<f64>>,
    pub q_cv_loop: Option<Matrix<f64>>,
    /// `‖Q_CV − Q_CV·P_R-CV‖_max`; zero up to rounding without LI-cutsets.
    pub identity_defect: f64,
}

#[derive(Debug, Clone)]
pub struct ExplicitOde {
    pub names: Vec<String>,
    pub j: Matrix<f64>,
    pub j_sigma: Matrix<f64>,
    pub chain: ProjectorChain,
    pub trace: Vec<String>,
    pub second_stage: bool,
}

impl ExplicitOde {
    pub fn rhs(&self, z: &[f64], sigma: &[f64]) -> Vec<f64> {
        let a = self.j.mul_vec(z);
        let b = self.j_sigma.mul_vec(sigma);
        a.iter().zip(b).map(|(x, y)| x + y).collect()
    }
}

fn select(rows: &[usize], n: usize) -> Matrix<f64> {
    let mut m = Matrix::zeros(rows.len(), n);
    for (k, &r) in rows.iter().enumerate() {
        m[(k, r)] = 1.0;
    }
    m
}

/// Element data mapped to global unknowns.
struct Placed<'a> {
    be: &'a BoundElement,
    red: ElementReduction<f64>,
    /// Port rows in the class port space (= incidence columns).
    cols: Vec<usize>,
    /// Known part of `w'` (without the `W_du·u'` term).
    known: Expr,
}

impl Placed<'_> {
    fn nx(&self) -> usize {
        self.be.descriptor.n_x
    }
    fn n(&self) -> usize {
        self.be.descriptor.rows()
    }
    fn x_known(&self) -> Expr {
        self.known.rows_range(0, self.nx())
    }
    fn y_known(&self) -> Expr {
        self.known.rows_range(self.nx(), self.n())
    }
    fn x_du(&self) -> Matrix<f64> {
        let np = self.be.descriptor.n_p;
        self.red.w_du.block(0, self.nx(), 0, np)
    }
    /// Second derivative of the port output `y` minus `witness·u'`.
    fn y2_rest(&self, shift: &Matrix<f64>) -> Expr {
        let (nx, n) = (self.nx(), self.n());
        let gx = self.red.w_w.block(nx, n, 0, nx);
        let gy = self.red.w_w.block(nx, n, nx, n);
        // y' = known_y exactly (no u' term for L/C templates), so
        // y'' = gx·x' + gy·y' + W_u,y·u' + (σ part)·shift, and the u' terms
        // are collected in the witness.
        let ys = self.known.s.block(nx, n, 0, self.known.s.cols());
        let mut e = self.x_known().left(&gx).add(&self.y_known().left(&gy));
        e.s = &e.s + &ys.matmul(shift);
        e
    }
}

fn block_diag_in(space: usize, placed: &[&Placed], m: impl Fn(&Placed) -> Matrix<f64>) -> Matrix<f64> {
    let mut out = Matrix::zeros(space, space);
    for p in placed {
        let b = m(p);
        for (a, &ra) in p.cols.iter().enumerate() {
            for (c, &rc) in p.cols.iter().enumerate() {
                out[(ra, rc)] = b[(a, c)];
            }
        }
    }
    out
}

fn gather_in(space: usize, n: usize, s: usize, placed: &[&Placed], e: impl Fn(&Placed) -> Expr) -> Expr {
    let mut out = Expr::zeros(space, n, s);
    for p in placed {
        e(p).scatter_into(&mut out, &p.cols);
    }
    out
}

/// Builds the explicit ODE for a linear system whose bound is covered.
pub fn reduce_to_ode(sys: &MnaSystem, opts: &BoundOptions) -> Result<ExplicitOde, MnaError> {
    use BranchClass::{C, L, R};
    if !sys.linear {
        return Err(MnaError::ReductionUnavailable("circuit has asserted (nonlinear) elements".into()));
    }
    let report = index_bound(sys, &BoundOptions { oracle: false, ..*opts })?;
    if report.theorem_bound == TheoremBound::NotCovered {
        return Err(MnaError::ReductionUnavailable(report.reason.unwrap_or_default()));
    }
    let inc = &sys.inc;
    let lay = &sys.layout;
    let n = sys.size();
    let s = sys.signals.len();
    let shift = sys.signals.shift();
    let (nc, nr, nv, nl) = (inc.a_c.cols(), inc.a_r.cols(), inc.a_v.cols(), inc.a_l.cols());
    let esel = select(&lay.e.clone().collect::<Vec<_>>(), n);
    let mut trace = Vec::new();

    // Element reductions mapped to global unknowns.
    let classified = classify_elements(sys, &opts.classify);
    let mut placed = Vec::new();
    for (be, (_, red)) in sys.elements.iter().zip(classified) {
        let red = red.ok_or_else(|| MnaError::ReductionUnavailable(format!("element '{}' has no reduction", be.id)))?;
        let d = &be.descriptor;
        let xsel = select(&be.state_indices().collect::<Vec<_>>(), n);
        let isel = select(&be.current_indices(lay), n);
        let vsel = be.port_incidence_t(inc).matmul(&esel);
        let (ysel, usel) = if be.class == C { (vsel, isel) } else { (isel, vsel) };
        let wsel = xsel.vstack(&ysel);
        let mut fel = Matrix::zeros(d.rows(), s);
        for (r, ch) in be.forcing_channels.iter().enumerate() {
            if let Some(ch) = ch {
                fel[(r, SignalSet::col(*ch, 0))] = 1.0;
            }
        }
        let known = Expr {
            z: &red.w_w.matmul(&wsel) + &red.w_u.matmul(&usel),
            s: &red.w_f0.matmul(&fel) + &red.w_f1.matmul(&fel.matmul(&shift)),
        };
        placed.push(Placed { be, red, cols: be.port_cols.clone(), known });
    }
    let of = |c: BranchClass| placed.iter().filter(|p| p.be.class == c).collect::<Vec<_>>();
    let (pc, pr, pl) = (of(C), of(R), of(L));

    let sig = |chs: &[usize], order: usize| {
        let mut e = Expr::zeros(chs.len(), n, s);
        for (k, &ch) in chs.iter().enumerate() {
            e.s[(k, SignalSet::col(ch, order))] = 1.0;
        }
        e
    };
    let v_src1 = sig(&sys.v_channels, 1);
    let v_src2 = sig(&sys.v_channels, 2);
    let i_src1 = sig(&sys.i_channels, 1);
    let i_src2 = sig(&sys.i_channels, 2);

    // Direct derivatives from the element reductions.
    let i_l1 = gather_in(nl, n, s, &pl, |p| p.y_known());
    let g_c = gather_in(nc, n, s, &pc, |p| p.y_known());
    let rest_r = gather_in(nr, n, s, &pr, |p| p.y_known());
    let gr_dv = block_diag_in(nr, &pr, |p| p.red.witness.clone());

    // Stage 1: P_CV e'.
    let m_cv = Matrix::hcat(&[&inc.a_c, &inc.a_v]).transpose();
    let q_cv = projector_onto_kernel(&m_cv, None, "[A_C A_V]^T")?;
    let p_cv = q_cv.complement().matrix;
    let q_cv = q_cv.matrix;
    let e1 = g_c.vstack(&v_src1).left(&pseudo_inverse(&m_cv, None)?);
    trace.push("stage 1: P_CV e' from capacitor and voltage-source rows".to_string());

    // Stage 2: Q_CV e' outside the LI-cutset directions.
    let r = rest_r.left(&inc.a_r).add(&i_l1.left(&inc.a_l)).add(&i_src1.left(&inc.a_i));
    let r2 = r.add(&e1.left(&inc.a_r.matmul(&gr_dv).matmul(&inc.a_r.transpose())));
    let m2 = inc.a_r.transpose().matmul(&q_cv);
    let k2 = m2.transpose().matmul(&gr_dv).matmul(&m2);
    let e2 = r2.left(&q_cv).left(&pseudo_inverse(&k2, None)?).neg();
    let p_r_cv = projector_along_kernel(&m2, None, "A_R^T Q_CV")?.matrix;
    let identity_defect = (&q_cv - &q_cv.matmul(&p_r_cv)).max_abs();
    trace.push("stage 2: Q_CV-projected KCL with resistor witnesses".to_string());
    let e_known = e1.add(&e2);

    let mut second_stage = false;
    let (mut q_li_cut, mut p_li_cut) = (None, None);
    let e_dot = if report.topology.has_li_cutset {
        second_stage = true;
        let q_li = projector_onto_kernel(&Matrix::hcat(&[&inc.a_c, &inc.a_r, &inc.a_v]).transpose(), None, "[A_C A_R A_V]^T")?;
        let s_l = block_diag_in(nl, &pl, |p| p.red.witness.clone());
        let rest_l2 = gather_in(nl, n, s, &pl, |p| p.y2_rest(&shift));
        let m3 = inc.a_l.transpose().matmul(&q_li.matrix);
        let k3 = m3.transpose().matmul(&s_l).matmul(&m3);
        let rhs = e_known
            .left(&inc.a_l.matmul(&s_l).matmul(&inc.a_l.transpose()))
            .add(&rest_l2.left(&inc.a_l))
            .add(&i_src2.left(&inc.a_i))
            .left(&q_li.matrix);
        let e3 = rhs.left(&pseudo_inverse(&k3, None)?).neg();
        trace.push("stage 3: LI-cutset directions from twice-differentiated cutset KCL and inductor witnesses".to_string());
        p_li_cut = Some(q_li.complement().matrix);
        q_li_cut = Some(q_li.matrix);
        e_known.add(&e3)
    } else {
        e_known
    };

    let i_r1 = e_dot.left(&gr_dv.matmul(&inc.a_r.transpose())).add(&rest_r);
    let r5 = i_r1.left(&inc.a_r).add(&i_l1.left(&inc.a_l)).add(&i_src1.left(&inc.a_i));
    let b = Matrix::hcat(&[&inc.a_c, &inc.a_v]);
    let p = r5.left(&pseudo_inverse(&b, None)?).neg();
    trace.push("stage 4: capacitor and source currents from differentiated KCL".to_string());
    let mut q_cv_loop = None;
    let i_cv1 = if report.topology.has_cv_loop {
        second_stage = true;
        let q_loop = projector_onto_kernel(&b, None, "[A_C A_V]")?.matrix;
        let s_c = block_diag_in(nc, &pc, |p| p.red.witness.clone());
        let rest_c2 = gather_in(nc, n, s, &pc, |p| p.y2_rest(&shift));
        let m4 = Matrix::<f64>::identity(nc).hstack(&Matrix::zeros(nc, nv)).matmul(&q_loop);
        let k4 = m4.transpose().matmul(&s_c).matmul(&m4);
        let pc_part = p.rows_range(0, nc);
        let inner = pc_part.left(&s_c).add(&rest_c2).vstack(&v_src2);
        let q = inner.left(&q_loop.transpose()).left(&pseudo_inverse(&k4, None)?).neg();
        trace.push("stage 5: CV-loop currents from twice-differentiated loop voltages and capacitor witnesses".to_string());
        q_cv_loop = Some(q_loop);
        p.add(&q)
    } else {
        p
    };

    // Assemble the full derivative.
    let mut zdot = Expr::zeros(n, n, s);
    e_dot.scatter_into(&mut zdot, &lay.e.clone().collect::<Vec<_>>());
    i_cv1.rows_range(0, nc).scatter_into(&mut zdot, &lay.i_c.clone().collect::<Vec<_>>());
    i_cv1.rows_range(nc, nc + nv).scatter_into(&mut zdot, &lay.i_v.clone().collect::<Vec<_>>());
    i_r1.scatter_into(&mut zdot, &lay.i_r.clone().collect::<Vec<_>>());
    i_l1.scatter_into(&mut zdot, &lay.i_l.clone().collect::<Vec<_>>());
    for p in &placed {
        if p.nx() == 0 {
            continue;
        }
        let u1 = if p.be.class == C {
            i_cv1.rows_range(0, nc).left(&select(&p.cols, nc))
        } else {
            e_dot.left(&p.be.port_incidence_t(inc))
        };
        let x1 = p.x_known().add(&u1.left(&p.x_du()));
        x1.scatter_into(&mut zdot, &p.be.state_indices().collect::<Vec<_>>());
    }
    Ok(ExplicitOde {
        names: lay.names.clone(),
        j: zdot.z,
        j_sigma: zdot.s,
        chain: ProjectorChain { q_cv, p_cv, p_r_cv, q_li_cut, p_li_cut, q_cv_loop, identity_defect },
        trace,
        second_stage,
    })
}

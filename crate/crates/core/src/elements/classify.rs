//! Classification of linear descriptor elements.
//!
//! For a template with input `u` (v for L- and R-like, i for C-like) the
//! unknowns are `w = (x, y)` with `y` the other port quantity, so the
//! element reads
//!
//! ```text
//! E_w w' + A_w w + K_u u' + L_u u = f
//! ```
//!
//! `E_w` is row-reduced; rows without a pivot are algebraic. They may not
//! contain `u'` (differentiating would produce `u''`) and are
//! differentiated once. If the resulting leading matrix is nonsingular we
//! get `w' = W_w w + W_du u' + W_u u + W_f0 f + W_f1 f'` and the template
//! decides which blocks of `W_du` must vanish.

use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use crate::elements::{DescriptorElement, ElementClass};
use crate::linalg::{is_positive_definite, row_reduce, Lu};
use crate::matrix::Matrix;
use crate::scalar::{rational_from_integral, Field, Scalar};

pub const DEFAULT_CLASSIFY_TOL: f64 = 1e-10;

const TEMPLATE_ORDER: [ElementClass; 3] =
    [ElementClass::InductanceLike, ElementClass::CapacitanceLike, ElementClass::ResistanceLike];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassifyOptions {
    pub hint: Option<ElementClass>,
    pub all_classes: bool,
    /// Relative pivot / zero threshold for floating-point elimination.
    pub tol: f64,
    /// Extra margin for the definiteness test.
    pub margin: Option<f64>,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        Self { hint: None, all_classes: false, tol: DEFAULT_CLASSIFY_TOL, margin: None }
    }
}

/// Explicit derivative form of a classified element, in the ordering
/// `w = (x, y)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ElementReduction<T> {
    pub class: ElementClass,
    pub differentiations: usize,
    pub w_w: Matrix<T>,
    pub w_du: Matrix<T>,
    pub w_u: Matrix<T>,
    pub w_f0: Matrix<T>,
    pub w_f1: Matrix<T>,
    pub witness: Matrix<T>,
}

impl<T: Scalar> ElementReduction<T> {
    pub fn to_f64(&self) -> ElementReduction<f64> {
        ElementReduction {
            class: self.class,
            differentiations: self.differentiations,
            w_w: self.w_w.to_f64(),
            w_du: self.w_du.to_f64(),
            w_u: self.w_u.to_f64(),
            w_f0: self.w_f0.to_f64(),
            w_f1: self.w_f1.to_f64(),
            witness: self.witness.to_f64(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationReport {
    pub element: String,
    pub element_class: ElementClass,
    pub strong: bool,
    pub differentiations_used: Option<usize>,
    pub witness: Option<Matrix<f64>>,
    pub margin: Option<f64>,
    pub matching_classes: Vec<ElementClass>,
    pub exact_arithmetic: bool,
    /// Strength taken from a user assertion instead of a certificate.
    pub asserted: bool,
    pub tolerance_warning: Option<String>,
    pub notes: Vec<String>,
}

#[derive(Debug)]
struct Attempt<T> {
    reduction: Option<ElementReduction<T>>,
    near_tolerance: bool,
}

struct Zero {
    exact: bool,
    tol: f64,
}

impl Zero {
    fn is_zero<T: Scalar>(&self, x: &T) -> bool {
        if self.exact {
            x.is_zero()
        } else {
            x.magnitude() <= self.tol
        }
    }

    fn all_zero<T: Scalar>(&self, m: &Matrix<T>) -> bool {
        m.as_slice().iter().all(|x| self.is_zero(x))
    }
}

fn reduce<T: Field>(el: &DescriptorElement<T>, class: ElementClass, exact: bool, tol: f64) -> Attempt<T> {
    let (nx, np) = (el.n_x, el.n_p);
    let n = nx + np;
    let (k_y, l_y, k_u, l_u) = match class {
        ElementClass::CapacitanceLike => (&el.k_v, &el.l_v, &el.k_i, &el.l_i),
        _ => (&el.k_i, &el.l_i, &el.k_v, &el.l_v),
    };
    let big = Matrix::hcat(&[&el.k_x, k_y, &el.l_x, l_y, k_u, l_u]);
    let scale = if exact { 1.0 } else { big.max_abs().max(f64::MIN_POSITIVE) };
    let pivot_tol = if exact { 0.0 } else { tol * scale };
    let ech = row_reduce(&big, n, pivot_tol);
    let near = !exact
        && ((ech.rank() > 0 && ech.smallest_pivot < 1e3 * pivot_tol)
            || (ech.largest_rejected > 0.0 && ech.largest_rejected > 1e-3 * pivot_tol));
    let fail = Attempt { reduction: None, near_tolerance: near };
    let r = ech.rank();
    let red = &ech.reduced;
    let (c_w, c_du, c_u) = (n, 2 * n, 2 * n + np);
    let zero = Zero { exact, tol: pivot_tol };

    if !zero.all_zero(&red.block(r, n, c_du, c_u)) {
        return fail;
    }
    let e2 = red.block(0, r, 0, n).vstack(&red.block(r, n, c_w, 2 * n));
    let Ok(lu) = Lu::new(&e2, pivot_tol) else {
        return fail;
    };
    let zr = |cols: usize| Matrix::<T>::zeros(n - r, cols);
    let rhs_w = red.block(0, r, c_w, 2 * n).vstack(&zr(n));
    let rhs_du = red.block(0, r, c_du, c_u).vstack(&red.block(r, n, c_u, c_u + np));
    let rhs_u = red.block(0, r, c_u, c_u + np).vstack(&zr(np));
    let t = &ech.transform;
    let rhs_f0 = t.block(0, r, 0, n).vstack(&zr(n));
    let rhs_f1 = Matrix::<T>::zeros(r, n).vstack(&t.block(r, n, 0, n));

    let w_w = -&lu.solve(&rhs_w);
    let w_du = -&lu.solve(&rhs_du);
    let w_u = -&lu.solve(&rhs_u);
    let w_f0 = lu.solve(&rhs_f0);
    let w_f1 = lu.solve(&rhs_f1);

    let wscale = 1.0 + w_w.max_abs().max(w_du.max_abs()).max(w_u.max_abs());
    let zero = Zero { exact, tol: tol * wscale };
    let (must_vanish, witness) = match class {
        ElementClass::ResistanceLike => (w_du.block(0, nx, 0, np), w_du.block(nx, n, 0, np)),
        _ => {
            let g_x = w_w.block(nx, n, 0, nx);
            let x_du = w_du.block(0, nx, 0, np);
            let g_u = w_u.block(nx, n, 0, np);
            (w_du.block(nx, n, 0, np), &g_x.matmul(&x_du) + &g_u)
        }
    };
    if !zero.all_zero(&must_vanish) {
        return fail;
    }
    Attempt {
        reduction: Some(ElementReduction {
            class,
            differentiations: usize::from(r < n),
            w_w,
            w_du,
            w_u,
            w_f0,
            w_f1,
            witness,
        }),
        near_tolerance: near,
    }
}

/// Classification over a chosen field. Returns every matching reduction
/// in template order (just the first unless `all_classes`), and whether any
/// rank decision was close to the threshold.
pub fn classify_in<T: Field>(
    el: &DescriptorElement<T>,
    opts: &ClassifyOptions,
    exact: bool,
) -> (Vec<ElementReduction<T>>, bool) {
    let templates: Vec<ElementClass> = match opts.hint {
        Some(h) if h != ElementClass::Unclassified => vec![h],
        _ => TEMPLATE_ORDER.to_vec(),
    };
    let mut found = Vec::new();
    let mut near = false;
    for class in templates {
        let a = reduce(el, class, exact, opts.tol);
        near |= a.near_tolerance;
        if let Some(red) = a.reduction {
            found.push(red);
            if !opts.all_classes {
                break;
            }
        }
    }
    (found, near)
}

fn to_exact(el: &DescriptorElement<f64>) -> Option<DescriptorElement<BigRational>> {
    if !el.stacked().all_integral() {
        return None;
    }
    Some(el.map(|x| rational_from_integral(*x).unwrap_or_default()))
}

/// Classifies a real element, in exact rational arithmetic when every
/// coefficient is an integer. The first matching reduction is returned
/// alongside the report.
pub fn classify(
    el: &DescriptorElement<f64>,
    opts: &ClassifyOptions,
) -> (ClassificationReport, Option<ElementReduction<f64>>) {
    let (found, near, exact) = match to_exact(el) {
        Some(q) => {
            let (f, n) = classify_in(&q, opts, true);
            (f.iter().map(ElementReduction::to_f64).collect::<Vec<_>>(), n, true)
        }
        None => {
            let (f, n) = classify_in(el, opts, false);
            (f, n, false)
        }
    };
    let tolerance_warning =
        near.then(|| format!("a rank decision was within three decades of the threshold {:e}", opts.tol));
    let Some(first) = found.first().cloned() else {
        let report = ClassificationReport {
            element: el.label.clone(),
            element_class: ElementClass::Unclassified,
            strong: false,
            differentiations_used: None,
            witness: None,
            margin: None,
            matching_classes: vec![],
            exact_arithmetic: exact,
            asserted: false,
            tolerance_warning,
            notes: vec!["no template reachable with at most one differentiation".into()],
        };
        return (report, None);
    };
    let (strong, margin) = match is_positive_definite(&first.witness, opts.margin) {
        Ok(c) => (c.positive_definite, Some(c.lambda_min)),
        Err(_) => (false, None),
    };
    let report = ClassificationReport {
        element: el.label.clone(),
        element_class: first.class,
        strong,
        differentiations_used: Some(first.differentiations),
        witness: Some(first.witness.clone()),
        margin: margin.filter(|m| m.is_finite()),
        matching_classes: found.iter().map(|r| r.class).collect(),
        exact_arithmetic: exact,
        asserted: false,
        tolerance_warning,
        notes: vec![],
    };
    (report, Some(first))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::elements::*;

    fn s(x: f64) -> Matrix<f64> {
        Matrix::from_rows(&[vec![x]])
    }

    fn run(el: &DescriptorElement<f64>) -> ClassificationReport {
        classify(el, &ClassifyOptions::default()).0
    }

    #[test]
    fn classical_elements() {
        let r = run(&make_resistor(&s(1.0)).unwrap());
        assert_eq!((r.element_class, r.strong, r.differentiations_used), (ElementClass::ResistanceLike, true, Some(1)));

        let l = run(&make_inductor(&s(2.0)).unwrap());
        assert_eq!((l.element_class, l.strong, l.differentiations_used), (ElementClass::InductanceLike, true, Some(0)));
        assert_eq!(l.witness.unwrap()[(0, 0)], 0.5);

        let c = run(&make_capacitor(&Matrix::diag(&[1.0, 3.0])).unwrap());
        assert_eq!((c.element_class, c.strong), (ElementClass::CapacitanceLike, true));
        let w = c.witness.unwrap();
        assert!((w[(1, 1)] - 1.0 / 3.0).abs() < 1e-15 && w[(0, 0)] == 1.0);
        assert!(c.exact_arithmetic);
    }

    #[test]
    fn flux_and_charge_forms_need_one_differentiation() {
        let f = run(&make_flux_inductor(&s(2.0)).unwrap());
        assert_eq!((f.element_class, f.strong, f.differentiations_used), (ElementClass::InductanceLike, true, Some(1)));
        let q = run(&make_charge_capacitor(&s(0.5)).unwrap());
        assert_eq!((q.element_class, q.strong, q.differentiations_used), (ElementClass::CapacitanceLike, true, Some(1)));
        assert!(!q.exact_arithmetic);
    }

    #[test]
    fn indefinite_parameter_is_not_strong() {
        let r = run(&make_resistor(&Matrix::from_rows(&[vec![1.0, 0.0], vec![0.0, -1.0]])).unwrap());
        assert_eq!(r.element_class, ElementClass::ResistanceLike);
        assert!(!r.strong);
    }

    #[test]
    fn second_derivative_chain_is_unclassified() {
        // x1 = 0, x1' − x2 = 0, v − i − x2' = 0
        let el = DescriptorElement::new(
            "chain",
            Matrix::from_rows(&[vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, -1.0]]),
            Matrix::zeros(3, 1),
            Matrix::zeros(3, 1),
            Matrix::from_rows(&[vec![1.0, 0.0], vec![0.0, -1.0], vec![0.0, 0.0]]),
            Matrix::from_rows(&[vec![0.0], vec![0.0], vec![-1.0]]),
            Matrix::from_rows(&[vec![0.0], vec![0.0], vec![1.0]]),
        )
        .unwrap();
        let r = run(&el);
        assert_eq!(r.element_class, ElementClass::Unclassified);
        assert_eq!(r.differentiations_used, None);
    }

    #[test]
    fn all_classes_reports_degenerate_matches() {
        let opts = ClassifyOptions { all_classes: true, ..Default::default() };
        let (r, _) = classify(&make_inductor(&s(1.0)).unwrap(), &opts);
        assert_eq!(r.element_class, ElementClass::InductanceLike);
        assert!(r.matching_classes.contains(&ElementClass::ResistanceLike));
        let hinted = ClassifyOptions { hint: Some(ElementClass::CapacitanceLike), ..Default::default() };
        assert_eq!(classify(&make_inductor(&s(1.0)).unwrap(), &hinted).0.element_class, ElementClass::Unclassified);
    }
}

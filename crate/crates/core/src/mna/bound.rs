//! Structural index bound: a decision tree over topology findings and
//! element classes, cross-checked against the pencil oracle for linear
//! circuits.

use serde::{Deserialize, Serialize};

use crate::elements::{classify, ClassificationReport, ClassifyOptions, ElementClass, ElementReduction};
use crate::linalg::{is_positive_definite, pencil_index, LinalgError};
use crate::mna::{BoundElement, MnaError, MnaSystem, Strength};
use crate::topology::{analyze_topology, BranchClass, TopologyReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TheoremBound {
    #[serde(rename = "<=1")]
    AtMost1,
    #[serde(rename = "<=2")]
    AtMost2,
    #[serde(rename = "not-covered")]
    NotCovered,
}

impl TheoremBound {
    pub fn numeric(self) -> Option<usize> {
        match self {
            TheoremBound::AtMost1 => Some(1),
            TheoremBound::AtMost2 => Some(2),
            TheoremBound::NotCovered => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            TheoremBound::AtMost1 => "<=1",
            TheoremBound::AtMost2 => "<=2",
            TheoremBound::NotCovered => "not-covered",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisCheck {
    pub hypothesis: String,
    pub holds: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundOptions {
    /// Rank tolerance for topology decisions; `None` uses the SVD default.
    pub tol: Option<f64>,
    pub classify: ClassifyOptions,
    pub oracle: bool,
}

impl Default for BoundOptions {
    fn default() -> Self {
        Self { tol: None, classify: ClassifyOptions::default(), oracle: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexReport {
    pub status: String,
    pub topology: TopologyReport,
    pub elements: Vec<ClassificationReport>,
    pub theorem_bound: TheoremBound,
    pub reason: Option<String>,
    pub hypothesis_trace: Vec<HypothesisCheck>,
    pub oracle_index: Option<usize>,
    pub oracle_note: Option<String>,
    pub agreement: Option<bool>,
}

pub(crate) fn hint_for(class: BranchClass) -> ElementClass {
    match class {
        BranchClass::L => ElementClass::InductanceLike,
        BranchClass::C => ElementClass::CapacitanceLike,
        _ => ElementClass::ResistanceLike,
    }
}

fn asserted_report(be: &BoundElement, samples: &[crate::matrix::Matrix<f64>]) -> ClassificationReport {
    let mut strong = true;
    let mut margin: Option<f64> = None;
    let mut notes = vec![];
    for (k, s) in samples.iter().enumerate() {
        match is_positive_definite(s, None) {
            Ok(c) => {
                strong &= c.positive_definite;
                margin = Some(margin.map_or(c.lambda_min, |m: f64| m.min(c.lambda_min)));
                if !c.positive_definite {
                    notes.push(format!("witness sample {} is not positive definite", k + 1));
                }
            }
            Err(e) => {
                strong = false;
                notes.push(format!("witness sample {}: {e}", k + 1));
            }
        }
    }
    if samples.is_empty() {
        notes.push("strength asserted without witness samples".into());
    }
    ClassificationReport {
        element: be.id.clone(),
        element_class: hint_for(be.class),
        strong,
        differentiations_used: None,
        witness: samples.first().cloned(),
        margin,
        matching_classes: vec![hint_for(be.class)],
        exact_arithmetic: false,
        asserted: true,
        tolerance_warning: None,
        notes,
    }
}

/// Classifies every element under the class of the branches it sits on.
pub(crate) fn classify_elements(
    sys: &MnaSystem,
    opts: &ClassifyOptions,
) -> Vec<(ClassificationReport, Option<ElementReduction<f64>>)> {
    sys.elements
        .iter()
        .map(|be| match &be.strength {
            Strength::Asserted { samples } => (asserted_report(be, samples), None),
            Strength::Verify => {
                let o = ClassifyOptions { hint: Some(hint_for(be.class)), ..*opts };
                classify(&be.descriptor, &o)
            }
        })
        .collect()
}

struct Decision {
    bound: TheoremBound,
    reason: Option<String>,
    trace: Vec<HypothesisCheck>,
}

fn check(trace: &mut Vec<HypothesisCheck>, hypothesis: &str, holds: bool, detail: String) -> bool {
    trace.push(HypothesisCheck { hypothesis: hypothesis.into(), holds, detail });
    holds
}

fn ids_where(sys: &MnaSystem, reports: &[ClassificationReport], pred: impl Fn(&BoundElement, &ClassificationReport) -> bool) -> Vec<String> {
    sys.elements.iter().zip(reports).filter(|(b, r)| pred(b, r)).map(|(b, _)| b.id.clone()).collect()
}

fn member(be: &BoundElement, sys: &MnaSystem, set: &[String]) -> bool {
    be.port_cols.iter().any(|&c| set.contains(&sys.inc.ids(be.class)[c]))
}

fn decide(sys: &MnaSystem, topo: &TopologyReport, reports: &[ClassificationReport]) -> Decision {
    let mut trace = Vec::new();
    let t = &mut trace;
    let nc = |reason: String, trace: Vec<HypothesisCheck>| Decision { bound: TheoremBound::NotCovered, reason: Some(reason), trace };

    let v_ok = check(t, "no loop of voltage sources only", !topo.has_v_loop, "A_V has full column rank".into());
    let i_ok = check(t, "no cutset of current sources only", !topo.has_i_cutset, "[A_C A_L A_R A_V] has full row rank".into());
    if !v_ok {
        return nc("source sanity violated: the voltage sources form a loop (A_V lacks full column rank)".into(), trace);
    }
    if !i_ok {
        return nc("source sanity violated: the current sources form a cutset ([A_C A_L A_R A_V] lacks full row rank)".into(), trace);
    }

    let unclassified = ids_where(sys, reports, |_, r| r.element_class == ElementClass::Unclassified);
    if !check(t, "every element classified", unclassified.is_empty(), format!("unclassified: {unclassified:?}")) {
        return nc(format!("element(s) {} could not be classified with at most one differentiation", unclassified.join(", ")), trace);
    }

    let weak_r = ids_where(sys, reports, |b, r| b.class == BranchClass::R && !r.strong);
    if !check(t, "resistance-like elements strong", weak_r.is_empty(), format!("not strong: {weak_r:?}")) {
        return nc(format!("resistance-like element(s) {} not strongly monotone", weak_r.join(", ")), trace);
    }

    let no_cv = check(t, "no CV-loop", !topo.has_cv_loop, format!("members: {:?}", topo.cv_loop_branches));
    let no_li = check(t, "no LI-cutset", !topo.has_li_cutset, format!("members: {:?}", topo.li_cutset_branches));
    if no_cv && no_li {
        return Decision { bound: TheoremBound::AtMost1, reason: None, trace };
    }

    let weak_l = ids_where(sys, reports, |b, r| {
        b.class == BranchClass::L && member(b, sys, &topo.li_cutset_branches) && !r.strong
    });
    let weak_c = ids_where(sys, reports, |b, r| {
        b.class == BranchClass::C && member(b, sys, &topo.cv_loop_branches) && !r.strong
    });
    let l_ok = check(t, "inductance-like elements in LI-cutsets strong", weak_l.is_empty(), format!("not strong: {weak_l:?}"));
    let c_ok = check(t, "capacitance-like elements in CV-loops strong", weak_c.is_empty(), format!("not strong: {weak_c:?}"));
    if l_ok && c_ok {
        Decision { bound: TheoremBound::AtMost2, reason: None, trace }
    } else {
        let weak: Vec<String> = weak_l.into_iter().chain(weak_c).collect();
        nc(format!("element(s) {} in CV-loops / LI-cutsets not strong", weak.join(", ")), trace)
    }
}

/// Decision procedure plus, for linear circuits, the pencil oracle.
pub fn index_bound(sys: &MnaSystem, opts: &BoundOptions) -> Result<IndexReport, MnaError> {
    let (topo, _) = analyze_topology(&sys.inc, opts.tol)?;
    let classified = classify_elements(sys, &opts.classify);
    let reports: Vec<ClassificationReport> = classified.into_iter().map(|(r, _)| r).collect();
    let d = decide(sys, &topo, &reports);

    let (oracle_index, oracle_note) = if !opts.oracle {
        (None, Some("oracle disabled".to_string()))
    } else if !sys.linear {
        (None, Some("oracle skipped: circuit has asserted (nonlinear) elements".to_string()))
    } else {
        match pencil_index(&sys.e, &sys.a, None) {
            Ok(r) => (Some(r.index), None),
            Err(LinalgError::SingularPencil) => (None, Some("pencil is singular".to_string())),
            Err(e) => return Err(e.into()),
        }
    };
    let agreement = match (oracle_index, d.bound.numeric()) {
        (Some(o), Some(b)) => Some(o <= b),
        _ => None,
    };
    Ok(IndexReport {
        status: if d.bound == TheoremBound::NotCovered { "not-covered" } else { "covered" }.into(),
        topology: topo,
        elements: reports,
        theorem_bound: d.bound,
        reason: d.reason,
        hypothesis_trace: d.trace,
        oracle_index,
        oracle_note,
        agreement,
    })
}

//! Modified nodal analysis with retained element currents.
//!
//! Unknowns, in order: node potentials `e` (ground removed), branch
//! currents `i_C, i_R, i_V, i_L`, internal states `x_C, x_R, x_L`. Rows:
//! KCL per non-ground node, one row per voltage source, then every
//! element's descriptor rows with `v = A_Eᵀ e`. Linear models become
//! `E z' + A z = F σ(t)`.

mod bound;
mod reduce;
pub mod signals;

use std::collections::{BTreeMap, HashMap};
use std::ops::Range;

use thiserror::Error;

use crate::elements::{
    make_capacitor, make_charge_capacitor, make_flux_inductor, make_inductor, make_resistor, DescriptorElement,
};
use crate::matrix::Matrix;
use crate::topology::{build_incidence, Branch, BranchClass, CircuitGraph, IncidenceSet, TopologyError};
use crate::waveform::Waveform;

pub use bound::{index_bound, BoundOptions, HypothesisCheck, IndexReport, TheoremBound};
pub use reduce::{reduce_to_ode, ExplicitOde, ProjectorChain};
pub use signals::SignalSet;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MnaError {
    #[error("incomplete model: {0}")]
    IncompleteModel(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error("reduction unavailable: {0}")]
    ReductionUnavailable(String),
    #[error(transparent)]
    Linalg(#[from] crate::linalg::LinalgError),
}

/// How an element's strength is established.
#[derive(Debug, Clone, PartialEq)]
pub enum Strength {
    /// Certified from the linear descriptor.
    Verify,
    /// Declared by the user; `samples` are witness matrices at chosen
    /// operating points, each spot-checked for positive definiteness. The
    /// element is then treated as nonlinear (no pencil oracle, no transient).
    Asserted { samples: Vec<Matrix<f64>> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ElementSpec {
    pub id: String,
    /// `C`, `L` or `R`; every port branch carries this class.
    pub class: BranchClass,
    pub descriptor: DescriptorElement<f64>,
    /// Port branch ids in port order.
    pub ports: Vec<String>,
    pub strength: Strength,
}

/// A circuit: graph, elements bound to its C/L/R branches, and waveforms
/// for its V/I branches.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CircuitModel {
    pub graph: CircuitGraph,
    pub elements: Vec<ElementSpec>,
    pub sources: BTreeMap<String, Waveform>,
}

fn scalar(x: f64) -> Matrix<f64> {
    Matrix::from_rows(&[vec![x]])
}

impl CircuitModel {
    pub fn new(node_count: usize) -> Self {
        Self { graph: CircuitGraph::new(node_count), ..Default::default() }
    }

    fn one_port(&mut self, id: &str, from: usize, to: usize, class: BranchClass, mut d: DescriptorElement<f64>) -> &mut Self {
        d.label = id.into();
        self.graph.add(Branch::simple(id, from, to, class));
        self.elements.push(ElementSpec {
            id: id.into(),
            class,
            descriptor: d,
            ports: vec![id.into()],
            strength: Strength::Verify,
        });
        self
    }

    pub fn resistor(&mut self, id: &str, from: usize, to: usize, r: f64) -> &mut Self {
        let d = make_resistor(&scalar(r)).expect("scalar");
        self.one_port(id, from, to, BranchClass::R, d)
    }

    pub fn inductor(&mut self, id: &str, from: usize, to: usize, l: f64) -> &mut Self {
        let d = make_inductor(&scalar(l)).expect("scalar");
        self.one_port(id, from, to, BranchClass::L, d)
    }

    pub fn capacitor(&mut self, id: &str, from: usize, to: usize, c: f64) -> &mut Self {
        let d = make_capacitor(&scalar(c)).expect("scalar");
        self.one_port(id, from, to, BranchClass::C, d)
    }

    pub fn flux_inductor(&mut self, id: &str, from: usize, to: usize, l: f64) -> &mut Self {
        let d = make_flux_inductor(&scalar(l)).expect("scalar");
        self.one_port(id, from, to, BranchClass::L, d)
    }

    pub fn charge_capacitor(&mut self, id: &str, from: usize, to: usize, c: f64) -> &mut Self {
        let d = make_charge_capacitor(&scalar(c)).expect("scalar");
        self.one_port(id, from, to, BranchClass::C, d)
    }

    pub fn vsource(&mut self, id: &str, from: usize, to: usize, w: Waveform) -> &mut Self {
        self.graph.add(Branch::simple(id, from, to, BranchClass::V));
        self.sources.insert(id.into(), w);
        self
    }

    pub fn isource(&mut self, id: &str, from: usize, to: usize, w: Waveform) -> &mut Self {
        self.graph.add(Branch::simple(id, from, to, BranchClass::I));
        self.sources.insert(id.into(), w);
        self
    }

    /// Generalized element; port `k` connects `ports[k].0 → ports[k].1` and
    /// gets branch id `id` (one port) or `id.k` (1-based, multiport).
    pub fn element(
        &mut self,
        id: &str,
        class: BranchClass,
        mut descriptor: DescriptorElement<f64>,
        ports: &[(usize, usize)],
        strength: Strength,
    ) -> &mut Self {
        descriptor.label = id.into();
        let ids: Vec<String> = if ports.len() == 1 {
            vec![id.into()]
        } else {
            (1..=ports.len()).map(|k| format!("{id}.{k}")).collect()
        };
        for (bid, &(a, b)) in ids.iter().zip(ports) {
            self.graph.add(Branch { id: bid.clone(), from: a, to: b, class, element: id.into(), port: 0 });
        }
        for (k, b) in self.graph.branches.iter_mut().filter(|b| b.element == id).enumerate() {
            b.port = k;
        }
        self.elements.push(ElementSpec { id: id.into(), class, descriptor, ports: ids, strength });
        self
    }

    /// True when every element is certified from its linear descriptor.
    pub fn is_linear(&self) -> bool {
        self.elements.iter().all(|e| e.strength == Strength::Verify)
    }
}

/// Index ranges of the unknown blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct Layout {
    pub e: Range<usize>,
    pub i_c: Range<usize>,
    pub i_r: Range<usize>,
    pub i_v: Range<usize>,
    pub i_l: Range<usize>,
    pub x_c: Range<usize>,
    pub x_r: Range<usize>,
    pub x_l: Range<usize>,
    pub names: Vec<String>,
}

impl Layout {
    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn position(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn currents(&self, c: BranchClass) -> Range<usize> {
        match c {
            BranchClass::C => self.i_c.clone(),
            BranchClass::R => self.i_r.clone(),
            BranchClass::V => self.i_v.clone(),
            BranchClass::L => self.i_l.clone(),
            BranchClass::I => 0..0,
        }
    }
}

/// An element placed in the system.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundElement {
    pub id: String,
    pub class: BranchClass,
    pub descriptor: DescriptorElement<f64>,
    pub strength: Strength,
    /// Column of each port in the incidence matrix of `class`.
    pub port_cols: Vec<usize>,
    /// Global index of the first internal state.
    pub state_offset: usize,
    /// Global index of the first descriptor row.
    pub row_offset: usize,
    /// Signal channel feeding each descriptor row, if forced.
    pub forcing_channels: Vec<Option<usize>>,
}

impl BoundElement {
    /// Global unknown indices of the port currents.
    pub fn current_indices(&self, layout: &Layout) -> Vec<usize> {
        let base = layout.currents(self.class).start;
        self.port_cols.iter().map(|c| base + c).collect()
    }

    pub fn state_indices(&self) -> Range<usize> {
        self.state_offset..self.state_offset + self.descriptor.n_x
    }

    /// `A_Eᵀ` restricted to this element's ports, as a map from `e`.
    pub fn port_incidence_t(&self, inc: &IncidenceSet) -> Matrix<f64> {
        inc.matrix(self.class).select_cols(&self.port_cols).transpose()
    }
}

#[derive(Debug, Clone)]
pub struct MnaSystem {
    pub layout: Layout,
    pub inc: IncidenceSet,
    pub elements: Vec<BoundElement>,
    pub e: Matrix<f64>,
    pub a: Matrix<f64>,
    /// Forcing map onto `σ`; only derivative order 0 columns are used.
    pub f: Matrix<f64>,
    pub signals: SignalSet,
    /// Signal channel of each voltage / current source, incidence order.
    pub v_channels: Vec<usize>,
    pub i_channels: Vec<usize>,
    pub linear: bool,
}

impl MnaSystem {
    pub fn size(&self) -> usize {
        self.layout.len()
    }

    /// `f(t) = F·σ(t)`.
    pub fn forcing(&self, t: f64) -> Vec<f64> {
        self.f.mul_vec(&self.signals.eval(t))
    }

    /// Residual `E z' + A z − f(t)`.
    pub fn residual(&self, z: &[f64], dz: &[f64], t: f64) -> Vec<f64> {
        let ez = self.e.mul_vec(dz);
        let az = self.a.mul_vec(z);
        let f = self.forcing(t);
        (0..self.size()).map(|k| ez[k] + az[k] - f[k]).collect()
    }

    pub fn element(&self, id: &str) -> Option<&BoundElement> {
        self.elements.iter().find(|e| e.id == id)
    }
}

pub fn assemble(model: &CircuitModel) -> Result<MnaSystem, MnaError> {
    use BranchClass::{C, I, L, R, V};
    let inc = build_incidence(&model.graph)?;
    let n_e = inc.nodes();

    // branch id -> (class, column)
    let mut column: HashMap<&str, (BranchClass, usize)> = HashMap::new();
    for c in BranchClass::ALL {
        for (k, id) in inc.ids(c).iter().enumerate() {
            column.insert(id.as_str(), (c, k));
        }
    }
    let mut owner: HashMap<&str, &str> = HashMap::new();
    for el in &model.elements {
        if !matches!(el.class, C | L | R) {
            return Err(MnaError::IncompleteModel(format!("element '{}' must be C, L or R", el.id)));
        }
        if el.ports.len() != el.descriptor.n_p {
            return Err(MnaError::ShapeMismatch(format!(
                "element '{}' has {} port branches but its descriptor has {} ports",
                el.id,
                el.ports.len(),
                el.descriptor.n_p
            )));
        }
        for p in &el.ports {
            match column.get(p.as_str()) {
                Some(&(c, _)) if c == el.class => {}
                Some(&(c, _)) => {
                    return Err(MnaError::IncompleteModel(format!(
                        "branch '{p}' is class {} but element '{}' is {}",
                        c.letter(),
                        el.id,
                        el.class.letter()
                    )))
                }
                None => return Err(MnaError::IncompleteModel(format!("element '{}' port branch '{p}' not in graph", el.id))),
            }
            if owner.insert(p.as_str(), el.id.as_str()).is_some() {
                return Err(MnaError::IncompleteModel(format!("branch '{p}' bound to two elements")));
            }
        }
    }
    for b in &model.graph.branches {
        match b.class {
            C | L | R if !owner.contains_key(b.id.as_str()) => {
                return Err(MnaError::IncompleteModel(format!("branch '{}' is not bound to an element", b.id)))
            }
            V | I if !model.sources.contains_key(&b.id) => {
                return Err(MnaError::IncompleteModel(format!("source '{}' has no waveform", b.id)))
            }
            _ => {}
        }
    }

    // Layout
    let mut names: Vec<String> = (1..=n_e).map(|k| format!("e{k}")).collect();
    let block = |names: &mut Vec<String>, ids: &[String]| {
        let start = names.len();
        names.extend(ids.iter().map(|id| format!("i_{id}")));
        start..names.len()
    };
    let i_c = block(&mut names, inc.ids(C));
    let i_r = block(&mut names, inc.ids(R));
    let i_v = block(&mut names, inc.ids(V));
    let i_l = block(&mut names, inc.ids(L));
    let mut state_offsets: HashMap<&str, usize> = HashMap::new();
    let mut states = |names: &mut Vec<String>, class: BranchClass| {
        let start = names.len();
        for el in model.elements.iter().filter(|e| e.class == class) {
            state_offsets.insert(el.id.as_str(), names.len());
            names.extend((1..=el.descriptor.n_x).map(|k| format!("x_{}_{k}", el.id)));
        }
        start..names.len()
    };
    let x_c = states(&mut names, C);
    let x_r = states(&mut names, R);
    let x_l = states(&mut names, L);
    let layout = Layout { e: 0..n_e, i_c, i_r, i_v, i_l, x_c, x_r, x_l, names };
    let n = layout.len();

    // Signals
    let mut signals = SignalSet::default();
    let v_channels: Vec<usize> =
        inc.ids(V).iter().map(|id| signals.push(id.clone(), model.sources[id].clone())).collect();
    let i_channels: Vec<usize> =
        inc.ids(I).iter().map(|id| signals.push(id.clone(), model.sources[id].clone())).collect();

    // Elements, in class order C, R, L to match the state layout.
    let mut elements = Vec::new();
    let mut row = n_e + inc.ids(V).len();
    for class in [C, R, L] {
        for el in model.elements.iter().filter(|e| e.class == class) {
            let port_cols = el.ports.iter().map(|p| column[p.as_str()].1).collect();
            let forcing_channels = if el.descriptor.has_forcing() {
                el.descriptor
                    .forcing
                    .iter()
                    .enumerate()
                    .map(|(k, w)| (*w != Waveform::dc(0.0)).then(|| signals.push(format!("{}#{}", el.id, k + 1), w.clone())))
                    .collect()
            } else {
                vec![None; el.descriptor.rows()]
            };
            elements.push(BoundElement {
                id: el.id.clone(),
                class,
                descriptor: el.descriptor.clone(),
                strength: el.strength.clone(),
                port_cols,
                state_offset: state_offsets[el.id.as_str()],
                row_offset: row,
                forcing_channels,
            });
            row += el.descriptor.rows();
        }
    }
    if row != n {
        return Err(MnaError::ShapeMismatch(format!("{row} rows for {n} unknowns")));
    }

    let s = signals.len();
    let mut e = Matrix::zeros(n, n);
    let mut a = Matrix::zeros(n, n);
    let mut f = Matrix::zeros(n, s);
    for (class, range) in [(C, &layout.i_c), (R, &layout.i_r), (V, &layout.i_v), (L, &layout.i_l)] {
        a.set_block(0, range.start, inc.matrix(class));
    }
    for (k, &ch) in i_channels.iter().enumerate() {
        for r in 0..n_e {
            f[(r, SignalSet::col(ch, 0))] = -inc.a_i[(r, k)];
        }
    }
    a.set_block(n_e, 0, &inc.a_v.transpose());
    for (k, &ch) in v_channels.iter().enumerate() {
        f[(n_e + k, SignalSet::col(ch, 0))] = 1.0;
    }
    for be in &elements {
        let d = &be.descriptor;
        let r0 = be.row_offset;
        let at = be.port_incidence_t(&inc);
        let cur = be.current_indices(&layout);
        e.set_block(r0, be.state_offset, &d.k_x);
        a.set_block(r0, be.state_offset, &d.l_x);
        for (p, &ci) in cur.iter().enumerate() {
            for r in 0..d.rows() {
                e[(r0 + r, ci)] += d.k_i[(r, p)];
                a[(r0 + r, ci)] += d.l_i[(r, p)];
            }
        }
        e.set_block(r0, 0, &d.k_v.matmul(&at));
        a.set_block(r0, 0, &d.l_v.matmul(&at));
        for (r, ch) in be.forcing_channels.iter().enumerate() {
            if let Some(ch) = ch {
                f[(r0 + r, SignalSet::col(*ch, 0))] = 1.0;
            }
        }
    }
    Ok(MnaSystem { layout, inc, elements, e, a, f, signals, v_channels, i_channels, linear: model.is_linear() })
}

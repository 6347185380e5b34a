//! Builders for every operator in the railroad-switch construction.
//!
//! All builders emit a [`TermList`]: the individual summands with their role
//! tags, so that structural checks (projector property, locality, sector
//! analysis) can inspect terms before assembly.
//!
//! Two representations are supported. `single_train` works on
//! work ⊗ position space (dimension 2^n · train positions); it is exact for
//! anything reachable from one-train states because every builder conserves
//! the train number. `full_clock` works on the full product of clock site
//! spaces and is meant for uniqueness and sector-gap studies at small sizes.
//! Diagonal clock projectors are realized 1-locally (|1><1| on a site), and
//! hop terms act on the two sites involved, so every term is well defined on
//! the full space, not just on proper clock states.

use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::circuit::{Gate, QuantumCircuit};
use crate::error::{Error, Result};
use crate::layout::{pulse_line_layout, ClockLayout, Model, Segment};
use crate::operator::{Rep, SparseHermitianOperator};

/// Role of a term within its Hamiltonian.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case", tag = "role")]
pub enum TermTag {
    /// Propagation step of the indexed gate (hop or hop projector).
    Propagation { gate: usize },
    /// Switch term on the control-1 track of the indexed CNOT.
    UpperTrack { gate: usize },
    /// Switch term on the control-0 track of the indexed CNOT.
    LowerTrack { gate: usize },
    /// Penalizes clock configurations other than "train at start".
    ClockInit,
    /// Penalizes set work qubits when the train is at the start site.
    DataInit,
    /// Penalizes two trains on adjacent sites.
    ClockPenalty,
    /// Rewards each active site (coefficient -a1).
    ActiveSite,
    /// Penalizes adjacent active pairs (coefficient +a2).
    ActivePair,
}

impl TermTag {
    pub fn text(&self) -> String {
        match self {
            TermTag::Propagation { gate } => format!("propagation:{gate}"),
            TermTag::UpperTrack { gate } => format!("upper_track:{gate}"),
            TermTag::LowerTrack { gate } => format!("lower_track:{gate}"),
            TermTag::ClockInit => "clock_init".into(),
            TermTag::DataInit => "data_init".into(),
            TermTag::ClockPenalty => "clock_penalty".into(),
            TermTag::ActiveSite => "active_site".into(),
            TermTag::ActivePair => "active_pair".into(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct TaggedTerm {
    pub tag: TermTag,
    pub op: SparseHermitianOperator,
}

/// A Hamiltonian kept as its list of summands.
#[derive(Debug, Clone)]
pub struct TermList {
    dim: usize,
    rep: Rep,
    pub terms: Vec<TaggedTerm>,
}

impl TermList {
    pub fn new(dim: usize, rep: Rep) -> TermList {
        TermList { dim, rep, terms: Vec::new() }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rep(&self) -> Rep {
        self.rep
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    fn push(&mut self, tag: TermTag, raw: Vec<(usize, usize, C64)>) -> Result<()> {
        let op = SparseHermitianOperator::from_entries(self.dim, self.rep, raw)?;
        self.terms.push(TaggedTerm { tag, op });
        Ok(())
    }

    /// Exact sum of all terms.
    pub fn assemble(&self) -> Result<SparseHermitianOperator> {
        let mut acc = SparseHermitianOperator::zero(self.dim, self.rep);
        for t in &self.terms {
            acc = acc.add(&t.op)?;
        }
        Ok(acc)
    }

    pub fn tag_strings(&self) -> Vec<String> {
        self.terms.iter().map(|t| t.tag.text()).collect()
    }
}

/// Exact sum of a term list; re-verifies Hermiticity and rejects terms from
/// mixed representations.
pub fn assemble(terms: &TermList) -> Result<SparseHermitianOperator> {
    terms.assemble()
}

// ---------------------------------------------------------------------------
// Work ⊗ clock term construction
// ---------------------------------------------------------------------------

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

const PROJ0: [[C64; 2]; 2] = [[ONE, ZERO], [ZERO, ZERO]];
const PROJ1: [[C64; 2]; 2] = [[ZERO, ZERO], [ZERO, ONE]];
const SIGMA_X: [[C64; 2]; 2] = [[ZERO, ONE], [ONE, ZERO]];

/// Operator on the work register, on at most two qubits.
#[derive(Clone, Copy)]
enum WorkOp {
    Id,
    One(usize, [[C64; 2]; 2]),
    /// (first, second, m): `first` indexes the high bit of the 4-dim local
    /// space, `second` the low bit.
    Two(usize, usize, [[C64; 4]; 4]),
}

fn cnot4() -> [[C64; 4]; 4] {
    // local order |control target>: 00 01 10 11
    let mut m = [[ZERO; 4]; 4];
    m[0][0] = ONE;
    m[1][1] = ONE;
    m[2][3] = ONE;
    m[3][2] = ONE;
    m
}

fn work_of_gate(gate: &Gate) -> WorkOp {
    match gate.control {
        Some(c) => WorkOp::Two(c, gate.target, cnot4()),
        None => WorkOp::One(gate.target, *gate.matrix()),
    }
}

/// Clock-space factor of a term part, in position coordinates.
#[derive(Clone, Copy)]
enum ClockFactor {
    /// Train-at-position projector.
    At(usize),
    /// Site in a definite local state (including the empty state 0).
    InState { site: usize, state: u8 },
    /// Both positions occupied (zero in the single-train representation).
    PairAt(usize, usize),
    /// Train movement `from -> to`; the Hermitian conjugate direction is
    /// added automatically with the adjoint work factor.
    Move { from: usize, to: usize },
}

#[derive(Clone, Copy)]
struct Part {
    work: WorkOp,
    clock: ClockFactor,
    coeff: f64,
}

/// Indexing over a chosen representation of work ⊗ clock space.
struct Space<'a> {
    layout: &'a ClockLayout,
    rep: Rep,
    work_dim: usize,
    clock_dim: usize,
    /// Mixed-radix strides per site (site 0 most significant); full_clock.
    strides: Vec<usize>,
    dims: Vec<usize>,
}

impl<'a> Space<'a> {
    fn new(layout: &'a ClockLayout, rep: Rep) -> Space<'a> {
        let dims: Vec<usize> = layout.sites.iter().map(|s| s.local_dim()).collect();
        // Saturating: strides only matter in the full-clock representation,
        // and an overflowing product there is caught by dimension guards
        // before any indexing happens.
        let mut strides = vec![1usize; dims.len()];
        for i in (0..dims.len().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1].saturating_mul(dims[i + 1]);
        }
        let clock_dim = match rep {
            Rep::SingleTrain => layout.train_positions(),
            Rep::FullClock => dims.iter().fold(1usize, |acc, &d| acc.saturating_mul(d)),
        };
        Space { layout, rep, work_dim: 1 << layout.n, clock_dim, strides, dims }
    }

    fn dim(&self) -> usize {
        self.work_dim * self.clock_dim
    }

    fn digit(&self, config: usize, site: usize) -> usize {
        config / self.strides[site] % self.dims[site]
    }

    fn with_digit(&self, config: usize, site: usize, d: usize) -> usize {
        let old = self.digit(config, site);
        config - old * self.strides[site] + d * self.strides[site]
    }

    /// Work-register matrix entries (row, col, value) of a [`WorkOp`].
    fn work_entries(&self, op: WorkOp) -> Vec<(usize, usize, C64)> {
        let n = self.layout.n;
        let bit = |q: usize| n - 1 - q; // qubit 0 is the most significant
        let mut out = Vec::new();
        match op {
            WorkOp::Id => {
                for w in 0..self.work_dim {
                    out.push((w, w, ONE));
                }
            }
            WorkOp::One(q, m) => {
                let mask = 1usize << bit(q);
                for w in 0..self.work_dim {
                    let l = (w & mask != 0) as usize;
                    for (lp, row) in m.iter().enumerate() {
                        if row[l] != ZERO {
                            let wp = if lp == 1 { w | mask } else { w & !mask };
                            out.push((wp, w, row[l]));
                        }
                    }
                }
            }
            WorkOp::Two(a, b, m) => {
                let ma = 1usize << bit(a);
                let mb = 1usize << bit(b);
                for w in 0..self.work_dim {
                    let l = 2 * (w & ma != 0) as usize + (w & mb != 0) as usize;
                    for lp in 0..4 {
                        if m[lp][l] != ZERO {
                            let mut wp = w & !ma & !mb;
                            if lp & 2 != 0 {
                                wp |= ma;
                            }
                            if lp & 1 != 0 {
                                wp |= mb;
                            }
                            out.push((wp, w, m[lp][l]));
                        }
                    }
                }
            }
        }
        out
    }

    /// Clock configurations selected by a diagonal factor.
    fn diagonal_configs(&self, clock: ClockFactor) -> Vec<usize> {
        let positions = self.layout.positions();
        match (self.rep, clock) {
            (Rep::SingleTrain, ClockFactor::At(p)) => vec![p],
            (Rep::SingleTrain, ClockFactor::InState { site, state }) => {
                if state == 0 {
                    (0..positions.len()).filter(|&p| positions[p].site != site).collect()
                } else {
                    vec![self.layout.position_of(site, state)]
                }
            }
            (Rep::SingleTrain, ClockFactor::PairAt(..)) => Vec::new(),
            (Rep::FullClock, ClockFactor::At(p)) => {
                let tp = &positions[p];
                self.configs_where(|cfg| self.digit(cfg, tp.site) == tp.state_index as usize)
            }
            (Rep::FullClock, ClockFactor::InState { site, state }) => {
                self.configs_where(|cfg| self.digit(cfg, site) == state as usize)
            }
            (Rep::FullClock, ClockFactor::PairAt(p, q)) => {
                let (tp, tq) = (&positions[p], &positions[q]);
                self.configs_where(|cfg| {
                    self.digit(cfg, tp.site) == tp.state_index as usize
                        && self.digit(cfg, tq.site) == tq.state_index as usize
                })
            }
            (_, ClockFactor::Move { .. }) => unreachable!("Move is not diagonal"),
        }
    }

    fn configs_where(&self, pred: impl Fn(usize) -> bool) -> Vec<usize> {
        (0..self.clock_dim).filter(|&c| pred(c)).collect()
    }

    /// (from, to) clock index pairs of a movement factor.
    fn move_configs(&self, from: usize, to: usize) -> Vec<(usize, usize)> {
        match self.rep {
            Rep::SingleTrain => vec![(from, to)],
            Rep::FullClock => {
                let positions = self.layout.positions();
                let (f, t) = (&positions[from], &positions[to]);
                if f.site == t.site {
                    // in-site transition (qutrit L <-> R)
                    self.configs_where(|c| self.digit(c, f.site) == f.state_index as usize)
                        .into_iter()
                        .map(|c| (c, self.with_digit(c, f.site, t.state_index as usize)))
                        .collect()
                } else {
                    self.configs_where(|c| {
                        self.digit(c, f.site) == f.state_index as usize
                            && self.digit(c, t.site) == 0
                    })
                    .into_iter()
                    .map(|c| {
                        let c2 = self.with_digit(c, f.site, 0);
                        (c, self.with_digit(c2, t.site, t.state_index as usize))
                    })
                    .collect()
                }
            }
        }
    }

    /// Raw entries of a sum of parts. Movement parts contribute both
    /// directions so the result is Hermitian whenever diagonal parts use
    /// Hermitian work factors.
    fn entries(&self, parts: &[Part]) -> Vec<(usize, usize, C64)> {
        let mut out = Vec::new();
        for part in parts {
            let work = self.work_entries(part.work);
            match part.clock {
                ClockFactor::Move { from, to } => {
                    for (cf, ct) in self.move_configs(from, to) {
                        for &(wr, wc, v) in &work {
                            let val = v * part.coeff;
                            out.push((wr * self.clock_dim + ct, wc * self.clock_dim + cf, val));
                            out.push((wc * self.clock_dim + cf, wr * self.clock_dim + ct, val.conj()));
                        }
                    }
                }
                diag => {
                    for cfg in self.diagonal_configs(diag) {
                        for &(wr, wc, v) in &work {
                            out.push((wr * self.clock_dim + cfg, wc * self.clock_dim + cfg, v * part.coeff));
                        }
                    }
                }
            }
        }
        out
    }
}

// ---------------------------------------------------------------------------
// Builders
// ---------------------------------------------------------------------------

/// Hopping Hamiltonian on a plain pulse-clock line: per gate t the term
/// U_t ⊗ |t><t-1| + h.c., with the clock transition acting on the two
/// backbone qubits of the step.
pub fn build_feynman(circuit: &QuantumCircuit, rep: Rep) -> Result<TermList> {
    let layout = pulse_line_layout(circuit);
    let space = Space::new(&layout, rep);
    let mut tl = TermList::new(space.dim(), rep);
    for seg in &layout.segments {
        if let Segment::Hop { gate_index, from, to, .. } = *seg {
            let part = Part {
                work: work_of_gate(&circuit.gates[gate_index]),
                clock: ClockFactor::Move {
                    from: layout.qubit_position(from),
                    to: layout.qubit_position(to),
                },
                coeff: 1.0,
            };
            tl.push(TermTag::Propagation { gate: gate_index }, space.entries(&[part]))?;
        }
    }
    Ok(tl)
}

/// Projector parts of one propagation step `a -> b` under `work`:
/// ½(|1><1|_a + |1><1|_b − work ⊗ hop − work† ⊗ hop†).
fn hop_projector_parts(work: WorkOp, a: usize, b: usize) -> [Part; 3] {
    [
        Part { work: WorkOp::Id, clock: ClockFactor::At(a), coeff: 0.5 },
        Part { work: WorkOp::Id, clock: ClockFactor::At(b), coeff: 0.5 },
        Part { work, clock: ClockFactor::Move { from: a, to: b }, coeff: -0.5 },
    ]
}

/// Projector form of the pulse-clock propagation Hamiltonian: per gate a
/// single projector term ½(P_{t-1} + P_t − U_t⊗hop − U_t†⊗hop†).
pub fn build_feynman_projector(circuit: &QuantumCircuit, rep: Rep) -> Result<TermList> {
    let layout = pulse_line_layout(circuit);
    let space = Space::new(&layout, rep);
    let mut tl = TermList::new(space.dim(), rep);
    for seg in &layout.segments {
        if let Segment::Hop { gate_index, from, to, .. } = *seg {
            let parts = hop_projector_parts(
                work_of_gate(&circuit.gates[gate_index]),
                layout.qubit_position(from),
                layout.qubit_position(to),
            );
            tl.push(TermTag::Propagation { gate: gate_index }, space.entries(&parts))?;
        }
    }
    Ok(tl)
}

/// Switch projector: ½(ctrl⊗|1><1|_a + ctrl⊗|1><1|_b − hop_work⊗hop − h.c.),
/// where `ctrl` dresses the diagonal and `hop_work` the movement.
fn switch_parts(ctrl: WorkOp, hop_work: WorkOp, a: usize, b: usize) -> [Part; 3] {
    [
        Part { work: ctrl, clock: ClockFactor::At(a), coeff: 0.5 },
        Part { work: ctrl, clock: ClockFactor::At(b), coeff: 0.5 },
        Part { work: hop_work, clock: ClockFactor::Move { from: a, to: b }, coeff: -0.5 },
    ]
}

/// 3-local switch Hamiltonian. Single-qubit gates contribute hop projectors;
/// each CNOT contributes six projector terms: the control-1 track enters and
/// exits under |1><1| on the control and flips the target on its middle hop,
/// the control-0 track enters and exits under |0><0| with bare middle hop.
/// On a cycle layout this is the cyclic variant of the same operator.
pub fn build_h3s(circuit: &QuantumCircuit, layout: &ClockLayout, rep: Rep) -> Result<TermList> {
    if layout.model != Model::ThreeLocal {
        return Err(Error::LayoutMismatch("3-local builder needs a 3-local layout".into()));
    }
    layout.check_circuit(circuit)?;
    let space = Space::new(layout, rep);
    let mut tl = TermList::new(space.dim(), rep);
    for seg in &layout.segments {
        match *seg {
            Segment::Hop { gate_index, from, to, .. } => {
                let parts = hop_projector_parts(
                    work_of_gate(&circuit.gates[gate_index]),
                    layout.qubit_position(from),
                    layout.qubit_position(to),
                );
                tl.push(TermTag::Propagation { gate: gate_index }, space.entries(&parts))?;
            }
            Segment::Gadget { gadget_index } => {
                let g = &layout.gadgets[gadget_index];
                let p = |site: usize| layout.qubit_position(site);
                let (pin, pout) = (p(g.entry), p(g.exit));
                let (u1, u2) = (p(g.upper[0]), p(g.upper[1]));
                let (l1, l2) = (p(g.lower[0]), p(g.lower[1]));
                let c1 = WorkOp::One(g.control, PROJ1);
                let c0 = WorkOp::One(g.control, PROJ0);
                let flip = WorkOp::One(g.target, SIGMA_X);
                let upper = TermTag::UpperTrack { gate: g.gate_index };
                let lower = TermTag::LowerTrack { gate: g.gate_index };
                tl.push(upper, space.entries(&switch_parts(c1, c1, pin, u1)))?;
                tl.push(upper, space.entries(&switch_parts(WorkOp::Id, flip, u1, u2)))?;
                tl.push(upper, space.entries(&switch_parts(c1, c1, u2, pout)))?;
                tl.push(lower, space.entries(&switch_parts(c0, c0, pin, l1)))?;
                tl.push(lower, space.entries(&switch_parts(WorkOp::Id, WorkOp::Id, l1, l2)))?;
                tl.push(lower, space.entries(&switch_parts(c0, c0, l2, pout)))?;
            }
        }
    }
    Ok(tl)
}

/// Qubit-qutrit switch Hamiltonian: bare hop terms only (no projector
/// completion). Single-qubit gates hop between backbone qubits under U_t;
/// each CNOT contributes, per track, six bare hops and three qutrit L<->R
/// terms, dressed by |1><1| (entry/exit qutrits) and a target flip (middle
/// qutrit) on the control-1 track, by |0><0| and a bare middle on the
/// control-0 track.
pub fn build_h23(circuit: &QuantumCircuit, layout: &ClockLayout, rep: Rep) -> Result<TermList> {
    if layout.model != Model::QubitQutrit {
        return Err(Error::LayoutMismatch(
            "qubit-qutrit builder needs a qutrit layout with gadgets for every CNOT".into(),
        ));
    }
    layout.check_circuit(circuit)?;
    let space = Space::new(layout, rep);
    let mut tl = TermList::new(space.dim(), rep);
    let mv = |w: WorkOp, from: usize, to: usize| Part { work: w, clock: ClockFactor::Move { from, to }, coeff: 1.0 };
    for seg in &layout.segments {
        match *seg {
            Segment::Hop { gate_index, from, to, .. } => {
                let part = mv(
                    work_of_gate(&circuit.gates[gate_index]),
                    layout.qubit_position(from),
                    layout.qubit_position(to),
                );
                tl.push(TermTag::Propagation { gate: gate_index }, space.entries(&[part]))?;
            }
            Segment::Gadget { gadget_index } => {
                let g = &layout.gadgets[gadget_index];
                let tracks: [(&[usize], TermTag, WorkOp, WorkOp); 2] = [
                    (
                        &g.upper,
                        TermTag::UpperTrack { gate: g.gate_index },
                        WorkOp::One(g.control, PROJ1),
                        WorkOp::One(g.target, SIGMA_X),
                    ),
                    (
                        &g.lower,
                        TermTag::LowerTrack { gate: g.gate_index },
                        WorkOp::One(g.control, PROJ0),
                        WorkOp::Id,
                    ),
                ];
                for (sites, tag, ctrl, mid) in tracks {
                    let left = |slot: usize| layout.position_of(sites[slot], 1);
                    let right = |slot: usize| layout.position_of(sites[slot], 2);
                    let qb = |slot: usize| layout.qubit_position(sites[slot]);
                    // six bare hops along the track
                    for (from, to) in [
                        (layout.qubit_position(g.entry), left(0)),
                        (right(0), qb(1)),
                        (qb(1), left(2)),
                        (right(2), qb(3)),
                        (qb(3), left(4)),
                        (right(4), layout.qubit_position(g.exit)),
                    ] {
                        tl.push(tag, space.entries(&[mv(WorkOp::Id, from, to)]))?;
                    }
                    // qutrit direction terms: entry, middle, exit
                    tl.push(tag, space.entries(&[mv(ctrl, left(0), right(0))]))?;
                    tl.push(tag, space.entries(&[mv(mid, left(2), right(2))]))?;
                    tl.push(tag, space.entries(&[mv(ctrl, left(4), right(4))]))?;
                }
            }
        }
    }
    Ok(tl)
}

/// Initialization penalty: the clock part penalizes any configuration other
/// than "train at the start site" (|0><0| on the start plus train projectors
/// elsewhere); the data part penalizes set work qubits while the train is at
/// the start. Diagonal in the computational basis; its zero space in the
/// full-clock representation is the single state |0...0> ⊗ |train at start>.
pub fn build_h_init(layout: &ClockLayout, n: usize, rep: Rep) -> Result<TermList> {
    if n != layout.n {
        return Err(Error::LayoutMismatch(format!(
            "layout works on {} qubits, got n = {}",
            layout.n, n
        )));
    }
    let space = Space::new(layout, rep);
    let mut tl = TermList::new(space.dim(), rep);
    let start = layout.start_site();
    tl.push(
        TermTag::ClockInit,
        space.entries(&[Part {
            work: WorkOp::Id,
            clock: ClockFactor::InState { site: start, state: 0 },
            coeff: 1.0,
        }]),
    )?;
    for site in &layout.sites {
        if site.id == start {
            continue;
        }
        let parts: Vec<Part> = site
            .active_states()
            .iter()
            .map(|&s| Part {
                work: WorkOp::Id,
                clock: ClockFactor::At(layout.position_of(site.id, s)),
                coeff: 1.0,
            })
            .collect();
        tl.push(TermTag::ClockInit, space.entries(&parts))?;
    }
    let start_pos = layout.qubit_position(start);
    for q in 0..layout.n {
        let part = Part {
            work: WorkOp::One(q, PROJ1),
            clock: ClockFactor::At(start_pos),
            coeff: 1.0,
        };
        tl.push(TermTag::DataInit, space.entries(&[part]))?;
    }
    Ok(tl)
}

/// Penalty |11><11| on every clock-adjacent site pair (intra-gadget pairs
/// included); zero on at-most-one-train states. One term per pair.
pub fn build_h_clock(layout: &ClockLayout, rep: Rep) -> Result<TermList> {
    let space = Space::new(layout, rep);
    let mut tl = TermList::new(space.dim(), rep);
    for (i, j) in layout.adjacent_site_pairs() {
        let mut parts = Vec::new();
        for &a in layout.sites[i].active_states() {
            for &b in layout.sites[j].active_states() {
                parts.push(Part {
                    work: WorkOp::Id,
                    clock: ClockFactor::PairAt(
                        layout.position_of(i, a),
                        layout.position_of(j, b),
                    ),
                    coeff: 1.0,
                });
            }
        }
        tl.push(TermTag::ClockPenalty, space.entries(&parts))?;
    }
    Ok(tl)
}

/// Balanced counting Hamiltonian −a1·Σ_sites (train here) + a2·Σ_pairs
/// (both active). Requires positive coefficients.
pub fn build_h_active(layout: &ClockLayout, a1: f64, a2: f64, rep: Rep) -> Result<TermList> {
    if !(a1 > 0.0) || !(a2 > 0.0) {
        return Err(Error::Domain(format!(
            "active-site coefficients must be positive, got a1 = {a1}, a2 = {a2}"
        )));
    }
    let space = Space::new(layout, rep);
    let mut tl = TermList::new(space.dim(), rep);
    for site in &layout.sites {
        let parts: Vec<Part> = site
            .active_states()
            .iter()
            .map(|&s| Part {
                work: WorkOp::Id,
                clock: ClockFactor::At(layout.position_of(site.id, s)),
                coeff: -a1,
            })
            .collect();
        tl.push(TermTag::ActiveSite, space.entries(&parts))?;
    }
    for (i, j) in layout.adjacent_site_pairs() {
        let mut parts = Vec::new();
        for &a in layout.sites[i].active_states() {
            for &b in layout.sites[j].active_states() {
                parts.push(Part {
                    work: WorkOp::Id,
                    clock: ClockFactor::PairAt(
                        layout.position_of(i, a),
                        layout.position_of(j, b),
                    ),
                    coeff: a2,
                });
            }
        }
        tl.push(TermTag::ActivePair, space.entries(&parts))?;
    }
    Ok(tl)
}

/// Linear interpolation (1−s)·hA + s·hB with merged entries.
pub fn interpolate(
    ha: &SparseHermitianOperator,
    hb: &SparseHermitianOperator,
    s: f64,
) -> Result<SparseHermitianOperator> {
    ha.check_same_space(hb)?;
    if !(0.0..=1.0).contains(&s) {
        return Err(Error::Domain(format!("interpolation parameter {s} outside [0,1]")));
    }
    ha.scale(1.0 - s).add(&hb.scale(s))
}

/// Total train-number operator N = Σ_sites Σ_active |a><a|. Commutes with
/// every propagation Hamiltonian; its eigenvalues label clock sectors.
pub fn train_number(layout: &ClockLayout, rep: Rep) -> SparseHermitianOperator {
    let positions: Vec<usize> = (0..layout.positions().len()).collect();
    train_number_on(layout, rep, &positions)
}

/// Diagonal operator counting trains on a subset of positions.
pub(crate) fn train_number_on(
    layout: &ClockLayout,
    rep: Rep,
    positions: &[usize],
) -> SparseHermitianOperator {
    let space = Space::new(layout, rep);
    let parts: Vec<Part> = positions
        .iter()
        .map(|&p| Part { work: WorkOp::Id, clock: ClockFactor::At(p), coeff: 1.0 })
        .collect();
    SparseHermitianOperator::from_entries(space.dim(), rep, space.entries(&parts))
        .expect("train number operator is Hermitian")
}

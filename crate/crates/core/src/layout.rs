//! Clock-register geometry for both gate models, and the graph of states a
//! correctly started computation can visit.
//!
//! A layout is a walk over clock sites: one backbone qubit per gate
//! boundary, plus a two-track switch block per CNOT. Model 1 inserts four
//! switch qubits per CNOT; model 2 inserts three qutrits and two qubits per
//! track. Cycles are built by mirroring the walk and sharing the two
//! endpoint sites.

use serde::Serialize;

use crate::circuit::{Gate, QuantumCircuit};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Model {
    ThreeLocal,
    QubitQutrit,
}

impl Model {
    pub fn name(&self) -> &'static str {
        match self {
            Model::ThreeLocal => "3local",
            Model::QubitQutrit => "qutrit",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Topology {
    Line,
    Cycle,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SiteKind {
    BackboneQubit,
    GadgetQubit,
    Qutrit,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClockSite {
    pub id: usize,
    pub kind: SiteKind,
    pub label: String,
}

impl ClockSite {
    /// Local Hilbert space dimension: 2 for qubits, 3 for qutrits.
    pub fn local_dim(&self) -> usize {
        match self.kind {
            SiteKind::Qutrit => 3,
            _ => 2,
        }
    }

    /// Local state indices that count as "the train is here".
    /// Qubits: |1>. Qutrits: |L> = 1 and |R> = 2.
    pub fn active_states(&self) -> &'static [u8] {
        match self.kind {
            SiteKind::Qutrit => &[1, 2],
            _ => &[1],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Half {
    A,
    B,
}

/// Site group realizing one CNOT. `upper`/`lower` list track sites in walk
/// order: 2 gadget qubits each for model 1, qutrit/qubit/qutrit/qubit/qutrit
/// for model 2. `entry`/`exit` are the flanking backbone sites.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Gadget {
    pub gate_index: usize,
    pub control: usize,
    pub target: usize,
    pub entry: usize,
    pub exit: usize,
    pub upper: Vec<usize>,
    pub lower: Vec<usize>,
    pub half: Half,
}

/// One gate application along the walk.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Segment {
    /// Single-qubit gate between two backbone sites, in application order.
    Hop { gate_index: usize, from: usize, to: usize, half: Half },
    /// CNOT realized by the indexed gadget.
    Gadget { gadget_index: usize },
}

/// One place the train can sit: an active local state of one site.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrainPosition {
    pub site: usize,
    pub state_index: u8,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClockLayout {
    pub model: Model,
    pub topology: Topology,
    pub n: usize,
    pub sites: Vec<ClockSite>,
    pub gadgets: Vec<Gadget>,
    /// Half A in gate order; for cycles, then half B in reverse gate order,
    /// which is walk order around the ring.
    pub segments: Vec<Segment>,
    gates: Vec<Gate>,
    positions: Vec<TrainPosition>,
    position_index: Vec<Vec<usize>>,
}

impl ClockLayout {
    pub(crate) fn assemble(
        model: Model,
        topology: Topology,
        n: usize,
        sites: Vec<ClockSite>,
        gadgets: Vec<Gadget>,
        segments: Vec<Segment>,
        gates: Vec<Gate>,
    ) -> ClockLayout {
        let mut positions = Vec::new();
        let mut position_index = vec![Vec::new(); sites.len()];
        for site in &sites {
            for &state in site.active_states() {
                position_index[site.id].push(positions.len());
                let label = match site.kind {
                    SiteKind::Qutrit => format!("{}{}", site.label, if state == 1 { "L" } else { "R" }),
                    _ => site.label.clone(),
                };
                positions.push(TrainPosition { site: site.id, state_index: state, label });
            }
        }
        ClockLayout { model, topology, n, sites, gadgets, segments, gates, positions, position_index }
    }

    /// Gate list this layout realizes (may contain identities inserted by
    /// the qutrit builder).
    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn circuit(&self) -> QuantumCircuit {
        QuantumCircuit { n: self.n, gates: self.gates.clone() }
    }

    pub fn site_count(&self) -> usize {
        self.sites.len()
    }

    /// Count of active clock states over all sites.
    pub fn train_positions(&self) -> usize {
        self.positions.len()
    }

    pub fn positions(&self) -> &[TrainPosition] {
        &self.positions
    }

    /// Position index of (site, active state).
    pub fn position_of(&self, site: usize, state_index: u8) -> usize {
        let site_positions = &self.position_index[site];
        let site_ref = &self.sites[site];
        let k = site_ref
            .active_states()
            .iter()
            .position(|&s| s == state_index)
            .expect("state is active for this site");
        site_positions[k]
    }

    /// Position of a qubit site's single active state.
    pub fn qubit_position(&self, site: usize) -> usize {
        self.position_of(site, 1)
    }

    /// Product of local dimensions of all clock sites; saturates at
    /// `usize::MAX` for layouts too large to ever enumerate.
    pub fn full_clock_dim(&self) -> usize {
        self.sites.iter().fold(1usize, |acc, s| acc.saturating_mul(s.local_dim()))
    }

    /// Backbone site id of node 0 of the walk.
    pub fn start_site(&self) -> usize {
        0
    }

    /// Errors unless `circuit` is the exact gate list this layout realizes.
    pub fn check_circuit(&self, circuit: &QuantumCircuit) -> Result<()> {
        if circuit.n != self.n {
            return Err(Error::LayoutMismatch(format!(
                "layout built for n = {}, circuit has n = {}",
                self.n, circuit.n
            )));
        }
        if circuit.gates != self.gates {
            return Err(Error::LayoutMismatch(
                "circuit gate list differs from the one the layout was built for".into(),
            ));
        }
        Ok(())
    }

    /// Adjacent site pairs in walk order: backbone hops plus intra-gadget
    /// adjacencies on both tracks.
    pub fn adjacent_site_pairs(&self) -> Vec<(usize, usize)> {
        let mut pairs = Vec::new();
        for seg in &self.segments {
            match *seg {
                Segment::Hop { from, to, .. } => pairs.push((from, to)),
                Segment::Gadget { gadget_index } => {
                    let g = &self.gadgets[gadget_index];
                    for track in [&g.upper, &g.lower] {
                        pairs.push((g.entry, track[0]));
                        for w in track.windows(2) {
                            pairs.push((w[0], w[1]));
                        }
                        pairs.push((*track.last().unwrap(), g.exit));
                    }
                }
            }
        }
        pairs
    }

    /// Dump schema used by the command-line tool.
    pub fn to_dump_json(&self) -> serde_json::Value {
        serde_json::json!({
            "model": self.model,
            "topology": self.topology,
            "work_qubits": self.n,
            "train_positions": self.train_positions(),
            "sites": self.sites,
            "gadgets": self.gadgets,
            "gates": self.gates.iter().map(gate_line).collect::<Vec<String>>(),
        })
    }
}

fn gate_line(g: &Gate) -> String {
    match g.control {
        Some(c) => format!("CNOT {} {}", c, g.target),
        None => {
            if g.kind == crate::circuit::GateKind::U {
                let m = g.matrix();
                format!(
                    "U {} {} {} {} {} {} {} {} {}",
                    g.target,
                    m[0][0].re, m[0][0].im, m[0][1].re, m[0][1].im,
                    m[1][0].re, m[1][0].im, m[1][1].re, m[1][1].im
                )
            } else {
                format!("{} {}", g.kind.name(), g.target)
            }
        }
    }
}

/// Per-CNOT track site roster for each model.
fn track_len(model: Model) -> usize {
    match model {
        Model::ThreeLocal => 2,
        Model::QubitQutrit => 5,
    }
}

fn track_site_kind(model: Model, slot: usize) -> SiteKind {
    match model {
        Model::ThreeLocal => SiteKind::GadgetQubit,
        // qutrit, qubit, qutrit, qubit, qutrit
        Model::QubitQutrit => {
            if slot % 2 == 0 {
                SiteKind::Qutrit
            } else {
                SiteKind::GadgetQubit
            }
        }
    }
}

struct WalkBuilder {
    model: Model,
    sites: Vec<ClockSite>,
    gadgets: Vec<Gadget>,
    segments: Vec<Segment>,
    backbone: Vec<usize>,
}

impl WalkBuilder {
    fn new(model: Model) -> WalkBuilder {
        let start = ClockSite { id: 0, kind: SiteKind::BackboneQubit, label: "c0".into() };
        WalkBuilder { model, sites: vec![start], gadgets: Vec::new(), segments: Vec::new(), backbone: vec![0] }
    }

    fn add_site(&mut self, kind: SiteKind, label: String) -> usize {
        let id = self.sites.len();
        self.sites.push(ClockSite { id, kind, label });
        id
    }

    fn add_track(&mut self, prefix: &str, gate_number: usize, suffix: &str) -> Vec<usize> {
        (0..track_len(self.model))
            .map(|slot| {
                let kind = track_site_kind(self.model, slot);
                self.add_site(kind, format!("{prefix}{}_t{gate_number}{suffix}", slot + 1))
            })
            .collect()
    }

    /// Extends the walk by one gate of the first half.
    fn push_gate(&mut self, gate_index: usize, gate: &Gate) {
        let entry = *self.backbone.last().unwrap();
        let boundary = self.backbone.len();
        if gate.is_cnot() {
            let upper = self.add_track("u", gate_index + 1, "");
            let lower = self.add_track("l", gate_index + 1, "");
            let exit = self.add_site(SiteKind::BackboneQubit, format!("c{boundary}"));
            self.backbone.push(exit);
            self.gadgets.push(Gadget {
                gate_index,
                control: gate.control.unwrap(),
                target: gate.target,
                entry,
                exit,
                upper,
                lower,
                half: Half::A,
            });
            self.segments.push(Segment::Gadget { gadget_index: self.gadgets.len() - 1 });
        } else {
            let to = self.add_site(SiteKind::BackboneQubit, format!("c{boundary}"));
            self.backbone.push(to);
            self.segments.push(Segment::Hop { gate_index, from: entry, to, half: Half::A });
        }
    }

    /// Appends the mirrored half: same gates in reverse walk order, fresh
    /// interior sites, shared endpoints.
    fn mirror(&mut self, gates: &[Gate]) {
        let last = *self.backbone.last().unwrap();
        let mut mirror_backbone = vec![0usize; self.backbone.len()];
        mirror_backbone[0] = 0;
        *mirror_backbone.last_mut().unwrap() = last;
        for t in (1..=gates.len()).rev() {
            let exit_site = mirror_backbone[t];
            let gate = &gates[t - 1];
            // walk order around the ring: track sites come before the next
            // interior boundary site
            if gate.is_cnot() {
                let upper = self.add_track("u", t, "m");
                let lower = self.add_track("l", t, "m");
                let entry_site = if t - 1 == 0 {
                    0
                } else {
                    let id = self.add_site(SiteKind::BackboneQubit, format!("c{}m", t - 1));
                    mirror_backbone[t - 1] = id;
                    id
                };
                self.gadgets.push(Gadget {
                    gate_index: t - 1,
                    control: gate.control.unwrap(),
                    target: gate.target,
                    entry: entry_site,
                    exit: exit_site,
                    upper,
                    lower,
                    half: Half::B,
                });
                self.segments.push(Segment::Gadget { gadget_index: self.gadgets.len() - 1 });
            } else {
                let entry_site = if t - 1 == 0 {
                    0
                } else {
                    let id = self.add_site(SiteKind::BackboneQubit, format!("c{}m", t - 1));
                    mirror_backbone[t - 1] = id;
                    id
                };
                self.segments.push(Segment::Hop {
                    gate_index: t - 1,
                    from: entry_site,
                    to: exit_site,
                    half: Half::B,
                });
            }
        }
    }
}

/// Plain pulse-clock line: one backbone qubit per gate boundary, every gate
/// (including CNOT) realized as a single hop. This is the clock geometry of
/// the unswitched propagation Hamiltonians.
pub fn pulse_line_layout(circuit: &QuantumCircuit) -> ClockLayout {
    let mut b = WalkBuilder::new(Model::ThreeLocal);
    for (i, _) in circuit.gates.iter().enumerate() {
        let entry = *b.backbone.last().unwrap();
        let boundary = b.backbone.len();
        let to = b.add_site(SiteKind::BackboneQubit, format!("c{boundary}"));
        b.backbone.push(to);
        b.segments.push(Segment::Hop { gate_index: i, from: entry, to, half: Half::A });
    }
    ClockLayout::assemble(
        Model::ThreeLocal,
        Topology::Line,
        circuit.n,
        b.sites,
        b.gadgets,
        b.segments,
        circuit.gates.clone(),
    )
}

/// Line layout for the 3-local model: one backbone qubit per gate boundary,
/// four switch qubits per CNOT.
pub fn build_layout_3local(circuit: &QuantumCircuit) -> ClockLayout {
    let mut b = WalkBuilder::new(Model::ThreeLocal);
    for (i, gate) in circuit.gates.iter().enumerate() {
        b.push_gate(i, gate);
    }
    ClockLayout::assemble(
        Model::ThreeLocal,
        Topology::Line,
        circuit.n,
        b.sites,
        b.gadgets,
        b.segments,
        circuit.gates.clone(),
    )
}

/// Doubles a line layout into a cycle sharing the two endpoint sites.
pub fn close_cycle(layout: &ClockLayout) -> Result<ClockLayout> {
    if layout.topology != Topology::Line {
        return Err(Error::Domain("close_cycle requires a line layout".into()));
    }
    if layout.site_count() < 3 {
        return Err(Error::Domain(
            "cycle needs a line of at least 3 sites; pad the circuit first".into(),
        ));
    }
    let circuit = layout.circuit();
    let mut b = WalkBuilder::new(layout.model);
    for (i, gate) in circuit.gates.iter().enumerate() {
        b.push_gate(i, gate);
    }
    b.mirror(&circuit.gates);
    Ok(ClockLayout::assemble(
        layout.model,
        Topology::Cycle,
        circuit.n,
        b.sites,
        b.gadgets,
        b.segments,
        circuit.gates.clone(),
    ))
}

/// Minimum single-qubit gates between CNOTs in the qutrit model: 8 backbone
/// qubits strictly between gadget boundaries, i.e. 9 hops, so that pendant
/// attachment points recur every 9th spine node.
const QUTRIT_GAP_GATES: usize = 9;
/// Identity prefix/suffix floor so mirrored gadget copies never share their
/// pendant attachment nodes across the seam sites.
const QUTRIT_EDGE_GATES: usize = 4;

/// Inserts identity gates so gadgets sit in a regular backbone: at least
/// [`QUTRIT_EDGE_GATES`] single-qubit gates before the first and after the
/// last CNOT, and exactly [`QUTRIT_GAP_GATES`] between CNOTs that are closer
/// than that. Circuits without CNOTs come back unchanged.
fn regularize_for_qutrit(circuit: &QuantumCircuit) -> QuantumCircuit {
    use crate::circuit::GateKind;
    if circuit.cnot_count() == 0 {
        return circuit.clone();
    }
    let id = || Gate::single(GateKind::I, 0);
    let mut gates: Vec<Gate> = Vec::new();
    let mut singles_run = usize::MAX; // "infinite" run before the first gate
    let mut seen_cnot = false;
    for g in &circuit.gates {
        if g.is_cnot() {
            let need = if seen_cnot { QUTRIT_GAP_GATES } else { QUTRIT_EDGE_GATES };
            let run = if seen_cnot { singles_run } else { singles_run.min(gates.len()) };
            for _ in run..need {
                gates.push(id());
            }
            gates.push(g.clone());
            singles_run = 0;
            seen_cnot = true;
        } else {
            gates.push(g.clone());
            singles_run = singles_run.saturating_add(1);
        }
    }
    for _ in singles_run..QUTRIT_EDGE_GATES {
        gates.push(id());
    }
    QuantumCircuit { n: circuit.n, gates }
}

/// Cycle layout for the qubit-qutrit model. CNOT gadgets use three qutrits
/// and two qubits per track; identity gates are inserted to keep 8 backbone
/// qubits between successive gadgets. The returned layout's gate list
/// (`gates()`) includes those insertions.
pub fn build_layout_qutrit(circuit: &QuantumCircuit) -> Result<ClockLayout> {
    let normalized = regularize_for_qutrit(circuit);
    if normalized.len() < 2 {
        return Err(Error::Domain(
            "cycle needs at least 2 gates; pad the circuit first".into(),
        ));
    }
    let mut b = WalkBuilder::new(Model::QubitQutrit);
    for (i, gate) in normalized.gates.iter().enumerate() {
        b.push_gate(i, gate);
    }
    b.mirror(&normalized.gates);
    Ok(ClockLayout::assemble(
        Model::QubitQutrit,
        Topology::Cycle,
        normalized.n,
        b.sites,
        b.gadgets,
        b.segments,
        normalized.gates,
    ))
}

// ---------------------------------------------------------------------------
// Legal graph
// ---------------------------------------------------------------------------

/// Work-register action attached to a legal-graph edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeAction {
    /// Single-qubit gate application (index into the layout's gate list).
    Gate(usize),
    /// Train movement with no work action (model-2 bare hops).
    Identity,
    /// Track commitment conditioned on the control qubit.
    ControlledRoute,
    /// Controlled X on the target qubit.
    TargetFlip,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeKind {
    Backbone,
    /// Interior switch node; `stage` counts transitions taken inside the
    /// gadget (1-based).
    GadgetStage { gadget: usize, stage: u8 },
    /// Blind-alley node reachable only by bare hops.
    Pendant { gadget: usize, at_exit: bool },
}

/// How a branch's work factor is derived from the prefix state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BranchOp {
    /// The whole prefix state.
    Full,
    /// Project the control qubit onto |0>.
    Proj0,
    /// Project the control qubit onto |1>.
    Proj1,
    /// Project the control onto |1>, then X on the target.
    Proj1Flip,
}

/// One (work transformation, train position) component of a legal node.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Branch {
    pub position: usize,
    pub op: BranchOp,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LegalNode {
    /// Walk coordinate: line position or cycle position; pendants carry the
    /// coordinate of their attachment node.
    pub step: usize,
    /// Gates of the layout's list fully applied at this node.
    pub gate_coord: usize,
    pub kind: NodeKind,
    pub branches: Vec<Branch>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LegalEdge {
    pub a: usize,
    pub b: usize,
    pub action: EdgeAction,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LegalGraph {
    pub topology: Topology,
    pub nodes: Vec<LegalNode>,
    pub edges: Vec<LegalEdge>,
    pub start_node: usize,
    pub success_set: Vec<usize>,
    /// Number of spine nodes (cycle length for cycles); excludes pendants.
    pub spine_len: usize,
}

impl LegalGraph {
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// Walk distance from the start node: line distance on lines, ring
    /// distance on cycles. Pendants sit one past their attachment node.
    pub fn distance_from_start(&self, node: usize) -> usize {
        let n = &self.nodes[node];
        let spine = match self.topology {
            Topology::Cycle => n.step.min(self.spine_len - n.step),
            Topology::Line => n.step,
        };
        spine + matches!(n.kind, NodeKind::Pendant { .. }) as usize
    }

    pub fn degree(&self, node: usize) -> usize {
        self.edges.iter().filter(|e| e.a == node || e.b == node).count()
    }
}

struct GraphBuilder<'a> {
    layout: &'a ClockLayout,
    nodes: Vec<LegalNode>,
    edges: Vec<LegalEdge>,
}

impl<'a> GraphBuilder<'a> {
    fn add_node(&mut self, node: LegalNode) -> usize {
        self.nodes.push(node);
        self.nodes.len() - 1
    }

    fn add_edge(&mut self, a: usize, b: usize, action: EdgeAction) {
        let (a, b) = if a <= b { (a, b) } else { (b, a) };
        self.edges.push(LegalEdge { a, b, action });
    }

    fn backbone_node(&mut self, step: usize, gate_coord: usize, site: usize) -> usize {
        let position = self.layout.qubit_position(site);
        self.add_node(LegalNode {
            step,
            gate_coord,
            kind: NodeKind::Backbone,
            branches: vec![Branch { position, op: BranchOp::Full }],
        })
    }

    /// Interior nodes of a model-1 gadget in spine order.
    fn gadget3_stages(&self, gadget: usize) -> Vec<Vec<Branch>> {
        let g = &self.layout.gadgets[gadget];
        let lp: Vec<usize> = g.lower.iter().map(|&s| self.layout.qubit_position(s)).collect();
        let up: Vec<usize> = g.upper.iter().map(|&s| self.layout.qubit_position(s)).collect();
        vec![
            vec![Branch { position: lp[0], op: BranchOp::Proj0 }, Branch { position: up[0], op: BranchOp::Proj1 }],
            vec![Branch { position: lp[1], op: BranchOp::Proj0 }, Branch { position: up[1], op: BranchOp::Proj1Flip }],
        ]
    }

    /// Interior spine nodes of a model-2 gadget: 8 stages walking
    /// qutrit L, qutrit R, qubit, ... across the tracks. The target flip
    /// happens at the middle qutrit's L-to-R transition, stage 5.
    fn gadget23_stages(&self, gadget: usize) -> Vec<Vec<Branch>> {
        let g = &self.layout.gadgets[gadget];
        // (track slot, state index) per stage: u1L u1R u2 u3L u3R u4 u5L u5R
        let slots: [(usize, u8); 8] =
            [(0, 1), (0, 2), (1, 1), (2, 1), (2, 2), (3, 1), (4, 1), (4, 2)];
        slots
            .iter()
            .enumerate()
            .map(|(k, &(slot, state))| {
                let stage = k + 1;
                let upper_op = if stage >= 5 { BranchOp::Proj1Flip } else { BranchOp::Proj1 };
                vec![
                    Branch { position: self.layout.position_of(g.lower[slot], state), op: BranchOp::Proj0 },
                    Branch { position: self.layout.position_of(g.upper[slot], state), op: upper_op },
                ]
            })
            .collect()
    }

    /// Blind-alley nodes: tracks swapped relative to the adjacent spine node.
    fn gadget23_pendants(&self, gadget: usize) -> (Vec<Branch>, Vec<Branch>) {
        let g = &self.layout.gadgets[gadget];
        let entry = vec![
            Branch { position: self.layout.position_of(g.upper[0], 1), op: BranchOp::Proj0 },
            Branch { position: self.layout.position_of(g.lower[0], 1), op: BranchOp::Proj1 },
        ];
        // relative to the exit node's prefix the target flip has already
        // happened, so the lower branch is a plain control projection
        let exit = vec![
            Branch { position: self.layout.position_of(g.upper[4], 2), op: BranchOp::Proj0 },
            Branch { position: self.layout.position_of(g.lower[4], 2), op: BranchOp::Proj1 },
        ];
        (entry, exit)
    }

    /// Emits one gadget's interior, walking spine coordinates `step_of(k)`
    /// for interior stage k = 1..stages, between already-known boundary
    /// nodes. `reversed` walks the interior from the exit side (mirror half).
    fn emit_gadget(
        &mut self,
        gadget: usize,
        gate_coord: usize,
        entry_node: usize,
        exit_node: usize,
        entry_step: usize,
        dir: isize,
        include_pendants: bool,
    ) {
        let stages = match self.layout.model {
            Model::ThreeLocal => self.gadget3_stages(gadget),
            Model::QubitQutrit => self.gadget23_stages(gadget),
        };
        let n_stages = stages.len();
        let actions: Vec<EdgeAction> = match self.layout.model {
            Model::ThreeLocal => vec![EdgeAction::ControlledRoute, EdgeAction::TargetFlip, EdgeAction::ControlledRoute],
            Model::QubitQutrit => vec![
                EdgeAction::Identity,
                EdgeAction::ControlledRoute,
                EdgeAction::Identity,
                EdgeAction::Identity,
                EdgeAction::TargetFlip,
                EdgeAction::Identity,
                EdgeAction::Identity,
                EdgeAction::ControlledRoute,
                EdgeAction::Identity,
            ],
        };
        let mut prev = entry_node;
        for (k, branches) in stages.into_iter().enumerate() {
            let step = (entry_step as isize + dir * (k as isize + 1)) as usize;
            let id = self.add_node(LegalNode {
                step,
                gate_coord,
                kind: NodeKind::GadgetStage { gadget, stage: (k + 1) as u8 },
                branches,
            });
            self.add_edge(prev, id, actions[k]);
            prev = id;
        }
        self.add_edge(prev, exit_node, actions[n_stages]);

        if include_pendants {
            let (entry_b, exit_b) = self.gadget23_pendants(gadget);
            let entry_steps = self.nodes[entry_node].step;
            let id = self.add_node(LegalNode {
                step: entry_steps,
                gate_coord: self.nodes[entry_node].gate_coord,
                kind: NodeKind::Pendant { gadget, at_exit: false },
                branches: entry_b,
            });
            self.add_edge(entry_node, id, EdgeAction::Identity);
            let exit_steps = self.nodes[exit_node].step;
            let id = self.add_node(LegalNode {
                step: exit_steps,
                gate_coord: self.nodes[exit_node].gate_coord,
                kind: NodeKind::Pendant { gadget, at_exit: true },
                branches: exit_b,
            });
            self.add_edge(exit_node, id, EdgeAction::Identity);
        }
    }
}

/// Steps one gate contributes to the walk.
fn gate_steps(model: Model, gate: &Gate) -> usize {
    if gate.is_cnot() {
        match model {
            Model::ThreeLocal => 3,
            Model::QubitQutrit => 9,
        }
    } else {
        1
    }
}

/// Enumerates the graph of states reachable from a correctly initialized
/// start state, with one node per walk coordinate (plus blind-alley pendants
/// in model 2).
pub fn enumerate_legal_graph(layout: &ClockLayout, circuit: &QuantumCircuit) -> Result<LegalGraph> {
    layout.check_circuit(circuit)?;
    let pendants = layout.model == Model::QubitQutrit;
    let mut b = GraphBuilder { layout, nodes: Vec::new(), edges: Vec::new() };

    // half A: walk forward
    let start = b.backbone_node(0, 0, 0);
    let mut spine_front = start;
    let mut step = 0usize;
    for seg in &layout.segments {
        match *seg {
            Segment::Hop { gate_index, from: _, to, half: Half::A } => {
                let node = b.backbone_node(step + 1, gate_index + 1, to);
                b.add_edge(spine_front, node, EdgeAction::Gate(gate_index));
                spine_front = node;
                step += 1;
            }
            Segment::Gadget { gadget_index } if layout.gadgets[gadget_index].half == Half::A => {
                let g = &layout.gadgets[gadget_index];
                let steps = gate_steps(layout.model, &circuit.gates[g.gate_index]);
                let exit_node = b.backbone_node(step + steps, g.gate_index + 1, g.exit);
                b.emit_gadget(gadget_index, g.gate_index, spine_front, exit_node, step, 1, pendants);
                spine_front = exit_node;
                step += steps;
            }
            _ => break, // half B segments handled below
        }
    }
    let line_steps = step;
    let end_node = spine_front;

    let is_cycle = layout.topology == Topology::Cycle;
    if is_cycle {
        // half B: walk the mirror from the shared end back to the start.
        // Mirrored boundary node for gate boundary t has cycle coordinate
        // 2*line_steps - (coordinate of boundary t).
        let mut prev = end_node;
        let b_segments: Vec<&Segment> = layout
            .segments
            .iter()
            .filter(|s| match **s {
                Segment::Hop { half, .. } => half == Half::B,
                Segment::Gadget { gadget_index } => layout.gadgets[gadget_index].half == Half::B,
            })
            .collect();
        let cycle_len = 2 * line_steps;
        let mut coord_prev = line_steps;
        for seg in b_segments {
            match *seg {
                Segment::Hop { gate_index, from, to: _, half: Half::B } => {
                    let coord = coord_prev + 1;
                    if from == 0 {
                        b.add_edge(prev, start, EdgeAction::Gate(gate_index));
                    } else {
                        let node = b.backbone_node(coord, gate_index, from);
                        b.add_edge(prev, node, EdgeAction::Gate(gate_index));
                        prev = node;
                    }
                    coord_prev = coord;
                }
                Segment::Gadget { gadget_index } => {
                    let g = &layout.gadgets[gadget_index];
                    let steps = gate_steps(layout.model, &circuit.gates[g.gate_index]);
                    let exit_node = prev; // walked into the gadget from its exit
                    let entry_coord = coord_prev + steps;
                    let entry_node = if g.entry == 0 {
                        start
                    } else {
                        b.backbone_node(entry_coord % cycle_len, g.gate_index, g.entry)
                    };
                    b.emit_gadget(
                        gadget_index,
                        g.gate_index,
                        entry_node,
                        exit_node,
                        entry_coord,
                        -1,
                        pendants,
                    );
                    prev = entry_node;
                    coord_prev = entry_coord;
                }
                _ => unreachable!(),
            }
        }
    }

    let spine_len = if is_cycle { 2 * line_steps } else { line_steps + 1 };

    // success region: the farther two-thirds of the walk
    let mut success = Vec::new();
    for (i, node) in b.nodes.iter().enumerate() {
        if matches!(node.kind, NodeKind::Pendant { .. }) {
            continue;
        }
        let in_region = if is_cycle {
            let cycle = 2 * line_steps;
            let d = node.step.min(cycle - node.step);
            (d as f64) >= (cycle as f64) / 6.0
        } else {
            (node.step as f64) >= (line_steps as f64) / 3.0
        };
        if in_region {
            success.push(i);
        }
    }
    success.sort_unstable();

    Ok(LegalGraph {
        topology: layout.topology,
        nodes: b.nodes,
        edges: b.edges,
        start_node: start,
        success_set: success,
        spine_len,
    })
}

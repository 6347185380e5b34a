//! Schrödinger evolution, clock measurement, the random-time measurement
//! protocol, and adiabatic sweeps.
//!
//! Evolution is exact: dense spectral decomposition up to [`D_DENSE`],
//! Lanczos/Krylov propagation with step-halving self-consistency above it.
//! The protocol runner compiles a circuit onto the closed clock cycle,
//! evolves the initial train state for a uniformly random time, and measures
//! how much probability the train carries in the success region.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::circuit::{apply_circuit_prefix, pad_with_identities, Gate, GateKind, QuantumCircuit, WorkState};
use crate::error::{Error, Result};
use crate::hamiltonian::{build_h23, build_h3s, interpolate};
use crate::layout::{
    build_layout_3local, build_layout_qutrit, close_cycle, enumerate_legal_graph, ClockLayout,
    LegalGraph, Model, NodeKind,
};
use crate::operator::{Rep, SparseHermitianOperator};

/// Largest dimension evolved by dense spectral decomposition; beyond this,
/// `evolve` switches to Krylov propagation.
pub const D_DENSE: usize = 4096;
/// Target accuracy of iterative propagation (norm drift and step-doubling
/// self-consistency).
pub const EVOLVE_TOL: f64 = 1e-9;

/// State vector over the work ⊗ clock basis of one representation.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemState {
    pub rep: Rep,
    pub amplitudes: DVector<C64>,
    /// Total evolution time accumulated by `evolve` calls.
    pub time: f64,
}

impl SystemState {
    /// Basis state |index⟩.
    pub fn basis_state(dim: usize, index: usize, rep: Rep) -> SystemState {
        assert!(index < dim, "basis index {index} outside dimension {dim}");
        let mut amplitudes = DVector::zeros(dim);
        amplitudes[index] = C64::new(1.0, 0.0);
        SystemState { rep, amplitudes, time: 0.0 }
    }

    /// |work⟩ ⊗ |train at `position`⟩ in the single-train representation.
    pub fn from_work_and_position(
        work: &WorkState,
        layout: &ClockLayout,
        position: usize,
    ) -> Result<SystemState> {
        let p = layout.train_positions();
        if work.n != layout.n {
            return Err(Error::DimensionMismatch { expected: 1 << layout.n, got: 1 << work.n });
        }
        if position >= p {
            return Err(Error::Domain(format!("train position {position} outside 0..{p}")));
        }
        let mut amplitudes = DVector::zeros((1 << work.n) * p);
        for (w, &amp) in work.amps.iter().enumerate() {
            amplitudes[w * p + position] = amp;
        }
        Ok(SystemState { rep: Rep::SingleTrain, amplitudes, time: 0.0 })
    }

    pub fn from_amplitudes(rep: Rep, amplitudes: DVector<C64>) -> Result<SystemState> {
        let norm = amplitudes.norm();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(Error::Domain(format!("state norm {norm} != 1")));
        }
        Ok(SystemState { rep, amplitudes, time: 0.0 })
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }

    pub fn inner(&self, other: &SystemState) -> C64 {
        self.amplitudes.dotc(&other.amplitudes)
    }
}

fn check_compatible(h: &SparseHermitianOperator, state: &SystemState) -> Result<()> {
    if h.rep() != state.rep {
        return Err(Error::RepMismatch {
            expected: h.rep().name().to_string(),
            got: state.rep.name().to_string(),
        });
    }
    if h.dim() != state.dim() {
        return Err(Error::DimensionMismatch { expected: h.dim(), got: state.dim() });
    }
    Ok(())
}

/// Dense spectral decomposition of a Hermitian operator, reusable across
/// many evolution times.
pub struct Propagator {
    rep: Rep,
    eigenvalues: DVector<f64>,
    basis: DMatrix<C64>,
}

impl Propagator {
    /// Diagonalizes the operator (O(dim³); intended for dim ≲ a few
    /// thousand).
    pub fn new(h: &SparseHermitianOperator) -> Propagator {
        let eig = h.to_dense().symmetric_eigen();
        Propagator { rep: h.rep(), eigenvalues: eig.eigenvalues, basis: eig.eigenvectors }
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn rep(&self) -> Rep {
        self.rep
    }

    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.eigenvalues
    }

    /// Orthonormal eigenbasis; column j pairs with `eigenvalues()[j]`.
    pub fn basis(&self) -> &DMatrix<C64> {
        &self.basis
    }

    /// e^{−iHτ}|state⟩ through the eigenbasis.
    pub fn apply(&self, state: &SystemState, tau: f64) -> Result<SystemState> {
        if self.rep != state.rep {
            return Err(Error::RepMismatch {
                expected: self.rep.name().to_string(),
                got: state.rep.name().to_string(),
            });
        }
        if self.dim() != state.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: state.dim() });
        }
        let mut coeffs = self.basis.adjoint() * &state.amplitudes;
        for (j, c) in coeffs.iter_mut().enumerate() {
            *c *= C64::from_polar(1.0, -self.eigenvalues[j] * tau);
        }
        Ok(SystemState {
            rep: state.rep,
            amplitudes: &self.basis * coeffs,
            time: state.time + tau,
        })
    }
}

/// One Lanczos approximation of e^{−iHdt}|v⟩ in a Krylov subspace of
/// dimension ≤ m_max, with full reorthogonalization.
fn lanczos_expm(h: &SparseHermitianOperator, v: &DVector<C64>, dt: f64, m_max: usize) -> DVector<C64> {
    let beta0 = v.norm();
    if beta0 < 1e-300 {
        return v.clone();
    }
    let mut basis: Vec<DVector<C64>> = vec![v * C64::new(1.0 / beta0, 0.0)];
    let mut alphas: Vec<f64> = Vec::new();
    let mut betas: Vec<f64> = Vec::new();
    for j in 0..m_max {
        let mut w = DVector::from_vec(h.apply(basis[j].as_slice()));
        if j > 0 {
            w -= &basis[j - 1] * C64::new(betas[j - 1], 0.0);
        }
        let alpha = basis[j].dotc(&w).re;
        alphas.push(alpha);
        w -= &basis[j] * C64::new(alpha, 0.0);
        // two reorthogonalization passes; one pass leaves drift that caps
        // the attainable accuracy
        for _ in 0..2 {
            for u in &basis {
                let overlap = u.dotc(&w);
                w -= u * overlap;
            }
        }
        let beta = w.norm();
        if j + 1 == m_max || beta < 1e-12 {
            break;
        }
        betas.push(beta);
        basis.push(w * C64::new(1.0 / beta, 0.0));
    }
    let m = alphas.len();
    let mut tri = DMatrix::<f64>::zeros(m, m);
    for j in 0..m {
        tri[(j, j)] = alphas[j];
        if j + 1 < m {
            tri[(j, j + 1)] = betas[j];
            tri[(j + 1, j)] = betas[j];
        }
    }
    let eig = tri.symmetric_eigen();
    let mut out = DVector::<C64>::zeros(v.len());
    for j in 0..m {
        // y_j = Σ_l Q_{jl} e^{−iλ_l dt} Q_{0l}, scaled back by β₀
        let mut y = C64::new(0.0, 0.0);
        for l in 0..m {
            y += C64::from_polar(eig.eigenvectors[(j, l)] * eig.eigenvectors[(0, l)], -eig.eigenvalues[l] * dt);
        }
        out += &basis[j] * (y * beta0);
    }
    out
}

/// Krylov propagation with step-halving until the result is self-consistent
/// (norm drift and step-doubling difference both ≤ tol).
fn evolve_krylov(
    h: &SparseHermitianOperator,
    state: &SystemState,
    tau: f64,
    tol: f64,
) -> Result<SystemState> {
    const KRYLOV_M: usize = 30;
    const MAX_REFINE: usize = 22;
    let scale = h.row_sum_norm().max(1e-12);
    let mut nsteps = ((tau * scale / 5.0).ceil() as usize).max(1);
    let norm0 = state.amplitudes.norm();
    let mut prev: Option<DVector<C64>> = None;
    let mut best = f64::INFINITY;
    for _ in 0..MAX_REFINE {
        let dt = tau / nsteps as f64;
        let mut psi = state.amplitudes.clone();
        for _ in 0..nsteps {
            psi = lanczos_expm(h, &psi, dt, KRYLOV_M);
        }
        let drift = (psi.norm() - norm0).abs();
        if let Some(coarse) = &prev {
            let residual = (&psi - coarse).norm().max(drift);
            best = best.min(residual);
            if residual <= tol {
                return Ok(SystemState { rep: state.rep, amplitudes: psi, time: state.time + tau });
            }
        }
        prev = Some(psi);
        nsteps *= 2;
    }
    Err(Error::NonConvergence { residual: best, tol })
}

/// e^{−iHτ}|state⟩. Dense spectral route for dim ≤ [`D_DENSE`], Krylov
/// propagation at [`EVOLVE_TOL`] beyond.
pub fn evolve(h: &SparseHermitianOperator, state: &SystemState, tau: f64) -> Result<SystemState> {
    check_compatible(h, state)?;
    if tau < 0.0 {
        return Err(Error::Domain(format!("evolution time must be nonnegative, got {tau}")));
    }
    if tau == 0.0 {
        return Ok(state.clone());
    }
    if h.dim() <= D_DENSE {
        Propagator::new(h).apply(state, tau)
    } else {
        evolve_krylov(h, state, tau, EVOLVE_TOL)
    }
}

/// Marginal probability of finding the train at each position (work register
/// traced out). Single-train representation only.
pub fn train_distribution(state: &SystemState, layout: &ClockLayout) -> Result<Vec<f64>> {
    if state.rep != Rep::SingleTrain {
        return Err(Error::RepMismatch {
            expected: Rep::SingleTrain.name().to_string(),
            got: state.rep.name().to_string(),
        });
    }
    let p = layout.train_positions();
    let expected = (1usize << layout.n) * p;
    if state.dim() != expected {
        return Err(Error::DimensionMismatch { expected, got: state.dim() });
    }
    let mut out = vec![0.0; p];
    for w in 0..(1usize << layout.n) {
        for (k, slot) in out.iter_mut().enumerate() {
            *slot += state.amplitudes[w * p + k].norm_sqr();
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ProtocolMode {
    MonteCarlo,
    ExactAverage,
}

/// Parameters of the random-time measurement protocol.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ProtocolConfig {
    pub model: Model,
    pub mode: ProtocolMode,
    /// Evolution-time cap; `None` uses [`default_tau_max`] of the cycle.
    pub tau_max: Option<f64>,
    pub samples: usize,
    pub seed: u64,
}

impl ProtocolConfig {
    pub fn exact_average(model: Model) -> ProtocolConfig {
        ProtocolConfig { model, mode: ProtocolMode::ExactAverage, tau_max: None, samples: 1, seed: 0 }
    }

    pub fn monte_carlo(model: Model, samples: usize, seed: u64) -> ProtocolConfig {
        ProtocolConfig { model, mode: ProtocolMode::MonteCarlo, tau_max: None, samples, seed }
    }

    fn validate(&self) -> Result<()> {
        if self.samples == 0 {
            return Err(Error::Domain("protocol needs at least one sample".into()));
        }
        if let Some(t) = self.tau_max {
            if !(t > 0.0) {
                return Err(Error::Domain(format!("tau_max must be positive, got {t}")));
            }
        }
        Ok(())
    }
}

/// Default evolution-time cap 20·Ñ·(ln Ñ)² for a cycle of Ñ nodes.
pub fn default_tau_max(cycle_length: usize) -> f64 {
    let n = cycle_length as f64;
    20.0 * n * n.ln().powi(2)
}

/// One Monte Carlo draw: evolution time and the success-region mass found.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SampleRecord {
    pub tau: f64,
    pub success_mass: f64,
}

/// Outcome of [`run_protocol`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProtocolResult {
    pub p_success: f64,
    /// Standard error of the Monte Carlo mean; absent in exact mode.
    pub stderr: Option<f64>,
    /// Fidelity of the post-success work state with the circuit output.
    pub conditional_fidelity: f64,
    pub tau_max: f64,
    pub samples: usize,
    pub seed: u64,
    pub model: Model,
    pub cycle_length: usize,
    pub records: Vec<SampleRecord>,
}

/// A circuit compiled onto the closed clock cycle, ready to evolve.
pub struct ProtocolInstance {
    /// Extended gate list actually laid out (original + appended identities).
    pub circuit: QuantumCircuit,
    pub layout: ClockLayout,
    pub legal: LegalGraph,
    pub hamiltonian: SparseHermitianOperator,
    /// Index of |0…0⟩ ⊗ |train at start⟩ in the single-train basis.
    pub start_index: usize,
    /// Train positions making up the success region.
    pub success_positions: Vec<usize>,
    /// Circuit output U|0…0⟩ the success-region work state must match.
    pub target: WorkState,
    /// Ñ: number of spine nodes around the cycle.
    pub cycle_length: usize,
}

/// Pads and closes a circuit onto the cycle so that every node of the
/// success region lies beyond the original gates in both walk directions.
///
/// The identity padding appended on top of the standard one-third/two-thirds
/// split stretches the cycle to three times the padded circuit's walk
/// length; the success region (ring distance ≥ Ñ/6) then starts exactly at
/// the padded circuit's end, where the work register already holds the
/// output.
pub fn prepare_protocol_instance(circuit: &QuantumCircuit, model: Model) -> Result<ProtocolInstance> {
    let (extended, layout) = match model {
        Model::ThreeLocal => {
            let padded = pad_with_identities(circuit);
            let line = build_layout_3local(&padded);
            let legal_line = enumerate_legal_graph(&line, &padded)?;
            let walk_steps = legal_line.spine_len - 1;
            let mut gates = padded.gates.clone();
            gates.extend((0..2 * walk_steps).map(|_| Gate::single(GateKind::I, 0)));
            let extended = QuantumCircuit::new(padded.n, gates)?;
            let layout = close_cycle(&build_layout_3local(&extended))?;
            (extended, layout)
        }
        Model::QubitQutrit => {
            let base = build_layout_qutrit(circuit)?;
            let legal_base = enumerate_legal_graph(&base, &base.circuit())?;
            let walk_steps = legal_base.spine_len / 2;
            let mut gates = circuit.gates.clone();
            gates.extend((0..2 * walk_steps).map(|_| Gate::single(GateKind::I, 0)));
            let layout = build_layout_qutrit(&QuantumCircuit::new(circuit.n, gates)?)?;
            (layout.circuit(), layout)
        }
    };
    let legal = enumerate_legal_graph(&layout, &extended)?;
    let hamiltonian = match model {
        Model::ThreeLocal => build_h3s(&extended, &layout, Rep::SingleTrain)?.assemble()?,
        Model::QubitQutrit => build_h23(&extended, &layout, Rep::SingleTrain)?.assemble()?,
    };
    let mut success_positions = Vec::with_capacity(legal.success_set.len());
    for &node in &legal.success_set {
        let n = &legal.nodes[node];
        debug_assert!(matches!(n.kind, NodeKind::Backbone), "success region is backbone-only");
        debug_assert_eq!(n.branches.len(), 1);
        success_positions.push(n.branches[0].position);
    }
    let target = apply_circuit_prefix(circuit, circuit.len(), &WorkState::zero(circuit.n))?;
    let start_index = layout.qubit_position(layout.start_site());
    let cycle_length = legal.spine_len;
    Ok(ProtocolInstance {
        circuit: extended,
        layout,
        legal,
        hamiltonian,
        start_index,
        success_positions,
        target,
        cycle_length,
    })
}

/// (1/T)∫₀ᵀ e^{iΔτ} dτ, the phase average entering time-averaged quadratic
/// forms.
fn phase_average(delta: f64, t: f64) -> C64 {
    let x = delta * t;
    if x.abs() <= 1e-12 {
        C64::new(1.0, 0.5 * x)
    } else {
        C64::new(x.sin() / x, (1.0 - x.cos()) / x)
    }
}

struct MeasurementMatrices {
    /// Success rows of the eigenbasis: ⟨w, m|v_j⟩ for m in the region.
    region: DMatrix<C64>,
    /// Target-contracted rows: ⟨target, m|v_j⟩ for m in the region.
    good: DMatrix<C64>,
    /// ⟨v_j|ψ₀⟩.
    start: DVector<C64>,
}

fn measurement_matrices(inst: &ProtocolInstance, prop: &Propagator) -> MeasurementMatrices {
    let p = inst.layout.train_positions();
    let wdim = 1usize << inst.layout.n;
    let dim = prop.dim();
    let v = prop.basis();
    let rows: Vec<usize> = (0..wdim)
        .flat_map(|w| inst.success_positions.iter().map(move |&m| w * p + m))
        .collect();
    let region = DMatrix::from_fn(rows.len(), dim, |r, j| v[(rows[r], j)]);
    let npos = inst.success_positions.len();
    let good = DMatrix::from_fn(npos, dim, |r, j| {
        let m = inst.success_positions[r];
        (0..wdim).map(|w| inst.target.amps[w].conj() * v[(w * p + m, j)]).sum()
    });
    let start = DVector::from_fn(dim, |j, _| v[(inst.start_index, j)].conj());
    MeasurementMatrices { region, good, start }
}

/// Runs the random-time measurement protocol and reports success statistics.
///
/// Monte Carlo mode draws each sample's time from a counter-seeded stream
/// (deterministic for a given seed, independent of thread count); exact
/// mode evaluates the time-averaged quadratic forms in the eigenbasis.
pub fn run_protocol(circuit: &QuantumCircuit, config: &ProtocolConfig) -> Result<ProtocolResult> {
    config.validate()?;
    let inst = prepare_protocol_instance(circuit, config.model)?;
    let tau_max = config.tau_max.unwrap_or_else(|| default_tau_max(inst.cycle_length));
    if !(tau_max > 0.0) {
        return Err(Error::Domain(format!("tau_max must be positive, got {tau_max}")));
    }
    let prop = Propagator::new(&inst.hamiltonian);
    let mm = measurement_matrices(&inst, &prop);
    let lambda = prop.eigenvalues();
    let dim = prop.dim();

    let (p_success, stderr, conditional_fidelity, records) = match config.mode {
        ProtocolMode::ExactAverage => {
            // p̄ = Σ_{jk} conj(a_j) a_k ⟨e^{i(λ_j−λ_k)τ}⟩_T M_{jk}
            let m_region = mm.region.adjoint() * &mm.region;
            let m_good = mm.good.adjoint() * &mm.good;
            let mut mass = C64::new(0.0, 0.0);
            let mut good = C64::new(0.0, 0.0);
            for j in 0..dim {
                for k in 0..dim {
                    let weight = mm.start[j].conj() * mm.start[k]
                        * phase_average(lambda[j] - lambda[k], tau_max);
                    mass += weight * m_region[(j, k)];
                    good += weight * m_good[(j, k)];
                }
            }
            let mass = mass.re.clamp(0.0, 1.0);
            let fidelity = if mass > 1e-12 { (good.re / mass).clamp(0.0, 1.0) } else { 0.0 };
            (mass, None, fidelity, Vec::new())
        }
        ProtocolMode::MonteCarlo => {
            let per_sample: Vec<(f64, f64, f64)> = (0..config.samples)
                .into_par_iter()
                .map(|i| {
                    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
                    rng.set_stream(i as u64);
                    let tau: f64 = rng.gen::<f64>() * tau_max;
                    let coeffs = DVector::from_fn(dim, |j, _| {
                        mm.start[j] * C64::from_polar(1.0, -lambda[j] * tau)
                    });
                    let mass = (&mm.region * &coeffs).norm_squared();
                    let good = (&mm.good * &coeffs).norm_squared();
                    (tau, mass, good)
                })
                .collect();
            let n = per_sample.len() as f64;
            let mean = per_sample.iter().map(|r| r.1).sum::<f64>() / n;
            let stderr = if per_sample.len() > 1 {
                let var = per_sample.iter().map(|r| (r.1 - mean).powi(2)).sum::<f64>()
                    / (n * (n - 1.0));
                Some(var.sqrt())
            } else {
                None
            };
            let total_mass: f64 = per_sample.iter().map(|r| r.1).sum();
            let total_good: f64 = per_sample.iter().map(|r| r.2).sum();
            let fidelity = if total_mass > 1e-12 {
                (total_good / total_mass).clamp(0.0, 1.0)
            } else {
                0.0
            };
            let records = per_sample
                .iter()
                .map(|&(tau, success_mass, _)| SampleRecord { tau, success_mass })
                .collect();
            (mean.clamp(0.0, 1.0), stderr, fidelity, records)
        }
    };

    Ok(ProtocolResult {
        p_success,
        stderr,
        conditional_fidelity,
        tau_max,
        samples: config.samples,
        seed: config.seed,
        model: config.model,
        cycle_length: inst.cycle_length,
        records,
    })
}

/// Final state of a piecewise-constant adiabatic sweep and its overlap with
/// the ground space of the final Hamiltonian.
#[derive(Debug, Clone)]
pub struct SweepResult {
    pub final_state: SystemState,
    pub ground_overlap: f64,
    pub ground_energy: f64,
}

/// Evolves under the linear interpolation (1−s)·hInit + s·hFinal, stepping
/// s through midpoints of `steps` equal intervals over total time `t_total`.
pub fn adiabatic_sweep(
    h_init: &SparseHermitianOperator,
    h_final: &SparseHermitianOperator,
    t_total: f64,
    steps: usize,
    state: &SystemState,
) -> Result<SweepResult> {
    h_init.check_same_space(h_final)?;
    check_compatible(h_init, state)?;
    if steps == 0 {
        return Err(Error::Domain("adiabatic sweep needs at least one step".into()));
    }
    if t_total < 0.0 {
        return Err(Error::Domain(format!("sweep time must be nonnegative, got {t_total}")));
    }
    let dt = t_total / steps as f64;
    let mut current = state.clone();
    for k in 0..steps {
        let s = (k as f64 + 0.5) / steps as f64;
        let hk = interpolate(h_init, h_final, s)?;
        current = evolve(&hk, &current, dt)?;
    }
    let prop = Propagator::new(h_final);
    let ground_energy = prop.eigenvalues().min();
    let coeffs = prop.basis().adjoint() * &current.amplitudes;
    let ground_overlap = (0..prop.dim())
        .filter(|&j| prop.eigenvalues()[j] <= ground_energy + 1e-9)
        .map(|j| coeffs[j].norm_sqr())
        .sum();
    Ok(SweepResult { final_state: current, ground_overlap, ground_energy })
}

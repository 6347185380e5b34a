//! Structural verification: explicit embeddings of the legal subspace,
//! operator restrictions, frustration-freeness residuals, invariance
//! (leakage) checks, and blockwise sector gap scans.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::circuit::{QuantumCircuit, WorkState};
use crate::dynamics::SystemState;
use crate::error::{Error, Result};
use crate::hamiltonian::{build_h3s, build_h_init, build_h_clock, train_number};
use crate::layout::{BranchOp, ClockLayout, LegalGraph, Model, NodeKind};
use crate::operator::{Rep, SparseHermitianOperator};

/// Orthonormal single-train vectors spanning the legal subspace for one
/// initial work state, one column per legal-graph node.
pub struct EmbeddedBasis {
    rep: Rep,
    columns: DMatrix<C64>,
    /// Nodes where one routing branch carries zero weight because the
    /// initial state has no amplitude on that control value.
    pub degenerate_nodes: Vec<usize>,
}

impl EmbeddedBasis {
    /// Wraps explicit orthonormal columns (Gram defect ≤ 1e−12 enforced).
    pub fn from_columns(rep: Rep, columns: DMatrix<C64>) -> Result<EmbeddedBasis> {
        let basis = EmbeddedBasis { rep, columns, degenerate_nodes: Vec::new() };
        let defect = basis.gram_defect();
        if defect > 1e-12 {
            return Err(Error::Domain(format!(
                "basis columns are not orthonormal (Gram defect {defect:.3e})"
            )));
        }
        Ok(basis)
    }

    pub fn rep(&self) -> Rep {
        self.rep
    }

    /// Full-space dimension.
    pub fn dim(&self) -> usize {
        self.columns.nrows()
    }

    /// Number of basis vectors.
    pub fn len(&self) -> usize {
        self.columns.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.ncols() == 0
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.columns
    }

    pub fn vector(&self, node: usize) -> DVector<C64> {
        self.columns.column(node).into_owned()
    }

    /// max |⟨v_a|v_b⟩ − δ_ab|.
    pub fn gram_defect(&self) -> f64 {
        let gram = self.columns.adjoint() * &self.columns;
        let mut worst = 0.0f64;
        for a in 0..gram.nrows() {
            for b in 0..gram.ncols() {
                let want = if a == b { 1.0 } else { 0.0 };
                worst = worst.max((gram[(a, b)] - C64::new(want, 0.0)).norm());
            }
        }
        worst
    }
}

fn control_mask(n: usize, qubit: usize) -> usize {
    1 << (n - 1 - qubit)
}

/// Applies a branch's work transformation to a prefix state.
fn branch_work(op: BranchOp, work: &[C64], n: usize, control: usize, target: usize) -> Vec<C64> {
    let cmask = control_mask(n, control);
    let tmask = control_mask(n, target);
    let mut out = vec![C64::new(0.0, 0.0); work.len()];
    for (w, &amp) in work.iter().enumerate() {
        match op {
            BranchOp::Full => out[w] = amp,
            BranchOp::Proj0 => {
                if w & cmask == 0 {
                    out[w] = amp;
                }
            }
            BranchOp::Proj1 => {
                if w & cmask != 0 {
                    out[w] = amp;
                }
            }
            BranchOp::Proj1Flip => {
                if w & cmask != 0 {
                    out[w ^ tmask] = amp;
                }
            }
        }
    }
    out
}

/// Builds the explicit legal-subspace basis: backbone nodes carry the
/// prefix state on their single train position; switch-interior and pendant
/// nodes superpose their track branches with amplitudes read off the
/// control qubit. Vectors are normalized per node; a node whose upper or
/// lower branch vanishes (control amplitude zero) is flagged, not rejected.
pub fn embed_legal_basis(
    graph: &LegalGraph,
    layout: &ClockLayout,
    circuit: &QuantumCircuit,
    phi0: &WorkState,
) -> Result<EmbeddedBasis> {
    layout.check_circuit(circuit)?;
    if phi0.n != circuit.n {
        return Err(Error::DimensionMismatch { expected: 1 << circuit.n, got: 1 << phi0.n });
    }
    if (phi0.norm() - 1.0).abs() > 1e-10 {
        return Err(Error::Domain(format!("initial work state norm {} != 1", phi0.norm())));
    }
    let n = circuit.n;
    let wdim = 1usize << n;
    let p = layout.train_positions();
    let dim = wdim * p;
    let gates = layout.gates();

    // prefix[g]: work state after the first g gates of the layout's list
    let mut prefixes: Vec<Vec<C64>> = Vec::with_capacity(gates.len() + 1);
    let mut current = WorkState { n, amps: phi0.amps.clone() };
    prefixes.push(current.amps.clone());
    for g in 1..=gates.len() {
        current = crate::circuit::apply_circuit_prefix(
            &QuantumCircuit { n, gates: vec![gates[g - 1].clone()] },
            1,
            &current,
        )?;
        prefixes.push(current.amps.clone());
    }

    let mut columns = DMatrix::<C64>::zeros(dim, graph.nodes.len());
    let mut degenerate_nodes = Vec::new();
    for (idx, node) in graph.nodes.iter().enumerate() {
        let prefix = &prefixes[node.gate_coord];
        let gadget = match node.kind {
            NodeKind::Backbone => None,
            NodeKind::GadgetStage { gadget, .. } | NodeKind::Pendant { gadget, .. } => {
                Some(&layout.gadgets[gadget])
            }
        };
        let mut degenerate = false;
        for branch in &node.branches {
            let work = match gadget {
                None => branch_work(branch.op, prefix, n, 0, 0),
                Some(g) => branch_work(branch.op, prefix, n, g.control, g.target),
            };
            let weight: f64 = work.iter().map(|a| a.norm_sqr()).sum();
            if node.branches.len() > 1 && weight < 1e-24 {
                degenerate = true;
            }
            for (w, amp) in work.into_iter().enumerate() {
                columns[(w * p + branch.position, idx)] += amp;
            }
        }
        let norm = columns.column(idx).norm();
        if norm < 1e-12 {
            return Err(Error::Domain(format!("legal node {idx} embeds to the zero vector")));
        }
        let inv = C64::new(1.0 / norm, 0.0);
        for r in 0..dim {
            columns[(r, idx)] *= inv;
        }
        if degenerate {
            degenerate_nodes.push(idx);
        }
    }
    let basis = EmbeddedBasis { rep: Rep::SingleTrain, columns, degenerate_nodes };
    let defect = basis.gram_defect();
    if defect > 1e-12 {
        return Err(Error::Domain(format!(
            "embedded basis is not orthonormal (Gram defect {defect:.3e})"
        )));
    }
    Ok(basis)
}

fn check_operator_basis(h: &SparseHermitianOperator, basis: &EmbeddedBasis) -> Result<()> {
    if h.rep() != basis.rep() {
        return Err(Error::RepMismatch {
            expected: h.rep().name().to_string(),
            got: basis.rep().name().to_string(),
        });
    }
    if h.dim() != basis.dim() {
        return Err(Error::DimensionMismatch { expected: h.dim(), got: basis.dim() });
    }
    Ok(())
}

fn apply_to_columns(h: &SparseHermitianOperator, basis: &EmbeddedBasis) -> DMatrix<C64> {
    let mut out = DMatrix::<C64>::zeros(basis.dim(), basis.len());
    for a in 0..basis.len() {
        let col = basis.vector(a);
        let image = h.apply(col.as_slice());
        for (r, v) in image.into_iter().enumerate() {
            out[(r, a)] = v;
        }
    }
    out
}

/// M_ab = ⟨v_a|H|v_b⟩ over the embedded basis. Errors if the result is not
/// Hermitian to 1e−10 (which would indicate a broken basis).
pub fn restrict(h: &SparseHermitianOperator, basis: &EmbeddedBasis) -> Result<DMatrix<C64>> {
    check_operator_basis(h, basis)?;
    let m = basis.matrix().adjoint() * apply_to_columns(h, basis);
    let mut asym = 0.0f64;
    for a in 0..m.nrows() {
        for b in a..m.ncols() {
            asym = asym.max((m[(a, b)] - m[(b, a)].conj()).norm());
        }
    }
    if asym > 1e-10 {
        return Err(Error::NotHermitian(asym));
    }
    Ok(m)
}

/// Uniform superposition over the embedded legal nodes.
pub fn history_state(
    graph: &LegalGraph,
    layout: &ClockLayout,
    circuit: &QuantumCircuit,
    phi0: &WorkState,
) -> Result<SystemState> {
    let basis = embed_legal_basis(graph, layout, circuit, phi0)?;
    let mut amps = DVector::<C64>::zeros(basis.dim());
    for a in 0..basis.len() {
        amps += basis.vector(a);
    }
    let norm = amps.norm();
    amps /= C64::new(norm, 0.0);
    Ok(SystemState { rep: basis.rep(), amplitudes: amps, time: 0.0 })
}

/// ‖H|ψ⟩‖ — zero iff the state sits in the operator's kernel, which for a
/// sum of projectors certifies frustration-freeness.
pub fn check_frustration_free(h: &SparseHermitianOperator, state: &SystemState) -> Result<f64> {
    if h.rep() != state.rep {
        return Err(Error::RepMismatch {
            expected: h.rep().name().to_string(),
            got: state.rep.name().to_string(),
        });
    }
    if h.dim() != state.dim() {
        return Err(Error::DimensionMismatch { expected: h.dim(), got: state.dim() });
    }
    let image = h.apply(state.amplitudes.as_slice());
    Ok(DVector::from_vec(image).norm())
}

/// Frobenius norm of (𝟙−P)HP where P projects onto the embedded basis:
/// how much the operator leaks out of the legal subspace.
pub fn check_invariance(h: &SparseHermitianOperator, basis: &EmbeddedBasis) -> Result<f64> {
    check_operator_basis(h, basis)?;
    let images = apply_to_columns(h, basis);
    let coeffs = basis.matrix().adjoint() * &images;
    let residual = images - basis.matrix() * coeffs;
    Ok(residual.norm())
}

/// Options for [`sector_gap_scan`].
#[derive(Debug, Clone, Copy)]
pub struct SectorScanOptions {
    /// Refuse to scan if the full-clock dimension exceeds this.
    pub max_full_dim: usize,
    /// Number of interpolation points (inclusive endpoints) on the
    /// adiabatic path.
    pub s_samples: usize,
    /// Sector blocks up to this dimension are diagonalized densely; larger
    /// ones use iterative extremal eigenvalues.
    pub dense_cutoff: usize,
    /// Accuracy of the iterative minimum-eigenvalue computation.
    pub lanczos_tol: f64,
}

impl Default for SectorScanOptions {
    fn default() -> Self {
        SectorScanOptions {
            max_full_dim: 1 << 14,
            s_samples: 21,
            dense_cutoff: 600,
            lanczos_tol: 1e-10,
        }
    }
}

/// Spectral floor of one invariant block.
#[derive(Debug, Clone, Serialize)]
pub struct SectorReport {
    pub train_count: usize,
    /// `legal:<bits>` or `junk` for single-train blocks; absent for
    /// multi-train blocks.
    pub phi0_sector: Option<String>,
    pub dim: usize,
    pub ground_energy: f64,
    /// Smallest eigenvalue above 1e−10; absent if the block vanishes
    /// identically.
    pub min_nonzero_energy: Option<f64>,
    /// Number of numerically zero eigenvalues.
    pub zero_modes: usize,
    /// Smallest fraction, over the zero modes, of their probability mass
    /// on configurations whose trains are all parked inside switch
    /// interiors. ≈1 certifies the kernel consists of wrong-track states.
    pub kernel_parked_mass: Option<f64>,
    /// Whether the model claims a positive energy floor above the
    /// certified wrong-track kernel (false for the good sector, the
    /// train-free sector, and the switch-interior complement).
    pub claimed_positive: bool,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct AqcPoint {
    pub s: f64,
    pub gap: f64,
}

/// Blockwise spectral summary of H_3S + H_clock + H_datainit plus the
/// adiabatic-path gap in the good sector.
#[derive(Debug, Clone, Serialize)]
pub struct GapReport {
    pub cycle_length: usize,
    pub full_dim: usize,
    pub sectors: Vec<SectorReport>,
    pub aqc_path: Vec<AqcPoint>,
}

impl GapReport {
    /// Minimum energy above the certified kernel over the blocks that
    /// claim a positive floor.
    pub fn min_claimed_energy(&self) -> Option<f64> {
        self.sectors
            .iter()
            .filter(|s| s.claimed_positive)
            .filter_map(|s| {
                if s.zero_modes == 0 { Some(s.ground_energy) } else { s.min_nonzero_energy }
            })
            .min_by(f64::total_cmp)
    }

    /// True when every zero mode found in a claiming sector is certified
    /// as a parked wrong-track state (mass ≥ 1−1e−9 on switch interiors).
    pub fn kernel_certified(&self) -> bool {
        self.sectors
            .iter()
            .filter(|s| s.claimed_positive && s.zero_modes > 0)
            .all(|s| s.kernel_parked_mass.is_some_and(|m| m >= 1.0 - 1e-9))
    }

    /// Minimum gap along the adiabatic path.
    pub fn min_aqc_gap(&self) -> Option<f64> {
        self.aqc_path.iter().map(|p| p.gap).min_by(f64::total_cmp)
    }
}

/// Smallest eigenpair of a Hermitian block in the orthogonal complement of
/// `deflate`, via Lanczos with full reorthogonalization.
fn lowest_eigenpair<F>(
    dim: usize,
    matvec: &F,
    deflate: &[DVector<C64>],
    tol: f64,
) -> Result<(f64, DVector<C64>)>
where
    F: Fn(&DVector<C64>) -> DVector<C64>,
{
    let project_out = |w: &mut DVector<C64>, basis: &[DVector<C64>]| {
        for u in basis {
            let overlap = u.dotc(w);
            *w -= u * overlap;
        }
    };
    let mut rng = ChaCha8Rng::seed_from_u64(42 + deflate.len() as u64);
    let mut v0 =
        DVector::from_fn(dim, |_, _| C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5));
    project_out(&mut v0, deflate);
    v0 /= C64::new(v0.norm(), 0.0);
    let mut best = f64::INFINITY;
    for m_max in [160usize, 400] {
        let m_max = m_max.min(dim - deflate.len());
        let mut basis = vec![v0.clone()];
        let mut alphas: Vec<f64> = Vec::new();
        let mut betas: Vec<f64> = Vec::new();
        for j in 0..m_max {
            let mut w = matvec(&basis[j]);
            let alpha = basis[j].dotc(&w).re;
            alphas.push(alpha);
            // two Gram-Schmidt passes: one leaves O(1) orthogonality drift
            // once Ritz pairs converge, which caps the attainable residual
            for _ in 0..2 {
                project_out(&mut w, deflate);
                project_out(&mut w, &basis);
            }
            let beta = w.norm();
            if j + 1 == m_max || beta < 1e-13 {
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
        let mut low = 0usize;
        for l in 1..m {
            if eig.eigenvalues[l] < eig.eigenvalues[low] {
                low = l;
            }
        }
        let theta = eig.eigenvalues[low];
        // Ritz-vector residual within the deflated subspace certifies
        // convergence
        let mut x = DVector::<C64>::zeros(dim);
        for j in 0..m {
            x += &basis[j] * C64::new(eig.eigenvectors[(j, low)], 0.0);
        }
        x /= C64::new(x.norm(), 0.0);
        let mut hx = matvec(&x);
        project_out(&mut hx, deflate);
        let residual = (hx - &x * C64::new(theta, 0.0)).norm();
        if residual <= tol {
            return Ok((theta, x));
        }
        best = best.min(residual);
    }
    Err(Error::NonConvergence { residual: best, tol })
}

/// Ground region of a Hermitian block: (ground energy, zero modes, smallest
/// nonzero eigenvalue, minimum parked mass over the zero modes).
fn block_floor<F>(
    dim: usize,
    matvec: &F,
    parked: Option<&[bool]>,
    tol: f64,
) -> Result<(f64, usize, Option<f64>, Option<f64>)>
where
    F: Fn(&DVector<C64>) -> DVector<C64>,
{
    let mut kernel: Vec<DVector<C64>> = Vec::new();
    let mut ground: Option<f64> = None;
    let min_nonzero = loop {
        if kernel.len() >= dim {
            break None; // block vanishes identically
        }
        if kernel.len() > 64 {
            return Err(Error::Domain(format!(
                "kernel dimension exceeds 64 in a {dim}-dimensional sector"
            )));
        }
        let (theta, x) = lowest_eigenpair(dim, matvec, &kernel, tol)?;
        if ground.is_none() {
            ground = Some(theta);
        }
        if theta.abs() <= 1e-10 {
            kernel.push(x);
        } else {
            break Some(theta);
        }
    };
    let kernel_parked_mass = parked.and_then(|mask| {
        kernel
            .iter()
            .map(|v| (0..dim).filter(|&r| mask[r]).map(|r| v[r].norm_sqr()).sum::<f64>())
            .min_by(f64::total_cmp)
    });
    Ok((ground.unwrap_or(0.0), kernel.len(), min_nonzero, kernel_parked_mass))
}

fn dense_block_report(
    block: &DMatrix<C64>,
    train_count: usize,
    phi0_sector: Option<String>,
    parked: Option<&[bool]>,
    claimed_positive: bool,
) -> SectorReport {
    let dim = block.nrows();
    let eig = block.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let zeros: Vec<usize> =
        order.iter().copied().filter(|&i| eig.eigenvalues[i].abs() <= 1e-10).collect();
    let kernel_parked_mass = parked.and_then(|mask| {
        zeros
            .iter()
            .map(|&i| {
                (0..dim).filter(|&r| mask[r]).map(|r| eig.eigenvectors[(r, i)].norm_sqr()).sum()
            })
            .min_by(f64::total_cmp)
    });
    SectorReport {
        train_count,
        phi0_sector,
        dim,
        ground_energy: eig.eigenvalues[order[0]],
        min_nonzero_energy: order
            .iter()
            .map(|&i| eig.eigenvalues[i])
            .find(|&e| e > 1e-10),
        zero_modes: zeros.len(),
        kernel_parked_mass,
        claimed_positive,
    }
}

/// Explicit single-train basis of the switch-interior complement: per
/// switch, the wrong-control track states |w⟩⊗|track position⟩ that no
/// legal progression visits.
fn junk_basis(layout: &ClockLayout) -> DMatrix<C64> {
    let n = layout.n;
    let wdim = 1usize << n;
    let p = layout.train_positions();
    let mut cols: Vec<(usize, usize)> = Vec::new(); // (work, position)
    for g in &layout.gadgets {
        let cmask = control_mask(n, g.control);
        for &site in g.upper.iter() {
            let pos = layout.qubit_position(site);
            for w in 0..wdim {
                if w & cmask == 0 {
                    cols.push((w, pos));
                }
            }
        }
        for &site in g.lower.iter() {
            let pos = layout.qubit_position(site);
            for w in 0..wdim {
                if w & cmask != 0 {
                    cols.push((w, pos));
                }
            }
        }
    }
    let mut m = DMatrix::<C64>::zeros(wdim * p, cols.len());
    for (c, &(w, pos)) in cols.iter().enumerate() {
        m[(w * p + pos, c)] = C64::new(1.0, 0.0);
    }
    m
}

/// Diagonalizes H_3S + H_clock + H_datainit block by block: one block per
/// initial-work sector of the single-train space (legal progressions and
/// the switch-interior complement), one per multi-train count in the full
/// clock space. Also samples the adiabatic-path gap within the good sector.
pub fn sector_gap_scan(
    circuit: &QuantumCircuit,
    layout: &ClockLayout,
    options: &SectorScanOptions,
) -> Result<GapReport> {
    if layout.model != Model::ThreeLocal {
        return Err(Error::Domain(
            "sector scan applies to the 3-local qubit model".into(),
        ));
    }
    let n = circuit.n;
    let wdim = 1usize << n;
    let full_dim = wdim.saturating_mul(layout.full_clock_dim());
    if full_dim > options.max_full_dim {
        return Err(Error::Domain(format!(
            "full-space dimension {full_dim} exceeds scan limit {}",
            options.max_full_dim
        )));
    }
    let graph = crate::layout::enumerate_legal_graph(layout, circuit)?;
    let mut sectors = Vec::new();

    // --- single-train space, refined by initial work state ---------------
    let h3s_st = build_h3s(circuit, layout, Rep::SingleTrain)?.assemble()?;
    let hinit_st = build_h_init(layout, n, Rep::SingleTrain)?.assemble()?;
    let datainit_st = data_init_only(layout, n, Rep::SingleTrain)?;
    let h_st = h3s_st.add(&datainit_st)?; // H_clock vanishes on one train
    for w0 in 0..wdim {
        let phi0 = WorkState::basis(n, w0);
        let basis = embed_legal_basis(&graph, layout, circuit, &phi0)?;
        let block = restrict(&h_st, &basis)?;
        let label = format!("legal:{w0:0width$b}", width = n);
        sectors.push(dense_block_report(&block, 1, Some(label), None, w0 != 0));
    }
    let junk = junk_basis(layout);
    if junk.ncols() > 0 {
        let basis = EmbeddedBasis::from_columns(Rep::SingleTrain, junk)?;
        let block = restrict(&h_st, &basis)?;
        sectors.push(dense_block_report(&block, 1, Some("junk".into()), None, false));
    }

    // --- full clock space, blocked by train number ------------------------
    let h3s_fc = build_h3s(circuit, layout, Rep::FullClock)?.assemble()?;
    let hclock_fc = build_h_clock(layout, Rep::FullClock)?.assemble()?;
    let datainit_fc = data_init_only(layout, n, Rep::FullClock)?;
    let h_fc = h3s_fc.add(&hclock_fc)?.add(&datainit_fc)?;
    let trains = train_number(layout, Rep::FullClock);
    let mut count_of = vec![0usize; full_dim];
    for &(r, c, v) in trains.entries() {
        if r == c {
            count_of[r] = v.re.round() as usize;
        }
    }
    // a config is "parked" when every train sits inside a switch interior;
    // such wrong-track states are the known kernel of the penalty sum
    let interior_positions: Vec<usize> = layout
        .gadgets
        .iter()
        .flat_map(|g| g.upper.iter().chain(g.lower.iter()))
        .map(|&site| layout.qubit_position(site))
        .collect();
    let interior = crate::hamiltonian::train_number_on(layout, Rep::FullClock, &interior_positions);
    let mut interior_of = vec![0usize; full_dim];
    for &(r, c, v) in interior.entries() {
        if r == c {
            interior_of[r] = v.re.round() as usize;
        }
    }
    let max_trains = count_of.iter().copied().max().unwrap_or(0);
    for t in (0..=max_trains).filter(|&t| t != 1) {
        let members: Vec<usize> = (0..full_dim).filter(|&i| count_of[i] == t).collect();
        if members.is_empty() {
            continue;
        }
        let mut local = vec![usize::MAX; full_dim];
        for (k, &i) in members.iter().enumerate() {
            local[i] = k;
        }
        let entries: Vec<(usize, usize, C64)> = h_fc
            .entries()
            .iter()
            .filter(|&&(r, c, _)| local[r] != usize::MAX && local[c] != usize::MAX)
            .map(|&(r, c, v)| (local[r], local[c], v))
            .collect();
        let dim = members.len();
        let claimed = t >= 2;
        let parked_local: Vec<bool> =
            members.iter().map(|&i| t > 0 && interior_of[i] == count_of[i]).collect();
        let parked = if t >= 2 { Some(parked_local.as_slice()) } else { None };
        if dim <= options.dense_cutoff {
            let mut block = DMatrix::<C64>::zeros(dim, dim);
            for &(r, c, v) in &entries {
                block[(r, c)] = v;
            }
            sectors.push(dense_block_report(&block, t, None, parked, claimed));
        } else {
            let matvec = |x: &DVector<C64>| {
                let mut y = DVector::<C64>::zeros(dim);
                for &(r, c, v) in &entries {
                    y[r] += v * x[c];
                }
                y
            };
            let (ground, zeros, min_nonzero, parked_mass) =
                block_floor(dim, &matvec, parked, options.lanczos_tol)?;
            sectors.push(SectorReport {
                train_count: t,
                phi0_sector: None,
                dim,
                ground_energy: ground,
                min_nonzero_energy: min_nonzero,
                zero_modes: zeros,
                kernel_parked_mass: parked_mass,
                claimed_positive: claimed,
            });
        }
    }

    // --- adiabatic path in the good sector --------------------------------
    let phi0 = WorkState::zero(n);
    let basis = embed_legal_basis(&graph, layout, circuit, &phi0)?;
    let a_init = restrict(&hinit_st, &basis)?;
    let a_final = restrict(&h3s_st, &basis)?;
    let samples = options.s_samples.max(2);
    let mut aqc_path = Vec::with_capacity(samples);
    for k in 0..samples {
        let s = k as f64 / (samples - 1) as f64;
        let m = &a_init * C64::new(1.0 - s, 0.0) + &a_final * C64::new(s, 0.0);
        let mut eigs: Vec<f64> = m.symmetric_eigen().eigenvalues.iter().copied().collect();
        eigs.sort_by(f64::total_cmp);
        aqc_path.push(AqcPoint { s, gap: eigs[1] - eigs[0] });
    }

    Ok(GapReport { cycle_length: graph.spine_len, full_dim, sectors, aqc_path })
}

/// The work-initialization penalty alone (the clock-start penalty dies on
/// any state that actually carries a train elsewhere, so multi-train floors
/// are probed without it).
fn data_init_only(layout: &ClockLayout, n: usize, rep: Rep) -> Result<SparseHermitianOperator> {
    let terms = build_h_init(layout, n, rep)?;
    let mut acc = SparseHermitianOperator::zero(terms.dim(), rep);
    for term in &terms.terms {
        if matches!(term.tag, crate::hamiltonian::TermTag::DataInit) {
            acc = acc.add(&term.op)?;
        }
    }
    Ok(acc)
}

//! Closed-form continuous-time walk theory on lines and cycles.
//!
//! The walk generator is the negative adjacency matrix of the graph. Lines
//! diagonalize in sine waves, cycles in plane waves; everything downstream
//! (finite-time probabilities, time averages, limiting distributions, the
//! eigenvalue-gap sum) is evaluated from those closed forms rather than by
//! numerical diagonalization. Site arguments are 1-based (1..=L).

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::layout::Topology;

/// Eigenvalues below this distance count as degenerate.
pub const DEGENERACY_TOL: f64 = 1e-10;
/// Kernel argument below which sin(x)/x is evaluated as 1.
pub const KERNEL_TOL: f64 = 1e-12;

/// Walk instance description.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct WalkSpec {
    pub topology: Topology,
    pub length: usize,
    /// Start site, 1-based.
    pub start: usize,
}

impl WalkSpec {
    pub fn new(topology: Topology, length: usize, start: usize) -> Result<WalkSpec> {
        let min = match topology {
            Topology::Line => 2,
            Topology::Cycle => 3,
        };
        if length < min {
            return Err(Error::Domain(format!(
                "{topology:?} walk needs at least {min} sites, got {length}"
            )));
        }
        if start == 0 || start > length {
            return Err(Error::Domain(format!("start site {start} outside 1..={length}")));
        }
        Ok(WalkSpec { topology, length, start })
    }

    pub fn spectrum(&self) -> Result<SpectralData> {
        match self.topology {
            Topology::Line => line_spectrum(self.length),
            Topology::Cycle => cycle_spectrum(self.length),
        }
    }
}

/// Exact eigensystem of a walk generator, with the eigenvalue partition
/// needed for time averages under degeneracy.
#[derive(Debug, Clone)]
pub struct SpectralData {
    pub topology: Topology,
    pub length: usize,
    pub eigenvalues: Vec<f64>,
    /// Column j is the eigenvector for `eigenvalues[j]`; rows are sites.
    pub basis: DMatrix<f64>,
    /// Indices grouped by equal eigenvalue (within [`DEGENERACY_TOL`]).
    pub classes: Vec<Vec<usize>>,
}

fn degeneracy_classes(eigenvalues: &[f64]) -> Vec<Vec<usize>> {
    let mut classes: Vec<Vec<usize>> = Vec::new();
    for (j, &l) in eigenvalues.iter().enumerate() {
        match classes
            .iter_mut()
            .find(|cls| (eigenvalues[cls[0]] - l).abs() <= DEGENERACY_TOL)
        {
            Some(cls) => cls.push(j),
            None => classes.push(vec![j]),
        }
    }
    classes
}

/// Spectrum of the line walk: λ_j = −2cos(jπ/(L+1)) with sine-wave
/// eigenvectors φ_j(k) = √(2/(L+1))·sin(jkπ/(L+1)), j,k = 1..=L.
pub fn line_spectrum(l: usize) -> Result<SpectralData> {
    if l < 2 {
        return Err(Error::Domain(format!("line walk needs length >= 2, got {l}")));
    }
    let n = (l + 1) as f64;
    let eigenvalues: Vec<f64> = (1..=l)
        .map(|j| -2.0 * (j as f64 * std::f64::consts::PI / n).cos())
        .collect();
    let norm = (2.0 / n).sqrt();
    let basis = DMatrix::from_fn(l, l, |k, j| {
        norm * ((j + 1) as f64 * (k + 1) as f64 * std::f64::consts::PI / n).sin()
    });
    let classes = degeneracy_classes(&eigenvalues);
    Ok(SpectralData { topology: Topology::Line, length: l, eigenvalues, basis, classes })
}

/// Spectrum of the cycle walk: λ_j = −2cos(2πj/L), stored in momentum order
/// with the real plane-wave basis (cosine branch for j < L/2, sine branch
/// for j > L/2), so the degeneracy classes come out as {j, L−j}.
pub fn cycle_spectrum(l: usize) -> Result<SpectralData> {
    if l < 3 {
        return Err(Error::Domain(format!("cycle walk needs length >= 3, got {l}")));
    }
    let lf = l as f64;
    let eigenvalues: Vec<f64> = (0..l)
        .map(|j| -2.0 * (2.0 * std::f64::consts::PI * j as f64 / lf).cos())
        .collect();
    let basis = DMatrix::from_fn(l, l, |k, j| {
        let phase = 2.0 * std::f64::consts::PI * j as f64 * k as f64 / lf;
        if j == 0 {
            1.0 / lf.sqrt()
        } else if 2 * j == l {
            // alternating ±1
            (if k % 2 == 0 { 1.0 } else { -1.0 }) / lf.sqrt()
        } else if 2 * j < l {
            (2.0 / lf).sqrt() * phase.cos()
        } else {
            // sine partner of momentum L−j, same eigenvalue as column L−j
            (2.0 / lf).sqrt() * (2.0 * std::f64::consts::PI * (l - j) as f64 * k as f64 / lf).sin()
        }
    });
    let classes = degeneracy_classes(&eigenvalues);
    Ok(SpectralData { topology: Topology::Cycle, length: l, eigenvalues, basis, classes })
}

impl SpectralData {
    fn check_site(&self, site: usize) -> Result<usize> {
        if site == 0 || site > self.length {
            return Err(Error::Domain(format!(
                "site {site} outside 1..={}",
                self.length
            )));
        }
        Ok(site - 1)
    }

    /// ⟨m|e^{−iHτ}|c⟩ from the spectral sum.
    pub fn amplitude(&self, c: usize, m: usize, tau: f64) -> Result<C64> {
        let (ci, mi) = (self.check_site(c)?, self.check_site(m)?);
        let mut amp = C64::new(0.0, 0.0);
        for (j, &lambda) in self.eigenvalues.iter().enumerate() {
            let w = self.basis[(mi, j)] * self.basis[(ci, j)];
            amp += C64::from_polar(w, -lambda * tau);
        }
        Ok(amp)
    }
}

/// p_τ(m|c) = |⟨m|e^{−iHτ}|c⟩|².
pub fn walk_probability(spec: &SpectralData, c: usize, m: usize, tau: f64) -> Result<f64> {
    Ok(spec.amplitude(c, m, tau)?.norm_sqr())
}

/// Time-averaged kernel (1/T)∫₀ᵀ e^{iΔt} dt collapsed to its real part:
/// sin(ΔT)/(ΔT), with the removable singularity at Δ = 0 evaluated as 1.
fn kernel(delta: f64, t: f64) -> f64 {
    let x = delta * t;
    if x.abs() <= KERNEL_TOL {
        1.0
    } else {
        x.sin() / x
    }
}

/// Finite-time average p̄_T(m|c) = (1/T)∫₀ᵀ p_τ(m|c) dτ in closed form
/// through the spectral double sum over the real eigenbasis.
pub fn averaged_distribution(spec: &SpectralData, c: usize, t: f64) -> Result<Vec<f64>> {
    if !(t > 0.0) {
        return Err(Error::Domain(format!("averaging time must be positive, got {t}")));
    }
    let ci = spec.check_site(c)?;
    let l = spec.length;
    let mut out = vec![0.0; l];
    for (mi, slot) in out.iter_mut().enumerate() {
        let mut p = 0.0;
        for j in 0..l {
            let wj = spec.basis[(mi, j)] * spec.basis[(ci, j)];
            for k in 0..l {
                let wk = spec.basis[(mi, k)] * spec.basis[(ci, k)];
                p += wj * wk * kernel(spec.eigenvalues[j] - spec.eigenvalues[k], t);
            }
        }
        *slot = p;
    }
    Ok(out)
}

/// Infinite-time average π(m|c) = Σ_E |⟨m|P_E|c⟩|² over the projectors onto
/// degenerate eigenspaces. On the line this reproduces the closed form
/// (2 + δ_{m,c} + δ_{m,L+1−c})/(2(L+1)); on the cycle the weight doubles at
/// the start site and at its antipode.
pub fn limiting_distribution(spec: &SpectralData, c: usize) -> Result<Vec<f64>> {
    let ci = spec.check_site(c)?;
    let l = spec.length;
    let mut out = vec![0.0; l];
    for (mi, slot) in out.iter_mut().enumerate() {
        let mut p = 0.0;
        for cls in &spec.classes {
            let amp: f64 = cls.iter().map(|&j| spec.basis[(mi, j)] * spec.basis[(ci, j)]).sum();
            p += amp * amp;
        }
        *slot = p;
    }
    Ok(out)
}

/// Closed-form weights of the cycle limiting distribution: (regular site,
/// doubled site) = (1/L − 2/L², 2/L − 2/L²).
pub fn cycle_limiting_weights(l: usize) -> (f64, f64) {
    let lf = l as f64;
    (1.0 / lf - 2.0 / (lf * lf), 2.0 / lf - 2.0 / (lf * lf))
}

/// Un-halved total variation distance Σ_m |p_m − q_m|.
pub fn tv_distance(p: &[f64], q: &[f64]) -> f64 {
    assert_eq!(p.len(), q.len(), "distributions must have equal support");
    p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum()
}

/// Eigenvalue-gap sum S_∘(L) = Σ_{j,k: λ_j≠λ_k} 1/|λ_j−λ_k| over ordered
/// index pairs of the cycle spectrum.
pub fn eigen_gap_sum(l: usize) -> Result<f64> {
    if l % 4 != 0 {
        return Err(Error::Domain(format!(
            "gap sum is defined for cycle lengths divisible by 4, got {l}"
        )));
    }
    let spec = cycle_spectrum(l)?;
    let mut s = 0.0;
    for j in 0..l {
        for k in 0..l {
            let gap = (spec.eigenvalues[j] - spec.eigenvalues[k]).abs();
            if gap > DEGENERACY_TOL {
                s += 1.0 / gap;
            }
        }
    }
    Ok(s)
}

/// Ring distance between 1-based cycle sites.
fn cycle_distance(l: usize, a: usize, b: usize) -> usize {
    let d = (a as isize - b as isize).unsigned_abs() % l;
    d.min(l - d)
}

#[derive(Debug, Clone, Serialize)]
pub struct Lemma1Row {
    pub tau: f64,
    pub tv: f64,
    /// C_fit · L / τ.
    pub bound: f64,
}

/// Line-mixing check: time-averaged distribution converges to the limiting
/// one like C·L/τ.
#[derive(Debug, Clone, Serialize)]
pub struct Lemma1Report {
    pub length: usize,
    pub start: usize,
    pub rows: Vec<Lemma1Row>,
    /// max over rows of tv·τ/L.
    pub fitted_c: f64,
    /// Per-octave maxima of tv decrease monotonically.
    pub envelope_decays: bool,
}

/// Computes TV(p̄_τ, π) on the line of length `l` (start site 1) for each
/// τ and fits the constant in TV ≤ C·L/τ.
pub fn check_lemma1(l: usize, tau_list: &[f64]) -> Result<Lemma1Report> {
    if tau_list.is_empty() {
        return Err(Error::Domain("need at least one averaging time".into()));
    }
    if tau_list.iter().any(|&t| !(t > 0.0)) {
        return Err(Error::Domain("averaging times must be positive".into()));
    }
    let spec = line_spectrum(l)?;
    let start = 1;
    let limit = limiting_distribution(&spec, start)?;
    let mut rows = Vec::with_capacity(tau_list.len());
    let mut fitted_c = 0.0f64;
    for &tau in tau_list {
        let avg = averaged_distribution(&spec, start, tau)?;
        let tv = tv_distance(&avg, &limit);
        fitted_c = fitted_c.max(tv * tau / l as f64);
        rows.push(Lemma1Row { tau, tv, bound: 0.0 });
    }
    for row in &mut rows {
        row.bound = fitted_c * l as f64 / row.tau;
    }
    // envelope: maxima over octaves of τ must decay
    let mut sorted = rows.clone();
    sorted.sort_by(|a, b| a.tau.total_cmp(&b.tau));
    let t0 = sorted[0].tau;
    let mut octave_max: Vec<(u32, f64)> = Vec::new();
    for row in &sorted {
        let oct = (row.tau / t0).log2().floor() as u32;
        match octave_max.last_mut() {
            Some((o, m)) if *o == oct => *m = m.max(row.tv),
            _ => octave_max.push((oct, row.tv)),
        }
    }
    let envelope_decays = octave_max.windows(2).all(|w| w[1].1 < w[0].1);
    Ok(Lemma1Report { length: l, start, rows, fitted_c, envelope_decays })
}

/// Success-region mass of the averaged cycle walk.
#[derive(Debug, Clone, Serialize)]
pub struct Lemma2Report {
    pub length: usize,
    pub start: usize,
    pub tau_max: f64,
    /// Sites (1-based) at ring distance strictly greater than L/6 from the
    /// start.
    pub region: Vec<usize>,
    /// Mass of the region under the finite-time average.
    pub p_success: f64,
    /// Mass of the region under the limiting distribution.
    pub p_limit: f64,
    /// 2/3 − 1/(3L).
    pub bound: f64,
    pub margin: f64,
    /// Sites carrying the doubled limiting weight (observed, not assumed).
    pub doubled_sites: Vec<usize>,
}

/// Computes the probability mass that the averaged cycle walk (start site 1)
/// places on the farther two-thirds of the cycle, compared against the
/// asymptotic bound 2/3 − 1/(3L). Requires L divisible by 4.
pub fn check_lemma2(l: usize, tau_max: f64) -> Result<Lemma2Report> {
    if l % 4 != 0 {
        return Err(Error::Domain(format!(
            "cycle lemma check needs L divisible by 4, got {l}"
        )));
    }
    if !(tau_max > 0.0) {
        return Err(Error::Domain(format!("tau_max must be positive, got {tau_max}")));
    }
    let spec = cycle_spectrum(l)?;
    let start = 1;
    let region: Vec<usize> = (1..=l)
        .filter(|&m| cycle_distance(l, m, start) as f64 > l as f64 / 6.0)
        .collect();
    let avg = averaged_distribution(&spec, start, tau_max)?;
    let limit = limiting_distribution(&spec, start)?;
    let p_success: f64 = region.iter().map(|&m| avg[m - 1]).sum();
    let p_limit: f64 = region.iter().map(|&m| limit[m - 1]).sum();
    let bound = 2.0 / 3.0 - 1.0 / (3.0 * l as f64);
    let max_w = limit.iter().cloned().fold(f64::MIN, f64::max);
    let doubled_sites: Vec<usize> = (1..=l)
        .filter(|&m| (limit[m - 1] - max_w).abs() <= 1e-12)
        .collect();
    Ok(Lemma2Report {
        length: l,
        start,
        tau_max,
        region,
        p_success,
        p_limit,
        bound,
        margin: p_success - bound,
        doubled_sites,
    })
}

impl Lemma1Report {
    /// CSV rows `L,tau,tv,p_success,bound` (success column empty).
    pub fn csv(&self) -> String {
        let mut out = String::from("L,tau,tv,p_success,bound\n");
        for row in &self.rows {
            out.push_str(&format!(
                "{},{},{},,{}\n",
                self.length, row.tau, row.tv, row.bound
            ));
        }
        out
    }
}

impl Lemma2Report {
    /// CSV row `L,tau,tv,p_success,bound` (tv column empty).
    pub fn csv(&self) -> String {
        format!(
            "L,tau,tv,p_success,bound\n{},{},,{},{}\n",
            self.length, self.tau_max, self.p_success, self.bound
        )
    }
}

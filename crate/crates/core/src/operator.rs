//! Sparse Hermitian operators in coordinate form.
//!
//! Entries are kept sorted row-major and merged; merged values below 1e-15
//! in magnitude are dropped. Every constructor checks Hermiticity, so a
//! stored operator always equals its own adjoint to 1e-12.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Register representation an operator acts on.
///
/// `SingleTrain` restricts the clock register to configurations with exactly
/// one active site; `FullClock` keeps the full tensor product of all sites.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rep {
    SingleTrain,
    FullClock,
}

impl Rep {
    pub fn name(&self) -> &'static str {
        match self {
            Rep::SingleTrain => "single_train",
            Rep::FullClock => "full_clock",
        }
    }
}

pub const MERGE_DROP_TOL: f64 = 1e-15;
pub const HERMITICITY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct SparseHermitianOperator {
    dim: usize,
    rep: Rep,
    entries: Vec<(usize, usize, C64)>,
}

/// Sorts row-major, sums duplicates, drops merged values below tolerance.
fn merge_entries(mut raw: Vec<(usize, usize, C64)>) -> Vec<(usize, usize, C64)> {
    raw.sort_unstable_by_key(|&(r, c, _)| (r, c));
    let mut out: Vec<(usize, usize, C64)> = Vec::with_capacity(raw.len());
    for (r, c, v) in raw {
        match out.last_mut() {
            Some(last) if last.0 == r && last.1 == c => last.2 += v,
            _ => out.push((r, c, v)),
        }
    }
    out.retain(|&(_, _, v)| v.norm() >= MERGE_DROP_TOL);
    out
}

impl SparseHermitianOperator {
    /// Builds from raw coordinate triplets; duplicates are summed.
    pub fn from_entries(dim: usize, rep: Rep, raw: Vec<(usize, usize, C64)>) -> Result<Self> {
        for &(r, c, _) in &raw {
            if r >= dim || c >= dim {
                return Err(Error::DimensionMismatch { expected: dim, got: r.max(c) + 1 });
            }
        }
        let entries = merge_entries(raw);
        let op = SparseHermitianOperator { dim, rep, entries };
        let dev = op.hermiticity_deviation();
        if dev > HERMITICITY_TOL {
            return Err(Error::NotHermitian(dev));
        }
        Ok(op)
    }

    pub fn zero(dim: usize, rep: Rep) -> Self {
        SparseHermitianOperator { dim, rep, entries: Vec::new() }
    }

    pub fn identity(dim: usize, rep: Rep) -> Self {
        let one = C64::new(1.0, 0.0);
        SparseHermitianOperator { dim, rep, entries: (0..dim).map(|i| (i, i, one)).collect() }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rep(&self) -> Rep {
        self.rep
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[(usize, usize, C64)] {
        &self.entries
    }

    /// Max |H[r,c] - conj(H[c,r])| over stored coordinates.
    pub fn hermiticity_deviation(&self) -> f64 {
        let mut worst = 0.0f64;
        for &(r, c, v) in &self.entries {
            let vt = self.get(c, r);
            worst = worst.max((v - vt.conj()).norm());
        }
        worst
    }

    /// Entry lookup by binary search; absent coordinates read as zero.
    pub fn get(&self, r: usize, c: usize) -> C64 {
        match self.entries.binary_search_by_key(&(r, c), |&(er, ec, _)| (er, ec)) {
            Ok(i) => self.entries[i].2,
            Err(_) => C64::new(0.0, 0.0),
        }
    }

    pub fn check_same_space(&self, other: &Self) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: other.dim });
        }
        if self.rep != other.rep {
            return Err(Error::RepMismatch {
                expected: self.rep.name().into(),
                got: other.rep.name().into(),
            });
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same_space(other)?;
        let mut raw = self.entries.clone();
        raw.extend_from_slice(&other.entries);
        SparseHermitianOperator::from_entries(self.dim, self.rep, raw)
    }

    /// Real scaling keeps Hermiticity.
    pub fn scale(&self, factor: f64) -> Self {
        let f = C64::new(factor, 0.0);
        SparseHermitianOperator {
            dim: self.dim,
            rep: self.rep,
            entries: merge_entries(self.entries.iter().map(|&(r, c, v)| (r, c, f * v)).collect()),
        }
    }

    pub fn matvec(&self, x: &[C64], y: &mut [C64]) {
        assert_eq!(x.len(), self.dim);
        assert_eq!(y.len(), self.dim);
        y.fill(C64::new(0.0, 0.0));
        for &(r, c, v) in &self.entries {
            y[r] += v * x[c];
        }
    }

    pub fn apply(&self, x: &[C64]) -> Vec<C64> {
        let mut y = vec![C64::new(0.0, 0.0); self.dim];
        self.matvec(x, &mut y);
        y
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        let mut m = DMatrix::from_element(self.dim, self.dim, C64::new(0.0, 0.0));
        for &(r, c, v) in &self.entries {
            m[(r, c)] += v;
        }
        m
    }

    /// Coordinate entries of self * other; the product is not Hermitian in
    /// general so this returns a raw merged list.
    pub fn product_entries(&self, other: &Self) -> Result<Vec<(usize, usize, C64)>> {
        self.check_same_space(other)?;
        // group other's entries by row for the inner join
        let mut row_start = vec![other.entries.len(); other.dim + 1];
        for (i, &(r, _, _)) in other.entries.iter().enumerate().rev() {
            row_start[r] = i;
        }
        for r in (0..other.dim).rev() {
            if row_start[r] > row_start[r + 1] {
                row_start[r] = row_start[r + 1];
            }
        }
        let mut raw = Vec::new();
        for &(r, k, v) in &self.entries {
            for &(_, c, w) in &other.entries[row_start[k]..row_start[k + 1]] {
                raw.push((r, c, v * w));
            }
        }
        Ok(merge_entries(raw))
    }

    /// Max |self - other| over the union of stored coordinates.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let mut worst = 0.0f64;
        for &(r, c, v) in &self.entries {
            worst = worst.max((v - other.get(r, c)).norm());
        }
        for &(r, c, v) in &other.entries {
            worst = worst.max((v - self.get(r, c)).norm());
        }
        worst
    }

    /// Max absolute row sum; an upper bound on the operator norm.
    pub fn row_sum_norm(&self) -> f64 {
        let mut sums = vec![0.0f64; self.dim];
        for &(r, _, v) in &self.entries {
            sums[r] += v.norm();
        }
        sums.into_iter().fold(0.0, f64::max)
    }
}

/// Header written ahead of a coordinate dump.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct OperatorHeader {
    pub dim: usize,
    pub rep: Rep,
    pub nnz: usize,
    pub terms: Vec<String>,
}

/// Serializes as a JSON header line followed by `row col re im` lines.
pub fn dump_operator(op: &SparseHermitianOperator, terms: Vec<String>) -> String {
    let header = OperatorHeader { dim: op.dim(), rep: op.rep(), nnz: op.nnz(), terms };
    let mut out = serde_json::to_string(&header).expect("header serializes");
    out.push('\n');
    for &(r, c, v) in op.entries() {
        out.push_str(&format!("{} {} {:.17e} {:.17e}\n", r, c, v.re, v.im));
    }
    out
}

/// Parses a dump produced by [`dump_operator`].
pub fn load_operator(text: &str) -> Result<(SparseHermitianOperator, OperatorHeader)> {
    let mut lines = text.lines();
    let header_line = lines
        .next()
        .ok_or_else(|| Error::Parse { line: 1, msg: "empty operator dump".into() })?;
    let header: OperatorHeader = serde_json::from_str(header_line)
        .map_err(|e| Error::Parse { line: 1, msg: format!("bad header: {e}") })?;
    let mut raw = Vec::with_capacity(header.nnz);
    for (i, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() != 4 {
            return Err(Error::Parse { line: i + 2, msg: "expected `row col re im`".into() });
        }
        let r: usize = toks[0].parse().map_err(|_| Error::Parse { line: i + 2, msg: "bad row".into() })?;
        let c: usize = toks[1].parse().map_err(|_| Error::Parse { line: i + 2, msg: "bad col".into() })?;
        let re: f64 = toks[2].parse().map_err(|_| Error::Parse { line: i + 2, msg: "bad re".into() })?;
        let im: f64 = toks[3].parse().map_err(|_| Error::Parse { line: i + 2, msg: "bad im".into() })?;
        raw.push((r, c, C64::new(re, im)));
    }
    if raw.len() != header.nnz {
        return Err(Error::Parse {
            line: 1,
            msg: format!("header says {} entries, found {}", header.nnz, raw.len()),
        });
    }
    let op = SparseHermitianOperator::from_entries(header.dim, header.rep, raw)?;
    Ok((op, header))
}

//! Completely positive maps on matrix algebras and stochastic matrices.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c, hermitian_eigenvalues, identity, rank, CMatrix, MatrixJson};

/// Entries below this are treated as zero in the combinatorial counts.
pub const NONZERO_THRESHOLD: f64 = 1e-12;

/// `a ↦ Σ K_i a K_i^*` on `M_h`.
#[derive(Clone, Debug)]
pub struct KrausChannel {
    h: usize,
    kraus: Vec<CMatrix>,
}

impl KrausChannel {
    pub fn new(kraus: Vec<CMatrix>) -> Result<Self> {
        let first = kraus.first().ok_or(Error::Empty("Kraus list"))?;
        let h = first.nrows();
        for k in &kraus {
            if k.nrows() != h || k.ncols() != h {
                return Err(Error::DimensionMismatch { what: "Kraus operator".into(), expected: h, found: k.ncols() });
            }
            if k.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                return Err(Error::InvalidParameter("non-finite Kraus entry".into()));
            }
        }
        Ok(KrausChannel { h, kraus })
    }

    pub fn identity(h: usize) -> Self {
        KrausChannel { h, kraus: vec![identity(h)] }
    }

    pub fn h(&self) -> usize {
        self.h
    }

    pub fn kraus(&self) -> &[CMatrix] {
        &self.kraus
    }

    /// `Σ K_i K_i^* ≤ I` up to `1e-10`.
    pub fn is_contractive(&self) -> bool {
        let top = hermitian_eigenvalues(&self.apply(&identity(self.h)));
        top.last().copied().unwrap_or(0.0) <= 1.0 + 1e-10
    }

    pub fn apply(&self, a: &CMatrix) -> CMatrix {
        let mut out = CMatrix::zeros(self.h, self.h);
        for k in &self.kraus {
            out += k * a * k.adjoint();
        }
        out
    }

    /// Kraus list of `self ∘ other`.
    pub fn compose(&self, other: &KrausChannel) -> Result<KrausChannel> {
        if self.h != other.h {
            return Err(Error::DimensionMismatch { what: "channel size".into(), expected: self.h, found: other.h });
        }
        let kraus = self.kraus.iter().flat_map(|k| other.kraus.iter().map(move |l| k * l)).collect();
        Ok(KrausChannel { h: self.h, kraus })
    }

    pub fn choi(&self) -> CMatrix {
        choi_of_map(self.h, |a| self.apply(a))
    }

    pub fn choi_rank(&self, rel_tol: f64) -> usize {
        rank(&self.choi(), rel_tol)
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let file: KrausFile = serde_json::from_str(text)?;
        let kraus = file.kraus.iter().map(MatrixJson::to_matrix).collect::<Result<Vec<_>>>()?;
        let ch = KrausChannel::new(kraus)?;
        if let Some(h) = file.h {
            if h != ch.h {
                return Err(Error::Format(format!("key \"h\" = {h} but Kraus operators are {}x{}", ch.h, ch.h)));
            }
        }
        Ok(ch)
    }

    pub fn to_json(&self) -> KrausFile {
        KrausFile { h: Some(self.h), kraus: self.kraus.iter().map(MatrixJson::from_matrix).collect() }
    }
}

/// Channel file: `{"h": 2, "kraus": [matrix, ...]}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct KrausFile {
    #[serde(default)]
    pub h: Option<usize>,
    pub kraus: Vec<MatrixJson>,
}

/// `Σ_{a,b} E_ab ⊗ Θ(E_ab)`.
pub fn choi_of_map(h: usize, theta: impl Fn(&CMatrix) -> CMatrix) -> CMatrix {
    let mut out = CMatrix::zeros(h * h, h * h);
    for a in 0..h {
        for b in 0..h {
            let mut e = CMatrix::zeros(h, h);
            e[(a, b)] = c(1.0, 0.0);
            let img = theta(&e);
            out.view_mut((a * h, b * h), (h, h)).copy_from(&img);
        }
    }
    out
}

#[derive(Clone, Debug, Serialize)]
pub struct FiberDims {
    /// `dims[k-1]` is the Choi rank of the `k`-th iterate.
    pub dims: Vec<usize>,
    pub submultiplicative: bool,
}

/// Choi ranks of `C, C∘C, ..., C^{n_max}`.
pub fn as_fiber_dims(ch: &KrausChannel, n_max: usize, rel_tol: f64) -> FiberDims {
    let h = ch.h;
    let mut images: Vec<CMatrix> = (0..h * h)
        .map(|ab| {
            let mut e = CMatrix::zeros(h, h);
            e[(ab / h, ab % h)] = c(1.0, 0.0);
            e
        })
        .collect();
    let mut dims = Vec::with_capacity(n_max);
    for _ in 0..n_max {
        images = images.iter().map(|a| ch.apply(a)).collect();
        let mut choi = CMatrix::zeros(h * h, h * h);
        for (ab, img) in images.iter().enumerate() {
            choi.view_mut(((ab / h) * h, (ab % h) * h), (h, h)).copy_from(img);
        }
        dims.push(rank(&choi, rel_tol));
    }
    let mut submultiplicative = true;
    for j in 1..=n_max {
        for k in 1..=n_max - j {
            if dims[j + k - 1] > dims[j - 1] * dims[k - 1] {
                submultiplicative = false;
            }
        }
    }
    FiberDims { dims, submultiplicative }
}

/// Row-stochastic real matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct StochasticMatrix {
    entries: DMatrix<f64>,
}

impl StochasticMatrix {
    /// Rows must sum to 1 within `1e-12`; entries down to `-1e-15` are clamped to 0.
    pub fn new(mut entries: DMatrix<f64>) -> Result<Self> {
        let n = entries.nrows();
        if n == 0 {
            return Err(Error::Empty("stochastic matrix"));
        }
        if entries.ncols() != n {
            return Err(Error::NotStochastic(format!("{}x{} is not square", n, entries.ncols())));
        }
        for (idx, x) in entries.iter_mut().enumerate() {
            if !x.is_finite() {
                return Err(Error::NotStochastic(format!("non-finite entry at ({}, {})", idx % n, idx / n)));
            }
            if *x < -1e-15 {
                return Err(Error::NotStochastic(format!("negative entry {x} at ({}, {})", idx % n, idx / n)));
            }
            if *x < 0.0 {
                *x = 0.0;
            }
        }
        for i in 0..n {
            let s: f64 = entries.row(i).sum();
            if (s - 1.0).abs() > 1e-12 {
                return Err(Error::NotStochastic(format!("row {} sums to {s}", i + 1)));
            }
        }
        Ok(StochasticMatrix { entries })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::NotStochastic("rows of unequal length".into()));
        }
        StochasticMatrix::new(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
    }

    /// Comma or whitespace separated rows; blank lines and `#` comments skipped.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut rows = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let row = line
                .split(|ch: char| ch == ',' || ch.is_whitespace())
                .filter(|t| !t.is_empty())
                .map(|t| t.parse::<f64>().map_err(|e| Error::Format(format!("line {}: {e}", lineno + 1))))
                .collect::<Result<Vec<_>>>()?;
            rows.push(row);
        }
        StochasticMatrix::from_rows(&rows)
    }

    /// Real part of a matrix-format file; imaginary parts must vanish.
    pub fn from_matrix_json(m: &MatrixJson) -> Result<Self> {
        let cm = m.to_matrix()?;
        if cm.iter().any(|z| z.im != 0.0) {
            return Err(Error::NotStochastic("complex entries".into()));
        }
        StochasticMatrix::new(cm.map(|z| z.re))
    }

    pub fn n(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn mul(&self, other: &StochasticMatrix) -> Result<StochasticMatrix> {
        check_sizes(self, other)?;
        let prod = &self.entries * &other.entries;
        Ok(StochasticMatrix { entries: prod })
    }

    /// `e^{-t} e^{tP}`.
    pub fn semigroup_element(&self, t: f64) -> StochasticMatrix {
        let e = (&self.entries * t).exp() * (-t).exp();
        StochasticMatrix { entries: e }
    }
}

fn check_sizes(p: &StochasticMatrix, q: &StochasticMatrix) -> Result<()> {
    if p.n() != q.n() {
        return Err(Error::DimensionMismatch { what: "stochastic matrix size".into(), expected: p.n(), found: q.n() });
    }
    Ok(())
}

#[derive(Clone, Debug, Serialize)]
pub struct CommuteReport {
    pub commute: bool,
    pub residual: f64,
}

/// Max-norm of `PQ − QP` against `1e-12`.
pub fn commute_check(p: &StochasticMatrix, q: &StochasticMatrix) -> Result<CommuteReport> {
    check_sizes(p, q)?;
    let diff = &p.entries * &q.entries - &q.entries * &p.entries;
    let residual = diff.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    Ok(CommuteReport { commute: residual <= 1e-12, residual })
}

#[derive(Clone, Debug, Serialize, PartialEq, Eq)]
pub struct CountViolation {
    pub i: usize,
    pub k: usize,
    /// `|{j : q_kj p_ji ≠ 0}|`
    pub count_pq: usize,
    /// `|{j : p_kj q_ji ≠ 0}|`
    pub count_qp: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct StrongCommuteReport {
    pub commute: bool,
    pub residual: f64,
    pub strong: bool,
    pub witness: Vec<CountViolation>,
}

fn nonzero(x: f64) -> bool {
    x.abs() > NONZERO_THRESHOLD
}

/// Strong commutation of the CP maps of two stochastic matrices, decided by
/// equal support counts at every `(i, k)`. Only evaluated when they commute.
pub fn strong_commute_stochastic(p: &StochasticMatrix, q: &StochasticMatrix) -> Result<StrongCommuteReport> {
    let cm = commute_check(p, q)?;
    if !cm.commute {
        return Ok(StrongCommuteReport { commute: false, residual: cm.residual, strong: false, witness: Vec::new() });
    }
    let n = p.n();
    let (pe, qe) = (&p.entries, &q.entries);
    let mut witness = Vec::new();
    for i in 0..n {
        for k in 0..n {
            let count_pq = (0..n).filter(|&j| nonzero(qe[(k, j)] * pe[(j, i)])).count();
            let count_qp = (0..n).filter(|&j| nonzero(pe[(k, j)] * qe[(j, i)])).count();
            if count_pq != count_qp {
                witness.push(CountViolation { i: i + 1, k: k + 1, count_pq, count_qp });
            }
        }
    }
    Ok(StrongCommuteReport { commute: true, residual: cm.residual, strong: witness.is_empty(), witness })
}

/// Ranks of the Gram matrices of `{e_i ⊗_P e_j ⊗_Q e_k}_j` and
/// `{e_i ⊗_Q e_j ⊗_P e_k}_j` (1-based `i`, `k`).
pub fn gram_dim_oracle(p: &StochasticMatrix, q: &StochasticMatrix, i: usize, k: usize) -> Result<(usize, usize)> {
    check_sizes(p, q)?;
    let n = p.n();
    if i == 0 || k == 0 || i > n || k > n {
        return Err(Error::InvalidParameter(format!("index ({i}, {k}) outside 1..={n}")));
    }
    let (i, k) = (i - 1, k - 1);
    let (pe, qe) = (&p.entries, &q.entries);
    let gram_v = DMatrix::from_fn(n, n, |j, l| if j == l { qe[(k, j)] * pe[(j, i)] } else { 0.0 });
    let gram_w = DMatrix::from_fn(n, n, |j, l| if j == l { pe[(k, j)] * qe[(j, i)] } else { 0.0 });
    Ok((gram_rank(&gram_v), gram_rank(&gram_w)))
}

fn gram_rank(g: &DMatrix<f64>) -> usize {
    g.clone().svd(false, false).singular_values.iter().filter(|&&s| s > NONZERO_THRESHOLD).count()
}

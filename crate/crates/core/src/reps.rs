//! Row-contractive tuples acting as representations of a subproduct system.
//!
//! The adjoint of the level-`n` product map, `h ↦ Σ_{|α|=n} e_α ⊗ T^{α*} h`,
//! is built level by level. The ambient version lives in `E^{⊗n} ⊗ H`; the
//! frame version lives in `X(n) ⊗ H` with index `a·h + j`.

use serde::{Deserialize, Serialize};

use crate::cpmaps::choi_of_map;
use crate::error::{Error, Result};
use crate::fock::{ShiftSet, TruncatedFock};
use crate::linalg::{
    c, gemm, hermitian_eigenvalues, identity, kernel, kron_left_apply, kron_right_apply, opnorm, psd_sqrt, CMatrix, MatrixJson,
    Subspace, DEFAULT_REL_TOL,
};
use crate::ncpoly::{IdealGens, NCPoly, Word};
use crate::subproduct::{Provenance, SubproductSystem};

/// Threshold for representation membership.
pub const REP_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

#[derive(Clone, Debug)]
pub struct RepTuple {
    matrices: Vec<CMatrix>,
    row_norm: f64,
}

impl RepTuple {
    pub fn new(matrices: Vec<CMatrix>) -> Result<Self> {
        let first = matrices.first().ok_or(Error::Empty("operator tuple"))?;
        let h = first.nrows();
        if h == 0 {
            return Err(Error::Empty("representation space"));
        }
        for (i, t) in matrices.iter().enumerate() {
            if t.nrows() != h || t.ncols() != h {
                return Err(Error::DimensionMismatch { what: format!("T_{}", i + 1), expected: h, found: t.ncols() });
            }
            if t.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                return Err(Error::InvalidParameter(format!("T_{} has non-finite entries", i + 1)));
            }
        }
        let row_norm = row_norm_of(&matrices);
        Ok(RepTuple { matrices, row_norm })
    }

    pub fn zero(d: usize, h: usize) -> Self {
        RepTuple { matrices: vec![CMatrix::zeros(h, h); d], row_norm: 0.0 }
    }

    pub fn from_shifts(shifts: &ShiftSet) -> Self {
        RepTuple::new(shifts.matrices().to_vec()).expect("shift matrices are square and finite")
    }

    pub fn d(&self) -> usize {
        self.matrices.len()
    }

    pub fn h(&self) -> usize {
        self.matrices[0].nrows()
    }

    pub fn matrices(&self) -> &[CMatrix] {
        &self.matrices
    }

    pub fn get(&self, i: usize) -> &CMatrix {
        &self.matrices[i - 1]
    }

    /// `‖[T_1 ⋯ T_d]‖`.
    pub fn row_norm(&self) -> f64 {
        self.row_norm
    }

    pub fn scaled(&self, s: f64) -> RepTuple {
        RepTuple { matrices: self.matrices.iter().map(|t| t * c(s, 0.0)).collect(), row_norm: self.row_norm * s.abs() }
    }

    /// `F^* T_i F` for a subspace with frame `F`.
    pub fn compress(&self, sub: &Subspace) -> Result<RepTuple> {
        if sub.ambient_dim() != self.h() {
            return Err(Error::DimensionMismatch { what: "compression subspace".into(), expected: self.h(), found: sub.ambient_dim() });
        }
        let f = sub.frame();
        RepTuple::new(self.matrices.iter().map(|t| f.adjoint() * t * f).collect())
    }

    /// `T^α = T_{α_1} ⋯ T_{α_n}`.
    pub fn word(&self, alpha: &Word) -> CMatrix {
        let mut m = identity(self.h());
        for &a in alpha.letters() {
            m *= &self.matrices[a - 1];
        }
        m
    }

    /// `Δ(T) = I − Σ T_i T_i^*`.
    pub fn row_defect(&self) -> CMatrix {
        identity(self.h()) - conj_sum(&self.matrices, &identity(self.h()))
    }

    /// `[L_0, ..., L_N]` with `L_n = Σ_{|α|=n} e_α ⊗ T^{α*}` as a `d^n h × h` matrix.
    pub fn ambient_adjoint_powers(&self, depth: usize) -> Vec<CMatrix> {
        let h = self.h();
        let mut out = vec![identity(h)];
        for _ in 0..depth {
            let prev = out.last().unwrap();
            let rows = prev.nrows();
            let mut next = CMatrix::zeros(rows * self.d(), h);
            for (i, t) in self.matrices.iter().enumerate() {
                next.rows_mut(i * rows, rows).copy_from(&(prev * t.adjoint()));
            }
            out.push(next);
        }
        out
    }

    /// `[c_0, ..., c_N]`, `c_n = Σ_i (J_{n,i} ⊗ I) c_{n−1} T_i^*` in `X(n) ⊗ H`.
    pub fn frame_adjoint_powers(&self, sys: &SubproductSystem) -> Result<Vec<CMatrix>> {
        if sys.d() != self.d() {
            return Err(Error::DimensionMismatch { what: "tuple length".into(), expected: sys.d(), found: self.d() });
        }
        let h = self.h();
        let mut out = vec![identity(h)];
        for n in 1..=sys.depth() {
            let prev = out.last().unwrap();
            let mut next = CMatrix::zeros(sys.fiber(n).dim() * h, h);
            for (i, t) in self.matrices.iter().enumerate() {
                let block = sys.letter_block(i + 1, n - 1);
                next += kron_left_apply(&block, &gemm(prev, false, t, true), h);
            }
            out.push(next);
        }
        Ok(out)
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let file: RepFile = serde_json::from_str(text)?;
        if file.matrices.len() != file.d {
            return Err(Error::Format(format!("key \"d\" = {} but {} matrices given", file.d, file.matrices.len())));
        }
        let ms = file.matrices.iter().map(MatrixJson::to_matrix).collect::<Result<Vec<_>>>()?;
        let rep = RepTuple::new(ms)?;
        if rep.h() != file.h {
            return Err(Error::Format(format!("key \"h\" = {} but matrices are {}x{}", file.h, rep.h(), rep.h())));
        }
        Ok(rep)
    }

    pub fn to_json(&self) -> RepFile {
        RepFile { d: self.d(), h: self.h(), matrices: self.matrices.iter().map(MatrixJson::from_matrix).collect() }
    }
}

/// Representation file: `{"d": 2, "h": 3, "matrices": [matrix, ...]}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RepFile {
    pub d: usize,
    pub h: usize,
    pub matrices: Vec<MatrixJson>,
}

fn conj_sum(ts: &[CMatrix], a: &CMatrix) -> CMatrix {
    let mut out = CMatrix::zeros(a.nrows(), a.ncols());
    for t in ts {
        out += t * a * t.adjoint();
    }
    out
}

fn row_norm_of(ts: &[CMatrix]) -> f64 {
    let h = ts[0].nrows();
    opnorm(&conj_sum(ts, &identity(h))).sqrt()
}

/// `(P_{X(n)} ⊗ I_h) m` for `m` in `E^{⊗n} ⊗ H`.
fn project_fiber(f: &CMatrix, m: &CMatrix, h: usize) -> CMatrix {
    kron_left_apply(f, &kron_left_apply(&f.adjoint(), m, h), h)
}

#[derive(Clone, Debug, Serialize)]
pub struct LevelResidual {
    pub level: usize,
    pub residual: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct RepReport {
    pub levels: Vec<LevelResidual>,
    /// `‖g(T)‖` for each known generator.
    pub generator_residuals: Vec<f64>,
    pub max_residual: f64,
    pub failed_at: Option<usize>,
    pub pass: bool,
}

fn known_ideal(sys: &SubproductSystem) -> Option<IdealGens> {
    match sys.provenance() {
        Provenance::Ideal(g) => Some(g.clone()),
        Provenance::QMatrix(q) => crate::subproduct::qmatrix_ideal(q).ok(),
        Provenance::Quadratic(a) => crate::subproduct::quadratic_ideal(a).ok(),
        _ => None,
    }
}

/// Level residuals `‖(P_{X(n)}^⊥ ⊗ I) L_n‖` for `n ≤ N`, plus generator
/// residuals when the system came from an ideal.
pub fn is_representation(sys: &SubproductSystem, t: &RepTuple) -> Result<RepReport> {
    if sys.d() != t.d() {
        return Err(Error::DimensionMismatch { what: "tuple length".into(), expected: sys.d(), found: t.d() });
    }
    let h = t.h();
    let ls = t.ambient_adjoint_powers(sys.depth());
    let mut levels = Vec::new();
    let mut failed_at = None;
    for (n, l) in ls.iter().enumerate().skip(1) {
        let residual = opnorm(&(l - project_fiber(sys.fiber(n).frame(), l, h)));
        if residual > REP_TOL && failed_at.is_none() {
            failed_at = Some(n);
        }
        levels.push(LevelResidual { level: n, residual });
    }
    let mut generator_residuals = Vec::new();
    if let Some(ideal) = known_ideal(sys) {
        for g in ideal.generators() {
            generator_residuals.push(opnorm(&g.eval_on_tuple(t.matrices())?));
        }
    }
    let max_residual = levels.iter().map(|l| l.residual).chain(generator_residuals.iter().copied()).fold(0.0, f64::max);
    Ok(RepReport { levels, generator_residuals, max_residual, failed_at, pass: max_residual <= REP_TOL })
}

#[derive(Clone, Debug)]
pub struct PoissonKernel {
    r: f64,
    depth: usize,
    h: usize,
    /// Geometric ratio of the dropped tail.
    ratio: f64,
    matrix: CMatrix,
    source: RepTuple,
}

/// `K_r(T) h = Σ_α e_α ⊗ r^{|α|} Δ(rT)^{1/2} T^{α*} h`, truncated at the depth of `fock`.
pub fn poisson_kernel(fock: &TruncatedFock, t: &RepTuple, r: f64) -> Result<PoissonKernel> {
    let rho = t.row_norm();
    if !(r > 0.0 && r <= 1.0) {
        return Err(Error::InvalidParameter(format!("r = {r} outside (0, 1]")));
    }
    if rho > 1.0 + 1e-12 || (r >= 1.0 && rho >= 1.0 - 1e-12) {
        return Err(Error::KernelNotSummable { row_norm: rho, r });
    }
    let sys = fock.system();
    let h = t.h();
    let cs = t.frame_adjoint_powers(sys)?;
    let delta = identity(h) - conj_sum(t.matrices(), &identity(h)) * c(r * r, 0.0);
    let root = psd_sqrt(&delta, 1e-12);
    let mut matrix = CMatrix::zeros(fock.total_dim() * h, h);
    for (n, cn) in cs.iter().enumerate() {
        let block = kron_right_apply(&root, cn) * c(r.powi(n as i32), 0.0);
        matrix.rows_mut(fock.level_offsets()[n] * h, block.nrows()).copy_from(&block);
    }
    let ratio = if r < 1.0 { r } else { rho };
    Ok(PoissonKernel { r, depth: sys.depth(), h, ratio, matrix, source: t.clone() })
}

#[derive(Clone, Debug, Serialize)]
pub struct TransformCheck {
    pub alpha: Vec<usize>,
    pub beta: Vec<usize>,
    pub residual: f64,
    pub bound: f64,
    pub pass: bool,
}

impl PoissonKernel {
    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    /// `ratio^{2(N+1−m)} / (1 − ratio²)` for words of total length `m`.
    pub fn tail_bound(&self, m: usize) -> f64 {
        let q = self.ratio;
        let e = 2 * (self.depth + 1).saturating_sub(m);
        q.powi(e as i32) / (1.0 - q * q)
    }

    /// `‖K^*K − I_h‖`.
    pub fn isometry_defect(&self) -> f64 {
        opnorm(&(self.matrix.adjoint() * &self.matrix - identity(self.h)))
    }

    /// `K^*(S^α S^{β*} ⊗ I)K`.
    pub fn transform(&self, shifts: &ShiftSet, alpha: &Word, beta: &Word) -> CMatrix {
        let left = kron_left_apply(&shifts.word(alpha).adjoint(), &self.matrix, self.h);
        let right = kron_left_apply(&shifts.word(beta).adjoint(), &self.matrix, self.h);
        left.adjoint() * right
    }

    /// Transform against `r^{|α|+|β|} T^α T^{β*}`.
    pub fn check(&self, shifts: &ShiftSet, alpha: &Word, beta: &Word) -> TransformCheck {
        let m = alpha.len() + beta.len();
        let target = self.source.word(alpha) * self.source.word(beta).adjoint() * c(self.r.powi(m as i32), 0.0);
        let residual = opnorm(&(self.transform(shifts, alpha, beta) - target));
        let bound = self.tail_bound(m);
        TransformCheck {
            alpha: alpha.letters().to_vec(),
            beta: beta.letters().to_vec(),
            residual,
            bound,
            pass: residual <= bound + 1e-10,
        }
    }

    /// Largest `‖(P_{X(n)}^⊥ ⊗ I) K_n‖` with the level blocks recomputed in `E^{⊗n} ⊗ H`.
    pub fn range_residual(&self, sys: &SubproductSystem) -> f64 {
        let t = &self.source;
        let h = self.h;
        let delta = identity(h) - conj_sum(t.matrices(), &identity(h)) * c(self.r * self.r, 0.0);
        let root = psd_sqrt(&delta, 1e-12);
        t.ambient_adjoint_powers(self.depth)
            .iter()
            .enumerate()
            .skip(1)
            .map(|(n, l)| {
                let block = kron_right_apply(&root, l) * c(self.r.powi(n as i32), 0.0);
                opnorm(&(&block - project_fiber(sys.fiber(n).frame(), &block, h)))
            })
            .fold(0.0, f64::max)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ModelReport {
    pub r: f64,
    /// Row norm of `T/r`.
    pub ratio: f64,
    pub residuals: Vec<f64>,
    /// Same residuals restricted to levels `≤ N−1`.
    pub window_residuals: Vec<f64>,
    pub tail_bound: f64,
    pub pass: bool,
}

/// With `W = T/r` and `K = K_1(W)`: `‖(S_i^* ⊗ I)K − K W_i^*‖` for each `i`.
pub fn model_intertwining_check(fock: &TruncatedFock, shifts: &ShiftSet, t: &RepTuple, r: f64) -> Result<ModelReport> {
    if !(r > t.row_norm()) {
        return Err(Error::InvalidParameter(format!("r = {r} must exceed the row norm {}", t.row_norm())));
    }
    let w = t.scaled(1.0 / r);
    let k = poisson_kernel(fock, &w, 1.0)?;
    let h = t.h();
    let n = fock.depth();
    let rows_window = fock.window_dim(n.saturating_sub(1)) * h;
    let mut residuals = Vec::new();
    let mut window_residuals = Vec::new();
    for i in 1..=t.d() {
        let lhs = kron_left_apply(&shifts.get(i).adjoint(), k.matrix(), h);
        let diff = lhs - k.matrix() * w.get(i).adjoint();
        residuals.push(opnorm(&diff));
        window_residuals.push(opnorm(&diff.rows(0, rows_window).into_owned()));
    }
    let ratio = w.row_norm();
    let tail_bound = ratio.powi(n as i32 + 1);
    let pass = residuals.iter().all(|&x| x <= tail_bound + 1e-9) && window_residuals.iter().all(|&x| x <= 1e-9);
    Ok(ModelReport { r, ratio, residuals, window_residuals, tail_bound, pass })
}

#[derive(Clone, Debug, Serialize)]
pub struct VnReport {
    pub lhs: f64,
    pub rhs: f64,
    pub rhs_previous: f64,
    pub gap: f64,
    pub verdict: Verdict,
}

/// `‖p(T)q(T)^*‖` against `‖p(S)q(S)^*‖` on the truncated Fock space at depth
/// `N` and `N−1`.
pub fn vn_inequality_check(sys: &SubproductSystem, t: &RepTuple, p: &NCPoly, q: &NCPoly) -> Result<VnReport> {
    let n = sys.depth();
    if p.max_len() + q.max_len() + 2 > n {
        return Err(Error::InvalidParameter(format!(
            "deg p + deg q = {} exceeds depth {n} - 2",
            p.max_len() + q.max_len()
        )));
    }
    if t.row_norm() > 1.0 + 1e-12 {
        return Err(Error::InvalidParameter(format!("row norm {} exceeds 1", t.row_norm())));
    }
    let rep = is_representation(sys, t)?;
    if !rep.pass {
        return Err(Error::InvalidParameter(format!("tuple is not a representation (residual {:.3e})", rep.max_residual)));
    }
    let lhs = opnorm(&(p.eval_on_tuple(t.matrices())? * q.eval_on_tuple(t.matrices())?.adjoint()));
    let shift_norm = |s: &SubproductSystem| -> Result<f64> {
        let sh = TruncatedFock::new(s.clone()).shifts();
        Ok(opnorm(&(p.eval_on_tuple(sh.matrices())? * q.eval_on_tuple(sh.matrices())?.adjoint())))
    };
    let rhs = shift_norm(sys)?;
    let rhs_previous = shift_norm(&sys.truncate(n - 1))?;
    let gap = (rhs - rhs_previous).abs();
    let verdict = if lhs <= rhs + 1e-8 || (gap <= 1e-3 && lhs <= rhs + gap.max(1e-8)) {
        Verdict::Pass
    } else if gap > 1e-3 {
        Verdict::Inconclusive
    } else {
        Verdict::Fail
    };
    Ok(VnReport { lhs, rhs, rhs_previous, gap, verdict })
}

#[derive(Clone, Debug)]
pub struct PieceReport {
    pub subspace: Subspace,
    pub iterations: usize,
}

/// Largest `H' ⊆ H` with `L_n H' ⊆ X(n) ⊗ H'` for all `n ≤ N`, where `T` acts
/// on `H` as a representation of the larger system `y`.
pub fn maximal_piece(x: &SubproductSystem, y: &SubproductSystem, t: &RepTuple) -> Result<PieceReport> {
    if x.d() != y.d() || t.d() != x.d() {
        return Err(Error::DimensionMismatch { what: "alphabet".into(), expected: y.d(), found: x.d() });
    }
    let depth = x.depth().min(y.depth());
    for n in 1..=depth {
        let residual = y.fiber(n).containment_residual(x.fiber(n))?;
        if residual > 1e-9 {
            return Err(Error::NotInFiber { level: n, residual });
        }
    }
    let h = t.h();
    let ls = t.ambient_adjoint_powers(depth);
    let mut current = Subspace::full(h);
    let mut iterations = 0;
    loop {
        iterations += 1;
        let b = current.frame().clone();
        if b.ncols() == 0 {
            break;
        }
        let mut blocks = Vec::new();
        for (n, l) in ls.iter().enumerate().skip(1) {
            let z = l * &b;
            let f = x.fiber(n).frame();
            let coords = kron_right_apply(&b.adjoint(), &kron_left_apply(&f.adjoint(), &z, h));
            let proj = kron_right_apply(&b, &kron_left_apply(f, &coords, b.ncols()));
            blocks.push(z - proj);
        }
        let rows: usize = blocks.iter().map(|m| m.nrows()).sum();
        let mut stack = CMatrix::zeros(rows, b.ncols());
        let mut r0 = 0;
        for m in &blocks {
            stack.rows_mut(r0, m.nrows()).copy_from(m);
            r0 += m.nrows();
        }
        let ker = if rows == 0 { identity(b.ncols()) } else { kernel(&stack, DEFAULT_REL_TOL) };
        if ker.ncols() == b.ncols() {
            break;
        }
        current = Subspace::from_orthonormal(&b * ker, DEFAULT_REL_TOL)?;
    }
    Ok(PieceReport { subspace: current, iterations })
}

/// `Θ_n(a) = T̃_n (I ⊗ a) T̃_n^*` for `n ≤ N`.
#[derive(Clone, Debug)]
pub struct InducedSemigroup {
    h: usize,
    powers: Vec<CMatrix>,
}

#[derive(Clone, Debug)]
pub struct SemigroupCheck {
    pub lhs: CMatrix,
    pub rhs: CMatrix,
    pub residual: f64,
}

impl InducedSemigroup {
    pub fn new(sys: &SubproductSystem, t: &RepTuple) -> Result<Self> {
        Ok(InducedSemigroup { h: t.h(), powers: t.frame_adjoint_powers(sys)? })
    }

    pub fn depth(&self) -> usize {
        self.powers.len() - 1
    }

    pub fn apply(&self, n: usize, a: &CMatrix) -> Result<CMatrix> {
        if n > self.depth() {
            return Err(Error::LevelTooDeep { level: n, depth: self.depth() });
        }
        if a.nrows() != self.h || a.ncols() != self.h {
            return Err(Error::DimensionMismatch { what: "argument of the semigroup".into(), expected: self.h, found: a.nrows() });
        }
        let cn = &self.powers[n];
        Ok(cn.adjoint() * kron_right_apply(a, cn))
    }

    /// `Θ_m(Θ_n(a))` against `Θ_{m+n}(a)`.
    pub fn check(&self, a: &CMatrix, m: usize, n: usize) -> Result<SemigroupCheck> {
        let lhs = self.apply(m, &self.apply(n, a)?)?;
        let rhs = self.apply(m + n, a)?;
        let residual = opnorm(&(&lhs - &rhs));
        Ok(SemigroupCheck { lhs, rhs, residual })
    }

    /// Smallest eigenvalue of the Choi matrix of `Θ_n`.
    pub fn choi_min_eigenvalue(&self, n: usize) -> Result<f64> {
        if n > self.depth() {
            return Err(Error::LevelTooDeep { level: n, depth: self.depth() });
        }
        let choi = choi_of_map(self.h, |a| self.apply(n, a).expect("checked level"));
        Ok(hermitian_eigenvalues(&choi).first().copied().unwrap_or(0.0))
    }
}

/// One-shot form: `Θ_m(Θ_n(a))` vs `Θ_{m+n}(a)`.
pub fn induced_cp_semigroup(sys: &SubproductSystem, t: &RepTuple, a: &CMatrix, m: usize, n: usize) -> Result<SemigroupCheck> {
    if m + n > sys.depth() {
        return Err(Error::LevelTooDeep { level: m + n, depth: sys.depth() });
    }
    InducedSemigroup::new(sys, t)?.check(a, m, n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::subproduct::SubshiftSpec;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rnd(rng: &mut ChaCha8Rng, r: usize, cc: usize) -> CMatrix {
        CMatrix::from_fn(r, cc, |_, _| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
    }

    fn symmetric(depth: usize) -> SubproductSystem {
        SubproductSystem::from_qmatrix(&CMatrix::from_element(2, 2, c(1.0, 0.0)), depth).unwrap()
    }

    fn golden(depth: usize) -> SubproductSystem {
        SubproductSystem::from_subshift(&SubshiftSpec::from_letters(2, &[&[2, 2]]).unwrap(), depth)
    }

    /// Commuting pair `S D_i S^{-1}`, scaled to the given row norm.
    fn commuting_pair(rng: &mut ChaCha8Rng, h: usize, norm: f64) -> RepTuple {
        let s = rnd(rng, h, h) + identity(h) * c(2.0, 0.0);
        let inv = s.clone().try_inverse().unwrap();
        let ms: Vec<CMatrix> = (0..2)
            .map(|_| {
                let d = CMatrix::from_diagonal(&crate::linalg::CVector::from_fn(h, |_, _| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))));
                &s * d * &inv
            })
            .collect();
        let t = RepTuple::new(ms).unwrap();
        t.scaled(norm / t.row_norm())
    }

    /// Oracle: `Σ_{|α|=n} T^α a T^{α*}` by word enumeration.
    fn word_sum(t: &RepTuple, a: &CMatrix, n: usize) -> CMatrix {
        Word::all(n, t.d()).fold(CMatrix::zeros(t.h(), t.h()), |acc, w| {
            let tw = t.word(&w);
            acc + &tw * a * tw.adjoint()
        })
    }

    #[test]
    fn commuting_pair_represents_symmetric_system() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let t = commuting_pair(&mut rng, 3, 0.9);
        let rep = is_representation(&symmetric(5), &t).unwrap();
        assert!(rep.pass, "{rep:?}");
        assert_eq!(rep.generator_residuals.len(), 1);
    }

    #[test]
    fn golden_mean_detects_square() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let t = RepTuple::new(vec![rnd(&mut rng, 3, 3), rnd(&mut rng, 3, 3)]).unwrap();
        let rep = is_representation(&golden(4), &t).unwrap();
        assert!(!rep.pass);
        assert_eq!(rep.failed_at, Some(2));
        let t2sq = opnorm(&(t.get(2) * t.get(2)));
        assert!((rep.levels[1].residual - t2sq).abs() < 1e-10);
    }

    #[test]
    fn truncated_shift_is_a_representation() {
        for sys in [symmetric(4), golden(5)] {
            let f = TruncatedFock::new(sys.clone());
            let t = RepTuple::from_shifts(&f.shifts());
            assert!(is_representation(&sys, &t).unwrap().pass);
        }
    }

    #[test]
    fn frame_powers_agree_with_ambient_on_representations() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let t = commuting_pair(&mut rng, 2, 1.0);
        let sys = symmetric(4);
        let cs = t.frame_adjoint_powers(&sys).unwrap();
        let ls = t.ambient_adjoint_powers(4);
        for n in 0..=4 {
            let lifted = kron_left_apply(sys.fiber(n).frame(), &cs[n], 2);
            assert!(opnorm(&(lifted - &ls[n])) < 1e-12);
        }
    }

    #[test]
    fn poisson_kernel_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let sys = symmetric(10);
        let f = TruncatedFock::new(sys.clone());
        let s = f.shifts();
        let t = commuting_pair(&mut rng, 3, 1.0);
        let k = poisson_kernel(&f, &t, 0.6).unwrap();
        assert!(k.isometry_defect() <= k.tail_bound(0) + 1e-10);
        let words: Vec<Word> = vec![Word::empty(), Word::new(vec![1]), Word::new(vec![2])];
        for a in &words {
            for b in &words {
                let ch = k.check(&s, a, b);
                assert!(ch.pass, "{ch:?}");
            }
        }
        assert!(k.range_residual(&sys) <= 1e-9);
        let z = RepTuple::zero(2, 2);
        let kz = poisson_kernel(&f, &z, 0.6).unwrap();
        assert!(opnorm(&(kz.transform(&s, &Word::empty(), &Word::empty()) - identity(2))) < 1e-15);
        assert!(opnorm(&kz.transform(&s, &Word::new(vec![1]), &Word::empty())) < 1e-15);
    }

    #[test]
    fn poisson_kernel_rejects_boundary() {
        let f = TruncatedFock::new(symmetric(3));
        let mut e = CMatrix::zeros(1, 1);
        e[(0, 0)] = c(1.0, 0.0);
        let t = RepTuple::new(vec![e, CMatrix::zeros(1, 1)]).unwrap();
        assert!(matches!(poisson_kernel(&f, &t, 1.0), Err(Error::KernelNotSummable { .. })));
        assert!(poisson_kernel(&f, &t, 0.9).is_ok());
        assert!(poisson_kernel(&f, &t.scaled(0.5), 1.0).is_ok());
        assert!(poisson_kernel(&f, &t, 1.5).is_err());
    }

    #[test]
    fn model_examples() {
        let f = TruncatedFock::new(symmetric(8));
        let s = f.shifts();
        let z = model_intertwining_check(&f, &s, &RepTuple::zero(2, 2), 0.9).unwrap();
        assert!(z.pass && z.residuals.iter().all(|&r| r < 1e-15));
        // Half the shift of the symmetric system, compressed to levels <= 2.
        let small = TruncatedFock::new(symmetric(2));
        let t = RepTuple::from_shifts(&small.shifts()).scaled(0.5);
        let rep = model_intertwining_check(&f, &s, &t, 0.9).unwrap();
        assert!(rep.pass, "{rep:?}");
        assert!(model_intertwining_check(&f, &s, &t, 0.4).is_err());
    }

    #[test]
    fn vn_examples() {
        let full = SubproductSystem::full(2, 6);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let t = RepTuple::new(vec![rnd(&mut rng, 2, 2), rnd(&mut rng, 2, 2)]).unwrap();
        let t = t.scaled(1.0 / t.row_norm());
        let x1 = NCPoly::var(2, 1).unwrap();
        let rep = vn_inequality_check(&full, &t, &x1, &x1).unwrap();
        assert!((rep.rhs - 1.0).abs() < 1e-12);
        assert_eq!(rep.verdict, Verdict::Pass);
        // Compression of the symmetric shift to levels <= 3.
        let sys = symmetric(10);
        let t = RepTuple::from_shifts(&TruncatedFock::new(symmetric(3)).shifts());
        let p = NCPoly::monomial(2, vec![1, 2], c(1.0, 0.0)).unwrap();
        let q = NCPoly::one(2);
        let rep = vn_inequality_check(&sys, &t, &p, &q).unwrap();
        assert!(rep.lhs <= rep.rhs + 1e-12, "{rep:?}");
        assert_eq!(rep.verdict, Verdict::Pass);
        let bad = RepTuple::new(vec![rnd(&mut rng, 2, 2), rnd(&mut rng, 2, 2)]).unwrap();
        let bad = bad.scaled(0.5 / bad.row_norm());
        assert!(vn_inequality_check(&sys, &bad, &p, &q).is_err());
    }

    #[test]
    fn maximal_piece_examples() {
        let n = 5;
        let full = SubproductSystem::full(2, n);
        let t = RepTuple::from_shifts(&TruncatedFock::new(full.clone()).shifts());
        let same = maximal_piece(&full, &full, &t).unwrap();
        assert_eq!(same.subspace.dim(), t.h());
        let g = golden(n);
        let piece = maximal_piece(&g, &full, &t).unwrap();
        let ff = TruncatedFock::new(full.clone());
        let mut idx = Vec::new();
        let spec = SubshiftSpec::from_letters(2, &[&[2, 2]]).unwrap();
        for k in 0..=n {
            for w in spec.legal_words(k) {
                idx.push(ff.level_offsets()[k] + w.index(2));
            }
        }
        let expect = Subspace::coordinate(t.h(), &idx);
        assert!(piece.subspace.distance(&expect).unwrap() <= 1e-9);
        let comp = t.compress(&piece.subspace).unwrap();
        assert!(is_representation(&g, &comp).unwrap().pass);
    }

    #[test]
    fn maximal_piece_of_trivial_system() {
        // X(n) = 0 for n >= 1 over two letters: the piece is ⋂ ker T_i^*.
        let zero_sys = SubproductSystem::maximal_with_fibers(&[Subspace::zero(2)], 3).unwrap();
        let full = SubproductSystem::full(2, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let mut a = rnd(&mut rng, 4, 4);
        let mut b = rnd(&mut rng, 4, 4);
        for j in 0..4 {
            a[(0, j)] = c(0.0, 0.0);
            a[(1, j)] = c(0.0, 0.0);
            b[(0, j)] = c(0.0, 0.0);
        }
        let t = RepTuple::new(vec![a.clone(), b.clone()]).unwrap();
        let piece = maximal_piece(&zero_sys, &full, &t).unwrap();
        let mut stacked = CMatrix::zeros(8, 4);
        stacked.rows_mut(0, 4).copy_from(&a.adjoint());
        stacked.rows_mut(4, 4).copy_from(&b.adjoint());
        let expect = Subspace::span_columns(&kernel(&stacked, DEFAULT_REL_TOL), DEFAULT_REL_TOL);
        assert_eq!(expect.dim(), 1);
        assert!(piece.subspace.distance(&expect).unwrap() <= 1e-9);
    }

    #[test]
    fn semigroup_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let sys = symmetric(4);
        let t = commuting_pair(&mut rng, 3, 0.95);
        let a = rnd(&mut rng, 3, 3);
        let sg = InducedSemigroup::new(&sys, &t).unwrap();
        for n in 0..=4 {
            assert!(opnorm(&(sg.apply(n, &a).unwrap() - word_sum(&t, &a, n))) < 1e-12);
            assert!(sg.choi_min_eigenvalue(n).unwrap() >= -1e-10);
        }
        assert!(induced_cp_semigroup(&sys, &t, &a, 1, 1).unwrap().residual <= 1e-10);
        assert!(induced_cp_semigroup(&sys, &t, &a, 3, 2).is_err());
        let z = InducedSemigroup::new(&sys, &RepTuple::zero(2, 3)).unwrap();
        assert!(opnorm(&z.apply(2, &a).unwrap()) == 0.0);
    }

    #[test]
    fn coisometric_tuple_is_unital() {
        // |t_1|^2 + |t_2|^2 = 1 on C^1.
        let t1 = CMatrix::from_element(1, 1, c(0.6, 0.0));
        let t2 = CMatrix::from_element(1, 1, c(0.0, 0.8));
        let t = RepTuple::new(vec![t1, t2]).unwrap();
        let sys = symmetric(5);
        let sg = InducedSemigroup::new(&sys, &t).unwrap();
        for n in 0..=5 {
            assert!((sg.apply(n, &identity(1)).unwrap()[(0, 0)] - c(1.0, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn rep_file_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let t = commuting_pair(&mut rng, 2, 0.7);
        let text = serde_json::to_string(&t.to_json()).unwrap();
        let back = RepTuple::from_json_str(&text).unwrap();
        assert!(opnorm(&(back.get(2) - t.get(2))) == 0.0);
        let bad = r#"{"d": 2, "h": 1, "matrices": [{"rows": 1, "cols": 1, "data": [[1, 0]]}]}"#;
        assert!(RepTuple::from_json_str(bad).is_err());
    }
}

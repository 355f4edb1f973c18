//! Truncated Fock space `⊕_{n≤N} X(n)` and the shift tuple acting on it.
//!
//! Level `n` is stored in the coordinates of the frame of `X(n)`; the vacuum
//! is coordinate 0. Shifts map level `n` into level `n+1` and kill level `N`,
//! so every identity is exact only on a window of low levels. Each check
//! reports the window it asserts on.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{c, identity, opnorm, rank, CMatrix, CVector, MatrixJson, DEFAULT_REL_TOL};
use crate::ncpoly::{Degree, NCPoly, Word};
use crate::subproduct::{SubproductSystem, SubshiftSpec};

#[derive(Clone, Debug)]
pub struct TruncatedFock {
    system: SubproductSystem,
    offsets: Vec<usize>,
}

impl TruncatedFock {
    pub fn new(system: SubproductSystem) -> Self {
        let mut offsets = vec![0];
        for dim in system.dims() {
            offsets.push(offsets.last().unwrap() + dim);
        }
        TruncatedFock { system, offsets }
    }

    pub fn system(&self) -> &SubproductSystem {
        &self.system
    }

    pub fn d(&self) -> usize {
        self.system.d()
    }

    pub fn depth(&self) -> usize {
        self.system.depth()
    }

    /// `offsets[n]` is the first coordinate of level `n`; the last entry is the total.
    pub fn level_offsets(&self) -> &[usize] {
        &self.offsets
    }

    pub fn level_range(&self, n: usize) -> std::ops::Range<usize> {
        self.offsets[n]..self.offsets[n + 1]
    }

    pub fn total_dim(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    /// Dimension of levels `0..=max_level`.
    pub fn window_dim(&self, max_level: usize) -> usize {
        self.offsets[max_level.min(self.depth()) + 1]
    }

    pub fn vacuum(&self) -> CVector {
        let mut v = CVector::zeros(self.total_dim());
        v[0] = c(1.0, 0.0);
        v
    }

    /// Diagonal projector onto levels `lo..=hi`.
    pub fn levels_projector(&self, lo: usize, hi: usize) -> CMatrix {
        let mut p = CMatrix::zeros(self.total_dim(), self.total_dim());
        for n in lo..=hi.min(self.depth()) {
            for k in self.level_range(n) {
                p[(k, k)] = c(1.0, 0.0);
            }
        }
        p
    }

    /// Places an ambient vector of `E^{⊗n}` at level `n` (projecting onto `X(n)`).
    pub fn embed(&self, n: usize, xi: &CVector) -> Result<CVector> {
        if n > self.depth() {
            return Err(Error::LevelTooDeep { level: n, depth: self.depth() });
        }
        let coords = self.system.fiber(n).coordinates(xi)?;
        let mut v = CVector::zeros(self.total_dim());
        v.rows_mut(self.offsets[n], coords.len()).copy_from(&coords);
        Ok(v)
    }

    /// `F_{n+1}^*(e_i ⊗ F_n)` for a 1-based letter `i`.
    pub fn shift_block(&self, i: usize, n: usize) -> CMatrix {
        self.system.letter_block(i, n)
    }

    pub fn shifts(&self) -> ShiftSet {
        let d = self.d();
        let total = self.total_dim();
        let mut matrices = Vec::with_capacity(d);
        for i in 1..=d {
            let mut s = CMatrix::zeros(total, total);
            for n in 0..self.depth() {
                let block = self.shift_block(i, n);
                s.view_mut((self.offsets[n + 1], self.offsets[n]), block.shape()).copy_from(&block);
            }
            matrices.push(s);
        }
        ShiftSet { matrices, offsets: self.offsets.clone() }
    }

    /// `S^X(ξ)` for `ξ ∈ X(n)` given in ambient coordinates of `E^{⊗n}`.
    pub fn shift_of_vector(&self, n: usize, xi: &CVector) -> Result<CMatrix> {
        let depth = self.depth();
        if n > depth {
            return Err(Error::LevelTooDeep { level: n, depth });
        }
        let fiber = self.system.fiber(n);
        if xi.len() != fiber.ambient_dim() {
            return Err(Error::DimensionMismatch { what: "vector level".into(), expected: fiber.ambient_dim(), found: xi.len() });
        }
        let residual = (xi - fiber.project(xi)?).norm();
        if residual > 1e-9 * xi.norm().max(1.0) {
            return Err(Error::NotInFiber { level: n, residual });
        }
        let total = self.total_dim();
        let mut out = CMatrix::zeros(total, total);
        let xi_col = CMatrix::from_column_slice(xi.len(), 1, xi.as_slice());
        for k in 0..=(depth - n) {
            let f_k = self.system.fiber(k).frame();
            let f_nk = self.system.fiber(n + k).frame();
            let block = f_nk.adjoint() * crate::linalg::tensor(&xi_col, f_k);
            out.view_mut((self.offsets[n + k], self.offsets[k]), block.shape()).copy_from(&block);
        }
        Ok(out)
    }

    /// `I − Σ_{|α|=k} S^α S^{α*}`, computed as `I − Φ^k(I)` with `Φ(A) = Σ S_i A S_i^*`.
    pub fn defect_projection(&self, shifts: &ShiftSet, k: usize) -> Result<CMatrix> {
        if k > self.depth() {
            return Err(Error::LevelTooDeep { level: k, depth: self.depth() });
        }
        let mut acc = identity(self.total_dim());
        for _ in 0..k {
            acc = shifts.conjugation_sum(&acc);
        }
        Ok(identity(self.total_dim()) - acc)
    }

    /// Compares the k-defect with the projector onto levels `< k` on levels `≤ N−k`.
    pub fn defect_check(&self, shifts: &ShiftSet, k: usize) -> Result<DefectReport> {
        let defect = self.defect_projection(shifts, k)?;
        let expected = if k == 0 { CMatrix::zeros(self.total_dim(), self.total_dim()) } else { self.levels_projector(0, k - 1) };
        let diff = &defect - &expected;
        let window = self.depth() - k;
        let w = self.window_dim(window);
        let residual = opnorm(&diff.view((0, 0), (w, w)).into_owned());
        let level_residuals = (0..=self.depth())
            .map(|n| {
                let r = self.level_range(n);
                opnorm(&diff.view((r.start, r.start), (r.len(), r.len())).into_owned())
            })
            .collect();
        Ok(DefectReport { k, window, residual, full_residual: opnorm(&diff), level_residuals, defect })
    }

    /// Tests `p ∈ I^X` two ways: `‖P_{X(n)} p(e)‖` and `‖p(S)Ω‖`, plus `‖p(S)‖` on levels `≤ N−n`.
    pub fn annihilation_check(&self, shifts: &ShiftSet, p: &NCPoly, tol: f64) -> Result<AnnihilationReport> {
        if p.d() != self.d() {
            return Err(Error::DimensionMismatch { what: "polynomial alphabet".into(), expected: self.d(), found: p.d() });
        }
        let n = match p.degree() {
            Degree::Homogeneous(n) => n,
            Degree::Zero => 0,
            Degree::Inhomogeneous => return Err(Error::Inhomogeneous),
        };
        if n > self.depth() {
            return Err(Error::LevelTooDeep { level: n, depth: self.depth() });
        }
        let projection_norm = if p.is_zero() {
            0.0
        } else if n == 0 {
            p.coeff_norm()
        } else {
            self.system.fiber(n).project(&p.eval_on_basis()?)?.norm()
        };
        let op = p.eval_on_tuple(&shifts.matrices)?;
        let vacuum_residual = op.column(0).norm();
        let window = self.depth() - n;
        let w = self.window_dim(window);
        let operator_residual = opnorm(&op.columns(0, w).into_owned());
        let in_ideal = projection_norm <= tol;
        let consistent = (projection_norm - vacuum_residual).abs() <= 1e-10 && in_ideal == (operator_residual <= tol);
        Ok(AnnihilationReport { degree: n, in_ideal, projection_norm, vacuum_residual, operator_residual, window, consistent })
    }

    /// Cuntz–Krieger type relations of a subshift system of step `k`.
    pub fn subshift_relations(&self, shifts: &ShiftSet, spec: &SubshiftSpec) -> Result<SubshiftReport> {
        let k = spec.step();
        let depth = self.depth();
        if depth < k + 2 {
            return Err(Error::InvalidParameter(format!("depth {depth} < step {k} + 2")));
        }
        if spec.d() != self.d() {
            return Err(Error::DimensionMismatch { what: "subshift alphabet".into(), expected: self.d(), found: spec.d() });
        }
        let d = self.d();
        let s = &shifts.matrices;
        let mut cross_max: f64 = 0.0;
        for i in 0..d {
            for j in 0..d {
                if i != j {
                    cross_max = cross_max.max(opnorm(&(s[i].adjoint() * &s[j])));
                }
            }
        }
        let window = depth - k - 1;
        let w = self.window_dim(window);
        let below = self.window_dim(k - 1);
        let vacuum = self.levels_projector(0, 0);
        let followers = spec.legal_words(k);
        let mut defects = Vec::with_capacity(d);
        for i in 1..=d {
            let mut sum = CMatrix::zeros(self.total_dim(), self.total_dim());
            let mut count = 0;
            for alpha in &followers {
                let iw = Word::new(vec![i]).concat(alpha);
                if spec.is_legal(&iw) {
                    let sa = shifts.word(alpha);
                    sum += &sa * sa.adjoint();
                    count += 1;
                }
            }
            let full = s[i - 1].adjoint() * &s[i - 1] - sum;
            let dw = full.view((0, 0), (w, w)).into_owned();
            let mut outside = dw.clone();
            outside.view_mut((0, 0), (below, below)).fill(c(0.0, 0.0));
            defects.push(LetterDefect {
                letter: i,
                followers: count,
                rank: rank(&dw, DEFAULT_REL_TOL),
                outside_support_residual: opnorm(&outside),
                vacuum_residual: opnorm(&(dw - vacuum.view((0, 0), (w, w)))),
            });
        }
        let z3 = self.defect_check(shifts, 1)?;
        Ok(SubshiftReport { step: k, window, cross_max, defects, row_defect_residual: z3.residual })
    }

    /// Writes `S_1..S_d` and the offset table as JSON files in `dir`.
    pub fn export_shifts(&self, shifts: &ShiftSet, dir: &Path) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        for (i, m) in shifts.matrices.iter().enumerate() {
            let path = dir.join(format!("S{}.json", i + 1));
            fs::write(&path, serde_json::to_string(&MatrixJson::from_matrix(m))?)?;
            written.push(path);
        }
        let path = dir.join("levels.json");
        let table = LevelTable { d: self.d(), depth: self.depth(), dims: self.system.dims(), offsets: self.offsets.clone() };
        fs::write(&path, serde_json::to_string_pretty(&table)?)?;
        written.push(path);
        Ok(written)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct LevelTable {
    pub d: usize,
    pub depth: usize,
    pub dims: Vec<usize>,
    pub offsets: Vec<usize>,
}

#[derive(Clone, Debug)]
pub struct ShiftSet {
    matrices: Vec<CMatrix>,
    offsets: Vec<usize>,
}

impl ShiftSet {
    pub fn matrices(&self) -> &[CMatrix] {
        &self.matrices
    }

    pub fn get(&self, i: usize) -> &CMatrix {
        &self.matrices[i - 1]
    }

    pub fn total_dim(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    /// `S^α = S_{α_1} ⋯ S_{α_n}`.
    pub fn word(&self, alpha: &Word) -> CMatrix {
        let mut m = identity(self.total_dim());
        for &a in alpha.letters() {
            m *= &self.matrices[a - 1];
        }
        m
    }

    /// `Σ_i S_i A S_i^*`.
    pub fn conjugation_sum(&self, a: &CMatrix) -> CMatrix {
        let mut out = CMatrix::zeros(a.nrows(), a.ncols());
        for s in &self.matrices {
            out += s * a * s.adjoint();
        }
        out
    }

    /// `‖[S_1 ⋯ S_d]‖`.
    pub fn row_norm(&self) -> f64 {
        opnorm(&self.conjugation_sum(&identity(self.total_dim()))).sqrt()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct DefectReport {
    pub k: usize,
    pub window: usize,
    pub residual: f64,
    pub full_residual: f64,
    pub level_residuals: Vec<f64>,
    #[serde(skip)]
    pub defect: CMatrix,
}

#[derive(Clone, Debug, Serialize)]
pub struct AnnihilationReport {
    pub degree: usize,
    pub in_ideal: bool,
    pub projection_norm: f64,
    pub vacuum_residual: f64,
    pub operator_residual: f64,
    pub window: usize,
    pub consistent: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct LetterDefect {
    pub letter: usize,
    pub followers: usize,
    pub rank: usize,
    pub outside_support_residual: f64,
    pub vacuum_residual: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SubshiftReport {
    pub step: usize,
    pub window: usize,
    pub cross_max: f64,
    pub defects: Vec<LetterDefect>,
    pub row_defect_residual: f64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::tensor_vec;
    use crate::ncpoly::IdealGens;
    use proptest::prelude::*;

    fn golden(depth: usize) -> (SubshiftSpec, TruncatedFock) {
        let spec = SubshiftSpec::from_letters(2, &[&[2, 2]]).unwrap();
        let f = TruncatedFock::new(SubproductSystem::from_subshift(&spec, depth));
        (spec, f)
    }

    fn symmetric(depth: usize) -> TruncatedFock {
        TruncatedFock::new(SubproductSystem::from_qmatrix(&CMatrix::from_element(2, 2, c(1.0, 0.0)), depth).unwrap())
    }

    fn e(d: usize, i: usize) -> CVector {
        let mut v = CVector::zeros(d);
        v[i - 1] = c(1.0, 0.0);
        v
    }

    #[test]
    fn one_letter_full_shift_is_jordan_block() {
        let f = TruncatedFock::new(SubproductSystem::full(1, 5));
        let s = f.shifts();
        let mut j = CMatrix::zeros(6, 6);
        for k in 0..5 {
            j[(k + 1, k)] = c(1.0, 0.0);
        }
        assert!(opnorm(&(s.get(1) - j)) < 1e-15);
    }

    #[test]
    fn golden_mean_shift_action() {
        let (_, f) = golden(4);
        let s = f.shifts();
        // e_2 at level 1 is coordinate 2; S_2 e_2 would be e_22, which is forbidden.
        let v = f.embed(1, &e(2, 2)).unwrap();
        assert!((s.get(2) * &v).norm() < 1e-15);
        let img = s.get(1) * &v;
        let expect = f.embed(2, &tensor_vec(&e(2, 1), &e(2, 2))).unwrap();
        assert!((img - expect).norm() < 1e-15);
        let img = s.get(2) * f.embed(1, &e(2, 1)).unwrap();
        let expect = f.embed(2, &tensor_vec(&e(2, 2), &e(2, 1))).unwrap();
        assert!((img - expect).norm() < 1e-15);
    }

    #[test]
    fn symmetric_shifts_commute_on_window() {
        let n = 6;
        let f = symmetric(n);
        let s = f.shifts();
        let comm = s.get(1) * s.get(2) - s.get(2) * s.get(1);
        let w = f.window_dim(n - 2);
        assert!(opnorm(&comm.columns(0, w).into_owned()) <= 1e-10);
    }

    #[test]
    fn shifts_are_block_superdiagonal() {
        let (_, f) = golden(5);
        let s = f.shifts();
        for m in s.matrices() {
            for a in 0..=5 {
                for b in 0..=5 {
                    let ra = f.level_range(a);
                    let rb = f.level_range(b);
                    let block = m.view((ra.start, rb.start), (ra.len(), rb.len()));
                    if a != b + 1 {
                        assert!(block.iter().all(|z| z.norm() == 0.0));
                    }
                }
            }
        }
    }

    #[test]
    fn shift_of_vacuum_is_identity() {
        let (_, f) = golden(4);
        let one = CVector::from_element(1, c(1.0, 0.0));
        let m = f.shift_of_vector(0, &one).unwrap();
        assert!(opnorm(&(m - identity(f.total_dim()))) < 1e-15);
    }

    #[test]
    fn shift_of_vector_matches_word_sum() {
        let (_, f) = golden(6);
        let s = f.shifts();
        let fib = f.system().fiber(3);
        let coords = CVector::from_fn(fib.dim(), |i, _| c(0.3 * i as f64 - 0.2, 0.1 * (i * i) as f64));
        let xi = fib.frame() * coords;
        let xi = &xi / c(xi.norm(), 0.0);
        let m = f.shift_of_vector(3, &xi).unwrap();
        let mut oracle = CMatrix::zeros(f.total_dim(), f.total_dim());
        for (idx, w) in Word::all(3, 2).enumerate() {
            oracle += s.word(&w) * xi[idx];
        }
        assert!(opnorm(&(&m - oracle)) < 1e-12);
        assert!((opnorm(&m) - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn shift_of_vector_rejects_outside_fiber() {
        let (_, f) = golden(4);
        let err = f.shift_of_vector(2, &tensor_vec(&e(2, 2), &e(2, 2))).unwrap_err();
        assert!(matches!(err, Error::NotInFiber { level: 2, .. }));
    }

    #[test]
    fn constant_system_e2_is_partial_isometry() {
        let spec = SubshiftSpec::from_letters(2, &[&[1, 2], &[2, 2]]).unwrap();
        let f = TruncatedFock::new(SubproductSystem::from_subshift(&spec, 5));
        let m = f.shift_of_vector(1, &e(2, 2)).unwrap();
        let mm = m.adjoint() * &m;
        assert!(opnorm(&(&mm * &mm - &mm)) < 1e-12);
        // Legal words are 1^n and 2 1^{n-1}; the range at level n is 2 1^{n-1}.
        let mut cokernel = Vec::new();
        for n in 1..=5 {
            let r = f.level_range(n);
            cokernel.push(r.len() - rank(&m.rows(r.start, r.len()).into_owned(), DEFAULT_REL_TOL));
        }
        assert_eq!(cokernel, vec![1; 5]);
    }

    #[test]
    fn row_defect_is_vacuum_projection() {
        let n = 6;
        for f in [TruncatedFock::new(SubproductSystem::full(2, n)), symmetric(n), golden(n).1] {
            let s = f.shifts();
            let rep = f.defect_check(&s, 1).unwrap();
            assert_eq!(rep.window, 5);
            assert!(rep.residual <= 1e-10);
            // S_i S_i^* never leaves the window, so the top level is exact too.
            assert!(rep.full_residual <= 1e-10);
        }
    }

    #[test]
    fn k_defect_projects_below_k() {
        let f = symmetric(7);
        let s = f.shifts();
        for k in 2..=4 {
            let rep = f.defect_check(&s, k).unwrap();
            assert!(rep.residual <= 1e-10, "k={k} {}", rep.residual);
        }
        let rep = f.defect_check(&s, 7).unwrap();
        assert_eq!(rep.window, 0);
        assert!(f.defect_check(&s, 8).is_err());
    }

    #[test]
    fn annihilation_examples() {
        let f = symmetric(5);
        let s = f.shifts();
        let comm = NCPoly::from_terms(2, [(vec![1, 2], c(1.0, 0.0)), (vec![2, 1], c(-1.0, 0.0))]).unwrap();
        let rep = f.annihilation_check(&s, &comm, 1e-10).unwrap();
        assert!(rep.in_ideal && rep.consistent && rep.vacuum_residual <= 1e-10);
        let x12 = NCPoly::monomial(2, vec![1, 2], c(1.0, 0.0)).unwrap();
        let rep = f.annihilation_check(&s, &x12, 1e-10).unwrap();
        assert!(!rep.in_ideal && rep.consistent);
        assert!((rep.vacuum_residual - 0.5f64.sqrt()).abs() < 1e-12);
        let (_, g) = golden(5);
        let gs = g.shifts();
        let p = NCPoly::from_terms(2, [(vec![2, 1, 2], c(1.0, 0.0)), (vec![2, 2, 1], c(1.0, 0.0))]).unwrap();
        let rep = g.annihilation_check(&gs, &p, 1e-10).unwrap();
        assert!(!rep.in_ideal && rep.consistent);
        assert!((rep.projection_norm - 1.0).abs() < 1e-12);
        let inh = NCPoly::from_terms(2, [(vec![1], c(1.0, 0.0)), (vec![1, 1], c(1.0, 0.0))]).unwrap();
        assert!(matches!(g.annihilation_check(&gs, &inh, 1e-10), Err(Error::Inhomogeneous)));
    }

    #[test]
    fn golden_mean_relations() {
        let (spec, f) = golden(6);
        let s = f.shifts();
        let rep = f.subshift_relations(&s, &spec).unwrap();
        assert!(rep.cross_max <= 1e-12);
        let d2 = &rep.defects[1];
        assert_eq!(d2.followers, 1);
        assert_eq!(d2.rank, 1);
        assert!(d2.vacuum_residual <= 1e-10);
        let d1 = &rep.defects[0];
        assert_eq!(d1.followers, 2);
        assert_eq!(d1.rank, 1);
        assert!(rep.row_defect_residual <= 1e-10);
    }

    #[test]
    fn full_shift_cuntz_defect() {
        let spec = SubshiftSpec::new(2, vec![]).unwrap();
        let f = TruncatedFock::new(SubproductSystem::from_subshift(&spec, 5));
        let s = f.shifts();
        let rep = f.subshift_relations(&s, &spec).unwrap();
        for dfx in &rep.defects {
            assert_eq!(dfx.rank, 1);
            assert!(dfx.vacuum_residual <= 1e-10);
        }
        assert!(f.subshift_relations(&s, &SubshiftSpec::from_letters(2, &[&[1, 1, 1, 1, 1]]).unwrap()).is_err());
    }

    #[test]
    fn two_step_subshift_defects_supported_low() {
        let spec = SubshiftSpec::from_letters(2, &[&[1, 2, 1], &[2, 2, 2]]).unwrap();
        let f = TruncatedFock::new(SubproductSystem::from_subshift(&spec, 7));
        let s = f.shifts();
        let rep = f.subshift_relations(&s, &spec).unwrap();
        assert_eq!(rep.step, 2);
        assert!(rep.cross_max == 0.0);
        for dfx in &rep.defects {
            assert!(dfx.outside_support_residual <= 1e-10, "{dfx:?}");
        }
    }

    #[test]
    fn vacuum_state_on_words() {
        let f = symmetric(4);
        let s = f.shifts();
        let om = f.vacuum();
        for a in [vec![], vec![1], vec![2, 1]] {
            for b in [vec![], vec![2], vec![1, 1]] {
                let m = s.word(&Word::new(a.clone())) * s.word(&Word::new(b.clone())).adjoint();
                let val = om.dotc(&(m * &om));
                let expect = if a.is_empty() && b.is_empty() { 1.0 } else { 0.0 };
                assert!((val - c(expect, 0.0)).norm() == 0.0);
            }
        }
    }

    #[test]
    fn export_writes_matrices() {
        let (_, f) = golden(3);
        let s = f.shifts();
        let dir = tempfile::tempdir().unwrap();
        let files = f.export_shifts(&s, dir.path()).unwrap();
        assert_eq!(files.len(), 3);
        let back: MatrixJson = serde_json::from_str(&fs::read_to_string(&files[0]).unwrap()).unwrap();
        assert!(opnorm(&(back.to_matrix().unwrap() - s.get(1))) == 0.0);
    }

    fn q_system(theta: f64, depth: usize) -> TruncatedFock {
        let mut q = CMatrix::from_element(2, 2, c(1.0, 0.0));
        q[(0, 1)] = c(theta.cos(), theta.sin());
        q[(1, 0)] = c(theta.cos(), -theta.sin());
        TruncatedFock::new(SubproductSystem::from_qmatrix(&q, depth).unwrap())
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn row_contraction(theta in 0.0f64..6.0) {
            let f = q_system(theta, 5);
            prop_assert!(f.shifts().row_norm() <= 1.0 + 1e-10);
        }

        #[test]
        fn product_law_on_vacuum(theta in 0.0f64..6.0, re in proptest::collection::vec(-1.0f64..1.0, 12)) {
            let f = q_system(theta, 5);
            let (m, n) = (2, 2);
            let xi = f.system().fiber(m).frame() * CVector::from_fn(f.system().fiber(m).dim(), |i, _| c(re[i], re[i + 4]));
            let eta = f.system().fiber(n).frame() * CVector::from_fn(f.system().fiber(n).dim(), |i, _| c(re[i + 8], 0.0));
            let lhs = f.shift_of_vector(m, &xi).unwrap() * f.shift_of_vector(n, &eta).unwrap() * f.vacuum();
            let rhs = f.embed(m + n, &tensor_vec(&xi, &eta)).unwrap();
            prop_assert!((lhs - rhs).norm() <= 1e-10);
        }

        #[test]
        fn ideal_polynomials_kill_vacuum(a in -1.0f64..1.0, b in -1.0f64..1.0) {
            let gens = IdealGens::new(2, vec![NCPoly::from_terms(2, [(vec![1, 2], c(a, 0.0)), (vec![2, 2], c(b, 1.0))]).unwrap()]).unwrap();
            let f = TruncatedFock::new(SubproductSystem::from_ideal(&gens, 5));
            let s = f.shifts();
            let p = NCPoly::var(2, 1).unwrap().mul(&gens.generators()[0]).unwrap();
            let rep = f.annihilation_check(&s, &p, 1e-8).unwrap();
            prop_assert!(rep.in_ideal && rep.consistent && rep.operator_residual <= 1e-8);
        }
    }
}

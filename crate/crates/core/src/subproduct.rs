//! Standard subproduct systems over ℕ, materialized up to a fixed depth.
//!
//! A system is stored as the list of fibers `X(0), ..., X(N)`, each a
//! [`Subspace`] of `E^{⊗n}` with `E = C^d`. `X(0)` is the formal line `C`.
//! Every constructor guarantees `X(m+n) ⊆ X(m) ⊗ X(n)` up to numerical
//! tolerance; [`SubproductSystem::verify_axioms`] measures it.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c, identity, gemm, intersect_within, kron_right_apply, opnorm, tensor, CMatrix, CVector, MatrixJson, Subspace, DEFAULT_REL_TOL};
use crate::ncpoly::{IdealGens, NCPoly, TermJson, Word};

/// Residual threshold for the inclusion axioms.
pub const AXIOM_TOL: f64 = 1e-9;

/// Forbidden-word description of a subshift.
#[derive(Clone, Debug, PartialEq)]
pub struct SubshiftSpec {
    d: usize,
    forbidden: Vec<Word>,
}

impl SubshiftSpec {
    /// Validates letters and lengths, drops duplicates and any word that
    /// contains another forbidden word.
    pub fn new(d: usize, forbidden: Vec<Word>) -> Result<Self> {
        for w in &forbidden {
            w.check(d)?;
            if w.len() < 2 {
                return Err(Error::ShortForbiddenWord(w.letters().to_vec()));
            }
        }
        let mut words = forbidden;
        words.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
        words.dedup();
        let mut kept: Vec<Word> = Vec::new();
        for w in words {
            if !kept.iter().any(|k| w.contains_subword(k)) {
                kept.push(w);
            }
        }
        Ok(SubshiftSpec { d, forbidden: kept })
    }

    pub fn from_letters(d: usize, forbidden: &[&[usize]]) -> Result<Self> {
        SubshiftSpec::new(d, forbidden.iter().map(|w| Word::new(w.to_vec())).collect())
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn forbidden(&self) -> &[Word] {
        &self.forbidden
    }

    /// Step `k` = longest forbidden word minus one (at least 1).
    pub fn step(&self) -> usize {
        self.forbidden.iter().map(|w| w.len() - 1).max().unwrap_or(1).max(1)
    }

    pub fn is_legal(&self, w: &Word) -> bool {
        !self.forbidden.iter().any(|f| w.contains_subword(f))
    }

    /// Legal words of length `n`, lexicographic.
    pub fn legal_words(&self, n: usize) -> Vec<Word> {
        let mut level = vec![Word::empty()];
        for _ in 0..n {
            let mut next = Vec::new();
            for w in &level {
                for a in 1..=self.d {
                    let cand = w.concat(&Word::new(vec![a]));
                    // Only suffixes can introduce a new forbidden occurrence.
                    let ok = !self.forbidden.iter().any(|f| cand.letters().ends_with(f.letters()));
                    if ok {
                        next.push(cand);
                    }
                }
            }
            level = next;
        }
        level
    }
}

#[derive(Clone, Debug)]
pub enum Provenance {
    Ideal(IdealGens),
    /// `dead_from`: first level at which every word is forbidden.
    Subshift { spec: SubshiftSpec, dead_from: Option<usize> },
    QMatrix(CMatrix),
    Quadratic(CMatrix),
    Fibers { prescribed_levels: usize },
    Full,
}

impl Provenance {
    pub fn kind(&self) -> &'static str {
        match self {
            Provenance::Ideal(_) => "ideal",
            Provenance::Subshift { .. } => "subshift",
            Provenance::QMatrix(_) => "qmatrix",
            Provenance::Quadratic(_) => "quadratic",
            Provenance::Fibers { .. } => "fibers",
            Provenance::Full => "full",
        }
    }
}

#[derive(Clone, Debug)]
pub struct SubproductSystem {
    d: usize,
    depth: usize,
    fibers: Vec<Subspace>,
    provenance: Provenance,
}

#[derive(Clone, Debug, Serialize)]
pub struct InclusionResidual {
    pub m: usize,
    pub n: usize,
    pub residual: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct AxiomReport {
    pub dims: Vec<usize>,
    pub inclusions: Vec<InclusionResidual>,
    pub max_residual: f64,
    pub submultiplicative: bool,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct UnitReport {
    /// `|| v^{⊗n} - p_n v^{⊗n} || / ||v||^n` for `n = 1..=N`.
    pub residuals: Vec<f64>,
    pub is_unit: bool,
    pub unital: bool,
    pub failed_at: Option<usize>,
}

/// `X(n) = (E ⊗ X(n-1)) ∩ (X(n-1) ⊗ E) ∩ G_n^⊥`.
/// `(E ⊗ X(n−1)) ∩ (X(n−1) ⊗ E) ∩ G^⊥` for `n = fibers.len()`.
///
/// For `n ≥ 2` both spaces lie in `E ⊗ X(n−2) ⊗ E`, so the intersection is
/// solved in its coordinates (dimension `d²·dim X(n−2)` instead of `d^n`).
fn next_fiber(d: usize, fibers: &[Subspace], generators: &[CVector]) -> Subspace {
    let n = fibers.len();
    let prev = fibers[n - 1].frame();
    if n < 2 {
        let base = tensor(&identity(d), prev);
        let right = tensor(prev, &identity(d));
        return intersect_within(&base, &[right], generators, DEFAULT_REL_TOL);
    }
    let inner = fibers[n - 2].frame();
    let (k1, k2) = (prev.ncols(), inner.ncols());
    let ambient = d.pow(n as u32);
    if k1 == 0 {
        return Subspace::zero(ambient);
    }
    let mid = d.pow(n as u32 - 2);
    // (F_{n−2}^* ⊗ I) F_{n−1}: rows a·d + j.
    let mut left = CMatrix::zeros(k2 * d, k1);
    for j in 0..d {
        let rows: Vec<usize> = (0..mid).map(|m| m * d + j).collect();
        let block = gemm(inner, true, &prev.select_rows(&rows), false);
        for a in 0..k2 {
            left.row_mut(a * d + j).copy_from(&block.row(a));
        }
    }
    // (I ⊗ F_{n−2}^*) F_{n−1}: rows i·k2 + a.
    let mut right = CMatrix::zeros(d * k2, k1);
    for i in 0..d {
        right.rows_mut(i * k2, k2).copy_from(&gemm(inner, true, &prev.rows(i * mid, mid).into_owned(), false));
    }
    let base = tensor(&identity(d), &left);
    let inside = tensor(&right, &identity(d));
    let orth: Vec<CVector> = generators
        .iter()
        .map(|g| {
            let mut v = CVector::zeros(d * k2 * d);
            for i in 0..d {
                for j in 0..d {
                    let sub = CVector::from_fn(mid, |m, _| g[(i * mid + m) * d + j]);
                    let coords = inner.adjoint() * sub;
                    for a in 0..k2 {
                        v[(i * k2 + a) * d + j] = coords[a];
                    }
                }
            }
            v
        })
        .collect();
    let within = intersect_within(&base, &[inside], &orth, DEFAULT_REL_TOL);
    let coeffs = gemm(&base, true, within.frame(), false);
    Subspace::from_frame_unchecked(kron_right_apply(prev, &coeffs), DEFAULT_REL_TOL)
}

fn line() -> Subspace {
    Subspace::full(1)
}

impl SubproductSystem {
    /// The full product system `X(n) = E^{⊗n}`.
    pub fn full(d: usize, depth: usize) -> Self {
        let fibers = (0..=depth).map(|n| Subspace::full(d.pow(n as u32))).collect();
        SubproductSystem { d, depth, fibers, provenance: Provenance::Full }
    }

    /// `X_I(n) = E^{⊗n} ⊖ {p(e) : p ∈ I^(n)}`.
    pub fn from_ideal(ideal: &IdealGens, depth: usize) -> Self {
        let mut sys = Self::from_ideal_inner(ideal, depth);
        sys.provenance = Provenance::Ideal(ideal.clone());
        sys
    }

    fn from_ideal_inner(ideal: &IdealGens, depth: usize) -> Self {
        let d = ideal.d();
        let mut fibers = vec![line()];
        for n in 1..=depth {
            let gens = ideal.generators_of_degree(n);
            let next = next_fiber(d, &fibers, &gens);
            fibers.push(next);
        }
        SubproductSystem { d, depth, fibers, provenance: Provenance::Full }
    }

    /// `X_Λ(n) = span{e_α : α legal of length n}`.
    pub fn from_subshift(spec: &SubshiftSpec, depth: usize) -> Self {
        let d = spec.d();
        let mut fibers = vec![line()];
        let mut dead_from = None;
        for n in 1..=depth {
            let idx: Vec<usize> = spec.legal_words(n).iter().map(|w| w.index(d)).collect();
            if idx.is_empty() && dead_from.is_none() {
                dead_from = Some(n);
            }
            fibers.push(Subspace::coordinate(d.pow(n as u32), &idx));
        }
        SubproductSystem { d, depth, fibers, provenance: Provenance::Subshift { spec: spec.clone(), dead_from } }
    }

    /// Maximal system with `X(2) = E⊗E ⊖ span{e_i⊗e_j − q_ij e_j⊗e_i : i ≠ j}`.
    pub fn from_qmatrix(q: &CMatrix, depth: usize) -> Result<Self> {
        let ideal = qmatrix_ideal(q)?;
        let mut sys = Self::from_ideal_inner(&ideal, depth);
        sys.provenance = Provenance::QMatrix(q.clone());
        Ok(sys)
    }

    /// Maximal system with `X(2) = E⊗E ⊖ span{Σ a_ij e_i⊗e_j}`, `d = 2`.
    pub fn from_quadratic(a: &CMatrix, depth: usize) -> Result<Self> {
        let ideal = quadratic_ideal(a)?;
        let mut sys = Self::from_ideal_inner(&ideal, depth);
        sys.provenance = Provenance::Quadratic(a.clone());
        Ok(sys)
    }

    /// Maximal standard system with prescribed `X(1), ..., X(k)`:
    /// `X(n) = ⋂_{i+j=n} X(i) ⊗ X(j)` for `n > k`.
    pub fn maximal_with_fibers(prescribed: &[Subspace], depth: usize) -> Result<Self> {
        let first = prescribed.first().ok_or(Error::Empty("prescribed fibers"))?;
        let d = first.ambient_dim();
        let k = prescribed.len();
        let mut fibers = vec![line()];
        for (idx, f) in prescribed.iter().enumerate() {
            let n = idx + 1;
            if f.ambient_dim() != d.pow(n as u32) {
                return Err(Error::DimensionMismatch {
                    what: format!("prescribed X({n}) ambient"),
                    expected: d.pow(n as u32),
                    found: f.ambient_dim(),
                });
            }
            fibers.push(f.clone());
        }
        for n in 2..=k.min(depth) {
            for i in 1..n {
                let prod = fibers[i].tensor(&fibers[n - i]);
                let residual = prod.containment_residual(&fibers[n])?;
                if residual > AXIOM_TOL {
                    return Err(Error::InclusionViolation { i, j: n - i, n, residual });
                }
            }
        }
        fibers.truncate(depth + 1);
        for n in (k + 1)..=depth {
            let base = tensor(fibers[1].frame(), fibers[n - 1].frame());
            let inside: Vec<CMatrix> = (2..n).map(|i| tensor(fibers[i].frame(), fibers[n - i].frame())).collect();
            fibers.push(intersect_within(&base, &inside, &[], DEFAULT_REL_TOL));
        }
        Ok(SubproductSystem { d, depth, fibers, provenance: Provenance::Fibers { prescribed_levels: k } })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn fiber(&self, n: usize) -> &Subspace {
        &self.fibers[n]
    }

    pub fn fibers(&self) -> &[Subspace] {
        &self.fibers
    }

    pub fn dims(&self) -> Vec<usize> {
        self.fibers.iter().map(Subspace::dim).collect()
    }

    /// `F_{n+1}^*(e_i ⊗ F_n)`: the letter-`i` creation map from `X(n)` to `X(n+1)`
    /// in frame coordinates (1-based `i`).
    pub fn letter_block(&self, i: usize, n: usize) -> CMatrix {
        let stride = self.d.pow(n as u32);
        gemm(&self.fibers[n + 1].frame().rows((i - 1) * stride, stride).into_owned(), true, self.fibers[n].frame(), false)
    }

    /// The same system cut at a smaller depth.
    pub fn truncate(&self, depth: usize) -> Self {
        let depth = depth.min(self.depth);
        SubproductSystem {
            d: self.d,
            depth,
            fibers: self.fibers[..=depth].to_vec(),
            provenance: self.provenance.clone(),
        }
    }

    /// Coordinate space of `(I^X)^(n) = E^{⊗n} ⊖ X(n)`.
    pub fn recover_ideal(&self, n: usize) -> Result<Subspace> {
        if n > self.depth {
            return Err(Error::LevelTooDeep { level: n, depth: self.depth });
        }
        Ok(self.fibers[n].complement())
    }

    /// Generators of `I^X` up to the depth: at level `n`, the part of
    /// `E^{⊗n} ⊖ X(n)` not already forced by lower levels.
    pub fn recover_generators(&self) -> IdealGens {
        let d = self.d;
        let mut gens = Vec::new();
        for n in 1..=self.depth {
            let forced = next_fiber(d, &self.fibers[..n], &[]);
            let orth: Vec<CVector> = self.fibers[n].frame().column_iter().map(|c| c.into_owned()).collect();
            let new = intersect_within(forced.frame(), &[], &orth, DEFAULT_REL_TOL);
            for col in new.frame().column_iter() {
                let p = NCPoly::from_basis_vector(d, n, &col.into_owned()).expect("length d^n");
                gens.push(p);
            }
        }
        IdealGens::new(d, gens).expect("nonzero homogeneous generators")
    }

    pub fn verify_axioms(&self) -> AxiomReport {
        let dims = self.dims();
        let mut inclusions = Vec::new();
        let mut submultiplicative = true;
        for total in 2..=self.depth {
            for m in 1..total {
                let n = total - m;
                let prod = self.fibers[m].tensor(&self.fibers[n]);
                let residual = prod.containment_residual(&self.fibers[total]).unwrap_or(f64::INFINITY);
                inclusions.push(InclusionResidual { m, n, residual });
                if dims[total] > dims[m] * dims[n] {
                    submultiplicative = false;
                }
            }
        }
        let level_one_ok = self.depth == 0 || self.fibers[1].ambient_dim() == self.d;
        let max_residual = inclusions.iter().map(|r| r.residual).fold(0.0, f64::max);
        AxiomReport {
            dims,
            pass: max_residual <= AXIOM_TOL && submultiplicative && level_one_ok,
            inclusions,
            max_residual,
            submultiplicative,
        }
    }

    /// Checks `p_n v^{⊗n} = v^{⊗n}` for `n = 1..=N`.
    pub fn verify_unit(&self, v: &CVector) -> Result<UnitReport> {
        if v.len() != self.d {
            return Err(Error::DimensionMismatch { what: "unit vector".into(), expected: self.d, found: v.len() });
        }
        let norm = v.norm();
        let mut residuals = Vec::new();
        let mut power = CVector::from_element(1, c(1.0, 0.0));
        let mut failed_at = None;
        for n in 1..=self.depth {
            power = power.kronecker(v);
            let scale = norm.powi(n as i32).max(f64::MIN_POSITIVE);
            let r = (&power - self.fibers[n].project(&power)?).norm() / scale;
            if r > AXIOM_TOL && failed_at.is_none() {
                failed_at = Some(n);
            }
            residuals.push(r);
        }
        let is_unit = failed_at.is_none() && norm > 0.0;
        Ok(UnitReport { residuals, is_unit, unital: is_unit && (norm - 1.0).abs() <= 1e-12, failed_at })
    }

    /// Largest per-level projector distance to another system of the same shape.
    pub fn distance(&self, other: &SubproductSystem) -> Result<f64> {
        if self.d != other.d || self.depth != other.depth {
            return Err(Error::DimensionMismatch { what: "system depth".into(), expected: self.depth, found: other.depth });
        }
        let mut worst: f64 = 0.0;
        for (a, b) in self.fibers.iter().zip(&other.fibers) {
            worst = worst.max(a.distance(b)?);
        }
        Ok(worst)
    }
}

/// Generators `x_i x_j − q_ij x_j x_i`, `i < j`, after checking admissibility.
pub fn qmatrix_ideal(q: &CMatrix) -> Result<IdealGens> {
    let d = q.nrows();
    if q.ncols() != d {
        return Err(Error::DimensionMismatch { what: "q-matrix columns".into(), expected: d, found: q.ncols() });
    }
    check_admissible(q)?;
    let mut gens = Vec::new();
    for i in 1..=d {
        for j in (i + 1)..=d {
            gens.push(NCPoly::from_terms(d, [(vec![i, j], c(1.0, 0.0)), (vec![j, i], -q[(i - 1, j - 1)])])?);
        }
    }
    IdealGens::new(d, gens)
}

/// `q_ij q_ji = 1` with `q_ij ≠ 0` for all `i ≠ j` (diagonal ignored).
pub fn check_admissible(q: &CMatrix) -> Result<()> {
    let d = q.nrows();
    for i in 0..d {
        for j in (i + 1)..d {
            let a = q[(i, j)];
            let b = q[(j, i)];
            let product = a * b;
            if a.norm() == 0.0 || b.norm() == 0.0 || (product - c(1.0, 0.0)).norm() > 1e-12 {
                return Err(Error::NotAdmissible { i: i + 1, j: j + 1, product: format!("{product}") });
            }
        }
    }
    Ok(())
}

/// The single relation `Σ a_ij x_i x_j` (none when `A = 0`).
pub fn quadratic_ideal(a: &CMatrix) -> Result<IdealGens> {
    if a.nrows() != 2 || a.ncols() != 2 {
        return Err(Error::DimensionMismatch { what: "quadratic relation matrix".into(), expected: 2, found: a.nrows() });
    }
    let mut terms = Vec::new();
    for i in 0..2 {
        for j in 0..2 {
            terms.push((vec![i + 1, j + 1], a[(i, j)]));
        }
    }
    let p = NCPoly::from_terms(2, terms)?;
    if p.is_zero() {
        Ok(IdealGens::empty(2))
    } else {
        IdealGens::new(2, vec![p])
    }
}

/// System spec file:
/// `{"d", "depth", "kind", "generators" | "forbidden" | "q" | "A" | "fibers"}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SystemSpec {
    pub d: usize,
    #[serde(default)]
    pub depth: Option<usize>,
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generators: Option<Vec<Vec<TermJson>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub forbidden: Option<Vec<Vec<usize>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<MatrixJson>,
    #[serde(default, rename = "A", skip_serializing_if = "Option::is_none")]
    pub a: Option<MatrixJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fibers: Option<Vec<MatrixJson>>,
}

impl SystemSpec {
    pub fn from_json_str(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Build at `depth` (falls back to the file's own depth).
    pub fn build(&self, depth: Option<usize>) -> Result<SubproductSystem> {
        let depth = depth
            .or(self.depth)
            .ok_or_else(|| Error::Format("no depth given in spec or on the command line".into()))?;
        let d = self.d;
        if d == 0 {
            return Err(Error::Format("key \"d\": alphabet size must be >= 1".into()));
        }
        let missing = |key: &str| Error::Format(format!("kind \"{}\" requires key \"{key}\"", self.kind));
        let sys = match self.kind.as_str() {
            "full" => SubproductSystem::full(d, depth),
            "ideal" => {
                let gens = self.generators.as_ref().ok_or_else(|| missing("generators"))?;
                let polys = gens.iter().map(|g| NCPoly::from_json(d, g)).collect::<Result<Vec<_>>>()?;
                SubproductSystem::from_ideal(&IdealGens::new(d, polys)?, depth)
            }
            "subshift" => {
                let words = self.forbidden.as_ref().ok_or_else(|| missing("forbidden"))?;
                let spec = SubshiftSpec::new(d, words.iter().map(|w| Word::new(w.clone())).collect())?;
                SubproductSystem::from_subshift(&spec, depth)
            }
            "qmatrix" => {
                let q = self.q.as_ref().ok_or_else(|| missing("q"))?.to_matrix()?;
                if q.nrows() != d {
                    return Err(Error::Format(format!("key \"q\": expected {d}x{d} matrix")));
                }
                SubproductSystem::from_qmatrix(&q, depth)?
            }
            "quadratic" => {
                let a = self.a.as_ref().ok_or_else(|| missing("A"))?.to_matrix()?;
                SubproductSystem::from_quadratic(&a, depth)?
            }
            "fibers" => {
                let frames = self.fibers.as_ref().ok_or_else(|| missing("fibers"))?;
                let subs = frames
                    .iter()
                    .map(|m| m.to_matrix().map(|f| Subspace::span_columns(&f, DEFAULT_REL_TOL)))
                    .collect::<Result<Vec<_>>>()?;
                SubproductSystem::maximal_with_fibers(&subs, depth)?
            }
            other => return Err(Error::Format(format!("key \"kind\": unknown kind \"{other}\""))),
        };
        if sys.d() != d {
            return Err(Error::Format(format!("key \"d\" = {d} disagrees with payload alphabet {}", sys.d())));
        }
        Ok(sys)
    }
}

/// `max ||P_X − P_Y||` between two sequences of fibers; used in tests and reports.
pub fn fiber_distance(a: &[Subspace], b: &[Subspace]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.distance(y).unwrap_or(f64::INFINITY)).fold(0.0, f64::max)
}

/// Operator norm of `(I − P_{X(m)} ⊗ P_{X(n)}) F_{X(m+n)}`.
pub fn inclusion_residual(sys: &SubproductSystem, m: usize, n: usize) -> f64 {
    let prod = tensor(sys.fiber(m).frame(), sys.fiber(n).frame());
    let f = sys.fiber(m + n).frame();
    opnorm(&(f - &prod * (prod.adjoint() * f)))
}

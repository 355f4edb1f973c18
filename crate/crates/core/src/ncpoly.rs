//! Words over `{1..d}` and noncommutative polynomials.
//!
//! Words of length `n` index the basis of `E^{⊗n}`, `E = C^d`, in
//! lexicographic order: `e_11, e_12, ..., e_1d, e_21, ...`. Concatenation of
//! words is the Kronecker product of coordinate vectors.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c, CMatrix, CVector, C64};

/// A word in the letters `1..=d`. The empty word is the unit monomial.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Word(Vec<usize>);

impl Word {
    pub fn new(letters: Vec<usize>) -> Self {
        Word(letters)
    }

    pub fn empty() -> Self {
        Word(Vec::new())
    }

    pub fn letters(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn check(&self, d: usize) -> Result<()> {
        match self.0.iter().find(|&&l| l == 0 || l > d) {
            Some(&letter) => Err(Error::LetterOutOfRange { letter, d }),
            None => Ok(()),
        }
    }

    /// Position in the lexicographic basis of `E^{⊗len}`.
    pub fn index(&self, d: usize) -> usize {
        self.0.iter().fold(0, |acc, &l| acc * d + (l - 1))
    }

    pub fn from_index(mut index: usize, len: usize, d: usize) -> Self {
        let mut letters = vec![0; len];
        for slot in letters.iter_mut().rev() {
            *slot = index % d + 1;
            index /= d;
        }
        Word(letters)
    }

    pub fn concat(&self, other: &Word) -> Word {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        Word(v)
    }

    /// Whether `other` occurs as a contiguous subword.
    pub fn contains_subword(&self, other: &Word) -> bool {
        if other.is_empty() {
            return true;
        }
        self.0.windows(other.len()).any(|w| w == other.0.as_slice())
    }

    /// All words of length `len` in lexicographic order.
    pub fn all(len: usize, d: usize) -> impl Iterator<Item = Word> {
        let count = d.pow(len as u32);
        (0..count).map(move |i| Word::from_index(i, len, d))
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "∅");
        }
        for l in &self.0 {
            write!(f, "{l}")?;
        }
        Ok(())
    }
}

impl From<Vec<usize>> for Word {
    fn from(v: Vec<usize>) -> Self {
        Word(v)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Degree {
    Zero,
    Homogeneous(usize),
    Inhomogeneous,
}

/// Noncommutative polynomial in `x_1..x_d` with complex coefficients.
///
/// Only exact zeros are dropped from the term map.
#[derive(Clone, Debug, PartialEq)]
pub struct NCPoly {
    d: usize,
    terms: BTreeMap<Word, C64>,
}

impl NCPoly {
    pub fn zero(d: usize) -> Self {
        NCPoly { d, terms: BTreeMap::new() }
    }

    pub fn one(d: usize) -> Self {
        let mut p = NCPoly::zero(d);
        p.terms.insert(Word::empty(), c(1.0, 0.0));
        p
    }

    pub fn monomial(d: usize, word: impl Into<Word>, coeff: C64) -> Result<Self> {
        let mut p = NCPoly::zero(d);
        p.add_term(word.into(), coeff)?;
        Ok(p)
    }

    /// The variable `x_i`.
    pub fn var(d: usize, i: usize) -> Result<Self> {
        NCPoly::monomial(d, vec![i], c(1.0, 0.0))
    }

    pub fn from_terms<I, W>(d: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (W, C64)>,
        W: Into<Word>,
    {
        let mut p = NCPoly::zero(d);
        for (w, z) in terms {
            p.add_term(w.into(), z)?;
        }
        Ok(p)
    }

    pub fn add_term(&mut self, word: Word, coeff: C64) -> Result<()> {
        word.check(self.d)?;
        let entry = self.terms.entry(word).or_insert(C64::new(0.0, 0.0));
        *entry += coeff;
        if *entry == C64::new(0.0, 0.0) {
            self.terms.retain(|_, z| *z != C64::new(0.0, 0.0));
        }
        Ok(())
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn terms(&self) -> &BTreeMap<Word, C64> {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn degree(&self) -> Degree {
        let mut lens = self.terms.keys().map(Word::len);
        match lens.next() {
            None => Degree::Zero,
            Some(n) if lens.all(|m| m == n) => Degree::Homogeneous(n),
            Some(_) => Degree::Inhomogeneous,
        }
    }

    /// Largest word length, 0 for the zero polynomial.
    pub fn max_len(&self) -> usize {
        self.terms.keys().map(Word::len).max().unwrap_or(0)
    }

    fn check_same_alphabet(&self, other: &NCPoly) -> Result<()> {
        if self.d != other.d {
            return Err(Error::DimensionMismatch { what: "alphabet".into(), expected: self.d, found: other.d });
        }
        Ok(())
    }

    pub fn add(&self, other: &NCPoly) -> Result<NCPoly> {
        self.check_same_alphabet(other)?;
        let mut out = self.clone();
        for (w, z) in &other.terms {
            out.add_term(w.clone(), *z)?;
        }
        Ok(out)
    }

    pub fn scale(&self, s: C64) -> NCPoly {
        let mut out = NCPoly::zero(self.d);
        for (w, z) in &self.terms {
            let v = z * s;
            if v != C64::new(0.0, 0.0) {
                out.terms.insert(w.clone(), v);
            }
        }
        out
    }

    pub fn sub(&self, other: &NCPoly) -> Result<NCPoly> {
        self.add(&other.scale(c(-1.0, 0.0)))
    }

    pub fn mul(&self, other: &NCPoly) -> Result<NCPoly> {
        self.check_same_alphabet(other)?;
        let mut out = NCPoly::zero(self.d);
        for (a, x) in &self.terms {
            for (b, y) in &other.terms {
                out.add_term(a.concat(b), x * y)?;
            }
        }
        Ok(out)
    }

    /// Coefficient 2-norm.
    pub fn coeff_norm(&self) -> f64 {
        self.terms.values().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `Σ c_α T^α` with `T^∅ = I`, products taken left to right.
    pub fn eval_on_tuple(&self, tuple: &[CMatrix]) -> Result<CMatrix> {
        if tuple.len() != self.d {
            return Err(Error::DimensionMismatch { what: "tuple length".into(), expected: self.d, found: tuple.len() });
        }
        let h = tuple.first().map(|m| m.nrows()).ok_or(Error::Empty("tuple"))?;
        for (i, m) in tuple.iter().enumerate() {
            if m.nrows() != h || m.ncols() != h {
                return Err(Error::DimensionMismatch {
                    what: format!("matrix T_{} (shape {}x{})", i + 1, m.nrows(), m.ncols()),
                    expected: h,
                    found: if m.nrows() != h { m.nrows() } else { m.ncols() },
                });
            }
        }
        let mut out = CMatrix::zeros(h, h);
        for (w, z) in &self.terms {
            let mut prod = CMatrix::identity(h, h);
            for &l in w.letters() {
                prod = prod * &tuple[l - 1];
            }
            out += prod * *z;
        }
        Ok(out)
    }

    /// Coordinates of `p(e) = Σ c_α e_α` in the lexicographic basis of `E^{⊗n}`.
    pub fn eval_on_basis(&self) -> Result<CVector> {
        let n = match self.degree() {
            Degree::Homogeneous(n) if n >= 1 => n,
            _ => return Err(Error::Inhomogeneous),
        };
        let mut v = CVector::zeros(self.d.pow(n as u32));
        for (w, z) in &self.terms {
            v[w.index(self.d)] += *z;
        }
        Ok(v)
    }

    /// Inverse of [`eval_on_basis`](Self::eval_on_basis) for a vector of length `d^n`.
    pub fn from_basis_vector(d: usize, n: usize, v: &CVector) -> Result<NCPoly> {
        if v.len() != d.pow(n as u32) {
            return Err(Error::DimensionMismatch { what: "basis vector".into(), expected: d.pow(n as u32), found: v.len() });
        }
        let mut p = NCPoly::zero(d);
        for (i, z) in v.iter().enumerate() {
            if *z != C64::new(0.0, 0.0) {
                p.terms.insert(Word::from_index(i, n, d), *z);
            }
        }
        Ok(p)
    }

    pub fn to_json(&self) -> Vec<TermJson> {
        self.terms
            .iter()
            .map(|(w, z)| TermJson { coeff: [z.re, z.im], word: w.letters().to_vec() })
            .collect()
    }

    pub fn from_json(d: usize, terms: &[TermJson]) -> Result<Self> {
        NCPoly::from_terms(d, terms.iter().map(|t| (t.word.clone(), c(t.coeff[0], t.coeff[1]))))
    }
}

impl fmt::Display for NCPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self.terms.iter().map(|(w, z)| format!("({z})x[{w}]")).collect();
        write!(f, "{}", parts.join(" + "))
    }
}

/// One term of the polynomial text format: `{"coeff": [re, im], "word": [i1, ..]}`.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct TermJson {
    pub coeff: [f64; 2],
    pub word: Vec<usize>,
}

/// Generators of a homogeneous two-sided ideal.
#[derive(Clone, Debug)]
pub struct IdealGens {
    d: usize,
    generators: Vec<NCPoly>,
}

impl IdealGens {
    pub fn new(d: usize, generators: Vec<NCPoly>) -> Result<Self> {
        for (index, g) in generators.iter().enumerate() {
            if g.d() != d {
                return Err(Error::DimensionMismatch { what: format!("generator {index} alphabet"), expected: d, found: g.d() });
            }
            match g.degree() {
                Degree::Homogeneous(n) if n >= 1 => {}
                _ => return Err(Error::BadGenerator { index }),
            }
        }
        Ok(IdealGens { d, generators })
    }

    pub fn empty(d: usize) -> Self {
        IdealGens { d, generators: Vec::new() }
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn generators(&self) -> &[NCPoly] {
        &self.generators
    }

    pub fn degree_of(&self, index: usize) -> usize {
        match self.generators[index].degree() {
            Degree::Homogeneous(n) => n,
            _ => unreachable!("validated at construction"),
        }
    }

    /// Coordinate vectors of the generators of degree exactly `n`.
    pub fn generators_of_degree(&self, n: usize) -> Vec<CVector> {
        (0..self.generators.len())
            .filter(|&k| self.degree_of(k) == n)
            .map(|k| self.generators[k].eval_on_basis().expect("homogeneous"))
            .collect()
    }

    /// Spanning set `{e_α ⊗ g(e) ⊗ e_β : |α| + deg g + |β| = n}` of the
    /// degree-`n` component of the ideal. Possibly linearly dependent.
    pub fn homogeneous_component(&self, n: usize) -> Vec<CVector> {
        let d = self.d;
        let dim = d.pow(n as u32);
        let mut out = Vec::new();
        for (k, g) in self.generators.iter().enumerate() {
            let deg = self.degree_of(k);
            if deg > n {
                continue;
            }
            let free = n - deg;
            for left in 0..=free {
                let right = free - left;
                let right_dim = d.pow(right as u32);
                let mid_dim = d.pow(deg as u32);
                for a in 0..d.pow(left as u32) {
                    for b in 0..right_dim {
                        let mut v = CVector::zeros(dim);
                        for (w, z) in g.terms() {
                            let idx = (a * mid_dim + w.index(d)) * right_dim + b;
                            v[idx] += *z;
                        }
                        out.push(v);
                    }
                }
            }
        }
        out
    }
}

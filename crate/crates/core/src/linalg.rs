//! Dense complex linear algebra: matrices, Kronecker products, certified
//! subspaces and spectral norms.
//!
//! Every rank decision goes through singular values with a relative cutoff
//! (`rel_tol * sigma_max`, floored at [`ABS_FLOOR`]). The cutoff actually used
//! is recorded on each [`Subspace`] so that failures downstream can be
//! attributed to a specific threshold.

use matrixmultiply::{zgemm, CGemmOption};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Default relative singular-value cutoff.
pub const DEFAULT_REL_TOL: f64 = 1e-9;
/// Absolute cutoff used when the largest singular value vanishes.
pub const ABS_FLOOR: f64 = 1e-12;

pub const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
pub const ONE: C64 = C64 { re: 1.0, im: 0.0 };

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn cutoff(sigma_max: f64, rel_tol: f64) -> f64 {
    (rel_tol * sigma_max).max(ABS_FLOOR)
}

/// Largest singular value.
pub fn opnorm(m: &CMatrix) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0.0;
    }
    m.singular_values().max()
}

/// `op(a) · op(b)` with `op` the identity or the adjoint, through a blocked
/// complex GEMM kernel.
pub fn gemm(a: &CMatrix, a_adjoint: bool, b: &CMatrix, b_adjoint: bool) -> CMatrix {
    let (m, k) = if a_adjoint { (a.ncols(), a.nrows()) } else { (a.nrows(), a.ncols()) };
    let (k2, n) = if b_adjoint { (b.ncols(), b.nrows()) } else { (b.nrows(), b.ncols()) };
    assert_eq!(k, k2, "gemm: inner dimensions");
    let mut out = CMatrix::zeros(m, n);
    if m == 0 || n == 0 || k == 0 {
        return out;
    }
    let strides = |x: &CMatrix, adj: bool| {
        let lead = x.nrows() as isize;
        if adj { (lead, 1) } else { (1, lead) }
    };
    let (rsa, csa) = strides(a, a_adjoint);
    let (rsb, csb) = strides(b, b_adjoint);
    let ca = a_adjoint.then(|| a.conjugate());
    let cb = b_adjoint.then(|| b.conjugate());
    let pa = ca.as_ref().unwrap_or(a).as_ptr() as *const [f64; 2];
    let pb = cb.as_ref().unwrap_or(b).as_ptr() as *const [f64; 2];
    // SAFETY: Complex<f64> is repr(C) with layout [re, im]; the strides describe
    // column-major storage of live matrices of the stated shapes.
    unsafe {
        zgemm(
            CGemmOption::Standard,
            CGemmOption::Standard,
            m,
            k,
            n,
            [1.0, 0.0],
            pa,
            rsa,
            csa,
            pb,
            rsb,
            csb,
            [0.0, 0.0],
            out.as_mut_ptr() as *mut [f64; 2],
            1,
            m as isize,
        );
    }
    out
}

pub fn matmul(a: &CMatrix, b: &CMatrix) -> CMatrix {
    gemm(a, false, b, false)
}

/// Kronecker product `a ⊗ b`, lexicographic index order (first factor major).
pub fn tensor(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

pub fn tensor_vec(a: &CVector, b: &CVector) -> CVector {
    a.kronecker(b)
}

/// `(a ⊗ I_q) m` without forming the Kronecker product; rows of `m` are indexed `x·q + j`.
pub fn kron_left_apply(a: &CMatrix, m: &CMatrix, q: usize) -> CMatrix {
    let p = a.ncols();
    assert_eq!(m.nrows(), p * q, "kron_left_apply: row count");
    let cols = m.ncols();
    let x = CMatrix::from_fn(p, q * cols, |r, jc| m[(r * q + jc % q, jc / q)]);
    let y = matmul(a, &x);
    CMatrix::from_fn(a.nrows() * q, cols, |r, col| y[(r / q, r % q + q * col)])
}

/// `(I_p ⊗ b) m`; rows of `m` are indexed `x·b.ncols() + j`.
pub fn kron_right_apply(b: &CMatrix, m: &CMatrix) -> CMatrix {
    let q = b.ncols();
    assert_eq!(m.nrows() % q.max(1), 0, "kron_right_apply: row count");
    let p = if q == 0 { 0 } else { m.nrows() / q };
    let qo = b.nrows();
    let mut out = CMatrix::zeros(p * qo, m.ncols());
    for x in 0..p {
        out.rows_mut(x * qo, qo).copy_from(&matmul(b, &m.rows(x * q, q).into_owned()));
    }
    out
}

/// Tensor flip `x ⊗ y ↦ y ⊗ x` on `C^d ⊗ C^d`.
pub fn flip(d: usize) -> CMatrix {
    let mut f = CMatrix::zeros(d * d, d * d);
    for i in 0..d {
        for j in 0..d {
            f[(j * d + i, i * d + j)] = ONE;
        }
    }
    f
}

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

/// Numerical rank at relative tolerance.
pub fn rank(m: &CMatrix, rel_tol: f64) -> usize {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0;
    }
    let sv = m.singular_values();
    let cut = cutoff(sv.max(), rel_tol);
    sv.iter().filter(|&&s| s > cut).count()
}

/// Orthonormal basis of the null space of `m`, as columns.
///
/// The cutoff is `rel_tol * max(sigma_max, 1)`: callers pass residual stacks
/// built from isometries and projections, whose natural scale is one.
pub fn kernel(m: &CMatrix, rel_tol: f64) -> CMatrix {
    let cols = m.ncols();
    if cols == 0 {
        return CMatrix::zeros(0, 0);
    }
    if m.nrows() == 0 {
        return identity(cols);
    }
    // Pad to at least square so that the SVD returns a full right basis.
    let padded;
    let work = if m.nrows() < cols {
        let mut p = CMatrix::zeros(cols, cols);
        p.view_mut((0, 0), (m.nrows(), cols)).copy_from(m);
        padded = p;
        &padded
    } else {
        m
    };
    let svd = work.clone().svd(false, true);
    let v_t = svd.v_t.expect("right singular vectors requested");
    let sigma_max = svd.singular_values.max();
    let cut = rel_tol * sigma_max.max(1.0);
    let keep: Vec<usize> = svd
        .singular_values
        .iter()
        .enumerate()
        .filter(|(_, &s)| s <= cut)
        .map(|(i, _)| i)
        .collect();
    let mut out = CMatrix::zeros(cols, keep.len());
    for (j, &i) in keep.iter().enumerate() {
        for r in 0..cols {
            out[(r, j)] = v_t[(i, r)].conj();
        }
    }
    out
}

/// Hermitian part `(m + m*)/2`.
pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()) * c(0.5, 0.0)
}

/// Eigenvalues (ascending) of a Hermitian matrix.
/// Eigen-decomposition of the Hermitian part of `m`.
///
/// The QR iteration occasionally returns NaN on highly structured input (for
/// example the Choi matrix of the identity on `M_8`); such cases are retried on
/// `H + sI`, which has the same eigenvectors.
pub fn hermitian_eigen(m: &CMatrix) -> (DVector<f64>, CMatrix) {
    let h = hermitian_part(m);
    let n = h.nrows();
    let scale = h.norm().max(1.0);
    for shift in [0.0, 0.5 * scale, 1.37 * scale, 3.1 * scale] {
        let eig = (&h + identity(n) * c(shift, 0.0)).symmetric_eigen();
        let finite = eig.eigenvalues.iter().all(|x| x.is_finite()) && eig.eigenvectors.iter().all(|z| z.re.is_finite() && z.im.is_finite());
        if finite {
            return (eig.eigenvalues.map(|x| x - shift), eig.eigenvectors);
        }
    }
    panic!("Hermitian eigensolver failed on a {n}x{n} matrix");
}

pub fn hermitian_eigenvalues(m: &CMatrix) -> Vec<f64> {
    if m.nrows() == 0 {
        return Vec::new();
    }
    let mut ev: Vec<f64> = hermitian_eigen(m).0.iter().copied().collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    ev
}

/// Square root of a positive semidefinite matrix; eigenvalues below
/// `clamp` (including rounding negatives) are set to zero.
pub fn psd_sqrt(m: &CMatrix, clamp: f64) -> CMatrix {
    let n = m.nrows();
    if n == 0 {
        return CMatrix::zeros(0, 0);
    }
    let (values, vectors) = hermitian_eigen(m);
    let mut out = CMatrix::zeros(n, n);
    for k in 0..n {
        let lam = values[k];
        if lam <= clamp {
            continue;
        }
        let v = vectors.column(k);
        out += (&v * v.adjoint()) * c(lam.sqrt(), 0.0);
    }
    out
}

/// A subspace of `C^D` carried by an orthonormal frame.
#[derive(Clone, Debug)]
pub struct Subspace {
    ambient_dim: usize,
    frame: CMatrix,
    tol_used: f64,
}

impl Subspace {
    pub fn zero(ambient_dim: usize) -> Self {
        Subspace { ambient_dim, frame: CMatrix::zeros(ambient_dim, 0), tol_used: 0.0 }
    }

    pub fn full(ambient_dim: usize) -> Self {
        Subspace { ambient_dim, frame: identity(ambient_dim), tol_used: 0.0 }
    }

    /// Span of coordinate vectors `e_i`, `i` in `indices` (kept in the given order).
    pub fn coordinate(ambient_dim: usize, indices: &[usize]) -> Self {
        let mut frame = CMatrix::zeros(ambient_dim, indices.len());
        for (j, &i) in indices.iter().enumerate() {
            frame[(i, j)] = ONE;
        }
        Subspace { ambient_dim, frame, tol_used: 0.0 }
    }

    /// Wrap a frame that is already orthonormal.
    pub fn from_orthonormal(frame: CMatrix, tol_used: f64) -> Result<Self> {
        let gram = frame.adjoint() * &frame;
        let defect = opnorm(&(gram - identity(frame.ncols())));
        if defect > 1e-10 {
            return Err(Error::NotOrthonormal { defect });
        }
        Ok(Subspace { ambient_dim: frame.nrows(), frame, tol_used })
    }

    pub(crate) fn from_frame_unchecked(frame: CMatrix, tol_used: f64) -> Self {
        Subspace { ambient_dim: frame.nrows(), frame, tol_used }
    }

    /// Span of a list of vectors.
    pub fn span(ambient_dim: usize, vectors: &[CVector], rel_tol: f64) -> Result<Self> {
        let mut m = CMatrix::zeros(ambient_dim, vectors.len());
        for (j, v) in vectors.iter().enumerate() {
            if v.len() != ambient_dim {
                return Err(Error::DimensionMismatch {
                    what: format!("vector {j}"),
                    expected: ambient_dim,
                    found: v.len(),
                });
            }
            m.set_column(j, v);
        }
        Ok(Self::span_columns(&m, rel_tol))
    }

    /// Span of the columns of `m`.
    pub fn span_columns(m: &CMatrix, rel_tol: f64) -> Self {
        let d = m.nrows();
        if m.ncols() == 0 || d == 0 {
            return Subspace { ambient_dim: d, frame: CMatrix::zeros(d, 0), tol_used: ABS_FLOOR };
        }
        let svd = m.clone().svd(true, false);
        let u = svd.u.expect("left singular vectors requested");
        let cut = cutoff(svd.singular_values.max(), rel_tol);
        let keep: Vec<usize> = (0..svd.singular_values.len())
            .filter(|&i| svd.singular_values[i] > cut)
            .collect();
        let mut frame = CMatrix::zeros(d, keep.len());
        for (j, &i) in keep.iter().enumerate() {
            frame.set_column(j, &u.column(i));
        }
        Subspace { ambient_dim: d, frame, tol_used: cut }
    }

    pub fn dim(&self) -> usize {
        self.frame.ncols()
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn frame(&self) -> &CMatrix {
        &self.frame
    }

    pub fn tol_used(&self) -> f64 {
        self.tol_used
    }

    pub fn is_zero(&self) -> bool {
        self.dim() == 0
    }

    fn check_ambient(&self, other: usize, what: &str) -> Result<()> {
        if self.ambient_dim != other {
            return Err(Error::DimensionMismatch {
                what: what.to_string(),
                expected: self.ambient_dim,
                found: other,
            });
        }
        Ok(())
    }

    /// Coordinates of `v` in the frame, `F* v`.
    pub fn coordinates(&self, v: &CVector) -> Result<CVector> {
        self.check_ambient(v.len(), "vector")?;
        Ok(self.frame.adjoint() * v)
    }

    pub fn project(&self, v: &CVector) -> Result<CVector> {
        Ok(&self.frame * self.coordinates(v)?)
    }

    /// Apply the projector to every column of `m` without forming it.
    pub fn project_columns(&self, m: &CMatrix) -> CMatrix {
        matmul(&self.frame, &gemm(&self.frame, true, m, false))
    }

    pub fn projector(&self) -> CMatrix {
        gemm(&self.frame, false, &self.frame, true)
    }

    pub fn complement(&self) -> Subspace {
        let d = self.ambient_dim;
        if self.dim() == 0 {
            return Subspace::full(d);
        }
        if self.dim() == d {
            return Subspace::zero(d);
        }
        // I - P has eigenvalues 0 and 1 only; split at 1/2.
        let perp = identity(d) - self.projector();
        let (values, vectors) = hermitian_eigen(&perp);
        let keep: Vec<usize> = (0..d).filter(|&k| values[k] > 0.5).collect();
        let mut frame = CMatrix::zeros(d, keep.len());
        for (j, &k) in keep.iter().enumerate() {
            frame.set_column(j, &vectors.column(k));
        }
        Subspace { ambient_dim: d, frame, tol_used: self.tol_used }
    }

    /// `|| (I - P_self) frame_other ||`.
    pub fn containment_residual(&self, other: &Subspace) -> Result<f64> {
        self.check_ambient(other.ambient_dim, "subspace")?;
        if other.dim() == 0 {
            return Ok(0.0);
        }
        let r = &other.frame - self.project_columns(&other.frame);
        Ok(opnorm(&r))
    }

    /// Whether `other ⊆ self` up to `tol`.
    pub fn contains(&self, other: &Subspace, tol: f64) -> Result<bool> {
        Ok(self.containment_residual(other)? <= tol)
    }

    /// Spectral-norm distance between the two orthogonal projectors.
    pub fn distance(&self, other: &Subspace) -> Result<f64> {
        self.check_ambient(other.ambient_dim, "subspace")?;
        Ok(opnorm(&(self.projector() - other.projector())))
    }

    pub fn intersect(&self, other: &Subspace) -> Result<Subspace> {
        self.check_ambient(other.ambient_dim, "subspace")?;
        Ok(intersect_within(&self.frame, &[other.frame.clone()], &[], DEFAULT_REL_TOL))
    }

    /// Left-to-right fold of pairwise intersections.
    pub fn intersect_all(spaces: &[Subspace]) -> Result<Subspace> {
        let (first, rest) = spaces.split_first().ok_or(Error::Empty("subspace list"))?;
        rest.iter().try_fold(first.clone(), |acc, s| acc.intersect(s))
    }

    /// `self ⊗ other` as a subspace of the tensor product of the ambients.
    pub fn tensor(&self, other: &Subspace) -> Subspace {
        Subspace {
            ambient_dim: self.ambient_dim * other.ambient_dim,
            frame: tensor(&self.frame, &other.frame),
            tol_used: self.tol_used.max(other.tol_used),
        }
    }
}

/// Subspace of `range(base)` (base with orthonormal columns) cut out by
/// membership in every space in `inside` and orthogonality to `orth`.
///
/// Solves `(I - P_k) base c = 0`, `orth* base c = 0` for the coefficient
/// vector `c`, then returns `base · kernel`.
pub fn intersect_within(base: &CMatrix, inside: &[CMatrix], orth: &[CVector], rel_tol: f64) -> Subspace {
    let d = base.nrows();
    let k = base.ncols();
    if k == 0 {
        return Subspace::zero(d);
    }
    let rows: usize = inside.len() * d + orth.len();
    if rows == 0 {
        return Subspace::from_frame_unchecked(base.clone(), 0.0);
    }
    let mut stack = CMatrix::zeros(rows, k);
    let mut r0 = 0;
    for f in inside {
        let resid = base - matmul(f, &gemm(f, true, base, false));
        stack.view_mut((r0, 0), (d, k)).copy_from(&resid);
        r0 += d;
    }
    for g in orth {
        let row = g.adjoint() * base;
        stack.view_mut((r0, 0), (1, k)).copy_from(&row);
        r0 += 1;
    }
    let ker = kernel(&stack, rel_tol);
    let frame = matmul(base, &ker);
    Subspace::from_frame_unchecked(frame, rel_tol)
}

/// Matrix exchange format: `{"rows": r, "cols": c, "data": [[re, im], ...]}`, row-major.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct MatrixJson {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<[f64; 2]>,
}

impl MatrixJson {
    pub fn from_matrix(m: &CMatrix) -> Self {
        let mut data = Vec::with_capacity(m.nrows() * m.ncols());
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                let z = m[(i, j)];
                data.push([z.re, z.im]);
            }
        }
        MatrixJson { rows: m.nrows(), cols: m.ncols(), data }
    }

    pub fn to_matrix(&self) -> Result<CMatrix> {
        if self.data.len() != self.rows * self.cols {
            return Err(Error::Format(format!(
                "matrix has rows*cols = {} but {} entries",
                self.rows * self.cols,
                self.data.len()
            )));
        }
        if self.data.iter().any(|z| !z[0].is_finite() || !z[1].is_finite()) {
            return Err(Error::Format("matrix entries must be finite".into()));
        }
        Ok(CMatrix::from_fn(self.rows, self.cols, |i, j| {
            let z = self.data[i * self.cols + j];
            c(z[0], z[1])
        }))
    }
}

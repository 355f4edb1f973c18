//! Isomorphism tests for q-commuting systems and for `d = 2` systems with a
//! single quadratic relation, plus the character space of the q-commuting
//! algebras.

use nalgebra::{DMatrix, Matrix4};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{c, opnorm, rank, CMatrix, CVector, C64, DEFAULT_REL_TOL};
use crate::reps::Verdict;
use crate::subproduct::check_admissible;

/// Entrywise tolerance for comparing q-matrices.
pub const Q_TOL: f64 = 1e-10;
/// Largest accepted `‖B − λ UᵗAU‖` for a "yes" answer.
pub const WITNESS_TOL: f64 = 1e-8;
pub const SEARCH_STARTS: usize = 64;
pub const SEARCH_ITERS: usize = 200;

fn check_family(q: &CMatrix) -> Result<()> {
    check_admissible(q)?;
    let d = q.nrows();
    for i in 0..d {
        for j in 0..d {
            if i != j && (q[(i, j)] - c(1.0, 0.0)).norm() <= Q_TOL {
                return Err(Error::OutsideClassifiedFamily { i: i + 1, j: j + 1 });
            }
        }
    }
    Ok(())
}

#[derive(Clone, Debug, Serialize)]
pub struct QEquivalence {
    pub equivalent: bool,
    /// 1-based images `σ(1), ..., σ(d)`.
    pub sigma: Option<Vec<usize>>,
    /// `min_σ max_{i≠j} |r_{σ(i)σ(j)} − q_ij|`.
    pub mismatch: f64,
}

/// Searches `S_d` for `σ` with `r_{σ(i)σ(j)} = q_ij` for all `i ≠ j`.
pub fn q_equivalent(q: &CMatrix, r: &CMatrix) -> Result<QEquivalence> {
    if q.shape() != r.shape() {
        return Err(Error::DimensionMismatch { what: "q-matrix size".into(), expected: q.nrows(), found: r.nrows() });
    }
    check_family(q)?;
    check_family(r)?;
    let d = q.nrows();
    let mut perm: Vec<usize> = (0..d).collect();
    let mut mismatch = f64::INFINITY;
    loop {
        let worst = (0..d)
            .flat_map(|i| (0..d).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| (r[(perm[i], perm[j])] - q[(i, j)]).norm())
            .fold(0.0, f64::max);
        mismatch = mismatch.min(worst);
        if worst <= Q_TOL {
            return Ok(QEquivalence { equivalent: true, sigma: Some(perm.iter().map(|&p| p + 1).collect()), mismatch });
        }
        if !next_permutation(&mut perm) {
            return Ok(QEquivalence { equivalent: false, sigma: None, mismatch });
        }
    }
}

fn next_permutation(p: &mut [usize]) -> bool {
    let n = p.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && p[i - 1] >= p[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = n - 1;
    while p[j] <= p[i - 1] {
        j -= 1;
    }
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

/// `U_σ q U_σ^{-1}` in the index convention of [`q_equivalent`]: `r_{σ(i)σ(j)} = q_ij`.
pub fn permute_qmatrix(q: &CMatrix, sigma: &[usize]) -> CMatrix {
    let d = q.nrows();
    let mut r = q.clone();
    for i in 0..d {
        for j in 0..d {
            r[(sigma[i] - 1, sigma[j] - 1)] = q[(i, j)];
        }
    }
    r
}

#[derive(Clone, Debug, Serialize)]
pub struct CharacterSet {
    pub d: usize,
    /// Pairs `(i, j)`, `i < j`, with `q_ij ≠ 1`.
    pub edges: Vec<(usize, usize)>,
    pub tag: String,
    /// Maximal sets of coordinates allowed to be nonzero together.
    pub supports: Vec<Vec<usize>>,
}

impl CharacterSet {
    /// `‖z‖ ≤ 1` and `z_i z_j = 0` on every edge.
    pub fn contains(&self, z: &CVector) -> bool {
        z.len() == self.d
            && z.norm() <= 1.0 + 1e-12
            && self.edges.iter().all(|&(i, j)| (z[i - 1] * z[j - 1]).norm() <= 1e-12)
    }
}

/// Conflict graph of `q` and the shape of `{z ∈ B_d : (1 − q_ij) z_i z_j = 0}`.
pub fn character_set_descriptor(q: &CMatrix) -> Result<CharacterSet> {
    check_admissible(q)?;
    let d = q.nrows();
    let mut edges = Vec::new();
    for i in 0..d {
        for j in (i + 1)..d {
            if (q[(i, j)] - c(1.0, 0.0)).norm() > 1e-12 {
                edges.push((i + 1, j + 1));
            }
        }
    }
    let tag = if edges.is_empty() {
        "ball".to_string()
    } else if edges.len() == d * (d - 1) / 2 {
        format!("{d} glued discs")
    } else {
        "general".to_string()
    };
    let mut adjacent = vec![vec![false; d]; d];
    for &(i, j) in &edges {
        adjacent[i - 1][j - 1] = true;
        adjacent[j - 1][i - 1] = true;
    }
    let mut supports = Vec::new();
    // Maximal independent sets = maximal cliques of the complement.
    bron_kerbosch(&adjacent, Vec::new(), (0..d).collect(), Vec::new(), &mut supports);
    for s in &mut supports {
        s.iter_mut().for_each(|v| *v += 1);
        s.sort_unstable();
    }
    supports.sort();
    Ok(CharacterSet { d, edges, tag, supports })
}

fn bron_kerbosch(adj: &[Vec<bool>], r: Vec<usize>, p: Vec<usize>, x: Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if p.is_empty() && x.is_empty() {
        out.push(r);
        return;
    }
    let mut p = p;
    let mut x = x;
    while let Some(v) = p.pop() {
        let compatible = |u: &usize| *u != v && !adj[v][*u];
        let mut r2 = r.clone();
        r2.push(v);
        bron_kerbosch(adj, r2, p.iter().copied().filter(compatible).collect(), x.iter().copied().filter(compatible).collect(), out);
        x.push(v);
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct QuadInvariants {
    pub rank: usize,
    pub rank_sym: usize,
    pub rank_anti: usize,
    pub singular_values: [f64; 2],
    pub takagi_values: [f64; 2],
    /// `|a|` for the antisymmetric part `a·[[0,1],[-1,0]]`.
    pub anti_coeff: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct QuadEquivalence {
    pub verdict: Verdict,
    pub reason: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<[f64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub unitary: Option<Vec<Vec<[f64; 2]>>>,
    pub residual: Option<f64>,
    /// Decision statistic compared against `WITNESS_TOL`: the witness residual
    /// when one was tried, otherwise the relative gap between the invariants.
    pub gap: f64,
    pub invariants: [QuadInvariants; 2],
    pub search_budget: String,
}

#[derive(Clone, Debug)]
pub struct Witness {
    pub lambda: C64,
    pub u: CMatrix,
    pub residual: f64,
}

fn check_two(a: &CMatrix, name: &str) -> Result<()> {
    if a.nrows() != 2 || a.ncols() != 2 {
        return Err(Error::DimensionMismatch { what: format!("{name} must be 2x2"), expected: 2, found: a.nrows() });
    }
    if a.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::InvalidParameter(format!("{name} has non-finite entries")));
    }
    Ok(())
}

pub fn symmetric_part(a: &CMatrix) -> CMatrix {
    (a + a.transpose()) * c(0.5, 0.0)
}

/// Coefficient `a` with `(A − Aᵗ)/2 = a·[[0,1],[-1,0]]`.
pub fn anti_coefficient(a: &CMatrix) -> C64 {
    (a[(0, 1)] - a[(1, 0)]) * 0.5
}

fn sym_rank(s: &CMatrix, scale: f64) -> usize {
    if opnorm(s) <= 1e-12 * scale.max(1.0) {
        0
    } else {
        rank(s, DEFAULT_REL_TOL)
    }
}

/// `S = Q Σ Qᵗ` for complex symmetric `S` (`Q` unitary, `Σ` descending).
pub fn takagi(s: &CMatrix) -> (CMatrix, [f64; 2]) {
    let (a, b) = (s.map(|z| z.re), s.map(|z| z.im));
    let mut m = Matrix4::<f64>::zeros();
    for i in 0..2 {
        for j in 0..2 {
            m[(i, j)] = a[(i, j)];
            m[(i, j + 2)] = b[(i, j)];
            m[(i + 2, j)] = b[(i, j)];
            m[(i + 2, j + 2)] = -a[(i, j)];
        }
    }
    let scale = m.norm().max(1.0);
    let eig = [0.0, 0.5 * scale, 1.37 * scale]
        .into_iter()
        .map(|shift| {
            let mut e = (m + Matrix4::identity() * shift).symmetric_eigen();
            e.eigenvalues.add_scalar_mut(-shift);
            e
        })
        .find(|e| e.eigenvalues.iter().chain(e.eigenvectors.iter()).all(|x| x.is_finite()))
        .expect("4x4 symmetric eigensolver");
    let mut order: Vec<usize> = (0..4).collect();
    order.sort_by(|&x, &y| eig.eigenvalues[y].total_cmp(&eig.eigenvalues[x]));
    let mut q = CMatrix::zeros(2, 2);
    let mut sigma = [0.0; 2];
    for (col, &k) in order.iter().take(2).enumerate() {
        let v = eig.eigenvectors.column(k);
        for i in 0..2 {
            q[(i, col)] = c(v[i], v[i + 2]);
        }
        sigma[col] = eig.eigenvalues[k].max(0.0);
    }
    (q, sigma)
}

fn invariants(a: &CMatrix) -> QuadInvariants {
    let s = symmetric_part(a);
    let sv = a.singular_values();
    let (_, tv) = takagi(&s);
    let scale = opnorm(a);
    let anti = anti_coefficient(a);
    QuadInvariants {
        rank: if scale <= 1e-12 { 0 } else { rank(a, DEFAULT_REL_TOL) },
        rank_sym: sym_rank(&s, scale),
        rank_anti: usize::from(anti.norm() > 1e-12 * scale.max(1.0)) * 2,
        singular_values: [sv.max(), sv.min()],
        takagi_values: tv,
        anti_coeff: anti.norm(),
    }
}

pub fn witness_residual(a: &CMatrix, b: &CMatrix, lambda: C64, u: &CMatrix) -> f64 {
    opnorm(&(b - u.transpose() * a * u * lambda))
}

/// Largest difference of the scaled invariants relative to `σ_1(B)`; `1` when
/// the rank pattern differs.
pub fn invariant_gap(ia: &QuadInvariants, ib: &QuadInvariants) -> f64 {
    if (ia.rank, ia.rank_sym, ia.rank_anti) != (ib.rank, ib.rank_sym, ib.rank_anti) {
        return 1.0;
    }
    if ia.rank == 0 {
        return 0.0;
    }
    let nb = ib.singular_values[0];
    let scale = nb / ia.singular_values[0];
    [
        (ia.singular_values[1], ib.singular_values[1]),
        (ia.takagi_values[0], ib.takagi_values[0]),
        (ia.takagi_values[1], ib.takagi_values[1]),
        (ia.anti_coeff, ib.anti_coeff),
    ]
    .iter()
    .map(|&(x, y)| (x * scale - y).abs() / nb)
    .fold(0.0, f64::max)
}

fn diag(a: C64, b: C64) -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[a, c(0.0, 0.0), c(0.0, 0.0), b])
}

/// Candidate witnesses from the Takagi normal forms of both symmetric parts.
/// Exact whenever the invariants agree; all candidates are returned so the
/// caller keeps the best residual.
fn normal_form_candidates(a: &CMatrix, b: &CMatrix, ia: &QuadInvariants, ib: &QuadInvariants) -> Vec<(C64, CMatrix)> {
    let (qa, _) = takagi(&symmetric_part(a));
    let (qb, _) = takagi(&symmetric_part(b));
    let lam = c(ib.singular_values[0] / ia.singular_values[0], 0.0);
    let (aa, ab) = (anti_coefficient(a), anti_coefficient(b));
    let one = c(1.0, 0.0);
    let mut out = Vec::new();
    match ia.rank_sym {
        2 => {
            for eps in [one, -one] {
                let w = diag(one, eps);
                out.push((lam, qa.conjugate() * w * qb.transpose()));
            }
        }
        1 if aa.norm() == 0.0 && ab.norm() == 0.0 => {
            if let (Ok((sa, ua)), Ok((sb, ub))) = (rank_one_symmetric_witness(a), rank_one_symmetric_witness(b)) {
                out.push((c(sb / sa, 0.0), ua * ub.adjoint()));
            }
        }
        1 => {
            // Stabilizer of diag(1, 0) is diag(±1, e^{iψ}); ψ fixes the antisymmetric phase.
            let det_qa = qa.determinant();
            let det_qb = qb.determinant();
            let base = lam * det_qa.conj() * det_qb * aa;
            let phase = if base.norm() > 0.0 && ab.norm() > 0.0 { (ab / base) / (ab / base).norm() } else { one };
            for eps in [one, -one] {
                out.push((lam, qa.conjugate() * diag(eps, phase * eps) * qb.transpose()));
            }
        }
        _ => {
            let l = if aa.norm() > 0.0 { ab / aa } else { one };
            out.push((l, CMatrix::identity(2, 2)));
        }
    }
    out
}

/// `(σ, U)` with `Uᵗ A U = σ E_11` for symmetric rank-one `A = σ v vᵗ`, where
/// `U` has columns `v̄` and `(v_2, −v_1)`.
pub fn rank_one_symmetric_witness(a: &CMatrix) -> Result<(f64, CMatrix)> {
    check_two(a, "A")?;
    let scale = opnorm(a);
    if opnorm(&(a - a.transpose())) > 1e-12 * scale.max(1.0) || scale <= 1e-12 || rank(a, DEFAULT_REL_TOL) != 1 {
        return Err(Error::InvalidParameter("expected a symmetric matrix of rank one".into()));
    }
    let (q, sv) = takagi(&symmetric_part(a));
    let v = q.column(0).into_owned();
    let u = CMatrix::from_row_slice(2, 2, &[v[0].conj(), v[1], v[1].conj(), -v[0]]);
    Ok((sv[0], u))
}

/// Unitary `U(2)` element from a real 4-vector (normalized quaternion).
fn su2(x: &[f64; 4]) -> CMatrix {
    let n = (x.iter().map(|v| v * v).sum::<f64>()).sqrt().max(1e-300);
    let (p, q) = (c(x[0] / n, x[1] / n), c(x[2] / n, x[3] / n));
    CMatrix::from_row_slice(2, 2, &[p, -q.conj(), q, p.conj()])
}

/// Least-squares `λ` for fixed `U` and the resulting residual vector.
fn projected(a: &CMatrix, b: &CMatrix, u: &CMatrix) -> (C64, [f64; 8]) {
    let m = u.transpose() * a * u;
    let mm: f64 = m.iter().map(|z| z.norm_sqr()).sum();
    let lam = if mm > 0.0 { m.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum::<C64>() / mm } else { c(0.0, 0.0) };
    let r = b - m * lam;
    let mut out = [0.0; 8];
    for (k, z) in r.iter().enumerate() {
        out[2 * k] = z.re;
        out[2 * k + 1] = z.im;
    }
    (lam, out)
}

fn levenberg_marquardt(a: &CMatrix, b: &CMatrix, start: [f64; 4]) -> Witness {
    let mut x = start;
    let mut mu = 1e-3;
    let cost = |x: &[f64; 4]| projected(a, b, &su2(x)).1.iter().map(|v| v * v).sum::<f64>();
    let mut f = cost(&x);
    for _ in 0..SEARCH_ITERS {
        let (_, r) = projected(a, b, &su2(&x));
        let mut jac = DMatrix::<f64>::zeros(8, 4);
        for k in 0..4 {
            let h = 1e-7;
            let mut xp = x;
            let mut xm = x;
            xp[k] += h;
            xm[k] -= h;
            let (_, rp) = projected(a, b, &su2(&xp));
            let (_, rm) = projected(a, b, &su2(&xm));
            for i in 0..8 {
                jac[(i, k)] = (rp[i] - rm[i]) / (2.0 * h);
            }
        }
        let rv = nalgebra::DVector::from_column_slice(&r);
        let jt = jac.transpose();
        let g = &jt * &rv;
        let mut improved = false;
        for _ in 0..10 {
            let mut lhs = &jt * &jac;
            for k in 0..4 {
                lhs[(k, k)] += mu * (1.0 + lhs[(k, k)]);
            }
            let step = match lhs.lu().solve(&(-&g)) {
                Some(s) => s,
                None => break,
            };
            let mut xn = x;
            for k in 0..4 {
                xn[k] += step[k];
            }
            let fnew = cost(&xn);
            if fnew < f {
                x = xn;
                f = fnew;
                mu = (mu * 0.3).max(1e-15);
                improved = true;
                break;
            }
            mu *= 10.0;
        }
        if !improved || f < 1e-30 {
            break;
        }
    }
    let u = su2(&x);
    let (lambda, _) = projected(a, b, &u);
    let residual = witness_residual(a, b, lambda, &u);
    Witness { lambda, u, residual }
}

/// Multi-start search over `SU(2)` with a fixed seed schedule.
pub fn search_witness(a: &CMatrix, b: &CMatrix, seed: u64) -> Witness {
    let run = |k: usize| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(k as u64));
        let start = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
        levenberg_marquardt(a, b, start)
    };
    #[cfg(feature = "parallel")]
    let results: Vec<Witness> = {
        use rayon::prelude::*;
        (0..SEARCH_STARTS).into_par_iter().map(run).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let results: Vec<Witness> = (0..SEARCH_STARTS).map(run).collect();
    results.into_iter().min_by(|x, y| x.residual.total_cmp(&y.residual)).expect("at least one start")
}

fn complex_rows(m: &CMatrix) -> Vec<Vec<[f64; 2]>> {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect()).collect()
}

/// Decides whether `B = λ UᵗAU` for some `λ ∈ C` and unitary `U`.
pub fn quad_equivalent(a: &CMatrix, b: &CMatrix, seed: u64) -> Result<QuadEquivalence> {
    check_two(a, "A")?;
    check_two(b, "B")?;
    let ia = invariants(a);
    let ib = invariants(b);
    let budget = format!("{SEARCH_STARTS} starts x {SEARCH_ITERS} iterations, seed {seed}");
    let gap = invariant_gap(&ia, &ib);
    let answer = |verdict, reason: &str, w: Option<&Witness>| QuadEquivalence {
        verdict,
        reason: reason.to_string(),
        lambda: w.map(|w| [w.lambda.re, w.lambda.im]),
        unitary: w.map(|w| complex_rows(&w.u)),
        residual: w.map(|w| w.residual),
        gap: w.map_or(gap, |w| w.residual),
        invariants: [ia.clone(), ib.clone()],
        search_budget: budget.clone(),
    };
    if ia.rank == 0 || ib.rank == 0 {
        return Ok(if ia.rank == ib.rank {
            let w = Witness { lambda: c(1.0, 0.0), u: CMatrix::identity(2, 2), residual: opnorm(&(b - a)) };
            answer(Verdict::Pass, "both relations vanish", Some(&w))
        } else {
            answer(Verdict::Fail, "exactly one relation vanishes", None)
        });
    }
    if (ia.rank, ia.rank_sym, ia.rank_anti) != (ib.rank, ib.rank_sym, ib.rank_anti) {
        return Ok(answer(Verdict::Fail, "rank invariants differ", None));
    }
    let scale = ib.singular_values[0] / ia.singular_values[0];
    let nb = ib.singular_values[0];
    if gap > WITNESS_TOL {
        return Ok(answer(Verdict::Fail, "scaled singular values differ", None));
    }
    let mut best: Option<Witness> = None;
    for (lambda, u) in normal_form_candidates(a, b, &ia, &ib) {
        let residual = witness_residual(a, b, lambda, &u);
        if best.as_ref().map_or(true, |w| residual < w.residual) {
            best = Some(Witness { lambda, u, residual });
        }
    }
    let best = best.expect("nonempty candidate list");
    if best.residual <= WITNESS_TOL {
        return Ok(answer(Verdict::Pass, "normal forms agree", Some(&best)));
    }
    if ia.rank_sym == 2 && ia.anti_coeff > 0.0 {
        // With both Takagi values positive the only freedom left is a sign on the
        // antisymmetric coefficient; a well-conditioned mismatch there is decisive.
        let (qa, _) = takagi(&symmetric_part(a));
        let (qb, _) = takagi(&symmetric_part(b));
        let lam = c(scale, 0.0);
        let predicted = lam * qa.determinant().conj() * qb.determinant() * anti_coefficient(a);
        let ab = anti_coefficient(b);
        let sign_gap = (ab - predicted).norm().min((ab + predicted).norm());
        let separated = (ia.takagi_values[0] - ia.takagi_values[1]).abs() > 1e-6 * ia.takagi_values[0];
        if separated && sign_gap > 1e-6 * nb {
            let mut out = answer(Verdict::Fail, "antisymmetric parts differ beyond the sign freedom", None);
            out.gap = best.residual;
            return Ok(out);
        }
    }
    let searched = search_witness(a, b, seed);
    if searched.residual <= WITNESS_TOL {
        Ok(answer(Verdict::Pass, "local search", Some(&searched)))
    } else {
        Ok(answer(Verdict::Inconclusive, "invariants agree but no witness found", Some(&searched)))
    }
}

/// `A_q = [[1, q], [-q, 0]]`.
pub fn a_q(q: f64) -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(q, 0.0), c(-q, 0.0), c(0.0, 0.0)])
}

/// The unique `q ≥ 0` with `A ~ A_q`, for `r(A^s) = 1`.
pub fn canonical_q(a: &CMatrix) -> Result<f64> {
    check_two(a, "A")?;
    let inv = invariants(a);
    if inv.rank_sym != 1 {
        return Err(Error::InvalidParameter(format!("symmetric part has rank {}, expected 1", inv.rank_sym)));
    }
    Ok(inv.anti_coeff / inv.takagi_values[0])
}

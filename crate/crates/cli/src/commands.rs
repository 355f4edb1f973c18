use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde_json::{json, Value};
use spsys::classify::{permute_qmatrix, Q_TOL, WITNESS_TOL};
use spsys::cpmaps::{as_fiber_dims, strong_commute_stochastic};
use spsys::linalg::{MatrixJson, DEFAULT_REL_TOL};
use spsys::reps::{is_representation, maximal_piece, poisson_kernel, RepReport, REP_TOL};
use spsys::subproduct::AXIOM_TOL;
use spsys::{
    character_set_descriptor, q_equivalent, quad_equivalent, CMatrix, CVector, KrausChannel, RepTuple, StochasticMatrix,
    SubproductSystem, SubshiftSpec, SystemSpec, TruncatedFock, Word, C64,
};

use crate::report::{Check, Inputs, Report};
use crate::SystemArgs;

/// Residual threshold for the shift identities (row defect, subshift relations).
const SHIFT_TOL: f64 = 1e-10;
/// Dense complex columns assumed per ambient row when estimating memory.
const WORKING_COLUMNS: u128 = 64;

fn read(path: &Path, inputs: &mut Inputs) -> Result<String> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    inputs.add(&bytes);
    String::from_utf8(bytes).with_context(|| format!("{} is not UTF-8", path.display()))
}

fn read_matrix(path: &Path, inputs: &mut Inputs) -> Result<CMatrix> {
    let text = read(path, inputs)?;
    let m: MatrixJson = serde_json::from_str(&text).with_context(|| format!("parsing matrix {}", path.display()))?;
    m.to_matrix().with_context(|| format!("matrix {}", path.display()))
}

/// Fails fast when `16 · d^depth · h · WORKING_COLUMNS` bytes exceeds the budget.
fn check_budget(d: usize, depth: usize, h: usize, budget: u64) -> Result<()> {
    let words = (d as u128).checked_pow(depth as u32);
    let estimate = words.and_then(|w| w.checked_mul(16 * h.max(1) as u128 * WORKING_COLUMNS));
    match estimate {
        Some(bytes) if bytes <= budget as u128 => Ok(()),
        Some(bytes) => bail!(
            "depth {depth} over {d} letters (h = {h}) needs about {} MiB, budget is {} MiB; lower --depth or raise --budget-mb",
            bytes >> 20,
            budget >> 20
        ),
        None => bail!("depth {depth} over {d} letters overflows the memory estimate; lower --depth"),
    }
}

struct Loaded {
    inputs: Inputs,
    spec: SystemSpec,
    sys: SubproductSystem,
}

fn load_system(args: &SystemArgs, h: usize, budget: u64, mut inputs: Inputs) -> Result<Loaded> {
    let text = read(&args.spec, &mut inputs)?;
    let spec = SystemSpec::from_json_str(&text).with_context(|| format!("parsing spec {}", args.spec.display()))?;
    let depth = args
        .depth
        .or(spec.depth)
        .with_context(|| format!("{}: no \"depth\" key and no --depth", args.spec.display()))?;
    if depth == 0 {
        bail!("depth must be at least 1");
    }
    check_budget(spec.d, depth, h, budget)?;
    let sys = spec.build(Some(depth)).with_context(|| format!("building {}", args.spec.display()))?;
    Ok(Loaded { inputs, spec, sys })
}

fn load_rep(path: &Path, inputs: &mut Inputs) -> Result<RepTuple> {
    let text = read(path, inputs)?;
    RepTuple::from_json_str(&text).with_context(|| format!("parsing representation {}", path.display()))
}

/// Reads `h` from a representation file without hashing it, for the budget check.
fn peek_h(path: &Path) -> Result<usize> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let v: Value = serde_json::from_str(&text).with_context(|| format!("parsing representation {}", path.display()))?;
    v.get("h").and_then(Value::as_u64).map(|h| h as usize).with_context(|| format!("{}: missing key \"h\"", path.display()))
}

fn dims_line(dims: &[usize]) -> String {
    dims.iter().map(usize::to_string).collect::<Vec<_>>().join(" ")
}

pub fn dims(args: &SystemArgs, budget: u64) -> Result<String> {
    let l = load_system(args, 1, budget, Inputs::default())?;
    Ok(dims_line(&l.sys.dims()))
}

fn axiom_checks(sys: &SubproductSystem, tol: Option<f64>) -> Vec<Check> {
    let rep = sys.verify_axioms();
    let n = sys.depth();
    let dims = &rep.dims;
    let mut excess = 0usize;
    for total in 2..=n {
        for m in 1..total {
            excess = excess.max(dims[total].saturating_sub(dims[m] * dims[total - m]));
        }
    }
    vec![
        Check::threshold("axioms", Some([1, n]), rep.max_residual, tol.unwrap_or(AXIOM_TOL)),
        Check::threshold("submultiplicative", Some([1, n]), excess as f64, 0.0),
    ]
}

pub fn build(args: &SystemArgs, out: Option<&Path>, budget: u64) -> Result<Report> {
    let l = load_system(args, 1, budget, Inputs::default())?;
    let sys = &l.sys;
    let mut result = json!({ "d": sys.d(), "depth": sys.depth(), "kind": sys.provenance().kind(), "dims": sys.dims() });
    if let Some(path) = out {
        let fibers: Vec<MatrixJson> = sys.fibers().iter().map(|f| MatrixJson::from_matrix(f.frame())).collect();
        let file = SystemSpec {
            d: sys.d(),
            depth: Some(sys.depth()),
            kind: "fibers".into(),
            generators: None,
            forbidden: None,
            q: None,
            a: None,
            fibers: Some(fibers[1..].to_vec()),
        };
        fs::write(path, serde_json::to_string(&file)?).with_context(|| format!("writing {}", path.display()))?;
        result["out"] = json!(path.display().to_string());
    }
    Ok(Report::new("build", l.inputs, axiom_checks(sys, None), result))
}

pub fn verify(args: &SystemArgs, names: &[String], tol: Option<f64>, unit: Option<&[f64]>, budget: u64) -> Result<Report> {
    let l = load_system(args, 1, budget, Inputs::default())?;
    let sys = &l.sys;
    let n = sys.depth();
    let fock = TruncatedFock::new(sys.clone());
    let shifts = fock.shifts();
    let mut checks = Vec::new();
    for name in names {
        match name.trim() {
            "axioms" => checks.extend(axiom_checks(sys, tol)),
            "defect" => {
                for k in 1..=n.min(3) {
                    let rep = fock.defect_check(&shifts, k)?;
                    let id = if k == 1 { "defect".to_string() } else { format!("defect-k{k}") };
                    checks.push(Check::threshold(id, Some([0, rep.window]), rep.residual, tol.unwrap_or(SHIFT_TOL)));
                }
            }
            "subshift" => {
                let words = l.spec.forbidden.as_ref().context("check \"subshift\" needs a spec of kind \"subshift\"")?;
                let spec = SubshiftSpec::new(sys.d(), words.iter().map(|w| Word::new(w.clone())).collect())?;
                let rep = fock.subshift_relations(&shifts, &spec)?;
                let thr = tol.unwrap_or(SHIFT_TOL);
                checks.push(Check::threshold("subshift-cross", Some([0, rep.window]), rep.cross_max, thr));
                for ld in &rep.defects {
                    let residual = ld.outside_support_residual.max(ld.vacuum_residual);
                    checks.push(Check::threshold(format!("subshift-defect-{}", ld.letter), Some([0, rep.window]), residual, thr));
                }
            }
            "unit" => {
                let v = match unit {
                    Some(u) => CVector::from_iterator(u.len(), u.iter().map(|&x| C64::new(x, 0.0))),
                    None => CVector::from_fn(sys.d(), |i, _| C64::new(if i == 0 { 1.0 } else { 0.0 }, 0.0)),
                };
                if v.norm() == 0.0 {
                    bail!("--unit must be a nonzero vector");
                }
                let rep = sys.verify_unit(&v)?;
                let residual = rep.residuals.iter().copied().fold(0.0, f64::max);
                checks.push(Check::threshold("unit", Some([1, n]), residual, tol.unwrap_or(AXIOM_TOL)));
            }
            other => bail!("unknown check {other:?}; expected axioms, defect, subshift or unit"),
        }
    }
    let result = json!({ "d": sys.d(), "depth": n, "dims": sys.dims() });
    Ok(Report::new("verify", l.inputs, checks, result))
}

pub fn shift(args: &SystemArgs, out: &Path, budget: u64) -> Result<Report> {
    let l = load_system(args, 1, budget, Inputs::default())?;
    let fock = TruncatedFock::new(l.sys.clone());
    let shifts = fock.shifts();
    let written = fock.export_shifts(&shifts, out).with_context(|| format!("writing into {}", out.display()))?;
    let files: Vec<String> =
        written.iter().map(|p| p.file_name().map(|f| f.to_string_lossy().into_owned()).unwrap_or_default()).collect();
    let result = json!({
        "dims": l.sys.dims(),
        "total_dim": fock.total_dim(),
        "row_norm": shifts.row_norm(),
        "files": files,
    });
    Ok(Report::new("shift", l.inputs, Vec::new(), result))
}

fn rep_checks(rep: &RepReport, depth: usize) -> Vec<Check> {
    let mut checks: Vec<Check> = rep
        .levels
        .iter()
        .map(|lv| Check::threshold(format!("level-{}", lv.level), Some([lv.level, lv.level]), lv.residual, REP_TOL))
        .collect();
    if !rep.generator_residuals.is_empty() {
        let worst = rep.generator_residuals.iter().copied().fold(0.0, f64::max);
        checks.push(Check::threshold("generators", Some([1, depth]), worst, REP_TOL));
    }
    checks
}

pub fn check_rep(args: &SystemArgs, rep_path: &Path, budget: u64) -> Result<Report> {
    let h = peek_h(rep_path)?;
    let mut l = load_system(args, h, budget, Inputs::default())?;
    let t = load_rep(rep_path, &mut l.inputs)?;
    let rep = is_representation(&l.sys, &t)?;
    let checks = rep_checks(&rep, l.sys.depth());
    let result = json!({ "h": t.h(), "row_norm": t.row_norm(), "failed_at": rep.failed_at });
    Ok(Report::new("check-rep", l.inputs, checks, result))
}

fn words_up_to(d: usize, max_len: usize) -> Vec<Word> {
    (0..=max_len).flat_map(|n| Word::all(n, d)).collect()
}

pub fn poisson(args: &SystemArgs, rep_path: &Path, r: f64, max_len: usize, budget: u64) -> Result<Report> {
    let h = peek_h(rep_path)?;
    let mut l = load_system(args, h, budget, Inputs::default())?;
    let t = load_rep(rep_path, &mut l.inputs)?;
    let n = l.sys.depth();
    if max_len > n {
        bail!("--max-len {max_len} exceeds depth {n}");
    }
    let fock = TruncatedFock::new(l.sys.clone());
    let shifts = fock.shifts();
    let kernel = poisson_kernel(&fock, &t, r)?;
    let mut checks = vec![Check::threshold("isometry", Some([0, n]), kernel.isometry_defect(), kernel.tail_bound(0) + 1e-10)];
    let words = words_up_to(l.sys.d(), max_len);
    for alpha in &words {
        for beta in &words {
            if alpha.len() + beta.len() > max_len {
                continue;
            }
            let tc = kernel.check(&shifts, alpha, beta);
            checks.push(Check::threshold(format!("transform-{alpha}-{beta}"), Some([0, n]), tc.residual, tc.bound + 1e-10));
        }
    }
    checks.push(Check::threshold("kernel-range", Some([1, n]), kernel.range_residual(&l.sys), 1e-9));
    let result = json!({ "r": r, "row_norm": t.row_norm(), "h": t.h(), "kernel_rows": kernel.matrix().nrows() });
    Ok(Report::new("poisson", l.inputs, checks, result))
}

pub fn piece(args: &SystemArgs, ambient: Option<&Path>, rep_path: &Path, budget: u64) -> Result<Report> {
    let h = peek_h(rep_path)?;
    let mut l = load_system(args, h, budget, Inputs::default())?;
    let depth = l.sys.depth();
    let y = match ambient {
        Some(path) => {
            let text = read(path, &mut l.inputs)?;
            let spec = SystemSpec::from_json_str(&text).with_context(|| format!("parsing spec {}", path.display()))?;
            spec.build(Some(depth)).with_context(|| format!("building {}", path.display()))?
        }
        None => SubproductSystem::full(l.sys.d(), depth),
    };
    let t = load_rep(rep_path, &mut l.inputs)?;
    let piece = maximal_piece(&l.sys, &y, &t)?;
    let dim = piece.subspace.dim();
    let residual = if dim == 0 { 0.0 } else { is_representation(&l.sys, &t.compress(&piece.subspace)?)?.max_residual };
    let checks = vec![Check::threshold("piece-representation", Some([1, depth]), residual, REP_TOL)];
    let result = json!({
        "h": t.h(),
        "dim": dim,
        "iterations": piece.iterations,
        "frame": MatrixJson::from_matrix(piece.subspace.frame()),
    });
    Ok(Report::new("piece", l.inputs, checks, result))
}

pub fn classify_qmat(a: &Path, b: &Path) -> Result<Report> {
    let mut inputs = Inputs::default();
    let q = read_matrix(a, &mut inputs)?;
    let r = read_matrix(b, &mut inputs)?;
    let eq = q_equivalent(&q, &r)?;
    let check = Check::threshold("q-equivalence", None, eq.mismatch, Q_TOL);
    let mut result = serde_json::to_value(&eq)?;
    if let Some(sigma) = &eq.sigma {
        result["permuted"] = json!(MatrixJson::from_matrix(&permute_qmatrix(&q, sigma)));
    }
    Ok(Report::new("classify qmat", inputs, vec![check], result))
}

pub fn classify_quad(a: &Path, b: &Path, seed: u64) -> Result<Report> {
    let mut inputs = Inputs::default();
    let ma = read_matrix(a, &mut inputs)?;
    let mb = read_matrix(b, &mut inputs)?;
    let eq = quad_equivalent(&ma, &mb, seed)?;
    let check = Check {
        check_id: "quad-equivalence".into(),
        window: None,
        residual: eq.gap,
        threshold: WITNESS_TOL,
        verdict: eq.verdict,
    };
    Ok(Report::new("classify quad", inputs, vec![check], serde_json::to_value(&eq)?))
}

pub fn classify_chars(path: &Path) -> Result<Report> {
    let mut inputs = Inputs::default();
    let q = read_matrix(path, &mut inputs)?;
    let set = character_set_descriptor(&q)?;
    Ok(Report::new("classify chars", inputs, Vec::new(), serde_json::to_value(&set)?))
}

fn read_stochastic(path: &Path, inputs: &mut Inputs) -> Result<StochasticMatrix> {
    let text = read(path, inputs)?;
    let parsed = if text.trim_start().starts_with('{') {
        let m: MatrixJson = serde_json::from_str(&text).with_context(|| format!("parsing matrix {}", path.display()))?;
        StochasticMatrix::from_matrix_json(&m)
    } else {
        StochasticMatrix::from_csv(&text)
    };
    parsed.with_context(|| format!("reading stochastic matrix {}", path.display()))
}

pub fn strong_commute(p: &Path, q: &Path) -> Result<Report> {
    let mut inputs = Inputs::default();
    let pm = read_stochastic(p, &mut inputs)?;
    let qm = read_stochastic(q, &mut inputs)?;
    let rep = strong_commute_stochastic(&pm, &qm)?;
    let mut checks = vec![Check::threshold("commute", None, rep.residual, 1e-12)];
    if rep.commute {
        checks.push(Check::threshold("strong", None, rep.witness.len() as f64, 0.0));
    }
    Ok(Report::new("cp strong-commute", inputs, checks, serde_json::to_value(&rep)?))
}

pub fn as_dims(path: &Path, n: usize, tol: Option<f64>) -> Result<Report> {
    if n == 0 {
        bail!("--n must be at least 1");
    }
    let mut inputs = Inputs::default();
    let text = read(path, &mut inputs)?;
    let ch = KrausChannel::from_json_str(&text).with_context(|| format!("parsing channel {}", path.display()))?;
    let fd = as_fiber_dims(&ch, n, tol.unwrap_or(DEFAULT_REL_TOL));
    let mut excess = 0usize;
    for j in 1..=n {
        for k in 1..=n - j {
            excess = excess.max(fd.dims[j + k - 1].saturating_sub(fd.dims[j - 1] * fd.dims[k - 1]));
        }
    }
    let checks = vec![Check::threshold("submultiplicative", Some([1, n]), excess as f64, 0.0)];
    let result = json!({ "h": ch.h(), "dims": fd.dims });
    Ok(Report::new("cp as-dims", inputs, checks, result))
}


//! Browser bindings: fiber dimensions of a system spec, strong commutation of
//! stochastic matrices, and q-matrix classification.

use spsys::cpmaps::strong_commute_stochastic;
use spsys::{c, character_set_descriptor, q_equivalent, CMatrix, StochasticMatrix, SystemSpec};
use wasm_bindgen::prelude::*;

/// Browser pages get a smaller cap than the CLI.
const MAX_AMBIENT: usize = 1 << 14;

fn js_err(e: impl std::fmt::Display) -> JsValue {
    JsValue::from_str(&e.to_string())
}

fn real_rows(text: &str) -> Result<CMatrix, String> {
    let rows: Vec<Vec<f64>> = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(|l| {
            l.split(|ch: char| ch == ',' || ch.is_whitespace())
                .filter(|t| !t.is_empty())
                .map(|t| t.parse::<f64>().map_err(|e| format!("{t:?}: {e}")))
                .collect()
        })
        .collect::<Result<_, _>>()?;
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != n) {
        return Err("expected a nonempty square matrix".into());
    }
    Ok(CMatrix::from_fn(n, n, |i, j| c(rows[i][j], 0.0)))
}

/// `dim X(0) .. dim X(depth)` as a JSON array.
pub fn dims_json(spec_json: &str, depth: usize) -> Result<String, String> {
    let spec = SystemSpec::from_json_str(spec_json).map_err(|e| e.to_string())?;
    if depth == 0 {
        return Err("depth must be at least 1".into());
    }
    let ambient = spec.d.checked_pow(depth as u32).unwrap_or(usize::MAX);
    if ambient > MAX_AMBIENT {
        return Err(format!("{}^{depth} words is too large for the browser", spec.d));
    }
    let sys = spec.build(Some(depth)).map_err(|e| e.to_string())?;
    serde_json::to_string(&sys.dims()).map_err(|e| e.to_string())
}

/// Strong commutation report for two stochastic matrices given as CSV rows.
pub fn strong_commute_json(p_csv: &str, q_csv: &str) -> Result<String, String> {
    let p = StochasticMatrix::from_csv(p_csv).map_err(|e| format!("P: {e}"))?;
    let q = StochasticMatrix::from_csv(q_csv).map_err(|e| format!("Q: {e}"))?;
    let rep = strong_commute_stochastic(&p, &q).map_err(|e| e.to_string())?;
    serde_json::to_string(&rep).map_err(|e| e.to_string())
}

/// Equivalence of two real q-matrices plus the character set of the first.
pub fn classify_q_json(q_rows: &str, r_rows: &str) -> Result<String, String> {
    let q = real_rows(q_rows).map_err(|e| format!("q: {e}"))?;
    let r = real_rows(r_rows).map_err(|e| format!("r: {e}"))?;
    let eq = q_equivalent(&q, &r).map_err(|e| e.to_string())?;
    let chars = character_set_descriptor(&q).map_err(|e| e.to_string())?;
    let out = serde_json::json!({ "equivalence": eq, "characters": chars });
    serde_json::to_string(&out).map_err(|e| e.to_string())
}

#[wasm_bindgen]
pub fn dims(spec_json: &str, depth: usize) -> Result<String, JsValue> {
    dims_json(spec_json, depth).map_err(js_err)
}

#[wasm_bindgen]
pub fn strong_commute(p_csv: &str, q_csv: &str) -> Result<String, JsValue> {
    strong_commute_json(p_csv, q_csv).map_err(js_err)
}

#[wasm_bindgen]
pub fn classify_q(q_rows: &str, r_rows: &str) -> Result<String, JsValue> {
    classify_q_json(q_rows, r_rows).map_err(js_err)
}

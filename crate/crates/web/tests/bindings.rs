use serde_json::Value;
use spsys_web::{classify_q_json, dims_json, strong_commute_json};

#[test]
fn golden_mean_dims() {
    let spec = r#"{"d": 2, "kind": "subshift", "forbidden": [[2, 2]]}"#;
    assert_eq!(dims_json(spec, 7).unwrap(), "[1,2,3,5,8,13,21,34]");
    assert!(dims_json(spec, 0).is_err());
    assert!(dims_json(spec, 20).is_err());
    assert!(dims_json(r#"{"d": 2}"#, 3).is_err());
}

#[test]
fn uniform_pair_is_not_strong() {
    let p = "0.3333333333333333,0.3333333333333333,0.3333333333333333\n".repeat(3);
    let q = "0.5,0,0.5\n0.25,0.5,0.25\n0.25,0.5,0.25";
    let v: Value = serde_json::from_str(&strong_commute_json(&p, q).unwrap()).unwrap();
    assert_eq!(v["commute"], true);
    assert_eq!(v["strong"], false);
    assert!(strong_commute_json("1,2", q).is_err());
}

#[test]
fn q_and_inverse_are_equivalent() {
    let v: Value = serde_json::from_str(&classify_q_json("1 2\n0.5 1", "1 0.5\n2 1").unwrap()).unwrap();
    assert_eq!(v["equivalence"]["equivalent"], true);
    let v: Value = serde_json::from_str(&classify_q_json("1 2\n0.5 1", "1 3\n0.333333333333333333 1").unwrap()).unwrap();
    assert_eq!(v["equivalence"]["equivalent"], false);
    assert!(classify_q_json("1 2\n2 1", "1 2\n0.5 1").is_err());
}

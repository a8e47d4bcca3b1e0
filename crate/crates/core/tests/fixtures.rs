//! Schema checks for the JSON fixture formats.

use serde_json::Value;

use seqdisc_core::{
    build_equal_overlap, build_measurement, build_two_set, build_twoset_measurement,
    plan_equal_split, simulate_chain, StateFamily, UsdMeasurement,
};

fn to_value<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).unwrap()
}

#[test]
fn family_fixture_schema() {
    let fam = build_two_set(4, 2, 0.6, 0.3).unwrap();
    let v = to_value(&fam);
    for key in ["spec", "ambient_dim", "vectors", "gram"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    assert_eq!(v["spec"]["variant"], "two_set");
    // vectors are row-major: one row per state
    assert_eq!(v["vectors"].as_array().unwrap().len(), 4);
    assert_eq!(v["vectors"][0].as_array().unwrap().len(), 5);

    let text = serde_json::to_string(&fam).unwrap();
    let back: StateFamily = serde_json::from_str(&text).unwrap();
    assert_eq!(back, fam);
}

#[test]
fn measurement_fixture_schema() {
    let fam = build_equal_overlap(3, 0.25).unwrap();
    let meas = build_measurement(&fam, 0.5).unwrap();
    let v = to_value(&meas);
    for key in [
        "input_family",
        "post_family",
        "povm",
        "kraus",
        "c",
        "q",
        "t",
        "terminal",
    ] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    assert_eq!(v["povm"].as_array().unwrap().len(), 4);
    assert_eq!(v["kraus"].as_array().unwrap().len(), 4);
    // operators are row-major dim x dim blocks
    assert_eq!(v["povm"][0]["dim"], 3);
    assert_eq!(v["kraus"][0]["rows"], 3);
    assert_eq!(v["kraus"][0]["data"].as_array().unwrap().len(), 9);

    let text = serde_json::to_string(&meas).unwrap();
    let back: UsdMeasurement = serde_json::from_str(&text).unwrap();
    assert_eq!(back.povm_elements(), meas.povm_elements());
}

#[test]
fn twoset_measurement_fixture_schema_extends_equal() {
    let fam = build_two_set(4, 2, 0.6, 0.3).unwrap();
    let meas = build_twoset_measurement(&fam, 0.6, 0.3).unwrap();
    let v = to_value(&meas);
    for key in [
        "input_family",
        "post_family",
        "povm",
        "kraus",
        "c1",
        "c2",
        "q1",
        "q2",
        "t1",
        "t2",
        "a1",
        "a2",
        "f1",
        "f2",
        "terminal",
    ] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    assert_eq!(v["povm"].as_array().unwrap().len(), 5);
}

#[test]
fn chain_run_record_schema() {
    let plan = plan_equal_split(3, 0.25, 2).unwrap();
    let stats = simulate_chain(&plan, None, 1_000, 9).unwrap();
    let v = to_value(&stats);
    for key in [
        "trials",
        "seed",
        "per_stage_success",
        "all_success",
        "mislabels",
        "per_state_sent",
        "per_state_all_success",
    ] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    let p = to_value(&plan);
    for key in ["n", "s", "overlaps", "stage_failures"] {
        assert!(p.get(key).is_some(), "missing {key}");
    }
}

//! JSON report fragments. Timing lives under `perf` keys so that compare
//! mode can drop it.

use std::time::Duration;

use gwrel::relations::{CheckOutcome, InstanceSpec, RelationOutcome, VerifyReport};
use gwrel::AffineForm;
use serde_json::{json, Map, Value};

pub fn form(f: &AffineForm) -> Value {
    let mut m = Map::new();
    for (s, c) in f.coeffs() {
        m.insert(format!("a{s}"), json!(c.to_string()));
    }
    m.insert("const".into(), json!(f.constant_part().to_string()));
    Value::Object(m)
}

pub fn perf(elapsed: Duration) -> Value {
    json!({ "wall_time_ms": elapsed.as_millis() as u64 })
}

fn spec(s: &InstanceSpec, name: &str) -> Value {
    json!({ "id": s.id, "description": s.describe(name) })
}

/// Adds `perf` unless comparing.
pub fn with_perf(mut v: Value, elapsed: Duration, compare: bool) -> Value {
    if !compare {
        v["perf"] = perf(elapsed);
    }
    v
}

pub fn relation(o: &RelationOutcome, compare: bool) -> Value {
    let (status, extracted) = match &o.extracted {
        Ok(f) if *f == o.printed.form => ("matched", form(f)),
        Ok(f) => ("mismatch", form(f)),
        Err(e) => ("error", json!(e.to_string())),
    };
    let v = json!({
        "instance": spec(&o.printed.spec, "Phi"),
        "status": status,
        "extracted": extracted,
        "printed": form(&o.printed.form),
        "matched": o.matched(),
    });
    with_perf(v, o.elapsed, compare)
}

fn check(o: &CheckOutcome, name: &str, compare: bool) -> Value {
    let (status, value) = match &o.value {
        Ok(v) if v.is_zero() => ("zero", form(v)),
        Ok(v) => ("nonzero", form(v)),
        Err(e) => ("error", json!(e.to_string())),
    };
    with_perf(json!({ "instance": spec(&o.spec, name), "status": status, "value": value }), o.elapsed, compare)
}

pub fn verify(r: &VerifyReport, name: &str, compare: bool) -> Value {
    let failures: Vec<&str> = r.failures().map(|o| o.spec.id.as_str()).collect();
    json!({
        "passed": r.passed(),
        "total": r.outcomes.len(),
        "failures": failures,
        "instances": r.outcomes.iter().map(|o| check(o, name, compare)).collect::<Vec<_>>(),
    })
}

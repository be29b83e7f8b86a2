//! Line-oriented results documents: one JSON object per line, tagged by
//! `"type"`.

use std::io::{self, Write};

use serde::Serialize;
use serde_json::{json, Value};

use super::session::RunResult;
use super::OptimizerSpec;

pub struct ResultsHeader<'a> {
    pub dataset: &'a str,
    pub metric: &'a str,
    pub spec: &'a OptimizerSpec,
}

fn tagged<T: Serialize>(kind: &str, body: &T) -> Value {
    let mut v = serde_json::to_value(body).expect("serializable");
    if let Value::Object(map) = &mut v {
        map.insert("type".into(), Value::String(kind.into()));
    }
    v
}

/// Writes `result` as a results document. `summary` lands in the final
/// line. Without `include_timings` the measured wall times are dropped so
/// that deterministic runs produce identical files.
pub fn write_results<W: Write>(
    mut w: W,
    header: &ResultsHeader<'_>,
    result: &RunResult,
    summary: Option<&Value>,
    include_timings: bool,
) -> io::Result<()> {
    let mut line = |v: Value| -> io::Result<()> {
        serde_json::to_writer(&mut w, &v)?;
        w.write_all(b"\n")
    };
    line(tagged(
        "meta",
        &json!({
            "dataset": header.dataset,
            "metric": header.metric,
            "optimizer": header.spec,
            "master_seed": result.master_seed,
            "max_resource": result.max_resource,
            "budget_mode": result.budget_mode,
            "reference_budget": result.reference_budget,
        }),
    ))?;
    for t in &result.trials {
        let mut v = tagged("trial", t);
        if !include_timings {
            if let Value::Object(map) = &mut v {
                map.remove("wall_time");
            }
        }
        line(v)?;
    }
    for b in &result.brackets {
        line(tagged("bracket", b))?;
    }
    for g in &result.generations {
        line(tagged("generation", g))?;
    }
    line(tagged("curve", &json!({ "points": result.anytime_curve })))?;
    let mut fin = json!({
        "consumed": result.consumed,
        "full_budget_equivalents": result.full_budget_equivalents(),
        "best": result.best,
    });
    if let (Value::Object(map), Some(Value::Object(extra))) = (&mut fin, summary) {
        map.extend(extra.clone());
    }
    line(tagged("final", &fin))
}

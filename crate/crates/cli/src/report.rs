//! Consolidated bundle of every stage written under the output directory.

use std::fs;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use crate::cells;
use crate::config::RunConfig;
use crate::error::{usage, CliResult};
use crate::output::{artifact_path, write_json, Artifact, Csv};

pub const SCHEMA_VERSION: u32 = 1;
pub const REQUIRED: [(&str, &str); 3] = [("mean", "estimate-mean"), ("psd", "estimate-psd"), ("bispectrum", "estimate-bispectrum")];
pub const OPTIONAL: [&str; 2] = ["power", "lcurve"];

fn load(dir: &Path, stage: &str, cfg: &RunConfig) -> CliResult<Option<Artifact<Value>>> {
    let path = artifact_path(dir, stage);
    if !path.is_file() {
        return Ok(None);
    }
    let a: Artifact<Value> = serde_json::from_str(&fs::read_to_string(&path)?)
        .map_err(|e| usage(format!("{}: {e}", path.display())))?;
    if a.config_hash != cfg.hash() {
        return Err(usage(format!("{stage} stage in {} was produced by a different configuration; rerun it", dir.display())));
    }
    Ok(Some(a))
}

pub fn build_report(cfg: &RunConfig) -> CliResult<Value> {
    let dir = &cfg.out_dir;
    let mut stages = serde_json::Map::new();
    for (stage, cmd) in REQUIRED {
        let a = load(dir, stage, cfg)?
            .ok_or_else(|| usage(format!("missing {stage} stage in {}: run `qnslab {cmd}` first", dir.display())))?;
        stages.insert(stage.into(), a.data);
    }
    for stage in OPTIONAL {
        stages.insert(stage.into(), load(dir, stage, cfg)?.map(|a| a.data).unwrap_or(Value::Null));
    }
    let mut config = serde_json::to_value(cfg)?;
    config.as_object_mut().expect("config is an object").remove("out_dir");
    let summary = summarize(&stages);
    Ok(json!({
        "schema_version": SCHEMA_VERSION,
        "config_hash": cfg.hash(),
        "seed": cfg.seed,
        "versions": {
            "qnslab": qnslab::VERSION,
            "cli": env!("CARGO_PKG_VERSION"),
            "generator": qnslab::noise::GENERATOR_VERSION,
        },
        "config": config,
        "summary": summary,
        "stages": stages,
    }))
}

fn count_covered(rows: &Value) -> Value {
    match rows.as_array() {
        Some(r) => json!({
            "covered": r.iter().filter(|x| x["covered"] == Value::Bool(true)).count(),
            "total": r.len(),
        }),
        None => Value::Null,
    }
}

fn summarize(stages: &serde_json::Map<String, Value>) -> Value {
    let mean = &stages["mean"];
    let psd = &stages["psd"];
    let bisp = &stages["bispectrum"];
    let power = &stages["power"];
    json!({
        "mu_b_hz": mean["mu_b_hz"],
        "mu_b_ci95_hz": mean["ci95_hz"],
        "ideal_mu_b_hz": mean["ideal_mu_b_hz"],
        "psd_coverage": count_covered(&psd["rows"]),
        "psd_condition_number": psd["condition_number"],
        "bispectrum_coverage": count_covered(&bisp["points"]),
        "bispectrum_condition_number": bisp["condition_number"],
        "lcurve_corner": bisp["lcurve"]["corner"],
        "chi_slope": power.get("chi_slope").cloned().unwrap_or(Value::Null),
        "phi_slope": power.get("phi_slope").cloned().unwrap_or(Value::Null),
    })
}

fn flatten(prefix: &str, v: &Value, csv: &mut Csv) {
    match v {
        Value::Object(m) => m.iter().for_each(|(k, x)| flatten(&format!("{prefix}{}{k}", if prefix.is_empty() { "" } else { "." }), x, csv)),
        Value::Array(a) => a.iter().enumerate().for_each(|(i, x)| flatten(&format!("{prefix}[{i}]"), x, csv)),
        Value::Null => csv.row(&cells![prefix, ""]),
        Value::String(s) => csv.row(&cells![prefix, s]),
        other => csv.row(&cells![prefix, other]),
    }
}

pub fn write_report(cfg: &RunConfig) -> CliResult<PathBuf> {
    let report = build_report(cfg)?;
    let path = cfg.out_dir.join("report.json");
    write_json(&path, &report)?;
    let mut csv = Csv::new(&["metric", "value"]);
    flatten("", &report["summary"], &mut csv);
    csv.write(&cfg.out_dir.join("report_summary.csv"))?;
    Ok(path)
}

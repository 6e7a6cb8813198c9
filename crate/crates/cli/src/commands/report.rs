//! `report`: gather the `*_summary.json` artifacts other commands left in
//! the output directory into one consolidated report (JSON + flattened CSV).

use serde_json::Value;

use crate::config::ExperimentConfig;
use crate::fail::{io_at, CliResult, Failure};
use crate::table::{Cell, Table};

pub fn run(cfg: &ExperimentConfig) -> CliResult<Vec<(&'static str, Cell)>> {
    let dir = &cfg.output_dir;
    let entries = std::fs::read_dir(dir).map_err(|e| io_at(dir, e))?;
    let mut names: Vec<String> = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|e| io_at(dir, e))?;
        let name = entry.file_name().to_string_lossy().into_owned();
        if name.ends_with("_summary.json") && name != "report_summary.json" {
            names.push(name);
        }
    }
    names.sort();
    if names.is_empty() {
        return Err(Failure::io(format!(
            "no report artifacts (*_summary.json) found in {}",
            dir.display()
        )));
    }

    let mut artifacts = serde_json::Map::new();
    let mut flat = Table::new(&["artifact", "key", "value"]);
    for name in &names {
        let path = dir.join(name);
        let text = std::fs::read_to_string(&path).map_err(|e| io_at(&path, e))?;
        let value: Value = serde_json::from_str(&text)
            .map_err(|e| Failure::io(format!("{}: {e}", path.display())))?;
        let stem = name.trim_end_matches("_summary.json").to_string();
        if let Value::Object(map) = &value {
            for (key, v) in map {
                let cell = match v {
                    Value::Bool(b) => Some(Cell::from(*b)),
                    Value::Number(n) => {
                        if let Some(i) = n.as_i64() {
                            Some(Cell::Int(i))
                        } else {
                            n.as_f64().map(Cell::Float)
                        }
                    }
                    Value::String(s) => Some(Cell::Text(s.clone())),
                    _ => None,
                };
                if let Some(cell) = cell {
                    flat.push(vec![stem.clone().into(), key.as_str().into(), cell]);
                }
            }
        }
        artifacts.insert(stem, value);
    }

    let report = serde_json::json!({
        "command": "report",
        "artifact_count": names.len(),
        "artifacts": Value::Object(artifacts),
    });
    let json_path = dir.join("report.json");
    std::fs::write(
        &json_path,
        serde_json::to_string_pretty(&report).expect("report serializes") + "\n",
    )
    .map_err(|e| io_at(&json_path, e))?;
    let csv_path = dir.join("report.csv");
    flat.save(&csv_path)?;

    let mut pairs: Vec<(&'static str, Cell)> = vec![
        ("command", "report".into()),
        ("artifact_count", names.len().into()),
        ("report_json", json_path.display().to_string().into()),
        ("report_csv", csv_path.display().to_string().into()),
    ];
    if let Some(Value::Object(v)) = report["artifacts"].get("verify") {
        if let Some(Value::Bool(pass)) = v.get("pass") {
            pairs.push(("verify_pass", (*pass).into()));
        }
    }
    if let Some(Value::Object(c)) = report["artifacts"].get("classify") {
        if let Some(acc) = c.get("accuracy").and_then(Value::as_f64) {
            pairs.push(("classify_accuracy", acc.into()));
        }
    }
    Ok(pairs)
}

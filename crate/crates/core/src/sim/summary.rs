use std::fmt::Write;

use serde_json::{json, Value};

use super::cohort::SimulationReport;

/// Human-readable report. Paths are listed by decreasing count, then by path.
pub fn gain_summary_text(r: &SimulationReport) -> String {
    if r.n_players == 0 {
        return "no players simulated\n".to_string();
    }
    let mut out = String::new();
    let _ = writeln!(out, "players: {} (seed {})", r.n_players, r.seed);
    if let Some(g) = &r.pedagogical_gain {
        let _ = writeln!(out, "pedagogical gain: mean {} stddev {}", g.mean, g.stddev);
    }
    let _ = writeln!(out, "truncated: {}", r.truncation_count);
    if !r.attainment.is_empty() {
        let _ = writeln!(out, "attainment:");
        for (id, a) in &r.attainment {
            let _ = writeln!(
                out,
                "  {id}: {}/{} reached threshold {} (rate {})",
                a.attained, r.n_players, a.threshold, a.rate
            );
        }
    }
    let mut paths: Vec<(&String, &usize)> = r.path_frequency.iter().collect();
    paths.sort_by(|a, b| b.1.cmp(a.1).then_with(|| a.0.cmp(b.0)));
    let _ = writeln!(out, "paths:");
    for (path, count) in paths {
        let _ = writeln!(out, "  {count:>8}  {path}");
    }
    out
}

/// One JSON object per line: a `summary` record, one `attainment` record per
/// objective, then one `path` record per distinct path, in key order.
pub fn gain_summary_records(r: &SimulationReport) -> Vec<Value> {
    let mut out = vec![json!({
        "record": "summary",
        "n_players": r.n_players,
        "pedagogical_gain": r.pedagogical_gain,
        "truncation_count": r.truncation_count,
        "seed": r.seed,
    })];
    for (id, a) in &r.attainment {
        out.push(json!({
            "record": "attainment",
            "objective": id,
            "threshold": a.threshold,
            "attained": a.attained,
            "rate": a.rate,
        }));
    }
    for (path, count) in &r.path_frequency {
        out.push(json!({"record": "path", "path": path, "count": count}));
    }
    out
}

pub fn gain_summary_json_lines(r: &SimulationReport) -> String {
    gain_summary_records(r)
        .iter()
        .map(|v| format!("{v}\n"))
        .collect()
}

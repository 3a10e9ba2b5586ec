//! Text and JSON rendering.

use clap::ValueEnum;
use ltebounds::{BoundsResult, Interval, SolveStatus, Witness};
use serde_json::{json, Value};

pub const SCHEMA: &str = "lte-bounds/1";

pub const LOCAL_SEARCH_CAVEAT: &str = "bounds are local-search certified only";

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
pub enum Format {
    #[default]
    Text,
    Json,
}

/// Rounds to 9 decimals and drops trailing zeros beyond the second.
pub fn fmt_num(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    let mut s = format!("{x:.9}");
    while s.ends_with('0') && s.len() - s.find('.').expect("fixed point") > 3 {
        s.pop();
    }
    if s == "-0.00" {
        "0.00".into()
    } else {
        s
    }
}

pub fn fmt_interval(i: &Interval) -> String {
    if i.is_empty() {
        "empty".into()
    } else {
        format!("[{}, {}]", fmt_num(i.lo), fmt_num(i.hi))
    }
}

fn fmt_vec(v: &[f64]) -> String {
    format!("({})", v.iter().map(|x| fmt_num(*x)).collect::<Vec<_>>().join(", "))
}

pub fn status_label(status: SolveStatus) -> &'static str {
    match status {
        SolveStatus::Exact => "exact",
        SolveStatus::LocalSearch => "local-search",
        SolveStatus::Infeasible => "infeasible",
    }
}

pub fn relaxation_caveat(delta: f64) -> String {
    format!(
        "sample constraint set was empty; bounds use the minimal uniform relaxation delta* = {delta:.6} \
         (a surrogate for criterion-based estimation)"
    )
}

pub fn caveats(r: &BoundsResult) -> Vec<String> {
    let mut out = Vec::new();
    if r.status == SolveStatus::LocalSearch {
        out.push(LOCAL_SEARCH_CAVEAT.to_string());
    }
    if let Some(delta) = r.relaxed {
        out.push(relaxation_caveat(delta));
    }
    if r.status == SolveStatus::Infeasible {
        out.push(format!("identified set is empty: {}", r.message.as_deref().unwrap_or("no feasible point")));
    }
    out
}

fn witness_line(label: &str, w: &Witness) -> String {
    format!(
        "{label} attained at gamma_0 = {}, gamma_1 = {}, m_0 = {}, m_1 = {}",
        fmt_vec(&w.gamma.gamma.control),
        fmt_vec(&w.gamma.gamma.treated),
        fmt_vec(&w.link.m.control),
        fmt_vec(&w.link.m.treated)
    )
}

pub fn scope_label(scope: ltebounds::Scope) -> &'static str {
    match scope {
        ltebounds::Scope::Combined => "combined",
        ltebounds::Scope::ObservationalOnly => "observational-only",
    }
}

/// Interval on the original outcome scale, status, assumption, scope and witnesses.
pub fn bounds_text(r: &BoundsResult) -> String {
    let mut lines = vec![
        format!("bounds: {}", fmt_interval(&r.interval)),
        format!("status: {}", status_label(r.status)),
        format!("assumption: {}", r.assumption),
        format!("scope: {}", scope_label(r.scope)),
    ];
    if r.scale != (0.0, 1.0) {
        lines.push(format!(
            "outcome scale: [{}, {}] (normalized bounds {})",
            fmt_num(r.scale.0),
            fmt_num(r.scale.1),
            fmt_interval(&r.normalized)
        ));
    }
    if let Some(w) = &r.lower_witness {
        lines.push(witness_line("lower bound", w));
    }
    if let Some(w) = &r.upper_witness {
        lines.push(witness_line("upper bound", w));
    }
    lines.join("\n")
}

pub fn interval_json(i: &Interval) -> Value {
    if i.is_empty() {
        Value::Null
    } else {
        json!({ "lo": i.lo, "hi": i.hi })
    }
}

pub fn bounds_json(r: &BoundsResult) -> Value {
    json!({
        "interval": interval_json(&r.interval),
        "normalized": interval_json(&r.normalized),
        "status": status_label(r.status),
        "assumption": r.assumption,
        "scope": scope_label(r.scope),
        "scale": [r.scale.0, r.scale.1],
        "relaxed": r.relaxed,
        "lower_witness": r.lower_witness,
        "upper_witness": r.upper_witness,
        "message": r.message,
    })
}

/// Assembles the final document.
pub fn render(format: Format, command: &str, text: &str, body: Value, caveats: &[String], notes: &[String]) -> String {
    match format {
        Format::Text => {
            let mut out = text.to_string();
            for n in notes {
                out.push_str(&format!("\nnote: {n}"));
            }
            for c in caveats {
                out.push_str(&format!("\ncaveat: {c}"));
            }
            out.push('\n');
            out
        }
        Format::Json => {
            let doc = json!({
                "schema": SCHEMA,
                "command": command,
                "result": body,
                "caveats": caveats,
                "notes": notes,
            });
            let mut s = serde_json::to_string_pretty(&doc).expect("report serializes");
            s.push('\n');
            s
        }
    }
}

//! Deterministic serialization of reports: versioned JSON envelopes, CSV
//! tables with fixed column order, markdown checklists and SVG polylines.

use std::fmt::Write as _;

use serde::Serialize;

use crate::domains::PlanarCurve;
use crate::measures::InequalityReport;
use crate::variation::VariationReport;
use crate::verifier::{ChainReport, DecayReport};

pub const SCHEMA_VERSION: u32 = 1;

/// Top-level JSON document.
#[derive(Debug, Clone, Serialize)]
pub struct Envelope<'a, T: Serialize> {
    pub schema_version: u32,
    pub kind: &'a str,
    pub pass: bool,
    pub payload: T,
}

/// Pretty JSON with a trailing newline. Floats use the shortest
/// representation that round-trips.
pub fn to_json<T: Serialize>(kind: &str, pass: bool, payload: &T) -> String {
    let env = Envelope {
        schema_version: SCHEMA_VERSION,
        kind,
        pass,
        payload,
    };
    let mut s = serde_json::to_string_pretty(&env).expect("report serializes");
    s.push('\n');
    s
}

/// 17 significant digits in scientific notation.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// One row of the inequality table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InequalityRow {
    pub n: usize,
    pub p: f64,
    pub family: String,
    pub params_hash: String,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
    pub slack: f64,
    pub quad_error: f64,
}

impl InequalityRow {
    pub fn new(family: &str, params_hash: &str, r: &InequalityReport) -> Self {
        InequalityRow {
            n: r.n,
            p: r.p,
            family: family.into(),
            params_hash: params_hash.into(),
            lhs: r.lhs,
            rhs: r.rhs,
            ratio: r.ratio,
            slack: r.slack,
            quad_error: r.quad_error,
        }
    }
}

pub const INEQUALITY_HEADER: &str = "n,p,family,params_hash,lhs,rhs,ratio,slack,quad_error";

pub fn inequality_csv(rows: &[InequalityRow]) -> String {
    let mut out = String::from(INEQUALITY_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.n,
            fmt_float(r.p),
            r.family,
            r.params_hash,
            fmt_float(r.lhs),
            fmt_float(r.rhs),
            fmt_float(r.ratio),
            fmt_float(r.slack),
            fmt_float(r.quad_error)
        );
    }
    out
}

pub const VARIATION_HEADER: &str =
    "n,p_or_density,r,first,second_numeric,second_analytic,classification";

pub fn variation_csv(rows: &[VariationReport]) -> String {
    let mut out = String::from(VARIATION_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.n,
            r.p_or_density,
            fmt_float(r.r),
            fmt_float(r.first),
            fmt_float(r.second_numeric),
            fmt_float(r.second_analytic),
            r.classification.as_str()
        );
    }
    out
}

pub const DECAY_HEADER: &str =
    "eps,volume,perimeter,ratio,hemisphere,lateral_near,lateral_far,cut_ball";

pub fn decay_csv(rep: &DecayReport) -> String {
    let mut out = String::from(DECAY_HEADER);
    out.push('\n');
    for r in &rep.rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            fmt_float(r.eps),
            fmt_float(r.volume),
            fmt_float(r.perimeter),
            fmt_float(r.ratio),
            fmt_float(r.pieces.perimeter_hemisphere),
            fmt_float(r.pieces.perimeter_lateral_near),
            fmt_float(r.pieces.perimeter_lateral_far),
            fmt_float(r.pieces.perimeter_cut_ball)
        );
    }
    out
}

pub const CHAIN_HEADER: &str = "chain,step,kind,lhs,rhs,slack,quad_error,pass";

pub fn chain_csv(reports: &[ChainReport]) -> String {
    let mut out = String::from(CHAIN_HEADER);
    out.push('\n');
    for rep in reports {
        for s in &rep.steps {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                rep.chain,
                s.name,
                serde_json::to_value(s.kind)
                    .expect("kind serializes")
                    .as_str()
                    .unwrap_or(""),
                fmt_float(s.lhs),
                fmt_float(s.rhs),
                fmt_float(s.slack),
                fmt_float(s.quad_error),
                s.pass
            );
        }
    }
    out
}

pub const CURVE_HEADER: &str = "t,x,y";

pub fn curve_csv(c: &PlanarCurve) -> String {
    let mut out = String::from(CURVE_HEADER);
    out.push('\n');
    for s in c.samples() {
        let _ = writeln!(
            out,
            "{},{},{}",
            fmt_float(s.t),
            fmt_float(s.pos[0]),
            fmt_float(s.pos[1])
        );
    }
    out
}

/// Markdown checklist of a chain report.
pub fn chain_markdown(rep: &ChainReport) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "## {} chain (n = {}, density {})",
        rep.chain, rep.n, rep.density
    );
    let _ = writeln!(out);
    let _ = writeln!(
        out,
        "Domain `{}`. Overall: **{}**.",
        rep.domain_id,
        verdict(rep.overall)
    );
    let _ = writeln!(out);
    let _ = writeln!(out, "| | step | lhs | rhs | slack | quad error |");
    let _ = writeln!(out, "|---|---|---|---|---|---|");
    for s in &rep.steps {
        let _ = writeln!(
            out,
            "| [{}] | {} | {:.10e} | {:.10e} | {:.3e} | {:.3e} |",
            if s.pass { "x" } else { " " },
            s.name,
            s.lhs,
            s.rhs,
            s.slack,
            s.quad_error
        );
    }
    out
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "pass"
    } else {
        "fail"
    }
}

/// Markdown table of inequality rows.
pub fn inequality_markdown(rows: &[InequalityRow]) -> String {
    let mut out = String::from(
        "| n | p | family | ratio | slack | quad error |\n|---|---|---|---|---|---|\n",
    );
    for r in rows {
        let _ = writeln!(
            out,
            "| {} | {} | {} | {:.12} | {:.3e} | {:.3e} |",
            r.n, r.p, r.family, r.ratio, r.slack, r.quad_error
        );
    }
    out
}

pub fn variation_markdown(rows: &[VariationReport]) -> String {
    let mut out =
        String::from("| n | p | r | first | second (numeric) | second (closed form) | class |\n|---|---|---|---|---|---|---|\n");
    for r in rows {
        let _ = writeln!(
            out,
            "| {} | {} | {} | {:.3e} | {:.8e} | {:.8e} | {} |",
            r.n,
            r.p_or_density,
            r.r,
            r.first,
            r.second_numeric,
            r.second_analytic,
            r.classification.as_str()
        );
    }
    out
}

pub fn decay_markdown(rep: &DecayReport) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "## Decay study (n = {}, p = {}, R = {})",
        rep.n, rep.p, rep.radius
    );
    let _ = writeln!(out);
    let _ = writeln!(
        out,
        "| eps | volume | perimeter | ratio |\n|---|---|---|---|"
    );
    for r in &rep.rows {
        let _ = writeln!(
            out,
            "| {} | {:.10} | {:.6e} | {:.6e} |",
            r.eps, r.volume, r.perimeter, r.ratio
        );
    }
    let _ = writeln!(out);
    for c in &rep.checks {
        let _ = writeln!(
            out,
            "- [{}] {}: {}",
            if c.pass { "x" } else { " " },
            c.name,
            c.detail
        );
    }
    out
}

/// Polyline plots in a fixed 512 x 512 viewBox; each series is scaled into a
/// common bounding box with 5% margin.
pub fn svg_polylines(series: &[Vec<[f64; 2]>]) -> String {
    const SIZE: f64 = 512.0;
    let pts = series.iter().flatten();
    let (mut x0, mut x1, mut y0, mut y1) = (
        f64::INFINITY,
        f64::NEG_INFINITY,
        f64::INFINITY,
        f64::NEG_INFINITY,
    );
    for p in pts {
        x0 = x0.min(p[0]);
        x1 = x1.max(p[0]);
        y0 = y0.min(p[1]);
        y1 = y1.max(p[1]);
    }
    if !x0.is_finite() {
        (x0, x1, y0, y1) = (-1.0, 1.0, -1.0, 1.0);
    }
    let span = (x1 - x0).max(y1 - y0).max(1e-300);
    let scale = 0.9 * SIZE / span;
    let (cx, cy) = (0.5 * (x0 + x1), 0.5 * (y0 + y1));
    let mut out = String::new();
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {SIZE} {SIZE}\" width=\"{SIZE}\" height=\"{SIZE}\">"
    );
    for s in series {
        let coords: Vec<String> = s
            .iter()
            .map(|p| {
                format!(
                    "{:.3},{:.3}",
                    0.5 * SIZE + scale * (p[0] - cx),
                    0.5 * SIZE - scale * (p[1] - cy)
                )
            })
            .collect();
        let _ = writeln!(
            out,
            "<polyline fill=\"none\" stroke=\"black\" stroke-width=\"1\" points=\"{}\"/>",
            coords.join(" ")
        );
    }
    out.push_str("</svg>\n");
    out
}

pub fn curve_svg(curves: &[&PlanarCurve]) -> String {
    let series: Vec<Vec<[f64; 2]>> = curves
        .iter()
        .map(|c| c.samples().iter().map(|s| s.pos).collect())
        .collect();
    svg_polylines(&series)
}

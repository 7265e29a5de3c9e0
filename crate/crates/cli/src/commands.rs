use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, ensure, Context, Result};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use serde::Serialize;

use isolab_core::domains::{make_starshaped, DomainSpec, Family, IntervalUnion};
use isolab_core::elcurve::{
    check_symmetry, circle_curvature, default_step, integrate_el, shoot_closed, ELState, ShotRoot,
    StopReason, SymmetryReport, Trajectory,
};
use isolab_core::exec::map_slice;
use isolab_core::measures::{starshaped_report, Power, QuadSettings};
use isolab_core::report::{
    chain_csv, chain_markdown, curve_csv, curve_svg, decay_csv, decay_markdown, fmt_float,
    inequality_csv, inequality_markdown, svg_polylines, to_json, variation_csv, variation_markdown,
    InequalityRow,
};
use isolab_core::variation::second_variation_translation;
use isolab_core::verifier::{
    counterexample_decay, interpolation_chain, onedim_check, onedim_check_exact, theorem9_chain,
    OneDimReport,
};
use isolab_core::ExecMode;

use crate::{
    BallCheckArgs, ChainArgs, ChainKind, Command, CounterexampleArgs, Format, OdeArgs, OdeMode,
    OnedimArgs, SweepArgs, VariationArgs,
};

pub struct Outcome {
    pub pass: bool,
    pub path: PathBuf,
    pub summary: String,
}

pub fn run(cmd: &Command, format: Format, out: &Path) -> Result<Outcome> {
    match cmd {
        Command::BallCheck(a) => ball_check(a, format, out),
        Command::Sweep(a) => sweep(a, format, out),
        Command::Counterexample(a) => counterexample(a, format, out),
        Command::Variation(a) => variation(a, format, out),
        Command::Ode(a) => ode(a, format, out),
        Command::Chain(a) => chain(a, format, out),
        Command::Onedim(a) => onedim(a, format, out),
        Command::Run { .. } => bail!("nested run"),
    }
}

fn write_report(out: &Path, stem: &str, format: Format, body: &str) -> Result<PathBuf> {
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let path = out.join(format!("{stem}.{}", format.ext()));
    std::fs::write(&path, body).with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}

fn unsupported(cmd: &str, format: Format) -> anyhow::Error {
    anyhow!("format {} is not available for {cmd}", format.ext())
}

/// Inclusive grid from `[start, stop, count]`.
fn p_grid(range: &[f64]) -> Result<Vec<f64>> {
    ensure!(range.len() == 3, "p range needs start, stop and count");
    let (start, stop, count) = (range[0], range[1], range[2]);
    ensure!(
        start.is_finite() && stop.is_finite(),
        "p range bounds must be finite"
    );
    ensure!(
        count >= 1.0 && count.fract() == 0.0 && count <= 1e6,
        "p range count must be a positive integer, got {count}"
    );
    let m = count as usize;
    if m == 1 {
        return Ok(vec![start]);
    }
    Ok((0..m)
        .map(|i| start + (stop - start) * i as f64 / (m - 1) as f64)
        .collect())
}

fn check_dims(ns: &[usize]) -> Result<()> {
    ensure!(!ns.is_empty(), "at least one dimension is required");
    for &n in ns {
        ensure!(n >= 2, "dimension must be at least 2, got {n}");
    }
    Ok(())
}

fn settings(n: usize, order: Option<usize>) -> QuadSettings {
    let q = QuadSettings::for_dim(n);
    match order {
        Some(o) => q.with_order(o),
        None => q,
    }
}

fn ball_check(a: &BallCheckArgs, format: Format, out: &Path) -> Result<Outcome> {
    check_dims(&a.n)?;
    let ps = p_grid(&a.p_range)?;
    let rs = if a.r.is_empty() {
        vec![1.0]
    } else {
        a.r.clone()
    };
    let mut rows = Vec::new();
    for &n in &a.n {
        for &r in &rs {
            let dom = make_starshaped(DomainSpec::new(n, Family::Constant { r0: r }))?;
            let hash = dom.spec().params_hash();
            for &p in &ps {
                let rep = starshaped_report(&dom, p, settings(n, a.order))?;
                rows.push(InequalityRow::new(dom.family_name(), &hash, &rep));
            }
        }
    }
    let worst = rows
        .iter()
        .map(|r| (r.ratio - 1.0).abs())
        .fold(0.0f64, f64::max);
    let pass = worst <= 1e-8;
    let body = match format {
        Format::Json => to_json("ball-check", pass, &rows),
        Format::Csv => inequality_csv(&rows),
        Format::Md => inequality_markdown(&rows),
        Format::Svg => return Err(unsupported("ball-check", format)),
    };
    Ok(Outcome {
        pass,
        path: write_report(out, "ball-check", format, &body)?,
        summary: format!("{} rows, max |ratio - 1| = {worst:.3e}", rows.len()),
    })
}

/// Ranges of `p` where the inequality is known to hold for every domain
/// containing the origin.
fn proven_regime(n: usize, p: f64) -> bool {
    n == 2 || p >= 0.0 || p <= 1.0 - n as f64
}

fn family_from(
    name: &str,
    r0: Option<f64>,
    seed: Option<u64>,
    degree: Option<u32>,
    amplitude: Option<f64>,
    delta: Option<f64>,
    axis: Option<usize>,
) -> Result<Family> {
    let r0 = r0.unwrap_or(1.0);
    Ok(match name {
        "constant" => Family::Constant { r0 },
        "perturbed" => Family::Perturbed {
            r0,
            delta: delta.unwrap_or(0.2),
            degree: degree.unwrap_or(2),
            axis: axis.unwrap_or(1),
        },
        "random-trig" => Family::RandomTrig {
            r0,
            seed: seed.unwrap_or(7),
            degree: degree.unwrap_or(2),
            amplitude: amplitude.unwrap_or(0.3),
        },
        other => bail!("unknown family {other:?}; expected constant, perturbed or random-trig"),
    })
}

fn sweep(a: &SweepArgs, format: Format, out: &Path) -> Result<Outcome> {
    check_dims(&a.n)?;
    let ps = p_grid(&a.p_range)?;
    let families: Vec<String> = if a.families.is_empty() {
        vec!["constant".into(), "perturbed".into(), "random-trig".into()]
    } else {
        a.families.clone()
    };
    let mut jobs = Vec::new();
    for &n in &a.n {
        for fam in &families {
            let shape = family_from(fam, a.r0, a.seed, a.degree, a.amplitude, a.delta, None)?;
            let dom = make_starshaped(DomainSpec::new(n, shape))?;
            for &p in &ps {
                jobs.push((dom.clone(), p));
            }
        }
    }
    let results = map_slice(&jobs, ExecMode::Auto, |(dom, p)| {
        starshaped_report(dom, *p, settings(dom.dim(), a.order))
            .map(|rep| InequalityRow::new(dom.family_name(), &dom.spec().params_hash(), &rep))
    });
    let rows = results.into_iter().collect::<Result<Vec<_>, _>>()?;
    let mut violations = 0;
    for row in &rows {
        let holds = row.slack >= -10.0 * row.quad_error;
        if proven_regime(row.n, row.p) && !holds {
            violations += 1;
        }
    }
    let pass = violations == 0;
    let body = match format {
        Format::Json => to_json("sweep", pass, &rows),
        Format::Csv => inequality_csv(&rows),
        Format::Md => inequality_markdown(&rows),
        Format::Svg => return Err(unsupported("sweep", format)),
    };
    Ok(Outcome {
        pass,
        path: write_report(out, "sweep", format, &body)?,
        summary: format!(
            "{} rows, {violations} violations in proven ranges",
            rows.len()
        ),
    })
}

fn counterexample(a: &CounterexampleArgs, format: Format, out: &Path) -> Result<Outcome> {
    let rep = counterexample_decay(a.n, a.p, a.radius.unwrap_or(1.0), &a.eps)?;
    let body = match format {
        Format::Json => to_json("counterexample", rep.pass, &rep),
        Format::Csv => decay_csv(&rep),
        Format::Md => decay_markdown(&rep),
        Format::Svg => {
            let line: Vec<[f64; 2]> = rep
                .rows
                .iter()
                .map(|r| [r.eps.ln(), r.perimeter.ln()])
                .collect();
            svg_polylines(&[line])
        }
    };
    let failing: Vec<&str> = rep
        .checks
        .iter()
        .filter(|c| !c.pass)
        .map(|c| c.name.as_str())
        .collect();
    Ok(Outcome {
        pass: rep.pass,
        path: write_report(out, "counterexample", format, &body)?,
        summary: format!(
            "{} eps values, perimeter slope {:.4}, failing checks {failing:?}",
            rep.rows.len(),
            rep.perimeter_slope
        ),
    })
}

fn variation(a: &VariationArgs, format: Format, out: &Path) -> Result<Outcome> {
    check_dims(&a.n)?;
    let mut ps = a.p.clone();
    if !a.p_range.is_empty() {
        ps.extend(p_grid(&a.p_range)?);
    }
    ensure!(!ps.is_empty(), "give --p or --p-range");
    let rs = if a.r.is_empty() {
        vec![1.0]
    } else {
        a.r.clone()
    };
    let mut jobs = Vec::new();
    for &n in &a.n {
        for &p in &ps {
            for &r in &rs {
                ensure!(r > 0.0 && r.is_finite(), "radius must be positive, got {r}");
                jobs.push((n, p, r));
            }
        }
    }
    let rows = jobs
        .iter()
        .map(|&(n, p, r)| second_variation_translation(n, p, r, settings(n, a.order)))
        .collect::<Result<Vec<_>, _>>()?;
    let bad = rows
        .iter()
        .filter(|r| !(r.first_vanishes() && r.second_agrees()))
        .count();
    let pass = bad == 0;
    let body = match format {
        Format::Json => to_json("variation", pass, &rows),
        Format::Csv => variation_csv(&rows),
        Format::Md => variation_markdown(&rows),
        Format::Svg => return Err(unsupported("variation", format)),
    };
    let classes: Vec<&str> = rows.iter().map(|r| r.classification.as_str()).collect();
    Ok(Outcome {
        pass,
        path: write_report(out, "variation", format, &body)?,
        summary: format!(
            "{} rows, classification {classes:?}, {bad} cross-check failures",
            rows.len()
        ),
    })
}

#[derive(Serialize)]
struct IntegrateReport<'a> {
    trajectory: &'a Trajectory,
    symmetry: SymmetryReport,
}

#[derive(Serialize)]
struct ShootReport {
    p: f64,
    d: f64,
    k_grid: Vec<f64>,
    roots: Vec<ShotRoot>,
}

fn ode(a: &OdeArgs, format: Format, out: &Path) -> Result<Outcome> {
    ensure!(
        a.d > 0.0 && a.d.is_finite(),
        "start radius d must be positive, got {}",
        a.d
    );
    let k0 = circle_curvature(a.p, a.d);
    match a.mode {
        OdeMode::Integrate => {
            let k = a.k.unwrap_or(k0);
            let start = ELState::on_axis(a.d, a.p, k)?;
            let t_end = a.t_end.unwrap_or(2.0 * std::f64::consts::PI * a.d);
            let tr = integrate_el(&start, t_end, a.step.unwrap_or(default_step(a.d)))?;
            let sym = check_symmetry(&tr.curve)?;
            let pass = tr.stop == StopReason::Completed
                && tr.k_drift < 1e-7
                && (!sym.applicable || sym.defect < 1e-7);
            let body = match format {
                Format::Json => to_json(
                    "ode-integrate",
                    pass,
                    &IntegrateReport {
                        trajectory: &tr,
                        symmetry: sym.clone(),
                    },
                ),
                Format::Csv => curve_csv(&tr.curve),
                Format::Svg => curve_svg(&[&tr.curve]),
                Format::Md => {
                    let mut s = String::from("| quantity | value |\n|---|---|\n");
                    let _ = writeln!(s, "| k | {} |", fmt_float(tr.k));
                    let _ = writeln!(s, "| stop | {:?} |", tr.stop);
                    let _ = writeln!(s, "| closure error | {:.3e} |", tr.closure_error());
                    let _ = writeln!(s, "| curvature drift | {:.3e} |", tr.k_drift);
                    let _ = writeln!(s, "| symmetry defect | {:.3e} |", sym.defect);
                    s
                }
            };
            Ok(Outcome {
                pass,
                path: write_report(out, "ode-integrate", format, &body)?,
                summary: format!(
                    "stop {:?}, closure {:.3e}, curvature drift {:.3e}, symmetry defect {:.3e}",
                    tr.stop,
                    tr.closure_error(),
                    tr.k_drift,
                    sym.defect
                ),
            })
        }
        OdeMode::Shoot => {
            let grid = if a.k_range.is_empty() {
                k_grid(0.5 * k0.min(1.5 * k0), 1.5 * k0.max(0.5 * k0), 41)?
            } else {
                ensure!(a.k_range.len() == 3, "k range needs lo, hi and count");
                let c = a.k_range[2];
                ensure!(
                    c >= 2.0 && c.fract() == 0.0,
                    "k range count must be an integer >= 2"
                );
                k_grid(a.k_range[0], a.k_range[1], c as usize)?
            };
            let roots = shoot_closed(a.p, a.d, &grid, a.tol.unwrap_or(1e-10))?;
            let pass = !roots.is_empty();
            let body = match format {
                Format::Json => to_json(
                    "ode-shoot",
                    pass,
                    &ShootReport {
                        p: a.p,
                        d: a.d,
                        k_grid: grid.clone(),
                        roots: roots.clone(),
                    },
                ),
                Format::Csv => {
                    let mut s = String::from("k,miss,closure_error\n");
                    for r in &roots {
                        let _ = writeln!(
                            s,
                            "{},{},{}",
                            fmt_float(r.k),
                            fmt_float(r.miss),
                            r.closure_error.map(fmt_float).unwrap_or_default()
                        );
                    }
                    s
                }
                Format::Svg => {
                    let mut curves = Vec::new();
                    for r in &roots {
                        let start = ELState::on_axis(a.d, a.p, r.k)?;
                        let tr = integrate_el(
                            &start,
                            2.0 * std::f64::consts::PI * a.d,
                            default_step(a.d),
                        )?;
                        curves.push(tr.curve);
                    }
                    let refs: Vec<_> = curves.iter().collect();
                    curve_svg(&refs)
                }
                Format::Md => {
                    let mut s = String::from("| k | miss | closure error |\n|---|---|---|\n");
                    for r in &roots {
                        let _ = writeln!(
                            s,
                            "| {} | {:.3e} | {:?} |",
                            fmt_float(r.k),
                            r.miss,
                            r.closure_error
                        );
                    }
                    s
                }
            };
            Ok(Outcome {
                pass,
                path: write_report(out, "ode-shoot", format, &body)?,
                summary: format!("{} closed orbits found", roots.len()),
            })
        }
    }
}

fn k_grid(lo: f64, hi: f64, count: usize) -> Result<Vec<f64>> {
    ensure!(
        lo.is_finite() && hi.is_finite() && lo < hi,
        "k range must satisfy lo < hi"
    );
    Ok((0..count)
        .map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64)
        .collect())
}

fn chain(a: &ChainArgs, format: Format, out: &Path) -> Result<Outcome> {
    let spec = match &a.domain {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))?;
            let spec: DomainSpec = serde_json::from_str(&text)
                .with_context(|| format!("parsing domain {}", path.display()))?;
            if let Some(n) = a.n {
                ensure!(
                    n == spec.n,
                    "--n {n} disagrees with the domain file (n = {})",
                    spec.n
                );
            }
            spec
        }
        None => {
            let n = a.n.ok_or_else(|| anyhow!("give --n or --domain"))?;
            let fam = a.family.as_deref().unwrap_or("random-trig");
            DomainSpec::new(
                n,
                family_from(fam, a.r0, a.seed, a.degree, a.amplitude, a.delta, a.axis)?,
            )
        }
    };
    let n = spec.n;
    let dom = make_starshaped(spec)?;
    let q = settings(n, a.order);
    let rep = match a.kind {
        ChainKind::Theorem9 => theorem9_chain(&dom, &Power::new(a.p), q)?,
        ChainKind::Interpolation => interpolation_chain(&dom, a.p, q)?,
    };
    let body = match format {
        Format::Json => to_json("chain", rep.overall, &rep),
        Format::Csv => chain_csv(std::slice::from_ref(&rep)),
        Format::Md => chain_markdown(&rep),
        Format::Svg => return Err(unsupported("chain", format)),
    };
    let failing: Vec<&str> = rep
        .steps
        .iter()
        .filter(|s| !s.pass)
        .map(|s| s.name.as_str())
        .collect();
    Ok(Outcome {
        pass: rep.overall,
        path: write_report(out, &format!("chain-{}", rep.chain), format, &body)?,
        summary: format!("{} steps, failing {failing:?}", rep.steps.len()),
    })
}

/// Exact value of a decimal (`-1.25`) or fraction (`3/4`) literal.
fn parse_rational(s: &str) -> Option<BigRational> {
    let s = s.trim();
    if let Some((num, den)) = s.split_once('/') {
        let num: BigInt = num.trim().parse().ok()?;
        let den: BigInt = den.trim().parse().ok()?;
        if den.is_zero() {
            return None;
        }
        return Some(BigRational::new(num, den));
    }
    let (neg, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s.strip_prefix('+').unwrap_or(s)),
    };
    let (int, frac) = body.split_once('.').unwrap_or((body, ""));
    if int.is_empty() && frac.is_empty() {
        return None;
    }
    if !int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let digits: BigInt = format!("{int}{frac}").parse().ok()?;
    let scale = num_traits::pow(BigInt::from(10), frac.len());
    let v = BigRational::new(digits, scale);
    Some(if neg { -v } else { v })
}

fn rational_to_f64(x: &BigRational) -> f64 {
    use num_traits::ToPrimitive;
    x.to_f64().unwrap_or(f64::NAN)
}

#[derive(Serialize)]
struct OnedimOutput {
    intervals: Vec<(f64, f64)>,
    report: OneDimReport,
    exact: Option<ExactOutput>,
}

#[derive(Serialize)]
struct ExactOutput {
    lhs: String,
    rhs: String,
    holds: bool,
    equality: bool,
}

fn onedim(a: &OnedimArgs, format: Format, out: &Path) -> Result<Outcome> {
    let mut exact_ivs = Vec::new();
    let mut float_ivs = Vec::new();
    for part in a.intervals.split(',') {
        let (lo, hi) = part
            .split_once(':')
            .ok_or_else(|| anyhow!("interval {part:?} is not of the form a:b"))?;
        let lo_r = parse_rational(lo);
        let hi_r = parse_rational(hi);
        let lo_f = match &lo_r {
            Some(r) => rational_to_f64(r),
            None => lo
                .trim()
                .parse()
                .with_context(|| format!("bad endpoint {lo:?}"))?,
        };
        let hi_f = match &hi_r {
            Some(r) => rational_to_f64(r),
            None => hi
                .trim()
                .parse()
                .with_context(|| format!("bad endpoint {hi:?}"))?,
        };
        float_ivs.push((lo_f, hi_f));
        exact_ivs.push(lo_r.zip(hi_r));
    }
    let u = IntervalUnion::new(float_ivs.clone())?;
    let rep = onedim_check(&u, a.p)?;
    let exact = if a.p.fract() == 0.0 && a.p.abs() <= 64.0 && exact_ivs.iter().all(Option::is_some)
    {
        let ivs: Vec<(BigRational, BigRational)> = exact_ivs.into_iter().flatten().collect();
        let ex = onedim_check_exact(&ivs, a.p as i32)?;
        Some(ExactOutput {
            lhs: ex.lhs.to_string(),
            rhs: ex.rhs.to_string(),
            holds: ex.holds,
            equality: ex.equality,
        })
    } else {
        None
    };
    let consistent = exact.as_ref().is_none_or(|e| e.holds == rep.holds);
    let pass = consistent && rep.expected.is_none_or(|e| e == rep.holds);
    let output = OnedimOutput {
        intervals: float_ivs,
        report: rep.clone(),
        exact,
    };
    let body = match format {
        Format::Json => to_json("onedim", pass, &output),
        Format::Csv => {
            let mut s = String::from("p,lhs,rhs,ratio,slack,holds,equality,expected\n");
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{}",
                fmt_float(rep.p),
                fmt_float(rep.lhs),
                fmt_float(rep.rhs),
                fmt_float(rep.ratio),
                fmt_float(rep.slack),
                rep.holds,
                rep.equality,
                rep.expected.map(|e| e.to_string()).unwrap_or_default()
            );
            s
        }
        Format::Md => {
            let mut s = String::from(
                "| p | lhs | rhs | holds | equality | expected |\n|---|---|---|---|---|---|\n",
            );
            let _ = writeln!(
                s,
                "| {} | {:.12e} | {:.12e} | {} | {} | {:?} |",
                rep.p, rep.lhs, rep.rhs, rep.holds, rep.equality, rep.expected
            );
            if let Some(e) = &output.exact {
                let _ = writeln!(
                    s,
                    "\nExact: lhs = {}, rhs = {}, holds = {}",
                    e.lhs, e.rhs, e.holds
                );
            }
            s
        }
        Format::Svg => return Err(unsupported("onedim", format)),
    };
    Ok(Outcome {
        pass,
        path: write_report(out, "onedim", format, &body)?,
        summary: format!(
            "lhs {:.6e}, rhs {:.6e}, holds {}, expected {:?}",
            rep.lhs, rep.rhs, rep.holds, rep.expected
        ),
    })
}

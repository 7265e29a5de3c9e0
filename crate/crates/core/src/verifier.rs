//! Executable checklists: the chain of inequalities behind the radial
//! density comparison with the ball of equal volume, the interpolation chain
//! for `0 < p < 1`, the one-dimensional trichotomy and the decay study of the
//! counterexample family.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Pow, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::domains::{counterexample_domain, IntervalUnion, StarshapedDomain};
use crate::error::{Error, Result};
use crate::exec::map_slice;
use crate::hypersphere::{
    ball_volume, covariant_gradient_sq, embed, metric, sphere_area, AngleVector,
};
use crate::measures::{
    counterexample_measures, inequality_report, volume_radial_route, volume_starshaped,
    weighted_perimeter_1d, weighted_perimeter_starshaped, PieceBreakdown, Power, QuadSettings,
    RadialDensity,
};
use crate::quadrature::{integrate_box_with, BoxRule, Quadrature};

/// How a chain step is judged.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StepKind {
    /// `lhs <= rhs` up to `10 quad_error`.
    Inequality,
    /// `lhs = rhs` up to `10 quad_error`.
    Identity,
    /// Exact relation between exponents or constants; no quadrature.
    Parameter,
}

/// Slack allowed in parameter steps, relative to `1 + |rhs|`.
const PARAMETER_TOL: f64 = 8.0 * f64::EPSILON;

/// One displayed relation of a proof.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainStep {
    pub name: String,
    pub kind: StepKind,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    pub quad_error: f64,
    pub pass: bool,
}

impl ChainStep {
    pub fn inequality(name: &str, lhs: f64, rhs: f64, quad_error: f64) -> Self {
        let slack = rhs - lhs;
        ChainStep {
            name: name.into(),
            kind: StepKind::Inequality,
            lhs,
            rhs,
            slack,
            quad_error,
            pass: slack >= -10.0 * quad_error,
        }
    }

    pub fn identity(name: &str, lhs: f64, rhs: f64, quad_error: f64) -> Self {
        let slack = rhs - lhs;
        ChainStep {
            name: name.into(),
            kind: StepKind::Identity,
            lhs,
            rhs,
            slack,
            quad_error,
            pass: slack.abs() <= 10.0 * quad_error,
        }
    }

    /// `lhs <= rhs` exactly, or `lhs = rhs` when `equal` is set, up to
    /// a few units of rounding.
    pub fn parameter(name: &str, lhs: f64, rhs: f64, equal: bool) -> Self {
        let slack = rhs - lhs;
        let tol = PARAMETER_TOL * (1.0 + rhs.abs());
        ChainStep {
            name: name.into(),
            kind: StepKind::Parameter,
            lhs,
            rhs,
            slack,
            quad_error: 0.0,
            pass: if equal {
                slack.abs() <= tol
            } else {
                slack >= -tol
            },
        }
    }

    /// `|slack| <= 1e-9 (1 + |rhs|)`.
    pub fn is_tight(&self) -> bool {
        self.slack.abs() <= 1e-9 * (1.0 + self.rhs.abs())
    }
}

/// Ordered steps of one proof chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainReport {
    pub chain: String,
    pub n: usize,
    pub density: String,
    pub domain_id: String,
    pub steps: Vec<ChainStep>,
    pub overall: bool,
}

impl ChainReport {
    fn new(
        chain: &str,
        n: usize,
        density: String,
        domain_id: String,
        steps: Vec<ChainStep>,
    ) -> Self {
        let overall = steps.iter().all(|s| s.pass);
        ChainReport {
            chain: chain.into(),
            n,
            density,
            domain_id,
            steps,
            overall,
        }
    }

    pub fn step(&self, name: &str) -> Option<&ChainStep> {
        self.steps.iter().find(|s| s.name == name)
    }

    /// Every non-parameter step satisfies [`ChainStep::is_tight`].
    pub fn all_tight(&self) -> bool {
        self.steps
            .iter()
            .filter(|s| s.kind != StepKind::Parameter)
            .all(ChainStep::is_tight)
    }
}

/// Points used by the convexity test of `h`.
pub const H_GRID_POINTS: usize = 256;

/// Checks that `h(t) = a(t^{1/n}) t^{(n-1)/n}` is non-negative, non-increasing
/// and convex on `t = rho^n` for 256 log-spaced `rho` in `[lo, hi]`.
pub fn check_h_hypothesis<D: RadialDensity + ?Sized>(
    a: &D,
    n: usize,
    lo: f64,
    hi: f64,
) -> Result<()> {
    if !(lo > 0.0 && hi > lo) {
        return Err(Error::domain(format!("radius range ({lo}, {hi}) invalid")));
    }
    let m = H_GRID_POINTS;
    let (llo, lhi) = (lo.ln(), hi.ln());
    let mut t = Vec::with_capacity(m);
    let mut h = Vec::with_capacity(m);
    for i in 0..m {
        let rho = (llo + (lhi - llo) * i as f64 / (m - 1) as f64).exp();
        let av = a.value(rho);
        if !(av >= 0.0) || !av.is_finite() {
            return Err(Error::precondition(format!(
                "density a({rho}) = {av} is not a finite non-negative value"
            )));
        }
        t.push(rho.powi(n as i32));
        h.push(av * rho.powi(n as i32 - 1));
    }
    let tol = 1e-12 * h.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    for i in 0..m - 1 {
        if h[i + 1] - h[i] > tol {
            return Err(Error::precondition(format!(
                "h increases between t = {} and t = {} ({} -> {})",
                t[i],
                t[i + 1],
                h[i],
                h[i + 1]
            )));
        }
    }
    for i in 1..m - 1 {
        let w = (t[i + 1] - t[i]) / (t[i + 1] - t[i - 1]);
        let chord = w * h[i - 1] + (1.0 - w) * h[i + 1];
        if h[i] > chord + tol {
            return Err(Error::precondition(format!(
                "h not convex at (t, h) = ({}, {}), ({}, {}), ({}, {})",
                t[i - 1],
                h[i - 1],
                t[i],
                h[i],
                t[i + 1],
                h[i + 1]
            )));
        }
    }
    Ok(())
}

fn box_integral<F>(f: F, n: usize, q: QuadSettings) -> Result<Quadrature>
where
    F: Fn(&AngleVector) -> f64 + Sync,
{
    integrate_box_with(
        |phi: &AngleVector| f(phi) * metric(phi).g,
        n,
        q.order,
        q.mode,
    )
}

/// Error of `f(x)` induced by an error `e` in `x`.
fn propagate<F: Fn(f64) -> f64>(f: F, x: f64, e: f64) -> f64 {
    if e == 0.0 {
        return 0.0;
    }
    let lo = (x - e).max(0.5 * x);
    ((f(x + e) - f(x)).abs()).max((f(x) - f(lo)).abs())
}

/// Radial-density comparison chain: volume bound, perimeter bound,
/// monotonicity of `h`, Jensen, the ball identity and the final comparison
/// `int_{dB_R} a <= int_{dOmega} a` with `|B_R| = |Omega|`.
pub fn theorem9_chain<D: RadialDensity + ?Sized>(
    dom: &StarshapedDomain,
    a: &D,
    q: QuadSettings,
) -> Result<ChainReport> {
    let n = dom.dim();
    let nf = n as f64;
    let (rmin, rmax) = dom.radius_bounds();
    check_h_hypothesis(a, n, 0.5 * rmin, 2.0 * rmax)?;
    let h = |t: f64| {
        let rho = t.powf(1.0 / nf);
        a.value(rho) * rho.powi(n as i32 - 1)
    };
    let omega = sphere_area(n);

    let vol = volume_radial_route(dom, q, 8)?;
    let rn = box_integral(|phi| dom.radius(phi).powi(n as i32), n, q)?;
    let ia = box_integral(
        |phi| {
            let r = dom.radius(phi);
            a.value(r) * r.powi(n as i32 - 1)
        },
        n,
        q,
    )?;
    let jh = box_integral(|phi| h(dom.radius(phi).powi(n as i32)), n, q)?;
    let per = weighted_perimeter_starshaped(dom, a, q)?;

    let x_vol = nf * vol.value / omega;
    let x_vol_err = nf * vol.error / omega;
    let x_mean = rn.value / omega;
    let x_mean_err = rn.error / omega;
    let big_r = x_vol.powf(1.0 / nf);
    let ball = box_integral(|_| a.value(big_r) * big_r.powi(n as i32 - 1), n, q)?;
    let ball_err = ball.error + propagate(|t| omega * h(t), x_vol, x_vol_err);

    let steps = vec![
        ChainStep::inequality(
            "volume_lower_bound",
            rn.value / nf,
            vol.value,
            rn.error / nf + vol.error,
        ),
        ChainStep::inequality(
            "perimeter_lower_bound",
            ia.value,
            per.value,
            ia.error + per.error,
        ),
        ChainStep::inequality(
            "h_monotone",
            h(x_vol),
            h(x_mean),
            propagate(h, x_vol, x_vol_err) + propagate(h, x_mean, x_mean_err),
        ),
        ChainStep::inequality(
            "jensen",
            h(x_mean),
            jh.value / omega,
            propagate(h, x_mean, x_mean_err) + jh.error / omega,
        ),
        ChainStep::identity(
            "h_rewrite",
            jh.value / omega,
            ia.value / omega,
            (jh.error + ia.error) / omega,
        ),
        ChainStep::identity(
            "ball_identity",
            h(x_vol),
            ball.value / omega,
            propagate(h, x_vol, x_vol_err) + ball.error / omega,
        ),
        ChainStep::inequality("final", ball.value, per.value, ball_err + per.error),
    ];
    Ok(ChainReport::new(
        "theorem9",
        n,
        a.label(),
        dom.spec().params_hash(),
        steps,
    ))
}

/// `(alpha^2 |grad R|^2 / R^2, |grad Z|^2 / Z^2)` at one point with
/// `Z = R^alpha`: the first through chart partials and the metric, the second
/// through the tangential projection of the Euclidean gradient of `Z`.
pub fn lemma13_sides(dom: &StarshapedDomain, alpha: f64, phi: &AngleVector) -> (f64, f64) {
    let r = dom.radius(phi);
    let chart = covariant_gradient_sq(&metric(phi), &dom.radius_grad_analytic(phi));
    let lhs = alpha * alpha * chart / (r * r);

    let x = embed(phi);
    let z = r.powf(alpha);
    let scale = alpha * r.powf(alpha - 1.0);
    let amb: Vec<f64> = dom.ambient_gradient(&x).iter().map(|g| scale * g).collect();
    let radial: f64 = amb.iter().zip(&x).map(|(g, xi)| g * xi).sum();
    let tangential_sq: f64 = amb
        .iter()
        .zip(&x)
        .map(|(g, xi)| (g - radial * xi).powi(2))
        .sum();
    (lhs, tangential_sq / (z * z))
}

/// Relative defects `|lhs - rhs| / max(|lhs|, |rhs|, 1e-300)` of
/// [`lemma13_sides`] at the nodes of a box rule of the given order.
pub fn lemma13_defects(dom: &StarshapedDomain, alpha: f64, order: usize) -> Result<Vec<f64>> {
    let rule = BoxRule::new(dom.dim(), order)?;
    Ok((0..rule.len())
        .map(|i| {
            let (phi, _) = rule.node(i);
            let (l, r) = lemma13_sides(dom, alpha, &phi);
            let scale = l.abs().max(r.abs());
            if scale == 0.0 {
                0.0
            } else {
                (l - r).abs() / scale
            }
        })
        .collect())
}

/// Interpolation chain for `n >= 3`, `0 < p < 1`, ending in
/// `n alpha_n^{(1-p)/n} |Omega|^{(p+n-1)/n} <= P_p(Omega)`.
pub fn interpolation_chain(dom: &StarshapedDomain, p: f64, q: QuadSettings) -> Result<ChainReport> {
    let n = dom.dim();
    if n < 3 {
        return Err(Error::domain(format!(
            "interpolation chain needs n >= 3 (the bound A >= 1 - p fails for n = 2), got n = {n}"
        )));
    }
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::domain(format!(
            "interpolation chain needs 0 < p < 1, got p = {p}"
        )));
    }
    let nf = n as f64;
    let alpha = (p + nf - 1.0) / (nf - 1.0);
    let big_a = ((nf - 1.0) / (p + nf - 1.0)).powi(2);
    let three = (2.0 / (p + 2.0)).powi(2);
    let hq = (p + nf - 1.0) / (p * nf);
    let hq_dual = (p + nf - 1.0) / ((nf - 1.0) * (1.0 - p));
    let n_alpha = nf * ball_volume(n);

    let defects = lemma13_defects(dom, alpha, 16.min(q.order))?;
    let max_defect = defects.iter().fold(0.0f64, |m, d| m.max(*d));

    let z_terms = |phi: &AngleVector| {
        let r = dom.radius(phi);
        let (_, zq) = lemma13_sides(dom, alpha, phi);
        (r.powf(alpha), zq)
    };
    let per = weighted_perimeter_starshaped(dom, &Power::new(p), q)?;
    let i_a = box_integral(
        |phi| {
            let (z, zq) = z_terms(phi);
            z.powi(n as i32 - 1) * (1.0 + big_a * zq).sqrt()
        },
        n,
        q,
    )?;
    let i_1p = box_integral(
        |phi| {
            let (z, zq) = z_terms(phi);
            z.powi(n as i32 - 1) * (1.0 + (1.0 - p) * zq).sqrt()
        },
        n,
        q,
    )?;
    let i_0 = box_integral(|phi| z_terms(phi).0.powi(n as i32 - 1), n, q)?;
    let i_full = box_integral(
        |phi| {
            let (z, zq) = z_terms(phi);
            z.powi(n as i32 - 1) * (1.0 + zq).sqrt()
        },
        n,
        q,
    )?;
    let i_zn = box_integral(|phi| z_terms(phi).0.powi(n as i32), n, q)?;
    let j1 = box_integral(|phi| dom.radius(phi).powf(p + nf - 1.0), n, q)?;
    let j2 = box_integral(
        |phi| dom.radius(phi).powf(nf * (p + nf - 1.0) / (nf - 1.0)),
        n,
        q,
    )?;
    let i_rn = box_integral(|phi| dom.radius(phi).powi(n as i32), n, q)?;
    let vol = volume_radial_route(dom, q, 8)?;

    let rel = |qd: &Quadrature| qd.error / qd.value.abs().max(f64::MIN_POSITIVE);

    let lc = i_0.value.powf(p) * i_full.value.powf(1.0 - p);
    let lc_err = lc * (p * rel(&i_0) + (1.0 - p) * rel(&i_full));
    let iso_e = (nf - 1.0) / nf;
    let iso = i_zn.value.powf(iso_e) * n_alpha.powf(1.0 / nf);
    let iso_err = iso * iso_e * rel(&i_zn);
    let e2 = (1.0 - p) * (nf - 1.0) / nf;
    let eq7 = j1.value.powf(p) * j2.value.powf(e2) * n_alpha.powf((1.0 - p) / nf);
    let eq7_err = eq7 * (p * rel(&j1) + e2 * rel(&j2));
    let holder = j1.value.powf(1.0 / hq) * j2.value.powf(1.0 / hq_dual);
    let holder_err = holder * (rel(&j1) / hq + rel(&j2) / hq_dual);
    let fe = (p + nf - 1.0) / nf;
    let vol_side = nf * ball_volume(n).powf((1.0 - p) / nf) * vol.value.powf(fe);
    let vol_side_err = vol_side * fe * rel(&vol);
    let rn_side = n_alpha.powf((1.0 - p) / nf) * i_rn.value.powf(fe);
    let rn_side_err = rn_side * fe * rel(&i_rn);

    let steps = vec![
        ChainStep::parameter("a_at_most_one", big_a, 1.0, false),
        ChainStep::parameter("a_at_least_n3_value", three, big_a, false),
        ChainStep::parameter("n3_value_at_least_one_minus_p", 1.0 - p, three, false),
        ChainStep::parameter("one_minus_p_nonnegative", 0.0, 1.0 - p, false),
        ChainStep::parameter("holder_exponent_above_one", 1.0, hq, false),
        ChainStep::parameter(
            "holder_exponents_conjugate",
            1.0 / hq + 1.0 / hq_dual,
            1.0,
            true,
        ),
        ChainStep::inequality("lemma13_pointwise", max_defect, 1e-10, 0.0),
        ChainStep::identity(
            "lemma13_rewrite",
            i_a.value,
            per.value,
            i_a.error + per.error,
        ),
        ChainStep::inequality(
            "drop_to_one_minus_p",
            i_1p.value,
            i_a.value,
            i_1p.error + i_a.error,
        ),
        ChainStep::inequality("log_concavity", lc, i_1p.value, lc_err + i_1p.error),
        ChainStep::inequality(
            "isoperimetric_omega_z",
            iso,
            i_full.value,
            iso_err + i_full.error,
        ),
        ChainStep::inequality("eq7_bound", eq7, per.value, eq7_err + per.error),
        ChainStep::inequality("holder", i_rn.value, holder, i_rn.error + holder_err),
        ChainStep::identity(
            "volume_identity",
            vol_side,
            rn_side,
            vol_side_err + rn_side_err,
        ),
        ChainStep::inequality("final", vol_side, per.value, vol_side_err + per.error),
    ];
    Ok(ChainReport::new(
        "interpolation",
        n,
        Power::new(p).label(),
        dom.spec().params_hash(),
        steps,
    ))
}

/// One-dimensional inequality `(|Omega| / 2)^p <= (1/2) sum |e|^p`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OneDimReport {
    pub p: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
    pub slack: f64,
    pub holds: bool,
    pub equality: bool,
    /// Outcome predicted by the trichotomy, when it makes a prediction.
    pub expected: Option<bool>,
}

/// Relative tolerance of the floating-point 1-D comparison.
const ONEDIM_TOL: f64 = 1e-12;

pub fn onedim_check(u: &IntervalUnion, p: f64) -> Result<OneDimReport> {
    if p < 0.0 && !u.contains_origin() {
        return Err(Error::precondition(format!(
            "p = {p} < 0 requires the origin strictly inside an interval"
        )));
    }
    let rhs = 0.5 * weighted_perimeter_1d(u, p)?;
    let len = u.length();
    let lhs = Power::new(p).value(0.5 * len);
    let scale = lhs.abs().max(rhs.abs());
    let slack = rhs - lhs;
    let single_from_zero = u.intervals().len() == 1 && u.intervals()[0].0 == 0.0;
    let expected = if p >= 1.0 || p <= 0.0 {
        Some(true)
    } else if single_from_zero {
        Some(false)
    } else {
        None
    };
    Ok(OneDimReport {
        p,
        lhs,
        rhs,
        ratio: rhs / lhs,
        slack,
        holds: slack >= -ONEDIM_TOL * scale,
        equality: slack.abs() <= ONEDIM_TOL * scale,
        expected,
    })
}

/// Exact evaluation for rational endpoints and integer `p`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactOneDim {
    pub lhs: BigRational,
    pub rhs: BigRational,
    pub holds: bool,
    pub equality: bool,
}

fn rational_pow(x: &BigRational, p: i32) -> BigRational {
    if p >= 0 {
        Pow::pow(x, p as u32)
    } else {
        Pow::pow(x.recip(), p.unsigned_abs())
    }
}

pub fn onedim_check_exact(intervals: &[(BigRational, BigRational)], p: i32) -> Result<ExactOneDim> {
    if intervals.is_empty() {
        return Err(Error::Construction("interval union is empty".into()));
    }
    for (i, (a, b)) in intervals.iter().enumerate() {
        if a >= b || (i > 0 && intervals[i - 1].1 >= *a) {
            return Err(Error::Construction(format!(
                "interval {i} is empty or overlaps"
            )));
        }
    }
    let zero = BigRational::zero();
    if p < 0 && !intervals.iter().any(|(a, b)| *a < zero && zero < *b) {
        return Err(Error::precondition(format!(
            "p = {p} < 0 requires the origin strictly inside an interval"
        )));
    }
    let two = BigRational::from_integer(BigInt::from(2));
    let mut rhs = BigRational::zero();
    for (a, b) in intervals {
        for e in [a, b] {
            if e.is_zero() && p <= 0 {
                return Err(Error::Singular(format!("endpoint 0 with p = {p} <= 0")));
            }
            rhs += rational_pow(&e.abs(), p);
        }
    }
    rhs /= &two;
    let len: BigRational = intervals
        .iter()
        .map(|(a, b)| b - a)
        .fold(BigRational::zero(), |s, l| s + l);
    let lhs = if p == 0 {
        BigRational::one()
    } else {
        rational_pow(&(len / two), p)
    };
    Ok(ExactOneDim {
        holds: lhs <= rhs,
        equality: lhs == rhs,
        lhs,
        rhs,
    })
}

/// One `eps` of the decay study.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayRow {
    pub eps: f64,
    pub volume: f64,
    pub perimeter: f64,
    pub ratio: f64,
    pub quad_error: f64,
    pub pieces: PieceBreakdown,
}

/// Fitted and expected log-log slopes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlopeComparison {
    pub fitted: f64,
    /// Exponent from the proof; `None` when the bound is logarithmic.
    pub expected: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayCheck {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayReport {
    pub n: usize,
    pub p: f64,
    pub radius: f64,
    pub rows: Vec<DecayRow>,
    pub perimeter_slope: f64,
    pub hemisphere: SlopeComparison,
    pub lateral_near: SlopeComparison,
    pub lateral_far: SlopeComparison,
    pub cut_ball: SlopeComparison,
    pub checks: Vec<DecayCheck>,
    pub pass: bool,
}

/// Ordinary least-squares slope of `y` against `x`.
pub fn ols_slope(x: &[f64], y: &[f64]) -> f64 {
    let m = x.len() as f64;
    let mx = x.iter().sum::<f64>() / m;
    let my = y.iter().sum::<f64>() / m;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// Relative slack used when comparing fitted slopes with exponents.
pub const SLOPE_SLACK: f64 = 0.05;

/// Measures `Omega_eps` along a decreasing list of `eps` and compares the
/// fitted slopes of each perimeter piece with the exponents of the proof.
pub fn counterexample_decay(
    n: usize,
    p: f64,
    radius: f64,
    eps_list: &[f64],
) -> Result<DecayReport> {
    if eps_list.len() < 3 {
        return Err(Error::domain(format!(
            "need at least 3 eps values, got {}",
            eps_list.len()
        )));
    }
    if eps_list.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::domain("eps values must decrease strictly"));
    }
    let domains = eps_list
        .iter()
        .map(|&e| counterexample_domain(n, p, radius, e))
        .collect::<Result<Vec<_>>>()?;
    let measured = map_slice(
        &domains,
        crate::exec::ExecMode::Auto,
        counterexample_measures,
    );
    let mut rows = Vec::with_capacity(domains.len());
    for (ce, m) in domains.iter().zip(measured) {
        let m = m?;
        let rep = inequality_report(m.volume, m.perimeter, n, p)?;
        rows.push(DecayRow {
            eps: ce.eps,
            volume: m.volume.value,
            perimeter: m.perimeter.value,
            ratio: rep.ratio,
            quad_error: rep.quad_error,
            pieces: m.pieces,
        });
    }

    let nf = n as f64;
    let log_eps: Vec<f64> = rows.iter().map(|r| r.eps.ln()).collect();
    let slope_of = |f: &dyn Fn(&DecayRow) -> f64| {
        let ys: Vec<f64> = rows.iter().map(|r| f(r).ln()).collect();
        ols_slope(&log_eps, &ys)
    };
    let core = 2.0 * (nf + p - 1.0);
    let far_expected = if p > -1.0 {
        Some(2.0 * (nf - 2.0) - (nf - 1.0) * (p + 1.0))
    } else if p == -1.0 {
        None
    } else {
        Some(core)
    };
    let perimeter_slope = slope_of(&|r| r.perimeter);
    let hemisphere = SlopeComparison {
        fitted: slope_of(&|r| r.pieces.perimeter_hemisphere),
        expected: Some(core),
    };
    let lateral_near = SlopeComparison {
        fitted: slope_of(&|r| r.pieces.perimeter_lateral_near),
        expected: Some(core),
    };
    let lateral_far = SlopeComparison {
        fitted: slope_of(&|r| r.pieces.perimeter_lateral_far),
        expected: far_expected,
    };
    let cut_ball = SlopeComparison {
        fitted: slope_of(&|r| r.pieces.perimeter_cut_ball),
        expected: Some(-p * (nf - 1.0)),
    };

    let at_least = |s: &SlopeComparison| match s.expected {
        Some(e) => s.fitted >= e - SLOPE_SLACK * e.abs(),
        None => true,
    };
    let limit = ball_volume(n) * radius.powi(n as i32);
    let last = rows[rows.len() - 1];
    let vol_rel = (last.volume - limit).abs() / limit;
    let min_ratio = rows.iter().map(|r| r.ratio).fold(f64::INFINITY, f64::min);
    let checks = vec![
        DecayCheck {
            name: "perimeter_decreasing".into(),
            pass: rows.windows(2).all(|w| w[1].perimeter < w[0].perimeter),
            detail: format!("{:?}", rows.iter().map(|r| r.perimeter).collect::<Vec<_>>()),
        },
        DecayCheck {
            name: "perimeter_slope_positive".into(),
            pass: perimeter_slope > 0.0,
            detail: format!("slope {perimeter_slope}"),
        },
        DecayCheck {
            name: "hemisphere_slope".into(),
            pass: (hemisphere.fitted - core).abs() <= SLOPE_SLACK * core.abs(),
            detail: format!("fitted {} vs {core}", hemisphere.fitted),
        },
        DecayCheck {
            name: "lateral_near_slope".into(),
            pass: at_least(&lateral_near),
            detail: format!("fitted {} vs >= {core}", lateral_near.fitted),
        },
        DecayCheck {
            name: "lateral_far_slope".into(),
            pass: at_least(&lateral_far)
                && rows.iter().all(|r| r.pieces.perimeter_lateral_far > 0.0),
            detail: match far_expected {
                Some(e) => format!("fitted {} vs >= {e}", lateral_far.fitted),
                None => format!(
                    "fitted {}; logarithmic bound, positivity only",
                    lateral_far.fitted
                ),
            },
        },
        DecayCheck {
            name: "cut_ball_slope_sign".into(),
            pass: cut_ball.fitted > 0.0,
            detail: format!("fitted {} (exponent {})", cut_ball.fitted, -p * (nf - 1.0)),
        },
        DecayCheck {
            name: "volume_converges".into(),
            pass: vol_rel <= 0.02,
            detail: format!(
                "relative distance to |B_R| at eps = {}: {vol_rel}",
                last.eps
            ),
        },
        DecayCheck {
            name: "ratio_below_one".into(),
            pass: min_ratio < 1.0,
            detail: format!("minimum ratio {min_ratio}"),
        },
    ];
    let pass = checks.iter().all(|c| c.pass);
    Ok(DecayReport {
        n,
        p,
        radius,
        rows,
        perimeter_slope,
        hemisphere,
        lateral_near,
        lateral_far,
        cut_ball,
        checks,
        pass,
    })
}

/// Volume of a starshaped domain by both routes, for callers that want the
/// closed-form and radial values side by side.
pub fn volume_routes(dom: &StarshapedDomain, q: QuadSettings) -> Result<(Quadrature, Quadrature)> {
    Ok((volume_starshaped(dom, q)?, volume_radial_route(dom, q, 8)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domains::{make_starshaped, DomainSpec, Family};

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    fn ball(n: usize) -> StarshapedDomain {
        make_starshaped(DomainSpec::new(n, Family::Constant { r0: 1.4 })).unwrap()
    }

    fn perturbed(n: usize, delta: f64) -> StarshapedDomain {
        make_starshaped(DomainSpec::new(
            n,
            Family::Perturbed {
                r0: 1.0,
                delta,
                degree: 2,
                axis: 1,
            },
        ))
        .unwrap()
    }

    #[test]
    fn theorem9_ball_is_tight() {
        let rep = theorem9_chain(&ball(3), &Power::new(-2.5), QuadSettings::for_dim(3)).unwrap();
        assert!(rep.overall, "{rep:#?}");
        assert!(rep.all_tight(), "{rep:#?}");
    }

    #[test]
    fn theorem9_borderline_exponent() {
        let rep = theorem9_chain(
            &perturbed(3, 0.2),
            &Power::new(-2.0),
            QuadSettings::for_dim(3),
        )
        .unwrap();
        assert!(rep.overall, "{rep:#?}");
    }

    #[test]
    fn theorem9_perturbed_domain() {
        let rep = theorem9_chain(
            &perturbed(3, 0.2),
            &Power::new(-2.5),
            QuadSettings::for_dim(3),
        )
        .unwrap();
        assert!(rep.overall, "{rep:#?}");
        assert!(rep.step("final").unwrap().slack >= 0.0);
    }

    #[test]
    fn theorem9_rejects_increasing_h() {
        let err = theorem9_chain(&ball(3), &Power::new(1.0), QuadSettings::for_dim(3)).unwrap_err();
        assert!(matches!(err, Error::Precondition(m) if m.contains("increases")));
    }

    #[test]
    fn h_check_detects_concavity() {
        // h(t) = 2 - t^2 is decreasing but concave
        let a = crate::measures::FnDensity {
            name: "concave".into(),
            f: |rho: f64| (2.0 - rho.powi(6)) / (rho * rho),
            df: |_| 0.0,
            d2f: |_| 0.0,
        };
        let err = check_h_hypothesis(&a, 3, 0.5, 1.1).unwrap_err();
        assert!(
            matches!(&err, Error::Precondition(m) if m.contains("convex")),
            "{err:?}"
        );
    }

    #[test]
    fn interpolation_parameters() {
        let rep = interpolation_chain(&ball(3), 0.5, QuadSettings::for_dim(3)).unwrap();
        assert!(rep.overall, "{rep:#?}");
        assert!(rep.all_tight(), "{rep:#?}");
        let a = rep.step("a_at_most_one").unwrap();
        assert!((a.lhs - 0.64).abs() < 1e-15);
        let h = rep.step("holder_exponents_conjugate").unwrap();
        assert!(h.pass);
        assert!(interpolation_chain(&ball(2), 0.5, QuadSettings::for_dim(2)).is_err());
        assert!(interpolation_chain(&ball(3), 1.0, QuadSettings::for_dim(3)).is_err());
    }

    #[test]
    fn interpolation_random_domain() {
        let dom = make_starshaped(DomainSpec::new(
            3,
            Family::RandomTrig {
                r0: 1.0,
                seed: 3,
                degree: 3,
                amplitude: 0.3,
            },
        ))
        .unwrap();
        let rep = interpolation_chain(&dom, 0.9, QuadSettings::for_dim(3)).unwrap();
        assert!(rep.overall, "{rep:#?}");
    }

    #[test]
    fn onedim_examples() {
        let r = onedim_check(&IntervalUnion::new(vec![(-1.0, 1.0)]).unwrap(), 2.0).unwrap();
        assert!(r.equality && r.holds);
        let r = onedim_check(&IntervalUnion::new(vec![(0.0, 1.0)]).unwrap(), 0.5).unwrap();
        assert!((r.lhs - 0.5f64.sqrt()).abs() < 1e-15);
        assert_eq!(r.rhs, 0.5);
        assert!(!r.holds);
        assert_eq!(r.expected, Some(false));
        let r = onedim_check(&IntervalUnion::new(vec![(-1.0, 3.0)]).unwrap(), -1.0).unwrap();
        assert_eq!(r.lhs, 0.5);
        assert!((r.rhs - 2.0 / 3.0).abs() < 1e-15);
        assert!(r.holds);
        assert!(onedim_check(&IntervalUnion::new(vec![(1.0, 3.0)]).unwrap(), -1.0).is_err());
    }

    #[test]
    fn onedim_exact() {
        let r = onedim_check_exact(&[(rat(-1, 1), rat(3, 1))], -1).unwrap();
        assert_eq!(r.lhs, rat(1, 2));
        assert_eq!(r.rhs, rat(2, 3));
        assert!(r.holds && !r.equality);
        let r = onedim_check_exact(&[(rat(-5, 2), rat(5, 2))], 3).unwrap();
        assert!(r.equality);
        assert!(onedim_check_exact(&[(rat(0, 1), rat(1, 1))], 0).is_err());
    }

    #[test]
    fn decay_study_case_one() {
        let rep = counterexample_decay(3, -0.5, 1.0, &[0.2, 0.1, 0.05, 0.025]).unwrap();
        assert!(rep.pass, "{rep:#?}");
        assert_eq!(rep.lateral_far.expected, Some(1.0));
    }

    #[test]
    fn decay_requires_three_decreasing_eps() {
        assert!(counterexample_decay(3, -0.5, 1.0, &[0.2, 0.1]).is_err());
        assert!(counterexample_decay(3, -0.5, 1.0, &[0.1, 0.2, 0.05]).is_err());
        assert!(counterexample_decay(3, -2.5, 1.0, &[0.2, 0.1, 0.05]).is_err());
    }

    #[test]
    fn ols_recovers_line() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y: Vec<f64> = x.iter().map(|v| 2.5 * v - 1.0).collect();
        assert!((ols_slope(&x, &y) - 2.5).abs() < 1e-14);
    }
}

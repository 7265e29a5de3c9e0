//! Deterministic quadrature: tensor Gauss-Legendre rules on the angle box
//! `Q`, adaptive graded panels on intervals, and sample-based rules for
//! curves.
//!
//! No rule places a node on the boundary of its domain of integration; the
//! hyperspherical metric degenerates on the boundary of `Q` and the interval
//! integrands of interest are singular at their left endpoint.

use std::f64::consts::PI;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{map_indexed, pairwise_sum, ExecMode};
use crate::hypersphere::AngleVector;

/// A quadrature value with its error estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quadrature {
    pub value: f64,
    pub error: f64,
}

impl Quadrature {
    pub fn exact(value: f64) -> Self {
        Quadrature { value, error: 0.0 }
    }
}

/// Rounding allowance added to every box-rule error estimate, relative to the
/// sum of absolute weighted integrand values.
const ROUNDING_FLOOR: f64 = 32.0 * f64::EPSILON;

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussRule {
    /// Newton iteration on `P_m` from the Chebyshev-like initial guesses.
    pub fn legendre(m: usize) -> GaussRule {
        assert!(m >= 1, "rule needs at least one node");
        let mut nodes = vec![0.0; m];
        let mut weights = vec![0.0; m];
        let mf = m as f64;
        for i in 0..m.div_ceil(2) {
            let mut x = (PI * (i as f64 + 0.75) / (mf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(m, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() <= 1e-16 * x.abs().max(1.0) {
                    let (_, d) = legendre_with_derivative(m, x);
                    dp = d;
                    break;
                }
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[m - 1 - i] = x;
            weights[i] = w;
            weights[m - 1 - i] = w;
        }
        if m % 2 == 1 {
            nodes[m / 2] = 0.0;
        }
        GaussRule { nodes, weights }
    }

    /// Nodes and weights affinely mapped onto `(a, b)`.
    pub fn mapped(&self, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let nodes = self.nodes.iter().map(|x| mid + half * x).collect();
        let weights = self.weights.iter().map(|w| half * w).collect();
        (nodes, weights)
    }

    fn apply(&self, f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let mut s = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            s += w * f(mid + half * x);
        }
        half * s
    }
}

fn legendre_with_derivative(m: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=m {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = m as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

fn panel_rule() -> &'static GaussRule {
    static RULE: OnceLock<GaussRule> = OnceLock::new();
    RULE.get_or_init(|| GaussRule::legendre(10))
}

/// Default nodes per axis for the box rule in dimension `n`.
pub fn default_order(n: usize) -> usize {
    match n {
        0..=3 => 64,
        4 | 5 => 32,
        _ => 16,
    }
}

/// Tensor-product Gauss-Legendre rule on `Q = (0, pi)^{n-2} x (0, 2 pi)`.
#[derive(Debug, Clone)]
pub struct BoxRule {
    n: usize,
    order: usize,
    axes: Vec<(Vec<f64>, Vec<f64>)>,
}

impl BoxRule {
    pub fn new(n: usize, order: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::domain(format!("box rule needs n >= 2, got {n}")));
        }
        if order == 0 {
            return Err(Error::domain("box rule order must be positive"));
        }
        let rule = GaussRule::legendre(order);
        let axes = (0..n - 1)
            .map(|i| {
                let upper = if i == n - 2 { 2.0 * PI } else { PI };
                rule.mapped(0.0, upper)
            })
            .collect();
        Ok(BoxRule { n, order, axes })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Total number of nodes, `order^{n-1}`.
    pub fn len(&self) -> usize {
        self.order.pow((self.n - 1) as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Node and weight for a flat index; the last angle varies fastest.
    pub fn node(&self, mut idx: usize) -> (AngleVector, f64) {
        let k = self.n - 1;
        let mut phi = vec![0.0; k];
        let mut w = 1.0;
        for axis in (0..k).rev() {
            let j = idx % self.order;
            idx /= self.order;
            phi[axis] = self.axes[axis].0[j];
            w *= self.axes[axis].1[j];
        }
        (AngleVector::new_unchecked(self.n, phi), w)
    }

    /// Sum of weights; equals the volume of `Q` up to rounding.
    pub fn weight_sum(&self) -> f64 {
        self.axes
            .iter()
            .map(|(_, w)| w.iter().sum::<f64>())
            .product()
    }

    /// Weighted sum of `f` over the nodes with a fixed reduction order.
    ///
    /// Returns the value and the sum of absolute weighted terms.
    pub fn sum<F>(&self, f: &F, mode: ExecMode) -> Result<(f64, f64)>
    where
        F: Fn(&AngleVector) -> f64 + Sync,
    {
        let samples = map_indexed(self.len(), mode, |i| {
            let (phi, w) = self.node(i);
            (f(&phi), w)
        });
        if let Some(i) = samples.iter().position(|(v, _)| !v.is_finite()) {
            let (phi, _) = self.node(i);
            return Err(Error::NonFinite {
                value: samples[i].0,
                location: format!("box node phi = {:?}", phi.angles()),
            });
        }
        let terms: Vec<f64> = samples.iter().map(|(v, w)| v * w).collect();
        let abs: Vec<f64> = terms.iter().map(|t| t.abs()).collect();
        Ok((pairwise_sum(&terms), pairwise_sum(&abs)))
    }
}

/// Integrates `f` over `Q` with `order` nodes per axis; the error estimate is
/// the difference to the rule with `order / 2` nodes plus a rounding floor.
pub fn integrate_box<F>(f: F, n: usize, order: usize) -> Result<Quadrature>
where
    F: Fn(&AngleVector) -> f64 + Sync,
{
    integrate_box_with(f, n, order, ExecMode::Auto)
}

pub fn integrate_box_with<F>(f: F, n: usize, order: usize, mode: ExecMode) -> Result<Quadrature>
where
    F: Fn(&AngleVector) -> f64 + Sync,
{
    if order < 4 {
        return Err(Error::domain(format!(
            "box order must be >= 4, got {order}"
        )));
    }
    let (fine, abs) = BoxRule::new(n, order)?.sum(&f, mode)?;
    let (coarse, _) = BoxRule::new(n, order / 2)?.sum(&f, mode)?;
    Ok(Quadrature {
        value: fine,
        error: (fine - coarse).abs() + ROUNDING_FLOOR * abs,
    })
}

/// Single-level box integral without an error estimate.
pub fn integrate_box_single<F>(f: F, n: usize, order: usize, mode: ExecMode) -> Result<f64>
where
    F: Fn(&AngleVector) -> f64 + Sync,
{
    Ok(BoxRule::new(n, order)?.sum(&f, mode)?.0)
}

/// Result of an interval integration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntervalQuadrature {
    pub value: f64,
    pub error: f64,
    /// False when the refinement limit was hit before the tolerance was met.
    pub converged: bool,
}

impl From<IntervalQuadrature> for Quadrature {
    fn from(q: IntervalQuadrature) -> Self {
        Quadrature {
            value: q.value,
            error: q.error,
        }
    }
}

const INTERVAL_RTOL: f64 = 1e-12;
const GRADING_RATIO: f64 = 0.25;
const GRADING_LEVELS: i32 = 40;
const MAX_DEPTH: usize = 60;

/// Integrates `f` over `(a, b)`.
///
/// In adaptive mode the interval is first split into panels graded
/// geometrically toward `a`, then each panel is bisected until the two-level
/// Gauss-Legendre difference is below `1e-12 (1 + |value|)` per panel.
/// Otherwise a fixed composite rule with 64 panels is compared against 32.
pub fn integrate_interval<F>(f: F, a: f64, b: f64, adaptive: bool) -> Result<IntervalQuadrature>
where
    F: Fn(f64) -> f64,
{
    if !(a < b) {
        return Err(Error::domain(format!(
            "interval requires a < b, got ({a}, {b})"
        )));
    }
    let result = if adaptive {
        adaptive_graded(&f, a, b)
    } else {
        let fine = composite(&f, a, b, 64);
        let coarse = composite(&f, a, b, 32);
        IntervalQuadrature {
            value: fine,
            error: (fine - coarse).abs(),
            converged: true,
        }
    };
    if !result.value.is_finite() {
        let (nodes, _) = panel_rule().mapped(a, b);
        let (x, v) = nodes
            .into_iter()
            .map(|x| (x, f(x)))
            .find(|(_, v)| !v.is_finite())
            .unwrap_or((a, result.value));
        return Err(Error::NonFinite {
            value: v,
            location: format!("interval node x = {x}"),
        });
    }
    Ok(result)
}

fn composite(f: &dyn Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    let rule = panel_rule();
    let h = (b - a) / panels as f64;
    let parts: Vec<f64> = (0..panels)
        .map(|i| {
            let lo = a + h * i as f64;
            let hi = if i + 1 == panels { b } else { lo + h };
            rule.apply(f, lo, hi)
        })
        .collect();
    pairwise_sum(&parts)
}

fn adaptive_graded(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> IntervalQuadrature {
    let rule = panel_rule();
    let width = b - a;
    let mut breaks = vec![a];
    for j in (1..=GRADING_LEVELS).rev() {
        breaks.push(a + width * GRADING_RATIO.powi(j));
    }
    breaks.push(b);

    let coarse: f64 = breaks.windows(2).map(|w| rule.apply(f, w[0], w[1])).sum();
    let tol = INTERVAL_RTOL * (1.0 + coarse.abs()) / (breaks.len() - 1) as f64;

    let mut values = Vec::new();
    let mut error = 0.0;
    let mut converged = true;
    for w in breaks.windows(2) {
        let whole = rule.apply(f, w[0], w[1]);
        let (v, e, ok) = refine(f, w[0], w[1], whole, tol, MAX_DEPTH);
        values.push(v);
        error += e;
        converged &= ok;
    }
    IntervalQuadrature {
        value: pairwise_sum(&values),
        error,
        converged,
    }
}

fn refine(
    f: &dyn Fn(f64) -> f64,
    lo: f64,
    hi: f64,
    whole: f64,
    tol: f64,
    depth: usize,
) -> (f64, f64, bool) {
    let rule = panel_rule();
    let mid = 0.5 * (lo + hi);
    let left = rule.apply(f, lo, mid);
    let right = rule.apply(f, mid, hi);
    let diff = (left + right - whole).abs();
    if diff <= tol || !diff.is_finite() {
        return (left + right, diff, diff.is_finite());
    }
    if depth == 0 || mid <= lo || mid >= hi {
        return (left + right, diff, false);
    }
    let (lv, le, lok) = refine(f, lo, mid, left, tol, depth - 1);
    let (rv, re, rok) = refine(f, mid, hi, right, tol, depth - 1);
    (lv + rv, le + re, lok && rok)
}

/// Integrates uniformly spaced samples with spacing `dt`.
///
/// Closed curves (first sample repeated at the end) use the periodic
/// trapezoidal rule; open ones use composite Simpson, with a trapezoid on the
/// last interval when the interval count is odd.
pub fn integrate_samples(values: &[f64], dt: f64, closed: bool) -> f64 {
    let m = values.len();
    if m < 2 {
        return 0.0;
    }
    if closed {
        let inner: Vec<f64> = values[..m - 1].to_vec();
        return dt * pairwise_sum(&inner);
    }
    let intervals = m - 1;
    let even = intervals - intervals % 2;
    let mut parts = Vec::with_capacity(even / 2 + 1);
    for i in (0..even).step_by(2) {
        parts.push(dt / 3.0 * (values[i] + 4.0 * values[i + 1] + values[i + 2]));
    }
    if intervals % 2 == 1 {
        parts.push(0.5 * dt * (values[m - 2] + values[m - 1]));
    }
    pairwise_sum(&parts)
}

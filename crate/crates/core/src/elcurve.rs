//! Planar Euler-Lagrange curves for the density `|x|^p`: generalized
//! curvature, fixed-step RK4 integration of the stationary-curve system,
//! reflection symmetry, shooting for closed orbits, and the limit of `m(t)`
//! at a boundary point through the origin.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::domains::{CurveSample, PlanarCurve};
use crate::error::{Error, Result};
use crate::exec::{map_slice, ExecMode};

/// Integration aborts when `|gamma|` falls below this radius.
pub const NEAR_ORIGIN: f64 = 1e-8;
/// Unit-speed drift that triggers step halving.
pub const SPEED_DRIFT_TOL: f64 = 1e-9;
/// Maximum number of step halvings per integration.
pub const MAX_HALVINGS: usize = 8;
/// Steps per circumference `2 pi d` of the default step.
pub const STEPS_PER_TURN: f64 = 4096.0;

/// Position, unit velocity and labels of a trajectory point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ELState {
    pub gamma: [f64; 2],
    pub alpha: [f64; 2],
    pub t: f64,
    pub p: f64,
    pub k: f64,
}

impl ELState {
    pub fn new(gamma: [f64; 2], alpha: [f64; 2], p: f64, k: f64) -> Result<Self> {
        let speed = alpha[0].hypot(alpha[1]);
        if (speed - 1.0).abs() > SPEED_DRIFT_TOL {
            return Err(Error::domain(format!(
                "initial velocity not unit: |alpha| = {speed}"
            )));
        }
        if !(gamma[0].hypot(gamma[1]) > NEAR_ORIGIN) {
            return Err(Error::domain("initial point at the origin"));
        }
        if !p.is_finite() || !k.is_finite() {
            return Err(Error::domain("p and k must be finite"));
        }
        Ok(ELState {
            gamma,
            alpha,
            t: 0.0,
            p,
            k,
        })
    }

    /// Start on the positive `x_1`-axis at distance `d` moving counter-clockwise.
    pub fn on_axis(d: f64, p: f64, k: f64) -> Result<Self> {
        ELState::new([d, 0.0], [0.0, 1.0], p, k)
    }
}

/// `k` of the circle of radius `d` centered at the origin: `(p + 1) d^{p-1}`.
pub fn circle_curvature(p: f64, d: f64) -> f64 {
    (p + 1.0) * d.powf(p - 1.0)
}

/// Default step `2 pi d / 4096`.
pub fn default_step(d: f64) -> f64 {
    2.0 * PI * d / STEPS_PER_TURN
}

/// `(F_1, F_2)` of the system `gamma'' = F(gamma, gamma')`.
fn acceleration(p: f64, k: f64, g: [f64; 2], a: [f64; 2]) -> [f64; 2] {
    let r = g[0].hypot(g[1]);
    let rp = if p == 0.0 { 1.0 } else { r.powf(p) };
    let c = if p == 0.0 {
        0.0
    } else {
        p * r.powf(p - 2.0) * (g[0] * a[1] - g[1] * a[0])
    };
    [a[1] / rp * (-k + c), a[0] / rp * (k - c)]
}

type Phase = [f64; 4];

fn deriv(p: f64, k: f64, y: &Phase) -> Phase {
    let acc = acceleration(p, k, [y[0], y[1]], [y[2], y[3]]);
    [y[2], y[3], acc[0], acc[1]]
}

fn rk4(p: f64, k: f64, y: &Phase, h: f64) -> Phase {
    let add = |a: &Phase, b: &Phase, s: f64| {
        [
            a[0] + s * b[0],
            a[1] + s * b[1],
            a[2] + s * b[2],
            a[3] + s * b[3],
        ]
    };
    let k1 = deriv(p, k, y);
    let k2 = deriv(p, k, &add(y, &k1, 0.5 * h));
    let k3 = deriv(p, k, &add(y, &k2, 0.5 * h));
    let k4 = deriv(p, k, &add(y, &k3, h));
    let mut out = *y;
    for i in 0..4 {
        out[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    out
}

fn radius(y: &Phase) -> f64 {
    y[0].hypot(y[1])
}

fn blowup_bound(start: &ELState) -> f64 {
    1e6 * (1.0 + start.gamma[0].hypot(start.gamma[1]))
}

/// Why an integration stopped.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "reason", rename_all = "kebab-case")]
pub enum StopReason {
    Completed,
    NearOrigin { t: f64 },
    Diverged { t: f64 },
}

struct RawRun {
    states: Vec<Phase>,
    stop: StopReason,
}

fn run_fixed(start: &ELState, h: f64, steps: usize) -> RawRun {
    let bound = blowup_bound(start);
    let mut y: Phase = [
        start.gamma[0],
        start.gamma[1],
        start.alpha[0],
        start.alpha[1],
    ];
    let mut states = Vec::with_capacity(steps + 1);
    states.push(y);
    for i in 0..steps {
        y = rk4(start.p, start.k, &y, h);
        let r = radius(&y);
        let t = start.t + h * (i + 1) as f64;
        if !r.is_finite() || r > bound {
            return RawRun {
                states,
                stop: StopReason::Diverged { t },
            };
        }
        if r < NEAR_ORIGIN {
            return RawRun {
                states,
                stop: StopReason::NearOrigin { t },
            };
        }
        states.push(y);
    }
    RawRun {
        states,
        stop: StopReason::Completed,
    }
}

/// Output of [`integrate_el`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub curve: PlanarCurve,
    pub k: f64,
    pub stop: StopReason,
    /// Step actually used after halvings.
    pub step: f64,
    pub halvings: usize,
    /// `max | |alpha| - 1 |` over the samples.
    pub speed_drift: f64,
    /// `max |k(t) - k(0)|` of the generalized curvature recomputed from
    /// the samples.
    pub k_drift: f64,
}

impl Trajectory {
    /// `|gamma(t_end) - gamma(0)|`.
    pub fn closure_error(&self) -> f64 {
        let s = self.curve.samples();
        let (a, b) = (s[0].pos, s[s.len() - 1].pos);
        (a[0] - b[0]).hypot(a[1] - b[1])
    }
}

/// Integrates `(gamma, alpha)' = (alpha, F(gamma, alpha))` from `start`
/// over `[0, t_end]` with RK4 and a step close to `step`; the step is halved
/// while the unit-speed drift exceeds `1e-9`.
pub fn integrate_el(start: &ELState, t_end: f64, step: f64) -> Result<Trajectory> {
    if !(t_end > 0.0) || !(step > 0.0) {
        return Err(Error::domain(format!(
            "need t_end > 0 and step > 0, got t_end = {t_end}, step = {step}"
        )));
    }
    let mut steps = (t_end / step).ceil().max(1.0) as usize;
    let mut halvings = 0;
    loop {
        let h = t_end / steps as f64;
        let run = run_fixed(start, h, steps);
        let drift = run
            .states
            .iter()
            .map(|y| (y[2].hypot(y[3]) - 1.0).abs())
            .fold(0.0, f64::max);
        if drift > SPEED_DRIFT_TOL && halvings < MAX_HALVINGS {
            steps *= 2;
            halvings += 1;
            continue;
        }
        if run.states.len() < 2 {
            return Err(Error::Singular(format!(
                "integration stopped on the first step ({:?})",
                run.stop
            )));
        }
        let samples: Vec<CurveSample> = run
            .states
            .iter()
            .enumerate()
            .map(|(i, y)| {
                let acc = acceleration(start.p, start.k, [y[0], y[1]], [y[2], y[3]]);
                CurveSample {
                    t: start.t + h * i as f64,
                    pos: [y[0], y[1]],
                    vel: [y[2], y[3]],
                    acc,
                }
            })
            .collect();
        let k0 = generalized_curvature_sample(&samples[0], start.p)?;
        let mut k_drift: f64 = 0.0;
        for s in &samples {
            k_drift = k_drift.max((generalized_curvature_sample(s, start.p)? - k0).abs());
        }
        let curve = PlanarCurve::new(samples, false, start.p)?;
        return Ok(Trajectory {
            curve,
            k: start.k,
            stop: run.stop,
            step: h,
            halvings,
            speed_drift: drift,
            k_drift,
        });
    }
}

/// `k = p |gamma|^{p-2} <gamma, nu> + |gamma|^p kappa` at one sample, with
/// `nu = (gamma_2', -gamma_1')` and `kappa = <gamma', nu'>`.
pub fn generalized_curvature_sample(s: &CurveSample, p: f64) -> Result<f64> {
    let r = s.radius();
    if !(r > 0.0) {
        return Err(Error::Singular(format!(
            "sample at the origin (t = {})",
            s.t
        )));
    }
    let nu = s.normal();
    let dot = s.pos[0] * nu[0] + s.pos[1] * nu[1];
    let kappa = s.curvature();
    if p == 0.0 {
        return Ok(kappa);
    }
    Ok(p * r.powf(p - 2.0) * dot + r.powf(p) * kappa)
}

/// Generalized curvature of `c` at the sample nearest to `t`, using the
/// exponent carried by the curve.
pub fn generalized_curvature(c: &PlanarCurve, t: f64) -> Result<f64> {
    let s = c.samples();
    let t0 = s[0].t;
    let idx = ((t - t0) / c.spacing())
        .round()
        .clamp(0.0, (s.len() - 1) as f64) as usize;
    generalized_curvature_sample(&s[idx], c.exponent())
}

/// Outcome of [`check_symmetry`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymmetryReport {
    pub applicable: bool,
    /// `max_t |gamma(t) - (gamma_1(-t), -gamma_2(-t))|`, or 0 when skipped.
    pub defect: f64,
    /// Number of compared sample pairs.
    pub compared: usize,
    pub note: String,
}

/// Tolerance for the start to count as on-axis.
const AXIS_TOL: f64 = 1e-14;

/// Integrates backward from the first sample of `c` with the same step and
/// compares the forward branch with the reflected backward branch.
pub fn check_symmetry(c: &PlanarCurve) -> Result<SymmetryReport> {
    let s0 = c.samples()[0];
    if !(s0.pos[1].abs() <= AXIS_TOL && s0.pos[0] > 0.0 && s0.vel[0].abs() <= AXIS_TOL) {
        return Ok(SymmetryReport {
            applicable: false,
            defect: 0.0,
            compared: 0,
            note: "skipped: start not on the positive x-axis with vertical velocity".into(),
        });
    }
    let p = c.exponent();
    let k = generalized_curvature_sample(&s0, p)?;
    let start = ELState {
        gamma: s0.pos,
        alpha: s0.vel,
        t: 0.0,
        p,
        k,
    };
    let h = c.spacing();
    let back = run_fixed(&start, -h, c.samples().len() - 1);
    let mut defect: f64 = 0.0;
    for (fwd, b) in c.samples().iter().zip(&back.states) {
        let dx = fwd.pos[0] - b[0];
        let dy = fwd.pos[1] + b[1];
        defect = defect.max(dx.hypot(dy));
    }
    Ok(SymmetryReport {
        applicable: true,
        defect,
        compared: back.states.len().min(c.samples().len()),
        note: match back.stop {
            StopReason::Completed => "ok".into(),
            other => format!("backward branch stopped early: {other:?}"),
        },
    })
}

/// State where the trajectory crosses the `x_1`-axis, refined by bisection
/// on a fractional RK4 step.
fn refine_crossing(p: f64, k: f64, prev: &Phase, h: f64) -> Phase {
    let sign0 = prev[1] > 0.0;
    let (mut lo, mut hi) = (0.0, h);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if (rk4(p, k, prev, mid)[1] > 0.0) == sign0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    rk4(p, k, prev, hi)
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Crossing {
    /// `gamma_2` from positive to non-positive with `gamma_1 < 0`.
    NegativeAxis,
    /// `gamma_2` from negative to non-negative with `gamma_1 > 0`.
    PositiveAxis,
}

fn integrate_to_crossing(p: f64, d: f64, k: f64, which: Crossing) -> Option<Phase> {
    let h = default_step(d);
    let max_steps = (10.0 * STEPS_PER_TURN) as usize;
    let start = ELState {
        gamma: [d, 0.0],
        alpha: [0.0, 1.0],
        t: 0.0,
        p,
        k,
    };
    let bound = blowup_bound(&start);
    let mut y: Phase = [d, 0.0, 0.0, 1.0];
    let mut left_axis = false;
    for _ in 0..max_steps {
        let next = rk4(p, k, &y, h);
        let r = radius(&next);
        if !r.is_finite() || r < NEAR_ORIGIN || r > bound {
            return None;
        }
        let hit = match which {
            Crossing::NegativeAxis => y[1] > 0.0 && next[1] <= 0.0 && next[0] < 0.0,
            Crossing::PositiveAxis => left_axis && y[1] < 0.0 && next[1] >= 0.0 && next[0] > 0.0,
        };
        if hit {
            return Some(refine_crossing(p, k, &y, h));
        }
        if next[1] < 0.0 {
            left_axis = true;
        }
        y = next;
    }
    None
}

/// `|gamma| - d` at the first crossing of the negative `x_1`-axis, or `None`
/// when there is no crossing before `t_max` or the run aborts.
pub fn half_turn_miss(p: f64, d: f64, k: f64) -> Option<f64> {
    integrate_to_crossing(p, d, k, Crossing::NegativeAxis).map(|y| radius(&y) - d)
}

/// `|gamma - (d, 0)|` after one full turn back to the positive axis.
pub fn full_turn_closure(p: f64, d: f64, k: f64) -> Option<f64> {
    integrate_to_crossing(p, d, k, Crossing::PositiveAxis).map(|y| (y[0] - d).hypot(y[1]))
}

/// A closed stationary curve found by shooting.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShotRoot {
    pub k: f64,
    /// Half-turn miss at the returned `k`.
    pub miss: f64,
    /// Gap after a full turn, `None` if the full turn did not complete.
    pub closure_error: Option<f64>,
}

/// Scans `k_grid` for sign changes of the half-turn miss distance and bisects
/// each bracket until its width is below `tol (1 + |k|)`. Roots are returned
/// in grid order.
pub fn shoot_closed(p: f64, d: f64, k_grid: &[f64], tol: f64) -> Result<Vec<ShotRoot>> {
    if !(d > 0.0) {
        return Err(Error::domain(format!(
            "start radius must be positive, got {d}"
        )));
    }
    if k_grid.iter().any(|k| !k.is_finite()) {
        return Err(Error::domain("k grid must be finite"));
    }
    if !(tol > 0.0) {
        return Err(Error::domain(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    let misses = map_slice(k_grid, ExecMode::Auto, |&k| half_turn_miss(p, d, k));
    let brackets: Vec<(f64, f64, f64)> = k_grid
        .windows(2)
        .zip(misses.windows(2))
        .filter_map(|(ks, ms)| match (ms[0], ms[1]) {
            (Some(a), Some(b)) if a == 0.0 || a * b < 0.0 => Some((ks[0], ks[1], a)),
            _ => None,
        })
        .collect();
    let roots = map_slice(&brackets, ExecMode::Auto, |&(k_lo, k_hi, m_lo)| {
        if m_lo == 0.0 {
            return Some(k_lo);
        }
        let (mut lo, mut hi, mut f_lo) = (k_lo, k_hi, m_lo);
        while (hi - lo).abs() > tol * (1.0 + lo.abs()) {
            let mid = 0.5 * (lo + hi);
            let m = half_turn_miss(p, d, mid)?;
            if m == 0.0 {
                return Some(mid);
            }
            if (m < 0.0) == (f_lo < 0.0) {
                lo = mid;
                f_lo = m;
            } else {
                hi = mid;
            }
        }
        Some(0.5 * (lo + hi))
    });
    Ok(roots
        .into_iter()
        .flatten()
        .filter_map(|k| {
            half_turn_miss(p, d, k).map(|miss| ShotRoot {
                k,
                miss,
                closure_error: full_turn_closure(p, d, k),
            })
        })
        .collect())
}

/// Samples of `m(t)` and of `(t f' - f) / t^2` along a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryLimit {
    pub t: Vec<f64>,
    pub m: Vec<f64>,
    pub quotient: Vec<f64>,
}

impl BoundaryLimit {
    /// True when `|m|` strictly decreases along the grid.
    pub fn abs_m_decreasing(&self) -> bool {
        self.m.windows(2).all(|w| w[1].abs() < w[0].abs())
    }
}

/// Evaluates
/// `m(t) = p |a|^p / sqrt(1 + f'^2) (t f' - f) / |a|^2 + |a|^p f'' / (1 + f'^2)^{3/2}`
/// with `a(t) = (f(t), t)`, for `f` returning `(f, f', f'')`.
pub fn boundary_limit_m<F>(f: F, p: f64, t_grid: &[f64]) -> Result<BoundaryLimit>
where
    F: Fn(f64) -> [f64; 3],
{
    let f0 = f(0.0)[0];
    if f0.abs() > 1e-14 {
        return Err(Error::precondition(format!("f(0) = {f0} is not 0")));
    }
    if !(p > 0.0) {
        return Err(Error::precondition(format!("p must be positive, got {p}")));
    }
    if t_grid.is_empty() || t_grid.iter().any(|&t| !(t > 0.0)) {
        return Err(Error::precondition("t grid must be non-empty and positive"));
    }
    if t_grid.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::precondition("t grid must decrease strictly"));
    }
    let mut m = Vec::with_capacity(t_grid.len());
    let mut quotient = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        let [v, d1, d2] = f(t);
        let a = v.hypot(t);
        let ap = a.powf(p);
        let w = 1.0 + d1 * d1;
        let num = t * d1 - v;
        m.push(p * ap / w.sqrt() * num / (a * a) + ap * d2 / w.powf(1.5));
        quotient.push(num / (t * t));
    }
    Ok(BoundaryLimit {
        t: t_grid.to_vec(),
        m,
        quotient,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domains::ball_curve;

    #[test]
    fn circle_generalized_curvature() {
        for (r, p) in [(1.0, 1.0), (2.0, 0.5), (0.5, -0.5)] {
            let c = ball_curve(r, [0.0, 0.0], 128).unwrap().with_exponent(p);
            for s in c.samples() {
                let k = generalized_curvature_sample(s, p).unwrap();
                assert!((k - circle_curvature(p, r)).abs() < 1e-13);
            }
        }
        let c = ball_curve(1.0, [0.0, 0.0], 64).unwrap().with_exponent(1.0);
        assert!((generalized_curvature(&c, 1.0).unwrap() - 2.0).abs() < 1e-14);
        let c = ball_curve(2.0, [3.0, 0.0], 64).unwrap();
        assert!((generalized_curvature(&c, 0.3).unwrap() - 0.5).abs() < 1e-14);
    }

    #[test]
    fn flat_density_unit_circle() {
        let start = ELState::on_axis(1.0, 0.0, 1.0).unwrap();
        let tr = integrate_el(&start, 2.0 * PI, default_step(1.0)).unwrap();
        assert_eq!(tr.stop, StopReason::Completed);
        assert!(tr.closure_error() < 1e-8);
    }

    #[test]
    fn circles_for_several_exponents() {
        for (p, d) in [(1.0, 1.0), (0.5, 2.0), (-0.5, 0.5)] {
            let k = circle_curvature(p, d);
            let start = ELState::on_axis(d, p, k).unwrap();
            let tr = integrate_el(&start, 2.0 * PI * d, default_step(d)).unwrap();
            assert!(
                tr.closure_error() < 1e-8,
                "p={p} d={d}: {}",
                tr.closure_error()
            );
            assert!(tr.k_drift < 1e-8);
            for s in tr.curve.samples() {
                assert!((s.radius() - d).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn non_circular_run_is_symmetric() {
        let start = ELState::on_axis(1.0, 0.5, 1.2).unwrap();
        let tr = integrate_el(&start, 3.0, default_step(1.0)).unwrap();
        let rep = check_symmetry(&tr.curve).unwrap();
        assert!(rep.applicable);
        assert!(rep.defect < 1e-7, "{rep:?}");
        let circle = integrate_el(
            &ELState::on_axis(1.0, 1.0, 2.0).unwrap(),
            2.0 * PI,
            default_step(1.0),
        )
        .unwrap();
        assert!(check_symmetry(&circle.curve).unwrap().defect < 1e-10);
    }

    #[test]
    fn off_axis_start_is_skipped() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let start = ELState::new([1.0, 0.5], [-s, s], 0.5, 1.0).unwrap();
        let tr = integrate_el(&start, 1.0, 0.01).unwrap();
        let rep = check_symmetry(&tr.curve).unwrap();
        assert!(!rep.applicable);
    }

    #[test]
    fn near_origin_abort() {
        // straight line through the origin
        let start = ELState::new([1.0, 0.0], [-1.0, 0.0], 0.0, 0.0).unwrap();
        let tr = integrate_el(&start, 2.0, 0.25).unwrap();
        assert!(
            matches!(tr.stop, StopReason::NearOrigin { .. }),
            "{:?}",
            tr.stop
        );
    }

    #[test]
    fn invalid_states_rejected() {
        assert!(ELState::new([1.0, 0.0], [0.0, 1.1], 0.0, 1.0).is_err());
        assert!(ELState::new([0.0, 0.0], [0.0, 1.0], 0.0, 1.0).is_err());
    }

    #[test]
    fn shooting_finds_circles() {
        for (p, d) in [(0.0, 1.0), (1.0, 1.0), (0.5, 3.0)] {
            let k0 = circle_curvature(p, d);
            let grid: Vec<f64> = (0..=10).map(|i| k0 * (0.55 + 0.1 * i as f64)).collect();
            let roots = shoot_closed(p, d, &grid, 1e-10).unwrap();
            assert!(
                roots.iter().any(|r| (r.k - k0).abs() < 1e-6 * k0),
                "p={p} d={d}: {roots:?}"
            );
        }
        assert!(shoot_closed(0.0, 1.0, &[5.0, 6.0], 1e-10)
            .unwrap()
            .is_empty());
    }

    #[test]
    fn boundary_limit_examples() {
        let grid: Vec<f64> = (1..=6).map(|e| 10f64.powi(-e)).collect();
        let sq = |t: f64| [t * t, 2.0 * t, 2.0];
        let res = boundary_limit_m(sq, 0.5, &grid).unwrap();
        assert!(res.abs_m_decreasing());
        for q in &res.quotient {
            assert!((q - 1.0).abs() < 1e-12);
        }
        let sin = |t: f64| [t.sin(), t.cos(), -t.sin()];
        let res = boundary_limit_m(sin, 1.0, &grid).unwrap();
        assert!(res.abs_m_decreasing());
        assert!(res.quotient.last().unwrap().abs() < 1e-5);
        assert!(boundary_limit_m(|t| [1.0 + t, 1.0, 0.0], 0.5, &grid).is_err());
        assert!(boundary_limit_m(sq, 0.0, &grid).is_err());
        assert!(boundary_limit_m(sq, 0.5, &[1e-3, 1e-2]).is_err());
    }
}

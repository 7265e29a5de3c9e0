//! Weighted volume and perimeter functionals and the report form of the
//! inequality `(n |Omega| / omega_{n-1})^{(n+p-1)/n} <= P_p(Omega) / omega_{n-1}`.

use serde::{Deserialize, Serialize};

use crate::domains::{CompositeCounterexample, IntervalUnion, PlanarCurve, StarshapedDomain};
use crate::error::{Error, Result};
use crate::exec::ExecMode;
use crate::hypersphere::{
    ball_volume, covariant_gradient_sq, metric, sphere_area, surface_element, AngleVector,
};
use crate::quadrature::{
    default_order, integrate_box_with, integrate_interval, integrate_samples, GaussRule, Quadrature,
};

/// A radial density `G(t)` on `(0, inf)` with its first two derivatives.
pub trait RadialDensity: Sync {
    fn value(&self, t: f64) -> f64;

    fn d1(&self, t: f64) -> f64 {
        let h = 1e-5 * t.abs().max(1e-3);
        (self.value(t + h) - self.value(t - h)) / (2.0 * h)
    }

    fn d2(&self, t: f64) -> f64 {
        let h = 1e-4 * t.abs().max(1e-3);
        (self.value(t + h) - 2.0 * self.value(t) + self.value(t - h)) / (h * h)
    }

    fn label(&self) -> String;
}

/// `G(t) = t^p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Power {
    pub p: f64,
}

impl Power {
    pub fn new(p: f64) -> Self {
        Power { p }
    }
}

impl RadialDensity for Power {
    fn value(&self, t: f64) -> f64 {
        if self.p == 0.0 {
            1.0
        } else {
            t.powf(self.p)
        }
    }

    fn d1(&self, t: f64) -> f64 {
        if self.p == 0.0 {
            0.0
        } else {
            self.p * t.powf(self.p - 1.0)
        }
    }

    fn d2(&self, t: f64) -> f64 {
        if self.p == 0.0 || self.p == 1.0 {
            0.0
        } else {
            self.p * (self.p - 1.0) * t.powf(self.p - 2.0)
        }
    }

    fn label(&self) -> String {
        format!("t^{}", self.p)
    }
}

/// A density given by closures for the value and derivatives.
pub struct FnDensity<F, D1, D2> {
    pub name: String,
    pub f: F,
    pub df: D1,
    pub d2f: D2,
}

impl<F, D1, D2> RadialDensity for FnDensity<F, D1, D2>
where
    F: Fn(f64) -> f64 + Sync,
    D1: Fn(f64) -> f64 + Sync,
    D2: Fn(f64) -> f64 + Sync,
{
    fn value(&self, t: f64) -> f64 {
        (self.f)(t)
    }
    fn d1(&self, t: f64) -> f64 {
        (self.df)(t)
    }
    fn d2(&self, t: f64) -> f64 {
        (self.d2f)(t)
    }
    fn label(&self) -> String {
        self.name.clone()
    }
}

/// `a(t) - a(M)` for `t <= M` and `0` beyond `M`.
pub struct ShiftedDensity<'a, D: RadialDensity + ?Sized> {
    pub base: &'a D,
    pub cutoff: f64,
}

/// Builds the shifted density `a~ = a - a(M)` truncated at `M`.
pub fn shifted_density<D: RadialDensity + ?Sized>(
    base: &D,
    cutoff: f64,
) -> Result<ShiftedDensity<'_, D>> {
    if !(cutoff > 0.0) {
        return Err(Error::domain(format!(
            "cutoff must be positive, got {cutoff}"
        )));
    }
    Ok(ShiftedDensity { base, cutoff })
}

impl<D: RadialDensity + ?Sized> RadialDensity for ShiftedDensity<'_, D> {
    fn value(&self, t: f64) -> f64 {
        if t >= self.cutoff {
            0.0
        } else {
            self.base.value(t) - self.base.value(self.cutoff)
        }
    }
    fn d1(&self, t: f64) -> f64 {
        if t >= self.cutoff {
            0.0
        } else {
            self.base.d1(t)
        }
    }
    fn d2(&self, t: f64) -> f64 {
        if t >= self.cutoff {
            0.0
        } else {
            self.base.d2(t)
        }
    }
    fn label(&self) -> String {
        format!("shifted({}, M = {})", self.base.label(), self.cutoff)
    }
}

/// Integration settings shared by the box-rule functionals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadSettings {
    pub order: usize,
    pub mode: ExecMode,
}

impl QuadSettings {
    pub fn for_dim(n: usize) -> Self {
        QuadSettings {
            order: default_order(n),
            mode: ExecMode::Auto,
        }
    }

    pub fn with_mode(mut self, mode: ExecMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_order(mut self, order: usize) -> Self {
        self.order = order;
        self
    }
}

/// `|Omega| = (1/n) int_Q r^n g`.
pub fn volume_starshaped(dom: &StarshapedDomain, q: QuadSettings) -> Result<Quadrature> {
    let n = dom.dim();
    let nf = n as f64;
    let res = integrate_box_with(
        |phi: &AngleVector| dom.radius(phi).powi(n as i32) * surface_element(phi),
        n,
        q.order,
        q.mode,
    )?;
    Ok(Quadrature {
        value: res.value / nf,
        error: res.error / nf,
    })
}

/// `int_{S^{n-1}} G(R) R^{n-1} sqrt(1 + |grad R|^2 / R^2)`.
pub fn weighted_perimeter_starshaped<D: RadialDensity + ?Sized>(
    dom: &StarshapedDomain,
    density: &D,
    q: QuadSettings,
) -> Result<Quadrature> {
    let n = dom.dim();
    let ball = dom.is_centered_ball();
    integrate_box_with(
        |phi: &AngleVector| {
            let r = dom.radius(phi);
            if ball {
                return density.value(r) * r.powi(n as i32 - 1) * surface_element(phi);
            }
            let m = metric(phi);
            let grad = dom.radius_grad(phi);
            let gsq = covariant_gradient_sq(&m, &grad);
            density.value(r) * r.powi(n as i32 - 1) * (1.0 + gsq / (r * r)).sqrt() * m.g
        },
        n,
        q.order,
        q.mode,
    )
}

/// Relative distance below which a curve sample counts as the origin.
pub const ORIGIN_TOL: f64 = 1e-12;

/// `int_0^L |gamma(t)|^p dt` over the samples of a unit-speed curve.
pub fn weighted_perimeter_curve(c: &PlanarCurve, p: f64) -> Result<f64> {
    if p < 0.0 && c.min_radius() <= ORIGIN_TOL * c.max_radius() {
        return Err(Error::Singular(format!(
            "curve passes through the origin with p = {p} < 0"
        )));
    }
    let values: Vec<f64> = c
        .samples()
        .iter()
        .map(|s| Power::new(p).value(s.radius()))
        .collect();
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            value: values[i],
            location: format!("curve sample t = {}", c.samples()[i].t),
        });
    }
    Ok(integrate_samples(&values, c.spacing(), c.is_closed()))
}

/// Sum of `|e|^p` over the endpoints of the union.
pub fn weighted_perimeter_1d(u: &IntervalUnion, p: f64) -> Result<f64> {
    let mut total = 0.0;
    for e in u.endpoints() {
        if e == 0.0 && p <= 0.0 {
            return Err(Error::Singular(format!("endpoint 0 with p = {p} <= 0")));
        }
        total += Power::new(p).value(e.abs());
    }
    Ok(total)
}

/// Volumes and weighted perimeters of the three pieces of `Omega_eps`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PieceBreakdown {
    pub volume_half_ball: f64,
    pub volume_cylinder: f64,
    pub volume_cut_ball: f64,
    /// Hemisphere `{|x| = eps^2, x_1 < 0}`.
    pub perimeter_hemisphere: f64,
    /// Lateral surface of the cylinder over `0 < x_1 < eps^2`.
    pub perimeter_lateral_near: f64,
    /// Lateral surface of the cylinder over `eps^2 < x_1 < eps^{-n+1}`.
    pub perimeter_lateral_far: f64,
    /// Spherical part of the boundary of the cut ball.
    pub perimeter_cut_ball: f64,
}

/// Volume, weighted perimeter and piecewise breakdown of `Omega_eps`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CounterexampleMeasures {
    pub volume: Quadrature,
    pub perimeter: Quadrature,
    pub pieces: PieceBreakdown,
}

/// Computes the measures of `Omega_eps` piecewise: closed forms for the
/// half-ball and cylinder, 1-D quadrature for the lateral density integral,
/// the removed cap and the spherical part of `D_eps`.
pub fn counterexample_measures(ce: &CompositeCounterexample) -> Result<CounterexampleMeasures> {
    let n = ce.n;
    let nf = n as f64;
    let p = ce.p;
    let eps = ce.eps;
    let big_r = ce.radius;
    if !(nf + p - 1.0 > 0.0) {
        return Err(Error::domain(format!(
            "hemisphere term needs n + p - 1 > 0, got {}",
            nf + p - 1.0
        )));
    }
    let e2 = ce.neck_radius();
    let len = ce.neck_length();
    let eps4 = e2 * e2;
    let inner = (big_r * big_r - eps4).sqrt();

    let volume_half_ball = 0.5 * ball_volume(n) * eps.powi(2 * n as i32);
    let volume_cylinder = ball_volume(n - 1) * eps.powi(n as i32 - 1);
    let cap = integrate_interval(
        |s| ball_volume(n - 1) * (big_r * big_r - s * s).max(0.0).powf((nf - 1.0) / 2.0),
        inner,
        big_r,
        true,
    )?;
    let volume_cut_ball = ball_volume(n) * big_r.powi(n as i32) - cap.value;

    let perimeter_hemisphere = 0.5 * sphere_area(n) * eps.powf(2.0 * (nf - 1.0) + 2.0 * p);
    let lateral = |x: f64| (x * x + eps4).powf(p / 2.0);
    let prefactor = sphere_area(n - 1) * eps.powi(2 * (n as i32 - 2));
    let l1 = integrate_interval(lateral, 0.0, e2, true)?;
    let l2 = integrate_interval(lateral, e2, len, true)?;

    let c = ce.c_eps;
    let cos_max = -inner / big_r;
    let theta_max = cos_max.acos();
    let sphere = integrate_interval(
        |th| {
            (c * c + big_r * big_r + 2.0 * c * big_r * th.cos()).powf(p / 2.0)
                * th.sin().powi(n as i32 - 2)
        },
        0.0,
        theta_max,
        true,
    )?;
    let d_prefactor = sphere_area(n - 1) * big_r.powi(n as i32 - 1);

    let pieces = PieceBreakdown {
        volume_half_ball,
        volume_cylinder,
        volume_cut_ball,
        perimeter_hemisphere,
        perimeter_lateral_near: prefactor * l1.value,
        perimeter_lateral_far: prefactor * l2.value,
        perimeter_cut_ball: d_prefactor * sphere.value,
    };
    let volume = Quadrature {
        value: volume_half_ball + volume_cylinder + volume_cut_ball,
        error: cap.error,
    };
    let perimeter = Quadrature {
        value: pieces.perimeter_hemisphere
            + pieces.perimeter_lateral_near
            + pieces.perimeter_lateral_far
            + pieces.perimeter_cut_ball,
        error: prefactor * (l1.error + l2.error) + d_prefactor * sphere.error,
    };
    Ok(CounterexampleMeasures {
        volume,
        perimeter,
        pieces,
    })
}

/// Both sides of the central inequality for one domain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InequalityReport {
    pub n: usize,
    pub p: f64,
    /// `(n |Omega| / omega_{n-1})^{(n+p-1)/n}`.
    pub lhs: f64,
    /// `P_p(Omega) / omega_{n-1}`.
    pub rhs: f64,
    pub ratio: f64,
    pub slack: f64,
    /// Propagated quadrature error of `ratio`.
    pub quad_error: f64,
}

impl InequalityReport {
    /// True when `ratio >= 1 - 10 quad_error`.
    pub fn holds(&self) -> bool {
        self.ratio >= 1.0 - 10.0 * self.quad_error
    }
}

/// Fills both sides of the inequality from a volume and a weighted perimeter;
/// `omega_{n-1}` is `sphere_area(n)` (2 for `n = 1`).
pub fn inequality_report(
    volume: Quadrature,
    perimeter: Quadrature,
    n: usize,
    p: f64,
) -> Result<InequalityReport> {
    if n == 0 {
        return Err(Error::domain("dimension must be positive"));
    }
    if !(volume.value > 0.0) {
        return Err(Error::domain(format!(
            "volume must be positive, got {}",
            volume.value
        )));
    }
    if !(perimeter.value >= 0.0) {
        return Err(Error::domain(format!(
            "perimeter must be non-negative, got {}",
            perimeter.value
        )));
    }
    let nf = n as f64;
    let omega = sphere_area(n);
    let expo = (nf + p - 1.0) / nf;
    let lhs = (nf * volume.value / omega).powf(expo);
    let rhs = perimeter.value / omega;
    let ratio = rhs / lhs;
    let rel_lhs = expo.abs() * volume.error / volume.value;
    let rel_rhs = if perimeter.value > 0.0 {
        perimeter.error / perimeter.value
    } else {
        0.0
    };
    Ok(InequalityReport {
        n,
        p,
        lhs,
        rhs,
        ratio,
        slack: rhs - lhs,
        quad_error: ratio * (rel_lhs + rel_rhs),
    })
}

/// Volume, perimeter and report for a starshaped domain with density `t^p`.
pub fn starshaped_report(
    dom: &StarshapedDomain,
    p: f64,
    q: QuadSettings,
) -> Result<InequalityReport> {
    let vol = volume_starshaped(dom, q)?;
    let per = weighted_perimeter_starshaped(dom, &Power::new(p), q)?;
    inequality_report(vol, per, dom.dim(), p)
}

/// Volume of a starshaped domain by radial Gauss-Legendre integration of
/// `t^{n-1}` on `(0, r(phi))`, independent of the closed form `r^n / n`.
pub fn volume_radial_route(
    dom: &StarshapedDomain,
    q: QuadSettings,
    radial_nodes: usize,
) -> Result<Quadrature> {
    let n = dom.dim();
    let rule = GaussRule::legendre(radial_nodes);
    integrate_box_with(
        |phi: &AngleVector| {
            let r = dom.radius(phi);
            let (nodes, weights) = rule.mapped(0.0, r);
            let inner: f64 = nodes
                .iter()
                .zip(&weights)
                .map(|(t, w)| w * t.powi(n as i32 - 1))
                .sum();
            inner * metric(phi).g
        },
        n,
        q.order,
        q.mode,
    )
}

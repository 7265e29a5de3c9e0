//! First and second variations of the weighted perimeter: translations of a
//! centered ball under the density `|x|^p`, and normal perturbations of a
//! sphere under a general radial density.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hypersphere::{
    covariant_gradient_sq, embed, embed_jacobian, metric, sphere_area, AngleVector,
};
use crate::measures::{QuadSettings, RadialDensity};
use crate::quadrature::{integrate_box_with, BoxRule, Quadrature};

/// `P(s)`, the weighted perimeter of `B_r(0) + (s, 0, ..., 0)` under `|x|^p`.
pub fn translated_ball_perimeter(
    n: usize,
    p: f64,
    r: f64,
    s: f64,
    q: QuadSettings,
) -> Result<Quadrature> {
    if n < 2 {
        return Err(Error::domain(format!("dimension must be >= 2, got {n}")));
    }
    if !(r > 0.0) {
        return Err(Error::domain(format!("radius must be positive, got {r}")));
    }
    if p < 0.0 && s.abs() >= r {
        return Err(Error::Singular(format!(
            "origin not inside the translated ball (|s| = {} >= r = {r}) with p = {p} < 0",
            s.abs()
        )));
    }
    let base = r * r + s * s;
    let scale = r.powi(n as i32 - 1);
    integrate_box_with(
        |phi: &AngleVector| {
            let x1 = embed(phi)[0];
            let sq = base + 2.0 * r * s * x1;
            let w = if p == 0.0 { 1.0 } else { sq.powf(0.5 * p) };
            w * scale * metric(phi).g
        },
        n,
        q.order,
        q.mode,
    )
}

/// `(P(h) - P(-h)) / 2h` with `h = 1e-4 r`.
pub fn first_variation_translation(n: usize, p: f64, r: f64, q: QuadSettings) -> Result<f64> {
    let h = 1e-4 * r;
    let plus = translated_ball_perimeter(n, p, r, h, q)?.value;
    let minus = translated_ball_perimeter(n, p, r, -h, q)?.value;
    Ok((plus - minus) / (2.0 * h))
}

/// Closed form `(r^{p-2} / n) omega_{n-1} r^{n-1} p (p + n - 2)`.
pub fn second_variation_closed_form(n: usize, p: f64, r: f64) -> f64 {
    let nf = n as f64;
    r.powf(p - 2.0) / nf * sphere_area(n) * r.powi(n as i32 - 1) * p * (p + nf - 2.0)
}

/// One line of the sign table of `p (p + n - 2)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SignRegime {
    /// `p < -n + 2`.
    BelowCritical,
    /// `p = -n + 2`.
    AtCritical,
    /// `-n + 2 < p < 0`.
    Between,
    /// `p = 0`.
    Zero,
    /// `p > 0`.
    Positive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Classification {
    Stable,
    Marginal,
    Unstable,
}

impl Classification {
    pub fn as_str(self) -> &'static str {
        match self {
            Classification::Stable => "stable",
            Classification::Marginal => "marginal",
            Classification::Unstable => "unstable",
        }
    }
}

/// Sign-table line for `(n, p)` by direct comparison of `p` with `0` and
/// `-(n - 2)`. For `n = 2` the two thresholds coincide and `p = 0` is
/// reported as [`SignRegime::Zero`].
pub fn sign_regime(n: usize, p: f64) -> SignRegime {
    let crit = -(n as f64 - 2.0);
    if p == 0.0 {
        SignRegime::Zero
    } else if p > 0.0 {
        SignRegime::Positive
    } else if p == crit {
        SignRegime::AtCritical
    } else if p < crit {
        SignRegime::BelowCritical
    } else {
        SignRegime::Between
    }
}

pub fn classify(n: usize, p: f64) -> Classification {
    match sign_regime(n, p) {
        SignRegime::BelowCritical | SignRegime::Positive => Classification::Stable,
        SignRegime::AtCritical | SignRegime::Zero => Classification::Marginal,
        SignRegime::Between => Classification::Unstable,
    }
}

/// Variations of the translated ball at `s = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariationReport {
    pub n: usize,
    pub p_or_density: String,
    pub p: f64,
    pub r: f64,
    pub first: f64,
    pub second_numeric: f64,
    pub second_analytic: f64,
    pub classification: Classification,
}

impl VariationReport {
    /// Tolerance for `|first|`: `1e-6 omega_{n-1} r^{n+p-1}`.
    pub fn first_tolerance(&self) -> f64 {
        1e-6 * sphere_area(self.n) * self.r.powf(self.n as f64 + self.p - 1.0)
    }

    /// Scale of the individual terms of the second derivative; used in
    /// place of a relative error when the closed form vanishes.
    pub fn second_scale(&self) -> f64 {
        let nf = self.n as f64;
        self.p.abs()
            * sphere_area(self.n)
            * self.r.powf(nf + self.p - 3.0)
            * ((self.p - 2.0).abs() / nf + 1.0)
    }

    /// `|numeric - analytic| <= 1e-3 |analytic|`, or `<= 1e-3 scale` when
    /// the closed form is zero.
    pub fn second_agrees(&self) -> bool {
        let diff = (self.second_numeric - self.second_analytic).abs();
        if self.second_analytic == 0.0 {
            diff <= 1e-3 * self.second_scale().max(f64::MIN_POSITIVE)
        } else {
            diff <= 1e-3 * self.second_analytic.abs()
        }
    }

    pub fn first_vanishes(&self) -> bool {
        self.first.abs() < self.first_tolerance()
    }
}

/// First and second variations at `s = 0`; the second derivative uses the
/// central second difference with `h = 1e-3 r`.
pub fn second_variation_translation(
    n: usize,
    p: f64,
    r: f64,
    q: QuadSettings,
) -> Result<VariationReport> {
    let h = 1e-3 * r;
    let p0 = translated_ball_perimeter(n, p, r, 0.0, q)?.value;
    let ph = translated_ball_perimeter(n, p, r, h, q)?.value;
    let pm = translated_ball_perimeter(n, p, r, -h, q)?.value;
    let first = first_variation_translation(n, p, r, q)?;
    Ok(VariationReport {
        n,
        p_or_density: format!("{p}"),
        p,
        r,
        first,
        second_numeric: (ph - 2.0 * p0 + pm) / (h * h),
        second_analytic: second_variation_closed_form(n, p, r),
        classification: classify(n, p),
    })
}

/// A building block of a perturbation field on the unit sphere, written in
/// the embedded coordinates `x = H(phi)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HarmonicTerm {
    Constant,
    /// `x_axis` (1-based), eigenvalue `n - 1`.
    Coordinate(usize),
    /// `x_a x_b` for `a != b`, or `x_a^2 - 1/n` for `a == b`; eigenvalue `2n`.
    Quadratic(usize, usize),
}

impl HarmonicTerm {
    fn value(&self, x: &[f64]) -> f64 {
        match *self {
            HarmonicTerm::Constant => 1.0,
            HarmonicTerm::Coordinate(a) => x[a - 1],
            HarmonicTerm::Quadratic(a, b) if a == b => x[a - 1] * x[a - 1] - 1.0 / x.len() as f64,
            HarmonicTerm::Quadratic(a, b) => x[a - 1] * x[b - 1],
        }
    }

    fn gradient(&self, x: &[f64], out: &mut [f64]) {
        match *self {
            HarmonicTerm::Constant => {}
            HarmonicTerm::Coordinate(a) => out[a - 1] += 1.0,
            HarmonicTerm::Quadratic(a, b) => {
                out[a - 1] += x[b - 1];
                out[b - 1] += x[a - 1];
            }
        }
    }

    fn axes(&self) -> [usize; 2] {
        match *self {
            HarmonicTerm::Constant => [1, 1],
            HarmonicTerm::Coordinate(a) => [a, a],
            HarmonicTerm::Quadratic(a, b) => [a, b],
        }
    }
}

/// Finite linear combination of [`HarmonicTerm`]s.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SphereField {
    pub n: usize,
    pub terms: Vec<(f64, HarmonicTerm)>,
}

impl SphereField {
    pub fn new(n: usize, terms: Vec<(f64, HarmonicTerm)>) -> Result<Self> {
        if n < 2 {
            return Err(Error::domain(format!("dimension must be >= 2, got {n}")));
        }
        for (_, t) in &terms {
            let [a, b] = t.axes();
            if a == 0 || b == 0 || a > n || b > n {
                return Err(Error::domain(format!(
                    "harmonic term {t:?} has an axis outside 1..={n}"
                )));
            }
        }
        Ok(SphereField { n, terms })
    }

    /// Value at the point `x` of the unit sphere.
    pub fn value(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|(c, t)| c * t.value(x)).sum()
    }

    /// Chart partials of `u(H(phi))`.
    pub fn chart_gradient(&self, phi: &AngleVector) -> Vec<f64> {
        let x = embed(phi);
        let mut grad = vec![0.0; self.n];
        let mut tmp = vec![0.0; self.n];
        for (c, t) in &self.terms {
            tmp.iter_mut().for_each(|v| *v = 0.0);
            t.gradient(&x, &mut tmp);
            for (g, v) in grad.iter_mut().zip(&tmp) {
                *g += c * v;
            }
        }
        embed_jacobian(phi)
            .iter()
            .map(|col| col.iter().zip(&grad).map(|(a, b)| a * b).sum())
            .collect()
    }
}

/// The two terms of the second variation of `P_G` at `B_r(0)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadialSecondVariation {
    /// `G(r) (int |grad u|^2 - (n-1)/r^2 int u^2)` over `dB_r`.
    pub m1: f64,
    /// `((n-1) G'(r) / r + G''(r)) int u^2` over `dB_r`.
    pub m2: f64,
    pub total: f64,
    /// `int_{dB_r} u^2` after projection.
    pub u_sq: f64,
    /// `int_{dB_r} |grad_Sigma u|^2`.
    pub grad_sq: f64,
    /// Mean removed from `u`.
    pub projected_mean: f64,
}

/// Second variation of `P_G` at the centered ball of radius `r` for the
/// normal perturbation `u` (mean projected out first).
pub fn second_variation_radial_density<G: RadialDensity + ?Sized>(
    n: usize,
    density: &G,
    r: f64,
    u: &SphereField,
    q: QuadSettings,
) -> Result<RadialSecondVariation> {
    if !(r > 0.0) {
        return Err(Error::domain(format!("radius must be positive, got {r}")));
    }
    if u.n != n {
        return Err(Error::domain(format!("field dimension {} != n = {n}", u.n)));
    }
    let nf = n as f64;
    let rule = BoxRule::new(n, q.order)?;
    let g_int = |f: &(dyn Fn(&AngleVector) -> f64 + Sync)| {
        rule.sum(&|phi: &AngleVector| f(phi) * metric(phi).g, q.mode)
    };

    let (mean_num, _) = g_int(&|phi| u.value(&embed(phi)))?;
    let mean = mean_num / sphere_area(n);
    let (residual, abs) = g_int(&|phi| u.value(&embed(phi)) - mean)?;
    let (u_abs, _) = g_int(&|phi| (u.value(&embed(phi)) - mean).abs())?;
    if residual.abs() > 1e-10 * (1.0 + u_abs) + 1e-13 * abs {
        return Err(Error::Constraint(format!(
            "perturbation mean {residual} not zero after projection"
        )));
    }
    let (u_sq_unit, _) = g_int(&|phi| {
        let v = u.value(&embed(phi)) - mean;
        v * v
    })?;
    let (grad_unit, _) = g_int(&|phi| covariant_gradient_sq(&metric(phi), &u.chart_gradient(phi)))?;

    let area = r.powi(n as i32 - 1);
    let u_sq = area * u_sq_unit;
    let grad_sq = area * grad_unit / (r * r);
    let m1 = density.value(r) * (grad_sq - (nf - 1.0) / (r * r) * u_sq);
    let m2 = ((nf - 1.0) * density.d1(r) / r + density.d2(r)) * u_sq;
    Ok(RadialSecondVariation {
        m1,
        m2,
        total: m1 + m2,
        u_sq,
        grad_sq,
        projected_mean: mean,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::Power;
    use std::f64::consts::PI;

    #[test]
    fn centered_translation_is_ball() {
        let q = QuadSettings::for_dim(3);
        let v = translated_ball_perimeter(3, 1.5, 2.0, 0.0, q)
            .unwrap()
            .value;
        assert!((v - 4.0 * PI * 2.0f64.powf(3.5)).abs() < 1e-10 * v);
    }

    #[test]
    fn quadratic_density_shift() {
        let v = translated_ball_perimeter(3, 2.0, 1.0, 0.5, QuadSettings::for_dim(3))
            .unwrap()
            .value;
        assert!((v - 5.0 * PI).abs() < 1e-8);
    }

    #[test]
    fn singular_translation_rejected() {
        let q = QuadSettings::for_dim(3);
        assert!(matches!(
            translated_ball_perimeter(3, -1.0, 1.0, 1.0, q),
            Err(Error::Singular(_))
        ));
        assert!(translated_ball_perimeter(3, 1.0, 1.0, 1.5, q).is_ok());
    }

    #[test]
    fn marginal_translation_perimeter_is_constant() {
        let q = QuadSettings::for_dim(3);
        let vals: Vec<f64> = (0..=9)
            .map(|i| {
                translated_ball_perimeter(3, -1.0, 1.0, 0.1 * i as f64, q)
                    .unwrap()
                    .value
            })
            .collect();
        // P(s) = 4 pi r for |s| < r
        for v in &vals {
            assert!((v - 4.0 * PI).abs() < 1e-6, "{vals:?}");
        }
    }

    #[test]
    fn first_variation_vanishes() {
        for (n, p, r) in [(3, 2.0, 1.0), (4, -1.0, 2.0), (2, 0.5, 1.0)] {
            let first = first_variation_translation(n, p, r, QuadSettings::for_dim(n)).unwrap();
            let tol = 1e-6 * sphere_area(n) * r.powf(n as f64 + p - 1.0);
            assert!(first.abs() < tol, "n={n} p={p}: {first}");
        }
    }

    #[test]
    fn second_variation_examples() {
        let rep = second_variation_translation(3, 2.0, 1.0, QuadSettings::for_dim(3)).unwrap();
        assert!((rep.second_analytic - 8.0 * PI).abs() < 1e-12);
        assert!(rep.second_agrees());
        assert_eq!(classify(3, -0.5), Classification::Unstable);
        assert_eq!(classify(4, -2.0), Classification::Marginal);
        assert_eq!(classify(4, -2.5), Classification::Stable);
        assert_eq!(classify(4, 0.0), Classification::Marginal);
        assert_eq!(classify(4, 0.1), Classification::Stable);
    }

    #[test]
    fn first_eigenfunction_has_zero_m1() {
        let r = 1.7;
        let u = SphereField::new(3, vec![(1.0 / r, HarmonicTerm::Coordinate(1))]).unwrap();
        let res =
            second_variation_radial_density(3, &Power::new(0.0), r, &u, QuadSettings::for_dim(3))
                .unwrap();
        assert!(res.m1.abs() < 1e-8, "{res:?}");
        assert_eq!(res.m2, 0.0);
    }

    #[test]
    fn degree_two_harmonic_has_positive_m1() {
        let u = SphereField::new(
            4,
            vec![
                (1.0, HarmonicTerm::Quadratic(2, 2)),
                (0.5, HarmonicTerm::Quadratic(1, 3)),
            ],
        )
        .unwrap();
        let r = 1.3;
        let res =
            second_variation_radial_density(4, &Power::new(0.0), r, &u, QuadSettings::for_dim(4))
                .unwrap();
        assert!(res.m1 > 0.0);
        // eigenvalue 2n: int |grad u|^2 = 2n / r^2 int u^2
        assert!((res.grad_sq - 8.0 / (r * r) * res.u_sq).abs() < 1e-9 * res.grad_sq);
    }

    #[test]
    fn constant_term_is_projected_out() {
        let u = SphereField::new(
            3,
            vec![
                (2.0, HarmonicTerm::Constant),
                (1.0, HarmonicTerm::Coordinate(2)),
            ],
        )
        .unwrap();
        let res =
            second_variation_radial_density(3, &Power::new(1.0), 1.0, &u, QuadSettings::for_dim(3))
                .unwrap();
        assert!((res.projected_mean - 2.0).abs() < 1e-12);
        assert!(res.m1.abs() < 1e-8);
    }

    #[test]
    fn m2_sign_follows_table() {
        let u = SphereField::new(3, vec![(1.0, HarmonicTerm::Quadratic(1, 2))]).unwrap();
        for p in [-2.0, -1.0, -0.5, 0.0, 0.5, 2.0] {
            let res = second_variation_radial_density(
                3,
                &Power::new(p),
                1.3,
                &u,
                QuadSettings::for_dim(3),
            )
            .unwrap();
            let expect = p * (p + 1.0);
            if expect == 0.0 {
                assert!(res.m2.abs() < 1e-12);
            } else {
                assert_eq!(res.m2 > 0.0, expect > 0.0, "p={p}");
            }
        }
    }

    #[test]
    fn invalid_fields_rejected() {
        assert!(SphereField::new(3, vec![(1.0, HarmonicTerm::Coordinate(4))]).is_err());
        assert!(SphereField::new(3, vec![(1.0, HarmonicTerm::Quadratic(0, 1))]).is_err());
    }
}

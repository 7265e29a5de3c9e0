//! Hyperspherical coordinates on the unit sphere `S^{n-1}` of `R^n`.
//!
//! The chart is `H : Q -> S^{n-1}` with `Q = (0, pi)^{n-2} x (0, 2 pi)` and
//!
//! ```text
//! H_k(phi) = cos(phi_k) * prod_{l=0}^{k-1} sin(phi_l),   phi_0 = pi/2, phi_n = 0.
//! ```
//!
//! The metric is diagonal with entries `d_i = prod_{l<i} sin^2(phi_l)` and the
//! surface element is `g = prod_{k=1}^{n-2} sin(phi_k)^{n-k-1}`.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// A point of the open coordinate box `Q` for dimension `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct AngleVector {
    n: usize,
    phi: Vec<f64>,
}

impl AngleVector {
    /// Validates `phi.len() == n - 1` and that every angle lies strictly
    /// inside its range.
    pub fn new(n: usize, phi: Vec<f64>) -> Result<Self> {
        if n < 2 {
            return Err(Error::domain(format!("dimension must be >= 2, got {n}")));
        }
        if phi.len() != n - 1 {
            return Err(Error::domain(format!(
                "expected {} angles for n = {n}, got {}",
                n - 1,
                phi.len()
            )));
        }
        for (i, &a) in phi.iter().enumerate() {
            let upper = if i + 1 == n - 1 { 2.0 * PI } else { PI };
            if !(a > 0.0 && a < upper) {
                return Err(Error::domain(format!(
                    "angle phi_{} = {a} outside the open interval (0, {upper})",
                    i + 1
                )));
            }
        }
        Ok(AngleVector { n, phi })
    }

    /// Skips range validation; used for quadrature nodes which are interior
    /// by construction.
    pub(crate) fn new_unchecked(n: usize, phi: Vec<f64>) -> Self {
        debug_assert_eq!(phi.len(), n - 1);
        AngleVector { n, phi }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn angles(&self) -> &[f64] {
        &self.phi
    }

    /// Copy with angle `i` (0-based) shifted by `delta`, without validation.
    pub(crate) fn shifted(&self, i: usize, delta: f64) -> AngleVector {
        let mut phi = self.phi.clone();
        phi[i] += delta;
        AngleVector { n: self.n, phi }
    }
}

/// Diagonal metric entries and surface element at one point of `Q`.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricData {
    pub d: Vec<f64>,
    pub g: f64,
}

/// `H(phi)`, a unit vector of `R^n`.
pub fn embed(phi: &AngleVector) -> Vec<f64> {
    let n = phi.n;
    let mut out = Vec::with_capacity(n);
    let mut sin_prod = 1.0;
    for k in 1..=n {
        let cos_k = if k == n { 1.0 } else { phi.phi[k - 1].cos() };
        out.push(cos_k * sin_prod);
        if k < n {
            sin_prod *= phi.phi[k - 1].sin();
        }
    }
    out
}

/// Analytic partial derivatives of the chart: entry `[i][k]` is
/// `dH_{k+1} / dphi_{i+1}`.
pub fn embed_jacobian(phi: &AngleVector) -> Vec<Vec<f64>> {
    let n = phi.n;
    let s: Vec<f64> = phi.phi.iter().map(|a| a.sin()).collect();
    let c: Vec<f64> = phi.phi.iter().map(|a| a.cos()).collect();
    // cos(phi_k) with the phi_n = 0 convention.
    let cos_at = |k: usize| if k == n { 1.0 } else { c[k - 1] };

    let mut jac = vec![vec![0.0; n]; n - 1];
    for (i0, row) in jac.iter_mut().enumerate() {
        let i = i0 + 1;
        for k in i..=n {
            let mut prod = 1.0;
            for (l0, sl) in s.iter().enumerate().take(k - 1) {
                if l0 + 1 != i {
                    prod *= sl;
                }
            }
            row[k - 1] = if k == i {
                -s[i - 1] * prod
            } else {
                cos_at(k) * c[i - 1] * prod
            };
        }
    }
    jac
}

/// Metric entries `d_i` and surface element `g` at `phi`.
pub fn metric(phi: &AngleVector) -> MetricData {
    let n = phi.n;
    let mut d = Vec::with_capacity(n - 1);
    let mut acc = 1.0;
    for i in 0..n - 1 {
        d.push(acc);
        let s = phi.phi[i].sin();
        acc *= s * s;
    }
    let g = surface_element(phi);
    MetricData { d, g }
}

/// `g(phi) = prod_{k=1}^{n-2} sin(phi_k)^{n-k-1}`; equals 1 for `n = 2`.
pub fn surface_element(phi: &AngleVector) -> f64 {
    let n = phi.n;
    (1..n.saturating_sub(1))
        .map(|k| phi.phi[k - 1].sin().powi((n - k - 1) as i32))
        .product()
}

/// Squared norm of the covariant gradient on the sphere from chart partials.
pub fn covariant_gradient_sq(metric: &MetricData, grad: &[f64]) -> f64 {
    metric.d.iter().zip(grad).map(|(di, gi)| gi * gi / di).sum()
}

/// Surface element of the graph `phi -> r(phi) H(phi)` given `r` and its
/// chart partials, in the closed form
/// `r^{n-2} sqrt( sum_i (dr_i)^2 prod_{j != i} d_j + r^2 prod_i d_i )`.
///
/// Never smaller than `r^{n-1} g(phi)`.
pub fn graph_surface_element(phi: &AngleVector, r: f64, grad_r: &[f64]) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::domain(format!("radius must be positive, got {r}")));
    }
    let n = phi.n;
    if grad_r.len() != n - 1 {
        return Err(Error::domain(format!(
            "gradient has {} components, expected {}",
            grad_r.len(),
            n - 1
        )));
    }
    let m = metric(phi);
    let d = &m.d;
    // prefix/suffix products give prod_{j != i} d_j without dividing by d_i
    let mut prefix = vec![1.0; n];
    for i in 0..n - 1 {
        prefix[i + 1] = prefix[i] * d[i];
    }
    let mut suffix = vec![1.0; n];
    for i in (0..n - 1).rev() {
        suffix[i] = suffix[i + 1] * d[i];
    }
    let full = prefix[n - 1];
    let mut sum = r * r * full;
    for i in 0..n - 1 {
        sum += grad_r[i] * grad_r[i] * prefix[i] * suffix[i + 1];
    }
    Ok(r.powi(n as i32 - 2) * sum.sqrt())
}

/// `Gamma(k / 2)` for a positive integer `k`.
fn gamma_half(k: usize) -> f64 {
    assert!(k > 0);
    let (mut value, mut x) = if k.is_multiple_of(2) {
        (1.0, 1.0)
    } else {
        (PI.sqrt(), 0.5)
    };
    let target = k as f64 / 2.0;
    while x < target {
        value *= x;
        x += 1.0;
    }
    value
}

/// `omega_{n-1}`, the `(n-1)`-dimensional measure of the unit sphere in `R^n`.
///
/// `sphere_area(1) = 2` (counting measure of `{-1, 1}`).
pub fn sphere_area(n: usize) -> f64 {
    2.0 * PI.powf(n as f64 / 2.0) / gamma_half(n)
}

/// `alpha_n`, the volume of the unit ball in `R^n`.
pub fn ball_volume(n: usize) -> f64 {
    sphere_area(n) / n as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn av(n: usize, phi: &[f64]) -> AngleVector {
        AngleVector::new(n, phi.to_vec()).unwrap()
    }

    #[test]
    fn embed_planar_quarter_turn() {
        let x = embed(&av(2, &[PI / 2.0]));
        assert!(x[0].abs() < 1e-16);
        assert_eq!(x[1], 1.0);
    }

    #[test]
    fn embed_n3_axis_limit() {
        let x = embed(&av(3, &[PI / 2.0, 1e-12]));
        assert!(x[0].abs() < 1e-15);
        assert!((x[1] - 1.0).abs() < 1e-15);
        assert!(x[2].abs() < 1e-11);
    }

    #[test]
    fn boundary_angles_rejected() {
        assert!(AngleVector::new(3, vec![0.0, 1.0]).is_err());
        assert!(AngleVector::new(3, vec![PI, 1.0]).is_err());
        assert!(AngleVector::new(3, vec![1.0, 2.0 * PI]).is_err());
        assert!(AngleVector::new(3, vec![1.0]).is_err());
        assert!(AngleVector::new(1, vec![]).is_err());
        assert!(AngleVector::new(4, vec![3.0, 3.1, 6.2]).is_ok());
    }

    #[test]
    fn g_is_one_on_equator_n3() {
        for phi2 in [0.3, 2.0, 5.9] {
            assert_relative_eq!(metric(&av(3, &[PI / 2.0, phi2])).g, 1.0, epsilon = 1e-15);
        }
        assert_eq!(metric(&av(2, &[1.0])).g, 1.0);
    }

    #[test]
    fn d1_is_one_and_g_squared_is_det() {
        let m = metric(&av(5, &[0.4, 1.3, 2.9, 4.4]));
        assert_eq!(m.d[0], 1.0);
        let det: f64 = m.d.iter().product();
        assert_relative_eq!(m.g * m.g, det, max_relative = 1e-13);
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let phi = av(5, &[0.7, 1.9, 2.3, 5.1]);
        let jac = embed_jacobian(&phi);
        let h = 1e-6;
        for (i, row) in jac.iter().enumerate() {
            let xp = embed(&phi.shifted(i, h));
            let xm = embed(&phi.shifted(i, -h));
            for k in 0..5 {
                let fd = (xp[k] - xm[k]) / (2.0 * h);
                assert!((fd - row[k]).abs() < 1e-9, "i={i} k={k}");
            }
        }
    }

    #[test]
    fn constant_radius_graph_element_factors() {
        let phi = av(4, &[0.9, 2.2, 3.3]);
        let v = graph_surface_element(&phi, 1.7, &[0.0; 3]).unwrap();
        assert_relative_eq!(v, 1.7f64.powi(3) * metric(&phi).g, max_relative = 1e-15);
    }

    #[test]
    fn graph_element_rejects_nonpositive_radius() {
        let phi = av(3, &[1.0, 1.0]);
        assert!(graph_surface_element(&phi, 0.0, &[0.0, 0.0]).is_err());
        assert!(graph_surface_element(&phi, -1.0, &[0.0, 0.0]).is_err());
    }

    #[test]
    fn sphere_constants() {
        assert_relative_eq!(sphere_area(1), 2.0, epsilon = 1e-15);
        assert_relative_eq!(sphere_area(2), 2.0 * PI, epsilon = 1e-14);
        assert_relative_eq!(sphere_area(3), 4.0 * PI, epsilon = 1e-14);
        assert_relative_eq!(sphere_area(4), 2.0 * PI * PI, epsilon = 1e-13);
        assert_relative_eq!(ball_volume(3), 4.0 * PI / 3.0, epsilon = 1e-14);
        assert_relative_eq!(ball_volume(5), 8.0 * PI * PI / 15.0, epsilon = 1e-13);
    }
}

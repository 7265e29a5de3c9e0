//! Domain representations: starshaped sets given by a defining function on
//! the sphere, arclength-sampled planar curves, finite unions of intervals,
//! and the half-ball / cylinder / displaced-ball family `Omega_eps`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::exec::ExecMode;
use crate::hypersphere::{self, embed, embed_jacobian, AngleVector};
use crate::quadrature::BoxRule;

/// Largest admissible amplitude of the random trigonometric family; inputs
/// above it are clamped so that `R >= 0.1 r0`.
pub const MAX_RANDOM_AMPLITUDE: f64 = 0.9;
/// Highest harmonic degree accepted by the closed-form families.
pub const MAX_DEGREE: u32 = 4;

/// Closed-form families for the defining function `R` of a starshaped set.
///
/// All families are functions of the point `x = H(phi)` of the sphere, so
/// they are smooth across the coordinate singularities of the chart.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Family {
    /// `R = r0`.
    Constant { r0: f64 },
    /// `R = r0 (1 + delta T_k(x_axis))` with `T_k` the Chebyshev polynomial,
    /// i.e. `cos(k theta)` of the angle to the coordinate axis.
    Perturbed {
        r0: f64,
        delta: f64,
        #[serde(default = "default_degree")]
        degree: u32,
        #[serde(default = "default_axis")]
        axis: usize,
    },
    /// `R = r0 (1 + a P(x))`, `P = sum_j c_j T_{k_j}(u_j . x)` with seeded
    /// random unit directions `u_j`, degrees `k_j <= degree` and
    /// `sum |c_j| = 1`.
    RandomTrig {
        #[serde(default = "default_r0")]
        r0: f64,
        seed: u64,
        #[serde(default = "default_degree")]
        degree: u32,
        amplitude: f64,
    },
}

fn default_degree() -> u32 {
    1
}
fn default_axis() -> usize {
    1
}
fn default_r0() -> f64 {
    1.0
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::Constant { .. } => "constant",
            Family::Perturbed { .. } => "perturbed",
            Family::RandomTrig { .. } => "random-trig",
        }
    }
}

/// How chart partials of `R` are obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GradMode {
    #[default]
    Analytic,
    FiniteDifference,
}

/// JSON-serializable description of a starshaped domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSpec {
    pub n: usize,
    pub shape: Family,
    #[serde(default)]
    pub gradient: GradMode,
}

impl DomainSpec {
    pub fn new(n: usize, shape: Family) -> Self {
        DomainSpec {
            n,
            shape,
            gradient: GradMode::Analytic,
        }
    }

    /// First 16 hex digits of the SHA-256 of the canonical JSON form.
    pub fn params_hash(&self) -> String {
        let json = serde_json::to_string(self).expect("domain spec serializes");
        let digest = Sha256::digest(json.as_bytes());
        hex::encode(digest)[..16].to_string()
    }
}

#[derive(Debug, Clone, PartialEq)]
struct TrigTerm {
    coeff: f64,
    dir: Vec<f64>,
    degree: u32,
}

#[derive(Debug, Clone, PartialEq)]
enum Profile {
    Constant,
    Perturbed {
        delta: f64,
        degree: u32,
        axis: usize,
    },
    Random {
        amplitude: f64,
        terms: Vec<TrigTerm>,
    },
}

/// Chebyshev `T_k(y)` and `T_k'(y)`.
fn chebyshev(k: u32, y: f64) -> (f64, f64) {
    // T via recurrence, T' = k U_{k-1}
    let (mut t0, mut t1) = (1.0, y);
    let (mut u0, mut u1) = (1.0, 2.0 * y);
    if k == 0 {
        return (1.0, 0.0);
    }
    for _ in 1..k {
        let t2 = 2.0 * y * t1 - t0;
        t0 = t1;
        t1 = t2;
        let u2 = 2.0 * y * u1 - u0;
        u0 = u1;
        u1 = u2;
    }
    (t1, k as f64 * u0)
}

/// A domain starshaped with respect to the origin.
#[derive(Debug, Clone, PartialEq)]
pub struct StarshapedDomain {
    spec: DomainSpec,
    r0: f64,
    profile: Profile,
    min_radius: f64,
    max_radius: f64,
    lipschitz: f64,
}

/// Nodes per axis of the grid used to validate positivity.
fn check_order(n: usize) -> usize {
    if n <= 3 {
        32
    } else {
        12
    }
}

/// Builds a domain from its description, verifying positivity of `R` on a
/// validation grid.
pub fn make_starshaped(spec: DomainSpec) -> Result<StarshapedDomain> {
    let n = spec.n;
    if n < 2 {
        return Err(Error::Construction(format!(
            "dimension must be >= 2, got {n}"
        )));
    }
    let (r0, profile) = match &spec.shape {
        Family::Constant { r0 } => (*r0, Profile::Constant),
        Family::Perturbed {
            r0,
            delta,
            degree,
            axis,
        } => {
            if !(delta.abs() < 1.0) {
                return Err(Error::Construction(format!(
                    "perturbation |delta| must be < 1, got {delta}"
                )));
            }
            if *degree == 0 || *degree > MAX_DEGREE {
                return Err(Error::Construction(format!(
                    "harmonic degree must be in 1..={MAX_DEGREE}, got {degree}"
                )));
            }
            if *axis == 0 || *axis > n {
                return Err(Error::Construction(format!(
                    "axis must be in 1..={n}, got {axis}"
                )));
            }
            (
                *r0,
                Profile::Perturbed {
                    delta: *delta,
                    degree: *degree,
                    axis: *axis,
                },
            )
        }
        Family::RandomTrig {
            r0,
            seed,
            degree,
            amplitude,
        } => {
            if *degree == 0 || *degree > MAX_DEGREE {
                return Err(Error::Construction(format!(
                    "degree must be in 1..={MAX_DEGREE}, got {degree}"
                )));
            }
            if !(*amplitude >= 0.0) {
                return Err(Error::Construction(format!(
                    "amplitude must be non-negative, got {amplitude}"
                )));
            }
            let amplitude = amplitude.min(MAX_RANDOM_AMPLITUDE);
            (
                *r0,
                Profile::Random {
                    amplitude,
                    terms: random_terms(n, *seed, *degree),
                },
            )
        }
    };
    if !(r0 > 0.0 && r0.is_finite()) {
        return Err(Error::Construction(format!(
            "r0 must be positive, got {r0}"
        )));
    }

    let mut dom = StarshapedDomain {
        spec,
        r0,
        profile,
        min_radius: f64::INFINITY,
        max_radius: 0.0,
        lipschitz: 0.0,
    };
    dom.scan()?;
    Ok(dom)
}

fn random_terms(n: usize, seed: u64, degree: u32) -> Vec<TrigTerm> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let count = 2 * degree as usize + 2;
    let mut terms = Vec::with_capacity(count);
    for _ in 0..count {
        // uniform direction by rejection from the cube
        let dir = loop {
            let v: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let norm = v.iter().map(|c| c * c).sum::<f64>().sqrt();
            if norm > 1e-3 && norm <= 1.0 {
                break v.into_iter().map(|c| c / norm).collect::<Vec<f64>>();
            }
        };
        let coeff: f64 = rng.random_range(-1.0..1.0);
        let degree = rng.random_range(1..=degree);
        terms.push(TrigTerm { coeff, dir, degree });
    }
    let total: f64 = terms.iter().map(|t| t.coeff.abs()).sum();
    for t in &mut terms {
        t.coeff /= total;
    }
    terms
}

impl StarshapedDomain {
    fn scan(&mut self) -> Result<()> {
        let rule = BoxRule::new(self.spec.n, check_order(self.spec.n))?;
        let mut lo = f64::INFINITY;
        let mut hi: f64 = 0.0;
        let mut lip: f64 = 0.0;
        for i in 0..rule.len() {
            let (phi, _) = rule.node(i);
            let r = self.radius(&phi);
            if !(r > 0.0) || !r.is_finite() {
                return Err(Error::Construction(format!(
                    "defining function not positive (R = {r}) at phi = {:?}",
                    phi.angles()
                )));
            }
            lo = lo.min(r);
            hi = hi.max(r);
            let m = hypersphere::metric(&phi);
            let grad = self.radius_grad(&phi);
            lip = lip.max(hypersphere::covariant_gradient_sq(&m, &grad).sqrt());
        }
        self.min_radius = lo;
        self.max_radius = hi;
        self.lipschitz = lip;
        Ok(())
    }

    pub fn spec(&self) -> &DomainSpec {
        &self.spec
    }

    pub fn dim(&self) -> usize {
        self.spec.n
    }

    pub fn family_name(&self) -> &'static str {
        self.spec.shape.name()
    }

    pub fn grad_mode(&self) -> GradMode {
        self.spec.gradient
    }

    /// Smallest and largest `R` seen on the validation grid.
    pub fn radius_bounds(&self) -> (f64, f64) {
        (self.min_radius, self.max_radius)
    }

    /// Largest covariant gradient norm of `R` on the validation grid.
    pub fn lipschitz_estimate(&self) -> f64 {
        self.lipschitz
    }

    /// True for the constant family: the centered ball of radius `r0`.
    pub fn is_centered_ball(&self) -> bool {
        matches!(self.profile, Profile::Constant)
            || matches!(self.profile, Profile::Perturbed { delta, .. } if delta == 0.0)
            || matches!(self.profile, Profile::Random { amplitude, .. } if amplitude == 0.0)
    }

    /// The same shape scaled by `lambda > 0`.
    pub fn scaled(&self, lambda: f64) -> Result<StarshapedDomain> {
        if !(lambda > 0.0) {
            return Err(Error::domain(format!(
                "scale must be positive, got {lambda}"
            )));
        }
        let mut spec = self.spec.clone();
        match &mut spec.shape {
            Family::Constant { r0 }
            | Family::Perturbed { r0, .. }
            | Family::RandomTrig { r0, .. } => *r0 *= lambda,
        }
        make_starshaped(spec)
    }

    /// Same shape with a different gradient mode.
    pub fn with_grad_mode(&self, mode: GradMode) -> StarshapedDomain {
        let mut out = self.clone();
        out.spec.gradient = mode;
        out
    }

    /// `R(x)` for a unit vector `x`.
    pub fn radius_at_point(&self, x: &[f64]) -> f64 {
        self.r0 * (1.0 + self.profile_value(x).0)
    }

    /// Euclidean gradient of the polynomial extension of `R` off the sphere.
    pub fn ambient_gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut g = self.profile_value(x).1;
        for c in &mut g {
            *c *= self.r0;
        }
        g
    }

    fn profile_value(&self, x: &[f64]) -> (f64, Vec<f64>) {
        let n = x.len();
        match &self.profile {
            Profile::Constant => (0.0, vec![0.0; n]),
            Profile::Perturbed {
                delta,
                degree,
                axis,
            } => {
                let (t, dt) = chebyshev(*degree, x[axis - 1]);
                let mut g = vec![0.0; n];
                g[axis - 1] = delta * dt;
                (delta * t, g)
            }
            Profile::Random { amplitude, terms } => {
                let mut v = 0.0;
                let mut g = vec![0.0; n];
                for term in terms {
                    let y: f64 = term.dir.iter().zip(x).map(|(u, xi)| u * xi).sum();
                    let (t, dt) = chebyshev(term.degree, y);
                    v += term.coeff * t;
                    for (gi, ui) in g.iter_mut().zip(&term.dir) {
                        *gi += amplitude * term.coeff * dt * ui;
                    }
                }
                (amplitude * v, g)
            }
        }
    }

    /// `r(phi) = R(H(phi))`.
    pub fn radius(&self, phi: &AngleVector) -> f64 {
        if self.profile == Profile::Constant {
            return self.r0;
        }
        self.radius_at_point(&embed(phi))
    }

    /// Chart partials `dr/dphi_i` according to the domain's gradient mode.
    pub fn radius_grad(&self, phi: &AngleVector) -> Vec<f64> {
        match self.spec.gradient {
            GradMode::Analytic => self.radius_grad_analytic(phi),
            GradMode::FiniteDifference => self.radius_grad_fd(phi),
        }
    }

    pub fn radius_grad_analytic(&self, phi: &AngleVector) -> Vec<f64> {
        if self.profile == Profile::Constant {
            return vec![0.0; phi.angles().len()];
        }
        let x = embed(phi);
        let grad = self.ambient_gradient(&x);
        embed_jacobian(phi)
            .iter()
            .map(|col| col.iter().zip(&grad).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// Central differences with step `1e-6 (1 + |phi_i|)`.
    pub fn radius_grad_fd(&self, phi: &AngleVector) -> Vec<f64> {
        (0..phi.angles().len())
            .map(|i| {
                let h = 1e-6 * (1.0 + phi.angles()[i].abs());
                (self.radius(&phi.shifted(i, h)) - self.radius(&phi.shifted(i, -h))) / (2.0 * h)
            })
            .collect()
    }

    /// Checks positivity of `R` on an arbitrary box grid.
    pub fn check_positive_on(&self, order: usize, mode: ExecMode) -> Result<f64> {
        let rule = BoxRule::new(self.dim(), order)?;
        let radii = crate::exec::map_indexed(rule.len(), mode, |i| self.radius(&rule.node(i).0));
        let min = radii.iter().cloned().fold(f64::INFINITY, f64::min);
        if !(min > 0.0) {
            return Err(Error::Construction(format!(
                "defining function not positive on order-{order} grid (min {min})"
            )));
        }
        Ok(min)
    }
}

/// One arclength sample of a planar curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurveSample {
    pub t: f64,
    pub pos: [f64; 2],
    pub vel: [f64; 2],
    pub acc: [f64; 2],
}

impl CurveSample {
    pub fn radius(&self) -> f64 {
        self.pos[0].hypot(self.pos[1])
    }

    /// Outward normal `(gamma_2', -gamma_1')`.
    pub fn normal(&self) -> [f64; 2] {
        [self.vel[1], -self.vel[0]]
    }

    /// `<gamma', nu'>` with `nu' = (gamma_2'', -gamma_1'')`.
    pub fn curvature(&self) -> f64 {
        self.vel[0] * self.acc[1] - self.vel[1] * self.acc[0]
    }
}

/// Unit-speed tolerance for curve samples.
pub const UNIT_SPEED_TOL: f64 = 1e-8;
/// Gap allowed between the first and last sample of a closed curve.
pub const CLOSURE_TOL: f64 = 1e-8;

/// Unit-speed curve sampled at equally spaced arclength values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanarCurve {
    samples: Vec<CurveSample>,
    closed: bool,
    p: f64,
}

impl PlanarCurve {
    pub fn new(samples: Vec<CurveSample>, closed: bool, p: f64) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::Construction(
                "curve needs at least two samples".into(),
            ));
        }
        for s in &samples {
            let speed = s.vel[0].hypot(s.vel[1]);
            if (speed - 1.0).abs() > UNIT_SPEED_TOL {
                return Err(Error::Construction(format!(
                    "curve not unit speed at t = {}: |gamma'| = {speed}",
                    s.t
                )));
            }
        }
        if closed {
            let a = samples[0].pos;
            let b = samples[samples.len() - 1].pos;
            let gap = (a[0] - b[0]).hypot(a[1] - b[1]);
            if gap > CLOSURE_TOL {
                return Err(Error::Construction(format!("curve not closed: gap {gap}")));
            }
        }
        Ok(PlanarCurve { samples, closed, p })
    }

    pub fn samples(&self) -> &[CurveSample] {
        &self.samples
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    pub fn exponent(&self) -> f64 {
        self.p
    }

    /// Parameter length `t_last - t_first`.
    pub fn length(&self) -> f64 {
        self.samples[self.samples.len() - 1].t - self.samples[0].t
    }

    /// Uniform sample spacing.
    pub fn spacing(&self) -> f64 {
        self.length() / (self.samples.len() - 1) as f64
    }

    pub fn min_radius(&self) -> f64 {
        self.samples
            .iter()
            .map(CurveSample::radius)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn max_radius(&self) -> f64 {
        self.samples
            .iter()
            .map(CurveSample::radius)
            .fold(0.0, f64::max)
    }
}

/// Counter-clockwise circle `center + r (cos(t/r), sin(t/r))`, `t in [0, 2 pi r]`,
/// with `samples` intervals. The last sample repeats the first.
pub fn ball_curve(radius: f64, center: [f64; 2], samples: usize) -> Result<PlanarCurve> {
    if !(radius > 0.0) {
        return Err(Error::domain(format!(
            "radius must be positive, got {radius}"
        )));
    }
    if samples < 16 {
        return Err(Error::domain(format!(
            "need at least 16 samples, got {samples}"
        )));
    }
    let length = 2.0 * std::f64::consts::PI * radius;
    let pts = (0..=samples)
        .map(|i| {
            // exact wrap so the closure gap is zero
            let u = if i == samples {
                0.0
            } else {
                2.0 * std::f64::consts::PI * i as f64 / samples as f64
            };
            let t = length * i as f64 / samples as f64;
            let (s, c) = u.sin_cos();
            CurveSample {
                t,
                pos: [center[0] + radius * c, center[1] + radius * s],
                vel: [-s, c],
                acc: [-c / radius, -s / radius],
            }
        })
        .collect();
    PlanarCurve::new(pts, true, 0.0)
}

impl PlanarCurve {
    /// Same samples carrying a different density exponent.
    pub fn with_exponent(mut self, p: f64) -> Self {
        self.p = p;
        self
    }
}

/// Finite union of open intervals with pairwise disjoint closures.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalUnion {
    intervals: Vec<(f64, f64)>,
}

impl IntervalUnion {
    pub fn new(intervals: Vec<(f64, f64)>) -> Result<Self> {
        if intervals.is_empty() {
            return Err(Error::Construction("interval union is empty".into()));
        }
        for (i, &(a, b)) in intervals.iter().enumerate() {
            if !(a < b) || !a.is_finite() || !b.is_finite() {
                return Err(Error::Construction(format!(
                    "interval {i} = ({a}, {b}) is empty"
                )));
            }
            if i > 0 && !(intervals[i - 1].1 < a) {
                return Err(Error::Construction(format!(
                    "intervals {} and {i} overlap or touch",
                    i - 1
                )));
            }
        }
        Ok(IntervalUnion { intervals })
    }

    pub fn intervals(&self) -> &[(f64, f64)] {
        &self.intervals
    }

    pub fn endpoints(&self) -> impl Iterator<Item = f64> + '_ {
        self.intervals.iter().flat_map(|&(a, b)| [a, b])
    }

    pub fn length(&self) -> f64 {
        self.intervals.iter().map(|(a, b)| b - a).sum()
    }

    pub fn contains_origin(&self) -> bool {
        self.intervals.iter().any(|&(a, b)| a < 0.0 && 0.0 < b)
    }
}

/// One of the three pieces of `Omega_eps`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "piece", rename_all = "kebab-case")]
pub enum Piece {
    /// `{x in B_{radius} : x_1 <= 0}`.
    HalfBall { radius: f64 },
    /// `(0, length) x B^{n-1}_{radius}`.
    Cylinder { length: f64, radius: f64 },
    /// `{|x - (center, 0)| < radius, x_1 >= cut}`.
    CutBall { center: f64, radius: f64, cut: f64 },
}

/// A flat disk `{x_1 = position, |x'| < radius}` shared by two pieces; it is
/// interior to `Omega_eps` and not part of its boundary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InterfaceDisk {
    pub position: f64,
    pub radius: f64,
}

/// The family `Omega_eps = A_eps u M_eps u D_eps` for `n >= 3`, `-n+1 < p < 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CompositeCounterexample {
    pub n: usize,
    pub p: f64,
    pub radius: f64,
    pub eps: f64,
    pub c_eps: f64,
}

/// Validates the regime and computes `c_eps = sqrt(R^2 - eps^4) + eps^{-n+1}`.
pub fn counterexample_domain(
    n: usize,
    p: f64,
    radius: f64,
    eps: f64,
) -> Result<CompositeCounterexample> {
    if n < 3 {
        return Err(Error::domain(format!(
            "counterexample needs n >= 3, got n = {n}"
        )));
    }
    if !(p < 0.0) {
        return Err(Error::domain(format!(
            "counterexample needs p < 0, got p = {p}"
        )));
    }
    if !(n as f64 + p - 1.0 > 0.0) {
        return Err(Error::domain(format!(
            "counterexample needs p > -n + 1 = {}, got p = {p}",
            1.0 - n as f64
        )));
    }
    if !(radius > 0.0) {
        return Err(Error::domain(format!(
            "ball radius must be positive, got {radius}"
        )));
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::domain(format!("eps must lie in (0, 1), got {eps}")));
    }
    let eps4 = eps.powi(4);
    if !(eps4 < radius * radius) {
        return Err(Error::domain(format!(
            "eps^4 = {eps4} must be < R^2 = {} for c_eps to be real",
            radius * radius
        )));
    }
    let c_eps = (radius * radius - eps4).sqrt() + eps.powi(1 - n as i32);
    Ok(CompositeCounterexample {
        n,
        p,
        radius,
        eps,
        c_eps,
    })
}

impl CompositeCounterexample {
    /// Cylinder length `eps^{-n+1}`.
    pub fn neck_length(&self) -> f64 {
        self.eps.powi(1 - self.n as i32)
    }

    /// Cylinder and half-ball radius `eps^2`.
    pub fn neck_radius(&self) -> f64 {
        self.eps * self.eps
    }

    pub fn pieces(&self) -> [Piece; 3] {
        [
            Piece::HalfBall {
                radius: self.neck_radius(),
            },
            Piece::Cylinder {
                length: self.neck_length(),
                radius: self.neck_radius(),
            },
            Piece::CutBall {
                center: self.c_eps,
                radius: self.radius,
                cut: self.neck_length(),
            },
        ]
    }

    pub fn interfaces(&self) -> [InterfaceDisk; 2] {
        [
            InterfaceDisk {
                position: 0.0,
                radius: self.neck_radius(),
            },
            InterfaceDisk {
                position: self.neck_length(),
                radius: self.neck_radius(),
            },
        ]
    }

    /// Radius of the section of the displaced sphere at the cut plane.
    pub fn cut_section_radius(&self) -> f64 {
        let h = self.c_eps - self.neck_length();
        (self.radius * self.radius - h * h).max(0.0).sqrt()
    }
}

//! Cross-checks of library quantities against independently computed values.

use std::f64::consts::PI;

use approx::assert_relative_eq;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use isolab_core::domains::{
    ball_curve, counterexample_domain, make_starshaped, DomainSpec, Family, GradMode,
};
use isolab_core::hypersphere::{sphere_area, AngleVector};
use isolab_core::measures::{
    counterexample_measures, starshaped_report, volume_starshaped, weighted_perimeter_curve,
    weighted_perimeter_starshaped, Power, QuadSettings,
};
use isolab_core::quadrature::{integrate_box_with, BoxRule};
use isolab_core::variation::translated_ball_perimeter;
use isolab_core::verifier::volume_routes;
use isolab_core::ExecMode;

fn seven() -> DomainSpec {
    DomainSpec::new(
        3,
        Family::RandomTrig {
            r0: 1.0,
            seed: 7,
            degree: 3,
            amplitude: 0.3,
        },
    )
}

#[test]
fn sphere_area_matches_integral_of_g() {
    let table = [
        (2, 2.0 * PI),
        (3, 4.0 * PI),
        (4, 2.0 * PI * PI),
        (5, 8.0 * PI * PI / 3.0),
        (6, PI.powi(3)),
    ];
    for (n, want) in table {
        let order = if n <= 4 { 32 } else { 12 };
        let rule = BoxRule::new(n, order).unwrap();
        let (got, _) = rule
            .sum(
                &|phi: &AngleVector| isolab_core::hypersphere::surface_element(phi),
                ExecMode::Sequential,
            )
            .unwrap();
        assert_relative_eq!(got, want, max_relative = 1e-10);
        assert_relative_eq!(sphere_area(n), want, max_relative = 1e-14);
    }
}

#[test]
fn monte_carlo_volume_of_random_domain() {
    let dom = make_starshaped(seven()).unwrap();
    let (_, rmax) = dom.radius_bounds();
    let b = rmax * 1.05;
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let samples = 400_000;
    let mut inside = 0usize;
    for _ in 0..samples {
        let x: Vec<f64> = (0..3).map(|_| rng.random_range(-b..b)).collect();
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        let u: Vec<f64> = x.iter().map(|v| v / norm).collect();
        if norm < dom.radius_at_point(&u) {
            inside += 1;
        }
    }
    let frac = inside as f64 / samples as f64;
    let cube = (2.0 * b).powi(3);
    let mc = frac * cube;
    let sigma = cube * (frac * (1.0 - frac) / samples as f64).sqrt();
    let vol = volume_starshaped(&dom, QuadSettings::for_dim(3)).unwrap();
    assert!(
        (vol.value - mc).abs() < 4.0 * sigma,
        "quadrature {} vs MC {mc} +- {sigma}",
        vol.value
    );
}

#[test]
fn volume_routes_agree() {
    let dom = make_starshaped(seven()).unwrap();
    let (a, b) = volume_routes(&dom, QuadSettings::for_dim(3)).unwrap();
    assert_relative_eq!(a.value, b.value, max_relative = 1e-10);
}

#[test]
fn gradient_modes_agree() {
    let dom = make_starshaped(seven()).unwrap();
    let fd = dom.with_grad_mode(GradMode::FiniteDifference);
    let q = QuadSettings::for_dim(3).with_order(24);
    let a = weighted_perimeter_starshaped(&dom, &Power::new(0.5), q).unwrap();
    let b = weighted_perimeter_starshaped(&fd, &Power::new(0.5), q).unwrap();
    assert_relative_eq!(a.value, b.value, max_relative = 1e-7);
}

#[test]
fn perturbed_ball_holds_with_margin() {
    for p in [-2.5, 0.5, 1.0, 2.0] {
        let spec = DomainSpec::new(
            3,
            Family::Perturbed {
                r0: 1.0,
                delta: 0.2,
                degree: 2,
                axis: 3,
            },
        );
        let dom = make_starshaped(spec).unwrap();
        let rep = starshaped_report(&dom, p, QuadSettings::for_dim(3)).unwrap();
        assert!(rep.holds(), "p={p}: {rep:?}");
        assert!(rep.ratio > 1.0 + 1e-4, "p={p}: {rep:?}");
    }
}

#[test]
fn shifted_circle_perimeter_closed_form() {
    // int |c + r e(theta)|^2 r dtheta = 2 pi r (|c|^2 + r^2)
    let (r, c) = (0.7, [0.4, -0.3]);
    let curve = ball_curve(r, c, 256).unwrap();
    let want = 2.0 * PI * r * (0.25 + r * r);
    assert_relative_eq!(
        weighted_perimeter_curve(&curve, 2.0).unwrap(),
        want,
        max_relative = 1e-13
    );
}

#[test]
fn circle_perimeter_against_polyline() {
    let (r, c, p) = (1.0, [0.3, 0.1], -0.5);
    let curve = ball_curve(r, c, 512).unwrap();
    let m = 200_000;
    let mut poly = 0.0;
    for i in 0..m {
        let (t0, t1) = (
            2.0 * PI * i as f64 / m as f64,
            2.0 * PI * (i + 1) as f64 / m as f64,
        );
        let a = [c[0] + r * t0.cos(), c[1] + r * t0.sin()];
        let b = [c[0] + r * t1.cos(), c[1] + r * t1.sin()];
        let mid = [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])];
        let len = ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt();
        poly += (mid[0] * mid[0] + mid[1] * mid[1]).sqrt().powf(p) * len;
    }
    assert_relative_eq!(
        weighted_perimeter_curve(&curve, p).unwrap(),
        poly,
        max_relative = 1e-8
    );
}

#[test]
fn translated_ball_perimeter_is_constant_for_critical_exponent() {
    let q = QuadSettings::for_dim(3);
    for s in [0.0, 0.1, 0.3, 0.6] {
        let per = translated_ball_perimeter(3, -1.0, 1.0, s, q).unwrap();
        assert_relative_eq!(per.value, 4.0 * PI, max_relative = 1e-9);
    }
}

#[test]
fn translated_ball_perimeter_p2_closed_form() {
    // int_{|y|=r} |y + s e|^2 = omega r^{n-1} (r^2 + s^2)
    for n in [3, 4] {
        let (r, s) = (0.8, 0.35);
        let per = translated_ball_perimeter(n, 2.0, r, s, QuadSettings::for_dim(n)).unwrap();
        let want = sphere_area(n) * r.powi(n as i32 - 1) * (r * r + s * s);
        assert_relative_eq!(per.value, want, max_relative = 1e-11);
    }
}

#[test]
fn counterexample_volume_pieces() {
    let ce = counterexample_domain(3, -1.0, 1.0, 0.1).unwrap();
    assert_relative_eq!(
        ce.c_eps,
        (1.0f64 - 1e-4).sqrt() + 100.0,
        max_relative = 1e-15
    );
    assert!((ce.c_eps - 100.99995).abs() < 5e-6);
    let m = counterexample_measures(&ce).unwrap();
    // half ball and cylinder, both of radius eps^2; cylinder length eps^{1-n}
    let e2 = 0.01f64;
    assert_relative_eq!(
        m.pieces.volume_half_ball,
        2.0 * PI / 3.0 * e2.powi(3),
        max_relative = 1e-12
    );
    assert_relative_eq!(
        m.pieces.volume_cylinder,
        PI * e2 * e2 * 100.0,
        max_relative = 1e-10
    );
    assert_relative_eq!(m.volume.value, 4.0 * PI / 3.0, max_relative = 0.02);
}

#[test]
fn execution_modes_are_bitwise_equal() {
    let dom = make_starshaped(seven()).unwrap();
    let f = |phi: &AngleVector| {
        dom.radius(phi).powi(3) * isolab_core::hypersphere::surface_element(phi)
    };
    let a = integrate_box_with(f, 3, 48, ExecMode::Auto).unwrap();
    let b = integrate_box_with(f, 3, 48, ExecMode::Sequential).unwrap();
    assert_eq!(a.value.to_bits(), b.value.to_bits());
    assert_eq!(a.error.to_bits(), b.error.to_bits());
}

#[test]
fn spec_json_round_trip_and_hash() {
    let json = r#"{"n":3,"gradient":"analytic","shape":{"family":"random-trig","seed":7,"degree":3,"amplitude":0.3}}"#;
    let spec: DomainSpec = serde_json::from_str(json).unwrap();
    assert_eq!(spec, seven());
    assert_eq!(spec.params_hash(), seven().params_hash());
    assert_eq!(spec.params_hash().len(), 16);
    let other = DomainSpec::new(
        3,
        Family::RandomTrig {
            r0: 1.0,
            seed: 8,
            degree: 3,
            amplitude: 0.3,
        },
    );
    assert_ne!(spec.params_hash(), other.params_hash());
    let bad = r#"{"n":3,"shape":{"family":"constant","r0":1.0,"colour":"red"}}"#;
    assert!(serde_json::from_str::<DomainSpec>(bad).is_err());
}

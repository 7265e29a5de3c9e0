use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use isolab_core::domains::{make_starshaped, DomainSpec, Family};
use isolab_core::hypersphere::{surface_element, AngleVector};
use isolab_core::measures::{starshaped_report, QuadSettings};
use isolab_core::quadrature::integrate_box_with;
use isolab_core::ExecMode;

const MODES: [(&str, ExecMode); 2] = [
    ("parallel", ExecMode::Auto),
    ("sequential", ExecMode::Sequential),
];

fn box_integral(c: &mut Criterion) {
    let spec = DomainSpec::new(
        4,
        Family::RandomTrig {
            r0: 1.0,
            seed: 7,
            degree: 3,
            amplitude: 0.3,
        },
    );
    let dom = make_starshaped(spec).unwrap();
    let mut group = c.benchmark_group("integrate_box_n4_order24");
    for (name, mode) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| {
                integrate_box_with(
                    |phi: &AngleVector| dom.radius(phi).powi(4) * surface_element(phi),
                    4,
                    black_box(24),
                    mode,
                )
                .unwrap()
            })
        });
    }
    group.finish();
}

fn ball_check(c: &mut Criterion) {
    let ps: Vec<f64> = (0..9).map(|i| -3.0 + 0.75 * i as f64).collect();
    let spec = DomainSpec::new(
        3,
        Family::Perturbed {
            r0: 1.0,
            delta: 0.1,
            degree: 2,
            axis: 1,
        },
    );
    let dom = make_starshaped(spec).unwrap();
    let mut group = c.benchmark_group("sweep_n3_9p");
    group.sample_size(10);
    for (name, mode) in MODES {
        let q = QuadSettings::for_dim(3).with_mode(mode);
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| {
                ps.iter()
                    .map(|&p| starshaped_report(&dom, p, q).unwrap().ratio)
                    .sum::<f64>()
            })
        });
    }
    group.finish();
}

criterion_group!(benches, box_integral, ball_check);
criterion_main!(benches);

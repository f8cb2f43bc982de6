use cauchy_core::basis::make_numeric_basis;
use cauchy_core::geometry::{
    boundary_rule, disc_rule, domain_rule, make_domain, AreaResolution, BoundaryPart, DomainConfig, GammaDescriptor,
    Side,
};
use cauchy_core::oracle::manufactured_case;
use cauchy_core::potentials::{cauchy_integral, volume_integral, Density};
use cauchy_core::scalar::{f256, C};
use cauchy_core::solver::{Pipeline, PipelineSettings};
use criterion::{black_box, criterion_group, criterion_main, Criterion};

fn lens() -> DomainConfig {
    DomainConfig {
        omega_radius: 1.0,
        gamma: GammaDescriptor::Chord { offset: 0.3 },
        side: Side::Right,
        test_ball_radius: Some(0.15),
        margin: None,
    }
}

fn quadrature(c: &mut Criterion) {
    let spec = make_domain::<f64>(&lens()).unwrap();
    c.bench_function("domain_rule default", |b| b.iter(|| domain_rule(&spec, AreaResolution::default()).unwrap()));
    let rule = domain_rule(&spec, AreaResolution::default()).unwrap();
    let ones = vec![C::new(1.0, 0.0); rule.len()];
    let z = C::new(0.6, 0.1);
    c.bench_function("volume integral, target in D", |b| {
        b.iter(|| volume_integral(&rule, Density::Samples(&ones), black_box(z)))
    });
    let gamma = boundary_rule(&spec, BoundaryPart::Gamma, 32, 40);
    let trace: Vec<C<f64>> = gamma.nodes.iter().map(|z| z * z).collect();
    c.bench_function("cauchy integral on Gamma, 1280 nodes", |b| {
        b.iter(|| cauchy_integral(&spec, &gamma, &trace, black_box(z)))
    });
}

fn extended(c: &mut Criterion) {
    let mut g = c.benchmark_group("f256");
    g.sample_size(10);
    let zero = C::new(f256::from(0.0), f256::from(0.0));
    let big = disc_rule(zero, f256::from(1.0), 16, 40);
    let small = disc_rule(zero, f256::from(0.15), 16, 40);
    g.bench_function("numeric basis, degree 15", |b| {
        b.iter(|| make_numeric_basis(&big, &small, f256::from(1.0), 15).unwrap())
    });
    let case = manufactured_case("POLE_OUTSIDE(2)").unwrap();
    let st = PipelineSettings { n: 20, ..PipelineSettings::default() };
    let p = Pipeline::<f256>::new(&lens(), &st, &case).unwrap();
    g.bench_function("coefficients N = 20", |b| b.iter(|| p.coefficients(20).unwrap()));
    g.finish();
}

criterion_group!(benches, quadrature, extended);
criterion_main!(benches);

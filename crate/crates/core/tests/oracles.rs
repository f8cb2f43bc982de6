use cauchy_core::basis::{analytic_basis, harmonic_count, MonomialFamily};
use cauchy_core::geometry::{
    disc_rule, domain_rule, make_domain, AreaResolution, DomainConfig, DomainSpec, GammaDescriptor, Side,
};
use cauchy_core::oracle::*;
use cauchy_core::potentials::volume_potential_t;
use cauchy_core::scalar::{f256, C};
use cauchy_core::solver::coefficients_from_samples;

const CHORD_LENS_AREA: f64 = 0.9799219123544155;
const ARC_LENS_AREA: f64 = 0.6094989725092569;

fn lens(gamma: GammaDescriptor) -> DomainSpec<f64> {
    make_domain(&DomainConfig { omega_radius: 1.0, gamma, side: Side::Right, test_ball_radius: Some(0.15), margin: None })
        .unwrap()
}

#[test]
fn counting_function_against_binomials() {
    for d in [2usize, 4] {
        for nu in 0..=6usize {
            assert_eq!(harmonic_count(d, nu).unwrap().count as u128, harmonic_count_oracle(d as u64, nu as u64));
        }
    }
    assert_eq!(harmonic_count(4, 6).unwrap().count, 49);
}

#[test]
fn lens_areas() {
    let chord = GammaDescriptor::Chord { offset: 0.3 };
    let arc = GammaDescriptor::Arc { center: 0.9, radius: 0.6 };
    assert!((lens_area(1.0, chord) - CHORD_LENS_AREA).abs() < 1e-15);
    assert!((lens_area(1.0, arc) - ARC_LENS_AREA).abs() < 1e-15);
    for (g, exact) in [(chord, CHORD_LENS_AREA), (arc, ARC_LENS_AREA)] {
        let d = lens(g);
        let rule = domain_rule(&d, AreaResolution::default()).unwrap();
        let total: f64 = rule.weights.iter().sum();
        assert!((total - exact).abs() < 1e-12, "{g:?}: {total}");
        let qmc = halton_area(|z| d.contains(z), d.bounding_box(), 100_000);
        assert!((qmc - exact).abs() < 2e-3, "{g:?}: {qmc}");
    }
}

#[test]
fn pole_coefficients_from_test_ball_samples() {
    let a = C::new(f256::from(2.0), f256::from(0.0));
    let basis = analytic_basis(f256::from(1.0), f256::from(0.15), 30, MonomialFamily::Holomorphic);
    let rule = disc_rule(C::new(f256::from(0.0), f256::from(0.0)), f256::from(0.15), 24, 72);
    let values: Vec<C<f256>> = rule.nodes.iter().map(|z| (*z - a).inv()).collect();
    let series = coefficients_from_samples(&values, &basis, &rule, 30).unwrap().convert::<f64>();
    for (nu, (c, e)) in series.coefficients.iter().zip(pole_coefficients(C::new(2.0, 0.0), 1.0, 30)).enumerate() {
        assert!((c - e).norm() <= 1e-9 * e.norm(), "nu={}: {c} vs {e}", nu + 1);
    }
}

#[test]
fn volume_potential_of_disc_indicator() {
    let d = make_domain(&DomainConfig {
        omega_radius: 1.0,
        gamma: GammaDescriptor::Chord { offset: -0.3 },
        side: Side::Left,
        test_ball_radius: Some(0.15),
        margin: None,
    })
    .unwrap();
    let rho = 0.2;
    let rule = disc_rule(C::new(-0.5, 0.0), rho, 12, 32);
    let ones = vec![C::new(1.0, 0.0); rule.len()];
    for z in [C::new(-0.5, 0.6), C::new(0.1, 0.0), C::new(-0.9, -0.3)] {
        let t = volume_potential_t(&d, &ones, &rule, z).unwrap();
        let exact = (z - C::new(-0.5, 0.0)).inv() * (rho * rho);
        assert!((t - exact).norm() < 1e-13, "{z}: {t} vs {exact}");
    }
}

#[test]
fn finite_difference_refinement() {
    let f = |z: C<f64>| C::new((2.0 * z.re).sin() * z.im.exp(), 0.0);
    let lap = |z: C<f64>| -3.0 * (2.0 * z.re).sin() * z.im.exp();
    let st = refinement_study(
        |l| {
            let n = 8 << l;
            let h = 1.0 / (n - 1) as f64;
            let s = GridSamples::sample(0.0, 0.0, h, n, n, f);
            let out = fd_operator(&s, FdOperator::Laplacian).unwrap();
            let mut err: f64 = 0.0;
            for j in 0..out.ny {
                for i in 0..out.nx {
                    err = err.max((out.at(i, j).re - lap(out.point(i, j))).abs());
                }
            }
            (h, err)
        },
        &[1, 2, 3, 4],
    )
    .unwrap();
    assert!((st.order - 2.0).abs() < 0.1, "{st:?}");
    assert!(!st.non_monotone);
}

#[test]
fn polynomial_fit_on_chord_and_arc() {
    for (g, z0) in [
        (GammaDescriptor::Chord { offset: 0.3 }, C::new(0.6, 0.0)),
        (GammaDescriptor::Arc { center: 0.9, radius: 0.6 }, C::new(0.7, 0.0)),
    ] {
        let d = lens(g);
        let pts: Vec<C<f64>> = (0..400).map(|k| d.curve_point(cauchy_core::geometry::Curve::Gamma, -0.999 + 1.998 * k as f64 / 399.0)).collect();
        let data: Vec<C<f64>> = pts.iter().map(|z| z.conj()).collect();
        let fit = polynomial_fit(&pts, &data, 12, &[z0]);
        match g {
            GammaDescriptor::Chord { offset } => {
                assert!(fit.residual < 1e-12);
                assert!((fit.max_at_probes - (C::new(2.0 * offset, 0.0) - z0).norm()).abs() < 1e-9);
            }
            GammaDescriptor::Arc { .. } => {
                let fit40 = polynomial_fit(&pts, &data, 40, &[z0]);
                assert!(fit40.residual < fit.residual);
                assert!(fit40.max_at_probes > fit.max_at_probes, "{fit:?} {fit40:?}");
            }
        }
    }
}

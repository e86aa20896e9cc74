use num_bigint::BigInt;
use num_rational::BigRational;
use proptest::prelude::*;

use semiclass::moments::{moment_series, multinomial_reduce_exact, quadrature_oracle, MomentumDensity};
use semiclass::symbols::{c, helmholtz_lenslike, k, x, DispersionSymbol, MediumParameters, PhaseFunction};

fn medium() -> MediumParameters {
    MediumParameters::new(400.0, 1.0, 1.0).unwrap()
}

fn lossless(name: &str, expr: semiclass::symbols::Expr) -> DispersionSymbol {
    DispersionSymbol::lossless(name, 0, PhaseFunction::from_expr(2, expr).unwrap(), medium().scales())
}

proptest! {
    #[test]
    fn multinomial_reduction_is_exact(
        parts in prop::collection::vec((-20i64..20, 1i64..12), 1..=3),
        n in 0u32..=6,
    ) {
        let a: Vec<BigRational> = parts
            .iter()
            .map(|&(p, q)| BigRational::new(BigInt::from(p), BigInt::from(q)))
            .collect();
        let (lhs, rhs) = multinomial_reduce_exact(&a, n);
        prop_assert_eq!(lhs, rhs);
    }

    /// For symbols polynomial in `k` the moment series is the Gaussian
    /// average exactly once it reaches the product's degree.
    #[test]
    fn series_matches_quadrature_for_polynomials(
        spread in 0.02f64..0.3,
        a2 in -2.0f64..2.0,
        a1 in -2.0f64..2.0,
        xpos in -0.3f64..0.3,
    ) {
        let m = medium();
        let d = helmholtz_lenslike(&m);
        let a = lossless("a", k(0) * k(0) * a2 + k(0) * k(1) * a1 + x(0) + c(1.0));
        let density = MomentumDensity::gaussian(2, spread * m.k0, 8.0, 161).unwrap();
        let table = density.moments(4);
        let (xs, kc) = ([xpos, 0.0], [0.1 * m.k0, 0.9 * m.k0]);
        let series = moment_series(&d, &a, &table, &xs, &kc, 4).unwrap().value;
        let exact = quadrature_oracle(&density, &d, &a, &xs, &kc).unwrap();
        let scale = m.k0.powi(4) * (1.0 + a2.abs() + a1.abs());
        prop_assert!((series - exact).abs() <= 1e-8 * scale, "{series} vs {exact}");
    }
}

/// `∫ ∂f/∂k̃ · A = −∫ f · ∂A/∂k̃` for the Gaussian density, in each direction.
#[test]
fn quadrature_integrates_by_parts() {
    let m = medium();
    let sigma = 0.1 * m.k0;
    let density = MomentumDensity::gaussian(2, sigma, 8.0, 161).unwrap();
    let a = lossless(
        "a",
        (k(0) * (0.7 / m.k0)).sin() * k(1) + k(0) * k(0) * k(1) * (1.0 / m.k0),
    );
    let (xs, kc) = ([0.1, 0.0], [0.2 * m.k0, m.k0]);
    let shifted = |kt: &[f64]| [kc[0] + kt[0], kc[1] + kt[1]];
    for dir in 0..2 {
        let lhs = density.integrate(|kt| -kt[dir] / (sigma * sigma) * a.real.value(&xs, &shifted(kt)));
        let rhs = -density.integrate(|kt| a.real.derivatives(&xs, &shifted(kt), 1).unwrap().grad_k[dir]);
        let scale = density.integrate(|kt| a.real.value(&xs, &shifted(kt)).abs()) / sigma;
        assert!((lhs - rhs).abs() <= 1e-8 * scale, "direction {dir}: {lhs} vs {rhs}");
    }
}

/// The second-order truncation error of `kz − k0 cos(kx/k0)` falls by
/// sixteen per halving of the spread.
#[test]
fn truncation_error_scales_with_fourth_power_of_spread() {
    let m = medium();
    let d = lossless("cos", k(1) - (k(0) * (1.0 / m.k0)).cos() * m.k0);
    let one = lossless("one", c(1.0));
    let error = |spread: f64| {
        let density = MomentumDensity::gaussian(2, spread * m.k0, 8.0, 161).unwrap();
        let table = density.moments(2);
        let (xs, kc) = ([0.0, 0.0], [0.0, m.k0]);
        let series = moment_series(&d, &one, &table, &xs, &kc, 2).unwrap().value;
        (series - quadrature_oracle(&density, &d, &one, &xs, &kc).unwrap()).abs()
    };
    let errs: Vec<f64> = [0.2, 0.1, 0.05].iter().map(|&s| error(s)).collect();
    for w in errs.windows(2) {
        let ratio = w[0] / w[1];
        assert!((ratio / 16.0 - 1.0).abs() < 0.03, "ratio {ratio} from {errs:?}");
    }
}

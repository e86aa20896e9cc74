use proptest::prelude::*;

use semiclass::symbols::{c, k, poisson_bracket, x, Expr, PhaseFunction};

/// Quadratic in `(x, k)` on two dimensions with the given ten coefficients.
fn quadratic(coef: &[f64]) -> Expr {
    let vars = [x(0), x(1), k(0), k(1)];
    let mut e = c(coef[0]);
    for (v, a) in vars.iter().zip(&coef[1..5]) {
        e = e + v.clone() * *a;
    }
    let mut n = 5;
    for i in 0..4 {
        for j in i..4 {
            if n < coef.len() {
                e = e + vars[i].clone() * vars[j].clone() * coef[n];
            }
            n += 1;
        }
    }
    e
}

fn phase(coef: &[f64]) -> PhaseFunction {
    PhaseFunction::from_expr(2, quadratic(coef)).unwrap()
}

fn coefs() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-3.0f64..3.0, 15)
}

fn point() -> impl Strategy<Value = ([f64; 2], [f64; 2])> {
    ((-2.0f64..2.0, -2.0f64..2.0), (-2.0f64..2.0, -2.0f64..2.0)).prop_map(|(a, b)| ([a.0, a.1], [b.0, b.1]))
}

proptest! {
    #[test]
    fn bracket_is_antisymmetric(f in coefs(), g in coefs(), (xs, ks) in point()) {
        let (f, g) = (phase(&f), phase(&g));
        let fg = poisson_bracket(&f, &g, &xs, &ks);
        let gf = poisson_bracket(&g, &f, &xs, &ks);
        prop_assert!((fg + gf).abs() <= 1e-10 * (1.0 + fg.abs()));
    }

    #[test]
    fn bracket_is_bilinear(
        f in coefs(), h in coefs(), g in coefs(),
        a in -2.0f64..2.0, b in -2.0f64..2.0,
        (xs, ks) in point(),
    ) {
        let combo: Vec<f64> = f.iter().zip(&h).map(|(p, q)| a * p + b * q).collect();
        let lhs = poisson_bracket(&phase(&combo), &phase(&g), &xs, &ks);
        let rhs = a * poisson_bracket(&phase(&f), &phase(&g), &xs, &ks)
            + b * poisson_bracket(&phase(&h), &phase(&g), &xs, &ks);
        prop_assert!((lhs - rhs).abs() <= 1e-9 * (1.0 + lhs.abs()));
    }

    #[test]
    fn opaque_gradient_matches_analytic(f in coefs(), (xs, ks) in point()) {
        let expr = quadratic(&f);
        let analytic = PhaseFunction::from_expr(2, expr.clone()).unwrap();
        let opaque = PhaseFunction::opaque(2, 1.0, move |xv: &[f64], kv: &[f64]| expr.eval(xv, kv));
        let a = analytic.derivatives(&xs, &ks, 2).unwrap();
        let o = opaque.derivatives(&xs, &ks, 2).unwrap();
        for i in 0..2 {
            prop_assert!((a.grad_x[i] - o.grad_x[i]).abs() <= 1e-6 * (1.0 + a.grad_x[i].abs()));
            prop_assert!((a.grad_k[i] - o.grad_k[i]).abs() <= 1e-6 * (1.0 + a.grad_k[i].abs()));
            for j in 0..2 {
                prop_assert!((a.hess_kk[i][j] - o.hess_kk[i][j]).abs() <= 1e-3 * (1.0 + a.hess_kk[i][j].abs()));
            }
        }
    }
}

/// Halving the finite-difference step cuts the second-derivative error by four.
#[test]
fn finite_differences_are_second_order() {
    let ell = 0.3;
    let exact = |xv: f64| -(xv / ell).sin() / (ell * ell);
    let error = |length: f64| {
        let f = PhaseFunction::opaque(1, length, move |xv: &[f64], kv: &[f64]| (xv[0] / ell).sin() + kv[0]);
        let d = f.derivatives(&[0.4], &[1.0], 2).unwrap();
        (d.hess_xx[0][0] - exact(0.4)).abs()
    };
    let (coarse, fine) = (error(200.0 * ell), error(100.0 * ell));
    let order = (coarse / fine).log2();
    assert!((order - 2.0).abs() < 0.05, "order {order} from {coarse:e}, {fine:e}");
}

use conley_lab::genfun::{hamiltonian_from_gf, GeneratingFunction, GfHamiltonian, LambdaProfile};
use conley_lab::hamiltonian::ExprHamiltonian;
use conley_lab::homology::relative_autonomy_check;
use conley_lab::symplectic::SymplecticFrame;
use nalgebra::DVector;
use proptest::prelude::*;
use std::sync::Arc;

fn bump_gf(scale: f64, chart: f64) -> GeneratingFunction {
    let src = format!("{scale} * (-(x^2 + y^2) + 1.3*x^3 + 0.7*(x^2 + y^2)^2)");
    GeneratingFunction::analytic(Arc::new(ExprHamiltonian::parse(&src, 1).unwrap()), SymplecticFrame::standard(1), chart)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn k_is_f_near_the_ends(scale in 0.001f64..0.05, x in -0.1f64..0.1, y in -0.1f64..0.1, t in prop::sample::select(vec![0.0, 0.02, 0.05, 0.95, 0.98])) {
        let f = bump_gf(scale, 0.3);
        let (k, _) = hamiltonian_from_gf(&f, LambdaProfile::default(), 0.15, 8).unwrap();
        let z = DVector::from_vec(vec![x, y]);
        prop_assert!((k.eval(t, &z) - f.value(&z)).abs() <= 1e-12 * (1.0 + f.value(&z).abs()));
        prop_assert!((k.grad(t, &z) - f.gradient(&z).unwrap()).amax() <= 1e-10);
    }
}

/// sup ‖X_K − X_F‖/‖X_F‖ shrinks with the ball radius and with ‖d²F_p‖.
#[test]
fn relative_field_error_trends_down() {
    let scales = [0.02, 0.01, 0.005];
    let radii = [0.04, 0.02, 0.01];
    let mut table = [[0.0; 3]; 3];
    for (i, &s) in scales.iter().enumerate() {
        let f = bump_gf(s, 0.3);
        let (k, _) = hamiltonian_from_gf(&f, LambdaProfile::default(), 0.15, 8).unwrap();
        for (j, &r) in radii.iter().enumerate() {
            let c = relative_autonomy_check(&GfHamiltonian(f.clone()), &k, &DVector::zeros(2), 1.0, r, 16).unwrap();
            table[i][j] = c.field_ratio;
        }
    }
    for i in 0..3 {
        for j in 0..3 {
            if i + 1 < 3 {
                assert!(table[i + 1][j] < table[i][j], "scale trend broken: {table:?}");
            }
            if j + 1 < 3 {
                assert!(table[i][j + 1] <= table[i][j] * (1.0 + 1e-9), "radius trend broken: {table:?}");
            }
        }
    }
}

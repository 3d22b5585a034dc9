use conley_lab::flow::torus_difference;
use conley_lab::hamiltonian::{ExprHamiltonian, HamiltonianField, PhaseSpace, Quadratic};
use conley_lab::index::{iteration_profile, SymplecticPath};
use conley_lab::orbits::{find_periodic_points, OrbitOptions, OrbitRecord, SeedSpec};
use conley_lab::symplectic::j_matrix;
use nalgebra::{Complex, DMatrix, DVector};
use proptest::prelude::*;
use std::sync::Arc;

fn forced_pendulum(scale: f64) -> HamiltonianField {
    let src = format!("((cos(2*pi*x) - cos(2*pi*y)) + {scale} * cos(2*pi*t) * sin(2*pi*(x + y))) / (4*pi^2)");
    HamiltonianField::new(Arc::new(ExprHamiltonian::parse(&src, 1).unwrap()), 1.0, PhaseSpace::Torus, "forced")
}

fn opts() -> OrbitOptions {
    OrbitOptions { step: 0.02, ..OrbitOptions::default() }
}

fn sorted(mut v: Vec<Complex<f64>>) -> Vec<Complex<f64>> {
    v.sort_by(|a, b| a.re.partial_cmp(&b.re).unwrap().then(a.im.partial_cmp(&b.im).unwrap()));
    v
}

fn check_record(r: &OrbitRecord, tol: f64) -> Result<(), TestCaseError> {
    prop_assert!(r.residual < 10.0 * tol, "residual {}", r.residual);
    prop_assert!((r.monodromy.determinant() - 1.0).abs() < 1e-6);
    let mult = r.multipliers_complex();
    for m in &mult {
        // λ ↦ 1/λ permutes the multipliers
        let inv = Complex::new(1.0, 0.0) / m;
        prop_assert!(mult.iter().any(|w| (w - inv).norm() < 1e-6), "{m} has no reciprocal in {mult:?}");
    }
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(4))]

    #[test]
    fn forced_pendulum_orbits_are_coherent(scale in 0.02f64..0.15) {
        let h = forced_pendulum(scale);
        let seeds = SeedSpec::Torus { per_dim: 6 };
        let o = opts();
        let one = find_periodic_points(&h, 1, &seeds, &o).unwrap();
        let two = find_periodic_points(&h, 2, &seeds, &o).unwrap();
        prop_assert!(!one.records.is_empty());
        for r in one.records.iter().chain(&two.records) {
            check_record(r, o.newton_tol)?;
        }
        for r in &one.records {
            let p = DVector::from_column_slice(&r.point);
            let twin = two.records.iter().find(|s| torus_difference(&DVector::from_column_slice(&s.point), &p).amax() < 1e-6);
            prop_assert!(twin.is_some(), "period-one orbit at {:?} missing at period two", r.point);
            let squares = sorted(r.multipliers_complex().iter().map(|m| m * m).collect());
            let got = sorted(twin.unwrap().multipliers_complex());
            for (a, b) in squares.iter().zip(&got) {
                prop_assert!((a - b).norm() < 1e-5, "{squares:?} vs {got:?}");
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn elliptic_iterates_match_the_index_profile(w1 in 0.1f64..2.0, sign in prop::bool::ANY) {
        let s = if sign { 1.0 } else { -1.0 };
        let q = DMatrix::from_diagonal(&DVector::from_vec(vec![s * w1, s * w1]));
        let h = HamiltonianField::euclidean(Quadratic::new(q.clone()).unwrap(), 1.0, "elliptic");
        let path = SymplecticPath::exp_path(&(j_matrix(1) * &q), 1.0).unwrap();
        let profile = iteration_profile(&path, 5);
        let seeds = SeedSpec::Points { points: vec![vec![0.05, -0.03]] };
        for (t, idx) in profile {
            let found = find_periodic_points(&h, t, &seeds, &opts()).unwrap();
            prop_assume!(idx.value().is_some());
            prop_assert_eq!(found.records.len(), 1);
            prop_assert_eq!(found.records[0].cz, idx.value(), "T = {}", t);
        }
    }
}

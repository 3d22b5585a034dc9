use conley_lab::expr::Function;
use conley_lab::hamiltonian::{HamiltonianField, Quadratic};
use conley_lab::homology::{local_morse_homology, relative_autonomy_check, ExprField};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

const NAMES: [&str; 3] = ["x", "y", "z"];

/// Signed count of solutions of `∇f = v` near 0 for a small regular value `v`.
fn gradient_degree(src: &str, m: usize, radius: f64) -> i64 {
    let vars: Vec<String> = NAMES[..m].iter().map(|s| s.to_string()).collect();
    let f = Function::new(src, &vars, &[]).unwrap();
    let v: Vec<f64> = (0..m).map(|i| 1e-7 * (1.0 + 0.37 * i as f64)).collect();
    let grid: usize = if m <= 2 { 15 } else { 7 };
    let mut roots: Vec<(Vec<f64>, i64)> = Vec::new();
    for flat in 0..grid.pow(m as u32) {
        let mut rem = flat;
        let mut x: Vec<f64> = (0..m)
            .map(|_| {
                let i = rem % grid;
                rem /= grid;
                radius * (2.0 * i as f64 / (grid - 1) as f64 - 1.0)
            })
            .collect();
        for _ in 0..200 {
            let g = DVector::from_fn(m, |i, _| f.partial(i, &x) - v[i]);
            let Some(dx) = DMatrix::from_fn(m, m, |i, j| f.second(i, j, &x)).lu().solve(&g) else { break };
            for i in 0..m {
                x[i] -= dx[i];
            }
            if dx.amax() < 1e-15 {
                break;
            }
        }
        let g = DVector::from_fn(m, |i, _| f.partial(i, &x) - v[i]);
        if g.amax() > 1e-13 || x.iter().any(|c| c.abs() > radius) {
            continue;
        }
        if roots.iter().any(|(y, _)| y.iter().zip(&x).all(|(a, b)| (a - b).abs() < 1e-9)) {
            continue;
        }
        let det = DMatrix::from_fn(m, m, |i, j| f.second(i, j, &x)).determinant();
        roots.push((x, det.signum() as i64));
    }
    roots.iter().map(|r| r.1).sum()
}

/// A Morse quadratic plus a quartic, or a degenerate pure-power function, in `m` variables.
fn random_function(r: &mut ChaCha8Rng, m: usize) -> String {
    let mut terms = Vec::new();
    for (i, v) in NAMES[..m].iter().enumerate() {
        let s = if r.random_bool(0.5) { "+" } else { "-" };
        let power = if i == 0 && r.random_bool(0.3) { 3 } else { 2 };
        terms.push(format!("{s}{:.3}*{v}^{power}", r.random_range(0.5..1.5)));
        if power == 3 {
            // keeps 0 isolated: x^3 + y^2 has degree 0
            continue;
        }
        terms.push(format!("+{:.3}*{v}^4", r.random_range(-0.3..0.3)));
    }
    terms.join(" ")
}

/// `src` with each variable replaced by a row of `a` applied to the variables.
fn linear_change(src: &str, a: &DMatrix<f64>) -> String {
    let m = a.nrows();
    let sub: Vec<String> = (0..m)
        .map(|i| format!("({})", (0..m).map(|j| format!("{:.6}*{}_", a[(i, j)], NAMES[j])).collect::<Vec<_>>().join(" + ")))
        .collect();
    let mut out = String::new();
    for ch in src.chars() {
        match NAMES[..m].iter().position(|v| v.starts_with(ch)) {
            Some(i) => out.push_str(&sub[i]),
            None => out.push(ch),
        }
    }
    out.replace('_', "")
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn euler_characteristic_is_the_gradient_degree(seed in any::<u64>(), m in 1usize..=3) {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let src = random_function(&mut r, m);
        let sig = local_morse_homology(&ExprField::parse(&src, m).unwrap(), &vec![0.0; m], 0.4, Some(if m == 3 { 33 } else { 65 })).unwrap();
        prop_assert_eq!(sig.euler_characteristic(), gradient_degree(&src, m, 0.3), "{}: {:?}", src, sig.betti);
    }

    #[test]
    fn signature_survives_linear_changes(seed in any::<u64>(), m in 1usize..=2) {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let src = random_function(&mut r, m);
        let a = loop {
            let a = DMatrix::<f64>::from_fn(m, m, |i, j| if i == j { 1.0 } else { 0.0 } + r.random_range(-0.4..0.4));
            if a.determinant().abs() > 0.3 {
                break a;
            }
        };
        let changed = linear_change(&src, &a);
        let before = local_morse_homology(&ExprField::parse(&src, m).unwrap(), &vec![0.0; m], 0.3, Some(65)).unwrap();
        let after = local_morse_homology(&ExprField::parse(&changed, m).unwrap(), &vec![0.0; m], 0.3, Some(65)).unwrap();
        prop_assert_eq!(before.betti, after.betti, "{} vs {}", src, changed);
    }

    #[test]
    fn autonomous_reference_reduces_to_the_hessian_bound(seed in any::<u64>(), n in 1usize..=2) {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let eigs: Vec<f64> = (0..2 * n).map(|_| -r.random_range(0.1..1.5)).collect();
        let q = DMatrix::from_diagonal(&DVector::from_vec(eigs.clone()));
        let norm = eigs.iter().fold(0.0f64, |a, b| a.max(b.abs()));
        let t = r.random_range(0.5..1.5) * 2.0 * PI / norm;
        prop_assume!((t * norm - 2.0 * PI).abs() > 1e-9);
        let f = Quadratic::new(q.clone()).unwrap();
        let k = HamiltonianField::euclidean(Quadratic::new(q).unwrap(), 1.0, "k");
        let c = relative_autonomy_check(&f, &k, &DVector::zeros(2 * n), t, 0.1, 8).unwrap();
        prop_assert_eq!(c.epsilon_measured, 0.0);
        prop_assert_eq!(c.passes, t * norm < 2.0 * PI);
    }
}

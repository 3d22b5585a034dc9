//! Conley–Zehnder indices of an elliptic linear flow and of its iterates.

use conley_lab::flow::{flow_with, FlowOptions};
use conley_lab::hamiltonian::{HamiltonianField, Quadratic};
use conley_lab::index::{cz_index, iteration_profile};
use nalgebra::{DMatrix, DVector};

fn main() -> conley_lab::Result<()> {
    // H = −a/2 |z|²: every orbit turns by angle a per unit time
    let a = 2f64.sqrt();
    let q = DMatrix::from_diagonal(&DVector::from_vec(vec![-a, -a]));
    let h = HamiltonianField::euclidean(Quadratic::new(q)?, 1.0, "elliptic");
    let r = flow_with(&h, &DVector::zeros(2), 0.0, 1.0, 0.01, &FlowOptions::default())?;
    let path = r.monodromy.expect("monodromy is recorded by default");
    println!("cz(T = 1) = {}", cz_index(&path)?);
    for (t, idx) in iteration_profile(&path, 8) {
        let exact = 2 * (t as f64 * a / (2.0 * std::f64::consts::PI)).floor() as i64 + 1;
        println!("T = {t}: {:?} (expected {exact})", idx.value());
    }
    Ok(())
}

//! Comparing a periodic Hamiltonian with an autonomous reference near a fixed point.

use conley_lab::hamiltonian::{ExprHamiltonian, HamiltonianField};
use conley_lab::homology::relative_autonomy_check;
use nalgebra::DVector;

fn main() -> conley_lab::Result<()> {
    let f = ExprHamiltonian::parse("-0.2*(x^2 + y^2)", 1)?;
    let k = HamiltonianField::euclidean(ExprHamiltonian::parse("-0.2*(x^2 + y^2) + 0.001*sin(2*pi*t)*x^2", 1)?, 1.0, "k");
    let p = DVector::zeros(2);
    for period in [1.0, 5.0, 20.0] {
        let c = relative_autonomy_check(&f, &k, &p, period, 0.1, 16)?;
        println!("T = {period}: eps {:.2e}, bound {} ({:.3}), passes {}", c.epsilon_measured, c.bound, c.lhs_of_bound, c.passes);
    }
    Ok(())
}

//! Generating function of a near-identity time-one map, and the map it generates back.

use conley_lab::flow::Integrator;
use conley_lab::genfun::{generating_function, map_of, probe_points, FlowMap, GfOptions, NearIdentityMap};
use conley_lab::hamiltonian::{ExprHamiltonian, HamiltonianField};
use conley_lab::symplectic::SymplecticFrame;
use std::sync::Arc;

fn main() -> conley_lab::Result<()> {
    let h = HamiltonianField::euclidean(ExprHamiltonian::parse("-0.05*(x^2 + y^2) + 0.02*x^3", 1)?, 1.0, "cubic");
    let phi = Arc::new(FlowMap { field: h, t0: 0.0, t1: 1.0, step: 0.05, integrator: Integrator::Yoshida6 });
    let opts = GfOptions { per_dim: 9, ..GfOptions::for_dim(1) };
    let (f, report) = generating_function(phi.clone(), &SymplecticFrame::standard(1), 0.3, &opts)?;
    println!("|phi - id|_C1 = {:.3e}, |F|_C2 = {:.3e}, closedness {:.1e}", report.c1_distance, report.c2_norm, report.closedness_residual);
    println!("d2F(p) = {}", report.hessian_at_p);
    let back = map_of(&f);
    let worst = probe_points(1, 0.2, 7).iter().map(|w| (back.apply(w) - phi.apply(w)).amax()).fold(0.0, f64::max);
    println!("round trip through the map generated by F: {worst:.2e}");
    Ok(())
}

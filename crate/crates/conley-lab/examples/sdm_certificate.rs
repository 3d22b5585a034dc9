//! Strict-maximum certificate for a flat maximum with identity linearization.

use conley_lab::hamiltonian::{FnHamiltonian, HamiltonianField};
use conley_lab::homology::{sdm_certificate, SdmOptions};
use nalgebra::{DMatrix, DVector};

fn main() -> conley_lab::Result<()> {
    // H = −|z|⁴ with exact derivatives
    let h = FnHamiltonian::new(1, true, |_, z| -z.norm_squared().powi(2))
        .with_gradient(|_, z| z * (-4.0 * z.norm_squared()))
        .with_hessian(|_, z| DMatrix::identity(2, 2) * (-4.0 * z.norm_squared()) - z * z.transpose() * 8.0);
    let field = HamiltonianField::euclidean(h, 1.0, "flat-max");
    let opts = SdmOptions { grid: 17, t_samples: 8, gf_per_dim: Some(9), flow_step: 0.05, ..Default::default() };
    let cert = sdm_certificate(&field, &DVector::zeros(2), &[], &opts)?;
    println!("unipotent {} monotone {}", cert.unipotent, cert.monotone);
    for row in &cert.rows {
        println!("i = {}: radius {:.3}, |d2K| {:.2e}, strict max {}, linear drift {:.1e}", row.i, row.radius, row.hessian_norm, row.k1_pass, row.k3_residual);
    }
    Ok(())
}

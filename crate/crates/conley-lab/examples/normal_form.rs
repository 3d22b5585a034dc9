//! Squeezing a unipotent map towards the identity by symplectic conjugation.

use conley_lab::symplectic::{matrix_from_rows, splitting_defect, SqueezePlan};

fn main() -> conley_lab::Result<()> {
    let phi = matrix_from_rows(&[vec![1.0, 0.0, 0.5, 0.0], vec![0.0, 1.0, 0.0, 0.0], vec![0.0, 0.0, 1.0, 0.0], vec![0.0, 0.0, 0.0, 1.0]])?;
    let plan = SqueezePlan::new(&phi)?;
    println!("exact rational plan: {}", plan.is_exact());
    println!("sigma,lambda,residual,splitting_defect");
    for sigma in [1e-1, 1e-2, 1e-3, 1e-4] {
        let sq = plan.squeeze(sigma)?;
        println!("{sigma:e},{:e},{:e},{:e}", sq.lambda, sq.residual, splitting_defect(&sq, &phi));
    }
    Ok(())
}

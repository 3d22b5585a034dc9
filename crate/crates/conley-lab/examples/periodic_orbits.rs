//! Fixed points of the pendulum on the torus, with multipliers and indices.

use conley_lab::orbits::{find_periodic_points, orbit_table, OrbitOptions, SeedSpec};
use conley_lab::scenario::HamiltonianSpec;

fn main() -> conley_lab::Result<()> {
    let spec = HamiltonianSpec { builtin: Some("pendulum-torus".into()), expression: None, n: 1, phase_space: None, period: 1.0, scale: None, bump: None };
    let h = spec.build()?;
    let search = find_periodic_points(&h, 1, &SeedSpec::Torus { per_dim: 8 }, &OrbitOptions::default())?;
    println!("{} seeds, {} converged, {} distinct", search.seeds, search.converged, search.records.len());
    print!("{}", orbit_table(&search.records, 1).to_csv()?);
    Ok(())
}

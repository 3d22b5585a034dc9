//! Analytic census of a single bump and its numerical cross-check.
//!
//! Usage: `bump_census [T]`.

use conley_lab::census::{build_profile, census, cross_validate, BumpParams, CrossOptions};
use std::f64::consts::PI;

fn main() -> conley_lab::Result<()> {
    let t: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(5);
    let slope = -2.0 * PI * (0.46 + 2f64.sqrt() / 1000.0);
    let params = BumpParams { r_minus: 0.2, r_prime: 0.3, r_double_prime: 0.4, r: 0.5, c: 0.0, floor: 0.0, inner_slope: -0.2, outer: None }.with_slope(slope);
    let profile = build_profile(&params)?;
    let c = census(&profile, t as f64, 1)?;
    print!("{}", c.to_table().to_csv()?);
    let x = cross_validate(&profile, t, &CrossOptions::default())?;
    println!(
        "{} seeds: {} matched, {} census rings unmatched, {} numerical rings unmatched; radius err {:.2e}, action err {:.2e}",
        x.seeds,
        x.matched.len(),
        x.unmatched_census.len(),
        x.unmatched_numeric.len(),
        x.max_radius_error,
        x.max_action_error
    );
    for m in &x.matched {
        println!("l = {} {}: split indices {:?}, in range {:?}", m.l, m.family.map_or("?", |f| f.as_str()), m.split_indices, m.index_in_range);
    }
    Ok(())
}

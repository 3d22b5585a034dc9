//! Local Morse homology of isolated critical points.

use conley_lab::homology::{lm2_maximum_test, local_morse_homology, ExprField};

fn main() -> conley_lab::Result<()> {
    for (name, src) in [("minimum", "x^2 + y^2"), ("saddle", "x^2 - y^2"), ("monkey saddle", "x^3 - 3*x*y^2"), ("flat maximum", "-(x^2 + y^2)^2")] {
        let f = ExprField::parse(src, 2)?;
        let sig = local_morse_homology(&f, &[0.0, 0.0], 0.5, None)?;
        let max = lm2_maximum_test(&f, &[0.0, 0.0], 0.5, None)?;
        println!("{name:14} betti {:?} chi {} strict max {max}", sig.betti, sig.euler_characteristic());
    }
    Ok(())
}

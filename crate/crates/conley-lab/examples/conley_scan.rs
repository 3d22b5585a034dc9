//! Runs a scenario file end to end and lists what it wrote.

use conley_lab::scenario::run_file;
use std::path::{Path, PathBuf};

fn main() -> conley_lab::Result<()> {
    let file = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios/conley_scan.toml"));
    let out = std::env::temp_dir().join("conley-lab-example");
    let outcome = run_file(&file, Some(&out), None, None)?;
    for f in &outcome.files {
        println!("{}", outcome.out_dir.join(f).display());
    }
    if let Some(e) = outcome.error {
        return Err(e);
    }
    print!("{}", std::fs::read_to_string(out.join("simple_periods.csv"))?);
    Ok(())
}

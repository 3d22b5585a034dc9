use clap::Parser;
use conley_lab::scenario::{run_file, Task, TASKS};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser, Debug)]
#[command(name = "conley-lab", version, about = "Run a scenario file and write its CSV/JSON artifacts")]
struct Cli {
    /// One of: index, normal-form, genfun, orbits, local-homology, census, conley-scan
    task: String,
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, env = "CONLEY_LAB_THREADS")]
    threads: Option<usize>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(64),
            };
        }
    };
    let Some(task) = Task::parse(&cli.task) else {
        eprintln!("unknown task `{}` (expected one of: {})", cli.task, TASKS.join(", "));
        return ExitCode::from(64);
    };
    if let Some(k) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(k).build_global() {
            eprintln!("thread pool: {e}");
        }
    }
    match run_file(&cli.scenario, cli.out.as_deref(), cli.seed, Some(task)) {
        Ok(outcome) => {
            for f in &outcome.files {
                println!("{}", outcome.out_dir.join(f).display());
            }
            match outcome.error {
                None => ExitCode::SUCCESS,
                Some(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(e.exit_code() as u8)
                }
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

mod args;
mod jobs;

use std::fs;
use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command, ReplayArgs};
use jobs::{read_manifest, render, run_to, Failure, Job};

fn replay(a: &ReplayArgs, precision: Option<usize>) -> Result<(), Failure> {
    let manifest = read_manifest(&a.manifest)?;
    let digits = precision.or(manifest.precision);
    if a.check {
        let fresh = render(&manifest.job, digits)?;
        let recorded = manifest
            .outputs
            .first()
            .ok_or_else(|| Failure::Invalid("manifest lists no output".into()))?;
        let old = fs::read(recorded)
            .map_err(|e| Failure::Runtime(format!("{}: {e}", recorded.display())))?;
        if old != fresh {
            return Err(Failure::Runtime(format!(
                "{} differs from the replayed output",
                recorded.display()
            )));
        }
        eprintln!("{} reproduced exactly", recorded.display());
        return Ok(());
    }
    run_to(&manifest.job, a.out.output.as_deref(), digits)
}

fn dispatch(cli: Cli) -> Result<(), Failure> {
    let digits = cli.precision.map(|p| p as usize);
    let (job, output): (Job, _) = match &cli.command {
        Command::Solve(a) => (jobs::solve_job(a)?, &a.out.output),
        Command::Dynamics(a) => (jobs::dynamics_job(a)?, &a.out.output),
        Command::Risk(a) => (jobs::risk_job(a)?, &a.out.output),
        Command::Sim(a) => (jobs::sim_job(a)?, &a.out.output),
        Command::Sweep(a) => (jobs::sweep_job(a)?, &a.out.output),
        Command::Replay(a) => return replay(a, digits),
    };
    run_to(&job, output.as_deref(), digits)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("hgrowth: {e}");
            ExitCode::from(e.code())
        }
    }
}

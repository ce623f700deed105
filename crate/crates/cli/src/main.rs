use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use tresca_homog::cell_solver::write_tensor_csv;
use tresca_homog::harness::{
    check_effective_bounds, check_frictionless_limit, check_laminate, check_negative_control,
    check_rate, check_trivial_homogenization, check_vi_optimality, run_case_with, run_cell,
    run_sweep, write_sweep_outputs, ErrorReport, ExperimentConfig, Profile, Verdict,
};
use tresca_homog::mesh_fem::{DofMap, StructuredMesh};
use tresca_homog::quasistatic::{write_diagnostics, write_snapshot_file};
use tresca_homog::Error;

const EXIT_USAGE: u8 = 1;
const EXIT_SOLVER: u8 = 2;
const EXIT_FAIL: u8 = 3;

#[derive(Parser, Debug)]
#[command(
    name = "tresca-homog",
    version,
    about = "Homogenization of quasistatic Tresca friction problems"
)]
struct Cli {
    /// Configuration file of `key = value` lines, applied over the profile.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Default parameter set.
    #[arg(long, global = true, default_value = "desk", value_parser = parse_profile)]
    profile: Profile,
    /// Output directory; overrides `out` from the configuration.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve the cell problems and write the effective tensor and correctors.
    Cell,
    /// Run the oscillating and homogenized problems for one cell count.
    Solve {
        /// Cells per axis (default: the first configured value).
        #[arg(long)]
        n: Option<usize>,
        /// Write displacement snapshots every k steps (0 disables).
        #[arg(long, default_value_t = 0)]
        snapshot_every: usize,
    },
    /// Run every configured cell count, fit the rate and write the report.
    Sweep,
    /// Run the property checks of the pipeline.
    Verify {
        /// Skip the sweep-based rate check.
        #[arg(long)]
        skip_rate: bool,
    },
}

fn parse_profile(s: &str) -> Result<Profile, String> {
    Profile::parse(s).ok_or_else(|| format!("unknown profile `{s}` (expected desk or paper)"))
}

enum Failure {
    Usage(anyhow::Error),
    Solver(anyhow::Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) | Error::InsufficientRows { .. } => Failure::Usage(e.into()),
            other => Failure::Solver(other.into()),
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Solver(e)
    }
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig, Failure> {
    let mut config = ExperimentConfig::profile(cli.profile);
    if let Some(path) = &cli.config {
        let text = fs::read_to_string(path)
            .with_context(|| format!("reading {}", path.display()))
            .map_err(Failure::Usage)?;
        config = config
            .parse_over(&text)
            .map_err(|e| Failure::Usage(e.into()))?;
    }
    if let Some(out) = &cli.out {
        config.out = out.clone();
    }
    config.validate().map_err(|e| Failure::Usage(e.into()))?;
    Ok(config)
}

fn create_out(dir: &Path) -> anyhow::Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn cmd_cell(config: &ExperimentConfig) -> Result<bool, Failure> {
    let (correctors, effective) = run_cell(config)?;
    create_out(&config.out)?;
    let mut tensor = Vec::new();
    write_tensor_csv(&effective.tensor, &mut tensor)?;
    fs::write(config.out.join("tensor.csv"), &tensor).context("writing tensor.csv")?;
    let file =
        fs::File::create(config.out.join("correctors.csv")).context("creating correctors.csv")?;
    correctors.write_csv(std::io::BufWriter::new(file))?;
    print!("{}", String::from_utf8_lossy(&tensor));
    Ok(true)
}

fn cmd_solve(
    config: &ExperimentConfig,
    n: Option<usize>,
    snapshot_every: usize,
) -> Result<bool, Failure> {
    let n = n.unwrap_or(config.n_cells[0]);
    if n == 0 {
        return Err(Failure::Usage(anyhow::anyhow!("--n must be positive")));
    }
    let config = config.single(n);
    create_out(&config.out)?;
    let snapshots = config.out.join("snapshots");
    let mesh_dofs = if snapshot_every > 0 {
        create_out(&snapshots)?;
        let mesh = StructuredMesh::benchmark(config.mesh_size(n))?;
        let dofs = DofMap::new(&mesh);
        Some((mesh, dofs))
    } else {
        None
    };
    let case = run_case_with(&config, n, |r_eps, r_hom| {
        if let Some((mesh, dofs)) = &mesh_dofs {
            if r_eps.step % snapshot_every == 0 || r_eps.step == config.steps {
                write_snapshot_file(
                    mesh,
                    dofs,
                    r_eps.u,
                    &snapshots.join(format!("u_eps_{:05}.csv", r_eps.step)),
                )?;
                write_snapshot_file(
                    mesh,
                    dofs,
                    r_hom.u,
                    &snapshots.join(format!("u_hom_{:05}.csv", r_hom.step)),
                )?;
            }
        }
        Ok(())
    })?;
    let report = ErrorReport::new(vec![case.row.clone()]);
    fs::write(config.out.join("report.csv"), report.to_csv()).context("writing report.csv")?;
    for (name, diag) in [
        ("diagnostics_eps.txt", &case.oscillating),
        ("diagnostics_hom.txt", &case.homogenized),
    ] {
        let mut buf = Vec::new();
        write_diagnostics(diag, &mut buf)?;
        fs::write(config.out.join(name), buf).with_context(|| format!("writing {name}"))?;
    }
    print!("{}", report.to_csv());
    let unconverged = case.unconverged_steps();
    if unconverged > 0 {
        eprintln!("warning: {unconverged} steps stopped at the iteration cap");
    }
    Ok(true)
}

fn cmd_sweep(config: &ExperimentConfig) -> Result<bool, Failure> {
    let sweep = run_sweep(config)?;
    write_sweep_outputs(&config.out, &sweep)?;
    print!("{}", sweep.report.to_csv());
    let mut rates = Vec::new();
    sweep.summary.write(&mut rates)?;
    print!("{}", String::from_utf8_lossy(&rates));
    Ok(sweep.summary.verdict == Verdict::Pass)
}

fn cmd_verify(config: &ExperimentConfig, skip_rate: bool) -> Result<bool, Failure> {
    let single = config.single(config.n_cells[0]);
    let mut outcomes = vec![
        check_trivial_homogenization(),
        check_effective_bounds(32),
        check_laminate(32),
        check_vi_optimality(&single),
        check_frictionless_limit(&single),
    ];
    if !skip_rate {
        outcomes.push(check_rate(config));
    }
    outcomes.push(check_negative_control());
    let mut all = true;
    for o in &outcomes {
        println!("{}", o.line());
        all &= o.passed;
    }
    Ok(all)
}

fn run(cli: &Cli) -> Result<bool, Failure> {
    if let Some(k) = cli.threads {
        if k == 0 {
            return Err(Failure::Usage(anyhow::anyhow!(
                "--threads must be positive"
            )));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build_global()
            .context("configuring the thread pool")?;
    }
    let config = load_config(cli)?;
    match &cli.command {
        Command::Cell => cmd_cell(&config),
        Command::Solve { n, snapshot_every } => cmd_solve(&config, *n, *snapshot_every),
        Command::Sweep => cmd_sweep(&config),
        Command::Verify { skip_rate } => cmd_verify(&config, *skip_rate),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_FAIL),
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(Failure::Solver(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_SOLVER)
        }
    }
}

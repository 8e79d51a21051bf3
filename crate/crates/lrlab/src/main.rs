use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use lrlab::config::Mode;
use lrlab::export::{export, export_sweep, import};
use lrlab::{run_scenario, run_sweep, ResultSet, RunOptions, ScenarioConfig};

#[derive(Parser)]
#[command(name = "lrlab", version, about = "Lieb-Robinson bound experiments on disordered spin chains")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Unperturbed commutator light cone and fit.
    Lightcone(RunArgs),
    /// Commutators under local perturbations against the full and far bounds.
    Perturbed(RunArgs),
    /// Disorder on a sub-region, recast as fully disordered plus local undo terms.
    Dual(RunArgs),
    /// A single grain or avalanche perturbation against the single-term bound.
    Avalanche(RunArgs),
    /// Numerical checks of the splitting, restriction and assembly steps.
    Proofcheck(RunArgs),
    /// Repeat a run over values of one config field.
    Sweep {
        #[command(flatten)]
        run: RunArgs,
        /// Dotted config path, e.g. `disorder.width` or `perturbations.0.tau`.
        #[arg(long)]
        axis: String,
        /// JSON list of values, e.g. `[0, 2, 4]`.
        #[arg(long)]
        values: String,
    },
    /// Re-read an export directory, validate it and write it again.
    Export {
        /// Directory holding summary.json and records.csv.
        #[arg(long)]
        from: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Output directory; defaults to output.dir of the config, then `out/<scenario_id>`.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = RunOptions::default().workers)]
    workers: usize,
    /// Overrides disorder.base_seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides schedule.tol.
    #[arg(long)]
    tol: Option<f64>,
}

impl RunArgs {
    fn load(&self, mode: Option<Mode>) -> anyhow::Result<ScenarioConfig> {
        let mut cfg = ScenarioConfig::load(&self.config)?;
        if let Some(seed) = self.seed {
            cfg.disorder.base_seed = seed;
        }
        if let Some(tol) = self.tol {
            cfg.schedule.tol = tol;
        }
        if let Some(mode) = mode {
            cfg.mode = mode;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn out_dir(&self, cfg: &ScenarioConfig) -> PathBuf {
        self.out
            .clone()
            .or_else(|| cfg.output.dir.as_ref().map(PathBuf::from))
            .unwrap_or_else(|| Path::new("out").join(&cfg.scenario_id))
    }

    fn options(&self) -> anyhow::Result<RunOptions> {
        if self.workers == 0 {
            bail!("--workers must be at least 1");
        }
        Ok(RunOptions { workers: self.workers })
    }
}

fn report(rs: &ResultSet) {
    for check in &rs.proof_checks {
        let verdict = if check.pass { "pass" } else { "FAIL" };
        println!("{verdict} {:<26} lhs {:.3e} rhs {:.3e} tol {:.1e}", check.name, check.lhs, check.rhs, check.tol);
    }
    for m in &rs.margins {
        let verdict = if m.report.passed() { "pass" } else { "FAIL" };
        println!(
            "{verdict} {:<26} {} violations in {} cells, min relative margin {:.3}",
            m.label,
            m.report.violations.len(),
            m.report.n_cells,
            m.report.min_relative_margin
        );
    }
    for s in &rs.skipped {
        println!("skipped {s}");
    }
}

fn run(cli: Cli) -> anyhow::Result<bool> {
    let (args, mode) = match &cli.command {
        Command::Lightcone(a) => (a, Mode::Lightcone),
        Command::Perturbed(a) => (a, Mode::Perturbed),
        Command::Dual(a) => (a, Mode::Dual),
        Command::Avalanche(a) => (a, Mode::Avalanche),
        Command::Proofcheck(a) => (a, Mode::Proofcheck),
        Command::Sweep { run, axis, values } => {
            let cfg = run.load(None)?;
            let values: Vec<serde_json::Value> =
                serde_json::from_str(values).context("--values must be a JSON list")?;
            let sets = run_sweep(&cfg, axis, &values, &run.options()?)?;
            let dir = run.out_dir(&cfg);
            export_sweep(&sets, &dir)?;
            for rs in &sets {
                if let Some(p) = &rs.provenance.sweep {
                    println!("{} = {}", p.axis, p.value);
                }
                report(rs);
            }
            println!("wrote {} sweep points to {}", sets.len(), dir.display());
            return Ok(sets.iter().all(ResultSet::all_passed));
        }
        Command::Export { from, out } => {
            let rs = import(from)?;
            let written = export(&rs, out)?;
            println!("wrote {} files to {}", written.len(), out.display());
            return Ok(true);
        }
    };
    let cfg = args.load(Some(mode))?;
    let rs = run_scenario(&cfg, &args.options()?)?;
    let dir = args.out_dir(&cfg);
    export(&rs, &dir)?;
    report(&rs);
    println!("wrote {} in {:.1} s", dir.display(), rs.wall_time_s);
    Ok(rs.all_passed())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use evopref::runner::battery::{report_from_records, write_battery, ABLATIONS};
use evopref::runner::plots::emit_plots;
use evopref::runner::{
    ablation_configs, read_records, run_battery, run_single, sensitivity_sweep, theory_report, write_run, Algorithm,
    ExperimentConfig, Retain, RunError,
};

#[derive(Parser)]
#[command(name = "evopref", version, about = "Evolve low-rank genomes on synthetic preference landscapes")]
struct Cli {
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML experiment config; built-in defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (overrides the config).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed list, e.g. `1-30` or `1,2,5`.
    #[arg(long)]
    seeds: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Run one algorithm on one seed.
    Run {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        algo: Option<Algorithm>,
        #[arg(long)]
        seed: Option<u64>,
        /// Write archive snapshots every N generations.
        #[arg(long)]
        snapshot_every: Option<usize>,
    },
    /// Run several algorithms over all seeds and compare them.
    Battery {
        #[command(flatten)]
        common: Common,
        /// Algorithms to run on the base config.
        #[arg(long, value_delimiter = ',', default_value = "evopref,moead,smsemoa,cmaes,random,gradient")]
        algos: Vec<Algorithm>,
        /// Extra configs to include as-is (each needs a distinct name).
        #[arg(long = "with")]
        extra: Vec<PathBuf>,
        #[arg(long)]
        reference: Option<String>,
    },
    /// Median coverage across values of one parameter.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// One of sigma0, p_c, g, tournament_size.
        #[arg(long)]
        param: String,
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
    },
    /// Ablation battery at a fixed evaluation budget.
    Ablation {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',', default_value = "full,no_archive,no_crossover,no_crowding,mu8,mu64,random")]
        variants: Vec<String>,
    },
    /// Statistics from stored runs, or the coverage-bound evaluation.
    Report {
        #[arg(long)]
        theory: bool,
        #[arg(long)]
        runs: Option<PathBuf>,
        #[arg(long)]
        reference: Option<String>,
    },
    /// Plots from stored runs.
    Plot {
        #[arg(long)]
        runs: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}


fn parse_seeds(spec: &str) -> Result<Vec<u64>, RunError> {
    let bad = || RunError::Config(format!("bad seed list '{spec}'"));
    let mut seeds = Vec::new();
    for part in spec.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        match part.split_once('-') {
            Some((a, b)) => {
                let (a, b): (u64, u64) = (a.parse().map_err(|_| bad())?, b.parse().map_err(|_| bad())?);
                if a > b {
                    return Err(bad());
                }
                seeds.extend(a..=b);
            }
            None => seeds.push(part.parse().map_err(|_| bad())?),
        }
    }
    if seeds.is_empty() {
        return Err(bad());
    }
    Ok(seeds)
}

fn load(common: &Common) -> Result<ExperimentConfig, RunError> {
    let mut cfg = match &common.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(out) = &common.out {
        cfg.output_dir = out.clone();
    }
    if let Some(s) = &common.seeds {
        cfg.seeds = parse_seeds(s)?;
    }
    Ok(cfg)
}

fn run_battery_to(dir: &Path, configs: &[ExperimentConfig], reference: Option<&str>) -> Result<(), RunError> {
    let report = run_battery(configs, reference)?;
    write_battery(dir, configs, &report)?;
    emit_plots(&report.records, &dir.join("plots"))?;
    print!("{}", report.to_text());
    println!("\nwrote {}", dir.display());
    Ok(())
}

fn dispatch(command: Command) -> Result<(), RunError> {
    match command {
        Command::Run { common, algo, seed, snapshot_every } => {
            let mut cfg = load(&common)?;
            if let Some(a) = algo {
                cfg.algorithm = a;
            }
            if snapshot_every.is_some() {
                cfg.snapshot_every = snapshot_every;
            }
            let seed = seed.unwrap_or(cfg.seeds[0]);
            let record = run_single(&cfg, seed, Retain { genomes: true })?;
            let dir = cfg.output_dir.join(cfg.label());
            write_run(&dir, &cfg, &record)?;
            emit_plots(std::slice::from_ref(&record), &dir.join("plots"))?;
            let last = record.final_row();
            println!(
                "{} seed {}: {} of {} modes covered, hypervolume {:.4}, {} evaluations",
                record.name,
                seed,
                record.covered_modes(),
                record.coverage.k,
                last.hypervolume,
                record.evaluations_used
            );
            if let Some(occ) = &record.occupancy {
                println!(
                    "archive: {} cells occupied ({:.1}%), cells per covered mode {}",
                    occ.occupied,
                    100.0 * occ.fraction,
                    occ.cells_per_covered_mode().map_or("n/a".into(), |c| format!("{c:.2}"))
                );
            }
            println!("wrote {}", dir.display());
            Ok(())
        }
        Command::Battery { common, algos, extra, reference } => {
            let base = load(&common)?;
            let mut configs: Vec<ExperimentConfig> = algos
                .into_iter()
                .map(|a| {
                    let mut c = base.clone();
                    c.algorithm = a;
                    c.name = None;
                    c
                })
                .collect();
            for p in &extra {
                let mut c = ExperimentConfig::load(p)?;
                c.seeds = base.seeds.clone();
                configs.push(c);
            }
            run_battery_to(&base.output_dir.join("battery"), &configs, reference.as_deref())
        }
        Command::Sweep { common, param, values } => {
            let base = load(&common)?;
            let report = sensitivity_sweep(&base, &param, &values)?;
            let dir = base.output_dir.join("sweep");
            let csv = report.to_csv();
            evopref::runner::write_file(&dir.join(format!("{param}.csv")), &csv)?;
            print!("{csv}");
            println!("(median coverage %, n={} seeds per value; * marks the base value)", report.seeds.len());
            Ok(())
        }
        Command::Ablation { common, variants } => {
            let base = load(&common)?;
            let names: Vec<&str> = variants.iter().map(String::as_str).collect();
            for n in &names {
                if !ABLATIONS.contains(n) && *n != "generational" {
                    return Err(RunError::Config(format!("unknown ablation '{n}'; expected one of {ABLATIONS:?} or generational")));
                }
            }
            let configs = ablation_configs(&base, &names)?;
            run_battery_to(&base.output_dir.join("ablation"), &configs, names.contains(&"full").then_some("full"))
        }
        Command::Report { theory, runs, reference } => {
            if !theory && runs.is_none() {
                return Err(RunError::Config("report needs --theory or --runs DIR".into()));
            }
            if theory {
                print!("{}", theory_report()?);
            }
            if let Some(dir) = runs {
                let records = read_records(&dir)?;
                let mut names: Vec<String> = Vec::new();
                for r in &records {
                    if !names.contains(&r.name) {
                        names.push(r.name.clone());
                    }
                }
                let report = report_from_records(records, &names, reference.as_deref())?;
                print!("{}", report.to_text());
            }
            Ok(())
        }
        Command::Plot { runs, out } => {
            let records = read_records(&runs)?;
            let dir = out.unwrap_or_else(|| runs.join("plots"));
            let files = emit_plots(&records, &dir)?;
            println!("wrote {} and {}", files.front_svg.display(), files.hypervolume_svg.display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot start {n} threads: {e}");
            return ExitCode::from(4);
        }
    }
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

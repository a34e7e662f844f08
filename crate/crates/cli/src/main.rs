use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use cfmmw::harness::{self, OutputFormat, RunResult, SweepParam};
use cfmmw::{Error, SystemConfig};
use clap::{Args, Parser, Subcommand};

const OUT_DIR_ENV: &str = "CFMMW_OUT_DIR";

/// Cell-free / user-centric mmWave massive MIMO simulator.
#[derive(Parser, Debug)]
#[command(name = "cfmmw", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the configured Monte Carlo experiment.
    Run(Common),
    /// Run the experiment at several values of one parameter.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// p_max, uplink_power, n, k or n_rf.
        #[arg(long)]
        param: String,
        /// Comma-separated values (watts for the power parameters).
        #[arg(long, value_delimiter = ',', required = true, num_args = 1..)]
        values: Vec<f64>,
    },
    /// Check a configuration file and print the resolved configuration.
    ValidateConfig {
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Compare the optimizer with an exhaustive grid search on small instances.
    Oracle {
        #[command(flatten)]
        common: Common,
        /// Grid points per power variable.
        #[arg(long, default_value_t = 20)]
        points: usize,
    },
}

#[derive(Args, Debug)]
struct Common {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    drops: Option<usize>,
    /// Output directory; defaults to $CFMMW_OUT_DIR, then ./out.
    #[arg(long, env = OUT_DIR_ENV)]
    out: Option<PathBuf>,
    #[arg(long, default_value = "both", value_parser = ["csv", "json", "both"])]
    format: String,
    #[arg(long)]
    workers: Option<usize>,
}

/// Failures that map to exit code 1.
#[derive(Debug)]
struct ConfigError(String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn load_config(path: Option<&Path>) -> anyhow::Result<SystemConfig> {
    let cfg = match path {
        Some(p) => SystemConfig::load(p),
        None => Ok(SystemConfig::default()),
    };
    cfg.map_err(|e| match e {
        Error::Io { .. } | Error::Config(_) | Error::Toml(_) => ConfigError(e.to_string()).into(),
        other => other.into(),
    })
}

impl Common {
    fn resolve(&self) -> anyhow::Result<SystemConfig> {
        let mut cfg = load_config(self.config.as_deref())?;
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(d) = self.drops {
            cfg.drops = cfmmw::config::Drops::Count(d);
        }
        if let Some(w) = self.workers {
            cfg.workers = w;
        }
        cfg.validate().map_err(|e| ConfigError(e.to_string()))?;
        Ok(cfg)
    }

    fn out_dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from("out"))
    }

    fn format(&self) -> OutputFormat {
        self.format.parse().expect("restricted by clap")
    }
}

fn write(results: &[RunResult], common: &Common) -> anyhow::Result<()> {
    let written = harness::emit(results, common.format(), &common.out_dir())?;
    for p in written {
        println!("wrote {}", p.display());
    }
    Ok(())
}

fn print_summary(r: &RunResult) {
    let s = &r.summary;
    if let Some(p) = r.sweep {
        print!("{}={} ", p.parameter.name(), p.value);
    }
    println!(
        "drops={} excluded={} dl_rate={:.4e} (uniform {:.4e}) dl_gee={:.4e} (uniform {:.4e}) ul_rate={:.4e} ul_gee={:.4e}",
        r.drops.len(),
        r.excluded.len(),
        s.downlink_rate.mean,
        s.downlink_rate_uniform.mean,
        s.downlink_gee.mean,
        s.downlink_gee_uniform.mean,
        s.uplink_rate.mean,
        s.uplink_gee.mean,
    );
}

fn execute(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Run(common) => {
            let cfg = common.resolve()?;
            let r = harness::run(&cfg)?;
            print_summary(&r);
            write(std::slice::from_ref(&r), &common)
        }
        Command::Sweep { common, param, values } => {
            let cfg = common.resolve()?;
            let param: SweepParam = param.parse().map_err(|e: Error| ConfigError(e.to_string()))?;
            let results = harness::sweep(&cfg, param, &values)?;
            results.iter().for_each(print_summary);
            write(&results, &common)
        }
        Command::ValidateConfig { config } => {
            let cfg = load_config(config.as_deref())?;
            print!("{}", cfg.to_toml_string());
            Ok(())
        }
        Command::Oracle { common, points } => {
            let mut cfg = harness::oracle_config(&common.resolve()?);
            if common.drops.is_none() {
                cfg.drops = cfmmw::config::Drops::Count(20);
            }
            if points < 2 {
                return Err(ConfigError("--points must be at least 2".into()).into());
            }
            let report = harness::run_oracle(&cfg, cfg.drops.count(), points)?;
            for c in &report.cases {
                println!(
                    "drop {:>3}: optimized {:.6e} grid {:.6e} ratio {:.4}",
                    c.drop, c.optimized_gee, c.grid_gee, c.ratio
                );
            }
            println!("worst ratio {:.4} ({:.1} s)", report.worst_ratio, report.elapsed_s);
            let dir = common.out_dir();
            std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
            let path = dir.join("oracle.json");
            harness::write_json(&report, &path)?;
            println!("wrote {}", path.display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.is::<ConfigError>() {
                ExitCode::from(1)
            } else {
                ExitCode::from(2)
            }
        }
    }
}

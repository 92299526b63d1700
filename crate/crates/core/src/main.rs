use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use locus_core::harness::config::RunConfig;
use locus_core::harness::output::{layout_csv, raster_csv, write_experiment};
use locus_core::harness::plots::emit_plots;
use locus_core::harness::{run_experiment, summarize, ExperimentSpec, HarnessError, SummaryRow};
use locus_core::plume::{PlumeField, PlumeParams, PlumePose};
use locus_core::sim::{
    Algorithm, ConfigError, FailureModel, PlumeVariant, TrialConfig, World,
};
use locus_core::tree::{SwarmTree, TreeParams};
use locus_core::Vec2;

#[derive(Parser)]
#[command(name = "locus", version, about = "Swarm plume-search simulator and experiment harness")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one of the preset experiments (or all of them).
    Run {
        #[arg(long)]
        experiment: Option<String>,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        workers: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// TOML or JSON file with the same keys; flags take precedence.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Run a single trial and print its result as JSON.
    Trial {
        #[arg(long, default_value = "locus")]
        algo: Algorithm,
        #[arg(long, default_value_t = 5)]
        n: usize,
        #[arg(long, default_value = "smooth")]
        plume: PlumeVariant,
        #[arg(long, default_value_t = 0.0)]
        p_generic: f64,
        #[arg(long, default_value_t = 0.0)]
        p_inplume: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        budget: Option<u64>,
        /// Write a per-tick CSV of every drone.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Dump a tree layout as CSV.
    Layout {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 3.0)]
        rmin: f64,
        #[arg(long, default_value_t = 3.0)]
        rmax: f64,
    },
    /// Dump the plume field around its peak as CSV.
    Plume {
        #[arg(long, required = true)]
        raster: bool,
        #[arg(long)]
        perturbed: bool,
        #[arg(long, default_value_t = 50.0)]
        half_width: f64,
        #[arg(long, default_value_t = 1.0)]
        step: f64,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match cli.cmd {
        Cmd::Run {
            experiment,
            trials,
            seed,
            workers,
            out,
            config,
        } => cmd_run(experiment, trials, seed, workers, out, config),
        Cmd::Trial {
            algo,
            n,
            plume,
            p_generic,
            p_inplume,
            seed,
            budget,
            trace,
        } => {
            let mut cfg = TrialConfig {
                algorithm: algo,
                n,
                failure: FailureModel {
                    p_generic,
                    p_inplume,
                },
                ..TrialConfig::default()
            };
            cfg.plume.perturbed = plume.is_perturbed();
            if let Some(b) = budget {
                cfg.tick_budget = b;
            }
            cmd_trial(cfg, seed, trace.as_deref())
        }
        Cmd::Layout { n, rmin, rmax } => cmd_layout(n, rmin, rmax),
        Cmd::Plume {
            raster: _,
            perturbed,
            half_width,
            step,
        } => cmd_plume(perturbed, half_width, step),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn cmd_run(
    experiment: Option<String>,
    trials: Option<usize>,
    seed: Option<u64>,
    workers: Option<usize>,
    out: Option<PathBuf>,
    config: Option<PathBuf>,
) -> Result<(), HarnessError> {
    let file = match &config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let which = experiment
        .or(file.experiment.clone())
        .unwrap_or_else(|| "all".to_string());
    let ids: Vec<u32> = match which.as_str() {
        "all" => vec![1, 2, 3, 4],
        s => match s.parse::<u32>() {
            Ok(id @ 1..=4) => vec![id],
            _ => {
                return Err(ConfigError::Unknown {
                    kind: "experiment",
                    value: s.to_string(),
                }
                .into())
            }
        },
    };
    let workers = workers.or(file.workers).unwrap_or_else(|| {
        std::thread::available_parallelism()
            .map(|n| n.get())
            .unwrap_or(1)
    });
    let out = out
        .or(file.out.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("results"));

    let mut sweeps: Vec<SummaryRow> = Vec::new();
    for id in &ids {
        let mut spec = ExperimentSpec::preset(*id).expect("known preset");
        file.apply(&mut spec);
        if let Some(t) = trials {
            spec.trials = t;
        }
        if let Some(s) = seed {
            spec.base_seed = s;
        }
        spec.validate()?;
        let started = std::time::Instant::now();
        let rows = run_experiment(&spec, workers)?;
        let summary = summarize(&rows);
        let dir = out.join(&spec.name);
        write_experiment(&dir, &spec, &rows, &summary)?;
        let plots = emit_plots(&summary, &dir, &spec.name)?;
        print_summary(&spec.name, &summary);
        println!(
            "{}: {} trials in {:.1}s -> {}",
            spec.name,
            rows.len(),
            started.elapsed().as_secs_f64(),
            dir.display()
        );
        if plots.is_empty() {
            println!("{}: no plots (empty summary)", spec.name);
        }
        if *id >= 3 {
            sweeps.extend(summary);
        }
    }
    if ids.contains(&3) && ids.contains(&4) {
        std::fs::create_dir_all(&out).map_err(|e| HarnessError::io(&out, e))?;
        emit_plots(&sweeps, &out, "exp3_4")?;
    }
    Ok(())
}

fn fmt_stat(s: Option<locus_core::harness::Stats>) -> String {
    s.map(|s| format!("{:>8.1} {:>8.1} {:>8.1}", s.median, s.mean, s.std))
        .unwrap_or_else(|| format!("{:>8} {:>8} {:>8}", "-", "-", "-"))
}

fn print_summary(name: &str, rows: &[SummaryRow]) {
    println!(
        "{name}: {:<14} {:>3} {:<9} {:>8} {:>8} {:>7}  {:>26}",
        "algorithm", "n", "plume", "p_gen", "p_in", "success", "max flux min: median mean std"
    );
    for r in rows {
        println!(
            "{name}: {:<14} {:>3} {:<9} {:>8} {:>8} {:>3}/{:<3}  {}",
            r.cell.algorithm.as_str(),
            r.cell.n,
            r.cell.plume.as_str(),
            r.cell.p_generic,
            r.cell.p_inplume,
            r.successes,
            r.trials,
            fmt_stat(r.maxflux)
        );
    }
}

fn cmd_trial(cfg: TrialConfig, seed: u64, trace: Option<&Path>) -> Result<(), HarnessError> {
    let mut world = World::new(cfg, seed)?;
    match trace {
        None => while world.step().is_none() {},
        Some(path) => {
            let f = File::create(path).map_err(|e| HarnessError::io(path, e))?;
            let mut w = BufWriter::new(f);
            let io = |e| HarnessError::io(path, e);
            writeln!(w, "tick,drone,x,y,z,alive,reading,mode").map_err(io)?;
            loop {
                let done = world.step();
                for (i, d) in world.drones().iter().enumerate() {
                    writeln!(
                        w,
                        "{},{},{:.4},{:.4},{:.4},{},{:.6e},{}",
                        world.tick(),
                        i,
                        d.pos.x,
                        d.pos.y,
                        d.pos.z,
                        d.alive,
                        world.plume().reading(d.pos.horizontal()),
                        world.drone_mode(i)
                    )
                    .map_err(io)?;
                }
                if done.is_some() {
                    break;
                }
            }
            w.flush().map_err(io)?;
        }
    }
    let result = world.result();
    let peak = world.plume().peak();
    let v = serde_json::json!({
        "seed": seed,
        "peak": [peak.x, peak.y],
        "result": result,
    });
    println!("{}", serde_json::to_string_pretty(&v).expect("result serializes"));
    Ok(())
}

fn cmd_layout(n: usize, rmin: f64, rmax: f64) -> Result<(), HarnessError> {
    let params = TreeParams::new(rmin, rmax).map_err(|e| ConfigError::Invalid(e.to_string()))?;
    if n == 0 {
        return Err(ConfigError::Invalid("n must be at least 1".into()).into());
    }
    let tree = SwarmTree::populated(n, params);
    print!("{}", layout_csv(&tree));
    eprintln!("max link length: {:.4} m", tree.max_link_length());
    Ok(())
}

fn cmd_plume(perturbed: bool, half_width: f64, step: f64) -> Result<(), HarnessError> {
    if !(step > 0.0 && half_width >= 0.0) {
        return Err(ConfigError::Invalid("step must be positive".into()).into());
    }
    let params = PlumeParams {
        perturbed,
        ..PlumeParams::default()
    };
    let pose = PlumePose::with_peak_at(Vec2::ZERO, 0.0, &params);
    let field = PlumeField::new(params, pose).map_err(|e| ConfigError::Invalid(e.to_string()))?;
    let csv = raster_csv(&field, half_width, step);
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    lock.write_all(csv.as_bytes())
        .map_err(|e| HarnessError::io("<stdout>", e))?;
    Ok(())
}

//! Command-line driver for the spin-bath simulator.

pub mod config;
pub mod output;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde_json::{json, Map, Value};
use spinbath_core::experiments::{self, series_stats};
use spinbath_core::verify;

use config::{Command, Params};
use output::{cell, Manifest};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid {0}")]
    Usage(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Core(#[from] spinbath_core::Error),
    #[error("thread pool: {0}")]
    ThreadPool(String),
    #[error("verification failed")]
    VerificationFailed,
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            _ => 1,
        }
    }
}

/// Subcommand outcome before the manifest is assembled.
struct Outcome {
    parameters: Params,
    outputs: Vec<PathBuf>,
    summary: Map<String, Value>,
    failed: bool,
}

/// Runs one parsed command; the manifest is written even when verification fails.
pub fn execute(command: &Command) -> Result<(), CliError> {
    let params = config::parse_config(command.params())?;
    let threads = params.threads()?;
    let out = params
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from(format!("spinbath-{}.csv", command.name())));
    let manifest_path = params
        .manifest
        .clone()
        .unwrap_or_else(|| output::default_manifest_path(&out));

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::ThreadPool(e.to_string()))?;
    let started = Instant::now();
    let outcome = pool.install(|| match command {
        Command::Run(_) => run(&params, &out),
        Command::Local(_) => local(&params, &out),
        Command::Ensemble(_) => ensemble(&params, &out),
        Command::Scaling(_) => scaling(&params, &out),
        Command::Verify(_) => verify(&params, &out),
    })?;
    let wall = started.elapsed().as_secs_f64();

    let parameters = output::parameter_map(&outcome.parameters);
    let manifest = Manifest {
        tool: "spinbath",
        tool_version: env!("CARGO_PKG_VERSION"),
        subcommand: command.name().to_string(),
        command_line: output::command_line(command.name(), &parameters, &out),
        parameters,
        seed: params.seed(),
        threads,
        wall_time_seconds: wall,
        outputs: outcome
            .outputs
            .iter()
            .map(|p| p.to_string_lossy().into_owned())
            .collect(),
        summary: outcome.summary,
    };
    manifest.write(&manifest_path)?;

    if outcome.failed {
        Err(CliError::VerificationFailed)
    } else {
        Ok(())
    }
}

fn float(v: Option<f64>) -> Value {
    v.map_or(Value::Null, |x| json!(x))
}

fn grid_params(p: &Params, default_n: usize) -> Result<Params, CliError> {
    let grid = p.grid()?;
    Ok(Params {
        n: Some(p.n_or(default_n)?),
        seed: Some(p.seed()),
        t_max: Some(grid.end()),
        steps: Some(grid.len() - 1),
        burn_in: Some(p.burn_in()?),
        ..Params::default()
    })
}

fn run_params(p: &Params) -> Result<Params, CliError> {
    Ok(Params {
        scenario: Some(p.scenario()?.as_str().to_string()),
        branch: Some(p.branch()?.index()),
        ..grid_params(p, 100)?
    })
}

fn run(p: &Params, out: &Path) -> Result<Outcome, CliError> {
    let config = p.run_config(100)?;
    let result = experiments::run_single(&config)?;
    output::write_series(out, "log10_abs_lambda", &result.series)?;
    if result.degenerate {
        eprintln!("warning: Lambda(0) vanishes for this instance; series left empty");
    }
    let mut summary = Map::new();
    summary.insert("degenerate".into(), json!(result.degenerate));
    summary.insert("decayed".into(), json!(result.decayed));
    summary.insert("baseline".into(), float(result.baseline()));
    summary.insert("amplitude".into(), float(result.amplitude()));
    summary.insert("drift".into(), float(result.stats.map(|s| s.drift())));
    println!(
        "n={} scenario={} seed={} baseline={} decayed={} degenerate={}",
        config.n,
        config.scenario.as_str(),
        config.seed,
        cell(result.baseline()),
        result.decayed,
        result.degenerate
    );
    Ok(Outcome {
        parameters: run_params(p)?,
        outputs: vec![out.to_path_buf()],
        summary,
        failed: false,
    })
}

fn local(p: &Params, out: &Path) -> Result<Outcome, CliError> {
    let grid = p.grid()?;
    let n = p.n_or(20)?;
    let series = experiments::local_decoherence_run(n, p.seed(), &grid)?;
    output::write_series(out, "log10_abs_r", &series)?;
    let stats = series_stats(&series, grid.burn_in_time(p.burn_in()?));
    let mut summary = Map::new();
    summary.insert("baseline".into(), json!(stats.baseline));
    summary.insert("amplitude".into(), json!(stats.amplitude));
    println!("n={n} seed={} baseline={:.6}", p.seed(), stats.baseline);
    Ok(Outcome {
        parameters: grid_params(p, 20)?,
        outputs: vec![out.to_path_buf()],
        summary,
        failed: false,
    })
}

const RUN_COLUMNS: &str =
    "n,seed,baseline,amplitude,baseline_first_half,baseline_second_half,drift,decayed,degenerate";

fn run_row(
    w: &mut impl Write,
    n: usize,
    seed: u64,
    stats: Option<experiments::SeriesStats>,
    decayed: bool,
    degenerate: bool,
) -> std::io::Result<()> {
    writeln!(
        w,
        "{n},{seed},{},{},{},{},{},{decayed},{degenerate}",
        cell(stats.map(|s| s.baseline)),
        cell(stats.map(|s| s.amplitude)),
        cell(stats.map(|s| s.baseline_first_half)),
        cell(stats.map(|s| s.baseline_second_half)),
        cell(stats.map(|s| s.drift())),
    )
}

fn ensemble(p: &Params, out: &Path) -> Result<Outcome, CliError> {
    let base = p.run_config(100)?;
    let seeds = p.seed_list()?;
    let summary_data = experiments::run_ensemble(&base, &seeds)?;
    output::write_file(out, |w| {
        writeln!(w, "{RUN_COLUMNS}")?;
        for r in &summary_data.runs {
            run_row(w, r.n, r.seed, r.stats, r.decayed, r.degenerate)?;
        }
        Ok(())
    })?;
    let median = (!summary_data.baselines().is_empty()).then(|| summary_data.median_baseline());
    let mut summary = Map::new();
    summary.insert("runs".into(), json!(summary_data.runs.len()));
    summary.insert("decay_fraction".into(), json!(summary_data.decay_fraction));
    summary.insert("degenerate_count".into(), json!(summary_data.degenerate_count));
    summary.insert("median_baseline".into(), float(median));
    println!(
        "scenario={} n={} runs={} decay_fraction={:.3} median_baseline={} degenerate={}",
        base.scenario.as_str(),
        base.n,
        summary_data.runs.len(),
        summary_data.decay_fraction,
        cell(median),
        summary_data.degenerate_count
    );
    Ok(Outcome {
        parameters: Params {
            seeds: Some(seeds.len()),
            ..run_params(p)?
        },
        outputs: vec![out.to_path_buf()],
        summary,
        failed: false,
    })
}

fn scaling(p: &Params, out: &Path) -> Result<Outcome, CliError> {
    let ns = p.bath_sizes()?;
    let results = experiments::scaling_study(
        &ns,
        p.scenario()?,
        p.seed(),
        p.grid()?,
        p.branch()?,
        p.burn_in()?,
    )?;
    let mut outputs = vec![out.to_path_buf()];
    output::write_file(out, |w| {
        writeln!(w, "{RUN_COLUMNS}")?;
        for (n, r) in &results {
            run_row(w, *n, r.seed, r.stats, r.decayed, r.degenerate)?;
        }
        Ok(())
    })?;
    for (n, r) in &results {
        let path = output::scaling_series_path(out, *n);
        output::write_series(&path, "log10_abs_lambda", &r.series)?;
        outputs.push(path);
    }

    let baselines: Vec<Option<f64>> = results.iter().map(|(_, r)| r.baseline()).collect();
    let monotone = baselines.windows(2).all(|w| match (w[0], w[1]) {
        (Some(a), Some(b)) => b < a,
        _ => false,
    });
    let mut summary = Map::new();
    summary.insert(
        "runs".into(),
        Value::Array(
            results
                .iter()
                .map(|(n, r)| {
                    json!({
                        "n": n,
                        "seed": r.seed,
                        "baseline": float(r.baseline()),
                        "drift": float(r.stats.map(|s| s.drift())),
                        "degenerate": r.degenerate,
                    })
                })
                .collect(),
        ),
    );
    summary.insert("monotone_decrease".into(), json!(monotone));
    for (n, r) in &results {
        println!("n={n} seed={} baseline={}", r.seed, cell(r.baseline()));
    }
    let sizes = ns.iter().map(|n| n.to_string()).collect::<Vec<_>>().join(",");
    Ok(Outcome {
        parameters: Params {
            n: None,
            ns: Some(sizes),
            ..run_params(&Params { n: Some(1), ..p.clone() })?
        },
        outputs,
        summary,
        failed: false,
    })
}

fn verify(p: &Params, out: &Path) -> Result<Outcome, CliError> {
    let opts = p.verify_options()?;
    let report = verify::run_verification(&opts)?;
    output::write_file(out, |w| {
        writeln!(w, "check,worst_error,worst_n,worst_seed,evaluations,passed")?;
        for c in &report.checks {
            writeln!(
                w,
                "\"{}\",{:.16e},{},{},{},{}",
                c.name, c.worst_error, c.worst_n, c.worst_seed, c.evaluations, c.passed
            )?;
        }
        Ok(())
    })?;
    for c in &report.checks {
        println!(
            "{} {}: worst {:.3e} (n={}, seed={})",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.worst_error,
            c.worst_n,
            c.worst_seed
        );
    }
    let mut summary = Map::new();
    summary.insert("passed".into(), json!(report.passed()));
    summary.insert(
        "checks".into(),
        serde_json::to_value(&report.checks).unwrap_or(Value::Null),
    );
    Ok(Outcome {
        parameters: Params {
            seed: Some(opts.seed),
            max_n: Some(opts.max_n),
            trials: Some(opts.trials),
            tolerance: Some(opts.tolerance),
            ..Params::default()
        },
        outputs: vec![out.to_path_buf()],
        summary,
        failed: !report.passed(),
    })
}

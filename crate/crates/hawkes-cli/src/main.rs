//! `hawkes`: command-line front end for ingesting event catalogs, fitting
//! spatio-temporal Hawkes models, simulating, evaluating holdout fit,
//! and producing diagnostics.
//!
//! Exit codes: 0 success, 2 configuration error, 3 data error, 4 optimizer
//! failure.

mod config;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use hawkes::{
    assemble_catalog, build_quadrature, build_quadrature_interval, compare_models, daily_counts,
    fit, holdout_log_likelihood, lag_summary, pair_lag_histogram, preset, read_covariate_csv,
    read_events_csv, read_polygon_json, simulate_branching, simulate_thinning, write_events_csv,
    CovariateLookup, EdgePolicy, EventCatalog, FitOptions, FitResult, FitSummary, HawkesError,
    Ingest, IngestOptions, ModelTemplate, Projection, SimConfig, SpatialWindow,
};

use config::{load_config, RunConfig};

const EXIT_CONFIG: u8 = 2;
const EXIT_DATA: u8 = 3;
const EXIT_OPTIMIZER: u8 = 4;

#[derive(Debug)]
pub struct CliError {
    code: u8,
    message: String,
}

impl CliError {
    pub fn config(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_CONFIG,
            message: message.into(),
        }
    }
    pub fn data(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_DATA,
            message: message.into(),
        }
    }
    pub fn optimizer(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_OPTIMIZER,
            message: message.into(),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

#[derive(Parser)]
#[command(name = "hawkes", version, about = "Spatio-temporal Hawkes model toolkit")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Parse and validate an event CSV into a catalog file.
    Ingest(CommonArgs),
    /// Fit a model preset to an event catalog by maximum likelihood.
    Fit(CommonArgs),
    /// Simulate a catalog from a fully specified model.
    Simulate(CommonArgs),
    /// Holdout log-likelihood of a fully specified model on a test window.
    Eval(CommonArgs),
    /// Pair-lag histograms, daily counts, and spatial lag summaries.
    Diagnose(CommonArgs),
    /// Rank fit results on the same catalog by information criteria.
    Compare(CompareArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// TOML run configuration; command-line flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Event CSV path (overrides [data].events).
    #[arg(long)]
    events: Option<PathBuf>,
    /// Model preset name, e.g. m1-1 .. m2-6 or poisson-const.
    #[arg(long)]
    preset: Option<String>,
    /// Seed override for the subcommand's random stream.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Spatial quadrature cells.
    #[arg(long = "grid-ns")]
    grid_ns: Option<usize>,
    /// Temporal quadrature steps.
    #[arg(long = "grid-nt")]
    grid_nt: Option<usize>,
    /// Drop events with specificity above this value.
    #[arg(long = "specificity-max")]
    specificity_max: Option<u8>,
    /// Continue past malformed CSV rows instead of aborting.
    #[arg(long = "skip-bad-rows")]
    skip_bad_rows: bool,
}

#[derive(Args)]
struct CompareArgs {
    /// fit.json files produced by `hawkes fit`.
    #[arg(required = true)]
    fits: Vec<PathBuf>,
    /// Output CSV path (stdout when absent).
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Provenance stamped into every output file.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct Repro {
    config_sha256: String,
    seed: u64,
    version: String,
}

fn repro(config_bytes: &[u8], seed: u64) -> Repro {
    let mut h = Sha256::new();
    h.update(config_bytes);
    Repro {
        config_sha256: format!("{:x}", h.finalize()),
        seed,
        version: env!("CARGO_PKG_VERSION").to_string(),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.cmd {
        Cmd::Ingest(a) => cmd_ingest(&a),
        Cmd::Fit(a) => cmd_fit(&a),
        Cmd::Simulate(a) => cmd_simulate(&a),
        Cmd::Eval(a) => cmd_eval(&a),
        Cmd::Diagnose(a) => cmd_diagnose(&a),
        Cmd::Compare(a) => cmd_compare(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}

/// Effective settings = config file (if any) overridden by flags. The raw
/// config bytes feed the reproducibility hash; without a file, the
/// serialized effective config is hashed instead.
fn effective_config(args: &CommonArgs) -> CliResult<(RunConfig, Vec<u8>)> {
    let (mut cfg, bytes) = match &args.config {
        Some(p) => load_config(p)?,
        None => (RunConfig::default(), Vec::new()),
    };
    if let Some(p) = &args.events {
        cfg.data.events = Some(p.clone());
    }
    if let Some(p) = &args.preset {
        cfg.model.preset = Some(p.clone());
    }
    if let Some(s) = args.seed {
        cfg.fit.seed = s;
        cfg.simulate.seed = s;
    }
    if let Some(p) = &args.out {
        cfg.output.dir = Some(p.clone());
    }
    if let Some(n) = args.grid_ns {
        cfg.grid.n_s = n;
    }
    if let Some(n) = args.grid_nt {
        cfg.grid.n_t = n;
    }
    if let Some(s) = args.specificity_max {
        cfg.data.specificity_max = Some(s);
    }
    if args.skip_bad_rows {
        cfg.data.skip_bad_rows = true;
    }
    let hash_input = if bytes.is_empty() {
        toml::to_string(&cfg)
            .map_err(|e| CliError::config(format!("cannot serialize config: {e}")))?
            .into_bytes()
    } else {
        bytes
    };
    Ok((cfg, hash_input))
}

fn out_dir(cfg: &RunConfig) -> CliResult<PathBuf> {
    let dir = cfg.output.dir.clone().unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&dir)
        .map_err(|e| CliError::config(format!("cannot create output dir {}: {e}", dir.display())))?;
    Ok(dir)
}

fn write_json(path: &Path, value: &impl Serialize) -> CliResult<()> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::config(format!("serialization failed: {e}")))?;
    std::fs::write(path, text + "\n")
        .map_err(|e| CliError::config(format!("cannot write {}: {e}", path.display())))
}

#[derive(Serialize)]
struct IngestReport {
    reproducibility: Repro,
    n_events: usize,
    n_marks: usize,
    group_names: Vec<String>,
    n_filtered_by_specificity: usize,
    bad_rows: Vec<(usize, String)>,
    t_end: f64,
    window_area_km2: f64,
    catalog: EventCatalog,
}

/// Shared loader: events CSV -> validated, projected, filtered catalog.
fn load_catalog(cfg: &RunConfig) -> CliResult<(Ingest, Vec<(usize, String)>)> {
    let events_path = cfg
        .data
        .events
        .as_ref()
        .ok_or_else(|| CliError::config("no event file: set [data].events or --events"))?;
    let (raw, bad_rows) = read_events_csv(events_path)
        .map_err(|e| CliError::data(format!("{}: {e}", events_path.display())))?;
    if !bad_rows.is_empty() && !cfg.data.skip_bad_rows {
        let mut msg = format!(
            "{} malformed rows in {} (pass --skip-bad-rows to continue):",
            bad_rows.len(),
            events_path.display()
        );
        for (row, why) in &bad_rows {
            let _ = write!(msg, "\n  row {row}: {why}");
        }
        return Err(CliError::data(msg));
    }
    let polygon_deg = match &cfg.data.polygon {
        Some(p) => Some(
            read_polygon_json(p).map_err(|e| CliError::data(format!("{}: {e}", p.display())))?,
        ),
        None => None,
    };
    let options = IngestOptions {
        specificity_max: cfg.data.specificity_max,
        polygon_deg,
        jitter_sd: cfg.data.jitter_sd,
        jitter_seed: cfg.data.jitter_seed,
        t_end: cfg.data.t_end,
    };
    let ingest = assemble_catalog(&raw, &options).map_err(|e| CliError::data(e.to_string()))?;
    Ok((ingest, bad_rows))
}

fn load_covariate(cfg: &RunConfig, catalog: &EventCatalog) -> CliResult<Option<CovariateLookup>> {
    match &cfg.data.covariate {
        None => Ok(None),
        Some(p) => {
            let field =
                read_covariate_csv(p).map_err(|e| CliError::data(format!("{}: {e}", p.display())))?;
            Ok(Some(CovariateLookup::new(
                Arc::new(field),
                catalog.projection(),
                catalog.epoch,
            )))
        }
    }
}

fn load_template(cfg: &RunConfig, covariate: Option<CovariateLookup>) -> CliResult<ModelTemplate> {
    let name = cfg
        .model
        .preset
        .as_ref()
        .ok_or_else(|| CliError::config("no model preset: set [model].preset or --preset"))?;
    preset(name, covariate).map_err(|e| CliError::config(e.to_string()))
}

fn cmd_ingest(args: &CommonArgs) -> CliResult<()> {
    let (cfg, hash_input) = effective_config(args)?;
    let (ingest, bad_rows) = load_catalog(&cfg)?;
    let dir = out_dir(&cfg)?;
    let report = IngestReport {
        reproducibility: repro(&hash_input, cfg.data.jitter_seed),
        n_events: ingest.catalog.len(),
        n_marks: ingest.catalog.n_marks(),
        group_names: ingest.group_names.clone(),
        n_filtered_by_specificity: ingest.n_filtered,
        bad_rows,
        t_end: ingest.catalog.t_end(),
        window_area_km2: ingest.catalog.window().area(),
        catalog: ingest.catalog.clone(),
    };
    write_json(&dir.join("catalog.json"), &report)?;
    println!(
        "ingested {} events, {} groups ({}), T = {:.3} days -> {}",
        report.n_events,
        report.n_marks,
        report.group_names.join(", "),
        report.t_end,
        dir.join("catalog.json").display()
    );
    Ok(())
}

#[derive(Serialize, Deserialize)]
struct FitFile {
    reproducibility: Repro,
    result: FitResult,
}

fn cmd_fit(args: &CommonArgs) -> CliResult<()> {
    let (cfg, hash_input) = effective_config(args)?;
    let (ingest, _) = load_catalog(&cfg)?;
    let catalog = &ingest.catalog;
    let covariate = load_covariate(&cfg, catalog)?;
    let template = load_template(&cfg, covariate)?;
    if template.n_marks != catalog.n_marks() {
        return Err(CliError::config(format!(
            "preset {} expects {} group(s), catalog has {}",
            template.name,
            template.n_marks,
            catalog.n_marks()
        )));
    }
    let grid = build_quadrature(catalog.window(), catalog.t_end(), cfg.grid.n_s, cfg.grid.n_t)
        .map_err(|e| CliError::config(e.to_string()))?;
    let options = FitOptions {
        n_starts: cfg.fit.starts,
        seed: cfg.fit.seed,
        tol: cfg.fit.tol,
        max_rounds: cfg.fit.max_rounds,
        horizon: cfg.fit.horizon,
        extra_starts: Vec::new(),
        compute_ses: cfg.fit.ses,
    };
    let result = fit(&template, catalog, &grid, &options)
        .map_err(|e| CliError::optimizer(e.to_string()))?;
    let dir = out_dir(&cfg)?;
    let header = repro(&hash_input, options.seed);
    let file = FitFile {
        reproducibility: header.clone(),
        result,
    };
    write_json(&dir.join("fit.json"), &file)?;

    // plain-text parameter table
    let mut table = format!(
        "# config_sha256={} seed={} version={}\nparameter,estimate,se,counted\n",
        header.config_sha256, header.seed, header.version
    );
    for p in &file.result.params {
        let se = p.se.map(|s| format!("{s:.6}")).unwrap_or_default();
        let _ = writeln!(table, "{},{:.6},{},{}", p.name, p.value, se, p.counted);
    }
    std::fs::write(dir.join("table.csv"), table)
        .map_err(|e| CliError::config(format!("cannot write table.csv: {e}")))?;
    println!(
        "fit {}: loglik = {:.4}, k = {}, AIC = {:.2}, converged = {} -> {}",
        file.result.template_name,
        file.result.loglik,
        file.result.k,
        file.result.aic,
        file.result.converged,
        dir.join("fit.json").display()
    );
    Ok(())
}

fn cmd_simulate(args: &CommonArgs) -> CliResult<()> {
    let (cfg, hash_input) = effective_config(args)?;
    let params = cfg
        .model
        .params
        .as_ref()
        .ok_or_else(|| CliError::config("simulate needs [model].params (natural scale)"))?;
    let wd = cfg
        .simulate
        .window_deg
        .ok_or_else(|| CliError::config("simulate needs [simulate].window_deg = [lon0, lon1, lat0, lat1]"))?;
    let [lon0, lon1, lat0, lat1] = wd;
    if !(lon1 > lon0 && lat1 > lat0) {
        return Err(CliError::config(format!(
            "degenerate window_deg [{lon0}, {lon1}] x [{lat0}, {lat1}]"
        )));
    }
    let projection = Projection::new(0.5 * (lon0 + lon1), 0.5 * (lat0 + lat1))
        .map_err(|e| CliError::config(e.to_string()))?;
    let (x0, y0) = projection
        .project(lon0, lat0)
        .map_err(|e| CliError::config(e.to_string()))?;
    let (x1, y1) = projection
        .project(lon1, lat1)
        .map_err(|e| CliError::config(e.to_string()))?;
    let window = SpatialWindow::rect(x0, x1, y0, y1).map_err(|e| CliError::config(e.to_string()))?;

    // a covariate-free template is enough to assemble the model from params
    let template = load_template(&cfg, None)?;
    let model = template
        .build_model(params, cfg.simulate.t_end)
        .map_err(|e| CliError::config(e.to_string()))?;
    let edge = match cfg.simulate.edge.as_str() {
        "clip" => EdgePolicy::Clip,
        "none" => EdgePolicy::None,
        other => return Err(CliError::config(format!("unknown edge policy '{other}'"))),
    };
    let sim = SimConfig {
        model,
        window,
        t_end: cfg.simulate.t_end,
        seed: cfg.simulate.seed,
        edge,
        projection,
    };
    let catalog = match cfg.simulate.sampler.as_str() {
        "branching" => simulate_branching(&sim),
        "thinning" => simulate_thinning(&sim),
        other => return Err(CliError::config(format!("unknown sampler '{other}'"))),
    }
    .map_err(|e| CliError::data(e.to_string()))?;

    let dir = out_dir(&cfg)?;
    let path = dir.join("events.csv");
    let group_names: Vec<String> = (0..catalog.n_marks()).map(|m| format!("g{m}")).collect();
    write_events_csv(&catalog, &group_names, &path)
        .map_err(|e| CliError::data(e.to_string()))?;
    let header = repro(&hash_input, sim.seed);
    let body = std::fs::read_to_string(&path)
        .map_err(|e| CliError::data(format!("cannot reread {}: {e}", path.display())))?;
    std::fs::write(
        &path,
        format!(
            "# config_sha256={} seed={} version={}\n{body}",
            header.config_sha256, header.seed, header.version
        ),
    )
    .map_err(|e| CliError::data(format!("cannot write {}: {e}", path.display())))?;
    println!(
        "simulated {} events over {:.1} days ({} sampler, seed {}) -> {}",
        catalog.len(),
        catalog.t_end(),
        cfg.simulate.sampler,
        sim.seed,
        path.display()
    );
    Ok(())
}

#[derive(Serialize)]
struct EvalReport {
    reproducibility: Repro,
    preset: String,
    t_split: f64,
    condition_on_history: bool,
    holdout_loglik: f64,
    n_test_events: usize,
}

fn cmd_eval(args: &CommonArgs) -> CliResult<()> {
    let (cfg, hash_input) = effective_config(args)?;
    let params = cfg
        .model
        .params
        .as_ref()
        .ok_or_else(|| CliError::config("eval needs [model].params (natural scale)"))?;
    let t_split = cfg
        .eval
        .t_split
        .ok_or_else(|| CliError::config("eval needs [eval].t_split"))?;
    let (ingest, _) = load_catalog(&cfg)?;
    let catalog = &ingest.catalog;
    let covariate = load_covariate(&cfg, catalog)?;
    let template = load_template(&cfg, covariate)?;
    let model = template
        .build_model(params, catalog.t_end())
        .map_err(|e| CliError::config(e.to_string()))?;
    let grid = build_quadrature_interval(
        catalog.window(),
        t_split,
        catalog.t_end(),
        cfg.grid.n_s,
        cfg.grid.n_t,
    )
    .map_err(|e| CliError::config(e.to_string()))?;
    let horizon = cfg.fit.horizon.unwrap_or_else(|| model.default_horizon());
    let report = holdout_log_likelihood(
        &model,
        catalog,
        t_split,
        &grid,
        horizon,
        cfg.eval.condition_on_history,
    )
    .map_err(|e| CliError::data(e.to_string()))?;
    let dir = out_dir(&cfg)?;
    let out = EvalReport {
        reproducibility: repro(&hash_input, cfg.fit.seed),
        preset: template.name.clone(),
        t_split,
        condition_on_history: cfg.eval.condition_on_history,
        holdout_loglik: report.loglik,
        n_test_events: report.n_events,
    };
    write_json(&dir.join("eval.json"), &out)?;
    println!(
        "holdout loglik on [{t_split}, {:.3}): {:.4} over {} events -> {}",
        catalog.t_end(),
        out.holdout_loglik,
        out.n_test_events,
        dir.join("eval.json").display()
    );
    Ok(())
}

fn cmd_diagnose(args: &CommonArgs) -> CliResult<()> {
    let (cfg, hash_input) = effective_config(args)?;
    let (ingest, _) = load_catalog(&cfg)?;
    let catalog = &ingest.catalog;
    let d = &cfg.diagnose;
    let hist = pair_lag_histogram(
        catalog,
        d.mark_from,
        d.mark_to,
        d.max_dt,
        d.max_ds,
        (d.bins[0], d.bins[1]),
    )
    .map_err(|e| CliError::data(e.to_string()))?;

    let dir = out_dir(&cfg)?;
    let header = repro(&hash_input, cfg.fit.seed);

    // histogram CSV with a single-line JSON header comment
    let meta = serde_json::json!({
        "reproducibility": header,
        "mark_from": hist.mark_from,
        "mark_to": hist.mark_to,
        "max_dt": hist.max_dt,
        "max_ds": hist.max_ds,
        "bins": [hist.bins.0, hist.bins.1],
        "total_pairs": hist.total_pairs,
    });
    let mut csv_text = format!("# {meta}\ndt_bin,ds_bin,count,normalized\n");
    for i in 0..hist.bins.0 {
        for j in 0..hist.bins.1 {
            let idx = i * hist.bins.1 + j;
            let _ = writeln!(
                csv_text,
                "{i},{j},{},{:.8}",
                hist.counts[idx], hist.normalized[idx]
            );
        }
    }
    std::fs::write(dir.join("pair_lag_histogram.csv"), csv_text)
        .map_err(|e| CliError::data(format!("cannot write histogram: {e}")))?;

    // daily counts, one column per mark
    let per_mark: Vec<Vec<u64>> = (0..catalog.n_marks())
        .map(|m| daily_counts(catalog, m))
        .collect();
    let n_days = per_mark.iter().map(|v| v.len()).max().unwrap_or(0);
    let mut daily = format!(
        "# config_sha256={} version={}\nday{}\n",
        header.config_sha256,
        header.version,
        (0..catalog.n_marks()).fold(String::new(), |mut s, m| {
            let _ = write!(s, ",{}", ingest.group_names.get(m).cloned().unwrap_or(format!("g{m}")));
            s
        })
    );
    for day in 0..n_days {
        let _ = write!(daily, "{day}");
        for counts in &per_mark {
            let _ = write!(daily, ",{}", counts.get(day).copied().unwrap_or(0));
        }
        daily.push('\n');
    }
    std::fs::write(dir.join("daily_counts.csv"), daily)
        .map_err(|e| CliError::data(format!("cannot write daily counts: {e}")))?;

    // spatial lag summary for the same ordered pair, when any pairs exist
    match lag_summary(catalog, d.mark_to, d.mark_from) {
        Ok(summary) => {
            write_json(
                &dir.join("lag_summary.json"),
                &serde_json::json!({ "reproducibility": header, "summary": summary }),
            )?;
        }
        Err(HawkesError::Domain(_)) => {
            println!("no ordered pairs for lag summary; skipping lag_summary.json");
        }
        Err(e) => return Err(CliError::data(e.to_string())),
    }
    println!(
        "diagnostics for marks {} -> {}: {} pairs -> {}",
        d.mark_from,
        d.mark_to,
        hist.total_pairs,
        dir.display()
    );
    Ok(())
}

fn cmd_compare(args: &CompareArgs) -> CliResult<()> {
    let mut summaries: Vec<FitSummary> = Vec::new();
    let mut hashes = String::new();
    for path in &args.fits {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::data(format!("cannot read {}: {e}", path.display())))?;
        let file: FitFile = serde_json::from_str(&text)
            .map_err(|e| CliError::data(format!("{} is not a fit file: {e}", path.display())))?;
        let _ = write!(hashes, "{} ", file.reproducibility.config_sha256);
        summaries.push(file.result.summary());
    }
    let rows = compare_models(&summaries).map_err(|e| CliError::data(e.to_string()))?;
    let mut out = format!(
        "# inputs_sha256=[{}] version={}\nmodel,loglik,k,n,aic,bic,hq,best_aic,best_bic,best_hq\n",
        hashes.trim_end(),
        env!("CARGO_PKG_VERSION")
    );
    for r in &rows {
        let _ = writeln!(
            out,
            "{},{:.4},{},{},{:.2},{:.2},{:.2},{},{},{}",
            r.name, r.loglik, r.k, r.n, r.aic, r.bic, r.hq, r.best_aic, r.best_bic, r.best_hq
        );
    }
    match &args.out {
        Some(p) => std::fs::write(p, out)
            .map_err(|e| CliError::data(format!("cannot write {}: {e}", p.display())))?,
        None => print!("{out}"),
    }
    Ok(())
}

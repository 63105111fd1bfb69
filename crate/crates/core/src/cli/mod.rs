//! `lai-gpr` command-line front end.
//!
//! Progress goes to standard error; each subcommand ends by printing a
//! `key=value` summary on standard output. Every output directory receives a
//! `config.txt` that can be passed back through `--config`.

mod config;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, ensure, Context, Result};
use clap::{Args, Parser, Subcommand};

use crate::evaluation::{compute_stats_with, scatter_export, R2Mode, StatsReport};
use crate::field::{
    build_training_set, load_esu_csv, run_protocol, write_archive, Instrument, SplitSpec,
};
use crate::gp::{fit, FitConfig, TrainedModel, DEFAULT_SEED};
use crate::raster::{
    data_path_for, predict_map, render_heatmap, Layer, MapOptions, Palette, PixelMask, Raster,
    DEFAULT_CV_FLOOR, DEFAULT_GCOS_THRESHOLD,
};
pub use config::{parse_config, Resolver};

pub const VERSION: &str = concat!(
    env!("CARGO_PKG_VERSION"),
    " (model format gpr-lai-model/1, raster format gpr-lai-raster/1)"
);

/// Marker left in a train output directory until every output is written.
pub const INCOMPLETE_MARKER: &str = "INCOMPLETE";

#[derive(Debug, Parser)]
#[command(name = "lai-gpr", version = VERSION, about = "Gaussian process LAI retrieval")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the repeated split protocol and fit a final model on all records.
    Train(TrainArgs),
    /// Apply a model to a reflectance raster.
    PredictMap(PredictMapArgs),
    /// Compare two or three map products pixel by pixel.
    Compare(CompareArgs),
    /// Render one layer as a PNG heat map.
    Render(RenderArgs),
}

#[derive(Debug, Args)]
pub struct Common {
    /// `key = value` settings file; flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Allow writing into an existing non-empty output location.
    #[arg(long)]
    pub force: bool,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub common: Common,
    /// Ground-record CSV.
    #[arg(long)]
    pub esu: Option<PathBuf>,
    /// app, dhp, or lic.
    #[arg(long)]
    pub instrument: Option<Instrument>,
    #[arg(long)]
    pub runs: Option<usize>,
    #[arg(long)]
    pub train_fraction: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub restarts: Option<usize>,
    #[arg(long)]
    pub max_iterations: Option<usize>,
    #[arg(long)]
    pub gradient_tolerance: Option<f64>,
    /// Pin the lengthscale (standardized input units).
    #[arg(long)]
    pub fix_lengthscale: Option<f64>,
    /// Pin the signal amplitude; 1 gives the unit-amplitude kernel.
    #[arg(long)]
    pub fix_signal_amp: Option<f64>,
    #[arg(long)]
    pub fix_noise_std: Option<f64>,
    /// pearson or determination.
    #[arg(long)]
    pub r2_mode: Option<R2Mode>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PredictMapArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Raster header; data is read from the `.bin` beside it.
    #[arg(long)]
    pub raster: Option<PathBuf>,
    /// Single-band mask header; nonzero = valid. All pixels valid if omitted.
    #[arg(long)]
    pub mask: Option<PathBuf>,
    #[arg(long)]
    pub cv_floor: Option<f64>,
    #[arg(long)]
    pub gcos_threshold: Option<f64>,
    /// Rows per work block.
    #[arg(long)]
    pub block_rows: Option<usize>,
    #[arg(long)]
    pub palette: Option<Palette>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub common: Common,
    /// Product directory written by predict-map (repeat 2 or 3 times).
    #[arg(long)]
    pub product: Vec<String>,
    /// Name per product, in the same order; defaults to directory names.
    #[arg(long)]
    pub label: Vec<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RenderArgs {
    #[command(flatten)]
    pub common: Common,
    /// Single-band layer header.
    #[arg(long)]
    pub layer: Option<PathBuf>,
    #[arg(long)]
    pub palette: Option<Palette>,
    /// Output PNG.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub type Summary = Vec<(String, String)>;

fn kv(summary: &mut Summary, k: &str, v: impl ToString) {
    summary.push((k.to_string(), v.to_string()));
}

/// Parses arguments, runs the subcommand, prints its summary, and maps
/// failure to a nonzero exit code.
pub fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    match run(cli.command) {
        Ok(summary) => {
            for (k, v) in summary {
                println!("{k}={v}");
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

pub fn run(command: Command) -> Result<Summary> {
    match command {
        Command::Train(a) => train(a),
        Command::PredictMap(a) => predict_map_cmd(a),
        Command::Compare(a) => compare(a),
        Command::Render(a) => render(a),
    }
}

/// Refuses a non-empty existing directory unless forced, then creates it.
fn prepare_dir(dir: &Path, force: bool) -> Result<()> {
    if dir.exists() {
        ensure!(
            dir.is_dir(),
            "{} exists and is not a directory",
            dir.display()
        );
        let non_empty = fs::read_dir(dir)?.next().is_some();
        ensure!(
            !non_empty || force,
            "{} is not empty; pass --force to overwrite",
            dir.display()
        );
    }
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn train(a: TrainArgs) -> Result<Summary> {
    let mut r = Resolver::new("train", a.common.config.as_deref())?;
    let esu = r.path("esu", a.esu)?;
    let instrument: Instrument = r.required("instrument", a.instrument)?;
    let defaults = SplitSpec::default();
    let spec = SplitSpec {
        n_runs: r.value("runs", a.runs, defaults.n_runs)?,
        train_fraction: r.value("train-fraction", a.train_fraction, defaults.train_fraction)?,
        seed: r.value("seed", a.seed, DEFAULT_SEED)?,
    };
    let fd = FitConfig::default();
    let fit_config = FitConfig {
        restarts: r.value("restarts", a.restarts, fd.restarts)?,
        max_iterations: r.value("max-iterations", a.max_iterations, fd.max_iterations)?,
        gradient_tolerance: r.value(
            "gradient-tolerance",
            a.gradient_tolerance,
            fd.gradient_tolerance,
        )?,
        seed: spec.seed,
        fixed_lengthscale: r.optional("fix-lengthscale", a.fix_lengthscale)?,
        fixed_signal_amp: r.optional("fix-signal-amp", a.fix_signal_amp)?,
        fixed_noise_std: r.optional("fix-noise-std", a.fix_noise_std)?,
    };
    let r2_mode: R2Mode = r.value("r2-mode", a.r2_mode, R2Mode::default())?;
    let out = r.path("out", a.out)?;
    r.finish()?;
    spec.validate()?;

    let load = load_esu_csv(&esu)?;
    for rej in &load.rejected {
        log::warn!(
            "{}: line {}: rejected: {}",
            esu.display(),
            rej.line,
            rej.reason
        );
    }
    log::info!(
        "{} records loaded, {} rejected",
        load.records.len(),
        load.rejected.len()
    );
    let records = load.records;
    // fail on unusable data before touching the output directory
    build_training_set(&records, instrument)?;

    prepare_dir(&out, a.common.force)?;
    let marker = out.join(INCOMPLETE_MARKER);
    write(&marker, "outputs in this directory are partial\n")?;
    write(&out.join("config.txt"), &r.echo())?;

    log::info!("{} runs for {}", spec.n_runs, instrument.label());
    let mut outcome = run_protocol(&records, instrument, &spec, &fit_config)?;
    if r2_mode != R2Mode::default() {
        for run in outcome.runs.iter_mut().filter(|run| run.stats.is_some()) {
            let means: Vec<f64> = run.predictions.iter().map(|p| p.mean).collect();
            run.stats = Some(compute_stats_with(&means, &run.observed, r2_mode)?);
        }
    }
    write_archive(&out, &outcome, &records)?;

    let mut summary = Summary::new();
    kv(&mut summary, "instrument", instrument.label());
    kv(&mut summary, "records", records.len());
    kv(&mut summary, "rejected", load.rejected.len());
    kv(&mut summary, "runs", outcome.runs.len());
    kv(&mut summary, "failed_runs", outcome.failed_runs());
    let mut report = StatsReport::default();
    match outcome.aggregate() {
        Some(agg) => {
            let c = agg.cells();
            for (k, v) in ["rmse", "mae", "abs_me", "r2"].iter().zip(c) {
                kv(&mut summary, k, v);
            }
            report.push(instrument.label(), agg);
        }
        None => log::warn!("every run failed; the report is empty"),
    }
    write(&out.join("report.txt"), &report.to_text())?;
    write(&out.join("report.csv"), &report.to_csv())?;

    log::info!("fitting final model on all usable records");
    let data = build_training_set(&records, instrument)?;
    let final_model = fit(&data, &fit_config)?.with_metadata("instrument", instrument.as_str());
    let final_path = out.join("final.model");
    final_model.save(&final_path)?;
    kv(&mut summary, "final_model", final_path.display());
    kv(&mut summary, "final_hyper", final_model.hyper());

    fs::remove_file(&marker).with_context(|| format!("removing {}", marker.display()))?;
    kv(&mut summary, "out", out.display());
    Ok(summary)
}

fn predict_map_cmd(a: PredictMapArgs) -> Result<Summary> {
    let mut r = Resolver::new("predict-map", a.common.config.as_deref())?;
    let model_path = r.path("model", a.model)?;
    let raster_path = r.path("raster", a.raster)?;
    let mask_path = r.optional_path("mask", a.mask)?;
    let options = MapOptions {
        cv_floor: r.value("cv-floor", a.cv_floor, DEFAULT_CV_FLOOR)?,
        gcos_threshold: r.value("gcos-threshold", a.gcos_threshold, DEFAULT_GCOS_THRESHOLD)?,
        block_rows: r.optional("block-rows", a.block_rows)?,
    };
    let palette: Palette = r.value("palette", a.palette, Palette::default())?;
    let out = r.path("out", a.out)?;
    r.finish()?;

    let model = TrainedModel::load(&model_path)?;
    let raster = Raster::load(&raster_path, &data_path_for(&raster_path))?;
    let mask = match &mask_path {
        Some(p) => PixelMask::load(p, &data_path_for(p))?,
        None => PixelMask::all_valid(raster.width(), raster.height()),
    };
    if out.exists() && !a.common.force && fs::read_dir(&out)?.next().is_some() {
        bail!("{} is not empty; pass --force to overwrite", out.display());
    }
    log::info!("predicting {}x{} pixels", raster.width(), raster.height());
    let mut product = predict_map(&model, &raster, &mask, &options)?;
    product.provenance.model = model_path.display().to_string();
    product.provenance.raster = raster_path.display().to_string();

    prepare_dir(&out, true)?;
    product.save(&out)?;
    render_heatmap(&product.mean, palette, &out.join("mean.png"))?;
    render_heatmap(&product.sigma, palette, &out.join("sigma.png"))?;
    render_heatmap(&product.cv, palette, &out.join("cv.png"))?;
    render_heatmap(
        &product.gcos_layer(),
        Palette::Grayscale,
        &out.join("gcos.png"),
    )?;
    write(&out.join("config.txt"), &r.echo())?;

    let s = product.summary();
    let mut summary = Summary::new();
    kv(&mut summary, "pixels", s.pixels);
    kv(&mut summary, "valid", s.valid);
    kv(
        &mut summary,
        "valid_percent",
        format!("{:.2}", s.valid_percent()),
    );
    kv(&mut summary, "negative_means", s.negative_means);
    kv(&mut summary, "gcos_pass", s.gcos_pass);
    kv(&mut summary, "gcos_fail", s.gcos_fail);
    kv(
        &mut summary,
        "gcos_pass_percent",
        format!("{:.2}", s.gcos_pass_percent()),
    );
    kv(&mut summary, "out", out.display());
    Ok(summary)
}

struct LoadedProduct {
    label: String,
    mean: Layer,
    sigma: Layer,
}

/// Values where both layers are valid.
fn paired(a: &Layer, b: &Layer) -> (Vec<f64>, Vec<f64>) {
    a.values
        .iter()
        .zip(&b.values)
        .filter_map(|(x, y)| Some(((*x)?, (*y)?)))
        .unzip()
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:?}")).unwrap_or_else(|| "NA".into())
}

fn compare(a: CompareArgs) -> Result<Summary> {
    let mut r = Resolver::new("compare", a.common.config.as_deref())?;
    let dirs = r.list("product", a.product);
    let labels = r.list("label", a.label);
    let out = r.path("out", a.out)?;
    r.finish()?;
    ensure!(
        (2..=3).contains(&dirs.len()),
        "compare needs 2 or 3 products, got {}",
        dirs.len()
    );
    ensure!(
        labels.is_empty() || labels.len() == dirs.len(),
        "{} labels for {} products",
        labels.len(),
        dirs.len()
    );

    let mut products = Vec::new();
    for (i, d) in dirs.iter().enumerate() {
        let dir = Path::new(d);
        let label = match labels.get(i) {
            Some(l) => l.clone(),
            None => dir
                .file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_else(|| format!("product{}", i + 1)),
        };
        products.push(LoadedProduct {
            label,
            mean: Layer::load(&dir.join("mean.hdr"))?,
            sigma: Layer::load(&dir.join("sigma.hdr"))?,
        });
    }
    for p in &products[1..] {
        let first = &products[0];
        ensure!(
            (p.mean.width, p.mean.height) == (first.mean.width, first.mean.height),
            "grid mismatch: {} is {}x{}, {} is {}x{}",
            p.label,
            p.mean.width,
            p.mean.height,
            first.label,
            first.mean.width,
            first.mean.height
        );
    }
    for (i, p) in products.iter().enumerate() {
        ensure!(
            !products[..i].iter().any(|q| q.label == p.label),
            "duplicate product label '{}'",
            p.label
        );
    }

    prepare_dir(&out, a.common.force)?;
    let mut table = String::from("a,b,n_mean,mean_bias,mean_r2,n_sigma,sigma_bias,sigma_r2\n");
    let mut summary = Summary::new();
    let mut pairs = 0;
    for i in 0..products.len() {
        for j in i + 1..products.len() {
            let (p, q) = (&products[i], &products[j]);
            let (ma, mb) = paired(&p.mean, &q.mean);
            let (sa, sb) = paired(&p.sigma, &q.sigma);
            ensure!(
                !ma.is_empty(),
                "{} and {} share no valid pixels",
                p.label,
                q.label
            );
            let stem = format!("scatter_{}_{}", p.label, q.label);
            let m = scatter_export(
                &ma,
                &mb,
                (p.label.as_str(), q.label.as_str()),
                &out.join(format!("{stem}_mean.csv")),
            )?;
            let s = scatter_export(
                &sa,
                &sb,
                (p.label.as_str(), q.label.as_str()),
                &out.join(format!("{stem}_sigma.csv")),
            )?;
            table.push_str(&format!(
                "{},{},{},{:?},{},{},{:?},{}\n",
                p.label,
                q.label,
                m.n,
                m.bias,
                fmt_opt(m.r2),
                s.n,
                s.bias,
                fmt_opt(s.r2)
            ));
            let key = format!("{}_vs_{}", p.label, q.label);
            kv(
                &mut summary,
                &format!("{key}.mean_bias"),
                format!("{:?}", m.bias),
            );
            kv(&mut summary, &format!("{key}.mean_r2"), fmt_opt(m.r2));
            kv(
                &mut summary,
                &format!("{key}.sigma_bias"),
                format!("{:?}", s.bias),
            );
            kv(&mut summary, &format!("{key}.sigma_r2"), fmt_opt(s.r2));
            pairs += 1;
        }
    }
    write(&out.join("comparison.csv"), &table)?;
    write(&out.join("config.txt"), &r.echo())?;
    summary.insert(0, ("pairs".into(), pairs.to_string()));
    kv(&mut summary, "out", out.display());
    Ok(summary)
}

fn render(a: RenderArgs) -> Result<Summary> {
    let mut r = Resolver::new("render", a.common.config.as_deref())?;
    let layer_path = r.path("layer", a.layer)?;
    let palette: Palette = r.value("palette", a.palette, Palette::default())?;
    let out = r.path("out", a.out)?;
    r.finish()?;
    ensure!(
        !out.exists() || a.common.force,
        "{} exists; pass --force to overwrite",
        out.display()
    );
    let layer = Layer::load(&layer_path)?;
    let stretch = render_heatmap(&layer, palette, &out)?;
    write(&out.with_extension("config.txt"), &r.echo())?;
    let mut summary = Summary::new();
    kv(&mut summary, "min", fmt_opt(stretch.map(|s| s.min)));
    kv(&mut summary, "max", fmt_opt(stretch.map(|s| s.max)));
    kv(&mut summary, "out", out.display());
    Ok(summary)
}

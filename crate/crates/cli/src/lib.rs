//! Command-line front end: synthetic data generation, benchmark runs,
//! batch prediction and plot-data emission.
//!
//! Every command writes deterministic output for identical inputs and flags,
//! whatever the thread count.

use std::collections::BTreeMap;
use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use cbrml::data::{generate_synthetic, load_csv, save_csv, split, write_csv, GeneratorConfig, SplitSpec};
use cbrml::plots::PlotData;
use cbrml::selection::{render_text, run_benchmark, write_report_csv, BenchmarkPlan, EvalReport};
use cbrml::{Dataset, Family, FittedModel, ModelSpec, ParamGrid};

/// Column appended by `predict`.
pub const PREDICTION_COLUMN: &str = "CBR_pred";

#[derive(Debug, Parser)]
#[command(name = "cbrml", version, about = "Soil CBR regression benchmark")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Default, Args)]
pub struct GlobalArgs {
    /// Seed for synthetic data (and for the split when --fixed-split is set).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output file (generate, predict) or directory (benchmark, plotdata).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Overwrite existing outputs.
    #[arg(long, global = true)]
    pub force: bool,
    /// TOML run configuration; command-line flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Draw one train/test split and reuse it for every benchmark seed.
    #[arg(long, global = true)]
    pub fixed_split: bool,
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a synthetic soil dataset as CSV.
    Generate {
        /// Number of samples.
        #[arg(long)]
        n: Option<usize>,
    },
    /// Grid-search and evaluate model families over several seeds.
    Benchmark {
        /// Labelled CSV; a synthetic dataset is generated when omitted.
        #[arg(long)]
        data: Option<PathBuf>,
        /// Comma-separated family keys or labels (default: all).
        #[arg(long, value_delimiter = ',')]
        families: Option<Vec<String>>,
        /// Comma-separated seeds (default: 0,1,2,3,4).
        #[arg(long, value_delimiter = ',')]
        seeds: Option<Vec<u64>>,
    },
    /// Append predictions from a saved model to a CSV.
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        input: PathBuf,
    },
    /// Emit scatter, residual-histogram and series tables for a labelled CSV.
    Plotdata {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        test: PathBuf,
    },
}

/// File form of the run settings. Also written, fully resolved, into every
/// benchmark output directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub data: Option<PathBuf>,
    pub out: Option<PathBuf>,
    /// Family keys; empty means every family.
    pub families: Vec<String>,
    pub seeds: Vec<u64>,
    pub cv_folds: usize,
    pub threads: Option<usize>,
    pub split: SplitSpec,
    pub generator: GeneratorConfig,
    /// Grid overrides keyed by family key.
    pub grids: BTreeMap<String, ParamGrid>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            data: None,
            out: None,
            families: Vec::new(),
            seeds: (0..5).collect(),
            cv_folds: 5,
            threads: None,
            split: SplitSpec::default(),
            generator: GeneratorConfig::default(),
            grids: BTreeMap::new(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }

    fn apply_globals(&mut self, g: &GlobalArgs) {
        if let Some(seed) = g.seed {
            self.generator.seed = seed;
            self.split.seed = seed;
        }
        if g.out.is_some() {
            self.out = g.out.clone();
        }
        if g.fixed_split {
            self.split.fixed_split = true;
        }
        if g.threads.is_some() {
            self.threads = g.threads;
        }
    }

    pub fn resolve_families(&self) -> Result<Vec<Family>> {
        if self.families.is_empty() {
            return Ok(Family::ALL.to_vec());
        }
        let mut out = Vec::new();
        for name in &self.families {
            let f = Family::from_key(name.trim())?;
            if out.contains(&f) {
                bail!("family {} listed twice", f.key());
            }
            out.push(f);
        }
        Ok(out)
    }

    pub fn plan(&self) -> Result<BenchmarkPlan> {
        let families = self.resolve_families()?;
        for key in self.grids.keys() {
            let f = Family::from_key(key)?;
            if !families.contains(&f) {
                bail!("grid given for {key}, which is not being run");
            }
        }
        let mut plan = BenchmarkPlan::new(&families);
        for (family, grid) in plan.families.iter_mut() {
            if let Some((_, g)) = self.grids.iter().find(|(k, _)| Family::from_key(k).ok() == Some(*family)) {
                *grid = g.clone();
            }
        }
        plan.seeds = self.seeds.clone();
        plan.split = self.split;
        plan.cv_folds = self.cv_folds;
        Ok(plan)
    }
}

fn ensure_writable_file(path: &Path, force: bool) -> Result<()> {
    if path.exists() && !force {
        bail!("{} exists; pass --force to overwrite", path.display());
    }
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    }
    Ok(())
}

fn ensure_writable_dir(dir: &Path, force: bool) -> Result<()> {
    if dir.exists() {
        let non_empty = fs::read_dir(dir)
            .with_context(|| format!("reading {}", dir.display()))?
            .next()
            .is_some();
        if non_empty && !force {
            bail!("{} is not empty; pass --force to overwrite", dir.display());
        }
    }
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn required_out(out: &Option<PathBuf>, what: &str) -> Result<PathBuf> {
    out.clone().with_context(|| format!("--out is required for {what}"))
}

pub fn cmd_generate(cfg: &GeneratorConfig, out: &Path, force: bool) -> Result<Dataset> {
    ensure_writable_file(out, force)?;
    let ds = generate_synthetic(cfg)?;
    save_csv(&ds, out)?;
    Ok(ds)
}

/// Result of a benchmark command: the report plus where things went.
pub struct BenchmarkOutput {
    pub report: EvalReport,
    pub dir: PathBuf,
}

/// Runs the benchmark and writes, under `out`:
/// `report.csv`, `report.txt`, `run_config.toml`, `split/{train,test}.csv`
/// (the first seed's split), `models/<key>.model` (each family's modal
/// parameters refit on that training part with the first seed) and
/// `plots/*.csv` for the top-ranked family on that test part.
pub fn cmd_benchmark(cfg: &RunConfig, force: bool) -> Result<BenchmarkOutput> {
    let out = required_out(&cfg.out, "benchmark")?;
    let plan = cfg.plan()?;
    let Some(&first_seed) = plan.seeds.first() else {
        bail!("at least one seed is required");
    };
    let ds = match &cfg.data {
        Some(p) => load_csv(p).with_context(|| format!("loading {}", p.display()))?,
        None => generate_synthetic(&cfg.generator)?,
    };
    ensure_writable_dir(&out, force)?;

    let report = run_benchmark(&ds, &plan)?;
    write_report_csv(&report, BufWriter::new(create(&out.join("report.csv"))?))?;
    fs::write(out.join("report.txt"), render_text(&report))?;
    fs::write(out.join("run_config.toml"), toml::to_string(cfg)?)?;

    let (train, test) = split(&ds, &plan.split_for(first_seed))?;
    fs::create_dir_all(out.join("split"))?;
    save_csv(&train, out.join("split/train.csv"))?;
    save_csv(&test, out.join("split/test.csv"))?;

    fs::create_dir_all(out.join("models"))?;
    let mut top: Option<FittedModel> = None;
    for row in report.rows.iter().filter(|r| r.failure.is_none()) {
        let model = ModelSpec::new(row.family, row.best_params.clone())?
            .with_seed(first_seed)
            .fit(&train)
            .with_context(|| format!("refitting {}", row.family.label()))?;
        model.save(out.join("models").join(format!("{}.model", row.family.key())))?;
        if top.is_none() {
            top = Some(model);
        }
    }
    if let Some(model) = top {
        PlotData::from_model(&model, &test)?.write_all(&out.join("plots"))?;
    }
    Ok(BenchmarkOutput { report, dir: out })
}

fn create(path: &Path) -> Result<fs::File> {
    fs::File::create(path).with_context(|| format!("creating {}", path.display()))
}

/// Writes the input rows with a trailing prediction column; returns the
/// predictions.
pub fn cmd_predict(model_path: &Path, input: &Path, out: &Path, force: bool) -> Result<Vec<f64>> {
    let model = FittedModel::load(model_path)?;
    let ds = load_csv(input).with_context(|| format!("loading {}", input.display()))?;
    let pred = model.predict_dataset(&ds)?;
    ensure_writable_file(out, force)?;
    write_csv(&ds, &[(PREDICTION_COLUMN, &pred)], BufWriter::new(create(out)?))?;
    Ok(pred)
}

pub fn cmd_plotdata(model_path: &Path, test: &Path, out: &Path, force: bool) -> Result<PlotData> {
    let model = FittedModel::load(model_path)?;
    let ds = load_csv(test).with_context(|| format!("loading {}", test.display()))?;
    if !ds.has_target() {
        bail!("{} has no CBR column", test.display());
    }
    let data = PlotData::from_model(&model, &ds)?;
    ensure_writable_dir(out, force)?;
    data.write_all(out)?;
    Ok(data)
}

/// Resolves configuration, sizes the worker pool and dispatches.
pub fn run(cli: Cli) -> Result<()> {
    let mut cfg = match &cli.global.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    cfg.apply_globals(&cli.global);
    if let Some(t) = cfg.threads {
        if t == 0 {
            bail!("--threads must be at least 1");
        }
        // fails only when a pool already exists, which is harmless
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
    }
    let force = cli.global.force;
    match cli.command {
        Command::Generate { n } => {
            if let Some(n) = n {
                cfg.generator.n_samples = n;
            }
            let out = required_out(&cfg.out, "generate")?;
            let ds = cmd_generate(&cfg.generator, &out, force)?;
            eprintln!("wrote {} samples to {}", ds.len(), out.display());
        }
        Command::Benchmark { data, families, seeds } => {
            if data.is_some() {
                cfg.data = data;
            }
            if let Some(f) = families {
                cfg.families = f;
            }
            if let Some(s) = seeds {
                cfg.seeds = s;
            }
            let res = cmd_benchmark(&cfg, force)?;
            print!("{}", render_text(&res.report));
            eprintln!("results in {}", res.dir.display());
        }
        Command::Predict { model, input } => {
            let out = required_out(&cfg.out, "predict")?;
            let pred = cmd_predict(&model, &input, &out, force)?;
            eprintln!("wrote {} predictions to {}", pred.len(), out.display());
        }
        Command::Plotdata { model, test } => {
            let out = required_out(&cfg.out, "plotdata")?;
            let data = cmd_plotdata(&model, &test, &out, force)?;
            eprintln!("wrote plot data for {} samples to {}", data.actual.len(), out.display());
        }
    }
    Ok(())
}

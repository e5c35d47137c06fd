//! Command-line front end. Exit codes: 0 success, 1 runtime or data error,
//! 2 usage error.

use std::ffi::OsString;
use std::fs;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::baselines::LogisticConfig;
use crate::data::{parse_manifest, Dataset};
use crate::eval::export::write_combined_report;
use crate::eval::{cross_validate, export_report, export_roc_csv, roc1, roc2, CvConfig, Method, ScoredTrip};
use crate::features::{write_feature_csv, FeatureConfig};
use crate::pipeline::{read_pipeline, write_pipeline, FeaturePipeline};
use crate::ranker::{read_model, report_weights, score, select_lambda, train, write_model, LinearModel, Optimizer, TrainConfig};
use crate::synth::{generate_dataset, SynthConfig};

pub const MODEL_FILE: &str = "model.txt";
pub const PIPELINE_FILE: &str = "pipeline.txt";
pub const TRAIN_LOG_FILE: &str = "train_log.csv";

#[derive(Debug, Parser)]
#[command(name = "drowsyrank", version, about = "Weakly supervised drowsiness scoring from trip telemetry")]
#[command(args_override_self = true)]
pub struct RunConfig {
    /// key=value file whose entries act as defaults beneath explicit flags
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic dataset with per-second truth
    Synth(SynthArgs),
    /// Fit the feature pipeline and train the ranker on drowsy trips
    Train(TrainCmd),
    /// Write per-sample scores for every trip of a manifest
    Score(ScoreArgs),
    /// AUC1/AUC2 and ROC curves of a trained model on a manifest
    Eval(EvalArgs),
    /// Stratified cross-validation of one or more methods
    Cv(CvArgs),
    /// Feature weights of a trained model, largest magnitude first
    Report(ReportArgs),
    /// Export feature vectors as CSV
    Features(FeaturesArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 12)]
    pub drowsy: usize,
    #[arg(long, default_value_t = 90)]
    pub normal: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, default_value_t = 600)]
    pub min_len: usize,
    #[arg(long, default_value_t = 1800)]
    pub max_len: usize,
    #[arg(long)]
    pub drift_amplitude: Option<f64>,
    #[arg(long)]
    pub swerve_rate: Option<f64>,
    #[arg(long)]
    pub creep_rate: Option<f64>,
    #[arg(long)]
    pub pothole_rate: Option<f64>,
    #[arg(long)]
    pub weave_amplitude: Option<f64>,
    #[arg(long)]
    pub truth_threshold: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OptimizerKind {
    Sgd,
    Adam,
}

/// Feature, optimizer and regularization settings shared by train and cv.
#[derive(Debug, Args)]
pub struct ModelArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = TrainConfig::default().iterations)]
    pub iterations: u64,
    #[arg(long, value_enum, default_value_t = OptimizerKind::Sgd)]
    pub optimizer: OptimizerKind,
    /// Defaults to 0.01 for sgd and 0.001 for adam
    #[arg(long)]
    pub learning_rate: Option<f64>,
    /// SGD step decay: eta_k = lr / (1 + decay k)
    #[arg(long, default_value_t = 1e-4)]
    pub decay: f64,
    /// Fixed regularization weight; when absent it is chosen from --lambda-grid
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long, value_delimiter = ',', default_values_t = crate::ranker::DEFAULT_LAMBDA_GRID.to_vec())]
    pub lambda_grid: Vec<f64>,
    #[arg(long, default_value_t = 3)]
    pub inner_folds: usize,
    #[arg(long, default_value_t = 0.0)]
    pub min_time_gap: f64,
    #[arg(long, default_value_t = crate::features::anomaly::DEFAULT_ALPHA)]
    pub anomaly_alpha: f64,
    #[arg(long, default_value_t = 10_000)]
    pub loss_report_every: u64,
    #[arg(long)]
    pub no_lag: bool,
    #[arg(long)]
    pub no_derivatives: bool,
    #[arg(long)]
    pub no_anomaly: bool,
    #[arg(long)]
    pub no_standardize: bool,
}

impl ModelArgs {
    fn feature_config(&self) -> FeatureConfig {
        FeatureConfig {
            include_lag: !self.no_lag,
            include_derivatives: !self.no_derivatives,
            include_anomaly: !self.no_anomaly,
            standardize: !self.no_standardize,
        }
    }

    fn train_config(&self) -> Result<TrainConfig> {
        let optimizer = match self.optimizer {
            OptimizerKind::Sgd => Optimizer::sgd(self.learning_rate.unwrap_or(0.01), self.decay),
            OptimizerKind::Adam => Optimizer::adam(self.learning_rate.unwrap_or(0.001)),
        };
        let cfg = TrainConfig {
            iterations: self.iterations,
            seed: self.seed,
            optimizer,
            min_time_gap: self.min_time_gap,
            loss_report_every: self.loss_report_every,
            ..TrainConfig::default()
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn lambda_grid(&self) -> Result<Vec<f64>> {
        let grid = match self.lambda {
            Some(l) => vec![l],
            None => self.lambda_grid.clone(),
        };
        if grid.is_empty() || grid.iter().any(|l| !(*l >= 0.0)) {
            bail!("lambda values must be >= 0");
        }
        Ok(grid)
    }
}

#[derive(Debug, Args)]
pub struct TrainCmd {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Directory receiving model.txt, pipeline.txt and train_log.csv
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub model: ModelArgs,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Directory written by `train`
    #[arg(long)]
    pub model: PathBuf,
    /// Output CSV `trip_id,t,score`
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub model: PathBuf,
    /// Directory receiving roc1.csv and roc2.csv
    #[arg(long)]
    pub out: PathBuf,
    /// Fail unless sample-level AUC can be computed
    #[arg(long)]
    pub auc2: bool,
}

#[derive(Debug, Args)]
pub struct CvArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 11)]
    pub k: usize,
    #[arg(long, value_delimiter = ',', default_value = "proposed,logistic,anomaly")]
    pub methods: Vec<Method>,
    /// Folds run concurrently on this many threads
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    #[arg(long, value_delimiter = ',', default_values_t = CvConfig::default().l1_grid)]
    pub l1_grid: Vec<f64>,
    #[arg(long, default_value_t = LogisticConfig::default().epochs)]
    pub logistic_epochs: usize,
    #[command(flatten)]
    pub model: ModelArgs,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// model.txt or the directory written by `train`
    pub model: PathBuf,
    #[arg(long)]
    pub top: Option<usize>,
    /// Write CSV here instead of stdout
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FeaturesArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Use the pipeline of a trained model instead of fitting one on the manifest
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = crate::features::anomaly::DEFAULT_ALPHA)]
    pub anomaly_alpha: f64,
    #[arg(long)]
    pub no_lag: bool,
    #[arg(long)]
    pub no_derivatives: bool,
    #[arg(long)]
    pub no_anomaly: bool,
    #[arg(long)]
    pub no_standardize: bool,
}

/// Turns `key=value` lines into `--key=value` flags. `true` becomes a bare
/// switch and `false` drops the key.
pub fn config_file_args(text: &str) -> Result<Vec<OsString>, String> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| format!("config line {}: expected key=value", i + 1))?;
        let key = k.trim().replace('_', "-");
        match v.trim() {
            "true" => out.push(format!("--{key}").into()),
            "false" => {}
            v => out.push(format!("--{key}={v}").into()),
        }
    }
    Ok(out)
}

/// Splices config-file flags in right after the subcommand name, so that
/// flags given on the command line (which come later) override them.
fn expand_config(args: Vec<OsString>) -> Result<Vec<OsString>, String> {
    let mut config = None;
    let mut rest = Vec::with_capacity(args.len());
    let mut it = args.into_iter();
    while let Some(a) = it.next() {
        let s = a.to_string_lossy();
        if s == "--config" {
            config = Some(it.next().ok_or("--config needs a file")?);
        } else if let Some(p) = s.strip_prefix("--config=") {
            config = Some(p.into());
        } else {
            rest.push(a);
        }
    }
    let Some(path) = config else {
        return Ok(rest);
    };
    let text = fs::read_to_string(&path).map_err(|e| format!("cannot read config {}: {e}", Path::new(&path).display()))?;
    let extra = config_file_args(&text)?;
    let sub = rest
        .iter()
        .skip(1)
        .position(|a| !a.to_string_lossy().starts_with('-'))
        .map(|p| p + 2)
        .unwrap_or(rest.len());
    rest.splice(sub..sub, extra);
    Ok(rest)
}

/// Parses `args` (including the program name) and runs the subcommand.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let args = match expand_config(args) {
        Ok(a) => a,
        Err(msg) => {
            eprintln!("error: {msg}");
            return 2;
        }
    };
    let cli = match RunConfig::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e:#}");
            1
        }
    }
}

fn dispatch(cmd: Command) -> Result<()> {
    match cmd {
        Command::Synth(a) => cmd_synth(&a),
        Command::Train(a) => cmd_train(&a),
        Command::Score(a) => cmd_score(&a),
        Command::Eval(a) => cmd_eval(&a),
        Command::Cv(a) => cmd_cv(&a),
        Command::Report(a) => cmd_report(&a),
        Command::Features(a) => cmd_features(&a),
    }
}

fn load(manifest: &Path) -> Result<Dataset> {
    let ds = parse_manifest(manifest).with_context(|| format!("loading {}", manifest.display()))?;
    ds.validate()?;
    Ok(ds)
}

fn create(path: &Path) -> Result<BufWriter<fs::File>> {
    let f = fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn model_paths(p: &Path) -> (PathBuf, PathBuf) {
    if p.is_dir() {
        (p.join(MODEL_FILE), p.join(PIPELINE_FILE))
    } else {
        let dir = p.parent().unwrap_or_else(|| Path::new("."));
        (p.to_path_buf(), dir.join(PIPELINE_FILE))
    }
}

fn load_model(p: &Path) -> Result<LinearModel> {
    let (m, _) = model_paths(p);
    let f = fs::File::open(&m).with_context(|| format!("opening {}", m.display()))?;
    read_model(BufReader::new(f)).with_context(|| format!("reading {}", m.display()))
}

fn load_pipeline(p: &Path) -> Result<FeaturePipeline> {
    let (_, pp) = model_paths(p);
    let f = fs::File::open(&pp).with_context(|| format!("opening {}", pp.display()))?;
    read_pipeline(BufReader::new(f)).with_context(|| format!("reading {}", pp.display()))
}

pub fn cmd_synth(a: &SynthArgs) -> Result<()> {
    let d = SynthConfig::default();
    let cfg = SynthConfig {
        n_drowsy: a.drowsy,
        n_normal: a.normal,
        trip_len_range: (a.min_len, a.max_len),
        seed: a.seed,
        drift_amplitude: a.drift_amplitude.unwrap_or(d.drift_amplitude),
        swerve_rate_max: a.swerve_rate.unwrap_or(d.swerve_rate_max),
        creep_rate_max: a.creep_rate.unwrap_or(d.creep_rate_max),
        pothole_rate: a.pothole_rate.unwrap_or(d.pothole_rate),
        weave_amplitude: a.weave_amplitude.unwrap_or(d.weave_amplitude),
        truth_threshold: a.truth_threshold.unwrap_or(d.truth_threshold),
        ..d
    };
    let ds = generate_dataset(&cfg, &a.out)?;
    println!(
        "wrote {} trips ({} drowsy, {} normal) to {}",
        ds.len(),
        ds.n_drowsy(),
        ds.n_normal(),
        a.out.display()
    );
    Ok(())
}

pub fn cmd_train(a: &TrainCmd) -> Result<()> {
    let ds = load(&a.manifest)?;
    if ds.n_drowsy() == 0 {
        bail!("training needs at least one drowsy trip; the manifest has none");
    }
    let m = &a.model;
    let tcfg = m.train_config()?;
    let (pipeline, _) = FeaturePipeline::fit(ds.trips(), m.feature_config(), m.anomaly_alpha)?;
    let feats = pipeline.transform_all(ds.trips())?;
    let names = pipeline.names();
    let selection = select_lambda(&feats, &names, &tcfg, &m.lambda_grid()?, m.inner_folds, m.seed)?;
    let outcome = train(&feats, &names, &tcfg, selection.lambda)?;

    fs::create_dir_all(&a.out)?;
    let mut w = create(&a.out.join(MODEL_FILE))?;
    write_model(&outcome.model, &mut w)?;
    w.flush()?;
    let mut w = create(&a.out.join(PIPELINE_FILE))?;
    write_pipeline(&pipeline, &mut w)?;
    w.flush()?;
    let mut w = create(&a.out.join(TRAIN_LOG_FILE))?;
    writeln!(w, "step,subsampled_loss")?;
    for e in &outcome.log {
        writeln!(w, "{},{}", e.step, e.subsampled_loss)?;
    }
    w.flush()?;

    println!("lambda {}", selection.lambda);
    if let (Some(first), Some(last)) = (outcome.log.first(), outcome.log.last()) {
        println!("subsampled loss {} -> {}", first.subsampled_loss, last.subsampled_loss);
    }
    println!("wrote {}", a.out.display());
    Ok(())
}

fn score_dataset(ds: &Dataset, model: &LinearModel, pipeline: &FeaturePipeline) -> Result<(Vec<ScoredTrip>, Vec<Vec<f64>>)> {
    let mut scored = Vec::with_capacity(ds.len());
    let mut times = Vec::with_capacity(ds.len());
    for trip in ds.trips() {
        let tf = pipeline.transform(trip)?;
        let scores = tf.vectors.iter().map(|v| score(model, v)).collect::<Result<Vec<_>, _>>()?;
        scored.push(ScoredTrip {
            trip_id: tf.trip_id,
            label: tf.label,
            scores,
            truth: tf.truth,
        });
        times.push(tf.times);
    }
    Ok((scored, times))
}

pub fn cmd_score(a: &ScoreArgs) -> Result<()> {
    let ds = load(&a.manifest)?;
    let model = load_model(&a.model)?;
    let pipeline = load_pipeline(&a.model)?;
    let (scored, times) = score_dataset(&ds, &model, &pipeline)?;
    let mut w = create(&a.out)?;
    writeln!(w, "trip_id,t,score")?;
    for (st, ts) in scored.iter().zip(&times) {
        for (t, s) in ts.iter().zip(&st.scores) {
            writeln!(w, "{},{t},{s}", st.trip_id)?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn cmd_eval(a: &EvalArgs) -> Result<()> {
    let ds = load(&a.manifest)?;
    if a.auc2 && !ds.has_truth() {
        bail!("--auc2 needs a truth column in every trip of {}", a.manifest.display());
    }
    let model = load_model(&a.model)?;
    let pipeline = load_pipeline(&a.model)?;
    let (scored, _) = score_dataset(&ds, &model, &pipeline)?;
    fs::create_dir_all(&a.out)?;
    let c1 = roc1(&scored)?;
    export_roc_csv(&c1, &a.out.join("roc1.csv"))?;
    println!("auc1 {}", c1.auc);
    if ds.has_truth() {
        let c2 = roc2(&scored)?;
        export_roc_csv(&c2, &a.out.join("roc2.csv"))?;
        println!("auc2 {}", c2.auc);
    }
    Ok(())
}

pub fn cmd_cv(a: &CvArgs) -> Result<()> {
    let ds = load(&a.manifest)?;
    if a.methods.is_empty() {
        bail!("no methods selected");
    }
    let m = &a.model;
    let cfg = CvConfig {
        k: a.k,
        seed: m.seed,
        features: m.feature_config(),
        anomaly_alpha: m.anomaly_alpha,
        train: m.train_config()?,
        lambda_grid: m.lambda_grid()?,
        inner_folds: m.inner_folds,
        logistic: LogisticConfig {
            epochs: a.logistic_epochs,
            ..LogisticConfig::default()
        },
        l1_grid: a.l1_grid.clone(),
        jobs: a.jobs.max(1),
    };
    fs::create_dir_all(&a.out)?;
    let mut reports = Vec::new();
    for &method in &a.methods {
        let rep = cross_validate(&ds, method, &cfg)?;
        export_report(&rep, &a.out.join(format!("report_{method}.csv")))?;
        export_roc_csv(&rep.roc1_curve(101)?, &a.out.join(format!("roc1_{method}.csv")))?;
        if rep.mean_auc2.is_some() {
            export_roc_csv(&rep.roc2_curve(101)?, &a.out.join(format!("roc2_{method}.csv")))?;
        }
        let auc2 = rep.mean_auc2.map_or_else(|| "n/a".to_string(), |v| format!("{v:.4}"));
        println!("{method:<9} auc1 {:.4} auc2 {auc2}", rep.mean_auc1);
        reports.push(rep);
    }
    let mut w = create(&a.out.join("cv_report.csv"))?;
    write_combined_report(&reports, &mut w)?;
    w.flush()?;
    let mut w = create(&a.out.join("folds.csv"))?;
    writeln!(w, "fold,trip_id")?;
    for (f, ids) in reports[0].fold_spec.test_ids.iter().enumerate() {
        for id in ids {
            writeln!(w, "{f},{id}")?;
        }
    }
    w.flush()?;
    fs::write(a.out.join("cv-config.txt"), cfg.echo() + "\n")?;
    Ok(())
}

pub fn cmd_report(a: &ReportArgs) -> Result<()> {
    let model = load_model(&a.model)?;
    let mut ranked = report_weights(&model);
    if let Some(n) = a.top {
        ranked.truncate(n);
    }
    let mut w: Box<dyn Write> = match &a.out {
        Some(p) => Box::new(create(p)?),
        None => Box::new(io::stdout().lock()),
    };
    writeln!(w, "rank,feature,weight")?;
    for (i, (name, wgt)) in ranked.iter().enumerate() {
        writeln!(w, "{},{name},{wgt}", i + 1)?;
    }
    w.flush()?;
    Ok(())
}

pub fn cmd_features(a: &FeaturesArgs) -> Result<()> {
    let ds = load(&a.manifest)?;
    let pipeline = match &a.model {
        Some(p) => load_pipeline(p)?,
        None => {
            let cfg = FeatureConfig {
                include_lag: !a.no_lag,
                include_derivatives: !a.no_derivatives,
                include_anomaly: !a.no_anomaly,
                standardize: !a.no_standardize,
            };
            FeaturePipeline::fit(ds.trips(), cfg, a.anomaly_alpha)?.0
        }
    };
    let feats = pipeline.transform_all(ds.trips())?;
    let mut w = create(&a.out)?;
    write_feature_csv(&pipeline.names(), &feats, &mut w)?;
    w.flush()?;
    Ok(())
}

mod manifest;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use rkpf::estimator::{fit_model, CovarianceKind};
use rkpf::indicators::{
    indicators_to_panel, load_publications, region_year_indicators, thematic_profiles, IndicatorNames,
    SubjectVocabulary,
};
use rkpf::panel::{
    apply_steps, descriptive_stats, load_panel_csv, render_stats_text, validate_balanced, write_panel_csv,
    PanelDataset, TransformStep,
};
use rkpf::simulator::{generate_panel, monte_carlo_with, DgpConfig};
use rkpf::suite::{
    expand_with, render_table, run_suite, ComparisonTable, SuiteColumn, SuiteNotation, SuiteVariables, TableFormat,
    TableOptions, MAIN_TAGS,
};
use rkpf::weights::{build_weights, SpatialWeights, ThematicProfileMatrix};

use manifest::Manifest;

const PANEL_FILE: &str = "panel.csv";

#[derive(Parser, Debug)]
#[command(
    name = "rkpf",
    version,
    about = "Regional knowledge production function panel toolkit"
)]
struct Cli {
    /// Directory receiving the command's output files.
    #[arg(long, global = true, default_value = "rkpf-out")]
    output_dir: PathBuf,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Overrides the seed of simulate/mc configurations.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Csv,
    Md,
    Json,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Validate a panel CSV, optionally derive variables and merge indicators.
    Ingest(IngestArgs),
    /// Build thematic-proximity weights from subject profiles.
    Weights(WeightsArgs),
    /// Estimate one specification.
    Fit(FitArgs),
    /// Estimate several specifications side by side.
    Suite(SuiteArgs),
    /// Write a synthetic bundle from a data-generating process.
    Simulate(SimulateArgs),
    /// Monte Carlo bias and coverage study.
    Mc(McArgs),
    /// Descriptive statistics of panel variables.
    Stats(StatsArgs),
}

#[derive(Args, Debug)]
struct IngestArgs {
    #[arg(long)]
    panel: PathBuf,
    /// Publication records (.jsonl or .csv) to turn into indicators.
    #[arg(long)]
    publications: Option<PathBuf>,
    /// Subject-area codes, one per line; with --publications writes profiles.csv.
    #[arg(long)]
    vocab: Option<PathBuf>,
    /// Restrict thematic profiles to one year.
    #[arg(long)]
    profile_year: Option<i32>,
    /// Suffix for indicator variable names, e.g. A.
    #[arg(long, default_value = "")]
    indicator_suffix: String,
    /// TOML file with a `[[steps]]` array of transform steps.
    #[arg(long)]
    recipe: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct WeightsArgs {
    /// Region x subject share CSV.
    #[arg(long, conflicts_with = "publications")]
    profiles: Option<PathBuf>,
    #[arg(long, requires = "vocab")]
    publications: Option<PathBuf>,
    #[arg(long)]
    vocab: Option<PathBuf>,
    #[arg(long)]
    year: Option<i32>,
}

#[derive(Args, Debug)]
struct ModelArgs {
    /// Bundle directory containing panel.csv.
    #[arg(long)]
    bundle: PathBuf,
    /// Weights file (.csv or .json); required by `sl` tags.
    #[arg(long)]
    weights: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Covariance::Cluster)]
    covariance: Covariance,
    /// Base name of the dependent variable (logged by the notation).
    #[arg(long, default_value = "PUB21EMP")]
    dependent: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Covariance {
    Classical,
    Cluster,
}

#[derive(Args, Debug)]
struct FitArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long)]
    spec: String,
}

#[derive(Args, Debug)]
struct SuiteArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Comma-separated tags; defaults to the seven main columns.
    #[arg(long, value_delimiter = ',')]
    tags: Option<Vec<String>>,
    /// Print classical and cluster-robust errors under each estimate.
    #[arg(long)]
    dual_se: bool,
    #[arg(long)]
    omit_time_dummies: bool,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    /// DGP configuration (TOML); defaults apply when absent.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct McArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value = "fe.tw.q.sl")]
    spec: String,
    #[arg(long, default_value_t = 200, value_parser = clap::value_parser!(u64).range(2..))]
    reps: u64,
    #[arg(long, value_enum, default_value_t = Covariance::Cluster)]
    covariance: Covariance,
}

#[derive(Args, Debug)]
struct StatsArgs {
    #[arg(long, conflicts_with = "panel")]
    bundle: Option<PathBuf>,
    #[arg(long)]
    panel: Option<PathBuf>,
    /// Comma-separated variables; all by default.
    #[arg(long, value_delimiter = ',')]
    variables: Option<Vec<String>>,
}

/// Failure classes mapped to exit codes.
enum Failure {
    /// Bad input or failed validation: exit 2.
    Input(anyhow::Error),
    /// Anything else: exit 1.
    Internal(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        if e.chain()
            .any(|c| c.downcast_ref::<rkpf::Error>().is_some() || is_core_error(c))
        {
            Failure::Input(e)
        } else {
            Failure::Internal(e)
        }
    }
}

fn is_core_error(e: &(dyn std::error::Error + 'static)) -> bool {
    use rkpf::{estimator, indicators, panel, simulator, suite, weights};
    e.is::<panel::PanelError>()
        || e.is::<indicators::IndicatorError>()
        || e.is::<weights::WeightsError>()
        || e.is::<estimator::EstimationError>()
        || e.is::<suite::SuiteError>()
        || e.is::<simulator::SimulationError>()
        || e.is::<InputError>()
}

/// Input problem detected by the CLI itself.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
struct InputError(String);

fn input_err(msg: impl Into<String>) -> anyhow::Error {
    InputError(msg.into()).into()
}

type CmdResult = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Ok(n) = std::env::var("RKPF_THREADS") {
        match n.parse::<usize>() {
            Ok(n) if n > 0 => {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
            _ => {
                eprintln!("error: RKPF_THREADS must be a positive integer, got `{n}`");
                return ExitCode::from(2);
            }
        }
    }
    let result = match &cli.command {
        Command::Ingest(a) => cmd_ingest(&cli, a),
        Command::Weights(a) => cmd_weights(&cli, a),
        Command::Fit(a) => cmd_fit(&cli, a),
        Command::Suite(a) => cmd_suite(&cli, a),
        Command::Simulate(a) => cmd_simulate(&cli, a),
        Command::Mc(a) => cmd_mc(&cli, a),
        Command::Stats(a) => cmd_stats(&cli, a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Input(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Internal(e)) => {
            eprintln!("internal error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn output_dir(cli: &Cli) -> Result<&Path, Failure> {
    fs::create_dir_all(&cli.output_dir)
        .with_context(|| format!("creating {}", cli.output_dir.display()))
        .map_err(Failure::Internal)?;
    Ok(&cli.output_dir)
}

fn write_out(dir: &Path, name: &str, contents: impl AsRef<[u8]>, m: &mut Manifest) -> Result<(), Failure> {
    let path = dir.join(name);
    fs::write(&path, contents.as_ref())
        .with_context(|| format!("writing {}", path.display()))
        .map_err(Failure::Internal)?;
    m.output(name, contents.as_ref());
    Ok(())
}

fn panel_csv_bytes(d: &PanelDataset) -> Result<Vec<u8>, Failure> {
    let mut buf = Vec::new();
    write_panel_csv(d, &mut buf).map_err(|e| Failure::Internal(e.into()))?;
    Ok(buf)
}

fn json_bytes<T: serde::Serialize>(v: &T) -> Result<Vec<u8>, Failure> {
    let mut s = serde_json::to_vec_pretty(v).map_err(|e| Failure::Internal(e.into()))?;
    s.push(b'\n');
    Ok(s)
}

fn read_input(path: &Path, m: &mut Manifest) -> anyhow::Result<Vec<u8>> {
    let bytes = fs::read(path).map_err(|e| input_err(format!("reading {}: {e}", path.display())))?;
    m.input(path, &bytes);
    Ok(bytes)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Recipe {
    steps: Vec<TransformStep>,
}

fn cmd_ingest(cli: &Cli, a: &IngestArgs) -> CmdResult {
    let mut m = Manifest::new("ingest");
    read_input(&a.panel, &mut m)?;
    let mut d = load_panel_csv::<&str>(&a.panel, &[]).map_err(anyhow::Error::from)?;

    if let Some(recipe) = &a.recipe {
        let text = String::from_utf8(read_input(recipe, &mut m)?).map_err(|e| input_err(e.to_string()))?;
        let recipe: Recipe = toml::from_str(&text).map_err(|e| input_err(format!("recipe: {e}")))?;
        d = apply_steps(&d, &recipe.steps).map_err(anyhow::Error::from)?;
    }

    let mut profiles = None;
    if let Some(pubs_path) = &a.publications {
        read_input(pubs_path, &mut m)?;
        let pubs = load_publications(pubs_path).map_err(anyhow::Error::from)?;
        let rows = region_year_indicators(&pubs).map_err(anyhow::Error::from)?;
        let names = IndicatorNames::with_suffix(&a.indicator_suffix);
        let ind = indicators_to_panel(&rows, &names).map_err(anyhow::Error::from)?;
        d = d.join(&ind).map_err(anyhow::Error::from)?;
        if let Some(vocab_path) = &a.vocab {
            read_input(vocab_path, &mut m)?;
            let vocab = SubjectVocabulary::load(vocab_path).map_err(anyhow::Error::from)?;
            profiles = Some(thematic_profiles(&pubs, &vocab, a.profile_year).map_err(anyhow::Error::from)?);
        }
    } else if a.vocab.is_some() {
        return Err(input_err("--vocab requires --publications").into());
    }

    let report = validate_balanced(&d);
    let dir = output_dir(cli)?;
    write_out(dir, "validation.json", json_bytes(&report)?, &mut m)?;
    if !report.passed {
        eprint!("{report}");
        return Err(input_err(format!("panel is not balanced: {} missing cells", report.gaps.len())).into());
    }
    write_out(dir, PANEL_FILE, panel_csv_bytes(&d)?, &mut m)?;
    if let Some(p) = profiles {
        let mut buf = Vec::new();
        p.write_csv(&mut buf).map_err(|e| Failure::Internal(e.into()))?;
        write_out(dir, "profiles.csv", buf, &mut m)?;
    }
    m.write(dir)?;
    print!("{report}");
    Ok(())
}

fn weights_outputs(w: &SpatialWeights, dir: &Path, m: &mut Manifest) -> CmdResult {
    let mut csv = Vec::new();
    w.write_csv(&mut csv).map_err(|e| Failure::Internal(e.into()))?;
    write_out(dir, "weights.csv", csv, m)?;
    let mut json = w.to_json().map_err(|e| Failure::Internal(e.into()))?;
    json.push('\n');
    write_out(dir, "weights.json", json, m)
}

fn cmd_weights(cli: &Cli, a: &WeightsArgs) -> CmdResult {
    let mut m = Manifest::new("weights");
    let profiles = match (&a.profiles, &a.publications, &a.vocab) {
        (Some(p), _, _) => {
            let bytes = read_input(p, &mut m)?;
            ThematicProfileMatrix::read_csv(bytes.as_slice()).map_err(anyhow::Error::from)?
        }
        (None, Some(pubs_path), Some(vocab_path)) => {
            read_input(pubs_path, &mut m)?;
            read_input(vocab_path, &mut m)?;
            let pubs = load_publications(pubs_path).map_err(anyhow::Error::from)?;
            let vocab = SubjectVocabulary::load(vocab_path).map_err(anyhow::Error::from)?;
            thematic_profiles(&pubs, &vocab, a.year).map_err(anyhow::Error::from)?
        }
        _ => return Err(input_err("give --profiles, or --publications with --vocab").into()),
    };
    let corr = profiles.correlation().map_err(anyhow::Error::from)?;
    let w = build_weights(&corr);
    let dir = output_dir(cli)?;
    weights_outputs(&w, dir, &mut m)?;
    m.write(dir)?;
    println!("{} x {} weights written to {}", w.n(), w.n(), dir.display());
    let isolated = w.isolated_regions();
    if !isolated.is_empty() {
        println!("isolated regions (zero rows): {}", isolated.join(", "));
    }
    Ok(())
}

struct Loaded {
    data: PanelDataset,
    weights: Option<SpatialWeights>,
    vars: SuiteVariables,
}

fn load_model_inputs(a: &ModelArgs, m: &mut Manifest) -> anyhow::Result<Loaded> {
    let panel_path = a.bundle.join(PANEL_FILE);
    read_input(&panel_path, m)?;
    let data = load_panel_csv::<&str>(&panel_path, &[])?;
    let weights = match &a.weights {
        Some(p) => {
            read_input(p, m)?;
            Some(SpatialWeights::load(p)?)
        }
        None => None,
    };
    let vars = SuiteVariables {
        dependent: a.dependent.clone(),
        covariance: match a.covariance {
            Covariance::Classical => CovarianceKind::Classical,
            Covariance::Cluster => CovarianceKind::ClusterByRegion,
        },
        ..SuiteVariables::default()
    };
    Ok(Loaded { data, weights, vars })
}

fn table_format(f: Format) -> Option<TableFormat> {
    match f {
        Format::Text => Some(TableFormat::Text),
        Format::Csv => Some(TableFormat::Csv),
        Format::Md => Some(TableFormat::Md),
        Format::Json => None,
    }
}

fn table_extension(f: TableFormat) -> &'static str {
    match f {
        TableFormat::Text => "txt",
        TableFormat::Csv => "csv",
        TableFormat::Md => "md",
    }
}

fn emit_table(
    cli: &Cli,
    stem: &str,
    table: &ComparisonTable,
    json: Vec<u8>,
    opts: TableOptions,
    m: &mut Manifest,
) -> CmdResult {
    let dir = output_dir(cli)?;
    write_out(dir, &format!("{stem}.json"), &json, m)?;
    match table_format(cli.format) {
        Some(format) => {
            let rendered = render_table(table, &TableOptions { format, ..opts });
            write_out(dir, &format!("{stem}.{}", table_extension(format)), &rendered, m)?;
            print!("{rendered}");
        }
        None => print!("{}", String::from_utf8_lossy(&json)),
    }
    m.write(dir)
}

fn cmd_fit(cli: &Cli, a: &FitArgs) -> CmdResult {
    let mut m = Manifest::new("fit");
    let notation: SuiteNotation = a.spec.parse().map_err(anyhow::Error::from)?;
    let loaded = load_model_inputs(&a.model, &mut m)?;
    let spec = expand_with(&notation, &loaded.vars);
    let fit = fit_model(&loaded.data, &spec, loaded.weights.as_ref()).map_err(anyhow::Error::from)?;
    let json = json_bytes(&fit.report())?;
    let table = ComparisonTable {
        dependent: spec.dependent.clone(),
        rows: fit.terms.clone(),
        columns: vec![SuiteColumn { notation, fit }],
    };
    m.config(a.spec.as_bytes());
    emit_table(cli, "fit", &table, json, TableOptions::default(), &mut m)
}

fn cmd_suite(cli: &Cli, a: &SuiteArgs) -> CmdResult {
    let mut m = Manifest::new("suite");
    let tags: Vec<String> = match &a.tags {
        Some(t) => t
            .iter()
            .map(|s| s.trim().to_string())
            .filter(|s| !s.is_empty())
            .collect(),
        None => MAIN_TAGS.iter().map(|s| s.to_string()).collect(),
    };
    if tags.is_empty() {
        return Err(input_err("--tags needs at least one specification tag").into());
    }
    for t in &tags {
        t.parse::<SuiteNotation>().map_err(anyhow::Error::from)?;
    }
    let loaded = load_model_inputs(&a.model, &mut m)?;
    let table = run_suite(&loaded.data, loaded.weights.as_ref(), &tags, &loaded.vars).map_err(anyhow::Error::from)?;
    let json = json_bytes(&table.report())?;
    m.config(tags.join(",").as_bytes());
    let opts = TableOptions {
        dual_se: a.dual_se,
        omit_time_dummies: a.omit_time_dummies,
        ..TableOptions::default()
    };
    emit_table(cli, "suite", &table, json, opts, &mut m)
}

fn load_config(path: &Option<PathBuf>, seed: Option<u64>, m: &mut Manifest) -> anyhow::Result<DgpConfig> {
    let mut cfg = match path {
        Some(p) => {
            let bytes = read_input(p, m)?;
            let text = String::from_utf8(bytes).map_err(|e| input_err(e.to_string()))?;
            DgpConfig::from_toml_str(&text)?
        }
        None => DgpConfig::default(),
    };
    if let Some(s) = seed {
        cfg.seed = s;
    }
    m.config(cfg.to_toml_string().as_bytes());
    Ok(cfg)
}

fn cmd_simulate(cli: &Cli, a: &SimulateArgs) -> CmdResult {
    let mut m = Manifest::new("simulate");
    let cfg = load_config(&a.config, cli.seed, &mut m)?;
    let g = generate_panel(&cfg).map_err(anyhow::Error::from)?;
    let dir = output_dir(cli)?;
    write_out(dir, PANEL_FILE, panel_csv_bytes(&g.data)?, &mut m)?;
    let mut profiles = Vec::new();
    g.profiles
        .write_csv(&mut profiles)
        .map_err(|e| Failure::Internal(e.into()))?;
    write_out(dir, "profiles.csv", profiles, &mut m)?;
    weights_outputs(&g.weights, dir, &mut m)?;
    write_out(dir, "truth.json", json_bytes(&g.truth)?, &mut m)?;
    write_out(dir, "dgp.toml", cfg.to_toml_string(), &mut m)?;
    m.write(dir)?;
    println!(
        "synthetic bundle: {} regions x {} years, seed {}, written to {}",
        cfg.n_regions,
        cfg.n_years,
        cfg.seed,
        dir.display()
    );
    Ok(())
}

fn cmd_mc(cli: &Cli, a: &McArgs) -> CmdResult {
    let mut m = Manifest::new("mc");
    let cfg = load_config(&a.config, cli.seed, &mut m)?;
    let vars = SuiteVariables {
        covariance: match a.covariance {
            Covariance::Classical => CovarianceKind::Classical,
            Covariance::Cluster => CovarianceKind::ClusterByRegion,
        },
        ..SuiteVariables::default()
    };
    let report = monte_carlo_with(&cfg, &a.spec, a.reps as usize, &vars).map_err(anyhow::Error::from)?;
    let dir = output_dir(cli)?;
    let json = json_bytes(&report)?;
    write_out(dir, "mc.json", &json, &mut m)?;
    let text = report.to_string();
    write_out(dir, "mc.txt", &text, &mut m)?;
    m.write(dir)?;
    if cli.format == Format::Json {
        print!("{}", String::from_utf8_lossy(&json));
    } else {
        print!("{text}");
    }
    Ok(())
}

fn cmd_stats(cli: &Cli, a: &StatsArgs) -> CmdResult {
    let mut m = Manifest::new("stats");
    let path = match (&a.bundle, &a.panel) {
        (Some(b), None) => b.join(PANEL_FILE),
        (None, Some(p)) => p.clone(),
        _ => return Err(input_err("give --bundle or --panel").into()),
    };
    read_input(&path, &mut m)?;
    let d = load_panel_csv::<&str>(&path, &[]).map_err(anyhow::Error::from)?;
    let names: Vec<String> = match &a.variables {
        Some(v) => v.clone(),
        None => d.variable_names().map(str::to_string).collect(),
    };
    let stats = descriptive_stats(&d, &names).map_err(anyhow::Error::from)?;
    let dir = output_dir(cli)?;
    let json = json_bytes(&stats)?;
    write_out(dir, "stats.json", &json, &mut m)?;
    let rendered = match cli.format {
        Format::Json => String::from_utf8_lossy(&json).into_owned(),
        Format::Csv => stats_csv(&stats)?,
        Format::Text | Format::Md => render_stats_text(&stats, 3),
    };
    if cli.format == Format::Csv {
        write_out(dir, "stats.csv", &rendered, &mut m)?;
    } else if cli.format != Format::Json {
        write_out(dir, "stats.txt", &rendered, &mut m)?;
    }
    m.write(dir)?;
    print!("{rendered}");
    Ok(())
}

fn stats_csv(stats: &[rkpf::panel::VariableSummary]) -> Result<String, Failure> {
    let mut w = csv_writer();
    let internal = |e: std::io::Error| Failure::Internal(e.into());
    w.write_record(["variable", "n", "missing", "min", "q1", "median", "mean", "q3", "max"])
        .map_err(|e| internal(e.into()))?;
    for s in stats {
        let mut rec = vec![s.name.clone(), s.n.to_string(), s.missing.to_string()];
        rec.extend([s.min, s.q1, s.median, s.mean, s.q3, s.max].map(rkpf::format_f64));
        w.write_record(&rec).map_err(|e| internal(e.into()))?;
    }
    let bytes = w.into_inner().map_err(|e| Failure::Internal(anyhow::anyhow!("{e}")))?;
    String::from_utf8(bytes).map_err(|e| Failure::Internal(e.into()))
}

fn csv_writer() -> csv::Writer<Vec<u8>> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new())
}

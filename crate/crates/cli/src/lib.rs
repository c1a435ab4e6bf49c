//! Command-line front end. [`run`] is the whole program, minus process
//! setup, so that it can be driven from tests.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use mallows::data::Format;
use mallows::experiments::{run_suite, ExperimentReport, SuiteOptions, SUITES};
use mallows::fit::{target_rank, Clamp, FitOptions, FittedModel, ModelKind};
use mallows::io::{
    format_items, parse_grid, parse_key_values, parse_names, parse_reals, read_rankings, write_rankings, KeyValues,
};
use mallows::perm::{CentralOrder, Permutation};
use mallows::regen::{component_length_law, expected_component_length, renewal_monte_carlo_parallel};
use mallows::sample::{
    sample_gm, sample_igm_top_t, sample_mallows_phi, sample_p_shifted, DispersionVector, RowDistribution, RowSchedule,
};
use mallows::select::{select_t, SelectOptions};
use mallows::{Observation, RankingDataset, TopTRanking, Universe};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Exit code for a failed `verify` run.
pub const EXIT_FAILURE: i32 = 1;
/// Exit code for bad usage or unreadable input.
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "mallows",
    about = "Mallows ranking models: sample, fit, select the top-t size, renewal curves"
)]
struct Cli {
    /// Flat key=value file with defaults (seed, lambda, window, model, t).
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Draw rankings from a model.
    Sample(SampleArgs),
    /// Fit a model to a ranking file.
    Fit(FitArgs),
    /// Choose the top-t model size.
    SelectT(SelectArgs),
    /// Effective-length curves and component-length laws.
    Regen(RegenArgs),
    /// Run a named verification suite.
    Verify(VerifyArgs),
    /// Print the version.
    Version,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SampleModel {
    Phi,
    Gm,
    Igm,
    Pshift,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum DataFormat {
    Counted,
    Lists,
}

impl From<DataFormat> for Format {
    fn from(f: DataFormat) -> Self {
        match f {
            DataFormat::Counted => Format::Counted,
            DataFormat::Lists => Format::Lists,
        }
    }
}

#[derive(Debug, Args)]
struct SeedArg {
    /// Random seed.
    #[arg(long, env = "MALLOWS_SEED")]
    seed: Option<u64>,
}

#[derive(Debug, Args)]
struct SampleArgs {
    #[arg(long, value_enum)]
    model: SampleModel,
    /// Number of items (phi, gm) or prefix length (pshift).
    #[arg(long)]
    n: Option<usize>,
    /// Top-t length (igm).
    #[arg(long)]
    t: Option<usize>,
    /// Single dispersion.
    #[arg(long)]
    theta: Option<f64>,
    /// Comma-separated stage dispersions (gm, igm).
    #[arg(long)]
    thetas: Option<String>,
    /// Row probabilities p1,p2,... (pshift).
    #[arg(long)]
    row: Option<String>,
    /// Central ranking as a ranked list, e.g. 3|1|2 (identity by default).
    #[arg(long)]
    center: Option<String>,
    #[arg(long, default_value_t = 1)]
    count: usize,
    #[command(flatten)]
    seed: SeedArg,
    /// Output format.
    #[arg(long, value_enum, default_value = "lists")]
    format: DataFormat,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OutputKind {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FitModel {
    Phi,
    Gm,
    Igm,
}

impl From<FitModel> for ModelKind {
    fn from(m: FitModel) -> Self {
        match m {
            FitModel::Phi => ModelKind::Phi,
            FitModel::Gm => ModelKind::Gm,
            FitModel::Igm => ModelKind::Igm,
        }
    }
}

#[derive(Debug, Args)]
struct DataArgs {
    /// Ranking file.
    #[arg(long)]
    data: PathBuf,
    /// Input format (detected when omitted).
    #[arg(long, value_enum)]
    format: Option<DataFormat>,
}

#[derive(Debug, Args)]
struct FitArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, value_enum)]
    model: Option<FitModel>,
    /// Top-t size for igm: a number or `auto`.
    #[arg(long)]
    t: Option<String>,
    /// One shared dispersion for all igm stages.
    #[arg(long)]
    single: bool,
    /// Known central ranking, e.g. 3|1|5|4|2.
    #[arg(long)]
    center: Option<String>,
    /// Report the rank of this item in the estimated center.
    #[arg(long)]
    target_item: Option<u32>,
    /// Sidecar file of `id<TAB>name` lines for the center.
    #[arg(long)]
    names: Option<PathBuf>,
    /// Cutoff fraction for `--t auto`.
    #[arg(long)]
    lambda: Option<f64>,
    /// Candidate sizes for `--t auto`, comma-separated.
    #[arg(long)]
    window: Option<String>,
    #[arg(long, value_enum, default_value = "csv")]
    output: OutputKind,
}

#[derive(Debug, Args)]
struct SelectArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long)]
    lambda: Option<f64>,
    /// Candidate sizes, comma-separated.
    #[arg(long)]
    window: Option<String>,
    /// Write the trace CSV here instead of after the chosen t.
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct RegenArgs {
    /// `start:stop:step` grid of θ for the effective-length curve.
    #[arg(long, conflicts_with_all = ["theta", "row"])]
    theta_grid: Option<String>,
    /// Comma-separated θ values for streamed component statistics.
    #[arg(long, requires = "components", conflicts_with = "row")]
    theta: Option<String>,
    /// Components to stream per θ.
    #[arg(long)]
    components: Option<usize>,
    /// Row probabilities p1,p2,... for the component-length law.
    #[arg(long)]
    row: Option<String>,
    /// Number of terms of the law (adaptive when omitted).
    #[arg(long)]
    n_max: Option<usize>,
    #[command(flatten)]
    seed: SeedArg,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    #[arg(long)]
    suite: String,
    #[command(flatten)]
    seed: SeedArg,
    /// Directory for `<suite>.csv` and `<suite>.txt`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Election data for the `apa` suite.
    #[arg(long, env = "MALLOWS_APA_DATA")]
    apa_data: Option<PathBuf>,
    /// List lengths for the `table2` suite, comma-separated.
    #[arg(long)]
    t_max: Option<String>,
    /// Replicates for the `table2` suite.
    #[arg(long)]
    replicates: Option<usize>,
}

/// A failure with its exit code.
#[derive(Debug)]
struct Failure {
    code: i32,
    message: String,
}

impl From<mallows::Error> for Failure {
    fn from(e: mallows::Error) -> Self {
        usage(e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        usage(e.to_string())
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure {
        code: EXIT_USAGE,
        message: message.into(),
    }
}

type CliResult<T = ()> = std::result::Result<T, Failure>;

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 {
                out.write_all(text.as_bytes())
            } else {
                err.write_all(text.as_bytes())
            };
            return code;
        }
    };
    match dispatch(cli, out) {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}

fn dispatch(cli: Cli, out: &mut dyn Write) -> CliResult<i32> {
    let config = match &cli.config {
        Some(path) => parse_key_values(&read_text(path)?)?,
        None => KeyValues::default(),
    };
    match cli.command {
        Command::Sample(a) => sample(a, &config, out).map(|_| 0),
        Command::Fit(a) => fit_cmd(a, &config, out).map(|_| 0),
        Command::SelectT(a) => select_cmd(a, &config, out).map(|_| 0),
        Command::Regen(a) => regen(a, &config, out).map(|_| 0),
        Command::Verify(a) => verify(a, &config, out),
        Command::Version => {
            writeln!(out, "mallows {}", env!("CARGO_PKG_VERSION"))?;
            Ok(0)
        }
    }
}

fn read_text(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn config_value<T: std::str::FromStr>(config: &KeyValues, key: &str) -> CliResult<Option<T>> {
    config
        .get(key)
        .map(|v| {
            v.parse::<T>()
                .map_err(|_| usage(format!("config key {key}: bad value {v:?}")))
        })
        .transpose()
}

fn seed(arg: &SeedArg, config: &KeyValues) -> CliResult<u64> {
    match arg.seed {
        Some(s) => Ok(s),
        None => config_value(config, "seed")?
            .ok_or_else(|| usage("a seed is required (--seed, MALLOWS_SEED, or seed= in --config)")),
    }
}

fn parse_list(spec: &str) -> CliResult<Vec<u32>> {
    spec.split('|')
        .map(|p| {
            p.trim()
                .parse::<u32>()
                .map_err(|_| usage(format!("bad item {p:?} in ranked list {spec:?}")))
        })
        .collect()
}

fn parse_sizes(spec: &str) -> CliResult<Vec<usize>> {
    spec.split(',')
        .map(|p| p.trim().parse::<usize>().map_err(|_| usage(format!("bad size {p:?}"))))
        .collect()
}

fn load(args: &DataArgs) -> CliResult<RankingDataset> {
    Ok(read_rankings(&args.data, args.format.map(Format::from))?)
}

fn sample(a: SampleArgs, config: &KeyValues, out: &mut dyn Write) -> CliResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed(&a.seed, config)?);
    let center_list = a.center.as_deref().map(parse_list).transpose()?;
    let thetas = a.thetas.as_deref().map(parse_reals).transpose()?;
    let data = match a.model {
        SampleModel::Phi | SampleModel::Gm => {
            let n = a.n.ok_or_else(|| usage("--n is required"))?;
            let center = match &center_list {
                Some(c) => Permutation::from_ranked_list(c)?,
                None => Permutation::identity(n),
            };
            let perms = if a.model == SampleModel::Phi {
                let theta = a.theta.ok_or_else(|| usage("--theta is required"))?;
                (0..a.count)
                    .map(|_| sample_mallows_phi(n, theta, &center, &mut rng))
                    .collect::<mallows::Result<Vec<_>>>()?
            } else {
                let thetas = match (thetas, a.theta) {
                    (Some(t), _) => DispersionVector::new(t)?,
                    (None, Some(t)) => DispersionVector::constant(t, n.saturating_sub(1))?,
                    (None, None) => return Err(usage("--thetas or --theta is required")),
                };
                (0..a.count)
                    .map(|_| sample_gm(n, &thetas, &center, &mut rng))
                    .collect::<mallows::Result<Vec<_>>>()?
            };
            if perms.is_empty() {
                RankingDataset::new(Universe::Size(n as u32), Vec::new())?
            } else {
                RankingDataset::from_permutations(&perms)?
            }
        }
        SampleModel::Igm => {
            let thetas = match (thetas, a.theta) {
                (Some(t), _) => DispersionVector::new(t)?,
                (None, Some(theta)) => {
                    let t = a.t.ok_or_else(|| usage("--t is required with --theta"))?;
                    DispersionVector::constant(theta, t)?
                }
                (None, None) => return Err(usage("--thetas or --theta is required")),
            };
            let center = match center_list {
                Some(c) => CentralOrder::new(c)?,
                None => CentralOrder::identity(),
            };
            let rankings = (0..a.count)
                .map(|_| sample_igm_top_t(&thetas, &center, &mut rng))
                .collect::<mallows::Result<Vec<_>>>()?;
            RankingDataset::from_rankings(Universe::Open, rankings)?
        }
        SampleModel::Pshift => {
            let n = a.n.ok_or_else(|| usage("--n is required"))?;
            let probs = parse_reals(a.row.as_deref().ok_or_else(|| usage("--row is required"))?)?;
            let rows = RowSchedule::Homogeneous(RowDistribution::finite(&probs)?);
            let observations = (0..a.count)
                .map(|_| {
                    let s = sample_p_shifted(&rows, n, &mut rng)?;
                    let items = s
                        .values
                        .iter()
                        .map(|&v| u32::try_from(v).map_err(|_| mallows::Error::Input(format!("value {v} too large"))))
                        .collect::<mallows::Result<Vec<u32>>>()?;
                    Ok(Observation {
                        ranking: TopTRanking::new(items)?,
                        count: 1,
                    })
                })
                .collect::<mallows::Result<Vec<_>>>()?;
            RankingDataset::new(Universe::Open, observations)?
        }
    };
    out.write_all(write_rankings(&data, a.format.into()).as_bytes())?;
    Ok(())
}

fn select_options(lambda: Option<f64>, window: Option<&str>, config: &KeyValues) -> CliResult<SelectOptions> {
    let mut opts = SelectOptions::default();
    if let Some(l) = lambda.or(config_value(config, "lambda")?) {
        opts.lambda = l;
    }
    let window = window.map(str::to_string).or(config.get("window").map(str::to_string));
    opts.window = window.as_deref().map(parse_sizes).transpose()?;
    Ok(opts)
}

fn clamp_name(c: Clamp) -> &'static str {
    match c {
        Clamp::None => "none",
        Clamp::Max => "max",
        Clamp::Min => "min",
    }
}

fn fit_cmd(a: FitArgs, config: &KeyValues, out: &mut dyn Write) -> CliResult {
    let data = load(&a.data)?;
    let kind: ModelKind = match a.model {
        Some(m) => m.into(),
        None => config
            .get("model")
            .map(str::parse::<ModelKind>)
            .transpose()?
            .ok_or_else(|| usage("--model is required"))?,
    };
    let t_spec = a.t.clone().or(config.get("t").map(str::to_string));
    if kind != ModelKind::Igm && t_spec.is_some() {
        return Err(usage("--t applies to the igm model only"));
    }
    let mut selected = None;
    let t = match t_spec.as_deref() {
        None => None,
        Some("auto") => {
            let opts = select_options(a.lambda, a.window.as_deref(), config)?;
            let (t, _) = select_t(&data, &opts)?;
            selected = Some(t);
            Some(t)
        }
        Some(s) => Some(
            s.parse::<usize>()
                .map_err(|_| usage(format!("--t must be a number or auto, got {s:?}")))?,
        ),
    };
    let options = FitOptions {
        t,
        single_parameter: a.single,
        center: a.center.as_deref().map(parse_list).transpose()?,
        ..FitOptions::new(kind)
    };
    let model = mallows::fit(&data, &options)?;
    let names = a
        .names
        .as_deref()
        .map(|p| read_text(p).and_then(|t| Ok(parse_names(&t)?)))
        .transpose()?;
    let rank = a.target_item.map(|it| target_rank(&model.center, it));
    match a.output {
        OutputKind::Csv => write_fit_csv(out, &model, selected, rank, names.as_ref())?,
        OutputKind::Json => {
            let mut value = serde_json::to_value(&model).map_err(|e| usage(e.to_string()))?;
            if let Some(r) = rank {
                value["target_rank"] = r.into();
            }
            if let Some(t) = selected {
                value["selected_t"] = t.into();
            }
            if let Some(names) = &names {
                value["center_names"] = model
                    .center
                    .iter()
                    .map(|id| names.get(id).cloned().unwrap_or_else(|| id.to_string()))
                    .collect::<Vec<_>>()
                    .into();
            }
            writeln!(out, "{value}")?;
        }
    }
    Ok(())
}

fn write_fit_csv(
    out: &mut dyn Write,
    model: &FittedModel,
    selected: Option<usize>,
    rank: Option<usize>,
    names: Option<&std::collections::BTreeMap<u32, String>>,
) -> CliResult {
    let thetas: Vec<String> = model.thetas.iter().map(f64::to_string).collect();
    let clamps: Vec<&str> = model.diagnostics.stages.iter().map(|s| clamp_name(s.clamp)).collect();
    let mut header = String::from("model,t,thetas,clamped,center,log_likelihood");
    let kind = match model.kind {
        ModelKind::Phi => "phi",
        ModelKind::Gm => "gm",
        ModelKind::Igm => "igm",
    };
    let mut row = format!(
        "{kind},{},{},{},{},{}",
        model.t,
        thetas.join("|"),
        clamps.join("|"),
        format_items(&model.center),
        model.log_likelihood
    );
    if let Some(t) = selected {
        header.push_str(",selected_t");
        row.push_str(&format!(",{t}"));
    }
    if let Some(r) = rank {
        header.push_str(",target_rank");
        row.push_str(&format!(",{r}"));
    }
    if let Some(names) = names {
        header.push_str(",center_names");
        let labels: Vec<String> = model
            .center
            .iter()
            .map(|id| names.get(id).cloned().unwrap_or_else(|| id.to_string()))
            .collect();
        let joined = labels.join("|");
        if joined.contains([',', '"']) {
            row.push_str(&format!(",\"{}\"", joined.replace('"', "\"\"")));
        } else {
            row.push_str(&format!(",{joined}"));
        }
    }
    writeln!(out, "{header}\n{row}")?;
    Ok(())
}

fn select_cmd(a: SelectArgs, config: &KeyValues, out: &mut dyn Write) -> CliResult {
    let data = load(&a.data)?;
    let opts = select_options(a.lambda, a.window.as_deref(), config)?;
    let (t, trace) = select_t(&data, &opts)?;
    writeln!(out, "{t}")?;
    match &a.trace {
        Some(path) => fs::write(path, trace.to_csv()).map_err(|e| usage(format!("{}: {e}", path.display())))?,
        None => out.write_all(trace.to_csv().as_bytes())?,
    }
    Ok(())
}

/// θ rounded to 12 decimals so grid points print cleanly.
fn fmt_theta(theta: f64) -> String {
    let r = (theta * 1e12).round() / 1e12;
    format!("{}", if r == 0.0 { 0.0 } else { r })
}

fn regen(a: RegenArgs, config: &KeyValues, out: &mut dyn Write) -> CliResult {
    if let Some(spec) = &a.theta_grid {
        writeln!(out, "theta,expected_length")?;
        for theta in parse_grid(spec)? {
            let el = if theta <= 0.0 {
                f64::INFINITY
            } else {
                expected_component_length(theta)?
            };
            writeln!(out, "{},{}", fmt_theta(theta), el)?;
        }
        return Ok(());
    }
    if let Some(spec) = &a.theta {
        let components = a
            .components
            .ok_or_else(|| usage("--components is required with --theta"))?;
        let seed = seed(&a.seed, config)?;
        writeln!(out, "theta,expected_length,empirical_mean,n_components")?;
        for theta in parse_reals(spec)? {
            let s = renewal_monte_carlo_parallel(theta, components, seed, 16)?;
            writeln!(
                out,
                "{},{},{},{}",
                fmt_theta(theta),
                s.expected_length,
                s.empirical_mean(),
                s.n_components()
            )?;
        }
        return Ok(());
    }
    if let Some(spec) = &a.row {
        let row = RowDistribution::finite(&parse_reals(spec)?)?;
        let law = component_length_law(&row, a.n_max)?;
        writeln!(out, "n,u_n,p_len")?;
        for (i, (u, p)) in law.u.iter().zip(&law.pmf).enumerate() {
            writeln!(out, "{},{},{}", i + 1, u, p)?;
        }
        return Ok(());
    }
    Err(usage("one of --theta-grid, --theta or --row is required"))
}

fn verify(a: VerifyArgs, config: &KeyValues, out: &mut dyn Write) -> CliResult<i32> {
    if !SUITES.contains(&a.suite.as_str()) {
        return Err(usage(format!(
            "unknown suite {:?} (expected one of {})",
            a.suite,
            SUITES.join(", ")
        )));
    }
    let mut options = SuiteOptions {
        apa_data: a.apa_data.clone(),
        ..SuiteOptions::default()
    };
    if let Some(s) = a.seed.seed.or(config_value(config, "seed")?) {
        options.seed = s;
    }
    if let Some(spec) = &a.t_max {
        options.table2_t_max = parse_sizes(spec)?;
    }
    if let Some(r) = a.replicates {
        options.table2_replicates = r;
    }
    let reports = run_suite(&a.suite, &options)?;
    let mut csv = String::from(ExperimentReport::CSV_HEADER);
    csv.push('\n');
    let mut summary = String::new();
    for r in &reports {
        csv.push_str(&r.csv_rows());
        summary.push_str(&r.summary());
    }
    out.write_all(summary.as_bytes())?;
    if let Some(dir) = &a.out {
        fs::create_dir_all(dir)?;
        fs::write(dir.join(format!("{}.csv", a.suite)), &csv)?;
        fs::write(dir.join(format!("{}.txt", a.suite)), &summary)?;
    }
    Ok(if reports.iter().all(ExperimentReport::passed) {
        0
    } else {
        EXIT_FAILURE
    })
}

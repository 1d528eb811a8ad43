//! Command-line front end.
//!
//! Exit codes: 0 on success, 1 on usage errors, 2 on data errors (unreadable
//! files, parse or validation failures). Output files are written only after
//! a command has fully succeeded.

use std::collections::{BTreeMap, HashSet};
use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::align::{self, relative_change, render_transcript, score_wer, Transcript};
use crate::diversity::{self, cross_wer, mean_and_deviation, Deviation};
use crate::glexicon::{self, ContextMode};
use crate::mbr::{self, CombinationWeights, Coverage};
use crate::nbest::{self, PosteriorScales, SystemOutput};
use crate::smoothing::{self, SmoothingOptions};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Data(m) => m,
        }
    }
}

type CliResult<T> = Result<T, CliError>;

fn data_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Data(format!("{}: {e}", path.display()))
}

#[derive(Debug, Parser)]
#[command(name = "gramcomb", version, about = "Graphemic lexicons, WER scoring, MBR combination and checkpoint smoothing")]
pub struct Cli {
    /// Worker threads for internal parallelism (default: all cores)
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Graphemic lexicon tools
    #[command(subcommand)]
    Glex(GlexCommand),
    /// Score 1-best hypotheses against references
    Score(ScoreArgs),
    /// MBR decoding and combination of N-best lists
    #[command(subcommand)]
    Mbr(MbrCommand),
    /// Cross word error rate between systems
    Cwer(CwerArgs),
    /// Per-system WER, mean, deviation and cWER
    Stats(StatsArgs),
    /// Estimate layer-wise smoothing weights and interpolate checkpoints
    Smooth(SmoothArgs),
    /// Select checkpoints at a fixed iteration interval
    Checkpoints(CheckpointArgs),
    /// Receptive field of a layer stack
    Rfield(RfieldArgs),
    /// Generate a synthetic ensemble by corrupting references
    Synth(SynthArgs),
    /// Run a multi-stage pipeline from a key=value config file
    Pipeline(PipelineArgs),
}

#[derive(Debug, Subcommand)]
enum GlexCommand {
    /// Build a lexicon from a word list
    Build {
        #[arg(long)]
        words: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Emit bare graphemes without DA/DB attributes
        #[arg(long)]
        no_attributes: bool,
        /// Write rejected words and reasons here
        #[arg(long)]
        rejections: Option<PathBuf>,
    },
    /// List the context-dependent unit inventory of a lexicon
    Units {
        #[arg(long)]
        lexicon: PathBuf,
        #[arg(long, default_value = "mono")]
        context: ContextMode,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
struct ScoreArgs {
    #[arg(long)]
    hyp: PathBuf,
    #[arg(long = "ref")]
    reference: PathBuf,
    /// Treat utterances without a hypothesis as empty
    #[arg(long)]
    missing_as_empty: bool,
    /// Write the per-utterance report here
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ScaleArgs {
    #[arg(long, default_value_t = 1.0)]
    lm_scale: f64,
    #[arg(long, default_value_t = 1.0)]
    post_scale: f64,
}

impl ScaleArgs {
    fn scales(&self) -> CliResult<PosteriorScales> {
        let s = PosteriorScales {
            lm_scale: self.lm_scale,
            posterior_scale: self.post_scale,
        };
        s.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        Ok(s)
    }
}

#[derive(Debug, Subcommand)]
enum MbrCommand {
    /// Single-system MBR decoding
    Decode {
        #[arg(long)]
        nbest: PathBuf,
        #[command(flatten)]
        scales: ScaleArgs,
        #[arg(long)]
        out: PathBuf,
        /// Dump per-candidate risks
        #[arg(long)]
        risks: Option<PathBuf>,
    },
    /// Multi-system MBR combination
    Combine {
        #[arg(long, required = true)]
        nbest: Vec<PathBuf>,
        /// Comma-separated system weights (default: uniform)
        #[arg(long)]
        lambdas: Option<String>,
        #[command(flatten)]
        scales: ScaleArgs,
        /// Combine only utterances present in every system
        #[arg(long)]
        intersect: bool,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        risks: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
struct CwerArgs {
    #[arg(long, required = true)]
    hyp: Vec<PathBuf>,
}

#[derive(Debug, Args)]
struct StatsArgs {
    #[arg(long, required = true)]
    hyp: Vec<PathBuf>,
    #[arg(long = "ref")]
    reference: PathBuf,
    /// population or sample
    #[arg(long, default_value = "population")]
    deviation: Deviation,
}

#[derive(Debug, Args)]
struct SmoothArgs {
    #[arg(long, required = true)]
    bundle: Vec<PathBuf>,
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    weights_out: Option<PathBuf>,
    #[arg(long, default_value_t = 200)]
    max_iters: usize,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
}

#[derive(Debug, Args)]
struct CheckpointArgs {
    /// File of available iteration indices, whitespace separated
    #[arg(long)]
    available: PathBuf,
    #[arg(long)]
    count: usize,
    #[arg(long)]
    interval: u64,
}

#[derive(Debug, Args)]
struct RfieldArgs {
    #[arg(long)]
    layers: PathBuf,
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[arg(long = "ref")]
    reference: PathBuf,
    #[arg(long)]
    systems: usize,
    #[arg(long)]
    target_wer: f64,
    #[arg(long)]
    seed: u64,
    /// Receives sys1.nbest, sys2.nbest, ...
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Debug, Args)]
struct PipelineArgs {
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config's seed
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the config's out_dir
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

/// Files to write and text to print once a command has succeeded.
#[derive(Debug, Default)]
pub struct Outputs {
    pub files: Vec<(PathBuf, String)>,
    pub stdout: String,
}

impl Outputs {
    fn file(&mut self, path: impl Into<PathBuf>, content: String) {
        self.files.push((path.into(), content));
    }

    fn commit(self, stdout: &mut dyn Write) -> CliResult<()> {
        for (path, content) in &self.files {
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir).map_err(|e| data_err(dir, e))?;
            }
            std::fs::write(path, content).map_err(|e| data_err(path, e))?;
        }
        stdout
            .write_all(self.stdout.as_bytes())
            .map_err(|e| CliError::Data(e.to_string()))
    }
}

fn read(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| data_err(path, e))
}

fn read_transcript(path: &Path) -> CliResult<Transcript> {
    align::parse_transcript(&read(path)?).map_err(|e| data_err(path, e))
}

fn read_nbest(path: &Path) -> CliResult<SystemOutput> {
    let id = path
        .file_stem()
        .map_or_else(|| path.display().to_string(), |s| s.to_string_lossy().into_owned());
    nbest::parse_nbest(&read(path)?, &id).map_err(|e| data_err(path, e))
}

fn parse_lambdas(text: &str) -> CliResult<Vec<f64>> {
    text.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| CliError::Usage(format!("invalid lambda {t:?}")))
        })
        .collect()
}

fn weights_for(lambdas: Option<Vec<f64>>, systems: usize) -> CliResult<CombinationWeights> {
    let w = match lambdas {
        Some(l) if l.len() != systems => {
            return Err(CliError::Usage(format!(
                "{} lambdas given for {systems} systems",
                l.len()
            )))
        }
        Some(l) => CombinationWeights::new(l),
        None => CombinationWeights::uniform(systems),
    };
    w.map_err(|e| CliError::Usage(e.to_string()))
}

/// Parses `argv` (including the program name), runs the command and returns
/// the process exit code.
pub fn run<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = stdout.write_all(text.as_bytes());
                    0
                }
                _ => {
                    let _ = stderr.write_all(text.as_bytes());
                    1
                }
            };
        }
    };

    let result = match cli.threads {
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(|| execute(cli.command)),
            Err(e) => Err(CliError::Usage(format!("thread pool: {e}"))),
        },
        None => execute(cli.command),
    };

    match result.and_then(|out| out.commit(stdout)) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "gramcomb: {}", e.message());
            e.exit_code()
        }
    }
}

fn execute(command: Command) -> CliResult<Outputs> {
    let mut out = Outputs::default();
    match command {
        Command::Glex(GlexCommand::Build {
            words,
            out: path,
            no_attributes,
            rejections,
        }) => {
            let list = glexicon::parse_word_list(&read(&words)?);
            let built = glexicon::build_lexicon(&list, !no_attributes);
            out.file(path, glexicon::render_lexicon(&built.entries));
            let rejected: String = built.rejections.iter().map(|r| format!("{r}\n")).collect();
            match rejections {
                Some(p) => out.file(p, rejected),
                None => out.stdout.push_str(&rejected),
            }
        }
        Command::Glex(GlexCommand::Units {
            lexicon,
            context,
            out: path,
        }) => {
            let entries = glexicon::parse_lexicon(&read(&lexicon)?).map_err(|e| data_err(&lexicon, e))?;
            let inv = glexicon::context_units(&entries, context).map_err(|e| data_err(&lexicon, e))?;
            match path {
                Some(p) => out.file(p, inv.render()),
                None => out.stdout = inv.render(),
            }
        }
        Command::Score(args) => {
            let hyps = read_transcript(&args.hyp)?;
            let refs = read_transcript(&args.reference)?;
            let report = score_wer(&hyps, &refs, args.missing_as_empty).map_err(|e| data_err(&args.hyp, e))?;
            if let Some(p) = args.report {
                out.file(p, report.to_string());
            }
            out.stdout = format!("{}\n", report.summary_line());
        }
        Command::Mbr(MbrCommand::Decode {
            nbest,
            scales,
            out: path,
            risks,
        }) => {
            let scales = scales.scales()?;
            let system = read_nbest(&nbest)?;
            let results = mbr::combine_corpus(
                &[system],
                &CombinationWeights::uniform(1).expect("one weight"),
                scales,
                Coverage::Strict,
            )
            .map_err(|e| data_err(&nbest, e))?;
            out.file(path, render_transcript(&mbr::one_best(&results)));
            if let Some(r) = risks {
                out.file(r, mbr::render_risks(&results));
            }
        }
        Command::Mbr(MbrCommand::Combine {
            nbest,
            lambdas,
            scales,
            intersect,
            out: path,
            risks,
        }) => {
            let scales = scales.scales()?;
            let lambdas = lambdas.as_deref().map(parse_lambdas).transpose()?;
            let weights = weights_for(lambdas, nbest.len())?;
            let systems = nbest.iter().map(|p| read_nbest(p)).collect::<CliResult<Vec<_>>>()?;
            let coverage = if intersect { Coverage::Intersect } else { Coverage::Strict };
            let results = mbr::combine_corpus(&systems, &weights, scales, coverage)
                .map_err(|e| CliError::Data(e.to_string()))?;
            out.file(path, render_transcript(&mbr::one_best(&results)));
            if let Some(r) = risks {
                out.file(r, mbr::render_risks(&results));
            }
        }
        Command::Cwer(args) => {
            let systems = args.hyp.iter().map(|p| read_transcript(p)).collect::<CliResult<Vec<_>>>()?;
            let c = cross_wer(&systems).map_err(|e| CliError::Data(e.to_string()))?;
            out.stdout = format!("cWER={c:.2}\n");
        }
        Command::Stats(args) => {
            let systems = args.hyp.iter().map(|p| read_transcript(p)).collect::<CliResult<Vec<_>>>()?;
            let refs = read_transcript(&args.reference)?;
            let stats = diversity::ensemble_stats(&systems, &refs, args.deviation)
                .map_err(|e| CliError::Data(e.to_string()))?;
            out.stdout = stats.to_string();
        }
        Command::Smooth(args) => {
            let models = args
                .bundle
                .iter()
                .map(|p| smoothing::parse_bundle(&read(p)?).map_err(|e| data_err(p, e)))
                .collect::<CliResult<Vec<_>>>()?;
            let data = smoothing::parse_dataset(&read(&args.data)?).map_err(|e| data_err(&args.data, e))?;
            let evaluator = smoothing::builtin_evaluator(data);
            let opts = SmoothingOptions {
                max_iters: args.max_iters,
                tol: args.tol,
                ..Default::default()
            };
            let fit = smoothing::estimate_weights(&models, &evaluator, &opts)
                .map_err(|e| CliError::Data(e.to_string()))?;
            let smoothed = smoothing::interpolate(&models, &fit.weights)
                .map_err(|e| CliError::Data(e.to_string()))?;
            out.file(args.out, smoothing::render_bundle(&smoothed));
            if let Some(p) = args.weights_out {
                out.file(p, smoothing::render_weights(&fit.weights));
            }
            out.stdout = format!(
                "initial_loss={} loss={} iterations={}\n",
                fit.initial_loss, fit.loss, fit.iterations
            );
        }
        Command::Checkpoints(args) => {
            let available = read(&args.available)?
                .split_whitespace()
                .map(|t| t.parse::<u64>().map_err(|_| data_err(&args.available, format!("bad iteration {t:?}"))))
                .collect::<CliResult<Vec<_>>>()?;
            let picked = smoothing::select_checkpoints(&available, args.count, args.interval)
                .map_err(|e| data_err(&args.available, e))?;
            out.stdout = picked.iter().map(|i| format!("{i}\n")).collect();
        }
        Command::Rfield(args) => {
            let layers = diversity::parse_layers(&read(&args.layers)?).map_err(|e| data_err(&args.layers, e))?;
            let rf = diversity::receptive_field(&layers).map_err(|e| data_err(&args.layers, e))?;
            out.stdout = format!("left={} right={}\n", rf.left, rf.right);
        }
        Command::Synth(args) => {
            let refs = read_transcript(&args.reference)?;
            let systems = diversity::synth_ensemble(&refs, args.systems, args.target_wer, args.seed)
                .map_err(|e| CliError::Data(e.to_string()))?;
            for s in &systems {
                out.file(args.out_dir.join(format!("{}.nbest", s.system_id)), nbest::render_nbest(s));
            }
        }
        Command::Pipeline(args) => {
            let mut config = PipelineConfig::load(&args.config)?;
            if let Some(seed) = args.seed {
                config.seed = seed;
            }
            if let Some(dir) = args.out_dir {
                config.out_dir = dir;
            }
            out = run_pipeline(&config)?;
        }
    }
    Ok(out)
}

/// Stage names accepted in a pipeline config.
pub const STAGES: [&str; 6] = [
    "lexicon-build",
    "synth-ensemble",
    "mbr-combine",
    "score",
    "cwer",
    "smooth",
];

/// Pipeline settings from a `key = value` file. Relative paths resolve
/// against the config file's directory.
#[derive(Clone, Debug, PartialEq)]
pub struct PipelineConfig {
    pub stages: Vec<String>,
    pub seed: u64,
    pub out_dir: PathBuf,
    pub settings: BTreeMap<String, String>,
    base_dir: PathBuf,
}

impl PipelineConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = read(path)?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::parse(&text, &base).map_err(|e| data_err(path, e))
    }

    pub fn parse(text: &str, base_dir: &Path) -> Result<Self, String> {
        let mut settings = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| format!("line {}: expected key = value", idx + 1))?;
            if settings.insert(k.trim().to_owned(), v.trim().to_owned()).is_some() {
                return Err(format!("line {}: duplicate key {:?}", idx + 1, k.trim()));
            }
        }
        let stages: Vec<String> = settings
            .remove("stages")
            .ok_or("missing \"stages\"")?
            .split(',')
            .map(|s| s.trim().to_owned())
            .filter(|s| !s.is_empty())
            .collect();
        let mut seen = HashSet::new();
        for s in &stages {
            if !STAGES.contains(&s.as_str()) {
                return Err(format!("unknown stage {s:?}"));
            }
            if !seen.insert(s) {
                return Err(format!("stage {s:?} listed twice"));
            }
        }
        let seed = match settings.remove("seed") {
            Some(s) => s.parse().map_err(|_| format!("bad seed {s:?}"))?,
            None => 0,
        };
        let out_dir = base_dir.join(settings.remove("out_dir").unwrap_or_else(|| "pipeline_out".into()));
        Ok(PipelineConfig {
            stages,
            seed,
            out_dir,
            settings,
            base_dir: base_dir.to_path_buf(),
        })
    }

    fn get(&self, key: &str) -> Option<&str> {
        self.settings.get(key).map(String::as_str)
    }

    fn require(&self, key: &str) -> Result<&str, String> {
        self.get(key).ok_or_else(|| format!("missing setting {key:?}"))
    }

    fn path(&self, key: &str) -> Result<PathBuf, String> {
        Ok(self.base_dir.join(self.require(key)?))
    }

    fn paths(&self, key: &str) -> Result<Vec<PathBuf>, String> {
        Ok(self
            .require(key)?
            .split(',')
            .map(|p| self.base_dir.join(p.trim()))
            .collect())
    }

    fn number<T: std::str::FromStr>(&self, key: &str, default: T) -> Result<T, String> {
        match self.get(key) {
            Some(v) => v.parse().map_err(|_| format!("bad value {v:?} for {key:?}")),
            None => Ok(default),
        }
    }
}

#[derive(Default)]
struct PipelineState {
    refs: Option<Transcript>,
    systems: Option<Vec<SystemOutput>>,
    combined: Option<Transcript>,
    rows: Vec<(String, String)>,
}

fn stage_read(path: &Path) -> Result<String, String> {
    std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))
}

/// Runs the configured stages in order and returns the files to write,
/// including `report.tsv`, plus the report on stdout.
pub fn run_pipeline(config: &PipelineConfig) -> CliResult<Outputs> {
    let mut out = Outputs::default();
    let mut state = PipelineState::default();
    for stage in &config.stages {
        run_stage(stage, config, &mut state, &mut out)
            .map_err(|e| CliError::Data(format!("stage {stage}: {e}")))?;
    }
    let mut report = String::from("item\tvalue\n");
    for (k, v) in &state.rows {
        let _ = writeln!(report, "{k}\t{v}");
    }
    out.file(config.out_dir.join("report.tsv"), report.clone());
    out.stdout = report;
    Ok(out)
}

fn refs_for(config: &PipelineConfig, state: &mut PipelineState) -> Result<Transcript, String> {
    if let Some(r) = &state.refs {
        return Ok(r.clone());
    }
    let path = config.path("ref")?;
    let refs = align::parse_transcript(&stage_read(&path)?).map_err(|e| format!("{}: {e}", path.display()))?;
    state.refs = Some(refs.clone());
    Ok(refs)
}

fn systems_for(config: &PipelineConfig, state: &mut PipelineState) -> Result<Vec<SystemOutput>, String> {
    if let Some(s) = &state.systems {
        return Ok(s.clone());
    }
    let systems = config
        .paths("nbest")?
        .iter()
        .map(|p| {
            let id = p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            nbest::parse_nbest(&stage_read(p)?, &id).map_err(|e| format!("{}: {e}", p.display()))
        })
        .collect::<Result<Vec<_>, _>>()?;
    state.systems = Some(systems.clone());
    Ok(systems)
}

fn fmt_pct(x: f64) -> String {
    format!("{x:.4}")
}

fn run_stage(
    stage: &str,
    config: &PipelineConfig,
    state: &mut PipelineState,
    out: &mut Outputs,
) -> Result<(), String> {
    match stage {
        "lexicon-build" => {
            let words = glexicon::parse_word_list(&stage_read(&config.path("words")?)?);
            let mark = config.number("attributes", true)?;
            let built = glexicon::build_lexicon(&words, mark);
            out.file(config.out_dir.join("lexicon.txt"), glexicon::render_lexicon(&built.entries));
            state.rows.push(("lexicon_entries".into(), built.entries.len().to_string()));
            state.rows.push(("lexicon_rejections".into(), built.rejections.len().to_string()));
        }
        "synth-ensemble" => {
            let refs = refs_for(config, state)?;
            let m = config.number("systems", 3usize)?;
            let target = config.number("target_wer", 25.0f64)?;
            let systems =
                diversity::synth_ensemble(&refs, m, target, config.seed).map_err(|e| e.to_string())?;
            for s in &systems {
                out.file(
                    config.out_dir.join(format!("{}.nbest", s.system_id)),
                    nbest::render_nbest(s),
                );
            }
            state.systems = Some(systems);
        }
        "mbr-combine" => {
            let systems = systems_for(config, state)?;
            let lambdas = config
                .get("lambdas")
                .map(|l| parse_lambdas(l).map_err(|e| e.message().to_owned()))
                .transpose()?;
            let weights = weights_for(lambdas, systems.len()).map_err(|e| e.message().to_owned())?;
            let scales = PosteriorScales {
                lm_scale: config.number("lm_scale", 1.0)?,
                posterior_scale: config.number("post_scale", 1.0)?,
            };
            let coverage = if config.number("intersect", false)? {
                Coverage::Intersect
            } else {
                Coverage::Strict
            };
            let results = mbr::combine_corpus(&systems, &weights, scales, coverage).map_err(|e| e.to_string())?;
            let best = mbr::one_best(&results);
            out.file(config.out_dir.join("combined.txt"), render_transcript(&best));
            state.combined = Some(best);
        }
        "score" => {
            let refs = refs_for(config, state)?;
            let systems = systems_for(config, state)?;
            let mut wers = Vec::new();
            for s in &systems {
                let wer = score_wer(&s.one_best(), &refs, false).map_err(|e| e.to_string())?.wer();
                state.rows.push((format!("wer:{}", s.system_id), fmt_pct(wer)));
                wers.push(wer);
            }
            let (mean, sd) = mean_and_deviation(&wers, Deviation::Population);
            state.rows.push(("wer_mean".into(), fmt_pct(mean)));
            state.rows.push(("wer_std".into(), fmt_pct(sd)));
            if let Some(combined) = &state.combined {
                let wer = score_wer(combined, &refs, false).map_err(|e| e.to_string())?.wer();
                let best = wers.iter().copied().fold(f64::INFINITY, f64::min);
                state.rows.push(("wer:combined".into(), fmt_pct(wer)));
                let rel = relative_change(best, wer).map_err(|e| e.to_string())?;
                state.rows.push(("rel_vs_best".into(), fmt_pct(rel)));
            }
        }
        "cwer" => {
            let systems = systems_for(config, state)?;
            let one_bests: Vec<Transcript> = systems.iter().map(SystemOutput::one_best).collect();
            let c = cross_wer(&one_bests).map_err(|e| e.to_string())?;
            state.rows.push(("cwer".into(), fmt_pct(c)));
        }
        "smooth" => {
            let models = config
                .paths("bundles")?
                .iter()
                .map(|p| smoothing::parse_bundle(&stage_read(p)?).map_err(|e| format!("{}: {e}", p.display())))
                .collect::<Result<Vec<_>, _>>()?;
            let data_path = config.path("data")?;
            let data = smoothing::parse_dataset(&stage_read(&data_path)?)
                .map_err(|e| format!("{}: {e}", data_path.display()))?;
            let opts = SmoothingOptions {
                max_iters: config.number("max_iters", 200usize)?,
                tol: config.number("tol", 1e-8f64)?,
                ..Default::default()
            };
            let fit = smoothing::estimate_weights(&models, &smoothing::builtin_evaluator(data), &opts)
                .map_err(|e| e.to_string())?;
            let smoothed = smoothing::interpolate(&models, &fit.weights).map_err(|e| e.to_string())?;
            out.file(config.out_dir.join("smoothed.pbundle"), smoothing::render_bundle(&smoothed));
            out.file(config.out_dir.join("smoothed.weights"), smoothing::render_weights(&fit.weights));
            state.rows.push(("smooth_initial_loss".into(), format!("{:.6}", fit.initial_loss)));
            state.rows.push(("smooth_loss".into(), format!("{:.6}", fit.loss)));
        }
        other => return Err(format!("unknown stage {other:?}")),
    }
    Ok(())
}

//! The `amb` command line.
//!
//! Every subcommand accepts `--seed`, `--backend mock|remote:URL`, `--jobs`
//! and `--out`; all files are written under `--out`. Exit status is 0 on
//! success, 1 on a domain error (reported on stderr as one JSON line
//! `{"error":{"code","message","stage"}}`) and 2 on a usage error.

use std::collections::BTreeSet;
use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use crate::actor::{perform_line, Ablation, AblationConfig, LineRequest, PipelineError, PromptTemplate, Window};
use crate::backends::{Backend, BackendConfig};
use crate::corpus::{self, Corpus, Scene};
use crate::emodb::{build_database, EmotionDatabase};
use crate::eval::{self, Best, Layout, ReportRow, ROLE_ORDER};
use crate::scenealign::{self, ScriptDocument};

pub const DEFAULT_SEED: u64 = 42;

#[derive(Debug, Parser)]
#[command(name = "amb", version, about = "Speech role-playing pipeline and benchmark tooling")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Args)]
struct Common {
    /// Seed for every stochastic choice.
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// `mock`, or `remote:URL` (the URL may come from AMB_BACKEND_URL).
    #[arg(long, default_value = "mock")]
    backend: String,
    /// Maximum concurrent backend calls.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    jobs: u64,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Project script scene boundaries onto recognized utterances.
    Align(AlignArgs),
    /// Per-episode utterance and scene statistics.
    Stats(StatsArgs),
    /// Split a manifest into train and test episodes.
    Split(SplitArgs),
    /// Build one role's emotion database.
    BuildDb(BuildDbArgs),
    /// Perform one line.
    Perform(PerformArgs),
    /// Perform a list of targets under the full config and every ablation.
    Ablate(AblateArgs),
    /// Aggregate subjective ratings.
    #[command(subcommand)]
    Eval(EvalCommand),
}

#[derive(Debug, Args)]
struct AlignArgs {
    #[arg(long)]
    script: PathBuf,
    /// JSON array of utterances in manifest shape.
    #[arg(long)]
    utterances: PathBuf,
    #[arg(long)]
    episode: String,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args)]
struct StatsArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args)]
struct SplitArgs {
    #[arg(long)]
    manifest: PathBuf,
    /// Comma-separated episode ids.
    #[arg(long, value_delimiter = ',')]
    test_episodes: Vec<String>,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args)]
struct BuildDbArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long)]
    role: String,
    /// Episodes to leave out of the database (comma-separated).
    #[arg(long, value_delimiter = ',')]
    exclude_episodes: Vec<String>,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Clone, Args)]
struct PipelineArgs {
    #[arg(long)]
    manifest: PathBuf,
    /// Emotion database built by `build-db`; built on the fly when omitted.
    #[arg(long)]
    db: Option<PathBuf>,
    /// Brain prompt template; the bundled one when omitted.
    #[arg(long)]
    template: Option<PathBuf>,
    /// Preceding turns to keep: `all` or a positive count.
    #[arg(long, default_value = "all")]
    window: Window,
}

#[derive(Debug, Args)]
struct PerformArgs {
    #[arg(long)]
    role: String,
    #[arg(long)]
    scene: String,
    /// 0-based position of the target within the scene.
    #[arg(long)]
    position: usize,
    /// `full` or one of the ablation names.
    #[arg(long, default_value = "full")]
    ablation: Ablation,
    #[command(flatten)]
    pipeline: PipelineArgs,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args)]
struct AblateArgs {
    /// CSV with columns `role,scene,position`.
    #[arg(long)]
    targets: PathBuf,
    #[command(flatten)]
    pipeline: PipelineArgs,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Subcommand)]
enum EvalCommand {
    /// RP-MOS table; one row per input file.
    Mos(EvalMosArgs),
    /// Improvement-over-baseline table; one row per system.
    Improvement(EvalImprovementArgs),
    /// Ablation deltas against a full-system rating file.
    Delta(EvalDeltaArgs),
}

#[derive(Debug, Args)]
struct EvalMosArgs {
    /// Rating CSV(s); the file stem labels the row.
    #[arg(long = "input", required = true)]
    inputs: Vec<PathBuf>,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args)]
struct EvalImprovementArgs {
    #[arg(long)]
    input: PathBuf,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args)]
struct EvalDeltaArgs {
    #[arg(long)]
    full: PathBuf,
    /// Rating CSV(s) of ablated systems; the file stem labels the row.
    #[arg(long = "ablated", required = true)]
    ablated: Vec<PathBuf>,
    #[command(flatten)]
    common: Common,
}

/// A domain failure as reported on stderr.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CliError {
    pub code: String,
    pub message: String,
    pub stage: Option<String>,
}

impl CliError {
    fn new(code: &str, message: impl ToString) -> Self {
        Self {
            code: code.to_string(),
            message: message.to_string(),
            stage: None,
        }
    }

    pub fn to_json_line(&self) -> String {
        json!({ "error": { "code": self.code, "message": self.message, "stage": self.stage } }).to_string()
    }
}

macro_rules! from_coded {
    ($($t:ty),*) => {$(
        impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                CliError::new(e.code(), &e)
            }
        }
    )*};
}

from_coded!(
    corpus::CorpusError,
    scenealign::AlignError,
    crate::backends::BackendError,
    crate::emodb::EmoDbError,
    eval::EvalError,
    crate::actor::ActorError
);

impl From<PipelineError> for CliError {
    fn from(e: PipelineError) -> Self {
        Self {
            code: e.code().to_string(),
            message: e.source.to_string(),
            stage: Some(e.stage.to_string()),
        }
    }
}

impl From<crate::actor::TemplateError> for CliError {
    fn from(e: crate::actor::TemplateError) -> Self {
        CliError::new("TemplateError", e)
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |e| CliError::new("IoError", format!("{}: {e}", path.display()))
}

type CliResult = Result<(), CliError>;

/// Run with the process's own arguments and standard streams.
pub fn execute<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run(argv, &mut stdout.lock(), &mut stderr.lock())
}

/// Parse `argv` (program name first) and run it; returns the exit status.
pub fn run<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = write!(stderr, "{text}");
                2
            } else {
                let _ = write!(stdout, "{text}");
                0
            };
        }
    };
    match dispatch(cli.command, stdout) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "{}", e.to_json_line());
            1
        }
    }
}

fn dispatch(command: Command, stdout: &mut dyn Write) -> CliResult {
    match command {
        Command::Align(a) => cmd_align(a, stdout),
        Command::Stats(a) => cmd_stats(a, stdout),
        Command::Split(a) => cmd_split(a, stdout),
        Command::BuildDb(a) => cmd_build_db(a, stdout),
        Command::Perform(a) => cmd_perform(a, stdout),
        Command::Ablate(a) => cmd_ablate(a, stdout),
        Command::Eval(EvalCommand::Mos(a)) => cmd_eval_mos(a, stdout),
        Command::Eval(EvalCommand::Improvement(a)) => cmd_eval_improvement(a, stdout),
        Command::Eval(EvalCommand::Delta(a)) => cmd_eval_delta(a, stdout),
    }
}

impl Common {
    fn out_dir(&self) -> Result<&Path, CliError> {
        fs::create_dir_all(&self.out).map_err(io_err(&self.out))?;
        Ok(&self.out)
    }

    fn backend(&self) -> Result<Arc<dyn Backend>, CliError> {
        let mut cfg = BackendConfig::from_spec(&self.backend)?.with_env_override();
        cfg.seed = self.seed;
        cfg.max_parallel = usize::try_from(self.jobs).unwrap_or(usize::MAX);
        Ok(cfg.connect()?)
    }
}

fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> CliResult {
    fs::write(path, contents).map_err(io_err(path))
}

fn read_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(io_err(path))
}

fn pretty(value: &impl Serialize) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

fn cmd_align(a: AlignArgs, stdout: &mut dyn Write) -> CliResult {
    let out = a.common.out_dir()?;
    let script = ScriptDocument::parse(&read_text(&a.script)?)?;
    let utterances = corpus::parse_utterance_list(&read_text(&a.utterances)?, &a.episode)?;
    let alignment = scenealign::align_script(&script, &utterances)?;
    let projection = scenealign::project_boundaries(&alignment, &script)?;

    let scenes: Vec<Scene> = projection
        .scenes
        .iter()
        .enumerate()
        .map(|(i, s)| Scene {
            id: format!("{}_S{:02}", a.episode, i + 1),
            episode_id: a.episode.clone(),
            start_index: s.start_index,
            end_index: s.end_index,
            description: s.label.clone(),
        })
        .collect();
    write_file(&out.join("scenes.json"), pretty(&scenes))?;
    let report = json!({
        "pairs": alignment.pairs,
        "skipped_lines": alignment.skipped_lines,
        "skipped_utterances": alignment.skipped_utterances,
        "total_score": alignment.total_score,
        "unanchored_scenes": projection.unanchored.iter().map(|u| json!({
            "label": u.label,
            "script_scene": u.script_scene,
            "merged_into": u.merged_into,
        })).collect::<Vec<_>>(),
    });
    write_file(&out.join("alignment.json"), pretty(&report))?;
    let _ = writeln!(
        stdout,
        "{} scenes, {} matched lines, {} skipped lines, {} skipped utterances",
        scenes.len(),
        alignment.pairs.len(),
        alignment.skipped_lines.len(),
        alignment.skipped_utterances.len()
    );
    Ok(())
}

fn load_valid(path: &Path) -> Result<Corpus, CliError> {
    let c = corpus::load_manifest(path)?;
    let report = corpus::validate_corpus(&c);
    if let Some(first) = report.violations.first() {
        return Err(CliError::new(
            "InvalidCorpus",
            format!(
                "{} violation(s); first: {:?} `{}`: {}",
                report.violations.len(),
                first.kind,
                first.id,
                first.message
            ),
        ));
    }
    Ok(c)
}

fn cmd_stats(a: StatsArgs, stdout: &mut dyn Write) -> CliResult {
    let out = a.common.out_dir()?;
    let c = load_valid(&a.manifest)?;
    let stats = scenealign::compute_stats(&c);
    write_file(&out.join("utterance_stats.csv"), stats.utterance_csv())?;
    write_file(&out.join("scene_stats.csv"), stats.scene_csv())?;
    let _ = write!(stdout, "{}\n{}", stats.utterance_table(), stats.scene_table());
    Ok(())
}

fn cmd_split(a: SplitArgs, stdout: &mut dyn Write) -> CliResult {
    let out = a.common.out_dir()?;
    let c = corpus::load_manifest(&a.manifest)?;
    let test_ids: BTreeSet<String> = a.test_episodes.into_iter().filter(|s| !s.is_empty()).collect();
    let (mut train, mut test) = corpus::split_episodes(&c, &test_ids)?;
    // Asset refs resolve against the manifest's directory; when the split is
    // written elsewhere, point them back at the original files.
    let same_dir = fs::canonicalize(out).ok() == fs::canonicalize(&c.root).ok();
    if !same_dir {
        let root = fs::canonicalize(&c.root).map_err(io_err(&c.root))?;
        for part in [&mut train, &mut test] {
            for u in part.episodes.iter_mut().flat_map(|e| e.utterances.iter_mut()) {
                u.audio = root.join(&u.audio).to_string_lossy().into_owned();
            }
        }
    }
    write_file(&out.join("train.json"), train.to_manifest_string())?;
    write_file(&out.join("test.json"), test.to_manifest_string())?;
    let _ = writeln!(
        stdout,
        "train: {} episodes, test: {} episodes",
        train.episodes.len(),
        test.episodes.len()
    );
    Ok(())
}

fn role_database(
    c: &Corpus,
    role: &str,
    exclude_episodes: &BTreeSet<String>,
    exclude_utterance: Option<&str>,
    backend: &dyn Backend,
) -> Result<EmotionDatabase, CliError> {
    let utterances: Vec<_> = c
        .utterances()
        .filter(|u| u.role == role)
        .filter(|u| !exclude_episodes.contains(&u.episode_id))
        .filter(|u| Some(u.id.as_str()) != exclude_utterance)
        .collect();
    Ok(build_database(role, &utterances, |r| c.resolve_asset(r), backend)?)
}

fn cmd_build_db(a: BuildDbArgs, stdout: &mut dyn Write) -> CliResult {
    let out = a.common.out_dir()?;
    let backend = a.common.backend()?;
    let c = load_valid(&a.manifest)?;
    if c.role(&a.role).is_none() {
        return Err(crate::actor::ActorError::NoProfile(a.role).into());
    }
    let excluded: BTreeSet<String> = a.exclude_episodes.into_iter().filter(|s| !s.is_empty()).collect();
    for id in &excluded {
        if c.episode(id).is_none() {
            return Err(corpus::CorpusError::UnknownEpisode(id.clone()).into());
        }
    }
    let db = role_database(&c, &a.role, &excluded, None, backend.as_ref())?;
    let path = out.join(format!("{}.emodb.jsonl", a.role));
    db.persist(&path)?;
    let _ = writeln!(stdout, "{} entries, dim {} -> {}", db.len(), db.dim, path.display());
    Ok(())
}

struct Session {
    corpus: Corpus,
    template: PromptTemplate,
    db: Option<EmotionDatabase>,
    window: Window,
    backend: Arc<dyn Backend>,
}

impl Session {
    fn open(p: &PipelineArgs, common: &Common) -> Result<Self, CliError> {
        let backend = common.backend()?;
        let corpus = load_valid(&p.manifest)?;
        let template = match &p.template {
            Some(path) => PromptTemplate::load(path)?,
            None => PromptTemplate::default(),
        };
        let db = p.db.as_deref().map(EmotionDatabase::load).transpose()?;
        Ok(Self {
            corpus,
            template,
            db,
            window: p.window,
            backend,
        })
    }

    /// The role database: the one given on the command line, or one built
    /// from every other utterance of the role.
    fn database(&self, role: &str, target_id: Option<&str>) -> Result<EmotionDatabase, CliError> {
        match &self.db {
            Some(db) if db.role == role => Ok(db.clone()),
            Some(db) => Err(CliError::new(
                "RoleMismatch",
                format!("database is for `{}`, target is `{role}`", db.role),
            )),
            None => role_database(&self.corpus, role, &BTreeSet::new(), target_id, self.backend.as_ref()),
        }
    }

    fn target_id(&self, scene: &str, position: usize) -> Option<String> {
        corpus::scene_dialogue(&self.corpus, scene)
            .ok()
            .and_then(|d| d.get(position))
            .map(|u| u.id.clone())
    }

    fn perform(
        &self,
        role: &str,
        scene: &str,
        position: usize,
        cfg: &AblationConfig,
        db: &EmotionDatabase,
    ) -> Result<crate::actor::PerformanceBundle, CliError> {
        let request = LineRequest {
            role: role.to_string(),
            scene_id: scene.to_string(),
            position,
            window: self.window,
        };
        Ok(perform_line(
            &self.corpus,
            &request,
            db,
            &self.template,
            cfg,
            self.backend.as_ref(),
        )?)
    }
}

fn check_scene(c: &Corpus, scene: &str) -> CliResult {
    match c.find_scene(scene) {
        Some(_) => Ok(()),
        None => Err(corpus::CorpusError::UnknownScene(scene.to_string()).into()),
    }
}

fn cmd_perform(a: PerformArgs, stdout: &mut dyn Write) -> CliResult {
    let out = a.common.out_dir()?;
    let session = Session::open(&a.pipeline, &a.common)?;
    check_scene(&session.corpus, &a.scene)?;
    let target = session.target_id(&a.scene, a.position);
    let db = session.database(&a.role, target.as_deref())?;
    let cfg = a.ablation.config(a.common.seed);
    let bundle = session.perform(&a.role, &a.scene, a.position, &cfg, &db)?;
    let stem = format!("{}.{}", bundle.target_utterance_id, a.ablation.name());
    let (json_path, _) = bundle.write(out, &stem).map_err(io_err(out))?;
    let _ = writeln!(
        stdout,
        "{} [{}] -> {}",
        bundle.target_utterance_id,
        bundle
            .emotion_state
            .as_ref()
            .map_or("retrieval bypassed", |s| s.as_str()),
        json_path.display()
    );
    Ok(())
}

#[derive(Debug, serde::Deserialize)]
struct TargetRow {
    role: String,
    scene: String,
    position: usize,
}

fn cmd_ablate(a: AblateArgs, stdout: &mut dyn Write) -> CliResult {
    let out = a.common.out_dir()?;
    let session = Session::open(&a.pipeline, &a.common)?;
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(&a.targets)
        .map_err(|e| CliError::new("IoError", format!("{}: {e}", a.targets.display())))?;
    let targets: Vec<TargetRow> = rdr
        .deserialize()
        .collect::<Result<_, _>>()
        .map_err(|e| CliError::new("ParseError", format!("{}: {e}", a.targets.display())))?;
    if targets.is_empty() {
        return Err(CliError::new("EmptyInput", "no targets"));
    }

    let header: Vec<String> = [
        "configuration",
        "target",
        "emotion_state",
        "retrieved_id",
        "similarity",
        "retrieval_bypassed",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    let mut rows = Vec::new();
    for t in &targets {
        check_scene(&session.corpus, &t.scene)?;
        let target = session.target_id(&t.scene, t.position);
        let db = session.database(&t.role, target.as_deref())?;
        for ablation in Ablation::ALL {
            let cfg = ablation.config(a.common.seed);
            let bundle = session.perform(&t.role, &t.scene, t.position, &cfg, &db)?;
            bundle
                .write(&out.join(ablation.name()), &bundle.target_utterance_id)
                .map_err(io_err(out))?;
            rows.push(vec![
                ablation.name().to_string(),
                bundle.target_utterance_id.clone(),
                bundle.emotion_state.as_ref().map(|s| s.to_string()).unwrap_or_default(),
                bundle.retrieved_id.clone().unwrap_or_default(),
                bundle.similarity.map(|s| format!("{s:.6}")).unwrap_or_default(),
                bundle.retrieval_bypassed.to_string(),
            ]);
        }
    }
    write_file(&out.join("ablation_runs.csv"), scenealign::to_csv(&header, &rows))?;
    let _ = writeln!(
        stdout,
        "{} targets x {} configurations",
        targets.len(),
        Ablation::ALL.len()
    );
    Ok(())
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map_or_else(|| path.display().to_string(), |s| s.to_string_lossy().into_owned())
}

fn write_report(out: &Path, name: &str, report: &eval::Report, stdout: &mut dyn Write) -> CliResult {
    write_file(&out.join(format!("{name}.txt")), &report.text)?;
    write_file(&out.join(format!("{name}.csv")), &report.csv)?;
    let _ = write!(stdout, "{}", report.text);
    Ok(())
}

fn cmd_eval_mos(a: EvalMosArgs, stdout: &mut dyn Write) -> CliResult {
    let out = a.common.out_dir()?;
    let mut rows: Vec<ReportRow> = Vec::new();
    for path in &a.inputs {
        let records = eval::read_mos_csv(eval::open_csv(path)?)?;
        rows.push(eval::aggregate_mos(&records)?.to_row(&stem(path), &ROLE_ORDER));
    }
    let report = eval::render_report(&rows, Layout::Mos, Some(Best::Highest))?;
    write_report(out, "mos_report", &report, stdout)
}

fn cmd_eval_improvement(a: EvalImprovementArgs, stdout: &mut dyn Write) -> CliResult {
    let out = a.common.out_dir()?;
    let records = eval::read_improvement_csv(eval::open_csv(&a.input)?)?;
    let rows: Vec<ReportRow> = eval::aggregate_improvement_by_system(&records)?
        .iter()
        .map(|(system, table)| table.to_row(system, &ROLE_ORDER))
        .collect();
    let report = eval::render_report(&rows, Layout::Improvement, Some(Best::Highest))?;
    write_report(out, "improvement_report", &report, stdout)
}

fn cmd_eval_delta(a: EvalDeltaArgs, stdout: &mut dyn Write) -> CliResult {
    let out = a.common.out_dir()?;
    let full = eval::aggregate_mos(&eval::read_mos_csv(eval::open_csv(&a.full)?)?)?.means();
    let mut rows = Vec::new();
    for path in &a.ablated {
        let ablated = eval::aggregate_mos(&eval::read_mos_csv(eval::open_csv(path)?)?)?.means();
        rows.push(ReportRow {
            label: stem(path),
            cells: vec![Some(eval::ablation_delta(&full, &ablated)?)],
        });
    }
    let report = eval::render_report(&rows, Layout::Ablation, Some(Best::Highest))?;
    write_report(out, "ablation_report", &report, stdout)
}

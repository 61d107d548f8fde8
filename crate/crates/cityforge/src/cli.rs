use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use cityforge_core::edit::{apply_edit, parse_edit_command, parse_edit_json, parse_edit_tokens, EditError};
use cityforge_core::executor::{assemble_scene, export_scene, ExportFormat, ScenePackage};
use cityforge_core::metrics::{QualityReport, ReportInput, RosScope};
use cityforge_core::program::{check_format, parse_block_program, ProgramKind};
use cityforge_core::scoring::{
    score_spatial, DensityBand, ExternalScorer, ExternalScorerConfig, OverlapScope, ScoringError, SemanticScorer,
    StubScorer,
};
use serde_json::{json, Value};

use crate::config::{Config, ConfigError};
use crate::load::{attach_buildings, load_city, LoadError};

/// Exit status contract.
pub mod exit {
    pub const OK: u8 = 0;
    pub const INVALID: u8 = 1;
    pub const USAGE: u8 = 2;
    pub const IO: u8 = 3;
}

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Self { code, message: message.into() }
    }
}

impl From<LoadError> for Failure {
    fn from(e: LoadError) -> Self {
        match e {
            LoadError::Io { .. } => Failure::new(exit::IO, e.to_string()),
            LoadError::Program { .. } => Failure::new(exit::INVALID, e.to_string()),
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        match e {
            ConfigError::Io { .. } => Failure::new(exit::IO, e.to_string()),
            ConfigError::Invalid(_) => Failure::new(exit::USAGE, e.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "cityforge", version, about = "Validate, score, build and edit city block programs")]
struct Cli {
    /// JSON settings file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check a program's format; prints the verdict as JSON.
    Validate {
        path: PathBuf,
        #[arg(long, default_value = "block")]
        kind: ProgramKind,
    },
    /// Compute the spatial reward of a block program.
    Score {
        path: PathBuf,
        #[arg(long, default_value = "")]
        prompt: String,
        /// `stub` or the URL of a semantic judge; defaults to the configured judge, else the stub.
        #[arg(long)]
        scorer: Option<String>,
        /// Density band as `d_min,d_max`.
        #[arg(long, value_parser = parse_band)]
        band: Option<DensityBand>,
        #[arg(long)]
        allow_stub_fallback: bool,
        /// Count only buildings in the overlap term.
        #[arg(long)]
        buildings_only: bool,
    },
    /// Build the 3D scene and export it.
    Execute {
        path: PathBuf,
        /// Directory of `<element id>.json` building programs.
        #[arg(long)]
        buildings: Option<PathBuf>,
        #[arg(long, default_value = "glb")]
        format: ExportFormat,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Write report.json and report.csv for a set of programs.
    Metrics {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long, default_value = "block")]
        kind: ProgramKind,
        #[arg(long)]
        buildings: Option<PathBuf>,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        #[arg(long, value_parser = parse_ros_scope)]
        ros_scope: Option<RosScope>,
        /// Skip scene construction (no ROS/OTR).
        #[arg(long)]
        no_scenes: bool,
    },
    /// Apply one edit command; prints the result as JSON.
    Edit {
        path: PathBuf,
        /// The command, quoted as one argument or given word by word.
        command: Vec<String>,
        /// Read the command as `{"verb", "target", "args"}` JSON instead.
        #[arg(long, conflicts_with = "command")]
        json: Option<PathBuf>,
        #[arg(long)]
        buildings: Option<PathBuf>,
        /// Write the edited program here.
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Run the HTTP service.
    Serve {
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        /// Directory of static assets served at `/`.
        #[arg(long = "static")]
        static_dir: Option<PathBuf>,
        /// Sessions are restored from and saved to this file.
        #[arg(long)]
        snapshot: Option<PathBuf>,
        /// Allowed CORS origin; any origin when absent.
        #[arg(long)]
        cors_origin: Option<String>,
    },
}

fn parse_band(s: &str) -> Result<DensityBand, String> {
    let (a, b) = s.split_once(',').ok_or("expected d_min,d_max")?;
    let a: f64 = a.trim().parse().map_err(|e| format!("d_min: {e}"))?;
    let b: f64 = b.trim().parse().map_err(|e| format!("d_max: {e}"))?;
    DensityBand::new(a, b).map_err(|e| e.to_string())
}

fn parse_ros_scope(s: &str) -> Result<RosScope, String> {
    match s {
        "shells" => Ok(RosScope::Shells),
        "full" | "full_scene" => Ok(RosScope::FullScene),
        other => Err(format!("unknown scope `{other}` (expected shells|full)")),
    }
}

fn print_json(v: &Value) {
    println!("{}", serde_json::to_string_pretty(v).expect("json value serializes"));
}

fn read(path: &Path) -> Result<Vec<u8>, Failure> {
    std::fs::read(path).map_err(|e| Failure::new(exit::IO, format!("{}: {e}", path.display())))
}

fn validate(path: &Path, kind: ProgramKind) -> Result<u8, Failure> {
    let verdict = check_format(&read(path)?, kind);
    for d in &verdict.diagnostics {
        eprintln!("{}: {:?} {}: {}", path.display(), d.severity, d.path, d.message);
    }
    print_json(&serde_json::to_value(&verdict).expect("verdict serializes"));
    Ok(if verdict.overall { exit::OK } else { exit::INVALID })
}

fn score(config: &Config, path: &Path, prompt: &str, scorer: Option<&str>, allow_fallback: bool) -> Result<u8, Failure> {
    let block = load_city(path, None)?.block;
    let mut scoring = config.scoring.clone();
    scoring.allow_stub_fallback |= allow_fallback;
    let judge: Box<dyn SemanticScorer> = match scorer {
        None => match &config.scorer {
            Some(c) if !c.url.is_empty() => Box::new(ExternalScorer::new(c.clone())),
            _ => Box::new(StubScorer),
        },
        Some("stub") => Box::new(StubScorer),
        Some(url) => {
            let base = config.scorer.clone().unwrap_or_default();
            Box::new(ExternalScorer::new(ExternalScorerConfig { url: url.to_string(), ..base }))
        }
    };
    let prompt = if prompt.is_empty() { block.description.clone().unwrap_or_default() } else { prompt.to_string() };
    match score_spatial(&block, &prompt, judge.as_ref(), &scoring) {
        Ok(s) => {
            print_json(&serde_json::to_value(&s).expect("score serializes"));
            Ok(exit::OK)
        }
        Err(e @ (ScoringError::ExternalScorerUnavailable(_) | ScoringError::InvalidScore(_))) => {
            Err(Failure::new(exit::IO, e.to_string()))
        }
        Err(e) => Err(Failure::new(exit::INVALID, e.to_string())),
    }
}

fn execute(
    config: &Config,
    path: &Path,
    buildings: Option<&Path>,
    format: ExportFormat,
    seed: Option<u64>,
    out: &Path,
) -> Result<u8, Failure> {
    let city = load_city(path, buildings)?;
    let mut ex = config.executor.clone();
    if let Some(s) = seed {
        ex.seed = s;
    }
    let scene = assemble_scene(&city.block, &city.buildings, &ex).map_err(|e| Failure::new(exit::INVALID, e.to_string()))?;
    for w in &scene.warnings {
        eprintln!("warning: {w}");
    }
    export_scene(&scene, format, out).map_err(|e| Failure::new(exit::IO, e.to_string()))?;
    print_json(&json!({
        "output": out.display().to_string(),
        "format": format!("{format:?}").to_lowercase(),
        "buildings": scene.buildings.len(),
        "greenspaces": scene.greenspaces.len(),
        "props": scene.props.len(),
        "block_hash": scene.metadata.block_hash,
        "seed": scene.metadata.seed,
        "warnings": scene.warnings,
    }));
    Ok(exit::OK)
}

#[allow(clippy::too_many_arguments)]
fn metrics(
    config: &Config,
    inputs: &[PathBuf],
    kind: ProgramKind,
    buildings: Option<&Path>,
    out: &Path,
    ros_scope: Option<RosScope>,
    no_scenes: bool,
) -> Result<u8, Failure> {
    let texts: Vec<Vec<u8>> = inputs.iter().map(|p| read(p)).collect::<Result<_, _>>()?;
    let mut scenes: Vec<Option<ScenePackage>> = Vec::new();
    for (path, text) in inputs.iter().zip(&texts) {
        let scene = match (kind, no_scenes) {
            (ProgramKind::Block, false) => match parse_block_program(text) {
                Ok(p) => {
                    let mut city = cityforge_core::CityProgram::new(p.program);
                    if let Some(dir) = buildings {
                        attach_buildings(&mut city, dir)?;
                    }
                    match assemble_scene(&city.block, &city.buildings, &config.executor) {
                        Ok(s) => Some(s),
                        Err(e) => {
                            eprintln!("{}: no scene: {e}", path.display());
                            None
                        }
                    }
                }
                Err(_) => None,
            },
            _ => None,
        };
        scenes.push(scene);
    }
    let ids: Vec<String> = inputs.iter().map(|p| p.display().to_string()).collect();
    let report_inputs: Vec<ReportInput<'_>> = ids
        .iter()
        .zip(&texts)
        .zip(&scenes)
        .map(|((id, text), scene)| ReportInput { id: id.clone(), text, kind, scene: scene.as_ref() })
        .collect();
    let mut ros = config.ros;
    if let Some(s) = ros_scope {
        ros.scope = s;
    }
    let report = QualityReport::build(&report_inputs, &ros).map_err(|e| Failure::new(exit::INVALID, e.to_string()))?;
    std::fs::create_dir_all(out).map_err(|e| Failure::new(exit::IO, format!("{}: {e}", out.display())))?;
    report.write(out).map_err(|e| Failure::new(exit::IO, e.to_string()))?;
    print_json(&serde_json::to_value(&report.summary).expect("summary serializes"));
    Ok(exit::OK)
}

fn edit(
    config: &Config,
    path: &Path,
    words: Vec<String>,
    json_file: Option<&Path>,
    buildings: Option<&Path>,
    out: Option<&Path>,
) -> Result<u8, Failure> {
    let parsed = match (json_file, words.len()) {
        (Some(f), _) => {
            let v: Value = serde_json::from_slice(&read(f)?)
                .map_err(|e| Failure::new(exit::USAGE, format!("{}: {e}", f.display())))?;
            parse_edit_json(&v)
        }
        (None, 0) => return Err(Failure::new(exit::USAGE, "no edit command given")),
        (None, 1) => parse_edit_command(&words[0]),
        (None, _) => parse_edit_tokens(words),
    };
    let command = parsed.map_err(|e| Failure::new(exit::USAGE, e.to_string()))?;
    let city = load_city(path, buildings)?;
    let result = apply_edit(&city, &command, &config.edit_context()).map_err(|e| match e {
        EditError::UnknownVerb { .. } | EditError::BadArguments(_) => Failure::new(exit::USAGE, e.to_string()),
        _ => Failure::new(exit::INVALID, e.to_string()),
    })?;
    for w in &result.warnings {
        eprintln!("warning: {w}");
    }
    if let Some(out) = out {
        let text = result.program_after.to_canonical_string();
        std::fs::write(out, text + "\n").map_err(|e| Failure::new(exit::IO, format!("{}: {e}", out.display())))?;
    }
    print_json(&result.to_value());
    Ok(exit::OK)
}

fn serve(
    config: Config,
    host: &str,
    port: u16,
    static_dir: Option<PathBuf>,
    snapshot: Option<PathBuf>,
    cors_origin: Option<String>,
) -> Result<u8, Failure> {
    let runtime = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(|e| Failure::new(exit::IO, e.to_string()))?;
    let options = crate::service::ServeOptions { static_dir, snapshot, cors_origin };
    runtime
        .block_on(crate::service::run(config, &format!("{host}:{port}"), options))
        .map_err(|e| Failure::new(exit::IO, e.to_string()))?;
    Ok(exit::OK)
}

fn dispatch(cli: Cli) -> Result<u8, Failure> {
    let mut config = match &cli.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    match cli.command {
        Command::Validate { path, kind } => validate(&path, kind),
        Command::Score { path, prompt, scorer, band, allow_stub_fallback, buildings_only } => {
            if let Some(b) = band {
                config.scoring.band = b;
            }
            if buildings_only {
                config.scoring.overlap_scope = OverlapScope::BuildingsOnly;
            }
            score(&config, &path, &prompt, scorer.as_deref(), allow_stub_fallback)
        }
        Command::Execute { path, buildings, format, seed, out } => {
            execute(&config, &path, buildings.as_deref(), format, seed, &out)
        }
        Command::Metrics { inputs, kind, buildings, out, ros_scope, no_scenes } => {
            metrics(&config, &inputs, kind, buildings.as_deref(), &out, ros_scope, no_scenes)
        }
        Command::Edit { path, command, json, buildings, out } => {
            edit(&config, &path, command, json.as_deref(), buildings.as_deref(), out.as_deref())
        }
        Command::Serve { host, port, static_dir, snapshot, cors_origin } => {
            serve(config, &host, port, static_dir, snapshot, cors_origin)
        }
    }
}

/// Parses `args` and runs the subcommand, mapping failures to exit codes.
pub fn run<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { exit::USAGE } else { exit::OK });
        }
    };
    match dispatch(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

//! `psan`: register a key, sanitize prompts, desanitize responses, and run
//! the privacy and utility harnesses.
//!
//! Exit codes: 0 success, 1 usage error, 2 invalid input or configuration,
//! 3 runtime failure. Diagnostics go to stderr only.

mod harness_cmds;

use std::ffi::OsString;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use psan_core::config::{ConfigError, SanitizerConfig, Treatment};
use psan_core::fpe::format::{builtin, BUILTIN_FORMATS};
use psan_core::fpe::NameIndex;
use psan_core::key::{keygen, KeyError, DEFAULT_SECURITY_BITS};
use psan_core::pipeline::{HelperString, MechanismNoise, SanitizeError, Sanitizer};
use psan_core::SanitizerKey;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

pub use harness_cmds::{AdversaryKind, MetricKind};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Validation(_) => 2,
            CliError::Runtime(_) => 3,
        }
    }
}

pub(crate) fn key_error(e: KeyError) -> CliError {
    match e {
        KeyError::Io { .. } | KeyError::EntropyUnavailable(_) => CliError::Runtime(e.to_string()),
        _ => CliError::Validation(e.to_string()),
    }
}

pub(crate) fn config_error(e: ConfigError) -> CliError {
    match e {
        ConfigError::Io { .. } => CliError::Runtime(e.to_string()),
        ConfigError::Key(k) => key_error(k),
        _ => CliError::Validation(e.to_string()),
    }
}

pub(crate) fn sanitize_error(e: SanitizeError) -> CliError {
    match e {
        SanitizeError::Config(c) => config_error(c),
        SanitizeError::Annotate(psan_core::annotate::AnnotateError::NerBackend { .. }) => {
            CliError::Runtime(e.to_string())
        }
        _ => CliError::Validation(e.to_string()),
    }
}

pub(crate) fn io_error(path: &Path, e: std::io::Error) -> CliError {
    CliError::Runtime(format!("{}: {e}", path.display()))
}

#[derive(Parser, Debug)]
#[command(name = "psan", version, about = "Stateless prompt sanitizer")]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone, Default)]
pub struct KeyArgs {
    /// Config file; its key file is used unless --key is given.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Key file, overriding the config's.
    #[arg(long, value_name = "PATH")]
    key: Option<PathBuf>,
    /// Total privacy budget, overriding the config's.
    #[arg(long, value_name = "F64")]
    epsilon: Option<f64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a key file and a default config.
    Register {
        #[arg(long, value_name = "PATH", default_value = "psan.key")]
        key: PathBuf,
        #[arg(long, value_name = "PATH", default_value = "psan.toml")]
        config: PathBuf,
        #[arg(long, default_value_t = DEFAULT_SECURITY_BITS)]
        security_bits: u32,
        #[arg(long, value_name = "F64")]
        epsilon: Option<f64>,
        /// Overwrite existing files.
        #[arg(long)]
        force: bool,
    },
    /// Sanitize a prompt read from PATH or stdin.
    Sanitize {
        input: Option<PathBuf>,
        #[command(flatten)]
        keys: KeyArgs,
        /// Helper string (JSON) describing repeated and derived tokens.
        #[arg(long, value_name = "PATH")]
        psi: Option<PathBuf>,
        /// Seed for the perturbation randomness; OS entropy when absent.
        #[arg(long, value_name = "U64")]
        seed: Option<u64>,
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
        /// Token report (JSON lines); written to stderr when absent.
        #[arg(long, value_name = "PATH")]
        report: Option<PathBuf>,
    },
    /// Restore encrypted tokens in a response read from PATH or stdin.
    Desanitize {
        input: Option<PathBuf>,
        #[command(flatten)]
        keys: KeyArgs,
        /// The prompt that was sanitized; only its ciphertexts are decrypted.
        #[arg(long, value_name = "PATH")]
        original: Option<PathBuf>,
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
        /// Per-token actions (JSON lines).
        #[arg(long, value_name = "PATH")]
        report: Option<PathBuf>,
    },
    /// Play the privacy game on two prompts separated by a `---` line.
    Game {
        pair: PathBuf,
        #[command(flatten)]
        keys: KeyArgs,
        #[arg(long, value_name = "N", default_value_t = 10_000)]
        trials: u64,
        #[arg(long, value_name = "U64", default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = AdversaryKind::LikelihoodRatio)]
        adversary: AdversaryKind,
        /// Percentage of the second prompt's tokens replaced by the first's.
        #[arg(long, value_name = "PCT")]
        lambda: Option<f64>,
        /// CSV summary.
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
    },
    /// Score a JSON-lines corpus against a mock oracle or a chat model.
    Eval {
        corpus: PathBuf,
        #[command(flatten)]
        keys: KeyArgs,
        /// `retrieve:<TYPE>`, `linear:<c1,c2,...>`, `compare` or `llm`.
        #[arg(long, default_value = "compare")]
        oracle: String,
        #[arg(long, value_enum)]
        metric: Option<MetricKind>,
        #[arg(long, value_name = "U64", default_value_t = 0)]
        seed: u64,
        /// Chat-completions URL for `--oracle llm`.
        #[arg(long)]
        endpoint: Option<String>,
        #[arg(long)]
        model: Option<String>,
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
    },
    /// List formats and the configured type registry.
    Formats {
        #[arg(long, value_name = "PATH")]
        config: Option<PathBuf>,
    },
}

pub(crate) fn load_config(keys: &KeyArgs, require_key: bool) -> Result<SanitizerConfig, CliError> {
    let key = keys.key.as_ref().map(SanitizerKey::read_file).transpose().map_err(key_error)?;
    let config = match (&keys.config, key) {
        (Some(path), key) => {
            let text = std::fs::read_to_string(path).map_err(|e| io_error(path, e))?;
            let base = path.parent().unwrap_or(Path::new("."));
            match key {
                Some(k) => SanitizerConfig::from_toml_with_key(&text, base, k),
                None => SanitizerConfig::from_toml(&text, base),
            }
            .map_err(config_error)?
        }
        (None, Some(k)) => SanitizerConfig::with_key(k),
        (None, None) if require_key => return Err(CliError::Usage("--config or --key is required".into())),
        (None, None) => SanitizerConfig::with_key(keygen(DEFAULT_SECURITY_BITS).map_err(key_error)?),
    };
    match keys.epsilon {
        Some(eps) => config.with_epsilon(eps).map_err(config_error),
        None => Ok(config),
    }
}

pub(crate) fn read_input(path: Option<&Path>, stdin: &mut dyn Read) -> Result<String, CliError> {
    match path {
        Some(p) => std::fs::read_to_string(p).map_err(|e| io_error(p, e)),
        None => {
            let mut s = String::new();
            stdin.read_to_string(&mut s).map_err(|e| CliError::Runtime(format!("stdin: {e}")))?;
            Ok(s)
        }
    }
}

pub(crate) fn write_output(path: Option<&Path>, text: &str, stdout: &mut dyn Write) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| io_error(p, e)),
        None => stdout.write_all(text.as_bytes()).map_err(|e| CliError::Runtime(format!("stdout: {e}"))),
    }
}

fn relative_key_path(key: &Path, config: &Path) -> PathBuf {
    let parent = |p: &Path| p.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new(".")).to_owned();
    if parent(key) == parent(config) {
        key.file_name().map(PathBuf::from).unwrap_or_else(|| key.to_owned())
    } else {
        std::path::absolute(key).unwrap_or_else(|_| key.to_owned())
    }
}

fn register(
    key_path: &Path,
    config_path: &Path,
    bits: u32,
    epsilon: Option<f64>,
    force: bool,
    stdout: &mut dyn Write,
) -> Result<(), CliError> {
    for p in [key_path, config_path] {
        if p.exists() && !force {
            return Err(CliError::Validation(format!("{} exists; pass --force to overwrite", p.display())));
        }
    }
    let key = keygen(bits).map_err(key_error)?;
    let key_ref = relative_key_path(key_path, config_path);
    let mut text = SanitizerConfig::default_toml(&key_ref, bits);
    if let Some(eps) = epsilon {
        let base = config_path.parent().unwrap_or(Path::new("."));
        text = SanitizerConfig::from_toml_with_key(&text, base, key.clone())
            .and_then(|c| c.with_epsilon(eps))
            .map_err(config_error)?
            .to_toml();
    }
    if force && key_path.exists() {
        std::fs::remove_file(key_path).map_err(|e| io_error(key_path, e))?;
    }
    key.write_file(key_path).map_err(key_error)?;
    std::fs::write(config_path, text).map_err(|e| io_error(config_path, e))?;
    writeln!(stdout, "key {} written to {}", key.key_id(), key_path.display())
        .and_then(|_| writeln!(stdout, "config written to {}", config_path.display()))
        .map_err(|e| CliError::Runtime(e.to_string()))
}

#[allow(clippy::too_many_arguments)]
fn sanitize(
    input: Option<&Path>,
    keys: &KeyArgs,
    psi: Option<&Path>,
    seed: Option<u64>,
    out: Option<&Path>,
    report: Option<&Path>,
    io: &mut Io<'_>,
) -> Result<(), CliError> {
    let config = load_config(keys, true)?;
    let psi = psi
        .map(|p| -> Result<HelperString, CliError> {
            let text = std::fs::read_to_string(p).map_err(|e| io_error(p, e))?;
            HelperString::from_json(&text).map_err(|e| CliError::Validation(format!("{}: {e}", p.display())))
        })
        .transpose()?;
    let prompt = read_input(input, io.stdin)?;
    let sanitizer = Sanitizer::with_builtin_patterns(config);
    let rng = match seed {
        Some(s) => ChaCha20Rng::seed_from_u64(s),
        None => ChaCha20Rng::from_entropy(),
    };
    let result =
        sanitizer.sanitize_text(&prompt, psi.as_ref(), &mut MechanismNoise(rng)).map_err(sanitize_error)?;
    write_output(out, &result.text, io.stdout)?;
    match report {
        Some(p) => std::fs::write(p, result.report_jsonl()).map_err(|e| io_error(p, e)),
        None => io.stderr.write_all(result.report_jsonl().as_bytes()).map_err(|e| CliError::Runtime(e.to_string())),
    }
}

fn desanitize(
    input: Option<&Path>,
    keys: &KeyArgs,
    original: Option<&Path>,
    out: Option<&Path>,
    report: Option<&Path>,
    io: &mut Io<'_>,
) -> Result<(), CliError> {
    let config = load_config(keys, true)?;
    let original = original.map(|p| std::fs::read_to_string(p).map_err(|e| io_error(p, e))).transpose()?;
    let response = read_input(input, io.stdin)?;
    let sanitizer = Sanitizer::with_builtin_patterns(config);
    if original.is_none() {
        log::warn!("no original prompt given; decrypted tokens are not checked against what was sent");
    }
    let restored = sanitizer.desanitize(&response, original.as_deref()).map_err(sanitize_error)?;
    write_output(out, &restored.text, io.stdout)?;
    if let Some(p) = report {
        let lines: String = restored
            .tokens
            .iter()
            .map(|t| serde_json::to_string(t).expect("token serializes") + "\n")
            .collect();
        std::fs::write(p, lines).map_err(|e| io_error(p, e))?;
    }
    Ok(())
}

fn formats(config: Option<&Path>, stdout: &mut dyn Write) -> Result<(), CliError> {
    let keys = KeyArgs { config: config.map(Path::to_owned), key: None, epsilon: None };
    let config = match config {
        Some(_) => load_config(&keys, true)?,
        None => SanitizerConfig::with_key(SanitizerKey::from_bytes(&[0; 32]).map_err(key_error)?),
    };
    let names: std::sync::Arc<NameIndex> = config.names().clone();
    let mut text = String::from("formats:\n");
    for name in BUILTIN_FORMATS {
        let spec = builtin(name, &names).expect("built-in format");
        let size = spec.fixed_size().map_or_else(|| "variable".to_owned(), |s| s.to_string());
        text += &format!("  {name:<14} size {size:<22} pattern {}\n", spec.pattern().as_str());
    }
    text += "types:\n";
    for (ty, treatment) in config.registry() {
        let how = match treatment {
            Treatment::Encrypt { format, .. } => format!("encrypt  {}", format.name()),
            Treatment::Perturb { domain } => {
                format!("perturb  {}..={} step {}", domain.lo(), domain.hi(), domain.step())
            }
        };
        text += &format!("  {:<14} {:<3} {how}\n", ty.label(), treatment.category());
    }
    stdout.write_all(text.as_bytes()).map_err(|e| CliError::Runtime(e.to_string()))
}

pub(crate) struct Io<'a> {
    pub stdin: &'a mut dyn Read,
    pub stdout: &'a mut dyn Write,
    pub stderr: &'a mut dyn Write,
}

fn dispatch(cli: Cli, io: &mut Io<'_>) -> Result<(), CliError> {
    match cli.command {
        Command::Register { key, config, security_bits, epsilon, force } => {
            register(&key, &config, security_bits, epsilon, force, io.stdout)
        }
        Command::Sanitize { input, keys, psi, seed, out, report } => {
            sanitize(input.as_deref(), &keys, psi.as_deref(), seed, out.as_deref(), report.as_deref(), io)
        }
        Command::Desanitize { input, keys, original, out, report } => {
            desanitize(input.as_deref(), &keys, original.as_deref(), out.as_deref(), report.as_deref(), io)
        }
        Command::Game { pair, keys, trials, seed, adversary, lambda, out } => {
            harness_cmds::game(&pair, &keys, trials, seed, adversary, lambda, out.as_deref(), io.stdout)
        }
        Command::Eval { corpus, keys, oracle, metric, seed, endpoint, model, out } => harness_cmds::eval(
            &corpus,
            &keys,
            &oracle,
            metric,
            seed,
            endpoint.as_deref(),
            model.as_deref(),
            out.as_deref(),
            io.stdout,
        ),
        Command::Formats { config } => formats(config.as_deref(), io.stdout),
    }
}

/// Runs one command and returns its exit code.
pub fn run<I, T>(args: I, stdin: &mut dyn Read, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let informational = matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion);
            let sink: &mut dyn Write = if informational { stdout } else { stderr };
            let _ = write!(sink, "{}", e.render());
            return if informational { 0 } else { 1 };
        }
    };
    let mut io = Io { stdin, stdout, stderr };
    match dispatch(cli, &mut io) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(io.stderr, "psan: {e}");
            e.exit_code()
        }
    }
}

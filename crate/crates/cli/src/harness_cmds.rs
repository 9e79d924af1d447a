//! `game` and `eval` subcommands.

use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use clap::ValueEnum;
use psan_core::pipeline::Sanitizer;
use psan_core::SensitiveType;
use psan_harness::eval::{read_corpus, run_eval, CorpusError, Metric};
use psan_harness::game::{apply_ner_leakage, trial_rng, GameError, GamePair};
use psan_harness::{play_pair, Adversary, FirstByte, LikelihoodRatio, LlmOracle, MockOracle, MockTask, Oracle};
use psan_llm::{ChatRequest, LlmClient};
use rust_decimal::Decimal;

use crate::{io_error, load_config, sanitize_error, write_output, CliError, KeyArgs};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum AdversaryKind {
    LikelihoodRatio,
    FirstByte,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum MetricKind {
    Exact,
    Relative,
    Consistency,
    Comparison,
}

fn game_error(e: GameError) -> CliError {
    match e {
        GameError::Sanitize(s) => sanitize_error(s),
        other => CliError::Validation(other.to_string()),
    }
}

/// Splits a pair file at its first line consisting of `---`.
pub fn split_pair(text: &str) -> Option<(String, String)> {
    let mut first = Vec::new();
    let mut lines = text.lines();
    for line in lines.by_ref() {
        if line.trim_end() == "---" {
            let second: Vec<&str> = lines.collect();
            return Some((first.join("\n"), second.join("\n")));
        }
        first.push(line);
    }
    None
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn game(
    pair_path: &Path,
    keys: &KeyArgs,
    trials: u64,
    seed: u64,
    adversary: AdversaryKind,
    lambda: Option<f64>,
    out: Option<&Path>,
    stdout: &mut dyn Write,
) -> Result<(), CliError> {
    let text = std::fs::read_to_string(pair_path).map_err(|e| io_error(pair_path, e))?;
    let (p0, mut p1) = split_pair(&text)
        .ok_or_else(|| CliError::Validation(format!("{}: no `---` separator line", pair_path.display())))?;
    let sanitizer = Sanitizer::with_builtin_patterns(load_config(keys, false)?);
    let mut copied = None;
    if let Some(l) = lambda {
        let leak = apply_ner_leakage(&p0, &p1, l, &sanitizer, &mut trial_rng(seed, u64::MAX)).map_err(game_error)?;
        p1 = leak.prompt;
        copied = Some(leak.copied);
    }
    let pair = GamePair::new(&p0, &p1, &sanitizer).map_err(game_error)?;
    let adv: Box<dyn Adversary> = match adversary {
        AdversaryKind::LikelihoodRatio => Box::new(LikelihoodRatio::new(&pair).map_err(game_error)?),
        AdversaryKind::FirstByte => Box::new(FirstByte::new(&pair)),
    };
    let result = play_pair(&pair, trials, seed, adv.as_ref()).map_err(game_error)?;
    let report = serde_json::json!({
        "result": result,
        "differing_tokens": pair.differing_tokens(),
        "leaked_tokens": copied,
        "epsilon_total": sanitizer.config().epsilon_total(),
    });
    writeln!(stdout, "{}", serde_json::to_string_pretty(&report).expect("report serializes"))
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    if let Some(p) = out {
        let opt = |v: Option<f64>| v.map_or_else(String::new, |v| v.to_string());
        let csv = format!(
            "adversary,trials,wins,empirical_advantage,sigma,exact_tv_bound,advantage_bound\n{},{},{},{},{},{},{}\n",
            result.adversary,
            result.trials,
            result.wins,
            result.empirical_advantage,
            result.sigma,
            opt(result.exact_tv_bound),
            opt(result.advantage_bound)
        );
        std::fs::write(p, csv).map_err(|e| io_error(p, e))?;
    }
    Ok(())
}

fn parse_oracle(
    spec: &str,
    sanitizer: &Sanitizer,
    endpoint: Option<&str>,
    model: Option<&str>,
) -> Result<(Box<dyn Oracle>, Metric), CliError> {
    let (kind, arg) = spec.split_once(':').unwrap_or((spec, ""));
    let mock = |task| MockOracle::new(task, sanitizer.recognizers().clone());
    Ok(match kind {
        "retrieve" => {
            let ty = SensitiveType::from_str(arg).map_err(|_| CliError::Usage(format!("unknown type {arg:?}")))?;
            (Box::new(mock(MockTask::RetrieveField(ty.clone()))), Metric::ExactField(ty))
        }
        "linear" => {
            let coefficients = arg
                .split(',')
                .map(|c| Decimal::from_str(c.trim()).map_err(|_| CliError::Usage(format!("bad coefficient {c:?}"))))
                .collect::<Result<Vec<_>, _>>()?;
            (Box::new(mock(MockTask::LinearFormula(coefficients))), Metric::Consistency)
        }
        "compare" => (Box::new(mock(MockTask::CompareTwoValues)), Metric::Comparison),
        "llm" => {
            let (Some(endpoint), Some(model)) = (endpoint, model) else {
                return Err(CliError::Usage("--oracle llm needs --endpoint and --model".into()));
            };
            (Box::new(LlmOracle::new(LlmClient::new(), ChatRequest::new(endpoint, model))), Metric::RelativeError)
        }
        _ => return Err(CliError::Usage(format!("unknown oracle {spec:?}"))),
    })
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn eval(
    corpus_path: &Path,
    keys: &KeyArgs,
    oracle: &str,
    metric: Option<MetricKind>,
    seed: u64,
    endpoint: Option<&str>,
    model: Option<&str>,
    out: Option<&Path>,
    stdout: &mut dyn Write,
) -> Result<(), CliError> {
    let corpus = read_corpus(corpus_path).map_err(|e| match e {
        CorpusError::Io(io) => io_error(corpus_path, io),
        other => CliError::Validation(other.to_string()),
    })?;
    let sanitizer = Sanitizer::with_builtin_patterns(load_config(keys, false)?);
    let (oracle, default_metric) = parse_oracle(oracle, &sanitizer, endpoint, model)?;
    let metric = match metric {
        None => default_metric,
        Some(MetricKind::Exact) => match default_metric {
            Metric::ExactField(ty) => Metric::ExactField(ty),
            _ => return Err(CliError::Usage("--metric exact needs --oracle retrieve:<TYPE>".into())),
        },
        Some(MetricKind::Relative) => Metric::RelativeError,
        Some(MetricKind::Consistency) => Metric::Consistency,
        Some(MetricKind::Comparison) => Metric::Comparison,
    };
    let report = run_eval(&corpus, &sanitizer, oracle.as_ref(), metric, seed);
    let text = serde_json::to_string_pretty(&report).expect("report serializes") + "\n";
    write_output(out, &text, stdout)
}

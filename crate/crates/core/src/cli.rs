//! The `axp` command line: argument parsing, file formats, run manifests and
//! exit codes.
//!
//! Every command builds its whole output in memory before writing anything,
//! so a failing run leaves no partial files behind.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::attack::{generate_dataset, run_experiment, AttackConfig};
use crate::axioms::{self, aggregator_by_name, Aggregator};
use crate::enumerate::{enumerate_with, EnumerateOptions};
use crate::error::{Error, Result};
use crate::indices::{normalize, scores_csv, IndexKind, Normalization, ScoreVector};
use crate::json::to_canonical_pretty;
use crate::model::{Classifier, ModelFile};
use crate::random::RandomConfig;
use crate::space::InstanceFile;
use crate::sufficiency::{OracleMode, Problem, DEFAULT_ORACLE_CAP};
use crate::verify::{crosscheck, fuzz};

pub const EXIT_OK: u8 = 0;
/// Bad arguments or an unreadable file.
pub const EXIT_USAGE: u8 = 1;
pub const EXIT_VALIDATION: u8 = 2;
pub const EXIT_ORACLE_CAP: u8 = 3;
pub const EXIT_TRUNCATED: u8 = 4;
/// The structural and exhaustive procedures disagreed.
pub const EXIT_MISMATCH: u8 = 5;

pub const ORACLE_CAP_ENV: &str = "AXP_ORACLE_CAP";

pub fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Io { .. } => EXIT_USAGE,
        Error::Parse { .. } | Error::Validation(_) | Error::Contract(_) => EXIT_VALIDATION,
        Error::OracleTooLarge { .. } => EXIT_ORACLE_CAP,
        Error::OracleMismatch(_) => EXIT_MISMATCH,
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "axp",
    version,
    about = "Abductive explanations and the indices built on them"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Debug, PartialEq, Subcommand, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "lowercase")]
pub enum Command {
    /// Enumerate the AXps and CXps of one prediction and score the features.
    Explain(ExplainArgs),
    /// Check every axiom against a set of aggregators on all small families.
    Axioms(AxiomsArgs),
    /// Run the rank-frequency experiment on a gated attack model.
    Attack(AttackArgs),
    /// Cross-check the fast oracles against exhaustive ones.
    Verify(VerifyArgs),
    /// Re-run the command recorded in a manifest.
    #[serde(skip)]
    Replay(ReplayArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IndexSelection {
    #[value(alias = "holler-packel")]
    Hp,
    #[value(alias = "deegan-packel")]
    Dp,
    #[value(alias = "responsibility")]
    Resp,
    All,
}

impl IndexSelection {
    pub fn kinds(self) -> Vec<IndexKind> {
        match self {
            IndexSelection::Hp => vec![IndexKind::HollerPackel],
            IndexSelection::Dp => vec![IndexKind::DeeganPackel],
            IndexSelection::Resp => vec![IndexKind::Responsibility],
            IndexSelection::All => IndexKind::ALL.to_vec(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
    Text,
}

#[derive(Clone, Debug, PartialEq, Args, Serialize, Deserialize)]
pub struct ExplainArgs {
    /// Model file: `{"features": [...], "model": {...}}`.
    #[arg(long)]
    pub model: PathBuf,
    /// Instance file: `{"values": [...]}` in feature order.
    #[arg(long)]
    pub instance: PathBuf,
    #[arg(long, value_enum, default_value = "all")]
    pub index: IndexSelection,
    #[arg(long, default_value = "raw")]
    pub normalize: Normalization,
    #[arg(long, default_value = "structural")]
    pub oracle: OracleMode,
    /// Stop after this many explanations (AXps plus CXps).
    #[arg(long)]
    pub limit: Option<usize>,
    /// json (default) or csv.
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Args, Serialize, Deserialize)]
pub struct AxiomsArgs {
    /// Aggregators to check (repeatable): hp, dp, resp or a control such as
    /// constant-one. Defaults to the three indices.
    #[arg(long = "aggregator")]
    pub aggregators: Vec<String>,
    /// Feature count of the family universe.
    #[arg(long, default_value_t = axioms::DEFAULT_UNIVERSE_N)]
    pub universe_n: usize,
    /// text (default), json or csv.
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Args, Serialize, Deserialize)]
pub struct AttackArgs {
    /// Attack config JSON (features, models, dataset).
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long, value_enum, default_value = "all")]
    pub index: IndexSelection,
    /// Overrides the dataset seed in the config.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub limit: Option<usize>,
    /// csv (default) or json.
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Args, Serialize, Deserialize)]
pub struct VerifyArgs {
    #[arg(long, required_unless_present = "fuzz")]
    pub model: Option<PathBuf>,
    #[arg(long, required_unless_present = "fuzz")]
    pub instance: Option<PathBuf>,
    /// Check random models instead of a given one.
    #[arg(long, conflicts_with_all = ["model", "instance"])]
    pub fuzz: bool,
    #[arg(long, default_value_t = 100)]
    pub trials: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// text (default) or json.
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Args, Serialize, Deserialize)]
pub struct ReplayArgs {
    pub manifest: PathBuf,
    /// Write here instead of the recorded output path.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Everything needed to reproduce one run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    #[serde(flatten)]
    pub command: Command,
    /// Completion cap of the exhaustive oracles.
    pub oracle_cap: u64,
}

impl RunManifest {
    pub fn new(command: Command, oracle_cap: u64) -> Self {
        RunManifest {
            tool: format!("axp {}", env!("CARGO_PKG_VERSION")),
            command,
            oracle_cap,
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        read_json(path)
    }

    fn out(&self) -> Option<&Path> {
        match &self.command {
            Command::Explain(a) => a.out.as_deref(),
            Command::Axioms(a) => a.out.as_deref(),
            Command::Attack(a) => a.out.as_deref(),
            Command::Verify(a) => a.out.as_deref(),
            Command::Replay(a) => a.out.as_deref(),
        }
    }

    fn set_out(&mut self, out: PathBuf) {
        let slot = match &mut self.command {
            Command::Explain(a) => &mut a.out,
            Command::Axioms(a) => &mut a.out,
            Command::Attack(a) => &mut a.out,
            Command::Verify(a) => &mut a.out,
            Command::Replay(a) => &mut a.out,
        };
        *slot = Some(out);
    }
}

/// The result of a command before anything is written.
#[derive(Clone, Debug)]
pub struct Output {
    pub body: String,
    pub manifest: RunManifest,
    pub code: u8,
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|source| Error::Parse {
        path: path.display().to_string(),
        source,
    })
}

/// The cap from `AXP_ORACLE_CAP`, or the default.
pub fn oracle_cap_from_env() -> Result<u64> {
    match std::env::var(ORACLE_CAP_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| Error::validation(format!("{ORACLE_CAP_ENV}: '{v}' is not a non-negative integer"))),
        Err(_) => Ok(DEFAULT_ORACLE_CAP as u64),
    }
}

fn load_classifier(model: &Path, instance: &Path) -> Result<(Classifier, crate::space::Instance)> {
    let mf: ModelFile = read_json(model)?;
    let inst: InstanceFile = read_json(instance)?;
    let x = mf.features.instance(&inst.values)?;
    Ok((Classifier::new(mf.features, mf.model)?, x))
}

fn names_of(clf: &Classifier) -> Vec<String> {
    clf.space().names().into_iter().map(String::from).collect()
}

fn explain(a: &ExplainArgs, cap: u64) -> Result<(String, u8)> {
    let (clf, x) = load_classifier(&a.model, &a.instance)?;
    let names = names_of(&clf);
    let values: serde_json::Map<String, serde_json::Value> = names
        .iter()
        .zip(clf.space().values(&x))
        .map(|(n, v)| (n.clone(), serde_json::to_value(v).expect("values serialize")))
        .collect();
    let problem = Problem::new(&clf, x)?.with_cap(cap as u128).with_mode(a.oracle);
    let (es, stats) = enumerate_with(
        &problem,
        EnumerateOptions {
            limit: a.limit,
            ..Default::default()
        },
    )?;
    let kinds = a.index.kinds();
    let vectors: Vec<ScoreVector> = if es.complete {
        kinds
            .iter()
            .map(|k| Ok(normalize(&k.score(&es)?, a.normalize)))
            .collect::<Result<_>>()?
    } else {
        Vec::new()
    };
    let code = if es.complete { EXIT_OK } else { EXIT_TRUNCATED };
    let body = match a.format.unwrap_or(Format::Json) {
        Format::Csv => scores_csv(&names, &vectors),
        Format::Text => return Err(Error::validation("explain supports --format json or csv")),
        Format::Json => {
            let named =
                |s: &crate::subset::FeatureSubset| -> Vec<&str> { s.iter().map(|i| names[i].as_str()).collect() };
            let per_kind = |f: &dyn Fn(&ScoreVector) -> serde_json::Value| -> serde_json::Value {
                vectors
                    .iter()
                    .map(|v| (v.index.short_name().to_string(), f(v)))
                    .collect::<serde_json::Map<_, _>>()
                    .into()
            };
            let json = serde_json::json!({
                "manifest": RunManifest::new(Command::Explain(a.clone()), cap),
                "features": names,
                "instance": values,
                "prediction": u8::from(problem.prediction()),
                "complete": es.complete,
                "axps": es.axps.iter().map(named).collect::<Vec<_>>(),
                "cxps": es.cxps.iter().map(named).collect::<Vec<_>>(),
                "normalization": a.normalize.name(),
                "scores": per_kind(&|v| v.to_json(&names)),
                "exact_scores": per_kind(&|v| v.to_exact_json(&names)),
                "ranks": per_kind(&|v| v.rank().to_json(&names)),
                "stats": stats,
            });
            to_canonical_pretty(&json)
        }
    };
    Ok((body, code))
}

fn axioms_cmd(a: &AxiomsArgs, cap: u64) -> Result<String> {
    if a.universe_n > axioms::MAX_UNIVERSE_N {
        return Err(Error::validation(format!(
            "--universe-n {} exceeds the maximum of {}",
            a.universe_n,
            axioms::MAX_UNIVERSE_N
        )));
    }
    let names: Vec<String> = if a.aggregators.is_empty() {
        IndexKind::ALL.iter().map(|k| k.short_name().to_string()).collect()
    } else {
        a.aggregators.clone()
    };
    let owned: Vec<Box<dyn Aggregator>> = names
        .iter()
        .map(|n| {
            aggregator_by_name(n).ok_or_else(|| Error::validation(format!("--aggregator: unknown aggregator '{n}'")))
        })
        .collect::<Result<_>>()?;
    let aggs: Vec<&dyn Aggregator> = owned.iter().map(|b| b.as_ref()).collect();
    let m = axioms::matrix(&aggs, a.universe_n)?;
    let transcript = axioms::demonstrate_impossibility();
    Ok(match a.format.unwrap_or(Format::Text) {
        Format::Text => {
            let mut out = format!(
                "{} families over {} features\n\n{}",
                m.families,
                m.universe_n,
                m.render()
            );
            for r in m.rows.iter().flat_map(|r| &r.reports).filter(|r| !r.satisfied()) {
                out.push_str(&format!(
                    "\n{r}\n    counterexample: {}\n",
                    serde_json::to_string(&r.counterexample).expect("serializes")
                ));
            }
            out.push_str("\nimpossibility:\n");
            out.push_str(&transcript.to_string());
            out
        }
        Format::Csv => {
            let mut out = String::from("aggregator,axiom,verdict,cases\n");
            for r in m.rows.iter().flat_map(|r| &r.reports) {
                let verdict = if r.satisfied() { "pass" } else { "fail" };
                out.push_str(&format!("{},{},{verdict},{}\n", r.aggregator, r.axiom, r.cases));
            }
            out
        }
        Format::Json => to_canonical_pretty(&serde_json::json!({
            "manifest": RunManifest::new(Command::Axioms(a.clone()), cap),
            "matrix": m,
            "impossibility": transcript,
        })),
    })
}

fn attack_cmd(a: &AttackArgs, cap: u64) -> Result<(String, u8)> {
    let mut cfg = AttackConfig::load(&a.config)?;
    if let Some(seed) = a.seed {
        cfg.dataset.seed = seed;
    }
    let (spec, composite) = cfg.build()?;
    let data = generate_dataset(&cfg.dataset, &cfg.features, &spec.ood_gate)?;
    let table = run_experiment(&spec, &composite, &data.points, &a.index.kinds(), a.limit)?;
    let code = if table.truncated > 0 { EXIT_TRUNCATED } else { EXIT_OK };
    let body = match a.format.unwrap_or(Format::Csv) {
        Format::Csv => table.to_csv(),
        Format::Text => return Err(Error::validation("attack supports --format csv or json")),
        Format::Json => to_canonical_pretty(&serde_json::json!({
            "manifest": RunManifest::new(Command::Attack(a.clone()), cap),
            "dataset": {
                "seed": cfg.dataset.seed,
                "samples": data.points.len(),
                "in_distribution_fraction": data.in_distribution_fraction(),
            },
            "table": table.to_json(),
        })),
    };
    Ok((body, code))
}

fn verify_cmd(a: &VerifyArgs, cap: u64) -> Result<(String, u8)> {
    let format = a.format.unwrap_or(Format::Text);
    if format == Format::Csv {
        return Err(Error::validation("verify supports --format text or json"));
    }
    let manifest = RunManifest::new(Command::Verify(a.clone()), cap);
    if a.fuzz {
        let r = fuzz(a.seed, a.trials, 10, &RandomConfig::default())?;
        let verdict = if r.agrees() { "agree" } else { "disagree" };
        let body = match format {
            Format::Json => to_canonical_pretty(&serde_json::json!({
                "manifest": manifest, "fuzz": r, "verdict": verdict,
            })),
            _ => format!(
                "fuzz seed {} trials {}: {} subsets, {} sufficiency mismatches, {} enumeration mismatches, {} duality failures\n{verdict}\n",
                r.seed, r.trials, r.subsets_checked, r.sufficiency_mismatches, r.enumeration_mismatches, r.duality_failures
            ),
        };
        return Ok((body, if r.agrees() { EXIT_OK } else { EXIT_MISMATCH }));
    }
    let (model, instance) = (a.model.as_ref().expect("clap"), a.instance.as_ref().expect("clap"));
    let (clf, x) = load_classifier(model, instance)?;
    let c = crosscheck(&clf, x, cap as u128)?;
    let word = |ok: bool| if ok { "agree" } else { "disagree" };
    let body = match format {
        Format::Json => to_canonical_pretty(&serde_json::json!({
            "manifest": manifest,
            "subsets": c.subsets,
            "sufficiency": word(c.sufficiency_mismatches.is_empty()),
            "sufficiency_mismatches": c.sufficiency_mismatches,
            "explanations": word(c.marco == c.lattice),
            "duality": word(c.duality),
            "marco": c.marco,
            "lattice": c.lattice,
            "verdict": word(c.agrees()),
        })),
        _ => format!(
            "sufficiency on {} subsets: {}\nexplanations ({} AXps, {} CXps): {}\nduality: {}\n{}\n",
            c.subsets,
            word(c.sufficiency_mismatches.is_empty()),
            c.marco.axps.len(),
            c.marco.cxps.len(),
            word(c.marco == c.lattice),
            word(c.duality),
            word(c.agrees())
        ),
    };
    Ok((body, if c.agrees() { EXIT_OK } else { EXIT_MISMATCH }))
}

/// Executes `command` with an explicit oracle cap.
pub fn execute(command: &Command, cap: u64) -> Result<Output> {
    if let Command::Replay(r) = command {
        let mut m = RunManifest::load(&r.manifest)?;
        if matches!(m.command, Command::Replay(_)) {
            return Err(Error::validation("manifest: cannot replay a replay"));
        }
        if let Some(out) = &r.out {
            m.set_out(out.clone());
        }
        return execute(&m.command, m.oracle_cap);
    }
    let (body, code) = match command {
        Command::Explain(a) => explain(a, cap)?,
        Command::Axioms(a) => (axioms_cmd(a, cap)?, EXIT_OK),
        Command::Attack(a) => attack_cmd(a, cap)?,
        Command::Verify(a) => verify_cmd(a, cap)?,
        Command::Replay(_) => unreachable!(),
    };
    Ok(Output {
        body,
        manifest: RunManifest::new(command.clone(), cap),
        code,
    })
}

/// `<out>.manifest.json`.
pub fn manifest_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

/// Writes the body to `--out` (plus its manifest) or to stdout.
pub fn emit(output: &Output, stdout: &mut dyn Write) -> Result<()> {
    let io = |path: &Path| {
        let path = path.display().to_string();
        move |source| Error::Io { path, source }
    };
    let mut body = output.body.clone();
    if !body.ends_with('\n') {
        body.push('\n');
    }
    match output.manifest.out() {
        Some(out) => {
            std::fs::write(out, &body).map_err(io(out))?;
            let mp = manifest_path(out);
            std::fs::write(&mp, to_canonical_pretty(&output.manifest) + "\n").map_err(io(&mp))?;
        }
        None => stdout.write_all(body.as_bytes()).map_err(io(Path::new("<stdout>")))?,
    }
    Ok(())
}

/// Parses arguments, runs, writes and returns the process exit code.
pub fn main_with_args<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                stderr.write_all(text.as_bytes())
            } else {
                stdout.write_all(text.as_bytes())
            };
            return code;
        }
    };
    let result = oracle_cap_from_env()
        .and_then(|cap| execute(&cli.command, cap))
        .and_then(|out| emit(&out, stdout).map(|()| out.code));
    match result {
        Ok(code) => {
            if code == EXIT_TRUNCATED {
                let _ = writeln!(stderr, "warning: enumeration truncated by --limit");
            }
            code
        }
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            exit_code(&e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_round_trips() {
        let cli = Cli::try_parse_from([
            "axp",
            "explain",
            "--model",
            "m.json",
            "--instance",
            "x.json",
            "--index",
            "responsibility",
            "--limit",
            "3",
        ])
        .unwrap();
        let m = RunManifest::new(cli.command, 99);
        let text = to_canonical_pretty(&m);
        assert!(text.contains("\"command\": \"explain\""), "{text}");
        assert!(text.contains("\"index\": \"resp\""), "{text}");
        let back: RunManifest = serde_json::from_str(&text).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn usage_errors_exit_one() {
        let (mut o, mut e) = (Vec::new(), Vec::new());
        assert_eq!(
            main_with_args(["axp", "explain", "--bogus"], &mut o, &mut e),
            EXIT_USAGE
        );
        assert_eq!(main_with_args(["axp", "--help"], &mut o, &mut e), EXIT_OK);
    }

    #[test]
    fn manifest_path_appends_suffix() {
        assert_eq!(
            manifest_path(Path::new("a/out.csv")),
            PathBuf::from("a/out.csv.manifest.json")
        );
    }
}

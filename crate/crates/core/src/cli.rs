//! Command-line front end.
//!
//! Exit codes: 0 success, 1 parse or validation error, 2 usage error,
//! 3 no eligible deployment.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::assessor::{rank, AssessOptions, Assignment, PartialDeployment, RankBy, RankedAssessment};
use crate::dsl::parse_program;
use crate::explain::{export_dot, proofs_json};
use crate::model::{build_kb, lint_vocabulary, KnowledgeBase};
use crate::semiring::{SemiringId, SemiringValue};
use crate::trust::{trust_formula_into, TrustMode, TrustOptions, DEFAULT_MAX_PATHS};
use crate::{AtomTable, Error, GroundFormula};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NO_DEPLOYMENT: i32 = 3;

/// Environment variable overriding the trust path cap.
pub const MAX_PATHS_ENV: &str = "SECASSESS_MAX_PATHS";

#[derive(Debug, Parser)]
#[command(
    name = "secassess",
    version,
    about = "Security assessment of Cloud-Edge application deployments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Rank the eligible deployments of an application.
    Assess(AssessArgs),
    /// Trust degree between two operators.
    Trust(TrustArgs),
    /// Ground graph or proof listing for one deployment or trust pair.
    Explain(ExplainArgs),
    /// Validate files and report capability names outside the known vocabulary.
    Lint(LintArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Table,
    Json,
    Dot,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum RankArg {
    Value,
    Confidence,
}

#[derive(Debug, Args)]
struct Common {
    /// Knowledge base files, merged in order.
    #[arg(required = true)]
    files: Vec<PathBuf>,
    /// prob, tc-max, tc-min or star.
    #[arg(long, default_value = "prob")]
    semiring: SemiringId,
    /// transitive, direct or radius:D.
    #[arg(long, default_value = "transitive")]
    trust_mode: TrustMode,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct AssessArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    app: String,
    #[arg(long)]
    operator: String,
    /// JSON file pinning some services to nodes.
    #[arg(long)]
    partial: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "table")]
    format: Format,
    #[arg(long, value_enum, default_value = "confidence")]
    rank_by: RankArg,
}

#[derive(Debug, Args)]
struct TrustArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    from: String,
    #[arg(long)]
    to: String,
    #[arg(long, value_enum, default_value = "table")]
    format: Format,
}

#[derive(Debug, Args)]
struct ExplainArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, requires = "operator", conflicts_with_all = ["from", "to"])]
    app: Option<String>,
    #[arg(long, requires = "app")]
    operator: Option<String>,
    #[arg(long, requires = "app")]
    partial: Option<PathBuf>,
    #[arg(long, requires = "to")]
    from: Option<String>,
    #[arg(long, requires = "from")]
    to: Option<String>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

#[derive(Debug, Args)]
struct LintArgs {
    #[arg(required = true)]
    files: Vec<PathBuf>,
    #[arg(long, default_value = "prob")]
    semiring: SemiringId,
}

/// Failure of a subcommand, mapped to an exit code.
#[derive(Debug)]
enum Failure {
    Usage(String),
    Invalid(String),
    NoDeployment(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::UnknownApp(_) | Error::InconsistentPartial(_) | Error::UnknownOperator(_) => {
                Failure::Usage(e.to_string())
            }
            other => Failure::Invalid(other.to_string()),
        }
    }
}

/// Runs the CLI with `args` (including the program name).
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() {
                let _ = write!(stderr, "{}", e.render());
                EXIT_USAGE
            } else {
                let _ = write!(stdout, "{}", e.render());
                EXIT_OK
            };
            return code;
        }
    };
    let result = match &cli.command {
        Command::Assess(a) => cmd_assess(a, stdout, stderr),
        Command::Trust(a) => cmd_trust(a, stdout),
        Command::Explain(a) => cmd_explain(a, stdout),
        Command::Lint(a) => cmd_lint(a, stdout),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(Failure::Usage(m)) => {
            let _ = writeln!(stderr, "error: {m}");
            EXIT_USAGE
        }
        Err(Failure::Invalid(m)) => {
            let _ = writeln!(stderr, "error: {m}");
            EXIT_INVALID
        }
        Err(Failure::NoDeployment(m)) => {
            let _ = writeln!(stderr, "{m}");
            EXIT_NO_DEPLOYMENT
        }
    }
}

fn trust_options() -> Result<TrustOptions, Failure> {
    match std::env::var(MAX_PATHS_ENV) {
        Err(_) => Ok(TrustOptions {
            max_paths: DEFAULT_MAX_PATHS,
        }),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(TrustOptions { max_paths: n }),
            _ => Err(Failure::Usage(format!(
                "{MAX_PATHS_ENV} must be a positive integer, got `{v}`"
            ))),
        },
    }
}

fn load(files: &[PathBuf], semiring: SemiringId) -> Result<KnowledgeBase, Failure> {
    let mut programs = Vec::with_capacity(files.len());
    for path in files {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))?;
        let name = path.display().to_string();
        let program =
            parse_program(&text).map_err(|e| Failure::Invalid(e.with_source_name(name.clone()).to_string()))?;
        programs.push(program.with_source_name(name));
    }
    build_kb(&programs, semiring).map_err(|e| Failure::Invalid(e.to_string()))
}

fn emit(out: Option<&Path>, stdout: &mut dyn Write, text: &str) -> Result<(), Failure> {
    match out {
        Some(path) => {
            std::fs::write(path, text).map_err(|e| Failure::Usage(format!("cannot write {}: {e}", path.display())))
        }
        None => stdout
            .write_all(text.as_bytes())
            .map_err(|e| Failure::Usage(format!("cannot write output: {e}"))),
    }
}

#[derive(Debug, Deserialize)]
struct PartialAssignment {
    service: String,
    node: String,
    #[serde(default)]
    operator: Option<String>,
}

#[derive(Debug, Deserialize)]
struct PartialDoc {
    assignments: Vec<PartialAssignment>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum PartialInput {
    Single(PartialDoc),
    Report { deployments: Vec<PartialDoc> },
}

/// Reads a partial deployment: either `{"assignments": [...]}` or a full
/// assessment report, of which the first deployment is used.
fn read_partial(path: &Path, kb: &KnowledgeBase) -> Result<PartialDeployment, Failure> {
    let text =
        std::fs::read_to_string(path).map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))?;
    let doc: PartialInput = serde_json::from_str(&text)
        .map_err(|e| Failure::Usage(format!("{}: not a deployment document: {e}", path.display())))?;
    let doc = match doc {
        PartialInput::Single(d) => d,
        PartialInput::Report { mut deployments } => {
            if deployments.is_empty() {
                return Err(Failure::Usage(format!(
                    "{}: report lists no deployment",
                    path.display()
                )));
            }
            deployments.swap_remove(0)
        }
    };
    let mut partial = PartialDeployment::new();
    for a in doc.assignments {
        if let (Some(op), Some(owner)) = (&a.operator, kb.node_operator(&a.node)) {
            if op != owner {
                return Err(Failure::Usage(format!(
                    "inconsistent partial deployment: node `{}` is managed by `{owner}`, not `{op}`",
                    a.node
                )));
            }
        }
        if partial.assignments.insert(a.service.clone(), a.node).is_some() {
            return Err(Failure::Usage(format!(
                "inconsistent partial deployment: service `{}` assigned twice",
                a.service
            )));
        }
    }
    Ok(partial)
}

fn options(common: &Common, semiring: SemiringId, rank_by: RankBy) -> Result<AssessOptions, Failure> {
    Ok(AssessOptions {
        semiring,
        trust_mode: common.trust_mode,
        rank_by,
        trust: trust_options()?,
    })
}

#[derive(Serialize)]
struct Components {
    trust: f64,
    confidence: f64,
}

#[derive(Serialize)]
struct DeploymentRow<'a> {
    id: String,
    assignments: &'a [Assignment],
    level: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    level_components: Option<Components>,
}

#[derive(Serialize)]
struct Report<'a> {
    app: &'a str,
    operator: &'a str,
    semiring: &'static str,
    deployments: Vec<DeploymentRow<'a>>,
}

fn components(v: &SemiringValue) -> Option<Components> {
    v.confidence().map(|confidence| Components {
        trust: v.value(),
        confidence,
    })
}

fn table(header: &[String], rows: &[Vec<String>]) -> String {
    let width = |s: &String| s.chars().count();
    let mut widths: Vec<usize> = header.iter().map(width).collect();
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(width(cell));
        }
    }
    let line = |cells: &[String]| {
        let last = cells.len() - 1;
        let mut s = String::new();
        for (i, (cell, w)) in cells.iter().zip(&widths).enumerate() {
            s.push_str(cell);
            if i < last {
                s.push_str(&" ".repeat(w - width(cell) + 2));
            }
        }
        s.push('\n');
        s
    };
    let mut out = line(header);
    for row in rows {
        out.push_str(&line(row));
    }
    out
}

fn assess_report(args: &AssessArgs, kb: &KnowledgeBase, ranked: &[RankedAssessment], semiring: SemiringId) -> String {
    match args.format {
        Format::Json => {
            let report = Report {
                app: &args.app,
                operator: &args.operator,
                semiring: semiring.name(),
                deployments: ranked
                    .iter()
                    .map(|r| DeploymentRow {
                        id: format!("Δ{}", r.id),
                        assignments: &r.assessment.deployment.assignments,
                        level: r.assessment.level.value(),
                        level_components: components(&r.assessment.level),
                    })
                    .collect(),
            };
            serde_json::to_string_pretty(&report).expect("report serializes") + "\n"
        }
        _ => {
            let mut header = vec!["Dep. ID".to_string()];
            header.extend(kb.services(&args.app).unwrap_or_default().iter().cloned());
            header.push("Security".into());
            let rows: Vec<Vec<String>> = ranked
                .iter()
                .map(|r| {
                    let mut row = vec![format!("Δ{}", r.id)];
                    row.extend(r.assessment.deployment.assignments.iter().map(|a| a.node.clone()));
                    row.push(r.assessment.level.to_string());
                    row
                })
                .collect();
            table(&header, &rows)
        }
    }
}

fn cmd_assess(args: &AssessArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<(), Failure> {
    if args.format == Format::Dot {
        return Err(Failure::Usage(
            "assess supports --format table or json; use explain for dot".into(),
        ));
    }
    let semiring = args.common.semiring;
    let kb = load(&args.common.files, semiring)?;
    let partial = args.partial.as_deref().map(|p| read_partial(p, &kb)).transpose()?;
    let rank_by = match args.rank_by {
        RankArg::Value => RankBy::Value,
        RankArg::Confidence => RankBy::Confidence,
    };
    let opts = options(&args.common, semiring, rank_by)?;
    let ranked = rank(&kb, &args.app, &args.operator, partial.as_ref(), &opts)?;
    emit(
        args.common.out.as_deref(),
        stdout,
        &assess_report(args, &kb, &ranked, semiring),
    )?;
    if ranked.is_empty() {
        let _ = stderr.flush();
        return Err(Failure::NoDeployment(format!(
            "no eligible deployment of `{}` for `{}`",
            args.app, args.operator
        )));
    }
    Ok(())
}

fn trust_ground(
    kb: &KnowledgeBase,
    from: &str,
    to: &str,
    mode: TrustMode,
    opts: TrustOptions,
) -> Result<GroundFormula, Failure> {
    let mut table = AtomTable::default();
    let root = trust_formula_into(kb, from, to, mode, &mut table, opts)?;
    Ok(GroundFormula::new(root, table))
}

fn cmd_trust(args: &TrustArgs, stdout: &mut dyn Write) -> Result<(), Failure> {
    if args.format == Format::Dot {
        return Err(Failure::Usage(
            "trust supports --format table or json; use explain for dot".into(),
        ));
    }
    let semiring = args.common.semiring;
    let kb = load(&args.common.files, semiring)?;
    let f = trust_ground(&kb, &args.from, &args.to, args.common.trust_mode, trust_options()?)?;
    let value = crate::assessor::evaluate(&f, semiring)?;
    let text = match args.format {
        Format::Json => {
            let mut doc = json!({
                "from": args.from,
                "to": args.to,
                "semiring": semiring.name(),
                "trust_mode": args.common.trust_mode.to_string(),
                "value": value.value(),
            });
            if let Some(c) = components(&value) {
                doc["value_components"] = json!({"trust": c.trust, "confidence": c.confidence});
            }
            serde_json::to_string_pretty(&doc).expect("report serializes") + "\n"
        }
        _ => format!("trusts2({},{}): {value}\n", args.from, args.to),
    };
    emit(args.common.out.as_deref(), stdout, &text)
}

fn cmd_explain(args: &ExplainArgs, stdout: &mut dyn Write) -> Result<(), Failure> {
    if args.format == Format::Table {
        return Err(Failure::Usage("explain supports --format json or dot".into()));
    }
    let semiring = args.common.semiring;
    let (app, operator, from, to) = (&args.app, &args.operator, &args.from, &args.to);
    if app.is_none() && from.is_none() {
        return Err(Failure::Usage(
            "explain needs a deployment (--app, --operator, --partial) or a trust pair (--from, --to)".into(),
        ));
    }
    let kb = load(&args.common.files, semiring)?;
    let opts = options(&args.common, semiring, RankBy::default())?;
    let (query, formula) = match (app, operator, from, to) {
        (Some(app), Some(operator), _, _) => {
            let partial = args.partial.as_deref().map(|p| read_partial(p, &kb)).transpose()?;
            let deployments = crate::assessor::enumerate_deployments(&kb, app, operator, partial.as_ref(), &opts)?;
            let d = match deployments.as_slice() {
                [] => {
                    return Err(Failure::NoDeployment(format!(
                        "no eligible deployment of `{app}` for `{operator}`"
                    )))
                }
                [d] => d,
                more => {
                    return Err(Failure::Usage(format!(
                        "{} deployments match; pin services with --partial to select one",
                        more.len()
                    )))
                }
            };
            let nodes: Vec<&str> = d.nodes();
            let query = format!("{app}@[{}]", nodes.join(","));
            (query, crate::assessor::deployment_formula(&kb, d, &opts)?)
        }
        (_, _, Some(from), Some(to)) => (
            format!("trusts2({from},{to})"),
            trust_ground(&kb, from, to, args.common.trust_mode, opts.trust)?,
        ),
        _ => unreachable!("clap enforces paired flags"),
    };
    let text = match args.format {
        Format::Dot => export_dot(&formula, Some(&query)),
        _ => proofs_json(&formula, &query, semiring)?,
    };
    emit(args.common.out.as_deref(), stdout, &text)
}

fn cmd_lint(args: &LintArgs, stdout: &mut dyn Write) -> Result<(), Failure> {
    let kb = load(&args.files, args.semiring)?;
    let mut text = String::new();
    for w in lint_vocabulary(&kb) {
        text.push_str(&w.to_string());
        text.push('\n');
    }
    emit(None, stdout, &text)
}

//! Offline front-end over the planning engine.
//!
//! Exit codes: 0 success, 1 validation findings, 2 usage or availability
//! error, 3 I/O error.

use std::collections::BTreeSet;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use chrono::{DateTime, Utc};
use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};

use paramsus::catalog::parse_catalog_text;
use paramsus::dataset::{parse_dataset_text, DatasetIndex};
use paramsus::export::{delta_csv, delta_json, report_csv, report_json};
use paramsus::fixtures::reference_catalog;
use paramsus::{build_report, compare_reports, DatasetFormat, ParameterCatalog, Report, Scope, Section, Tier};

#[derive(Parser)]
#[command(name = "paramsus", version, about = "Parametric health-resource planning reports")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute a report for one scope and year.
    Report(ReportArgs),
    /// Check a dataset or catalog file and list every problem.
    Validate(ValidateArgs),
    /// Compare the same scope across two years.
    Compare(CompareArgs),
}

#[derive(Args)]
struct Inputs {
    /// Demographic dataset (wide or long CSV).
    #[arg(long)]
    dataset: PathBuf,
    /// Dataset layout; detected from the header when omitted.
    #[arg(long, value_enum)]
    dataset_format: Option<LayoutArg>,
    /// Parameter catalog CSV; the bundled reference catalog when omitted.
    #[arg(long)]
    catalog: Option<PathBuf>,
    /// `municipality:<code>` or `region:<code>`.
    #[arg(long)]
    scope: Scope,
    /// Sections to compute, comma separated (e.g. `V,VI`); all when omitted.
    #[arg(long, value_delimiter = ',')]
    sections: Vec<Section>,
    #[arg(long, value_enum, default_value_t = OutputFormat::Csv)]
    format: OutputFormat,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Timestamp recorded in JSON output (RFC 3339); now when omitted.
    #[arg(long)]
    generated_at: Option<DateTime<Utc>>,
}

#[derive(Args)]
struct ReportArgs {
    #[command(flatten)]
    inputs: Inputs,
    #[arg(long)]
    year: u16,
}

#[derive(Args)]
struct CompareArgs {
    #[command(flatten)]
    inputs: Inputs,
    #[arg(long)]
    year_a: u16,
    #[arg(long)]
    year_b: u16,
}

#[derive(Args)]
#[command(group(ArgGroup::new("input").required(true).multiple(false).args(["dataset", "catalog"])))]
struct ValidateArgs {
    #[arg(long)]
    dataset: Option<PathBuf>,
    #[arg(long)]
    catalog: Option<PathBuf>,
    /// Dataset layout; detected from the header when omitted.
    #[arg(long, value_enum, requires = "dataset")]
    dataset_format: Option<LayoutArg>,
}

#[derive(Clone, Copy, ValueEnum)]
enum LayoutArg {
    Wide,
    Long,
}

impl From<LayoutArg> for DatasetFormat {
    fn from(l: LayoutArg) -> Self {
        match l {
            LayoutArg::Wide => DatasetFormat::Wide,
            LayoutArg::Long => DatasetFormat::Long,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum OutputFormat {
    Csv,
    Json,
}

enum Failure {
    Findings { path: PathBuf, findings: Vec<String> },
    Usage(String),
    Io(String),
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Findings { .. } => 1,
            Failure::Usage(_) => 2,
            Failure::Io(_) => 3,
        }
    }

    fn report(&self) {
        match self {
            Failure::Findings { path, findings } => {
                for f in findings {
                    eprintln!("{}: {f}", path.display());
                }
                eprintln!("{}: {} errors", path.display(), findings.len());
            }
            Failure::Usage(msg) => eprintln!("error: {msg}"),
            Failure::Io(msg) => eprintln!("error: {msg}"),
        }
    }
}

type CliResult<T> = Result<T, Failure>;

fn read(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| Failure::Io(format!("cannot read {}: {e}", path.display())))
}

fn load_index(path: &Path, format: Option<LayoutArg>) -> CliResult<(usize, DatasetIndex)> {
    let text = read(path)?;
    let findings = |findings: Vec<String>| Failure::Findings { path: path.to_path_buf(), findings };
    let records = parse_dataset_text(&text, format.map(Into::into))
        .map_err(|e| findings(e.findings().iter().map(ToString::to_string).collect()))?;
    let index = DatasetIndex::build(&records).map_err(|e| findings(vec![e.to_string()]))?;
    Ok((records.len(), index))
}

fn load_catalog(path: Option<&Path>) -> CliResult<ParameterCatalog> {
    let Some(path) = path else { return Ok(reference_catalog()) };
    parse_catalog_text(&read(path)?).map_err(|e| Failure::Findings {
        path: path.to_path_buf(),
        findings: e.findings().iter().map(ToString::to_string).collect(),
    })
}

fn emit(out: Option<&Path>, bytes: &[u8]) -> CliResult<()> {
    match out {
        Some(path) => fs::write(path, bytes).map_err(|e| Failure::Io(format!("cannot write {}: {e}", path.display()))),
        None => {
            let mut stdout = io::stdout().lock();
            stdout.write_all(bytes).and_then(|_| stdout.flush()).map_err(|e| Failure::Io(format!("cannot write output: {e}")))
        }
    }
}

fn build(inputs: &Inputs, index: &DatasetIndex, catalog: &ParameterCatalog, year: u16) -> CliResult<Report> {
    let demo = index.resolve_scope(inputs.scope, year).map_err(|e| Failure::Usage(e.to_string()))?;
    let sections: BTreeSet<Section> =
        if inputs.sections.is_empty() { Section::ALL.into_iter().collect() } else { inputs.sections.iter().copied().collect() };
    let at = inputs.generated_at.unwrap_or_else(Utc::now);
    build_report(catalog, &demo, &sections, Tier::Premium, at).map_err(|e| Failure::Usage(e.to_string()))
}

fn cmd_report(args: &ReportArgs) -> CliResult<()> {
    let inputs = &args.inputs;
    let (_, index) = load_index(&inputs.dataset, inputs.dataset_format)?;
    let catalog = load_catalog(inputs.catalog.as_deref())?;
    let report = build(inputs, &index, &catalog, args.year)?;
    let bytes = match inputs.format {
        OutputFormat::Csv => report_csv(&report),
        OutputFormat::Json => report_json(&report),
    };
    emit(inputs.out.as_deref(), &bytes)
}

fn cmd_compare(args: &CompareArgs) -> CliResult<()> {
    let inputs = &args.inputs;
    let (_, index) = load_index(&inputs.dataset, inputs.dataset_format)?;
    let catalog = load_catalog(inputs.catalog.as_deref())?;
    let a = build(inputs, &index, &catalog, args.year_a)?;
    let b = build(inputs, &index, &catalog, args.year_b)?;
    let delta = compare_reports(&a, &b).map_err(|e| Failure::Usage(e.to_string()))?;
    let bytes = match inputs.format {
        OutputFormat::Csv => delta_csv(&delta),
        OutputFormat::Json => delta_json(&delta),
    };
    emit(inputs.out.as_deref(), &bytes)
}

fn cmd_validate(args: &ValidateArgs) -> CliResult<()> {
    if let Some(path) = &args.dataset {
        let (records, _) = load_index(path, args.dataset_format)?;
        println!("{}: {records} records, 0 errors", path.display());
    }
    if let Some(path) = &args.catalog {
        let catalog = load_catalog(Some(path))?;
        println!("{}: {} entries, 0 errors (version {})", path.display(), catalog.entries().len(), catalog.version);
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Report(args) => cmd_report(args),
        Command::Validate(args) => cmd_validate(args),
        Command::Compare(args) => cmd_compare(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            failure.report();
            ExitCode::from(failure.exit_code())
        }
    }
}

//! The parameter catalog: ordinance line items as data.
//!
//! A catalog file is a comma-delimited UTF-8 table with the header
//! `section,code,name,base_kind,base_arg,rate,unit_price_cents,output_kind`.
//! Optional `# version: ...` and `# source: ...` lines may precede the
//! header. Without a version line the catalog version is derived from a
//! SHA-256 digest of the file contents, so two different files never share
//! a version by accident.

use std::collections::HashMap;
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::amount::ExactAmount;

pub const CATALOG_HEADER: [&str; 8] = [
    "section",
    "code",
    "name",
    "base_kind",
    "base_arg",
    "rate",
    "unit_price_cents",
    "output_kind",
];

/// Maximum number of fractional digits a rate may carry.
pub const RATE_MAX_FRACTION_DIGITS: u32 = 6;

/// Ordinance section tag, `I` through `VIII`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Section {
    I,
    II,
    III,
    IV,
    V,
    VI,
    VII,
    VIII,
}

impl Section {
    pub const ALL: [Section; 8] = [
        Section::I,
        Section::II,
        Section::III,
        Section::IV,
        Section::V,
        Section::VI,
        Section::VII,
        Section::VIII,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Section::I => "I",
            Section::II => "II",
            Section::III => "III",
            Section::IV => "IV",
            Section::V => "V",
            Section::VI => "VI",
            Section::VII => "VII",
            Section::VIII => "VIII",
        }
    }
}

impl fmt::Display for Section {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown section tag {0:?}")]
pub struct UnknownSection(pub String);

impl FromStr for Section {
    type Err = UnknownSection;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Section::ALL
            .into_iter()
            .find(|section| section.as_str() == s)
            .ok_or_else(|| UnknownSection(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum BaseKind {
    Population,
    LiveBirths,
    PopulationFraction,
    LiveBirthsFactor,
}

impl BaseKind {
    pub fn as_str(self) -> &'static str {
        match self {
            BaseKind::Population => "POPULATION",
            BaseKind::LiveBirths => "LIVE_BIRTHS",
            BaseKind::PopulationFraction => "POPULATION_FRACTION",
            BaseKind::LiveBirthsFactor => "LIVE_BIRTHS_FACTOR",
        }
    }

    fn takes_arg(self) -> bool {
        matches!(self, BaseKind::PopulationFraction | BaseKind::LiveBirthsFactor)
    }
}

impl fmt::Display for BaseKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BaseKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        [
            BaseKind::Population,
            BaseKind::LiveBirths,
            BaseKind::PopulationFraction,
            BaseKind::LiveBirthsFactor,
        ]
        .into_iter()
        .find(|k| k.as_str() == s)
        .ok_or_else(|| format!("unknown base kind {s:?}"))
    }
}

/// Which demographic quantity an entry scales.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BaseSpec {
    pub kind: BaseKind,
    pub arg: Option<ExactAmount>,
}

impl BaseSpec {
    pub fn population() -> Self {
        BaseSpec { kind: BaseKind::Population, arg: None }
    }

    pub fn live_births() -> Self {
        BaseSpec { kind: BaseKind::LiveBirths, arg: None }
    }

    pub fn population_fraction(fraction: ExactAmount) -> Self {
        BaseSpec { kind: BaseKind::PopulationFraction, arg: Some(fraction) }
    }

    pub fn live_births_factor(factor: ExactAmount) -> Self {
        BaseSpec { kind: BaseKind::LiveBirthsFactor, arg: Some(factor) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum OutputKind {
    ReferencePopulation,
    Count,
    PricedService,
}

impl OutputKind {
    pub fn as_str(self) -> &'static str {
        match self {
            OutputKind::ReferencePopulation => "REFERENCE_POPULATION",
            OutputKind::Count => "COUNT",
            OutputKind::PricedService => "PRICED_SERVICE",
        }
    }
}

impl fmt::Display for OutputKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for OutputKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        [OutputKind::ReferencePopulation, OutputKind::Count, OutputKind::PricedService]
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| format!("unknown output kind {s:?}"))
    }
}

/// True when `code` matches the SUS procedure code shape `NN.NN.NN.NNN-N`.
pub fn is_procedure_code(code: &str) -> bool {
    const SHAPE: &[u8] = b"NN.NN.NN.NNN-N";
    code.len() == SHAPE.len()
        && code.bytes().zip(SHAPE).all(|(c, &s)| match s {
            b'N' => c.is_ascii_digit(),
            other => c == other,
        })
}

/// One ordinance line item.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParameterEntry {
    pub section: Section,
    /// SUS procedure code, or empty for rows that are not procedures.
    pub code: String,
    pub name: String,
    pub base: BaseSpec,
    pub rate: ExactAmount,
    pub unit_price_cents: Option<u64>,
    pub output_kind: OutputKind,
}

impl ParameterEntry {
    pub fn key(&self) -> EntryKey {
        EntryKey { section: self.section, code: self.code.clone(), name: self.name.clone() }
    }
}

/// The `(section, code, name)` identity of an entry.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EntryKey {
    pub section: Section,
    pub code: String,
    pub name: String,
}

impl fmt::Display for EntryKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {:?}, {:?})", self.section, self.code, self.name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Violation {
    #[error("name must not be empty")]
    EmptyName,
    #[error("code {0:?} does not match NN.NN.NN.NNN-N")]
    InvalidCode(String),
    #[error("rate must be ≥ 0")]
    NegativeRate,
    #[error("rate carries more than {RATE_MAX_FRACTION_DIGITS} fractional digits")]
    RatePrecision,
    #[error("REFERENCE_POPULATION entries must have rate 1")]
    ReferenceRateNotOne,
    #[error("price required")]
    PriceRequired,
    #[error("price not allowed for {0} entries")]
    PriceNotAllowed(OutputKind),
    #[error("{0} base requires an argument")]
    MissingBaseArg(BaseKind),
    #[error("{0} base takes no argument")]
    UnexpectedBaseArg(BaseKind),
    #[error("POPULATION_FRACTION argument must satisfy 0 < arg ≤ 1")]
    FractionOutOfRange,
    #[error("LIVE_BIRTHS_FACTOR argument must be > 0")]
    FactorNotPositive,
}

/// Returns every invariant the entry violates; an empty list means valid.
pub fn validate_entry(entry: &ParameterEntry) -> Vec<Violation> {
    let mut violations = Vec::new();
    if entry.name.trim().is_empty() {
        violations.push(Violation::EmptyName);
    }
    if !entry.code.is_empty() && !is_procedure_code(&entry.code) {
        violations.push(Violation::InvalidCode(entry.code.clone()));
    }
    if entry.rate.is_negative() {
        violations.push(Violation::NegativeRate);
    }
    match entry.rate.fraction_digits() {
        Some(d) if d <= RATE_MAX_FRACTION_DIGITS => {}
        _ => violations.push(Violation::RatePrecision),
    }
    match entry.output_kind {
        OutputKind::PricedService => {
            if entry.unit_price_cents.is_none() {
                violations.push(Violation::PriceRequired);
            }
        }
        kind => {
            if entry.unit_price_cents.is_some() {
                violations.push(Violation::PriceNotAllowed(kind));
            }
        }
    }
    if entry.output_kind == OutputKind::ReferencePopulation && entry.rate != 1u64 {
        violations.push(Violation::ReferenceRateNotOne);
    }
    let kind = entry.base.kind;
    match (&entry.base.arg, kind.takes_arg()) {
        (None, true) => violations.push(Violation::MissingBaseArg(kind)),
        (Some(_), false) => violations.push(Violation::UnexpectedBaseArg(kind)),
        (Some(arg), true) => {
            let ok = match kind {
                BaseKind::PopulationFraction => !arg.is_negative() && !arg.is_zero() && *arg <= 1u64,
                _ => !arg.is_negative() && !arg.is_zero(),
            };
            if !ok {
                violations.push(match kind {
                    BaseKind::PopulationFraction => Violation::FractionOutOfRange,
                    _ => Violation::FactorNotPositive,
                });
            }
        }
        (None, false) => {}
    }
    violations
}

/// An immutable, ordered set of parameter entries.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParameterCatalog {
    pub version: String,
    pub source_note: String,
    entries: Vec<ParameterEntry>,
}

impl ParameterCatalog {
    /// Builds a catalog from already-constructed entries, enforcing the same
    /// rules as the file loader.
    pub fn new(
        version: impl Into<String>,
        source_note: impl Into<String>,
        entries: Vec<ParameterEntry>,
    ) -> Result<Self, CatalogError> {
        let mut findings = Vec::new();
        let mut seen: HashMap<EntryKey, u64> = HashMap::new();
        for (idx, entry) in entries.iter().enumerate() {
            let position = idx as u64 + 1;
            for violation in validate_entry(entry) {
                findings.push(CatalogFinding { line: position, problem: CatalogProblem::Violation(violation) });
            }
            if let Some(first) = seen.insert(entry.key(), position) {
                findings.push(CatalogFinding {
                    line: position,
                    problem: CatalogProblem::Duplicate { key: entry.key(), first_line: first },
                });
            }
        }
        if !findings.is_empty() {
            return Err(CatalogError::Invalid(findings));
        }
        Ok(ParameterCatalog { version: version.into(), source_note: source_note.into(), entries })
    }

    pub fn entries(&self) -> &[ParameterEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Finds the entry carrying a procedure code. Rows without a code are
    /// not addressable this way.
    pub fn lookup(&self, code: &str) -> Option<&ParameterEntry> {
        if !is_procedure_code(code) {
            return None;
        }
        self.entries.iter().find(|e| e.code == code)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CatalogProblem {
    Header(String),
    Malformed(String),
    UnknownSection(String),
    Duplicate { key: EntryKey, first_line: u64 },
    Violation(Violation),
}

/// A problem located at a physical line of the catalog file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CatalogFinding {
    pub line: u64,
    pub problem: CatalogProblem,
}

impl fmt::Display for CatalogFinding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: ", self.line)?;
        match &self.problem {
            CatalogProblem::Header(msg) => write!(f, "bad header: {msg}"),
            CatalogProblem::Malformed(msg) => write!(f, "malformed row: {msg}"),
            CatalogProblem::UnknownSection(tag) => write!(f, "unknown section tag {tag:?}"),
            CatalogProblem::Duplicate { key, first_line } => {
                write!(f, "duplicate entry {key}, first defined at line {first_line}")
            }
            CatalogProblem::Violation(v) => write!(f, "{v}"),
        }
    }
}

#[derive(Debug, Error)]
pub enum CatalogError {
    #[error("cannot read catalog: {0}")]
    Io(#[from] std::io::Error),
    #[error("catalog has {} problem(s); first: {}", .0.len(), .0[0])]
    Invalid(Vec<CatalogFinding>),
}

impl CatalogError {
    pub fn findings(&self) -> &[CatalogFinding] {
        match self {
            CatalogError::Invalid(f) => f,
            CatalogError::Io(_) => &[],
        }
    }
}

fn parse_optional<T: FromStr>(field: &str) -> Result<Option<T>, T::Err> {
    if field.is_empty() {
        Ok(None)
    } else {
        field.parse().map(Some)
    }
}

/// Parses and validates a catalog table, preserving row order.
///
/// All problems in the file are collected before returning.
pub fn load_catalog<R: Read>(mut input: R) -> Result<ParameterCatalog, CatalogError> {
    let mut text = String::new();
    input.read_to_string(&mut text)?;
    parse_catalog_text(&text)
}

pub fn parse_catalog_text(text: &str) -> Result<ParameterCatalog, CatalogError> {
    let mut version = None;
    let mut source_note = String::new();
    let mut consumed = 0usize;
    let mut preamble_lines = 0u64;
    for line in text.split_inclusive('\n') {
        let trimmed = line.trim_end_matches(['\n', '\r']);
        let Some(comment) = trimmed.strip_prefix('#') else { break };
        if let Some((key, value)) = comment.split_once(':') {
            match key.trim() {
                "version" => version = Some(value.trim().to_string()),
                "source" => source_note = value.trim().to_string(),
                _ => {}
            }
        }
        consumed += line.len();
        preamble_lines += 1;
    }
    let version = version.unwrap_or_else(|| {
        let digest = Sha256::digest(text.as_bytes());
        let hex: String = digest.iter().take(6).map(|b| format!("{b:02x}")).collect();
        format!("sha256:{hex}")
    });

    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(&text.as_bytes()[consumed..]);
    let mut findings = Vec::new();
    let mut entries = Vec::new();
    let mut seen: HashMap<EntryKey, u64> = HashMap::new();
    let mut saw_header = false;

    for record in reader.records() {
        let record = match record {
            Ok(r) => r,
            Err(err) => {
                let line = err.position().map_or(0, |p| p.line()) + preamble_lines;
                findings.push(CatalogFinding { line, problem: CatalogProblem::Malformed(err.to_string()) });
                continue;
            }
        };
        let line = record.position().map_or(0, |p| p.line()) + preamble_lines;
        if !saw_header {
            saw_header = true;
            let got: Vec<&str> = record.iter().collect();
            if got != CATALOG_HEADER {
                findings.push(CatalogFinding {
                    line,
                    problem: CatalogProblem::Header(format!("expected {:?}, found {:?}", CATALOG_HEADER.join(","), got.join(","))),
                });
                break;
            }
            continue;
        }
        if record.len() != CATALOG_HEADER.len() {
            findings.push(CatalogFinding {
                line,
                problem: CatalogProblem::Malformed(format!("expected {} fields, found {}", CATALOG_HEADER.len(), record.len())),
            });
            continue;
        }
        match parse_row(&record) {
            Ok(entry) => {
                let violations = validate_entry(&entry);
                let valid = violations.is_empty();
                findings.extend(violations.into_iter().map(|v| CatalogFinding { line, problem: CatalogProblem::Violation(v) }));
                if let Some(first_line) = seen.get(&entry.key()) {
                    findings.push(CatalogFinding {
                        line,
                        problem: CatalogProblem::Duplicate { key: entry.key(), first_line: *first_line },
                    });
                } else {
                    seen.insert(entry.key(), line);
                }
                if valid {
                    entries.push(entry);
                }
            }
            Err(problem) => findings.push(CatalogFinding { line, problem }),
        }
    }
    if !saw_header && findings.is_empty() {
        findings.push(CatalogFinding { line: preamble_lines + 1, problem: CatalogProblem::Header("missing header row".into()) });
    }
    if !findings.is_empty() {
        return Err(CatalogError::Invalid(findings));
    }
    Ok(ParameterCatalog { version, source_note, entries })
}

fn parse_row(record: &csv::StringRecord) -> Result<ParameterEntry, CatalogProblem> {
    let field = |i: usize| record.get(i).unwrap_or("");
    let section: Section = field(0).parse().map_err(|e: UnknownSection| CatalogProblem::UnknownSection(e.0))?;
    let malformed = |what: &str, value: &str| CatalogProblem::Malformed(format!("{what}: cannot parse {value:?}"));
    let kind: BaseKind = field(3).parse().map_err(|_| malformed("base_kind", field(3)))?;
    let arg = parse_optional::<ExactAmount>(field(4)).map_err(|_| malformed("base_arg", field(4)))?;
    let rate: ExactAmount = field(5).parse().map_err(|_| malformed("rate", field(5)))?;
    let unit_price_cents = parse_optional::<u64>(field(6)).map_err(|_| malformed("unit_price_cents", field(6)))?;
    let output_kind: OutputKind = field(7).parse().map_err(|_| malformed("output_kind", field(7)))?;
    Ok(ParameterEntry {
        section,
        code: field(1).to_string(),
        name: field(2).to_string(),
        base: BaseSpec { kind, arg },
        rate,
        unit_price_cents,
        output_kind,
    })
}

/// Writes a catalog in the file format `load_catalog` reads. Rates are
/// rendered with six fractional digits, base arguments in shortest form.
pub fn write_catalog<W: Write>(catalog: &ParameterCatalog, mut out: W) -> std::io::Result<()> {
    writeln!(out, "# version: {}", catalog.version)?;
    if !catalog.source_note.is_empty() {
        writeln!(out, "# source: {}", catalog.source_note)?;
    }
    let mut writer = csv::Writer::from_writer(out);
    writer.write_record(CATALOG_HEADER)?;
    for entry in catalog.entries() {
        let arg = entry.base.arg.as_ref().map(|a| a.to_string()).unwrap_or_default();
        let price = entry.unit_price_cents.map(|p| p.to_string()).unwrap_or_default();
        writer.write_record([
            entry.section.as_str(),
            &entry.code,
            &entry.name,
            entry.base.kind.as_str(),
            &arg,
            &entry.rate.render_fixed(RATE_MAX_FRACTION_DIGITS),
            &price,
            entry.output_kind.as_str(),
        ])?;
    }
    writer.flush()
}

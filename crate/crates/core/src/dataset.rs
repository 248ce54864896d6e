//! Demographic datasets: parsing, validation, indexing and scope resolution.
//!
//! Two file layouts are understood:
//!
//! * **wide**: a two-row header. Row 1 is blank over the first six static
//!   columns, then `ano` over the seventh, then one year per two columns.
//!   Row 2 names the seven static columns followed by repeated
//!   `populacao`, `sinasc (nv)` pairs. A blank pair means "no data".
//! * **long**: one record per row under
//!   `cod_estado,sigla_estado,estado,cod_municipio,municipio,cod_regiao,regiao,ano,populacao,sinasc`.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::io::Read;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const STATIC_COLUMNS: [&str; 7] = [
    "cod_estado",
    "sigla_estado",
    "estado",
    "cod_municipio",
    "municipio",
    "cod_regiao",
    "regiao",
];

pub const LONG_HEADER: [&str; 10] = [
    "cod_estado",
    "sigla_estado",
    "estado",
    "cod_municipio",
    "municipio",
    "cod_regiao",
    "regiao",
    "ano",
    "populacao",
    "sinasc",
];

const WIDE_YEAR_LABEL: &str = "ano";
const WIDE_POPULATION_LABEL: &str = "populacao";
const WIDE_BIRTHS_LABEL: &str = "sinasc (nv)";

/// Population and live births of one municipality in one year.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DemographicRecord {
    pub state_code: u8,
    pub state_abbrev: String,
    pub state_name: String,
    pub municipality_code: u32,
    pub municipality_name: String,
    pub region_code: u32,
    pub region_name: String,
    pub year: u16,
    pub population: u64,
    pub live_births: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DatasetFormat {
    Wide,
    Long,
}

impl FromStr for DatasetFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "wide" => Ok(DatasetFormat::Wide),
            "long" => Ok(DatasetFormat::Long),
            other => Err(format!("unknown dataset format {other:?} (expected wide or long)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DatasetProblem {
    Header(String),
    Malformed(String),
    InvalidField { column: String, value: String, reason: String },
    IncompletePair { year: u16 },
    BirthsExceedPopulation { births: u64, population: u64 },
    DuplicateRecord { municipality: u32, year: u16, first_line: u64 },
    RegionConflict { municipality: u32, region: u32, other_region: u32, other_line: u64 },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetFinding {
    pub line: u64,
    pub problem: DatasetProblem,
}

impl fmt::Display for DatasetFinding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: ", self.line)?;
        match &self.problem {
            DatasetProblem::Header(msg) => write!(f, "bad header: {msg}"),
            DatasetProblem::Malformed(msg) => write!(f, "malformed row: {msg}"),
            DatasetProblem::InvalidField { column, value, reason } => {
                write!(f, "invalid {column} {value:?}: {reason}")
            }
            DatasetProblem::IncompletePair { year } => {
                write!(f, "year {year} has only one of population and live births")
            }
            DatasetProblem::BirthsExceedPopulation { births, population } => {
                write!(f, "live births {births} exceed population {population}")
            }
            DatasetProblem::DuplicateRecord { municipality, year, first_line } => write!(
                f,
                "duplicate record for municipality {municipality} year {year}, first at line {first_line}"
            ),
            DatasetProblem::RegionConflict { municipality, region, other_region, other_line } => write!(
                f,
                "municipality {municipality} assigned to region {region} but to region {other_region} at line {other_line}"
            ),
        }
    }
}

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("cannot read dataset: {0}")]
    Io(#[from] std::io::Error),
    #[error("dataset has {} problem(s); first: {}", .0.len(), .0[0])]
    Invalid(Vec<DatasetFinding>),
}

impl DatasetError {
    pub fn findings(&self) -> &[DatasetFinding] {
        match self {
            DatasetError::Invalid(f) => f,
            DatasetError::Io(_) => &[],
        }
    }
}

fn normalize_label(label: &str) -> String {
    label.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn parse_digits<T: FromStr>(column: &str, value: &str, lengths: &[usize]) -> Result<T, DatasetProblem> {
    let invalid = |reason: String| DatasetProblem::InvalidField {
        column: column.to_string(),
        value: value.to_string(),
        reason,
    };
    if value.is_empty() || !value.bytes().all(|b| b.is_ascii_digit()) {
        return Err(invalid("expected a non-negative integer".into()));
    }
    if !lengths.is_empty() && !lengths.contains(&value.len()) {
        let allowed: Vec<String> = lengths.iter().map(|l| l.to_string()).collect();
        return Err(invalid(format!("expected {} digits", allowed.join(" or "))));
    }
    value.parse().map_err(|_| invalid("value out of range".into()))
}

fn parse_year(value: &str) -> Result<u16, DatasetProblem> {
    parse_digits("ano", value, &[4])
}

struct StaticFields {
    state_code: u8,
    state_abbrev: String,
    state_name: String,
    municipality_code: u32,
    municipality_name: String,
    region_code: u32,
    region_name: String,
}

fn parse_static(record: &csv::StringRecord) -> Result<StaticFields, DatasetProblem> {
    let field = |i: usize| record.get(i).unwrap_or("");
    let abbrev = field(1);
    if abbrev.len() != 2 || !abbrev.bytes().all(|b| b.is_ascii_alphabetic()) {
        return Err(DatasetProblem::InvalidField {
            column: "sigla_estado".into(),
            value: abbrev.into(),
            reason: "expected two letters".into(),
        });
    }
    for (idx, column) in [(2, "estado"), (4, "municipio"), (6, "regiao")] {
        if field(idx).trim().is_empty() {
            return Err(DatasetProblem::InvalidField {
                column: column.into(),
                value: field(idx).into(),
                reason: "must not be empty".into(),
            });
        }
    }
    Ok(StaticFields {
        state_code: parse_digits("cod_estado", field(0), &[2])?,
        state_abbrev: abbrev.to_string(),
        state_name: field(2).to_string(),
        municipality_code: parse_digits("cod_municipio", field(3), &[6, 7])?,
        municipality_name: field(4).to_string(),
        region_code: parse_digits("cod_regiao", field(5), &[])?,
        region_name: field(6).to_string(),
    })
}

fn make_record(fields: &StaticFields, year: u16, population: u64, live_births: u64) -> DemographicRecord {
    DemographicRecord {
        state_code: fields.state_code,
        state_abbrev: fields.state_abbrev.clone(),
        state_name: fields.state_name.clone(),
        municipality_code: fields.municipality_code,
        municipality_name: fields.municipality_name.clone(),
        region_code: fields.region_code,
        region_name: fields.region_name.clone(),
        year,
        population,
        live_births,
    }
}

fn csv_reader(text: &str) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(text.as_bytes())
}

fn line_of(record: &csv::StringRecord) -> u64 {
    record.position().map_or(0, |p| p.line())
}

/// Cross-record invariants: unique `(municipality, year)`, one region per
/// municipality, births not above population.
pub fn check_records(records: &[(u64, DemographicRecord)]) -> Vec<DatasetFinding> {
    let mut findings = Vec::new();
    let mut seen: HashMap<(u32, u16), u64> = HashMap::new();
    let mut regions: HashMap<u32, (u32, u64)> = HashMap::new();
    for (line, record) in records {
        let line = *line;
        if record.live_births > record.population {
            findings.push(DatasetFinding {
                line,
                problem: DatasetProblem::BirthsExceedPopulation {
                    births: record.live_births,
                    population: record.population,
                },
            });
        }
        let key = (record.municipality_code, record.year);
        if let Some(first_line) = seen.get(&key) {
            findings.push(DatasetFinding {
                line,
                problem: DatasetProblem::DuplicateRecord {
                    municipality: key.0,
                    year: key.1,
                    first_line: *first_line,
                },
            });
        } else {
            seen.insert(key, line);
        }
        match regions.get(&record.municipality_code) {
            Some(&(region, other_line)) if region != record.region_code => findings.push(DatasetFinding {
                line,
                problem: DatasetProblem::RegionConflict {
                    municipality: record.municipality_code,
                    region: record.region_code,
                    other_region: region,
                    other_line,
                },
            }),
            Some(_) => {}
            None => {
                regions.insert(record.municipality_code, (record.region_code, line));
            }
        }
    }
    findings
}

fn finish(mut findings: Vec<DatasetFinding>, records: Vec<(u64, DemographicRecord)>) -> Result<Vec<DemographicRecord>, DatasetError> {
    findings.extend(check_records(&records));
    if findings.is_empty() {
        Ok(records.into_iter().map(|(_, r)| r).collect())
    } else {
        findings.sort_by_key(|f| f.line);
        Err(DatasetError::Invalid(findings))
    }
}

/// Parses the wide (two-row header) layout.
pub fn parse_wide<R: Read>(mut input: R) -> Result<Vec<DemographicRecord>, DatasetError> {
    let mut text = String::new();
    input.read_to_string(&mut text)?;
    parse_wide_text(&text)
}

pub fn parse_wide_text(text: &str) -> Result<Vec<DemographicRecord>, DatasetError> {
    let mut rows = csv_reader(text).into_records();
    let header_error = |line: u64, msg: String| DatasetError::Invalid(vec![DatasetFinding { line, problem: DatasetProblem::Header(msg) }]);
    let malformed = |err: csv::Error| {
        let line = err.position().map_or(0, |p| p.line());
        DatasetError::Invalid(vec![DatasetFinding { line, problem: DatasetProblem::Malformed(err.to_string()) }])
    };

    let years_row = match rows.next() {
        Some(row) => row.map_err(malformed)?,
        None => return Err(header_error(1, "missing year header row".into())),
    };
    let names_row = match rows.next() {
        Some(row) => row.map_err(malformed)?,
        None => return Err(header_error(2, "missing column header row".into())),
    };

    let names: Vec<String> = names_row.iter().map(normalize_label).collect();
    if names.len() < STATIC_COLUMNS.len() || names[..STATIC_COLUMNS.len()] != STATIC_COLUMNS {
        return Err(header_error(2, format!("expected leading columns {}", STATIC_COLUMNS.join(","))));
    }
    let year_columns = names.len() - STATIC_COLUMNS.len();
    if !year_columns.is_multiple_of(2) {
        return Err(header_error(
            2,
            format!("{year_columns} year columns cannot form populacao/sinasc (nv) pairs"),
        ));
    }
    for (i, pair) in names[STATIC_COLUMNS.len()..].chunks(2).enumerate() {
        if pair[0] != WIDE_POPULATION_LABEL || pair[1] != WIDE_BIRTHS_LABEL {
            return Err(header_error(
                2,
                format!("year pair {} must be labelled {WIDE_POPULATION_LABEL:?}, {WIDE_BIRTHS_LABEL:?}, found {:?}, {:?}", i + 1, pair[0], pair[1]),
            ));
        }
    }

    let top: Vec<String> = years_row.iter().map(normalize_label).collect();
    if top.len() > names.len() && top[names.len()..].iter().any(|c| !c.is_empty()) {
        return Err(header_error(1, "year header extends past the column header".into()));
    }
    let cell = |i: usize| top.get(i).map(String::as_str).unwrap_or("");
    if (0..STATIC_COLUMNS.len() - 1).any(|i| !cell(i).is_empty()) || cell(STATIC_COLUMNS.len() - 1) != WIDE_YEAR_LABEL {
        return Err(header_error(1, format!("expected six blank cells followed by {WIDE_YEAR_LABEL:?}")));
    }
    let mut years = Vec::new();
    for i in 0..year_columns / 2 {
        let col = STATIC_COLUMNS.len() + 2 * i;
        let year = parse_year(cell(col)).map_err(|_| header_error(1, format!("column {} must hold a 4-digit year, found {:?}", col + 1, cell(col))))?;
        if !cell(col + 1).is_empty() {
            return Err(header_error(1, format!("year {year} must span exactly two columns")));
        }
        if years.contains(&year) {
            return Err(header_error(1, format!("year {year} appears twice")));
        }
        years.push(year);
    }

    let mut findings = Vec::new();
    let mut records = Vec::new();
    for row in rows {
        let row = match row {
            Ok(row) => row,
            Err(err) => {
                let line = err.position().map_or(0, |p| p.line());
                findings.push(DatasetFinding { line, problem: DatasetProblem::Malformed(err.to_string()) });
                continue;
            }
        };
        let line = line_of(&row);
        if row.len() != names.len() {
            findings.push(DatasetFinding {
                line,
                problem: DatasetProblem::Malformed(format!("expected {} fields, found {}", names.len(), row.len())),
            });
            continue;
        }
        let fields = match parse_static(&row) {
            Ok(f) => f,
            Err(problem) => {
                findings.push(DatasetFinding { line, problem });
                continue;
            }
        };
        for (i, &year) in years.iter().enumerate() {
            let col = STATIC_COLUMNS.len() + 2 * i;
            let (pop, births) = (row[col].trim(), row[col + 1].trim());
            match (pop.is_empty(), births.is_empty()) {
                (true, true) => continue,
                (false, false) => {}
                _ => {
                    findings.push(DatasetFinding { line, problem: DatasetProblem::IncompletePair { year } });
                    continue;
                }
            }
            match (parse_digits::<u64>("populacao", pop, &[]), parse_digits::<u64>("sinasc (nv)", births, &[])) {
                (Ok(p), Ok(b)) => records.push((line, make_record(&fields, year, p, b))),
                (Err(problem), _) | (_, Err(problem)) => findings.push(DatasetFinding { line, problem }),
            }
        }
    }
    finish(findings, records)
}

/// Parses the long (one record per row) layout.
pub fn parse_long<R: Read>(mut input: R) -> Result<Vec<DemographicRecord>, DatasetError> {
    let mut text = String::new();
    input.read_to_string(&mut text)?;
    parse_long_text(&text)
}

pub fn parse_long_text(text: &str) -> Result<Vec<DemographicRecord>, DatasetError> {
    let mut rows = csv_reader(text).into_records();
    let header = match rows.next() {
        Some(Ok(row)) => row,
        Some(Err(err)) => {
            return Err(DatasetError::Invalid(vec![DatasetFinding { line: 1, problem: DatasetProblem::Malformed(err.to_string()) }]))
        }
        None => {
            return Err(DatasetError::Invalid(vec![DatasetFinding { line: 1, problem: DatasetProblem::Header("missing header row".into()) }]))
        }
    };
    let labels: Vec<String> = header.iter().map(normalize_label).collect();
    if labels != LONG_HEADER {
        return Err(DatasetError::Invalid(vec![DatasetFinding {
            line: 1,
            problem: DatasetProblem::Header(format!("expected {}", LONG_HEADER.join(","))),
        }]));
    }

    let mut findings = Vec::new();
    let mut records = Vec::new();
    for row in rows {
        let row = match row {
            Ok(row) => row,
            Err(err) => {
                let line = err.position().map_or(0, |p| p.line());
                findings.push(DatasetFinding { line, problem: DatasetProblem::Malformed(err.to_string()) });
                continue;
            }
        };
        let line = line_of(&row);
        if row.len() != LONG_HEADER.len() {
            findings.push(DatasetFinding {
                line,
                problem: DatasetProblem::Malformed(format!("expected {} fields, found {}", LONG_HEADER.len(), row.len())),
            });
            continue;
        }
        let parsed = parse_static(&row).and_then(|fields| {
            let year = parse_year(&row[7])?;
            let population = parse_digits::<u64>("populacao", &row[8], &[])?;
            let births = parse_digits::<u64>("sinasc", &row[9], &[])?;
            Ok(make_record(&fields, year, population, births))
        });
        match parsed {
            Ok(record) => records.push((line, record)),
            Err(problem) => findings.push(DatasetFinding { line, problem }),
        }
    }
    finish(findings, records)
}

/// Guesses the layout from the first header cell.
pub fn detect_format(text: &str) -> DatasetFormat {
    let first = text.trim_start_matches('\u{feff}').split([',', '\n']).next().unwrap_or("");
    if normalize_label(first) == LONG_HEADER[0] {
        DatasetFormat::Long
    } else {
        DatasetFormat::Wide
    }
}

pub fn parse_dataset_text(text: &str, format: Option<DatasetFormat>) -> Result<Vec<DemographicRecord>, DatasetError> {
    match format.unwrap_or_else(|| detect_format(text)) {
        DatasetFormat::Wide => parse_wide_text(text),
        DatasetFormat::Long => parse_long_text(text),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConvertError {
    #[error("municipality {0} has differing state, name or region fields across years; wide layout cannot represent it")]
    InconsistentMunicipality(u32),
}

/// Renders records in the long layout, in the given order.
pub fn to_long(records: &[DemographicRecord]) -> String {
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer.write_record(LONG_HEADER).expect("in-memory write");
    for r in records {
        writer
            .write_record([
                format!("{:02}", r.state_code),
                r.state_abbrev.clone(),
                r.state_name.clone(),
                r.municipality_code.to_string(),
                r.municipality_name.clone(),
                r.region_code.to_string(),
                r.region_name.clone(),
                r.year.to_string(),
                r.population.to_string(),
                r.live_births.to_string(),
            ])
            .expect("in-memory write");
    }
    String::from_utf8(writer.into_inner().expect("in-memory flush")).expect("csv output is UTF-8")
}

/// Renders records in the wide layout: one row per municipality (first
/// appearance order), one column pair per year (ascending). Years a
/// municipality lacks are left as blank pairs.
pub fn to_wide(records: &[DemographicRecord]) -> Result<String, ConvertError> {
    let years: BTreeSet<u16> = records.iter().map(|r| r.year).collect();
    let mut order: Vec<u32> = Vec::new();
    type Row<'a> = (&'a DemographicRecord, BTreeMap<u16, (u64, u64)>);
    let mut rows: HashMap<u32, Row> = HashMap::new();
    for r in records {
        match rows.get_mut(&r.municipality_code) {
            Some((first, values)) => {
                let same = first.state_code == r.state_code
                    && first.state_abbrev == r.state_abbrev
                    && first.state_name == r.state_name
                    && first.municipality_name == r.municipality_name
                    && first.region_code == r.region_code
                    && first.region_name == r.region_name;
                if !same {
                    return Err(ConvertError::InconsistentMunicipality(r.municipality_code));
                }
                values.insert(r.year, (r.population, r.live_births));
            }
            None => {
                order.push(r.municipality_code);
                rows.insert(r.municipality_code, (r, BTreeMap::from([(r.year, (r.population, r.live_births))])));
            }
        }
    }

    let mut writer = csv::Writer::from_writer(Vec::new());
    let mut top: Vec<String> = vec![String::new(); STATIC_COLUMNS.len() - 1];
    top.push(WIDE_YEAR_LABEL.into());
    for year in &years {
        top.push(year.to_string());
        top.push(String::new());
    }
    let mut names: Vec<String> = STATIC_COLUMNS.iter().map(|s| s.to_string()).collect();
    for _ in &years {
        names.push(WIDE_POPULATION_LABEL.into());
        names.push(WIDE_BIRTHS_LABEL.into());
    }
    writer.write_record(&top).expect("in-memory write");
    writer.write_record(&names).expect("in-memory write");
    for code in order {
        let (first, values) = &rows[&code];
        let mut row = vec![
            format!("{:02}", first.state_code),
            first.state_abbrev.clone(),
            first.state_name.clone(),
            first.municipality_code.to_string(),
            first.municipality_name.clone(),
            first.region_code.to_string(),
            first.region_name.clone(),
        ];
        for year in &years {
            match values.get(year) {
                Some((p, b)) => {
                    row.push(p.to_string());
                    row.push(b.to_string());
                }
                None => {
                    row.push(String::new());
                    row.push(String::new());
                }
            }
        }
        writer.write_record(&row).expect("in-memory write");
    }
    Ok(String::from_utf8(writer.into_inner().expect("in-memory flush")).expect("csv output is UTF-8"))
}

/// Overlays `incoming` on `existing`: for each `(municipality, year)` the
/// incoming record wins. Output is sorted by municipality then year.
pub fn merge_records(existing: &[DemographicRecord], incoming: &[DemographicRecord]) -> Vec<DemographicRecord> {
    let mut merged: BTreeMap<(u32, u16), DemographicRecord> = BTreeMap::new();
    for r in existing.iter().chain(incoming) {
        merged.insert((r.municipality_code, r.year), r.clone());
    }
    merged.into_values().collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ScopeKind {
    Municipality,
    Region,
}

/// A query target: one municipality or one health region. Serialized as
/// `municipality:<code>` or `region:<code>`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub struct Scope {
    pub kind: ScopeKind,
    pub code: u32,
}

impl Scope {
    pub fn municipality(code: u32) -> Self {
        Scope { kind: ScopeKind::Municipality, code }
    }

    pub fn region(code: u32) -> Self {
        Scope { kind: ScopeKind::Region, code }
    }
}

impl fmt::Display for Scope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            ScopeKind::Municipality => write!(f, "municipality:{}", self.code),
            ScopeKind::Region => write!(f, "region:{}", self.code),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid scope {0:?}: expected municipality:<code> or region:<code>")]
pub struct ScopeSyntaxError(pub String);

impl From<Scope> for String {
    fn from(scope: Scope) -> String {
        scope.to_string()
    }
}

impl TryFrom<String> for Scope {
    type Error = ScopeSyntaxError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl FromStr for Scope {
    type Err = ScopeSyntaxError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || ScopeSyntaxError(s.to_string());
        let (kind, code) = s.split_once(':').ok_or_else(err)?;
        let kind = match kind {
            "municipality" => ScopeKind::Municipality,
            "region" => ScopeKind::Region,
            _ => return Err(err()),
        };
        if code.is_empty() || !code.bytes().all(|b| b.is_ascii_digit()) {
            return Err(err());
        }
        Ok(Scope { kind, code: code.parse().map_err(|_| err())? })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct YearFigures {
    pub population: u64,
    pub live_births: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StateNode {
    pub code: u8,
    pub abbrev: String,
    pub name: String,
    pub regions: BTreeSet<u32>,
    pub municipalities: BTreeSet<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RegionNode {
    pub code: u32,
    pub name: String,
    pub state_code: u8,
    pub members: BTreeSet<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MunicipalityNode {
    pub code: u32,
    pub name: String,
    pub state_code: u8,
    pub region_code: u32,
    pub years: BTreeMap<u16, YearFigures>,
    #[serde(skip)]
    source: DemographicRecord,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IndexError {
    #[error("municipality {municipality} appears under regions {first} and {second}")]
    RegionConflict { municipality: u32, first: u32, second: u32 },
    #[error("region {region} appears under states {first} and {second}")]
    RegionStateConflict { region: u32, first: u8, second: u8 },
    #[error("duplicate record for municipality {municipality} year {year}")]
    DuplicateRecord { municipality: u32, year: u16 },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScopeError {
    #[error("unknown {0}")]
    UnknownScope(Scope),
    #[error("unknown state {0}")]
    UnknownState(u8),
    #[error("{scope} has no data for {year}; available years: {}", format_years(.available))]
    YearUnavailable { scope: Scope, year: u16, available: Vec<u16> },
}

fn format_years(years: &[u16]) -> String {
    if years.is_empty() {
        "none".into()
    } else {
        years.iter().map(u16::to_string).collect::<Vec<_>>().join(", ")
    }
}

/// The state → region → municipality hierarchy with per-municipality years.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DatasetIndex {
    states: BTreeMap<u8, StateNode>,
    regions: BTreeMap<u32, RegionNode>,
    municipalities: BTreeMap<u32, MunicipalityNode>,
}

/// Demographics resolved for one scope and year.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScopeDemographics {
    pub scope: Scope,
    pub name: String,
    pub year: u16,
    pub population: u64,
    pub live_births: u64,
    pub contributing_members: Vec<u32>,
    pub missing_members: Vec<u32>,
}

impl ScopeDemographics {
    /// Bare demographics with no dataset behind them, e.g. for what-if runs.
    pub fn ad_hoc(scope: Scope, name: impl Into<String>, year: u16, population: u64, live_births: u64) -> Self {
        let contributing_members = match scope.kind {
            ScopeKind::Municipality => vec![scope.code],
            ScopeKind::Region => Vec::new(),
        };
        ScopeDemographics {
            scope,
            name: name.into(),
            year,
            population,
            live_births,
            contributing_members,
            missing_members: Vec::new(),
        }
    }
}

impl DatasetIndex {
    pub fn build(records: &[DemographicRecord]) -> Result<Self, IndexError> {
        let mut index = DatasetIndex::default();
        for r in records {
            match index.municipalities.get_mut(&r.municipality_code) {
                Some(node) => {
                    if node.region_code != r.region_code {
                        return Err(IndexError::RegionConflict {
                            municipality: r.municipality_code,
                            first: node.region_code,
                            second: r.region_code,
                        });
                    }
                    let figures = YearFigures { population: r.population, live_births: r.live_births };
                    if node.years.insert(r.year, figures).is_some() {
                        return Err(IndexError::DuplicateRecord { municipality: r.municipality_code, year: r.year });
                    }
                }
                None => {
                    index.municipalities.insert(
                        r.municipality_code,
                        MunicipalityNode {
                            code: r.municipality_code,
                            name: r.municipality_name.clone(),
                            state_code: r.state_code,
                            region_code: r.region_code,
                            years: BTreeMap::from([(r.year, YearFigures { population: r.population, live_births: r.live_births })]),
                            source: r.clone(),
                        },
                    );
                }
            }
            let region = index.regions.entry(r.region_code).or_insert_with(|| RegionNode {
                code: r.region_code,
                name: r.region_name.clone(),
                state_code: r.state_code,
                members: BTreeSet::new(),
            });
            if region.state_code != r.state_code {
                return Err(IndexError::RegionStateConflict { region: r.region_code, first: region.state_code, second: r.state_code });
            }
            region.members.insert(r.municipality_code);
            let state = index.states.entry(r.state_code).or_insert_with(|| StateNode {
                code: r.state_code,
                abbrev: r.state_abbrev.clone(),
                name: r.state_name.clone(),
                regions: BTreeSet::new(),
                municipalities: BTreeSet::new(),
            });
            state.regions.insert(r.region_code);
            state.municipalities.insert(r.municipality_code);
        }
        Ok(index)
    }

    pub fn is_empty(&self) -> bool {
        self.municipalities.is_empty()
    }

    pub fn states(&self) -> impl Iterator<Item = &StateNode> {
        self.states.values()
    }

    pub fn state(&self, code: u8) -> Result<&StateNode, ScopeError> {
        self.states.get(&code).ok_or(ScopeError::UnknownState(code))
    }

    pub fn regions_of(&self, state: u8) -> Result<Vec<&RegionNode>, ScopeError> {
        Ok(self.state(state)?.regions.iter().map(|c| &self.regions[c]).collect())
    }

    pub fn municipalities_of(&self, state: u8) -> Result<Vec<&MunicipalityNode>, ScopeError> {
        Ok(self.state(state)?.municipalities.iter().map(|c| &self.municipalities[c]).collect())
    }

    pub fn region(&self, code: u32) -> Option<&RegionNode> {
        self.regions.get(&code)
    }

    pub fn municipality(&self, code: u32) -> Option<&MunicipalityNode> {
        self.municipalities.get(&code)
    }

    /// Every indexed record, sorted by municipality then year.
    pub fn records(&self) -> Vec<DemographicRecord> {
        self.municipalities
            .values()
            .flat_map(|node| {
                node.years.iter().map(move |(&year, figures)| DemographicRecord {
                    year,
                    population: figures.population,
                    live_births: figures.live_births,
                    ..node.source.clone()
                })
            })
            .collect()
    }

    fn members(&self, scope: Scope) -> Result<Vec<&MunicipalityNode>, ScopeError> {
        match scope.kind {
            ScopeKind::Municipality => self
                .municipalities
                .get(&scope.code)
                .map(|m| vec![m])
                .ok_or(ScopeError::UnknownScope(scope)),
            ScopeKind::Region => self
                .regions
                .get(&scope.code)
                .map(|r| r.members.iter().map(|c| &self.municipalities[c]).collect())
                .ok_or(ScopeError::UnknownScope(scope)),
        }
    }

    pub fn scope_name(&self, scope: Scope) -> Result<&str, ScopeError> {
        match scope.kind {
            ScopeKind::Municipality => self.municipalities.get(&scope.code).map(|m| m.name.as_str()),
            ScopeKind::Region => self.regions.get(&scope.code).map(|r| r.name.as_str()),
        }
        .ok_or(ScopeError::UnknownScope(scope))
    }

    /// Years offered for a scope. A region offers a year when any one of
    /// its members has data for it.
    pub fn year_availability(&self, scope: Scope) -> Result<Vec<u16>, ScopeError> {
        let years: BTreeSet<u16> = self.members(scope)?.iter().flat_map(|m| m.years.keys().copied()).collect();
        Ok(years.into_iter().collect())
    }

    /// Sums the members that have data for `year`; members without it are
    /// listed in `missing_members` and contribute nothing.
    pub fn resolve_scope(&self, scope: Scope, year: u16) -> Result<ScopeDemographics, ScopeError> {
        let members = self.members(scope)?;
        let mut resolved = ScopeDemographics {
            scope,
            name: self.scope_name(scope)?.to_string(),
            year,
            population: 0,
            live_births: 0,
            contributing_members: Vec::new(),
            missing_members: Vec::new(),
        };
        for member in members {
            match member.years.get(&year) {
                Some(figures) => {
                    resolved.population += figures.population;
                    resolved.live_births += figures.live_births;
                    resolved.contributing_members.push(member.code);
                }
                None => resolved.missing_members.push(member.code),
            }
        }
        if resolved.contributing_members.is_empty() {
            return Err(ScopeError::YearUnavailable { scope, year, available: self.year_availability(scope)? });
        }
        Ok(resolved)
    }
}

pub fn build_index(records: &[DemographicRecord]) -> Result<DatasetIndex, IndexError> {
    DatasetIndex::build(records)
}

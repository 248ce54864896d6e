//! Report arithmetic.
//!
//! For each catalog entry the engine computes an exact annual volume
//! (`rate × base`), rounds it half-up to the annual maximum, and for priced
//! services derives the monthly mean and the monthly cost. The cost is
//! `annual_exact × unit_price / 12` rounded to whole cents; the monthly mean
//! is never rounded before it is priced.

use std::collections::{BTreeSet, HashMap};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::amount::{AmountError, ExactAmount};
use crate::catalog::{validate_entry, BaseKind, BaseSpec, EntryKey, OutputKind, ParameterCatalog, ParameterEntry, Section, Violation};
use crate::dataset::{Scope, ScopeDemographics};

pub const MONTHS_PER_YEAR: u64 = 12;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EngineError {
    #[error(transparent)]
    Amount(#[from] AmountError),
    #[error("entry {key} is invalid: {}", violations.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
    InvalidEntry { key: EntryKey, violations: Vec<Violation> },
    #[error("{kind} base requires an argument")]
    MissingBaseArg { kind: BaseKind },
    #[error("reports come from different catalog versions ({a} vs {b})")]
    CatalogVersionMismatch { a: String, b: String },
}

/// Search tier. Beta searches are free and limited to section VI.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Tier {
    Beta,
    Premium,
}

impl Tier {
    pub fn as_str(self) -> &'static str {
        match self {
            Tier::Beta => "BETA",
            Tier::Premium => "PREMIUM",
        }
    }
}

pub const BETA_SECTIONS: [Section; 1] = [Section::VI];

/// Half-up rounding at `decimals` fractional digits; ties go away from zero.
pub fn round_half_up(x: &ExactAmount, decimals: u32) -> Result<ExactAmount, AmountError> {
    x.round_half_up(decimals)
}

pub fn base_value(base: &BaseSpec, demo: &ScopeDemographics) -> Result<ExactAmount, EngineError> {
    let population = ExactAmount::from_integer(demo.population);
    let births = ExactAmount::from_integer(demo.live_births);
    let arg = || base.arg.as_ref().ok_or(EngineError::MissingBaseArg { kind: base.kind });
    Ok(match base.kind {
        BaseKind::Population => population,
        BaseKind::LiveBirths => births,
        BaseKind::PopulationFraction => &population * arg()?,
        BaseKind::LiveBirthsFactor => &births * arg()?,
    })
}

/// Exact annual volume and its half-up rounded maximum.
pub fn annual_amount(entry: &ParameterEntry, demo: &ScopeDemographics) -> Result<(ExactAmount, u64), EngineError> {
    let exact = &entry.rate * &base_value(&entry.base, demo)?;
    let max = exact.round_to_u64()?;
    Ok((exact, max))
}

pub fn monthly_mean(annual_exact: &ExactAmount) -> Result<(ExactAmount, u64), EngineError> {
    let mean = annual_exact.div_int(MONTHS_PER_YEAR);
    let display = mean.round_to_u64()?;
    Ok((mean, display))
}

/// Monthly cost in cents from the unrounded annual volume.
pub fn monthly_cost(annual_exact: &ExactAmount, unit_price_cents: u64) -> Result<u64, EngineError> {
    let product = annual_exact * &ExactAmount::from_integer(unit_price_cents);
    Ok(product.div_int(MONTHS_PER_YEAR).round_to_u64()?)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReportRow {
    pub section: Section,
    pub code: String,
    pub name: String,
    pub annual_exact: ExactAmount,
    pub annual_max: u64,
    pub monthly_mean_display: Option<u64>,
    pub unit_price_cents: Option<u64>,
    pub monthly_cost_cents: Option<u64>,
    pub output_kind: OutputKind,
}

impl ReportRow {
    pub fn key(&self) -> EntryKey {
        EntryKey { section: self.section, code: self.code.clone(), name: self.name.clone() }
    }
}

pub fn compute_row(entry: &ParameterEntry, demo: &ScopeDemographics) -> Result<ReportRow, EngineError> {
    let violations = validate_entry(entry);
    if !violations.is_empty() {
        return Err(EngineError::InvalidEntry { key: entry.key(), violations });
    }
    let (annual_exact, annual_max) = annual_amount(entry, demo)?;
    let (monthly_mean_display, unit_price_cents, monthly_cost_cents) = match (entry.output_kind, entry.unit_price_cents) {
        (OutputKind::PricedService, Some(price)) => {
            let (_, display) = monthly_mean(&annual_exact)?;
            (Some(display), Some(price), Some(monthly_cost(&annual_exact, price)?))
        }
        _ => (None, None, None),
    };
    Ok(ReportRow {
        section: entry.section,
        code: entry.code.clone(),
        name: entry.name.clone(),
        annual_exact,
        annual_max,
        monthly_mean_display,
        unit_price_cents,
        monthly_cost_cents,
        output_kind: entry.output_kind,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Coverage {
    pub contributing_members: Vec<u32>,
    pub missing_members: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Report {
    pub scope: Scope,
    pub scope_name: String,
    pub year: u16,
    pub population: u64,
    pub live_births: u64,
    pub catalog_version: String,
    pub tier: Tier,
    pub sections: Vec<Section>,
    pub coverage: Coverage,
    pub generated_at: DateTime<Utc>,
    pub rows: Vec<ReportRow>,
}

impl Report {
    pub fn row(&self, code: &str) -> Option<&ReportRow> {
        self.rows.iter().find(|r| !code.is_empty() && r.code == code)
    }

    pub fn row_named(&self, name: &str) -> Option<&ReportRow> {
        self.rows.iter().find(|r| r.name == name)
    }
}

/// Computes every catalog row whose section is selected, in catalog order.
/// Beta reports are always restricted to section VI.
pub fn build_report(
    catalog: &ParameterCatalog,
    demo: &ScopeDemographics,
    sections: &BTreeSet<Section>,
    tier: Tier,
    generated_at: DateTime<Utc>,
) -> Result<Report, EngineError> {
    let sections: BTreeSet<Section> = match tier {
        Tier::Beta => BETA_SECTIONS.into_iter().collect(),
        Tier::Premium => sections.clone(),
    };
    let rows = catalog
        .entries()
        .iter()
        .filter(|e| sections.contains(&e.section))
        .map(|e| compute_row(e, demo))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Report {
        scope: demo.scope,
        scope_name: demo.name.clone(),
        year: demo.year,
        population: demo.population,
        live_births: demo.live_births,
        catalog_version: catalog.version.clone(),
        tier,
        sections: sections.into_iter().collect(),
        coverage: Coverage {
            contributing_members: demo.contributing_members.clone(),
            missing_members: demo.missing_members.clone(),
        },
        generated_at,
        rows,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum DeltaStatus {
    Matched,
    OnlyInA,
    OnlyInB,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeltaRow {
    pub section: Section,
    pub code: String,
    pub name: String,
    pub status: DeltaStatus,
    pub annual_max_a: Option<u64>,
    pub annual_max_b: Option<u64>,
    pub annual_max_delta: Option<i64>,
    /// Signed percentage change with two decimals, absent when `a` is zero.
    pub annual_max_change_pct: Option<String>,
    pub monthly_cost_cents_a: Option<u64>,
    pub monthly_cost_cents_b: Option<u64>,
    pub monthly_cost_delta_cents: Option<i64>,
    pub monthly_cost_change_pct: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReportSide {
    pub scope: Scope,
    pub scope_name: String,
    pub year: u16,
    pub population: u64,
    pub live_births: u64,
}

impl From<&Report> for ReportSide {
    fn from(r: &Report) -> Self {
        ReportSide {
            scope: r.scope,
            scope_name: r.scope_name.clone(),
            year: r.year,
            population: r.population,
            live_births: r.live_births,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeltaReport {
    pub catalog_version: String,
    pub a: ReportSide,
    pub b: ReportSide,
    pub rows: Vec<DeltaRow>,
}

fn delta(a: Option<u64>, b: Option<u64>) -> Option<i64> {
    match (a, b) {
        (Some(a), Some(b)) => Some(b as i64 - a as i64),
        _ => None,
    }
}

/// `(b - a) / a` as a signed percentage with two decimals.
pub fn percent_change(a: u64, b: u64) -> Option<String> {
    if a == 0 {
        return None;
    }
    let diff = ExactAmount::from_integer(b as i128 - a as i128);
    let pct = (&diff * &ExactAmount::from_integer(100)).div_int(a);
    let rendered = pct.render_fixed(2);
    Some(if pct.is_negative() || rendered == "0.00" { rendered } else { format!("+{rendered}") })
}

fn pct(a: Option<u64>, b: Option<u64>) -> Option<String> {
    percent_change(a?, b?)
}

/// Row-by-row differences, matching rows by `(section, code, name)`.
/// Rows follow `a`'s order; rows only present in `b` come last.
pub fn compare_reports(a: &Report, b: &Report) -> Result<DeltaReport, EngineError> {
    if a.catalog_version != b.catalog_version {
        return Err(EngineError::CatalogVersionMismatch { a: a.catalog_version.clone(), b: b.catalog_version.clone() });
    }
    let b_rows: HashMap<EntryKey, &ReportRow> = b.rows.iter().map(|r| (r.key(), r)).collect();
    let mut matched = BTreeSet::new();
    let mut rows = Vec::with_capacity(a.rows.len());
    for ra in &a.rows {
        let key = ra.key();
        let rb = b_rows.get(&key).copied();
        if rb.is_some() {
            matched.insert(key);
        }
        let (max_b, cost_b) = (rb.map(|r| r.annual_max), rb.and_then(|r| r.monthly_cost_cents));
        rows.push(DeltaRow {
            section: ra.section,
            code: ra.code.clone(),
            name: ra.name.clone(),
            status: if rb.is_some() { DeltaStatus::Matched } else { DeltaStatus::OnlyInA },
            annual_max_a: Some(ra.annual_max),
            annual_max_b: max_b,
            annual_max_delta: delta(Some(ra.annual_max), max_b),
            annual_max_change_pct: pct(Some(ra.annual_max), max_b),
            monthly_cost_cents_a: ra.monthly_cost_cents,
            monthly_cost_cents_b: cost_b,
            monthly_cost_delta_cents: delta(ra.monthly_cost_cents, cost_b),
            monthly_cost_change_pct: pct(ra.monthly_cost_cents, cost_b),
        });
    }
    for rb in b.rows.iter().filter(|r| !matched.contains(&r.key())) {
        rows.push(DeltaRow {
            section: rb.section,
            code: rb.code.clone(),
            name: rb.name.clone(),
            status: DeltaStatus::OnlyInB,
            annual_max_a: None,
            annual_max_b: Some(rb.annual_max),
            annual_max_delta: None,
            annual_max_change_pct: None,
            monthly_cost_cents_a: None,
            monthly_cost_cents_b: rb.monthly_cost_cents,
            monthly_cost_delta_cents: None,
            monthly_cost_change_pct: None,
        });
    }
    Ok(DeltaReport { catalog_version: a.catalog_version.clone(), a: a.into(), b: b.into(), rows })
}

/// Total monthly cost of a report in cents.
pub fn total_monthly_cost(report: &Report) -> u64 {
    report.rows.iter().filter_map(|r| r.monthly_cost_cents).sum()
}

/// Exact annual volume summed over rows, for aggregation checks.
pub fn exact_total(rows: &[ReportRow]) -> ExactAmount {
    rows.iter().map(|r| r.annual_exact.clone()).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::Section;
    use chrono::TimeZone;

    fn amt(s: &str) -> ExactAmount {
        s.parse().unwrap()
    }

    fn demo(population: u64, live_births: u64) -> ScopeDemographics {
        ScopeDemographics::ad_hoc(Scope::municipality(150080), "Ananindeua", 2016, population, live_births)
    }

    fn priced(code: &str, name: &str, rate: &str, price: u64) -> ParameterEntry {
        ParameterEntry {
            section: Section::V,
            code: code.into(),
            name: name.into(),
            base: BaseSpec::population(),
            rate: amt(rate),
            unit_price_cents: Some(price),
            output_kind: OutputKind::PricedService,
        }
    }

    fn epoch() -> DateTime<Utc> {
        Utc.with_ymd_and_hms(2020, 1, 1, 0, 0, 0).unwrap()
    }

    #[test]
    fn rounding_examples() {
        assert_eq!(round_half_up(&amt("2893.55"), 0).unwrap(), 2894u64);
        assert_eq!(round_half_up(&amt("102.1668"), 0).unwrap(), 102u64);
        assert_eq!(round_half_up(&amt("2.5"), 0).unwrap(), 3u64);
        assert!(round_half_up(&amt("-1"), 0).is_err());
    }

    #[test]
    fn base_values() {
        let d = demo(26305, 187);
        let fraction = base_value(&BaseSpec::population_fraction(amt("0.242")), &d).unwrap();
        assert_eq!(fraction, amt("6365.81"));
        assert_eq!(fraction.round_half_up(0).unwrap(), 6366u64);
        assert_eq!(base_value(&BaseSpec::live_births(), &d).unwrap(), 187u64);
        assert_eq!(base_value(&BaseSpec::live_births_factor(amt("1.05")), &d).unwrap(), amt("196.35"));
        let zero = demo(0, 0);
        for base in [
            BaseSpec::population(),
            BaseSpec::live_births(),
            BaseSpec::population_fraction(amt("0.5")),
            BaseSpec::live_births_factor(amt("2")),
        ] {
            assert!(base_value(&base, &zero).unwrap().is_zero());
        }
        let broken = BaseSpec { kind: BaseKind::PopulationFraction, arg: None };
        assert!(matches!(base_value(&broken, &d), Err(EngineError::MissingBaseArg { .. })));
    }

    #[test]
    fn annual_amounts() {
        let d = demo(510_834, 8_974);
        let (exact, max) = annual_amount(&priced("", "c", "0.06", 1000), &d).unwrap();
        assert_eq!((exact, max), (amt("30650.04"), 30650));
        let (exact, max) = annual_amount(&priced("", "v", "0.00001", 1), &d).unwrap();
        assert_eq!((exact, max), (amt("5.10834"), 5));
        let (exact, max) = annual_amount(&priced("", "z", "0", 1), &d).unwrap();
        assert!(exact.is_zero());
        assert_eq!(max, 0);
    }

    #[test]
    fn monthly_means() {
        let (mean, display) = monthly_mean(&amt("30650.04")).unwrap();
        assert_eq!((mean, display), (amt("2554.17"), 2554));
        let (mean, display) = monthly_mean(&amt("5.10834")).unwrap();
        assert_eq!((mean, display), (amt("0.425695"), 0));
        let (mean, display) = monthly_mean(&amt("12")).unwrap();
        assert_eq!((mean, display), (amt("1"), 1));
    }

    #[test]
    fn monthly_costs_use_unrounded_mean() {
        assert_eq!(monthly_cost(&amt("1532.502"), 3000).unwrap(), 383_126);
        let rounded_mean_path = amt("127.71") * ExactAmount::from_integer(3000);
        assert_eq!(rounded_mean_path, 383_130u64);
        assert_eq!(monthly_cost(&amt("30650.04"), 1000).unwrap(), 2_554_170);
        assert_eq!(monthly_cost(&amt("30650.04"), 0).unwrap(), 0);
    }

    #[test]
    fn rows_by_output_kind() {
        let d = demo(510_834, 8_974);
        let row = compute_row(&priced("02.11.02.001-0", "Cateterismo cardíaco", "0.004", 61472), &d).unwrap();
        assert_eq!(row.annual_max, 2043);
        assert_eq!(row.monthly_mean_display, Some(170));
        assert_eq!(row.monthly_cost_cents, Some(10_467_329));

        let pediatric = ParameterEntry {
            section: Section::VI,
            code: String::new(),
            name: "Pediatria clínica".into(),
            base: BaseSpec::population_fraction(amt("0.242")),
            rate: amt("1"),
            unit_price_cents: None,
            output_kind: OutputKind::ReferencePopulation,
        };
        let row = compute_row(&pediatric, &demo(26305, 187)).unwrap();
        assert_eq!(row.annual_max, 6366);
        assert_eq!((row.monthly_mean_display, row.unit_price_cents, row.monthly_cost_cents), (None, None, None));

        let row = compute_row(&priced("", "c", "0.06", 1000), &demo(0, 0)).unwrap();
        assert_eq!((row.annual_max, row.monthly_mean_display, row.monthly_cost_cents), (0, Some(0), Some(0)));
    }

    #[test]
    fn invalid_entry_is_refused() {
        let mut bad = priced("", "c", "0.06", 1000);
        bad.unit_price_cents = None;
        assert!(matches!(compute_row(&bad, &demo(1, 0)), Err(EngineError::InvalidEntry { .. })));
    }

    #[test]
    fn report_filters_sections_in_catalog_order() {
        let mut count = priced("", "Médicos", "0.000065", 0);
        count.unit_price_cents = None;
        count.output_kind = OutputKind::Count;
        let mut other = priced("", "Outra", "1", 1);
        other.section = Section::II;
        let catalog = ParameterCatalog::new("t", "", vec![count, other, priced("03.01.01.007-2", "Consulta", "0.06", 1000)]).unwrap();
        let d = demo(510_834, 8_974);
        let sections: BTreeSet<Section> = [Section::V].into();
        let report = build_report(&catalog, &d, &sections, Tier::Premium, epoch()).unwrap();
        assert_eq!(report.rows.iter().map(|r| r.name.as_str()).collect::<Vec<_>>(), vec!["Médicos", "Consulta"]);
        assert_eq!(report.rows[0].annual_max, 33);
        assert_eq!(report.rows[0].monthly_mean_display, None);

        let empty = build_report(&catalog, &d, &BTreeSet::new(), Tier::Premium, epoch()).unwrap();
        assert!(empty.rows.is_empty());

        let beta = build_report(&catalog, &d, &sections, Tier::Beta, epoch()).unwrap();
        assert_eq!(beta.sections, vec![Section::VI]);
        assert!(beta.rows.is_empty());
    }

    #[test]
    fn comparison() {
        let catalog = ParameterCatalog::new("t", "", vec![priced("03.01.01.007-2", "Consulta", "0.06", 1000)]).unwrap();
        let sections: BTreeSet<Section> = [Section::V].into();
        let a = build_report(&catalog, &demo(510_834, 8_974), &sections, Tier::Premium, epoch()).unwrap();
        let b = build_report(&catalog, &demo(521_675, 9_893), &sections, Tier::Premium, epoch()).unwrap();
        let deltas = compare_reports(&a, &b).unwrap();
        assert_eq!(deltas.rows[0].annual_max_delta, Some(651));
        assert_eq!(deltas.rows[0].annual_max_change_pct.as_deref(), Some("+2.12"));

        let same = compare_reports(&a, &a).unwrap();
        assert!(same.rows.iter().all(|r| r.annual_max_delta == Some(0) && r.monthly_cost_delta_cents == Some(0)));
        assert_eq!(same.rows[0].annual_max_change_pct.as_deref(), Some("0.00"));

        let mut other = b.clone();
        other.catalog_version = "u".into();
        assert!(matches!(compare_reports(&a, &other), Err(EngineError::CatalogVersionMismatch { .. })));
    }

    #[test]
    fn comparison_flags_unmatched_rows() {
        let sections: BTreeSet<Section> = [Section::V].into();
        let c1 = ParameterCatalog::new("t", "", vec![priced("03.01.01.007-2", "Consulta", "0.06", 1000)]).unwrap();
        let c2 = ParameterCatalog::new("t", "", vec![priced("02.11.02.004-4", "Holter", "0.003", 3000)]).unwrap();
        let a = build_report(&c1, &demo(100, 1), &sections, Tier::Premium, epoch()).unwrap();
        let b = build_report(&c2, &demo(100, 1), &sections, Tier::Premium, epoch()).unwrap();
        let deltas = compare_reports(&a, &b).unwrap();
        let statuses: Vec<DeltaStatus> = deltas.rows.iter().map(|r| r.status).collect();
        assert_eq!(statuses, vec![DeltaStatus::OnlyInA, DeltaStatus::OnlyInB]);
        assert_eq!(deltas.rows[0].annual_max_delta, None);
    }

    #[test]
    fn percent_change_signs() {
        assert_eq!(percent_change(200, 100).as_deref(), Some("-50.00"));
        assert_eq!(percent_change(3, 4).as_deref(), Some("+33.33"));
        assert_eq!(percent_change(0, 4), None);
    }
}

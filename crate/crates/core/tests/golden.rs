use std::collections::BTreeSet;

use chrono::{TimeZone, Utc};
use paramsus::dataset::parse_long_text;
use paramsus::export::{format_brl, report_csv};
use paramsus::fixtures::{reference_catalog, CASE_DEMOGRAPHICS_CSV};
use paramsus::{build_index, build_report, OutputKind, Report, Scope, ScopeDemographics, Section, Tier};

fn report_for(municipality: u32, year: u16, section: Section) -> Report {
    let index = build_index(&parse_long_text(CASE_DEMOGRAPHICS_CSV).unwrap()).unwrap();
    let demo = index.resolve_scope(Scope::municipality(municipality), year).unwrap();
    let sections: BTreeSet<Section> = [section].into();
    build_report(&reference_catalog(), &demo, &sections, Tier::Premium, Utc.timestamp_opt(0, 0).unwrap()).unwrap()
}

const AGUA_AZUL: u32 = 150013;
const ANANINDEUA: u32 = 150080;

#[test]
fn bed_reference_populations() {
    let report = report_for(AGUA_AZUL, 2015, Section::VI);
    let got: Vec<(&str, u64)> = report.rows.iter().map(|r| (r.name.as_str(), r.annual_max)).collect();
    assert_eq!(
        got,
        vec![
            ("Obstetrícia", 196),
            ("Neonatologia", 187),
            ("Pediatria clínica", 6_366),
            ("Pediatria cirúrgica", 6_366),
            ("Clínica - 15 a 59 anos", 17_046),
            ("Clínica - 60 anos e mais", 2_894),
            ("Cirurgia - 15 a 59 anos", 17_046),
            ("Cirurgia - 60 anos e mais", 2_894),
        ]
    );
    assert!(report.rows.iter().all(|r| r.output_kind == OutputKind::ReferencePopulation
        && r.monthly_mean_display.is_none()
        && r.monthly_cost_cents.is_none()));
}

#[test]
fn cardiology_table() {
    let report = report_for(ANANINDEUA, 2016, Section::V);
    assert_eq!(report.rows.len(), 12);
    type Row = (&'static str, u64, Option<u64>, Option<u64>, Option<u64>);
    let expected: [Row; 12] = [
        ("", 33, None, None, None),
        ("03.01.01.007-2", 30_650, Some(2_554), Some(1000), Some(2_554_170)),
        ("02.11.02.004-4", 1_533, Some(128), Some(3000), Some(383_126)),
        ("02.05.01.003-2", 8_173, Some(681), Some(3994), Some(2_720_361)),
        ("02.11.02.006-0", 3_065, Some(255), Some(3000), Some(766_251)),
        ("02.05.01.002-4", 102, Some(9), Some(16500), Some(140_479)),
        ("02.05.01.001-6", 102, Some(9), Some(16500), Some(140_479)),
        ("02.08.01.002-5", 1_022, Some(85), Some(40852), Some(3_478_098)),
        ("02.08.01.003-3", 1_022, Some(85), Some(38307), Some(3_261_420)),
        ("02.08.01.008-4", 5, Some(0), Some(17672), Some(7_523)),
        ("02.11.02.001-0", 2_043, Some(170), Some(61472), Some(10_467_329)),
        ("02.11.02.002-8", 5, Some(0), Some(65372), Some(27_829)),
    ];
    for (row, (code, max, mean, price, cost)) in report.rows.iter().zip(expected) {
        assert_eq!(row.code, code);
        assert_eq!(row.annual_max, max, "{}", row.name);
        assert_eq!(row.monthly_mean_display, mean, "{}", row.name);
        assert_eq!(row.unit_price_cents, price, "{}", row.name);
        assert_eq!(row.monthly_cost_cents, cost, "{}", row.name);
    }
}

#[test]
fn cardiology_currency_strings() {
    let report = report_for(ANANINDEUA, 2016, Section::V);
    let costs: Vec<String> = report.rows.iter().filter_map(|r| r.monthly_cost_cents).map(format_brl).collect();
    assert_eq!(
        costs,
        [
            "R$ 25.541,70",
            "R$ 3.831,26",
            "R$ 27.203,61",
            "R$ 7.662,51",
            "R$ 1.404,79",
            "R$ 1.404,79",
            "R$ 34.780,98",
            "R$ 32.614,20",
            "R$ 75,23",
            "R$ 104.673,29",
            "R$ 278,29",
        ]
    );
    let csv = String::from_utf8(report_csv(&report)).unwrap();
    let holter = csv.lines().find(|l| l.contains("Holter")).unwrap();
    assert_eq!(holter, "V,02.11.02.004-4,Holter,1533,128,\"R$ 30,00\",\"R$ 3.831,26\"");
    assert!(csv.starts_with("section,code,name,annual_max,monthly_mean,unit_price,monthly_cost\n"));
}

/// Integer-only recomputation: rate in millionths, half-up by adding half
/// the divisor before truncating division.
fn oracle_row(rate_millionths: u128, population: u128, price_cents: u128) -> (u128, u128, u128) {
    let annual_scaled = rate_millionths * population;
    let div = 1_000_000u128;
    let max = (2 * annual_scaled + div) / (2 * div);
    let mean = (2 * annual_scaled + 12 * div) / (2 * 12 * div);
    let cost = (2 * annual_scaled * price_cents + 12 * div) / (2 * 12 * div);
    (max, mean, cost)
}

#[test]
fn projection_matches_integer_oracle() {
    let report = report_for(ANANINDEUA, 2020, Section::V);
    assert_eq!((report.population, report.live_births), (521_675, 9_893));
    let rates: [u128; 12] = [65, 60_000, 3_000, 16_000, 6_000, 200, 200, 2_000, 2_000, 10, 4_000, 10];
    for (row, rate) in report.rows.iter().zip(rates) {
        let (max, mean, cost) = oracle_row(rate, 521_675, row.unit_price_cents.unwrap_or(0) as u128);
        assert_eq!(row.annual_max as u128, max, "{}", row.name);
        if row.output_kind == OutputKind::PricedService {
            assert_eq!(row.monthly_mean_display.unwrap() as u128, mean, "{}", row.name);
            assert_eq!(row.monthly_cost_cents.unwrap() as u128, cost, "{}", row.name);
        }
    }
    assert_eq!(report.row("03.01.01.007-2").unwrap().annual_max, 31_301);
}

#[test]
fn zero_population_scope_yields_zero_rows() {
    let demo = ScopeDemographics::ad_hoc(Scope::municipality(150080), "Vazio", 2030, 0, 0);
    let all: BTreeSet<Section> = Section::ALL.into_iter().collect();
    let report = build_report(&reference_catalog(), &demo, &all, Tier::Premium, Utc::now()).unwrap();
    assert_eq!(report.rows.len(), 20);
    assert!(report.rows.iter().all(|r| r.annual_max == 0 && r.monthly_cost_cents.unwrap_or(0) == 0));
}

#[test]
fn fixture_lookup() {
    let catalog = reference_catalog();
    assert_eq!(catalog.lookup("02.11.02.004-4").unwrap().name, "Holter");
    assert!(catalog.lookup("99.99.99.999-9").is_none());
    assert!(catalog.lookup("").is_none());
    assert_eq!(catalog.entries().iter().filter(|e| e.section == Section::VI).count(), 8);
    assert_eq!(catalog.entries().iter().filter(|e| e.section == Section::V).count(), 12);
}

use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::Arc;

use chrono::{TimeZone, Utc};
use paramsus::fixtures::{CASE_DEMOGRAPHICS_CSV, REFERENCE_CATALOG_CSV};
use paramsus::{Scope, Section, Tier};
use paramsus_service::{Decision, ExportFormat, ManualClock, SearchRequest, Service, ServiceConfig};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures").join(name)
}

fn cases() -> PathBuf {
    fixture("demographics-cases.csv")
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_paramsus")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn report(scope: &str, year: &str, extra: &[&str]) -> Output {
    let dataset = cases();
    let mut args = vec!["report", "--dataset", dataset.to_str().unwrap(), "--scope", scope, "--year", year];
    args.extend_from_slice(extra);
    run(&args)
}

#[test]
fn bed_table_as_csv() {
    let out = report("municipality:150013", "2015", &["--sections", "VI"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 9);
    assert_eq!(lines[0], "section,code,name,annual_max,monthly_mean,unit_price,monthly_cost");
    assert_eq!(lines[1], "VI,,Obstetrícia,196,,,");
    assert_eq!(lines[8], "VI,,Cirurgia - 60 anos e mais,2894,,,");
}

#[test]
fn cardiology_table_as_json() {
    let out = report("municipality:150080", "2016", &["--sections", "V", "--format", "json"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let value: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let rows = value["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 12);
    assert_eq!(rows[2]["code"], "02.11.02.004-4");
    assert_eq!(rows[2]["monthly_cost_cents"], 383_126);
}

#[test]
fn missing_year_lists_alternatives() {
    let out = report("municipality:150080", "2019", &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("available years: 2016, 2020"), "{}", stderr(&out));
    assert!(out.stdout.is_empty());
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(report("town:1", "2016", &[]).status.code(), Some(2));
    assert_eq!(report("municipality:150080", "2016", &["--sections", "IX"]).status.code(), Some(2));
    assert_eq!(report("municipality:1", "2016", &[]).status.code(), Some(2));
    assert_eq!(run(&["validate"]).status.code(), Some(2));
    assert_eq!(run(&[]).status.code(), Some(2));
}

#[test]
fn io_errors_exit_three() {
    let out = run(&["validate", "--dataset", "/definitely/not/here.csv"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr(&out).contains("cannot read"));
    let out = report("municipality:150080", "2016", &["--out", "/definitely/not/here/out.csv"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn writes_to_out_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.csv");
    let out = report("region:15004", "2011", &["--out", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(path).unwrap();
    assert!(text.contains("Neonatologia,2000,"));
}

#[test]
fn validate_clean_dataset() {
    let path = fixture("sample-wide.csv");
    let out = run(&["validate", "--dataset", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).ends_with("2 records, 0 errors\n"), "{}", stdout(&out));
}

#[test]
fn validate_reports_births_above_population() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.csv");
    let text = format!("{CASE_DEMOGRAPHICS_CSV}15,PA,Pará,150381,Outra,15004,Lago de Tucuruí,2010,100,101\n");
    std::fs::write(&path, text).unwrap();
    let out = run(&["validate", "--dataset", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let err = stderr(&out);
    assert!(err.contains("line 7"), "{err}");
    assert!(err.trim_end().ends_with("1 errors"), "{err}");
}

#[test]
fn validate_catalog_names_both_duplicate_lines() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("catalog.csv");
    let holter = REFERENCE_CATALOG_CSV.lines().find(|l| l.contains("Holter")).unwrap();
    std::fs::write(&path, format!("{REFERENCE_CATALOG_CSV}{holter}\n")).unwrap();
    let out = run(&["validate", "--catalog", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let err = stderr(&out);
    let dup_line = REFERENCE_CATALOG_CSV.lines().count() + 1;
    let first_line = REFERENCE_CATALOG_CSV.lines().position(|l| l == holter).unwrap() + 1;
    assert!(err.contains(&format!("line {dup_line}: duplicate entry")), "{err}");
    assert!(err.contains(&format!("first defined at line {first_line}")), "{err}");

    let clean = fixture("reference-catalog.csv");
    let out = run(&["validate", "--catalog", clean.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("20 entries, 0 errors"));
}

fn compare(year_a: &str, year_b: &str) -> Output {
    let dataset = cases();
    run(&[
        "compare",
        "--dataset",
        dataset.to_str().unwrap(),
        "--scope",
        "municipality:150080",
        "--year-a",
        year_a,
        "--year-b",
        year_b,
        "--sections",
        "V",
    ])
}

#[test]
fn compare_projection() {
    let out = compare("2016", "2020");
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = stdout(&out);
    let consulta = text.lines().find(|l| l.contains("03.01.01.007-2")).unwrap();
    assert!(consulta.starts_with("V,03.01.01.007-2,Consulta Médica Cardiologia,MATCHED,30650,31301,+651,"), "{consulta}");
}

#[test]
fn compare_identical_years_is_all_zero() {
    let out = compare("2016", "2016");
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert_eq!(text.lines().count(), 13);
    for line in text.lines().skip(1) {
        assert!(line.contains(",MATCHED,") && line.contains(",0,0.00,"), "{line}");
    }
}

#[test]
fn compare_unavailable_year() {
    let out = compare("2016", "2030");
    assert_eq!(out.status.code(), Some(2));
    assert!(out.stdout.is_empty());
}

#[test]
fn output_matches_service_export_bytes() {
    let at = Utc.with_ymd_and_hms(2024, 6, 1, 12, 0, 0).unwrap();
    let service = Service::open(ServiceConfig::new("admin", "pw"), Arc::new(ManualClock::new(at))).unwrap();
    let admin = service.authenticate(&service.login("admin", "pw").unwrap()).unwrap();
    let submission = service.submit_dataset(admin, CASE_DEMOGRAPHICS_CSV, None).unwrap();
    service.review_dataset(admin, submission.id, Decision::Approve, None).unwrap();
    let request = SearchRequest {
        tier: Tier::Premium,
        scope: Scope::municipality(150080),
        year: 2016,
        sections: Some(vec![Section::V, Section::VI]),
        payment_authorized: true,
    };
    let id = service.execute_search(admin, &request).unwrap().report.id;

    for (format, flag) in [(ExportFormat::Csv, "csv"), (ExportFormat::Json, "json")] {
        let exported = service.export_report(admin, id, format).unwrap();
        let out = report("municipality:150080", "2016", &["--sections", "V,VI", "--format", flag, "--generated-at", &at.to_rfc3339()]);
        assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
        assert_eq!(out.stdout, exported, "{flag} bytes differ");
    }
}

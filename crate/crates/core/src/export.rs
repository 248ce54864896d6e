//! Byte-stable report serializers shared by the HTTP service and the CLI.

use crate::engine::{DeltaReport, Report};

pub const REPORT_CSV_HEADER: [&str; 7] = [
    "section",
    "code",
    "name",
    "annual_max",
    "monthly_mean",
    "unit_price",
    "monthly_cost",
];

pub const DELTA_CSV_HEADER: [&str; 12] = [
    "section",
    "code",
    "name",
    "status",
    "annual_max_a",
    "annual_max_b",
    "annual_max_delta",
    "annual_max_change_pct",
    "monthly_cost_a",
    "monthly_cost_b",
    "monthly_cost_delta",
    "monthly_cost_change_pct",
];

fn group_thousands(value: u64) -> String {
    let digits = value.to_string();
    let mut out = String::with_capacity(digits.len() + digits.len() / 3);
    for (i, ch) in digits.chars().enumerate() {
        if i > 0 && (digits.len() - i).is_multiple_of(3) {
            out.push('.');
        }
        out.push(ch);
    }
    out
}

/// Brazilian currency rendering of a cent amount: `R$ 3.831,26`.
pub fn format_brl(cents: u64) -> String {
    format!("R$ {},{:02}", group_thousands(cents / 100), cents % 100)
}

/// Signed variant for deltas: `+R$ 1,00`, `-R$ 1,00`, `R$ 0,00`.
pub fn format_brl_signed(cents: i64) -> String {
    match cents.signum() {
        1 => format!("+{}", format_brl(cents.unsigned_abs())),
        -1 => format!("-{}", format_brl(cents.unsigned_abs())),
        _ => format_brl(0),
    }
}

fn signed(value: i64) -> String {
    if value > 0 {
        format!("+{value}")
    } else {
        value.to_string()
    }
}

fn opt<T>(value: Option<T>, render: impl FnOnce(T) -> String) -> String {
    value.map(render).unwrap_or_default()
}

fn finish_csv(writer: csv::Writer<Vec<u8>>) -> Vec<u8> {
    writer.into_inner().expect("in-memory csv flush")
}

/// Report rows as CSV. Counts are plain integers; money columns use
/// [`format_brl`]; fields a row does not carry are empty.
pub fn report_csv(report: &Report) -> Vec<u8> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer.write_record(REPORT_CSV_HEADER).expect("in-memory csv write");
    for row in &report.rows {
        writer
            .write_record([
                row.section.to_string(),
                row.code.clone(),
                row.name.clone(),
                row.annual_max.to_string(),
                opt(row.monthly_mean_display, |v| v.to_string()),
                opt(row.unit_price_cents, format_brl),
                opt(row.monthly_cost_cents, format_brl),
            ])
            .expect("in-memory csv write");
    }
    finish_csv(writer)
}

/// Pretty-printed JSON of the full report, newline-terminated.
pub fn report_json(report: &Report) -> Vec<u8> {
    let mut bytes = serde_json::to_vec_pretty(report).expect("report serializes");
    bytes.push(b'\n');
    bytes
}

pub fn delta_csv(delta: &DeltaReport) -> Vec<u8> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer.write_record(DELTA_CSV_HEADER).expect("in-memory csv write");
    for row in &delta.rows {
        let status = match row.status {
            crate::engine::DeltaStatus::Matched => "MATCHED",
            crate::engine::DeltaStatus::OnlyInA => "ONLY_IN_A",
            crate::engine::DeltaStatus::OnlyInB => "ONLY_IN_B",
        };
        writer
            .write_record([
                row.section.to_string(),
                row.code.clone(),
                row.name.clone(),
                status.to_string(),
                opt(row.annual_max_a, |v| v.to_string()),
                opt(row.annual_max_b, |v| v.to_string()),
                opt(row.annual_max_delta, signed),
                row.annual_max_change_pct.clone().unwrap_or_default(),
                opt(row.monthly_cost_cents_a, format_brl),
                opt(row.monthly_cost_cents_b, format_brl),
                opt(row.monthly_cost_delta_cents, format_brl_signed),
                row.monthly_cost_change_pct.clone().unwrap_or_default(),
            ])
            .expect("in-memory csv write");
    }
    finish_csv(writer)
}

pub fn delta_json(delta: &DeltaReport) -> Vec<u8> {
    let mut bytes = serde_json::to_vec_pretty(delta).expect("delta serializes");
    bytes.push(b'\n');
    bytes
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn brl_formatting() {
        assert_eq!(format_brl(383_126), "R$ 3.831,26");
        assert_eq!(format_brl(1000), "R$ 10,00");
        assert_eq!(format_brl(10_467_329), "R$ 104.673,29");
        assert_eq!(format_brl(7), "R$ 0,07");
        assert_eq!(format_brl(0), "R$ 0,00");
        assert_eq!(format_brl(12_345_678_900), "R$ 123.456.789,00");
        assert_eq!(format_brl_signed(-105), "-R$ 1,05");
        assert_eq!(format_brl_signed(105), "+R$ 1,05");
        assert_eq!(format_brl_signed(0), "R$ 0,00");
    }
}

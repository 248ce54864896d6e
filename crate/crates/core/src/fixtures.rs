//! Bundled reference data.

use crate::catalog::{parse_catalog_text, ParameterCatalog};

/// Catalog rows for the obstetric/pediatric/adult bed reference populations
/// (section VI) and the cardiology line items (section V).
pub const REFERENCE_CATALOG_CSV: &str = include_str!("../fixtures/reference-catalog.csv");

/// Long-format demographics for the bundled case-study municipalities.
pub const CASE_DEMOGRAPHICS_CSV: &str = include_str!("../fixtures/demographics-cases.csv");

/// The two-row-header sample in the wide layout.
pub const SAMPLE_WIDE_CSV: &str = include_str!("../fixtures/sample-wide.csv");

pub fn reference_catalog() -> ParameterCatalog {
    parse_catalog_text(REFERENCE_CATALOG_CSV).expect("bundled catalog is valid")
}

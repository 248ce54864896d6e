//! Parametric health-resource planning.
//!
//! * [`catalog`]: ordinance line items (rates, bases, SUS unit prices) as data.
//! * [`dataset`]: demographic files, the state/region/municipality index,
//!   year availability and scope resolution.
//! * [`engine`]: exact report arithmetic and scenario comparison.
//! * [`export`]: CSV/JSON serializers shared by every front-end.

pub mod amount;
pub mod catalog;
pub mod dataset;
pub mod engine;
pub mod export;
pub mod fixtures;

pub use amount::{AmountError, ExactAmount};
pub use catalog::{
    load_catalog, validate_entry, BaseKind, BaseSpec, CatalogError, OutputKind, ParameterCatalog, ParameterEntry, Section,
    Violation,
};
pub use dataset::{
    build_index, parse_long, parse_wide, DatasetError, DatasetFormat, DatasetIndex, DemographicRecord, Scope, ScopeDemographics,
    ScopeError, ScopeKind,
};
pub use engine::{build_report, compare_reports, compute_row, DeltaReport, EngineError, Report, ReportRow, Tier};

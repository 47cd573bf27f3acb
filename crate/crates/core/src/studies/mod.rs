//! Configuration-driven convergence studies: TOML configs, the study
//! runner, order fits and CSV reports.

mod config;
mod fit;
mod report;
mod runner;
mod scenarios;

pub use config::{
    dyadic, parse_config, EnergySpec, ExtrapolationSpec, FieldsSpec, LoadFieldSpec, LoadSpec, OutputSpec,
    QuadratureSpec, SamplingSpec, ScheduleSpec, StudyConfig, StudyKind, ThicknessSpec, Tolerances,
};
pub use fit::{fit_order, richardson, OrderFit};
pub use report::{
    format_float, read_rows, read_summary, report_csv, summary_path, summary_toml, write_report, Check,
    Extrapolation, NamedFit, ReportRow, RowStatus, Series, StudyReport, StudyStatus, Summary, CSV_HEADER,
};
pub use runner::{brute_force_q2, run_study};
pub use scenarios::{
    builtin_scenario, cylinder, scenario_names, second_order_field, sphere_cap, variable_thickness, SCENARIOS,
};

//! Run configuration, reference tables and reports.

pub mod commands;
pub mod compare;
pub mod config;
pub mod sweep;
pub mod tables;

pub use commands::{figure1_series, Outcome};
pub use compare::{compare_pde_ode, compare_runs, CompareReport, CompareRow};
pub use config::{Mode, RunConfig, Velocity};
pub use sweep::{fit_slope, sweep_tau, sweep_taus, SweepReport};
pub use tables::{judge, reproduce_table, Check, TableEntry, TableReport, TableRef};

//! Energy-aware planning and simulation of multi-UAV power-line inspection
//! missions.
//!
//! A [`grid::GridModel`] describes towers, spans, charging stations and the
//! terrain. [`planner`] turns it and a fleet of [`energy::PlatformSpec`]s
//! into routes that minimise the time until the last span is inspected,
//! recharging from line-mounted stations where needed. [`oracle`] solves
//! small instances exactly, [`sim`] replays plans under wind and seeded
//! anomalies, and [`report`] summarises the outcome.

pub mod cli;
pub mod energy;
pub mod format;
pub mod geometry;
pub mod grid;
pub mod oracle;
pub mod planner;
pub mod report;
pub mod sim;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/grid.md")]
    mod grid {}
    #[doc = include_str!("../../../book/src/energy.md")]
    mod energy {}
    #[doc = include_str!("../../../book/src/planning.md")]
    mod planning {}
    #[doc = include_str!("../../../book/src/oracle.md")]
    mod oracle {}
    #[doc = include_str!("../../../book/src/simulation.md")]
    mod simulation {}
    #[doc = include_str!("../../../book/src/reports.md")]
    mod reports {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}

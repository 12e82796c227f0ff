//! Experiment orchestration: configuration, seeded parallel sweeps and
//! result tables.

mod config;
mod output;
mod run;

pub use config::{ExperimentConfig, RepetitionKind, Scheme};
pub use output::{
    bound_csv, bound_extra, results_csv, sidecar, sidecar_path, slot_study_csv, write_outputs, BOUND_HEADER,
    RESULT_HEADER, SLOT_HEADER,
};
pub use run::{
    ptilde_table, run_bound, run_experiment, run_slot_study, with_workers, BoundRow, BoundStudy, ResultRow,
    SlotStudyRow,
};

#[cfg(test)]
mod tests;

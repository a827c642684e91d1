//! Synthetic data, dependence diagnostics and reference values.

pub mod chi;
pub mod experiment;
pub mod gumbel;
pub mod reference;

pub use chi::chi_measure;
pub use experiment::{
    run_mu_experiment, run_trm_experiment, ConditioningPoint, ExperimentConfig, ExperimentResults,
    MarginSource, MuExperimentConfig, Scope,
};
pub use gumbel::{gumbel_sample, GumbelCopula, SynthConfig};
pub use reference::{
    dcte_reference, es_student_closed, mes_reference, mu_reference, RefMethod, ReferenceValue,
};

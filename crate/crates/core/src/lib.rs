//! Chemical abstract machine engine for the cross-modal neural cognitive
//! computing (CNCC) framework.
//!
//! * [`term`]: atoms, molecules (`<>`) and solutions (`//`).
//! * [`parser`]: the `.cham` surface syntax.
//! * [`engine`]: firing, scheduled runs, state-space exploration.
//! * [`model`]: the built-in learning/recognition programs and static checks.
//! * [`stages`]: numeric reference stages bound to the six rules.

pub mod engine;
pub mod gate;
pub mod model;
pub mod parser;
pub mod program;
pub mod stages;
pub mod term;

pub use engine::{
    check_confluence, check_termination, enabled_rules, explore, fire, run, run_from, BoundExceeded,
    ChamState, Confluence, EngineError, RunConfig, SchedulerPolicy, StateGraph, Termination, Trace,
};
pub use gate::{endocrine_gate_eval, HormoneGate, HormoneLevels};
pub use model::{
    builtin_cncc_learning, builtin_cncc_recognition, dataflow_closure_check, dependency_order,
    ClosureReport, CnccFramework, CyclicDependency,
};
pub use parser::{parse_molecule, parse_program, render_program, ParseError, SourceSpan};
pub use program::{ChamProgram, Declarations, ReactionRule};
pub use term::{
    compose, multiset_equal, solution_union, Atom, DataKind, DataSymbol, Hormone, Molecule, Processor,
    Solution,
};
pub use stages::pipeline::{run_pipeline, PipelineConfig, PipelineMetrics};
pub use stages::{derive_seed, gen_synthetic_dataset, Scalar, StageError};

pub type Matrix = stages::Matrix<f64>;
pub type SparseMap = stages::SparseMap<f64>;
pub type MediaSample = stages::MediaSample<f64>;
pub type SaliencyPair = stages::SaliencyPair<f64>;
pub type SenseFeatures = stages::SenseFeatures<f64>;
pub type PerceptFeatures = stages::PerceptFeatures<f64>;
pub type SemanticDecision = stages::SemanticDecision<f64>;
pub type RlFeedback = stages::RlFeedback<f64>;
pub type FeedbackBundle = stages::FeedbackBundle<f64>;
pub type DlModel = stages::DlModel<f64>;
pub type MemoryHistory = stages::MemoryHistory<f64>;

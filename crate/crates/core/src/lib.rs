//! Spatial-plan-conditioned visuomotor stack: a synthetic manipulation
//! environment, a structured plan-table DSL, a conditional video diffusion
//! model, a diffusion action policy, frame-similarity goal tracking, and the
//! closed-loop feedback/replanning pipeline that ties them together.

pub mod util;

pub mod envsim;
pub mod spatialplan;

pub mod nn;
pub mod conditioning;
pub mod videodiff;
pub mod actionpolicy;

pub mod framematch;
pub mod datasetkit;
pub mod pipeline;
pub mod harness;

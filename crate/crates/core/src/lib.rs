//! Checking validation obligations over refinement-based state machine
//! models.

pub mod error;
pub mod model;
pub mod explore;
pub mod ltl;
pub mod po;
pub mod vo;
pub mod views;
pub mod loader;

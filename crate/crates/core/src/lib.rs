//! Invariant-based design of single-ion extraction from a Paul trap, with
//! phase-space verification under ideal and noisy electrode voltages and
//! downstream beam-spot prediction.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod beamline;
pub mod design;
pub mod dynamics;
pub mod electrodes;
pub mod numerics;
pub mod physics;
pub mod poly;
pub mod scenarios;

#[cfg(test)]
mod testutil;

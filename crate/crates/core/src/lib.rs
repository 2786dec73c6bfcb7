//! Core algorithms for imagining how a humanoid agent sits on an unseen
//! chair mesh and for planning the full seat-the-bear pipeline in simulation.
//!
//! The crate is `no_std`-compatible (with `alloc`); everything that touches
//! files, clocks or threads lives in the companion `sitkit` crate.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod assist;
pub mod chairgen;
pub mod geom;
pub mod imagine;
pub mod nav;
pub mod rng;
pub mod sam;
pub mod sim;
pub mod wholebody;

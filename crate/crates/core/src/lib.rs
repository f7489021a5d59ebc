//! Age-of-information-aware scheduling of networked control loops over a
//! shared lossy channel.
//!
//! The crate is organized bottom-up: [`timing`] tracks generation, reception
//! and utilization timestamps; [`channel`] produces block-fading losses;
//! [`control`] holds the LQG plant, estimator and Riccati synthesis;
//! [`penalty`] maps ages to expected estimation error; [`scheduler`] picks the
//! transmitting sub-system; [`sim`] runs the slot loop; [`sweep`] and
//! [`config`] drive experiments and write CSVs. [`hopdist`] is standalone.

pub mod channel;
pub mod config;
pub mod control;
pub mod error;
pub mod hopdist;
pub mod penalty;
pub mod scheduler;
pub mod seeding;
pub mod sim;
pub mod sweep;
pub mod timing;

pub use error::{Error, Result};

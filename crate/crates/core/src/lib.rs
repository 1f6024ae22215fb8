//! Measuring how parliamentary agendas respond to political events.
//!
//! The pipeline runs in stages, each with its own module:
//!
//! * [`record_parser`] turns column-tagged transcript pages into speaker turns;
//! * [`corpus`] builds day-level documents, a vocabulary and sitting periods;
//! * [`topic_models`] fits LDA and correlated topic models;
//! * [`diagnostics`] scores candidate topic counts;
//! * [`cap_mapping`] groups topics into policy-agenda categories;
//! * [`event_model`] relates daily category shares to prime ministers and elections.

pub mod cap_mapping;
pub mod corpus;
pub mod diagnostics;
pub mod error;
pub mod event_model;
pub mod matrix;
pub mod record_parser;
pub mod rng;
pub mod stats;
pub mod topic_models;

pub use corpus::{DocKey, DocTermMatrix, SittingCalendar, Vocabulary};
pub use error::{Error, Result};
pub use matrix::Matrix;
pub use record_parser::{Chamber, SpeakerTurn, TidyRow};

//! Interactive speaker recognition (ISR) laboratory.
//!
//! A game in which a recognizer may ask a speaker to utter a handful of words
//! before naming them among `K` enrolled guests. The crate provides:
//!
//! - [`corpus`]: the embedding world (synthetic generator and JSONL ingestion),
//! - [`nn`]: a small hand-rolled differentiable layer set (MLP, biLSTM, Adam),
//! - [`game`]: the episodic environment and word-selection policies,
//! - [`guesser`]: attention-pooled speaker classifier,
//! - [`enquirer`]: recurrent word-selection policy trained with PPO,
//! - [`eval`]: baselines, sweeps and the Jaccard diversity index.

pub mod corpus;
pub mod enquirer;
pub mod error;
pub mod eval;
pub mod game;
pub mod guesser;
pub mod nn;
pub mod rng;

pub use error::{Error, Result};

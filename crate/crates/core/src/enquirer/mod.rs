//! Word-selection policy and its PPO trainer.
//!
//! The policy encodes `[start, x_1, .., x_t]` with a bidirectional LSTM,
//! concatenates the last position's state with the mean guest print, and
//! maps that through one MLP head to word logits and another to a value
//! estimate. Already requested words are masked to probability zero.

mod model;
mod ppo;

pub use model::{
    sample_action, EnquirerCache, EnquirerModel, EnquirerPolicy, EnquirerSpec, PolicyOutput,
    SampleMode,
};
pub use ppo::{
    compute_gae, evaluate_enquirer, ppo_ratios, ppo_update, train_enquirer,
    train_enquirer_with_reward, transition_loss, write_word_log, EnquirerCurve, EnquirerCurveRow,
    EnquirerEval, EpisodeReward, GuesserReward, LossComponents, PpoConfig, TargetWordReward,
    Transition, TransitionLoss,
};

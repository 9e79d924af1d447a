//! Measurement harnesses: the prompt-distinguishing privacy game and
//! utility evaluation against mock or real models.

pub mod eval;
pub mod game;
pub mod leakage;
pub mod metrics;
pub mod oracle;
pub mod stats;

pub use eval::{run_eval, EvalSample, Metric, QualityReport};
pub use game::{apply_ner_leakage, play_game, play_pair, Adversary, FirstByte, GamePair, GameResult, LikelihoodRatio};
pub use leakage::{leakage, LeakageDescriptor};
pub use metrics::{consistency, order_preservation_probability, relative_error};
pub use oracle::{LlmOracle, MockOracle, MockTask, Oracle};

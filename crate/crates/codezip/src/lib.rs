//! codezip compresses source-code examples before they are spliced into
//! retrieval-augmented prompts.
//!
//! The pipeline has two routes to a compressed example:
//!
//! 1. An exact route: [`lexer`] tokenizes Java-like source losslessly,
//!    [`typer`] assigns each countable token one of five taxonomy types,
//!    and [`compressor`] greedily deletes tokens in priority order until a
//!    requested compression ratio is met. Per-task removal priorities come
//!    from [`priority`] (ablation-derived or shipped defaults).
//! 2. A learned route: [`dataset`] sweeps the exact route over a ratio grid
//!    to build training pairs, and [`neuralzip`] trains a small
//!    copy-enhanced encoder-decoder that reproduces the exact route on
//!    arbitrary input, including code the exact route refuses to parse.
//!
//! [`prompt`] holds the retrieval side: a BM25-indexed knowledge base,
//! task prompt templates, and the evaluation metrics. [`lm`] provides the
//! base-LM clients (HTTP chat-completions plus deterministic stubs).

pub mod compressor;
pub mod dataset;
pub mod error;
pub mod lexer;
pub mod lm;
pub mod neuralzip;
pub mod priority;
pub mod prompt;
pub mod synth;
pub mod typer;

pub use error::{Error, Result};
pub use priority::Task;

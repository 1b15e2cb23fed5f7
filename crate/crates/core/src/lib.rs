//! Lexical semantic change detection across time-sliced corpora.
//!
//! Three method families are supported:
//!
//! - count-based ([`ppmi`]) and predictive ([`sgns`]) embeddings trained per
//!   time slice, aligned with orthogonal Procrustes ([`align`]) and compared
//!   with cosine distance ([`linalg::cosine_distance`]);
//! - contextual per-instance vectors produced by an external transformer and
//!   ingested from files ([`contextual`]);
//! - zero-shot verdicts from a chat-completion LLM backend ([`llm`]).
//!
//! All methods are evaluated at corpus level (Pearson correlation against
//! graded annotations) and, where they support it, at instance level
//! (binary classification against gold labels). See [`eval`].
//!
//! Label convention: `1` means the target word keeps its meaning, `0` means
//! its meaning changed. For F1 the *changed* class (`0`) is the positive class.

pub mod align;
pub mod contextual;
pub mod corpus;
mod error;
pub mod eval;
pub mod linalg;
pub mod llm;
pub mod pipeline;
pub mod ppmi;
pub mod sgns;

pub use error::{Error, Result};

//! Learned sparse retrieval without a query encoder.
//!
//! Documents are sparse vectors over a WordPiece vocabulary. Queries are
//! encoded by tokenizing the text and looking each token up in a
//! precomputed score table, so no model runs at query time. The table is
//! fitted offline by gradient descent against teacher scores
//! ([`fitter`]), and retrieval runs over a pruned, clustered inverted
//! index with block-max skipping ([`index`], [`search`]).

pub mod encoder;
pub mod eval;
pub mod fitter;
pub mod index;
pub mod search;
pub mod sparse;
pub mod synthetic;

mod ioutil;

pub use encoder::{EmbeddingMatrix, IdfTable, ScoreTable, TokenSequence, TokenizerVocab};
pub use fitter::{FitConfig, FitOutcome, FitState, LossKind, Regularizer, TrainTriple};
pub use index::{BuildConfig, InvertedIndex};
pub use search::{SearchParams, TopKResult};
pub use sparse::{Collection, CollectionStats, SparseVector, TokenId};

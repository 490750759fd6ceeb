//! Unreferenced relatedness scorer `s_U(q, r)`.
//!
//! Query and reply are each read by their own bidirectional GRU; the final
//! states of both directions form the utterance encodings `q` and `r`. An MLP
//! over `[q; r; qᵀ M r]` with a sigmoid output yields a score in `(0, 1)`.
//! The network is trained without human labels: each groundtruth reply must
//! outscore a randomly drawn reply from the corpus by a margin.

mod checkpoint;
mod gru;
mod model;
mod params;
mod train;

pub use checkpoint::{
    load_checkpoint, read_checkpoint, save_checkpoint, Checkpoint, FORMAT_VERSION, MAGIC,
};
pub use gru::{gru_step, GruParams};
pub use model::{encode, unreferenced_score};
pub use params::{BiGruEncoder, ScorerParams, TENSOR_COUNT};
pub use train::{
    compute_gradients, margin_loss, sample_negative, train, AdamState, EpochStats, Gradients,
    TrainConfig, TrainedScorer, TrainingLog, Triple, HELDOUT_FRACTION, NEGATIVE_RETRIES,
};

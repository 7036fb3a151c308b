//! Data-parallel wavelet neural network engine.
//!
//! A single-hidden-layer network whose hidden nodes apply dilated and
//! translated wavelet activations (Morlet or Gaussian) to weighted input
//! sums. Training is epoch-synchronous data-parallel SGD with momentum:
//! every epoch each data partition refines a private copy of one broadcast
//! model, a barrier collects the copies, and their element-wise average is
//! re-broadcast. A sliding-window streaming mode trains the same model
//! incrementally over micro-batches, testing each batch before it is ever
//! trained on.
//!
//! The crate is organized around the pipeline:
//!
//! * [`model`] - parameters, activations, forward pass, losses, analytic
//!   gradients, momentum updates
//! * [`train`] - partitioning, the parallel epoch loop, model averaging,
//!   prediction
//! * [`stream`] - the micro-batch window harness
//! * [`metrics`] - MSE, confusion rates, rank-based AUC
//! * [`data`] - CSV ingestion, normalization, splitting, Welch-t feature
//!   ranking, synthetic generators
//! * [`io`] - the `SPWNN v1` model text format
//!
//! Everything is deterministic given a seed: repeated runs, and runs with
//! different worker-thread counts, produce bit-identical models.

pub mod activation;
pub mod data;
pub mod error;
pub mod io;
pub mod matrix;
pub mod metrics;
pub mod model;
pub mod rng;
pub mod stream;
pub mod train;

pub use activation::{sigmoid, ActivationKind};
pub use error::{Error, Result};
pub use matrix::Matrix;
pub use metrics::{auc, confusion_rates, evaluate, ConfusionRates, EvalReport};
pub use model::{
    apply_update, backward, init_model, loss, GradientSet, Hyperparams, MomentumState, TaskKind,
    WnnModel, EPS_DILATION, EPS_LOG,
};
pub use stream::{
    run_stream, run_stream_with, split_into_batches, summarize, MicroBatch, StreamOptions,
    StreamSummary, StreamWindow, WindowReport,
};
pub use train::{
    average_models, local_epoch, partition_data, predict, speedup, train, train_from, train_with,
    EpochRecord, Partition, TrainOptions, TrainReport,
};
pub use data::{
    load_csv, load_csv_features, normalize, split, synth_classification, synth_regression,
    t_value_select, welch_t_values, write_csv, ColumnRef, CsvLoad, Dataset, NormStats, SplitPair,
};

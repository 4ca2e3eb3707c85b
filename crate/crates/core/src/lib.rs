//! Forward-only analytic learning for exemplar-free online class-incremental
//! learning.
//!
//! The pipeline has two halves. A frozen encoder ([`features`]) averages
//! per-block backbone features and expands them with a fixed random
//! projection followed by a sigmoid. An analytic classifier ([`classifier`])
//! is then trained by recursive least squares, one mini-batch at a time,
//! with no gradients and no stored samples; after any number of batches its
//! weights equal the ridge-regression solution over all data seen so far.
//!
//! [`harness`] drives the one-pass task protocol over feature files
//! ([`io`]) and reports accuracy and forgetting ([`metrics`]);
//! [`verification`] checks the recursive/joint equivalence and per-update
//! cost; [`synthetic`] produces fixtures.
//!
//! ```
//! use foal::classifier::ClassifierState;
//! use foal::features::ActivationBatch;
//!
//! let mut clf = ClassifierState::new(2, 1.0).unwrap();
//! let x = ActivationBatch::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
//! clf.update(&x, &vec![7, 9].into()).unwrap();
//! assert_eq!(clf.predict(&x).unwrap().class_ids, vec![7, 9]);
//! ```

pub mod classifier;
pub mod features;
pub mod harness;
pub mod io;
pub mod metrics;
pub mod synthetic;
pub mod verification;

pub use classifier::{closed_form, ClassId, ClassifierError, ClassifierState, LabelBatch, Prediction};
pub use features::{
    encode_batch, fuse_blocks, init_projection, smooth_project, ActivationBatch, BlockFeatureSet,
    EncoderConfig, FeatureError, ProjectionSpec,
};
pub use harness::{evaluate, run_experiment, Experiment, HarnessError, MetricsReport, RunConfig};
pub use metrics::{average_accuracy, forgetting, AccuracyMatrix, MetricsError};

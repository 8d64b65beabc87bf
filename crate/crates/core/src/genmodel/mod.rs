//! The built-in generator and discriminators: a smoothed n-gram model with
//! temperature, linear k-gram scorers, adversarial refinement, and
//! selection of the best snapshot by holdout recovery.

mod ngram;
mod scorer;
mod train;

pub use ngram::NGramGenerator;
pub use scorer::{sigmoid, softplus, FeatureScorer, SparseFeatures, PROB_EPS};
pub use train::{
    refine_generator, select_model, train_discriminator, train_model, DiscriminatorLoss, Snapshot, TrainConfig,
    TrainedModel,
};

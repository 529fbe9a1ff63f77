//! Dense feed-forward networks with analytic gradients.

mod adam;
mod checkpoint;
mod loss;
mod network;

pub use adam::{adam_apply, AdamConfig, AdamState};
pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use loss::{constant_one_hot, cross_entropy, one_hot, PROB_CLAMP};
pub use network::{
    backward, forward, softmax_rows, Activation, Architecture, Backprop, DenseLayer, ForwardCache,
    GradBundle, LayerShape, Mode, NetworkParams,
};

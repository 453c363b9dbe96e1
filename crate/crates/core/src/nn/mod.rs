//! Small neural toolkit: dense rectifier networks with analytic
//! backpropagation, Adam, diagonal-Gaussian head utilities and a bit-exact
//! checkpoint format. Everything is `f64`.

mod adam;
pub mod checkpoint;
mod gaussian;
mod mlp;

pub use adam::{clip_grad_norm, Adam, DEFAULT_LEARNING_RATE};
pub use checkpoint::{Checkpoint, Tensor};
pub use gaussian::{component_entropy, entropy, log_prob, GaussianHead};
pub use mlp::{Activations, Mlp};

/// Hidden width of both actor and critic.
pub const HIDDEN: usize = 256;

//! Dense-network kernel: MLP forward/backward, categorical policy head,
//! Adam and global-norm clipping, all in `f64`.

pub mod adam;
pub mod categorical;
pub mod checkpoint;
pub mod mlp;

pub use adam::{clip_global_norm, global_norm, Adam, AdamConfig};
pub use categorical::Categorical;
pub use mlp::{num_params, ForwardCache, Mlp};

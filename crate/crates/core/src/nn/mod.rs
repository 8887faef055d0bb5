//! Minimal exact-gradient neural toolkit: dense tensors, a reverse-mode
//! tape, a named parameter store, and AdamW.

pub mod optim;
pub mod params;
pub mod tape;
pub mod tensor;

pub use optim::{AdamW, AdamWConfig};
pub use params::{tensor_checksum, ParamStore};
pub use tape::{Gradients, NodeId, Tape};
pub use tensor::Tensor;

//! Minimal CPU neural-network substrate: a flat f64 parameter store with
//! named regions, explicit forward/backward kernels for the handful of layer
//! types the models need, AdamW, and EMA. Backward passes are verified
//! against central finite differences in the tests.

pub mod blocks;
pub mod gradcheck;
pub mod layers;
pub mod optim;
pub mod store;

pub use layers::Planes;
pub use optim::{ema_update, AdamW};
pub use store::{Handle, ParamStore};

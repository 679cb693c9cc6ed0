//! Conditional denoising diffusion over 7 future frames given the initial
//! frame and the global condition: schedules, forward noising, training loss,
//! EMA'd training loop, deterministic DDIM sampling with classifier-free
//! guidance, and input masking for occlusion robustness.

pub mod mask;
pub mod model;
pub mod sample;
pub mod schedule;
pub mod train;

pub use mask::mask_input;
pub use model::{VideoDenoiser, VideoModelConfig};
pub use sample::{ddim_sample, ddim_timesteps, guided_eps};
pub use schedule::{cosine_beta_schedule, linear_beta_schedule, DiffusionSchedule};
pub use train::{train_video, VideoSample, VideoTrainConfig};

use thiserror::Error;

use crate::envsim::Frame;

/// Frames per clip: one observation plus 7 generated futures.
pub const CLIP_LEN: usize = 8;
/// Future frames per clip.
pub const FUTURE_FRAMES: usize = 7;

#[derive(Debug, Error)]
pub enum DiffusionError {
    #[error("invalid schedule: {0}")]
    Schedule(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("clip must hold exactly {CLIP_LEN} frames, got {0}")]
    ClipLength(usize),
    #[error("training diverged at step {step}: loss {loss}")]
    Diverged { step: u64, loss: f64 },
    #[error("empty training dataset")]
    EmptyDataset,
}

/// One observed frame plus 7 future frames.
#[derive(Debug, Clone, PartialEq)]
pub struct VideoClip {
    frames: Vec<Frame>,
}

impl VideoClip {
    pub fn new(frames: Vec<Frame>) -> Result<VideoClip, DiffusionError> {
        if frames.len() != CLIP_LEN {
            return Err(DiffusionError::ClipLength(frames.len()));
        }
        let (h, w) = (frames[0].height, frames[0].width);
        for f in &frames {
            if (f.height, f.width) != (h, w) {
                return Err(DiffusionError::Shape("clip frames differ in resolution".into()));
            }
        }
        Ok(VideoClip { frames })
    }

    pub fn frames(&self) -> &[Frame] {
        &self.frames
    }

    pub fn observation(&self) -> &Frame {
        &self.frames[0]
    }

    pub fn future(&self) -> &[Frame] {
        &self.frames[1..]
    }

    /// Goal frame g in 1..=7.
    pub fn goal(&self, goal_index: usize) -> &Frame {
        assert!((1..=FUTURE_FRAMES).contains(&goal_index));
        &self.frames[goal_index]
    }
}

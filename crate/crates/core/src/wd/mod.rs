//! Wavelet deconvolution: a convolution layer whose Mexican-hat kernels are
//! parametrized only by their scales, trained end to end by backpropagation.
//!
//! [`layer`] holds the forward transform and the analytic scale gradient,
//! [`net`] the pooling + dense classifier head, [`batch`] the speaker-paired
//! chunk sampler and [`train`] the gradient-descent loop.

pub mod batch;
pub mod layer;
pub mod net;
pub mod train;

pub use batch::{sample_batch, BatchSpec, Chunk, Dataset, Utterance};
pub use layer::{
    didactic_init, update_scales, wd_backward, wd_forward, wd_kernel, wd_kernel_scale_derivative, ScaleVector,
    WdActivations, WdKernelBank, DEFAULT_KERNEL_LEN, DEFAULT_S_MAX, DEFAULT_S_MIN,
};
pub use net::{pool, pool_backward, NetGrads, Pooled, ToyNet};
pub use train::{chunk_utterance, score_utterance, train, EpochRecord, TrainConfig, TrainOutcome};

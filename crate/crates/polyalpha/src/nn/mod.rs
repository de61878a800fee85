//! From-scratch LSTM sequence model.
//!
//! One LSTM cell reads the one-hot input sequence; a fully-connected
//! softmax head reads the hidden state at every step. The loss is the
//! squared Euclidean distance between the softmax distribution and the
//! one-hot target, averaged over time steps. Gradients are exact
//! backpropagation through time, including the softmax Jacobian of the
//! squared-distance head; optimization is bias-corrected Adam.
//!
//! Training runs in `f32`; gradient verification against finite
//! differences runs the same generic code in `f64`.

mod adam;
mod batch;
mod fdcheck;
mod kernels;
mod loss;
mod model;

pub use adam::{adam_step, AdamState};
pub use batch::{batch_forward_backward, evaluate_samples, EvalAccum};
pub use fdcheck::{finite_difference_check, FdCheckConfig, FdCheckReport, FD_TOLERANCE};
pub use kernels::{axpy, dot8};
pub use loss::{accuracy, backward, l2_loss, region_counts, Region};
pub use model::{
    forward, lstm_step, xavier_init, ForwardCache, GateActivations, Gradients, ModelParams,
    ModelState, TensorSet, OUT_WIDTH,
};

/// Floating-point element type for model arithmetic.
pub trait Scalar:
    num_traits::Float + std::iter::Sum + std::fmt::Debug + std::fmt::Display + Send + Sync + 'static
{
    fn from_f64(x: f64) -> Self;
    fn to_f64(self) -> f64;
}

impl Scalar for f32 {
    #[inline]
    fn from_f64(x: f64) -> Self {
        x as f32
    }
    #[inline]
    fn to_f64(self) -> f64 {
        self as f64
    }
}

impl Scalar for f64 {
    #[inline]
    fn from_f64(x: f64) -> Self {
        x
    }
    #[inline]
    fn to_f64(self) -> f64 {
        self
    }
}

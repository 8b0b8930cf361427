//! Attribute-based multi-task image classification with gradient
//! explanations.
//!
//! A shared convolutional trunk feeds a category head and one binary head per
//! attribute. Predicted attributes and the category logits are embedded and
//! re-classified by an integrated head, and the final logits mix both. The
//! gradient of a class score with respect to the attribute embeddings ranks
//! attributes for a textual explanation, Grad-CAM shows where the network
//! looks, and the foreground attention rate measures how much of that
//! attention lands on the object.

pub mod data;
pub mod error;
pub mod explain;
pub mod far;
pub mod gradcam;
pub mod gradcheck;
pub mod io;
mod kernels;
pub mod model;
pub mod nn;
pub mod parallel;
pub mod scalar;
pub mod tape;
pub mod tensor;
pub mod train;

pub use error::{Error, Result};
pub use model::{EatConfig, EatModel, Mode};
pub use scalar::Scalar;
pub use tape::{Tape, Var};
pub use tensor::Tensor;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../README.md")]
    mod readme {}
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/autodiff.md")]
    mod autodiff {}
    #[doc = include_str!("../../../book/src/model.md")]
    mod model {}
    #[doc = include_str!("../../../book/src/training.md")]
    mod training {}
    #[doc = include_str!("../../../book/src/attribution.md")]
    mod attribution {}
    #[doc = include_str!("../../../book/src/grad_cam.md")]
    mod grad_cam {}
    #[doc = include_str!("../../../book/src/far.md")]
    mod far {}
    #[doc = include_str!("../../../book/src/synthetic_data.md")]
    mod synthetic_data {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}

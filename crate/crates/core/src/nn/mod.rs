//! Small convolutional networks with hand-written backpropagation.
//!
//! Three model families are realized from a [`Genotype`]:
//!
//! * **Vanilla**: 1 to 3 conv stages (conv → ReLU → 2×2 max-pool), then a dense
//!   hidden layer and the classification head.
//! * **Conv**: 1 to 3 blocks of two 3×3 convolutions followed by a max-pool,
//!   flattened straight into the head.
//! * **Dilated**: like Conv, with the second convolution of each block dilated.
//!
//! All arithmetic is `f64`; inputs are `side × side × 3` in HWC order with values
//! in [0,1].

mod genotype;
mod gradcheck;
mod layers;
mod model;
mod tensor;
mod train;

pub use genotype::{Family, Genotype, LayerSpec, VanillaStage, DEFAULT_INPUT_SIDE, PARAM_BUDGET};
pub use gradcheck::gradient_check;
pub use model::{param_count, realize, Gradients, TrainedModel, TrainingMeta};
pub use tensor::Tensor;
pub use train::{train, EpochRecord, ImageSet, TrainConfig};

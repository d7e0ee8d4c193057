//! Feature-map kernels with exact backward passes, and the four-branch
//! multi-scale dilated 3D CNN built from them.

pub mod activation;
pub mod checkpoint;
pub mod conv;
pub mod dense;
pub mod gradcheck;
pub mod model;
pub mod pool;
pub mod tensor;

pub use activation::{relu, relu_backward};
pub use checkpoint::{read_checkpoint, write_checkpoint, CheckpointManifest};
pub use conv::{conv3d_backward, conv3d_forward, effective_extent, ConvGrads, ConvSpec, Padding};
pub use gradcheck::{run_gradcheck, GradcheckOptions, GradcheckReport, LayerCheck};
pub use dense::{dense_softmax_xent, softmax, DenseGrads, DenseOutput};
pub use model::{
    init_params, model_backward, model_forward, BranchSpec, ForwardCache, ModelConfig, ModelParams,
    BRANCH_DILATIONS, LAYER_KERNELS, LAYER_POOLS,
};
pub use pool::{global_avg_pool, global_avg_pool_backward, maxpool3d, maxpool3d_backward};
pub use tensor::Tensor4;

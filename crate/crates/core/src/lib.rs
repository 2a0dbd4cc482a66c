pub mod bench;
pub mod catalog;
pub mod cli;
pub mod container;
pub mod error;
pub mod layout;
pub mod store;
pub mod tensor;

pub use error::{Error, Result};
pub use tensor::{
    classify, coo_to_dense, dense_to_coo, density, make_dense, slice_dense, CooTensor,
    DenseTensor, DimRange, ElementType, Shape, SliceSpec, Sparsity, TensorData, TensorId,
};

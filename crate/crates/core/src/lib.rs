//! Sky-image pipeline: k-means color segmentation, PCNP features, and
//! neural estimation of global horizontal irradiance.

pub mod clustering;
pub mod error;
pub mod features;
pub mod imaging;
pub mod manifest;
pub mod matrix;
pub mod models;
pub mod neuralnet;
pub mod num;
pub mod optim;
pub mod persist;
pub mod synthsky;

pub use error::{Error, Result};

// Concrete instantiations of the scalar-generic core.
pub type Centroids64 = clustering::Centroids<f64>;
pub type Centroids32 = clustering::Centroids<f32>;
pub type Segmented64 = clustering::SegmentedImage<f64>;
pub type Scaler64 = features::StandardScaler<f64>;
pub type Network64 = neuralnet::NetworkModel<f64>;
pub type Network32 = neuralnet::NetworkModel<f32>;
pub type Matrix64 = matrix::Matrix<f64>;

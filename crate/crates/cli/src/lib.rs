pub mod features_csv;
pub mod pipeline;

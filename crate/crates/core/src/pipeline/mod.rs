//! Data acquisition and preprocessing: template synthesis, IDX ingestion, constant-column
//! filtering, PCA, random-partition initialization and the k-means baseline.

pub mod idx;
mod init;
mod kmeans;
mod pca;
mod pixels;
mod template;

pub use idx::{load_mnist, read_idx_images, read_idx_labels, write_idx_images, write_idx_labels, IdxImageSet};
pub use init::{initialize, seeded_partition_init, random_partition_init, InitScheme, MAX_INIT_ATTEMPTS};
pub use kmeans::{kmeans, KMeansResult};
pub use pca::{fit_pca, project, sample_covariance, PcaModel};
pub use pixels::{drop_constant_columns, drop_constant_pixels};
pub use template::{fit_template, read_labeled_csv, template_from_csv, LabeledData};

//! Kernel SVM, nested cross-validation and experiment drivers on top of
//! `wlot-core`.

pub mod cv;
pub mod experiments;
pub mod stats;
pub mod svm;

pub use cv::{cross_validate, evaluate_split, CvConfig, CvResult, Grids, LearningSettings, SplitSettings};
pub use svm::{svm_predict, svm_train, SvmModel, SvmOptions, SvmProblem};

//! Gradient saliency maps for graph neural networks on molecules.
//!
//! The crate trains small dropout-equipped graph networks on molecular
//! graphs and explains their predictions atom by atom. Four estimators are
//! provided: plain gradients, gradients averaged over input noise, over
//! MC-dropout weight samples, and over both. Synthetic datasets with a
//! planted substructure give exact ground truth for measuring how well each
//! estimator finds the atoms that drive the label.
//!
//! | module | contents |
//! |---|---|
//! | [`autodiff`] | dense reverse-mode differentiation |
//! | [`molgraph`] | SMILES, graphs, motif matching, synthetic data |
//! | [`gnn`] | NFP and GGNN models, training, MC-dropout prediction |
//! | [`saliency`] | VanillaGrad, SmoothGrad, BayesGrad, BayesSmoothGrad, signed scores |
//! | [`eval`] | PR curves, PRC-AUC, ROC-AUC, repeated benchmark |
//! | [`render`] | 2-D layout and SVG output |

pub mod autodiff;
pub mod eval;
pub mod gnn;
pub mod molgraph;
pub mod render;
pub mod rng;
pub mod saliency;
pub mod schema;

//! Summary F-Score, rank correlations, the evaluation protocols and the
//! annotator-overlap matrix.

pub mod eval;
pub mod fscore;
pub mod rank;

pub use eval::{
    EvalRecord, EvalReport, FrameScorer, Mode, OverlapMatrix, evaluate, evaluate_generic,
    evaluate_script_driven, overlap_matrix,
};
pub use fscore::{fscore_binary, fscore_masks};
pub use rank::{average_ranks, kendall_tau_b, pearson, spearman_rho};

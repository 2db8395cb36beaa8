//! Evaluation: pose error, segmentation scores and pick-and-place outcomes.

pub mod pose;
pub mod segmentation;
pub mod trials;

pub use pose::{add, add_s, sample_model_points, PoseEstimate, MODEL_POINTS};
pub use segmentation::{
    boundary_prf, match_masks, mean_scores, overlap75, overlap_prf, segmentation_scores, Assignment, MaskRole, MaskSet,
    Prf, SegmentationScores,
};
pub use trials::{
    aggregate_results, classify_failure, parse_confirmations, parse_trial_log, Ordering, Outcome, OutcomeCounts, Phase,
    ReplicationConfirmation, ResultsTable, TrialEvent, TrialRecord,
};

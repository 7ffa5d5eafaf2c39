//! Tactile gesture series and the fixed-length feature vector.

mod features;
mod series;

pub use features::{
    centroid_trajectory, contact_area, extract_features, peak_count, FeatureVector, Trajectory, DEFAULT_AREA_THRESHOLD,
    FEATURE_LEN, FEATURE_NAMES, TRAJ_POINTS,
};
pub use series::{merge_labels_10_to_5, preprocess, Frame, GestureClass, GestureSeries, Speed, DEFAULT_SMOOTHING_WINDOW, GRID};

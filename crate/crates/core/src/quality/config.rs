use std::path::Path;

use serde::{Deserialize, Serialize};

use super::QualityError;
use crate::face_model::DEFAULT_PITCH_RATIO;

/// Constants that shape raw scores. Pass/fail thresholds live elsewhere.
///
/// Loaded from JSON; missing keys take defaults, unknown keys are rejected.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScoringConfig {
    /// Laplacian variance at which the blur score saturates.
    pub blur_v_ref: f64,

    pub ink_min_saturation: f64,
    pub ink_min_value: f64,
    pub ink_min_blob: usize,
    /// Widening of the skin chroma box for the skin-tone test.
    pub skin_box_widening: f64,
    /// Hair and shadow tolerance of the occlusion model: at most this
    /// saturation and at most `occlusion_hair_max_value` HSV value.
    pub occlusion_hair_max_saturation: f64,
    pub occlusion_hair_max_value: f64,

    pub pixelation_min_lag: usize,
    pub pixelation_max_lag: usize,
    pub pixelation_p_ref: f64,
    /// Minimum coefficient of variation an edge projection needs before its
    /// autocorrelation counts at full strength.
    pub pixelation_cv_floor: f64,

    /// RGB distance to the hair reference centroid.
    pub hair_color_distance: f64,

    pub eye_open_ratio: f64,
    pub mouth_open_ratio: f64,

    pub background_k: usize,
    pub background_seed: u64,
    pub background_min_pixels: usize,
    pub background_rms_ref: f64,
    /// Clusters whose centroid lies within this RGB distance of the largest
    /// one count as part of it.
    pub background_merge_distance: f64,

    pub roll_limit: f64,
    pub yaw_limit: f64,
    pub pitch_limit: f64,
    pub pitch_ratio: f64,

    pub overexposure_level: u8,
    pub overexposure_min_blob: usize,
    pub overexposure_ref: f64,

    /// Measurement disc radius as a fraction of eye width.
    pub red_eye_radius: f64,
    pub red_eye_margin: f64,
    pub red_eye_ref: f64,

    pub shadow_ratio: f64,
    /// Quantile of region gray levels that `shadow_ratio` scales.
    pub shadow_reference_quantile: f64,
    /// Tolerance on rg chromaticity (scaled to 0..255) between a shadow pixel
    /// and its lit surroundings.
    pub shadow_chroma_tolerance: f64,
    pub shadow_window: usize,
    pub shadow_min_blob: usize,
    pub shadow_ref: f64,

    pub dark_level: f64,
    pub dark_ref: f64,

    pub edge_threshold: f64,
    pub edge_ref: f64,

    pub noise_flat_gradient: f64,
    /// Smoothing applied before the flatness test so noise does not mask flat areas.
    pub noise_flat_sigma: f64,
    pub noise_rms_ref: f64,
    pub noise_min_flat_fraction: f64,

    pub expression_aperture_ref: f64,
    pub expression_lift_ref: f64,
}

impl Default for ScoringConfig {
    fn default() -> Self {
        Self {
            blur_v_ref: 250.0,
            ink_min_saturation: 0.5,
            ink_min_value: 0.3,
            ink_min_blob: 20,
            skin_box_widening: 0.15,
            occlusion_hair_max_saturation: 0.35,
            occlusion_hair_max_value: 0.45,
            pixelation_min_lag: 2,
            pixelation_max_lag: 16,
            pixelation_p_ref: 0.6,
            pixelation_cv_floor: 0.25,
            hair_color_distance: 30.0,
            eye_open_ratio: 0.25,
            mouth_open_ratio: 0.40,
            background_k: 3,
            background_seed: 0,
            background_min_pixels: 200,
            background_rms_ref: 64.0,
            background_merge_distance: 16.0,
            roll_limit: 15.0,
            yaw_limit: 20.0,
            pitch_limit: 20.0,
            pitch_ratio: DEFAULT_PITCH_RATIO,
            overexposure_level: 250,
            overexposure_min_blob: 10,
            overexposure_ref: 0.10,
            red_eye_radius: 0.3,
            red_eye_margin: 50.0,
            red_eye_ref: 0.3,
            shadow_ratio: 0.55,
            shadow_reference_quantile: 0.75,
            shadow_chroma_tolerance: 12.0,
            shadow_window: 8,
            shadow_min_blob: 12,
            shadow_ref: 0.25,
            dark_level: 45.0,
            dark_ref: 0.5,
            edge_threshold: 80.0,
            edge_ref: 0.30,
            noise_flat_gradient: 20.0,
            noise_flat_sigma: 1.5,
            noise_rms_ref: 12.0,
            noise_min_flat_fraction: 0.05,
            expression_aperture_ref: 0.15,
            expression_lift_ref: 0.10,
        }
    }
}

impl ScoringConfig {
    pub fn from_json(text: &str) -> Result<Self, QualityError> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| QualityError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, QualityError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| QualityError::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| QualityError::Config(format!("{}: {e}", path.display())))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), QualityError> {
        let positive = [
            ("blur_v_ref", self.blur_v_ref),
            ("pixelation_p_ref", self.pixelation_p_ref),
            ("eye_open_ratio", self.eye_open_ratio),
            ("mouth_open_ratio", self.mouth_open_ratio),
            ("background_rms_ref", self.background_rms_ref),
            ("roll_limit", self.roll_limit),
            ("yaw_limit", self.yaw_limit),
            ("pitch_limit", self.pitch_limit),
            ("pitch_ratio", self.pitch_ratio),
            ("overexposure_ref", self.overexposure_ref),
            ("red_eye_radius", self.red_eye_radius),
            ("red_eye_ref", self.red_eye_ref),
            ("shadow_ratio", self.shadow_ratio),
            ("shadow_ref", self.shadow_ref),
            ("dark_ref", self.dark_ref),
            ("edge_ref", self.edge_ref),
            ("noise_rms_ref", self.noise_rms_ref),
            ("expression_aperture_ref", self.expression_aperture_ref),
            ("expression_lift_ref", self.expression_lift_ref),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(QualityError::Config(format!("{name} must be a positive number, got {v}")));
            }
        }
        if self.pixelation_min_lag < 2 || self.pixelation_max_lag <= self.pixelation_min_lag {
            return Err(QualityError::Config(
                "pixelation lags must satisfy 2 <= min < max".into(),
            ));
        }
        if self.background_k == 0 {
            return Err(QualityError::Config("background_k must be >= 1".into()));
        }
        if !(self.background_merge_distance.is_finite() && self.background_merge_distance >= 0.0) {
            return Err(QualityError::Config("background_merge_distance must be >= 0".into()));
        }
        if !(self.pixelation_cv_floor.is_finite() && self.pixelation_cv_floor >= 0.0) {
            return Err(QualityError::Config("pixelation_cv_floor must be >= 0".into()));
        }
        if !(0.0..=1.0).contains(&self.shadow_reference_quantile) {
            return Err(QualityError::Config("shadow_reference_quantile must lie in [0,1]".into()));
        }
        if !(0.0..=1.0).contains(&self.noise_min_flat_fraction) {
            return Err(QualityError::Config("noise_min_flat_fraction must lie in [0,1]".into()));
        }
        Ok(())
    }
}

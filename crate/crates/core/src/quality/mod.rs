//! The 25 compliance tests: raw scores in [0, 1] (higher is more compliant)
//! and their binarization against per-test thresholds.

mod config;
mod registry;
mod scores;

pub use config::ScoringConfig;
pub use registry::{test_spec, Binding, ColorModel, Feature, Region, TestSpec, REGISTRY, TEST_COUNT};
pub use scores::{periodic_peak, periodic_prominence, Plugins, RawScore, Scene};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::calibration::ThresholdConfig;
use crate::face_model::GeometricPose;
use crate::preprocess::FaceContext;

#[derive(Debug, Error)]
pub enum QualityError {
    #[error("invalid scoring config: {0}")]
    Config(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    Pass,
    Fail,
    Undetermined,
}

impl Decision {
    /// `raw >= threshold` passes; a missing score is undetermined.
    pub fn of(raw: &RawScore, threshold: f64) -> Self {
        match raw.value() {
            Some(v) if v >= threshold => Decision::Pass,
            Some(_) => Decision::Fail,
            None => Decision::Undetermined,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TestResult {
    pub id: u8,
    pub name: &'static str,
    pub raw: RawScore,
    pub threshold: f64,
    pub decision: Decision,
}

/// One entry per registry test, in id order.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QualityVector {
    pub tests: Vec<TestResult>,
}

impl QualityVector {
    /// True when no computable test failed.
    pub fn overall_pass(&self) -> bool {
        self.tests.iter().all(|t| t.decision != Decision::Fail)
    }

    pub fn raw_scores(&self) -> Vec<RawScore> {
        self.tests.iter().map(|t| t.raw.clone()).collect()
    }

    pub fn decisions(&self) -> Vec<Decision> {
        self.tests.iter().map(|t| t.decision).collect()
    }
}

/// Score a single test; landmark-bound tests are not computable without landmarks.
pub fn score_test(spec: &TestSpec, scene: &Scene<'_>, plugins: &Plugins<'_>) -> RawScore {
    if spec.binding.needs_landmarks() && !scene.ctx.landmarks_ok() {
        let why = scene.ctx.landmark_failure.as_deref().unwrap_or("landmarks unavailable");
        return RawScore::not_computable(format!("landmarks unavailable: {why}"));
    }
    match spec.binding {
        Binding::Blur => scene.blur(),
        Binding::Gaze => scene.gaze(),
        Binding::UnnaturalColor(region, model) => scene.unnatural_color(region, model),
        Binding::Luminance => scene.luminance(),
        Binding::Contrast => scene.contrast(),
        Binding::Pixelation => scene.pixelation(),
        Binding::HairOverlap => scene.hair_overlap(plugins.hair),
        Binding::Aperture(feature) => scene.aperture(feature),
        Binding::BackgroundHomogeneity => scene.background_homogeneity(),
        Binding::PoseCompliance => scene.pose_compliance(plugins.pose),
        Binding::Overexposure(region) => scene.overexposure(region),
        Binding::RedEye => scene.red_eye(),
        Binding::Shadow(region) => scene.shadow(region),
        Binding::DarkRatio(region) => scene.dark_ratio(region),
        Binding::EdgeDensity(region) => scene.edge_density(region),
        Binding::OtherFaces => scene.other_faces(),
        Binding::WhiteNoise => scene.white_noise(),
        Binding::Expression => scene.expression(plugins.expression),
    }
}

/// Raw scores of all 25 tests in registry order.
pub fn score_all(ctx: &FaceContext, cfg: &ScoringConfig, plugins: &Plugins<'_>) -> Vec<RawScore> {
    let scene = Scene::new(ctx, cfg);
    REGISTRY.iter().map(|spec| score_test(spec, &scene, plugins)).collect()
}

/// Score and binarize every test.
pub fn run_all(ctx: &FaceContext, cfg: &ScoringConfig, plugins: &Plugins<'_>, thresholds: &ThresholdConfig) -> QualityVector {
    let tests = REGISTRY
        .iter()
        .zip(score_all(ctx, cfg, plugins))
        .map(|(spec, raw)| {
            let threshold = thresholds.threshold(spec.id);
            TestResult {
                id: spec.id,
                name: spec.name,
                decision: Decision::of(&raw, threshold),
                raw,
                threshold,
            }
        })
        .collect();
    QualityVector { tests }
}

/// Plug-ins with the geometric pose estimator and no learned models.
pub fn default_plugins(pose: &GeometricPose) -> Plugins<'_> {
    Plugins {
        pose,
        hair: None,
        expression: None,
    }
}

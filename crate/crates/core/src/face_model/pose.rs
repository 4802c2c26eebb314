use super::{FaceModelError, LandmarkSet, PoseAngles, PoseEstimator};

/// Canonical (nose_base - eye line) / (chin - nose_base) ratio of a level head.
pub const DEFAULT_PITCH_RATIO: f64 = 0.85;

/// Geometric pose proxy: reliable in sign and ordering, not in absolute degrees.
#[derive(Clone, Copy, Debug)]
pub struct GeometricPose {
    pub pitch_ratio: f64,
}

impl Default for GeometricPose {
    fn default() -> Self {
        Self {
            pitch_ratio: DEFAULT_PITCH_RATIO,
        }
    }
}

impl PoseEstimator for GeometricPose {
    fn estimate_pose(&self, lm: &LandmarkSet) -> Result<PoseAngles, FaceModelError> {
        let roll = (lm.pupil_r.y - lm.pupil_l.y)
            .atan2(lm.pupil_r.x - lm.pupil_l.x)
            .to_degrees();

        let d_l = (lm.nose_tip.x - lm.eye_outer_l.x).abs();
        let d_r = (lm.eye_outer_r.x - lm.nose_tip.x).abs();
        if d_l + d_r == 0.0 {
            return Err(FaceModelError::DegenerateGeometry(
                "nose tip coincides with both outer eye corners".into(),
            ));
        }
        let yaw = 90.0 * (d_l - d_r) / (d_l + d_r);

        let eye_line = (lm.pupil_l.y + lm.pupil_r.y) / 2.0;
        let lower = lm.chin.y - lm.nose_base.y;
        if lower == 0.0 || self.pitch_ratio <= 0.0 {
            return Err(FaceModelError::DegenerateGeometry(
                "chin and nose base share a row".into(),
            ));
        }
        let r = (lm.nose_base.y - eye_line) / lower;
        let pitch = 90.0 * (r - self.pitch_ratio) / self.pitch_ratio;

        let clamp = |v: f64| v.clamp(-90.0, 90.0);
        Ok(PoseAngles {
            roll: clamp(roll),
            pitch: clamp(pitch),
            yaw: clamp(yaw),
        })
    }
}

/// Pose supplied by an external estimator through a sidecar.
#[derive(Clone, Copy, Debug)]
pub struct FixedPose(pub PoseAngles);

impl PoseEstimator for FixedPose {
    fn estimate_pose(&self, _lm: &LandmarkSet) -> Result<PoseAngles, FaceModelError> {
        self.0.validate()?;
        Ok(self.0)
    }
}

pub fn estimate_pose(lm: &LandmarkSet, estimator: &dyn PoseEstimator) -> Result<PoseAngles, FaceModelError> {
    estimator.estimate_pose(lm)
}

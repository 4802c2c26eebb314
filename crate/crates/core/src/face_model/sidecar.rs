use std::fs;
use std::path::{Path, PathBuf};

use serde_json::{Map, Value};

use super::{FaceBox, FaceModelError, LandmarkSet, PoseAngles};

const KEY_BOXES: &str = "boxes";
const KEY_POSE: &str = "pose";
const KEY_HAIR: &str = "hair_overlap";
const KEY_EXPRESSION: &str = "expression_neutral";

/// Contents of a `<image>.landmarks.json` sidecar.
///
/// Named points are crop coordinates; boxes are `[x, y, w, h, confidence]` in
/// source coordinates. `pose`, `hair_overlap` and `expression_neutral` carry
/// outputs of external models for tests 11, 8 and 25.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Annotation {
    pub boxes: Option<Vec<FaceBox>>,
    pub landmarks: Option<LandmarkSet>,
    pub pose: Option<PoseAngles>,
    pub hair_overlap: Option<f64>,
    pub expression_neutral: Option<f64>,
}

fn sidecar_err(msg: impl Into<String>) -> FaceModelError {
    FaceModelError::Sidecar(msg.into())
}

fn unit_fraction(key: &str, v: Value) -> Result<f64, FaceModelError> {
    let f = v
        .as_f64()
        .ok_or_else(|| sidecar_err(format!("{key} must be a number")))?;
    if !(0.0..=1.0).contains(&f) {
        return Err(sidecar_err(format!("{key} {f} outside [0,1]")));
    }
    Ok(f)
}

impl Annotation {
    pub fn parse(text: &str) -> Result<Self, FaceModelError> {
        let value: Value = serde_json::from_str(text).map_err(|e| sidecar_err(e.to_string()))?;
        let Value::Object(mut map) = value else {
            return Err(sidecar_err("sidecar must be a JSON object"));
        };
        let mut ann = Annotation::default();
        if let Some(v) = map.remove(KEY_BOXES) {
            let rows: Vec<[f64; 5]> =
                serde_json::from_value(v).map_err(|e| sidecar_err(format!("boxes: {e}")))?;
            let boxes = rows
                .into_iter()
                .map(|[x, y, w, h, c]| FaceBox::new(x, y, w, h, c))
                .collect::<Result<Vec<_>, _>>()?;
            ann.boxes = Some(boxes);
        }
        if let Some(v) = map.remove(KEY_POSE) {
            let pose: PoseAngles =
                serde_json::from_value(v).map_err(|e| sidecar_err(format!("pose: {e}")))?;
            pose.validate()?;
            ann.pose = Some(pose);
        }
        if let Some(v) = map.remove(KEY_HAIR) {
            ann.hair_overlap = Some(unit_fraction(KEY_HAIR, v)?);
        }
        if let Some(v) = map.remove(KEY_EXPRESSION) {
            ann.expression_neutral = Some(unit_fraction(KEY_EXPRESSION, v)?);
        }
        if !map.is_empty() {
            let lm: LandmarkSet = serde_json::from_value(Value::Object(map))
                .map_err(|e| sidecar_err(format!("landmarks: {e}")))?;
            ann.landmarks = Some(lm);
        }
        Ok(ann)
    }

    pub fn load(path: &Path) -> Result<Self, FaceModelError> {
        let text = fs::read_to_string(path)
            .map_err(|e| sidecar_err(format!("{}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            FaceModelError::Sidecar(msg) => sidecar_err(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_json(&self) -> String {
        let mut map = match &self.landmarks {
            Some(lm) => match serde_json::to_value(lm) {
                Ok(Value::Object(m)) => m,
                _ => Map::new(),
            },
            None => Map::new(),
        };
        if let Some(boxes) = &self.boxes {
            let rows: Vec<[f64; 5]> = boxes.iter().map(|b| [b.x, b.y, b.w, b.h, b.confidence]).collect();
            map.insert(KEY_BOXES.into(), serde_json::json!(rows));
        }
        if let Some(p) = &self.pose {
            map.insert(KEY_POSE.into(), serde_json::json!(p));
        }
        if let Some(h) = self.hair_overlap {
            map.insert(KEY_HAIR.into(), serde_json::json!(h));
        }
        if let Some(e) = self.expression_neutral {
            map.insert(KEY_EXPRESSION.into(), serde_json::json!(e));
        }
        serde_json::to_string_pretty(&Value::Object(map)).unwrap_or_default()
    }

    /// Sidecar path for an image: `<stem>.landmarks.json` wins over
    /// `<file name>.landmarks.json`.
    pub fn find_for_image(image: &Path) -> Option<PathBuf> {
        let dir = image.parent().unwrap_or(Path::new(""));
        let stem = image.file_stem()?.to_string_lossy();
        let name = image.file_name()?.to_string_lossy();
        [format!("{stem}.landmarks.json"), format!("{name}.landmarks.json")]
            .into_iter()
            .map(|f| dir.join(f))
            .find(|p| p.is_file())
    }
}

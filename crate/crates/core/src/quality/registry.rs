use serde::Serialize;

/// Atlas region a test reads.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Region {
    Face,
    Background,
    FaceAndBackground,
    Skin,
    Forehead,
    LowerFace,
    EyeZones,
    EyeSurround,
    EyeZonesAndSurround,
    /// Eye zones minus the eye openings.
    EyeRim,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ColorModel {
    Ink,
    Skin,
    Occlusion,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Feature {
    Eyes,
    Mouth,
}

/// Scoring operation bound to a test id.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Binding {
    Blur,
    Gaze,
    UnnaturalColor(Region, ColorModel),
    Luminance,
    Contrast,
    Pixelation,
    HairOverlap,
    Aperture(Feature),
    BackgroundHomogeneity,
    PoseCompliance,
    Overexposure(Region),
    RedEye,
    Shadow(Region),
    DarkRatio(Region),
    EdgeDensity(Region),
    OtherFaces,
    WhiteNoise,
    Expression,
}

impl Binding {
    /// Whether the operation is meaningless without estimated landmarks.
    pub fn needs_landmarks(&self) -> bool {
        match self {
            Binding::Gaze
            | Binding::HairOverlap
            | Binding::Aperture(_)
            | Binding::PoseCompliance
            | Binding::RedEye
            | Binding::Expression => true,
            Binding::Overexposure(r) | Binding::DarkRatio(r) | Binding::EdgeDensity(r) => matches!(
                r,
                Region::EyeZones | Region::EyeSurround | Region::EyeZonesAndSurround | Region::EyeRim
            ),
            _ => false,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct TestSpec {
    pub id: u8,
    pub name: &'static str,
    pub binding: Binding,
}

pub const TEST_COUNT: usize = 25;

/// The 25 compliance tests in id order.
pub const REGISTRY: [TestSpec; TEST_COUNT] = {
    use Binding::*;
    const fn t(id: u8, name: &'static str, binding: Binding) -> TestSpec {
        TestSpec { id, name, binding }
    }
    [
        t(1, "Blur", Blur),
        t(2, "Eyes direction", Gaze),
        t(3, "Presence of ink marks", UnnaturalColor(Region::FaceAndBackground, ColorModel::Ink)),
        t(4, "Odd skin colour", UnnaturalColor(Region::Skin, ColorModel::Skin)),
        t(5, "General illumination", Luminance),
        t(6, "Contrast", Contrast),
        t(7, "Pixelation", Pixelation),
        t(8, "Hair over face", HairOverlap),
        t(9, "Eyes open/closed", Aperture(Feature::Eyes)),
        t(10, "Heterogeneous background", BackgroundHomogeneity),
        t(11, "Pose estimation", PoseCompliance),
        t(12, "Light reflections on skin", Overexposure(Region::Skin)),
        t(13, "Red eyes", RedEye),
        t(14, "Shadows in the background", Shadow(Region::Background)),
        t(15, "Shadows over face", Shadow(Region::Face)),
        t(16, "Detection of sunglasses", DarkRatio(Region::EyeZonesAndSurround)),
        t(17, "Light reflections on glasses", Overexposure(Region::EyeZonesAndSurround)),
        t(18, "Wide frames of the glasses", EdgeDensity(Region::EyeSurround)),
        t(19, "Frames covering the eyes", EdgeDensity(Region::EyeRim)),
        t(20, "Hat", UnnaturalColor(Region::Forehead, ColorModel::Occlusion)),
        t(21, "Veil", UnnaturalColor(Region::LowerFace, ColorModel::Occlusion)),
        t(22, "Mouth open/closed", Aperture(Feature::Mouth)),
        t(23, "Other faces", OtherFaces),
        t(24, "White noise estimation", WhiteNoise),
        t(25, "Expression", Expression),
    ]
};

pub fn test_spec(id: u8) -> Option<&'static TestSpec> {
    REGISTRY.get((id as usize).checked_sub(1)?)
}

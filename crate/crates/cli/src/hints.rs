/// One-line remediation message per test id, shown for failed tests.
const HINTS: [&str; 25] = [
    "image is out of focus",
    "look straight at the camera",
    "remove ink marks or stains from the photo",
    "skin color looks unnatural; check white balance and lighting",
    "image is too dark; increase the exposure or the lighting",
    "contrast is too low; use brighter, even lighting",
    "image looks pixelated; capture at a higher resolution",
    "keep hair away from the eyes and face",
    "keep both eyes open",
    "use a plain, uniform background",
    "face the camera without tilting or turning the head",
    "light reflections on the skin; avoid direct flash",
    "red eyes detected; retake without direct flash",
    "shadows on the background; light the background evenly",
    "shadows across the face; light the face evenly",
    "remove sunglasses or tinted lenses",
    "reflections on the glasses; tilt the lenses or remove the glasses",
    "glasses frames are too heavy; use thin frames or remove the glasses",
    "glasses frames cover the eyes",
    "remove hats or anything covering the forehead",
    "uncover the lower part of the face",
    "keep the mouth closed",
    "only one person may appear in the photo",
    "image is noisy; use more light or a lower ISO setting",
    "keep a neutral expression",
];

pub fn hint(id: u8) -> &'static str {
    HINTS[id as usize - 1]
}

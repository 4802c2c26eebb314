pub mod imagery;
pub mod face_model;
pub mod preprocess;
pub mod quality;
pub mod calibration;
pub mod evaluation;
pub mod pipeline;
pub mod synth;

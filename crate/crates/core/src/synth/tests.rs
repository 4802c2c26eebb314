use std::collections::BTreeMap;

use proptest::prelude::*;

use super::*;
use crate::evaluation::LabelTable;
use crate::face_model::{FixedBoxes, FixedLandmarks, TemplateLandmarks};
use crate::preprocess::{preprocess, PreprocessConfig};

fn geometry(base: &BaseImage) -> SourceGeometry {
    SourceGeometry::of_image(&Assessor::default(), &base.image, base.annotation.as_ref()).unwrap()
}

fn every_kind() -> Vec<DegradationKind> {
    let mut kinds = DegradationKind::all().to_vec();
    kinds.push(DegradationKind::OcclusionPatch {
        region: OcclusionRegion::LowerFace,
        color: [200, 40, 160],
    });
    kinds
}

fn changed_pixels(a: &ImageBuffer, b: &ImageBuffer) -> Vec<usize> {
    (0..a.len_pixels()).filter(|&i| a.rgb_at(i) != b.rgb_at(i)).collect()
}

#[test]
fn zero_severity_is_identity() {
    let base = render_base(0, 1);
    let geom = geometry(&base);
    for kind in every_kind() {
        let out = apply(&base.image, &DegradationSpec::new(kind, 0.0, 9), Some(&geom)).unwrap();
        assert_eq!(out.image, base.image, "{kind}");
        for &id in kind.affected_tests() {
            assert_eq!(out.labels[id as usize - 1], Label::Compliant);
        }
    }
}

#[test]
fn implied_labels_follow_the_defect_threshold() {
    let blur = |s| DegradationSpec::new(DegradationKind::GaussianBlur, s, 0).implied_labels();
    let at = blur(3.0);
    assert_eq!(at[0], Label::NonCompliant);
    assert!(at[1..].iter().all(|&l| l == Label::NotAvailable));
    assert_eq!(blur(1.0)[0], Label::NotAvailable);
    assert_eq!(blur(0.0)[0], Label::Compliant);
    let frames = DegradationSpec::new(DegradationKind::FrameLines, 4.0, 0).implied_labels();
    assert_eq!(frames[17], Label::NonCompliant);
    assert_eq!(frames[18], Label::NonCompliant);
    assert_eq!(frames.iter().filter(|&&l| l != Label::NotAvailable).count(), 2);
}

#[test]
fn every_kind_documents_its_tests() {
    let mut covered: Vec<u8> = every_kind().iter().flat_map(|k| k.affected_tests().to_vec()).collect();
    covered.sort_unstable();
    covered.dedup();
    assert_eq!(covered, vec![1, 4, 5, 6, 7, 10, 12, 13, 14, 15, 18, 19, 20, 21, 24]);
    for k in every_kind() {
        let ladder = k.default_ladder();
        assert_eq!(ladder[0], 0.0);
        assert!(ladder.windows(2).all(|w| w[0] < w[1]));
        assert!(ladder.contains(&k.defect_threshold()), "{k}");
    }
}

#[test]
fn red_eye_plants_red_discs_over_the_pupils() {
    let base = render_base(2, 3);
    let geom = geometry(&base);
    let out = apply(&base.image, &DegradationSpec::new(DegradationKind::RedEye, 1.0, 0), Some(&geom)).unwrap();
    let changed = changed_pixels(&base.image, &out.image);
    assert!(!changed.is_empty());
    for &i in &changed {
        let [r, g, b] = out.image.rgb_at(i);
        assert!(r as i32 - g.max(b) as i32 > 50);
    }
    let lm = geom.landmarks();
    let width = BASE_SIZE;
    for (pupil, eye_w) in [(lm.pupil_l, lm.eye_width_l()), (lm.pupil_r, lm.eye_width_r())] {
        let c = geom.point(pupil);
        let r = 0.3 * eye_w * geom.scale_x();
        let near: Vec<_> = changed
            .iter()
            .filter(|&&i| ((i % width) as f64 - c.x).hypot((i / width) as f64 - c.y) <= r + 0.5)
            .collect();
        let disc = std::f64::consts::PI * r * r;
        assert!((near.len() as f64 - disc).abs() < 0.25 * disc, "{} vs {disc}", near.len());
    }
    assert_eq!(out.labels[12], Label::NonCompliant);
}

#[test]
fn region_kinds_need_landmarks() {
    let base = render_base(0, 1);
    let err = apply(&base.image, &DegradationSpec::new(DegradationKind::TintSkin, 10.0, 0), None).unwrap_err();
    assert!(matches!(err, SynthError::RegionUnavailable(_)));
    assert!(apply(&base.image, &DegradationSpec::new(DegradationKind::Darken, 0.5, 0), None).is_ok());

    // A context whose landmarks failed yields no geometry.
    let mut broken = LandmarkSet::canonical(CROP_SIZE);
    broken.chin = broken.brow_l;
    let boxes = FixedBoxes(base.annotation.as_ref().unwrap().boxes.clone().unwrap());
    let ctx = preprocess(&base.image, &PreprocessConfig::default(), &boxes, &FixedLandmarks(broken)).unwrap();
    assert!(!ctx.landmarks_ok());
    let err = SourceGeometry::from_context(&ctx, BASE_SIZE, BASE_SIZE).unwrap_err();
    assert!(matches!(err, SynthError::RegionUnavailable(_)));
}

#[test]
fn invalid_severities_are_rejected() {
    let bad = [
        DegradationSpec::new(DegradationKind::GaussianBlur, -1.0, 0),
        DegradationSpec::new(DegradationKind::WhiteNoise, f64::NAN, 0),
        DegradationSpec::new(DegradationKind::BackgroundShadow, 1.5, 0),
    ];
    let img = ImageBuffer::filled(8, 8, [1, 2, 3]);
    for spec in bad {
        assert!(matches!(apply(&img, &spec, None), Err(SynthError::InvalidSpec(_))));
    }
}

#[test]
fn base_sidecars_place_the_crop_on_the_face() {
    let base = render_base(5, 42);
    let ann = base.annotation.clone().unwrap();
    ann.landmarks.as_ref().unwrap().validate(CROP_SIZE).unwrap();
    let ctx = Assessor::default().context(&base.image, Some(&ann)).unwrap();
    assert_eq!(ctx.crop_rect.width(), CROP_SIZE);
    assert_eq!(ctx.crop_rect.height(), CROP_SIZE);
    assert!(ctx.landmarks_ok());
    // The template landmark fallback also yields a usable context.
    let boxes = FixedBoxes(ann.boxes.clone().unwrap());
    assert!(preprocess(&base.image, &PreprocessConfig::default(), &boxes, &TemplateLandmarks).is_ok());
    assert_eq!(render_base(5, 42), base);
    assert_ne!(render_base(5, 43).image, base.image);
}

#[test]
fn seeds_differ_per_kind_and_base() {
    let a = derive_seed(1, "white_noise", 0);
    assert_eq!(a, derive_seed(1, "white_noise", 0));
    assert_ne!(a, derive_seed(1, "white_noise", 1));
    assert_ne!(a, derive_seed(1, "background_clutter", 0));
    assert_ne!(a, derive_seed(2, "white_noise", 0));
}

#[test]
fn plan_json_round_trip_and_errors() {
    let text = r#"[
        {"kind": "gaussian_blur", "severities": [1, 3], "count": 2},
        {"kind": "occlusion_patch", "region": "lower_face", "color": [10, 20, 30], "severities": [0.5], "count": 1}
    ]"#;
    let plan = CorpusPlan::from_json(text).unwrap();
    assert_eq!(plan.entries[0].kind().unwrap(), DegradationKind::GaussianBlur);
    assert_eq!(
        plan.entries[1].kind().unwrap(),
        DegradationKind::OcclusionPatch {
            region: OcclusionRegion::LowerFace,
            color: [10, 20, 30]
        }
    );
    assert_eq!(CorpusPlan::from_json(&plan.to_json()).unwrap(), plan);
    assert_eq!(CorpusPlan::from_json(&CorpusPlan::default_plan(3).to_json()).unwrap().entries.len(), 14);

    for bad in [
        "[]",
        r#"[{"kind": "sepia", "severities": [1], "count": 1}]"#,
        r#"[{"kind": "darken", "severities": [1], "count": 1, "extra": 1}]"#,
        r#"[{"kind": "darken", "region": "forehead", "severities": [1], "count": 1}]"#,
        r#"[{"kind": "darken", "severities": [], "count": 1}]"#,
        r#"[{"kind": "darken", "severities": [1], "count": 0}]"#,
        r#"[{"kind": "face_shadow", "severities": [2], "count": 1}]"#,
    ] {
        assert!(CorpusPlan::from_json(bad).is_err(), "{bad}");
    }
}

fn read_tree(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.insert(p.strip_prefix(dir).unwrap().to_path_buf(), std::fs::read(&p).unwrap());
            }
        }
    }
    out
}

#[test]
fn build_corpus_counts_labels_and_determinism() {
    let bases = render_bases(5, 8);
    let plan = CorpusPlan {
        entries: [DegradationKind::GaussianBlur, DegradationKind::WhiteNoise, DegradationKind::RedEye]
            .into_iter()
            .map(|k| PlanEntry::new(k, vec![k.default_ladder()[2], k.defect_threshold()], 5))
            .collect(),
    };
    let assessor = Assessor::default();
    let a = tempfile::tempdir().unwrap();
    let summary = build_corpus(&bases, &plan, 99, a.path(), &assessor).unwrap();
    assert_eq!((summary.degraded, summary.clean), (30, 5));
    let pngs = std::fs::read_dir(a.path().join("images"))
        .unwrap()
        .filter(|e| e.as_ref().unwrap().path().extension().is_some_and(|x| x == "png"))
        .count();
    assert_eq!(pngs, 35);

    let table = LabelTable::load(&summary.labels).unwrap();
    assert_eq!(table.rows.len(), 35);
    let names: Vec<_> = table.rows.iter().map(|r| r.image.clone()).collect();
    let mut sorted = names.clone();
    sorted.sort();
    assert_eq!(names, sorted);
    let clean = table.rows.iter().find(|r| r.image == "images/base000_clean.png").unwrap();
    for id in 1..=25u8 {
        let expect = if [1, 13, 24].contains(&id) { Label::Compliant } else { Label::NotAvailable };
        assert_eq!(clean.labels[id as usize - 1], expect, "test {id}");
    }
    let blurred = table.rows.iter().find(|r| r.image == "images/base003_gaussian_blur_3.png").unwrap();
    assert_eq!(blurred.labels[0], Label::NonCompliant);
    let mild = table.rows.iter().find(|r| r.image == "images/base003_gaussian_blur_2.png").unwrap();
    assert_eq!(mild.labels[0], Label::NotAvailable);
    let reparsed = LabelTable::parse(std::fs::read(&summary.labels).unwrap().as_slice()).unwrap();
    assert_eq!(reparsed, table);

    let b = tempfile::tempdir().unwrap();
    build_corpus(&bases, &plan, 99, b.path(), &assessor).unwrap();
    assert_eq!(read_tree(a.path()), read_tree(b.path()));
}

#[test]
fn build_corpus_cycles_bases_and_rejects_collisions() {
    let bases = render_bases(2, 8);
    let assessor = Assessor::default();
    let dir = tempfile::tempdir().unwrap();
    let plan = CorpusPlan {
        entries: vec![PlanEntry::new(DegradationKind::WhiteNoise, vec![20.0], 3)],
    };
    let summary = build_corpus(&bases, &plan, 1, dir.path(), &assessor).unwrap();
    assert_eq!((summary.degraded, summary.clean), (3, 2));
    let again = dir.path().join("images/base000_white_noise_20_r1.png");
    let first = dir.path().join("images/base000_white_noise_20.png");
    assert_ne!(std::fs::read(again).unwrap(), std::fs::read(first).unwrap());

    let twice = CorpusPlan {
        entries: vec![
            PlanEntry::new(DegradationKind::Darken, vec![1.0], 1),
            PlanEntry::new(DegradationKind::Darken, vec![1.0], 1),
        ],
    };
    let err = build_corpus(&bases, &twice, 1, dir.path(), &assessor).unwrap_err();
    assert!(matches!(err, SynthError::DuplicateOutput(_)));
    assert!(matches!(build_corpus(&[], &plan, 1, dir.path(), &assessor), Err(SynthError::EmptyBase)));
}

#[test]
fn bases_round_trip_through_disk() {
    let bases = render_bases(2, 4);
    let dir = tempfile::tempdir().unwrap();
    save_bases(&bases, dir.path()).unwrap();
    assert_eq!(load_bases(dir.path()).unwrap(), bases);
    let empty = tempfile::tempdir().unwrap();
    assert!(matches!(load_bases(empty.path()), Err(SynthError::EmptyBase)));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn region_kinds_stay_inside_their_target(
        base_index in 0usize..6,
        kind_index in 0usize..15,
        step in 1usize..5,
        seed in any::<u64>(),
    ) {
        let kind = every_kind()[kind_index];
        prop_assume!(kind.needs_regions());
        let base = render_base(base_index, 17);
        let geom = geometry(&base);
        let spec = DegradationSpec::new(kind, kind.default_ladder()[step], seed);
        let out = apply(&base.image, &spec, Some(&geom)).unwrap();
        let target = target_region(&spec, &geom).unwrap();
        for i in changed_pixels(&base.image, &out.image) {
            prop_assert!(target.get_index(i), "{kind} changed pixel {i} outside its target");
        }
        prop_assert_eq!(apply(&base.image, &spec, Some(&geom)).unwrap(), out);
    }
}

use proptest::prelude::*;

use super::*;

fn gray(w: usize, h: usize, f: impl Fn(usize, usize) -> u8) -> ImageBuffer {
    ImageBuffer::from_fn_gray(w, h, f)
}

#[test]
fn buffer_rejects_bad_dimensions() {
    assert!(ImageBuffer::new(2, 2, 3, vec![0; 11]).is_err());
    assert!(ImageBuffer::new(0, 2, 1, vec![]).is_err());
    assert!(ImageBuffer::new(2, 2, 2, vec![0; 8]).is_err());
    assert!(ImageBuffer::new(2, 2, 1, vec![0; 4]).is_ok());
}

#[test]
fn grayscale_known_values() {
    let img = ImageBuffer::from_fn_rgb(3, 1, |x, _| match x {
        0 => [255, 255, 255],
        1 => [0, 0, 0],
        _ => [100, 150, 200],
    });
    let g = to_grayscale(&img).unwrap();
    // 0.299*100 + 0.587*150 + 0.114*200 = 140.75
    assert_eq!(g.data(), &[255, 0, 141]);
    assert!(matches!(
        to_grayscale(&g),
        Err(ImageryError::ChannelMismatch { .. })
    ));
}

#[test]
fn ycbcr_gray_and_red() {
    let img = ImageBuffer::from_fn_rgb(2, 1, |x, _| if x == 0 { [128; 3] } else { [255, 0, 0] });
    let ycc = to_ycbcr(&img).unwrap();
    assert_eq!(ycc.rgb(0, 0), [128, 128, 128]);
    assert!(ycc.rgb(1, 0)[2] > 200);
    assert!(to_ycbcr(&to_grayscale(&img).unwrap()).is_err());
}

#[test]
fn ycbcr_round_trip_within_two() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
    let img = ImageBuffer::from_fn_rgb(64, 64, |_, _| [0, 0, 0]);
    let data: Vec<u8> = (0..img.data().len()).map(|_| rng.random()).collect();
    let img = ImageBuffer::new(64, 64, 3, data).unwrap();
    let back = from_ycbcr(&to_ycbcr(&img).unwrap()).unwrap();
    let max_err = img
        .data()
        .iter()
        .zip(back.data())
        .map(|(a, b)| (*a as i32 - *b as i32).abs())
        .max()
        .unwrap();
    assert!(max_err <= 2, "max round-trip error {max_err}");
}

#[test]
fn chroma_box_widening() {
    let w = ChromaBox::SKIN.widened(0.15);
    assert!((w.cb.0 - 73.25).abs() < 1e-12 && (w.cb.1 - 130.75).abs() < 1e-12);
    assert!((w.cr.0 - 130.0).abs() < 1e-12 && (w.cr.1 - 176.0).abs() < 1e-12);
    assert!(ChromaBox::SKIN.contains([150, 105, 80]));
    assert!(!ChromaBox::SKIN.contains([70, 110, 200]));
}

#[test]
fn hsv_primaries() {
    assert_eq!(rgb_to_hsv([255, 0, 0]), (0.0, 1.0, 1.0));
    let (h, s, v) = rgb_to_hsv([0, 0, 255]);
    assert_eq!((h, s, v), (240.0, 1.0, 1.0));
    assert_eq!(rgb_to_hsv([0, 0, 0]).1, 0.0);
}

#[test]
fn reflect101_indices() {
    let got: Vec<usize> = (-3..8).map(|i| reflect101(i, 5)).collect();
    assert_eq!(got, vec![3, 2, 1, 0, 1, 2, 3, 4, 3, 2, 1]);
}

#[test]
fn convolve_constant_is_zero() {
    let out = convolve(&gray(6, 5, |_, _| 77), &Kernel2D::laplacian()).unwrap();
    assert!(out.data().iter().all(|&v| v == 0.0));
}

#[test]
fn convolve_impulse_gives_flipped_kernel() {
    let k = Kernel2D::from_rows([[1.0, 2.0, 3.0], [4.0, 5.0, 6.0], [7.0, 8.0, 9.0]]).unwrap();
    let img = gray(7, 7, |x, y| if (x, y) == (3, 3) { 1 } else { 0 });
    let out = convolve(&img, &k).unwrap();
    for dy in 0..3 {
        for dx in 0..3 {
            let got = out.get(2 + dx, 2 + dy);
            assert_eq!(got, k.weight(2 - dy, 2 - dx));
        }
    }
    assert_eq!(out.get(0, 0), 0.0);
}

#[test]
fn laplacian_of_ramp_has_zero_interior() {
    let img = gray(5, 5, |x, y| (10 * x + 3 * y) as u8);
    let out = convolve(&img, &Kernel2D::laplacian()).unwrap();
    for y in 1..4 {
        for x in 1..4 {
            assert_eq!(out.get(x, y), 0.0);
        }
    }
}

#[test]
fn kernel_validation() {
    assert!(Kernel2D::new(4, vec![0.0; 16]).is_err());
    assert!(Kernel2D::new(1, vec![1.0]).is_err());
    let err = convolve(&gray(2, 5, |_, _| 0), &Kernel2D::laplacian()).unwrap_err();
    assert!(matches!(err, ImageryError::KernelLargerThanImage { .. }));
}

#[test]
fn histogram_cases() {
    let h = histogram(&gray(4, 3, |_, _| 100), None).unwrap();
    assert_eq!(h.bins()[100], 12);
    assert_eq!(h.total(), 12);

    let h = histogram(&gray(4, 4, |x, _| if x < 2 { 0 } else { 255 }), None).unwrap();
    assert_eq!((h.bins()[0], h.bins()[255]), (8, 8));

    let img = gray(8, 8, |_, _| 9);
    let quarter = RegionMask::from_fn(8, 8, |x, y| x < 4 && y < 4);
    assert_eq!(histogram(&img, Some(&quarter)).unwrap().total(), 16);

    let none = RegionMask::empty(8, 8);
    assert!(matches!(
        histogram(&img, Some(&none)),
        Err(ImageryError::EmptyRegion)
    ));
    let wrong = RegionMask::full(4, 4);
    assert!(histogram(&img, Some(&wrong)).is_err());
}

#[test]
fn percentile_cases() {
    let constant = Histogram::from_values(std::iter::repeat_n(100u8, 50));
    for p in [0.0, 0.3, 1.0] {
        assert_eq!(percentile(&constant, p).unwrap(), 100);
    }
    let ramp = Histogram::from_values(0..=255u8);
    assert_eq!(percentile(&ramp, 0.5).unwrap(), 127);
    assert_eq!(percentile(&ramp, 0.0).unwrap(), 0);

    let mut bins = [0u64; 256];
    bins[0] = 90;
    bins[255] = 10;
    assert_eq!(percentile(&Histogram::from_bins(bins), 0.95).unwrap(), 255);

    let mut sparse = [0u64; 256];
    sparse[40] = 3;
    assert_eq!(percentile(&Histogram::from_bins(sparse), 0.0).unwrap(), 40);

    assert!(matches!(
        percentile(&Histogram::from_bins([0; 256]), 0.5),
        Err(ImageryError::EmptyHistogram)
    ));
}

#[test]
fn gradient_cases() {
    let flat = gradient_magnitude(&gray(5, 5, |_, _| 40)).unwrap();
    assert!(flat.data().iter().all(|&v| v == 0.0));

    let step = gradient_magnitude(&gray(12, 6, |x, _| if x < 6 { 0 } else { 255 })).unwrap();
    let row: Vec<f64> = (0..12).map(|x| step.get(x, 3)).collect();
    let max = row.iter().cloned().fold(0.0, f64::max);
    assert!(max > 0.0);
    assert!(row[5] == max || row[6] == max);
    assert_eq!(row[1], 0.0);
    assert_eq!(row[10], 0.0);

    // Anti-diagonal edge: by transpose symmetry Gx == Gy; hand value 765 at (5,5).
    let diag = Raster::from_image(&gray(10, 10, |x, y| if x + y >= 10 { 255 } else { 0 }));
    let (gx, gy) = sobel(&diag).unwrap();
    assert_eq!(gx.get(5, 5), 765.0);
    assert_eq!(gy.get(5, 5), 765.0);
    for y in 1..9 {
        for x in 1..9 {
            assert_eq!(gx.get(x, y), gy.get(x, y));
        }
    }

    assert!(matches!(
        gradient_magnitude(&gray(2, 2, |_, _| 0)),
        Err(ImageryError::ImageTooSmall { .. })
    ));
}

#[test]
fn component_cases() {
    assert!(connected_components(&RegionMask::empty(5, 5)).is_empty());

    let squares = RegionMask::from_fn(10, 10, |x, y| (x < 3 && y < 3) || (x >= 6 && x < 9 && y >= 6 && y < 9));
    let comps = connected_components(&squares);
    assert_eq!(comps.len(), 2);
    assert!(comps.iter().all(|c| c.pixel_count == 9));
    assert_eq!(comps[1].bbox, BoundingBox { x0: 6, y0: 6, x1: 8, y1: 8 });

    let chain = RegionMask::from_fn(6, 6, |x, y| x == y);
    assert_eq!(connected_components(&chain).len(), 1);

    let filtered = remove_small_components(&squares.union(&RegionMask::from_fn(10, 10, |x, y| (x, y) == (5, 0))), 5);
    assert_eq!(filtered, squares);
}

#[test]
fn kmeans_cases() {
    let samples = vec![[0.0, 0.0, 0.0], [2.0, 4.0, 6.0], [4.0, 2.0, 0.0]];
    let one = kmeans(&samples, 1, 3).unwrap();
    assert_eq!(one.centroids[0], [2.0, 2.0, 2.0]);

    let all = kmeans(&samples, 3, 3).unwrap();
    assert_eq!(all.wcss(), 0.0);

    let mut two = Vec::new();
    for i in 0..40 {
        let j = (i % 5) as f64 - 2.0;
        two.push([10.0 + j, 10.0 - j, 10.0]);
        two.push([240.0 - j, 240.0, 240.0 + j]);
    }
    let km = kmeans(&two, 2, 11).unwrap();
    let mut cs = km.centroids.clone();
    cs.sort_by(|a, b| a[0].partial_cmp(&b[0]).unwrap());
    for (c, m) in cs.iter().zip([10.0, 240.0]) {
        assert!(c.iter().all(|v| (v - m).abs() <= 1.0), "{c:?}");
    }
    assert_eq!(km.cluster_sizes(), vec![40, 40]);
    assert_eq!(km, kmeans(&two, 2, 11).unwrap());

    assert!(matches!(
        kmeans(&samples, 4, 0),
        Err(ImageryError::TooFewSamples { .. })
    ));
}

#[test]
fn kmeans_on_identical_points() {
    let same = vec![[5.0, 5.0, 5.0]; 30];
    let km = kmeans(&same, 3, 1).unwrap();
    assert_eq!(km.cluster_sizes().iter().max(), Some(&30));
}

#[test]
fn resize_same_size_is_identity_and_shapes() {
    let img = ImageBuffer::from_fn_rgb(13, 9, |x, y| [(x * 7) as u8, (y * 11) as u8, 3]);
    assert_eq!(resize_bilinear(&img, 13, 9), img);
    let small = resize_bilinear(&img, 5, 4);
    assert_eq!((small.width(), small.height(), small.channels()), (5, 4, 3));
    let constant = ImageBuffer::filled(31, 17, [9, 99, 199]);
    assert_eq!(resize_bilinear(&constant, 112, 112), ImageBuffer::filled(112, 112, [9, 99, 199]));
}

#[test]
fn gaussian_blur_preserves_constant() {
    let img = ImageBuffer::filled(20, 20, [50, 60, 70]);
    assert_eq!(gaussian_blur(&img, 2.0), img);
    assert_eq!(gaussian_blur(&img, 0.0), img);
}

#[test]
fn polygon_and_dilate() {
    let square = RegionMask::polygon(10, 10, &[(2.0, 2.0), (6.0, 2.0), (6.0, 6.0), (2.0, 6.0)]);
    assert!(square.get(3, 3) && !square.get(7, 3));
    let dot = RegionMask::from_fn(9, 9, |x, y| (x, y) == (4, 4));
    assert_eq!(dot.dilate(2).pixel_count(), 13);
}

#[test]
fn png_round_trip_and_text_rejection() {
    let img = ImageBuffer::from_fn_rgb(7, 5, |x, y| [(x * 30) as u8, (y * 40) as u8, 200]);
    let bytes = encode_png(&img).unwrap();
    assert_eq!(decode_image(&bytes).unwrap(), img);
    assert!(matches!(
        decode_image(b"this is not an image"),
        Err(ImageryError::Decode(_))
    ));
}

proptest! {
    #[test]
    fn convolution_is_linear(seed in any::<u64>(), a in -4.0f64..4.0) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let base = Raster::from_fn(9, 7, |_, _| rng.random_range(0.0..255.0));
        let k = Kernel2D::new(3, (0..9).map(|i| i as f64 - 4.0).collect()).unwrap();
        let lhs = convolve_raster(&base.map(|v| a * v), &k).unwrap();
        let rhs = convolve_raster(&base, &k).unwrap().map(|v| a * v);
        for (l, r) in lhs.data().iter().zip(rhs.data()) {
            prop_assert!((l - r).abs() <= 1e-9);
        }
    }

    #[test]
    fn histogram_conserves_mass(bits in proptest::collection::vec(any::<bool>(), 48)) {
        let img = gray(8, 6, |x, y| (x * 31 + y * 7) as u8);
        let mask = RegionMask::from_bits(8, 6, bits);
        match histogram(&img, Some(&mask)) {
            Ok(h) => prop_assert_eq!(h.total() as usize, mask.pixel_count()),
            Err(_) => prop_assert_eq!(mask.pixel_count(), 0),
        }
    }

    #[test]
    fn grayscale_of_achromatic_is_identity(v in any::<u8>()) {
        let g = to_grayscale(&ImageBuffer::filled(3, 2, [v, v, v])).unwrap();
        prop_assert!(g.data().iter().all(|&p| p == v));
    }

    #[test]
    fn components_partition_mask(bits in proptest::collection::vec(any::<bool>(), 100)) {
        let mask = RegionMask::from_bits(10, 10, bits);
        let labeled = label_components(&mask);
        let total: usize = labeled.components.iter().map(|c| c.pixel_count).sum();
        prop_assert_eq!(total, mask.pixel_count());
        for (i, &l) in labeled.labels.iter().enumerate() {
            prop_assert_eq!(l != 0, mask.get_index(i));
        }
    }

    #[test]
    fn kmeans_wcss_non_increasing(seed in any::<u64>(), k in 1usize..5) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let samples: Vec<[f64; 3]> = (0..60)
            .map(|_| [rng.random_range(0.0..255.0), rng.random_range(0.0..255.0), rng.random_range(0.0..255.0)])
            .collect();
        let km = kmeans(&samples, k, seed).unwrap();
        for w in km.wcss_history.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-9);
        }
        prop_assert_eq!(km.assignments.len(), samples.len());
    }
}

use proptest::prelude::*;

use kai_core::imgcore::Image;
use kai_core::metrics::image_quality;
use kai_core::registration::RegParams;
use kai_core::srloss::{
    curl_map, cv_loss, feature_loss, ConvLayer, ConvStack, FeatureExtractor, IdentityExtractor,
};

fn image(w: usize, h: usize) -> impl Strategy<Value = Image> {
    prop::collection::vec(0u8..=255, w * h)
        .prop_map(move |d| Image::new(w, h, 255, d.into_iter().map(f64::from).collect()).unwrap())
}

/// Direct nested-loop correlation with ReLU, one layer at a time.
fn conv_oracle(img: &Image, layers: &[ConvLayer]) -> (usize, usize, Vec<f64>) {
    let (mut w, mut h) = img.dims();
    let mut cur = img.data().to_vec();
    for layer in layers {
        let (ow, oh) = (w - 2, h - 2);
        let mut next = vec![0.0; ow * oh];
        for y in 0..oh {
            for x in 0..ow {
                let mut acc = layer.bias;
                for ky in 0..3 {
                    for kx in 0..3 {
                        acc += layer.kernel[ky * 3 + kx] * cur[(y + ky) * w + x + kx];
                    }
                }
                next[y * ow + x] = acc.max(0.0);
            }
        }
        cur = next;
        w = ow;
        h = oh;
    }
    (w, h, cur)
}

fn square(x0: usize) -> Image {
    let data = (0..32 * 32)
        .map(|i| {
            if (x0..x0 + 8).contains(&(i % 32)) && (10..18).contains(&(i / 32)) {
                200.0
            } else {
                0.0
            }
        })
        .collect();
    Image::new(32, 32, 255, data).unwrap()
}

proptest! {
    #[test]
    fn seeded_stack_matches_direct_convolution(img in image(9, 7), seed in any::<u64>(), depth in 1usize..3) {
        let stack = ConvStack::seeded(seed, depth).unwrap();
        let got = stack.extract(&img).unwrap();
        let (w, h, want) = conv_oracle(&img, stack.layers());
        prop_assert_eq!((got.width, got.height), (w, h));
        for (a, b) in got.data.iter().zip(&want) {
            prop_assert!((a - b).abs() <= 1e-9 * b.abs().max(1.0));
        }
    }

    #[test]
    fn identity_feature_loss_is_mse(a in image(5, 4), b in image(5, 4)) {
        prop_assert_eq!(feature_loss(&a, &b, &IdentityExtractor).unwrap(), image_quality(&a, &b).unwrap().mse);
    }
}

#[test]
fn seeded_stack_is_reproducible() {
    assert_eq!(
        ConvStack::seeded(42, 2).unwrap().layers(),
        ConvStack::seeded(42, 2).unwrap().layers()
    );
    assert_ne!(
        ConvStack::seeded(42, 2).unwrap().layers(),
        ConvStack::seeded(43, 2).unwrap().layers()
    );
}

#[test]
fn cv_loss_is_mse_of_curl_maps() {
    let p = RegParams::default();
    let (hr, sr, reference) = (square(10), square(11), square(12));
    let a = curl_map(&hr, &reference, &p).unwrap();
    let b = curl_map(&sr, &reference, &p).unwrap();
    let oracle = a
        .data
        .iter()
        .zip(&b.data)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        / a.data.len() as f64;
    assert_eq!(cv_loss(&hr, &sr, &reference, &p).unwrap(), oracle);
    assert_eq!(cv_loss(&hr, &hr, &reference, &p).unwrap(), 0.0);
}

use proptest::prelude::*;

use kai_core::imgcore::Image;
use kai_core::metrics::{
    evaluate_detections, image_quality, iou, parse_detections_csv, parse_voc_xml, rtp, BoundingBox,
    Detection, GroundTruth, Predictions,
};

fn image(w: usize, h: usize) -> impl Strategy<Value = Image> {
    prop::collection::vec(0u8..=255, w * h)
        .prop_map(move |d| Image::new(w, h, 255, d.into_iter().map(f64::from).collect()).unwrap())
}

fn bbox() -> impl Strategy<Value = BoundingBox> {
    (0u8..10, 0u8..10, 1u8..6, 1u8..6).prop_map(|(x, y, w, h)| {
        let (x, y) = (f64::from(x), f64::from(y));
        BoundingBox::new(x, y, x + f64::from(w), y + f64::from(h)).unwrap()
    })
}

proptest! {
    #[test]
    fn ssim_bounded_and_symmetric(x in image(6, 5), y in image(6, 5)) {
        let a = image_quality(&x, &y).unwrap();
        let b = image_quality(&y, &x).unwrap();
        prop_assert_eq!(a, b);
        prop_assert!(a.ssim >= -1.0 && a.ssim <= 1.0);
        prop_assert!(a.mse >= 0.0);
    }

    #[test]
    fn iou_symmetric_and_bounded(a in bbox(), b in bbox()) {
        let v = iou(&a, &b);
        prop_assert_eq!(v, iou(&b, &a));
        prop_assert!((0.0..=1.0).contains(&v));
        prop_assert_eq!(iou(&a, &a), 1.0);
    }

    #[test]
    fn adding_a_false_positive_never_raises_ap(boxes in prop::collection::vec(bbox(), 1..4), extra in bbox()) {
        let gts: Vec<GroundTruth> = boxes
            .iter()
            .map(|b| GroundTruth { image_id: "a".into(), label: "x".into(), bbox: *b })
            .collect();
        let dets: Vec<Detection> = boxes
            .iter()
            .enumerate()
            .map(|(i, b)| Detection::new("a", "x", 0.9 - 0.1 * i as f64, *b).unwrap())
            .collect();
        let base = evaluate_detections(&dets, &gts, 0.5).unwrap().mean_ap.unwrap();
        prop_assert_eq!(base, 1.0);
        let mut more = dets.clone();
        more.push(Detection::new("elsewhere", "x", 0.95, extra).unwrap());
        let worse = evaluate_detections(&more, &gts, 0.5).unwrap().mean_ap.unwrap();
        prop_assert!(worse <= base);
    }

    #[test]
    fn rtp_ignores_model_order(labels in prop::collection::vec(prop::collection::vec(0u8..3, 6), 2..5)) {
        let models: Vec<Predictions> = labels
            .iter()
            .map(|m| m.iter().enumerate().map(|(i, l)| (format!("i{i}"), l.to_string())).collect())
            .collect();
        let mut reversed = models.clone();
        reversed.reverse();
        prop_assert_eq!(rtp(&models).unwrap(), rtp(&reversed).unwrap());
    }
}

#[test]
fn parsed_fixture_matches_by_filename_stem() {
    let gt = parse_voc_xml(
        b"<annotation><filename>case7.png</filename><object><name>lesion</name>\
          <bndbox><xmin>2</xmin><ymin>2</ymin><xmax>12</xmax><ymax>12</ymax></bndbox></object></annotation>",
    )
    .unwrap();
    let dets =
        parse_detections_csv(b"case7,lesion,0.8,2,3,12,12\ncase7,lesion,0.5,2,2,12,12\n").unwrap();
    let eval = evaluate_detections(&dets, &gt, 0.5).unwrap();
    let c = &eval.classes["lesion"];
    assert_eq!((c.true_positives, c.detections, c.ground_truths), (1, 2, 1));
    assert_eq!(c.ap, 1.0);
    assert_eq!(c.pr_points, vec![(1.0, 1.0), (1.0, 0.5)]);
}

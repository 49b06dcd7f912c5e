use approx::assert_abs_diff_eq;
use proptest::prelude::*;

use kai_core::geometry::{
    curl, field_to_image, jacobian_determinant, render_grid, Curl, GridRenderParams,
};
use kai_core::imgcore::{ScalarField, VectorField};

fn field(w: usize, h: usize, c: usize) -> impl Strategy<Value = VectorField> {
    prop::collection::vec(-3.0f64..3.0, w * h * c)
        .prop_map(move |d| VectorField::new(w, h, c, d).unwrap())
}

fn planar(f: &VectorField) -> Vec<f64> {
    match curl(f).unwrap() {
        Curl::Scalar(s) => s.data().to_vec(),
        Curl::Vector(_) => unreachable!(),
    }
}

fn combine(a: f64, f: &VectorField, b: f64, g: &VectorField) -> VectorField {
    let data = f
        .data()
        .iter()
        .zip(g.data())
        .map(|(p, q)| a * p + b * q)
        .collect();
    VectorField::new(f.width(), f.height(), f.channels(), data).unwrap()
}

proptest! {
    #[test]
    fn jd_ignores_constant_offsets(f in field(7, 5, 2), cx in -10.0f64..10.0, cy in -10.0f64..10.0) {
        let shifted = VectorField::new(7, 5, 2, f.data().chunks(2).flat_map(|v| [v[0] + cx, v[1] + cy]).collect()).unwrap();
        let a = jacobian_determinant(&f).unwrap();
        let b = jacobian_determinant(&shifted).unwrap();
        for (p, q) in a.data().iter().zip(b.data()) {
            assert_abs_diff_eq!(p, q, epsilon = 1e-9);
        }
    }

    #[test]
    fn curl_is_linear(f in field(6, 6, 3), g in field(6, 6, 3), a in -2.0f64..2.0, b in -2.0f64..2.0) {
        let lhs = curl(&combine(a, &f, b, &g)).unwrap().components();
        let (cf, cg) = (curl(&f).unwrap().components(), curl(&g).unwrap().components());
        for c in 0..3 {
            for i in 0..36 {
                assert_abs_diff_eq!(lhs[c].data()[i], a * cf[c].data()[i] + b * cg[c].data()[i], epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn planar_curl_is_linear(f in field(5, 8, 2), g in field(5, 8, 2), a in -2.0f64..2.0) {
        let lhs = planar(&combine(a, &f, 1.0, &g));
        let (cf, cg) = (planar(&f), planar(&g));
        for i in 0..lhs.len() {
            assert_abs_diff_eq!(lhs[i], a * cf[i] + cg[i], epsilon = 1e-9);
        }
    }

    #[test]
    fn normalization_is_monotone(values in prop::collection::vec(-50.0f64..50.0, 12)) {
        let img = field_to_image(&ScalarField::new(4, 3, values.clone()).unwrap(), 255).unwrap();
        for i in 0..12 {
            for j in 0..12 {
                if values[i] <= values[j] {
                    prop_assert!(img.data()[i] <= img.data()[j]);
                }
            }
        }
        prop_assert!(img.data().iter().all(|v| (0.0..=255.0).contains(v)));
    }
}

#[test]
fn three_channel_curl_of_shear() {
    // u = (0, 0, 0.5 x - 0.25 y) has curl (-0.25, -0.5, 0).
    let data = (0..25)
        .flat_map(|i| [0.0, 0.0, 0.5 * (i % 5) as f64 - 0.25 * (i / 5) as f64])
        .collect();
    let c = curl(&VectorField::new(5, 5, 3, data).unwrap())
        .unwrap()
        .components();
    for v in c[0].data() {
        assert_abs_diff_eq!(*v, -0.25, epsilon = 1e-12);
    }
    for v in c[1].data() {
        assert_abs_diff_eq!(*v, -0.5, epsilon = 1e-12);
    }
    assert!(c[2].data().iter().all(|&v| v == 0.0));
}

#[test]
fn zero_field_grid_is_the_plain_grid() {
    let img = render_grid(
        &VectorField::zeros(17, 9, 2).unwrap(),
        &GridRenderParams::default(),
        255,
    )
    .unwrap();
    for y in 0..9 {
        for x in 0..17 {
            let on_line = x % 8 == 0 || y % 8 == 0;
            assert_eq!(img.get(x, y), if on_line { 0.0 } else { 255.0 });
        }
    }
}

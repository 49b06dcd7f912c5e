//! Fixture files and golden-report plumbing shared by the CLI test targets.
#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use kai_core::imgcore::{encode_field, encode_image, Image, VectorField};

pub struct Case {
    pub name: &'static str,
    pub args: &'static [&'static str],
    pub exit: i32,
}

pub const CASES: &[Case] = &[
    Case {
        name: "register",
        args: &[
            "register", "--fixed", "sq_a.pgm", "--moving", "sq_b.pgm", "--out", "u.vf1",
        ],
        exit: 0,
    },
    Case {
        name: "warp",
        args: &[
            "warp",
            "--image",
            "sq_b.pgm",
            "--field",
            "shift.vf1",
            "--out",
            "warped.pgm",
        ],
        exit: 0,
    },
    Case {
        name: "atlas",
        args: &[
            "atlas",
            "--images",
            "sq_a.pgm,sq_b.pgm",
            "--rounds",
            "1",
            "--out",
            "atlas.pgm",
        ],
        exit: 0,
    },
    Case {
        name: "jd",
        args: &[
            "jd", "--field", "zero.vf1", "--out", "jd.pgm", "--raw", "jd.vf1",
        ],
        exit: 0,
    },
    Case {
        name: "curl",
        args: &[
            "curl", "--field", "rot.vf1", "--out", "cv.vf1", "--images", "cv.pgm",
        ],
        exit: 0,
    },
    Case {
        name: "curl3",
        args: &[
            "curl",
            "--field",
            "tri.vf1",
            "--out",
            "cv3.vf1",
            "--images",
            "c0.pgm,c1.pgm,c2.pgm",
        ],
        exit: 0,
    },
    Case {
        name: "grid",
        args: &[
            "grid",
            "--field",
            "rot.vf1",
            "--spacing",
            "4",
            "--out",
            "grid.pgm",
        ],
        exit: 0,
    },
    Case {
        name: "metrics_img",
        args: &["metrics", "img", "--x", "sq_a.pgm", "--y", "sq_a.pgm"],
        exit: 0,
    },
    Case {
        name: "metrics_img_diff",
        args: &["metrics", "img", "--x", "sq_a.pgm", "--y", "sq_b.pgm"],
        exit: 0,
    },
    Case {
        name: "metrics_det",
        args: &[
            "metrics", "det", "--dets", "dets.csv", "--gt", "gt.xml", "--iou", "0.5",
        ],
        exit: 0,
    },
    Case {
        name: "metrics_det_multi",
        args: &[
            "metrics",
            "det",
            "--dets",
            "dets2.csv",
            "--gt",
            "gt.xml,gt2.xml",
        ],
        exit: 0,
    },
    Case {
        name: "metrics_rtp",
        args: &["metrics", "rtp", "--preds", "p1.csv,p2.csv,p3.csv"],
        exit: 0,
    },
    Case {
        name: "srloss_down4",
        args: &["srloss", "down4", "--image", "sq_a.pgm", "--out", "low.pgm"],
        exit: 0,
    },
    Case {
        name: "srloss_adv",
        args: &[
            "srloss",
            "adv",
            "--dreal",
            "dreal.csv",
            "--dfake",
            "dfake.csv",
        ],
        exit: 0,
    },
    Case {
        name: "srloss_feat",
        args: &["srloss", "feat", "--hr", "sq_a.pgm", "--sr", "sq_b.pgm"],
        exit: 0,
    },
    Case {
        name: "srloss_feat_conv",
        args: &[
            "srloss",
            "feat",
            "--hr",
            "sq_a.pgm",
            "--sr",
            "sq_b.pgm",
            "--extractor",
            "conv",
            "--seed",
            "42",
            "--depth",
            "2",
        ],
        exit: 0,
    },
    Case {
        name: "srloss_cv",
        args: &[
            "srloss", "cv", "--hr", "sq_a.pgm", "--sr", "sq_a.pgm", "--ref", "sq_b.pgm",
        ],
        exit: 0,
    },
    Case {
        name: "quality_eval",
        args: &["quality", "eval", "--matrix", "d.csv", "--weights", "p.csv"],
        exit: 0,
    },
    Case {
        name: "quality_select",
        args: &[
            "quality",
            "select",
            "--tasks",
            "tasks.csv",
            "--anchor",
            "a",
            "--n",
            "2",
        ],
        exit: 0,
    },
    Case {
        name: "quality_fit",
        args: &[
            "quality",
            "fit",
            "--tasks",
            "tasks.csv",
            "--steps",
            "200",
            "--lr",
            "0.05",
        ],
        exit: 0,
    },
    Case {
        name: "coupled_identity",
        args: &["coupled", "--input", "sq_a.pgm", "--ref", "sq_a.pgm"],
        exit: 0,
    },
    Case {
        name: "coupled_noise",
        args: &[
            "coupled", "--input", "gray.pgm", "--ref", "gray.pgm", "--noise", "16", "--seed", "3",
            "--out", "cand.pgm",
        ],
        exit: 0,
    },
    Case {
        name: "coupled_rejected",
        args: &[
            "coupled",
            "--input",
            "gray.pgm",
            "--ref",
            "gray.pgm",
            "--noise",
            "16",
            "--ssim-min",
            "1",
            "--max-iters",
            "3",
        ],
        exit: 2,
    },
];

pub fn square(w: usize, h: usize, x0: usize, y0: usize, side: usize, value: f64) -> Image {
    let data = (0..w * h)
        .map(|i| {
            let (x, y) = (i % w, i / w);
            if (x0..x0 + side).contains(&x) && (y0..y0 + side).contains(&y) {
                value
            } else {
                0.0
            }
        })
        .collect();
    Image::new(w, h, 255, data).unwrap()
}

const GT: &str = "<annotation><filename>img1.png</filename>\
<object><name>lesion</name><bndbox><xmin>10</xmin><ymin>10</ymin><xmax>20</xmax><ymax>20</ymax></bndbox></object>\
</annotation>";

const GT2: &str = "<annotation><filename>img2.png</filename>\
<object><name>lesion</name><bndbox><xmin>0</xmin><ymin>0</ymin><xmax>8</xmax><ymax>8</ymax></bndbox></object>\
<object><name>cyst</name><bndbox><xmin>30</xmin><ymin>30</ymin><xmax>40</xmax><ymax>40</ymax></bndbox></object>\
</annotation>";

/// Writes every file the cases refer to into `dir`.
pub fn write_fixtures(dir: &Path) {
    let put = |name: &str, bytes: &[u8]| fs::write(dir.join(name), bytes).unwrap();
    put("sq_a.pgm", &encode_image(&square(32, 32, 10, 10, 8, 200.0)));
    put("sq_b.pgm", &encode_image(&square(32, 32, 12, 10, 8, 200.0)));
    put(
        "gray.pgm",
        &encode_image(&Image::filled(16, 16, 255, 128.0).unwrap()),
    );
    put(
        "zero.vf1",
        &encode_field(&VectorField::zeros(8, 8, 2).unwrap()),
    );
    put(
        "shift.vf1",
        &encode_field(&VectorField::from_fn(32, 32, |_, _| [2.0, 0.0]).unwrap()),
    );
    let rot = VectorField::from_fn(16, 16, |x, y| {
        [-0.5 * (y - 8.0) * 0.25, 0.5 * (x - 8.0) * 0.25]
    })
    .unwrap();
    put("rot.vf1", &encode_field(&rot));
    let tri: Vec<f64> = (0..8 * 8)
        .flat_map(|i| {
            let (x, y) = ((i % 8) as f64, (i / 8) as f64);
            [0.25 * y, -0.5 * x, 0.125 * x + 0.25 * y]
        })
        .collect();
    put(
        "tri.vf1",
        &encode_field(&VectorField::new(8, 8, 3, tri).unwrap()),
    );
    put(
        "dets.csv",
        b"image_id,label,score,xmin,ymin,xmax,ymax\nimg1,lesion,0.9,10,10,20,20\n",
    );
    put(
        "dets2.csv",
        b"img1,lesion,0.9,11,10,21,20\nimg2,lesion,0.8,0,0,8,8\nimg2,lesion,0.7,50,50,60,60\nimg2,polyp,0.6,1,1,5,5\nimg2,cyst,0.3,30,31,40,40\n",
    );
    put("gt.xml", GT.as_bytes());
    put("gt2.xml", GT2.as_bytes());
    put(
        "p1.csv",
        b"image_id,label\ni1,benign\ni2,malignant\ni3,benign\ni4,benign\n",
    );
    put(
        "p2.csv",
        b"i1,benign\ni2,malignant\ni3,malignant\ni4,benign\n",
    );
    put(
        "p3.csv",
        b"i1,benign\ni2,malignant\ni3,benign\ni4,malignant\n",
    );
    put("dreal.csv", b"0.9\n0.8\n0.5\n");
    put("dfake.csv", b"0.1,0.4,0.5\n");
    put("d.csv", b"1,0.5\n0.2,1\n");
    put("p.csv", b"0.25\n0.5\n");
    put(
        "tasks.csv",
        b"task,y,x1,x2\na,1,1,0\na,2,0,1\na,3,1,1\nb,2,1,0\nb,4,0,1\nc,-1,1,0\nc,-2,0,1\nd,1.5,1,0\nd,1,0,1\nd,3,1,1\n",
    );
}

pub fn kai() -> PathBuf {
    PathBuf::from(env!("CARGO_BIN_EXE_kai"))
}

/// Runs the binary in `dir` and returns exit code, stdout and stderr.
pub fn run(dir: &Path, args: &[&str]) -> (i32, String, String) {
    let out = Command::new(kai())
        .args(args)
        .current_dir(dir)
        .output()
        .expect("spawn kai");
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

pub fn golden_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/golden")
        .join(format!("{name}.txt"))
}

/// Compares a report with its golden file, or rewrites the file when
/// `UPDATE_GOLDEN` is set.
pub fn check_golden(name: &str, actual: &str) -> Result<(), String> {
    let path = golden_path(name);
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        fs::write(&path, actual).unwrap();
        return Ok(());
    }
    let expected = fs::read_to_string(&path).map_err(|e| format!("{}: {e}", path.display()))?;
    if expected == actual {
        Ok(())
    } else {
        Err(format!(
            "{name}: report differs from golden\n--- expected\n{expected}--- actual\n{actual}"
        ))
    }
}

/// Runs every case twice, checking exit codes, golden reports and
/// byte-identical repeats. Returns one message per failure.
pub fn run_all_cases(dir: &Path) -> Vec<String> {
    let mut failures = Vec::new();
    for case in CASES {
        let (code, first, err) = run(dir, case.args);
        if code != case.exit {
            failures.push(format!(
                "{}: exit {code}, expected {} ({err})",
                case.name, case.exit
            ));
            continue;
        }
        if let Err(e) = check_golden(case.name, &first) {
            failures.push(e);
        }
        let (_, second, _) = run(dir, case.args);
        if second != first {
            failures.push(format!("{}: repeated run differs", case.name));
        }
    }
    failures
}

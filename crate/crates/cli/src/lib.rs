//! Argument grammar and command dispatch for the `kai` binary.
//!
//! Every subcommand reads its inputs, calls one library operation, writes
//! any artifacts and returns a [`RunReport`]. Printing and exit codes live
//! in `main`.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use kai_core::coupled::{coupled_run, CoupledConfig, NoiseProducer};
use kai_core::geometry::{self, field_to_image, GridRenderParams};
use kai_core::imgcore::{
    decode_field, decode_image, encode_field, encode_image, encode_scalar_field, Image,
    ScalarField, VectorField, DEFAULT_MAX_VALUE,
};
use kai_core::metrics::{
    self, parse_detections_csv, parse_predictions_csv, parse_voc_xml, ClassWarning,
};
use kai_core::quality::{self, EvalMatrix, RegressionModel};
use kai_core::registration::{self, RegParams};
use kai_core::report::{RunReport, Status};
use kai_core::srloss::{self, ConvStack, FeatureExtractor, IdentityExtractor};

#[derive(Debug, Parser)]
#[command(
    name = "kai",
    version,
    about = "Displacement-field analysis and imaging metrics"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Register a moving image onto a fixed image.
    Register(RegisterArgs),
    /// Warp an image by a displacement field.
    Warp {
        #[arg(long)]
        image: PathBuf,
        #[arg(long)]
        field: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Build a mean-shape template from several images.
    Atlas {
        #[arg(long, value_delimiter = ',', required = true)]
        images: Vec<PathBuf>,
        #[arg(long)]
        rounds: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Jacobian determinant of a field.
    Jd {
        #[arg(long)]
        field: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Also write the unnormalized map as a 1-channel VF1 file.
        #[arg(long)]
        raw: Option<PathBuf>,
    },
    /// Curl of a field.
    Curl {
        #[arg(long)]
        field: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// One normalized PGM per curl component.
        #[arg(long, value_delimiter = ',')]
        images: Vec<PathBuf>,
    },
    /// Render a regular grid deformed by a field.
    Grid {
        #[arg(long)]
        field: PathBuf,
        #[arg(long, default_value_t = 8)]
        spacing: usize,
        #[arg(long)]
        out: PathBuf,
    },
    #[command(subcommand)]
    Metrics(MetricsCommand),
    #[command(subcommand)]
    Srloss(SrlossCommand),
    #[command(subcommand)]
    Quality(QualityCommand),
    /// Generate, evaluate and penalize until the quality gate passes.
    Coupled(CoupledArgs),
}

#[derive(Debug, Args)]
pub struct RegisterArgs {
    #[arg(long)]
    fixed: PathBuf,
    #[arg(long)]
    moving: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 3)]
    levels: usize,
    #[arg(long, default_value_t = 200)]
    iters: usize,
    #[arg(long, default_value_t = 0.5)]
    step: f64,
    #[arg(long, default_value_t = 1.0)]
    smooth: f64,
    #[arg(long, default_value_t = 1e-5)]
    tol: f64,
}

#[derive(Debug, Subcommand)]
pub enum MetricsCommand {
    /// MSE, PSNR and SSIM between two images.
    Img {
        #[arg(long)]
        x: PathBuf,
        #[arg(long)]
        y: PathBuf,
    },
    /// Per-class AP and mAP of detections against VOC annotations.
    Det {
        #[arg(long)]
        dets: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        gt: Vec<PathBuf>,
        #[arg(long, default_value_t = 0.5)]
        iou: f64,
    },
    /// Fraction of images on which all models agree.
    Rtp {
        #[arg(long, value_delimiter = ',', required = true)]
        preds: Vec<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Extractor {
    Identity,
    Conv,
}

#[derive(Debug, Subcommand)]
pub enum SrlossCommand {
    /// 4x box-average downsampling.
    Down4 {
        #[arg(long)]
        image: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Adversarial objective from discriminator outputs.
    Adv {
        #[arg(long)]
        dreal: PathBuf,
        #[arg(long)]
        dfake: PathBuf,
    },
    /// Feature-space MSE.
    Feat {
        #[arg(long)]
        hr: PathBuf,
        #[arg(long)]
        sr: PathBuf,
        #[arg(long, value_enum, default_value_t = Extractor::Identity)]
        extractor: Extractor,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = 2)]
        depth: usize,
    },
    /// Curl-map loss against a shared reference.
    Cv {
        #[arg(long)]
        hr: PathBuf,
        #[arg(long)]
        sr: PathBuf,
        #[arg(long = "ref")]
        reference: PathBuf,
    },
}

#[derive(Debug, Subcommand)]
pub enum QualityCommand {
    /// Weighted attribute evaluation `d . p`.
    Eval {
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long)]
        weights: PathBuf,
    },
    /// Rank tasks by gradient similarity to an anchor task.
    Select {
        #[arg(long)]
        tasks: PathBuf,
        #[arg(long)]
        anchor: String,
        #[arg(long)]
        n: usize,
    },
    /// Joint-gradient fit of a linear quality model.
    Fit {
        #[arg(long)]
        tasks: PathBuf,
        #[arg(long)]
        steps: usize,
        #[arg(long, default_value_t = 0.01)]
        lr: f64,
    },
}

#[derive(Debug, Args)]
pub struct CoupledArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long = "ref")]
    reference: PathBuf,
    #[arg(long, default_value_t = 5)]
    max_iters: usize,
    #[arg(long, default_value_t = 30.0)]
    psnr_min: f64,
    #[arg(long, default_value_t = 0.9)]
    ssim_min: f64,
    #[arg(long, default_value_t = 0.5)]
    penalty: f64,
    /// Initial amplitude of the additive-noise producer; 0 passes the input through.
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the last candidate here.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn read(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).with_context(|| format!("cannot read {}", path.display()))
}

fn write(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).with_context(|| format!("cannot write {}", path.display()))
}

fn load_image(path: &Path) -> Result<Image> {
    decode_image(&read(path)?).with_context(|| format!("bad PGM {}", path.display()))
}

fn load_field(path: &Path) -> Result<VectorField> {
    decode_field(&read(path)?).with_context(|| format!("bad VF1 {}", path.display()))
}

fn names(paths: &[&PathBuf]) -> Vec<String> {
    paths.iter().map(|p| p.display().to_string()).collect()
}

fn report(command: &str, inputs: &[&PathBuf], outputs: &[&PathBuf]) -> RunReport {
    let mut r = RunReport::new(command);
    r.inputs = names(inputs);
    r.outputs = names(outputs);
    r
}

fn scalar_summary(r: &mut RunReport, prefix: &str, f: &ScalarField) {
    let d = f.data();
    let min = d.iter().copied().fold(f64::INFINITY, f64::min);
    let max = d.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mean = d.iter().sum::<f64>() / d.len() as f64;
    r.number(format!("{prefix}_max"), max)
        .number(format!("{prefix}_mean"), mean)
        .number(format!("{prefix}_min"), min);
}

/// Executes one parsed command.
pub fn execute(cli: Cli) -> Result<RunReport> {
    match cli.command {
        Command::Register(a) => {
            let params = RegParams {
                levels: a.levels,
                iters_per_level: a.iters,
                step: a.step,
                smooth_weight: a.smooth,
                tol: a.tol,
            };
            let reg = registration::register_with_trace(
                &load_image(&a.fixed)?,
                &load_image(&a.moving)?,
                &params,
            )?;
            write(&a.out, &encode_field(&reg.field))?;
            let mut r = report("register", &[&a.fixed, &a.moving], &[&a.out]);
            r.iterations = reg.levels.iter().map(|l| l.energies.len() - 1).sum();
            r.number("energy_final", reg.final_energy)
                .number("energy_initial", reg.initial_energy)
                .number("max_displacement", reg.field.max_abs());
            Ok(r)
        }
        Command::Warp { image, field, out } => {
            let warped = registration::warp(&load_image(&image)?, &load_field(&field)?)?;
            write(&out, &encode_image(&warped))?;
            let mut r = report("warp", &[&image, &field], &[&out]);
            r.number("mean", warped.mean());
            Ok(r)
        }
        Command::Atlas {
            images,
            rounds,
            out,
        } => {
            let imgs = images
                .iter()
                .map(|p| load_image(p))
                .collect::<Result<Vec<_>>>()?;
            let atlas = registration::build_atlas(&imgs, &RegParams::default(), rounds)?;
            write(&out, &encode_image(&atlas))?;
            let mut r = report("atlas", &images.iter().collect::<Vec<_>>(), &[&out]);
            r.iterations = rounds;
            r.number("mean", atlas.mean());
            Ok(r)
        }
        Command::Jd { field, out, raw } => {
            let jd = geometry::jacobian_determinant(&load_field(&field)?)?;
            write(
                &out,
                &encode_image(&field_to_image(&jd, DEFAULT_MAX_VALUE)?),
            )?;
            let mut outputs = vec![&out];
            if let Some(raw) = &raw {
                write(raw, &encode_scalar_field(&jd))?;
                outputs.push(raw);
            }
            let mut r = report("jd", &[&field], &outputs);
            scalar_summary(&mut r, "jd", &jd);
            r.number(
                "folded",
                jd.data().iter().filter(|&&v| v <= 0.0).count() as f64,
            );
            Ok(r)
        }
        Command::Curl { field, out, images } => {
            let c = geometry::curl(&load_field(&field)?)?;
            let comps = c.components();
            match &c {
                geometry::Curl::Scalar(s) => write(&out, &encode_scalar_field(s))?,
                geometry::Curl::Vector(v) => write(&out, &encode_field(v))?,
            }
            if !images.is_empty() && images.len() != comps.len() {
                bail!("--images needs {} paths, got {}", comps.len(), images.len());
            }
            for (path, comp) in images.iter().zip(&comps) {
                write(
                    path,
                    &encode_image(&field_to_image(comp, DEFAULT_MAX_VALUE)?),
                )?;
            }
            let mut outputs = vec![&out];
            outputs.extend(&images);
            let mut r = report("curl", &[&field], &outputs);
            r.number("components", comps.len() as f64);
            for (i, comp) in comps.iter().enumerate() {
                scalar_summary(&mut r, &format!("curl{i}"), comp);
            }
            Ok(r)
        }
        Command::Grid {
            field,
            spacing,
            out,
        } => {
            let p = GridRenderParams {
                spacing,
                ..Default::default()
            };
            let img = geometry::render_grid(&load_field(&field)?, &p, DEFAULT_MAX_VALUE)?;
            write(&out, &encode_image(&img))?;
            let mut r = report("grid", &[&field], &[&out]);
            r.number("spacing", spacing as f64);
            Ok(r)
        }
        Command::Metrics(m) => metrics_command(m),
        Command::Srloss(s) => srloss_command(s),
        Command::Quality(q) => quality_command(q),
        Command::Coupled(a) => {
            let cfg = CoupledConfig {
                max_iters: a.max_iters,
                psnr_min: a.psnr_min,
                ssim_min: a.ssim_min,
                penalty_scale: a.penalty,
            };
            let input = load_image(&a.input)?;
            let mut producer = NoiseProducer {
                amplitude: a.noise,
                seed: a.seed,
            };
            let mut r = coupled_run(&input, &mut producer, &load_image(&a.reference)?, &cfg)?;
            r.inputs = names(&[&a.input, &a.reference]);
            if let Some(out) = &a.out {
                let last = kai_core::coupled::AdjustableProducer::produce(&producer, &input)
                    .map_err(|e| anyhow!("producer failed: {e}"))?;
                write(out, &encode_image(&last))?;
                r.outputs = names(&[out]);
            }
            Ok(r)
        }
    }
}

fn metrics_command(m: MetricsCommand) -> Result<RunReport> {
    match m {
        MetricsCommand::Img { x, y } => {
            let q = metrics::image_quality(&load_image(&x)?, &load_image(&y)?)?;
            let mut r = report("metrics img", &[&x, &y], &[]);
            r.number("mse", q.mse)
                .number("psnr", q.psnr)
                .number("ssim", q.ssim);
            Ok(r)
        }
        MetricsCommand::Det { dets, gt, iou } => {
            let d = parse_detections_csv(&read(&dets)?)
                .with_context(|| format!("bad detections {}", dets.display()))?;
            let mut g = Vec::new();
            for path in &gt {
                g.extend(
                    parse_voc_xml(&read(path)?)
                        .with_context(|| format!("bad annotation {}", path.display()))?,
                );
            }
            let eval = metrics::evaluate_detections(&d, &g, iou)?;
            let mut inputs = vec![&dets];
            inputs.extend(&gt);
            let mut r = report("metrics det", &inputs, &[]);
            r.optional("map", eval.mean_ap).number("iou", iou);
            for (class, c) in &eval.classes {
                r.number(format!("ap.{class}"), c.ap)
                    .number(format!("detections.{class}"), c.detections as f64)
                    .number(format!("ground_truths.{class}"), c.ground_truths as f64)
                    .number(format!("true_positives.{class}"), c.true_positives as f64);
                if let Some(ClassWarning::NoGroundTruth) = c.warning {
                    r.text(format!("warning.{class}"), "no_ground_truth");
                }
            }
            Ok(r)
        }
        MetricsCommand::Rtp { preds } => {
            let models = preds
                .iter()
                .map(|p| {
                    parse_predictions_csv(&read(p)?)
                        .with_context(|| format!("bad predictions {}", p.display()))
                })
                .collect::<Result<Vec<_>>>()?;
            let value = metrics::rtp(&models)?;
            let mut r = report("metrics rtp", &preds.iter().collect::<Vec<_>>(), &[]);
            r.number("images", models[0].len() as f64)
                .number("models", models.len() as f64)
                .number("rtp", value);
            Ok(r)
        }
    }
}

fn srloss_command(s: SrlossCommand) -> Result<RunReport> {
    match s {
        SrlossCommand::Down4 { image, out } => {
            let img = load_image(&image)?;
            let low = srloss::downsample4x(&img)?;
            write(&out, &encode_image(&low))?;
            let mut r = report("srloss down4", &[&image], &[&out]);
            r.number("mean_in", img.mean())
                .number("mean_out", low.mean());
            Ok(r)
        }
        SrlossCommand::Adv { dreal, dfake } => {
            let real = quality::parse_vector_csv(&read(&dreal)?)?;
            let fake = quality::parse_vector_csv(&read(&dfake)?)?;
            let mut r = report("srloss adv", &[&dreal, &dfake], &[]);
            r.number("objective", srloss::adversarial_objective(&real, &fake)?);
            Ok(r)
        }
        SrlossCommand::Feat {
            hr,
            sr,
            extractor,
            seed,
            depth,
        } => {
            let phi: Box<dyn FeatureExtractor> = match extractor {
                Extractor::Identity => Box::new(IdentityExtractor),
                Extractor::Conv => Box::new(ConvStack::seeded(seed, depth)?),
            };
            let loss = srloss::feature_loss(&load_image(&hr)?, &load_image(&sr)?, phi.as_ref())?;
            let mut r = report("srloss feat", &[&hr, &sr], &[]);
            r.number("loss", loss);
            Ok(r)
        }
        SrlossCommand::Cv { hr, sr, reference } => {
            let loss = srloss::cv_loss(
                &load_image(&hr)?,
                &load_image(&sr)?,
                &load_image(&reference)?,
                &RegParams::default(),
            )?;
            let mut r = report("srloss cv", &[&hr, &sr, &reference], &[]);
            r.number("loss", loss);
            Ok(r)
        }
    }
}

fn quality_command(q: QualityCommand) -> Result<RunReport> {
    match q {
        QualityCommand::Eval { matrix, weights } => {
            let e = EvalMatrix::new(
                quality::parse_matrix_csv(&read(&matrix)?)?,
                quality::parse_vector_csv(&read(&weights)?)?,
            )?;
            let mut r = report("quality eval", &[&matrix, &weights], &[]);
            for (i, v) in quality::ordered_attribute_eval(&e).into_iter().enumerate() {
                r.number(format!("x.{i:04}"), v);
            }
            Ok(r)
        }
        QualityCommand::Select { tasks, anchor, n } => {
            let all = quality::parse_tasks_csv(&read(&tasks)?)?;
            let a = all
                .iter()
                .find(|t| t.id() == anchor)
                .ok_or_else(|| anyhow!("no task with id {anchor:?}"))?;
            let candidates: Vec<_> = all.iter().filter(|t| t.id() != anchor).cloned().collect();
            let model = RegressionModel::zeros(a.feature_len());
            let sel = quality::select_meta_tasks(&candidates, a, &model, n)?;
            let mut r = report("quality select", &[&tasks], &[]);
            r.text("anchor", anchor.as_str());
            if sel.anchor_excluded {
                r.text("anchor_gradient", "zero");
            }
            for (i, (id, s)) in sel.ids.iter().zip(&sel.similarities).enumerate() {
                r.text(format!("rank.{:04}", i + 1), id.as_str())
                    .number(format!("similarity.{:04}", i + 1), *s);
            }
            if !sel.excluded.is_empty() {
                r.text("excluded", sel.excluded.join(","));
            }
            Ok(r)
        }
        QualityCommand::Fit { tasks, steps, lr } => {
            let all = quality::parse_tasks_csv(&read(&tasks)?)?;
            let fit = quality::joint_gradient_fit(&all, steps, lr)?;
            let mut r = report("quality fit", &[&tasks], &[]);
            r.iterations = steps;
            r.number("bias", fit.model.bias);
            r.number(
                "loss_initial",
                quality::joint_loss(&all, &RegressionModel::zeros(fit.model.weights.len()))?,
            );
            r.number("loss_final", quality::joint_loss(&all, &fit.model)?);
            for (i, w) in fit.model.weights.iter().enumerate() {
                r.number(format!("weight.{i:04}"), *w);
            }
            Ok(r)
        }
    }
}

/// Exit code for a finished run: 0 unless the quality gate rejected.
pub fn exit_code(r: &RunReport) -> i32 {
    match r.status {
        Status::Accepted => 0,
        Status::Rejected => 2,
        Status::Error => 1,
    }
}

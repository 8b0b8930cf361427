use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use eat_core::data::{load_dataset, synth_generate, Dataset, Split, SynthSpec};
use eat_core::explain::{explain, Explanation};
use eat_core::far::{far_batch, FarOptions, FarReport};
use eat_core::gradcam::{grad_cam, render_map, Target};
use eat_core::io::write_atomic;
use eat_core::parallel::threads_from_env;
use eat_core::train::{evaluate, train, EpochReport};
use eat_core::{EatModel, Mode};

use crate::checkpoint;
use crate::config::RunConfig;
use crate::error::{CliError, Result};

#[derive(Debug, Parser)]
#[command(name = "eat", version, about = "Attribute-based multi-task classification with explanations")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate the synthetic biased dataset.
    SynthGen(SynthGenArgs),
    /// Train a baseline or attribute model.
    Train(TrainArgs),
    /// Category and attribute accuracy of a checkpoint.
    Eval(EvalArgs),
    /// Textual explanation and attention overlays for one image.
    Explain(ExplainArgs),
    /// Foreground attention rate of one or two checkpoints.
    Far(FarArgs),
}

#[derive(Debug, Args)]
pub struct SynthGenArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 8)]
    pub classes: usize,
    #[arg(long, default_value_t = 6)]
    pub attrs: usize,
    /// Training images per class.
    #[arg(long, default_value_t = 200)]
    pub per_class: usize,
    #[arg(long, default_value_t = 50)]
    pub test_per_class: usize,
    #[arg(long, default_value_t = 32)]
    pub image_size: usize,
    #[arg(long, default_value_t = 0.95)]
    pub bias_train: f64,
    #[arg(long, default_value_t = 0.0)]
    pub bias_test: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Dataset directory; overrides `data` in the config.
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub mode: Option<Mode>,
    /// Overrides `out_ckpt` in the config.
    #[arg(long)]
    pub out_ckpt: Option<PathBuf>,
    /// Training log; defaults to the checkpoint path with `.log.csv` appended.
    #[arg(long)]
    pub log: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub ckpt: PathBuf,
    #[arg(long, default_value = "test")]
    pub split: Split,
    /// Per-image predictions as CSV.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExplainArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub ckpt: PathBuf,
    #[arg(long)]
    pub image_id: String,
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Trunk block for the attention maps; defaults to the last one.
    #[arg(long)]
    pub layer: Option<usize>,
}

#[derive(Debug, Args)]
pub struct FarArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub ckpt_a: PathBuf,
    #[arg(long)]
    pub ckpt_b: Option<PathBuf>,
    /// Output directory for `far_a.csv` and `far_b.csv`.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value = "test")]
    pub split: Split,
    /// Only score correctly classified images.
    #[arg(long)]
    pub correct_only: bool,
    #[arg(long)]
    pub layer: Option<usize>,
}

pub fn run(cli: Cli, out: &mut dyn Write) -> Result<()> {
    match cli.command {
        Command::SynthGen(a) => synth_gen(a, out),
        Command::Train(a) => train_cmd(a, out),
        Command::Eval(a) => eval_cmd(a, out),
        Command::Explain(a) => explain_cmd(a, out),
        Command::Far(a) => far_cmd(a, out),
    }
}

fn say(out: &mut dyn Write, text: &str) {
    let _ = writeln!(out, "{text}");
}

fn load_ckpt(path: &Path) -> Result<EatModel<f32>> {
    checkpoint::load(path).map_err(|source| CliError::Checkpoint {
        path: path.to_path_buf(),
        source,
    })
}

fn check_compatible(model: &EatModel<f32>, ds: &Dataset) -> Result<()> {
    let cfg = model.config();
    let size = ds.image_size().unwrap_or(cfg.image_size);
    if cfg.n_classes != ds.n_classes() || cfg.n_attributes != ds.n_attributes() || cfg.image_size != size {
        return Err(CliError::Spec(format!(
            "checkpoint expects {} classes, {} attributes, {}px images; dataset has {}, {}, {}px",
            cfg.n_classes,
            cfg.n_attributes,
            cfg.image_size,
            ds.n_classes(),
            ds.n_attributes(),
            size
        )));
    }
    Ok(())
}

fn synth_gen(a: SynthGenArgs, out: &mut dyn Write) -> Result<()> {
    let spec = SynthSpec {
        n_classes: a.classes,
        n_attributes: a.attrs,
        train_per_class: a.per_class,
        test_per_class: a.test_per_class,
        image_size: a.image_size,
        bias_train: a.bias_train,
        bias_test: a.bias_test,
        seed: a.seed,
    };
    spec.validate().map_err(|e| CliError::Spec(e.to_string()))?;
    let generated = synth_generate(&spec)?;
    generated.dataset.write(&a.out)?;
    say(
        out,
        &format!(
            "wrote {} images ({} classes, {} attributes) to {}",
            generated.dataset.samples.len(),
            spec.n_classes,
            spec.n_attributes,
            a.out.display()
        ),
    );
    Ok(())
}

fn log_csv(reports: &[EpochReport]) -> String {
    let mut s = String::from("epoch,l_c,l_a,acc,attr_acc\n");
    let opt = |v: Option<f64>| v.map(|v| format!("{v:.6}")).unwrap_or_default();
    for r in reports {
        let _ = writeln!(
            s,
            "{},{:.6},{},{:.6},{}",
            r.epoch,
            r.l_c,
            opt(r.l_a),
            r.accuracy,
            opt(r.attr_accuracy)
        );
    }
    s
}

fn train_cmd(a: TrainArgs, out: &mut dyn Write) -> Result<()> {
    let mut run = match &a.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(mode) = a.mode {
        run.model.mode = mode;
    }
    if let Some(seed) = a.seed {
        run.model.seed = seed;
        run.train.seed = seed;
    }
    let data = a
        .data
        .or(run.data.clone())
        .ok_or_else(|| CliError::Spec("no dataset given (--data or `data` in the config)".into()))?;
    let ckpt = a
        .out_ckpt
        .or(run.out_ckpt.clone())
        .ok_or_else(|| CliError::Spec("no checkpoint path given (--out-ckpt or `out_ckpt`)".into()))?;
    let ds = load_dataset(&data)?;
    let size = ds
        .image_size()
        .ok_or_else(|| CliError::Spec(format!("dataset {} is empty", data.display())))?;
    for (key, found) in [
        ("n_classes", ds.n_classes()),
        ("n_attributes", ds.n_attributes()),
        ("image_size", size),
    ] {
        let slot = match key {
            "n_classes" => &mut run.model.n_classes,
            "n_attributes" => &mut run.model.n_attributes,
            _ => &mut run.model.image_size,
        };
        if run.explicit.contains(key) && *slot != found {
            return Err(CliError::Spec(format!("config sets {key}={} but the dataset has {found}", *slot)));
        }
        *slot = found;
    }
    run.model.validate().map_err(|e| CliError::Spec(e.to_string()))?;
    run.train.validate().map_err(|e| CliError::Spec(e.to_string()))?;
    run.train.threads = threads_from_env();

    let mut model = EatModel::new(run.model.clone())?;
    let train_set = ds.split(Split::Train);
    let reports = train(&mut model, &train_set, &run.train, |r| {
        log::info!("epoch {} done, train accuracy {:.4}", r.epoch, r.accuracy)
    })?;
    let log_path = a.log.unwrap_or_else(|| {
        let mut p = ckpt.clone().into_os_string();
        p.push(".log.csv");
        PathBuf::from(p)
    });
    checkpoint::save(&ckpt, &model)?;
    write_atomic(&log_path, log_csv(&reports).as_bytes())?;
    if let Some(last) = reports.last() {
        say(
            out,
            &format!(
                "trained {} for {} epochs: train accuracy {:.4}",
                run.model.mode, last.epoch, last.accuracy
            ),
        );
    }
    say(out, &format!("checkpoint {}", ckpt.display()));
    Ok(())
}

fn eval_cmd(a: EvalArgs, out: &mut dyn Write) -> Result<()> {
    let model = load_ckpt(&a.ckpt)?;
    let ds = load_dataset(&a.data)?;
    check_compatible(&model, &ds)?;
    let samples = ds.split(a.split);
    if samples.is_empty() {
        return Err(CliError::Spec(format!("split {} is empty", a.split)));
    }
    let report = evaluate(&model, &samples, threads_from_env())?;
    say(out, &format!("category_accuracy={:.6}", report.accuracy));
    match report.attr_accuracy {
        Some(v) => say(out, &format!("mean_attribute_accuracy={v:.6}")),
        None => say(out, "mean_attribute_accuracy="),
    }
    if let Some(path) = &a.out {
        let mut csv = String::from("image_id,label,predicted");
        for j in 0..model.config().n_attributes {
            let _ = write!(csv, ",p_attr{j}");
        }
        csv.push('\n');
        for p in &report.predictions {
            let _ = write!(csv, "{},{},{}", p.image_id, p.label, p.predicted);
            for v in &p.attribute_probs {
                let _ = write!(csv, ",{v:.6}");
            }
            csv.push('\n');
        }
        write_atomic(path, csv.as_bytes())?;
    }
    Ok(())
}

fn default_layer(model: &EatModel<f32>, layer: Option<usize>) -> Result<usize> {
    let n = model.config().trunk_channels.len();
    match layer {
        None => Ok(n - 1),
        Some(l) if l < n => Ok(l),
        Some(l) => Err(CliError::Spec(format!("layer {l} does not exist; the trunk has {n} blocks"))),
    }
}

fn explain_cmd(a: ExplainArgs, out: &mut dyn Write) -> Result<()> {
    let model = load_ckpt(&a.ckpt)?;
    if !model.config().attributes_enabled() {
        return Err(CliError::Spec("explanations need a checkpoint trained in eat mode".into()));
    }
    let ds = load_dataset(&a.data)?;
    check_compatible(&model, &ds)?;
    let layer = default_layer(&model, a.layer)?;
    let sample = ds
        .find(&a.image_id)
        .ok_or_else(|| CliError::Spec(format!("no image `{}` in {}", a.image_id, a.data.display())))?;
    let k = 3.min(model.config().n_attributes);
    let mut ex: Explanation = explain(
        &model,
        &sample.image,
        &sample.image_id,
        ds.attributes.class_names(),
        ds.attributes.attribute_names(),
        k,
    )?;
    ex.true_class = Some(sample.label);

    let id = &sample.image_id;
    let class_file = format!("{id}.class.ppm");
    let class_map = grad_cam(&model, &sample.image, Target::Class(ex.predicted_class), layer)?;
    write_atomic(&a.out_dir.join(&class_file), &render_map(&class_map, &sample.image)?.encode())?;
    ex.class_map_file = Some(class_file);
    for reason in &mut ex.top_attributes {
        let i = reason.attribute_index;
        let file = format!("{id}.attr{i}.ppm");
        let map = grad_cam(&model, &sample.image, Target::Attribute(i), layer)?;
        write_atomic(&a.out_dir.join(&file), &render_map(&map, &sample.image)?.encode())?;
        reason.map_file = Some(file);
    }
    let json = serde_json::to_string_pretty(&ex).map_err(|e| CliError::Spec(e.to_string()))?;
    write_atomic(&a.out_dir.join(format!("{id}.explain.json")), json.as_bytes())?;
    say(out, &ex.sentence);
    Ok(())
}

fn far_cmd(a: FarArgs, out: &mut dyn Write) -> Result<()> {
    let ds = load_dataset(&a.data)?;
    let samples = ds.split(a.split);
    if !samples.iter().any(|s| s.mask.is_some()) {
        return Err(CliError::Spec(format!(
            "split {} of {} has no foreground masks",
            a.split,
            a.data.display()
        )));
    }
    let mut reports: Vec<FarReport> = Vec::new();
    let ckpts: Vec<(&str, &PathBuf)> = std::iter::once(("a", &a.ckpt_a))
        .chain(a.ckpt_b.as_ref().map(|p| ("b", p)))
        .collect();
    for (tag, path) in ckpts {
        let model = load_ckpt(path)?;
        check_compatible(&model, &ds)?;
        let opts = FarOptions {
            layer: default_layer(&model, a.layer)?,
            correct_only: a.correct_only,
            threads: threads_from_env(),
        };
        let label = path.display().to_string();
        let report = far_batch(&model, &samples, &label, opts)?;
        write_atomic(&a.out.join(format!("far_{tag}.csv")), report.to_csv().as_bytes())?;
        say(out, &format!("mean_far_{tag}={:.6}", report.mean_far));
        reports.push(report);
    }
    if let [ra, rb] = reports.as_slice() {
        say(out, &format!("ratio={:.6}", rb.mean_far / ra.mean_far));
    }
    Ok(())
}

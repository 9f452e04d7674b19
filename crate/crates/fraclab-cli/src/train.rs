//! `fraclab train`: fit the recurrent estimator on streamed trajectories.

use std::path::PathBuf;

use fraclab::generators::Generator;
use fraclab::neural::{history_csv, save_model, train as train_model, Architecture, LossKind, TrainConfig};
use fraclab::Result;

use crate::config::{
    default_out_dir, load_config, parse_f64, parse_path, parse_u64, parse_usize, pick, Echo,
};
use crate::process_args::{resolve_process, HurstPolicy, ProcessFlags};

#[derive(Debug, clap::Args)]
pub struct Args {
    /// Config file supplying any of the settings below.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    process: ProcessFlags,
    /// Path length of the training sequences.
    #[arg(long)]
    length: Option<String>,
    /// Training epochs.
    #[arg(long)]
    epochs: Option<String>,
    /// Fresh sequences streamed per epoch.
    #[arg(long)]
    sequences_per_epoch: Option<String>,
    /// Optimizer batch size.
    #[arg(long)]
    batch_size: Option<String>,
    /// Sequences per validation batch.
    #[arg(long)]
    validation_batch_size: Option<String>,
    /// Fresh validation batches after each epoch.
    #[arg(long)]
    validation_batches: Option<String>,
    #[arg(long)]
    learning_rate: Option<String>,
    /// Decoupled weight decay rate.
    #[arg(long)]
    weight_decay: Option<String>,
    #[arg(long)]
    beta1: Option<String>,
    #[arg(long)]
    beta2: Option<String>,
    #[arg(long)]
    epsilon: Option<String>,
    /// Training loss: mse or mae.
    #[arg(long)]
    loss: Option<String>,
    /// Batches generated ahead of the optimizer (0 = lockstep).
    #[arg(long)]
    prefetch_batches: Option<String>,
    /// Stacked recurrent layers.
    #[arg(long)]
    lstm_layers: Option<String>,
    /// Recurrent state width.
    #[arg(long)]
    hidden: Option<String>,
    /// First regression head width.
    #[arg(long)]
    head1: Option<String>,
    /// Second regression head width.
    #[arg(long)]
    head2: Option<String>,
    /// Master seed for weights, stream, and validation.
    #[arg(long)]
    seed: Option<String>,
    /// Best-validation model file.
    #[arg(long)]
    model_out: Option<String>,
    /// Last-epoch model file.
    #[arg(long)]
    final_model_out: Option<String>,
    /// Loss history CSV.
    #[arg(long)]
    history_out: Option<String>,
    /// Directory for default outputs and the config echo.
    #[arg(long)]
    out_dir: Option<String>,
}

pub fn run(args: &Args) -> Result<()> {
    let mut cfg = load_config(&args.config)?;
    cfg.expect_command("train")?;

    let process = resolve_process(&args.process, &mut cfg, HurstPolicy::ForcedUniform)?;
    let length = pick("length", &args.length, &mut cfg, 400, parse_usize)?;
    let seed = pick("seed", &args.seed, &mut cfg, 0, parse_u64)?;

    let mut tc = TrainConfig::new(process.params, length, seed);
    tc.fou_scheme = process.fou_scheme;
    tc.epochs = pick("epochs", &args.epochs, &mut cfg, tc.epochs, parse_usize)?;
    tc.sequences_per_epoch = pick(
        "sequences_per_epoch",
        &args.sequences_per_epoch,
        &mut cfg,
        tc.sequences_per_epoch,
        parse_usize,
    )?;
    tc.batch_size = pick("batch_size", &args.batch_size, &mut cfg, tc.batch_size, parse_usize)?;
    tc.validation_batch_size = pick(
        "validation_batch_size",
        &args.validation_batch_size,
        &mut cfg,
        tc.validation_batch_size,
        parse_usize,
    )?;
    tc.validation_batches = pick(
        "validation_batches",
        &args.validation_batches,
        &mut cfg,
        tc.validation_batches,
        parse_usize,
    )?;
    tc.learning_rate = pick(
        "learning_rate",
        &args.learning_rate,
        &mut cfg,
        tc.learning_rate,
        parse_f64,
    )?;
    tc.weight_decay = pick(
        "weight_decay",
        &args.weight_decay,
        &mut cfg,
        tc.weight_decay,
        parse_f64,
    )?;
    tc.beta1 = pick("beta1", &args.beta1, &mut cfg, tc.beta1, parse_f64)?;
    tc.beta2 = pick("beta2", &args.beta2, &mut cfg, tc.beta2, parse_f64)?;
    tc.epsilon = pick("epsilon", &args.epsilon, &mut cfg, tc.epsilon, parse_f64)?;
    tc.loss = pick("loss", &args.loss, &mut cfg, tc.loss, |_, s| LossKind::parse(s))?;
    tc.prefetch_batches = pick(
        "prefetch_batches",
        &args.prefetch_batches,
        &mut cfg,
        tc.prefetch_batches,
        parse_usize,
    )?;

    let base = Architecture::default();
    tc.architecture = Architecture {
        input_dim: 1,
        lstm_layers: pick("lstm_layers", &args.lstm_layers, &mut cfg, base.lstm_layers, parse_usize)?,
        hidden: pick("hidden", &args.hidden, &mut cfg, base.hidden, parse_usize)?,
        head_dims: [
            pick("head1", &args.head1, &mut cfg, base.head_dims[0], parse_usize)?,
            pick("head2", &args.head2, &mut cfg, base.head_dims[1], parse_usize)?,
            1,
        ],
    };

    let out_dir = pick(
        "out_dir",
        &args.out_dir,
        &mut cfg,
        default_out_dir(&seed.to_string()),
        parse_path,
    )?;
    let model_out = pick("model_out", &args.model_out, &mut cfg, out_dir.join("model.frhn"), parse_path)?;
    let final_model_out = pick(
        "final_model_out",
        &args.final_model_out,
        &mut cfg,
        out_dir.join("model-final.frhn"),
        parse_path,
    )?;
    let history_out = pick(
        "history_out",
        &args.history_out,
        &mut cfg,
        out_dir.join("history.csv"),
        parse_path,
    )?;
    cfg.finish()?;
    tc.validate()?;

    let mut echo = Echo::new("train");
    process.echo(&mut echo);
    echo.push("length", length);
    echo.push("epochs", tc.epochs);
    echo.push("sequences_per_epoch", tc.sequences_per_epoch);
    echo.push("batch_size", tc.batch_size);
    echo.push("validation_batch_size", tc.validation_batch_size);
    echo.push("validation_batches", tc.validation_batches);
    echo.push("learning_rate", tc.learning_rate);
    echo.push("weight_decay", tc.weight_decay);
    echo.push("beta1", tc.beta1);
    echo.push("beta2", tc.beta2);
    echo.push("epsilon", tc.epsilon);
    echo.push("loss", tc.loss.name());
    echo.push("prefetch_batches", tc.prefetch_batches);
    echo.push("lstm_layers", tc.architecture.lstm_layers);
    echo.push("hidden", tc.architecture.hidden);
    echo.push("head1", tc.architecture.head_dims[0]);
    echo.push("head2", tc.architecture.head_dims[1]);
    echo.push("seed", seed);
    echo.push("out_dir", out_dir.display());
    echo.push("model_out", model_out.display());
    echo.push("final_model_out", final_model_out.display());
    echo.push("history_out", history_out.display());
    echo.announce(&out_dir)?;

    let gen = Generator::new();
    let outcome = train_model(&gen, &tc)?;

    for p in [&model_out, &final_model_out, &history_out] {
        if let Some(parent) = p.parent() {
            if !parent.as_os_str().is_empty() {
                std::fs::create_dir_all(parent)?;
            }
        }
    }
    save_model(&model_out, &outcome.model)?;
    save_model(&final_model_out, &outcome.final_model)?;
    std::fs::write(&history_out, history_csv(&outcome.history, tc.loss))?;

    for e in &outcome.history {
        println!(
            "epoch {}: train {} validation {}",
            e.epoch, e.train_loss, e.val_loss
        );
    }
    println!("best epoch: {}", outcome.best_epoch);
    println!("wrote best model to {}", model_out.display());
    println!("wrote final model to {}", final_model_out.display());
    println!("wrote loss history to {}", history_out.display());
    Ok(())
}

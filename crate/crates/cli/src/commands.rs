use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use esnn_core::checkpoint::{write_atomic, write_atomic_with, Checkpoint, Provenance};
use esnn_core::config::RunConfig;
use esnn_core::datasets::{
    frame_count, load_mnist, write_container, write_csv_index, Frame, MnistSet, OmnistGenerator,
    OmnistHeader, Split,
};
use esnn_core::harness::{
    assign_labels, eval_mnist, eval_omnist, export_trajectory, train_unsupervised, LabelMap,
    Metrics,
};
use esnn_core::snn::{write_raster, Network};
use serde_json::json;

use crate::{CliError, Common, DatasetArg, SplitArg};

pub const REVISION: &str = concat!("esnn-", env!("CARGO_PKG_VERSION"));

struct Ctx {
    cfg: RunConfig,
    hash: String,
    out: PathBuf,
    quiet: bool,
}

impl Ctx {
    fn new(common: &Common) -> Result<Self, CliError> {
        let mut cfg = match &common.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        if let Some(s) = common.seed {
            cfg.seeds = vec![s];
        }
        std::fs::create_dir_all(&common.out).map_err(|e| CliError::output(&common.out, e))?;
        Ok(Self {
            hash: cfg.hash(),
            cfg,
            out: common.out.clone(),
            quiet: common.quiet,
        })
    }

    fn say(&self, msg: impl AsRef<str>) {
        if !self.quiet {
            eprintln!("{}", msg.as_ref());
        }
    }

    fn mnist(&self, split: Split) -> Result<MnistSet, CliError> {
        Ok(load_mnist(&self.cfg.dataset.mnist_dir, split)?)
    }

    fn provenance(&self, seed: u64) -> Provenance {
        Provenance {
            config_hash: self.hash.clone(),
            seed,
            revision: REVISION.to_string(),
        }
    }

    /// Rebuilds the network stored in `ck` with this run's parameters.
    fn network(&self, ck: &Checkpoint, seed: u64) -> Result<Network, CliError> {
        let params = self.cfg.network.resized(ck.n_input, ck.n_exc);
        let p = &self.cfg.plasticity;
        Ok(Network::from_parts(
            params,
            p.triplet,
            p.homeostasis,
            ck.weights.clone(),
            ck.thetas.clone(),
            seed,
        )?)
    }
}

/// Job parallelism from `ESNN_THREADS`, else the core count.
fn threads() -> usize {
    std::env::var("ESNN_THREADS")
        .ok()
        .and_then(|s| s.parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

/// Runs `job` once per seed, at most `threads()` at a time.
fn per_seed<F>(seeds: &[u64], job: F) -> Result<(), CliError>
where
    F: Fn(u64) -> Result<(), CliError> + Sync,
{
    for chunk in seeds.chunks(threads()) {
        let results: Vec<Result<(), CliError>> = std::thread::scope(|s| {
            let handles: Vec<_> = chunk
                .iter()
                .map(|&seed| {
                    let job = &job;
                    s.spawn(move || job(seed))
                })
                .collect();
            handles
                .into_iter()
                .map(|h| {
                    h.join()
                        .unwrap_or_else(|_| Err(CliError::Runtime("worker panicked".into())))
                })
                .collect()
        });
        results.into_iter().collect::<Result<Vec<()>, _>>()?;
    }
    Ok(())
}

fn save_bytes(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    write_atomic(path, bytes).map_err(|e| CliError::output(path, e))
}

fn load_checkpoint(path: &Path) -> Result<Checkpoint, CliError> {
    Ok(Checkpoint::load(path)?)
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map_or("model".into(), |s| s.to_string_lossy().into_owned())
}

fn take(set: &MnistSet, n: usize) -> MnistSet {
    if n == 0 || n >= set.len() {
        set.clone()
    } else {
        set.truncated(n)
    }
}

pub fn generate(common: &Common, split: SplitArg, limit: Option<usize>) -> Result<(), CliError> {
    let ctx = Ctx::new(common)?;
    let mut spec = ctx.cfg.dataset.omnist;
    if let Some(s) = common.seed {
        spec.seed = s;
    }
    let splits: &[Split] = match split {
        SplitArg::Train => &[Split::Train],
        SplitArg::Test => &[Split::Test],
        SplitArg::Both => &[Split::Train, Split::Test],
    };
    println!("{}", serde_json::to_string(&spec).expect("spec serializes"));
    for &sp in splits {
        let set = take(&ctx.mnist(sp)?, limit.unwrap_or(0));
        let frames = frame_count(set.len(), &spec, sp);
        let name = match sp {
            Split::Train => "train",
            Split::Test => "test",
        };
        let header = OmnistHeader {
            split: sp,
            spec,
            frames,
        };
        let bin = ctx.out.join(format!("omnist-{name}.bin"));
        write_atomic_with(&bin, |f| {
            write_container(
                f,
                &header,
                OmnistGenerator::new(&set, spec, sp).map_err(std::io::Error::other)?,
            )
            .map(|_| ())
        })
        .map_err(|e| CliError::output(&bin, e))?;
        let csv = ctx.out.join(format!("omnist-{name}.csv"));
        write_atomic_with(&csv, |f| {
            write_csv_index(
                f,
                OmnistGenerator::new(&set, spec, sp).map_err(std::io::Error::other)?,
            )
        })
        .map_err(|e| CliError::output(&csv, e))?;
        println!(
            "{name}: {} source digits, {frames} frames -> {}",
            set.len(),
            bin.display()
        );
    }
    Ok(())
}

pub fn train(common: &Common, limit: Option<usize>) -> Result<(), CliError> {
    let ctx = Ctx::new(common)?;
    let set = take(
        &ctx.mnist(Split::Train)?,
        limit.unwrap_or(ctx.cfg.dataset.train_images),
    );
    per_seed(&ctx.cfg.seeds, |seed| {
        let p = &ctx.cfg.plasticity;
        let mut net = Network::new(ctx.cfg.network, p.triplet, p.homeostasis, seed)?;
        let every = (set.len() / 20).max(1);
        let mut progress = |i: usize| {
            if i.is_multiple_of(every) {
                ctx.say(format!("seed {seed}: trained {i}/{}", set.len()));
            }
        };
        let stats = train_unsupervised(&mut net, &set, &ctx.cfg.protocol, Some(&mut progress))?;
        let path = ctx.out.join(format!("model-seed{seed}.ckpt"));
        let ck = Checkpoint {
            n_input: net.params().n_input,
            n_exc: net.params().n_exc,
            weights: net.weights(),
            thetas: net.thetas(),
            labels: None,
            provenance: ctx.provenance(seed),
        };
        save_bytes(&path, &ck.to_bytes())?;
        println!(
            "seed {seed}: {} images, {} presentations ({} retries) in {:.1}s -> {}",
            set.len(),
            stats.presentations,
            stats.retries,
            stats.runtime_s,
            path.display()
        );
        Ok(())
    })
}

pub fn label(common: &Common, checkpoint: &Path, limit: Option<usize>) -> Result<(), CliError> {
    let ctx = Ctx::new(common)?;
    let mut ck = load_checkpoint(checkpoint)?;
    let n = limit.unwrap_or(match ctx.cfg.dataset.label_images {
        0 => ctx.cfg.dataset.train_images,
        n => n,
    });
    let set = take(&ctx.mnist(Split::Train)?, n);
    let seed = ctx.cfg.seeds[0];
    let mut net = ctx.network(&ck, seed)?;
    let every = (set.len() / 20).max(1);
    let mut progress = |i: usize| {
        if i.is_multiple_of(every) {
            ctx.say(format!("labeled with {i}/{}", set.len()));
        }
    };
    let labels = assign_labels(&mut net, &set, &ctx.cfg.protocol, Some(&mut progress))?;
    ck.labels = Some(labels.clone());
    let path = ctx.out.join(format!("{}-labeled.ckpt", stem(checkpoint)));
    save_bytes(&path, &ck.to_bytes())?;
    let mut hist = [0usize; 10];
    labels
        .0
        .iter()
        .flatten()
        .for_each(|&d| hist[d as usize] += 1);
    println!(
        "{} of {} neurons labeled, per digit {:?} -> {}",
        labels.labeled(),
        labels.len(),
        hist,
        path.display()
    );
    Ok(())
}

pub struct EvalArgs {
    pub checkpoint: PathBuf,
    pub dataset: DatasetArg,
    pub st_stdp: bool,
    pub limit: Option<usize>,
    pub force: bool,
    pub dump_spikes: bool,
}

pub fn eval(common: &Common, a: &EvalArgs) -> Result<(), CliError> {
    if a.st_stdp && a.dataset == DatasetArg::Mnist && !a.force {
        return Err(CliError::Config(
            "--st-stdp on with --dataset mnist was never evaluated for this model; pass --force to run it".into(),
        ));
    }
    let ctx = Ctx::new(common)?;
    let ck = load_checkpoint(&a.checkpoint)?;
    let labels: LabelMap = ck.labels.clone().ok_or_else(|| {
        CliError::Data(format!(
            "{} has no labels; run `esnn label` first",
            a.checkpoint.display()
        ))
    })?;
    let test = ctx.mnist(Split::Test)?;
    let limit = a.limit.unwrap_or(0);
    let frames: Vec<Frame> = match a.dataset {
        DatasetArg::Mnist => Vec::new(),
        DatasetArg::Omnist => {
            let g = OmnistGenerator::new(&test, ctx.cfg.dataset.omnist, Split::Test)?;
            if limit == 0 {
                g.collect()
            } else {
                g.take(limit).collect()
            }
        }
    };
    let mnist = take(&test, limit);
    let (ds, sw) = (
        match a.dataset {
            DatasetArg::Mnist => "mnist",
            DatasetArg::Omnist => "omnist",
        },
        if a.st_stdp { "on" } else { "off" },
    );
    let stp = a.st_stdp.then_some(ctx.cfg.plasticity.st_stdp);
    per_seed(&ctx.cfg.seeds, |seed| {
        let wall = Instant::now();
        let mut net = ctx.network(&ck, seed)?;
        if a.dump_spikes {
            net.start_recording();
        }
        let total = match a.dataset {
            DatasetArg::Mnist => mnist.len(),
            DatasetArg::Omnist => frames.len(),
        };
        let every = (total / 20).max(1);
        let mut progress = |i: usize| {
            if i.is_multiple_of(every) {
                ctx.say(format!("seed {seed}: evaluated {i}/{total}"));
            }
        };
        let m: Metrics = match a.dataset {
            DatasetArg::Mnist => eval_mnist(
                &mut net,
                &labels,
                &mnist,
                &ctx.cfg.protocol,
                stp,
                Some(&mut progress),
            )?,
            DatasetArg::Omnist => eval_omnist(
                &mut net,
                &labels,
                &frames,
                &ctx.cfg.protocol,
                stp,
                Some(&mut progress),
            )?,
        };
        let base = ctx.out.join(format!("metrics-{ds}-stdp{sw}-seed{seed}"));
        let doc = json!({
            "dataset": ds,
            "st_stdp": a.st_stdp,
            "metrics": m,
            "provenance": {
                "config_hash": ctx.hash,
                "seed": seed,
                "checkpoint": a.checkpoint.display().to_string(),
                "checkpoint_config_hash": ck.provenance.config_hash,
                "revision": REVISION,
                "wall_time_s": wall.elapsed().as_secs_f64(),
            },
        });
        let json_path = base.with_extension("json");
        save_bytes(
            &json_path,
            serde_json::to_string_pretty(&doc)
                .expect("metrics serialize")
                .as_bytes(),
        )?;
        let text = format!(
            "dataset {ds}, short-term STDP {sw}, seed {seed}, config {}\n{}",
            &ctx.hash[..12],
            m.to_text()
        );
        save_bytes(&base.with_extension("txt"), text.as_bytes())?;
        if a.dump_spikes {
            let path = ctx.out.join(format!("spikes-{ds}-stdp{sw}-seed{seed}.bin"));
            let rec = net.take_recording();
            write_atomic_with(&path, |f| {
                write_raster(f, &rec).map_err(std::io::Error::other)
            })
            .map_err(|e| CliError::output(&path, e))?;
        }
        println!(
            "seed {seed}: {ds} accuracy {:.4} over {} ({:.1} frames/s) -> {}",
            m.overall_acc,
            m.total,
            m.frames_per_s,
            json_path.display()
        );
        Ok(())
    })
}

pub fn trajectory(
    common: &Common,
    checkpoint: &Path,
    neuron: usize,
    limit: usize,
    sample_ms: f64,
    tail_ms: f64,
) -> Result<(), CliError> {
    let ctx = Ctx::new(common)?;
    let ck = load_checkpoint(checkpoint)?;
    if neuron >= ck.n_exc {
        return Err(CliError::Config(format!(
            "--neuron {neuron} out of range (0..{})",
            ck.n_exc
        )));
    }
    let test = ctx.mnist(Split::Test)?;
    let frames: Vec<Frame> = OmnistGenerator::new(&test, ctx.cfg.dataset.omnist, Split::Test)?
        .take(limit)
        .collect();
    let seed = ctx.cfg.seeds[0];
    let mut net = ctx.network(&ck, seed)?;
    let tr = export_trajectory(
        &mut net,
        neuron,
        &frames,
        ctx.cfg.plasticity.st_stdp,
        &ctx.cfg.protocol,
        sample_ms,
        tail_ms,
    )?;
    let path = ctx.out.join(format!("trajectory-n{neuron}-seed{seed}.csv"));
    write_atomic_with(&path, |f| {
        tr.write_csv(&mut *f)?;
        f.flush()
    })
    .map_err(|e| CliError::output(&path, e))?;
    println!(
        "{} points ({} inputs), eigenvalues {:.4} {:.4} -> {}",
        tr.points.len(),
        tr.inputs.len(),
        tr.eigenvalues[0],
        tr.eigenvalues[1],
        path.display()
    );
    Ok(())
}

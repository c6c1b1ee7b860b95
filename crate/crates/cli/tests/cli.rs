use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use esnn_core::checkpoint::{Checkpoint, Provenance};
use esnn_core::config::RunConfig;
use esnn_core::harness::LabelMap;
use esnn_core::snn::{read_raster, HomeostasisParams, Network, NetworkParams, TripletParams};
use serde_json::Value;

fn esnn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_esnn"))
        .args(args)
        .env("ESNN_THREADS", "1")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn ok(o: Output) -> Output {
    assert_eq!(
        code(&o),
        0,
        "stderr: {}",
        String::from_utf8_lossy(&o.stderr)
    );
    o
}

/// Tiny MNIST look-alike: a bright block at a random position plus sparse
/// speckle. Labels cycle through 0-9 independently of the pixels, so every
/// prefix is close to balanced and nothing is learnable.
fn synthetic_images(n: usize, salt: u64) -> (Vec<u8>, Vec<u8>) {
    let mut x = 0x9e37_79b9_7f4a_7c15u64 ^ salt;
    let mut next = move || {
        x ^= x << 13;
        x ^= x >> 7;
        x ^= x << 17;
        x
    };
    let mut images = vec![0u8; n * 784];
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let c = (i % 10) as u8;
        labels.push(c);
        let img = &mut images[i * 784..(i + 1) * 784];
        let (r0, c0) = ((next() % 20) as usize, (next() % 23) as usize);
        for r in r0..r0 + 8 {
            for k in c0..c0 + 5 {
                img[r * 28 + k] = 200 + (next() % 56) as u8;
            }
        }
        for _ in 0..20 {
            img[(next() % 784) as usize] = (next() % 256) as u8;
        }
    }
    (images, labels)
}

fn write_idx(dir: &Path, prefix: &str, n: usize, salt: u64) {
    let (images, labels) = synthetic_images(n, salt);
    let mut b = Vec::new();
    b.extend_from_slice(&0x0803u32.to_be_bytes());
    for d in [n as u32, 28, 28] {
        b.extend_from_slice(&d.to_be_bytes());
    }
    b.extend_from_slice(&images);
    std::fs::write(dir.join(format!("{prefix}-images-idx3-ubyte")), b).unwrap();
    let mut b = Vec::new();
    b.extend_from_slice(&0x0801u32.to_be_bytes());
    b.extend_from_slice(&(n as u32).to_be_bytes());
    b.extend_from_slice(&labels);
    std::fs::write(dir.join(format!("{prefix}-labels-idx1-ubyte")), b).unwrap();
}

struct Fixture {
    _dir: tempfile::TempDir,
    root: PathBuf,
    config: PathBuf,
}

impl Fixture {
    fn new(n_train: usize, n_test: usize) -> Self {
        let dir = tempfile::tempdir().unwrap();
        let root = dir.path().to_path_buf();
        let mnist = root.join("mnist");
        std::fs::create_dir(&mnist).unwrap();
        write_idx(&mnist, "train", n_train, 1);
        write_idx(&mnist, "t10k", n_test, 2);
        let mut cfg = RunConfig::default();
        cfg.dataset.mnist_dir = mnist;
        let config = root.join("run.toml");
        std::fs::write(&config, cfg.to_toml()).unwrap();
        Self {
            _dir: dir,
            root,
            config,
        }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    fn s(&self, name: &str) -> String {
        self.path(name).display().to_string()
    }

    fn cfg(&self) -> String {
        self.config.display().to_string()
    }

    /// Untrained network with uniformly random labels, saved as a checkpoint.
    fn random_checkpoint(&self, name: &str) -> PathBuf {
        let net = Network::new(
            NetworkParams::default(),
            TripletParams::default(),
            HomeostasisParams::default(),
            9,
        )
        .unwrap();
        let labels = LabelMap((0..400).map(|k| Some(((k * 7 + 3) % 10) as u8)).collect());
        let ck = Checkpoint {
            n_input: 784,
            n_exc: 400,
            weights: net.weights(),
            thetas: net.thetas(),
            labels: Some(labels),
            provenance: Provenance {
                config_hash: String::new(),
                seed: 9,
                revision: "test".into(),
            },
        };
        let p = self.path(name);
        ck.save(&p).unwrap();
        p
    }
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

#[test]
fn train_toy_set_writes_loadable_checkpoint() {
    let fx = Fixture::new(10, 10);
    let out = fx.s("out");
    ok(esnn(&[
        "train",
        "--config",
        &fx.cfg(),
        "--out",
        &out,
        "--seed",
        "3",
        "--quiet",
    ]));
    let ck = Checkpoint::load(&fx.path("out/model-seed3.ckpt")).unwrap();
    assert_eq!((ck.n_input, ck.n_exc), (784, 400));
    assert_eq!(ck.provenance.seed, 3);
    let mut effective = RunConfig::load(&fx.config).unwrap();
    effective.seeds = vec![3];
    assert_eq!(ck.provenance.config_hash, effective.hash());
    assert!(ck.labels.is_none());
    assert_eq!(Checkpoint::from_bytes(&ck.to_bytes()).unwrap(), ck);
}

#[test]
fn seed_flag_replaces_the_seed_list() {
    let fx = Fixture::new(3, 3);
    let mut cfg = RunConfig::load(&fx.config).unwrap();
    cfg.seeds = vec![1, 2];
    std::fs::write(&fx.config, cfg.to_toml()).unwrap();
    let out = fx.s("out");
    ok(esnn(&[
        "train",
        "--config",
        &fx.cfg(),
        "--out",
        &out,
        "--seed",
        "5",
        "--quiet",
    ]));
    let mut names: Vec<String> = std::fs::read_dir(fx.path("out"))
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();
    assert_eq!(names, ["model-seed5.ckpt"]);
}

#[test]
fn generate_is_deterministic_and_sized() {
    let fx = Fixture::new(12, 20);
    let a = fx.s("a");
    let b = fx.s("b");
    let first = ok(esnn(&[
        "generate",
        "--config",
        &fx.cfg(),
        "--out",
        &a,
        "--quiet",
    ]));
    ok(esnn(&[
        "generate",
        "--config",
        &fx.cfg(),
        "--out",
        &b,
        "--quiet",
    ]));
    for f in [
        "omnist-train.bin",
        "omnist-test.bin",
        "omnist-train.csv",
        "omnist-test.csv",
    ] {
        let x = std::fs::read(fx.path("a").join(f)).unwrap();
        assert_eq!(x, std::fs::read(fx.path("b").join(f)).unwrap(), "{f}");
    }
    let text = String::from_utf8(first.stdout).unwrap();
    let test_line = text.lines().find(|l| l.starts_with("test:")).unwrap();
    let frames: u64 = test_line
        .split_whitespace()
        .nth(4)
        .unwrap()
        .parse()
        .unwrap();
    assert!((15 * 20..=18 * 20).contains(&frames), "{test_line}");
    let (header, stream) =
        esnn_core::datasets::read_container(&fx.path("a/omnist-test.bin")).unwrap();
    assert_eq!(header.frames, frames);
    assert_eq!(stream.len() as u64, frames);
    let csv = std::fs::read_to_string(fx.path("a/omnist-test.csv")).unwrap();
    assert_eq!(csv.lines().count() as u64, frames + 1);
}

#[test]
fn random_checkpoint_scores_chance_on_mnist() {
    let fx = Fixture::new(10, 300);
    let ck = fx.random_checkpoint("rand.ckpt");
    let out = fx.s("out");
    let ck = ck.display().to_string();
    ok(esnn(&[
        "eval",
        "--config",
        &fx.cfg(),
        "--out",
        &out,
        "--checkpoint",
        &ck,
        "--dataset",
        "mnist",
        "--quiet",
    ]));
    let doc = read_json(&fx.path("out/metrics-mnist-stdpoff-seed1.json"));
    let acc = doc["metrics"]["overall_acc"].as_f64().unwrap();
    let n = doc["metrics"]["total"].as_f64().unwrap();
    assert_eq!(n, 300.0);
    let three_sigma = 3.0 * (0.1f64 * 0.9 / n).sqrt();
    assert!((acc - 0.1).abs() <= three_sigma, "accuracy {acc}");
    assert!(fx.path("out/metrics-mnist-stdpoff-seed1.txt").exists());
}

fn counts(v: &Value) -> Vec<u64> {
    let m = &v["metrics"];
    let mut c = vec![m["total"].as_u64().unwrap()];
    for key in ["per_class", "per_occlusion", "per_depth"] {
        c.extend(
            m[key]
                .as_array()
                .unwrap()
                .iter()
                .map(|t| t["count"].as_u64().unwrap()),
        );
    }
    c.extend(m["confusion"].as_array().unwrap().iter().map(|row| {
        row.as_array()
            .unwrap()
            .iter()
            .map(|x| x.as_u64().unwrap())
            .sum::<u64>()
    }));
    c
}

#[test]
fn omnist_on_and_off_share_frame_counts() {
    let fx = Fixture::new(10, 4);
    let ck = fx.random_checkpoint("rand.ckpt").display().to_string();
    let out = fx.s("out");
    for sw in ["off", "on"] {
        ok(esnn(&[
            "eval",
            "--config",
            &fx.cfg(),
            "--out",
            &out,
            "--checkpoint",
            &ck,
            "--dataset",
            "omnist",
            "--st-stdp",
            sw,
            "--limit",
            "40",
            "--quiet",
        ]));
    }
    let off = read_json(&fx.path("out/metrics-omnist-stdpoff-seed1.json"));
    let on = read_json(&fx.path("out/metrics-omnist-stdpon-seed1.json"));
    assert_eq!(counts(&off), counts(&on));
    assert_eq!(off["metrics"]["total"], 40);
    assert_eq!(
        off["provenance"]["config_hash"],
        on["provenance"]["config_hash"]
    );
}

#[test]
fn label_then_dump_spikes_and_trajectory() {
    let fx = Fixture::new(30, 20);
    let out = fx.s("out");
    let ck = fx.random_checkpoint("rand.ckpt").display().to_string();
    ok(esnn(&[
        "label",
        "--config",
        &fx.cfg(),
        "--out",
        &out,
        "--checkpoint",
        &ck,
        "--limit",
        "20",
        "--quiet",
    ]));
    let labeled = Checkpoint::load(&fx.path("out/rand-labeled.ckpt")).unwrap();
    assert_eq!(labeled.labels.as_ref().unwrap().len(), 400);
    let lck = fx.s("out/rand-labeled.ckpt");
    ok(esnn(&[
        "eval",
        "--config",
        &fx.cfg(),
        "--out",
        &out,
        "--checkpoint",
        &lck,
        "--dataset",
        "mnist",
        "--limit",
        "5",
        "--dump-spikes",
        "--quiet",
    ]));
    let raster =
        read_raster(std::fs::File::open(fx.path("out/spikes-mnist-stdpoff-seed1.bin")).unwrap())
            .unwrap();
    assert!(!raster.is_empty());
    assert!(raster.windows(2).all(|w| w[0].0 <= w[1].0));
    assert!(raster.iter().all(|&(_, k)| k < 400));

    ok(esnn(&[
        "trajectory",
        "--config",
        &fx.cfg(),
        "--out",
        &out,
        "--checkpoint",
        &lck,
        "--neuron",
        "3",
        "--limit",
        "20",
        "--quiet",
    ]));
    let csv = std::fs::read_to_string(fx.path("out/trajectory-n3-seed1.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("t,pc1,pc2,is_input_point"));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.iter().filter(|r| r[3] == "1").count(), 20);
    assert!(rows
        .iter()
        .all(|r| r.len() == 4 && r[1].parse::<f64>().unwrap().is_finite()));
}

#[test]
fn exit_codes_are_stable() {
    let fx = Fixture::new(3, 3);
    let out = fx.s("out");
    let cfg = fx.cfg();

    // configuration errors
    assert_eq!(
        code(&esnn(&[
            "train",
            "--config",
            &fx.s("missing.toml"),
            "--out",
            &out
        ])),
        2
    );
    std::fs::write(fx.path("bad.toml"), "[network]\nbogus = 1\n").unwrap();
    assert_eq!(
        code(&esnn(&[
            "train",
            "--config",
            &fx.s("bad.toml"),
            "--out",
            &out
        ])),
        2
    );
    let ck = fx.random_checkpoint("rand.ckpt").display().to_string();
    let mnist_stdp = [
        "eval",
        "--config",
        &cfg,
        "--out",
        &out,
        "--checkpoint",
        &ck,
        "--dataset",
        "mnist",
        "--st-stdp",
        "on",
    ];
    assert_eq!(code(&esnn(&mnist_stdp)), 2);

    // data errors
    assert_eq!(
        code(&esnn(&[
            "eval",
            "--config",
            &cfg,
            "--out",
            &out,
            "--checkpoint",
            &fx.s("nope.ckpt"),
            "--dataset",
            "mnist"
        ])),
        3
    );
    let mut bytes = std::fs::read(&ck).unwrap();
    bytes[100] ^= 0x40;
    std::fs::write(fx.path("corrupt.ckpt"), bytes).unwrap();
    assert_eq!(
        code(&esnn(&[
            "eval",
            "--config",
            &cfg,
            "--out",
            &out,
            "--checkpoint",
            &fx.s("corrupt.ckpt"),
            "--dataset",
            "mnist"
        ])),
        3
    );
    let mut c = RunConfig::load(&fx.config).unwrap();
    c.dataset.mnist_dir = fx.path("no-such-dir");
    std::fs::write(fx.path("nodata.toml"), c.to_toml()).unwrap();
    assert_eq!(
        code(&esnn(&[
            "train",
            "--config",
            &fx.s("nodata.toml"),
            "--out",
            &out
        ])),
        3
    );

    // unwritable output: the output directory is a regular file
    std::fs::write(fx.path("blocker"), b"x").unwrap();
    assert_eq!(
        code(&esnn(&[
            "train",
            "--config",
            &cfg,
            "--out",
            &fx.s("blocker"),
            "--quiet"
        ])),
        4
    );
}

//! Desk-scale experiment: train on N images, label, then evaluate MNIST and
//! OMNIST with short-term STDP off and on. The trained model is cached.
//!
//! Usage: desk_run N_TRAIN N_MNIST N_OMNIST [key=value ...]
//! Keys: c, gamma, tau_kernel, tau_stp, vote (mean|sum).

use std::path::{Path, PathBuf};
use std::time::Instant;

use esnn_core::checkpoint::{Checkpoint, Provenance};
use esnn_core::datasets::{generate_omnist, load_mnist, OmnistSpec, Split};
use esnn_core::harness::{
    assign_labels, eval_mnist, eval_omnist, train_unsupervised, Protocol, VoteRule,
};
use esnn_core::snn::{HomeostasisParams, Network, NetworkParams, StStdpParams, TripletParams};

fn main() {
    let a: Vec<String> = std::env::args().skip(1).collect();
    let n = |i: usize, d: usize| a.get(i).map_or(d, |s| s.parse().unwrap());
    let (n_train, n_mnist, n_omnist) = (n(0, 1000), n(1, 500), n(2, 1000));
    let mut stp = StStdpParams::default();
    let mut p = Protocol::default();
    for kv in a.iter().skip(3) {
        let (k, v) = kv.split_once('=').unwrap();
        match k {
            "c" => stp.weight_dep_c = v.parse().unwrap(),
            "gamma" => stp.gamma = v.parse().unwrap(),
            "tau_kernel" => stp.tau_kernel = v.parse().unwrap(),
            "tau_stp" => stp.tau_stp = v.parse().unwrap(),
            "vote" => {
                p.vote = if v == "sum" {
                    VoteRule::Sum
                } else {
                    VoteRule::Mean
                }
            }
            _ => panic!("unknown key {k}"),
        }
    }
    let dir = Path::new("data/mnist");
    let train = load_mnist(dir, Split::Train).unwrap();
    let test = load_mnist(dir, Split::Test).unwrap();
    let params = NetworkParams::default();
    let cache = PathBuf::from(format!("target/desk/train{n_train}.ckpt"));
    let (mut net, labels) = if let Ok(ck) = Checkpoint::load(&cache) {
        let net = Network::from_parts(
            params,
            TripletParams::default(),
            HomeostasisParams::default(),
            ck.weights,
            ck.thetas,
            1,
        )
        .unwrap();
        (net, ck.labels.unwrap())
    } else {
        let mut net = Network::new(
            params,
            TripletParams::default(),
            HomeostasisParams::default(),
            1,
        )
        .unwrap();
        let t = Instant::now();
        let st = train_unsupervised(
            &mut net,
            &train.truncated(n_train),
            &p,
            Some(&mut |i| {
                if i % 1000 == 0 {
                    eprintln!("train {i}")
                }
            }),
        )
        .unwrap();
        println!("train {:?} in {:.1}s", st, t.elapsed().as_secs_f64());
        let t = Instant::now();
        let labels = assign_labels(&mut net, &train.truncated(n_train), &p, None).unwrap();
        println!(
            "labels: {} labeled in {:.1}s",
            labels.labeled(),
            t.elapsed().as_secs_f64()
        );
        std::fs::create_dir_all("target/desk").unwrap();
        Checkpoint {
            n_input: 784,
            n_exc: 400,
            weights: net.weights(),
            thetas: net.thetas(),
            labels: Some(labels.clone()),
            provenance: Provenance {
                config_hash: String::new(),
                seed: 1,
                revision: String::new(),
            },
        }
        .save(&cache)
        .unwrap();
        (net, labels)
    };
    if n_mnist > 0 {
        net.reseed_inputs(3);
        let m = eval_mnist(&mut net, &labels, &test.truncated(n_mnist), &p, None, None).unwrap();
        println!("mnist acc {:.4} ({:.1}s)", m.overall_acc, m.runtime_s);
    }
    let frames = generate_omnist(
        &test.truncated(n_omnist / 15 + 2),
        &OmnistSpec::default(),
        Split::Test,
    )
    .unwrap();
    let frames = &frames[..n_omnist];
    net.reseed_inputs(7);
    let off = eval_omnist(&mut net, &labels, frames, &p, None, None).unwrap();
    net.reseed_inputs(7);
    let on = eval_omnist(&mut net, &labels, frames, &p, Some(stp), None).unwrap();
    println!("{stp:?}");
    println!(
        "omnist off {:.4} on {:.4} diff {:.2} pts",
        off.overall_acc,
        on.overall_acc,
        100.0 * (on.overall_acc - off.overall_acc)
    );
    let bins = |m: &esnn_core::harness::Metrics| {
        m.per_occlusion
            .iter()
            .map(|t| format!("{:.2}", t.acc))
            .collect::<Vec<_>>()
            .join(" ")
    };
    println!("bins off {}", bins(&off));
    println!("bins on  {}", bins(&on));
}

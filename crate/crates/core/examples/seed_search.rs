//! Finds the first OMNIST seed whose test and training streams have the
//! published lengths. Usage: `seed_search [start] [tries]`.

use std::thread;

use esnn_core::datasets::{find_reference_seed, OmnistSpec};

const TEST: (usize, u64) = (10_000, 164_915);
const TRAIN: (usize, u64) = (60_000, 990_089);

fn main() {
    let mut args = std::env::args()
        .skip(1)
        .map(|a| a.parse::<u64>().expect("integer argument"));
    let start = args.next().unwrap_or(0);
    let tries = args.next().unwrap_or(10_000_000);
    let workers = thread::available_parallelism().map_or(4, |n| n.get()) as u64;
    let chunk = 10_000;
    let mut base = start;
    while base < start + tries {
        let handles: Vec<_> = (0..workers)
            .map(|w| {
                let from = base + w * chunk;
                thread::spawn(move || {
                    find_reference_seed(&OmnistSpec::default(), TEST, Some(TRAIN), from, chunk)
                })
            })
            .collect();
        let hits: Vec<u64> = handles
            .into_iter()
            .filter_map(|h| h.join().unwrap())
            .collect();
        if let Some(seed) = hits.into_iter().min() {
            println!("{seed}");
            return;
        }
        base += workers * chunk;
    }
    eprintln!("no seed in {start}..{}", start + tries);
    std::process::exit(1);
}

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::datasets::NOISE_LABEL;

/// Occlusion deciles plus one bin for noise frames.
pub const OCCLUSION_BINS: usize = 11;
const NOISE_BIN: usize = 10;
const MAX_DEPTH: f64 = 19.0;
const CLASSES: usize = 11;

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Tally {
    pub count: u64,
    pub correct: u64,
    pub acc: f64,
}

impl Tally {
    fn add(&mut self, ok: bool) {
        self.count += 1;
        self.correct += ok as u64;
    }

    fn finish(&mut self) {
        self.acc = if self.count == 0 {
            0.0
        } else {
            self.correct as f64 / self.count as f64
        };
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub total: u64,
    pub correct: u64,
    pub overall_acc: f64,
    /// Digits 0-9 then noise.
    pub per_class: Vec<Tally>,
    /// Bin `b < 10` holds digit frames with `depth / 19` in `[b/10, (b+1)/10)`
    /// (the last bin is closed); bin 10 holds noise frames.
    pub per_occlusion: Vec<Tally>,
    /// Digit frames by exact occluder depth 0..=28.
    pub per_depth: Vec<Tally>,
    /// `confusion[true][predicted]`.
    pub confusion: Vec<Vec<u64>>,
    pub runtime_s: f64,
    pub frames_per_s: f64,
}

impl Default for Metrics {
    fn default() -> Self {
        Self::new()
    }
}

pub fn occlusion_bin(depth: u8) -> usize {
    ((depth as f64 / MAX_DEPTH * 10.0).floor() as usize).min(9)
}

impl Metrics {
    pub fn new() -> Self {
        Self {
            total: 0,
            correct: 0,
            overall_acc: 0.0,
            per_class: vec![Tally::default(); CLASSES],
            per_occlusion: vec![Tally::default(); OCCLUSION_BINS],
            per_depth: vec![Tally::default(); 29],
            confusion: vec![vec![0; CLASSES]; CLASSES],
            runtime_s: 0.0,
            frames_per_s: 0.0,
        }
    }

    /// Records one frame. `depth` is `None` for noise frames.
    pub fn record(&mut self, truth: u8, predicted: u8, depth: Option<u8>) {
        let ok = truth == predicted;
        self.total += 1;
        self.correct += ok as u64;
        self.per_class[truth as usize].add(ok);
        self.confusion[truth as usize][predicted as usize] += 1;
        match depth {
            Some(d) if truth != NOISE_LABEL => {
                self.per_occlusion[occlusion_bin(d)].add(ok);
                self.per_depth[d as usize].add(ok);
            }
            _ => self.per_occlusion[NOISE_BIN].add(ok),
        }
    }

    pub fn finish(&mut self, runtime_s: f64) {
        self.overall_acc = if self.total == 0 {
            0.0
        } else {
            self.correct as f64 / self.total as f64
        };
        self.per_class
            .iter_mut()
            .chain(&mut self.per_occlusion)
            .chain(&mut self.per_depth)
            .for_each(Tally::finish);
        self.runtime_s = runtime_s;
        self.frames_per_s = if runtime_s > 0.0 {
            self.total as f64 / runtime_s
        } else {
            0.0
        };
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("metrics serialize")
    }

    /// Human-readable aligned table.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let pct = |t: &Tally| format!("{:6.2}%", 100.0 * t.acc);
        let _ = writeln!(
            s,
            "overall   {:>8} / {:<8} {:6.2}%",
            self.correct,
            self.total,
            100.0 * self.overall_acc
        );
        let _ = writeln!(
            s,
            "runtime   {:.1} s ({:.1} frames/s)",
            self.runtime_s, self.frames_per_s
        );
        let _ = writeln!(s, "\nclass     count    correct  acc");
        for (c, t) in self.per_class.iter().enumerate() {
            let name = if c == NOISE_LABEL as usize {
                "noise".to_string()
            } else {
                c.to_string()
            };
            let _ = writeln!(s, "{name:<9} {:<8} {:<8} {}", t.count, t.correct, pct(t));
        }
        let _ = writeln!(s, "\noccluded  count    correct  acc");
        for (b, t) in self.per_occlusion.iter().enumerate() {
            let name = if b == NOISE_BIN {
                "noise".to_string()
            } else {
                format!("{}-{}%", b * 10, b * 10 + 10)
            };
            let _ = writeln!(s, "{name:<9} {:<8} {:<8} {}", t.count, t.correct, pct(t));
        }
        let _ = writeln!(s, "\nconfusion (rows: truth, columns: predicted)");
        let _ = write!(s, "     ");
        for c in 0..CLASSES {
            let _ = write!(
                s,
                "{:>7}",
                if c == 10 {
                    "N".to_string()
                } else {
                    c.to_string()
                }
            );
        }
        let _ = writeln!(s);
        for (r, row) in self.confusion.iter().enumerate() {
            let _ = write!(
                s,
                "{:>5}",
                if r == 10 {
                    "N".to_string()
                } else {
                    r.to_string()
                }
            );
            for v in row {
                let _ = write!(s, "{v:>7}");
            }
            let _ = writeln!(s);
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bins_partition_depths() {
        let bins: Vec<usize> = [0u8, 3, 6, 9, 12, 15, 18, 19]
            .iter()
            .map(|&d| occlusion_bin(d))
            .collect();
        assert_eq!(bins, vec![0, 1, 3, 4, 6, 7, 9, 9]);
    }

    #[test]
    fn counts_are_consistent() {
        let mut m = Metrics::new();
        m.record(3, 3, Some(0));
        m.record(3, 5, Some(19));
        m.record(10, 10, None);
        m.record(10, 1, None);
        m.finish(2.0);
        assert_eq!(m.total, 4);
        assert_eq!(m.confusion.iter().flatten().sum::<u64>(), 4);
        assert_eq!(m.overall_acc, 0.5);
        assert_eq!(m.per_class[3].acc, 0.5);
        let digit: u64 = m.per_occlusion[..10].iter().map(|t| t.count).sum();
        assert_eq!(digit, 2);
        assert_eq!(m.per_occlusion[10].count, 2);
        assert_eq!(m.per_depth[19].count, 1);
        let back: Metrics = serde_json::from_str(&m.to_json()).unwrap();
        assert_eq!(back, m);
        assert!(m.to_text().contains("noise"));
    }
}

//! OMNIST: every MNIST digit becomes `n_f` frames covered by an occluder
//! that slides down from the top, followed by a block of noise frames.

use serde::{Deserialize, Serialize};

use super::idx::{MnistSet, Split};
use super::rng::OmnistRng;
use super::{DataError, IMAGE_PIXELS, IMAGE_SIDE};

pub const NOISE_LABEL: u8 = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum NoiseMode {
    /// Every noise frame is drawn afresh.
    #[default]
    Independent,
    /// One noise frame per digit, repeated.
    Copy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OmnistSpec {
    pub n_f_min: u32,
    pub n_f_max: u32,
    /// Occluder speed (rows per frame) until `occl_slow_at`.
    pub occl_speed_fast: u32,
    pub occl_slow_at: u32,
    pub occl_speed_slow: u32,
    pub occl_stop_at: u32,
    pub noise_frames: u32,
    pub noise_rect_width: u32,
    pub noise_rect_height: u32,
    pub noise_candidates: u32,
    #[serde(default)]
    pub noise_mode: NoiseMode,
    pub seed: u64,
}

impl Default for OmnistSpec {
    fn default() -> Self {
        Self {
            n_f_min: 11,
            n_f_max: 14,
            occl_speed_fast: 3,
            occl_slow_at: 18,
            occl_speed_slow: 1,
            occl_stop_at: 19,
            noise_frames: 4,
            noise_rect_width: 15,
            noise_rect_height: 12,
            noise_candidates: 200,
            noise_mode: NoiseMode::Independent,
            seed: REFERENCE_SEED,
        }
    }
}

/// Seed whose test and training streams have 164,915 and 990,089 frames.
pub const REFERENCE_SEED: u64 = 57_546;

impl OmnistSpec {
    pub fn validate(&self) -> Result<(), DataError> {
        let side = IMAGE_SIDE as u32;
        let bad = |m: &str| Err(DataError::Spec(m.to_string()));
        if self.n_f_min == 0 || self.n_f_min > self.n_f_max {
            return bad("need 1 <= n_f_min <= n_f_max");
        }
        if self.occl_stop_at > side || self.occl_slow_at > self.occl_stop_at {
            return bad("need occl_slow_at <= occl_stop_at <= 28");
        }
        if self.occl_speed_fast == 0 || self.occl_speed_slow == 0 {
            return bad("occluder speeds must be positive");
        }
        if self.noise_rect_width > side || self.noise_rect_height > side {
            return bad("noise rectangle exceeds the image");
        }
        if self.noise_candidates as usize > IMAGE_PIXELS {
            return bad("more noise candidates than pixels");
        }
        Ok(())
    }

    /// Occluded rows in frame `idx` of a digit's subsequence.
    pub fn depth(&self, idx: usize) -> u32 {
        let mut d = 0;
        for _ in 0..idx {
            if d >= self.occl_stop_at {
                break;
            }
            d += if d < self.occl_slow_at {
                self.occl_speed_fast
            } else {
                self.occl_speed_slow
            };
        }
        d.min(self.occl_stop_at)
    }

    /// Half-open column and row ranges of the centered noise rectangle.
    pub fn noise_rect(&self) -> ((usize, usize), (usize, usize)) {
        let w = self.noise_rect_width as usize;
        let h = self.noise_rect_height as usize;
        let c0 = (IMAGE_SIDE - w) / 2;
        let r0 = (IMAGE_SIDE - h) / 2;
        ((c0, c0 + w), (r0, r0 + h))
    }

    fn draw_n_f(&self, counts: &mut OmnistRng) -> u32 {
        self.n_f_min + counts.below((self.n_f_max - self.n_f_min + 1) as u64) as u32
    }
}

/// Occluder depth with the default schedule.
pub fn occluder_depth(frame_idx: usize) -> u32 {
    OmnistSpec::default().depth(frame_idx)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    pub pixels: Vec<u8>,
    /// Digit 0-9, or [`NOISE_LABEL`].
    pub label: u8,
    pub occl_depth: u8,
    pub src_index: Option<u32>,
}

impl Frame {
    pub fn is_noise(&self) -> bool {
        self.label == NOISE_LABEL
    }
}

/// `image` with its top `depth` rows blacked out.
pub fn digit_frame(image: &[u8], depth: u32) -> Vec<u8> {
    let mut px = image.to_vec();
    let cut = (depth as usize).min(IMAGE_SIDE) * IMAGE_SIDE;
    px[..cut].iter_mut().for_each(|p| *p = 0);
    px
}

/// Picks `noise_candidates` distinct pixels by a partial Fisher-Yates
/// shuffle, keeps those inside the noise rectangle and gives each a random
/// brightness, in selection order.
pub fn make_noise_frame(rng: &mut OmnistRng, spec: &OmnistSpec) -> Frame {
    let ((c0, c1), (r0, r1)) = spec.noise_rect();
    let mut order: Vec<u16> = (0..IMAGE_PIXELS as u16).collect();
    let mut pixels = vec![0u8; IMAGE_PIXELS];
    for i in 0..spec.noise_candidates as usize {
        let j = i + rng.below((IMAGE_PIXELS - i) as u64) as usize;
        order.swap(i, j);
        let p = order[i] as usize;
        let (r, c) = (p / IMAGE_SIDE, p % IMAGE_SIDE);
        if (r0..r1).contains(&r) && (c0..c1).contains(&c) {
            pixels[p] = rng.byte();
        }
    }
    Frame {
        pixels,
        label: NOISE_LABEL,
        occl_depth: 0,
        src_index: None,
    }
}

/// Lazily produces the frame stream of one split.
pub struct OmnistGenerator<'a> {
    set: &'a MnistSet,
    spec: OmnistSpec,
    counts: OmnistRng,
    noise: OmnistRng,
    digit: usize,
    pos: u32,
    n_f: u32,
    held_noise: Option<Frame>,
}

impl<'a> OmnistGenerator<'a> {
    pub fn new(set: &'a MnistSet, spec: OmnistSpec, split: Split) -> Result<Self, DataError> {
        spec.validate()?;
        let (counts, noise) = OmnistRng::streams(spec.seed, split);
        Ok(Self {
            set,
            spec,
            counts,
            noise,
            digit: 0,
            pos: 0,
            n_f: 0,
            held_noise: None,
        })
    }
}

impl Iterator for OmnistGenerator<'_> {
    type Item = Frame;

    fn next(&mut self) -> Option<Frame> {
        if self.digit >= self.set.len() {
            return None;
        }
        if self.pos == 0 {
            self.n_f = self.spec.draw_n_f(&mut self.counts);
            self.held_noise = None;
        }
        let pos = self.pos;
        let frame = if pos < self.n_f {
            let depth = self.spec.depth(pos as usize);
            Frame {
                pixels: digit_frame(self.set.image(self.digit), depth),
                label: self.set.labels[self.digit],
                occl_depth: depth as u8,
                src_index: Some(self.digit as u32),
            }
        } else {
            match (self.spec.noise_mode, &self.held_noise) {
                (NoiseMode::Copy, Some(f)) => f.clone(),
                _ => {
                    let f = make_noise_frame(&mut self.noise, &self.spec);
                    self.held_noise = Some(f.clone());
                    f
                }
            }
        };
        self.pos += 1;
        if self.pos == self.n_f + self.spec.noise_frames {
            self.pos = 0;
            self.digit += 1;
        }
        Some(frame)
    }
}

/// Frame stream of `set` as a vector.
pub fn generate_omnist(
    set: &MnistSet,
    spec: &OmnistSpec,
    split: Split,
) -> Result<Vec<Frame>, DataError> {
    Ok(OmnistGenerator::new(set, *spec, split)?.collect())
}

/// Stream length for `n_digits` source digits, without generating frames.
pub fn frame_count(n_digits: usize, spec: &OmnistSpec, split: Split) -> u64 {
    let (mut counts, _) = OmnistRng::streams(spec.seed, split);
    (0..n_digits)
        .map(|_| (spec.draw_n_f(&mut counts) + spec.noise_frames) as u64)
        .sum()
}

/// `m` independent noise frames, e.g. an eleventh class for training sets.
pub fn noise_augmentation(m: usize, seed: u64, spec: &OmnistSpec) -> Vec<Frame> {
    let mut rng = OmnistRng::from_seed(seed);
    (0..m).map(|_| make_noise_frame(&mut rng, spec)).collect()
}

/// First seed in `start..start + tries` whose test stream has `test.1` frames
/// for `test.0` digits and, if given, whose training stream matches `train`.
pub fn find_reference_seed(
    spec: &OmnistSpec,
    test: (usize, u64),
    train: Option<(usize, u64)>,
    start: u64,
    tries: u64,
) -> Option<u64> {
    (start..start.saturating_add(tries)).find(|&seed| {
        let s = OmnistSpec { seed, ..*spec };
        frame_count(test.0, &s, Split::Test) == test.1
            && train.is_none_or(|(n, len)| frame_count(n, &s, Split::Train) == len)
    })
}

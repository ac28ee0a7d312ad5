//! Synthetic corpora in the ESC-50 directory layout.
#![allow(dead_code)]

use std::f64::consts::PI;
use std::path::Path;

use esc_core::audio::{encode_wav_pcm16, AudioClip};
use esc_core::dataset::{GroupLabel, Taxonomy, TaxonomyEntry};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const META_HEADER: &str = "filename,fold,target,category,esc10,src_file,take";

/// Category name for sub-tone `sub` of the family assigned to `group`.
pub fn tone_category(group: GroupLabel, sub: usize) -> String {
    format!("family{}_tone{}", group.index(), sub)
}

/// Seven tone families, one per group, each with `subs` sub-tones.
pub fn tone_taxonomy(subs: usize) -> Taxonomy {
    let entries = GroupLabel::ALL.iter().flat_map(|&g| {
        (0..subs).map(move |j| TaxonomyEntry {
            category: tone_category(g, j),
            group: g,
        })
    });
    Taxonomy::from_entries(entries).unwrap()
}

/// Family `g` sits an octave above family `g - 1`; sub-tones step up by a fifth of the base.
pub fn tone_frequency(group: GroupLabel, sub: usize) -> f64 {
    200.0 * 2f64.powi(group.index() as i32) * (1.0 + 0.2 * sub as f64)
}

/// A jittered tone with random level and phase over white noise at about -40 dBFS.
pub fn tone_clip(freq: f64, seconds: f64, rate: u32, rng: &mut ChaCha8Rng) -> AudioClip {
    let n = (seconds * rate as f64) as usize;
    let f = freq * rng.gen_range(0.99..1.01);
    let amp = rng.gen_range(0.2..0.8);
    let phase = rng.gen_range(0.0..2.0 * PI);
    let samples = (0..n)
        .map(|i| {
            let t = i as f64 / rate as f64;
            let noise = rng.gen_range(-1.0..1.0) * 0.01 * 3f64.sqrt();
            amp * (2.0 * PI * f * t + phase).sin() + noise
        })
        .collect();
    AudioClip::new(samples, rate).unwrap()
}

/// Writes `meta/esc50.csv` and `audio/*.wav` for the given `(category, clip)` pairs and
/// returns the file names in order.
pub fn write_corpus(dir: &Path, clips: &[(String, AudioClip)], taxonomy: &Taxonomy) -> Vec<String> {
    std::fs::create_dir_all(dir.join("meta")).unwrap();
    std::fs::create_dir_all(dir.join("audio")).unwrap();
    let mut meta = format!("{META_HEADER}\n");
    let mut names = Vec::new();
    let mut categories: Vec<String> = taxonomy.entries().into_iter().map(|e| e.category).collect();
    categories.sort();
    for (i, (category, clip)) in clips.iter().enumerate() {
        let target = categories.iter().position(|c| c == category).unwrap();
        let filename = format!("{}-{:05}-A-{}.wav", i % 5 + 1, i, target);
        std::fs::write(dir.join("audio").join(&filename), encode_wav_pcm16(clip)).unwrap();
        meta.push_str(&format!("{filename},{},{target},{category},False,{i},A\n", i % 5 + 1));
        names.push(filename);
    }
    std::fs::write(dir.join("meta/esc50.csv"), meta).unwrap();
    names
}

/// `per_category` tone clips for every category of [`tone_taxonomy`].
pub fn tone_corpus(dir: &Path, subs: usize, per_category: usize, seconds: f64, seed: u64) -> Taxonomy {
    let taxonomy = tone_taxonomy(subs);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut clips = Vec::new();
    for g in GroupLabel::ALL {
        for j in 0..subs {
            for _ in 0..per_category {
                let clip = tone_clip(tone_frequency(g, j), seconds, 44_100, &mut rng);
                clips.push((tone_category(g, j), clip));
            }
        }
    }
    write_corpus(dir, &clips, &taxonomy);
    taxonomy
}

//! Synthetic inputs for the benchmarks.

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use rankbias::{Document, GenderLexicon, GenderMagnitude, QuerySet};

const FILLER: [&str; 16] = [
    "the", "nurse", "doctor", "engineer", "market", "river", "history", "school", "code", "city",
    "garden", "weather", "report", "music", "travel", "science",
];
const FEMALE: [&str; 4] = ["she", "her", "woman", "mother"];
const MALE: [&str; 4] = ["he", "his", "man", "father"];

pub fn lexicon() -> GenderLexicon {
    GenderLexicon::new(FEMALE, MALE).expect("disjoint")
}

/// `n` passages of about 50 words; roughly one word in twenty is gendered.
pub fn documents(n: usize, seed: u64) -> Vec<Document> {
    let mut rng = StdRng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let len = rng.gen_range(30..70);
            let words: Vec<&str> = (0..len)
                .map(|_| match rng.gen_range(0..40) {
                    0 => FEMALE[rng.gen_range(0..FEMALE.len())],
                    1 => MALE[rng.gen_range(0..MALE.len())],
                    _ => FILLER[rng.gen_range(0..FILLER.len())],
                })
                .collect();
            Document::new(format!("d{i}"), words.join(" "))
        })
        .collect()
}

pub fn queries(n: usize, seed: u64) -> QuerySet {
    let mut rng = StdRng::seed_from_u64(seed);
    let entries = (0..n)
        .map(|i| {
            let len = rng.gen_range(2..5);
            let words: Vec<&str> = (0..len)
                .map(|_| FILLER[rng.gen_range(1..FILLER.len())])
                .collect();
            (format!("q{i}"), words.join(" "))
        })
        .collect();
    QuerySet::new(entries).expect("unique ids")
}

/// A ranked list of random TF-style magnitudes.
pub fn magnitudes(len: usize, seed: u64) -> Vec<GenderMagnitude> {
    let mut rng = StdRng::seed_from_u64(seed);
    (0..len)
        .map(|_| GenderMagnitude::new(rng.gen_range(0.0..2.0), rng.gen_range(0.0..2.0)))
        .collect()
}

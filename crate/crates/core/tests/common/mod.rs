#![allow(dead_code)]

use std::path::PathBuf;

use ndarray::Array2;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use taxica_core::{parse_table, ContingencyTable};

pub fn load(name: &str) -> ContingencyTable {
    let path: PathBuf = [env!("CARGO_MANIFEST_DIR"), "tests", "data", name].iter().collect();
    let text = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    parse_table(&text, b',').unwrap()
}

pub fn diagonal(weights: &[f64]) -> ContingencyTable {
    let n = weights.len();
    let mut counts = Array2::zeros((n, n));
    for (i, w) in weights.iter().enumerate() {
        counts[[i, i]] = *w;
    }
    let labels: Vec<String> = (1..=n).map(|i| i.to_string()).collect();
    ContingencyTable::new(labels.clone(), labels, counts).unwrap()
}

/// Zero-inflated Poisson table with no empty row or column, at least 2x2.
pub fn random_table(rng: &mut ChaCha8Rng, max_rows: usize, max_cols: usize) -> ContingencyTable {
    loop {
        let rows = rng.gen_range(2..=max_rows);
        let cols = rng.gen_range(2..=max_cols);
        let zero_rate = rng.gen_range(0.0..0.6);
        let mean = rng.gen_range(0.5..12.0);
        let poisson = Poisson::new(mean).unwrap();
        let counts = Array2::from_shape_fn((rows, cols), |_| {
            if rng.gen_bool(zero_rate) {
                0.0
            } else {
                poisson.sample(rng)
            }
        });
        let empty_row = counts.rows().into_iter().any(|r| r.sum() == 0.0);
        let empty_col = counts.columns().into_iter().any(|c| c.sum() == 0.0);
        if !empty_row && !empty_col {
            let rl = (1..=rows).map(|i| i.to_string()).collect();
            let cl = (1..=cols).map(|j| j.to_string()).collect();
            return ContingencyTable::new(rl, cl, counts).unwrap();
        }
    }
}

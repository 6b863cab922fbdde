//! Shared fixtures for the integration tests.
#![allow(dead_code)]

use impartial::dataset::{encode, Column, Dataset, EncodedDesign, Schema};
use impartial::harness::gen_simple_example;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Row ranges of the four loan-example cells, in generation order:
/// (low, minus), (low, plus), (high, minus), (high, plus).
pub const CELLS: [(usize, usize); 4] = [(0, 450), (450, 600), (600, 700), (700, 1000)];

pub fn loan_design() -> EncodedDesign {
    let sim = gen_simple_example();
    encode(&sim.data, &sim.schema).unwrap()
}

/// Value of `v` in each cell; panics if a cell is not constant.
pub fn cell_values(v: &[f64]) -> [f64; 4] {
    CELLS.map(|(a, b)| {
        let first = v[a];
        assert!(v[a..b].iter().all(|x| (x - first).abs() < 1e-12), "cell {a}..{b} not constant");
        first
    })
}

/// Correlated Gaussian-linear data: the first sensitive column is binary,
/// further sensitive columns are Gaussian; x loads on s, w on s and x, y on
/// everything.
pub fn random_data(seed: u64, n: usize, ps: usize, px: usize, pw: usize) -> (Dataset, Schema) {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    let mut normal = || -> f64 { r.sample(StandardNormal) };
    let mut cols: Vec<(String, Vec<f64>)> = Vec::new();
    let mut schema = String::from("y = response\n");

    let mut s = Vec::new();
    for k in 0..ps {
        let col: Vec<f64> = (0..n)
            .map(|_| {
                let z = normal();
                if k == 0 {
                    f64::from(u8::from(z > 0.3))
                } else {
                    z
                }
            })
            .collect();
        s.push(col);
    }
    let mut x = Vec::new();
    for j in 0..px {
        let col: Vec<f64> = (0..n)
            .map(|i| 0.7 * s.iter().map(|c| c[i]).sum::<f64>() + (j as f64 + 1.0) * 0.1 + normal())
            .collect();
        x.push(col);
    }
    let mut w = Vec::new();
    for _ in 0..pw {
        let col: Vec<f64> = (0..n)
            .map(|i| {
                0.5 * s.iter().map(|c| c[i]).sum::<f64>()
                    + 0.4 * x.iter().map(|c| c[i]).sum::<f64>()
                    + normal()
            })
            .collect();
        w.push(col);
    }
    let y: Vec<f64> = (0..n)
        .map(|i| {
            0.3 * s.iter().map(|c| c[i]).sum::<f64>()
                + x.iter().map(|c| c[i]).sum::<f64>()
                + 0.5 * w.iter().map(|c| c[i]).sum::<f64>()
                + normal()
        })
        .collect();

    cols.push(("y".into(), y));
    for (k, c) in s.into_iter().enumerate() {
        schema.push_str(&format!("s{k} = sensitive\n"));
        cols.push((format!("s{k}"), c));
    }
    for (k, c) in x.into_iter().enumerate() {
        schema.push_str(&format!("x{k} = legitimate\n"));
        cols.push((format!("x{k}"), c));
    }
    for (k, c) in w.into_iter().enumerate() {
        schema.push_str(&format!("w{k} = suspect\n"));
        cols.push((format!("w{k}"), c));
    }
    let (names, columns): (Vec<String>, Vec<Column>) =
        cols.into_iter().map(|(n, c)| (n, Column::Numeric(c))).unzip();
    (
        Dataset::new(names, columns).unwrap(),
        Schema::parse(&schema).unwrap(),
    )
}

pub fn random_design(seed: u64, n: usize, ps: usize, px: usize, pw: usize) -> EncodedDesign {
    let (data, schema) = random_data(seed, n, ps, px, pw);
    encode(&data, &schema).unwrap()
}

/// Block sizes for the i-th of a family of random designs, up to (3, 4, 3).
pub fn block_sizes(i: u64) -> (usize, usize, usize) {
    let mut r = ChaCha8Rng::seed_from_u64(i ^ 0xb10c);
    (r.gen_range(1..=3), r.gen_range(0..=4), r.gen_range(0..=3))
}

pub fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let scale = b.iter().map(|v| v.abs()).fold(1.0, f64::max);
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max) / scale
}

pub fn max_abs(a: &[f64]) -> f64 {
    a.iter().map(|v| v.abs()).fold(0.0, f64::max)
}

//! Labelled toy datasets for anomaly detection and samples for density checks.
//!
//! The 2-D anomaly sets follow the usual outlier-detection toy recipes: a
//! set of inliers from the named shape plus outliers drawn uniformly on
//! `[-6, 6]^D`. Rows are shuffled; outliers carry label 1.
//!
//! | name               | inliers                                                     |
//! |--------------------|-------------------------------------------------------------|
//! | `blob`             | N((0,0), 0.5²I)                                             |
//! | `two_blobs_tight`  | N(±(2,2), 0.5²I), equal halves                              |
//! | `two_blobs_spread` | N((2,2), 1.5²I) and N((-2,-2), 0.3²I)                       |
//! | `moons`            | 4·(moons(noise 0.05) − (0.5, 0.25))                         |
//! | `moon_and_blob`    | two thirds `moons`, one third N((-3.5,-3.5), 0.5²I)         |
//! | `gauss1d`          | N(0, 1)                                                     |
//! | `gauss_mix_1d`     | 0.3·N(0, 1) + 0.7·N(5, 1)                                   |
//! | `gauss2d`          | N(0, I)                                                     |
//! | `gauss_mix_2d`     | 0.3·N((0,0), diag(1, 0.25)) + 0.7·N((5,5), diag(0.36, 1.44)) |

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use crate::data::{Dataset, Matrix};
use crate::error::{Error, Result};

const OUTLIER_RANGE: f64 = 6.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SyntheticSet {
    Blob,
    TwoBlobsTight,
    TwoBlobsSpread,
    Moons,
    MoonAndBlob,
    Gauss1d,
    GaussMix1d,
    Gauss2d,
    GaussMix2d,
}

impl SyntheticSet {
    pub const ALL: [SyntheticSet; 9] = [
        SyntheticSet::Blob,
        SyntheticSet::TwoBlobsTight,
        SyntheticSet::TwoBlobsSpread,
        SyntheticSet::Moons,
        SyntheticSet::MoonAndBlob,
        SyntheticSet::Gauss1d,
        SyntheticSet::GaussMix1d,
        SyntheticSet::Gauss2d,
        SyntheticSet::GaussMix2d,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SyntheticSet::Blob => "blob",
            SyntheticSet::TwoBlobsTight => "two_blobs_tight",
            SyntheticSet::TwoBlobsSpread => "two_blobs_spread",
            SyntheticSet::Moons => "moons",
            SyntheticSet::MoonAndBlob => "moon_and_blob",
            SyntheticSet::Gauss1d => "gauss1d",
            SyntheticSet::GaussMix1d => "gauss_mix_1d",
            SyntheticSet::Gauss2d => "gauss2d",
            SyntheticSet::GaussMix2d => "gauss_mix_2d",
        }
    }

    pub fn dim(self) -> usize {
        match self {
            SyntheticSet::Gauss1d | SyntheticSet::GaussMix1d => 1,
            _ => 2,
        }
    }
}

impl FromStr for SyntheticSet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SyntheticSet::ALL
            .into_iter()
            .find(|set| set.name() == s)
            .ok_or_else(|| Error::UnknownDataset(s.to_string()))
    }
}

impl fmt::Display for SyntheticSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

fn gaussian(rng: &mut ChaCha8Rng, mean: &[f64], std: &[f64]) -> Vec<f64> {
    mean.iter()
        .zip(std)
        .map(|(m, s)| m + s * rng.sample::<f64, _>(StandardNormal))
        .collect()
}

/// Two interleaving half circles with Gaussian noise, outer arc first.
fn moons(rng: &mut ChaCha8Rng, n: usize, noise: f64) -> Vec<Vec<f64>> {
    let n_outer = n / 2;
    let n_inner = n - n_outer;
    let noise = Normal::new(0.0, noise).expect("valid noise scale");
    let arc = |k: usize, m: usize| if m > 1 { PI * k as f64 / (m - 1) as f64 } else { 0.0 };
    let mut out = Vec::with_capacity(n);
    for k in 0..n_outer {
        let t = arc(k, n_outer);
        out.push(vec![t.cos(), t.sin()]);
    }
    for k in 0..n_inner {
        let t = arc(k, n_inner);
        out.push(vec![1.0 - t.cos(), 1.0 - t.sin() - 0.5]);
    }
    for p in &mut out {
        for v in p.iter_mut() {
            *v += noise.sample(rng);
        }
    }
    out
}

fn scaled_moons(rng: &mut ChaCha8Rng, n: usize) -> Vec<Vec<f64>> {
    let mut pts = moons(rng, n, 0.05);
    for p in &mut pts {
        p[0] = 4.0 * (p[0] - 0.5);
        p[1] = 4.0 * (p[1] - 0.25);
    }
    pts
}

fn inliers(set: SyntheticSet, rng: &mut ChaCha8Rng, n: usize) -> Vec<Vec<f64>> {
    let half = n / 2;
    match set {
        SyntheticSet::Blob => (0..n).map(|_| gaussian(rng, &[0.0, 0.0], &[0.5, 0.5])).collect(),
        SyntheticSet::TwoBlobsTight => (0..n)
            .map(|i| {
                let c = if i < half { 2.0 } else { -2.0 };
                gaussian(rng, &[c, c], &[0.5, 0.5])
            })
            .collect(),
        SyntheticSet::TwoBlobsSpread => (0..n)
            .map(|i| {
                if i < half {
                    gaussian(rng, &[2.0, 2.0], &[1.5, 1.5])
                } else {
                    gaussian(rng, &[-2.0, -2.0], &[0.3, 0.3])
                }
            })
            .collect(),
        SyntheticSet::Moons => scaled_moons(rng, n),
        SyntheticSet::MoonAndBlob => {
            let n_moon = 2 * n / 3;
            let mut pts = scaled_moons(rng, n_moon);
            pts.extend((n_moon..n).map(|_| gaussian(rng, &[-3.5, -3.5], &[0.5, 0.5])));
            pts
        }
        SyntheticSet::Gauss1d => (0..n).map(|_| gaussian(rng, &[0.0], &[1.0])).collect(),
        SyntheticSet::GaussMix1d => {
            let k = (0.3 * n as f64) as usize;
            (0..n)
                .map(|i| gaussian(rng, &[if i < k { 0.0 } else { 5.0 }], &[1.0]))
                .collect()
        }
        SyntheticSet::Gauss2d => (0..n).map(|_| gaussian(rng, &[0.0, 0.0], &[1.0, 1.0])).collect(),
        SyntheticSet::GaussMix2d => {
            let k = (0.3 * n as f64) as usize;
            (0..n)
                .map(|i| {
                    if i < k {
                        gaussian(rng, &[0.0, 0.0], &[1.0, 0.5])
                    } else {
                        gaussian(rng, &[5.0, 5.0], &[0.6, 1.2])
                    }
                })
                .collect()
        }
    }
}

/// Generates `n_inliers` points of `set` plus `n_outliers` uniform outliers.
pub fn gen_synthetic(set: SyntheticSet, n_inliers: usize, n_outliers: usize, seed: u64) -> Result<Dataset> {
    if n_inliers == 0 {
        return Err(Error::InvalidConfig("n_inliers must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows: Vec<(Vec<f64>, u8)> = inliers(set, &mut rng, n_inliers)
        .into_iter()
        .map(|p| (p, 0))
        .collect();
    let dim = set.dim();
    for _ in 0..n_outliers {
        let p = (0..dim)
            .map(|_| rng.random_range(-OUTLIER_RANGE..OUTLIER_RANGE))
            .collect();
        rows.push((p, 1));
    }
    rows.shuffle(&mut rng);
    let labels = rows.iter().map(|r| r.1).collect();
    let values: Vec<Vec<f64>> = rows.into_iter().map(|r| r.0).collect();
    Dataset::new(Matrix::from_rows(&values)?, Some(labels))
}

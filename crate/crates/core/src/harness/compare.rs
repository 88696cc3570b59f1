//! Final-regret ratio reports between two algorithms.

use serde::{Deserialize, Serialize};

use super::{CellKey, CellSummary};
use crate::bandit::Algorithm;
use crate::env::Setting;
use crate::error::{Error, Result};
use crate::noise::{splitmix64, NoiseSource};

pub const BOOTSTRAP_RESAMPLES: usize = 1000;
const BOOTSTRAP_SEED: u64 = 0xB007_5742;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareRow {
    pub setting: Setting,
    pub k: usize,
    pub epsilon: f64,
    pub horizon: u64,
    /// `mean final regret of b / mean final regret of a`.
    pub ratio: f64,
    /// 90% percentile-bootstrap interval over paired runs.
    pub lower: f64,
    pub upper: f64,
}

fn mean(v: impl Iterator<Item = f64>) -> (f64, usize) {
    v.fold((0.0, 0), |(s, n), x| (s + x, n + 1))
}

fn ratio_of(a: f64, b: f64) -> f64 {
    if a == 0.0 && b == 0.0 {
        1.0
    } else {
        b / a
    }
}

/// Per-instance ratio `b / a` with a paired bootstrap 90% interval.
///
/// Runs are paired by run index, which the grid seeds identically across
/// algorithms. Resampling is seeded from the cell identity, so swapping the
/// arguments yields exact reciprocals.
pub fn compare(summaries: &[CellSummary], a: Algorithm, b: Algorithm) -> Result<Vec<CompareRow>> {
    let of = |alg: Algorithm| summaries.iter().filter(move |s| s.cell.algorithm == alg);
    let mut out = Vec::new();
    for sa in of(a) {
        let sb = of(b)
            .find(|s| s.cell.same_instance(&sa.cell))
            .ok_or_else(|| mismatch(&sa.cell, b))?;
        if sa.final_regrets.len() != sb.final_regrets.len() || sa.final_regrets.is_empty() {
            return Err(Error::Input(format!(
                "cells for {a} and {b} at {} K={} eps={} have different run counts",
                sa.cell.setting, sa.cell.k, sa.cell.epsilon
            )));
        }
        let n = sa.final_regrets.len();
        let point = ratio_of(sa.final_regrets.iter().sum(), sb.final_regrets.iter().sum());

        let mut noise = NoiseSource::new(BOOTSTRAP_SEED, instance_hash(&sa.cell));
        let mut draws: Vec<f64> = (0..BOOTSTRAP_RESAMPLES)
            .map(|_| {
                let idx: Vec<usize> = (0..n)
                    .map(|_| ((noise.uniform() * n as f64) as usize).min(n - 1))
                    .collect();
                let (ma, _) = mean(idx.iter().map(|&i| sa.final_regrets[i]));
                let (mb, _) = mean(idx.iter().map(|&i| sb.final_regrets[i]));
                ratio_of(ma, mb)
            })
            .collect();
        draws.sort_by(f64::total_cmp);
        let last = (BOOTSTRAP_RESAMPLES - 1) as f64;
        let lower = draws[(0.05 * last).floor() as usize];
        let upper = draws[(0.95 * last).ceil() as usize];
        out.push(CompareRow {
            setting: sa.cell.setting,
            k: sa.cell.k,
            epsilon: sa.cell.epsilon,
            horizon: sa.cell.horizon,
            ratio: point,
            lower,
            upper,
        });
    }
    if out.is_empty() {
        return Err(Error::Input(format!("no cells for algorithm {a}")));
    }
    // Cells for b with no partner for a are also a mismatch.
    if let Some(sb) = of(b).find(|sb| !of(a).any(|sa| sa.cell.same_instance(&sb.cell))) {
        return Err(mismatch(&sb.cell, a));
    }
    Ok(out)
}

fn mismatch(cell: &CellKey, missing: Algorithm) -> Error {
    Error::Input(format!(
        "no {missing} cell matching {} K={} eps={} T={}",
        cell.setting, cell.k, cell.epsilon, cell.horizon
    ))
}

fn instance_hash(cell: &CellKey) -> u64 {
    let mut h = splitmix64(cell.setting as u64);
    for w in [cell.k as u64, cell.epsilon.to_bits(), cell.horizon] {
        h = splitmix64(h ^ w);
    }
    h
}

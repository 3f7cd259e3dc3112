//! Roofline bound, flop accounting, scaling efficiencies and an LRU model of
//! matrix traffic.

use std::collections::{BTreeMap, HashMap};

use serde::Serialize;

use crate::error::{invalid, Result};
use crate::leveling::Schedule;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RooflineInput {
    /// Saturated load bandwidth in bytes/s.
    pub b_s: f64,
    pub nnzr: f64,
}

/// CRS SpMV bound `b_s / (6 B + 14 B / N_nzr)` in flop/s.
pub fn roofline(input: RooflineInput) -> Result<f64> {
    if !(input.b_s > 0.0 && input.nnzr > 0.0) {
        return invalid("roofline needs b_s > 0 and nnzr > 0");
    }
    Ok(input.b_s / (6.0 + 14.0 / input.nnzr))
}

/// [`roofline`] in Gflop/s (10^9).
pub fn roofline_gflops(b_s: f64, nnzr: f64) -> Result<f64> {
    Ok(roofline(RooflineInput { b_s, nnzr })? / 1e9)
}

/// Two flops per stored nonzero per power.
pub fn flop_count(nnz: u64, p_m: usize) -> u64 {
    2 * nnz * p_m as u64
}

/// Fully associative LRU cache over variable-size blocks.
#[derive(Debug)]
pub struct LruCache {
    capacity: u64,
    used: u64,
    clock: u64,
    stamp_of: HashMap<usize, u64>,
    by_stamp: BTreeMap<u64, (usize, u64)>,
    pub miss_bytes: u64,
    pub hit_bytes: u64,
}

impl LruCache {
    pub fn new(capacity: u64) -> Self {
        LruCache {
            capacity,
            used: 0,
            clock: 0,
            stamp_of: HashMap::new(),
            by_stamp: BTreeMap::new(),
            miss_bytes: 0,
            hit_bytes: 0,
        }
    }

    pub fn access(&mut self, block: usize, bytes: u64) {
        self.clock += 1;
        if let Some(old) = self.stamp_of.insert(block, self.clock) {
            let entry = self.by_stamp.remove(&old).expect("stamp");
            self.by_stamp.insert(self.clock, entry);
            self.hit_bytes += bytes;
            return;
        }
        self.miss_bytes += bytes;
        self.by_stamp.insert(self.clock, (block, bytes));
        self.used += bytes;
        while self.used > self.capacity {
            let (_, (b, sz)) = self.by_stamp.pop_first().expect("non-empty");
            self.stamp_of.remove(&b);
            self.used -= sz;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrafficReport {
    pub algo: String,
    pub cache_bytes: u64,
    pub policy: &'static str,
    pub p_m: usize,
    pub matrix_bytes: u64,
    pub miss_bytes: u64,
    /// `p_m * matrix_bytes / miss_bytes`
    pub blocking_factor: f64,
}

/// Replays `order` (block ids) through an LRU cache of `cache_bytes`.
pub fn lru_traffic(algo: &str, order: &[usize], block_bytes: &[u64], cache_bytes: u64, p_m: usize) -> Result<TrafficReport> {
    if cache_bytes == 0 {
        return invalid("cache size must be > 0");
    }
    let mut cache = LruCache::new(cache_bytes);
    for &b in order {
        let Some(&bytes) = block_bytes.get(b) else {
            return invalid(format!("block {b} out of {}", block_bytes.len()));
        };
        cache.access(b, bytes);
    }
    let matrix_bytes: u64 = block_bytes.iter().sum();
    Ok(TrafficReport {
        algo: algo.to_string(),
        cache_bytes,
        policy: "lru",
        p_m,
        matrix_bytes,
        miss_bytes: cache.miss_bytes,
        blocking_factor: if cache.miss_bytes == 0 {
            0.0
        } else {
            (p_m as f64 * matrix_bytes as f64) / cache.miss_bytes as f64
        },
    })
}

/// `p_m` full sweeps over all blocks.
pub fn trad_order(n_blocks: usize, p_m: usize) -> Vec<usize> {
    (0..p_m).flat_map(|_| 0..n_blocks).collect()
}

/// Block order of a wavefront schedule.
pub fn schedule_order(s: &Schedule) -> Vec<usize> {
    s.tasks.iter().map(|t| t.group).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ScalingMode {
    Strong,
    Weak,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EfficiencyPoint {
    pub n: usize,
    pub time: f64,
    pub efficiency: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EfficiencyReport {
    pub mode: ScalingMode,
    pub baseline: usize,
    pub points: Vec<EfficiencyPoint>,
}

/// Strong: `T_b * b / (n * T_n)`; weak: `T_b / T_n`, relative to the
/// baseline rank count `b` (1 gives the textbook formulas).
pub fn efficiency(times: &[(usize, f64)], mode: ScalingMode, baseline: usize) -> Result<EfficiencyReport> {
    if times.iter().any(|&(n, t)| n == 0 || !(t > 0.0)) {
        return invalid("times must be positive and rank counts >= 1");
    }
    let Some(&(_, t_b)) = times.iter().find(|&&(n, _)| n == baseline) else {
        return invalid(format!("baseline n = {baseline} missing from the timing table"));
    };
    let points = times
        .iter()
        .map(|&(n, t)| EfficiencyPoint {
            n,
            time: t,
            efficiency: match mode {
                ScalingMode::Strong => t_b * baseline as f64 / (n as f64 * t),
                ScalingMode::Weak => t_b / t,
            },
        })
        .collect();
    Ok(EfficiencyReport { mode, baseline, points })
}

//! Row-wise distribution over logical ranks and the per-rank plans the
//! distributed kernels run on.
//!
//! A rank's local vector is `[owned rows | halo]`. Owned rows are reordered by
//! BFS distance from the halo set B, so the boundary sets I_1, I_2, ... come
//! first and the bulk M follows as contiguous ranges. Halo slots are sorted by
//! (owner rank, owner-local index), which makes every plan independent of
//! hashing or iteration order.

use std::fs::File;
use std::io::{BufRead, BufReader};
use std::ops::Range;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, MpkError, Result};
use crate::leveling::{bfs_levels, Adjacency};
use crate::sparse::CrsMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PartitionStrategy {
    BlockRows,
    BalancedNnz,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    n_ranks: usize,
    rank_of_row: Vec<u32>,
    rows: Vec<Vec<u32>>,
}

impl Partition {
    pub fn from_vector(rank_of_row: Vec<u32>, n_ranks: usize) -> Result<Self> {
        if n_ranks == 0 {
            return invalid("at least one rank is required");
        }
        let mut rows = vec![Vec::new(); n_ranks];
        for (r, &k) in rank_of_row.iter().enumerate() {
            if k as usize >= n_ranks {
                return invalid(format!("row {r} assigned to rank {k} of {n_ranks}"));
            }
            rows[k as usize].push(r as u32);
        }
        Ok(Partition {
            n_ranks,
            rank_of_row,
            rows,
        })
    }

    pub fn n_ranks(&self) -> usize {
        self.n_ranks
    }

    pub fn n_rows(&self) -> usize {
        self.rank_of_row.len()
    }

    pub fn rank_of_row(&self) -> &[u32] {
        &self.rank_of_row
    }

    /// Global rows owned by `rank`, ascending.
    pub fn rows(&self, rank: usize) -> &[u32] {
        &self.rows[rank]
    }
}

/// Contiguous row blocks, either equal in row count (remainder to the
/// leading ranks) or balanced by nonzeros through a greedy prefix split.
pub fn partition_rows(a: &CrsMatrix, n: usize, strategy: PartitionStrategy) -> Result<Partition> {
    let n_rows = a.n_rows();
    if n == 0 || n > n_rows {
        return invalid(format!("cannot split {n_rows} rows over {n} ranks"));
    }
    let bounds: Vec<usize> = match strategy {
        PartitionStrategy::BlockRows => {
            let (q, rem) = (n_rows / n, n_rows % n);
            let mut b = vec![0];
            for k in 0..n {
                b.push(b[k] + q + usize::from(k < rem));
            }
            b
        }
        PartitionStrategy::BalancedNnz => {
            let prefix: Vec<u64> = std::iter::once(0)
                .chain(a.row_ptr()[1..].iter().map(|&p| p as u64))
                .collect();
            let total = prefix[n_rows] as f64;
            let mut b = vec![0usize];
            for k in 1..n {
                let target = total * k as f64 / n as f64;
                let lo = b[k - 1] + 1;
                let hi = n_rows - (n - k);
                let mut best = lo;
                for cut in lo..=hi {
                    let dist = (prefix[cut] as f64 - target).abs();
                    let best_dist = (prefix[best] as f64 - target).abs();
                    if dist < best_dist {
                        best = cut;
                    } else if prefix[cut] as f64 > target {
                        break;
                    }
                }
                b.push(best);
            }
            b.push(n_rows);
            b
        }
    };
    let mut rank_of_row = vec![0u32; n_rows];
    for k in 0..n {
        for r in bounds[k]..bounds[k + 1] {
            rank_of_row[r] = k as u32;
        }
    }
    Partition::from_vector(rank_of_row, n)
}

/// Reads a partition vector: one rank id per line, one line per matrix row.
pub fn read_partition_vector(path: impl AsRef<Path>, n_rows: usize, n: usize) -> Result<Partition> {
    let reader = BufReader::new(File::open(path)?);
    let mut v = Vec::with_capacity(n_rows);
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        let k: u32 = t.parse().map_err(|_| MpkError::Parse {
            line: idx + 1,
            msg: format!("'{t}' is not a rank id"),
        })?;
        if k as usize >= n {
            return Err(MpkError::Parse {
                line: idx + 1,
                msg: format!("rank id {k} outside [0, {n})"),
            });
        }
        v.push(k);
    }
    if v.len() != n_rows {
        return Err(MpkError::Parse {
            line: v.len(),
            msg: format!("expected {n_rows} entries, found {}", v.len()),
        });
    }
    Partition::from_vector(v, n)
}

/// Rank-local CRS block. Columns are local indices (owned rows first, then
/// halo slots) and each row keeps the ascending global column order of the
/// source matrix, so local indices need not be sorted.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalMatrix {
    pub row_ptr: Vec<u32>,
    pub col_idx: Vec<u32>,
    pub values: Vec<f64>,
}

impl LocalMatrix {
    pub fn n_rows(&self) -> usize {
        self.row_ptr.len() - 1
    }

    pub fn nnz(&self) -> usize {
        self.col_idx.len()
    }

    #[inline]
    pub fn row(&self, r: usize) -> (&[u32], &[f64]) {
        let lo = self.row_ptr[r] as usize;
        let hi = self.row_ptr[r + 1] as usize;
        (&self.col_idx[lo..hi], &self.values[lo..hi])
    }

    /// CRS bytes of rows `range`: 12 per nonzero plus 4 per row.
    pub fn bytes(&self, range: Range<usize>) -> u64 {
        let nnz = (self.row_ptr[range.end] - self.row_ptr[range.start]) as u64;
        12 * nnz + 4 * range.len() as u64
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SendList {
    pub rank: usize,
    /// Owned local rows, in the receiver's slot order.
    pub rows: Vec<u32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct RecvRange {
    pub rank: usize,
    /// First halo slot filled by this neighbor.
    pub offset: usize,
    pub count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanOptions {
    pub p_m: usize,
    /// Reorder owned rows by distance from the halo. Required for the
    /// level-blocked kernel; optional for the traditional one.
    pub reorder: bool,
}

impl PlanOptions {
    pub fn new(p_m: usize) -> Self {
        PlanOptions { p_m, reorder: true }
    }
}

#[derive(Debug, Clone)]
pub struct RankPlan {
    pub rank: usize,
    pub n_ranks: usize,
    pub p_m: usize,
    pub reordered: bool,
    /// Global row of each owned local row.
    pub local_rows: Vec<u32>,
    pub matrix: LocalMatrix,
    /// Global row held by each halo slot.
    pub halo_global: Vec<u32>,
    /// (owner rank, owner-local row) per halo slot.
    pub halo_src: Vec<(u32, u32)>,
    pub sends: Vec<SendList>,
    pub recvs: Vec<RecvRange>,
    /// Level offsets over owned local rows, in local order.
    pub level_ptr: Vec<usize>,
    /// Leading levels that are BFS distance levels from the halo; level `j`
    /// holds rows at distance `j + 1`. Zero when the halo is empty.
    pub n_distance_levels: usize,
    /// BFS distance from the halo per owned local row; `usize::MAX` if unreachable.
    pub distance: Vec<usize>,
}

impl RankPlan {
    pub fn n_local(&self) -> usize {
        self.local_rows.len()
    }

    pub fn n_halo(&self) -> usize {
        self.halo_global.len()
    }

    pub fn n_levels(&self) -> usize {
        self.level_ptr.len() - 1
    }

    pub fn level_range(&self, j: usize) -> Range<usize> {
        self.level_ptr[j]..self.level_ptr[j + 1]
    }

    /// Power cap of level `j` in the local wavefront: distance `k < p_m`
    /// caps at `k`, everything else at `p_m`.
    pub fn level_cap(&self, j: usize, p_m: usize) -> usize {
        if j < self.n_distance_levels {
            (j + 1).min(p_m)
        } else {
            p_m
        }
    }

    pub fn level_caps(&self, p_m: usize) -> Vec<usize> {
        (0..self.n_levels()).map(|j| self.level_cap(j, p_m)).collect()
    }

    /// Number of owned rows at distance exactly `k` from the halo.
    pub fn i_size(&self, k: usize) -> usize {
        if k == 0 {
            0
        } else if self.reordered {
            if k > self.n_distance_levels {
                0
            } else {
                self.level_range(k - 1).len()
            }
        } else {
            self.distance.iter().filter(|&&d| d == k).count()
        }
    }

    /// Local rows of I_k. Only meaningful for reordered plans.
    pub fn i_range(&self, k: usize) -> Range<usize> {
        if k == 0 || k > self.n_distance_levels {
            0..0
        } else {
            self.level_range(k - 1)
        }
    }

    /// Size of the bulk M for maximum power `p_m`.
    pub fn m_size(&self, p_m: usize) -> usize {
        self.n_local() - (1..p_m).map(|k| self.i_size(k)).sum::<usize>()
    }

    pub fn summary(&self) -> PlanSummary {
        let sends = |r: usize| {
            self.sends
                .iter()
                .find(|s| s.rank == r)
                .map_or(0, |s| s.rows.len())
        };
        let recvs = |r: usize| {
            self.recvs
                .iter()
                .find(|s| s.rank == r)
                .map_or(0, |s| s.count)
        };
        let mut ranks: Vec<usize> = self
            .sends
            .iter()
            .map(|s| s.rank)
            .chain(self.recvs.iter().map(|r| r.rank))
            .collect();
        ranks.sort_unstable();
        ranks.dedup();
        PlanSummary {
            rank: self.rank,
            n_local: self.n_local(),
            n_halo: self.n_halo(),
            i_sizes: (1..self.p_m).map(|k| self.i_size(k)).collect(),
            m_size: self.m_size(self.p_m),
            neighbors: ranks
                .into_iter()
                .map(|rank| NeighborSummary {
                    rank,
                    send: sends(rank),
                    recv: recvs(rank),
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct NeighborSummary {
    pub rank: usize,
    pub send: usize,
    pub recv: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PlanSummary {
    pub rank: usize,
    pub n_local: usize,
    pub n_halo: usize,
    pub i_sizes: Vec<usize>,
    pub m_size: usize,
    pub neighbors: Vec<NeighborSummary>,
}

/// Owned-row ordering of one rank before halo slots are assigned.
struct Ordering {
    local_rows: Vec<u32>,
    level_ptr: Vec<usize>,
    n_distance_levels: usize,
    distance: Vec<usize>,
}

fn order_rank(a: &CrsMatrix, part: &Partition, rank: usize, reorder: bool, local_of: &[u32]) -> Ordering {
    let rows = part.rows(rank);
    let owner = part.rank_of_row();
    let n = rows.len();
    let mut edges = Vec::new();
    let mut roots = Vec::new();
    for (li, &g) in rows.iter().enumerate() {
        let mut touches_halo = false;
        for &c in a.row(g as usize).0 {
            if owner[c as usize] as usize == rank {
                edges.push((li, local_of[c as usize] as usize));
            } else {
                touches_halo = true;
            }
        }
        if touches_halo {
            roots.push(li);
        }
    }
    let adj = Adjacency::from_edges(n, edges);
    let has_halo = !roots.is_empty();
    let levels = bfs_levels(&adj, &roots);
    let n_distance_levels = if has_halo { levels.n_reachable } else { 0 };
    let distance: Vec<usize> = levels
        .level_of
        .iter()
        .map(|&l| if l < n_distance_levels { l + 1 } else { usize::MAX })
        .collect();

    if reorder {
        let local_rows = levels.vertex_order.iter().map(|&li| rows[li]).collect();
        let distance = levels.vertex_order.iter().map(|&li| distance[li]).collect();
        Ordering {
            local_rows,
            level_ptr: levels.level_ptr,
            n_distance_levels,
            distance,
        }
    } else {
        Ordering {
            local_rows: rows.to_vec(),
            level_ptr: vec![0, n],
            n_distance_levels: 0,
            distance,
        }
    }
}

/// Builds the plans of every rank.
pub fn build_plans(a: &CrsMatrix, part: &Partition, opts: PlanOptions) -> Result<Vec<RankPlan>> {
    let builder = PlanBuilder::new(a, part, opts)?;
    (0..part.n_ranks()).map(|r| builder.plan(r)).collect()
}

/// Builds the plan of one rank.
pub fn build_rank_plan(a: &CrsMatrix, part: &Partition, rank: usize, opts: PlanOptions) -> Result<RankPlan> {
    PlanBuilder::new(a, part, opts)?.plan(rank)
}

/// Shared preprocessing for plan construction: every rank's row ordering and
/// the global map from row to owner-local index.
pub struct PlanBuilder<'a> {
    a: &'a CrsMatrix,
    part: &'a Partition,
    opts: PlanOptions,
    orderings: Vec<Ordering>,
    /// Owner-local index of every global row after reordering.
    local_index: Vec<u32>,
    sends: Vec<Vec<SendList>>,
}

impl<'a> PlanBuilder<'a> {
    pub fn new(a: &'a CrsMatrix, part: &'a Partition, opts: PlanOptions) -> Result<Self> {
        if !a.is_square() {
            return invalid("distributed kernels need a square matrix");
        }
        if part.n_rows() != a.n_rows() {
            return invalid(format!(
                "partition covers {} rows, matrix has {}",
                part.n_rows(),
                a.n_rows()
            ));
        }
        if opts.p_m == 0 {
            return invalid("p_m must be >= 1");
        }
        let mut ascending_local = vec![0u32; a.n_rows()];
        for k in 0..part.n_ranks() {
            for (li, &g) in part.rows(k).iter().enumerate() {
                ascending_local[g as usize] = li as u32;
            }
        }
        let orderings: Vec<Ordering> = (0..part.n_ranks())
            .map(|k| order_rank(a, part, k, opts.reorder, &ascending_local))
            .collect();
        let mut local_index = vec![0u32; a.n_rows()];
        for o in &orderings {
            for (li, &g) in o.local_rows.iter().enumerate() {
                local_index[g as usize] = li as u32;
            }
        }
        // Rows each rank must send: owned rows referenced by another rank,
        // grouped by receiver and sorted by local index.
        let owner = part.rank_of_row();
        let mut wanted: Vec<Vec<(u32, u32)>> = vec![Vec::new(); part.n_ranks()];
        for g in 0..a.n_rows() {
            let k = owner[g];
            for &c in a.row(g).0 {
                let o = owner[c as usize];
                if o != k {
                    wanted[o as usize].push((k, local_index[c as usize]));
                }
            }
        }
        let sends = wanted
            .into_iter()
            .map(|mut w| {
                w.sort_unstable();
                w.dedup();
                let mut lists: Vec<SendList> = Vec::new();
                for (k, l) in w {
                    match lists.last_mut() {
                        Some(s) if s.rank == k as usize => s.rows.push(l),
                        _ => lists.push(SendList {
                            rank: k as usize,
                            rows: vec![l],
                        }),
                    }
                }
                lists
            })
            .collect();
        Ok(PlanBuilder {
            a,
            part,
            opts,
            orderings,
            local_index,
            sends,
        })
    }

    pub fn plan(&self, rank: usize) -> Result<RankPlan> {
        let (a, part) = (self.a, self.part);
        if rank >= part.n_ranks() {
            return invalid(format!("rank {rank} out of {}", part.n_ranks()));
        }
        let owner = part.rank_of_row();
        let ord = &self.orderings[rank];
        let n_local = ord.local_rows.len();

        // Halo: distinct remote columns, sorted by (owner, owner-local index).
        let mut halo: Vec<(u32, u32, u32)> = Vec::new();
        for &g in &ord.local_rows {
            for &c in a.row(g as usize).0 {
                let k = owner[c as usize];
                if k as usize != rank {
                    halo.push((k, self.local_index[c as usize], c));
                }
            }
        }
        halo.sort_unstable();
        halo.dedup();
        let halo_src: Vec<(u32, u32)> = halo.iter().map(|&(k, l, _)| (k, l)).collect();
        let halo_global: Vec<u32> = halo.iter().map(|&(_, _, g)| g).collect();

        let mut recvs: Vec<RecvRange> = Vec::new();
        for (s, &(k, _)) in halo_src.iter().enumerate() {
            match recvs.last_mut() {
                Some(r) if r.rank == k as usize => r.count += 1,
                _ => recvs.push(RecvRange {
                    rank: k as usize,
                    offset: s,
                    count: 1,
                }),
            }
        }

        // Column renumbering keeps each row's global column order.
        let slot_of = |g: u32| -> u32 {
            let key = (owner[g as usize], self.local_index[g as usize], g);
            (n_local + halo.binary_search(&key).expect("halo column")) as u32
        };
        let mut row_ptr = Vec::with_capacity(n_local + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0u32);
        for &g in &ord.local_rows {
            let (cols, vals) = a.row(g as usize);
            for (&c, &v) in cols.iter().zip(vals) {
                let lc = if owner[c as usize] as usize == rank {
                    self.local_index[c as usize]
                } else {
                    slot_of(c)
                };
                col_idx.push(lc);
                values.push(v);
            }
            row_ptr.push(col_idx.len() as u32);
        }

        let sends = self.sends[rank].clone();

        Ok(RankPlan {
            rank,
            n_ranks: part.n_ranks(),
            p_m: self.opts.p_m,
            reordered: self.opts.reorder,
            local_rows: ord.local_rows.clone(),
            matrix: LocalMatrix {
                row_ptr,
                col_idx,
                values,
            },
            halo_global,
            halo_src,
            sends,
            recvs,
            level_ptr: ord.level_ptr.clone(),
            n_distance_levels: ord.n_distance_levels,
            distance: ord.distance.clone(),
        })
    }
}

/// Halo rows over all ranks relative to the matrix size.
pub fn mpi_overhead(plans: &[RankPlan]) -> f64 {
    let n_rows: usize = plans.iter().map(RankPlan::n_local).sum();
    if n_rows == 0 {
        return 0.0;
    }
    plans.iter().map(RankPlan::n_halo).sum::<usize>() as f64 / n_rows as f64
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OverheadReport {
    pub p_m: usize,
    pub o_mpi: f64,
    pub o_dlb: Vec<f64>,
    pub o_dlb_global: f64,
    pub n_halo: Vec<usize>,
    pub m_size: Vec<usize>,
}

/// Per-rank fraction of rows outside the bulk, and the row-weighted global value.
pub fn dlb_overheads(plans: &[RankPlan], p_m: usize) -> OverheadReport {
    let n_rows: usize = plans.iter().map(RankPlan::n_local).sum();
    let m_size: Vec<usize> = plans.iter().map(|p| p.m_size(p_m)).collect();
    let o_dlb: Vec<f64> = plans
        .iter()
        .zip(&m_size)
        .map(|(p, &m)| {
            if p.n_local() == 0 {
                0.0
            } else {
                1.0 - m as f64 / p.n_local() as f64
            }
        })
        .collect();
    let weighted: f64 = plans
        .iter()
        .zip(&o_dlb)
        .map(|(p, &o)| p.n_local() as f64 * o)
        .sum();
    OverheadReport {
        p_m,
        o_mpi: mpi_overhead(plans),
        o_dlb_global: if n_rows == 0 { 0.0 } else { weighted / n_rows as f64 },
        o_dlb,
        n_halo: plans.iter().map(RankPlan::n_halo).collect(),
        m_size,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sparse::{gen_stencil, StencilKind};

    fn chain(n: usize) -> CrsMatrix {
        gen_stencil([n, 1, 1], StencilKind::Pt5).unwrap()
    }

    #[test]
    fn blockrows_split() {
        let a = chain(16);
        let p = partition_rows(&a, 2, PartitionStrategy::BlockRows).unwrap();
        assert_eq!(p.rows(0), &(0..8).collect::<Vec<u32>>()[..]);
        assert_eq!(p.rows(1), &(8..16).collect::<Vec<u32>>()[..]);
        let p = partition_rows(&chain(7), 3, PartitionStrategy::BlockRows).unwrap();
        assert_eq!(p.rows(0).len(), 3);
        assert_eq!(p.rows(2).len(), 2);
    }

    #[test]
    fn balanced_nnz_prefix() {
        let a = CrsMatrix::from_triplets(
            4,
            10,
            (0..10)
                .map(|c| (0, c, 1.0))
                .chain((0..10).map(|c| (1, c, 1.0)))
                .chain([(2, 0, 1.0), (3, 0, 1.0)]),
        )
        .unwrap();
        let p = partition_rows(&a, 2, PartitionStrategy::BalancedNnz).unwrap();
        assert_eq!(p.rows(0), &[0]);
        assert_eq!(p.rows(1), &[1, 2, 3]);
    }

    #[test]
    fn too_many_ranks() {
        assert!(partition_rows(&chain(3), 4, PartitionStrategy::BlockRows).is_err());
        assert!(partition_rows(&chain(3), 0, PartitionStrategy::BlockRows).is_err());
    }

    #[test]
    fn partition_vector_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("part");
        std::fs::write(&path, "0\n0\n1\n1\n").unwrap();
        let p = read_partition_vector(&path, 4, 2).unwrap();
        assert_eq!(p.rows(0), &[0, 1]);
        assert_eq!(p.rows(1), &[2, 3]);
        std::fs::write(&path, "0\n0\n0\n0\n").unwrap();
        assert_eq!(read_partition_vector(&path, 4, 1).unwrap().n_ranks(), 1);
        std::fs::write(&path, "0\n2\n1\n1\n").unwrap();
        assert!(matches!(read_partition_vector(&path, 4, 2), Err(MpkError::Parse { line: 2, .. })));
        std::fs::write(&path, "0\n1\n").unwrap();
        assert!(read_partition_vector(&path, 4, 2).is_err());
    }

    #[test]
    fn single_rank_has_no_halo() {
        let a = chain(10);
        let part = partition_rows(&a, 1, PartitionStrategy::BlockRows).unwrap();
        let plans = build_plans(&a, &part, PlanOptions::new(3)).unwrap();
        assert_eq!(plans[0].n_halo(), 0);
        assert_eq!(plans[0].m_size(3), 10);
        assert_eq!(mpi_overhead(&plans), 0.0);
        assert_eq!(dlb_overheads(&plans, 3).o_dlb_global, 0.0);
    }

    #[test]
    fn chain_boundary_sets() {
        let a = chain(16);
        let part = partition_rows(&a, 2, PartitionStrategy::BlockRows).unwrap();
        let plans = build_plans(&a, &part, PlanOptions::new(3)).unwrap();
        let p0 = &plans[0];
        assert_eq!(p0.halo_global, vec![8]);
        assert_eq!(plans[1].halo_global, vec![7]);
        // I_1 = {7}, I_2 = {6}, M = the rest.
        assert_eq!(p0.local_rows[p0.i_range(1)], [7]);
        assert_eq!(p0.local_rows[p0.i_range(2)], [6]);
        assert_eq!(p0.m_size(3), 6);
        assert_eq!(mpi_overhead(&plans), 0.125);
        // Slot 0 of rank 1 comes from rank 0's local row holding global 7.
        assert_eq!(plans[1].halo_src, vec![(0, 0)]);
        assert_eq!(plans[0].sends[0].rows, vec![0]);
    }

    #[test]
    fn dlb_overhead_chain_100() {
        let a = chain(200);
        let part = partition_rows(&a, 2, PartitionStrategy::BlockRows).unwrap();
        let plans = build_plans(&a, &part, PlanOptions::new(3)).unwrap();
        let rep = dlb_overheads(&plans, 3);
        assert!((rep.o_dlb[0] - 0.02).abs() < 1e-15);
        assert_eq!(dlb_overheads(&plans, 1).o_dlb_global, 0.0);
    }

    #[test]
    fn dense_coupling_is_all_halo() {
        let n = 8;
        let a = CrsMatrix::from_triplets(n, n, (0..n).flat_map(|r| (0..n).map(move |c| (r, c, 1.0)))).unwrap();
        let part = partition_rows(&a, 2, PartitionStrategy::BlockRows).unwrap();
        let plans = build_plans(&a, &part, PlanOptions::new(2)).unwrap();
        assert_eq!(mpi_overhead(&plans), 1.0);
    }

    #[test]
    fn renumbering_keeps_global_order() {
        let a = gen_stencil([5, 4, 1], StencilKind::Pt5).unwrap();
        let part = partition_rows(&a, 3, PartitionStrategy::BlockRows).unwrap();
        for p in build_plans(&a, &part, PlanOptions::new(4)).unwrap() {
            for li in 0..p.n_local() {
                let (cols, vals) = p.matrix.row(li);
                let back: Vec<u32> = cols
                    .iter()
                    .map(|&c| {
                        let c = c as usize;
                        if c < p.n_local() {
                            p.local_rows[c]
                        } else {
                            p.halo_global[c - p.n_local()]
                        }
                    })
                    .collect();
                let (gcols, gvals) = a.row(p.local_rows[li] as usize);
                assert_eq!(back, gcols);
                assert_eq!(vals, gvals);
            }
        }
    }
}

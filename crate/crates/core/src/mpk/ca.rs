use std::ops::Range;

use serde::Serialize;

use crate::bsp::{run_bsp, ExchangeLog, ExchangeSpec, RankExchange, RankProgram};
use crate::error::{MpkError, Result};
use crate::partition::{LocalMatrix, RankPlan};
use crate::scalar::Scalar;
use crate::sparse::CrsMatrix;

use super::trad::transport_for;
use super::{finish_run, Algo, KernelCallback, MpkRun, PowerTable, RankTable, RunOptions};

/// One rank's extended world for the communication-avoiding kernel.
#[derive(Debug, Clone)]
pub struct CaPlan {
    pub rank: usize,
    pub p_m: usize,
    /// Global row of each owned local row (same order as the base plan).
    pub local_rows: Vec<u32>,
    /// Global row held by each extended-halo slot, sorted by (owner, owner-local).
    pub ext_global: Vec<u32>,
    pub ext_src: Vec<(u32, u32)>,
    /// Distance k of each slot from the owned rows (slot is in E_k).
    pub ext_dist: Vec<u32>,
    /// |E_k| for k = 0..p_m-1.
    pub e_sizes: Vec<usize>,
    /// Owned rows followed by one row per extended slot. Slots in
    /// E_{p_m-1} are never computed and get empty rows.
    pub matrix: LocalMatrix,
    pub exchange: RankExchange,
    /// Per power p (index p - 1): runs of local rows of replicated slots
    /// advanced at that power.
    pub ext_runs: Vec<Vec<Range<usize>>>,
}

impl CaPlan {
    pub fn n_local(&self) -> usize {
        self.local_rows.len()
    }

    pub fn n_ext(&self) -> usize {
        self.ext_global.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CaRankOverheads {
    pub rank: usize,
    pub e_sizes: Vec<usize>,
    pub additional_halo: usize,
    pub redundant_row_spmvs: usize,
    pub redundant_nnz: usize,
    pub replicated_row_bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CaOverheads {
    pub p_m: usize,
    pub ranks: Vec<CaRankOverheads>,
    pub additional_halo: usize,
    pub redundant_row_spmvs: usize,
    pub redundant_nnz: usize,
    pub replicated_row_bytes: u64,
    /// additional_halo / N_r
    pub additional_halo_ratio: f64,
    /// redundant_nnz / N_nz
    pub redundant_nnz_ratio: f64,
}

/// External sets of one rank: every non-owned row reached by following
/// columns from the owned rows, tagged with its distance k (E_k), up to
/// `max_k` inclusive. Returned in discovery order per level.
fn external_sets(a: &CrsMatrix, owner: &[u32], rank: usize, owned: &[u32], max_k: usize, seen: &mut [bool]) -> Vec<Vec<u32>> {
    let mut sets: Vec<Vec<u32>> = Vec::with_capacity(max_k + 1);
    let mut frontier: Vec<u32> = Vec::new();
    for &g in owned {
        for &c in a.row(g as usize).0 {
            if owner[c as usize] as usize != rank && !seen[c as usize] {
                seen[c as usize] = true;
                frontier.push(c);
            }
        }
    }
    for k in 0..=max_k {
        if k > 0 {
            let mut next = Vec::new();
            for &g in &sets[k - 1] {
                for &c in a.row(g as usize).0 {
                    if owner[c as usize] as usize != rank && !seen[c as usize] {
                        seen[c as usize] = true;
                        next.push(c);
                    }
                }
            }
            frontier = next;
        }
        sets.push(std::mem::take(&mut frontier));
    }
    for s in &sets {
        for &g in s {
            seen[g as usize] = false;
        }
    }
    sets
}

fn owner_map(plans: &[RankPlan], n_rows: usize) -> Result<(Vec<u32>, Vec<u32>)> {
    let mut owner = vec![u32::MAX; n_rows];
    let mut local = vec![0u32; n_rows];
    for p in plans {
        for (li, &g) in p.local_rows.iter().enumerate() {
            let g = g as usize;
            if g >= n_rows || owner[g] != u32::MAX {
                return Err(MpkError::Setup(format!("row {g} is not owned exactly once")));
            }
            owner[g] = p.rank as u32;
            local[g] = li as u32;
        }
    }
    if owner.contains(&u32::MAX) {
        return Err(MpkError::Setup("plans do not cover every row".into()));
    }
    Ok((owner, local))
}

fn rank_overheads(a: &CrsMatrix, rank: usize, sets: &[Vec<u32>], p_m: usize) -> CaRankOverheads {
    let mut redundant_row_spmvs = 0;
    let mut redundant_nnz = 0;
    let mut replicated_row_bytes = 0u64;
    for (k, s) in sets.iter().enumerate().take(p_m.saturating_sub(1)) {
        let times = p_m - 1 - k;
        let nnz: usize = s.iter().map(|&g| a.row_nnz(g as usize)).sum();
        redundant_row_spmvs += s.len() * times;
        redundant_nnz += nnz * times;
        replicated_row_bytes += 12 * nnz as u64 + 4 * s.len() as u64;
    }
    let e_sizes: Vec<usize> = sets.iter().map(Vec::len).collect();
    CaRankOverheads {
        rank,
        additional_halo: e_sizes.iter().skip(1).sum(),
        e_sizes,
        redundant_row_spmvs,
        redundant_nnz,
        replicated_row_bytes,
    }
}

fn aggregate(a: &CrsMatrix, p_m: usize, ranks: Vec<CaRankOverheads>) -> CaOverheads {
    let additional_halo = ranks.iter().map(|r| r.additional_halo).sum();
    let redundant_nnz = ranks.iter().map(|r| r.redundant_nnz).sum();
    CaOverheads {
        p_m,
        additional_halo,
        redundant_row_spmvs: ranks.iter().map(|r| r.redundant_row_spmvs).sum(),
        redundant_nnz,
        replicated_row_bytes: ranks.iter().map(|r| r.replicated_row_bytes).sum(),
        additional_halo_ratio: ratio(additional_halo, a.n_rows()),
        redundant_nnz_ratio: ratio(redundant_nnz, a.nnz()),
        ranks,
    }
}

fn ratio(a: usize, b: usize) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

/// Extended-halo and recomputation overheads without building or running
/// anything.
pub fn ca_overheads(a: &CrsMatrix, plans: &[RankPlan], p_m: usize) -> Result<CaOverheads> {
    Ok(ca_overheads_range(a, plans, p_m..p_m + 1)?.remove(0))
}

/// [`ca_overheads`] for every `p_m` in `range`, sharing one traversal per rank.
pub fn ca_overheads_range(a: &CrsMatrix, plans: &[RankPlan], range: Range<usize>) -> Result<Vec<CaOverheads>> {
    if range.start == 0 {
        return Err(MpkError::InvalidArgument("p_m must be >= 1".into()));
    }
    let (owner, _) = owner_map(plans, a.n_rows())?;
    let max_k = range.end.saturating_sub(2);
    let mut seen = vec![false; a.n_rows()];
    let sets: Vec<Vec<Vec<u32>>> = plans
        .iter()
        .map(|p| external_sets(a, &owner, p.rank, &p.local_rows, max_k, &mut seen))
        .collect();
    Ok(range
        .map(|p_m| {
            let ranks = plans
                .iter()
                .zip(&sets)
                .map(|(p, s)| rank_overheads(a, p.rank, &s[..p_m], p_m))
                .collect();
            aggregate(a, p_m, ranks)
        })
        .collect())
}

/// Builds the extended plans: owned rows keep the base plan's order and
/// matrix, the external sets E_0..E_{p_m-1} form the extended halo, and the
/// rows of E_0..E_{p_m-2} are replicated from `a`.
pub fn build_ca_plans(a: &CrsMatrix, plans: &[RankPlan], p_m: usize) -> Result<Vec<CaPlan>> {
    if p_m == 0 {
        return Err(MpkError::InvalidArgument("p_m must be >= 1".into()));
    }
    let (owner, owner_local) = owner_map(plans, a.n_rows())?;
    let mut seen = vec![false; a.n_rows()];
    let mut slot_of = vec![u32::MAX; a.n_rows()];
    let mut out: Vec<CaPlan> = Vec::with_capacity(plans.len());
    for plan in plans {
        let rank = plan.rank;
        let n_local = plan.n_local();
        let sets = external_sets(a, &owner, rank, &plan.local_rows, p_m - 1, &mut seen);
        let mut ext: Vec<(u32, u32, u32, u32)> = sets
            .iter()
            .enumerate()
            .flat_map(|(k, s)| s.iter().map(move |&g| (g, k as u32)))
            .map(|(g, k)| (owner[g as usize], owner_local[g as usize], g, k))
            .collect();
        ext.sort_unstable();
        for (s, e) in ext.iter().enumerate() {
            slot_of[e.2 as usize] = (n_local + s) as u32;
        }
        for (li, &g) in plan.local_rows.iter().enumerate() {
            slot_of[g as usize] = li as u32;
        }

        let mut row_ptr = Vec::with_capacity(n_local + ext.len() + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0u32);
        let rows = plan.local_rows.iter().map(|&g| (g, true)).chain(ext.iter().map(|e| (e.2, (e.3 as usize) + 2 <= p_m)));
        for (g, replicate) in rows {
            if replicate {
                let (cols, vals) = a.row(g as usize);
                for (&c, &v) in cols.iter().zip(vals) {
                    let l = slot_of[c as usize];
                    if l == u32::MAX {
                        return Err(MpkError::Setup(format!("rank {rank}: row {g} references column {c} outside the extended halo")));
                    }
                    col_idx.push(l);
                    values.push(v);
                }
            }
            row_ptr.push(col_idx.len() as u32);
        }
        for &g in plan.local_rows.iter().chain(ext.iter().map(|e| &e.2)) {
            slot_of[g as usize] = u32::MAX;
        }

        let ext_dist: Vec<u32> = ext.iter().map(|e| e.3).collect();
        let ext_runs = (1..=p_m)
            .map(|p| {
                let mut runs: Vec<Range<usize>> = Vec::new();
                for (s, &k) in ext_dist.iter().enumerate() {
                    if (k as usize) + p < p_m {
                        let r = n_local + s;
                        match runs.last_mut() {
                            Some(run) if run.end == r => run.end += 1,
                            _ => runs.push(r..r + 1),
                        }
                    }
                }
                runs
            })
            .collect();
        let mut recvs: Vec<(usize, usize, usize)> = Vec::new();
        for (s, e) in ext.iter().enumerate() {
            match recvs.last_mut() {
                Some(r) if r.0 == e.0 as usize => r.2 += 1,
                _ => recvs.push((e.0 as usize, s, 1)),
            }
        }
        out.push(CaPlan {
            rank,
            p_m,
            local_rows: plan.local_rows.clone(),
            ext_src: ext.iter().map(|e| (e.0, e.1)).collect(),
            ext_global: ext.iter().map(|e| e.2).collect(),
            ext_dist,
            e_sizes: sets.iter().map(Vec::len).collect(),
            matrix: LocalMatrix { row_ptr, col_idx, values },
            exchange: RankExchange { sends: Vec::new(), recvs },
            ext_runs,
        });
    }
    // Senders follow the receivers' slot order.
    for r in 0..out.len() {
        let recvs = out[r].exchange.recvs.clone();
        for (src, first, count) in recvs {
            let rows: Vec<u32> = out[r].ext_src[first..first + count].iter().map(|s| s.1).collect();
            out[src].exchange.sends.push((r, rows));
        }
    }
    Ok(out)
}

/// Extended-halo overheads of already built plans.
pub fn ca_plan_overheads(a: &CrsMatrix, plans: &[CaPlan]) -> CaOverheads {
    let p_m = plans.first().map_or(1, |p| p.p_m);
    let ranks = plans
        .iter()
        .map(|p| {
            let mut sets = vec![Vec::new(); p.e_sizes.len()];
            for (&g, &k) in p.ext_global.iter().zip(&p.ext_dist) {
                sets[k as usize].push(g);
            }
            rank_overheads(a, p.rank, &sets, p_m)
        })
        .collect();
    aggregate(a, p_m, ranks)
}

/// Communication-avoiding kernel: one exchange of the extended halo, then
/// power-major local sweeps that also advance the replicated rows.
pub fn ca_mpk<S: Scalar, C: KernelCallback<S>>(
    a: &CrsMatrix,
    plans: &[CaPlan],
    x: &[S],
    cb: &C,
    opts: RunOptions,
) -> Result<MpkRun<S>> {
    let p_m = plans.first().map_or(1, |p| p.p_m);
    if plans.iter().any(|p| p.p_m != p_m) {
        return Err(MpkError::Setup("extended plans built for different p_m".into()));
    }
    for p in plans {
        let missing = (p.n_local()..p.n_local() + p.n_ext()).find(|&r| {
            (p.ext_dist[r - p.n_local()] as usize) + 2 <= p_m && p.matrix.row(r).0.is_empty()
        });
        if let Some(r) = missing {
            if a.row_nnz(p.ext_global[r - p.n_local()] as usize) > 0 {
                return Err(MpkError::Setup(format!("rank {}: replicated row for slot {} is missing", p.rank, r)));
            }
        }
    }
    let extra: Vec<usize> = plans.iter().map(CaPlan::n_ext).collect();
    let mut table = PowerTable::init(plans.iter().map(|p| p.local_rows.clone()).collect(), &extra, x, p_m, opts.checked)?;
    let spec = ExchangeSpec {
        ranks: plans.iter().map(|p| p.exchange.clone()).collect(),
    };
    spec.check_duality()?;
    let programs: Vec<RankProgram<RankTable<S>>> = plans
        .iter()
        .map(|plan| {
            let mut prog = RankProgram::new();
            prog.exchange(&spec, 0);
            prog.compute(move |t: &mut RankTable<S>| {
                for p in 1..=p_m {
                    t.apply(&plan.matrix, cb, p, 0..plan.n_local())?;
                    for run in &plan.ext_runs[p - 1] {
                        t.apply(&plan.matrix, cb, p, run.clone())?;
                    }
                }
                Ok(())
            });
            prog
        })
        .collect();
    let mut transport = transport_for::<S>(plans.len(), &opts);
    let mut log = opts.log_exchanges.then(ExchangeLog::new);
    run_bsp(opts.exec, &mut transport, &programs, &mut table.ranks, log.as_mut())?;
    let mut run = finish_run(Algo::Ca, p_m, table, transport, log);
    run.setup_exchanges = usize::from(p_m >= 2 && plans.iter().any(|p| p.n_ext() > 0));
    run.ca = Some(ca_plan_overheads(a, plans));
    Ok(run)
}

//! Distributed matrix power kernels.
//!
//! All three algorithms share the per-rank [`RankTable`] (one vector slot per
//! power, each slot laid out as `[owned | halo]`), the [`KernelCallback`]
//! row kernel and the bulk-synchronous runtime. They differ only in the order
//! of row updates and halo exchanges:
//!
//! * traditional: `p_m` rounds of exchange + full local sweep;
//! * level-blocked: one exchange, a capped wavefront over the local levels,
//!   then `p_m - 1` rounds of exchange + advancing the boundary sets;
//! * communication-avoiding: one exchange of an extended halo, then local
//!   sweeps that also recompute replicated remote rows.

mod ca;
mod dlb;
mod trad;

pub use ca::{build_ca_plans, ca_mpk, ca_overheads, ca_overheads_range, ca_plan_overheads, CaOverheads, CaPlan, CaRankOverheads};
pub use dlb::{dlb_mpk, dlb_rank_schedule, DlbRankSchedule};
pub use trad::trad_mpk;
pub(crate) use dlb::dlb_execute;
pub(crate) use trad::{new_table, trad_execute};

use std::collections::BTreeSet;
use std::ops::Range;

use serde::Serialize;

use crate::bsp::{Executor, ExchangeLog, HaloState, TraceRecord};
use crate::error::{MpkError, Result};
use crate::partition::{LocalMatrix, RankPlan};
use crate::scalar::Scalar;
use crate::sparse::row_dot;

/// Row-range kernel applied by every algorithm. `input` is the full slot of
/// power `power - 1` (owned rows and halo), `previous` the slot of power
/// `power - 2` when available, and `out` holds exactly the rows `rows` of
/// the output slot (`out[0]` is row `rows.start`).
pub trait KernelCallback<S: Scalar>: Sync {
    fn apply(
        &self,
        m: &LocalMatrix,
        power: usize,
        input: &[S],
        previous: Option<&[S]>,
        out: &mut [S],
        rows: Range<usize>,
    );

    /// Whether `apply` reads row `r` of `previous`.
    fn needs_previous(&self) -> bool {
        false
    }
}

/// Plain SpMV rows.
#[derive(Debug, Clone, Copy, Default)]
pub struct SpmvKernel;

impl<S: Scalar> KernelCallback<S> for SpmvKernel {
    fn apply(&self, m: &LocalMatrix, _power: usize, input: &[S], _previous: Option<&[S]>, out: &mut [S], rows: Range<usize>) {
        for (o, r) in out.iter_mut().zip(rows) {
            let (cols, vals) = m.row(r);
            *o = row_dot(cols, vals, input);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Algo {
    Trad,
    Dlb,
    Ca,
}

impl Algo {
    pub fn name(self) -> &'static str {
        match self {
            Algo::Trad => "trad",
            Algo::Dlb => "dlb",
            Algo::Ca => "ca",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunOptions {
    pub exec: Executor,
    /// Track per-row validity and reject reads of values not produced yet.
    pub checked: bool,
    /// Record the global rows moved by each exchange.
    pub log_exchanges: bool,
    /// Record a (phase, src, dst, bytes) trace.
    pub trace: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            exec: Executor::Sequential,
            checked: false,
            log_exchanges: false,
            trace: false,
        }
    }
}

impl RunOptions {
    pub fn checked() -> Self {
        RunOptions {
            checked: true,
            ..Default::default()
        }
    }
}

/// One rank's power vectors.
#[derive(Debug, Clone)]
pub struct RankTable<S> {
    rank: usize,
    n_local: usize,
    len: usize,
    slots: Vec<Vec<S>>,
    /// Owned rows of the power preceding slot 0, for three-term recurrences.
    before: Option<Vec<S>>,
    valid: Option<Vec<Vec<bool>>>,
    pub owned_updates: usize,
    pub redundant_updates: usize,
}

impl<S: Scalar> RankTable<S> {
    fn new(rank: usize, n_local: usize, n_halo: usize, p_m: usize, x_local: Vec<S>, checked: bool) -> Self {
        let len = n_local + n_halo;
        let mut slots: Vec<Vec<S>> = (0..=p_m).map(|_| vec![S::zero(); len]).collect();
        slots[0][..n_local].copy_from_slice(&x_local);
        let valid = checked.then(|| {
            let mut v = vec![vec![false; len]; p_m + 1];
            v[0][..n_local].fill(true);
            v
        });
        RankTable {
            rank,
            n_local,
            len,
            slots,
            before: None,
            valid,
            owned_updates: 0,
            redundant_updates: 0,
        }
    }

    pub fn n_local(&self) -> usize {
        self.n_local
    }

    pub fn slot(&self, p: usize) -> &[S] {
        &self.slots[p]
    }

    pub fn owned(&self, p: usize) -> &[S] {
        &self.slots[p][..self.n_local]
    }

    pub fn before(&self) -> Option<&[S]> {
        self.before.as_deref()
    }

    pub fn p_m(&self) -> usize {
        self.slots.len() - 1
    }

    /// Highest power written for local row `r`, when validity is tracked.
    pub fn max_valid_power(&self, r: usize) -> Option<usize> {
        let valid = self.valid.as_ref()?;
        (0..valid.len()).rev().find(|&p| valid[p][r])
    }

    /// Applies `cb` to `rows` at `power`, counting updates and, in checked
    /// mode, verifying every input is available first.
    pub fn apply<C: KernelCallback<S> + ?Sized>(&mut self, m: &LocalMatrix, cb: &C, power: usize, rows: Range<usize>) -> Result<()> {
        if rows.is_empty() {
            return Ok(());
        }
        if power == 0 || power >= self.slots.len() || rows.end > self.len || rows.end > m.n_rows() {
            return Err(MpkError::Logic {
                rank: self.rank,
                msg: format!("apply at power {power} on rows {rows:?} is out of bounds"),
            });
        }
        if let Some(valid) = &self.valid {
            let needs_prev = cb.needs_previous() && (power >= 2 || self.before.is_some());
            for r in rows.clone() {
                for &c in m.row(r).0 {
                    if !valid[power - 1][c as usize] {
                        return Err(MpkError::Logic {
                            rank: self.rank,
                            msg: format!("row {r} at power {power} reads column {c} before power {} is available", power - 1),
                        });
                    }
                }
                if needs_prev && power >= 2 && !valid[power - 2][r] {
                    return Err(MpkError::Logic {
                        rank: self.rank,
                        msg: format!("row {r} at power {power} reads its own power {} too early", power - 2),
                    });
                }
            }
        }
        let (lo, hi) = self.slots.split_at_mut(power);
        let input = &lo[power - 1];
        let previous = if power >= 2 { Some(&lo[power - 2][..]) } else { self.before.as_deref() };
        cb.apply(m, power, input, previous, &mut hi[0][rows.clone()], rows.clone());
        if let Some(valid) = &mut self.valid {
            valid[power][rows.clone()].fill(true);
        }
        let owned = rows.end.min(self.n_local).saturating_sub(rows.start);
        self.owned_updates += owned;
        self.redundant_updates += rows.len() - owned;
        Ok(())
    }

    /// Rotates the window so the last power becomes slot 0 and the one before
    /// it becomes the `before` vector. Halo values of the new slot 0 are
    /// invalidated; they must be exchanged again.
    pub fn shift_window(&mut self) {
        let p_m = self.p_m();
        let prev = self.slots[p_m - 1][..self.n_local].to_vec();
        self.slots.swap(0, p_m);
        self.before = Some(prev);
        if let Some(valid) = &mut self.valid {
            for (p, v) in valid.iter_mut().enumerate() {
                v.fill(false);
                if p == 0 {
                    v[..self.n_local].fill(true);
                }
            }
        }
    }

    /// Replaces the owned rows of slot 0 and the `before` vector.
    pub fn reset(&mut self, x_local: &[S], before: Option<&[S]>) {
        self.slots[0][..self.n_local].copy_from_slice(x_local);
        self.before = before.map(<[S]>::to_vec);
        if let Some(valid) = &mut self.valid {
            for (p, v) in valid.iter_mut().enumerate() {
                v.fill(false);
                if p == 0 {
                    v[..self.n_local].fill(true);
                }
            }
        }
    }
}

impl<S: Scalar> HaloState for RankTable<S> {
    type Elem = S;

    fn gather(&self, slot: usize, rows: &[u32], out: &mut Vec<S>) -> Result<()> {
        if let Some(valid) = &self.valid {
            if let Some(&r) = rows.iter().find(|&&r| !valid[slot][r as usize]) {
                return Err(MpkError::Logic {
                    rank: self.rank,
                    msg: format!("halo exchange of power {slot} sends row {r} before it is computed"),
                });
            }
        }
        out.extend(rows.iter().map(|&r| self.slots[slot][r as usize]));
        Ok(())
    }

    fn scatter(&mut self, slot: usize, first: usize, data: &[S]) {
        let at = self.n_local + first;
        self.slots[slot][at..at + data.len()].copy_from_slice(data);
        if let Some(valid) = &mut self.valid {
            valid[slot][at..at + data.len()].fill(true);
        }
    }
}

/// Power vectors of every rank.
#[derive(Debug, Clone)]
pub struct PowerTable<S> {
    pub p_m: usize,
    pub ranks: Vec<RankTable<S>>,
    /// Global row of each owned local row, per rank.
    pub local_rows: Vec<Vec<u32>>,
    pub n_rows: usize,
}

impl<S: Scalar> PowerTable<S> {
    /// Scatters the global vector `x` into slot 0 of every rank. `extra[r]`
    /// is the number of non-owned entries rank `r` keeps after its rows.
    pub(crate) fn init(local_rows: Vec<Vec<u32>>, extra: &[usize], x: &[S], p_m: usize, checked: bool) -> Result<Self> {
        let n_rows: usize = local_rows.iter().map(Vec::len).sum();
        if x.len() != n_rows {
            return Err(MpkError::InvalidArgument(format!("x has {} entries, matrix has {n_rows} rows", x.len())));
        }
        if p_m == 0 {
            return Err(MpkError::InvalidArgument("p_m must be >= 1".into()));
        }
        let ranks = local_rows
            .iter()
            .zip(extra)
            .enumerate()
            .map(|(r, (rows, &e))| {
                let xl: Vec<S> = rows.iter().map(|&g| x[g as usize]).collect();
                RankTable::new(r, rows.len(), e, p_m, xl, checked)
            })
            .collect();
        Ok(PowerTable {
            p_m,
            ranks,
            local_rows,
            n_rows,
        })
    }

    /// Power `p` of every owned row, in global row order.
    pub fn power(&self, p: usize) -> Vec<S> {
        let mut out = vec![S::zero(); self.n_rows];
        for (t, rows) in self.ranks.iter().zip(&self.local_rows) {
            for (v, &g) in t.owned(p).iter().zip(rows) {
                out[g as usize] = *v;
            }
        }
        out
    }

    /// Sum of components of each power, in global order of accumulation.
    pub fn checksums(&self) -> Vec<f64> {
        (0..=self.p_m)
            .map(|p| self.power(p).iter().map(|v| v.component_sum()).sum())
            .collect()
    }

    pub fn shift_window(&mut self) {
        self.ranks.iter_mut().for_each(RankTable::shift_window);
    }
}

/// Halo-exchanges slot `slot` of every rank following the plans.
pub fn halo_exchange<S: Scalar>(plans: &[RankPlan], slot: usize, table: &mut PowerTable<S>) -> Result<crate::bsp::ExchangeStats> {
    use crate::bsp::{run_bsp, ExchangeSpec, LocalTransport, RankProgram};
    let spec = ExchangeSpec::from_plans(plans);
    let programs: Vec<RankProgram<RankTable<S>>> = plans
        .iter()
        .map(|_| {
            let mut p = RankProgram::new();
            p.exchange(&spec, slot);
            p
        })
        .collect();
    let mut transport = LocalTransport::new(plans.len(), S::BYTES);
    run_bsp(Executor::Sequential, &mut transport, &programs, &mut table.ranks, None)?;
    Ok(transport.stats)
}

/// Result of one distributed run with its accounting.
#[derive(Debug, Clone)]
pub struct MpkRun<S> {
    pub algo: Algo,
    pub p_m: usize,
    pub table: PowerTable<S>,
    /// Exchange phases executed (excluding one-time setup).
    pub exchanges: usize,
    pub exchanged_elements: usize,
    pub bytes_sent: usize,
    pub bytes_delivered: usize,
    pub setup_exchanges: usize,
    pub owned_row_updates: usize,
    pub redundant_row_updates: usize,
    /// Per exchange phase: (src rank, dst rank, global row) moved.
    pub exchange_log: Option<Vec<BTreeSet<(usize, usize, u32)>>>,
    pub trace: Option<Vec<TraceRecord>>,
    pub ca: Option<CaOverheads>,
    pub dlb: Option<Vec<DlbRankSchedule>>,
}

impl<S: Scalar> MpkRun<S> {
    pub fn power(&self, p: usize) -> Vec<S> {
        self.table.power(p)
    }

    pub fn audit(&self) -> RedundancyAudit {
        RedundancyAudit {
            owned_row_updates: self.owned_row_updates,
            redundant_row_updates: self.redundant_row_updates,
            total_row_updates: self.owned_row_updates + self.redundant_row_updates,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct RedundancyAudit {
    pub owned_row_updates: usize,
    pub redundant_row_updates: usize,
    pub total_row_updates: usize,
}

/// Callback applications of a finished run.
pub fn redundancy_audit<S: Scalar>(run: &MpkRun<S>) -> RedundancyAudit {
    run.audit()
}

/// Converts a local exchange log (owned local rows) to global rows.
pub(crate) fn globalize_log(log: ExchangeLog, local_rows: &[Vec<u32>]) -> Vec<BTreeSet<(usize, usize, u32)>> {
    log.into_iter()
        .map(|phase| {
            phase
                .into_iter()
                .map(|(src, dst, r)| (src, dst, local_rows[src][r as usize]))
                .collect()
        })
        .collect()
}

pub(crate) fn finish_run<S: Scalar>(
    algo: Algo,
    p_m: usize,
    table: PowerTable<S>,
    transport: crate::bsp::LocalTransport,
    log: Option<ExchangeLog>,
) -> MpkRun<S> {
    let owned: usize = table.ranks.iter().map(|t| t.owned_updates).sum();
    let redundant: usize = table.ranks.iter().map(|t| t.redundant_updates).sum();
    let exchange_log = log.map(|l| globalize_log(l, &table.local_rows));
    MpkRun {
        algo,
        p_m,
        exchanges: transport.stats.exchanges,
        exchanged_elements: transport.stats.elements,
        bytes_sent: transport.stats.bytes_sent,
        bytes_delivered: transport.stats.bytes_delivered,
        setup_exchanges: 0,
        owned_row_updates: owned,
        redundant_row_updates: redundant,
        exchange_log,
        trace: transport.trace,
        table,
        ca: None,
        dlb: None,
    }
}

#[cfg(test)]
mod tests;

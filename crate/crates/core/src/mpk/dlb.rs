use serde::Serialize;

use crate::bsp::{run_bsp, ExchangeLog, ExchangeSpec, LocalTransport, RankProgram};
use crate::error::{MpkError, Result};
use crate::leveling::{form_level_groups, wavefront_schedule, GroupedLevels, Schedule, DEFAULT_SAFETY};
use crate::partition::RankPlan;
use crate::scalar::Scalar;

use super::trad::{new_table, transport_for};
use super::{finish_run, Algo, KernelCallback, MpkRun, PowerTable, RankTable, RunOptions};

/// Local wavefront of one rank: level groups over its reordered rows and the
/// diagonal task order.
#[derive(Debug, Clone, Serialize)]
pub struct DlbRankSchedule {
    pub rank: usize,
    pub level_caps: Vec<usize>,
    pub groups: GroupedLevels,
    pub schedule: Schedule,
    /// Local row range of each group.
    pub group_rows: Vec<(usize, usize)>,
    /// Number of boundary sets I_1.. present on this rank.
    pub n_boundary: usize,
}

impl DlbRankSchedule {
    pub fn group_of_level(&self, j: usize) -> usize {
        self.groups.group_ptr.partition_point(|&l| l <= j) - 1
    }

    /// Groups touched by the row updates of a full run: the wavefront, then
    /// the boundary sets advanced after each later exchange.
    pub fn access_order(&self, p_m: usize) -> Vec<usize> {
        let mut order: Vec<usize> = self.schedule.tasks.iter().map(|t| t.group).collect();
        for p in 1..p_m {
            for k in 1..=(p_m - p).min(self.n_boundary) {
                order.push(self.group_of_level(k - 1));
            }
        }
        order
    }
}

/// Groups the levels of `plan` for cache size `cache_bytes` and builds the
/// capped wavefront.
pub fn dlb_rank_schedule(plan: &RankPlan, p_m: usize, cache_bytes: u64) -> Result<DlbRankSchedule> {
    if cache_bytes == 0 {
        return Err(MpkError::InvalidArgument("cache size must be > 0".into()));
    }
    if !plan.reordered {
        return Err(MpkError::InvalidArgument(
            "level-blocked kernel needs plans built with boundary reordering".into(),
        ));
    }
    let caps = plan.level_caps(p_m);
    let bytes: Vec<u64> = (0..plan.n_levels())
        .map(|j| plan.matrix.bytes(plan.level_range(j)))
        .collect();
    let groups = form_level_groups(&bytes, &caps, cache_bytes, p_m, DEFAULT_SAFETY);
    let schedule = wavefront_schedule(&groups.group_caps, p_m);
    let group_rows = (0..groups.n_groups())
        .map(|g| {
            let l = groups.levels(g);
            (plan.level_ptr[l.start], plan.level_ptr[l.end])
        })
        .collect();
    Ok(DlbRankSchedule {
        rank: plan.rank,
        level_caps: caps,
        groups,
        schedule,
        group_rows,
        n_boundary: plan.n_distance_levels.min(p_m.saturating_sub(1)),
    })
}

/// Level-blocked kernel: exchange slot 0, local capped wavefront, then
/// `p_m - 1` rounds of exchange and advancing the boundary sets.
pub fn dlb_mpk<S: Scalar, C: KernelCallback<S>>(
    plans: &[RankPlan],
    x: &[S],
    p_m: usize,
    cb: &C,
    cache_bytes: u64,
    opts: RunOptions,
) -> Result<MpkRun<S>> {
    let scheds = plans
        .iter()
        .map(|p| dlb_rank_schedule(p, p_m, cache_bytes))
        .collect::<Result<Vec<_>>>()?;
    let mut table = new_table(plans, x, p_m, opts.checked)?;
    let (transport, log) = dlb_execute(plans, &scheds, &mut table, p_m, cb, opts)?;
    let mut run = finish_run(Algo::Dlb, p_m, table, transport, log);
    run.dlb = Some(scheds);
    Ok(run)
}

pub(crate) fn dlb_execute<S: Scalar, C: KernelCallback<S>>(
    plans: &[RankPlan],
    scheds: &[DlbRankSchedule],
    table: &mut PowerTable<S>,
    p_m: usize,
    cb: &C,
    opts: RunOptions,
) -> Result<(LocalTransport, Option<ExchangeLog>)> {
    let spec = ExchangeSpec::from_plans(plans);
    let programs: Vec<RankProgram<RankTable<S>>> = plans
        .iter()
        .zip(scheds)
        .map(|(plan, sched)| {
            let mut prog = RankProgram::new();
            prog.exchange(&spec, 0);
            prog.compute(move |t: &mut RankTable<S>| {
                for task in &sched.schedule.tasks {
                    let (lo, hi) = sched.group_rows[task.group];
                    t.apply(&plan.matrix, cb, task.power, lo..hi)?;
                }
                Ok(())
            });
            for p in 1..p_m {
                prog.exchange(&spec, p);
                prog.compute(move |t: &mut RankTable<S>| {
                    for k in 1..=p_m - p {
                        t.apply(&plan.matrix, cb, k + p, plan.i_range(k))?;
                    }
                    Ok(())
                });
            }
            prog
        })
        .collect();
    let mut transport = transport_for::<S>(plans.len(), &opts);
    let mut log = opts.log_exchanges.then(ExchangeLog::new);
    run_bsp(opts.exec, &mut transport, &programs, &mut table.ranks, log.as_mut())?;
    Ok((transport, log))
}

use crate::bsp::{run_bsp, ExchangeLog, ExchangeSpec, LocalTransport, RankProgram};
use crate::error::Result;
use crate::partition::RankPlan;
use crate::scalar::Scalar;

use super::{finish_run, Algo, KernelCallback, MpkRun, PowerTable, RankTable, RunOptions};

/// `p_m` rounds of halo exchange of slot `p - 1` followed by a full local sweep.
pub fn trad_mpk<S: Scalar, C: KernelCallback<S>>(
    plans: &[RankPlan],
    x: &[S],
    p_m: usize,
    cb: &C,
    opts: RunOptions,
) -> Result<MpkRun<S>> {
    let mut table = new_table(plans, x, p_m, opts.checked)?;
    let (transport, log) = trad_execute(plans, &mut table, p_m, cb, opts)?;
    Ok(finish_run(Algo::Trad, p_m, table, transport, log))
}

pub(crate) fn new_table<S: Scalar>(plans: &[RankPlan], x: &[S], p_m: usize, checked: bool) -> Result<PowerTable<S>> {
    let extra: Vec<usize> = plans.iter().map(RankPlan::n_halo).collect();
    PowerTable::init(plans.iter().map(|p| p.local_rows.clone()).collect(), &extra, x, p_m, checked)
}

pub(crate) fn transport_for<S: Scalar>(n_ranks: usize, opts: &RunOptions) -> LocalTransport {
    let t = LocalTransport::new(n_ranks, S::BYTES);
    if opts.trace {
        t.with_trace()
    } else {
        t
    }
}

/// Runs powers `1..=p_m` on an initialized table.
pub(crate) fn trad_execute<S: Scalar, C: KernelCallback<S>>(
    plans: &[RankPlan],
    table: &mut PowerTable<S>,
    p_m: usize,
    cb: &C,
    opts: RunOptions,
) -> Result<(LocalTransport, Option<ExchangeLog>)> {
    let spec = ExchangeSpec::from_plans(plans);
    let programs: Vec<RankProgram<RankTable<S>>> = plans
        .iter()
        .map(|plan| {
            let mut prog = RankProgram::new();
            for p in 1..=p_m {
                prog.exchange(&spec, p - 1);
                prog.compute(move |t: &mut RankTable<S>| t.apply(&plan.matrix, cb, p, 0..plan.n_local()));
            }
            prog
        })
        .collect();
    let mut transport = transport_for::<S>(plans.len(), &opts);
    let mut log = opts.log_exchanges.then(ExchangeLog::new);
    run_bsp(opts.exec, &mut transport, &programs, &mut table.ranks, log.as_mut())?;
    Ok((transport, log))
}

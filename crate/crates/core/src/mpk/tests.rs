use super::*;
use crate::bsp::Executor;
use crate::partition::{build_plans, partition_rows, PartitionStrategy, PlanOptions};
use crate::sparse::{gen_stencil, CrsMatrix, StencilKind};

fn chain(n: usize) -> CrsMatrix {
    gen_stencil([n, 1, 1], StencilKind::Pt5).unwrap()
}

fn dense_powers(a: &CrsMatrix, x: &[f64], p_m: usize) -> Vec<Vec<f64>> {
    let d = a.to_dense();
    let mut out = vec![x.to_vec()];
    for p in 1..=p_m {
        let prev = &out[p - 1];
        let y = (0..a.n_rows())
            .map(|i| (0..a.n_cols()).map(|j| d[i][j] * prev[j]).sum())
            .collect();
        out.push(y);
    }
    out
}

fn setup(a: &CrsMatrix, n: usize, p_m: usize) -> Vec<RankPlan> {
    let part = partition_rows(a, n, PartitionStrategy::BlockRows).unwrap();
    build_plans(a, &part, PlanOptions::new(p_m)).unwrap()
}

fn int_vec(n: usize) -> Vec<f64> {
    (0..n).map(|i| ((i * 7 + 3) % 5) as f64 - 2.0).collect()
}

#[test]
fn chain_two_ranks_three_powers() {
    let a = chain(20);
    let plans = setup(&a, 2, 3);
    let x = int_vec(20);
    let want = dense_powers(&a, &x, 3);
    let t = trad_mpk(&plans, &x, 3, &SpmvKernel, RunOptions::checked()).unwrap();
    let d = dlb_mpk(&plans, &x, 3, &SpmvKernel, 1 << 20, RunOptions::checked()).unwrap();
    let ca_plans = build_ca_plans(&a, &plans, 3).unwrap();
    let c = ca_mpk(&a, &ca_plans, &x, &SpmvKernel, RunOptions::checked()).unwrap();
    for p in 0..=3 {
        assert_eq!(t.power(p), want[p]);
        assert_eq!(d.power(p), want[p]);
        assert_eq!(c.power(p), want[p]);
    }
    assert_eq!((t.exchanges, d.exchanges, c.exchanges), (3, 3, 1));
    assert_eq!(c.setup_exchanges, 1);
    assert_eq!(d.owned_row_updates, 60);
    assert_eq!(d.redundant_row_updates, 0);
    let ov = c.ca.as_ref().unwrap();
    for r in &ov.ranks {
        assert_eq!(r.e_sizes, vec![1, 1, 1]);
        assert_eq!(r.redundant_row_spmvs, 3);
    }
    assert_eq!(c.redundant_row_updates, 6);
    assert_eq!(c.owned_row_updates, 60);
}

#[test]
fn identity_any_power() {
    let a = CrsMatrix::identity(9);
    let plans = setup(&a, 3, 4);
    let x: Vec<f64> = (0..9).map(f64::from).collect();
    let d = dlb_mpk(&plans, &x, 4, &SpmvKernel, 1024, RunOptions::checked()).unwrap();
    for p in 0..=4 {
        assert_eq!(d.power(p), x);
    }
}

#[test]
fn single_rank_dlb_is_plain_powers() {
    let a = gen_stencil([5, 4, 1], StencilKind::Pt5).unwrap();
    let plans = setup(&a, 1, 5);
    let x = int_vec(20);
    let d = dlb_mpk(&plans, &x, 5, &SpmvKernel, 200, RunOptions::checked()).unwrap();
    let want = dense_powers(&a, &x, 5);
    for p in 0..=5 {
        assert_eq!(d.power(p), want[p]);
    }
    assert_eq!(d.exchanges, 5);
    assert_eq!(d.exchanged_elements, 0);
}

#[test]
fn same_halos_as_trad() {
    let a = gen_stencil([6, 5, 1], StencilKind::Pt5).unwrap();
    let plans = setup(&a, 3, 4);
    let x = int_vec(30);
    let opts = RunOptions {
        log_exchanges: true,
        ..RunOptions::checked()
    };
    let t = trad_mpk(&plans, &x, 4, &SpmvKernel, opts).unwrap();
    let d = dlb_mpk(&plans, &x, 4, &SpmvKernel, 512, opts).unwrap();
    assert_eq!(t.exchange_log, d.exchange_log);
    assert_eq!(t.exchanged_elements, d.exchanged_elements);
}

#[test]
fn threaded_matches_sequential() {
    let a = gen_stencil([7, 6, 1], StencilKind::Pt5).unwrap();
    let plans = setup(&a, 4, 3);
    let x: Vec<f64> = (0..42).map(|i| (i as f64).sin()).collect();
    let seq = dlb_mpk(&plans, &x, 3, &SpmvKernel, 300, RunOptions::default()).unwrap();
    let thr = dlb_mpk(
        &plans,
        &x,
        3,
        &SpmvKernel,
        300,
        RunOptions {
            exec: Executor::Threaded { workers: 3 },
            ..Default::default()
        },
    )
    .unwrap();
    for p in 0..=3 {
        assert_eq!(seq.power(p), thr.power(p));
    }
}

#[test]
fn all_rows_reach_p_m() {
    let a = gen_stencil([5, 5, 1], StencilKind::Pt5).unwrap();
    let plans = setup(&a, 2, 4);
    let d = dlb_mpk(&plans, &int_vec(25), 4, &SpmvKernel, 64, RunOptions::checked()).unwrap();
    for t in &d.table.ranks {
        for r in 0..t.n_local() {
            assert_eq!(t.max_valid_power(r), Some(4));
        }
    }
}

#[test]
fn dlb_rejects_zero_cache_and_unordered_plans() {
    let a = chain(8);
    let plans = setup(&a, 2, 2);
    assert!(dlb_mpk(&plans, &int_vec(8), 2, &SpmvKernel, 0, RunOptions::default()).is_err());
    let part = partition_rows(&a, 2, PartitionStrategy::BlockRows).unwrap();
    let plain = build_plans(&a, &part, PlanOptions { p_m: 2, reorder: false }).unwrap();
    assert!(dlb_mpk(&plain, &int_vec(8), 2, &SpmvKernel, 64, RunOptions::default()).is_err());
    assert!(trad_mpk(&plain, &int_vec(8), 2, &SpmvKernel, RunOptions::checked()).is_ok());
}

/// Reads the next power's input before it exists.
struct Premature;

impl KernelCallback<f64> for Premature {
    fn apply(&self, m: &LocalMatrix, _p: usize, input: &[f64], _prev: Option<&[f64]>, out: &mut [f64], rows: Range<usize>) {
        SpmvKernel.apply(m, 0, input, None, out, rows);
    }
}

#[test]
fn checked_mode_rejects_missing_halo() {
    let a = chain(10);
    let plans = setup(&a, 2, 2);
    let mut table = trad::new_table(&plans, &int_vec(10), 2, true).unwrap();
    // Power 1 on boundary rows without the exchange must fail.
    let err = table.ranks[0].apply(&plans[0].matrix, &Premature, 1, 0..plans[0].n_local());
    assert!(matches!(err, Err(MpkError::Logic { rank: 0, .. })));
}

#[test]
fn ca_overheads_match_counters_and_vanish_for_one_power() {
    let a = gen_stencil([6, 6, 1], StencilKind::Pt5).unwrap();
    let plans = setup(&a, 3, 4);
    let ov = ca_overheads(&a, &plans, 4).unwrap();
    let ca = build_ca_plans(&a, &plans, 4).unwrap();
    assert_eq!(ov, ca_plan_overheads(&a, &ca));
    let run = ca_mpk(&a, &ca, &int_vec(36), &SpmvKernel, RunOptions::checked()).unwrap();
    assert_eq!(run.redundant_row_updates, ov.redundant_row_spmvs);
    let one = ca_overheads(&a, &plans, 1).unwrap();
    assert_eq!((one.additional_halo, one.redundant_row_spmvs, one.redundant_nnz), (0, 0, 0));
    let single = ca_overheads(&a, &setup(&a, 1, 4), 4).unwrap();
    assert_eq!(single.additional_halo + single.redundant_row_spmvs, 0);
}

#[test]
fn window_shift_keeps_last_two_powers() {
    let a = chain(6);
    let plans = setup(&a, 2, 2);
    let x = int_vec(6);
    let mut run = trad_mpk(&plans, &x, 2, &SpmvKernel, RunOptions::default()).unwrap();
    let p1 = run.power(1);
    let p2 = run.power(2);
    run.table.shift_window();
    assert_eq!(run.table.power(0), p2);
    let mut before = vec![0.0; 6];
    for (t, rows) in run.table.ranks.iter().zip(&run.table.local_rows) {
        for (v, &g) in t.before().unwrap().iter().zip(rows) {
            before[g as usize] = *v;
        }
    }
    assert_eq!(before, p1);
}

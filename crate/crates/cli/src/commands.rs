use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use mpkforge::bsp::Executor;
use mpkforge::chebyshev::{
    propagate, spectral_bounds, wave_packet, write_density, write_series_csv, Backend, PropagationParams,
    WavePacketParams,
};
use mpkforge::leveling::DEFAULT_SAFETY;
use mpkforge::mpk::{
    build_ca_plans, ca_mpk, ca_overheads, dlb_mpk, dlb_rank_schedule, trad_mpk, MpkRun, RunOptions, SpmvKernel,
};
use mpkforge::partition::{
    build_plans, dlb_overheads, partition_rows, read_partition_vector, Partition, PartitionStrategy, PlanOptions,
    RankPlan,
};
use mpkforge::perf::{flop_count, lru_traffic, roofline_gflops, trad_order, TrafficReport};
use mpkforge::sparse::{
    anderson_disorder, gen_anderson, gen_irregular, gen_stencil, matrix_stats, read_disorder, read_matrix_market,
    spmv, write_disorder, write_matrix_market, AndersonParams, StencilKind,
};
use mpkforge::CrsMatrix;
use serde::Serialize;
use serde_json::json;

use crate::parse::XSpec;
use crate::report::{emit_json, emit_text, usage, with_manifest, CliError, CliResult, RunManifest};
use crate::{
    AlgoArg, AnalyzeArgs, BenchArgs, ChebArgs, DistArgs, GenArgs, GenKind, MetricArg, PartitionArgs, RooflineArgs,
    RunArgs, StatsArgs, StrategyArg, SweepArgs, TrafficAlgo, TrafficArgs, VerifyArg,
};

/// Largest matrix checked against dense powers.
const DENSE_ORACLE_MAX_ROWS: usize = 4096;

fn load_matrix(path: &Path, manifest: &mut RunManifest) -> CliResult<CrsMatrix> {
    if !path.exists() {
        return Err(CliError::Io(format!("{}: no such file", path.display())));
    }
    manifest.hash_input(path)?;
    Ok(read_matrix_market(path)?)
}

fn load_partition(a: &CrsMatrix, d: &DistArgs, manifest: &mut RunManifest) -> CliResult<Partition> {
    if d.ranks == 0 {
        return usage("-n must be >= 1");
    }
    match (&d.partfile, d.strategy) {
        (Some(p), _) => {
            manifest.hash_input(p)?;
            Ok(read_partition_vector(p, a.n_rows(), d.ranks)?)
        }
        (None, StrategyArg::File) => usage("--strategy file needs --partfile"),
        (_, StrategyArg::Nnz) => Ok(partition_rows(a, d.ranks, PartitionStrategy::BalancedNnz)?),
        _ => Ok(partition_rows(a, d.ranks, PartitionStrategy::BlockRows)?),
    }
}

fn run_options() -> RunOptions {
    RunOptions {
        exec: Executor::from_env(),
        ..Default::default()
    }
}

pub fn gen(a: &GenArgs) -> CliResult<()> {
    let mut manifest = RunManifest::new("gen", a, Some(a.seed));
    let (matrix, disorder) = match a.kind {
        GenKind::Stencil5 => (gen_stencil(a.dims, StencilKind::Pt5)?, None),
        GenKind::Stencil7 => (gen_stencil(a.dims, StencilKind::Pt7)?, None),
        GenKind::Irregular => (gen_irregular(a.dims, a.extra, a.seed)?, None),
        GenKind::Anderson => {
            let h = gen_anderson(&AndersonParams {
                dims: a.dims,
                w: a.w,
                t: a.t,
                t_perp: a.tperp,
                seed: a.seed,
            })?;
            (h.matrix, Some(h.disorder))
        }
    };
    if manifest.seed.is_some() && matches!(a.kind, GenKind::Stencil5 | GenKind::Stencil7) {
        manifest.seed = None;
    }
    write_matrix_market(&matrix, &a.output)?;
    if let Some(path) = &a.disorder_out {
        match &disorder {
            Some(d) => write_disorder(d, path)?,
            None => return usage("--disorder-out only applies to --kind anderson"),
        }
    }
    emit_json(&with_manifest(&manifest, json!({ "stats": matrix_stats(&matrix) })), None)
}

pub fn stats(a: &StatsArgs) -> CliResult<()> {
    let mut manifest = RunManifest::new("stats", a, None);
    let m = load_matrix(&a.matrix, &mut manifest)?;
    let s = matrix_stats(&m);
    if a.json {
        emit_json(&with_manifest(&manifest, json!({ "stats": s, "symmetric": m.is_symmetric() })), None)
    } else {
        emit_text(
            &format!(
                "N_r        {}\nN_nz       {}\nN_nzr      {:.4}\ncrs_bytes  {}\ncrs_MiB    {:.2}\n",
                s.n_rows, s.n_nz, s.nnzr, s.crs_bytes, s.crs_mib
            ),
            None,
        )
    }
}

pub fn partition(a: &PartitionArgs) -> CliResult<()> {
    let mut manifest = RunManifest::new("partition", a, None);
    let m = load_matrix(&a.matrix, &mut manifest)?;
    let dist = DistArgs {
        matrix: a.matrix.clone(),
        ranks: a.ranks,
        partfile: a.partfile.clone(),
        strategy: a.strategy,
    };
    let part = load_partition(&m, &dist, &mut manifest)?;
    let mut text = String::with_capacity(m.n_rows() * 3);
    for r in part.rank_of_row() {
        text.push_str(&r.to_string());
        text.push('\n');
    }
    emit_text(&text, Some(&a.output))?;
    let ranks: Vec<serde_json::Value> = (0..part.n_ranks())
        .map(|k| {
            let rows = part.rows(k);
            let nnz: usize = rows.iter().map(|&g| m.row_nnz(g as usize)).sum();
            json!({ "rank": k, "rows": rows.len(), "nnz": nnz })
        })
        .collect();
    emit_json(&with_manifest(&manifest, json!({ "ranks": ranks })), None)
}

pub fn analyze(a: &AnalyzeArgs) -> CliResult<()> {
    let mut manifest = RunManifest::new("analyze", a, None);
    let m = load_matrix(&a.dist.matrix, &mut manifest)?;
    let part = load_partition(&m, &a.dist, &mut manifest)?;
    let plans = build_plans(&m, &part, PlanOptions::new(a.p_m))?;
    let ov = dlb_overheads(&plans, a.p_m);
    let ca = ca_overheads(&m, &plans, a.p_m)?;
    let levels: Vec<Vec<usize>> = plans
        .iter()
        .map(|p| (0..p.n_levels()).map(|j| p.level_range(j).len()).collect())
        .collect();
    let groups = match a.cache {
        Some(c) => Some(
            plans
                .iter()
                .map(|p| {
                    let s = dlb_rank_schedule(p, a.p_m, c)?;
                    Ok(json!({
                        "rank": p.rank,
                        "group_ptr": s.groups.group_ptr,
                        "group_bytes": s.groups.group_bytes,
                        "window_fits": s.groups.window_fits,
                        "tasks": s.schedule.len(),
                    }))
                })
                .collect::<CliResult<Vec<_>>>()?,
        ),
        None => None,
    };
    let body = json!({
        "n_rows": m.n_rows(),
        "n_nz": m.nnz(),
        "n_ranks": plans.len(),
        "p_m": a.p_m,
        "o_mpi": ov.o_mpi,
        "o_dlb": ov.o_dlb,
        "o_dlb_global": ov.o_dlb_global,
        "n_halo": ov.n_halo,
        "m_size": ov.m_size,
        "ranks": plans.iter().map(RankPlan::summary).collect::<Vec<_>>(),
        "level_histogram": levels,
        "ca": ca,
        "groups": groups,
        "cache_bytes": a.cache,
        "safety": DEFAULT_SAFETY,
    });
    emit_json(&with_manifest(&manifest, body), None)
}

fn make_x(spec: &XSpec, n: usize, manifest: &mut RunManifest) -> CliResult<Vec<f64>> {
    match spec {
        XSpec::Ones => Ok(vec![1.0; n]),
        XSpec::Rand(seed) => {
            manifest.seed = Some(*seed);
            Ok(anderson_disorder(n, *seed))
        }
        XSpec::File(p) => {
            manifest.hash_input(p)?;
            let x = read_disorder(p)?;
            if x.len() != n {
                return usage(format!("{} has {} values, matrix has {n} rows", p.display(), x.len()));
            }
            Ok(x)
        }
    }
}

struct Setup {
    matrix: CrsMatrix,
    plans: Vec<RankPlan>,
    x: Vec<f64>,
}

fn setup_run(a: &RunArgs, manifest: &mut RunManifest) -> CliResult<Setup> {
    if a.p_m == 0 {
        return usage("-p must be >= 1");
    }
    let matrix = load_matrix(&a.dist.matrix, manifest)?;
    let part = load_partition(&matrix, &a.dist, manifest)?;
    let plans = build_plans(&matrix, &part, PlanOptions::new(a.p_m))?;
    let x = make_x(&a.x.0, matrix.n_rows(), manifest)?;
    Ok(Setup { matrix, plans, x })
}

fn execute(s: &Setup, algo: AlgoArg, p_m: usize, cache: u64, opts: RunOptions) -> CliResult<MpkRun<f64>> {
    Ok(match algo {
        AlgoArg::Trad => trad_mpk(&s.plans, &s.x, p_m, &SpmvKernel, opts)?,
        AlgoArg::Dlb => dlb_mpk(&s.plans, &s.x, p_m, &SpmvKernel, cache, opts)?,
        AlgoArg::Ca => {
            let ca = build_ca_plans(&s.matrix, &s.plans, p_m)?;
            ca_mpk(&s.matrix, &ca, &s.x, &SpmvKernel, opts)?
        }
    })
}

#[derive(Serialize)]
struct VerifyReport {
    mode: VerifyArg,
    passed: bool,
    checks: Vec<String>,
    /// Largest |y - dense| / max|dense| over all powers, when dense was checked.
    max_rel_error_dense: Option<f64>,
}

fn algo_name(a: AlgoArg) -> &'static str {
    match a {
        AlgoArg::Trad => "trad",
        AlgoArg::Dlb => "dlb",
        AlgoArg::Ca => "ca",
    }
}

fn verify(s: &Setup, run: &MpkRun<f64>, a: &RunArgs, mode: VerifyArg) -> CliResult<VerifyReport> {
    let mut rep = VerifyReport {
        mode,
        passed: true,
        checks: Vec::new(),
        max_rel_error_dense: None,
    };
    if mode == VerifyArg::None {
        return Ok(rep);
    }
    let mine: Vec<Vec<f64>> = (0..=a.p_m).map(|p| run.power(p)).collect();
    for other in [AlgoArg::Trad, AlgoArg::Dlb, AlgoArg::Ca] {
        if other == a.algo {
            continue;
        }
        let o = execute(s, other, a.p_m, a.cache, run_options())?;
        let same = (0..=a.p_m).all(|p| bits(&o.power(p)) == bits(&mine[p]));
        rep.passed &= same;
        rep.checks.push(format!("{} == {}: {}", algo_name(a.algo), algo_name(other), same));
    }
    if mode == VerifyArg::Oracle {
        let n = s.matrix.n_rows();
        let mut y = s.x.clone();
        let mut next = vec![0.0; n];
        let mut same = true;
        for row in mine.iter().skip(1) {
            spmv(&s.matrix, &y, &mut next)?;
            same &= bits(&next) == bits(row);
            std::mem::swap(&mut y, &mut next);
        }
        rep.passed &= same;
        rep.checks.push(format!("{} == sequential spmv: {same}", algo_name(a.algo)));
        if n <= DENSE_ORACLE_MAX_ROWS {
            let err = dense_error(&s.matrix, &s.x, &mine);
            let ok = err <= 1e-12;
            rep.passed &= ok;
            rep.max_rel_error_dense = Some(err);
            rep.checks.push(format!("dense powers within 1e-12: {ok}"));
        }
    }
    Ok(rep)
}

fn bits(v: &[f64]) -> Vec<u64> {
    v.iter().map(|x| x.to_bits()).collect()
}

fn dense_error(a: &CrsMatrix, x: &[f64], powers: &[Vec<f64>]) -> f64 {
    let d = a.to_dense();
    let mut cur = x.to_vec();
    let mut worst: f64 = 0.0;
    for got in powers.iter().skip(1) {
        cur = d.iter().map(|row| row.iter().zip(&cur).map(|(a, b)| a * b).sum()).collect();
        let scale = cur.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let diff = cur.iter().zip(got).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        worst = worst.max(if scale == 0.0 { diff } else { diff / scale });
    }
    worst
}

fn run_body(s: &Setup, run: &MpkRun<f64>, a: &RunArgs) -> serde_json::Value {
    let ov = dlb_overheads(&s.plans, a.p_m);
    json!({
        "algo": algo_name(a.algo),
        "n_ranks": s.plans.len(),
        "p_m": a.p_m,
        "C": (a.algo == AlgoArg::Dlb).then_some(a.cache),
        "exchanges": run.exchanges,
        "setup_exchanges": run.setup_exchanges,
        "exchanged_doubles": run.exchanged_elements,
        "owned_row_updates": run.owned_row_updates,
        "redundant_row_updates": run.redundant_row_updates,
        "o_mpi": ov.o_mpi,
        "o_dlb": ov.o_dlb_global,
        "o_dlb_per_rank": ov.o_dlb,
        "checksum_per_power": run.table.checksums(),
        "flops": flop_count(s.matrix.nnz() as u64, a.p_m),
        "n_rows": s.matrix.n_rows(),
        "ca": run.ca,
    })
}

pub fn run(a: &RunArgs) -> CliResult<()> {
    let mut manifest = RunManifest::new("run", a, None);
    let s = setup_run(a, &mut manifest)?;
    let t0 = Instant::now();
    let r = execute(&s, a.algo, a.p_m, a.cache, run_options())?;
    let seconds = t0.elapsed().as_secs_f64();
    let mode = a.verify.unwrap_or(if s.matrix.n_rows() <= DENSE_ORACLE_MAX_ROWS {
        VerifyArg::Oracle
    } else {
        VerifyArg::None
    });
    let v = verify(&s, &r, a, mode)?;
    let passed = v.passed;
    let mut body = run_body(&s, &r, a);
    body["verify"] = serde_json::to_value(&v).expect("json");
    body["timing"] = json!({ "seconds": seconds });
    emit_json(&with_manifest(&manifest, body), a.output.as_deref())?;
    if passed {
        Ok(())
    } else {
        Err(CliError::Verify(v.checks.join("; ")))
    }
}

fn median(samples: &[f64]) -> f64 {
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        (s[n / 2 - 1] + s[n / 2]) / 2.0
    }
}

fn time_runs(s: &Setup, algo: AlgoArg, p_m: usize, cache: u64, reps: usize) -> CliResult<(MpkRun<f64>, Vec<f64>)> {
    let mut samples = Vec::with_capacity(reps);
    let mut last = None;
    for _ in 0..reps.max(1) {
        let t0 = Instant::now();
        let r = execute(s, algo, p_m, cache, run_options())?;
        samples.push(t0.elapsed().as_secs_f64());
        last = Some(r);
    }
    Ok((last.expect("at least one rep"), samples))
}

pub fn bench(a: &BenchArgs) -> CliResult<()> {
    if a.reps == 0 {
        return usage("--reps must be >= 1");
    }
    let mut manifest = RunManifest::new("bench", a, None);
    let s = setup_run(&a.run, &mut manifest)?;
    let (r, samples) = time_runs(&s, a.run.algo, a.run.p_m, a.run.cache, a.reps)?;
    let med = median(&samples);
    let flops = flop_count(s.matrix.nnz() as u64, a.run.p_m);
    let mut body = run_body(&s, &r, &a.run);
    body["reps"] = json!(a.reps);
    body["timing"] = json!({
        "samples_s": samples,
        "median_s": med,
        "gflops_median": flops as f64 / med / 1e9,
    });
    emit_json(&with_manifest(&manifest, body), a.run.output.as_deref())
}

/// Per-rank LRU replay of the traditional sweep and the level-blocked order.
fn rank_traffic(plan: &RankPlan, p_m: usize, cache: u64) -> CliResult<(TrafficReport, TrafficReport)> {
    let s = dlb_rank_schedule(plan, p_m, cache)?;
    let bytes = &s.groups.group_bytes;
    let trad = lru_traffic("trad", &trad_order(bytes.len(), p_m), bytes, cache, p_m)?;
    let dlb = lru_traffic("dlb", &s.access_order(p_m), bytes, cache, p_m)?;
    Ok((trad, dlb))
}

#[derive(Serialize)]
struct TrafficTotals {
    matrix_bytes: u64,
    trad_miss_bytes: u64,
    dlb_miss_bytes: u64,
    miss_bytes: u64,
    blocking_factor: f64,
}

fn traffic_totals(plans: &[RankPlan], p_m: usize, cache: u64, algo: TrafficAlgo) -> CliResult<(Vec<TrafficReport>, TrafficTotals)> {
    let mut ranks = Vec::new();
    let (mut matrix, mut t_miss, mut d_miss) = (0, 0, 0);
    for p in plans {
        let (t, d) = rank_traffic(p, p_m, cache)?;
        matrix += t.matrix_bytes;
        t_miss += t.miss_bytes;
        d_miss += d.miss_bytes;
        ranks.push(if algo == TrafficAlgo::Trad { t } else { d });
    }
    let miss = if algo == TrafficAlgo::Trad { t_miss } else { d_miss };
    Ok((
        ranks,
        TrafficTotals {
            matrix_bytes: matrix,
            trad_miss_bytes: t_miss,
            dlb_miss_bytes: d_miss,
            miss_bytes: miss,
            blocking_factor: if miss == 0 { 0.0 } else { p_m as f64 * matrix as f64 / miss as f64 },
        },
    ))
}

pub fn traffic(a: &TrafficArgs) -> CliResult<()> {
    if a.p_m == 0 {
        return usage("-p must be >= 1");
    }
    let mut manifest = RunManifest::new("traffic", a, None);
    let m = load_matrix(&a.dist.matrix, &mut manifest)?;
    let part = load_partition(&m, &a.dist, &mut manifest)?;
    let plans = build_plans(&m, &part, PlanOptions::new(a.p_m))?;
    let (ranks, total) = traffic_totals(&plans, a.p_m, a.cache, a.algo)?;
    let body = json!({
        "algo": a.algo,
        "cache_bytes": a.cache,
        "p_m": a.p_m,
        "policy": "lru",
        "ranks": ranks,
        "total": total,
    });
    emit_json(&with_manifest(&manifest, body), a.output.as_deref())
}

pub fn sweep(a: &SweepArgs) -> CliResult<()> {
    let mut manifest = RunManifest::new("sweep", a, None);
    let matrix = load_matrix(&a.dist.matrix, &mut manifest)?;
    let part = load_partition(&matrix, &a.dist, &mut manifest)?;
    let x = make_x(&a.x.0, matrix.n_rows(), &mut manifest)?;
    if a.p_m.0.contains(&0) {
        return usage("powers must be >= 1");
    }
    let mut csv = String::new();
    match a.metric {
        MetricArg::Traffic => csv.push_str("p_m,cache_bytes,matrix_bytes,trad_miss_bytes,dlb_miss_bytes,traffic_ratio\n"),
        MetricArg::Gflops => csv.push_str("p_m,cache_bytes,algo,median_s,gflops\n"),
    }
    let mut s = Setup {
        matrix,
        plans: Vec::new(),
        x,
    };
    for &p in &a.p_m.0 {
        s.plans = build_plans(&s.matrix, &part, PlanOptions::new(p))?;
        for &c in &a.cache.0 {
            match a.metric {
                MetricArg::Traffic => {
                    let (_, t) = traffic_totals(&s.plans, p, c, TrafficAlgo::Dlb)?;
                    let ratio = t.trad_miss_bytes as f64 / t.dlb_miss_bytes.max(1) as f64;
                    csv.push_str(&format!(
                        "{p},{c},{},{},{},{ratio:?}\n",
                        t.matrix_bytes, t.trad_miss_bytes, t.dlb_miss_bytes
                    ));
                }
                MetricArg::Gflops => {
                    let (_, samples) = time_runs(&s, a.algo, p, c, a.reps)?;
                    let med = median(&samples);
                    let gf = flop_count(s.matrix.nnz() as u64, p) as f64 / med / 1e9;
                    csv.push_str(&format!("{p},{c},{},{med:?},{gf:?}\n", algo_name(a.algo)));
                }
            }
        }
    }
    emit_text(&csv, Some(&a.output))?;
    let mut manifest_path = a.output.clone().into_os_string();
    manifest_path.push(".json");
    emit_json(&with_manifest(&manifest, json!({ "csv": a.output })), Some(&PathBuf::from(manifest_path)))
}

pub fn roofline(a: &RooflineArgs) -> CliResult<()> {
    let mut manifest = RunManifest::new("roofline", a, None);
    let (nnzr, stats) = match (&a.matrix, a.nnzr) {
        (Some(p), _) => {
            let m = load_matrix(p, &mut manifest)?;
            let s = matrix_stats(&m);
            (s.nnzr, Some(s))
        }
        (None, Some(n)) => (n, None),
        (None, None) => return usage("roofline needs --nnzr or -m"),
    };
    let gflops = roofline_gflops(a.bs, nnzr)?;
    let body = json!({
        "b_s": a.bs,
        "nnzr": nnzr,
        "gflops": gflops,
        "bytes_per_flop": 6.0 + 14.0 / nnzr,
        "stats": stats,
    });
    emit_json(&with_manifest(&manifest, body), None)
}

pub fn cheb(a: &ChebArgs) -> CliResult<()> {
    let manifest = RunManifest::new("cheb", a, Some(a.seed));
    let h = gen_anderson(&AndersonParams {
        dims: a.dims,
        w: a.w,
        t: a.t,
        t_perp: a.tperp,
        seed: a.seed,
    })?
    .matrix;
    let (scale_a, shift_b) = spectral_bounds(&h);
    let center = [a.dims[0] / 2, a.dims[1] / 2, a.dims[2] / 2];
    let psi0 = wave_packet(
        a.dims,
        &WavePacketParams {
            sigma: a.sigma,
            k0: a.k0,
            center,
        },
    )?;
    let params = PropagationParams {
        order: a.order,
        dt: a.dt,
        n_steps: a.steps,
        scale_a,
        shift_b,
        backend: match a.backend {
            TrafficAlgo::Trad => Backend::Trad,
            TrafficAlgo::Dlb => Backend::Dlb,
        },
        p_m: a.p_m,
        cache_bytes: a.cache,
        n_ranks: a.ranks,
        stride: a.stride,
    };
    let with_suffix = |suffix: &str| {
        let mut s = a.prefix.clone().into_os_string();
        s.push(suffix);
        PathBuf::from(s)
    };
    let mut density = match a.density_stride {
        Some(0) => return usage("--density-stride must be >= 1"),
        Some(k) => {
            let path = with_suffix(".density.bin");
            let f = File::create(&path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
            Some((k, BufWriter::new(f)))
        }
        None => None,
    };
    let t0 = Instant::now();
    let out = propagate(&h, &psi0, &params, a.dims, center, run_options(), |step, psi| {
        if let Some((k, w)) = density.as_mut() {
            if step % *k == 0 {
                write_density(psi, w)?;
            }
        }
        Ok(())
    })?;
    let seconds = t0.elapsed().as_secs_f64();
    if let Some((_, mut w)) = density {
        w.flush()?;
    }
    let mut csv = Vec::new();
    write_series_csv(&out.series, &mut csv)?;
    let csv_path = with_suffix(".csv");
    std::fs::write(&csv_path, csv).map_err(|e| CliError::Io(format!("{}: {e}", csv_path.display())))?;
    let drift = out.series.iter().fold(0.0f64, |m, r| m.max((r.norm - 1.0).abs()));
    let body = json!({
        "dims": a.dims,
        "n_sites": h.n_rows(),
        "scale_a": scale_a,
        "shift_b": shift_b,
        "center": center,
        "final_norm": out.series.last().map(|r| r.norm),
        "max_norm_drift": drift,
        "final_center_of_mass": out.series.last().map(|r| r.center_of_mass),
        "exchanges": out.exchanges,
        "exchanged_elements": out.exchanged_elements,
        "owned_row_updates": out.owned_row_updates,
        "kernel_invocations": out.kernel_invocations,
        "series_csv": csv_path,
        "timing": { "seconds": seconds },
    });
    emit_json(&with_manifest(&manifest, body), Some(&with_suffix(".json")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn median_of_odd_and_even() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 3.0, 2.0]), 2.5);
    }

    #[test]
    fn dense_error_detects_a_wrong_power() {
        let a = CrsMatrix::from_triplets(2, 2, vec![(0, 0, 2.0), (0, 1, 1.0), (1, 1, 3.0)]).unwrap();
        let x = vec![1.0, 1.0];
        let good = vec![x.clone(), vec![3.0, 3.0], vec![9.0, 9.0]];
        assert_eq!(dense_error(&a, &x, &good), 0.0);
        let bad = vec![x.clone(), vec![3.0, 3.0], vec![9.0, 8.1]];
        assert!((dense_error(&a, &x, &bad) - 0.1).abs() < 1e-12);
    }
}

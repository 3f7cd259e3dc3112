//! Chebyshev time propagation `psi(t + dt) = sum_k c_k T_k(H~) psi(t)` with
//! `H~ = (H - b) / a`, driving the distributed kernels through a fused
//! three-term recurrence callback.

use std::io::Write;
use std::ops::Range;

use num_complex::Complex64;
use serde::Serialize;

use crate::bsp::ExchangeStats;
use crate::error::{invalid, Result};
use crate::mpk::{dlb_execute, dlb_rank_schedule, new_table, trad_execute, KernelCallback, RunOptions};
use crate::partition::{build_plans, partition_rows, LocalMatrix, PartitionStrategy, PlanOptions};
use crate::sparse::{row_dot, CrsMatrix};

/// `J_0(x) ..= J_n(x)` by normalized downward recurrence.
pub fn bessel_j(n: usize, x: f64) -> Vec<f64> {
    let mut out = vec![0.0; n + 1];
    if x == 0.0 {
        out[0] = 1.0;
        return out;
    }
    let ax = x.abs();
    let top = n.max(ax.ceil() as usize);
    let mut m = top + 30 + (40.0 * top as f64).sqrt() as usize;
    m += m % 2;
    let (mut jp1, mut j) = (0.0f64, 1e-300f64);
    let mut norm = 0.0;
    for k in (0..=m).rev() {
        if k <= n {
            out[k] = j;
        }
        if k % 2 == 0 {
            norm += if k == 0 { j } else { 2.0 * j };
        }
        if k == 0 {
            break;
        }
        let jm1 = 2.0 * k as f64 / ax * j - jp1;
        jp1 = j;
        j = jm1;
        if j.abs() > 1e250 {
            j *= 1e-250;
            jp1 *= 1e-250;
            norm *= 1e-250;
            out.iter_mut().for_each(|v| *v *= 1e-250);
        }
    }
    for (k, v) in out.iter_mut().enumerate() {
        *v /= norm;
        if x < 0.0 && k % 2 == 1 {
            *v = -*v;
        }
    }
    out
}

/// `c_0 = e^{-i b dt} J_0(a dt)`, `c_k = e^{-i b dt} 2 (-i)^k J_k(a dt)`.
pub fn cheb_coeffs(order: usize, dt: f64, scale_a: f64, shift_b: f64) -> Vec<Complex64> {
    let j = bessel_j(order, scale_a * dt);
    let phase = Complex64::from_polar(1.0, -shift_b * dt);
    let minus_i = [
        Complex64::new(1.0, 0.0),
        Complex64::new(0.0, -1.0),
        Complex64::new(-1.0, 0.0),
        Complex64::new(0.0, 1.0),
    ];
    j.iter()
        .enumerate()
        .map(|(k, &jk)| {
            let f = if k == 0 { 1.0 } else { 2.0 };
            phase * minus_i[k % 4] * (f * jk)
        })
        .collect()
}

/// Gershgorin interval of `h` mapped to `(scale_a, shift_b)` with a 1%
/// margin on the half-width.
pub fn spectral_bounds(h: &CrsMatrix) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for r in 0..h.n_rows() {
        let (cols, vals) = h.row(r);
        let mut d = 0.0;
        let mut radius = 0.0;
        for (&c, &v) in cols.iter().zip(vals) {
            if c as usize == r {
                d = v;
            } else {
                radius += v.abs();
            }
        }
        lo = lo.min(d - radius);
        hi = hi.max(d + radius);
    }
    if h.n_rows() == 0 {
        return (1e-12, 0.0);
    }
    let b = (hi + lo) / 2.0;
    let a = ((hi - lo) / 2.0 * 1.01).max(1e-12);
    (a, b)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WavePacketParams {
    pub sigma: f64,
    pub k0: [f64; 3],
    pub center: [usize; 3],
}

fn site_coords(i: usize, dims: [usize; 3]) -> [usize; 3] {
    [i % dims[0], (i / dims[0]) % dims[1], i / (dims[0] * dims[1])]
}

/// Normalized Gaussian packet `exp(-r^2 / (2 sigma^2) + i k0 . r)` around `center`.
pub fn wave_packet(dims: [usize; 3], p: &WavePacketParams) -> Result<Vec<Complex64>> {
    if !(p.sigma > 0.0) {
        return invalid("sigma must be > 0");
    }
    if (0..3).any(|d| p.center[d] >= dims[d]) {
        return invalid(format!("center {:?} outside lattice {:?}", p.center, dims));
    }
    let n = dims.iter().product();
    let mut psi: Vec<Complex64> = (0..n)
        .map(|i| {
            let c = site_coords(i, dims);
            let r: Vec<f64> = (0..3).map(|d| c[d] as f64 - p.center[d] as f64).collect();
            let r2: f64 = r.iter().map(|v| v * v).sum();
            let kr: f64 = (0..3).map(|d| p.k0[d] * r[d]).sum();
            Complex64::from_polar((-r2 / (2.0 * p.sigma * p.sigma)).exp(), kr)
        })
        .collect();
    let norm = psi.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
    if norm == 0.0 {
        return invalid("wave packet underflows everywhere");
    }
    psi.iter_mut().for_each(|v| *v /= norm);
    Ok(psi)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Observables {
    pub norm: f64,
    /// Expected position relative to the reference site.
    pub center_of_mass: [f64; 3],
    #[serde(skip)]
    pub density: Vec<f64>,
}

pub fn observables(psi: &[Complex64], dims: [usize; 3], center: [usize; 3]) -> Observables {
    let density: Vec<f64> = psi.iter().map(|v| v.norm_sqr()).collect();
    let total: f64 = density.iter().sum();
    let mut com = [0.0; 3];
    for (i, &rho) in density.iter().enumerate() {
        let c = site_coords(i, dims);
        for d in 0..3 {
            com[d] += (c[d] as f64 - center[d] as f64) * rho;
        }
    }
    Observables {
        norm: total.sqrt(),
        center_of_mass: com,
        density,
    }
}

/// `v_k = 2 H~ v_{k-1} - v_{k-2}`, or `H~ v_0` for `k = 1`, where `k` is the
/// global recurrence index `base + power`.
#[derive(Debug, Clone, Copy)]
pub struct ChebKernel {
    pub inv_a: f64,
    pub b: f64,
    pub base: usize,
}

impl KernelCallback<Complex64> for ChebKernel {
    fn apply(
        &self,
        m: &LocalMatrix,
        power: usize,
        input: &[Complex64],
        previous: Option<&[Complex64]>,
        out: &mut [Complex64],
        rows: Range<usize>,
    ) {
        let first = self.base + power == 1;
        for (o, r) in out.iter_mut().zip(rows) {
            let (cols, vals) = m.row(r);
            let hv = (row_dot(cols, vals, input) - input[r] * self.b) * self.inv_a;
            *o = if first {
                hv
            } else {
                hv * 2.0 - previous.expect("three-term recurrence needs v_{k-2}")[r]
            };
        }
    }

    fn needs_previous(&self) -> bool {
        true
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    Trad,
    Dlb,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PropagationParams {
    pub order: usize,
    pub dt: f64,
    pub n_steps: usize,
    pub scale_a: f64,
    pub shift_b: f64,
    pub backend: Backend,
    pub p_m: usize,
    pub cache_bytes: u64,
    pub n_ranks: usize,
    /// Record observables every `stride` steps (and at the last step).
    pub stride: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepRecord {
    pub step: usize,
    pub time: f64,
    pub norm: f64,
    pub center_of_mass: [f64; 3],
}

#[derive(Debug, Clone, Serialize)]
pub struct Propagation {
    #[serde(skip)]
    pub psi: Vec<Complex64>,
    pub series: Vec<StepRecord>,
    pub exchanges: usize,
    pub exchanged_elements: usize,
    pub owned_row_updates: usize,
    pub redundant_row_updates: usize,
    pub kernel_invocations: usize,
}

/// Propagates `psi0` for `n_steps` steps of `dt`. Each step runs the
/// recurrence in chunks of `p_m` powers; the last chunk may compute up to
/// `p_m - 1` vectors beyond `order` which are not accumulated.
/// `on_step(step, psi)` sees the state at every recorded step.
pub fn propagate(
    h: &CrsMatrix,
    psi0: &[Complex64],
    params: &PropagationParams,
    dims: [usize; 3],
    center: [usize; 3],
    opts: RunOptions,
    mut on_step: impl FnMut(usize, &[Complex64]) -> Result<()>,
) -> Result<Propagation> {
    if params.order == 0 {
        return invalid("order must be >= 1");
    }
    if params.p_m == 0 || params.p_m > params.order {
        return invalid(format!("p_m = {} must be in 1..={}", params.p_m, params.order));
    }
    if !(params.scale_a > 0.0) {
        return invalid("scale_a must be > 0");
    }
    if psi0.len() != h.n_rows() {
        return invalid(format!("state has {} entries, H has {} rows", psi0.len(), h.n_rows()));
    }
    let part = partition_rows(h, params.n_ranks, PartitionStrategy::BlockRows)?;
    let plans = build_plans(h, &part, PlanOptions::new(params.p_m))?;
    let scheds = match params.backend {
        Backend::Dlb => plans
            .iter()
            .map(|p| dlb_rank_schedule(p, params.p_m, params.cache_bytes))
            .collect::<Result<Vec<_>>>()?,
        Backend::Trad => Vec::new(),
    };
    let coeffs = cheb_coeffs(params.order, params.dt, params.scale_a, params.shift_b);
    let p_m = params.p_m;
    let n_chunks = params.order.div_ceil(p_m);
    let stride = params.stride.max(1);

    let mut psi = psi0.to_vec();
    let mut table = new_table(&plans, &psi, p_m, opts.checked)?;
    let mut stats = ExchangeStats::default();
    let mut invocations = 0;
    let mut series = vec![record(0, 0.0, &psi, dims, center)];
    on_step(0, &psi)?;

    for step in 1..=params.n_steps {
        let mut acc: Vec<Vec<Complex64>> = table
            .ranks
            .iter()
            .map(|t| t.owned(0).iter().map(|v| coeffs[0] * v).collect())
            .collect();
        for chunk in 0..n_chunks {
            let base = chunk * p_m;
            if chunk > 0 {
                table.shift_window();
            }
            let cb = ChebKernel {
                inv_a: 1.0 / params.scale_a,
                b: params.shift_b,
                base,
            };
            let (transport, _) = match params.backend {
                Backend::Trad => trad_execute(&plans, &mut table, p_m, &cb, opts)?,
                Backend::Dlb => dlb_execute(&plans, &scheds, &mut table, p_m, &cb, opts)?,
            };
            invocations += 1;
            stats.exchanges += transport.stats.exchanges;
            stats.elements += transport.stats.elements;
            for p in 1..=p_m {
                let k = base + p;
                if k > params.order {
                    break;
                }
                for (a, t) in acc.iter_mut().zip(&table.ranks) {
                    for (s, v) in a.iter_mut().zip(t.owned(p)) {
                        *s += coeffs[k] * v;
                    }
                }
            }
        }
        for (t, a) in table.ranks.iter_mut().zip(&acc) {
            t.reset(a, None);
        }
        for (a, rows) in acc.iter().zip(&table.local_rows) {
            for (v, &g) in a.iter().zip(rows) {
                psi[g as usize] = *v;
            }
        }
        if step % stride == 0 || step == params.n_steps {
            series.push(record(step, step as f64 * params.dt, &psi, dims, center));
            on_step(step, &psi)?;
        }
    }
    let owned: usize = table.ranks.iter().map(|t| t.owned_updates).sum();
    let redundant: usize = table.ranks.iter().map(|t| t.redundant_updates).sum();
    Ok(Propagation {
        psi,
        series,
        exchanges: stats.exchanges,
        exchanged_elements: stats.elements,
        owned_row_updates: owned,
        redundant_row_updates: redundant,
        kernel_invocations: invocations,
    })
}

fn record(step: usize, time: f64, psi: &[Complex64], dims: [usize; 3], center: [usize; 3]) -> StepRecord {
    let o = observables(psi, dims, center);
    StepRecord {
        step,
        time,
        norm: o.norm,
        center_of_mass: o.center_of_mass,
    }
}

pub fn write_series_csv(series: &[StepRecord], w: &mut impl Write) -> Result<()> {
    writeln!(w, "step,time,norm,com_x,com_y,com_z")?;
    for r in series {
        writeln!(
            w,
            "{},{:?},{:?},{:?},{:?},{:?}",
            r.step, r.time, r.norm, r.center_of_mass[0], r.center_of_mass[1], r.center_of_mass[2]
        )?;
    }
    Ok(())
}

/// Density `|psi|^2` as little-endian doubles in lattice order.
pub fn write_density(psi: &[Complex64], w: &mut impl Write) -> Result<()> {
    for v in psi {
        w.write_all(&v.norm_sqr().to_le_bytes())?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sparse::{gen_anderson, gen_stencil, AndersonParams, StencilKind};

    fn bessel_series(k: usize, x: f64) -> f64 {
        let mut term = (x / 2.0).powi(k as i32) / (1..=k).map(|i| i as f64).product::<f64>();
        let mut sum = term;
        for m in 1..60 {
            term *= -(x * x / 4.0) / (m as f64 * (m + k) as f64);
            sum += term;
        }
        sum
    }

    #[test]
    fn bessel_matches_series() {
        for &x in &[0.1, 1.0, 2.5, 5.0, 9.0] {
            let j = bessel_j(20, x);
            for (k, &v) in j.iter().enumerate() {
                // the alternating series loses digits for larger x
                let tol = if x <= 5.0 { 1e-14 } else { 1e-12 };
                assert!((v - bessel_series(k, x)).abs() < tol, "J_{k}({x}) = {v}");
            }
        }
        assert!((bessel_j(1, 1.0)[1] - 0.440_050_585_744_933_5).abs() < 1e-15);
        let neg = bessel_j(3, -2.0);
        let pos = bessel_j(3, 2.0);
        assert_eq!(neg[1], -pos[1]);
        assert_eq!(neg[2], pos[2]);
    }

    #[test]
    fn bessel_large_argument_stays_finite() {
        let j = bessel_j(200, 150.0);
        assert!(j.iter().all(|v| v.is_finite() && v.abs() <= 1.0));
        let s: f64 = j[0] + 2.0 * j.iter().skip(2).step_by(2).sum::<f64>();
        assert!((s - 1.0).abs() < 1e-12);
    }

    #[test]
    fn coeffs_at_zero_time() {
        let c = cheb_coeffs(5, 0.0, 2.0, 1.0);
        assert_eq!(c[0], Complex64::new(1.0, 0.0));
        assert!(c[1..].iter().all(|v| v.norm() == 0.0));
        let c = cheb_coeffs(1, 1.0, 1.0, 0.0);
        assert!((c[1] - Complex64::new(0.0, -2.0 * 0.440_050_585_744_933_5)).norm() < 1e-15);
    }

    #[test]
    fn coeffs_reproduce_exponential() {
        let (a, b, dt) = (2.3, 0.4, 2.0);
        let c = cheb_coeffs(40, dt, a, b);
        for i in 0..=40 {
            let lam = -1.0 + i as f64 / 20.0;
            let (mut t0, mut t1) = (1.0, lam);
            let mut s = c[0] + c[1] * lam;
            for ck in &c[2..] {
                let t2 = 2.0 * lam * t1 - t0;
                s += ck * t2;
                t0 = t1;
                t1 = t2;
            }
            let exact = Complex64::from_polar(1.0, -dt * (a * lam + b));
            assert!((s - exact).norm() < 1e-10);
        }
    }

    #[test]
    fn gershgorin() {
        let chain = gen_stencil([9, 1, 1], StencilKind::Pt5).unwrap();
        // diag 4, two -1 neighbors: [2, 6]
        let (a, b) = spectral_bounds(&chain);
        assert!((b - 4.0).abs() < 1e-15 && (a - 2.02).abs() < 1e-12);
        let hop = gen_anderson(&AndersonParams {
            dims: [9, 1, 1],
            w: 0.0,
            ..Default::default()
        })
        .unwrap();
        let (a, b) = spectral_bounds(&hop.matrix);
        assert_eq!(b, 0.0);
        assert!((a - 2.02).abs() < 1e-12);
        let zero = CrsMatrix::from_triplets(3, 3, Vec::new()).unwrap();
        assert_eq!(spectral_bounds(&zero), (1e-12, 0.0));
    }

    #[test]
    fn packet_normalized_and_flat_limit() {
        let p = WavePacketParams {
            sigma: 1e6,
            k0: [0.0; 3],
            center: [1, 1, 1],
        };
        let psi = wave_packet([3, 3, 3], &p).unwrap();
        for v in &psi {
            assert!((v.re - 1.0 / 27f64.sqrt()).abs() < 1e-10);
        }
        let o = observables(&psi, [3, 3, 3], [1, 1, 1]);
        assert!((o.norm - 1.0).abs() < 1e-14);
        assert!(o.center_of_mass.iter().all(|c| c.abs() < 1e-12));
        let outside = WavePacketParams {
            center: [3, 0, 0],
            ..p
        };
        assert!(wave_packet([3, 3, 3], &outside).is_err());
    }

    #[test]
    fn delta_state_observables() {
        let mut psi = vec![Complex64::new(0.0, 0.0); 24];
        psi[1 + 4 * 2 + 12] = Complex64::new(0.0, 1.0);
        let o = observables(&psi, [4, 3, 2], [0, 0, 0]);
        assert_eq!(o.center_of_mass, [1.0, 2.0, 1.0]);
        assert_eq!(o.density.iter().filter(|&&d| d > 0.0).count(), 1);
        assert!((o.norm * o.norm - o.density.iter().sum::<f64>()).abs() < 1e-14);
    }

    fn params(backend: Backend, p_m: usize) -> PropagationParams {
        PropagationParams {
            order: 16,
            dt: 0.3,
            n_steps: 3,
            scale_a: 7.0,
            shift_b: 0.0,
            backend,
            p_m,
            cache_bytes: 4096,
            n_ranks: 3,
            stride: 1,
        }
    }

    #[test]
    fn backends_bitwise_equal() {
        let h = gen_anderson(&AndersonParams {
            dims: [5, 4, 3],
            w: 1.0,
            seed: 3,
            ..Default::default()
        })
        .unwrap()
        .matrix;
        let psi0 = wave_packet(
            [5, 4, 3],
            &WavePacketParams {
                sigma: 1.5,
                k0: [1.0, 0.0, 0.0],
                center: [2, 2, 1],
            },
        )
        .unwrap();
        let run = |b, p| {
            propagate(&h, &psi0, &params(b, p), [5, 4, 3], [2, 2, 1], RunOptions::checked(), |_, _| Ok(()))
                .unwrap()
        };
        let t = run(Backend::Trad, 5);
        for p in [1, 3, 5, 16] {
            let d = run(Backend::Dlb, p);
            assert_eq!(d.psi, run(Backend::Trad, p).psi);
            for (x, y) in d.psi.iter().zip(&t.psi) {
                assert!((x - y).norm() < 1e-13);
            }
        }
        assert!((t.series.last().unwrap().norm - 1.0).abs() < 1e-10);
        assert!(propagate(&h, &psi0, &params(Backend::Dlb, 17), [5, 4, 3], [2, 2, 1], RunOptions::default(), |_, _| Ok(())).is_err());
    }

    #[test]
    fn zero_hamiltonian_is_identity() {
        let h = CrsMatrix::from_triplets(8, 8, Vec::new()).unwrap();
        let (a, b) = spectral_bounds(&h);
        let psi0: Vec<Complex64> = (0..8).map(|i| Complex64::new(i as f64, 1.0) / 14.0f64.sqrt()).collect();
        let mut p = params(Backend::Dlb, 4);
        p.scale_a = a;
        p.shift_b = b;
        p.n_ranks = 2;
        let out = propagate(&h, &psi0, &p, [8, 1, 1], [0, 0, 0], RunOptions::default(), |_, _| Ok(())).unwrap();
        for (x, y) in out.psi.iter().zip(&psi0) {
            assert!((x - y).norm() < 1e-15);
        }
    }
}

//! Bulk-synchronous execution of logical ranks.
//!
//! A rank program is a sequence of phases. Compute phases run rank-local
//! work (sequentially or on worker threads); exchange phases are full
//! barriers in which every rank posts its messages, the transport routes
//! them, and each receiver unpacks them into its halo buffers in source-rank
//! order. Outputs depend only on inputs, never on worker scheduling.
//!
//! [`Transport`] is the narrow contract a network backend would implement;
//! [`LocalTransport`] moves messages in memory.

use std::collections::BTreeSet;
use std::io::Write;

use serde::Serialize;

use crate::error::{MpkError, Result};
use crate::partition::RankPlan;

/// Per-rank outgoing and incoming halo traffic for one exchange pattern.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RankExchange {
    /// (destination rank, owned local rows to send in order)
    pub sends: Vec<(usize, Vec<u32>)>,
    /// (source rank, first halo slot, count)
    pub recvs: Vec<(usize, usize, usize)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExchangeSpec {
    pub ranks: Vec<RankExchange>,
}

impl ExchangeSpec {
    pub fn from_plans(plans: &[RankPlan]) -> Self {
        ExchangeSpec {
            ranks: plans
                .iter()
                .map(|p| RankExchange {
                    sends: p.sends.iter().map(|s| (s.rank, s.rows.clone())).collect(),
                    recvs: p.recvs.iter().map(|r| (r.rank, r.offset, r.count)).collect(),
                })
                .collect(),
        }
    }

    /// Checks that every send has a matching receive of the same length.
    pub fn check_duality(&self) -> Result<()> {
        for (src, rx) in self.ranks.iter().enumerate() {
            for (dst, rows) in &rx.sends {
                let matching = self
                    .ranks
                    .get(*dst)
                    .and_then(|d| d.recvs.iter().find(|r| r.0 == src));
                match matching {
                    Some(&(_, _, count)) if count == rows.len() => {}
                    _ => {
                        return Err(MpkError::Protocol {
                            phase: 0,
                            src,
                            dst: *dst,
                            msg: "send list has no matching receive range".into(),
                        })
                    }
                }
            }
        }
        for (dst, rx) in self.ranks.iter().enumerate() {
            for &(src, _, _) in &rx.recvs {
                if !self.ranks[src].sends.iter().any(|s| s.0 == dst) {
                    return Err(MpkError::Protocol {
                        phase: 0,
                        src,
                        dst,
                        msg: "receive range has no matching send".into(),
                    });
                }
            }
        }
        Ok(())
    }

    /// Elements moved by one exchange.
    pub fn volume(&self) -> usize {
        self.ranks
            .iter()
            .flat_map(|r| r.sends.iter().map(|s| s.1.len()))
            .sum()
    }
}

/// State that can serve and absorb halo traffic.
pub trait HaloState: Send {
    type Elem: Copy + Send + Sync;

    /// Appends the values of owned `rows` in `slot` to `out`.
    fn gather(&self, slot: usize, rows: &[u32], out: &mut Vec<Self::Elem>) -> Result<()>;

    /// Writes `data` into halo slots `first..first + data.len()` of `slot`.
    fn scatter(&mut self, slot: usize, first: usize, data: &[Self::Elem]);
}

#[derive(Debug, Clone, PartialEq)]
pub struct Message<T> {
    pub src: usize,
    pub dst: usize,
    pub payload: Vec<T>,
}

/// Moves one phase's messages between ranks. Returns, per destination rank,
/// the delivered messages sorted by source rank. Delivery is a rendezvous:
/// the call returns only once every posted message has been routed.
pub trait Transport<T> {
    fn exchange(&mut self, phase: usize, outgoing: Vec<Vec<Message<T>>>) -> Result<Vec<Vec<Message<T>>>>;
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ExchangeStats {
    pub exchanges: usize,
    pub messages: usize,
    pub elements: usize,
    pub bytes_sent: usize,
    pub bytes_delivered: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct TraceRecord {
    pub phase: usize,
    pub src: usize,
    pub dst: usize,
    pub bytes: usize,
}

/// In-memory transport with traffic counters and an optional trace.
#[derive(Debug)]
pub struct LocalTransport {
    n_ranks: usize,
    elem_bytes: usize,
    pub stats: ExchangeStats,
    pub trace: Option<Vec<TraceRecord>>,
}

impl LocalTransport {
    pub fn new(n_ranks: usize, elem_bytes: usize) -> Self {
        LocalTransport {
            n_ranks,
            elem_bytes,
            stats: ExchangeStats::default(),
            trace: None,
        }
    }

    pub fn with_trace(mut self) -> Self {
        self.trace = Some(Vec::new());
        self
    }

    /// Writes the trace as CSV: phase,src,dst,bytes.
    pub fn write_trace_csv(&self, w: &mut impl Write) -> std::io::Result<()> {
        writeln!(w, "phase,src,dst,bytes")?;
        for t in self.trace.iter().flatten() {
            writeln!(w, "{},{},{},{}", t.phase, t.src, t.dst, t.bytes)?;
        }
        Ok(())
    }
}

impl<T> Transport<T> for LocalTransport {
    fn exchange(&mut self, phase: usize, outgoing: Vec<Vec<Message<T>>>) -> Result<Vec<Vec<Message<T>>>> {
        let mut inbox: Vec<Vec<Message<T>>> = (0..self.n_ranks).map(|_| Vec::new()).collect();
        let mut sent = 0;
        for (src, msgs) in outgoing.into_iter().enumerate() {
            for m in msgs {
                if m.src != src || m.dst >= self.n_ranks || m.dst == src {
                    return Err(MpkError::Protocol {
                        phase,
                        src,
                        dst: m.dst,
                        msg: "message posted with an invalid route".into(),
                    });
                }
                let bytes = m.payload.len() * self.elem_bytes;
                sent += bytes;
                self.stats.messages += 1;
                self.stats.elements += m.payload.len();
                if let Some(t) = self.trace.as_mut() {
                    t.push(TraceRecord {
                        phase,
                        src,
                        dst: m.dst,
                        bytes,
                    });
                }
                inbox[m.dst].push(m);
            }
        }
        let delivered: usize = inbox
            .iter()
            .flatten()
            .map(|m| m.payload.len() * self.elem_bytes)
            .sum();
        self.stats.exchanges += 1;
        self.stats.bytes_sent += sent;
        self.stats.bytes_delivered += delivered;
        for msgs in inbox.iter_mut() {
            msgs.sort_by_key(|m| m.src);
        }
        Ok(inbox)
    }
}

/// How compute phases are spread over OS threads.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Executor {
    /// Ranks run one after another on the calling thread.
    Sequential,
    /// Ranks are split into contiguous chunks, one scoped thread per chunk.
    Threaded { workers: usize },
}

impl Executor {
    /// Reads `MPKFORGE_THREADS`; 0 or unset selects the sequential executor.
    pub fn from_env() -> Self {
        match std::env::var("MPKFORGE_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
            Some(w) if w > 0 => Executor::Threaded { workers: w },
            _ => Executor::Sequential,
        }
    }

    /// Runs `f` once per rank. Reports the error of the lowest failing rank.
    pub fn for_each_rank<S, F>(&self, states: &mut [S], f: F) -> Result<()>
    where
        S: Send,
        F: Fn(usize, &mut S) -> Result<()> + Sync,
    {
        match *self {
            Executor::Sequential => {
                for (r, s) in states.iter_mut().enumerate() {
                    f(r, s)?;
                }
                Ok(())
            }
            Executor::Threaded { workers } => {
                let n = states.len();
                if n == 0 {
                    return Ok(());
                }
                let chunk = n.div_ceil(workers.max(1));
                let f = &f;
                let results: Vec<Result<()>> = std::thread::scope(|scope| {
                    let handles: Vec<_> = states
                        .chunks_mut(chunk)
                        .enumerate()
                        .map(|(c, part)| {
                            scope.spawn(move || {
                                for (k, s) in part.iter_mut().enumerate() {
                                    f(c * chunk + k, s)?;
                                }
                                Ok(())
                            })
                        })
                        .collect();
                    handles
                        .into_iter()
                        .map(|h| h.join().expect("rank worker panicked"))
                        .collect()
                });
                results.into_iter().collect()
            }
        }
    }
}

pub type ComputeFn<'a, S> = Box<dyn Fn(&mut S) -> Result<()> + Sync + 'a>;

pub enum Phase<'a, S> {
    Compute(ComputeFn<'a, S>),
    /// Bulk halo exchange of one power slot following `spec`.
    Exchange { spec: &'a ExchangeSpec, slot: usize },
}

impl<S> Phase<'_, S> {
    fn is_exchange(&self) -> bool {
        matches!(self, Phase::Exchange { .. })
    }
}

pub struct RankProgram<'a, S> {
    pub phases: Vec<Phase<'a, S>>,
}

impl<'a, S> RankProgram<'a, S> {
    pub fn new() -> Self {
        RankProgram { phases: Vec::new() }
    }

    pub fn compute(&mut self, f: impl Fn(&mut S) -> Result<()> + Sync + 'a) -> &mut Self {
        self.phases.push(Phase::Compute(Box::new(f)));
        self
    }

    pub fn exchange(&mut self, spec: &'a ExchangeSpec, slot: usize) -> &mut Self {
        self.phases.push(Phase::Exchange { spec, slot });
        self
    }

    pub fn n_exchanges(&self) -> usize {
        self.phases.iter().filter(|p| p.is_exchange()).count()
    }
}

impl<S> Default for RankProgram<'_, S> {
    fn default() -> Self {
        Self::new()
    }
}

/// Element sets moved by each exchange phase: (src, dst, owned local row).
pub type ExchangeLog = Vec<BTreeSet<(usize, usize, u32)>>;

/// Runs one program per rank in lockstep.
pub fn run_bsp<S, T>(
    exec: Executor,
    transport: &mut T,
    programs: &[RankProgram<'_, S>],
    states: &mut [S],
    mut log: Option<&mut ExchangeLog>,
) -> Result<()>
where
    S: HaloState,
    T: Transport<S::Elem>,
{
    let n = states.len();
    if programs.len() != n {
        return Err(MpkError::Protocol {
            phase: 0,
            src: 0,
            dst: 0,
            msg: format!("{} programs for {n} ranks", programs.len()),
        });
    }
    let Some(len) = programs.first().map(|p| p.phases.len()) else {
        return Ok(());
    };
    for (r, p) in programs.iter().enumerate() {
        if p.phases.len() != len {
            return Err(MpkError::Protocol {
                phase: len.min(p.phases.len()),
                src: r,
                dst: r,
                msg: format!("rank {r} has {} phases, rank 0 has {len}", p.phases.len()),
            });
        }
    }

    for idx in 0..len {
        let exchanging = programs[0].phases[idx].is_exchange();
        if let Some(r) = programs.iter().position(|p| p.phases[idx].is_exchange() != exchanging) {
            return Err(MpkError::Protocol {
                phase: idx,
                src: r,
                dst: r,
                msg: "ranks disagree on the phase kind".into(),
            });
        }
        if !exchanging {
            exec.for_each_rank(states, |r, s| match &programs[r].phases[idx] {
                Phase::Compute(f) => f(s),
                Phase::Exchange { .. } => unreachable!(),
            })?;
            continue;
        }

        let mut outgoing = Vec::with_capacity(n);
        let mut step_log = BTreeSet::new();
        for (src, s) in states.iter().enumerate() {
            let Phase::Exchange { spec, slot } = &programs[src].phases[idx] else {
                unreachable!()
            };
            let mut msgs = Vec::new();
            for (dst, rows) in &spec.ranks[src].sends {
                let mut payload = Vec::with_capacity(rows.len());
                s.gather(*slot, rows, &mut payload)?;
                if log.is_some() {
                    step_log.extend(rows.iter().map(|&row| (src, *dst, row)));
                }
                msgs.push(Message {
                    src,
                    dst: *dst,
                    payload,
                });
            }
            outgoing.push(msgs);
        }
        let inbox = transport.exchange(idx, outgoing)?;
        for (dst, (msgs, s)) in inbox.into_iter().zip(states.iter_mut()).enumerate() {
            let Phase::Exchange { spec, slot } = &programs[dst].phases[idx] else {
                unreachable!()
            };
            let recvs = &spec.ranks[dst].recvs;
            if msgs.len() != recvs.len() {
                let src = msgs.first().map_or(dst, |m| m.src);
                return Err(MpkError::Protocol {
                    phase: idx,
                    src,
                    dst,
                    msg: format!("expected {} messages, got {}", recvs.len(), msgs.len()),
                });
            }
            for (m, &(src, first, count)) in msgs.iter().zip(recvs) {
                if m.src != src || m.payload.len() != count {
                    return Err(MpkError::Protocol {
                        phase: idx,
                        src: m.src,
                        dst,
                        msg: format!(
                            "expected {count} elements from rank {src}, got {} from rank {}",
                            m.payload.len(),
                            m.src
                        ),
                    });
                }
                s.scatter(*slot, first, &m.payload);
            }
        }
        if let Some(l) = log.as_deref_mut() {
            l.push(step_log);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Minimal state: owned values followed by halo values, one slot.
    #[derive(Debug, Clone, PartialEq)]
    struct Buf {
        owned: Vec<f64>,
        halo: Vec<f64>,
    }

    impl HaloState for Buf {
        type Elem = f64;
        fn gather(&self, _slot: usize, rows: &[u32], out: &mut Vec<f64>) -> Result<()> {
            out.extend(rows.iter().map(|&r| self.owned[r as usize]));
            Ok(())
        }
        fn scatter(&mut self, _slot: usize, first: usize, data: &[f64]) {
            self.halo[first..first + data.len()].copy_from_slice(data);
        }
    }

    fn swap_spec() -> ExchangeSpec {
        ExchangeSpec {
            ranks: vec![
                RankExchange {
                    sends: vec![(1, vec![0])],
                    recvs: vec![(1, 0, 1)],
                },
                RankExchange {
                    sends: vec![(0, vec![0])],
                    recvs: vec![(0, 0, 1)],
                },
            ],
        }
    }

    #[test]
    fn local_only_program() {
        let mut states = vec![Buf { owned: vec![1.0], halo: vec![] }];
        let mut prog = RankProgram::new();
        prog.compute(|s: &mut Buf| {
            s.owned[0] *= 3.0;
            Ok(())
        });
        let mut t = LocalTransport::new(1, 8);
        run_bsp(Executor::Sequential, &mut t, &[prog], &mut states, None).unwrap();
        assert_eq!(states[0].owned, vec![3.0]);
        assert_eq!(t.stats.exchanges, 0);
    }

    #[test]
    fn two_ranks_swap() {
        let spec = swap_spec();
        spec.check_duality().unwrap();
        let mut states = vec![
            Buf { owned: vec![10.0], halo: vec![0.0] },
            Buf { owned: vec![20.0], halo: vec![0.0] },
        ];
        let programs: Vec<RankProgram<Buf>> = (0..2)
            .map(|_| {
                let mut p = RankProgram::new();
                p.exchange(&spec, 0);
                p
            })
            .collect();
        let mut t = LocalTransport::new(2, 8).with_trace();
        run_bsp(Executor::Sequential, &mut t, &programs, &mut states, None).unwrap();
        assert_eq!(states[0].halo, vec![20.0]);
        assert_eq!(states[1].halo, vec![10.0]);
        assert_eq!(t.stats.bytes_sent, 16);
        assert_eq!(t.stats.bytes_sent, t.stats.bytes_delivered);
        let mut csv = Vec::new();
        t.write_trace_csv(&mut csv).unwrap();
        assert_eq!(String::from_utf8(csv).unwrap(), "phase,src,dst,bytes\n0,0,1,8\n0,1,0,8\n");
    }

    #[test]
    fn mismatched_phase_counts() {
        let spec = swap_spec();
        let mut a = RankProgram::new();
        a.exchange(&spec, 0);
        let b: RankProgram<Buf> = RankProgram::new();
        let mut states = vec![
            Buf { owned: vec![1.0], halo: vec![0.0] },
            Buf { owned: vec![2.0], halo: vec![0.0] },
        ];
        let mut t = LocalTransport::new(2, 8);
        let e = run_bsp(Executor::Sequential, &mut t, &[a, b], &mut states, None);
        assert!(matches!(e, Err(MpkError::Protocol { .. })));
    }

    #[test]
    fn size_mismatch_names_the_route() {
        let mut spec = swap_spec();
        spec.ranks[1].recvs = vec![(0, 0, 2)];
        let programs: Vec<RankProgram<Buf>> = (0..2)
            .map(|_| {
                let mut p = RankProgram::new();
                p.exchange(&spec, 0);
                p
            })
            .collect();
        let mut states = vec![
            Buf { owned: vec![1.0], halo: vec![0.0] },
            Buf { owned: vec![2.0], halo: vec![0.0, 0.0] },
        ];
        let mut t = LocalTransport::new(2, 8);
        match run_bsp(Executor::Sequential, &mut t, &programs, &mut states, None) {
            Err(MpkError::Protocol { phase, src, dst, .. }) => assert_eq!((phase, src, dst), (0, 0, 1)),
            other => panic!("unexpected {other:?}"),
        }
        assert!(spec.check_duality().is_err());
    }

    #[test]
    fn threaded_matches_sequential() {
        let run = |exec: Executor| {
            let mut states: Vec<Buf> = (0..7)
                .map(|r| Buf { owned: vec![r as f64 + 0.1], halo: vec![] })
                .collect();
            let programs: Vec<RankProgram<Buf>> = (0..7)
                .map(|r| {
                    let mut p = RankProgram::new();
                    p.compute(move |s: &mut Buf| {
                        for _ in 0..100 {
                            s.owned[0] = (s.owned[0] * 1.000_001 + r as f64).sqrt();
                        }
                        Ok(())
                    });
                    p
                })
                .collect();
            let mut t = LocalTransport::new(7, 8);
            run_bsp(exec, &mut t, &programs, &mut states, None).unwrap();
            states.iter().map(|s| s.owned[0].to_bits()).collect::<Vec<_>>()
        };
        assert_eq!(run(Executor::Sequential), run(Executor::Threaded { workers: 3 }));
    }

    #[test]
    fn threaded_reports_lowest_rank_error() {
        let mut states = vec![0u8; 5];
        let e = Executor::Threaded { workers: 2 }.for_each_rank(&mut states, |r, _| {
            if r >= 2 {
                Err(MpkError::Logic { rank: r, msg: "boom".into() })
            } else {
                Ok(())
            }
        });
        assert!(matches!(e, Err(MpkError::Logic { rank: 2, .. })));
    }
}

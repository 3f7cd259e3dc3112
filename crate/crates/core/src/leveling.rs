//! BFS levels, level grouping under a cache budget, and the diagonal
//! wavefront over the (level, power) grid.
//!
//! Neighbors of level `i` always lie in levels `i-1..=i+1`, so power `p` of a
//! level only needs power `p-1` of itself and its two adjacent levels. The
//! wavefront visits diagonals `i + p = d` for increasing `d`, high power
//! first within a diagonal, which keeps a level's matrix data hot for
//! `p_m + 1` steps.

use serde::Serialize;

use crate::sparse::CrsMatrix;

/// Structure-only symmetric graph without self loops.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Adjacency {
    xadj: Vec<usize>,
    adjncy: Vec<u32>,
}

impl Adjacency {
    /// Builds from per-vertex neighbor lists, symmetrizing and dropping self loops.
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let mut lists: Vec<Vec<u32>> = vec![Vec::new(); n];
        for (u, v) in edges {
            if u != v {
                lists[u].push(v as u32);
                lists[v].push(u as u32);
            }
        }
        Self::from_lists(lists)
    }

    fn from_lists(mut lists: Vec<Vec<u32>>) -> Self {
        let mut xadj = Vec::with_capacity(lists.len() + 1);
        let mut adjncy = Vec::new();
        xadj.push(0);
        for l in lists.iter_mut() {
            l.sort_unstable();
            l.dedup();
            adjncy.extend_from_slice(l);
            xadj.push(adjncy.len());
        }
        Adjacency { xadj, adjncy }
    }

    pub fn n_vertices(&self) -> usize {
        self.xadj.len() - 1
    }

    pub fn n_edges(&self) -> usize {
        self.adjncy.len() / 2
    }

    #[inline]
    pub fn neighbors(&self, v: usize) -> &[u32] {
        &self.adjncy[self.xadj[v]..self.xadj[v + 1]]
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.neighbors(u).binary_search(&(v as u32)).is_ok()
    }
}

/// Pattern of `A + Aᵀ` without the diagonal.
pub fn symmetrize_pattern(a: &CrsMatrix) -> Adjacency {
    let n = a.n_rows().max(a.n_cols());
    let mut deg = vec![0usize; n];
    for r in 0..a.n_rows() {
        for &c in a.row(r).0 {
            if c as usize != r {
                deg[r] += 1;
                deg[c as usize] += 1;
            }
        }
    }
    let mut lists: Vec<Vec<u32>> = deg.iter().map(|&d| Vec::with_capacity(d)).collect();
    for r in 0..a.n_rows() {
        for &c in a.row(r).0 {
            if c as usize != r {
                lists[r].push(c);
                lists[c as usize].push(r as u32);
            }
        }
    }
    Adjacency::from_lists(lists)
}

/// Cap value for levels without a power limit of their own.
pub const UNCAPPED: usize = usize::MAX;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LevelSet {
    /// Offsets into `vertex_order`, one past each level.
    pub level_ptr: Vec<usize>,
    /// new -> old
    pub vertex_order: Vec<usize>,
    /// old -> new
    pub inverse_order: Vec<usize>,
    pub level_of: Vec<usize>,
    /// Highest power each level may reach; [`UNCAPPED`] means `p_m`.
    pub caps: Vec<usize>,
    /// Levels reachable from the roots. Later levels come from restarts.
    pub n_reachable: usize,
}

impl LevelSet {
    pub fn n_levels(&self) -> usize {
        self.level_ptr.len() - 1
    }

    pub fn level(&self, i: usize) -> &[usize] {
        &self.vertex_order[self.level_ptr[i]..self.level_ptr[i + 1]]
    }

    pub fn level_sizes(&self) -> Vec<usize> {
        self.level_ptr.windows(2).map(|w| w[1] - w[0]).collect()
    }

    /// Effective cap of level `i` for a run with maximum power `p_m`.
    pub fn cap(&self, i: usize, p_m: usize) -> usize {
        self.caps[i].min(p_m)
    }
}

/// Breadth-first levels from `roots` (vertex 0 if empty). When the frontier
/// dies with vertices left, BFS restarts from the smallest unvisited vertex
/// and its levels are appended. Each level is sorted by vertex index.
pub fn bfs_levels(adj: &Adjacency, roots: &[usize]) -> LevelSet {
    let n = adj.n_vertices();
    let mut level_of = vec![usize::MAX; n];
    let mut order: Vec<usize> = Vec::with_capacity(n);
    let mut level_ptr = vec![0usize];
    let mut n_reachable = 0;

    let mut frontier: Vec<usize> = if roots.is_empty() && n > 0 {
        vec![0]
    } else {
        let mut r = roots.to_vec();
        r.sort_unstable();
        r.dedup();
        r
    };
    let mut next_unvisited = 0usize;
    let mut first_component = true;

    while !frontier.is_empty() {
        for &v in &frontier {
            level_of[v] = level_ptr.len() - 1;
        }
        loop {
            let lvl = level_ptr.len() - 1;
            order.extend_from_slice(&frontier);
            level_ptr.push(order.len());
            let mut next = Vec::new();
            for &u in &frontier {
                for &w in adj.neighbors(u) {
                    let w = w as usize;
                    if level_of[w] == usize::MAX {
                        level_of[w] = lvl + 1;
                        next.push(w);
                    }
                }
            }
            if next.is_empty() {
                break;
            }
            next.sort_unstable();
            frontier = next;
        }
        if first_component {
            n_reachable = level_ptr.len() - 1;
            first_component = false;
        }
        while next_unvisited < n && level_of[next_unvisited] != usize::MAX {
            next_unvisited += 1;
        }
        frontier = if next_unvisited < n {
            vec![next_unvisited]
        } else {
            Vec::new()
        };
    }

    let mut inverse_order = vec![0usize; n];
    for (new, &old) in order.iter().enumerate() {
        inverse_order[old] = new;
    }
    let n_levels = level_ptr.len() - 1;
    LevelSet {
        level_ptr,
        vertex_order: order,
        inverse_order,
        level_of,
        caps: vec![UNCAPPED; n_levels],
        n_reachable,
    }
}

/// Permutation placing levels contiguously: `(new -> old, old -> new)`.
pub fn build_permutation(levels: &LevelSet) -> (Vec<usize>, Vec<usize>) {
    (levels.vertex_order.clone(), levels.inverse_order.clone())
}

pub const DEFAULT_SAFETY: f64 = 0.9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupedLevels {
    /// Offsets over levels, one past each group.
    pub group_ptr: Vec<usize>,
    pub group_bytes: Vec<u64>,
    pub group_caps: Vec<usize>,
    /// Every window of `p_m + 1` consecutive groups fits in `cache_bytes * safety`.
    pub window_fits: bool,
    pub cache_bytes: u64,
    pub safety: f64,
}

impl GroupedLevels {
    pub fn n_groups(&self) -> usize {
        self.group_bytes.len()
    }

    /// Level range of group `g`.
    pub fn levels(&self, g: usize) -> std::ops::Range<usize> {
        self.group_ptr[g]..self.group_ptr[g + 1]
    }

    /// One group per level.
    pub fn singletons(level_bytes: &[u64], caps: &[usize], cache_bytes: u64) -> Self {
        GroupedLevels {
            group_ptr: (0..=level_bytes.len()).collect(),
            group_bytes: level_bytes.to_vec(),
            group_caps: caps.to_vec(),
            window_fits: false,
            cache_bytes,
            safety: DEFAULT_SAFETY,
        }
    }
}

/// Greedily merges consecutive levels so that each group stays within
/// `cache * safety / (p_m + 1)` bytes, which keeps any `p_m + 1` consecutive
/// groups inside the budget. Levels with different caps never share a
/// group. If the whole matrix fits in `cache`, each equal-cap run becomes
/// one group.
pub fn form_level_groups(
    level_bytes: &[u64],
    caps: &[usize],
    cache_bytes: u64,
    p_m: usize,
    safety: f64,
) -> GroupedLevels {
    assert_eq!(level_bytes.len(), caps.len());
    let p_m = p_m.max(1);
    let total: u64 = level_bytes.iter().sum();
    let budget = cache_bytes as f64 * safety;
    let per_group = budget / (p_m + 1) as f64;
    let everything_cached = total <= cache_bytes;

    let mut group_ptr = vec![0usize];
    let mut group_bytes = Vec::new();
    let mut group_caps = Vec::new();
    let mut oversized = false;
    let mut i = 0;
    while i < level_bytes.len() {
        let cap = caps[i];
        let mut bytes = level_bytes[i];
        if bytes as f64 > per_group {
            oversized = true;
        }
        let mut j = i + 1;
        while j < level_bytes.len()
            && caps[j] == cap
            && (everything_cached || (bytes + level_bytes[j]) as f64 <= per_group)
        {
            bytes += level_bytes[j];
            j += 1;
        }
        group_ptr.push(j);
        group_bytes.push(bytes);
        group_caps.push(cap);
        i = j;
    }

    let window_fits = everything_cached
        || (!oversized
            && group_bytes
                .windows((p_m + 1).min(group_bytes.len().max(1)))
                .all(|w| w.iter().sum::<u64>() as f64 <= budget));
    GroupedLevels {
        group_ptr,
        group_bytes,
        group_caps,
        window_fits,
        cache_bytes,
        safety,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Task {
    pub group: usize,
    pub power: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Schedule {
    pub tasks: Vec<Task>,
}

/// Diagonal traversal: for `d = 1, 2, ...` emit `(d - p, p)` for
/// `p = 1..=p_m`, skipping tasks above the group's cap.
pub fn wavefront_schedule(caps: &[usize], p_m: usize) -> Schedule {
    let n = caps.len();
    let mut tasks = Vec::with_capacity(caps.iter().map(|&c| c.min(p_m)).sum());
    if n == 0 || p_m == 0 {
        return Schedule { tasks };
    }
    for d in 1..=(n - 1 + p_m) {
        for p in 1..=p_m {
            if p > d {
                break;
            }
            let i = d - p;
            if i < n && p <= caps[i].min(p_m) {
                tasks.push(Task { group: i, power: p });
            }
        }
    }
    Schedule { tasks }
}

/// Plain power-major sweep: every group at power 1, then every group at 2, ...
pub fn sweep_schedule(caps: &[usize], p_m: usize) -> Schedule {
    let mut tasks = Vec::new();
    for p in 1..=p_m {
        for (i, &c) in caps.iter().enumerate() {
            if p <= c.min(p_m) {
                tasks.push(Task { group: i, power: p });
            }
        }
    }
    Schedule { tasks }
}

impl Schedule {
    pub fn len(&self) -> usize {
        self.tasks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tasks.is_empty()
    }

    /// Replays the schedule and checks that every task runs after its
    /// upstream tasks `(i-1, p-1), (i, p-1), (i+1, p-1)` and that each group
    /// reaches exactly its cap. Returns the first offending task.
    pub fn validate(&self, caps: &[usize], p_m: usize) -> Result<(), Task> {
        let n = caps.len();
        let mut reached = vec![0usize; n];
        for &t in &self.tasks {
            let i = t.group;
            if i >= n || t.power != reached[i] + 1 || t.power > caps[i].min(p_m) {
                return Err(t);
            }
            let lo = i.saturating_sub(1);
            let hi = (i + 1).min(n - 1);
            for j in lo..=hi {
                let needed = t.power - 1;
                if caps[j].min(p_m) >= needed && reached[j] < needed {
                    return Err(t);
                }
            }
            reached[i] = t.power;
        }
        for (i, &r) in reached.iter().enumerate() {
            if r != caps[i].min(p_m) {
                return Err(Task { group: i, power: r });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct LevelDump<'a> {
    pub level_sizes: Vec<usize>,
    pub group_ptr: &'a [usize],
    pub group_bytes: &'a [u64],
    pub window_fits: bool,
    pub tasks: &'a [Task],
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sparse::{gen_stencil, StencilKind};

    #[test]
    fn symmetrize_single_entry() {
        let a = CrsMatrix::from_triplets(2, 2, [(0, 1, 3.0)]).unwrap();
        let g = symmetrize_pattern(&a);
        assert!(g.has_edge(0, 1) && g.has_edge(1, 0));
        assert_eq!(g.n_edges(), 1);
    }

    #[test]
    fn symmetrize_drops_diagonal() {
        let a = gen_stencil([4, 1, 1], StencilKind::Pt5).unwrap();
        let g = symmetrize_pattern(&a);
        assert_eq!(g.n_edges(), 3);
        assert!(!g.has_edge(2, 2));
    }

    #[test]
    fn chain_levels() {
        let a = gen_stencil([5, 1, 1], StencilKind::Pt5).unwrap();
        let l = bfs_levels(&symmetrize_pattern(&a), &[0]);
        assert_eq!(l.n_levels(), 5);
        for i in 0..5 {
            assert_eq!(l.level(i), &[i]);
        }
    }

    #[test]
    fn star_levels() {
        let star = Adjacency::from_edges(6, [(2, 0), (2, 1), (2, 3), (2, 4), (2, 5)]);
        let l = bfs_levels(&star, &[2]);
        assert_eq!(l.level_sizes(), vec![1, 5]);
        assert_eq!(l.level(1), &[0, 1, 3, 4, 5]);
    }

    #[test]
    fn grid_levels() {
        let a = gen_stencil([3, 3, 1], StencilKind::Pt5).unwrap();
        let l = bfs_levels(&symmetrize_pattern(&a), &[]);
        assert_eq!(l.level_sizes(), vec![1, 2, 3, 2, 1]);
    }

    #[test]
    fn disconnected_components_are_appended() {
        let g = Adjacency::from_edges(5, [(3, 4), (0, 1)]);
        let l = bfs_levels(&g, &[1]);
        assert_eq!(l.n_reachable, 2);
        assert_eq!(l.level_sizes(), vec![1, 1, 1, 1, 1]);
        assert_eq!(l.vertex_order, vec![1, 0, 2, 3, 4]);
    }

    #[test]
    fn level_ordered_matrix_gives_identity() {
        let a = gen_stencil([6, 1, 1], StencilKind::Pt5).unwrap();
        let (perm, inv) = build_permutation(&bfs_levels(&symmetrize_pattern(&a), &[0]));
        assert_eq!(perm, (0..6).collect::<Vec<_>>());
        assert_eq!(inv, perm);
    }

    #[test]
    fn group_everything_cached() {
        let g = form_level_groups(&[10, 20, 30], &[UNCAPPED; 3], 60, 4, DEFAULT_SAFETY);
        assert_eq!(g.n_groups(), 1);
        assert!(g.window_fits);
    }

    #[test]
    fn group_tiny_cache() {
        let g = form_level_groups(&[10, 20, 30], &[UNCAPPED; 3], 5, 2, DEFAULT_SAFETY);
        assert_eq!(g.group_ptr, vec![0, 1, 2, 3]);
        assert!(!g.window_fits);
    }

    #[test]
    fn group_ten_mib_levels() {
        let mib = 1u64 << 20;
        let g = form_level_groups(&[mib; 10], &[UNCAPPED; 10], 9 * mib, 3, 0.9);
        assert_eq!(g.group_ptr, vec![0, 2, 4, 6, 8, 10]);
        assert!(g.window_fits);
    }

    #[test]
    fn groups_respect_cap_boundaries() {
        let g = form_level_groups(&[1; 6], &[1, 2, UNCAPPED, UNCAPPED, UNCAPPED, UNCAPPED], 1000, 3, 0.9);
        assert_eq!(g.group_ptr, vec![0, 1, 2, 6]);
    }

    #[test]
    fn three_group_order() {
        let s = wavefront_schedule(&[UNCAPPED; 3], 2);
        let got: Vec<(usize, usize)> = s.tasks.iter().map(|t| (t.group, t.power)).collect();
        assert_eq!(got, vec![(0, 1), (1, 1), (0, 2), (2, 1), (1, 2), (2, 2)]);
        s.validate(&[UNCAPPED; 3], 2).unwrap();
    }

    #[test]
    fn ten_levels_p5() {
        let caps = [UNCAPPED; 10];
        let s = wavefront_schedule(&caps, 5);
        assert_eq!(s.len(), 50);
        s.validate(&caps, 5).unwrap();
        // Counting steps from zero, level 5 runs at step 15 for p = 1 and
        // comes back at step 21 for p = 2.
        assert_eq!(s.tasks[15], Task { group: 5, power: 1 });
        assert_eq!(s.tasks[21], Task { group: 5, power: 2 });
    }

    #[test]
    fn zero_caps_empty() {
        assert!(wavefront_schedule(&[0, 0, 0], 4).is_empty());
    }

    #[test]
    fn validator_catches_bad_order() {
        let bad = Schedule {
            tasks: vec![Task { group: 0, power: 1 }, Task { group: 0, power: 2 }, Task { group: 1, power: 1 }, Task { group: 1, power: 2 }],
        };
        assert_eq!(bad.validate(&[UNCAPPED; 2], 2), Err(Task { group: 0, power: 2 }));
        let sweep = sweep_schedule(&[UNCAPPED; 4], 3);
        sweep.validate(&[UNCAPPED; 4], 3).unwrap();
    }

    #[test]
    fn capped_schedule() {
        let caps = [1, 2, 3, 3, 3];
        let s = wavefront_schedule(&caps, 3);
        assert_eq!(s.len(), 12);
        s.validate(&caps, 3).unwrap();
    }
}

use rand_xoshiro::rand_core::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;
use serde::{Deserialize, Serialize};

use super::CrsMatrix;
use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StencilKind {
    /// 2D five-point Laplacian, diagonal 4.
    Pt5,
    /// 3D seven-point Laplacian, diagonal 6.
    Pt7,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AndersonParams {
    pub dims: [usize; 3],
    /// Disorder strength W.
    pub w: f64,
    /// Hopping along x.
    pub t: f64,
    /// Hopping along y and z.
    pub t_perp: f64,
    pub seed: u64,
}

impl Default for AndersonParams {
    fn default() -> Self {
        AndersonParams {
            dims: [1, 1, 1],
            w: 1.0,
            t: 1.0,
            t_perp: 1.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct AndersonMatrix {
    pub matrix: CrsMatrix,
    /// The per-site w_r in [-1, 1) that produced the diagonal.
    pub disorder: Vec<f64>,
}

/// Hopping values in the seven neighbor directions, ordered by ascending
/// column offset: -z, -y, -x, self, +x, +y, +z.
struct Couplings {
    minus: [f64; 3],
    plus: [f64; 3],
}

fn check_dims(dims: [usize; 3]) -> Result<usize> {
    if dims.contains(&0) {
        return invalid(format!("lattice extents must be >= 1, got {dims:?}"));
    }
    let n = dims.iter().try_fold(1usize, |acc, &d| acc.checked_mul(d));
    match n {
        Some(n) if n <= u32::MAX as usize => Ok(n),
        _ => invalid(format!("lattice {dims:?} exceeds 32-bit indexing")),
    }
}

/// Nearest-neighbor lattice matrix with open boundaries. Site (x, y, z) maps
/// to row x + Lx*y + Lx*Ly*z and every row is emitted in ascending column order.
fn lattice(dims: [usize; 3], diag: impl Fn(usize) -> f64, c: &Couplings) -> Result<CrsMatrix> {
    let n = check_dims(dims)?;
    let [lx, ly, lz] = dims;
    let links = (lx - 1) * ly * lz + lx * (ly - 1) * lz + lx * ly * (lz - 1);
    let nnz = n + 2 * links;
    if nnz > super::MAX_NNZ {
        return invalid(format!("{nnz} nonzeros exceed the 32-bit index limit"));
    }
    let strides = [1usize, lx, lx * ly];

    let mut row_ptr = Vec::with_capacity(n + 1);
    let mut col_idx = Vec::with_capacity(nnz);
    let mut values = Vec::with_capacity(nnz);
    row_ptr.push(0u32);
    for z in 0..lz {
        for y in 0..ly {
            for x in 0..lx {
                let r = x + lx * y + lx * ly * z;
                let pos = [x, y, z];
                for d in (0..3).rev() {
                    if pos[d] > 0 {
                        col_idx.push((r - strides[d]) as u32);
                        values.push(c.minus[d]);
                    }
                }
                col_idx.push(r as u32);
                values.push(diag(r));
                for d in 0..3 {
                    if pos[d] + 1 < dims[d] {
                        col_idx.push((r + strides[d]) as u32);
                        values.push(c.plus[d]);
                    }
                }
                row_ptr.push(col_idx.len() as u32);
            }
        }
    }
    debug_assert_eq!(col_idx.len(), nnz);
    Ok(CrsMatrix {
        n_rows: n,
        n_cols: n,
        row_ptr,
        col_idx,
        values,
    })
}

/// Standard Laplacian stencils: -1 off-diagonals, 4 (2D) or 6 (3D) on the diagonal.
pub fn gen_stencil(dims: [usize; 3], kind: StencilKind) -> Result<CrsMatrix> {
    let diag = match kind {
        StencilKind::Pt5 => {
            if dims[2] != 1 {
                return invalid("a 5-point stencil is two-dimensional (Lz must be 1)");
            }
            4.0
        }
        StencilKind::Pt7 => 6.0,
    };
    let off = Couplings {
        minus: [-1.0; 3],
        plus: [-1.0; 3],
    };
    lattice(dims, |_| diag, &off)
}

/// Uniform sample in [-1, 1) from the top 53 bits of a xoshiro256++ draw.
fn uniform_pm1(rng: &mut Xoshiro256PlusPlus) -> f64 {
    let unit = (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
    2.0 * unit - 1.0
}

/// Disorder values for every site, in row order. The generator is
/// xoshiro256++ seeded through SplitMix64 (`seed_from_u64`).
pub fn anderson_disorder(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
    (0..n).map(|_| uniform_pm1(&mut rng)).collect()
}

/// Anderson tight-binding Hamiltonian on an open Lx x Ly x Lz lattice:
/// diagonal (W/2) w_r, -t along x and -t_perp along y and z.
pub fn gen_anderson(params: &AndersonParams) -> Result<AndersonMatrix> {
    let n = check_dims(params.dims)?;
    if !(params.w >= 0.0) {
        return invalid(format!("disorder strength must be >= 0, got {}", params.w));
    }
    let disorder = anderson_disorder(n, params.seed);
    let half_w = params.w / 2.0;
    let hop = [-params.t, -params.t_perp, -params.t_perp];
    let couplings = Couplings {
        minus: hop,
        plus: hop,
    };
    let matrix = lattice(params.dims, |r| half_w * disorder[r], &couplings)?;
    Ok(AndersonMatrix { matrix, disorder })
}

/// 7-point stencil plus `round(n * fraction)` random long-range symmetric
/// couplings of value -1 between distinct sites. Repeated pairs are summed.
pub fn gen_irregular(dims: [usize; 3], fraction: f64, seed: u64) -> Result<CrsMatrix> {
    if !(0.0..=1.0).contains(&fraction) {
        return invalid(format!("edge fraction must be in [0, 1], got {fraction}"));
    }
    let base = gen_stencil(dims, StencilKind::Pt7)?;
    let n = base.n_rows();
    let n_extra = (n as f64 * fraction).round() as usize;
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
    let mut triplets: Vec<(usize, usize, f64)> = Vec::with_capacity(base.nnz() + 2 * n_extra);
    for r in 0..n {
        let (cols, vals) = base.row(r);
        triplets.extend(cols.iter().zip(vals).map(|(&c, &v)| (r, c as usize, v)));
    }
    if n > 1 {
        for _ in 0..n_extra {
            let u = (rng.next_u64() % n as u64) as usize;
            let mut v = (rng.next_u64() % (n as u64 - 1)) as usize;
            if v >= u {
                v += 1;
            }
            triplets.push((u, v, -1.0));
            triplets.push((v, u, -1.0));
        }
    }
    CrsMatrix::from_triplets(n, n, triplets)
}

//! (min,plus)-convolution of grid functions.
//!
//! `(f * g)[k] = min_{i+j=k} f[i] + g[j]`, with both operands `+∞` outside
//! their stored range. The quadratic [`conv_naive`] is the reference. The fast
//! path decomposes the second operand into maximal convex and concave runs
//! ([`decompose`]) and convolves every run against a convex first operand:
//!
//! * convex × convex: the result's slopes are the sorted merge of both slope
//!   sequences, so a single two-pointer sweep finds the optimal split of every
//!   output index.
//! * convex × concave: the result is a convex piece (a translate of `f`), a
//!   concave middle made of the segments of `g` placed at the breakpoints of
//!   `f` whose slopes bracket them, and a final convex piece (another translate
//!   of `f`). A single pointer into `f` moves monotonically down while the
//!   segments of `g` are visited in order, so the cost is `O(n + m)`.
//!
//! Every output sample is written as `f[i] + g[j]` for the selected pair, never
//! accumulated from slopes, so results agree with the naive minimum up to the
//! choice between pairs whose sums tie.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::GridFn;

/// Minimum amount of work (output samples × blocks) before block convolutions
/// are spread over the rayon pool.
const PARALLEL_WORK_THRESHOLD: usize = 1 << 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BlockKind {
    Convex,
    Concave,
}

/// A run of samples `start..=end` of a single convexity kind.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Block {
    pub kind: BlockKind,
    pub start: usize,
    pub end: usize,
}

impl Block {
    pub fn len(&self) -> usize {
        self.end - self.start + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// Partition of a grid function's index range into maximal convex and concave
/// runs. Adjacent blocks share their boundary sample.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockDecomposition {
    blocks: Vec<Block>,
    tolerance: f64,
}

impl BlockDecomposition {
    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    /// Number of blocks, the `c` of the `O(c·N)` cost bound.
    pub fn count(&self) -> usize {
        self.blocks.len()
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    pub fn kinds(&self) -> Vec<BlockKind> {
        self.blocks.iter().map(|b| b.kind).collect()
    }

    /// Verifies tiling, per-kind slope constraints and right-maximality
    /// against the samples the decomposition was computed from.
    pub fn check(&self, values: &[f64]) -> std::result::Result<(), String> {
        let n = values.len().saturating_sub(1);
        let eta = self.tolerance;
        let first = self.blocks.first().ok_or("empty decomposition")?;
        if first.start != 0 {
            return Err("first block does not start at 0".into());
        }
        if self.blocks.last().map(|b| b.end) != Some(n) {
            return Err("last block does not end at n".into());
        }
        let incr = |i: usize| (values[i + 1] - values[i]) - (values[i] - values[i - 1]);
        for (k, b) in self.blocks.iter().enumerate() {
            if n > 0 && b.start >= b.end {
                return Err(format!("block {k} holds no slope"));
            }
            if let Some(next) = self.blocks.get(k + 1) {
                if next.start != b.end {
                    return Err(format!("blocks {k} and {} do not share a sample", k + 1));
                }
            }
            for i in b.start + 1..b.end {
                if !admissible(b.kind, incr(i), eta) {
                    return Err(format!("block {k} violates its kind at sample {i}"));
                }
            }
            if b.end < n && b.end > b.start && admissible(b.kind, incr(b.end), eta) {
                return Err(format!("block {k} could be extended past {}", b.end));
            }
        }
        Ok(())
    }
}

/// Result of [`conv_fast`]: the convolution plus the block count and the
/// number of elementary index operations performed.
#[derive(Clone, Debug)]
pub struct FastConvolution {
    pub result: GridFn,
    pub blocks: usize,
    pub ops: u64,
}

fn admissible(kind: BlockKind, increment: f64, eta: f64) -> bool {
    match kind {
        BlockKind::Convex => increment >= -eta,
        BlockKind::Concave => increment <= eta,
    }
}

fn check_steps(f: &GridFn, g: &GridFn) -> Result<()> {
    let (a, b) = (f.step(), g.step());
    if (a - b).abs() > 1e-12 * a.max(b) {
        return Err(Error::invalid(format!("grid steps differ: {a} vs {b}")));
    }
    Ok(())
}

/// First interior sample where the slope sequence fails to be nondecreasing
/// by more than `tol`.
fn convexity_violation(v: &[f64], tol: f64) -> Option<usize> {
    (1..v.len().saturating_sub(1)).find(|&i| (v[i + 1] - v[i]) < (v[i] - v[i - 1]) - tol)
}

fn concavity_violation(v: &[f64], tol: f64) -> Option<usize> {
    (1..v.len().saturating_sub(1)).find(|&i| (v[i + 1] - v[i]) > (v[i] - v[i - 1]) + tol)
}

fn result_grid(f: &GridFn, g: &GridFn, values: Vec<f64>) -> GridFn {
    GridFn::from_parts(values, f.step(), f.origin() + g.origin(), false)
}

/// Quadratic-time (min,plus)-convolution.
pub fn conv_naive(f: &GridFn, g: &GridFn) -> Result<GridFn> {
    check_steps(f, g)?;
    let (fv, gv) = (f.values(), g.values());
    let mut out = vec![f64::INFINITY; fv.len() + gv.len() - 1];
    for (i, &a) in fv.iter().enumerate() {
        for (slot, &b) in out[i..].iter_mut().zip(gv) {
            let v = a + b;
            if v < *slot {
                *slot = v;
            }
        }
    }
    Ok(result_grid(f, g, out))
}

/// Convolution of two convex grid functions by slope merging.
pub fn conv_convex_convex(f: &GridFn, g: &GridFn) -> Result<GridFn> {
    check_steps(f, g)?;
    if let Some(i) = convexity_violation(f.values(), 0.0) {
        return Err(Error::invalid(format!("first operand not convex at index {i}")));
    }
    if let Some(i) = convexity_violation(g.values(), 0.0) {
        return Err(Error::invalid(format!("second operand not convex at index {i}")));
    }
    let mut out = vec![f64::INFINITY; f.len() + g.len() - 1];
    convex_convex_into(f.values(), g.values(), &mut out);
    Ok(result_grid(f, g, out))
}

/// Convolution of a convex `f` with a concave `g` in `O(n + m)`.
pub fn conv_convex_concave(f: &GridFn, g: &GridFn) -> Result<GridFn> {
    check_steps(f, g)?;
    if let Some(i) = convexity_violation(f.values(), 0.0) {
        return Err(Error::invalid(format!("first operand not convex at index {i}")));
    }
    if let Some(i) = concavity_violation(g.values(), 0.0) {
        return Err(Error::invalid(format!("second operand not concave at index {i}")));
    }
    let mut out = vec![f64::INFINITY; f.len() + g.len() - 1];
    convex_concave_into(f.values(), g.values(), &mut out);
    Ok(result_grid(f, g, out))
}

/// Sweeps the two slope sequences in increasing order, writing
/// `out[i+j] = min(out[i+j], f[i] + g[j])` along the merge path. Returns the
/// number of samples written.
///
/// The slopes of `g` are taken in stored order even when they are not sorted;
/// the written values are then still attainable sums, i.e. upper bounds of the
/// exact convolution.
pub(crate) fn convex_convex_into(f: &[f64], g: &[f64], out: &mut [f64]) -> u64 {
    let (n, m) = (f.len() - 1, g.len() - 1);
    debug_assert!(out.len() >= n + m + 1);
    let (mut i, mut j) = (0usize, 0usize);
    out[0] = out[0].min(f[0] + g[0]);
    while i + j < n + m {
        if i != n && (j == m || f[i + 1] - f[i] < g[j + 1] - g[j]) {
            i += 1;
        } else {
            j += 1;
        }
        let k = i + j;
        out[k] = out[k].min(f[i] + g[j]);
    }
    (n + m + 1) as u64
}

/// Convex `f` against concave `g`. Returns the number of elementary
/// operations (writes plus pointer moves).
pub(crate) fn convex_concave_into(f: &[f64], g: &[f64], out: &mut [f64]) -> u64 {
    let (n, m) = (f.len() - 1, g.len() - 1);
    debug_assert!(out.len() >= n + m + 1);
    let fs = |i: usize| f[i] - f[i - 1];
    let gs = |j: usize| g[j] - g[j - 1];
    let mut ops = 0u64;

    if m == 0 {
        for (slot, &a) in out.iter_mut().zip(f) {
            *slot = slot.min(a + g[0]);
        }
        return (n + 1) as u64;
    }

    // First convex part: the pieces of f steeper-down than g's first segment.
    let mut i = 0;
    while i < n && fs(i + 1) < gs(1) {
        i += 1;
    }
    for k in 0..=i {
        out[k] = out[k].min(f[k] + g[0]);
    }
    ops += (i + 1) as u64;

    // Concave part: segment j of g sits at the first breakpoint of f whose
    // outgoing slope is at least g's slope on that segment.
    for j in 1..=m {
        while i > 0 && fs(i) >= gs(j) {
            i -= 1;
            ops += 1;
        }
        out[i + j - 1] = out[i + j - 1].min(f[i] + g[j - 1]);
        out[i + j] = out[i + j].min(f[i] + g[j]);
        ops += 2;
    }

    // Second convex part: the remaining pieces of f after g's last sample.
    for k in i..=n {
        out[k + m] = out[k + m].min(f[k] + g[m]);
    }
    ops + (n - i + 1) as u64
}

/// Splits `u` into maximal convex and concave runs.
///
/// A run's kind is fixed by the first slope increment whose magnitude exceeds
/// `eta`; increments inside `[-eta, eta]` fit either kind and do not decide.
/// A run that never meets a deciding increment is convex. Convex runs accept
/// increments `>= -eta`, concave runs `<= eta`.
pub fn decompose(u: &GridFn, eta: f64) -> BlockDecomposition {
    decompose_values(u.values(), eta)
}

pub(crate) fn decompose_values(v: &[f64], eta: f64) -> BlockDecomposition {
    let eta = eta.max(0.0);
    let n = v.len() - 1;
    if n == 0 {
        return BlockDecomposition {
            blocks: vec![Block {
                kind: BlockKind::Convex,
                start: 0,
                end: 0,
            }],
            tolerance: eta,
        };
    }
    // Increment at interior sample i: slope(i+1) - slope(i).
    let incr = |i: usize| (v[i + 1] - v[i]) - (v[i] - v[i - 1]);
    let mut blocks = Vec::new();
    let mut start = 0;
    while start < n {
        let mut kind = BlockKind::Convex;
        let mut probe = start + 1;
        while probe < n {
            let d = incr(probe);
            if d > eta {
                break;
            }
            if d < -eta {
                kind = BlockKind::Concave;
                break;
            }
            probe += 1;
        }
        let mut end = start + 1;
        while end < n && admissible(kind, incr(end), eta) {
            end += 1;
        }
        blocks.push(Block { kind, start, end });
        start = end;
    }
    BlockDecomposition {
        blocks,
        tolerance: eta,
    }
}

/// Block-decomposed convolution of a convex `kernel` with an arbitrary `u`.
///
/// With `eta == 0` the result equals [`conv_naive`]. With `eta > 0` nearly
/// convex (or nearly concave) runs are treated as exactly convex (concave),
/// which yields fewer blocks and an upper approximation of the convolution.
pub fn conv_fast(kernel: &GridFn, u: &GridFn, eta: f64) -> Result<FastConvolution> {
    check_steps(kernel, u)?;
    if !(eta >= 0.0) {
        return Err(Error::invalid(format!("tolerance must be nonnegative, got {eta}")));
    }
    let scale = kernel.values().iter().fold(1.0f64, |a, v| a.max(v.abs()));
    if let Some(i) = convexity_violation(kernel.values(), 64.0 * f64::EPSILON * scale) {
        return Err(Error::invalid(format!("kernel not convex at index {i}")));
    }
    let mut fast = conv_fast_values(kernel.values(), u.values(), eta);
    fast.0.shrink_to_fit();
    Ok(FastConvolution {
        result: result_grid(kernel, u, fast.0),
        blocks: fast.1,
        ops: fast.2,
    })
}

/// Slice-level pipeline: returns (values, block count, op count).
pub(crate) fn conv_fast_values(kernel: &[f64], u: &[f64], eta: f64) -> (Vec<f64>, usize, u64) {
    let decomposition = decompose_values(u, eta);
    let blocks = decomposition.blocks();
    let out_len = kernel.len() + u.len() - 1;
    let run = |out: &mut [f64], b: &Block| -> u64 {
        let g = &u[b.start..=b.end];
        let dst = &mut out[b.start..b.start + kernel.len() + g.len() - 1];
        match b.kind {
            BlockKind::Convex => convex_convex_into(kernel, g, dst),
            BlockKind::Concave => convex_concave_into(kernel, g, dst),
        }
    };

    let work = blocks.len() * kernel.len() + u.len();
    let (values, ops) = if blocks.len() > 1
        && work >= PARALLEL_WORK_THRESHOLD
        && rayon::current_num_threads() > 1
    {
        // Min is exact, so the reduction order cannot change the result.
        blocks
            .par_iter()
            .fold(
                || (vec![f64::INFINITY; out_len], 0u64),
                |(mut out, ops), b| {
                    let o = run(&mut out, b);
                    (out, ops + o)
                },
            )
            .reduce(
                || (vec![f64::INFINITY; out_len], 0u64),
                |(mut a, oa), (b, ob)| {
                    for (x, y) in a.iter_mut().zip(&b) {
                        *x = x.min(*y);
                    }
                    (a, oa + ob)
                },
            )
    } else {
        let mut out = vec![f64::INFINITY; out_len];
        let ops = blocks.iter().map(|b| run(&mut out, b)).sum();
        (out, ops)
    };
    (values, blocks.len(), ops + u.len() as u64)
}

/// Pointwise minimum of grid functions placed at integer index offsets.
///
/// Sample `i` of a function with offset `o` lands on global index `o + i`; the
/// result starts at the smallest occupied global index. The union of the
/// occupied ranges must be contiguous.
pub fn min_pointwise(fns: &[(GridFn, isize)]) -> Result<GridFn> {
    let (first, first_offset) = fns
        .first()
        .ok_or_else(|| Error::invalid("min_pointwise needs at least one function"))?;
    for (f, _) in &fns[1..] {
        check_steps(first, f)?;
    }
    let lo = fns.iter().map(|(_, o)| *o).min().unwrap_or(0);
    let hi = fns
        .iter()
        .map(|(f, o)| o + f.len() as isize)
        .max()
        .unwrap_or(0);
    let mut out = vec![f64::INFINITY; (hi - lo) as usize];
    for (f, o) in fns {
        let base = (o - lo) as usize;
        for (slot, &v) in out[base..].iter_mut().zip(f.values()) {
            *slot = slot.min(v);
        }
    }
    if let Some(i) = out.iter().position(|v| v.is_infinite()) {
        return Err(Error::invalid(format!(
            "offset ranges leave a gap at global index {}",
            lo + i as isize
        )));
    }
    let origin = first.origin() + (lo - first_offset) as f64 * first.step();
    Ok(GridFn::from_parts(out, first.step(), origin, false))
}

//! Functional single-precision implementation of the Himeno benchmark: a
//! linear Poisson solve using a point-Jacobi iterative method over a 19-point
//! box stencil.
//!
//! Every arithmetic operation is `f32`; the per-cell update performs exactly
//! 13 multiplications and 21 additions/subtractions (34 flops). The residual
//! `gosa` is accumulated in a fixed, documented order so results are
//! bit-identical across runs.

use crate::error::{Error, Result};
use std::time::Instant;

/// Flops per interior cell per sweep: 13 multiplications and 21 add/subs.
pub const FLOPS_PER_CELL: u64 = 34;

/// Relaxation factor used by the reference initialization.
pub const OMEGA: f32 = 0.8;

/// Default width of the strided partial-sum array used for the residual.
pub const DEFAULT_GOSA_ACCUM_WIDTH: usize = 11;

/// Grid points per axis, including one boundary layer on each face.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct GridDims {
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
}

impl GridDims {
    /// Requires at least 3 points per axis (one interior cell).
    pub fn new(nx: usize, ny: usize, nz: usize) -> Result<Self> {
        if nx < 3 || ny < 3 || nz < 3 {
            return Err(Error::InvalidDims { nx, ny, nz });
        }
        Ok(GridDims { nx, ny, nz })
    }

    pub fn cell_count(&self) -> usize {
        self.nx * self.ny * self.nz
    }

    /// Cells updated per sweep: loops run over 1..=n-2 on each axis.
    pub fn interior_cells(&self) -> u64 {
        ((self.nx - 2) * (self.ny - 2) * (self.nz - 2)) as u64
    }

    #[inline]
    fn idx(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.ny + j) * self.nz + k
    }
}

/// Scalar per-cell field, k-fastest layout.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    dims: GridDims,
    data: Vec<f32>,
}

impl ScalarField {
    pub fn filled(dims: GridDims, value: f32) -> Self {
        ScalarField {
            dims,
            data: vec![value; dims.cell_count()],
        }
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize, k: usize) -> f32 {
        self.data[self.dims.idx(i, j, k)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, k: usize, value: f32) {
        let id = self.dims.idx(i, j, k);
        self.data[id] = value;
    }

    /// The nz-long row at (i, j).
    #[inline]
    fn row(&self, i: usize, j: usize) -> &[f32] {
        let base = self.dims.idx(i, j, 0);
        &self.data[base..base + self.dims.nz]
    }

    #[inline]
    fn row_mut(&mut self, i: usize, j: usize) -> &mut [f32] {
        let base = self.dims.idx(i, j, 0);
        let nz = self.dims.nz;
        &mut self.data[base..base + nz]
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.data
    }
}

/// Multi-component per-cell coefficient field, component-major then k-fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct CoeffField {
    dims: GridDims,
    components: usize,
    data: Vec<f32>,
}

impl CoeffField {
    pub fn filled(dims: GridDims, components: usize, value: f32) -> Self {
        CoeffField {
            dims,
            components,
            data: vec![value; components * dims.cell_count()],
        }
    }

    #[inline]
    pub fn at(&self, c: usize, i: usize, j: usize, k: usize) -> f32 {
        self.data[c * self.dims.cell_count() + self.dims.idx(i, j, k)]
    }

    pub fn fill_component(&mut self, c: usize, value: f32) {
        let n = self.dims.cell_count();
        self.data[c * n..(c + 1) * n].fill(value);
    }

    /// The nz-long row of component `c` at (i, j).
    #[inline]
    fn row(&self, c: usize, i: usize, j: usize) -> &[f32] {
        let base = c * self.dims.cell_count() + self.dims.idx(i, j, 0);
        &self.data[base..base + self.dims.nz]
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.data
    }
}

/// The benchmark's seven data structures plus the relaxation factor.
///
/// `a` carries four coefficients per cell, `b` and `c` three each; `p` is the
/// pressure, `wrk1` the source term, `bnd` the boundary control field and
/// `wrk2` the result array sweeps write into.
#[derive(Debug, Clone)]
pub struct HimenoProblem {
    pub dims: GridDims,
    pub a: CoeffField,
    pub b: CoeffField,
    pub c: CoeffField,
    pub p: ScalarField,
    pub wrk1: ScalarField,
    pub bnd: ScalarField,
    pub wrk2: ScalarField,
    pub omega: f32,
    /// Width of the strided partial-sum array for the residual.
    pub gosa_accum_width: usize,
}

/// Outcome of one Jacobi sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepResult {
    /// Sum of squared per-cell corrections, single precision.
    pub gosa: f32,
    pub cells_updated: u64,
}

/// Result of a timed multi-iteration benchmark run.
#[derive(Debug, Clone)]
pub struct BenchmarkRun {
    pub gosa_trace: Vec<f32>,
    pub elapsed_seconds: f64,
    pub mflops: f64,
    pub total_flops: u64,
}

/// Builds the reference-initialized problem: a=(1,1,1,1/6), b=0, c=1,
/// `p[i][j][k]` = k^2/(nz-1)^2, wrk1=0, bnd=1, wrk2=0, omega=0.8.
pub fn init_problem(dims: GridDims) -> HimenoProblem {
    let mut a = CoeffField::filled(dims, 4, 1.0);
    a.fill_component(3, 1.0f32 / 6.0f32);
    let b = CoeffField::filled(dims, 3, 0.0);
    let c = CoeffField::filled(dims, 3, 1.0);

    let mut p = ScalarField::filled(dims, 0.0);
    let denom = ((dims.nz - 1) * (dims.nz - 1)) as f32;
    for i in 0..dims.nx {
        for j in 0..dims.ny {
            for k in 0..dims.nz {
                p.set(i, j, k, (k * k) as f32 / denom);
            }
        }
    }

    HimenoProblem {
        dims,
        a,
        b,
        c,
        p,
        wrk1: ScalarField::filled(dims, 0.0),
        bnd: ScalarField::filled(dims, 1.0),
        wrk2: ScalarField::filled(dims, 0.0),
        omega: OMEGA,
        gosa_accum_width: DEFAULT_GOSA_ACCUM_WIDTH,
    }
}

/// The 19-point stencil kernel for one cell. Shared by `cell_update` and
/// `jacobi_sweep` so both take the identical floating-point path.
#[inline]
fn cell_kernel(pr: &HimenoProblem, i: usize, j: usize, k: usize) -> (f32, f32) {
    let p = &pr.p;
    let s0 = pr.a.at(0, i, j, k) * p.at(i + 1, j, k)
        + pr.a.at(1, i, j, k) * p.at(i, j + 1, k)
        + pr.a.at(2, i, j, k) * p.at(i, j, k + 1)
        + pr.b.at(0, i, j, k)
            * (p.at(i + 1, j + 1, k) - p.at(i + 1, j - 1, k) - p.at(i - 1, j + 1, k)
                + p.at(i - 1, j - 1, k))
        + pr.b.at(1, i, j, k)
            * (p.at(i, j + 1, k + 1) - p.at(i, j - 1, k + 1) - p.at(i, j + 1, k - 1)
                + p.at(i, j - 1, k - 1))
        + pr.b.at(2, i, j, k)
            * (p.at(i + 1, j, k + 1) - p.at(i - 1, j, k + 1) - p.at(i + 1, j, k - 1)
                + p.at(i - 1, j, k - 1))
        + pr.c.at(0, i, j, k) * p.at(i - 1, j, k)
        + pr.c.at(1, i, j, k) * p.at(i, j - 1, k)
        + pr.c.at(2, i, j, k) * p.at(i, j, k - 1)
        + pr.wrk1.at(i, j, k);
    let ss = (s0 * pr.a.at(3, i, j, k) - p.at(i, j, k)) * pr.bnd.at(i, j, k);
    let new_value = p.at(i, j, k) + pr.omega * ss;
    (ss, new_value)
}

/// Computes the correction `ss` and the relaxed new value for one interior
/// cell without touching the problem state.
pub fn cell_update(problem: &HimenoProblem, i: usize, j: usize, k: usize) -> Result<(f32, f32)> {
    let d = problem.dims;
    if i < 1 || i > d.nx - 2 || j < 1 || j > d.ny - 2 || k < 1 || k > d.nz - 2 {
        return Err(Error::OutOfRange { i, j, k });
    }
    Ok(cell_kernel(problem, i, j, k))
}

/// One Jacobi sweep: writes new values into the interior of `wrk2`, leaves
/// `p` and all boundaries untouched, and returns the residual.
///
/// The residual is accumulated into a strided partial-sum array of width
/// `gosa_accum_width` (cell index modulo width, flat k-fastest traversal)
/// which is then reduced in index order. This mirrors an unrolled hardware
/// accumulator and fixes the accumulation order.
pub fn jacobi_sweep(problem: &mut HimenoProblem) -> SweepResult {
    let d = problem.dims;
    let width = problem.gosa_accum_width.max(1);
    let mut partials = vec![0.0f32; width];
    let mut flat = 0usize;
    let omega = problem.omega;

    // Row-sliced form of the same kernel, same operation order as
    // `cell_update` (the oracle tests pin bit equality of the results).
    let mut staging = vec![0.0f32; d.nz];
    for i in 1..d.nx - 1 {
        for j in 1..d.ny - 1 {
            let p_c = problem.p.row(i, j);
            let p_n = problem.p.row(i + 1, j);
            let p_s = problem.p.row(i - 1, j);
            let p_e = problem.p.row(i, j + 1);
            let p_w = problem.p.row(i, j - 1);
            let p_ne = problem.p.row(i + 1, j + 1);
            let p_nw = problem.p.row(i + 1, j - 1);
            let p_se = problem.p.row(i - 1, j + 1);
            let p_sw = problem.p.row(i - 1, j - 1);
            let a0 = problem.a.row(0, i, j);
            let a1 = problem.a.row(1, i, j);
            let a2 = problem.a.row(2, i, j);
            let a3 = problem.a.row(3, i, j);
            let b0 = problem.b.row(0, i, j);
            let b1 = problem.b.row(1, i, j);
            let b2 = problem.b.row(2, i, j);
            let c0 = problem.c.row(0, i, j);
            let c1 = problem.c.row(1, i, j);
            let c2 = problem.c.row(2, i, j);
            let wrk1 = problem.wrk1.row(i, j);
            let bnd = problem.bnd.row(i, j);

            for k in 1..d.nz - 1 {
                let s0 = a0[k] * p_n[k]
                    + a1[k] * p_e[k]
                    + a2[k] * p_c[k + 1]
                    + b0[k] * (p_ne[k] - p_nw[k] - p_se[k] + p_sw[k])
                    + b1[k] * (p_e[k + 1] - p_w[k + 1] - p_e[k - 1] + p_w[k - 1])
                    + b2[k] * (p_n[k + 1] - p_s[k + 1] - p_n[k - 1] + p_s[k - 1])
                    + c0[k] * p_s[k]
                    + c1[k] * p_w[k]
                    + c2[k] * p_c[k - 1]
                    + wrk1[k];
                let ss = (s0 * a3[k] - p_c[k]) * bnd[k];
                partials[flat % width] += ss * ss;
                flat += 1;
                staging[k] = p_c[k] + omega * ss;
            }
            problem.wrk2.row_mut(i, j)[1..d.nz - 1].copy_from_slice(&staging[1..d.nz - 1]);
        }
    }

    let mut gosa = 0.0f32;
    for v in &partials {
        gosa += *v;
    }
    SweepResult {
        gosa,
        cells_updated: flat as u64,
    }
}

/// Copies the interior of `wrk2` back into `p`; boundaries stay unchanged.
pub fn copy_back(problem: &mut HimenoProblem) {
    let d = problem.dims;
    for i in 1..d.nx - 1 {
        for j in 1..d.ny - 1 {
            for k in 1..d.nz - 1 {
                let v = problem.wrk2.at(i, j, k);
                problem.p.set(i, j, k, v);
            }
        }
    }
}

/// Total floating-point operations for a full run.
pub fn total_flops(dims: GridDims, iterations: u64) -> u64 {
    FLOPS_PER_CELL * dims.interior_cells() * iterations
}

/// MFLOPs metric: 34 * interior cells * iterations / seconds / 1e6.
pub fn mflops(dims: GridDims, iterations: u64, elapsed_seconds: f64) -> Result<f64> {
    if elapsed_seconds <= 0.0 {
        return Err(Error::NonPositiveTime(elapsed_seconds));
    }
    Ok(total_flops(dims, iterations) as f64 / elapsed_seconds / 1.0e6)
}

/// Runs `iterations` sweeps with copy-back on a reference-initialized grid,
/// timing the loop and reporting the per-iteration residual trace.
pub fn run_benchmark(dims: GridDims, iterations: u64) -> BenchmarkRun {
    let mut problem = init_problem(dims);
    let mut trace = Vec::with_capacity(iterations as usize);
    let start = Instant::now();
    for _ in 0..iterations {
        let result = jacobi_sweep(&mut problem);
        copy_back(&mut problem);
        trace.push(result.gosa);
    }
    let elapsed = start.elapsed().as_secs_f64().max(f64::MIN_POSITIVE);
    BenchmarkRun {
        gosa_trace: trace,
        elapsed_seconds: elapsed,
        mflops: mflops(dims, iterations, elapsed).unwrap_or(0.0),
        total_flops: total_flops(dims, iterations),
    }
}

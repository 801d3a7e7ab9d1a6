//! Linear two-point boundary value problems
//!
//! Solves
//!
//! ```text
//! y'(t) = A(t) y(t) + q(t),   t in [a, b]
//! B_a y(a) + B_{b-1} y(t_N) + B_b y(b) = d
//! ```
//!
//! on a mesh `a = t_1 < ... < t_{N+1} = b`, either with the one-step midpoint
//! block scheme or with multiple shooting (fundamental plus particular solution
//! per mesh interval). Both routes end in the same block bidiagonal system with
//! one full boundary row, which is eliminated block by block from the top so the
//! only dense solve left is the `n x n` boundary system for `y_1`.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use thiserror::Error;

/// Relative pivot size below which a block is treated as singular.
pub const PIVOT_TOLERANCE: f64 = 1e-12;

/// RK4 substeps per mesh interval inside multiple shooting.
const SHOOTING_SUBSTEPS: usize = 4;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BvpError {
    #[error("mesh needs at least one interval, got {nodes} node(s)")]
    MeshTooCoarse { nodes: usize },
    #[error("mesh nodes must be finite and strictly increasing (node {index})")]
    InvalidMesh { index: usize },
    #[error("dimension mismatch: {what} has shape {rows}x{cols}, expected {expected}")]
    DimensionMismatch {
        what: &'static str,
        rows: usize,
        cols: usize,
        expected: usize,
    },
    #[error("singular block system ({context}): pivot {pivot:e} vs scale {scale:e}")]
    SingularSystem {
        context: &'static str,
        pivot: f64,
        scale: f64,
    },
    #[error("interval integration failed on [{t0}, {t1}]: non-finite state")]
    IntegrationFailure { t0: f64, t1: f64 },
}

/// Ordered parameter nodes `t_1 < t_2 < ... < t_{N+1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    nodes: Vec<f64>,
}

impl Mesh {
    pub fn new(nodes: Vec<f64>) -> Result<Self, BvpError> {
        if nodes.len() < 2 {
            return Err(BvpError::MeshTooCoarse { nodes: nodes.len() });
        }
        for (i, w) in nodes.windows(2).enumerate() {
            if !(w[0].is_finite() && w[1].is_finite() && w[1] > w[0]) {
                return Err(BvpError::InvalidMesh { index: i + 1 });
            }
        }
        Ok(Self { nodes })
    }

    /// `intervals + 1` equally spaced nodes on `[a, b]`.
    pub fn uniform(a: f64, b: f64, intervals: usize) -> Result<Self, BvpError> {
        if intervals < 1 {
            return Err(BvpError::MeshTooCoarse {
                nodes: intervals + 1,
            });
        }
        let h = (b - a) / intervals as f64;
        let mut nodes: Vec<f64> = (0..=intervals).map(|i| a + h * i as f64).collect();
        // pin the endpoint exactly
        nodes[intervals] = b;
        Self::new(nodes)
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn intervals(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn start(&self) -> f64 {
        self.nodes[0]
    }

    pub fn end(&self) -> f64 {
        self.nodes[self.nodes.len() - 1]
    }

    /// `h_i = t_{i+1} - t_i` (zero based).
    pub fn step(&self, i: usize) -> f64 {
        self.nodes[i + 1] - self.nodes[i]
    }

    /// `t_{i+1/2}` (zero based).
    pub fn midpoint(&self, i: usize) -> f64 {
        self.nodes[i] + 0.5 * self.step(i)
    }
}

type Coefficients<'a> = dyn Fn(f64) -> (DMatrix<f64>, DVector<f64>) + Send + Sync + 'a;

/// Linear BVP `y' = A(t) y + q(t)`, `B_a y(a) + B_b y(b) = d`.
///
/// The coefficient callback returns `(A(t), q(t))` together; it must be defined
/// on the whole mesh interval.
pub struct LinearBvp<'a> {
    dim: usize,
    coefficients: Box<Coefficients<'a>>,
    pub ba: DMatrix<f64>,
    pub bb: DMatrix<f64>,
    pub d: DVector<f64>,
}

impl<'a> LinearBvp<'a> {
    pub fn new<F>(
        dim: usize,
        coefficients: F,
        ba: DMatrix<f64>,
        bb: DMatrix<f64>,
        d: DVector<f64>,
    ) -> Result<Self, BvpError>
    where
        F: Fn(f64) -> (DMatrix<f64>, DVector<f64>) + Send + Sync + 'a,
    {
        check_square("B_a", &ba, dim)?;
        check_square("B_b", &bb, dim)?;
        if d.len() != dim {
            return Err(BvpError::DimensionMismatch {
                what: "d",
                rows: d.len(),
                cols: 1,
                expected: dim,
            });
        }
        Ok(Self {
            dim,
            coefficients: Box::new(coefficients),
            ba,
            bb,
            d,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn coefficients(&self, t: f64) -> Result<(DMatrix<f64>, DVector<f64>), BvpError> {
        let (a, q) = (self.coefficients)(t);
        check_square("A(t)", &a, self.dim)?;
        if q.len() != self.dim {
            return Err(BvpError::DimensionMismatch {
                what: "q(t)",
                rows: q.len(),
                cols: 1,
                expected: self.dim,
            });
        }
        Ok((a, q))
    }
}

impl std::fmt::Debug for LinearBvp<'_> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LinearBvp")
            .field("dim", &self.dim)
            .field("ba", &self.ba)
            .field("bb", &self.bb)
            .field("d", &self.d)
            .finish_non_exhaustive()
    }
}

/// Extra boundary block `B_{b-1}` acting on the second-to-last node.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtendedBoundary {
    pub bbm1: DMatrix<f64>,
}

impl ExtendedBoundary {
    pub fn none(dim: usize) -> Self {
        Self {
            bbm1: DMatrix::zeros(dim, dim),
        }
    }
}

/// Node values `y_1 ... y_{N+1}` of a solved BVP.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub mesh: Mesh,
    pub values: Vec<DVector<f64>>,
    /// Relative residual of the assembled linear system.
    pub residual: f64,
}

impl Trajectory {
    /// Component `k` at every node.
    pub fn component(&self, k: usize) -> Vec<f64> {
        self.values.iter().map(|v| v[k]).collect()
    }

    pub fn last(&self) -> &DVector<f64> {
        &self.values[self.values.len() - 1]
    }
}

fn check_square(what: &'static str, m: &DMatrix<f64>, dim: usize) -> Result<(), BvpError> {
    if m.nrows() != dim || m.ncols() != dim {
        return Err(BvpError::DimensionMismatch {
            what,
            rows: m.nrows(),
            cols: m.ncols(),
            expected: dim,
        });
    }
    Ok(())
}

fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

/// LU solve of a square block with an explicit relative pivot check.
fn solve_checked(
    m: &DMatrix<f64>,
    rhs: &DMatrix<f64>,
    context: &'static str,
) -> Result<DMatrix<f64>, BvpError> {
    let scale = max_abs(m);
    let lu = m.clone().lu();
    let u = lu.u();
    let pivot = (0..u.nrows()).fold(f64::INFINITY, |acc, i| acc.min(u[(i, i)].abs()));
    if !(scale > 0.0) || !(pivot > PIVOT_TOLERANCE * scale) {
        return Err(BvpError::SingularSystem {
            context,
            pivot,
            scale,
        });
    }
    lu.solve(rhs).ok_or(BvpError::SingularSystem {
        context,
        pivot,
        scale,
    })
}

/// One block row `S_i y_i + R_i y_{i+1} = c_i` of the assembled system.
struct BlockRow {
    s: DMatrix<f64>,
    r: DMatrix<f64>,
    c: DVector<f64>,
}

/// Eliminates the block bidiagonal system top-down, keeping `y_1` as the free
/// unknown, then solves the boundary row for it and sweeps forward.
fn solve_block_system(
    dim: usize,
    rows: &[BlockRow],
    ba: &DMatrix<f64>,
    bbm1: &DMatrix<f64>,
    bb: &DMatrix<f64>,
    d: &DVector<f64>,
) -> Result<(Vec<DVector<f64>>, f64), BvpError> {
    let n_int = rows.len();
    // y_{i+1} = phi_i y_i + g_i
    let mut phi = Vec::with_capacity(n_int);
    let mut g = Vec::with_capacity(n_int);
    for row in rows {
        let mut rhs = DMatrix::zeros(dim, dim + 1);
        rhs.view_mut((0, 0), (dim, dim)).copy_from(&(-&row.s));
        rhs.set_column(dim, &row.c);
        let sol = solve_checked(&row.r, &rhs, "interval block R_i")?;
        phi.push(sol.columns(0, dim).into_owned());
        g.push(DVector::from_column_slice(sol.column(dim).as_slice()));
    }

    // y_i = P_i y_1 + w_i; only P_N, P_{N+1} are needed.
    let mut p = DMatrix::<f64>::identity(dim, dim);
    let mut w = DVector::<f64>::zeros(dim);
    let mut p_prev = p.clone();
    let mut w_prev = w.clone();
    for (ph, gi) in phi.iter().zip(&g) {
        p_prev = p.clone();
        w_prev = w.clone();
        p = ph * &p;
        w = ph * &w + gi;
    }
    let m = ba + bbm1 * &p_prev + bb * &p;
    let rhs = d - bbm1 * &w_prev - bb * &w;
    let y1 = solve_checked(
        &m,
        &DMatrix::from_column_slice(dim, 1, rhs.as_slice()),
        "boundary",
    )?;
    let mut values = Vec::with_capacity(n_int + 1);
    values.push(DVector::from_column_slice(y1.as_slice()));
    for (ph, gi) in phi.iter().zip(&g) {
        let next = ph * values.last().unwrap() + gi;
        values.push(next);
    }

    let residual = assembled_residual(rows, ba, bbm1, bb, d, &values);
    Ok((values, residual))
}

/// Max-row residual of the assembled system, relative to `|M||y| + |rhs|`.
fn assembled_residual(
    rows: &[BlockRow],
    ba: &DMatrix<f64>,
    bbm1: &DMatrix<f64>,
    bb: &DMatrix<f64>,
    d: &DVector<f64>,
    y: &[DVector<f64>],
) -> f64 {
    let abs_mv = |m: &DMatrix<f64>, v: &DVector<f64>| m.abs() * v.abs();
    let mut worst = 0.0_f64;
    let mut scale = 0.0_f64;
    for (i, row) in rows.iter().enumerate() {
        let res = &row.s * &y[i] + &row.r * &y[i + 1] - &row.c;
        let mag = abs_mv(&row.s, &y[i]) + abs_mv(&row.r, &y[i + 1]) + row.c.abs();
        worst = worst.max(res.amax());
        scale = scale.max(mag.amax());
    }
    let n = y.len() - 1;
    let res = ba * &y[0] + bbm1 * &y[n - 1] + bb * &y[n] - d;
    let mag = abs_mv(ba, &y[0]) + abs_mv(bbm1, &y[n - 1]) + abs_mv(bb, &y[n]) + d.abs();
    worst = worst.max(res.amax());
    scale = scale.max(mag.amax());
    if scale > 0.0 {
        worst / scale
    } else {
        worst
    }
}

/// Midpoint block scheme:
/// `S_i = -I/h_i - A(t_{i+1/2})/2`, `R_i = I/h_i - A(t_{i+1/2})/2`, right-hand
/// side `q(t_{i+1/2})`, closed by the boundary row `[B_a, 0, ..., B_{b-1}, B_b]`.
pub fn solve_block_midpoint(
    bvp: &LinearBvp<'_>,
    ext: &ExtendedBoundary,
    mesh: &Mesh,
) -> Result<Trajectory, BvpError> {
    let n = bvp.dim();
    check_square("B_{b-1}", &ext.bbm1, n)?;
    let eye = DMatrix::<f64>::identity(n, n);
    let rows = (0..mesh.intervals())
        .map(|i| {
            let h = mesh.step(i);
            let (a, q) = bvp.coefficients(mesh.midpoint(i))?;
            let half_a = a * 0.5;
            Ok(BlockRow {
                s: -&eye / h - &half_a,
                r: &eye / h - &half_a,
                c: q,
            })
        })
        .collect::<Result<Vec<_>, BvpError>>()?;
    let (values, residual) = solve_block_system(n, &rows, &bvp.ba, &ext.bbm1, &bvp.bb, &bvp.d)?;
    Ok(Trajectory {
        mesh: mesh.clone(),
        values,
        residual,
    })
}

/// Fundamental matrix `Y(t_{i+1})` (with `Y(t_i) = I`) and particular solution
/// `v(t_{i+1})` (with `v(t_i) = 0`) on one interval, classical RK4.
fn integrate_interval(
    bvp: &LinearBvp<'_>,
    t0: f64,
    t1: f64,
) -> Result<(DMatrix<f64>, DVector<f64>), BvpError> {
    let n = bvp.dim();
    // augmented state [Y | v]
    let mut state = DMatrix::<f64>::zeros(n, n + 1);
    state.view_mut((0, 0), (n, n)).fill_with_identity();
    let rhs = |t: f64, s: &DMatrix<f64>| -> Result<DMatrix<f64>, BvpError> {
        let (a, q) = bvp.coefficients(t)?;
        let mut ds = &a * s;
        let mut last = ds.column_mut(n);
        last += &q;
        Ok(ds)
    };
    let h = (t1 - t0) / SHOOTING_SUBSTEPS as f64;
    for k in 0..SHOOTING_SUBSTEPS {
        let t = t0 + h * k as f64;
        let k1 = rhs(t, &state)?;
        let k2 = rhs(t + 0.5 * h, &(&state + &k1 * (0.5 * h)))?;
        let k3 = rhs(t + 0.5 * h, &(&state + &k2 * (0.5 * h)))?;
        let k4 = rhs(t + h, &(&state + &k3 * h))?;
        state += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
    }
    if state.iter().any(|v| !v.is_finite()) {
        return Err(BvpError::IntegrationFailure { t0, t1 });
    }
    let y = state.columns(0, n).into_owned();
    let v = DVector::from_column_slice(state.column(n).as_slice());
    Ok((y, v))
}

/// Multiple shooting: on every interval the solution is `Y_i(t) s_i + v_i(t)`;
/// continuity `s_{i+1} = Y_i(t_{i+1}) s_i + v_i(t_{i+1})` and the boundary
/// conditions determine the `s_i`, which are the node values.
pub fn solve_multiple_shooting(bvp: &LinearBvp<'_>, mesh: &Mesh) -> Result<Trajectory, BvpError> {
    let n = bvp.dim();
    let eye = DMatrix::<f64>::identity(n, n);
    let rows = (0..mesh.intervals())
        .into_par_iter()
        .map(|i| {
            let (y, v) = integrate_interval(bvp, mesh.nodes()[i], mesh.nodes()[i + 1])?;
            Ok(BlockRow {
                s: -y,
                r: eye.clone(),
                c: v,
            })
        })
        .collect::<Result<Vec<_>, BvpError>>()?;
    let zero = DMatrix::zeros(n, n);
    let (values, residual) = solve_block_system(n, &rows, &bvp.ba, &zero, &bvp.bb, &bvp.d)?;
    Ok(Trajectory {
        mesh: mesh.clone(),
        values,
        residual,
    })
}

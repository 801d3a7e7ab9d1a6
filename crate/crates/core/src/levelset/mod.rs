//! Far-field transport of bubble interfaces.
//!
//! The interfaces are the zero level set of a scalar field `u` on a uniform
//! node grid, with bubble interiors where `u < 0`. The field follows
//!
//! ```text
//! u_t + v · ∇u + F₀ |∇u| = 0
//! ```
//!
//! discretized with first-order upwind differences and the Godunov gradient
//! for the normal-speed term. Edges use zero-gradient (copy) extrapolation.

mod components;
pub mod cylindrical;
pub mod snapshot;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::shape_fit::EllipseParams;

pub use components::{label_components, Component};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LevelSetError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("time step {dt:e} exceeds the stability bound {limit:e}")]
    CflViolation { dt: f64, limit: f64 },
    #[error("no bubbles to initialize")]
    EmptyBubbleList,
    #[error("bubble {index} centered at ({x}, {y}) lies outside the grid")]
    BubbleOutsideGrid { index: usize, x: f64, y: f64 },
    #[error("invalid transport parameters: {0}")]
    InvalidTransport(String),
    #[error("field has {got} values, grid needs {expected}")]
    SizeMismatch { got: usize, expected: usize },
}

/// Uniform grid of `nx × ny` nodes; node `(i, j)` sits at
/// `origin + (i·dx, j·dy)` with `dx = (extent.0 - origin.0) / nx`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid2D {
    pub nx: usize,
    pub ny: usize,
    pub origin: (f64, f64),
    pub extent: (f64, f64),
}

impl Grid2D {
    pub fn new(
        nx: usize,
        ny: usize,
        origin: (f64, f64),
        extent: (f64, f64),
    ) -> Result<Self, LevelSetError> {
        let grid = Self {
            nx,
            ny,
            origin,
            extent,
        };
        grid.validate()?;
        Ok(grid)
    }

    pub fn validate(&self) -> Result<(), LevelSetError> {
        if self.nx < 3 || self.ny < 3 {
            return Err(LevelSetError::InvalidGrid(format!(
                "need at least 3 x 3 nodes, got {} x {}",
                self.nx, self.ny
            )));
        }
        if !(self.dx() > 0.0)
            || !(self.dy() > 0.0)
            || !self.dx().is_finite()
            || !self.dy().is_finite()
        {
            return Err(LevelSetError::InvalidGrid(format!(
                "extent {:?} must lie above and right of origin {:?}",
                self.extent, self.origin
            )));
        }
        Ok(())
    }

    pub fn dx(&self) -> f64 {
        (self.extent.0 - self.origin.0) / self.nx as f64
    }

    pub fn dy(&self) -> f64 {
        (self.extent.1 - self.origin.1) / self.ny as f64
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Row-major index, `j` selecting the row.
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    pub fn x(&self, i: usize) -> f64 {
        self.origin.0 + i as f64 * self.dx()
    }

    pub fn y(&self, j: usize) -> f64 {
        self.origin.1 + j as f64 * self.dy()
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.origin.0 && x <= self.extent.0 && y >= self.origin.1 && y <= self.extent.1
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LevelSetField {
    pub grid: Grid2D,
    /// Row-major values, see [`Grid2D::index`].
    pub u: Vec<f64>,
    pub time: f64,
}

impl LevelSetField {
    pub fn new(grid: Grid2D, u: Vec<f64>, time: f64) -> Result<Self, LevelSetError> {
        grid.validate()?;
        if u.len() != grid.len() {
            return Err(LevelSetError::SizeMismatch {
                got: u.len(),
                expected: grid.len(),
            });
        }
        Ok(Self { grid, u, time })
    }

    /// Field sampled from `f(x, y)`.
    pub fn from_fn(grid: Grid2D, f: impl Fn(f64, f64) -> f64) -> Result<Self, LevelSetError> {
        grid.validate()?;
        let u = (0..grid.ny)
            .flat_map(|j| (0..grid.nx).map(move |i| (i, j)))
            .map(|(i, j)| f(grid.x(i), grid.y(j)))
            .collect();
        Ok(Self { grid, u, time: 0.0 })
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.u[self.grid.index(i, j)]
    }

    /// Area of `{u < 0}` counted by nodes.
    pub fn interior_area(&self) -> f64 {
        self.u.iter().filter(|&&v| v < 0.0).count() as f64 * self.grid.dx() * self.grid.dy()
    }

    /// Mean node position of `{u < 0}`, or `None` if the region is empty.
    pub fn interior_centroid(&self) -> Option<(f64, f64)> {
        let g = &self.grid;
        let (mut sx, mut sy, mut count) = (0.0, 0.0, 0usize);
        for j in 0..g.ny {
            for i in 0..g.nx {
                if self.at(i, j) < 0.0 {
                    sx += g.x(i);
                    sy += g.y(j);
                    count += 1;
                }
            }
        }
        (count > 0).then(|| (sx / count as f64, sy / count as f64))
    }

    /// Largest `|∇u|` (central differences) over nodes adjacent to a sign
    /// change. Reports how far the field has drifted from a distance function.
    pub fn max_gradient_on_front(&self) -> f64 {
        let g = &self.grid;
        let mut worst = 0.0_f64;
        for j in 1..g.ny - 1 {
            for i in 1..g.nx - 1 {
                let c = self.at(i, j);
                let near = [
                    self.at(i - 1, j),
                    self.at(i + 1, j),
                    self.at(i, j - 1),
                    self.at(i, j + 1),
                ]
                .iter()
                .any(|&n| (n < 0.0) != (c < 0.0));
                if near {
                    let gx = (self.at(i + 1, j) - self.at(i - 1, j)) / (2.0 * g.dx());
                    let gy = (self.at(i, j + 1) - self.at(i, j - 1)) / (2.0 * g.dy());
                    worst = worst.max(gx.hypot(gy));
                }
            }
        }
        worst
    }
}

/// Advection velocity and outward normal speed, all non-negative.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransportParams {
    pub velocity: (f64, f64),
    pub normal_speed: f64,
}

impl TransportParams {
    pub fn validate(&self) -> Result<(), LevelSetError> {
        let (vx, vy) = self.velocity;
        if [vx, vy, self.normal_speed]
            .iter()
            .all(|s| *s >= 0.0 && s.is_finite())
        {
            Ok(())
        } else {
            Err(LevelSetError::InvalidTransport(format!(
                "speeds must be finite and non-negative, got v = ({vx}, {vy}), F0 = {}",
                self.normal_speed
            )))
        }
    }
}

/// Sign of the normal-speed term in the explicit update.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NormalTermSign {
    /// `- Δt F₀ |∇u|`: interiors grow outward at speed `F₀`.
    #[default]
    Pde,
    /// `+ Δt F₀ |∇u|`: interiors shrink.
    Literal,
}

impl NormalTermSign {
    fn factor(self) -> f64 {
        match self {
            NormalTermSign::Pde => -1.0,
            NormalTermSign::Literal => 1.0,
        }
    }
}

/// One-sided differences `(D⁻x, D⁺x, D⁻y, D⁺y)` at node `(i, j)`, with
/// out-of-grid neighbours replaced by the node itself.
pub fn upwind_diffs(field: &LevelSetField, i: usize, j: usize) -> (f64, f64, f64, f64) {
    let g = &field.grid;
    let c = field.at(i, j);
    let w = if i > 0 { field.at(i - 1, j) } else { c };
    let e = if i + 1 < g.nx { field.at(i + 1, j) } else { c };
    let s = if j > 0 { field.at(i, j - 1) } else { c };
    let n = if j + 1 < g.ny { field.at(i, j + 1) } else { c };
    let (dx, dy) = (g.dx(), g.dy());
    ((c - w) / dx, (e - c) / dx, (c - s) / dy, (n - c) / dy)
}

/// Godunov gradient magnitude for outward motion:
/// `sqrt(max(D⁻x,0)² + min(D⁺x,0)² + max(D⁻y,0)² + min(D⁺y,0)²)`.
pub fn godunov_grad_mag(field: &LevelSetField, i: usize, j: usize) -> f64 {
    let (dmx, dpx, dmy, dpy) = upwind_diffs(field, i, j);
    godunov(dmx, dpx, dmy, dpy)
}

fn godunov(dmx: f64, dpx: f64, dmy: f64, dpy: f64) -> f64 {
    (dmx.max(0.0).powi(2) + dpx.min(0.0).powi(2) + dmy.max(0.0).powi(2) + dpy.min(0.0).powi(2))
        .sqrt()
}

/// Stable step `0.9 / (vx/dx + vy/dy + F₀ sqrt(1/dx² + 1/dy²))`; infinite when
/// nothing moves.
pub fn cfl_dt(grid: &Grid2D, p: &TransportParams) -> f64 {
    let (dx, dy) = (grid.dx(), grid.dy());
    let rate = p.velocity.0 / dx
        + p.velocity.1 / dy
        + p.normal_speed * (1.0 / (dx * dx) + 1.0 / (dy * dy)).sqrt();
    if rate > 0.0 {
        0.9 / rate
    } else {
        f64::INFINITY
    }
}

/// One explicit step of length `dt`.
pub fn step(
    field: &LevelSetField,
    p: &TransportParams,
    dt: f64,
    sign: NormalTermSign,
) -> Result<LevelSetField, LevelSetError> {
    p.validate()?;
    let limit = cfl_dt(&field.grid, p);
    if !(dt >= 0.0) || dt > limit * (1.0 + 1e-12) {
        return Err(LevelSetError::CflViolation { dt, limit });
    }
    let g = field.grid;
    let (vx, vy) = p.velocity;
    let normal = sign.factor() * p.normal_speed;
    let mut next = vec![0.0; g.len()];
    next.par_chunks_mut(g.nx).enumerate().for_each(|(j, row)| {
        for (i, out) in row.iter_mut().enumerate() {
            let (dmx, dpx, dmy, dpy) = upwind_diffs(field, i, j);
            let c = field.at(i, j);
            *out = if vx == 0.0 && vy == 0.0 && normal == 0.0 {
                c
            } else {
                c - dt * (vx * dmx + vy * dmy) + dt * normal * godunov(dmx, dpx, dmy, dpy)
            };
        }
    });
    Ok(LevelSetField {
        grid: g,
        u: next,
        time: field.time + dt,
    })
}

/// Step from `field.time` to `t_end` in `⌈(t_end - t) / cfl_dt⌉` equal steps.
/// The callback sees every intermediate field.
pub fn advance_with(
    field: &LevelSetField,
    p: &TransportParams,
    t_end: f64,
    sign: NormalTermSign,
    mut on_step: impl FnMut(&LevelSetField),
) -> Result<LevelSetField, LevelSetError> {
    let interval = t_end - field.time;
    if interval <= 0.0 {
        return Ok(field.clone());
    }
    let limit = cfl_dt(&field.grid, p);
    let steps = if limit.is_finite() {
        (interval / limit).ceil().max(1.0) as usize
    } else {
        1
    };
    let dt = interval / steps as f64;
    let mut current = field.clone();
    for k in 0..steps {
        current = step(&current, p, dt, sign)?;
        if k + 1 == steps {
            current.time = t_end;
        }
        on_step(&current);
    }
    Ok(current)
}

pub fn advance(
    field: &LevelSetField,
    p: &TransportParams,
    t_end: f64,
    sign: NormalTermSign,
) -> Result<LevelSetField, LevelSetError> {
    advance_with(field, p, t_end, sign, |_| {})
}

/// How several bubbles share the initial field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitMode {
    /// Each node takes the quadratic of the bubble whose center is nearest
    /// in `x` (then in `y` among equal `x`): vertical strips per bubble.
    Piecewise,
    /// Minimum over all bubble quadratics.
    #[default]
    Union,
}

/// `(x - xc)² + ((y - yc)·a/b)² - a²`
pub fn ellipse_quadratic(e: &EllipseParams, center: (f64, f64), x: f64, y: f64) -> f64 {
    let dx = x - center.0;
    let dy = (y - center.1) * e.a / e.b;
    dx * dx + dy * dy - e.a * e.a
}

/// Initial field from ellipses placed at the given far-field centers.
pub fn init_bubbles(
    bubbles: &[(EllipseParams, (f64, f64))],
    grid: &Grid2D,
    mode: InitMode,
) -> Result<LevelSetField, LevelSetError> {
    grid.validate()?;
    if bubbles.is_empty() {
        return Err(LevelSetError::EmptyBubbleList);
    }
    for (index, (e, (x, y))) in bubbles.iter().enumerate() {
        if !grid.contains(*x, *y) {
            return Err(LevelSetError::BubbleOutsideGrid {
                index,
                x: *x,
                y: *y,
            });
        }
        if !(e.a > 0.0 && e.b > 0.0) {
            return Err(LevelSetError::InvalidGrid(format!(
                "bubble {index} has non-positive semi-axes ({}, {})",
                e.a, e.b
            )));
        }
    }
    warn_overlaps(bubbles);
    LevelSetField::from_fn(*grid, |x, y| match mode {
        InitMode::Union => bubbles
            .iter()
            .map(|(e, c)| ellipse_quadratic(e, *c, x, y))
            .fold(f64::INFINITY, f64::min),
        InitMode::Piecewise => {
            let (e, c) = bubbles
                .iter()
                .min_by(|(_, p), (_, q)| {
                    let kp = ((p.0 - x).abs(), (p.1 - y).abs());
                    let kq = ((q.0 - x).abs(), (q.1 - y).abs());
                    kp.partial_cmp(&kq).unwrap_or(std::cmp::Ordering::Equal)
                })
                .expect("non-empty");
            ellipse_quadratic(e, *c, x, y)
        }
    })
}

fn warn_overlaps(bubbles: &[(EllipseParams, (f64, f64))]) {
    for (k, (e1, c1)) in bubbles.iter().enumerate() {
        for (m, (e2, c2)) in bubbles.iter().enumerate().skip(k + 1) {
            let apart_x = (c1.0 - c2.0).abs() >= e1.a + e2.a;
            let apart_y = (c1.1 - c2.1).abs() >= e1.b + e2.b;
            if !(apart_x || apart_y) {
                log::warn!("bubbles {k} and {m} may overlap");
            }
        }
    }
}

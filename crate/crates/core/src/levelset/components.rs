use std::collections::VecDeque;

use super::{Grid2D, LevelSetField};

/// A 4-connected piece of `{u < 0}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Component {
    /// Row-major node indices, ascending.
    pub nodes: Vec<usize>,
    /// Node count times the cell area.
    pub area: f64,
    /// Mean node position.
    pub centroid: (f64, f64),
    /// `Σ |u| dx dy` over the component.
    pub mass: f64,
}

impl Component {
    /// Half of the node span in each direction, widened by half a cell on each
    /// side.
    pub fn extent_half_widths(&self, grid: &Grid2D) -> (f64, f64) {
        let (mut i_lo, mut i_hi, mut j_lo, mut j_hi) = (usize::MAX, 0, usize::MAX, 0);
        for &k in &self.nodes {
            let (i, j) = (k % grid.nx, k / grid.nx);
            i_lo = i_lo.min(i);
            i_hi = i_hi.max(i);
            j_lo = j_lo.min(j);
            j_hi = j_hi.max(j);
        }
        (
            0.5 * (i_hi - i_lo + 1) as f64 * grid.dx(),
            0.5 * (j_hi - j_lo + 1) as f64 * grid.dy(),
        )
    }

    pub fn touches_boundary(&self, grid: &Grid2D) -> bool {
        self.nodes.iter().any(|&k| {
            let (i, j) = (k % grid.nx, k / grid.nx);
            i == 0 || j == 0 || i + 1 == grid.nx || j + 1 == grid.ny
        })
    }
}

/// Components of `{u < 0}` ordered by their smallest node index.
pub fn label_components(field: &LevelSetField) -> Vec<Component> {
    let g = &field.grid;
    let inside: Vec<bool> = field.u.iter().map(|&v| v < 0.0).collect();
    let mut seen = vec![false; g.len()];
    let mut out = Vec::new();
    let mut queue = VecDeque::new();
    for start in 0..g.len() {
        if !inside[start] || seen[start] {
            continue;
        }
        seen[start] = true;
        queue.push_back(start);
        let mut nodes = Vec::new();
        while let Some(k) = queue.pop_front() {
            nodes.push(k);
            let (i, j) = (k % g.nx, k / g.nx);
            let mut visit = |n: usize| {
                if inside[n] && !seen[n] {
                    seen[n] = true;
                    queue.push_back(n);
                }
            };
            if i > 0 {
                visit(k - 1);
            }
            if i + 1 < g.nx {
                visit(k + 1);
            }
            if j > 0 {
                visit(k - g.nx);
            }
            if j + 1 < g.ny {
                visit(k + g.nx);
            }
        }
        nodes.sort_unstable();
        let cell = g.dx() * g.dy();
        let count = nodes.len() as f64;
        let (sx, sy, mass) = nodes.iter().fold((0.0, 0.0, 0.0), |(sx, sy, m), &k| {
            (
                sx + g.x(k % g.nx),
                sy + g.y(k / g.nx),
                m + field.u[k].abs() * cell,
            )
        });
        out.push(Component {
            area: count * cell,
            centroid: (sx / count, sy / count),
            mass,
            nodes,
        });
    }
    out
}

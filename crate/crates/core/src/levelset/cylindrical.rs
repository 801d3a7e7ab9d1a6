//! Reference solver for axisymmetric convection-diffusion,
//!
//! ```text
//! u_t = -v u_z + D_L u_zz + (D_t / r) (r u_r)_r
//! ```
//!
//! on an `(r, z)` grid stored as a [`LevelSetField`] with `x = r` and `y = z`.
//! Nodes are cell centers, so the grid origin must be offset from the axis
//! (typically `origin.0 = dr / 2`). Values outside the grid are held at zero.

use super::{LevelSetError, LevelSetField};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CdParams {
    /// Axial velocity.
    pub v: f64,
    /// Axial diffusivity.
    pub d_l: f64,
    /// Radial diffusivity.
    pub d_t: f64,
}

/// `0.9 / (|v|/dz + 2 D_L/dz² + 2 D_t/dr²)`
pub fn cd_stable_dt(field: &LevelSetField, p: &CdParams) -> f64 {
    let (dr, dz) = (field.grid.dx(), field.grid.dy());
    let rate = p.v.abs() / dz + 2.0 * p.d_l / (dz * dz) + 2.0 * p.d_t / (dr * dr);
    if rate > 0.0 {
        0.9 / rate
    } else {
        f64::INFINITY
    }
}

/// One explicit step with upwind advection in `z` and conservative
/// face-centered radial diffusion.
pub fn cd_cylindrical_step(
    field: &LevelSetField,
    p: &CdParams,
    dt: f64,
) -> Result<LevelSetField, LevelSetError> {
    let g = &field.grid;
    if !(g.origin.0 > 0.0) {
        return Err(LevelSetError::InvalidGrid(format!(
            "radial origin must be positive, got {}",
            g.origin.0
        )));
    }
    if !(p.d_l >= 0.0 && p.d_t >= 0.0) || !p.v.is_finite() {
        return Err(LevelSetError::InvalidTransport(format!(
            "diffusivities must be non-negative, got D_L = {}, D_t = {}",
            p.d_l, p.d_t
        )));
    }
    let limit = cd_stable_dt(field, p);
    if !(dt >= 0.0) || dt > limit * (1.0 + 1e-12) {
        return Err(LevelSetError::CflViolation { dt, limit });
    }
    let (dr, dz) = (g.dx(), g.dy());
    let value = |i: isize, j: isize| -> f64 {
        if i < 0 || j < 0 || i >= g.nx as isize || j >= g.ny as isize {
            0.0
        } else {
            field.at(i as usize, j as usize)
        }
    };
    let mut next = field.u.clone();
    for j in 0..g.ny {
        for i in 0..g.nx {
            let (ii, jj) = (i as isize, j as isize);
            let c = value(ii, jj);
            let (w, e, s, n) = (
                value(ii - 1, jj),
                value(ii + 1, jj),
                value(ii, jj - 1),
                value(ii, jj + 1),
            );
            let r = g.x(i);
            let (r_in, r_out) = (r - 0.5 * dr, r + 0.5 * dr);
            let radial = (r_out * (e - c) - r_in * (c - w)) / (r * dr * dr);
            let axial = (n - 2.0 * c + s) / (dz * dz);
            let advect = if p.v >= 0.0 {
                p.v * (c - s) / dz
            } else {
                p.v * (n - c) / dz
            };
            next[g.index(i, j)] = c + dt * (-advect + p.d_l * axial + p.d_t * radial);
        }
    }
    Ok(LevelSetField {
        grid: *g,
        u: next,
        time: field.time + dt,
    })
}

/// `∫ u r dr dz` by the midpoint rule.
pub fn cylindrical_mass(field: &LevelSetField) -> f64 {
    let g = &field.grid;
    let cell = g.dx() * g.dy();
    (0..g.ny)
        .flat_map(|j| (0..g.nx).map(move |i| (i, j)))
        .map(|(i, j)| field.at(i, j) * g.x(i) * cell)
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::levelset::Grid2D;

    fn grid() -> Grid2D {
        // 20 radial cells of width 0.5 starting at the first cell center
        Grid2D::new(20, 60, (0.25, 0.0), (10.25, 30.0)).unwrap()
    }

    fn pulse(g: Grid2D) -> LevelSetField {
        LevelSetField::from_fn(g, |r, z| (-(r * r) / 4.0 - (z - 10.0).powi(2) / 4.0).exp()).unwrap()
    }

    #[test]
    fn zero_coefficients_change_nothing() {
        let f = pulse(grid());
        let p = CdParams {
            v: 0.0,
            d_l: 0.0,
            d_t: 0.0,
        };
        assert_eq!(cd_cylindrical_step(&f, &p, 1.0).unwrap().u, f.u);
    }

    #[test]
    fn rejects_axis_and_unstable_steps() {
        let bad = Grid2D::new(5, 5, (0.0, 0.0), (5.0, 5.0)).unwrap();
        let f = LevelSetField::from_fn(bad, |_, _| 1.0).unwrap();
        let p = CdParams {
            v: 0.0,
            d_l: 1.0,
            d_t: 1.0,
        };
        assert!(cd_cylindrical_step(&f, &p, 0.01).is_err());
        let f = pulse(grid());
        let limit = cd_stable_dt(&f, &p);
        assert!(matches!(
            cd_cylindrical_step(&f, &p, 2.0 * limit),
            Err(LevelSetError::CflViolation { .. })
        ));
    }

    #[test]
    fn mass_does_not_increase() {
        let mut f = pulse(grid());
        let p = CdParams {
            v: 0.0,
            d_l: 0.3,
            d_t: 0.7,
        };
        let dt = cd_stable_dt(&f, &p);
        let mut mass = cylindrical_mass(&f);
        for _ in 0..200 {
            f = cd_cylindrical_step(&f, &p, dt).unwrap();
            let m = cylindrical_mass(&f);
            assert!(m <= mass * (1.0 + 1e-14));
            assert!(f.u.iter().all(|&v| v >= 0.0));
            mass = m;
        }
    }

    #[test]
    fn advection_moves_centroid() {
        let g = grid();
        let mut f = pulse(g);
        let p = CdParams {
            v: 1.0,
            d_l: 0.0,
            d_t: 0.0,
        };
        let centroid = |f: &LevelSetField| {
            let (mut num, mut den) = (0.0, 0.0);
            for j in 0..g.ny {
                for i in 0..g.nx {
                    let w = f.at(i, j) * g.x(i);
                    num += w * g.y(j);
                    den += w;
                }
            }
            num / den
        };
        let z0 = centroid(&f);
        let dt = cd_stable_dt(&f, &p);
        let steps = (10.0 / dt).ceil() as usize;
        let dt = 10.0 / steps as f64;
        for _ in 0..steps {
            f = cd_cylindrical_step(&f, &p, dt).unwrap();
        }
        assert!(
            (centroid(&f) - z0 - 10.0).abs() <= g.dy(),
            "{}",
            centroid(&f) - z0
        );
    }
}

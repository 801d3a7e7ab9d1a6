//! Near-field bubble formation: the axisymmetric Young-Laplace profile
//! equations in arc length,
//!
//! ```text
//! dr/ds = cos θ,   dz/ds = sin θ,   dθ/ds = D(z, θ) - sin θ / r
//! ```
//!
//! where the driving term `D` is `2 + βz` (Bond-number form), a constant
//! pressure ratio `Δp/α`, or a pressure ratio corrected by hydrostatic and
//! electric-field pressure. The boundary value problem is solved by Newton
//! iteration on the midpoint discretization, each step being a linear BVP
//! handed to [`crate::bvp::solve_block_midpoint`].

use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::{DMatrix, DVector, Matrix3, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bvp::{self, BvpError, ExtendedBoundary, LinearBvp, Mesh};

/// Radius below which `sin θ / r` is replaced by its apex limit.
pub const R_FLOOR: f64 = 1e-9;

/// Geometric growth factor of the arc length during continuation.
pub const CONTINUATION_FACTOR: f64 = 1.05;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NearFieldError {
    #[error("axis singularity: r = {r:e} is below the floor {R_FLOOR:e}")]
    AxisSingularity { r: f64 },
    #[error("Newton iteration did not converge in {iterations} iterations (last update {last_update:e})")]
    NewtonDivergence { iterations: usize, last_update: f64 },
    #[error("no closure before L = {length} (started at {start})")]
    NoClosure { start: f64, length: f64 },
    #[error("surface tension must be non-zero")]
    ZeroSurfaceTension,
    #[error("invalid near-field input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Linear(#[from] BvpError),
}

/// Uniform electric field acting on the interface.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EFieldParams {
    /// Squared field magnitude `|E₀|²`.
    pub e0_sq: f64,
    /// Permittivity.
    pub epsilon: f64,
}

/// Electric pressure `p_E = (9/8) ε |E₀|² sin²θ`.
pub fn electric_pressure(field: &EFieldParams, theta: f64) -> f64 {
    let sin = theta.sin();
    9.0 / 8.0 * field.epsilon * field.e0_sq * sin * sin
}

/// Which electric pressure law enters the profile equation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EFieldForm {
    /// `(9/8) ε |E₀|² sin²θ`
    #[default]
    Canonical,
    /// `(9/8) |E₀|² sin θ`, without permittivity. Written `section54` in
    /// configuration files.
    #[serde(rename = "section54")]
    FirstPower,
}

impl EFieldForm {
    pub fn pressure(self, field: &EFieldParams, theta: f64) -> f64 {
        match self {
            EFieldForm::Canonical => electric_pressure(field, theta),
            EFieldForm::FirstPower => 9.0 / 8.0 * field.e0_sq * theta.sin(),
        }
    }

    /// `∂p_E/∂θ`
    pub fn pressure_dtheta(self, field: &EFieldParams, theta: f64) -> f64 {
        match self {
            EFieldForm::Canonical => 9.0 / 8.0 * field.epsilon * field.e0_sq * (2.0 * theta).sin(),
            EFieldForm::FirstPower => 9.0 / 8.0 * field.e0_sq * theta.cos(),
        }
    }
}

/// Right-hand side variant of the angle equation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RhsForm {
    /// `dθ/ds = 2 + βz - sin θ / r`
    Bond { beta: f64 },
    /// `dθ/ds = Δp/α - sin θ / r`
    Pressure { delta_p_over_alpha: f64 },
    /// `dθ/ds = Δp/α + (ρ g z - p_E(θ))/α - sin θ / r`
    Electric {
        delta_p_over_alpha: f64,
        rho: f64,
        g: f64,
        alpha: f64,
        field: EFieldParams,
        form: EFieldForm,
    },
}

impl RhsForm {
    pub fn kind(&self) -> FormKind {
        match self {
            RhsForm::Bond { .. } => FormKind::Bond,
            RhsForm::Pressure { .. } => FormKind::Pressure,
            RhsForm::Electric { .. } => FormKind::Electric,
        }
    }

    /// Driving term `D(z, θ)` with its partial derivatives `(D, ∂D/∂z, ∂D/∂θ)`.
    fn driving(&self, z: f64, theta: f64) -> (f64, f64, f64) {
        match *self {
            RhsForm::Bond { beta } => (2.0 + beta * z, beta, 0.0),
            RhsForm::Pressure { delta_p_over_alpha } => (delta_p_over_alpha, 0.0, 0.0),
            RhsForm::Electric {
                delta_p_over_alpha,
                rho,
                g,
                alpha,
                field,
                form,
            } => (
                delta_p_over_alpha + (rho * g * z - form.pressure(&field, theta)) / alpha,
                rho * g / alpha,
                -form.pressure_dtheta(&field, theta) / alpha,
            ),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FormKind {
    Bond,
    Pressure,
    Electric,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NearFieldParams {
    /// Radius at `s = 0`.
    pub a: f64,
    pub form: RhsForm,
}

impl NearFieldParams {
    pub fn pressure(a: f64, delta_p_over_alpha: f64) -> Self {
        Self {
            a,
            form: RhsForm::Pressure { delta_p_over_alpha },
        }
    }

    pub fn bond(a: f64, beta: f64) -> Self {
        Self {
            a,
            form: RhsForm::Bond { beta },
        }
    }

    /// Same bubble with the electric-field pressure switched on.
    pub fn with_efield(
        &self,
        field: EFieldParams,
        form: EFieldForm,
        rho: f64,
        g: f64,
        alpha: f64,
    ) -> Result<Self, NearFieldError> {
        if !(alpha > 0.0) {
            return Err(NearFieldError::InvalidInput(format!(
                "alpha must be positive with an electric field, got {alpha}"
            )));
        }
        if !(field.e0_sq >= 0.0) || !(field.epsilon > 0.0) {
            return Err(NearFieldError::InvalidInput(
                "field needs e0_sq >= 0 and epsilon > 0".into(),
            ));
        }
        let delta_p_over_alpha = match self.form {
            RhsForm::Pressure { delta_p_over_alpha } => delta_p_over_alpha,
            RhsForm::Electric {
                delta_p_over_alpha, ..
            } => delta_p_over_alpha,
            RhsForm::Bond { .. } => {
                return Err(NearFieldError::InvalidInput(
                    "the Bond-number form has no pressure ratio to extend".into(),
                ))
            }
        };
        Ok(Self {
            a: self.a,
            form: RhsForm::Electric {
                delta_p_over_alpha,
                rho,
                g,
                alpha,
                field,
                form,
            },
        })
    }

    pub fn delta_p_over_alpha(&self) -> Option<f64> {
        match self.form {
            RhsForm::Bond { .. } => None,
            RhsForm::Pressure { delta_p_over_alpha }
            | RhsForm::Electric {
                delta_p_over_alpha, ..
            } => Some(delta_p_over_alpha),
        }
    }
}

/// `(r, z, θ)` at one arc-length position.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileState {
    pub r: f64,
    pub z: f64,
    pub theta: f64,
}

impl ProfileState {
    pub fn new(r: f64, z: f64, theta: f64) -> Self {
        Self { r, z, theta }
    }

    pub fn to_vector(self) -> Vector3<f64> {
        Vector3::new(self.r, self.z, self.theta)
    }

    pub fn from_slice(v: &[f64]) -> Self {
        Self::new(v[0], v[1], v[2])
    }

    fn lerp(self, other: Self, w: f64) -> Self {
        Self::new(
            self.r + w * (other.r - self.r),
            self.z + w * (other.z - self.z),
            self.theta + w * (other.theta - self.theta),
        )
    }
}

/// `(dr/ds, dz/ds, dθ/ds)`; fails on the axis where `sin θ / r` is undefined.
pub fn rhs(state: ProfileState, p: &NearFieldParams) -> Result<Vector3<f64>, NearFieldError> {
    if state.r.abs() < R_FLOOR {
        return Err(NearFieldError::AxisSingularity { r: state.r });
    }
    Ok(rhs_regularized(state, p))
}

/// [`rhs`] with the symmetric-apex limit `sin θ / r → dθ/ds` below [`R_FLOOR`],
/// which gives `dθ/ds = D / 2` there.
pub fn rhs_regularized(state: ProfileState, p: &NearFieldParams) -> Vector3<f64> {
    let (sin, cos) = state.theta.sin_cos();
    let (drive, _, _) = p.form.driving(state.z, state.theta);
    let dtheta = if state.r.abs() < R_FLOOR {
        0.5 * drive
    } else {
        drive - sin / state.r
    };
    Vector3::new(cos, sin, dtheta)
}

/// Partial derivatives of [`rhs`] with respect to `(r, z, θ)`.
pub fn jacobian(state: ProfileState, p: &NearFieldParams) -> Result<Matrix3<f64>, NearFieldError> {
    if state.r.abs() < R_FLOOR {
        return Err(NearFieldError::AxisSingularity { r: state.r });
    }
    Ok(jacobian_regularized(state, p))
}

pub fn jacobian_regularized(state: ProfileState, p: &NearFieldParams) -> Matrix3<f64> {
    let (sin, cos) = state.theta.sin_cos();
    let (_, d_z, d_theta) = p.form.driving(state.z, state.theta);
    let (g_r, g_z, g_theta) = if state.r.abs() < R_FLOOR {
        (0.0, 0.5 * d_z, 0.5 * d_theta)
    } else {
        let r = state.r;
        (sin / (r * r), d_z, d_theta - cos / r)
    };
    Matrix3::new(
        0.0, 0.0, -sin, //
        0.0, 0.0, cos, //
        g_r, g_z, g_theta,
    )
}

/// `β = -ρ g R_t² / σ`
pub fn bond_number(rho: f64, g: f64, r_t: f64, sigma: f64) -> Result<f64, NearFieldError> {
    if sigma == 0.0 {
        return Err(NearFieldError::ZeroSurfaceTension);
    }
    Ok(-rho * g * r_t * r_t / sigma)
}

/// Boundary conditions closing the third-order profile system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(
    tag = "kind",
    rename_all = "kebab-case",
    rename_all_fields = "kebab-case"
)]
pub enum EndConditions {
    /// `r(0) = a`, `z(0) = 0`, `θ(0) = theta0`; the far end is free.
    Pinned { theta0: f64 },
    /// `r(0) = a`, `z(0) = 0`, `θ(L) = theta_end`.
    TopAngle { theta_end: f64 },
    /// `B_a = 0`, `B_{b-1} = e₂e₂ᵀ`, `B_b = I`, `d = (L, 0, 0)`.
    Literal,
}

impl Default for EndConditions {
    fn default() -> Self {
        EndConditions::Pinned { theta0: FRAC_PI_2 }
    }
}

impl EndConditions {
    /// `(B_a, B_{b-1}, B_b, d)`
    fn matrices(
        &self,
        a: f64,
        length: f64,
    ) -> (DMatrix<f64>, DMatrix<f64>, DMatrix<f64>, DVector<f64>) {
        let mut ba = DMatrix::zeros(3, 3);
        let mut bbm1 = DMatrix::zeros(3, 3);
        let mut bb = DMatrix::zeros(3, 3);
        let mut d = DVector::zeros(3);
        match *self {
            EndConditions::Pinned { theta0 } => {
                ba.fill_with_identity();
                d[0] = a;
                d[2] = theta0;
            }
            EndConditions::TopAngle { theta_end } => {
                ba[(0, 0)] = 1.0;
                ba[(1, 1)] = 1.0;
                bb[(2, 2)] = 1.0;
                d[0] = a;
                d[2] = theta_end;
            }
            EndConditions::Literal => {
                bbm1[(1, 1)] = 1.0;
                bb.fill_with_identity();
                d[0] = length;
            }
        }
        (ba, bbm1, bb, d)
    }
}

/// Converged half-profile `s ↦ (r, z, θ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BubbleProfile {
    pub samples: Vec<(f64, ProfileState)>,
    pub length: f64,
    pub variant: FormKind,
    /// Max-norm of every accepted Newton update, in order.
    pub newton_updates: Vec<f64>,
}

impl BubbleProfile {
    pub fn first(&self) -> ProfileState {
        self.samples[0].1
    }

    pub fn last(&self) -> ProfileState {
        self.samples[self.samples.len() - 1].1
    }

    /// Linear interpolation at arc length `s` (clamped to `[0, L]`).
    pub fn state_at(&self, s: f64) -> ProfileState {
        let n = self.samples.len();
        let s = s.clamp(self.samples[0].0, self.samples[n - 1].0);
        let k = self
            .samples
            .partition_point(|(si, _)| *si <= s)
            .clamp(1, n - 1);
        let (s0, y0) = self.samples[k - 1];
        let (s1, y1) = self.samples[k];
        y0.lerp(y1, (s - s0) / (s1 - s0))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonOptions {
    pub tolerance: f64,
    pub max_iterations: usize,
    pub max_halvings: usize,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-9,
            max_iterations: 50,
            max_halvings: 8,
        }
    }
}

/// Default arc-length step, giving `N = L / 0.001` intervals.
pub const DEFAULT_STEP: f64 = 0.001;

/// Interval count for a target step size (never below 10).
pub fn intervals_for(length: f64, step: f64) -> usize {
    ((length / step).round() as usize).max(10)
}

/// Solve the nonlinear profile BVP on a uniform mesh with `intervals` cells.
pub fn solve_profile(
    p: &NearFieldParams,
    ends: EndConditions,
    length: f64,
    intervals: usize,
) -> Result<BubbleProfile, NearFieldError> {
    solve_profile_with(p, ends, length, intervals, None, &NewtonOptions::default())
}

/// [`solve_profile`] with an optional initial iterate (rescaled to `length`).
pub fn solve_profile_with(
    p: &NearFieldParams,
    ends: EndConditions,
    length: f64,
    intervals: usize,
    seed: Option<&BubbleProfile>,
    opts: &NewtonOptions,
) -> Result<BubbleProfile, NearFieldError> {
    if !(length > 0.0) || !length.is_finite() {
        return Err(NearFieldError::InvalidInput(format!(
            "arc length must be positive, got {length}"
        )));
    }
    if intervals < 10 {
        return Err(NearFieldError::InvalidInput(format!(
            "need at least 10 intervals, got {intervals}"
        )));
    }
    if !(p.a > 0.0) {
        return Err(NearFieldError::InvalidInput(format!(
            "initial radius must be positive, got {}",
            p.a
        )));
    }
    let mesh = Mesh::uniform(0.0, length, intervals)?;
    let mut y = match seed {
        Some(prev) => rescaled_seed(prev, &mesh),
        None => initial_iterate(p, ends, &mesh),
    };
    let (ba, bbm1, bb, d) = ends.matrices(p.a, length);
    let ext = ExtendedBoundary { bbm1 };
    let mut res_old = nonlinear_residual(p, &mesh, &y, &ba, &ext.bbm1, &bb, &d);
    let mut updates = Vec::new();

    for _ in 0..opts.max_iterations {
        let y_new = {
            let nodes = mesh.nodes();
            let iterate = &y;
            let coefficients = move |t: f64| {
                let state = interpolate(nodes, iterate, t);
                let jac = jacobian_regularized(state, p);
                let f = rhs_regularized(state, p);
                let q = f - jac * state.to_vector();
                (
                    DMatrix::from_column_slice(3, 3, jac.as_slice()),
                    DVector::from_column_slice(q.as_slice()),
                )
            };
            let lin = LinearBvp::new(3, coefficients, ba.clone(), bb.clone(), d.clone())?;
            bvp::solve_block_midpoint(&lin, &ext, &mesh)?
        };
        let delta: Vec<Vector3<f64>> = y_new
            .values
            .iter()
            .zip(&y)
            .map(|(n, o)| Vector3::new(n[0], n[1], n[2]) - o.to_vector())
            .collect();
        let full = delta.iter().fold(0.0_f64, |acc, v| acc.max(v.amax()));
        if !full.is_finite() {
            return Err(NearFieldError::NewtonDivergence {
                iterations: updates.len() + 1,
                last_update: full,
            });
        }

        let mut lambda = 1.0;
        let mut trial;
        let mut res;
        let mut halvings = 0;
        loop {
            trial = apply(&y, &delta, lambda);
            res = nonlinear_residual(p, &mesh, &trial, &ba, &ext.bbm1, &bb, &d);
            // rounding-level residuals cannot decrease further
            if res <= res_old || res < 1e-12 || halvings == opts.max_halvings {
                break;
            }
            lambda *= 0.5;
            halvings += 1;
        }
        let update = lambda * full;
        updates.push(update);
        y = trial;
        res_old = res;
        if update <= opts.tolerance {
            return Ok(BubbleProfile {
                samples: mesh.nodes().iter().copied().zip(y).collect(),
                length,
                variant: p.form.kind(),
                newton_updates: updates,
            });
        }
    }
    Err(NearFieldError::NewtonDivergence {
        iterations: opts.max_iterations,
        last_update: updates.last().copied().unwrap_or(f64::NAN),
    })
}

fn apply(y: &[ProfileState], delta: &[Vector3<f64>], lambda: f64) -> Vec<ProfileState> {
    y.iter()
        .zip(delta)
        .map(|(s, d)| {
            ProfileState::new(
                s.r + lambda * d[0],
                s.z + lambda * d[1],
                s.theta + lambda * d[2],
            )
        })
        .collect()
}

fn interpolate(nodes: &[f64], y: &[ProfileState], t: f64) -> ProfileState {
    let n = nodes.len();
    let k = nodes.partition_point(|&s| s <= t).clamp(1, n - 1);
    let w = (t - nodes[k - 1]) / (nodes[k] - nodes[k - 1]);
    y[k - 1].lerp(y[k], w)
}

/// Max-norm residual of the discretized nonlinear problem.
fn nonlinear_residual(
    p: &NearFieldParams,
    mesh: &Mesh,
    y: &[ProfileState],
    ba: &DMatrix<f64>,
    bbm1: &DMatrix<f64>,
    bb: &DMatrix<f64>,
    d: &DVector<f64>,
) -> f64 {
    let mut worst = 0.0_f64;
    for i in 0..mesh.intervals() {
        let h = mesh.step(i);
        let (y0, y1) = (y[i].to_vector(), y[i + 1].to_vector());
        let mid = y[i].lerp(y[i + 1], 0.5);
        let res = (y1 - y0) / h - rhs_regularized(mid, p);
        worst = worst.max(res.amax());
    }
    let n = y.len() - 1;
    let v = |s: ProfileState| DVector::from_column_slice(s.to_vector().as_slice());
    let bc = ba * v(y[0]) + bbm1 * v(y[n - 1]) + bb * v(y[n]) - d;
    let worst = worst.max(bc.amax());
    if worst.is_finite() {
        worst
    } else {
        f64::INFINITY
    }
}

/// Starting iterate: the explicit initial-value sweep for pinned starts, a
/// constant-curvature arc otherwise, and a straight line if either is unusable.
fn initial_iterate(p: &NearFieldParams, ends: EndConditions, mesh: &Mesh) -> Vec<ProfileState> {
    let length = mesh.end();
    let candidate = match ends {
        EndConditions::Pinned { theta0 } => {
            sweep_initial_value(p, ProfileState::new(p.a, 0.0, theta0), mesh)
        }
        EndConditions::TopAngle { theta_end } => arc(p.a, 0.0, theta_end, mesh),
        EndConditions::Literal => arc(p.a, FRAC_PI_2, PI, mesh),
    };
    if candidate
        .iter()
        .all(|s| s.r.is_finite() && s.z.is_finite() && s.theta.is_finite())
    {
        return candidate;
    }
    let end = ProfileState::new(p.a, length, FRAC_PI_2);
    let start = ProfileState::new(p.a, 0.0, FRAC_PI_2);
    mesh.nodes()
        .iter()
        .map(|&s| start.lerp(end, s / length))
        .collect()
}

/// Arc with `θ` linear in `s` from `theta_start` to `theta_end`.
fn arc(a: f64, theta_start: f64, theta_end: f64, mesh: &Mesh) -> Vec<ProfileState> {
    let length = mesh.end();
    let kappa = (theta_end - theta_start) / length;
    mesh.nodes()
        .iter()
        .map(|&s| {
            let theta = theta_start + kappa * s;
            if kappa.abs() < 1e-12 {
                ProfileState::new(a + s * theta_start.cos(), s * theta_start.sin(), theta)
            } else {
                ProfileState::new(
                    a + (theta.sin() - theta_start.sin()) / kappa,
                    (theta_start.cos() - theta.cos()) / kappa,
                    theta,
                )
            }
        })
        .collect()
}

/// RK4 sweep of the regularized equations from `start`, four substeps per cell.
fn sweep_initial_value(p: &NearFieldParams, start: ProfileState, mesh: &Mesh) -> Vec<ProfileState> {
    let f = |v: Vector3<f64>| rhs_regularized(ProfileState::from_slice(v.as_slice()), p);
    let mut out = Vec::with_capacity(mesh.nodes().len());
    let mut y = start.to_vector();
    out.push(start);
    for i in 0..mesh.intervals() {
        let h = mesh.step(i) / 4.0;
        for _ in 0..4 {
            let k1 = f(y);
            let k2 = f(y + k1 * (0.5 * h));
            let k3 = f(y + k2 * (0.5 * h));
            let k4 = f(y + k3 * h);
            y += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
        }
        out.push(ProfileState::from_slice(y.as_slice()));
    }
    out
}

fn rescaled_seed(prev: &BubbleProfile, mesh: &Mesh) -> Vec<ProfileState> {
    let ratio = prev.length / mesh.end();
    mesh.nodes()
        .iter()
        .map(|&s| prev.state_at(s * ratio))
        .collect()
}

/// Signed closure residual of a profile; zero means closed.
pub type ClosureCriterion<'a> = dyn Fn(&BubbleProfile) -> f64 + 'a;

/// `r(L)`: the profile returns to the axis.
pub fn axis_return(profile: &BubbleProfile) -> f64 {
    profile.last().r
}

/// `θ(L) - target`
pub fn angle_reached(target: f64) -> impl Fn(&BubbleProfile) -> f64 {
    move |profile: &BubbleProfile| profile.last().theta - target
}

/// Arc-length continuation: grow `L` by [`CONTINUATION_FACTOR`] from `l0`,
/// seeding each solve with the previous profile, until `|criterion| <= tol`.
/// A sign change of the criterion between two lengths is refined by bisection.
/// A failed solve halves the growth increment; once the increment drops
/// below `1e-9` the walk ends with the last converged profile.
pub fn continue_in_length(
    p: &NearFieldParams,
    ends: EndConditions,
    l0: f64,
    step: f64,
    criterion: &ClosureCriterion<'_>,
    tol: f64,
) -> Result<(BubbleProfile, f64), NearFieldError> {
    if !(l0 > 0.0) {
        return Err(NearFieldError::InvalidInput(format!(
            "initial length must be positive, got {l0}"
        )));
    }
    let opts = NewtonOptions::default();
    let solve = |length: f64, seed: Option<&BubbleProfile>| {
        solve_profile_with(p, ends, length, intervals_for(length, step), seed, &opts)
    };
    let mut length = l0;
    let mut profile = solve(length, None)?;
    let mut value = criterion(&profile);
    if value.abs() <= tol {
        return Ok((profile, length));
    }
    let mut factor = CONTINUATION_FACTOR;
    loop {
        let next_length = length * factor;
        if next_length > 100.0 * l0 {
            return Err(NearFieldError::NoClosure {
                start: l0,
                length: next_length,
            });
        }
        let next = match solve(next_length, Some(&profile)) {
            Ok(next) => next,
            Err(NearFieldError::NewtonDivergence { .. } | NearFieldError::Linear(_)) => {
                factor = 1.0 + 0.5 * (factor - 1.0);
                if factor - 1.0 < 1e-9 {
                    log::warn!("continuation stopped at L = {length}: Newton diverged");
                    return Ok((profile, length));
                }
                continue;
            }
            Err(e) => return Err(e),
        };
        let next_value = criterion(&next);
        if next_value.abs() <= tol {
            return Ok((next, next_length));
        }
        if next_value.signum() != value.signum() {
            return bisect_closure(
                solve,
                criterion,
                tol,
                (length, profile, value),
                (next_length, next),
            );
        }
        length = next_length;
        profile = next;
        value = next_value;
    }
}

fn bisect_closure<F>(
    solve: F,
    criterion: &ClosureCriterion<'_>,
    tol: f64,
    lower: (f64, BubbleProfile, f64),
    upper: (f64, BubbleProfile),
) -> Result<(BubbleProfile, f64), NearFieldError>
where
    F: Fn(f64, Option<&BubbleProfile>) -> Result<BubbleProfile, NearFieldError>,
{
    let (mut lo, mut lo_profile, lo_value) = lower;
    let (mut hi, mut hi_profile) = upper;
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        let profile = solve(mid, Some(&lo_profile))?;
        let value = criterion(&profile);
        if value.abs() <= tol || (hi - lo) < 1e-12 * hi {
            return Ok((profile, mid));
        }
        if value.signum() == lo_value.signum() {
            lo = mid;
            lo_profile = profile;
        } else {
            hi = mid;
            hi_profile = profile;
        }
    }
    Ok((hi_profile, hi))
}

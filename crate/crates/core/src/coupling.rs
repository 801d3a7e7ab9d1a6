//! Near-field to far-field coupling.
//!
//! Each bubble is formed by a near-field solve, reduced to an ellipse, and
//! rasterized into the level-set field at its far-field placement. During
//! transport every bubble is followed as a connected component of `{u < 0}`.
//! In the refresh cycle the near-field problem is solved again every `K`
//! far-field steps and the field is rebuilt around the tracked centroids.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::levelset::{
    self, label_components, Grid2D, InitMode, LevelSetError, LevelSetField, NormalTermSign,
    TransportParams,
};
use crate::shape_fit::{self, EllipseParams, ShapeError};
use crate::young_laplace::{
    self, BubbleProfile, EFieldForm, EFieldParams, EndConditions, NearFieldError, NearFieldParams,
};

pub use crate::young_laplace::electric_pressure;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CouplingError {
    #[error("bubble {id}: near field: {source}")]
    NearField { id: u32, source: NearFieldError },
    #[error("bubble {id}: shape fit: {source}")]
    Shape { id: u32, source: ShapeError },
    #[error("bubble {id} has neither a near-field problem nor an ellipse")]
    MissingShape { id: u32 },
    #[error("bubble {id} was lost from the far field")]
    LostBubble { id: u32 },
    #[error("far field: {0}")]
    FarField(#[from] LevelSetError),
    #[error("cycle {cycle}: {source}")]
    Cycle {
        cycle: usize,
        source: Box<CouplingError>,
    },
    #[error("imaginary breathing frequency: 3kp/rho = {pressure_term:e} < 2 sigma/(rho r0) = {tension_term:e}")]
    ImaginaryFrequency {
        pressure_term: f64,
        tension_term: f64,
    },
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

/// Near-field problem of one bubble.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NearFieldSpec {
    pub params: NearFieldParams,
    pub ends: EndConditions,
    pub length: f64,
    pub intervals: usize,
}

impl NearFieldSpec {
    pub fn solve(&self) -> Result<BubbleProfile, NearFieldError> {
        young_laplace::solve_profile(&self.params, self.ends, self.length, self.intervals)
    }
}

/// One bubble through the pipeline.
#[derive(Debug, Clone, PartialEq)]
pub struct BubbleRecord {
    pub id: u32,
    /// Absent when the ellipse is given directly.
    pub near: Option<NearFieldSpec>,
    pub profile: Option<BubbleProfile>,
    pub ellipse: Option<EllipseParams>,
    /// Far-field center at initialization.
    pub placement: (f64, f64),
    /// Tracked `(t, centroid)` pairs.
    pub trajectory: Vec<(f64, (f64, f64))>,
    pub lost: bool,
}

impl BubbleRecord {
    pub fn from_near(id: u32, near: NearFieldSpec, placement: (f64, f64)) -> Self {
        Self {
            id,
            near: Some(near),
            profile: None,
            ellipse: None,
            placement,
            trajectory: Vec::new(),
            lost: false,
        }
    }

    pub fn from_ellipse(id: u32, ellipse: EllipseParams, placement: (f64, f64)) -> Self {
        Self {
            id,
            near: None,
            profile: None,
            ellipse: Some(ellipse),
            placement,
            trajectory: Vec::new(),
            lost: false,
        }
    }

    /// Latest tracked centroid, or the placement before any tracking.
    pub fn position(&self) -> (f64, f64) {
        self.trajectory
            .last()
            .map(|(_, c)| *c)
            .unwrap_or(self.placement)
    }
}

/// Electric field as seen by the near-field solves.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EFieldCoupling {
    pub field: EFieldParams,
    pub form: EFieldForm,
    pub rho: f64,
    pub g: f64,
    pub alpha: f64,
}

/// Solve (if needed) and fit every bubble, then build the initial field.
/// Near-field solves run in parallel.
pub fn near_to_far(
    records: &mut [BubbleRecord],
    grid: &Grid2D,
    mode: InitMode,
) -> Result<LevelSetField, CouplingError> {
    form_bubbles(records, None)?;
    rasterize(records, grid, mode, 1.0, |r| r.placement)
}

/// Near-field solve plus ellipse fit for every record that carries a
/// near-field problem, with the electric field switched on if given.
pub fn form_bubbles(
    records: &mut [BubbleRecord],
    efield: Option<&EFieldCoupling>,
) -> Result<(), CouplingError> {
    let results: Vec<Result<Option<(BubbleProfile, EllipseParams)>, CouplingError>> = records
        .par_iter()
        .map(|record| {
            let Some(spec) = record.near else {
                return match record.ellipse {
                    Some(_) => Ok(None),
                    None => Err(CouplingError::MissingShape { id: record.id }),
                };
            };
            let id = record.id;
            let mut spec = spec;
            if let Some(e) = efield {
                spec.params = spec
                    .params
                    .with_efield(e.field, e.form, e.rho, e.g, e.alpha)
                    .map_err(|source| CouplingError::NearField { id, source })?;
            }
            let profile = spec
                .solve()
                .map_err(|source| CouplingError::NearField { id, source })?;
            let ellipse = shape_fit::fit_ellipse(&profile)
                .map_err(|source| CouplingError::Shape { id, source })?;
            Ok(Some((profile, ellipse)))
        })
        .collect();
    for (record, result) in records.iter_mut().zip(results) {
        if let Some((profile, ellipse)) = result? {
            record.profile = Some(profile);
            record.ellipse = Some(ellipse);
        }
    }
    Ok(())
}

fn rasterize(
    records: &[BubbleRecord],
    grid: &Grid2D,
    mode: InitMode,
    scale: f64,
    center: impl Fn(&BubbleRecord) -> (f64, f64),
) -> Result<LevelSetField, CouplingError> {
    let bubbles = records
        .iter()
        .filter(|r| !r.lost)
        .map(|r| {
            r.ellipse
                .map(|e| {
                    (
                        EllipseParams::new(scale * e.a, scale * e.b, e.center),
                        center(r),
                    )
                })
                .ok_or(CouplingError::MissingShape { id: r.id })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(levelset::init_bubbles(&bubbles, grid, mode)?)
}

/// Discrete bubble density of one bubble.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityEntry {
    pub id: u32,
    /// `Σ |u| dx dy` over the bubble's component.
    pub mass: f64,
    pub centroid: (f64, f64),
    pub area: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct DensityReport {
    pub entries: Vec<DensityEntry>,
    /// Bubbles without a component, in record order.
    pub lost: Vec<u32>,
}

impl DensityReport {
    pub fn entry(&self, id: u32) -> Option<&DensityEntry> {
        self.entries.iter().find(|e| e.id == id)
    }

    /// `Err(LostBubble)` for the first lost bubble.
    pub fn ensure_complete(&self) -> Result<(), CouplingError> {
        match self.lost.first() {
            Some(&id) => Err(CouplingError::LostBubble { id }),
            None => Ok(()),
        }
    }
}

/// Match the components of `{u < 0}` to bubbles, closest pairs first, using
/// each bubble's latest known position. Bubbles already marked lost take no
/// part in the matching and are reported as lost again, together with any
/// bubble left without a component.
pub fn bubble_density(field: &LevelSetField, records: &[BubbleRecord]) -> DensityReport {
    let comps = label_components(field);
    let live: Vec<&BubbleRecord> = records.iter().filter(|r| !r.lost).collect();
    let mut pairs: Vec<(f64, usize, usize)> = Vec::with_capacity(live.len() * comps.len());
    for (b, record) in live.iter().enumerate() {
        let (x, y) = record.position();
        for (c, comp) in comps.iter().enumerate() {
            let d = (comp.centroid.0 - x).hypot(comp.centroid.1 - y);
            pairs.push((d, b, c));
        }
    }
    pairs.sort_by(|p, q| p.partial_cmp(q).unwrap_or(std::cmp::Ordering::Equal));
    let mut bubble_match = vec![None; live.len()];
    let mut comp_taken = vec![false; comps.len()];
    for (_, b, c) in pairs {
        if bubble_match[b].is_none() && !comp_taken[c] {
            bubble_match[b] = Some(c);
            comp_taken[c] = true;
        }
    }
    let mut report = DensityReport::default();
    let mut matches = bubble_match.into_iter();
    for record in records {
        match (!record.lost).then(|| matches.next().flatten()).flatten() {
            Some(c) => report.entries.push(DensityEntry {
                id: record.id,
                mass: comps[c].mass,
                centroid: comps[c].centroid,
                area: comps[c].area,
            }),
            None => report.lost.push(record.id),
        }
    }
    report
}

/// Breathing-mode inputs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OscillationParams {
    pub r0: f64,
    pub r_eps0: f64,
    pub omega0: f64,
    /// Polytropic exponent.
    pub k: f64,
    pub p0: f64,
    pub sigma: f64,
    pub rho: f64,
}

/// `ω₀ = sqrt(3kp/ρ - 2σ/(ρ r₀)) / (2π r₀)` with `p = |p₀ - p_E|`.
pub fn breathing_frequency(p: &OscillationParams, p_e: f64) -> Result<f64, CouplingError> {
    if !(p.r0 > 0.0 && p.rho > 0.0 && p.k > 0.0) {
        return Err(CouplingError::InvalidInput(format!(
            "need r0, rho, k > 0, got r0 = {}, rho = {}, k = {}",
            p.r0, p.rho, p.k
        )));
    }
    let pressure = (p.p0 - p_e).abs();
    let pressure_term = 3.0 * p.k * pressure / p.rho;
    let tension_term = 2.0 * p.sigma / (p.rho * p.r0);
    if pressure_term < tension_term {
        return Err(CouplingError::ImaginaryFrequency {
            pressure_term,
            tension_term,
        });
    }
    Ok((pressure_term - tension_term).sqrt() / (2.0 * std::f64::consts::PI * p.r0))
}

/// `r(t) = r₀ - r_ε₀ exp(i ω₀ t)`
pub fn oscillation_radius(p: &OscillationParams, t: f64) -> Complex64 {
    Complex64::new(p.r0, 0.0) - p.r_eps0 * Complex64::from_polar(1.0, p.omega0 * t)
}

/// Far-field settings shared by the decoupled pipeline and the cycle.
#[derive(Debug, Clone, PartialEq)]
pub struct FarFieldSetup {
    pub grid: Grid2D,
    pub transport: TransportParams,
    pub sign: NormalTermSign,
    pub mode: InitMode,
    /// Snapshot times, strictly increasing and positive.
    pub times: Vec<f64>,
    /// Factor applied to the fitted semi-axes before rasterization.
    pub scale: f64,
}

impl FarFieldSetup {
    fn validate(&self) -> Result<(), CouplingError> {
        self.transport.validate()?;
        self.grid.validate()?;
        if !(self.scale > 0.0) {
            return Err(CouplingError::InvalidInput(format!(
                "shape scale must be positive, got {}",
                self.scale
            )));
        }
        let increasing = self.times.windows(2).all(|w| w[0] < w[1]);
        if self.times.is_empty() || !increasing || !(self.times[0] > 0.0) {
            return Err(CouplingError::InvalidInput(format!(
                "snapshot times must be positive and strictly increasing, got {:?}",
                self.times
            )));
        }
        Ok(())
    }
}

/// Why a snapshot was taken.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SnapshotKind {
    Output,
    Refresh { cycle: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub kind: SnapshotKind,
    pub field: LevelSetField,
    /// Density report at this snapshot.
    pub density: DensityReport,
    /// Semi-axes as rasterized, for every formed bubble in record order.
    pub ellipses: Vec<(u32, EllipseParams)>,
}

impl Snapshot {
    fn take(
        kind: SnapshotKind,
        field: &LevelSetField,
        records: &[BubbleRecord],
        scale: f64,
    ) -> Self {
        Self {
            kind,
            field: field.clone(),
            density: bubble_density(field, records),
            ellipses: records
                .iter()
                .filter_map(|r| {
                    r.ellipse
                        .map(|e| (r.id, EllipseParams::new(scale * e.a, scale * e.b, e.center)))
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CycleOutput {
    pub records: Vec<BubbleRecord>,
    pub snapshots: Vec<Snapshot>,
}

fn track(records: &mut [BubbleRecord], field: &LevelSetField) -> DensityReport {
    let report = bubble_density(field, records);
    for record in records.iter_mut() {
        if let Some(entry) = report.entry(record.id) {
            record.trajectory.push((field.time, entry.centroid));
        } else {
            if !record.lost {
                log::warn!("bubble {} lost at t = {}", record.id, field.time);
            }
            record.lost = true;
        }
    }
    report
}

/// Form the bubbles once, then transport them to each snapshot time.
pub fn run_decoupled(
    records: Vec<BubbleRecord>,
    setup: &FarFieldSetup,
) -> Result<CycleOutput, CouplingError> {
    setup.validate()?;
    let mut records = records;
    form_bubbles(&mut records, None)?;
    let mut field = rasterize(&records, &setup.grid, setup.mode, setup.scale, |r| {
        r.placement
    })?;
    track(&mut records, &field);
    let mut snapshots = Vec::with_capacity(setup.times.len());
    for &t in &setup.times {
        field = levelset::advance_with(&field, &setup.transport, t, setup.sign, |f| {
            track(&mut records, f);
        })?;
        snapshots.push(Snapshot::take(
            SnapshotKind::Output,
            &field,
            &records,
            setup.scale,
        ));
    }
    Ok(CycleOutput { records, snapshots })
}

/// The near/far refresh cycle. Every `refresh_every` far-field steps the
/// near-field problems are solved again (under `efield` if present), the
/// ellipses refitted, and the field rebuilt at the tracked centroids; a
/// snapshot follows each refresh and each output time. `None` never
/// refreshes, so without a field this is [`run_decoupled`] exactly.
pub fn run_coupled_cycle(
    records: Vec<BubbleRecord>,
    setup: &FarFieldSetup,
    efield: Option<&EFieldCoupling>,
    refresh_every: Option<usize>,
) -> Result<CycleOutput, CouplingError> {
    setup.validate()?;
    if refresh_every == Some(0) {
        return Err(CouplingError::InvalidInput(
            "refresh interval must be at least one step".into(),
        ));
    }
    let mut records = records;
    form_bubbles(&mut records, efield)?;
    let mut field = rasterize(&records, &setup.grid, setup.mode, setup.scale, |r| {
        r.placement
    })?;
    track(&mut records, &field);

    let mut snapshots = Vec::new();
    let mut steps_taken = 0usize;
    let mut cycle = 0usize;
    for &t_end in &setup.times {
        let interval = t_end - field.time;
        let limit = levelset::cfl_dt(&setup.grid, &setup.transport);
        let steps = if interval <= 0.0 {
            0
        } else if limit.is_finite() {
            (interval / limit).ceil().max(1.0) as usize
        } else {
            1
        };
        let dt = if steps > 0 {
            interval / steps as f64
        } else {
            0.0
        };
        for k in 0..steps {
            field = levelset::step(&field, &setup.transport, dt, setup.sign)?;
            if k + 1 == steps {
                field.time = t_end;
            }
            track(&mut records, &field);
            steps_taken += 1;
            if refresh_every.is_some_and(|every| steps_taken.is_multiple_of(every)) {
                cycle += 1;
                field = refresh(&mut records, &field, setup, efield).map_err(|e| {
                    CouplingError::Cycle {
                        cycle,
                        source: Box::new(e),
                    }
                })?;
                snapshots.push(Snapshot::take(
                    SnapshotKind::Refresh { cycle },
                    &field,
                    &records,
                    setup.scale,
                ));
            }
        }
        snapshots.push(Snapshot::take(
            SnapshotKind::Output,
            &field,
            &records,
            setup.scale,
        ));
    }
    Ok(CycleOutput { records, snapshots })
}

fn refresh(
    records: &mut [BubbleRecord],
    field: &LevelSetField,
    setup: &FarFieldSetup,
    efield: Option<&EFieldCoupling>,
) -> Result<LevelSetField, CouplingError> {
    if records.iter().all(|r| r.lost) {
        return Ok(field.clone());
    }
    form_bubbles(records, efield)?;
    let mut rebuilt = rasterize(
        records,
        &setup.grid,
        setup.mode,
        setup.scale,
        BubbleRecord::position,
    )?;
    rebuilt.time = field.time;
    Ok(rebuilt)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

    fn grid() -> Grid2D {
        Grid2D::new(100, 200, (0.0, 0.0), (100.0, 200.0)).unwrap()
    }

    fn osc(r0: f64, k: f64, p0: f64, sigma: f64, rho: f64) -> OscillationParams {
        OscillationParams {
            r0,
            r_eps0: 0.1,
            omega0: 1.0,
            k,
            p0,
            sigma,
            rho,
        }
    }

    #[test]
    fn electric_pressure_values() {
        let unit = EFieldParams {
            e0_sq: 1.0,
            epsilon: 1.0,
        };
        assert_eq!(electric_pressure(&unit, 0.0), 0.0);
        assert!((electric_pressure(&unit, FRAC_PI_2) - 9.0 / 8.0).abs() < 1e-15);
        let f = EFieldParams {
            e0_sq: 0.1,
            epsilon: 2.0,
        };
        assert!((electric_pressure(&f, FRAC_PI_4) - 0.1125).abs() < 1e-15);
    }

    #[test]
    fn breathing_frequency_cases() {
        let w = breathing_frequency(&osc(1.0, 1.4, 1.0, 0.0, 1.0), 0.0).unwrap();
        assert!((w - 4.2f64.sqrt() / (2.0 * PI)).abs() < 1e-12);
        assert!((w - 0.326).abs() < 1e-3);
        // 3kp/rho = 2 sigma/(rho r0): 3 * 1 * 2 = 2 * 3
        assert_eq!(
            breathing_frequency(&osc(1.0, 1.0, 2.0, 3.0, 1.0), 0.0).unwrap(),
            0.0
        );
        assert!(matches!(
            breathing_frequency(&osc(1.0, 1.4, 0.7, 0.1, 1.0), 0.7),
            Err(CouplingError::ImaginaryFrequency { .. })
        ));
        // p = |p0 - pE| is symmetric
        let a = breathing_frequency(&osc(1.0, 1.4, 1.0, 0.1, 1.0), 0.5).unwrap();
        let b = breathing_frequency(&osc(1.0, 1.4, 1.0, 0.1, 1.0), 1.5).unwrap();
        assert_eq!(a, b);
        assert!(breathing_frequency(&osc(0.0, 1.4, 1.0, 0.1, 1.0), 0.0).is_err());
    }

    #[test]
    fn oscillation_radius_cases() {
        let p = OscillationParams {
            r0: 2.0,
            r_eps0: 0.3,
            omega0: 5.0,
            k: 1.4,
            p0: 1.0,
            sigma: 0.0,
            rho: 1.0,
        };
        let start = oscillation_radius(&p, 0.0);
        assert!((start.re - 1.7).abs() < 1e-15 && start.im.abs() < 1e-15);
        let half = oscillation_radius(&p, PI / 5.0);
        assert!((half.re - 2.3).abs() < 1e-12 && half.im.abs() < 1e-12);
        for t in [0.1, 0.77, 3.0, 40.0] {
            let r = oscillation_radius(&p, t);
            assert!(((r - 2.0).norm() - 0.3).abs() < 1e-12);
        }
    }

    #[test]
    fn synthetic_ellipse_passes_through() {
        let e = EllipseParams::new(5.0, 8.0, (0.0, 0.0));
        let mut records = vec![BubbleRecord::from_ellipse(1, e, (40.0, 60.0))];
        let f = near_to_far(&mut records, &grid(), InitMode::Union).unwrap();
        let direct =
            levelset::init_bubbles(&[(e, (40.0, 60.0))], &grid(), InitMode::Union).unwrap();
        assert_eq!(f, direct);
    }

    #[test]
    fn empty_and_missing_inputs() {
        let mut none: Vec<BubbleRecord> = vec![];
        assert_eq!(
            near_to_far(&mut none, &grid(), InitMode::Union),
            Err(CouplingError::FarField(LevelSetError::EmptyBubbleList))
        );
        let mut bare = vec![BubbleRecord::from_ellipse(
            3,
            EllipseParams::new(1.0, 1.0, (0.0, 0.0)),
            (5.0, 5.0),
        )];
        bare[0].ellipse = None;
        assert_eq!(
            near_to_far(&mut bare, &grid(), InitMode::Union),
            Err(CouplingError::MissingShape { id: 3 })
        );
    }

    #[test]
    fn near_field_errors_carry_the_id() {
        let bad = NearFieldSpec {
            params: NearFieldParams::pressure(-1.0, 0.8),
            ends: EndConditions::default(),
            length: 1.0,
            intervals: 100,
        };
        let mut records = vec![BubbleRecord::from_near(7, bad, (50.0, 50.0))];
        let err = near_to_far(&mut records, &grid(), InitMode::Union).unwrap_err();
        assert!(matches!(err, CouplingError::NearField { id: 7, .. }));
        assert!(err.to_string().contains("bubble 7"));
    }

    #[test]
    fn density_of_single_circle() {
        let e = EllipseParams::new(10.0, 10.0, (0.0, 0.0));
        let records = vec![BubbleRecord::from_ellipse(1, e, (50.0, 80.0))];
        let f = levelset::init_bubbles(&[(e, (50.0, 80.0))], &grid(), InitMode::Union).unwrap();
        let report = bubble_density(&f, &records);
        let entry = report.entry(1).unwrap();
        assert_eq!(entry.centroid, (50.0, 80.0));
        let ring = 2.0 * PI * 10.0;
        assert!((entry.area - PI * 100.0).abs() <= ring);
        assert!(entry.mass > 0.0);
        assert!(report.lost.is_empty());
    }

    #[test]
    fn bubble_leaving_the_top_is_lost() {
        let e = EllipseParams::new(4.0, 4.0, (0.0, 0.0));
        let records = vec![
            BubbleRecord::from_ellipse(1, e, (30.0, 185.0)),
            BubbleRecord::from_ellipse(2, e, (70.0, 40.0)),
        ];
        let setup = FarFieldSetup {
            grid: grid(),
            transport: TransportParams {
                velocity: (0.0, 1.0),
                normal_speed: 0.0,
            },
            sign: NormalTermSign::Pde,
            mode: InitMode::Union,
            times: vec![40.0],
            scale: 1.0,
        };
        let out = run_decoupled(records, &setup).unwrap();
        let last = &out.snapshots[0].density;
        assert_eq!(last.lost, vec![1]);
        assert_eq!(
            last.ensure_complete(),
            Err(CouplingError::LostBubble { id: 1 })
        );
        assert!(out.records[0].lost);
        let (_, (_, y)) = *out.records[1].trajectory.last().unwrap();
        assert!((y - 80.0).abs() <= 0.5);
    }

    #[test]
    fn two_bubbles_keep_their_ids() {
        let e = EllipseParams::new(5.0, 6.0, (0.0, 0.0));
        let records = vec![
            BubbleRecord::from_ellipse(4, e, (20.0, 50.0)),
            BubbleRecord::from_ellipse(9, e, (80.0, 50.0)),
        ];
        let setup = FarFieldSetup {
            grid: grid(),
            transport: TransportParams {
                velocity: (0.0, 1.0),
                normal_speed: 0.0,
            },
            sign: NormalTermSign::Pde,
            mode: InitMode::Union,
            times: vec![25.0, 50.0],
            scale: 1.0,
        };
        let out = run_decoupled(records, &setup).unwrap();
        for snap in &out.snapshots {
            assert_eq!(snap.density.entries.len(), 2);
            let left = snap.density.entry(4).unwrap();
            let right = snap.density.entry(9).unwrap();
            assert!(left.centroid.0 < 50.0 && right.centroid.0 > 50.0);
            let t = snap.field.time;
            assert!((left.centroid.1 - 50.0 - t).abs() <= 0.5);
        }
    }

    #[test]
    fn decoupled_reduction_is_bitwise() {
        let e = EllipseParams::new(5.0, 6.0, (0.0, 0.0));
        let records = vec![
            BubbleRecord::from_ellipse(1, e, (20.0, 50.0)),
            BubbleRecord::from_ellipse(2, e, (80.0, 50.0)),
        ];
        let setup = FarFieldSetup {
            grid: grid(),
            transport: TransportParams {
                velocity: (0.2, 1.0),
                normal_speed: 0.05,
            },
            sign: NormalTermSign::Pde,
            mode: InitMode::Union,
            times: vec![0.1, 25.0, 50.0],
            scale: 1.0,
        };
        let a = run_decoupled(records.clone(), &setup).unwrap();
        let b = run_coupled_cycle(records, &setup, None, None).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn refresh_cycle_with_static_ellipses() {
        let spec = NearFieldSpec {
            params: NearFieldParams::pressure(0.01, 0.8),
            ends: EndConditions::default(),
            length: 1.0,
            intervals: 500,
        };
        let records = vec![
            BubbleRecord::from_near(1, spec, (20.0, 100.0)),
            BubbleRecord::from_near(
                2,
                NearFieldSpec {
                    length: 2.0,
                    intervals: 1000,
                    ..spec
                },
                (70.0, 90.0),
            ),
        ];
        let setup = FarFieldSetup {
            grid: grid(),
            transport: TransportParams {
                velocity: (0.0, 1.0),
                normal_speed: 0.05,
            },
            sign: NormalTermSign::Pde,
            mode: InitMode::Union,
            times: vec![10.0, 20.0],
            scale: 1.0,
        };
        let field = EFieldCoupling {
            field: EFieldParams {
                e0_sq: 0.1,
                epsilon: 1.0,
            },
            form: EFieldForm::FirstPower,
            rho: 0.1,
            g: 9.81,
            alpha: 0.1,
        };
        let out = run_coupled_cycle(records.clone(), &setup, Some(&field), Some(5)).unwrap();
        let refreshes = out
            .snapshots
            .iter()
            .filter(|s| matches!(s.kind, SnapshotKind::Refresh { .. }))
            .count();
        assert!(refreshes >= 2);
        let again = run_coupled_cycle(records, &setup, Some(&field), Some(5)).unwrap();
        assert_eq!(out, again);
        for r in &out.records {
            let t: Vec<f64> = r.trajectory.iter().map(|p| p.0).collect();
            assert!(t.windows(2).all(|w| w[0] < w[1]));
        }
        assert!(run_coupled_cycle(vec![], &setup, None, Some(0)).is_err());
    }
}

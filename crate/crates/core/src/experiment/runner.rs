use std::fs;
use std::path::{Path, PathBuf};

use crate::coupling::{
    self, breathing_frequency, BubbleRecord, CouplingError, CycleOutput, OscillationParams,
    SnapshotKind,
};
use crate::levelset::cylindrical::{cd_cylindrical_step, cd_stable_dt, cylindrical_mass, CdParams};
use crate::levelset::{snapshot, LevelSetField};
use crate::shape_fit::EllipseParams;
use crate::young_laplace::{self, intervals_for, BubbleProfile, NearFieldError};

use super::config::{Mode, RunConfig};
use super::ExperimentError;

/// One line of the ellipse table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TableRow {
    pub id: u32,
    pub delta_p_over_alpha: f64,
    pub a: f64,
    pub b: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunSummary {
    pub table: Vec<TableRow>,
    /// Every file written, in order.
    pub files: Vec<PathBuf>,
    /// Bubbles missing from the last snapshot.
    pub lost: Vec<u32>,
}

fn numerical(module: &'static str, e: impl std::fmt::Display) -> ExperimentError {
    ExperimentError::Numerical {
        module,
        message: e.to_string(),
    }
}

fn coupling_error(e: CouplingError) -> ExperimentError {
    let module = match &e {
        CouplingError::NearField { .. } => "young_laplace",
        CouplingError::Shape { .. } => "shape_fit",
        CouplingError::FarField(_) => "levelset",
        _ => "coupling",
    };
    numerical(module, e)
}

/// Near-field records of the configuration, with any length continuation
/// already carried out.
pub fn bubble_records(config: &RunConfig) -> Result<Vec<BubbleRecord>, ExperimentError> {
    config
        .bubbles
        .iter()
        .map(|b| {
            let placement = b.placement.map(|[x, y]| (x, y)).unwrap_or((0.0, 0.0));
            if !config.mode.solves_near_field() {
                let [a, bb] = b.ellipse.unwrap_or([1.0, 1.0]);
                return Ok(BubbleRecord::from_ellipse(
                    b.id,
                    EllipseParams::new(a, bb, (0.0, 0.0)),
                    placement,
                ));
            }
            let mut spec = b.spec();
            if let Some(l0) = b.l0 {
                let tol = 1e-3 * b.a;
                let (_, length) = young_laplace::continue_in_length(
                    &spec.params,
                    spec.ends,
                    l0,
                    b.step,
                    &young_laplace::axis_return,
                    tol,
                )
                .map_err(|source: NearFieldError| {
                    numerical(
                        "young_laplace",
                        CouplingError::NearField { id: b.id, source },
                    )
                })?;
                spec.length = length;
                spec.intervals = intervals_for(length, b.step);
            }
            Ok(BubbleRecord::from_near(b.id, spec, placement))
        })
        .collect()
}

fn table_rows(config: &RunConfig, records: &[BubbleRecord]) -> Vec<TableRow> {
    config
        .bubbles
        .iter()
        .zip(records)
        .filter_map(|(b, r)| {
            r.ellipse.map(|e| TableRow {
                id: b.id,
                delta_p_over_alpha: b.delta_p_over_alpha,
                a: e.a,
                b: e.b,
            })
        })
        .collect()
}

/// Fitted ellipse of every bubble, formed under the electric field when the
/// configuration has one.
pub fn table(config: &RunConfig) -> Result<Vec<TableRow>, ExperimentError> {
    config.validate()?;
    if !config.mode.solves_near_field() {
        return Err(ExperimentError::Config {
            key: "mode".into(),
            message: format!("{:?} has no near-field bubbles to tabulate", config.mode),
        });
    }
    let mut records = bubble_records(config)?;
    coupling::form_bubbles(&mut records, config.efield_coupling().as_ref())
        .map_err(coupling_error)?;
    Ok(table_rows(config, &records))
}

/// Execute the configured pipeline and write its files into `out`.
pub fn run(config: &RunConfig, out: &Path) -> Result<RunSummary, ExperimentError> {
    config.validate()?;
    fs::create_dir_all(out).map_err(|e| io_error(out, e))?;
    let mut writer = Writer {
        dir: out.to_path_buf(),
        files: Vec::new(),
    };
    let mut summary = RunSummary::default();

    match config.mode {
        Mode::CdReference => run_cd(config, &mut writer)?,
        Mode::NearOnly => {
            let mut records = bubble_records(config)?;
            coupling::form_bubbles(&mut records, config.efield_coupling().as_ref())
                .map_err(coupling_error)?;
            write_near_outputs(config, &records, &mut writer, &mut summary)?;
        }
        Mode::FarOnly | Mode::Coupled | Mode::CoupledEfield => {
            let records = bubble_records(config)?;
            let setup = config.far_field();
            let output = match config.mode {
                Mode::FarOnly => coupling::run_decoupled(records, &setup),
                Mode::Coupled => {
                    coupling::run_coupled_cycle(records, &setup, None, config.refresh())
                }
                _ => coupling::run_coupled_cycle(
                    records,
                    &setup,
                    config.efield_coupling().as_ref(),
                    config.refresh(),
                ),
            }
            .map_err(coupling_error)?;
            if config.mode != Mode::FarOnly {
                write_near_outputs(config, &output.records, &mut writer, &mut summary)?;
            }
            write_far_outputs(&output, &mut writer)?;
            summary.lost = output
                .snapshots
                .last()
                .map(|s| s.density.lost.clone())
                .unwrap_or_default();
        }
    }

    let manifest = format!(
        "# bubblefield {}\n{}",
        env!("CARGO_PKG_VERSION"),
        config.to_toml()
    );
    writer.write("manifest.toml", manifest.as_bytes())?;
    summary.files = writer.files;
    Ok(summary)
}

struct Writer {
    dir: PathBuf,
    files: Vec<PathBuf>,
}

impl Writer {
    /// Write through a temporary file and rename into place.
    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<(), ExperimentError> {
        let path = self.dir.join(name);
        let tmp = self.dir.join(format!(".{name}.tmp"));
        fs::write(&tmp, bytes).map_err(|e| io_error(&tmp, e))?;
        fs::rename(&tmp, &path).map_err(|e| io_error(&path, e))?;
        self.files.push(path);
        Ok(())
    }

    fn write_csv(
        &mut self,
        name: &str,
        header: &[&str],
        rows: &[Vec<String>],
    ) -> Result<(), ExperimentError> {
        let mut csv = csv::Writer::from_writer(Vec::new());
        let path = self.dir.join(name);
        csv.write_record(header).map_err(|e| io_error(&path, e))?;
        for row in rows {
            csv.write_record(row).map_err(|e| io_error(&path, e))?;
        }
        let bytes = csv.into_inner().map_err(|e| io_error(&path, e))?;
        self.write(name, &bytes)
    }
}

fn io_error(path: &Path, e: impl std::fmt::Display) -> ExperimentError {
    ExperimentError::Io {
        path: path.display().to_string(),
        reason: e.to_string(),
    }
}

fn profile_rows(profile: &BubbleProfile) -> Vec<Vec<String>> {
    profile
        .samples
        .iter()
        .map(|(s, y)| {
            vec![
                s.to_string(),
                y.r.to_string(),
                y.z.to_string(),
                y.theta.to_string(),
            ]
        })
        .collect()
}

fn write_near_outputs(
    config: &RunConfig,
    records: &[BubbleRecord],
    writer: &mut Writer,
    summary: &mut RunSummary,
) -> Result<(), ExperimentError> {
    for record in records {
        if let Some(profile) = &record.profile {
            writer.write_csv(
                &format!("profile_{}.csv", record.id),
                &["s", "r", "z", "theta"],
                &profile_rows(profile),
            )?;
        }
    }
    summary.table = table_rows(config, records);
    let rows: Vec<Vec<String>> = summary
        .table
        .iter()
        .map(|r| {
            vec![
                r.id.to_string(),
                r.delta_p_over_alpha.to_string(),
                r.a.to_string(),
                r.b.to_string(),
            ]
        })
        .collect();
    writer.write_csv("table.csv", &["id", "delta_p_over_alpha", "a", "b"], &rows)?;
    if let Some(osc) = &config.oscillation {
        let p_e = config
            .efield_coupling()
            .map(|e| e.form.pressure(&e.field, std::f64::consts::FRAC_PI_2))
            .unwrap_or(0.0);
        let rows: Vec<Vec<String>> = records
            .iter()
            .filter_map(|r| r.ellipse.map(|e| (r.id, e)))
            .map(|(id, e)| {
                let params = OscillationParams {
                    r0: 0.5 * (e.a + e.b),
                    r_eps0: osc.r_eps0,
                    omega0: 0.0,
                    k: osc.k,
                    p0: osc.p0,
                    sigma: osc.sigma,
                    rho: osc.rho,
                };
                let omega0 = breathing_frequency(&params, p_e).unwrap_or_else(|err| {
                    log::warn!("bubble {id}: {err}");
                    f64::NAN
                });
                vec![
                    id.to_string(),
                    params.r0.to_string(),
                    p_e.to_string(),
                    omega0.to_string(),
                ]
            })
            .collect();
        writer.write_csv("oscillation.csv", &["id", "r0", "p_e", "omega0"], &rows)?;
    }
    Ok(())
}

fn write_far_outputs(output: &CycleOutput, writer: &mut Writer) -> Result<(), ExperimentError> {
    let mut rows = Vec::new();
    for (seq, snap) in output.snapshots.iter().enumerate() {
        let kind = match snap.kind {
            SnapshotKind::Output => "output".to_string(),
            SnapshotKind::Refresh { cycle } => format!("refresh{cycle}"),
        };
        writer.write(
            &format!("snapshot_{seq:04}_{kind}.txt"),
            snapshot::to_string(&snap.field).as_bytes(),
        )?;
        for &(id, e) in &snap.ellipses {
            let (cx, cy, mass) = match snap.density.entry(id) {
                Some(d) => (d.centroid.0, d.centroid.1, d.mass),
                None => (f64::NAN, f64::NAN, 0.0),
            };
            rows.push(vec![
                id.to_string(),
                snap.field.time.to_string(),
                e.a.to_string(),
                e.b.to_string(),
                cx.to_string(),
                cy.to_string(),
                mass.to_string(),
            ]);
        }
    }
    writer.write_csv(
        "bubbles.csv",
        &["id", "t", "a", "b", "cx", "cy", "mass"],
        &rows,
    )
}

fn run_cd(config: &RunConfig, writer: &mut Writer) -> Result<(), ExperimentError> {
    let cd = config.cd.as_ref().expect("validated");
    let grid = config.grid.grid();
    let (rc, zc, w) = (cd.pulse_center[0], cd.pulse_center[1], cd.pulse_width);
    let mut field = LevelSetField::from_fn(grid, |r, z| {
        (-((r - rc).powi(2) + (z - zc).powi(2)) / (w * w)).exp()
    })
    .map_err(|e| numerical("levelset", e))?;
    let params = CdParams {
        v: cd.v,
        d_l: cd.d_l,
        d_t: cd.d_t,
    };
    let limit = cd_stable_dt(&field, &params);
    let mut mass_rows = vec![vec!["0".to_string(), cylindrical_mass(&field).to_string()]];
    for (seq, &t_end) in config.times.iter().enumerate() {
        let interval = t_end - field.time;
        let steps = if limit.is_finite() {
            (interval / limit).ceil().max(1.0) as usize
        } else {
            1
        };
        let dt = interval / steps as f64;
        for k in 0..steps {
            field =
                cd_cylindrical_step(&field, &params, dt).map_err(|e| numerical("levelset", e))?;
            if k + 1 == steps {
                field.time = t_end;
            }
        }
        writer.write(
            &format!("snapshot_{seq:04}_output.txt"),
            snapshot::to_string(&field).as_bytes(),
        )?;
        mass_rows.push(vec![
            t_end.to_string(),
            cylindrical_mass(&field).to_string(),
        ]);
    }
    writer.write_csv("cd_mass.csv", &["t", "mass"], &mass_rows)
}

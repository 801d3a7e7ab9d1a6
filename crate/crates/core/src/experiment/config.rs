//! Run configuration in TOML.
//!
//! Keys are kebab-case. Every optional key has a default, and a resolved
//! configuration serializes back with all defaults spelled out.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::coupling::{EFieldCoupling, FarFieldSetup, NearFieldSpec};
use crate::levelset::{Grid2D, InitMode, NormalTermSign, TransportParams};
use crate::young_laplace::{
    intervals_for, EFieldForm, EFieldParams, EndConditions, NearFieldParams, DEFAULT_STEP,
};

use super::ExperimentError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// Profiles and ellipse table only.
    NearOnly,
    /// Transport of given ellipses.
    FarOnly,
    /// Near-field formation, then transport with periodic refresh.
    Coupled,
    /// As `Coupled`, with the electric field in every near-field solve.
    CoupledEfield,
    /// Cylindrical convection-diffusion reference run.
    CdReference,
}

impl Mode {
    pub fn needs_far_field(self) -> bool {
        matches!(self, Mode::FarOnly | Mode::Coupled | Mode::CoupledEfield)
    }

    pub fn solves_near_field(self) -> bool {
        matches!(self, Mode::NearOnly | Mode::Coupled | Mode::CoupledEfield)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NearForm {
    /// `dθ/ds = Δp/α - sin θ / r`
    #[default]
    Pressure,
    /// `dθ/ds = 2 + βz - sin θ / r`
    Bond,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct GridConfig {
    pub nx: usize,
    pub ny: usize,
    pub origin: [f64; 2],
    pub extent: [f64; 2],
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            nx: 100,
            ny: 200,
            origin: [0.0, 0.0],
            extent: [100.0, 200.0],
        }
    }
}

impl GridConfig {
    pub fn grid(&self) -> Grid2D {
        Grid2D {
            nx: self.nx,
            ny: self.ny,
            origin: (self.origin[0], self.origin[1]),
            extent: (self.extent[0], self.extent[1]),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct TransportConfig {
    pub velocity: [f64; 2],
    pub normal_speed: f64,
}

impl Default for TransportConfig {
    fn default() -> Self {
        Self {
            velocity: [0.0, 1.0],
            normal_speed: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct EfieldConfig {
    pub e0_sq: f64,
    pub epsilon: f64,
    pub rho: f64,
    pub g: f64,
    pub alpha: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct OscillationConfig {
    /// Polytropic exponent.
    pub k: f64,
    pub p0: f64,
    pub sigma: f64,
    pub rho: f64,
    pub r_eps0: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct CdConfig {
    pub v: f64,
    pub d_l: f64,
    pub d_t: f64,
    /// Center `(r, z)` of the initial Gaussian pulse.
    pub pulse_center: [f64; 2],
    pub pulse_width: f64,
}

fn default_a() -> f64 {
    0.01
}

fn default_length() -> f64 {
    2.0
}

fn default_step() -> f64 {
    DEFAULT_STEP
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct BubbleConfig {
    pub id: u32,
    #[serde(default)]
    pub form: NearForm,
    #[serde(default)]
    pub delta_p_over_alpha: f64,
    #[serde(default)]
    pub beta: f64,
    /// Radius at `s = 0`.
    #[serde(default = "default_a")]
    pub a: f64,
    /// Arc length; the result of the length continuation when `l0` is set.
    #[serde(default = "default_length")]
    pub length: f64,
    /// Arc-length step; the mesh has `length / step` intervals.
    #[serde(default = "default_step")]
    pub step: f64,
    #[serde(default)]
    pub ends: EndConditions,
    /// Start of a length continuation that stops when the profile returns
    /// to the axis.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub placement: Option<[f64; 2]>,
    /// Given semi-axes `[a, b]`, bypassing the near field.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ellipse: Option<[f64; 2]>,
}

impl BubbleConfig {
    pub fn params(&self) -> NearFieldParams {
        match self.form {
            NearForm::Pressure => NearFieldParams::pressure(self.a, self.delta_p_over_alpha),
            NearForm::Bond => NearFieldParams::bond(self.a, self.beta),
        }
    }

    pub fn spec(&self) -> NearFieldSpec {
        NearFieldSpec {
            params: self.params(),
            ends: self.ends,
            length: self.length,
            intervals: intervals_for(self.length, self.step),
        }
    }
}

fn default_times() -> Vec<f64> {
    vec![0.1, 25.0, 50.0]
}

fn default_refresh() -> usize {
    50
}

fn default_scale() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct RunConfig {
    pub mode: Mode,
    #[serde(default = "default_times")]
    pub times: Vec<f64>,
    /// Far-field steps between near-field refreshes; 0 never refreshes.
    #[serde(default = "default_refresh")]
    pub refresh_every: usize,
    #[serde(default)]
    pub normal_term_sign: NormalTermSign,
    #[serde(default)]
    pub efield_form: EFieldForm,
    #[serde(default)]
    pub init_mode: InitMode,
    /// Factor from near-field lengths to far-field grid units.
    #[serde(default = "default_scale")]
    pub far_scale: f64,
    /// Output directory; never written to a manifest.
    #[serde(default, skip_serializing)]
    pub output_dir: Option<String>,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub transport: TransportConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub efield: Option<EfieldConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oscillation: Option<OscillationConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cd: Option<CdConfig>,
    #[serde(default, rename = "bubble")]
    pub bubbles: Vec<BubbleConfig>,
}

fn config_error(key: impl Into<String>, message: impl Into<String>) -> ExperimentError {
    ExperimentError::Config {
        key: key.into(),
        message: message.into(),
    }
}

fn positive(key: &str, v: f64) -> Result<(), ExperimentError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(config_error(key, format!("must be positive, got {v}")))
    }
}

fn non_negative(key: &str, v: f64) -> Result<(), ExperimentError> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(config_error(key, format!("must be non-negative, got {v}")))
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, ExperimentError> {
        let config: RunConfig = toml::from_str(text).map_err(|e| {
            let key = e
                .message()
                .split('`')
                .nth(1)
                .unwrap_or("<document>")
                .to_string();
            config_error(key, e.to_string())
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_file(path: &Path) -> Result<Self, ExperimentError> {
        let text = std::fs::read_to_string(path).map_err(|e| ExperimentError::Io {
            path: path.display().to_string(),
            reason: e.to_string(),
        })?;
        Self::from_toml(&text)
    }

    /// Resolved configuration as TOML, without the output directory.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    /// Checks every key the selected mode uses; errors name the key.
    pub fn validate(&self) -> Result<(), ExperimentError> {
        if self.mode.needs_far_field() || self.mode == Mode::CdReference {
            if self.times.is_empty() {
                return Err(config_error(
                    "times",
                    "at least one snapshot time is needed",
                ));
            }
            if !(self.times[0] > 0.0) || !self.times.windows(2).all(|w| w[0] < w[1]) {
                return Err(config_error(
                    "times",
                    format!(
                        "must be positive and strictly increasing, got {:?}",
                        self.times
                    ),
                ));
            }
            self.grid
                .grid()
                .validate()
                .map_err(|e| config_error("grid", e.to_string()))?;
        }
        if self.mode.needs_far_field() {
            let t = &self.transport;
            non_negative("transport.velocity", t.velocity[0])?;
            non_negative("transport.velocity", t.velocity[1])?;
            non_negative("transport.normal-speed", t.normal_speed)?;
            positive("far-scale", self.far_scale)?;
        }
        if self.mode == Mode::CoupledEfield && self.efield.is_none() {
            return Err(config_error("efield", "required by mode coupled-efield"));
        }
        if let Some(e) = &self.efield {
            non_negative("efield.e0-sq", e.e0_sq)?;
            positive("efield.epsilon", e.epsilon)?;
            positive("efield.alpha", e.alpha)?;
            non_negative("efield.rho", e.rho)?;
            if !e.g.is_finite() {
                return Err(config_error("efield.g", "must be finite"));
            }
        }
        if let Some(o) = &self.oscillation {
            positive("oscillation.k", o.k)?;
            positive("oscillation.rho", o.rho)?;
            non_negative("oscillation.sigma", o.sigma)?;
            non_negative("oscillation.r-eps0", o.r_eps0)?;
        }
        if self.mode == Mode::CdReference {
            let cd = self
                .cd
                .as_ref()
                .ok_or_else(|| config_error("cd", "required by mode cd-reference"))?;
            non_negative("cd.d-l", cd.d_l)?;
            non_negative("cd.d-t", cd.d_t)?;
            positive("cd.pulse-width", cd.pulse_width)?;
            positive("grid.origin", self.grid.origin[0])?;
            return Ok(());
        }
        if self.bubbles.is_empty() {
            return Err(config_error(
                "bubble",
                "at least one [[bubble]] entry is needed",
            ));
        }
        let mut ids: Vec<u32> = self.bubbles.iter().map(|b| b.id).collect();
        ids.sort_unstable();
        if ids.windows(2).any(|w| w[0] == w[1]) {
            return Err(config_error("bubble.id", "ids must be unique"));
        }
        for b in &self.bubbles {
            let key = |k: &str| format!("bubble[{}].{k}", b.id);
            if self.mode.solves_near_field() {
                positive(&key("a"), b.a)?;
                positive(&key("length"), b.length)?;
                positive(&key("step"), b.step)?;
                if let Some(l0) = b.l0 {
                    positive(&key("l0"), l0)?;
                }
                if !b.delta_p_over_alpha.is_finite() || !b.beta.is_finite() {
                    return Err(config_error(key("delta-p-over-alpha"), "must be finite"));
                }
                if self.mode == Mode::CoupledEfield && b.form == NearForm::Bond {
                    return Err(config_error(
                        key("form"),
                        "the electric field needs the pressure form",
                    ));
                }
            }
            if self.mode == Mode::FarOnly {
                let [a, bb] = b
                    .ellipse
                    .ok_or_else(|| config_error(key("ellipse"), "required by mode far-only"))?;
                positive(&key("ellipse"), a)?;
                positive(&key("ellipse"), bb)?;
            }
            if self.mode.needs_far_field() {
                let [x, y] = b
                    .placement
                    .ok_or_else(|| config_error(key("placement"), "required for transport"))?;
                if !self.grid.grid().contains(x, y) {
                    return Err(config_error(
                        key("placement"),
                        format!("({x}, {y}) lies outside the grid"),
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn far_field(&self) -> FarFieldSetup {
        FarFieldSetup {
            grid: self.grid.grid(),
            transport: TransportParams {
                velocity: (self.transport.velocity[0], self.transport.velocity[1]),
                normal_speed: self.transport.normal_speed,
            },
            sign: self.normal_term_sign,
            mode: self.init_mode,
            times: self.times.clone(),
            scale: self.far_scale,
        }
    }

    pub fn efield_coupling(&self) -> Option<EFieldCoupling> {
        self.efield.as_ref().map(|e| EFieldCoupling {
            field: EFieldParams {
                e0_sq: e.e0_sq,
                epsilon: e.epsilon,
            },
            form: self.efield_form,
            rho: e.rho,
            g: e.g,
            alpha: e.alpha,
        })
    }

    /// `None` when refreshing is switched off.
    pub fn refresh(&self) -> Option<usize> {
        (self.refresh_every > 0).then_some(self.refresh_every)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    const MINIMAL: &str = r#"
mode = "near-only"

[[bubble]]
id = 1
delta-p-over-alpha = 0.8
"#;

    #[test]
    fn defaults_are_filled_in() {
        let c = RunConfig::from_toml(MINIMAL).unwrap();
        assert_eq!(c.times, vec![0.1, 25.0, 50.0]);
        assert_eq!(c.refresh_every, 50);
        assert_eq!(c.grid, GridConfig::default());
        assert_eq!(c.transport.velocity, [0.0, 1.0]);
        assert_eq!(c.transport.normal_speed, 0.05);
        assert_eq!(c.normal_term_sign, NormalTermSign::Pde);
        assert_eq!(c.efield_form, EFieldForm::Canonical);
        assert_eq!(c.init_mode, InitMode::Union);
        let b = &c.bubbles[0];
        assert_eq!((b.a, b.length, b.step), (0.01, 2.0, 0.001));
        assert_eq!(b.ends, EndConditions::Pinned { theta0: FRAC_PI_2 });
        assert_eq!(b.spec().intervals, 2000);
    }

    #[test]
    fn resolved_config_round_trips() {
        let c = RunConfig::from_toml(MINIMAL).unwrap();
        let text = c.to_toml();
        assert!(text.contains("refresh-every = 50"));
        assert!(text.contains("normal-speed = 0.05"));
        let back = RunConfig::from_toml(&text).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn errors_name_the_key() {
        let err = |text: &str| match RunConfig::from_toml(text) {
            Err(ExperimentError::Config { key, .. }) => key,
            other => panic!("expected a config error, got {other:?}"),
        };
        assert_eq!(err("mode = \"near-only\"\n"), "bubble");
        assert_eq!(err("mode = \"warp\"\n"), "warp");
        assert_eq!(err("mode = \"near-only\"\nrefresh = 3\n"), "refresh");
        assert_eq!(
            err("mode = \"near-only\"\n[[bubble]]\nid = 1\na = -1.0\n"),
            "bubble[1].a"
        );
        assert_eq!(
            err("mode = \"coupled\"\ntimes = [5.0, 1.0]\n[[bubble]]\nid = 1\nplacement = [5.0, 5.0]\n"),
            "times"
        );
        assert_eq!(
            err("mode = \"coupled\"\n[[bubble]]\nid = 1\n"),
            "bubble[1].placement"
        );
        assert_eq!(
            err("mode = \"coupled\"\n[[bubble]]\nid = 1\nplacement = [500.0, 5.0]\n"),
            "bubble[1].placement"
        );
        assert_eq!(
            err("mode = \"coupled-efield\"\n[[bubble]]\nid = 1\nplacement = [5.0, 5.0]\n"),
            "efield"
        );
        assert_eq!(
            err("mode = \"far-only\"\n[[bubble]]\nid = 1\nplacement = [5.0, 5.0]\n"),
            "bubble[1].ellipse"
        );
        assert_eq!(
            err("mode = \"near-only\"\n[[bubble]]\nid = 1\n[[bubble]]\nid = 1\n"),
            "bubble.id"
        );
        assert_eq!(err("mode = \"cd-reference\"\n"), "cd");
        assert_eq!(
            err("mode = \"coupled\"\n[transport]\nvelocity = [-1.0, 0.0]\nnormal-speed = 0.0\n[[bubble]]\nid = 1\nplacement = [5.0, 5.0]\n"),
            "transport.velocity"
        );
    }

    #[test]
    fn end_conditions_parse() {
        let text = r#"
mode = "near-only"
[[bubble]]
id = 1
form = "bond"
beta = 0.0
ends = { kind = "top-angle", theta-end = 3.0 }
"#;
        let c = RunConfig::from_toml(text).unwrap();
        assert_eq!(
            c.bubbles[0].ends,
            EndConditions::TopAngle { theta_end: 3.0 }
        );
        let literal = "mode = \"near-only\"\n[[bubble]]\nid = 1\nends = { kind = \"literal\" }\n";
        assert_eq!(
            RunConfig::from_toml(literal).unwrap().bubbles[0].ends,
            EndConditions::Literal
        );
    }
}

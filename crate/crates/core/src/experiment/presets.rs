//! Built-in experiments. All experiment numbers live here.

use std::f64::consts::PI;

use super::config::{
    BubbleConfig, EfieldConfig, GridConfig, Mode, NearForm, RunConfig, TransportConfig,
};
use crate::levelset::{InitMode, NormalTermSign};
use crate::young_laplace::{EFieldForm, EndConditions};

pub const PRESET_NAMES: [&str; 5] = ["exp1", "exp2", "exp-2bubble", "exp10", "exp-efield"];

/// Pressure ratios of the ten-bubble sweep.
pub const SWEEP_PRESSURES: [f64; 10] = [0.2, 0.4, 0.6, 0.8, 1.0, 1.2, 1.4, 1.6, 1.8, 2.0];

/// Published `(a, b)` of the ten-bubble sweep without field.
pub const REPORTED_FORMATION_TABLE: [(f64, f64); 10] = [
    (0.5141, 0.9926),
    (0.5219, 0.9718),
    (0.5295, 0.9506),
    (0.5369, 0.9289),
    (0.5443, 0.9067),
    (0.5514, 0.8841),
    (0.5584, 0.8612),
    (0.5651, 0.8382),
    (0.5717, 0.8154),
    (0.5780, 0.7928),
];

/// Published `(a, b)` of the same sweep in the electric field.
pub const REPORTED_EFIELD_TABLE: [(f64, f64); 10] = [
    (0.5558, 0.8698),
    (0.5626, 0.8468),
    (0.5693, 0.8239),
    (0.5757, 0.8013),
    (0.5819, 0.7789),
    (0.5878, 0.7571),
    (0.5935, 0.7359),
    (0.5990, 0.7153),
    (0.6042, 0.6953),
    (0.6091, 0.6760),
];

/// Far-field centers of the ten bubbles: two columns of five.
pub const LATTICE_X: [f64; 2] = [20.0, 80.0];
pub const LATTICE_Y: [f64; 5] = [30.0, 50.0, 70.0, 90.0, 110.0];

/// Radius at `s = 0` shared by the formation experiments.
pub const START_RADIUS: f64 = 0.01;

/// Grid units per near-field length unit in the transport presets, so that
/// each bubble spans several cells of the 100 x 200 grid.
pub const TRANSPORT_SCALE: f64 = 10.0;

pub fn preset(name: &str) -> Option<RunConfig> {
    match name {
        "exp1" => Some(exp1()),
        "exp2" => Some(exp2()),
        "exp-2bubble" => Some(exp_2bubble()),
        "exp10" => Some(exp10()),
        "exp-efield" => Some(exp_efield()),
        _ => None,
    }
}

fn base(mode: Mode, bubbles: Vec<BubbleConfig>) -> RunConfig {
    RunConfig {
        mode,
        times: vec![0.1, 25.0, 50.0],
        refresh_every: 50,
        normal_term_sign: NormalTermSign::Pde,
        efield_form: EFieldForm::Canonical,
        init_mode: InitMode::Union,
        far_scale: 1.0,
        output_dir: None,
        grid: GridConfig::default(),
        transport: TransportConfig::default(),
        efield: None,
        oscillation: None,
        cd: None,
        bubbles,
    }
}

fn pressure_bubble(id: u32, delta_p_over_alpha: f64, length: f64, step: f64) -> BubbleConfig {
    BubbleConfig {
        id,
        form: NearForm::Pressure,
        delta_p_over_alpha,
        beta: 0.0,
        a: START_RADIUS,
        length,
        step,
        ends: EndConditions::default(),
        l0: None,
        placement: None,
        ellipse: None,
    }
}

/// Start radii 1, 2, 3, 3.5 with zero pressure, `L = 2πa²/4`, step `2π·0.001`.
pub fn exp1() -> RunConfig {
    let bubbles = [1.0, 2.0, 3.0, 3.5]
        .iter()
        .zip(1..)
        .map(|(&a, id)| BubbleConfig {
            a,
            ..pressure_bubble(id, 0.0, 2.0 * PI * a * a / 4.0, 2.0 * PI * 0.001)
        })
        .collect();
    base(Mode::NearOnly, bubbles)
}

/// Pressure ratios 0, 0.8, 1.4 at `L = 2`.
pub fn exp2() -> RunConfig {
    let bubbles = [0.0, 0.8, 1.4]
        .iter()
        .zip(1..)
        .map(|(&dp, id)| pressure_bubble(id, dp, 2.0, 0.001))
        .collect();
    base(Mode::NearOnly, bubbles)
}

/// Two bubbles of lengths 1 and 2 placed at (20, 100) and (70, 90).
pub fn exp_2bubble() -> RunConfig {
    let bubbles = vec![
        BubbleConfig {
            placement: Some([20.0, 100.0]),
            ..pressure_bubble(1, 0.8, 1.0, 0.001)
        },
        BubbleConfig {
            placement: Some([70.0, 90.0]),
            ..pressure_bubble(2, 0.8, 2.0, 0.001)
        },
    ];
    RunConfig {
        far_scale: TRANSPORT_SCALE,
        ..base(Mode::Coupled, bubbles)
    }
}

/// The ten-bubble sweep on the two-column lattice.
pub fn exp10() -> RunConfig {
    let bubbles = SWEEP_PRESSURES
        .iter()
        .enumerate()
        .map(|(k, &dp)| BubbleConfig {
            placement: Some([LATTICE_X[k / 5], LATTICE_Y[k % 5]]),
            ..pressure_bubble(k as u32 + 1, dp, 2.0, 0.001)
        })
        .collect();
    RunConfig {
        far_scale: TRANSPORT_SCALE,
        ..base(Mode::Coupled, bubbles)
    }
}

/// The ten-bubble sweep in the electric field.
pub fn exp_efield() -> RunConfig {
    RunConfig {
        mode: Mode::CoupledEfield,
        efield_form: EFieldForm::FirstPower,
        efield: Some(EfieldConfig {
            e0_sq: 0.1,
            epsilon: 1.0,
            rho: 0.1,
            g: 9.81,
            alpha: 0.1,
        }),
        ..exp10()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_preset_validates() {
        for name in PRESET_NAMES {
            let c = preset(name).unwrap();
            c.validate().unwrap_or_else(|e| panic!("{name}: {e}"));
            let back = RunConfig::from_toml(&c.to_toml()).unwrap();
            assert_eq!(back, c, "{name}");
        }
        assert!(preset("exp3").is_none());
    }

    #[test]
    fn exp1_inputs() {
        let c = exp1();
        assert_eq!(c.mode, Mode::NearOnly);
        let radii: Vec<f64> = c.bubbles.iter().map(|b| b.a).collect();
        assert_eq!(radii, vec![1.0, 2.0, 3.0, 3.5]);
        for b in &c.bubbles {
            assert_eq!(b.delta_p_over_alpha, 0.0);
            assert_eq!(b.step, 2.0 * PI * 0.001);
            assert_eq!(b.length, 2.0 * PI * b.a * b.a / 4.0);
        }
    }

    #[test]
    fn exp2_inputs() {
        let c = exp2();
        let dp: Vec<f64> = c.bubbles.iter().map(|b| b.delta_p_over_alpha).collect();
        assert_eq!(dp, vec![0.0, 0.8, 1.4]);
        assert!(c
            .bubbles
            .iter()
            .all(|b| b.length == 2.0 && b.step == 0.001 && b.a == 0.01));
    }

    #[test]
    fn two_bubble_inputs() {
        let c = exp_2bubble();
        assert_eq!(c.bubbles[0].length, 1.0);
        assert_eq!(c.bubbles[1].length, 2.0);
        assert!(c
            .bubbles
            .iter()
            .all(|b| b.delta_p_over_alpha == 0.8 && b.a == 0.01));
        assert_eq!(c.bubbles[0].placement, Some([20.0, 100.0]));
        assert_eq!(c.bubbles[1].placement, Some([70.0, 90.0]));
    }

    #[test]
    fn ten_bubble_inputs() {
        let c = exp10();
        assert_eq!(c.bubbles.len(), 10);
        for (b, dp) in c.bubbles.iter().zip(SWEEP_PRESSURES) {
            assert_eq!(b.delta_p_over_alpha, dp);
            assert_eq!((b.a, b.length, b.step), (0.01, 2.0, 0.001));
        }
        assert_eq!(c.times, vec![0.1, 25.0, 50.0]);
        assert_eq!(c.refresh_every, 50);
        assert_eq!(c.transport.velocity, [0.0, 1.0]);
        assert_eq!(c.transport.normal_speed, 0.05);
        assert_eq!((c.grid.nx, c.grid.ny), (100, 200));
        assert_eq!(c.far_scale, TRANSPORT_SCALE);
        assert_eq!(c.bubbles[0].placement, Some([20.0, 30.0]));
        assert_eq!(c.bubbles[9].placement, Some([80.0, 110.0]));
    }

    #[test]
    fn efield_inputs() {
        let c = exp_efield();
        assert_eq!(c.mode, Mode::CoupledEfield);
        assert_eq!(c.efield_form, EFieldForm::FirstPower);
        let e = c.efield.unwrap();
        assert_eq!((e.alpha, e.rho, e.g, e.e0_sq), (0.1, 0.1, 9.81, 0.1));
        assert_eq!(c.bubbles, exp10().bubbles);
    }
}

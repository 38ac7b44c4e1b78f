//! Desk-scale objective functions standing in for GPU training: a shifted
//! sphere over normalized coordinates, the same sphere with an infeasible
//! half-space that fails like an OOM, and the 2-d Branin function.

use num_traits::Float;

use crate::runner::TrialStatus;
use crate::space::{Configuration, HyperparameterDef, ParamDomain, ParamValue, SearchSpace};

/// Sphere target in normalized space.
pub const SPHERE_TARGET: f64 = 0.7;

/// `sum((u_i - 0.7)^2)` over the given coordinates.
pub fn sphere<F: Float>(coords: &[F]) -> F {
    let target = F::from(SPHERE_TARGET).unwrap();
    coords
        .iter()
        .map(|&u| (u - target) * (u - target))
        .fold(F::zero(), |a, b| a + b)
}

/// Standard Branin function on `x1 in [-5, 10], x2 in [0, 15]`; global
/// minimum ~0.397887 at (-pi, 12.275), (pi, 2.275), (9.42478, 2.475).
pub fn branin<F: Float>(x1: F, x2: F) -> F {
    let pi = F::from(std::f64::consts::PI).unwrap();
    let a = F::one();
    let b = F::from(5.1).unwrap() / (F::from(4.0).unwrap() * pi * pi);
    let c = F::from(5.0).unwrap() / pi;
    let r = F::from(6.0).unwrap();
    let s = F::from(10.0).unwrap();
    let t = F::one() / (F::from(8.0).unwrap() * pi);
    let inner = x2 - b * x1 * x1 + c * x1 - r;
    a * inner * inner + s * (F::one() - t) * x1.cos() + s
}

/// Pure, deterministic objective over configurations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SyntheticObjective {
    /// Sphere over the continuous dims of the normalized configuration.
    Sphere,
    /// Sphere with an OOM half-space where normalized `DEVICE_BATCH_SIZE`
    /// plus normalized `DEPTH` exceeds 1.2 (jointly large depth and batch
    /// blow past the memory cap).
    InfeasibleHalfspace,
    /// Branin over a 2-d `X1`/`X2` space.
    Branin,
}

impl SyntheticObjective {
    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "sphere14" | "sphere" => Some(Self::Sphere),
            "infeasible_halfspace" => Some(Self::InfeasibleHalfspace),
            "branin2" | "branin" => Some(Self::Branin),
            _ => None,
        }
    }

    pub fn evaluate(
        &self,
        config: &Configuration,
        space: &SearchSpace,
    ) -> (TrialStatus, Option<f64>) {
        match self {
            Self::Sphere => (TrialStatus::Ok, Some(self.sphere_value(config, space))),
            Self::InfeasibleHalfspace => {
                if Self::infeasible(config, space) {
                    (TrialStatus::Oom, None)
                } else {
                    (TrialStatus::Ok, Some(self.sphere_value(config, space)))
                }
            }
            Self::Branin => {
                let x1 = config.get("X1").and_then(ParamValue::as_f64);
                let x2 = config.get("X2").and_then(ParamValue::as_f64);
                match (x1, x2) {
                    (Some(x1), Some(x2)) => (TrialStatus::Ok, Some(branin(x1, x2))),
                    _ => (TrialStatus::RuntimeError, None),
                }
            }
        }
    }

    fn sphere_value(&self, config: &Configuration, space: &SearchSpace) -> f64 {
        let coords = space
            .normalize_continuous(config)
            .expect("config validates against space");
        sphere(&coords)
    }

    /// Strict inequality: the boundary itself is feasible.
    pub fn infeasible(config: &Configuration, space: &SearchSpace) -> bool {
        let norm = |name: &str| {
            space
                .param(name)
                .expect("space has the parameter")
                .normalize_value(config.get(name).expect("config validates"))
        };
        norm("DEVICE_BATCH_SIZE") + norm("DEPTH") > 1.2
    }
}

/// The 2-d Branin search space with the standard box.
pub fn branin_space() -> SearchSpace {
    SearchSpace::new(vec![
        HyperparameterDef {
            name: "X1".to_string(),
            domain: ParamDomain::Real {
                low: -5.0,
                high: 10.0,
                log: false,
            },
            default: ParamValue::Float(0.0),
        },
        HyperparameterDef {
            name: "X2".to_string(),
            domain: ParamDomain::Real {
                low: 0.0,
                high: 15.0,
                log: false,
            },
            default: ParamValue::Float(7.5),
        },
    ])
    .expect("branin space is valid")
}

/// Standalone trial script exercising the full subprocess protocol: it
/// reads its own (possibly rewritten) assignments, evaluates the sphere
/// objective with the infeasible half-space, and writes the result file.
pub const SYNTHETIC_TRIAL_SCRIPT: &str = include_str!("../data/synthetic_trial.py");

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;
use std::str::FromStr;

use super::{run_known, run_unknown, Round, DEFAULT_PRUNE_TOL};
use crate::entanglement::{concurrence_value, ppt_check, DEFAULT_CONCURRENCE_TOL};
use crate::error::{Error, Result};
use crate::matrix::{partial_transpose, Mat4, Vec3, C64};
use crate::measurements::{example2_m, example3_k, special_weak, SpecialWeakParams, TwoOutcomeMeasurement};
use crate::states::{DensityMatrix2Q, StatePreset, EXAMPLE1_DEFAULT_A};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Example {
    One,
    Two,
    Three,
    Appendix,
}

impl FromStr for Example {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "1" => Ok(Example::One),
            "2" => Ok(Example::Two),
            "3" => Ok(Example::Three),
            "appendix" => Ok(Example::Appendix),
            other => Err(Error::UnknownPreset(other.to_string())),
        }
    }
}

impl fmt::Display for Example {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Example::One => "1",
            Example::Two => "2",
            Example::Three => "3",
            Example::Appendix => "appendix",
        })
    }
}

/// Which qubits a round of the example measurement acts on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Target {
    System,
    Environment,
    Both,
}

impl Target {
    pub const ALL: [Target; 3] = [Target::System, Target::Environment, Target::Both];

    pub fn round(&self, m: &TwoOutcomeMeasurement) -> Round {
        match self {
            Target::System => Round::system(m.clone()),
            Target::Environment => Round::environment(m.clone()),
            Target::Both => Round::both(m.clone(), m.clone()),
        }
    }
}

impl FromStr for Target {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "system" => Ok(Target::System),
            "environment" => Ok(Target::Environment),
            "both" => Ok(Target::Both),
            other => Err(Error::UnknownPreset(other.to_string())),
        }
    }
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Target::System => "system",
            Target::Environment => "environment",
            Target::Both => "both",
        })
    }
}

/// Optional overrides; unset fields take the example's own values.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ExampleParams {
    /// Coherence of the example 1 state.
    pub a: Option<f64>,
    /// Measurement strength (examples 1, 3 and appendix).
    pub epsilon: Option<f64>,
    /// Schmidt angle (examples 3 and appendix).
    pub theta: Option<f64>,
    /// Subsystem(s) measured in the reported run.
    pub target: Option<Target>,
    /// Concurrence-zero and PPT tolerance.
    pub tol: Option<f64>,
}

/// Outcome of one subsystem reading of an example.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Interpretation {
    pub target: Target,
    pub final_concurrence: f64,
    pub min_pt_eigenvalue: f64,
    pub ppt: bool,
    /// Concurrence zero and PPT, both at the report tolerance.
    pub separable: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExampleReport {
    pub example: Example,
    pub measurement: String,
    pub epsilon: Option<f64>,
    pub theta: Option<f64>,
    pub tol: f64,
    pub initial_concurrence: f64,
    /// Every subsystem reading, system first.
    pub interpretations: Vec<Interpretation>,
    /// The reading used for the fields below.
    pub target: Target,
    pub final_state: DensityMatrix2Q,
    pub final_concurrence: f64,
    pub ppt: bool,
    pub min_pt_eigenvalue: f64,
    pub pt_determinant: f64,
    pub separable: bool,
    /// `(outcomes, probability, concurrence)` per known-outcome branch.
    pub branches: Vec<(String, f64, f64)>,
    pub min_branch_concurrence: f64,
    /// Max entry deviation from the closed-form final matrix, when there is one.
    pub appendix_residual: Option<f64>,
}

impl ExampleReport {
    pub fn interpretation(&self, target: Target) -> Option<&Interpretation> {
        self.interpretations.iter().find(|i| i.target == target)
    }

    /// Readings that leave the assigned state separable.
    pub fn separable_targets(&self) -> Vec<Target> {
        self.interpretations.iter().filter(|i| i.separable).map(|i| i.target).collect()
    }
}

/// The closed-form final state of the appendix example:
/// `(1±cosθ)/4` on the diagonal and `sinθ/4` on the anti-diagonal.
pub fn appendix_matrix(theta: f64) -> Mat4 {
    let (s, c) = theta.sin_cos();
    let d = [1.0 + c, 1.0 - c, 1.0 + c, 1.0 - c];
    let mut m = Mat4::zero();
    for (i, v) in d.iter().enumerate() {
        m[(i, i)] = C64::new(v / 4.0, 0.0);
        m[(i, 3 - i)] = C64::new(s / 4.0, 0.0);
    }
    m
}

fn interpret(rho: &DensityMatrix2Q, m: &TwoOutcomeMeasurement, target: Target, tol: f64) -> Result<(Interpretation, DensityMatrix2Q)> {
    let out = run_unknown(rho, &[target.round(m)]);
    let v = ppt_check(&out, tol)?;
    let final_concurrence = concurrence_value(&out)?;
    Ok((
        Interpretation {
            target,
            final_concurrence,
            min_pt_eigenvalue: v.min_pt_eigenvalue,
            ppt: v.ppt,
            separable: v.ppt && v.concurrence_zero,
        },
        out,
    ))
}

/// Rebuilds one of the worked examples, runs a single unknown-outcome round
/// under every subsystem reading, and the known-outcome branches under the
/// recorded one.
///
/// Recorded readings: examples 1, 2 and 3 measure both qubits; the appendix
/// example measures the system only.
pub fn run_example(which: Example, params: &ExampleParams) -> Result<ExampleReport> {
    let tol = params.tol.unwrap_or(DEFAULT_CONCURRENCE_TOL);
    let (rho, m, epsilon, theta, default_target) = match which {
        Example::One => {
            let a = params.a.unwrap_or(EXAMPLE1_DEFAULT_A);
            let eps = params.epsilon.unwrap_or(0.1);
            let m = special_weak(&SpecialWeakParams::new(eps, Vec3::X)?);
            (StatePreset::Example1 { a }.build()?, m, Some(eps), None, Target::Both)
        }
        Example::Two => (StatePreset::Example2Initial.build()?, example2_m(), None, None, Target::Both),
        Example::Three => {
            let eps = params.epsilon.unwrap_or(0.01);
            let theta = params.theta.unwrap_or(1e-4);
            (StatePreset::Schmidt { theta }.build()?, example3_k(eps)?, Some(eps), Some(theta), Target::Both)
        }
        Example::Appendix => {
            let eps = params.epsilon.unwrap_or(FRAC_1_SQRT_2);
            let theta = params.theta.unwrap_or(1e-4);
            (StatePreset::Schmidt { theta }.build()?, example3_k(eps)?, Some(eps), Some(theta), Target::System)
        }
    };
    let target = params.target.unwrap_or(default_target);

    let mut interpretations = Vec::with_capacity(3);
    let mut chosen = None;
    for t in Target::ALL {
        let (interp, state) = interpret(&rho, &m, t, tol)?;
        if t == target {
            chosen = Some((interp, state));
        }
        interpretations.push(interp);
    }
    let (interp, final_state) = chosen.expect("target is one of Target::ALL");

    let ensemble = run_known(&rho, &[target.round(&m)], DEFAULT_PRUNE_TOL)?;
    let branches = ensemble
        .branches
        .iter()
        .map(|b| Ok((b.outcome_string(), b.probability, concurrence_value(&b.state)?)))
        .collect::<Result<Vec<_>>>()?;
    let min_branch_concurrence = branches.iter().map(|b| b.2).fold(f64::INFINITY, f64::min);

    let appendix_residual = match (which, theta) {
        (Example::Appendix, Some(theta)) => Some((*final_state.matrix() - appendix_matrix(theta)).max_abs()),
        _ => None,
    };

    Ok(ExampleReport {
        example: which,
        measurement: m.label().to_string(),
        epsilon,
        theta,
        tol,
        initial_concurrence: concurrence_value(&rho)?,
        interpretations,
        target,
        pt_determinant: partial_transpose(final_state.matrix()).det().re,
        final_state,
        final_concurrence: interp.final_concurrence,
        ppt: interp.ppt,
        min_pt_eigenvalue: interp.min_pt_eigenvalue,
        separable: interp.separable,
        branches,
        min_branch_concurrence,
        appendix_residual,
    })
}

//! Measurement schedules applied with recorded outcomes (branch tracking) or
//! forgotten outcomes (the outcome-summed channel), plus the closed forms
//! that predict their entanglement.

mod examples;
mod verify;

use std::fmt;

use crate::entanglement::product_state_test;
use crate::error::{Error, Result};
use crate::matrix::{tensor, Mat2, Mat3, Mat4, Vec3};
use crate::measurements::{special_weak, SpecialWeakParams, TwoOutcomeMeasurement};
use crate::states::{bloch_decompose, bloch_rotation, diagonalize_correlation, BlochForm, DensityMatrix2Q};

pub use examples::{run_example, Example, ExampleParams, ExampleReport, Interpretation, Target};
pub use verify::{
    verify_corollary3, verify_examples, verify_lemma2, verify_suite, verify_theorem1, verify_theorem1_with,
    verify_theorem2, Check, Suite, SuiteReport, Theorem1Options, Theorem1Report,
};

/// Branches with smaller probability are pruned.
pub const DEFAULT_PRUNE_TOL: f64 = 1e-14;
/// Below this trace a single outcome is impossible.
pub const ZERO_PROBABILITY: f64 = 1e-14;
/// Upper bound on the number of tracked branches.
pub const MAX_BRANCHES: usize = 1 << 20;
/// Normalization floor for the Bloch update.
pub const MIN_ETA: f64 = 1e-12;
/// Minimum product gap for an input to count as correlated.
pub const MIN_CORRELATION: f64 = 1e-6;

/// One round of a schedule: an optional measurement on each qubit.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct Round {
    pub system: Option<TwoOutcomeMeasurement>,
    pub environment: Option<TwoOutcomeMeasurement>,
}

impl Round {
    pub fn system(m: TwoOutcomeMeasurement) -> Self {
        Round { system: Some(m), environment: None }
    }

    pub fn environment(m: TwoOutcomeMeasurement) -> Self {
        Round { system: None, environment: Some(m) }
    }

    pub fn both(system: TwoOutcomeMeasurement, environment: TwoOutcomeMeasurement) -> Self {
        Round { system: Some(system), environment: Some(environment) }
    }

    fn outcome_count(&self) -> usize {
        (if self.system.is_some() { 2 } else { 1 }) * (if self.environment.is_some() { 2 } else { 1 })
    }

    /// Every `(outcome, R, W)` combination in deterministic order:
    /// system outcome outer, `+` before `−`.
    fn outcomes(&self) -> Vec<(Outcome, Mat2, Mat2)> {
        let side = |m: &Option<TwoOutcomeMeasurement>| -> Vec<(Option<Sign>, Mat2)> {
            match m {
                None => vec![(None, Mat2::identity())],
                Some(m) => vec![(Some(Sign::Plus), *m.plus()), (Some(Sign::Minus), *m.minus())],
            }
        };
        let mut out = Vec::with_capacity(self.outcome_count());
        for (s, r) in side(&self.system) {
            for (e, w) in side(&self.environment) {
                out.push((Outcome { system: s, environment: e }, r, w));
            }
        }
        out
    }
}

pub type Schedule = Vec<Round>;

/// `rounds` copies of the same round.
pub fn repeat(round: Round, rounds: usize) -> Schedule {
    vec![round; rounds]
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Sign {
    Plus,
    Minus,
}

/// The recorded result of one round.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Outcome {
    pub system: Option<Sign>,
    pub environment: Option<Sign>,
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sym = |s: Sign| if s == Sign::Plus { '+' } else { '-' };
        if let Some(s) = self.system {
            write!(f, "S{}", sym(s))?;
        }
        if let Some(e) = self.environment {
            write!(f, "E{}", sym(e))?;
        }
        if self.system.is_none() && self.environment.is_none() {
            write!(f, "_")?;
        }
        Ok(())
    }
}

/// One outcome trajectory.
#[derive(Clone, Debug, PartialEq)]
pub struct Branch {
    pub outcomes: Vec<Outcome>,
    pub probability: f64,
    pub state: DensityMatrix2Q,
    /// `Π |det R_i| |det W_i|` over the applied outcome operators.
    pub det_weight: f64,
}

impl Branch {
    pub fn outcome_string(&self) -> String {
        self.outcomes.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
    }

    /// `C0 · Π|det| / p`, the concurrence predicted for this branch from the
    /// input concurrence `c0`.
    pub fn predicted_concurrence(&self, c0: f64) -> f64 {
        c0 * self.det_weight / self.probability
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BranchEnsemble {
    pub branches: Vec<Branch>,
    /// Total probability of pruned branches.
    pub dropped_mass: f64,
}

impl BranchEnsemble {
    pub fn total_probability(&self) -> f64 {
        self.branches.iter().map(|b| b.probability).sum::<f64>() + self.dropped_mass
    }

    /// The outcome-averaged state `Σ p_b ρ_b` (surviving branches only).
    pub fn mixture(&self) -> Mat4 {
        self.branches.iter().fold(Mat4::zero(), |acc, b| acc + *b.state.matrix() * b.probability)
    }
}

/// `(R⊗W) ρ (R⊗W)†` and its trace, unnormalized.
fn conjugate_local(rho: &Mat4, r: &Mat2, w: &Mat2) -> Mat4 {
    rho.conjugate_by(&tensor(r, w))
}

/// Applies one outcome `R⊗W` and renormalizes. Returns the outcome
/// probability and the conditioned state.
pub fn apply_outcome(rho: &DensityMatrix2Q, r: &Mat2, w: &Mat2) -> Result<(f64, DensityMatrix2Q)> {
    let unnormalized = conjugate_local(rho.matrix(), r, w);
    let probability = unnormalized.trace().re;
    if !(probability >= ZERO_PROBABILITY) {
        return Err(Error::ZeroProbability { probability });
    }
    Ok((probability, DensityMatrix2Q::from_trusted(unnormalized * (1.0 / probability))))
}

/// Tracks every outcome trajectory of a schedule.
///
/// Branches whose probability falls below `prune_tol` are dropped and their
/// mass accumulated in [`BranchEnsemble::dropped_mass`]. Schedules with more
/// than [`MAX_BRANCHES`] trajectories are refused.
pub fn run_known(rho: &DensityMatrix2Q, schedule: &[Round], prune_tol: f64) -> Result<BranchEnsemble> {
    let count: u128 = schedule.iter().map(|r| r.outcome_count() as u128).product();
    if count > MAX_BRANCHES as u128 {
        return Err(Error::TooManyBranches { count, limit: MAX_BRANCHES });
    }

    struct Partial {
        outcomes: Vec<Outcome>,
        unnormalized: Mat4,
        det_weight: f64,
    }

    let mut live = vec![Partial { outcomes: Vec::new(), unnormalized: *rho.matrix(), det_weight: 1.0 }];
    let mut dropped_mass = 0.0;
    for round in schedule {
        let options = round.outcomes();
        let mut next = Vec::with_capacity(live.len() * options.len());
        for partial in &live {
            for (outcome, r, w) in &options {
                let unnormalized = conjugate_local(&partial.unnormalized, r, w);
                let p = unnormalized.trace().re;
                if p < prune_tol {
                    dropped_mass += p.max(0.0);
                    continue;
                }
                let mut outcomes = partial.outcomes.clone();
                outcomes.push(*outcome);
                next.push(Partial {
                    outcomes,
                    unnormalized,
                    det_weight: partial.det_weight * r.det().norm() * w.det().norm(),
                });
            }
        }
        live = next;
    }

    let branches = live
        .into_iter()
        .map(|p| {
            let probability = p.unnormalized.trace().re;
            Branch {
                outcomes: p.outcomes,
                probability,
                state: DensityMatrix2Q::from_unnormalized(&p.unnormalized),
                det_weight: p.det_weight,
            }
        })
        .collect();
    Ok(BranchEnsemble { branches, dropped_mass })
}

fn apply_channel(rho: &Mat4, m: &TwoOutcomeMeasurement, on_system: bool) -> Mat4 {
    let id = Mat2::identity();
    m.outcomes().iter().fold(Mat4::zero(), |acc, k| {
        let (r, w) = if on_system { (*k, &id) } else { (&id, *k) };
        acc + conjugate_local(rho, r, w)
    })
}

/// The state assigned when outcomes are not recorded:
/// `ρ → Σ (R⊗W) ρ (R⊗W)†`, applied round by round.
pub fn run_unknown(rho: &DensityMatrix2Q, schedule: &[Round]) -> DensityMatrix2Q {
    let mut m = *rho.matrix();
    for round in schedule {
        if let Some(sys) = &round.system {
            m = apply_channel(&m, sys, true);
        }
        if let Some(env) = &round.environment {
            m = apply_channel(&m, env, false);
        }
    }
    DensityMatrix2Q::from_trusted(m)
}

/// `(1−ε1²)^{n/2} (1−ε2²)^{y/2} · C0`, the concurrence left on a pure state
/// after `n` unrecorded special weak measurements on the system and `y` on
/// the environment.
pub fn closed_form_concurrence(c0: f64, eps1: f64, n: u32, eps2: f64, y: u32) -> f64 {
    let factor = |eps: f64, rounds: u32| {
        if rounds == 0 {
            1.0
        } else {
            (1.0 - eps * eps).max(0.0).powf(rounds as f64 / 2.0)
        }
    };
    factor(eps1, n) * factor(eps2, y) * c0
}

/// Bloch data after the `M+` outcome, with its normalization `η = 1 + ε n̂ᵀa`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UpdateTriple {
    pub a_prime: Vec3,
    pub b_prime: Vec3,
    pub t_prime: Mat3,
    pub eta: f64,
}

impl UpdateTriple {
    pub fn bloch(&self) -> BlochForm {
        BlochForm::new(self.a_prime, self.b_prime, self.t_prime)
    }

    /// `‖T′ − a′b′ᵀ‖_F`
    pub fn product_gap(&self) -> f64 {
        self.bloch().product_gap()
    }
}

/// Closed-form update of `(a, b, T)` under the `M+(ε, n̂)` outcome on the
/// system, for a state whose correlation matrix is diagonal.
///
/// ```text
/// b′ = (b + ε Tᵀn̂) / η
/// a′ = (√(1−ε²) a + (1−√(1−ε²)) n̂n̂ᵀ a + ε n̂) / η
/// T′ = (√(1−ε²) T + (1−√(1−ε²)) n̂n̂ᵀ T + ε n̂ bᵀ) / η
/// ```
/// The `M−` outcome is the same update with `n̂ → −n̂`.
pub fn bloch_update_mplus(f: &BlochForm, p: &SpecialWeakParams) -> Result<UpdateTriple> {
    let residual = f.t.off_diagonal_max();
    if residual > 1e-9 {
        return Err(Error::NotDiagonal { residual });
    }
    let (eps, n) = (p.epsilon(), p.axis());
    let eta = 1.0 + eps * n.dot(&f.a);
    if !(eta > MIN_ETA) {
        return Err(Error::DegenerateNormalization { eta });
    }
    let root = (1.0 - eps * eps).max(0.0).sqrt();
    let nn = Mat3::outer(&n, &n);
    let inv = 1.0 / eta;
    Ok(UpdateTriple {
        b_prime: (f.b + f.t.transpose() * n * eps) * inv,
        a_prime: (f.a * root + nn * f.a * (1.0 - root) + n * eps) * inv,
        t_prime: (f.t * root + nn * f.t * (1.0 - root) + Mat3::outer(&n, &f.b) * eps) * inv,
        eta,
    })
}

/// [`bloch_update_mplus`] for the `M−` outcome.
pub fn bloch_update_mminus(f: &BlochForm, p: &SpecialWeakParams) -> Result<UpdateTriple> {
    bloch_update_mplus(f, &p.flipped())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CnatpReport {
    /// Product gap of the input state.
    pub input_gap: f64,
    /// `‖T′ − a′b′ᵀ‖_F` after the `M+` outcome.
    pub gap_plus: f64,
    /// Same for `M−`.
    pub gap_minus: f64,
    /// Largest off-diagonal correlation left after diagonalization.
    pub diagonal_residual: f64,
}

impl CnatpReport {
    pub fn min_gap(&self) -> f64 {
        self.gap_plus.min(self.gap_minus)
    }
}

/// Product gaps of both special-weak outcomes on a correlated state.
///
/// The state is first brought to a frame with diagonal correlations; the
/// measurement axis is rotated along (`U M U†` is `M` with axis `R_U n̂`) and
/// the closed-form update is evaluated there. Product gaps are invariant
/// under local unitaries, so the gaps are those of the original outcomes.
pub fn cnatp_certificate(rho: &DensityMatrix2Q, p: &SpecialWeakParams) -> Result<CnatpReport> {
    let input_gap = product_state_test(rho, MIN_CORRELATION)?.correlation_gap;
    if input_gap <= MIN_CORRELATION {
        return Err(Error::InputNotCorrelated { gap: input_gap });
    }
    let (frame, rho_d) = diagonalize_correlation(rho)?;
    let f = bloch_decompose(&rho_d)?;
    let axis = (bloch_rotation(&frame.u) * p.axis()).normalized();
    let rotated = SpecialWeakParams::new(p.epsilon(), axis)?;
    let plus = bloch_update_mplus(&f, &rotated)?;
    let minus = bloch_update_mminus(&f, &rotated)?;
    Ok(CnatpReport {
        input_gap,
        gap_plus: plus.product_gap(),
        gap_minus: minus.product_gap(),
        diagonal_residual: f.t.off_diagonal_max(),
    })
}

/// Product gaps of the `M±` outcomes computed by full density-matrix
/// conjugation, without the diagonal-frame reduction.
pub fn direct_outcome_gaps(rho: &DensityMatrix2Q, p: &SpecialWeakParams) -> Result<[f64; 2]> {
    let m = special_weak(p);
    let id = Mat2::identity();
    let gap = |k: &Mat2| -> Result<f64> {
        let (_, post) = apply_outcome(rho, k, &id)?;
        Ok(bloch_decompose(&post)?.product_gap())
    };
    Ok([gap(m.plus())?, gap(m.minus())?])
}

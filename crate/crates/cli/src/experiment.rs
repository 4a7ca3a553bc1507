//! Experiment execution: configured schedules and ε × rounds sweeps.

use rayon::prelude::*;

use enatp::entanglement::{concurrence_value, ppt_check};
use enatp::matrix::Vec3;
use enatp::measurements::{special_weak, SpecialWeakParams};
use enatp::sequences::{run_known, run_unknown, Round, Target};
use enatp::states::{bloch_decompose, DensityMatrix2Q};

use crate::config::{ExperimentConfig, Mode, StateSpec, Tolerances};
use crate::record::ResultRecord;
use crate::CliError;

const PURITY_TOL: f64 = 1e-12;
const ALIGN_TOL: f64 = 1e-9;
const PROBABILITY_TOL: f64 = 1e-10;
const MONOTONE_TOL: f64 = 1e-12;

/// Rows plus any numerical invariant that failed while producing them.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunOutput {
    pub records: Vec<ResultRecord>,
    pub violations: Vec<String>,
}

/// Special weak rounds in a geometry where the unknown-outcome concurrence
/// of a pure input has the closed form `Π √(1−ε²) · C0`.
struct ClosedForm {
    input_concurrence: f64,
    a: Vec3,
    b: Vec3,
    t: enatp::Mat3,
    system_axis: Option<Vec3>,
    environment_axis: Option<Vec3>,
    factor: f64,
    applies: bool,
}

impl ClosedForm {
    fn new(rho: &DensityMatrix2Q) -> enatp::Result<Self> {
        let f = bloch_decompose(rho)?;
        Ok(ClosedForm {
            input_concurrence: concurrence_value(rho)?,
            a: f.a,
            b: f.b,
            t: f.t,
            system_axis: None,
            environment_axis: None,
            factor: 1.0,
            applies: rho.purity() > 1.0 - PURITY_TOL,
        })
    }

    fn parallel(fixed: &mut Option<Vec3>, axis: Vec3) -> bool {
        match fixed {
            None => {
                *fixed = Some(axis);
                true
            }
            Some(first) => first.cross(&axis).norm() < ALIGN_TOL,
        }
    }

    /// Folds one round in.
    fn push(&mut self, round: &Round) {
        if !self.applies {
            return;
        }
        for (m, on_system) in [(&round.system, true), (&round.environment, false)] {
            let Some(m) = m else { continue };
            let Some(p) = m.special_equivalent() else {
                self.applies = false;
                return;
            };
            let slot = if on_system { &mut self.system_axis } else { &mut self.environment_axis };
            if !Self::parallel(slot, p.axis()) {
                self.applies = false;
                return;
            }
            self.factor *= (1.0 - p.epsilon() * p.epsilon()).max(0.0).sqrt();
        }
        self.applies &= match (self.system_axis, self.environment_axis) {
            (Some(n), None) => self.a.cross(&n).norm() < ALIGN_TOL,
            (None, Some(n)) => self.b.cross(&n).norm() < ALIGN_TOL,
            (Some(ns), Some(ne)) => (ns.dot(&(self.t * ne)).abs() - 1.0).abs() < ALIGN_TOL,
            (None, None) => true,
        };
    }

    fn prediction(&self) -> Option<f64> {
        self.applies.then_some(self.factor * self.input_concurrence)
    }
}

fn check_record(r: &ResultRecord, tol: &Tolerances, violations: &mut Vec<String>) {
    let at = format!("{} rounds={}", r.experiment_id, r.rounds);
    if !(0.0..=1.0).contains(&r.final_concurrence) {
        violations.push(format!("{at}: final concurrence {} outside [0, 1]", r.final_concurrence));
    }
    if let Some(err) = r.abs_error {
        if err > tol.invariant {
            violations.push(format!("{at}: |final - predicted| = {err:e} exceeds {:e}", tol.invariant));
        }
    }
}

fn unknown_row(
    id: &str,
    epsilon: Option<f64>,
    rounds: usize,
    c0: f64,
    state: &DensityMatrix2Q,
    predicted: Option<f64>,
    tol: &Tolerances,
    violations: &mut Vec<String>,
) -> enatp::Result<ResultRecord> {
    let trace = state.matrix().trace().re;
    if (trace - 1.0).abs() > PROBABILITY_TOL {
        violations.push(format!("{id} rounds={rounds}: trace {trace} after unknown-outcome rounds"));
    }
    let v = ppt_check(state, tol.concurrence)?;
    let record = ResultRecord {
        experiment_id: id.to_string(),
        epsilon,
        rounds,
        initial_concurrence: c0,
        final_concurrence: concurrence_value(state)?,
        predicted_concurrence: None,
        abs_error: None,
        separable: v.ppt && v.concurrence_zero,
        min_branch_concurrence: None,
    }
    .with_prediction(predicted);
    check_record(&record, tol, violations);
    Ok(record)
}

/// Runs a configured experiment, one row after each round (row 0 is the input).
///
/// Unknown mode reports the concurrence of the outcome-summed state and, when
/// the closed form applies, its prediction. Known mode reports the
/// probability-weighted mean branch concurrence against `C0 Σ_b Π|det|`,
/// the smallest branch concurrence, and `separable` only when every branch is.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunOutput, CliError> {
    let rho = cfg.state.build(cfg.seed)?;
    let c0 = concurrence_value(&rho)?;
    let rounds = cfg.rounds();
    let epsilon_at = |k: usize| -> Option<f64> {
        let entry = if k == 0 { rounds.first() } else { rounds.get(k - 1) };
        entry.and_then(|(e, _)| cfg.schedule[*e].preset.epsilon())
    };
    let mut out = RunOutput::default();

    match cfg.mode {
        Mode::Unknown => {
            let mut closed = ClosedForm::new(&rho)?;
            let mut state = rho;
            for k in 0..=rounds.len() {
                if k > 0 {
                    let round = &rounds[k - 1].1;
                    state = run_unknown(&state, std::slice::from_ref(round));
                    closed.push(round);
                }
                let row = unknown_row(&cfg.id, epsilon_at(k), k, c0, &state, closed.prediction(), &cfg.tol, &mut out.violations)?;
                out.records.push(row);
            }
        }
        Mode::Known => {
            let schedule: Vec<Round> = rounds.iter().map(|(_, r)| r.clone()).collect();
            for k in 0..=schedule.len() {
                let ens = run_known(&rho, &schedule[..k], cfg.tol.prune)?;
                let total = ens.total_probability();
                if (total - 1.0).abs() > PROBABILITY_TOL {
                    out.violations.push(format!("{} rounds={k}: branch probabilities sum to {total}", cfg.id));
                }
                let mut mean = 0.0;
                let mut weight = 0.0;
                let mut min_branch = f64::INFINITY;
                let mut separable = true;
                for b in &ens.branches {
                    let v = ppt_check(&b.state, cfg.tol.concurrence)?;
                    let c = concurrence_value(&b.state)?;
                    mean += b.probability * c;
                    weight += b.det_weight;
                    min_branch = min_branch.min(c);
                    separable &= v.ppt && v.concurrence_zero;
                }
                let record = ResultRecord {
                    experiment_id: cfg.id.clone(),
                    epsilon: epsilon_at(k),
                    rounds: k,
                    initial_concurrence: c0,
                    final_concurrence: mean,
                    predicted_concurrence: None,
                    abs_error: None,
                    separable,
                    min_branch_concurrence: min_branch.is_finite().then_some(min_branch),
                }
                .with_prediction(Some(c0 * weight));
                check_record(&record, &cfg.tol, &mut out.violations);
                out.records.push(record);
            }
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepParams {
    pub eps_min: f64,
    pub eps_max: f64,
    pub eps_steps: usize,
    pub rounds_max: usize,
    pub state: StateSpec,
    pub target: Target,
    pub axis: Vec3,
    pub seed: u64,
    pub tol: Tolerances,
}

impl SweepParams {
    pub fn epsilons(&self) -> Vec<f64> {
        if self.eps_steps == 1 {
            return vec![self.eps_min];
        }
        let last = self.eps_steps - 1;
        (0..self.eps_steps)
            .map(|k| if k == last { self.eps_max } else { self.eps_min + (self.eps_max - self.eps_min) * k as f64 / last as f64 })
            .collect()
    }

    fn validate(&self) -> Result<(), CliError> {
        let ok = 0.0 <= self.eps_min && self.eps_min <= self.eps_max && self.eps_max <= 1.0;
        if !ok {
            return Err(CliError::Usage(format!(
                "need 0 <= eps-min <= eps-max <= 1, got [{}, {}]",
                self.eps_min, self.eps_max
            )));
        }
        if self.eps_steps == 0 {
            return Err(CliError::Usage("eps-steps must be at least 1".into()));
        }
        Ok(())
    }
}

/// Special weak measurements of strength ε along `axis` on `target`, for
/// every ε of the grid and 0..=rounds_max unknown-outcome rounds. Rows are
/// ordered by ε, then rounds; grid columns run in parallel.
pub fn sweep(params: &SweepParams) -> Result<RunOutput, CliError> {
    params.validate()?;
    let rho = params.state.build(params.seed)?;
    let c0 = concurrence_value(&rho)?;
    let id = format!("sweep-{}", params.target);

    let columns = params
        .epsilons()
        .into_par_iter()
        .map(|eps| -> Result<RunOutput, CliError> {
            let m = special_weak(&SpecialWeakParams::with_direction(eps, params.axis)?);
            let round = params.target.round(&m);
            let mut closed = ClosedForm::new(&rho)?;
            let mut state = rho;
            let mut out = RunOutput::default();
            for k in 0..=params.rounds_max {
                if k > 0 {
                    state = run_unknown(&state, std::slice::from_ref(&round));
                    closed.push(&round);
                }
                let row = unknown_row(&id, Some(eps), k, c0, &state, closed.prediction(), &params.tol, &mut out.violations)?;
                out.records.push(row);
            }
            Ok(out)
        })
        .collect::<Result<Vec<_>, _>>()?;

    let mut out = RunOutput::default();
    for column in &columns {
        out.violations.extend(column.violations.iter().cloned());
        for pair in column.records.windows(2) {
            if pair[1].final_concurrence > pair[0].final_concurrence + MONOTONE_TOL {
                out.violations.push(format!("concurrence increases with rounds at eps={:?}, rounds={}", pair[1].epsilon, pair[1].rounds));
            }
        }
    }
    for pair in columns.windows(2) {
        for (lo, hi) in pair[0].records.iter().zip(&pair[1].records) {
            if hi.final_concurrence > lo.final_concurrence + MONOTONE_TOL {
                out.violations.push(format!("concurrence increases with eps at eps={:?}, rounds={}", hi.epsilon, hi.rounds));
            }
        }
    }
    out.records = columns.into_iter().flat_map(|c| c.records).collect();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;
    use enatp::states::StatePreset;

    fn run(text: &str) -> RunOutput {
        run_experiment(&parse_config(text, 1e-9).unwrap()).unwrap()
    }

    #[test]
    fn bell_decay_row() {
        let out = run("state = bell-phi-plus\nschedule = special(0.6,0,0,1) @ system x 2\n");
        assert!(out.violations.is_empty());
        assert_eq!(out.records.len(), 3);
        let last = &out.records[2];
        assert!((last.final_concurrence - 0.64).abs() < 1e-12);
        assert!((last.predicted_concurrence.unwrap() - 0.64).abs() < 1e-15);
        assert_eq!(last.epsilon, Some(0.6));
    }

    #[test]
    fn example1_is_separable() {
        let out = run("state = example1\nschedule = special(0.1,1,0,0) @ both\n");
        assert!(out.records[1].separable);
        assert!(!out.records[0].separable);
        assert_eq!(out.records[1].predicted_concurrence, None);
    }

    #[test]
    fn misaligned_axes_have_no_prediction() {
        let out = run("state = schmidt(0.7)\nschedule = special(0.5,1,0,0) @ system x 2\n");
        assert_eq!(out.records[2].predicted_concurrence, None);
        let out = run("state = schmidt(0.7)\nschedule = special(0.5,0,0,1) @ system ; special(0.5,0,0,-1) @ environment x 2\n");
        assert!(out.records[3].abs_error.unwrap() < 1e-12);
    }

    #[test]
    fn both_qubits_need_correlated_axes() {
        let out = run("state = bell-phi-plus\nschedule = special(0.5,0,0,1) @ both x 3\n");
        assert!(out.records[3].abs_error.unwrap() < 1e-12);
        let out = run("state = bell-phi-plus\nschedule = special(0.5,0,1,0) @ both x 2\n");
        // Φ+ has ⟨σy⊗σy⟩ = −1, so ŷ on both qubits is still aligned.
        assert!(out.records[2].abs_error.unwrap() < 1e-12);
        let out = run("state = bell-phi-plus\nschedule = special(0.5,0,0,1) @ system ; special(0.5,1,0,0) @ environment\n");
        assert_eq!(out.records[2].predicted_concurrence, None);
    }

    #[test]
    fn disguised_special_measurements_are_predicted() {
        let out = run("state = schmidt(1.1)\nschedule = asymproj(0.2) @ system x 3\n");
        assert!(out.records[3].abs_error.unwrap() < 1e-12);
    }

    #[test]
    fn known_mode_matches_determinant_weights() {
        let out = run("state = werner(0.8)\nschedule = special(0.4,0,1,0) @ both x 3\nmode = known\n");
        assert!(out.violations.is_empty(), "{:?}", out.violations);
        for r in &out.records {
            assert!(r.abs_error.unwrap() < 1e-12);
            assert!(r.min_branch_concurrence.unwrap() > 0.0);
        }
    }

    fn sweep_params(steps: usize, rounds: usize) -> SweepParams {
        SweepParams {
            eps_min: 0.0,
            eps_max: 1.0,
            eps_steps: steps,
            rounds_max: rounds,
            state: StateSpec::Preset(StatePreset::BellPhiPlus),
            target: Target::System,
            axis: Vec3::Z,
            seed: 0,
            tol: Tolerances::with_concurrence(1e-9),
        }
    }

    #[test]
    fn sweep_grid() {
        let out = sweep(&sweep_params(11, 10)).unwrap();
        assert_eq!(out.records.len(), 121);
        assert!(out.violations.is_empty(), "{:?}", out.violations);
        let max_err = out.records.iter().map(|r| r.abs_error.unwrap()).fold(0.0, f64::max);
        assert!(max_err < 1e-9);
        for r in &out.records {
            if r.rounds == 0 {
                assert_eq!(r.final_concurrence, r.initial_concurrence);
            }
            if r.epsilon == Some(1.0) && r.rounds > 0 {
                assert_eq!(r.final_concurrence, 0.0);
            }
        }
    }

    #[test]
    fn sweep_rejects_bad_ranges() {
        let mut p = sweep_params(3, 2);
        p.eps_min = 0.8;
        p.eps_max = 0.2;
        assert!(matches!(sweep(&p), Err(CliError::Usage(_))));
        let mut p = sweep_params(0, 2);
        p.eps_steps = 0;
        assert!(matches!(sweep(&p), Err(CliError::Usage(_))));
        let mut p = sweep_params(3, 2);
        p.eps_max = 1.5;
        assert!(matches!(sweep(&p), Err(CliError::Usage(_))));
    }

    #[test]
    fn single_step_grid() {
        let mut p = sweep_params(1, 0);
        p.eps_min = 0.3;
        p.eps_max = 0.3;
        assert_eq!(p.epsilons(), vec![0.3]);
    }
}

//! Experiment configuration files.
//!
//! One `key = value` per line; `#` starts a comment. Keys:
//!
//! ```text
//! id        = text
//! state     = bell-phi-plus | example1(0.002) | schmidt(0.3) | random-pure | random-mixed | ...
//! matrix    = 16 complex entries, row-major, separated by commas or spaces (e.g. 0.5, 0.1-0.2i, ...)
//! schedule  = PRESET @ system|environment|both [x ROUNDS] ; ...
//! mode      = unknown | known
//! seed      = integer
//! tol.concurrence = real   (default 1e-9, or ENATP_TOL)
//! tol.invariant   = real   (default 1e-9)
//! tol.prune       = real   (default 1e-14)
//! ```

use std::fmt;
use std::str::FromStr;

use enatp::matrix::{Mat4, C64};
use enatp::measurements::{MeasurementPreset, TwoOutcomeMeasurement};
use enatp::sequences::{Round, Target};
use enatp::states::{random_state, DensityMatrix2Q, StateKind, StatePreset};

use crate::CliError;

#[derive(Clone, Debug, PartialEq)]
pub enum StateSpec {
    Preset(StatePreset),
    Random(StateKind),
    Matrix(Box<Mat4>),
}

impl StateSpec {
    pub fn build(&self, seed: u64) -> enatp::Result<DensityMatrix2Q> {
        match self {
            StateSpec::Preset(p) => p.build(),
            StateSpec::Random(kind) => Ok(random_state(*kind, seed)),
            StateSpec::Matrix(m) => DensityMatrix2Q::new(**m),
        }
    }
}

impl FromStr for StateSpec {
    type Err = enatp::Error;

    fn from_str(s: &str) -> enatp::Result<Self> {
        match s.trim() {
            "random-pure" => Ok(StateSpec::Random(StateKind::Pure)),
            "random-mixed" => Ok(StateSpec::Random(StateKind::Mixed)),
            other => other.parse().map(StateSpec::Preset),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Unknown,
    Known,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Unknown => "unknown",
            Mode::Known => "known",
        })
    }
}

/// One `PRESET @ TARGET x ROUNDS` entry.
#[derive(Clone, Debug, PartialEq)]
pub struct ScheduleEntry {
    pub preset: MeasurementPreset,
    pub measurement: TwoOutcomeMeasurement,
    pub target: Target,
    pub rounds: usize,
}

impl ScheduleEntry {
    pub fn round(&self) -> Round {
        self.target.round(&self.measurement)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerances {
    pub concurrence: f64,
    pub invariant: f64,
    pub prune: f64,
}

impl Tolerances {
    pub fn with_concurrence(concurrence: f64) -> Self {
        Tolerances { concurrence, invariant: 1e-9, prune: enatp::sequences::DEFAULT_PRUNE_TOL }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub id: String,
    pub state: StateSpec,
    pub schedule: Vec<ScheduleEntry>,
    pub mode: Mode,
    pub seed: u64,
    pub tol: Tolerances,
}

impl ExperimentConfig {
    /// Expanded per-round schedule.
    pub fn rounds(&self) -> Vec<(usize, Round)> {
        self.schedule
            .iter()
            .enumerate()
            .flat_map(|(k, e)| std::iter::repeat_n((k, e.round()), e.rounds))
            .collect()
    }
}

fn config_err(line: usize, message: impl Into<String>) -> CliError {
    CliError::Config { line, message: message.into() }
}

fn parse_matrix(value: &str, line: usize) -> Result<Mat4, CliError> {
    let entries: Vec<&str> = value.split(|c: char| c == ',' || c.is_whitespace()).filter(|s| !s.is_empty()).collect();
    if entries.len() != 16 {
        return Err(config_err(line, format!("matrix needs 16 entries, found {}", entries.len())));
    }
    let mut m = Mat4::zero();
    for (k, e) in entries.iter().enumerate() {
        let z: C64 = e.parse().map_err(|_| config_err(line, format!("bad complex number `{e}`")))?;
        m[(k / 4, k % 4)] = z;
    }
    Ok(m)
}

fn parse_entry(text: &str, line: usize) -> Result<ScheduleEntry, CliError> {
    let (preset_text, rest) = text
        .split_once('@')
        .ok_or_else(|| config_err(line, format!("schedule entry `{}` needs `@ target`", text.trim())))?;
    let preset: MeasurementPreset = preset_text
        .parse()
        .map_err(|_| config_err(line, format!("unknown measurement preset `{}`", preset_text.trim())))?;
    let mut words = rest.split_whitespace();
    let target_word = words.next().ok_or_else(|| config_err(line, "missing target after `@`"))?;
    let target: Target = target_word
        .parse()
        .map_err(|_| config_err(line, format!("unknown target `{target_word}` (system, environment or both)")))?;
    let rounds = match (words.next(), words.next(), words.next()) {
        (None, _, _) => 1,
        (Some("x"), Some(n), None) => {
            n.parse::<usize>().map_err(|_| config_err(line, format!("bad round count `{n}`")))?
        }
        _ => return Err(config_err(line, format!("expected `x ROUNDS` after target in `{}`", text.trim()))),
    };
    let measurement = preset.build().map_err(|e| config_err(line, format!("{preset}: {e}")))?;
    Ok(ScheduleEntry { preset, measurement, target, rounds })
}

fn parse_positive(value: &str, line: usize, key: &str) -> Result<f64, CliError> {
    match value.parse::<f64>() {
        Ok(v) if v > 0.0 && v.is_finite() => Ok(v),
        _ => Err(config_err(line, format!("{key} must be a positive number, got `{value}`"))),
    }
}

/// Parses a configuration. `default_tol` is the concurrence tolerance used
/// when the file does not set `tol.concurrence`.
pub fn parse_config(text: &str, default_tol: f64) -> Result<ExperimentConfig, CliError> {
    let mut id = None;
    let mut state: Option<(usize, StateSpec)> = None;
    let mut schedule = None;
    let mut mode = Mode::Unknown;
    let mut seed = 0;
    let mut tol = Tolerances::with_concurrence(default_tol);

    for (index, raw) in text.lines().enumerate() {
        let line = index + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| config_err(line, format!("expected `key = value`, got `{content}`")))?;
        let (key, value) = (key.trim(), value.trim());
        if value.is_empty() {
            return Err(config_err(line, format!("empty value for `{key}`")));
        }
        match key {
            "id" => id = Some(value.to_string()),
            "state" | "matrix" => {
                if let Some((first, _)) = &state {
                    return Err(config_err(line, format!("state already given on line {first}")));
                }
                let spec = if key == "matrix" {
                    StateSpec::Matrix(Box::new(parse_matrix(value, line)?))
                } else {
                    value.parse().map_err(|_| config_err(line, format!("unknown state preset `{value}`")))?
                };
                state = Some((line, spec));
            }
            "schedule" => {
                let entries = value
                    .split(';')
                    .filter(|s| !s.trim().is_empty())
                    .map(|s| parse_entry(s, line))
                    .collect::<Result<Vec<_>, _>>()?;
                schedule = Some(entries);
            }
            "mode" => {
                mode = match value {
                    "unknown" => Mode::Unknown,
                    "known" => Mode::Known,
                    _ => return Err(config_err(line, format!("mode must be `known` or `unknown`, got `{value}`"))),
                }
            }
            "seed" => seed = value.parse().map_err(|_| config_err(line, format!("bad seed `{value}`")))?,
            "tol.concurrence" => tol.concurrence = parse_positive(value, line, key)?,
            "tol.invariant" => tol.invariant = parse_positive(value, line, key)?,
            "tol.prune" => tol.prune = parse_positive(value, line, key)?,
            _ => return Err(config_err(line, format!("unknown key `{key}`"))),
        }
    }

    let last = text.lines().count().max(1);
    let (state_line, state) = state.ok_or_else(|| config_err(last, "missing `state` or `matrix`"))?;
    state.build(seed).map_err(|e| config_err(state_line, e.to_string()))?;
    Ok(ExperimentConfig {
        id: id.unwrap_or_else(|| "experiment".to_string()),
        state,
        schedule: schedule.ok_or_else(|| config_err(last, "missing `schedule`"))?,
        mode,
        seed,
        tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_config() {
        let text = "\
# comment
id = bell-decay
state = bell-phi-plus
schedule = special(0.6,0,0,1) @ system x 2 ; asymproj(0.3) @ both
mode = known
seed = 9
tol.concurrence = 1e-8
";
        let c = parse_config(text, 1e-9).unwrap();
        assert_eq!(c.id, "bell-decay");
        assert_eq!(c.mode, Mode::Known);
        assert_eq!(c.seed, 9);
        assert_eq!(c.tol.concurrence, 1e-8);
        assert_eq!(c.schedule.len(), 2);
        assert_eq!(c.schedule[0].rounds, 2);
        assert_eq!(c.schedule[1].target, Target::Both);
        assert_eq!(c.rounds().len(), 3);
    }

    #[test]
    fn matrix_state() {
        let text = "matrix = 0.5 0 0 0.5, 0 0 0 0, 0 0 0 0, 0.5 0 0 0.5\nschedule = example2 @ both\n";
        let c = parse_config(text, 1e-9).unwrap();
        assert!(matches!(c.state, StateSpec::Matrix(_)));
        let text = "matrix = 0.5 0 0 0.5i, 0 0 0 0, 0 0 0 0, -0.5i 0 0 0.5\nschedule = example2 @ both\n";
        assert!(parse_config(text, 1e-9).is_ok());
    }

    fn line_of(text: &str) -> usize {
        match parse_config(text, 1e-9) {
            Err(CliError::Config { line, .. }) => line,
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn errors_carry_line_numbers() {
        assert_eq!(line_of("state = bell-phi-plus\nschedule = special(0.5,0,0,1) @ nowhere\n"), 2);
        assert_eq!(line_of("\n\nstate = nonsense\n"), 3);
        assert_eq!(line_of("state = bell-phi-plus\nthis line is wrong\n"), 2);
        assert_eq!(line_of("state = bell-phi-plus\nschedule = special(2,0,0,1) @ system\n"), 2);
        assert_eq!(line_of("state = bell-phi-plus\nschedule = special(0.2,0,0,1) @ system x two\n"), 2);
        assert_eq!(line_of("state = bell-phi-plus\ntol.invariant = -1\n"), 2);
        assert_eq!(line_of("state = bell-phi-plus\nmode = maybe\n"), 2);
        assert_eq!(line_of("matrix = 1 2 3\n"), 1);
        assert_eq!(line_of("state = bell-phi-plus\nstate = werner(0.5)\n"), 2);
        assert_eq!(line_of("matrix = 1 0 0 0, 0 0 0 0, 0 0 0 0, 0 0 0 1\nschedule = example2 @ both\n"), 1);
    }

    #[test]
    fn missing_keys() {
        assert!(matches!(parse_config("schedule = example2 @ both\n", 1e-9), Err(CliError::Config { .. })));
        assert!(matches!(parse_config("state = werner(0.5)\n", 1e-9), Err(CliError::Config { .. })));
    }
}

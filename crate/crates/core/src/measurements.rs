//! Single-qubit two-outcome measurements and the weak-measurement decomposition.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::matrix::{pauli, Mat2, Vec3, C64};
use crate::states::split_call;

/// Completeness tolerance for [`TwoOutcomeMeasurement`].
pub const COMPLETENESS_TOL: f64 = 1e-10;
/// Unit-axis tolerance for [`SpecialWeakParams`].
pub const AXIS_TOL: f64 = 1e-12;
/// Strength below which a measurement is reported as weak.
pub const DEFAULT_WEAKNESS_THRESHOLD: f64 = 0.25;

/// Strength `ε ∈ [−1, 1]` and unit axis `n̂` of a special weak measurement.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpecialWeakParams {
    epsilon: f64,
    axis: Vec3,
}

impl SpecialWeakParams {
    pub fn new(epsilon: f64, axis: Vec3) -> Result<Self> {
        if !(epsilon.is_finite() && epsilon.abs() <= 1.0) {
            return Err(Error::BadEpsilon(epsilon));
        }
        let norm = axis.norm();
        if !norm.is_finite() || (norm - 1.0).abs() > AXIS_TOL {
            return Err(Error::BadAxis { norm });
        }
        Ok(SpecialWeakParams { epsilon, axis })
    }

    /// Normalizes the axis before validating.
    pub fn with_direction(epsilon: f64, direction: Vec3) -> Result<Self> {
        let norm = direction.norm();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::BadAxis { norm });
        }
        Self::new(epsilon, direction * (1.0 / norm))
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn axis(&self) -> Vec3 {
        self.axis
    }

    /// `√((1+ε)/2) + √((1−ε)/2)`
    pub fn eps_plus(&self) -> f64 {
        ((1.0 + self.epsilon) / 2.0).sqrt() + ((1.0 - self.epsilon) / 2.0).sqrt()
    }

    /// `√((1+ε)/2) − √((1−ε)/2)`
    pub fn eps_minus(&self) -> f64 {
        ((1.0 + self.epsilon) / 2.0).sqrt() - ((1.0 - self.epsilon) / 2.0).sqrt()
    }

    /// Same strength, opposite axis: `M−(ε, n̂) = M+(ε, −n̂)`.
    pub fn flipped(&self) -> Self {
        SpecialWeakParams { epsilon: self.epsilon, axis: -self.axis }
    }
}

/// Which construction produced a measurement.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MeasurementKind {
    Special(SpecialWeakParams),
    AsymptoticallyProjective { epsilon: f64 },
    Example2,
    Example3K { epsilon: f64 },
    Custom,
}

/// A complete pair of outcome operators `{plus, minus}`.
#[derive(Clone, Debug, PartialEq)]
pub struct TwoOutcomeMeasurement {
    plus: Mat2,
    minus: Mat2,
    label: String,
    kind: MeasurementKind,
}

impl TwoOutcomeMeasurement {
    /// Checks `plus†plus + minus†minus = I`.
    pub fn new(plus: Mat2, minus: Mat2, label: impl Into<String>) -> Result<Self> {
        Self::with_kind(plus, minus, label.into(), MeasurementKind::Custom)
    }

    fn with_kind(plus: Mat2, minus: Mat2, label: String, kind: MeasurementKind) -> Result<Self> {
        let residual = completeness_residual(&plus, &minus);
        if !(residual <= COMPLETENESS_TOL) {
            return Err(Error::Incomplete { residual });
        }
        Ok(TwoOutcomeMeasurement { plus, minus, label, kind })
    }

    pub fn plus(&self) -> &Mat2 {
        &self.plus
    }

    pub fn minus(&self) -> &Mat2 {
        &self.minus
    }

    pub fn outcomes(&self) -> [&Mat2; 2] {
        [&self.plus, &self.minus]
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn kind(&self) -> MeasurementKind {
        self.kind
    }

    /// Equivalent special weak parameters when the pair is a special weak
    /// measurement (directly or in disguise).
    ///
    /// `A0/A1` with `P+ = |0><0|` equals `M±(1 − 2ε, ẑ)`, and the Example 2
    /// operators equal `M±(0.8, x̂)`.
    pub fn special_equivalent(&self) -> Option<SpecialWeakParams> {
        match self.kind {
            MeasurementKind::Special(p) => Some(p),
            MeasurementKind::AsymptoticallyProjective { epsilon } => {
                // Only when built on the computational basis.
                let p0 = Mat2::diag(C64::new(1.0, 0.0), C64::new(0.0, 0.0));
                let a0 = p0 * (1.0 - epsilon).sqrt() + (Mat2::identity() - p0) * epsilon.sqrt();
                ((self.plus - a0).max_abs() < 1e-14).then(|| SpecialWeakParams::new(1.0 - 2.0 * epsilon, Vec3::Z).ok())?
            }
            MeasurementKind::Example2 => SpecialWeakParams::new(0.8, Vec3::X).ok(),
            _ => None,
        }
    }

    /// Largest `|det|` among the two outcomes is nonzero for both.
    pub fn is_invertible(&self, tol: f64) -> bool {
        self.plus.det().norm() > tol && self.minus.det().norm() > tol
    }

    /// `Σ_outcomes |det K|`.
    pub fn det_weight(&self) -> f64 {
        self.plus.det().norm() + self.minus.det().norm()
    }

    /// Conjugates both outcomes by a unitary: `U K U†`.
    pub fn rotated(&self, u: &Mat2) -> Self {
        let ud = u.adjoint();
        TwoOutcomeMeasurement {
            plus: *u * self.plus * ud,
            minus: *u * self.minus * ud,
            label: self.label.clone(),
            kind: MeasurementKind::Custom,
        }
    }
}

fn completeness_residual(plus: &Mat2, minus: &Mat2) -> f64 {
    (plus.adjoint() * *plus + minus.adjoint() * *minus - Mat2::identity()).max_abs()
}

/// `M± = ½(ε₊ I ± ε₋ n̂·σ)`.
pub fn special_weak(p: &SpecialWeakParams) -> TwoOutcomeMeasurement {
    let base = Mat2::identity() * (0.5 * p.eps_plus());
    let axis = Mat2::pauli_dot(&p.axis()) * (0.5 * p.eps_minus());
    let label = format!(
        "special({}, {}, {}, {})",
        p.epsilon(),
        p.axis()[0],
        p.axis()[1],
        p.axis()[2]
    );
    TwoOutcomeMeasurement {
        plus: base + axis,
        minus: base - axis,
        label,
        kind: MeasurementKind::Special(*p),
    }
}

fn is_projector(p: &Mat2) -> bool {
    (*p * *p - *p).max_abs() < COMPLETENESS_TOL && (p.adjoint() - *p).max_abs() < COMPLETENESS_TOL
}

/// `A0 = √ε P− + √(1−ε) P+`, `A1 = √(1−ε) P− + √ε P+`.
pub fn asymptotically_projective(eps: f64, p_plus: &Mat2, p_minus: &Mat2) -> Result<TwoOutcomeMeasurement> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::EpsOutOfRange(eps));
    }
    let orthogonal = (*p_plus * *p_minus).max_abs() < COMPLETENESS_TOL;
    let complete = (*p_plus + *p_minus - Mat2::identity()).max_abs() < COMPLETENESS_TOL;
    if !(is_projector(p_plus) && is_projector(p_minus) && orthogonal && complete) {
        return Err(Error::NotProjectors);
    }
    let a0 = *p_minus * eps.sqrt() + *p_plus * (1.0 - eps).sqrt();
    let a1 = *p_minus * (1.0 - eps).sqrt() + *p_plus * eps.sqrt();
    TwoOutcomeMeasurement::with_kind(
        a0,
        a1,
        format!("asymproj({eps})"),
        MeasurementKind::AsymptoticallyProjective { epsilon: eps },
    )
}

/// The computational-basis pair with `P+ = |0><0|`.
pub fn asymptotically_projective_z(eps: f64) -> Result<TwoOutcomeMeasurement> {
    let p0 = Mat2::from_real([[1.0, 0.0], [0.0, 0.0]]);
    let p1 = Mat2::from_real([[0.0, 0.0], [0.0, 1.0]]);
    asymptotically_projective(eps, &p0, &p1)
}

/// `K± = √((1∓ε)/2) (I ± ε(I + σx))`.
pub fn example3_k(eps: f64) -> Result<TwoOutcomeMeasurement> {
    if !(0.0..=1.0).contains(&eps) {
        return Err(Error::EpsOutOfRange(eps));
    }
    let shift = (Mat2::identity() + pauli::X) * eps;
    let plus = (Mat2::identity() + shift) * ((1.0 - eps) / 2.0).sqrt();
    let minus = (Mat2::identity() - shift) * ((1.0 + eps) / 2.0).sqrt();
    TwoOutcomeMeasurement::with_kind(plus, minus, format!("example3K({eps})"), MeasurementKind::Example3K { epsilon: eps })
}

/// `M± = (1/√10) [[2, ±1], [±1, 2]]`.
pub fn example2_m() -> TwoOutcomeMeasurement {
    let s = 1.0 / 10f64.sqrt();
    let plus = Mat2::from_real([[2.0, 1.0], [1.0, 2.0]]) * s;
    let minus = Mat2::from_real([[2.0, -1.0], [-1.0, 2.0]]) * s;
    TwoOutcomeMeasurement { plus, minus, label: "example2".into(), kind: MeasurementKind::Example2 }
}

/// An operator written as `Ω = q(I + ε̂)`.
///
/// The global phase is removed with `arg(tr Ω)`, `q` is the smallest
/// singular value and `ε̂ = Ω/q − I`. For a positive operator the strength
/// `‖ε̂‖` is the condition number minus one.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GeneralWeakOperator {
    pub q: f64,
    pub eps_op: Mat2,
    /// Spectral norm of `eps_op`.
    pub strength: f64,
}

impl GeneralWeakOperator {
    pub fn decompose(op: &Mat2) -> Option<Self> {
        let (max, min) = op.singular_values();
        if !(min > 1e-12 * max.max(1.0)) {
            return None;
        }
        let tr = op.trace();
        let phase = if tr.norm() > 0.0 { tr.conj() / tr.norm() } else { C64::new(1.0, 0.0) };
        let eps_op = *op * (phase / min) - Mat2::identity();
        Some(GeneralWeakOperator { q: min, eps_op, strength: eps_op.spectral_norm() })
    }

    pub fn is_weak(&self, threshold: f64) -> bool {
        self.strength < threshold
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct WeaknessReport {
    pub is_weak: bool,
    /// `q` for the plus and minus outcomes.
    pub q_values: [f64; 2],
    /// `‖ε̂‖` for the plus and minus outcomes.
    pub strengths: [f64; 2],
    pub threshold: f64,
}

/// Decomposes both outcomes as `q(I + ε̂)` and flags the measurement weak when
/// every strength is below `threshold`. Singular outcomes are rejected.
pub fn classify_weakness(m: &TwoOutcomeMeasurement, threshold: f64) -> Result<WeaknessReport> {
    let plus = GeneralWeakOperator::decompose(m.plus()).ok_or(Error::NonDecomposable { outcome: "plus" })?;
    let minus = GeneralWeakOperator::decompose(m.minus()).ok_or(Error::NonDecomposable { outcome: "minus" })?;
    Ok(WeaknessReport {
        is_weak: plus.is_weak(threshold) && minus.is_weak(threshold),
        q_values: [plus.q, minus.q],
        strengths: [plus.strength, minus.strength],
        threshold,
    })
}

/// Named measurements accepted on the command line.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MeasurementPreset {
    /// `special(eps, nx, ny, nz)`; the axis is normalized.
    Special { epsilon: f64, axis: Vec3 },
    /// `asymproj(eps)` on the computational basis.
    AsymProj { epsilon: f64 },
    Example2,
    /// `example3K(eps)`
    Example3K { epsilon: f64 },
}

impl MeasurementPreset {
    pub fn build(&self) -> Result<TwoOutcomeMeasurement> {
        match *self {
            MeasurementPreset::Special { epsilon, axis } => {
                Ok(special_weak(&SpecialWeakParams::with_direction(epsilon, axis)?))
            }
            MeasurementPreset::AsymProj { epsilon } => asymptotically_projective_z(epsilon),
            MeasurementPreset::Example2 => Ok(example2_m()),
            MeasurementPreset::Example3K { epsilon } => example3_k(epsilon),
        }
    }

    /// The strength parameter, when the preset has one.
    pub fn epsilon(&self) -> Option<f64> {
        match *self {
            MeasurementPreset::Special { epsilon, .. }
            | MeasurementPreset::AsymProj { epsilon }
            | MeasurementPreset::Example3K { epsilon } => Some(epsilon),
            MeasurementPreset::Example2 => None,
        }
    }
}

impl FromStr for MeasurementPreset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, args) = split_call(s)?;
        let preset = match (name.as_str(), args.as_slice()) {
            ("special", [e, x, y, z]) => MeasurementPreset::Special { epsilon: *e, axis: Vec3::new(*x, *y, *z) },
            ("asymproj", [e]) => MeasurementPreset::AsymProj { epsilon: *e },
            ("example2", []) => MeasurementPreset::Example2,
            ("example3K", [e]) => MeasurementPreset::Example3K { epsilon: *e },
            _ => return Err(Error::UnknownPreset(s.trim().to_string())),
        };
        Ok(preset)
    }
}

impl fmt::Display for MeasurementPreset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MeasurementPreset::Special { epsilon, axis } => {
                write!(f, "special({epsilon},{},{},{})", axis[0], axis[1], axis[2])
            }
            MeasurementPreset::AsymProj { epsilon } => write!(f, "asymproj({epsilon})"),
            MeasurementPreset::Example2 => write!(f, "example2"),
            MeasurementPreset::Example3K { epsilon } => write!(f, "example3K({epsilon})"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::{bloch_rotation, random_su2, random_unit_vector, seeded_rng};
    use approx::assert_abs_diff_eq;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn params(eps: f64, axis: Vec3) -> SpecialWeakParams {
        SpecialWeakParams::new(eps, axis).unwrap()
    }

    #[test]
    fn zero_strength_is_scaled_identity() {
        let m = special_weak(&params(0.0, Vec3::new(0.6, 0.0, 0.8)));
        let expect = Mat2::identity() * FRAC_1_SQRT_2;
        assert!((*m.plus() - expect).max_abs() < 1e-15);
        assert!((*m.minus() - expect).max_abs() < 1e-15);
    }

    #[test]
    fn unit_strength_is_projective() {
        let m = special_weak(&params(1.0, Vec3::Z));
        assert!((*m.plus() - Mat2::from_real([[1.0, 0.0], [0.0, 0.0]])).max_abs() < 1e-15);
        assert!((*m.minus() - Mat2::from_real([[0.0, 0.0], [0.0, 1.0]])).max_abs() < 1e-15);
    }

    #[test]
    fn example1_operators() {
        // ε = 0.1 along x̂: ½(ε₊ I ± ε₋ σx).
        let m = special_weak(&params(0.1, Vec3::X));
        let (ep, em) = (0.55f64.sqrt() + 0.45f64.sqrt(), 0.55f64.sqrt() - 0.45f64.sqrt());
        let expect = Mat2::from_real([[ep / 2.0, em / 2.0], [em / 2.0, ep / 2.0]]);
        assert!((*m.plus() - expect).max_abs() < 1e-15);
    }

    #[test]
    fn special_weak_invalid_parameters() {
        assert!(matches!(SpecialWeakParams::new(1.5, Vec3::Z), Err(Error::BadEpsilon(_))));
        assert!(matches!(SpecialWeakParams::new(f64::NAN, Vec3::Z), Err(Error::BadEpsilon(_))));
        assert!(matches!(SpecialWeakParams::new(0.2, Vec3::new(1.0, 1.0, 0.0)), Err(Error::BadAxis { .. })));
        assert!(matches!(SpecialWeakParams::with_direction(0.2, Vec3::zero()), Err(Error::BadAxis { .. })));
    }

    #[test]
    fn special_weak_commutes_flips_and_rotates() {
        let mut rng = seeded_rng(21);
        for k in 0..100 {
            let eps = -1.0 + 2.0 * (k as f64 + 0.5) / 100.0;
            let n = random_unit_vector(&mut rng);
            let p = params(eps, n);
            let m = special_weak(&p);
            assert!((*m.plus() * *m.minus() - *m.minus() * *m.plus()).max_abs() < 1e-12);
            assert!((*m.minus() - *special_weak(&p.flipped()).plus()).max_abs() < 1e-12);

            let u = random_su2(&mut rng);
            let rotated = m.rotated(&u);
            let expect = special_weak(&params(eps, (bloch_rotation(&u) * n).normalized()));
            assert!((*rotated.plus() - *expect.plus()).max_abs() < 1e-10);
            assert!((*rotated.minus() - *expect.minus()).max_abs() < 1e-10);
        }
    }

    #[test]
    fn asymptotically_projective_examples() {
        let sym = asymptotically_projective_z(0.5).unwrap();
        assert!((*sym.plus() - Mat2::identity() * FRAC_1_SQRT_2).max_abs() < 1e-15);
        assert!((*sym.minus() - Mat2::identity() * FRAC_1_SQRT_2).max_abs() < 1e-15);

        let m = asymptotically_projective_z(0.2).unwrap();
        assert_abs_diff_eq!(m.plus().det().re, 0.4, epsilon = 1e-15);
        assert_abs_diff_eq!(m.minus().det().re, 0.4, epsilon = 1e-15);
        let sq = *m.plus() * *m.plus() + *m.minus() * *m.minus();
        assert!((sq - Mat2::identity()).max_abs() < 1e-15);

        assert!(matches!(asymptotically_projective_z(0.0), Err(Error::EpsOutOfRange(_))));
        assert!(matches!(asymptotically_projective_z(1.0), Err(Error::EpsOutOfRange(_))));
        let not_proj = Mat2::identity() * 0.5;
        assert!(matches!(asymptotically_projective(0.3, &not_proj, &not_proj), Err(Error::NotProjectors)));
    }

    #[test]
    fn asymproj_is_special_in_disguise() {
        let m = asymptotically_projective_z(0.2).unwrap();
        let p = m.special_equivalent().unwrap();
        let s = special_weak(&p);
        assert!((*s.plus() - *m.plus()).max_abs() < 1e-15);
        assert!((*s.minus() - *m.minus()).max_abs() < 1e-15);

        let e2 = example2_m();
        let s2 = special_weak(&e2.special_equivalent().unwrap());
        assert!((*s2.plus() - *e2.plus()).max_abs() < 1e-15);
    }

    #[test]
    fn example2_operators() {
        let m = example2_m();
        let sum = m.plus().adjoint() * *m.plus() + m.minus().adjoint() * *m.minus();
        assert!((sum - Mat2::identity()).max_abs() < 1e-12);
        assert_abs_diff_eq!(m.plus().det().re, 0.3, epsilon = 1e-15);
        let diff = *m.plus() - *m.minus();
        assert!((diff - pauli::X * (2.0 / 10f64.sqrt())).max_abs() < 1e-15);
    }

    #[test]
    fn example3_operators() {
        let zero = example3_k(0.0).unwrap();
        assert!((*zero.plus() - Mat2::identity() * FRAC_1_SQRT_2).max_abs() < 1e-15);
        let weak = classify_weakness(&example3_k(0.01).unwrap(), DEFAULT_WEAKNESS_THRESHOLD).unwrap();
        assert!(weak.is_weak);
        assert_abs_diff_eq!(weak.strengths[0], 0.02, epsilon = 1e-12);
        assert_abs_diff_eq!(weak.strengths[1], 0.02 / 0.98, epsilon = 1e-12);

        // det K± = ±(1 ∓ ε)(1 ± 2ε)/2, which is ±1/(2√2) at ε = 1/√2.
        let k = example3_k(FRAC_1_SQRT_2).unwrap();
        let target = 1.0 / (2.0 * 2f64.sqrt());
        assert_abs_diff_eq!(k.plus().det().re, target, epsilon = 1e-15);
        assert_abs_diff_eq!(k.minus().det().re, -target, epsilon = 1e-15);
        assert!(matches!(example3_k(1.5), Err(Error::EpsOutOfRange(_))));
    }

    #[test]
    fn weakness_of_special_and_projective() {
        let r = classify_weakness(&special_weak(&params(0.05, Vec3::Z)), DEFAULT_WEAKNESS_THRESHOLD).unwrap();
        // ‖ε̂‖ = √((1+ε)/(1−ε)) − 1
        let expect = (1.05f64 / 0.95).sqrt() - 1.0;
        assert!(r.is_weak);
        assert_abs_diff_eq!(r.strengths[0], expect, epsilon = 1e-12);
        assert_abs_diff_eq!(r.strengths[1], expect, epsilon = 1e-12);
        assert!(r.q_values.iter().all(|&q| q > 0.0 && q <= 1.0));

        let proj = special_weak(&params(1.0, Vec3::Z));
        assert!(matches!(classify_weakness(&proj, 0.25), Err(Error::NonDecomposable { .. })));

        let strong = classify_weakness(&example2_m(), DEFAULT_WEAKNESS_THRESHOLD).unwrap();
        assert!(!strong.is_weak);
    }

    #[test]
    fn decomposition_ignores_global_phase() {
        let op = (Mat2::identity() + pauli::Z * 0.01) * C64::new(0.0, 0.6);
        let d = GeneralWeakOperator::decompose(&op).unwrap();
        assert_abs_diff_eq!(d.strength, 1.01 / 0.99 - 1.0, epsilon = 1e-12);
    }

    #[test]
    fn incomplete_pairs_are_rejected() {
        let half = Mat2::identity() * 0.5;
        assert!(matches!(TwoOutcomeMeasurement::new(half, half, "half"), Err(Error::Incomplete { .. })));
    }

    #[test]
    fn preset_round_trip() {
        for text in ["special(0.6,0,0,1)", "asymproj(0.2)", "example2", "example3K(0.01)"] {
            let p: MeasurementPreset = text.parse().unwrap();
            assert_eq!(p.to_string().parse::<MeasurementPreset>().unwrap(), p);
            p.build().unwrap();
        }
        assert!("special(0.6)".parse::<MeasurementPreset>().is_err());
        assert!("povm(3)".parse::<MeasurementPreset>().is_err());
        assert!(matches!(
            "special(2,0,0,1)".parse::<MeasurementPreset>().unwrap().build(),
            Err(Error::BadEpsilon(_))
        ));
    }
}

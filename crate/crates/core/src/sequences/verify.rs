use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{
    apply_outcome, bloch_update_mminus, bloch_update_mplus, closed_form_concurrence, cnatp_certificate,
    run_example, run_known, run_unknown, Example, ExampleParams, Round,
};
use crate::entanglement::{concurrence_value, product_state_test};
use crate::error::{Error, Result};
use crate::matrix::{tensor, Mat2, Mat4, Vec3, C64};
use crate::measurements::{
    asymptotically_projective_z, classify_weakness, example3_k, special_weak, SpecialWeakParams, TwoOutcomeMeasurement,
    DEFAULT_WEAKNESS_THRESHOLD,
};
use crate::states::{
    bloch_decompose, bloch_reconstruct, bloch_rotation, diagonalize_correlation, random_pure_from, random_state_from,
    random_su2, random_unit_vector, seeded_rng, DensityMatrix2Q, PureState2Q, StateKind,
};

/// Smallest input concurrence accepted as "entangled" by the random trials.
const MIN_INPUT_CONCURRENCE: f64 = 0.05;
/// Branches whose determinant product is below this count as singular.
const SINGULAR_DET: f64 = 1e-12;

/// One verified invariant.
#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    /// Worst value of the checked quantity.
    pub worst: f64,
    /// The bound it was held to.
    pub bound: f64,
}

impl Check {
    /// Passes when `worst < bound`.
    fn below(name: &str, worst: f64, bound: f64) -> Self {
        Check { name: name.to_string(), passed: worst < bound, worst, bound }
    }

    /// Passes when `worst > bound`.
    fn above(name: &str, worst: f64, bound: f64) -> Self {
        Check { name: name.to_string(), passed: worst > bound, worst, bound }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {} worst={:.3e} bound={:.3e}",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.worst,
            self.bound
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Suite {
    All,
    Theorem1,
    Theorem2,
    Lemma2,
    Corollary3,
    Examples,
}

impl Suite {
    const EACH: [Suite; 5] = [Suite::Theorem1, Suite::Theorem2, Suite::Lemma2, Suite::Corollary3, Suite::Examples];
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "all" => Ok(Suite::All),
            "theorem1" => Ok(Suite::Theorem1),
            "theorem2" => Ok(Suite::Theorem2),
            "lemma2" => Ok(Suite::Lemma2),
            "corollary3" => Ok(Suite::Corollary3),
            "examples" => Ok(Suite::Examples),
            other => Err(Error::UnknownPreset(other.to_string())),
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Suite::All => "all",
            Suite::Theorem1 => "theorem1",
            Suite::Theorem2 => "theorem2",
            Suite::Lemma2 => "lemma2",
            Suite::Corollary3 => "corollary3",
            Suite::Examples => "examples",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SuiteReport {
    pub checks: Vec<Check>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// Runs a named suite (or all of them) with `trials` random cases per check.
pub fn verify_suite(suite: Suite, seed: u64, trials: usize) -> Result<SuiteReport> {
    let suites: Vec<Suite> = if suite == Suite::All { Suite::EACH.to_vec() } else { vec![suite] };
    let mut checks = Vec::new();
    for (k, s) in suites.into_iter().enumerate() {
        let seed = seed.wrapping_add(k as u64 * 0x9E37_79B9);
        checks.extend(match s {
            Suite::Theorem1 => theorem1_checks(seed, trials)?,
            Suite::Theorem2 => verify_theorem2(seed, trials)?.checks,
            Suite::Lemma2 => verify_lemma2(seed, trials)?.checks,
            Suite::Corollary3 => verify_corollary3(seed, trials)?.checks,
            Suite::Examples => verify_examples()?.checks,
            Suite::All => unreachable!(),
        });
    }
    Ok(SuiteReport { checks })
}

/// An entangled mixed state with concurrence at least [`MIN_INPUT_CONCURRENCE`].
pub(crate) fn random_entangled(rng: &mut ChaCha8Rng) -> Result<(DensityMatrix2Q, f64)> {
    loop {
        let kind = if rng.random::<bool>() { StateKind::Mixed } else { StateKind::Pure };
        let rho = random_state_from(kind, rng);
        let c = concurrence_value(&rho)?;
        if c >= MIN_INPUT_CONCURRENCE {
            return Ok((rho, c));
        }
    }
}

/// `A^{1/2}` of a positive 2×2 matrix `V diag(λ) V†`.
fn sqrt_from_spectrum(v: &Mat2, lambda: [f64; 2]) -> Mat2 {
    *v * Mat2::diag(C64::new(lambda[0].sqrt(), 0.0), C64::new(lambda[1].sqrt(), 0.0)) * v.adjoint()
}

/// A complete two-outcome measurement with both operators invertible:
/// `R+ = U1 √A`, `R− = U2 √(I − A)`, spectrum of `A` inside `[0.05, 0.95]`.
pub(crate) fn random_invertible_measurement(rng: &mut ChaCha8Rng) -> TwoOutcomeMeasurement {
    let v = random_su2(rng);
    let lambda = [rng.random_range(0.05..0.95), rng.random_range(0.05..0.95)];
    let plus = random_su2(rng) * sqrt_from_spectrum(&v, lambda);
    let minus = random_su2(rng) * sqrt_from_spectrum(&v, [1.0 - lambda[0], 1.0 - lambda[1]]);
    TwoOutcomeMeasurement::new(plus, minus, "random").expect("complete by construction")
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Theorem1Options {
    /// Replace the first system operator with a rank-1 one.
    pub inject_singular: bool,
    /// Run all rounds on the system, then all rounds on the environment.
    pub compose: bool,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Theorem1Report {
    pub trials: usize,
    pub branches: usize,
    /// Smallest branch concurrence over branches with nonzero predicted value.
    pub min_concurrence: f64,
    /// Largest `|C − C0 Π|det| / p|`.
    pub max_ratio_error: f64,
    /// Largest concurrence among branches predicted to be 0.
    pub max_singular_concurrence: f64,
    /// Number of branches predicted to be 0.
    pub singular_branches: usize,
}

impl Theorem1Report {
    pub fn passed(&self, tol: f64) -> bool {
        self.min_concurrence > 0.0 && self.max_ratio_error < tol && self.max_singular_concurrence < tol
    }
}

/// Random entangled inputs, `rounds` rounds of random invertible local
/// measurements on both qubits; every branch must stay entangled with the
/// concurrence predicted by the determinant ratio.
pub fn verify_theorem1(seed: u64, trials: usize, rounds: usize) -> Result<Theorem1Report> {
    verify_theorem1_with(seed, trials, rounds, Theorem1Options::default())
}

pub fn verify_theorem1_with(seed: u64, trials: usize, rounds: usize, opts: Theorem1Options) -> Result<Theorem1Report> {
    let mut rng = seeded_rng(seed);
    let mut report = Theorem1Report {
        trials,
        branches: 0,
        min_concurrence: f64::INFINITY,
        max_ratio_error: 0.0,
        max_singular_concurrence: 0.0,
        singular_branches: 0,
    };
    for _ in 0..trials {
        let (rho, c0) = random_entangled(&mut rng)?;
        let mut schedule: Vec<Round> = if opts.compose {
            let sys = (0..rounds).map(|_| Round::system(random_invertible_measurement(&mut rng)));
            let sys: Vec<_> = sys.collect();
            let env = (0..rounds).map(|_| Round::environment(random_invertible_measurement(&mut rng)));
            sys.into_iter().chain(env).collect()
        } else {
            (0..rounds)
                .map(|_| Round::both(random_invertible_measurement(&mut rng), random_invertible_measurement(&mut rng)))
                .collect()
        };
        if opts.inject_singular {
            if let Some(first) = schedule.iter_mut().find(|r| r.system.is_some()) {
                first.system = Some(singular_measurement(&mut rng));
            }
        }
        let ensemble = run_known(&rho, &schedule, 0.0)?;
        for b in &ensemble.branches {
            if b.probability < 1e-12 {
                continue;
            }
            let c = concurrence_value(&b.state)?;
            let predicted = b.predicted_concurrence(c0);
            report.branches += 1;
            report.max_ratio_error = report.max_ratio_error.max((c - predicted).abs());
            if b.det_weight < SINGULAR_DET {
                report.singular_branches += 1;
                report.max_singular_concurrence = report.max_singular_concurrence.max(c);
            } else {
                report.min_concurrence = report.min_concurrence.min(c);
            }
        }
    }
    Ok(report)
}

/// The recipe of [`random_invertible_measurement`] with one eigenvalue of
/// `A` set to 0, so that `R+` has rank 1.
fn singular_measurement(rng: &mut ChaCha8Rng) -> TwoOutcomeMeasurement {
    let v = random_su2(rng);
    let lambda = [0.0, rng.random_range(0.05..0.95)];
    let plus = random_su2(rng) * sqrt_from_spectrum(&v, lambda);
    let minus = random_su2(rng) * sqrt_from_spectrum(&v, [1.0, 1.0 - lambda[1]]);
    TwoOutcomeMeasurement::new(plus, minus, "singular").expect("complete by construction")
}

fn theorem1_checks(seed: u64, trials: usize) -> Result<Vec<Check>> {
    let plain = verify_theorem1(seed, trials, 4)?;
    let composed = verify_theorem1_with(seed ^ 1, trials, 2, Theorem1Options { compose: true, ..Default::default() })?;
    let singular = verify_theorem1_with(seed ^ 2, trials.min(50), 2, Theorem1Options { inject_singular: true, ..Default::default() })?;
    Ok(vec![
        Check::above("theorem1.branch_concurrence_positive", plain.min_concurrence, 0.0),
        Check::below("theorem1.ratio_law", plain.max_ratio_error, 1e-8),
        Check::above("theorem1.composition_positive", composed.min_concurrence, 0.0),
        Check::below("theorem1.composition_ratio_law", composed.max_ratio_error, 1e-8),
        Check::below("theorem1.singular_operator_disentangles", singular.max_singular_concurrence, 1e-8),
        Check::above("theorem1.singular_branches_seen", singular.singular_branches as f64, 0.0),
    ])
}

fn random_correlated(rng: &mut ChaCha8Rng) -> Result<DensityMatrix2Q> {
    loop {
        let rho = random_state_from(StateKind::Mixed, rng);
        if bloch_decompose(&rho)?.product_gap() > 1e-3 {
            return Ok(rho);
        }
    }
}

/// Largest deviation between the closed-form update and full conjugation,
/// and the largest outcome-probability mismatch.
pub(crate) fn update_oracle_error(rho: &DensityMatrix2Q, p: &SpecialWeakParams) -> Result<f64> {
    let (_, rho_d) = diagonalize_correlation(rho)?;
    let f = bloch_decompose(&rho_d)?;
    let m = special_weak(p);
    let mut worst: f64 = 0.0;
    for (update, op) in [(bloch_update_mplus(&f, p)?, m.plus()), (bloch_update_mminus(&f, p)?, m.minus())] {
        let (prob, post) = apply_outcome(&rho_d, op, &Mat2::identity())?;
        let oracle = bloch_decompose(&post)?;
        worst = worst
            .max((oracle.a - update.a_prime).norm())
            .max((oracle.b - update.b_prime).norm())
            .max((oracle.t - update.t_prime).frobenius_norm())
            .max((prob - update.eta / 2.0).abs());
    }
    Ok(worst)
}

/// Product gaps vanish at `ε = ±1` (checked by the closed form and by an
/// explicit factorization of the outcome state) and stay positive for
/// `|ε| < 1`; the closed-form update agrees with full conjugation.
pub fn verify_theorem2(seed: u64, trials: usize) -> Result<SuiteReport> {
    let mut rng = seeded_rng(seed);
    let mut forward_gap: f64 = 0.0;
    let mut forward_factor: f64 = 0.0;
    let mut converse_gap = f64::INFINITY;
    let mut oracle: f64 = 0.0;
    let mut reconstruct_ok = true;
    for _ in 0..trials {
        let rho = random_correlated(&mut rng)?;
        let axis = random_unit_vector(&mut rng);
        for eps in [1.0, -1.0] {
            let p = SpecialWeakParams::new(eps, axis)?;
            let r = cnatp_certificate(&rho, &p)?;
            forward_gap = forward_gap.max(r.gap_plus).max(r.gap_minus);
            let m = special_weak(&p);
            for op in m.outcomes() {
                let (_, post) = apply_outcome(&rho, op, &Mat2::identity())?;
                forward_factor = forward_factor.max(product_state_test(&post, 1e-9)?.factorization_gap);
            }
        }
        for eps in [0.999, -0.999, 0.9, -0.9, 0.5, -0.5, 0.1, -0.1] {
            let r = cnatp_certificate(&rho, &SpecialWeakParams::new(eps, axis)?)?;
            converse_gap = converse_gap.min(r.min_gap());
        }
        let p = SpecialWeakParams::new(rng.random_range(-1.0..1.0), axis)?;
        oracle = oracle.max(update_oracle_error(&rho, &p)?);
        let (_, rho_d) = diagonalize_correlation(&rho)?;
        let update = bloch_update_mplus(&bloch_decompose(&rho_d)?, &p)?;
        reconstruct_ok &= bloch_reconstruct(&update.bloch()).is_ok();
    }
    Ok(SuiteReport {
        checks: vec![
            Check::below("theorem2.projective_gap", forward_gap, 1e-9),
            Check::below("theorem2.projective_factorization", forward_factor, 1e-9),
            Check::above("theorem2.weak_gap_positive", converse_gap, 0.0),
            Check::below("theorem2.update_oracle", oracle, 1e-10),
            Check::below("theorem2.update_reconstructs", if reconstruct_ok { 0.0 } else { 1.0 }, 0.5),
        ],
    })
}

fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// `Σ_k C(n,k) (A0^k A1^{n−k} ⊗ I) ψψ† (…)†`, the explicit outcome sum for
/// `n` rounds of a commuting pair on the system.
pub fn binomial_post_state(psi: &PureState2Q, m: &TwoOutcomeMeasurement, n: u32) -> Mat4 {
    let rho = DensityMatrix2Q::from_pure(psi);
    let pow = |a: &Mat2, k: u32| (0..k).fold(Mat2::identity(), |acc, _| acc * *a);
    (0..=n).fold(Mat4::zero(), |acc, k| {
        let r = pow(m.plus(), k) * pow(m.minus(), n - k);
        let op = tensor(&r, &Mat2::identity());
        acc + rho.matrix().conjugate_by(&op) * binomial(n, k)
    })
}

/// A pure state `(U⊗V)(cos(θ/2)|00> + sin(θ/2)|11>)` together with the
/// system and environment axes that align a special weak measurement with
/// its Schmidt basis.
pub(crate) fn rotated_schmidt(rng: &mut ChaCha8Rng) -> (DensityMatrix2Q, f64, Vec3, Vec3) {
    let theta = rng.random_range(0.0..std::f64::consts::PI);
    let u = random_su2(rng);
    let v = random_su2(rng);
    let base = DensityMatrix2Q::from_pure(&PureState2Q::schmidt(theta));
    let rho = base.apply_local_unitary(&u, &v);
    (rho, theta.sin(), (bloch_rotation(&u) * Vec3::Z).normalized(), (bloch_rotation(&v) * Vec3::Z).normalized())
}

/// Largest `|C(run_unknown) − closed form|` for aligned special weak rounds.
pub(crate) fn decay_error(
    rho: &DensityMatrix2Q,
    c0: f64,
    (eps1, n1, n): (f64, Vec3, u32),
    (eps2, n2, y): (f64, Vec3, u32),
) -> Result<f64> {
    let sys = special_weak(&SpecialWeakParams::new(eps1, n1)?);
    let env = special_weak(&SpecialWeakParams::new(eps2, n2)?);
    let mut schedule: Vec<Round> = (0..n).map(|_| Round::system(sys.clone())).collect();
    schedule.extend((0..y).map(|_| Round::environment(env.clone())));
    let c = concurrence_value(&run_unknown(rho, &schedule))?;
    Ok((c - closed_form_concurrence(c0, eps1, n, eps2, y)).abs())
}

/// Unknown-outcome rounds on the system: channel iteration equals the
/// explicit binomial sum, and the concurrence follows `(1−ε²)^{n/2} C`.
pub fn verify_lemma2(seed: u64, trials: usize) -> Result<SuiteReport> {
    let mut rng = seeded_rng(seed);
    let mut binomial_err: f64 = 0.0;
    let mut decay_err: f64 = 0.0;
    let mut asym_err: f64 = 0.0;
    let mut projective: f64 = 0.0;
    for t in 0..trials {
        let psi = random_pure_from(&mut rng);
        let eps = rng.random_range(0.01..0.99);
        let m = asymptotically_projective_z(eps)?;
        let n = (t % 11) as u32;
        let channel = run_unknown(&DensityMatrix2Q::from_pure(&psi), &vec![Round::system(m.clone()); n as usize]);
        binomial_err = binomial_err.max((*channel.matrix() - binomial_post_state(&psi, &m, n)).max_abs());

        let (rho, c0, axis, _) = rotated_schmidt(&mut rng);
        let e = rng.random_range(0.0..1.0);
        decay_err = decay_err.max(decay_error(&rho, c0, (e, axis, n), (0.0, Vec3::Z, 0))?);
        projective = projective.max(concurrence_value(&run_unknown(
            &rho,
            &[Round::system(special_weak(&SpecialWeakParams::new(1.0, axis)?))],
        ))?);

        // asymproj(ε) is special weak with strength 1 − 2ε along ẑ.
        let schmidt = DensityMatrix2Q::from_pure(&PureState2Q::schmidt(1.0));
        let c = concurrence_value(&run_unknown(&schmidt, &vec![Round::system(m); n as usize]))?;
        asym_err = asym_err.max((c - closed_form_concurrence(1f64.sin(), 1.0 - 2.0 * eps, n, 0.0, 0)).abs());
    }
    Ok(SuiteReport {
        checks: vec![
            Check::below("lemma2.binomial_equals_channel", binomial_err, 1e-12),
            Check::below("lemma2.decay_law", decay_err, 1e-9),
            Check::below("lemma2.asymptotically_projective_decay", asym_err, 1e-9),
            Check::below("lemma2.projective_round_disentangles", projective, 1e-9),
        ],
    })
}

/// Rounds on both qubits: `(1−ε1²)^{n/2}(1−ε2²)^{y/2} C`, and exactly zero
/// once either strength reaches 1.
pub fn verify_corollary3(seed: u64, trials: usize) -> Result<SuiteReport> {
    let mut rng = seeded_rng(seed);
    let mut decay: f64 = 0.0;
    let mut boundary: f64 = 0.0;
    for _ in 0..trials {
        let (rho, c0, a1, a2) = rotated_schmidt(&mut rng);
        let eps1 = rng.random_range(0..10) as f64 / 10.0;
        let eps2 = rng.random_range(0..10) as f64 / 10.0;
        let n = rng.random_range(0..=10);
        let y = rng.random_range(0..=10);
        decay = decay.max(decay_error(&rho, c0, (eps1, a1, n), (eps2, a2, y))?);
        let n = rng.random_range(1..=3);
        boundary = boundary.max(decay_error(&rho, c0, (1.0, a1, n), (eps2, a2, y))?);
    }
    Ok(SuiteReport {
        checks: vec![
            Check::below("corollary3.decay_law", decay, 1e-9),
            Check::below("corollary3.projective_boundary", boundary, 1e-9),
        ],
    })
}

/// The worked examples under their recorded readings.
pub fn verify_examples() -> Result<SuiteReport> {
    let default = ExampleParams::default();
    let one = run_example(Example::One, &default)?;
    let two = run_example(Example::Two, &default)?;
    let three = run_example(Example::Three, &default)?;
    let mut checks = vec![
        Check::below("examples.1.initial_concurrence", (one.initial_concurrence - 0.004).abs(), 1e-12),
        Check::below("examples.1.assigned_concurrence", one.final_concurrence, one.tol),
        Check::above("examples.1.assigned_min_pt_eigenvalue", one.min_pt_eigenvalue, -one.tol),
        Check::above("examples.1.min_branch_concurrence", one.min_branch_concurrence, 0.0),
        Check::below("examples.2.initial_concurrence", (two.initial_concurrence - 0.25).abs(), 1e-12),
        Check::below("examples.2.assigned_concurrence", two.final_concurrence, two.tol),
        Check::above("examples.2.assigned_min_pt_eigenvalue", two.min_pt_eigenvalue, -two.tol),
        Check::below("examples.3.assigned_concurrence", three.final_concurrence, three.tol),
        Check::above("examples.3.min_branch_concurrence", three.min_branch_concurrence, 0.0),
    ];

    let mut residual: f64 = 0.0;
    let mut pt_det: f64 = 0.0;
    let mut away = f64::INFINITY;
    for theta in [1e-4, 0.5, 1.0, 2.0, 3.0] {
        let r = run_example(Example::Appendix, &ExampleParams { theta: Some(theta), ..default })?;
        residual = residual.max(r.appendix_residual.unwrap_or(f64::INFINITY));
        pt_det = pt_det.max(r.pt_determinant.abs());
        for eps in [0.3, 0.5, 0.8] {
            let r = run_example(Example::Appendix, &ExampleParams { theta: Some(theta), epsilon: Some(eps), ..default })?;
            away = away.min(r.final_concurrence);
        }
    }
    let weak = classify_weakness(&example3_k(0.01)?, DEFAULT_WEAKNESS_THRESHOLD)?;
    let strength_dev = weak.strengths.iter().map(|s| (s / 0.02 - 1.0).abs()).fold(0.0, f64::max);
    checks.extend([
        Check::below("examples.appendix.matrix_residual", residual, 1e-12),
        Check::below("examples.appendix.pt_determinant", pt_det, 1e-10),
        Check::above("examples.appendix.other_strengths_entangled", away, 0.0),
        Check::below("examples.3.weakness_relative_deviation", strength_dev, 0.05),
    ]);
    Ok(SuiteReport { checks })
}

//! Two-qubit states, their Pauli (Bloch) decomposition, and local frames.

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::matrix::{hermitian_eigen, pauli, tensor, Mat2, Mat3, Mat4, Vec3, C64, ONE, ZERO};

/// Hermiticity, trace and positivity tolerance for [`DensityMatrix2Q`].
pub const STATE_TOL: f64 = 1e-10;
/// Normalization tolerance for [`PureState2Q`].
pub const PURE_NORM_TOL: f64 = 1e-12;

/// Normalized amplitudes `a|00> + b|01> + c|10> + d|11>`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PureState2Q {
    amplitudes: [C64; 4],
}

impl PureState2Q {
    pub fn new(amplitudes: [C64; 4]) -> Result<Self> {
        let norm_sq: f64 = amplitudes.iter().map(|z| z.norm_sqr()).sum();
        if !norm_sq.is_finite() || (norm_sq - 1.0).abs() > PURE_NORM_TOL {
            return Err(Error::NotNormalized { norm_sq });
        }
        Ok(PureState2Q { amplitudes })
    }

    /// Rescales arbitrary nonzero amplitudes to unit norm.
    pub fn normalized(amplitudes: [C64; 4]) -> Result<Self> {
        let norm = amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::NotNormalized { norm_sq: norm * norm });
        }
        Ok(PureState2Q { amplitudes: amplitudes.map(|z| z / norm) })
    }

    pub fn from_real(amplitudes: [f64; 4]) -> Result<Self> {
        Self::new(amplitudes.map(|x| C64::new(x, 0.0)))
    }

    /// `cos(θ/2)|00> + sin(θ/2)|11>`
    pub fn schmidt(theta: f64) -> Self {
        PureState2Q {
            amplitudes: [C64::new((theta / 2.0).cos(), 0.0), ZERO, ZERO, C64::new((theta / 2.0).sin(), 0.0)],
        }
    }

    pub fn amplitudes(&self) -> &[C64; 4] {
        &self.amplitudes
    }

    /// `2|ad − bc|`, the closed-form concurrence of a pure state.
    pub fn concurrence(&self) -> f64 {
        let [a, b, c, d] = self.amplitudes;
        2.0 * (a * d - b * c).norm()
    }
}

/// A validated two-qubit density matrix.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DensityMatrix2Q {
    matrix: Mat4,
}

impl DensityMatrix2Q {
    /// Validates Hermiticity, unit trace and positivity to [`STATE_TOL`].
    pub fn new(matrix: Mat4) -> Result<Self> {
        if matrix.0.iter().flatten().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidState("non-finite entry".into()));
        }
        let herm = matrix.hermiticity_residual();
        if herm > STATE_TOL {
            return Err(Error::InvalidState(format!("not Hermitian (residual {herm:e})")));
        }
        let tr = matrix.trace();
        if (tr.re - 1.0).abs() > STATE_TOL || tr.im.abs() > STATE_TOL {
            return Err(Error::InvalidState(format!("trace {tr} differs from 1")));
        }
        let min = hermitian_eigen(&matrix)?.0[0];
        if min < -STATE_TOL {
            return Err(Error::InvalidState(format!("negative eigenvalue {min:e}")));
        }
        Ok(DensityMatrix2Q { matrix: matrix.hermitian_part() })
    }

    /// Wraps a matrix that is a density matrix by construction (conjugations of
    /// valid states, convex mixtures). Only the Hermitian part is kept.
    pub(crate) fn from_trusted(matrix: Mat4) -> Self {
        DensityMatrix2Q { matrix: matrix.hermitian_part() }
    }

    /// Normalizes a positive semidefinite matrix by its trace.
    pub(crate) fn from_unnormalized(matrix: &Mat4) -> Self {
        let tr = matrix.trace().re;
        Self::from_trusted(*matrix * (1.0 / tr))
    }

    /// `|ψ><ψ|`
    pub fn from_pure(psi: &PureState2Q) -> Self {
        DensityMatrix2Q { matrix: Mat4::outer(psi.amplitudes()) }
    }

    pub fn maximally_mixed() -> Self {
        DensityMatrix2Q { matrix: Mat4::identity() * 0.25 }
    }

    /// `ρ_S ⊗ ρ_E` from two single-qubit density matrices.
    pub fn product(rho_s: &Mat2, rho_e: &Mat2) -> Result<Self> {
        Self::new(tensor(rho_s, rho_e))
    }

    pub fn matrix(&self) -> &Mat4 {
        &self.matrix
    }

    /// Trace over the environment.
    pub fn reduced_system(&self) -> Mat2 {
        let m = &self.matrix.0;
        let mut out = Mat2::zero();
        for s in 0..2 {
            for s2 in 0..2 {
                out.0[s][s2] = m[2 * s][2 * s2] + m[2 * s + 1][2 * s2 + 1];
            }
        }
        out
    }

    /// Trace over the system.
    pub fn reduced_environment(&self) -> Mat2 {
        let m = &self.matrix.0;
        let mut out = Mat2::zero();
        for e in 0..2 {
            for e2 in 0..2 {
                out.0[e][e2] = m[e][e2] + m[2 + e][2 + e2];
            }
        }
        out
    }

    /// Eigenvalues, ascending.
    pub fn eigenvalues(&self) -> Result<[f64; 4]> {
        hermitian_eigen(&self.matrix).map(|(v, _)| v)
    }

    pub fn purity(&self) -> f64 {
        (self.matrix * self.matrix).trace().re
    }

    /// `(U ⊗ V) ρ (U ⊗ V)†` for unitaries `U`, `V`.
    pub fn apply_local_unitary(&self, u: &Mat2, v: &Mat2) -> Self {
        Self::from_trusted(self.matrix.conjugate_by(&tensor(u, v)))
    }

    /// A factor `X` with `ρ = X X†`, built from the eigen-decomposition.
    /// Negative rounding eigenvalues are clamped to zero.
    pub fn factor(&self) -> Result<Mat4> {
        let (vals, vecs) = hermitian_eigen(&self.matrix)?;
        let mut x = vecs;
        for (j, &val) in vals.iter().enumerate() {
            let w = val.max(0.0).sqrt();
            for i in 0..4 {
                x.0[i][j] *= w;
            }
        }
        Ok(x)
    }

    pub fn bloch(&self) -> Result<BlochForm> {
        bloch_decompose(self)
    }
}

/// Pauli decomposition `ρ = ¼(I⊗I + a·σ⊗I + I⊗b·σ + Σ T_ij σ_i⊗σ_j)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BlochForm {
    /// System Bloch vector.
    pub a: Vec3,
    /// Environment Bloch vector.
    pub b: Vec3,
    /// Correlation matrix `T_ij = tr((σ_i ⊗ σ_j) ρ)`.
    pub t: Mat3,
}

impl BlochForm {
    pub fn new(a: Vec3, b: Vec3, t: Mat3) -> Self {
        BlochForm { a, b, t }
    }

    /// `‖T − a bᵀ‖_F`; zero exactly for product states.
    pub fn product_gap(&self) -> f64 {
        (self.t - Mat3::outer(&self.a, &self.b)).frobenius_norm()
    }

    /// Unvalidated reconstruction matrix.
    pub fn to_matrix(&self) -> Mat4 {
        let mut m = Mat4::identity();
        for i in 0..3 {
            m = m + tensor(&pauli::XYZ[i], &Mat2::identity()) * self.a[i];
            m = m + tensor(&Mat2::identity(), &pauli::XYZ[i]) * self.b[i];
            for j in 0..3 {
                m = m + tensor(&pauli::XYZ[i], &pauli::XYZ[j]) * self.t[(i, j)];
            }
        }
        m * 0.25
    }
}

fn real_trace(op: &Mat4, rho: &Mat4, what: &str) -> Result<f64> {
    let v = (*op * *rho).trace();
    if v.im.abs() > STATE_TOL {
        return Err(Error::InvalidState(format!("{what} has imaginary part {:e}", v.im)));
    }
    Ok(v.re)
}

/// Bloch vectors and correlation matrix of a state.
pub fn bloch_decompose(rho: &DensityMatrix2Q) -> Result<BlochForm> {
    let m = rho.matrix();
    let id = Mat2::identity();
    let mut f = BlochForm::new(Vec3::zero(), Vec3::zero(), Mat3::zero());
    for i in 0..3 {
        f.a[i] = real_trace(&tensor(&pauli::XYZ[i], &id), m, "system Bloch component")?;
        f.b[i] = real_trace(&tensor(&id, &pauli::XYZ[i]), m, "environment Bloch component")?;
        for j in 0..3 {
            f.t[(i, j)] = real_trace(&tensor(&pauli::XYZ[i], &pauli::XYZ[j]), m, "correlation entry")?;
        }
    }
    Ok(f)
}

/// Inverse of [`bloch_decompose`]; fails with [`Error::NonPhysical`] when the
/// assembled matrix is not a density matrix.
pub fn bloch_reconstruct(f: &BlochForm) -> Result<DensityMatrix2Q> {
    DensityMatrix2Q::new(f.to_matrix()).map_err(|e| match e {
        Error::InvalidState(msg) => Error::NonPhysical(msg),
        other => other,
    })
}

/// Local unitaries `U` (system) and `V` (environment).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LocalFrame {
    pub u: Mat2,
    pub v: Mat2,
}

impl LocalFrame {
    pub fn identity() -> Self {
        LocalFrame { u: Mat2::identity(), v: Mat2::identity() }
    }

    pub fn joint(&self) -> Mat4 {
        tensor(&self.u, &self.v)
    }
}

/// Bloch rotation induced by a unitary: `U (r·σ) U† = (R r)·σ`,
/// `R_ij = ½ tr(σ_i U σ_j U†)`.
pub fn bloch_rotation(u: &Mat2) -> Mat3 {
    let ud = u.adjoint();
    let mut r = Mat3::zero();
    for i in 0..3 {
        for j in 0..3 {
            r[(i, j)] = 0.5 * (pauli::XYZ[i] * *u * pauli::XYZ[j] * ud).trace().re;
        }
    }
    r
}

/// Lifts a rotation in SO(3) to SU(2) through its unit quaternion.
///
/// The result `U = w I − i (x σx + y σy + z σz)` satisfies
/// [`bloch_rotation`]`(U) = r`; the quaternion sign is fixed so the (0,0)
/// entry has nonnegative real part.
pub fn su2_from_rotation(r: &Mat3) -> Mat2 {
    let m = &r.0;
    let trace = m[0][0] + m[1][1] + m[2][2];
    // Shepperd's method: branch on the largest of w², x², y², z².
    let (w, x, y, z);
    if trace >= m[0][0] && trace >= m[1][1] && trace >= m[2][2] {
        let s = (1.0 + trace).max(0.0).sqrt() * 2.0;
        w = 0.25 * s;
        x = (m[2][1] - m[1][2]) / s;
        y = (m[0][2] - m[2][0]) / s;
        z = (m[1][0] - m[0][1]) / s;
    } else if m[0][0] >= m[1][1] && m[0][0] >= m[2][2] {
        let s = (1.0 + m[0][0] - m[1][1] - m[2][2]).max(0.0).sqrt() * 2.0;
        w = (m[2][1] - m[1][2]) / s;
        x = 0.25 * s;
        y = (m[0][1] + m[1][0]) / s;
        z = (m[0][2] + m[2][0]) / s;
    } else if m[1][1] >= m[2][2] {
        let s = (1.0 + m[1][1] - m[0][0] - m[2][2]).max(0.0).sqrt() * 2.0;
        w = (m[0][2] - m[2][0]) / s;
        x = (m[0][1] + m[1][0]) / s;
        y = 0.25 * s;
        z = (m[1][2] + m[2][1]) / s;
    } else {
        let s = (1.0 + m[2][2] - m[0][0] - m[1][1]).max(0.0).sqrt() * 2.0;
        w = (m[1][0] - m[0][1]) / s;
        x = (m[0][2] + m[2][0]) / s;
        y = (m[1][2] + m[2][1]) / s;
        z = 0.25 * s;
    }
    let norm = (w * w + x * x + y * y + z * z).sqrt();
    let sign = if w < 0.0 { -1.0 } else { 1.0 } / norm;
    let (w, x, y, z) = (w * sign, x * sign, y * sign, z * sign);
    Mat2([[C64::new(w, -z), C64::new(-y, -x)], [C64::new(y, -x), C64::new(w, z)]])
}

/// Finds local unitaries that make the correlation matrix diagonal.
///
/// Returns the frame `(U, V)` and `ρ_D = (U⊗V) ρ (U⊗V)†`. The signed SVD
/// `T = O₁ Σ O₂ᵀ` with `O₁, O₂ ∈ SO(3)` gives the Bloch rotations
/// `R_U = O₁ᵀ`, `R_V = O₂ᵀ`, which are lifted to SU(2).
pub fn diagonalize_correlation(rho: &DensityMatrix2Q) -> Result<(LocalFrame, DensityMatrix2Q)> {
    let f = bloch_decompose(rho)?;
    let (o1, _sigma, o2) = f.t.rotation_svd()?;
    let frame = LocalFrame { u: su2_from_rotation(&o1.transpose()), v: su2_from_rotation(&o2.transpose()) };
    let rho_d = rho.apply_local_unitary(&frame.u, &frame.v);
    let residual = bloch_decompose(&rho_d)?.t.off_diagonal_max();
    if residual > 1e-9 {
        return Err(Error::ConvergenceFailure("correlation matrix diagonalization"));
    }
    Ok((frame, rho_d))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StateKind {
    /// Uniformly (Haar) distributed pure state.
    Pure,
    /// Ginibre mixed state `G G† / tr(G G†)`.
    Mixed,
}

/// Seeded RNG used by every random draw in the crate.
pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub(crate) fn gaussian_complex<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// Deterministic random state for a seed.
pub fn random_state(kind: StateKind, seed: u64) -> DensityMatrix2Q {
    random_state_from(kind, &mut seeded_rng(seed))
}

pub fn random_state_from<R: Rng + ?Sized>(kind: StateKind, rng: &mut R) -> DensityMatrix2Q {
    match kind {
        StateKind::Pure => DensityMatrix2Q::from_pure(&random_pure_from(rng)),
        StateKind::Mixed => {
            let mut g = Mat4::zero();
            for z in g.0.iter_mut().flatten() {
                *z = gaussian_complex(rng);
            }
            DensityMatrix2Q::from_unnormalized(&(g * g.adjoint()))
        }
    }
}

pub fn random_pure_from<R: Rng + ?Sized>(rng: &mut R) -> PureState2Q {
    loop {
        let amps = [(); 4].map(|_| gaussian_complex(rng));
        if let Ok(psi) = PureState2Q::normalized(amps) {
            return psi;
        }
    }
}

/// Haar-random element of SU(2) from a uniformly distributed unit quaternion.
pub fn random_su2<R: Rng + ?Sized>(rng: &mut R) -> Mat2 {
    let q: [f64; 4] = loop {
        let q = [(); 4].map(|_| rng.sample::<f64, _>(StandardNormal));
        let n = q.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-12 {
            break q.map(|x| x / n);
        }
    };
    let [w, x, y, z] = q;
    Mat2([[C64::new(w, -z), C64::new(-y, -x)], [C64::new(y, -x), C64::new(w, z)]])
}

/// Uniformly distributed unit vector.
pub fn random_unit_vector<R: Rng + ?Sized>(rng: &mut R) -> Vec3 {
    loop {
        let v = Vec3([(); 3].map(|_| rng.sample::<f64, _>(StandardNormal)));
        let n = v.norm();
        if n > 1e-12 {
            return v * (1.0 / n);
        }
    }
}

/// Named states accepted on the command line.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum StatePreset {
    /// `|Φ+> = (|00> + |11>)/√2`
    BellPhiPlus,
    /// `|Φ−> = (|00> − |11>)/√2`
    BellPhiMinus,
    /// X-state with ½ on the corners of the diagonal and coherence `a`.
    Example1 { a: f64 },
    /// `(5|Φ+><Φ+| + 3|Φ−><Φ−|)/8`
    Example2Initial,
    /// `cos(θ/2)|00> + sin(θ/2)|11>`
    Schmidt { theta: f64 },
    /// `p|Φ+><Φ+| + (1 − p) I/4`
    Werner { p: f64 },
}

pub const EXAMPLE1_DEFAULT_A: f64 = 0.002;

impl StatePreset {
    pub fn build(&self) -> Result<DensityMatrix2Q> {
        let h = C64::new(FRAC_1_SQRT_2, 0.0);
        let phi_plus = [h, ZERO, ZERO, h];
        let phi_minus = [h, ZERO, ZERO, -h];
        match *self {
            StatePreset::BellPhiPlus => Ok(DensityMatrix2Q::from_pure(&PureState2Q::new(phi_plus)?)),
            StatePreset::BellPhiMinus => Ok(DensityMatrix2Q::from_pure(&PureState2Q::new(phi_minus)?)),
            StatePreset::Example1 { a } => {
                let mut m = Mat4::zero();
                m[(0, 0)] = ONE * 0.5;
                m[(3, 3)] = ONE * 0.5;
                m[(0, 3)] = C64::new(a, 0.0);
                m[(3, 0)] = C64::new(a, 0.0);
                DensityMatrix2Q::new(m)
            }
            StatePreset::Example2Initial => {
                DensityMatrix2Q::new(Mat4::outer(&phi_plus) * (5.0 / 8.0) + Mat4::outer(&phi_minus) * (3.0 / 8.0))
            }
            StatePreset::Schmidt { theta } => Ok(DensityMatrix2Q::from_pure(&PureState2Q::schmidt(theta))),
            StatePreset::Werner { p } => {
                DensityMatrix2Q::new(Mat4::outer(&phi_plus) * p + Mat4::identity() * ((1.0 - p) / 4.0))
            }
        }
    }

    /// The pure state behind the preset, when there is one.
    pub fn pure_state(&self) -> Option<PureState2Q> {
        let h = FRAC_1_SQRT_2;
        match *self {
            StatePreset::BellPhiPlus => PureState2Q::from_real([h, 0.0, 0.0, h]).ok(),
            StatePreset::BellPhiMinus => PureState2Q::from_real([h, 0.0, 0.0, -h]).ok(),
            StatePreset::Schmidt { theta } => Some(PureState2Q::schmidt(theta)),
            StatePreset::Werner { p } if p == 1.0 => PureState2Q::from_real([h, 0.0, 0.0, h]).ok(),
            _ => None,
        }
    }
}

/// Splits `name(arg, arg, ...)` into the name and parsed numeric arguments.
pub(crate) fn split_call(text: &str) -> Result<(String, Vec<f64>)> {
    let text = text.trim();
    let bad = || Error::UnknownPreset(text.to_string());
    match text.find('(') {
        None => Ok((text.to_string(), Vec::new())),
        Some(open) => {
            let inner = text[open + 1..].strip_suffix(')').ok_or_else(bad)?;
            let args = inner
                .split(',')
                .map(|s| s.trim().parse::<f64>().map_err(|_| bad()))
                .collect::<Result<Vec<_>>>()?;
            Ok((text[..open].trim().to_string(), args))
        }
    }
}

impl FromStr for StatePreset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, args) = split_call(s)?;
        let bad = || Error::UnknownPreset(s.trim().to_string());
        let preset = match (name.as_str(), args.as_slice()) {
            ("bell-phi-plus", []) => StatePreset::BellPhiPlus,
            ("bell-phi-minus", []) => StatePreset::BellPhiMinus,
            ("example1", []) => StatePreset::Example1 { a: EXAMPLE1_DEFAULT_A },
            ("example1", [a]) => StatePreset::Example1 { a: *a },
            ("example2-initial", []) => StatePreset::Example2Initial,
            ("schmidt", [theta]) => StatePreset::Schmidt { theta: *theta },
            ("werner", [p]) => StatePreset::Werner { p: *p },
            _ => return Err(bad()),
        };
        Ok(preset)
    }
}

impl fmt::Display for StatePreset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StatePreset::BellPhiPlus => write!(f, "bell-phi-plus"),
            StatePreset::BellPhiMinus => write!(f, "bell-phi-minus"),
            StatePreset::Example1 { a } => write!(f, "example1({a})"),
            StatePreset::Example2Initial => write!(f, "example2-initial"),
            StatePreset::Schmidt { theta } => write!(f, "schmidt({theta})"),
            StatePreset::Werner { p } => write!(f, "werner({p})"),
        }
    }
}

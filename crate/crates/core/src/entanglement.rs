//! Concurrence, partial-transpose separability and the product-state test.

use crate::error::Result;
use crate::matrix::{hermitian_eigenvalues, partial_transpose, pauli, singular_values, tensor, Mat4};
use crate::states::{bloch_decompose, DensityMatrix2Q};

/// Concurrence below this value counts as zero. Overridable by callers.
pub const DEFAULT_CONCURRENCE_TOL: f64 = 1e-9;
/// Default tolerance for the product-state test.
pub const DEFAULT_PRODUCT_TOL: f64 = 1e-9;

fn sigma_y_pair() -> Mat4 {
    tensor(&pauli::Y, &pauli::Y)
}

/// `ρ̃ = (σy⊗σy) ρ* (σy⊗σy)`.
pub fn spin_flip(rho: &DensityMatrix2Q) -> Mat4 {
    let yy = sigma_y_pair();
    yy * rho.matrix().conj() * yy
}

/// Wootters concurrence together with the square-rooted spectrum of `ρ ρ̃`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConcurrenceResult {
    pub value: f64,
    /// `√λ_i`, descending.
    pub sqrt_eigs: [f64; 4],
}

impl ConcurrenceResult {
    fn from_sqrt_eigs(sqrt_eigs: [f64; 4]) -> Self {
        let raw = sqrt_eigs[0] - sqrt_eigs[1] - sqrt_eigs[2] - sqrt_eigs[3];
        ConcurrenceResult { value: raw.clamp(0.0, 1.0), sqrt_eigs }
    }

    pub fn is_zero(&self, tol: f64) -> bool {
        self.value < tol
    }
}

/// Wootters concurrence `max(0, √λ1 − √λ2 − √λ3 − √λ4)`.
///
/// The `√λ_i` are taken as the singular values of `Xᵀ (σy⊗σy) X` for a factor
/// `ρ = X X†`: `ρ ρ̃ = X X† Y Y†` with `Y = (σy⊗σy) X*`, which shares its
/// nonzero spectrum with `(X†Y)(X†Y)†`. This avoids the loss of accuracy
/// that root-finding suffers at the repeated zero eigenvalues of low-rank
/// states.
pub fn concurrence(rho: &DensityMatrix2Q) -> Result<ConcurrenceResult> {
    let x = rho.factor()?;
    let tau = x.transpose() * sigma_y_pair() * x;
    Ok(ConcurrenceResult::from_sqrt_eigs(singular_values(&tau)?))
}

/// Concurrence value only.
pub fn concurrence_value(rho: &DensityMatrix2Q) -> Result<f64> {
    concurrence(rho).map(|c| c.value)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SeparabilityVerdict {
    pub concurrence_zero: bool,
    pub ppt: bool,
    pub min_pt_eigenvalue: f64,
    /// `‖T − a bᵀ‖_F`
    pub product_gap: f64,
}

/// Peres–Horodecki check: positive partial transpose within `tol`, alongside
/// the concurrence verdict at the same tolerance.
pub fn ppt_check(rho: &DensityMatrix2Q, tol: f64) -> Result<SeparabilityVerdict> {
    let min_pt_eigenvalue = hermitian_eigenvalues(&partial_transpose(rho.matrix()))?[0];
    let c = concurrence(rho)?;
    Ok(SeparabilityVerdict {
        concurrence_zero: c.is_zero(tol),
        ppt: min_pt_eigenvalue >= -tol,
        min_pt_eigenvalue,
        product_gap: bloch_decompose(rho)?.product_gap(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProductTest {
    pub is_product: bool,
    /// `‖T − a bᵀ‖_F`
    pub correlation_gap: f64,
    /// `‖ρ − ρ_S ⊗ ρ_E‖_F`
    pub factorization_gap: f64,
}

impl ProductTest {
    /// The larger of the two gaps.
    pub fn gap(&self) -> f64 {
        self.correlation_gap.max(self.factorization_gap)
    }
}

/// A state is a product when both the correlation gap and the explicit
/// factorization residual are below `tol`.
pub fn product_state_test(rho: &DensityMatrix2Q, tol: f64) -> Result<ProductTest> {
    let correlation_gap = bloch_decompose(rho)?.product_gap();
    let factorization_gap = (*rho.matrix() - tensor(&rho.reduced_system(), &rho.reduced_environment())).frobenius_norm();
    Ok(ProductTest {
        is_product: correlation_gap < tol && factorization_gap < tol,
        correlation_gap,
        factorization_gap,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::{eigenvalues_nonneg, Mat2, C64};
    use crate::states::{random_state, PureState2Q, StateKind, StatePreset};
    use approx::assert_abs_diff_eq;

    fn basis(k: usize) -> DensityMatrix2Q {
        let mut amps = [C64::new(0.0, 0.0); 4];
        amps[k] = C64::new(1.0, 0.0);
        DensityMatrix2Q::from_pure(&PureState2Q::new(amps).unwrap())
    }

    #[test]
    fn spin_flip_examples() {
        let bell = StatePreset::BellPhiPlus.build().unwrap();
        assert!((spin_flip(&bell) - *bell.matrix()).max_abs() < 1e-15);
        assert!((spin_flip(&basis(0)) - *basis(3).matrix()).max_abs() < 1e-15);
        let mm = DensityMatrix2Q::maximally_mixed();
        assert!((spin_flip(&mm) - *mm.matrix()).max_abs() < 1e-15);
    }

    #[test]
    fn concurrence_examples() {
        assert_abs_diff_eq!(concurrence_value(&StatePreset::BellPhiPlus.build().unwrap()).unwrap(), 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(concurrence_value(&basis(1)).unwrap(), 0.0, epsilon = 1e-15);
        // Bell-diagonal: √λ = (5/8, 3/8, 0, 0).
        let c = concurrence(&StatePreset::Example2Initial.build().unwrap()).unwrap();
        assert_abs_diff_eq!(c.value, 0.25, epsilon = 1e-14);
        assert_abs_diff_eq!(c.sqrt_eigs[0], 0.625, epsilon = 1e-14);
        assert_abs_diff_eq!(c.sqrt_eigs[1], 0.375, epsilon = 1e-14);
    }

    #[test]
    fn example2_spectrum_from_quartic_route() {
        let rho = StatePreset::Example2Initial.build().unwrap();
        let eig = eigenvalues_nonneg(&(*rho.matrix() * spin_flip(&rho)), 1e-12).unwrap();
        for (got, want) in eig.iter().zip([25.0 / 64.0, 9.0 / 64.0, 0.0, 0.0]) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-12);
        }
    }

    #[test]
    fn pure_state_matches_closed_form() {
        for seed in 0..200 {
            let rho = random_state(StateKind::Pure, seed);
            // Recover amplitudes from the first nonzero column.
            let m = rho.matrix();
            let col = (0..4).max_by(|&i, &j| m[(i, i)].re.total_cmp(&m[(j, j)].re)).unwrap();
            let scale = m[(col, col)].re.sqrt();
            let amps = [0, 1, 2, 3].map(|i| m[(i, col)] / scale);
            let psi = PureState2Q::normalized(amps).unwrap();
            assert_abs_diff_eq!(concurrence_value(&rho).unwrap(), psi.concurrence(), epsilon = 1e-12);
        }
    }

    #[test]
    fn werner_threshold() {
        for p in [0.0, 0.2, 1.0 / 3.0, 0.5, 0.9] {
            let c = concurrence_value(&StatePreset::Werner { p }.build().unwrap()).unwrap();
            assert_abs_diff_eq!(c, ((3.0 * p - 1.0) / 2.0).max(0.0), epsilon = 1e-12);
        }
    }

    #[test]
    fn ppt_examples() {
        let v = ppt_check(&StatePreset::BellPhiPlus.build().unwrap(), 1e-9).unwrap();
        assert!(!v.ppt && !v.concurrence_zero);
        assert_abs_diff_eq!(v.min_pt_eigenvalue, -0.5, epsilon = 1e-14);

        let rs = Mat2::from_real([[0.9, 0.2], [0.2, 0.1]]);
        let re = Mat2::from_real([[0.5, -0.5], [-0.5, 0.5]]);
        let v = ppt_check(&DensityMatrix2Q::product(&rs, &re).unwrap(), 1e-9).unwrap();
        assert!(v.ppt && v.concurrence_zero);
        assert!(v.product_gap < 1e-10);
    }

    #[test]
    fn product_test_examples() {
        let rs = Mat2::from_real([[0.3, 0.1], [0.1, 0.7]]);
        let re = Mat2::from_real([[0.6, 0.0], [0.0, 0.4]]);
        let t = product_state_test(&DensityMatrix2Q::product(&rs, &re).unwrap(), 1e-9).unwrap();
        assert!(t.is_product);
        assert!(t.gap() < 1e-15);

        let bell = product_state_test(&StatePreset::BellPhiPlus.build().unwrap(), 1e-9).unwrap();
        assert!(!bell.is_product);
        assert_abs_diff_eq!(bell.correlation_gap, 3f64.sqrt(), epsilon = 1e-14);
    }

    #[test]
    fn concurrence_is_bounded() {
        for seed in 0..300 {
            let c = concurrence_value(&random_state(StateKind::Mixed, seed)).unwrap();
            assert!((0.0..=1.0).contains(&c));
        }
    }
}

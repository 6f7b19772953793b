use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Updates whose denominator `1 + g' ξ a` is this close to zero are skipped.
pub const DENOMINATOR_GUARD: f64 = 1e-12;

/// Instrumental-variable recursive least squares.
///
/// After updates with instruments `a_k`, regressors `g_k` and targets `t_k`,
/// `ξ = (ϖ⁻¹ I + Σ a_k g_k')⁻¹` and `ψ = Σ a_k t_k`, so `ξ ψ` tends to the
/// batch solution as `ϖ → ∞`. `ξ` is not symmetric unless `a_k = g_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct RlsState<T: Real> {
    xi: DMatrix<T>,
    psi: DVector<T>,
    samples_seen: usize,
    skipped: usize,
    xi_a: DVector<T>,
    xit_g: DVector<T>,
}

impl<T: Real> RlsState<T> {
    /// `ξ = ϖ I`, `ψ = 0`.
    pub fn new(dim: usize, varpi: T) -> Self {
        Self {
            xi: DMatrix::identity(dim, dim) * varpi,
            psi: DVector::zeros(dim),
            samples_seen: 0,
            skipped: 0,
            xi_a: DVector::zeros(dim),
            xit_g: DVector::zeros(dim),
        }
    }

    /// State reached after absorbing `samples` rows with information matrix
    /// `gram = Σ a_k g_k'` and `psi = Σ a_k t_k`: `ξ = (ϖ⁻¹ I + gram)⁻¹`.
    ///
    /// In exact arithmetic this equals `samples` calls to [`update`] from
    /// [`new`]; the single inversion avoids the cancellation those early
    /// updates suffer against the large `ϖ I` start.
    ///
    /// [`update`]: RlsState::update
    /// [`new`]: RlsState::new
    pub fn from_information(
        gram: DMatrix<T>,
        psi: DVector<T>,
        varpi: T,
        samples: usize,
    ) -> Result<Self> {
        let dim = psi.len();
        if gram.shape() != (dim, dim) {
            return Err(Error::dimension(
                "RLS information matrix",
                format!("{dim}x{dim}"),
                format!("{:?}", gram.shape()),
            ));
        }
        let info = gram + DMatrix::identity(dim, dim) / varpi;
        let singular = || Error::InsufficientExcitation {
            detail: "RLS information matrix is singular".into(),
        };
        let xi = info.lu().try_inverse().ok_or_else(singular)?;
        if xi.iter().any(|v| !v.is_finite()) {
            return Err(singular());
        }
        Ok(Self {
            xi,
            psi,
            samples_seen: samples,
            skipped: 0,
            xi_a: DVector::zeros(dim),
            xit_g: DVector::zeros(dim),
        })
    }

    pub fn dim(&self) -> usize {
        self.psi.len()
    }

    pub fn xi(&self) -> &DMatrix<T> {
        &self.xi
    }

    pub fn psi(&self) -> &DVector<T> {
        &self.psi
    }

    pub fn samples_seen(&self) -> usize {
        self.samples_seen
    }

    pub fn skipped(&self) -> usize {
        self.skipped
    }

    /// `ξ ψ`
    pub fn estimate(&self) -> DVector<T> {
        &self.xi * &self.psi
    }

    /// `ξ ← ξ − ξ a g' ξ / (1 + g' ξ a)`, `ψ ← ψ + a t`.
    ///
    /// A near-zero denominator leaves the state untouched, bumps the skip
    /// counter and returns [`Error::IllConditionedUpdate`].
    pub fn update(&mut self, instrument: &[T], regressor: &[T], target: T) -> Result<()> {
        let dim = self.dim();
        assert_eq!(instrument.len(), dim, "instrument length");
        assert_eq!(regressor.len(), dim, "regressor length");
        let a = nalgebra::DVectorView::from_slice(instrument, dim);
        let g = nalgebra::DVectorView::from_slice(regressor, dim);

        self.xi_a.gemv(T::one(), &self.xi, &a, T::zero());
        let denom = T::one() + g.dot(&self.xi_a);
        if denom.magnitude() <= T::lit(DENOMINATOR_GUARD) || !denom.is_finite() {
            self.skipped += 1;
            return Err(Error::IllConditionedUpdate {
                denominator: denom.to_f64_lossy(),
            });
        }
        self.xit_g.gemv_tr(T::one(), &self.xi, &g, T::zero());
        self.xi
            .ger(-T::one() / denom, &self.xi_a, &self.xit_g, T::one());
        self.psi.axpy(target, &a, T::one());
        self.samples_seen += 1;
        Ok(())
    }
}

/// One RLS step with the Q-learning regressor
/// `g = φ_k − φ_next + vech(κ)` and instrument `φ_k`.
pub fn rls_update<T: Real>(
    state: &mut RlsState<T>,
    phi_k: &DVector<T>,
    phi_next: &DVector<T>,
    vech_kappa: &DVector<T>,
    cost_k: T,
) -> Result<()> {
    let g = phi_k - phi_next + vech_kappa;
    state.update(phi_k.as_slice(), g.as_slice(), cost_k)
}

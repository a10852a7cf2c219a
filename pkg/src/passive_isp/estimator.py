"""scikit-learn style wrapper around the spectral reconstruction pipeline."""

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._validation import check_positions, check_records
from .exceptions import ValidationError
from .model import array_to_records, load_profile, validate_medium
from .reconstruct import (
    DEFAULT_ZERO_MODE_KS,
    assemble_source,
    coefficients_from_records,
    measurement_frequencies,
    truncation_level,
)
from .spectral import neumann_eigensystem


class PassiveSourceReconstructor(BaseEstimator):
    """Recover ``f`` from passive records in a known medium.

    Parameters
    ----------
    medium : str or array-like
        Built-in profile (``"bump(0.2,0.8,1)"``), a ``# x q`` file path, or
        nodal samples of ``q``.
    n_cells : int
        Grid size used when ``medium`` is a profile name.
    n0, M : float
        Admissibility bounds passed to the medium validation.
    mu_target : float
        Highest eigenfrequency to use; ``f`` is expanded in every mode with
        ``mu_j <= mu_target``.  Required, since it depends on the unknown source.
    zero_mode : bool
        Recover the constant mode from small-``k`` records.
    strict_zero_mode : bool
        Reject zero-mode samples whose extrapolation corrections grow; switch
        off for noisy data.

    Attributes
    ----------
    eigensystem_ : EigenSystem
    coefficients_ : SpectralCoefficients
    coef_ : ndarray of shape (truncation_,)
    f_hat_ : ndarray
        Nodal reconstruction of ``f``.
    """

    def __init__(self, medium="zero", n_cells=1024, n0=0.5, M=1e4, mu_target=None, zero_mode=True,
                 strict_zero_mode=True):
        self.medium = medium
        self.n_cells = n_cells
        self.n0 = n0
        self.M = M
        self.mu_target = mu_target
        self.zero_mode = zero_mode
        self.strict_zero_mode = strict_zero_mode

    def _build_medium(self):
        if isinstance(self.medium, str):
            q = load_profile(self.medium, self.n_cells, "q")
        else:
            q = np.asarray(self.medium, dtype=float)
        return validate_medium(q, self.n0, self.M)

    def _eigensystem(self, medium):
        if self.mu_target is None or not self.mu_target > 0:
            raise ValidationError("MISSING_MU_TARGET", "mu_target must be set to a positive value")
        return neumann_eigensystem(medium, float(self.mu_target))

    def measurement_plan(self):
        """Wavenumbers at which records are needed (zero-mode samples first)."""
        es = self._eigensystem(self._build_medium())
        J = truncation_level(es, float(self.mu_target))
        ks = measurement_frequencies(es, J, DEFAULT_ZERO_MODE_KS if self.zero_mode else ())
        return np.array(ks)

    def fit(self, X, y=None):
        """Fit from an ``(n, 3)`` array of ``k, Im phi(0, k), Im phi(1, k)`` rows."""
        X = check_records(X)
        medium = self._build_medium()
        es = self._eigensystem(medium)
        J = truncation_level(es, float(self.mu_target))
        coeffs = coefficients_from_records(es, array_to_records(X), J, zero_mode=self.zero_mode,
                                           strict=self.strict_zero_mode)
        self.medium_ = medium
        self.eigensystem_ = es
        self.truncation_ = J
        self.coefficients_ = coeffs
        self.coef_ = coeffs.values()
        self.f_hat_ = assemble_source(coeffs, es, medium)
        self.n_features_in_ = 3
        return self

    def predict(self, X):
        """Reconstructed ``f`` at positions in ``[0, 1]`` (linear interpolation between nodes)."""
        check_is_fitted(self, "f_hat_")
        x = check_positions(X)
        return np.interp(x, self.medium_.grid.nodes, self.f_hat_)

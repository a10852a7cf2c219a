"""Input checks for the estimator interface, on top of scikit-learn's helpers."""

import numpy as np
from sklearn.utils.validation import check_array

from .exceptions import ValidationError


def check_records(X):
    """``(n, 3)`` float array of ``k, Im phi(0, k), Im phi(1, k)`` with ``k > 0``."""
    try:
        X = check_array(X, dtype=float, ensure_2d=True, ensure_min_samples=1)
    except ValueError as err:
        raise ValidationError("BAD_RECORDS", str(err)) from None
    if X.shape[1] != 3:
        raise ValidationError("BAD_RECORDS", f"expected 3 columns (k, im_phi_0, im_phi_1), got {X.shape[1]}")
    if np.any(X[:, 0] <= 0):
        raise ValidationError("BAD_K", "record wavenumbers must be positive")
    return X


def check_positions(x):
    """Flat float array of evaluation points inside ``[0, 1]``."""
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 2 and arr.shape[1] == 1:
        arr = arr[:, 0]
    try:
        arr = check_array(arr.reshape(-1, 1), dtype=float)[:, 0]
    except ValueError as err:
        raise ValidationError("BAD_POSITIONS", str(err)) from None
    if np.any((arr < 0) | (arr > 1)):
        raise ValidationError("BAD_POSITIONS", "positions must lie in [0, 1]")
    return arr

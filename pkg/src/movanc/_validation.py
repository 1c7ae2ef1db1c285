"""Input checks shared by the estimator classes."""
import numpy as np
from sklearn.utils.validation import check_array, check_consistent_length


def check_signal(X, name="X"):
    """Accept shape (n,) or (n, 1); return a finite 1-D float64 array."""
    arr = check_array(X, ensure_2d=False, dtype=np.float64, input_name=name)
    if arr.ndim == 2:
        if arr.shape[1] != 1:
            raise ValueError(f"{name} must be a single signal, got {arr.shape[1]} columns")
        arr = arr[:, 0]
    return np.ascontiguousarray(arr)


def check_signal_pair(X, y):
    x = check_signal(X, "X")
    d = check_signal(y, "y")
    check_consistent_length(x, d)
    return x, d


def check_coeffs(c, name):
    arr = np.asarray(c, dtype=np.float64).ravel()
    if arr.size == 0 or not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must be a non-empty vector of finite coefficients")
    return arr

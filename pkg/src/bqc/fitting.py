"""Least-squares growth exponents."""
import numpy as np


def loglog_slope(xs, ys) -> float:
    """Slope of the least-squares line through ``(log x, log y)``."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if len(xs) < 2 or len(xs) != len(ys):
        raise ValueError("need at least two matching points")
    if np.any(xs <= 0) or np.any(ys <= 0):
        raise ValueError("log-log fit needs positive data")
    return float(np.polyfit(np.log(xs), np.log(ys), 1)[0])


def loglog_plane(xs, ys, zs) -> tuple:
    """Exponents (alpha, beta) of the fit ``z ~ C x^alpha y^beta``."""
    A = np.column_stack([np.ones(len(xs)), np.log(xs), np.log(ys)])
    coef, *_ = np.linalg.lstsq(A, np.log(np.asarray(zs, dtype=float)), rcond=None)
    return float(coef[1]), float(coef[2])

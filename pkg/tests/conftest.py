import numpy as np
import pytest

from cvarkit.var import VarModel, simulate


def write_panel_csv(path, columns, time=None):
    """Write ``columns`` (name -> values) as a CSV with an integer time column."""
    names = list(columns)
    T = len(columns[names[0]])
    time = range(T) if time is None else time
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("date," + ",".join(names) + "\n")
        for t, stamp in enumerate(time):
            fh.write(f"{stamp}," + ",".join(repr(float(columns[n][t])) for n in names) + "\n")
    return path


def write_roles(path, roles):
    with open(path, "w", encoding="utf-8") as fh:
        for name, role in roles.items():
            fh.write(f"{name} = {role}\n")
    return path


def simulate_var_data(A, sigma, T, seed, burn=200, intercept=None):
    A = np.asarray(A, dtype=float)
    if A.ndim == 2:
        A = A[None]
    n = A.shape[1]
    rng = np.random.default_rng(seed)
    eps = rng.standard_normal((T + burn, n)) @ np.linalg.cholesky(sigma).T
    model = VarModel.from_coefficients(A, intercept=intercept, sigma=sigma)
    return simulate(model, eps)[A.shape[0] + burn:]


@pytest.fixture
def rng():
    return np.random.default_rng(12345)

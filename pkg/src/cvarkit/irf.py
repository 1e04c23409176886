"""Container for impulse responses and their bootstrap bands."""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np


@dataclass(frozen=True, eq=False)
class IrfBundle:
    """Responses to unit policy shocks.

    ``point[h, i, k]`` is the response of series ``i`` at horizon ``h`` to a
    unit innovation in policy ``k``. ``lower``/``upper`` hold pointwise
    percentile bands when a bootstrap was run, otherwise ``None``.
    """

    point: np.ndarray
    labels: tuple = ()
    shock_labels: tuple = ()
    space: str = "level"
    lower: np.ndarray = None
    upper: np.ndarray = None
    level: float = None
    replications: int = 0
    skipped: int = 0
    meta: dict = field(default_factory=dict)

    @property
    def horizons(self) -> int:
        return self.point.shape[0] - 1

    @property
    def has_bands(self) -> bool:
        return self.lower is not None

    def response(self, series, shock=0) -> np.ndarray:
        i = self.labels.index(series) if isinstance(series, str) else int(series)
        k = self.shock_labels.index(shock) if isinstance(shock, str) else int(shock)
        return self.point[:, i, k]

    def with_bands(self, lower, upper, level, replications, skipped=0, **meta) -> "IrfBundle":
        return replace(self, lower=np.asarray(lower), upper=np.asarray(upper),
                       level=float(level), replications=int(replications),
                       skipped=int(skipped), meta={**self.meta, **meta})

    def band_violation_rate(self) -> float:
        """Share of cells where the point estimate falls outside its band."""
        if not self.has_bands:
            return 0.0
        outside = (self.point < self.lower - 1e-12) | (self.point > self.upper + 1e-12)
        return float(outside.mean())

    def rows(self):
        """Long-format rows ``(horizon, shock, series, response, lower, upper)``."""
        H1, n, K = self.point.shape
        labels = self.labels or tuple(f"x{i}" for i in range(n))
        shocks = self.shock_labels or tuple(f"shock{k}" for k in range(K))
        for k in range(K):
            for i in range(n):
                for h in range(H1):
                    lo = self.lower[h, i, k] if self.has_bands else float("nan")
                    hi = self.upper[h, i, k] if self.has_bands else float("nan")
                    yield h, shocks[k], labels[i], float(self.point[h, i, k]), float(lo), float(hi)

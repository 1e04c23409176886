"""Multivariate time-series panels with causal role annotations.

A panel is a ``T x n`` matrix of observations where every column carries a
role: a policy (indexed by ``k``), a treated outcome or a control outcome
(both indexed by ``j``). Columns are kept in the order policies, treated
outcomes, control outcomes, which is also the recursive ordering used for
identification.
"""
from __future__ import annotations

import csv
import datetime as _dt
import enum
import os
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from cvarkit.errors import (
    DuplicateTimestamp,
    InvalidRoles,
    MissingColumn,
    NonNumericCell,
    TooShort,
    UnassignedColumn,
)


class RoleKind(enum.Enum):
    POLICY = "policy"
    TREATED = "treated"
    CONTROL = "control"


_KIND_ORDER = {RoleKind.POLICY: 0, RoleKind.TREATED: 1, RoleKind.CONTROL: 2}


@dataclass(frozen=True)
class SeriesRole:
    """Role of one column: ``policy:k``, ``treated:j`` or ``control:j``."""

    kind: RoleKind
    index: int

    def __post_init__(self):
        if not isinstance(self.kind, RoleKind):
            object.__setattr__(self, "kind", RoleKind(self.kind))
        if int(self.index) < 1:
            raise InvalidRoles(f"role index must be >= 1, got {self.index}")
        object.__setattr__(self, "index", int(self.index))

    @classmethod
    def parse(cls, text: str) -> "SeriesRole":
        try:
            kind, index = text.strip().split(":")
            return cls(RoleKind(kind.strip().lower()), int(index))
        except (ValueError, KeyError) as exc:
            raise InvalidRoles(
                f"cannot parse role {text!r}; expected policy:k, treated:j or control:j"
            ) from exc

    def sort_key(self):
        return (_KIND_ORDER[self.kind], self.index)

    def __str__(self):
        return f"{self.kind.value}:{self.index}"


def policy(k: int = 1) -> SeriesRole:
    return SeriesRole(RoleKind.POLICY, k)


def treated(j: int = 1) -> SeriesRole:
    return SeriesRole(RoleKind.TREATED, j)


def control(j: int = 1) -> SeriesRole:
    return SeriesRole(RoleKind.CONTROL, j)


def _as_role(value) -> SeriesRole:
    if isinstance(value, SeriesRole):
        return value
    return SeriesRole.parse(str(value))


def _check_roles(roles: Sequence[SeriesRole]) -> None:
    seen = set()
    for role in roles:
        key = (role.kind, role.index)
        if key in seen:
            raise InvalidRoles(f"duplicate role {role}")
        seen.add(key)
    treated_idx = {r.index for r in roles if r.kind is RoleKind.TREATED}
    for role in roles:
        if role.kind is RoleKind.CONTROL and role.index not in treated_idx:
            raise InvalidRoles(f"control:{role.index} has no matching treated:{role.index}")


@dataclass(frozen=True, eq=False)
class TimeSeriesPanel:
    """Validated ``T x n`` panel.

    ``observations`` is stored as a read-only, column-major float64 array.
    Construct through :func:`from_columns` or :func:`load_panel` to get the
    canonical column ordering; the constructor itself keeps the order it is
    given.
    """

    observations: np.ndarray
    labels: tuple
    roles: tuple
    time_index: tuple = field(default=None)

    def __post_init__(self):
        obs = np.array(self.observations, dtype=np.float64, order="F", copy=True)
        if obs.ndim == 1:
            obs = obs.reshape(-1, 1, order="F")
        if obs.ndim != 2:
            raise InvalidRoles("observations must be a 2-D array")
        if not np.all(np.isfinite(obs)):
            raise NonNumericCell("panel contains missing or non-finite values")
        obs.setflags(write=False)
        labels = tuple(str(label) for label in self.labels)
        roles = tuple(_as_role(r) for r in self.roles)
        if len(labels) != obs.shape[1] or len(roles) != obs.shape[1]:
            raise InvalidRoles("labels and roles must match the number of columns")
        if len(set(labels)) != len(labels):
            raise InvalidRoles("labels must be unique")
        _check_roles(roles)
        time_index = self.time_index
        if time_index is None:
            time_index = tuple(range(obs.shape[0]))
        time_index = tuple(time_index)
        if len(time_index) != obs.shape[0]:
            raise InvalidRoles("time_index length must equal the number of rows")
        object.__setattr__(self, "observations", obs)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "roles", roles)
        object.__setattr__(self, "time_index", time_index)

    @property
    def n_obs(self) -> int:
        return self.observations.shape[0]

    @property
    def n_series(self) -> int:
        return self.observations.shape[1]

    def positions(self, kind: RoleKind) -> list:
        return [i for i, r in enumerate(self.roles) if r.kind is kind]

    @property
    def policy_positions(self) -> list:
        return self.positions(RoleKind.POLICY)

    @property
    def treated_positions(self) -> list:
        return self.positions(RoleKind.TREATED)

    @property
    def control_positions(self) -> list:
        return self.positions(RoleKind.CONTROL)

    @property
    def outcome_positions(self) -> list:
        return [i for i, r in enumerate(self.roles) if r.kind is not RoleKind.POLICY]

    def index_of(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise MissingColumn(f"no column named {label!r}") from None

    def column(self, label: str) -> np.ndarray:
        return self.observations[:, self.index_of(label)]

    def position_of(self, role) -> int:
        role = _as_role(role)
        for i, r in enumerate(self.roles):
            if r == role:
                return i
        raise MissingColumn(f"no column with role {role}")

    def select(self, labels: Sequence[str]) -> "TimeSeriesPanel":
        idx = [self.index_of(label) for label in labels]
        return TimeSeriesPanel(
            self.observations[:, idx],
            [self.labels[i] for i in idx],
            [self.roles[i] for i in idx],
            self.time_index,
        )

    def with_column(self, label: str, values) -> "TimeSeriesPanel":
        """Copy of the panel with one column's values replaced."""
        pos = self.index_of(label)
        obs = np.array(self.observations)
        obs[:, pos] = np.asarray(values, dtype=float)
        return TimeSeriesPanel(obs, self.labels, self.roles, self.time_index)


def canonical_order(roles: Sequence[SeriesRole]) -> list:
    """Column permutation putting policies, then treated, then controls first."""
    return sorted(range(len(roles)), key=lambda i: _as_role(roles[i]).sort_key())


def from_columns(columns: Mapping[str, Sequence[float]], roles: Mapping[str, object],
                 time_index=None) -> TimeSeriesPanel:
    """Build a panel from named columns, normalising the column order.

    ``roles`` maps each column name to a :class:`SeriesRole` or its text form
    (``"policy:1"``).
    """
    for name in roles:
        if name not in columns:
            raise MissingColumn(f"role map names absent column {name!r}")
    for name in columns:
        if name not in roles:
            raise UnassignedColumn(f"column {name!r} has no role")
    names = list(columns)
    role_list = [_as_role(roles[name]) for name in names]
    order = canonical_order(role_list)
    data = np.column_stack([np.asarray(columns[names[i]], dtype=float) for i in order])
    return TimeSeriesPanel(data, [names[i] for i in order], [role_list[i] for i in order],
                           time_index)


def parse_role_config(text: str) -> dict:
    """Parse ``column = policy:1`` lines; ``#`` starts a comment."""
    roles = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InvalidRoles(f"line {lineno}: expected 'column = kind:index'")
        name, value = (part.strip() for part in line.split("=", 1))
        if name in roles:
            raise InvalidRoles(f"line {lineno}: column {name!r} assigned twice")
        roles[name] = SeriesRole.parse(value)
    return roles


def read_role_config(path) -> dict:
    with open(path, encoding="utf-8") as fh:
        return parse_role_config(fh.read())


def _parse_time(text: str):
    text = text.strip()
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return _dt.date.fromisoformat(text)
    except ValueError:
        pass
    try:
        return _dt.datetime.fromisoformat(text)
    except ValueError:
        raise NonNumericCell(f"cannot parse time value {text!r}") from None


def _parse_cell(text: str, row: int, column: str) -> float:
    stripped = text.strip()
    if not stripped:
        raise NonNumericCell(f"empty cell in column {column!r}, data row {row}")
    try:
        value = float(stripped)
    except ValueError:
        raise NonNumericCell(
            f"non-numeric cell {stripped!r} in column {column!r}, data row {row}"
        ) from None
    if not np.isfinite(value):
        raise NonNumericCell(f"non-finite cell {stripped!r} in column {column!r}, data row {row}")
    return value


def load_panel(csv_path, role_map) -> TimeSeriesPanel:
    """Read a CSV whose first column is time and assign roles.

    Parameters
    ----------
    csv_path : path-like
        Comma-separated file with a header row.
    role_map : mapping or path-like
        Column name to role, or a path to a ``column = kind:index`` file.
        Every non-time column must be assigned.

    Rows are sorted by time; only the ordering of timestamps is used.
    """
    if isinstance(role_map, (str, os.PathLike)):
        role_map = read_role_config(role_map)
    roles = {name: _as_role(value) for name, value in role_map.items()}

    with open(csv_path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    rows = [row for row in rows if any(cell.strip() for cell in row)]
    if not rows:
        raise TooShort(f"{csv_path}: empty file")
    header = [h.strip() for h in rows[0]]
    if len(header) < 2:
        raise MissingColumn(f"{csv_path}: need a time column and at least one series")
    names = header[1:]
    if len(set(names)) != len(names):
        raise InvalidRoles(f"{csv_path}: duplicate column names in header")
    for name in roles:
        if name not in names:
            raise MissingColumn(f"role map names absent column {name!r}")
    for name in names:
        if name not in roles:
            raise UnassignedColumn(f"column {name!r} has no role")

    times, values = [], []
    for rownum, row in enumerate(rows[1:], start=1):
        if len(row) != len(header):
            raise NonNumericCell(f"data row {rownum} has {len(row)} cells, expected {len(header)}")
        times.append(_parse_time(row[0]))
        values.append([_parse_cell(cell, rownum, name) for cell, name in zip(row[1:], names)])
    if len(set(times)) != len(times):
        raise DuplicateTimestamp(f"{csv_path}: repeated time values")
    try:
        order = sorted(range(len(times)), key=times.__getitem__)
    except TypeError:
        raise NonNumericCell(f"{csv_path}: time column mixes integers and dates") from None
    data = np.array(values, dtype=float).reshape(len(times), len(names))[order]
    columns = {name: data[:, i] for i, name in enumerate(names)}
    return from_columns(columns, roles, time_index=[times[i] for i in order])


def first_difference(panel: TimeSeriesPanel) -> TimeSeriesPanel:
    """``x_t - x_{t-1}``; the result has ``T - 1`` rows and the same roles."""
    if panel.n_obs < 2:
        raise TooShort("first_difference needs at least 2 observations")
    diff = np.diff(panel.observations, axis=0)
    return TimeSeriesPanel(diff, panel.labels, panel.roles, panel.time_index[1:])

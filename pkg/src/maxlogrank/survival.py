"""Two-sample right-censored data: subjects, risk/event tables and the pooled
left-continuous Kaplan-Meier CDF.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, NamedTuple

import numpy as np

from .exceptions import DegenerateDataError, DomainError

__all__ = [
    "Subject",
    "EventTable",
    "build_event_table",
    "event_table_from_arrays",
    "pooled_km_cdf",
    "censoring_rates",
    "censoring_rates_from_arrays",
    "subjects_to_arrays",
]


class Subject(NamedTuple):
    """One observed record: follow-up ``time``, ``event`` flag and ``group``."""

    time: float
    event: bool
    group: int


def _frozen(a) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class EventTable:
    """Risk-set and event counts at the pooled distinct event times.

    Attributes
    ----------
    time : ndarray
        Strictly increasing distinct event times.
    y0, y1 : ndarray
        Numbers at risk (observed time >= t) in each group.
    d0, d1 : ndarray
        Numbers of events at each time in each group.
    f_minus : ndarray
        Pooled Kaplan-Meier CDF just before each event time.
    n0, n1 : int
        Group sizes.
    """

    time: np.ndarray
    y0: np.ndarray
    y1: np.ndarray
    d0: np.ndarray
    d1: np.ndarray
    f_minus: np.ndarray
    n0: int
    n1: int
    usable: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        for name in ("time", "y0", "y1", "d0", "d1", "f_minus"):
            object.__setattr__(self, name, _frozen(getattr(self, name)))
        object.__setattr__(self, "usable", _frozen((self.y0 > 0) & (self.y1 > 0)))

    def __len__(self):
        return len(self.time)

    @property
    def y(self) -> np.ndarray:
        return self.y0 + self.y1

    @property
    def d(self) -> np.ndarray:
        return self.d0 + self.d1

    def swapped(self) -> "EventTable":
        """The same table with the group labels exchanged."""
        return EventTable(self.time, self.y1, self.y0, self.d1, self.d0,
                          self.f_minus, self.n1, self.n0)

    def rows(self):
        """Iterate ``(time, y0, y1, d0, d1, f_minus)`` tuples."""
        return zip(self.time.tolist(), self.y0.tolist(), self.y1.tolist(),
                   self.d0.tolist(), self.d1.tolist(), self.f_minus.tolist())


def subjects_to_arrays(subjects: Iterable[Subject]):
    """Split subjects into ``(time, event, group)`` arrays."""
    subjects = list(subjects)
    if not subjects:
        return np.empty(0), np.empty(0, bool), np.empty(0, int)
    time = np.array([float(s[0]) for s in subjects])
    event = np.array([bool(s[1]) for s in subjects])
    group = np.array([int(s[2]) for s in subjects])
    return time, event, group


def _validate(time, event, group):
    if not (len(time) == len(event) == len(group)):
        raise DomainError("time, event and group must have equal length")
    if not np.all(np.isfinite(time)) or np.any(time < 0):
        raise DomainError("times must be finite and non-negative")
    if np.any((group != 0) & (group != 1)):
        raise DomainError("group labels must be 0 or 1")


def pooled_km_cdf(y, d=None) -> np.ndarray:
    """Left-continuous pooled Kaplan-Meier CDF at each event row.

    ``F(t_j-) = 1 - prod_{k<j} (1 - d_k / y_k)``; the first row is 0.
    Pass either an :class:`EventTable` or pooled at-risk and event counts.
    """
    if isinstance(y, EventTable):
        y, d = y.y, y.d
    y = np.asarray(y, dtype=float)
    d = np.asarray(d, dtype=float)
    surv = np.cumprod(1.0 - d / y)
    f = np.empty_like(surv)
    if len(f):
        f[0] = 0.0
        f[1:] = 1.0 - surv[:-1]
    return np.clip(f, 0.0, 1.0)


def event_table_from_arrays(time, event, group) -> EventTable:
    """Array front end of :func:`build_event_table`."""
    time = np.asarray(time, dtype=float)
    event = np.asarray(event).astype(bool)
    group = np.asarray(group).astype(int)
    _validate(time, event, group)
    n1 = int(group.sum())
    n0 = len(group) - n1
    if n0 == 0 or n1 == 0:
        raise DomainError("both groups must be non-empty")
    if not event.any():
        raise DegenerateDataError("no events in the pooled sample")

    ev_times = np.unique(time[event])
    t0 = np.sort(time[group == 0])
    t1 = np.sort(time[group == 1])
    y0 = n0 - np.searchsorted(t0, ev_times, side="left")
    y1 = n1 - np.searchsorted(t1, ev_times, side="left")
    idx = np.searchsorted(ev_times, time[event])
    g_ev = group[event]
    d1 = np.bincount(idx[g_ev == 1], minlength=len(ev_times))
    d0 = np.bincount(idx[g_ev == 0], minlength=len(ev_times))
    f_minus = pooled_km_cdf(y0 + y1, d0 + d1)
    return EventTable(ev_times, y0, y1, d0, d1, f_minus, n0, n1)


def build_event_table(subjects: Iterable[Subject]) -> EventTable:
    """Tabulate subjects at the pooled distinct event times.

    A subject is at risk at ``t`` when its observed time is >= ``t``, so a
    subject censored at an event time still counts in that risk set.
    """
    return event_table_from_arrays(*subjects_to_arrays(subjects))


def censoring_rates_from_arrays(event, group) -> tuple[float, float]:
    event = np.asarray(event).astype(bool)
    group = np.asarray(group)
    rates = []
    for g in (0, 1):
        mask = group == g
        if not mask.any():
            raise DomainError(f"group {g} is empty")
        rates.append(float(1.0 - event[mask].mean()))
    return rates[0], rates[1]


def censoring_rates(subjects: Iterable[Subject]) -> tuple[float, float]:
    """Fraction of censored records in group 0 and group 1."""
    _, event, group = subjects_to_arrays(subjects)
    return censoring_rates_from_arrays(event, group)

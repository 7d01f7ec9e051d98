"""Composite pulse sequences and their optimizable-parameter layouts.

A composite pulse is an ordered train of square pulses.  The train's unitary
is the right-to-left product of the per-pulse propagators: the first pulse in
the sequence acts first.  Only parameter *layouts* know which fields an
optimizer may touch; the pulse objects themselves are plain immutable records.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Iterator, Mapping, Sequence

import numpy as np

from .fockspace import SystemConfig, build_hamiltonian, propagate

__all__ = [
    "PulseParams",
    "CompositePulse",
    "ParamLayout",
    "composite_unitary",
    "analytic_swap_parameters",
    "uniform_pulse_train",
    "weak_drive_layout",
    "strong_drive_layout",
    "WEAK_DRIVE_OMEGA",
    "STRONG_DRIVE_OMEGA",
]

TWO_PI = 2.0 * math.pi

# Rabi rates (in units of the mode frequency) for the two driving regimes.
WEAK_DRIVE_OMEGA = 0.1
STRONG_DRIVE_OMEGA = 1.0

# Fields of PulseParams an optimizer layout may expose.
_TUNABLE_FIELDS = ("delta", "omega", "phi", "t")


@dataclass(frozen=True)
class PulseParams:
    """One square pulse: detuning, Rabi rate, phase, duration."""

    delta: float
    omega: float
    phi: float
    t: float

    def __post_init__(self) -> None:
        for name in _TUNABLE_FIELDS:
            value = getattr(self, name)
            if not np.isfinite(value):
                raise ValueError(f"{name} must be finite, got {value}")
        if self.t < 0:
            raise ValueError(f"duration must be >= 0, got {self.t}")

    def canonical(self) -> "PulseParams":
        """Copy with the phase wrapped to [0, 2*pi).

        Wrapping changes the float representation, so it is applied only when
        a pulse crosses an I/O boundary, never inside an optimizer loop.
        """
        return replace(self, phi=self.phi % TWO_PI)


@dataclass(frozen=True)
class CompositePulse:
    """Ordered train of pulses, applied first-to-last."""

    pulses: tuple[PulseParams, ...]

    def __post_init__(self) -> None:
        if len(self.pulses) == 0:
            raise ValueError("a composite pulse needs at least one pulse")
        object.__setattr__(self, "pulses", tuple(self.pulses))

    def __len__(self) -> int:
        return len(self.pulses)

    def __iter__(self) -> Iterator[PulseParams]:
        return iter(self.pulses)

    def __getitem__(self, k: int) -> PulseParams:
        return self.pulses[k]

    @property
    def total_duration(self) -> float:
        return float(sum(p.t for p in self.pulses))

    def canonical(self) -> "CompositePulse":
        return CompositePulse(tuple(p.canonical() for p in self.pulses))

    def to_dicts(self) -> list[dict[str, float]]:
        """Serializable per-pulse records, phases canonicalized."""
        return [
            {"delta": p.delta, "omega": p.omega, "phi": p.phi, "t": p.t}
            for p in self.canonical()
        ]

    @classmethod
    def from_dicts(cls, records: Sequence[Mapping[str, float]]) -> "CompositePulse":
        return cls(tuple(PulseParams(**dict(r)) for r in records))


def composite_unitary(cfg: SystemConfig, cp: CompositePulse) -> np.ndarray:
    """Total propagator of the train: product of per-pulse unitaries.

    The first pulse multiplies from the right, so the returned matrix sends an
    input column vector through the train in sequence order.
    """
    u = np.eye(cfg.dim, dtype=complex)
    for p in cp:
        h = build_hamiltonian(cfg, delta=p.delta, omega=p.omega, phi=p.phi)
        u = propagate(h, p.t) @ u
    return u


def analytic_swap_parameters(eta: float, omega: float) -> CompositePulse:
    """Closed-form three-pulse sequence swapping |g,0> and |e,1>.

    Derived for an ideal first sideband: durations pi/(sqrt(2)*eta*omega),
    sqrt(2)*pi/(eta*omega), pi/(sqrt(2)*eta*omega) and phases
    (0, arccos(cot^2(pi/sqrt(2))), 0) at detuning 1.  Off-resonant couplings
    of the real drive degrade it, which is what numerical refinement fixes.
    """
    if eta <= 0 or omega <= 0:
        raise ValueError("eta and omega must be positive")
    t_outer = math.pi / (math.sqrt(2.0) * eta * omega)
    t_inner = math.sqrt(2.0) * math.pi / (eta * omega)
    phi_inner = math.acos(1.0 / math.tan(math.pi / math.sqrt(2.0)) ** 2)
    return CompositePulse(
        (
            PulseParams(delta=1.0, omega=omega, phi=0.0, t=t_outer),
            PulseParams(delta=1.0, omega=omega, phi=phi_inner, t=t_inner),
            PulseParams(delta=1.0, omega=omega, phi=0.0, t=t_outer),
        )
    )


def uniform_pulse_train(
    count: int, *, delta: float, omega: float, t: float = 1.0
) -> CompositePulse:
    """Template train with identical pulses and zero phases.

    Serves as the fixed-field carrier that a ParamLayout writes optimized
    values into; the initial durations and phases are placeholders.
    """
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    return CompositePulse(
        tuple(PulseParams(delta=delta, omega=omega, phi=0.0, t=t) for _ in range(count))
    )


@dataclass(frozen=True)
class ParamLayout:
    """Mapping between optimizer vectors and pulse-train fields.

    ``free`` lists the (pulse index, field name) entries an optimizer may
    set; ``bounds`` gives one (lower, upper) box per entry.  ``shared`` ties
    groups of free entries to a single vector slot (e.g. one detuning common
    to every pulse).  The packed vector has one slot per equivalence class,
    ordered by each class's first appearance in ``free``.
    """

    free: tuple[tuple[int, str], ...]
    bounds: tuple[tuple[float, float], ...]
    shared: tuple[tuple[int, ...], ...] = ()

    def __post_init__(self) -> None:
        if len(self.free) != len(self.bounds):
            raise ValueError(
                f"free has {len(self.free)} entries but bounds has {len(self.bounds)}"
            )
        seen: set[tuple[int, str]] = set()
        for pulse_idx, field in self.free:
            if field not in _TUNABLE_FIELDS:
                raise ValueError(f"unknown pulse field {field!r}")
            if pulse_idx < 0:
                raise ValueError(f"negative pulse index {pulse_idx}")
            if (pulse_idx, field) in seen:
                raise ValueError(f"duplicate free entry {(pulse_idx, field)}")
            seen.add((pulse_idx, field))
        for lo, hi in self.bounds:
            if not (np.isfinite(lo) and np.isfinite(hi) and lo <= hi):
                raise ValueError(f"invalid bound ({lo}, {hi})")
        used: set[int] = set()
        for group in self.shared:
            if len(group) < 2:
                raise ValueError("shared groups need at least two members")
            for pos in group:
                if not 0 <= pos < len(self.free):
                    raise ValueError(f"shared position {pos} outside free list")
                if pos in used:
                    raise ValueError(f"free entry {pos} appears in two shared groups")
                used.add(pos)
            first = self.bounds[group[0]]
            for pos in group[1:]:
                if self.bounds[pos] != first:
                    raise ValueError("members of a shared group must share bounds")

    def _classes(self) -> list[tuple[int, ...]]:
        """Equivalence classes of free-entry positions, one per vector slot."""
        group_of: dict[int, tuple[int, ...]] = {}
        for group in self.shared:
            for pos in group:
                group_of[pos] = group
        classes: list[tuple[int, ...]] = []
        emitted: set[int] = set()
        for pos in range(len(self.free)):
            if pos in emitted:
                continue
            members = group_of.get(pos, (pos,))
            classes.append(tuple(sorted(members)))
            emitted.update(members)
        return classes

    @property
    def dim(self) -> int:
        """Length of the packed parameter vector."""
        return len(self._classes())

    def slot_names(self) -> list[str]:
        """Human-readable name per vector slot, e.g. 't[2]' or 'delta[*]'."""
        names = []
        for members in self._classes():
            field = self.free[members[0]][1]
            if len(members) == 1:
                names.append(f"{field}[{self.free[members[0]][0]}]")
            else:
                names.append(f"{field}[*]")
        return names

    def slot_bounds(self) -> tuple[np.ndarray, np.ndarray]:
        """(lower, upper) bound arrays aligned with the packed vector."""
        classes = self._classes()
        lower = np.array([self.bounds[m[0]][0] for m in classes])
        upper = np.array([self.bounds[m[0]][1] for m in classes])
        return lower, upper

    def pack(self, cp: CompositePulse) -> np.ndarray:
        """Extract the free values of ``cp`` into a parameter vector."""
        values = []
        for members in self._classes():
            pulse_idx, field = self.free[members[0]]
            if pulse_idx >= len(cp):
                raise ValueError(
                    f"layout references pulse {pulse_idx} but train has {len(cp)}"
                )
            values.append(getattr(cp[pulse_idx], field))
        return np.array(values)

    def unpack(self, vector: np.ndarray, template: CompositePulse) -> CompositePulse:
        """Write a parameter vector into a copy of ``template``."""
        vector = np.asarray(vector, dtype=float)
        classes = self._classes()
        if vector.shape != (len(classes),):
            raise ValueError(
                f"expected vector of length {len(classes)}, got shape {vector.shape}"
            )
        updates: list[dict[str, float]] = [{} for _ in range(len(template))]
        for slot, members in enumerate(classes):
            for pos in members:
                pulse_idx, field = self.free[pos]
                if pulse_idx >= len(template):
                    raise ValueError(
                        f"layout references pulse {pulse_idx} but train has "
                        f"{len(template)}"
                    )
                updates[pulse_idx][field] = float(vector[slot])
        return CompositePulse(
            tuple(
                replace(p, **upd) if upd else p
                for p, upd in zip(template.pulses, updates)
            )
        )

    def contains(self, vector: np.ndarray) -> bool:
        """True when every slot lies inside its box bounds."""
        lower, upper = self.slot_bounds()
        vector = np.asarray(vector, dtype=float)
        return bool(np.all(vector >= lower) and np.all(vector <= upper))


def _duration_bound(eta: float, omega: float) -> float:
    # Four ideal-sideband half-periods; generous for every pulse seen here.
    return 4.0 * math.pi / (eta * omega)


def weak_drive_layout(count: int, *, eta: float, omega: float) -> ParamLayout:
    """Layout for the weak-drive regime: free durations, free phases after
    the first pulse (the first phase is the global reference), detuning fixed.
    """
    free = [(k, "t") for k in range(count)] + [(k, "phi") for k in range(1, count)]
    bounds = [(0.0, _duration_bound(eta, omega))] * count + [(0.0, TWO_PI)] * (
        count - 1
    )
    return ParamLayout(free=tuple(free), bounds=tuple(bounds))


def strong_drive_layout(
    count: int,
    *,
    eta: float,
    omega: float,
    delta_bounds: tuple[float, float] = (0.25, 2.5),
) -> ParamLayout:
    """Weak-drive layout plus one detuning slot shared by all pulses."""
    base = weak_drive_layout(count, eta=eta, omega=omega)
    free = base.free + tuple((k, "delta") for k in range(count))
    bounds = base.bounds + (delta_bounds,) * count
    shared = (tuple(range(len(base.free), len(free))),)
    return ParamLayout(free=free, bounds=bounds, shared=shared)

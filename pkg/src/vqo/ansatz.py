"""Pulse-sequence ansatz, feasible sets and light cones.

|theta> = exp(-i A_{p-1} a_{p-1}/2) ... exp(-i A_0 a_0/2) |start>, where the
pulse angle is a_j = theta_j + offset_j.  Offsets default to zero; the toy
family uses a fixed pi/4 per pulse.  Pulses are indexed from 0.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .pauli import ObservableSum, PauliString, mask_to_qubits, parse_observable
from .statevector import StateVector, apply_pulse, prepare_basis


@dataclass(frozen=True)
class Ansatz:
    n: int
    start: str
    pulses: tuple
    offsets: tuple = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "pulses", tuple(self.pulses))
        if not self.pulses:
            raise ValueError("an ansatz needs at least one pulse")
        if len(self.start) != self.n or set(self.start) - {"0", "1"}:
            raise ValueError(f"start state {self.start!r} is not an {self.n}-bit string")
        for A in self.pulses:
            if A.n != self.n:
                raise ValueError("pulse generator acts on the wrong number of qubits")
        offs = tuple(float(o) for o in self.offsets) or (0.0,) * len(self.pulses)
        if len(offs) != len(self.pulses):
            raise ValueError("one offset per pulse is required")
        object.__setattr__(self, "offsets", offs)
        masks = []
        for A in self.pulses:
            m = 0
            for _, s in A.terms:
                m |= s.mask
            masks.append(m)
        object.__setattr__(self, "_masks", tuple(masks))

    @property
    def p(self) -> int:
        return len(self.pulses)

    def pulse_mask(self, j: int) -> int:
        return self._masks[j]

    def angles(self, theta) -> np.ndarray:
        theta = check_point(self, theta)
        return theta + np.asarray(self.offsets)

    def to_text(self) -> str:
        head = f"{self.n} {self.p} start={self.start}"
        if any(self.offsets):
            head += " offsets=" + ",".join(repr(o) for o in self.offsets)
        lines = [head]
        for A in self.pulses:
            lines.append(" + ".join(f"{c!r} {s.label}" for c, s in A.terms))
        return "\n".join(lines) + "\n"


def check_point(ansatz: Ansatz, theta) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (ansatz.p,):
        raise ValueError(f"parameter vector has shape {theta.shape}, ansatz has {ansatz.p} pulses")
    return theta


def parse_ansatz(text: str) -> Ansatz:
    """Header `n p start=<bits> [offsets=a,b,...]`, then one generator per line.

    A generator line holds terms in the observable format joined by ' + ',
    e.g. `1.0 YI + 0.5 XX`."""
    lines = [ln.split("#", 1)[0].strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln]
    if not lines:
        raise ValueError("empty ansatz text")
    head = lines[0].split()
    if len(head) < 3 or not head[2].startswith("start="):
        raise ValueError("ansatz header must read 'n p start=<bits>'")
    n, p = int(head[0]), int(head[1])
    start = head[2][len("start="):]
    offsets = ()
    for extra in head[3:]:
        if extra.startswith("offsets="):
            offsets = tuple(float(v) for v in extra[len("offsets="):].split(","))
        else:
            raise ValueError(f"unknown header field {extra!r}")
    gens = [parse_observable("\n".join(ln.split(" + ")), n) for ln in lines[1:]]
    if len(gens) != p:
        raise ValueError(f"header promises {p} pulses, found {len(gens)}")
    return Ansatz(n, start, tuple(gens), offsets)


def prepare(ansatz: Ansatz, theta, max_qubits: int | None = None) -> StateVector:
    a = ansatz.angles(theta)
    s = prepare_basis(ansatz.n, ansatz.start, max_qubits)
    for A, ang in zip(ansatz.pulses, a):
        s = apply_pulse(s, A, ang)
    return s


def lightcone_mask(ansatz: Ansatz, j: int, mask: int) -> int:
    """Forward sweep over pulses j+1..p-1 starting from `mask`."""
    for t in range(j + 1, ansatz.p):
        m = ansatz.pulse_mask(t)
        if m & mask:
            mask |= m
    return mask


def lightcone_support(ansatz: Ansatz, j: int, Q: PauliString) -> frozenset:
    if not 0 <= j < ansatz.p:
        raise IndexError(f"pulse index {j} out of range")
    if Q.is_identity():
        return frozenset()
    return mask_to_qubits(lightcone_mask(ansatz, j, Q.mask), ansatz.n)


# feasible sets ---------------------------------------------------------------

KINDS = ("euclidean-ball", "one-ball", "inf-box")


@dataclass(frozen=True, eq=False)
class FeasibleSet:
    kind: str
    center: np.ndarray
    radius: float

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown feasible set kind {self.kind!r}")
        if not self.radius > 0:
            raise ValueError("radius must be positive")
        c = np.asarray(self.center, dtype=float).copy()
        c.flags.writeable = False
        object.__setattr__(self, "center", c)

    @property
    def p(self) -> int:
        return self.center.shape[0]

    # smallest enclosing 1-ball / 2-ball radii and largest inscribed 2-ball
    @property
    def R1(self) -> float:
        if self.kind == "euclidean-ball":
            return self.radius * np.sqrt(self.p)
        if self.kind == "one-ball":
            return self.radius
        return self.radius * self.p

    @property
    def R2(self) -> float:
        if self.kind == "inf-box":
            return self.radius * np.sqrt(self.p)
        return self.radius

    @property
    def r2(self) -> float:
        if self.kind == "one-ball":
            return self.radius / np.sqrt(self.p)
        return self.radius

    def norm(self, d) -> float:
        d = np.asarray(d, dtype=float)
        if self.kind == "euclidean-ball":
            return float(np.linalg.norm(d))
        if self.kind == "one-ball":
            return float(np.abs(d).sum())
        return float(np.abs(d).max()) if d.size else 0.0

    def contains(self, x, tol: float = 1e-10) -> bool:
        return self.norm(np.asarray(x) - self.center) <= self.radius + tol

    def scaled(self, factor: float) -> "FeasibleSet":
        return FeasibleSet(self.kind, self.center, self.radius * factor)


def inf_box(p: int, radius: float, center=None) -> FeasibleSet:
    return FeasibleSet("inf-box", np.zeros(p) if center is None else center, radius)

"""Dynamic rays of ``g(z) = cosh(z)/2`` by backward iteration.

A ray is followed from a real start ``X0`` far in the right tract back
along an external address: each pullback picks a branch of ``arccosh``
(sign ``sigma``) and a ``2*pi*i*k`` translate. Inverse branches of the
disjoint-type map contract, so deep pullbacks of a fixed start converge to
the ray's endpoint.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Sequence

from . import dynamics as dyn
from .classifier import ClassifyParams, Status, classify

G = dyn.PRESETS["g"]
BRANCH_CUT_TOL = 1e-8


class BranchCutError(ValueError):
    def __init__(self, msg: str, depth: int | None = None):
        super().__init__(msg)
        self.depth = depth


@dataclass(frozen=True)
class ExternalAddress:
    entries: tuple[int, ...]
    sigma: int = 1

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple(int(k) for k in self.entries))
        if not self.entries:
            raise ValueError("address needs at least one entry")
        if self.sigma not in (1, -1):
            raise ValueError("sigma must be +1 or -1")

    @property
    def bound(self) -> int:
        return max(abs(k) for k in self.entries)

    @classmethod
    def constant(cls, k: int, length: int, sigma: int = 1) -> "ExternalAddress":
        return cls((k,) * length, sigma)

    @classmethod
    def parse(cls, text: str, length: int, sigma: int = 1) -> "ExternalAddress":
        """Comma-separated entries; the last entry repeats up to ``length``."""
        ks = [int(t) for t in text.split(",") if t.strip()]
        if not ks:
            raise ValueError("empty address")
        ks += [ks[-1]] * max(0, length - len(ks))
        return cls(tuple(ks), sigma)


@dataclass(frozen=True)
class RayPoint:
    position: complex
    depth: int
    cauchy_error: float
    chain: tuple[complex, ...] = ()  # w_0 (= position) ... w_D (= X0)


def inverse_branch(w: complex, k: int, sigma: int = 1) -> complex:
    """``sigma * arccosh(2w) + 2*pi*i*k``: a preimage of ``w`` under ``g``.

    The principal part is ``cmath.acosh`` (real part >= 0), i.e.
    ``Log(u + sqrt(u - 1) * sqrt(u + 1))`` with ``u = 2w``, which is the
    continuous choice of ``sqrt(u**2 - 1)`` off the cut ``[-1, 1]``.
    """
    u = 2 * complex(w)
    # distance from u to the segment [-1, 1]
    d = abs(u.imag) if -1 <= u.real <= 1 else abs(u - math.copysign(1.0, u.real))
    if d < BRANCH_CUT_TOL:
        raise BranchCutError(f"2w = {u} lies within {BRANCH_CUT_TOL} of the branch cut [-1, 1]")
    if sigma not in (1, -1):
        raise ValueError("sigma must be +1 or -1")
    return sigma * cmath.acosh(u) + 2j * math.pi * k


def pullback(address: ExternalAddress, D: int, X0: float) -> list[complex]:
    """Chain ``[w_0, ..., w_D]`` with ``w_D = X0`` and ``w_j = branch_{k_j}(w_{j+1})``."""
    if D < 0:
        raise ValueError("depth must be non-negative")
    if len(address.entries) < D:
        raise ValueError(f"address prefix has {len(address.entries)} entries, depth {D} needs more")
    chain = [complex(X0)]
    for j in range(D - 1, -1, -1):
        try:
            chain.append(inverse_branch(chain[-1], address.entries[j], address.sigma))
        except BranchCutError as e:
            raise BranchCutError(str(e), depth=D - j) from None
    chain.reverse()
    return chain


def trace_ray(address: ExternalAddress, D: int, X0: float) -> RayPoint:
    """Depth-``D`` estimate of the ray point at potential ``X0``.

    ``cauchy_error`` is the distance to the depth ``D - 1`` estimate, which
    uses entries ``k_0 .. k_(D-2)`` on the same start.
    """
    if D < 1:
        raise ValueError("depth must be >= 1")
    if not X0 >= 5:
        raise ValueError("start abscissa must be >= 5")
    chain = pullback(address, D, X0)
    prev = pullback(address, D - 1, X0)[0]
    pos = chain[0]
    if not cmath.isfinite(pos):
        raise ValueError("non-finite ray point")
    return RayPoint(pos, D, abs(pos - prev), tuple(chain))


def forward_residual(point: RayPoint) -> float:
    """Largest one-step mismatch ``|g(w_j) - w_(j+1)|`` along the stored chain.

    Composing ``g`` ``j`` times from ``w_0`` is a poor check at depth: each
    step multiplies the rounding error of ``w_0`` by ``|g'|``, about 2 near
    the endpoint.
    """
    return max(
        (abs(dyn.evaluate(G, a) - b) for a, b in zip(point.chain[:-1], point.chain[1:])),
        default=0.0,
    )


def ray_escape_check(
    address: ExternalAddress,
    D: int,
    X0: float,
    params: ClassifyParams | None = None,
    margin: float = 0.0,
) -> bool:
    """Whether the traced point at potential ``X0 + margin`` is certified
    fast escaping for ``g``."""
    if params is None:
        params = ClassifyParams(R=dyn.DEFAULT_RADIUS["g"])
    pt = trace_ray(address, D, X0 + margin)
    return classify(G, pt.position, params).status is Status.FAST


def ray_points(address: ExternalAddress, D: int, starts: Sequence[float]) -> list[RayPoint]:
    """Trace several potentials along the same address."""
    return [trace_ray(address, D, x) for x in starts]

"""Batch orbit engine: the regime machine of :mod:`dynamics` over numpy arrays.

Only orbit *magnitudes* leave this module. For every start point and every
index ``0..steps`` it reports the tower ``(m, r)`` of ``|f^n(z)|`` and whether
that value is known (``valid``). Points on exact symmetry lines and on the
real axis are routed through the scalar :func:`dynamics.step` so that real
orbits reproduce the max-modulus schedule exactly.
"""

from __future__ import annotations

import math

import numpy as np

from . import dynamics as dyn
from .tower import exp_arr, from_log_arr, from_real_arr, to_float_arr

EXACT, LOGPOLAR, MAGONLY, POISON, SCALAR = 0, 1, 2, 3, 4


def _wrap_arr(t):
    return t - 2 * np.pi * np.round(t / (2 * np.pi))


def _mul_scalar_arr(m, r, c: float):
    out_m, out_r = m.copy(), r.copy()
    low = m == 0
    if np.any(low):
        out_m[low], out_r[low] = from_real_arr(r[low] * c)
    hi = ~low
    if np.any(hi):
        s = to_float_arr(m[hi] - 1, r[hi])
        fin = np.isfinite(s)
        s = s + math.log(c)
        neg = fin & (s < 0)
        pos = fin & ~neg
        hm, hr = out_m[hi], out_r[hi]
        if np.any(neg):
            hm[neg], hr[neg] = from_real_arr(np.exp(s[neg]))
        if np.any(pos):
            pm, pr = from_real_arr(s[pos])
            hm[pos], hr[pos] = exp_arr(pm, pr)
        out_m[hi], out_r[hi] = hm, hr
    return out_m, out_r


def _add_scalar_arr(m, r, d: float):
    v = to_float_arr(m, r)
    fin = np.isfinite(v)
    out_m, out_r = m.copy(), r.copy()
    if np.any(fin):
        out_m[fin], out_r[fin] = from_real_arr(np.maximum(v[fin] + d, 0.0))
    return out_m, out_r


def cone_step_arr(f: dyn.FunctionSpec, m, r):
    """Array version of the heuristic magnitude step."""
    tm, tr = _mul_scalar_arr(m, r, f.q * dyn.EPS_CONE)
    tm, tr = _add_scalar_arr(tm, tr, math.log(f.abs_lam) - f.q * dyn.LOG2)
    return exp_arr(tm, tr)


class BatchOrbit:
    """Mutable regime state for a batch of orbits."""

    def __init__(self, f: dyn.FunctionSpec, z0: np.ndarray, heuristic: bool):
        self.f = f
        self.heuristic = heuristic
        z0 = np.asarray(z0, dtype=complex).ravel()
        n = z0.size
        self.reg = np.full(n, EXACT, dtype=np.int8)
        self.z = z0.copy()
        self.L = np.zeros(n)
        self.th = np.zeros(n)
        self.err = np.zeros(n)
        self.mm = np.zeros(n, dtype=np.int64)
        self.mr = np.zeros(n)
        self.scalar: dict[int, dyn.OrbitPoint] = {}
        self._route_special()

    # points the array code does not handle go to the scalar machine
    def _route_special(self):
        f = self.f
        if not f.real_lambda:
            return
        ex = np.flatnonzero(self.reg == EXACT)
        if ex.size == 0:
            return
        z = self.z[ex]
        y = z.imag
        k = np.round(y / np.pi)
        special = (y == 0.0) | (z.real == 0.0) | ((k != 0) & (y == k * np.pi))
        for i in ex[special]:
            self.reg[i] = SCALAR
            self.scalar[int(i)] = dyn.canonical(f, dyn.Exact(complex(self.z[i])))

    def magnitudes(self):
        n = self.reg.size
        m = np.zeros(n, dtype=np.int64)
        r = np.zeros(n)
        valid = np.ones(n, dtype=bool)
        ex = self.reg == EXACT
        if np.any(ex):
            m[ex], r[ex] = from_real_arr(np.abs(self.z[ex]))
        lp = self.reg == LOGPOLAR
        if np.any(lp):
            m[lp], r[lp] = from_log_arr(self.L[lp])
        mo = self.reg == MAGONLY
        m[mo], r[mo] = self.mm[mo], self.mr[mo]
        valid[self.reg == POISON] = False
        for i, p in self.scalar.items():
            t = dyn.magnitude(p)
            if t is None:
                valid[i] = False
            else:
                m[i], r[i] = t.m, t.r
        return m, r, valid

    def _complex_step(self, idx, x, y, err):
        f = self.f
        q = f.q
        lam = f.lam
        small = q * np.abs(x) <= 700.0
        L = np.empty(idx.size)
        th = np.empty(idx.size)
        to_exact = np.zeros(idx.size, dtype=bool)
        if np.any(small):
            c = np.cosh(x[small] + 1j * y[small])
            w = lam * (c if q == 1 else c * c)
            aw = np.abs(w)
            fits = aw <= dyn.R_SWITCH
            sidx = np.flatnonzero(small)
            self.z[idx[sidx[fits]]] = w[fits]
            to_exact[sidx[fits]] = True
            with np.errstate(divide="ignore"):
                L[small] = np.log(aw)
            th[small] = np.angle(w)
        big = ~small
        if np.any(big):
            L[big] = math.log(f.abs_lam) + q * (np.abs(x[big]) - dyn.LOG2)
            th[big] = _wrap_arr(q * np.copysign(1.0, x[big]) * y[big] + np.angle(lam))
        arg_err = q * (err + 2 * dyn.EPS_MACH * np.maximum(1.0, np.abs(y)))
        self.reg[idx[to_exact]] = EXACT
        rest = ~to_exact
        over = rest & (L > dyn.L_MAX)
        lpm = rest & ~over
        if np.any(over):
            self.reg[idx[over]] = MAGONLY
            self.mm[idx[over]], self.mr[idx[over]] = from_log_arr(L[over])
        if np.any(lpm):
            j = idx[lpm]
            self.reg[j] = LOGPOLAR
            self.L[j], self.th[j], self.err[j] = L[lpm], th[lpm], arg_err[lpm]

    def step(self):
        f = self.f
        reg = self.reg.copy()
        # scalar track
        for i in list(self.scalar):
            self.scalar[i] = dyn.canonical(f, dyn.step(f, self.scalar[i], self.heuristic))
        # magnitude-only
        mo = np.flatnonzero(reg == MAGONLY)
        if mo.size:
            if self.heuristic:
                self.mm[mo], self.mr[mo] = cone_step_arr(f, self.mm[mo], self.mr[mo])
            else:
                self.reg[mo] = POISON
        # log-polar
        lp = np.flatnonzero(reg == LOGPOLAR)
        if lp.size:
            L, th, aerr = self.L[lp], self.th[lp], self.err[lp]
            untrusted = aerr > dyn.THETA_TOL
            rho = np.exp(L)
            x, y = rho * np.cos(th), rho * np.sin(th)
            err = rho * (aerr + dyn.EPS_MACH)
            direct = ~untrusted & (err <= dyn.THETA_TOL) & (rho <= dyn.A_MAX)
            lost = ~untrusted & ~direct
            if np.any(untrusted):
                j = lp[untrusted]
                if self.heuristic:
                    em, er = from_log_arr(L[untrusted])
                    self.mm[j], self.mr[j] = cone_step_arr(f, em, er)
                    self.reg[j] = MAGONLY
                else:
                    self.reg[j] = POISON
            if np.any(lost):
                ax = np.maximum(np.abs(x[lost]) - err[lost], 0.0)
                with np.errstate(divide="ignore"):
                    Ln = np.where(
                        ax > 20.0,
                        math.log(f.abs_lam) + f.q * (ax - dyn.LOG2),
                        math.log(f.abs_lam) + f.q * np.log(np.sinh(np.minimum(ax, 20.0))),
                    )
                j = lp[lost]
                self.reg[j] = MAGONLY
                self.mm[j], self.mr[j] = from_log_arr(Ln)
            if np.any(direct):
                self._complex_step(lp[direct], x[direct], y[direct], err[direct])
        # exact
        ex = np.flatnonzero(reg == EXACT)
        if ex.size:
            z = self.z[ex]
            self._complex_step(ex, z.real, z.imag, np.zeros(ex.size))
            self._route_special()


def orbit_magnitudes(f: dyn.FunctionSpec, z0, steps: int, heuristic: bool = False):
    """Towers of ``|f^n(z)|`` for ``n = 0..steps``.

    Returns ``(m, r, valid)`` with shape ``(len(z0), steps + 1)``.
    """
    b = BatchOrbit(f, z0, heuristic)
    n = b.reg.size
    M = np.zeros((n, steps + 1), dtype=np.int64)
    Rr = np.zeros((n, steps + 1))
    V = np.zeros((n, steps + 1), dtype=bool)
    for k in range(steps + 1):
        M[:, k], Rr[:, k], V[:, k] = b.magnitudes()
        if k < steps:
            b.step()
    # once unknown, later entries stay unknown
    V = np.logical_and.accumulate(V, axis=1)
    return M, Rr, V

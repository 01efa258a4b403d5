"""Command-line front end.

Complex numbers are written ``a``, ``bi`` or ``a+bi`` / ``a-bi`` with
decimal floats, e.g. ``1.5+1.5i``, ``-2``, ``3e-1-0.5i``.

Exit codes: 0 success, 1 usage or input error, 2 undetermined verdict or
rejected certificate, 3 no separating loop found, 4 self-test failure,
5 a freshly built certificate failed its own verification.
"""

from __future__ import annotations

import argparse
import json
import math
import re
import sys

from . import dynamics as dyn
from . import selftest
from .certifier import (
    BasepointCertifiedError,
    GridSpec,
    LoopCertificate,
    NotFound,
    find_separating_cycle,
    mark_grid,
    verify_certificate,
)
from .classifier import (
    ClassifyParams,
    Mode,
    Status,
    classify,
    default_radius,
    find_fixed_points_real,
    rate_sequence,
)
from .jsonio import canonical_bytes, canonical_dumps
from .rays import BranchCutError, ExternalAddress, trace_ray
from .render import atomic_write, field_rgb, ppm_bytes

_NUM = r"(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?"
_COMPLEX = re.compile(rf"^(?P<re>[+-]?{_NUM})?(?:(?P<sign>[+-])?(?P<im>{_NUM})?i)?$")

DEFAULT_BASEPOINT = {"h": 1 + 2.25j, "g": 0j, "cosh2": 1 + 2.25j}


class UsageError(Exception):
    pass


def parse_complex(text: str) -> complex:
    s = text.strip().replace(" ", "")
    m = _COMPLEX.match(s)
    if not s or not m or (m.group("re") is None and not s.endswith("i")):
        raise UsageError(f"cannot parse complex number {text!r} (expected a+bi)")
    re_ = float(m.group("re")) if m.group("re") else 0.0
    im = 0.0
    if s.endswith("i"):
        if m.group("re") is not None and m.group("sign") is None:
            # "3i" parsed as re="3": the digits belong to the imaginary part
            re_, im = 0.0, float(m.group("re"))
        else:
            mag = float(m.group("im")) if m.group("im") else 1.0
            im = -mag if m.group("sign") == "-" else mag
    return complex(re_, im)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _common(p: argparse.ArgumentParser, grid: bool = False):
    p.add_argument("--fn", default="h", choices=sorted(dyn.PRESETS), help="preset function")
    p.add_argument("--lambda", dest="lam", help="override lambda (complex literal)")
    p.add_argument("--q", type=int, help="override exponent q (1 or 2)")
    p.add_argument("--R", type=float, help="base radius of the max-modulus schedule")
    p.add_argument("--depth", type=int, default=12, help="certificate depth N")
    p.add_argument("--delay", type=int, default=8, help="maximal delay K")
    p.add_argument("--mode", choices=[m.value for m in Mode], help="orbit continuation mode")
    p.add_argument("--maxiter", type=int, default=10_000, help="attraction iteration cap")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, help="worker threads (default: $ATLAS_THREADS or 1)")
    if grid:
        p.add_argument("--grid-size", type=float, default=4 * math.pi, help="half width S of the square")
        p.add_argument("--res", type=int, default=1024, help="cells per side")
        p.add_argument("--center", default="0", help="grid centre (complex literal)")
        p.add_argument("--out", help="output file")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="cosh-atlas", description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = ap.add_subparsers(dest="cmd", required=True, parser_class=_Parser)

    p = sub.add_parser("classify", help="classify one point")
    _common(p)
    p.add_argument("--z", required=True, help="point (complex literal)")

    p = sub.add_parser("rate", help="rate sequence b_n along an orbit")
    _common(p)
    p.add_argument("--z", required=True)
    p.add_argument("--n", type=int, default=20, help="orbit length")

    p = sub.add_parser("fixed-points", help="real fixed points with multipliers")
    _common(p)
    p.add_argument("--lo", type=float, default=-50.0)
    p.add_argument("--hi", type=float, default=50.0)
    p.add_argument("--samples", type=int, default=100_000)

    p = sub.add_parser("schedule", help="iterated maximum modulus as towers")
    _common(p)

    p = sub.add_parser("render", help="PPM image of the marked grid")
    _common(p, grid=True)

    p = sub.add_parser("certify-web", help="search a certified loop around a basepoint")
    _common(p, grid=True)
    p.add_argument("--basepoint", help="point to separate (complex literal)")
    p.add_argument("--min-radius", type=float, default=0.0)
    p.add_argument("--verify-depth", type=int, help="depth for the audit (default depth + 2)")

    p = sub.add_parser("verify-cert", help="audit a certificate file")
    p.add_argument("path")
    p.add_argument("--depth", type=int, help="audit depth (default: certificate depth + 2)")

    p = sub.add_parser("ray", help="trace ray points of g = cosh/2")
    p.add_argument("--address", default="0", help="comma-separated branch indices; the last repeats")
    p.add_argument("--sigma", type=int, default=1, choices=(1, -1))
    p.add_argument("--D", type=int, default=30, help="pullback depth")
    p.add_argument("--X0", type=float, nargs="+", default=[10.0], help="start abscissae")

    p = sub.add_parser("selftest", help="run invariant suites")
    p.add_argument("--suite", default="all", help="all or one of: " + ", ".join(selftest.SUITES))
    p.add_argument("--seed", type=int, default=0)
    return ap


# ---------------------------------------------------------------- config


def _function(a) -> dyn.FunctionSpec:
    base = dyn.PRESETS[a.fn]
    lam = parse_complex(a.lam) if a.lam is not None else base.lam
    q = a.q if a.q is not None else base.q
    try:
        return dyn.FunctionSpec(lam, q)
    except ValueError as e:
        raise UsageError(str(e)) from None


def _params(a, f: dyn.FunctionSpec, default_mode: Mode) -> ClassifyParams:
    if a.R is not None:
        R = a.R
    elif a.lam is None and a.q is None:
        R = dyn.DEFAULT_RADIUS[a.fn]
    else:
        R = default_radius(f)
    try:
        dyn.check_base_radius(f, R)
        return ClassifyParams(R, a.depth, a.delay, a.maxiter, 1e-9, Mode(a.mode or default_mode))
    except ValueError as e:
        raise UsageError(str(e)) from None


def _grid(a) -> GridSpec:
    try:
        return GridSpec(parse_complex(a.center), a.grid_size, a.res)
    except ValueError as e:
        raise UsageError(str(e)) from None


def _emit(obj):
    sys.stdout.write(canonical_dumps(obj))


# ---------------------------------------------------------------- commands


def cmd_classify(a) -> int:
    f = _function(a)
    z = parse_complex(a.z)
    params = _params(a, f, Mode.RIGOROUS)
    v = classify(f, z, params)
    out = v.to_json()
    if v.status is Status.FAST:
        r = rate_sequence(f, z, params.N_depth + params.K_delay, params.mode)
        out["rate"] = {"b": list(r.b[r.window[0]:]), "liminf_est": r.liminf_est,
                       "limsup_est": r.limsup_est, "window": list(r.window)}
    out["z"] = [z.real, z.imag]
    _emit(out)
    return 2 if v.status is Status.UNDETERMINED else 0


def cmd_rate(a) -> int:
    f = _function(a)
    z = parse_complex(a.z)
    params = _params(a, f, Mode.RIGOROUS)
    r = rate_sequence(f, z, a.n, params.mode)
    _emit({"b": list(r.b), "liminf_est": r.liminf_est, "limsup_est": r.limsup_est, "window": list(r.window)})
    return 0


def cmd_fixed_points(a) -> int:
    f = _function(a)
    try:
        fps = find_fixed_points_real(f, a.lo, a.hi, a.samples)
    except ValueError as e:
        raise UsageError(str(e)) from None
    _emit([{"location": p.location, "multiplier": p.multiplier, "type": p.type} for p in fps])
    return 0


def cmd_schedule(a) -> int:
    f = _function(a)
    params = _params(a, f, Mode.RIGOROUS)
    s = dyn.max_modulus_schedule(f, params.R, params.N_depth)
    _emit({"R": params.R, "values": [[t.m, t.r] for t in s.values]})
    return 0


def _mark(a):
    f = _function(a)
    params = _params(a, f, Mode.HEURISTIC)
    grid = _grid(a)
    return f, params, grid, mark_grid(f, grid, params, threads=a.threads)


def cmd_render(a) -> int:
    if not a.out:
        raise UsageError("render needs --out")
    _, _, _, field = _mark(a)
    try:
        atomic_write(a.out, ppm_bytes(field_rgb(field)))
    except OSError as e:
        raise UsageError(f"cannot write {a.out}: {e}") from None
    return 0


def cmd_certify_web(a) -> int:
    grid = _grid(a)
    if a.min_radius >= grid.half_width / 2 or a.min_radius < 0:
        raise UsageError(f"--min-radius must lie in [0, S/2) = [0, {grid.half_width / 2:g})")
    if grid.resolution < 16:
        raise UsageError("--res must be at least 16 for a cycle search")
    bp = parse_complex(a.basepoint) if a.basepoint else DEFAULT_BASEPOINT[a.fn]
    try:
        grid.locate(bp)
    except ValueError as e:
        raise UsageError(str(e)) from None
    f, params, grid, field = _mark(a)
    try:
        res = find_separating_cycle(field, bp, a.min_radius)
    except BasepointCertifiedError as e:
        raise UsageError(str(e)) from None
    if isinstance(res, NotFound):
        out = {"status": "NotFound", "reason": res.reason}
        if res.candidate is not None:
            out["candidate_inner_radius"] = res.candidate.inner_radius
        _emit(out)
        return 3
    vd = a.verify_depth if a.verify_depth is not None else params.N_depth + 2
    stricter = ClassifyParams(params.R, vd, params.K_delay, params.maxiter, params.eps_attract, params.mode)
    ok = verify_certificate(f, res, stricter)
    if a.out:
        try:
            atomic_write(a.out, canonical_bytes(res.to_json()))
        except OSError as e:
            raise UsageError(f"cannot write {a.out}: {e}") from None
    _emit({"status": "Loop", "vertices": len(res.vertices) - 1, "winding": res.winding,
           "inner_radius": res.inner_radius, "verified": ok, "sha256": res.digest()})
    return 0 if ok else 5


def cmd_verify_cert(a) -> int:
    try:
        with open(a.path, "rb") as fh:
            cert = LoopCertificate.from_json(json.loads(fh.read()))
    except (OSError, ValueError, KeyError, TypeError) as e:
        raise UsageError(f"cannot read certificate {a.path}: {e}") from None
    p = cert.params
    depth = a.depth if a.depth is not None else p.N_depth + 2
    if depth < p.N_depth:
        raise UsageError("audit depth must not be below the certificate depth")
    stricter = ClassifyParams(p.R, depth, p.K_delay, p.maxiter, p.eps_attract, p.mode)
    ok = verify_certificate(cert.function, cert, stricter)
    _emit({"verified": ok, "depth": depth, "sha256": cert.digest()})
    return 0 if ok else 2


def cmd_ray(a) -> int:
    try:
        addr = ExternalAddress.parse(a.address, a.D, a.sigma)
        pts = [trace_ray(addr, a.D, x) for x in a.X0]
    except BranchCutError as e:
        raise UsageError(f"{e} (failing depth {e.depth})") from None
    except ValueError as e:
        raise UsageError(str(e)) from None
    _emit([{"position": [p.position.real, p.position.imag], "depth": p.depth,
            "cauchy_error": p.cauchy_error} for p in pts])
    return 0


def cmd_selftest(a) -> int:
    try:
        ok = selftest.run(a.suite, a.seed)
    except ValueError as e:
        raise UsageError(str(e)) from None
    print("all suites passed" if ok else "self-test FAILED")
    return 0 if ok else 4


COMMANDS = {
    "classify": cmd_classify,
    "rate": cmd_rate,
    "fixed-points": cmd_fixed_points,
    "schedule": cmd_schedule,
    "render": cmd_render,
    "certify-web": cmd_certify_web,
    "verify-cert": cmd_verify_cert,
    "ray": cmd_ray,
    "selftest": cmd_selftest,
}


def main(argv: list[str] | None = None) -> int:
    a = build_parser().parse_args(argv)
    try:
        return COMMANDS[a.cmd](a)
    except UsageError as e:
        print(f"cosh-atlas {a.cmd}: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

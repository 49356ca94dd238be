"""Command line: problem specs in, energies, sweeps and reports out.

A problem spec is a JSON object:

    {"kind": "transverse",
     "points": [[0, 0, 0], [0, 0, 1]],
     "matrix": "krein" | "friedrichs" | "theta:0.785" | [[...], ...],
     "projector": [[...], ...],              (optional, orthonormal rows)
     "quadrature": {"abs_tol": 1e-10, ...}}  (optional)
"""

import argparse
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields

import numpy as np

from . import __version__
from .admissibility import check_admissible, theta_matrix
from .branchmath import CutPoint, Side
from .energy import Status, energy_general, kernel_sqrt_diff, theta_sweep
from .gamma import FieldKind, Geometry, Projector, boundary_dim, krein_gamma, project
from .krein import BoundaryMatrix, perturbed_resolvent_kernel
from .quadrature import QuadratureSettings

EXIT_OK, EXIT_PARSE, EXIT_LOGDIV, EXIT_SPECTRAL = 0, 1, 2, 3
EXIT_CODES = {Status.CONVERGED: EXIT_OK, Status.LOG_DIVERGENT: EXIT_LOGDIV,
              Status.SPECTRAL_OBSTRUCTION: EXIT_SPECTRAL}
SYM_TOL = 1e-12


class SpecError(ValueError):
    def __init__(self, msg, line=None, col=None):
        self.line, self.col = line, col
        where = f"line {line}, column {col}: " if line is not None else ""
        super().__init__(where + msg)


@dataclass
class ProblemSpec:
    kind: FieldKind
    points: list
    matrix: object                 # "krein" | "friedrichs" | "theta:<v>" | nested list
    projector: list = None
    quadrature: dict = field(default_factory=dict)

    def geometry(self):
        return Geometry(self.points)

    def settings(self):
        return QuadratureSettings(**{k: (tuple(v) if isinstance(v, list) else v)
                                     for k, v in self.quadrature.items()})

    def boundary_matrix(self):
        geom = self.geometry()
        dim = boundary_dim(self.kind, geom)
        if isinstance(self.matrix, str) and self.matrix.startswith("theta:"):
            if self.kind is not FieldKind.TRANSVERSE or geom.n != 2:
                raise ValueError("theta matrices need the transverse kind and two points")
            if self.projector is not None:
                raise ValueError("theta matrices fix their own projector")
            return theta_matrix(float(self.matrix[6:]), float(geom.dist[0, 1]))
        proj = Projector(self.projector, dim=dim) if self.projector is not None else Projector.full(dim)
        if self.matrix == "friedrichs":
            return BoundaryMatrix.friedrichs(self.kind, geom)
        if self.matrix == "krein":
            m = project(krein_gamma(self.kind, geom), proj)
            return BoundaryMatrix(0.5 * (m + m.T), proj, self.kind, geom)
        m = np.array(self.matrix, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("explicit matrix must be square")
        if np.max(np.abs(m - m.T), initial=0.0) > SYM_TOL:
            raise ValueError("explicit matrix is not symmetric within 1e-12")
        return BoundaryMatrix(0.5 * (m + m.T), proj, self.kind, geom)

    def to_dict(self):
        out = {"kind": self.kind.value, "points": [list(map(float, p)) for p in self.points],
               "matrix": self.matrix}
        if self.projector is not None:
            out["projector"] = self.projector
        if self.quadrature:
            out["quadrature"] = dict(self.quadrature)
        return out


def _locate(text, key):
    """Line and column (1-based) of the first occurrence of a JSON key."""
    idx = text.find(f'"{key}"')
    if idx < 0:
        return None, None
    line = text.count("\n", 0, idx) + 1
    col = idx - (text.rfind("\n", 0, idx) + 1) + 1
    return line, col


_QUAD_KEYS = {f.name for f in fields(QuadratureSettings)}


def parse_spec(text):
    """Parse and validate a problem spec; errors carry line/column where possible."""
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SpecError(exc.msg, exc.lineno, exc.colno) from None
    if not isinstance(raw, dict):
        raise SpecError("spec must be a JSON object", 1, 1)

    def fail(key, msg):
        raise SpecError(f"{key}: {msg}", *_locate(text, key))

    unknown = set(raw) - {"kind", "points", "matrix", "projector", "quadrature"}
    if unknown:
        key = sorted(unknown)[0]
        fail(key, "unknown field")
    for key in ("kind", "points", "matrix"):
        if key not in raw:
            raise SpecError(f"missing field {key!r}", 1, 1)
    try:
        kind = FieldKind.parse(raw["kind"])
    except ValueError as exc:
        fail("kind", str(exc))
    matrix = raw["matrix"]
    if isinstance(matrix, str):
        if matrix not in ("krein", "friedrichs") and not matrix.startswith("theta:"):
            fail("matrix", f"unknown matrix keyword {matrix!r}")
        if matrix.startswith("theta:"):
            try:
                float(matrix[6:])
            except ValueError:
                fail("matrix", "theta value is not a number")
    quad = raw.get("quadrature") or {}
    if not isinstance(quad, dict) or set(quad) - _QUAD_KEYS:
        fail("quadrature", f"allowed keys are {sorted(_QUAD_KEYS)}")
    spec = ProblemSpec(kind, raw["points"], matrix, raw.get("projector"), quad)
    for key, build in (("points", spec.geometry), ("quadrature", spec.settings),
                       ("matrix", spec.boundary_matrix)):
        try:
            build()
        except (ValueError, TypeError) as exc:
            fail(key, str(exc))
    return spec


def load_spec(path):
    with open(path, encoding="utf-8") as fh:
        return parse_spec(fh.read())


def _fmt(x):
    return format(float(x), ".15g")


def _complex_pair(z):
    return [float(z.real), float(z.imag)]


def _settings(args, spec=None):
    q = spec.settings() if spec else QuadratureSettings()
    return q.with_tol(args.tol) if args.tol is not None else q


def _resolve_spec(args):
    if args.spec:
        spec = load_spec(args.spec)
    elif args.theta is not None:
        r = args.r if args.r is not None else 1.0
        spec = ProblemSpec(FieldKind.TRANSVERSE, Geometry.pair(r).points.tolist(), "theta:0")
    else:
        raise SpecError("either --spec or --theta is required")
    if args.theta is not None:
        if spec.kind is not FieldKind.TRANSVERSE or len(spec.points) != 2:
            raise SpecError("--theta needs a transverse two-point problem")
        spec.matrix = f"theta:{args.theta!r}"
        spec.projector = None
    if args.r is not None and len(spec.points) == 2 and args.spec:
        # rescale about the first point, keeping the orientation
        pts = np.asarray(spec.points, dtype=float)
        d = float(np.linalg.norm(pts[1] - pts[0]))
        spec.points = (pts[0] + (pts - pts[0]) * (args.r / d)).tolist()
    return spec


def cmd_energy(args, out):
    spec = _resolve_spec(args)
    bm = spec.boundary_matrix()
    res = energy_general(bm, _settings(args, spec))
    scale = 0.5 if args.half_scale else 1.0
    payload = res.to_dict()
    payload["scale_factor"] = scale
    payload["rE_scaled"] = scale * res.r_e
    payload["spec"] = spec.to_dict()
    if args.json:
        out.write(json.dumps(payload, indent=2) + "\n")
    else:
        out.write(f"value        {_fmt(res.value)}\n")
        out.write(f"rE           {_fmt(res.r_e)}\n")
        if scale != 1.0:
            out.write(f"rE x {scale:g}     {_fmt(scale * res.r_e)}\n")
        out.write(f"abs_err      {_fmt(res.abs_err)}\n")
        out.write(f"status       {res.status.value}\n")
        out.write(f"tail_coef    {_fmt(res.tail_coefficient)}\n")
        for note in res.notes:
            out.write(f"note: {note}\n")
    return EXIT_CODES[res.status]


def _sweep_row(args):
    theta, r, tol = args
    q = QuadratureSettings() if tol is None else QuadratureSettings().with_tol(tol)
    return theta_sweep([theta], r, q)[0]


def cmd_sweep(args, out):
    lo, hi, steps = args.theta_min, args.theta_max, args.steps
    if not (0 <= lo <= hi <= math.pi) or steps < 1:
        raise SpecError("theta range must satisfy 0 <= min <= max <= pi and steps >= 1")
    thetas = [lo] if steps == 1 else list(np.linspace(lo, hi, steps))
    r = args.r if args.r is not None else 1.0
    jobs = [(float(t), r, args.tol) for t in thetas]
    if args.jobs > 1:
        with ProcessPoolExecutor(args.jobs) as pool:
            rows = list(pool.map(_sweep_row, jobs))
    else:
        rows = [_sweep_row(j) for j in jobs]
    scale = 0.5 if args.half_scale else 1.0
    buf = ["theta,rE,abs_err,status"]
    for th, re_, err, status in rows:
        buf.append(f"{_fmt(th)},{_fmt(scale * re_)},{_fmt(scale * err)},{status}")
    out.write("\n".join(buf) + "\n")
    return EXIT_OK


def cmd_admissible(args, out):
    spec = _resolve_spec(args)
    rep = check_admissible(spec.boundary_matrix())
    payload = rep.to_dict()
    payload["spec"] = spec.to_dict()
    out.write(json.dumps(payload, indent=2) + "\n")
    if rep.admissible:
        return EXIT_OK
    return EXIT_SPECTRAL if rep.discrete_spectrum else EXIT_LOGDIV


def _vector(text, name):
    try:
        v = [float(x) for x in text.split(",")]
    except ValueError:
        raise SpecError(f"{name} must be comma-separated numbers") from None
    if len(v) != 3:
        raise SpecError(f"{name} needs three coordinates")
    return np.array(v)


def _cut_point(args):
    try:
        parts = [float(x) for x in args.lam.split(",")]
    except ValueError:
        raise SpecError("--lam must be 're,im'") from None
    if len(parts) != 2:
        raise SpecError("--lam must be 're,im'")
    if parts[1] == 0 and parts[0] >= 0:
        return CutPoint.on_cut(parts[0], Side.BELOW if args.below else Side.ABOVE)
    return CutPoint.off_cut(complex(parts[0], parts[1]))


def cmd_resolvent(args, out):
    spec = load_spec(args.spec)
    if spec.kind is not FieldKind.SCALAR:
        raise SpecError("pointwise resolvent kernels need the scalar kind")
    bm = spec.boundary_matrix()
    lam = _cut_point(args)
    val = perturbed_resolvent_kernel(bm, lam, _vector(args.x, "--x"), _vector(args.y, "--y"))
    out.write(json.dumps({"lambda": _complex_pair(lam.complex_value()),
                          "kernel": _complex_pair(val)}) + "\n")
    return EXIT_OK


def cmd_kernel_diff(args, out):
    spec = load_spec(args.spec)
    bm = spec.boundary_matrix()
    val = kernel_sqrt_diff(bm, _vector(args.x, "--x"), _vector(args.y, "--y"), _settings(args, spec))
    out.write(json.dumps({"kernel_sqrt_diff": val}) + "\n")
    return EXIT_OK


def cmd_selfcheck(args, out):
    from .selfcheck import run_selfcheck
    failures = 0
    for name, ok, detail in run_selfcheck():
        out.write(f"{'PASS' if ok else 'FAIL'}  {name}  {detail}\n")
        failures += not ok
    return 0 if failures == 0 else 4


def build_parser():
    p = argparse.ArgumentParser(prog="kreinext", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, spec=True):
        if spec:
            sp.add_argument("--spec", help="JSON problem spec")
        sp.add_argument("--r", type=float, default=None, help="pair distance")
        sp.add_argument("--tol", type=float, default=None, help="absolute quadrature tolerance")
        sp.add_argument("--theta", type=float, default=None, help="use the theta-family matrix")
        sp.add_argument("--json", action="store_true", help="JSON output")

    sp = sub.add_parser("energy", help="energy difference E(M)")
    common(sp)
    sp.add_argument("--half-scale", action="store_true", help="also report 0.5 * rE")
    sp.set_defaults(func=cmd_energy)

    sp = sub.add_parser("sweep", help="rE over the theta family, CSV")
    common(sp, spec=False)
    sp.add_argument("--theta-min", type=float, default=0.0)
    sp.add_argument("--theta-max", type=float, default=math.pi)
    sp.add_argument("--steps", type=int, default=65)
    sp.add_argument("--jobs", type=int, default=1)
    sp.add_argument("--half-scale", action="store_true", help="report 0.5 * rE")
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("admissible", help="admissibility report, JSON")
    common(sp)
    sp.set_defaults(func=cmd_admissible)

    sp = sub.add_parser("resolvent", help="scalar resolvent kernel R^M_lambda(x, y)")
    common(sp)
    sp.add_argument("--lam", required=True, help="spectral parameter 're,im'")
    sp.add_argument("--below", action="store_true", help="lower side of the cut for real lambda >= 0")
    sp.add_argument("--x", required=True)
    sp.add_argument("--y", required=True)
    sp.set_defaults(func=cmd_resolvent)

    sp = sub.add_parser("kernel-diff", help="kernel of T_M^(1/2) - Delta^(1/2)")
    common(sp)
    sp.add_argument("--x", required=True)
    sp.add_argument("--y", required=True)
    sp.set_defaults(func=cmd_kernel_diff)

    sp = sub.add_parser("selfcheck", help="identity checks; nonzero exit on failure")
    sp.set_defaults(func=cmd_selfcheck)
    return p


def main(argv=None, out=None):
    out = out or sys.stdout
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        # argparse exits with 2 on usage errors; 2 is reserved for LogDivergent
        return EXIT_OK if not exc.code else EXIT_PARSE
    try:
        return args.func(args, out)
    except SpecError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_PARSE
    except (OSError, ValueError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_PARSE


if __name__ == "__main__":
    sys.exit(main())

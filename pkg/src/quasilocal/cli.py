"""Command-line front end.

Exit codes: 0 success, 2 certification failure, 3 simulation timeout, 64 usage
or input error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import warnings
from pathlib import Path

import numpy as np

from . import __version__
from .cluster import (
    SQUARE_PREMIX,
    cluster_covariance,
    expected_nullifier_covariance,
    nullifier_covariance,
    unitary_gram_schmidt,
    unitary_polar,
)
from .errors import (
    InvalidInput,
    NoUniqueSteadyState,
    QuasilocalError,
    StageTimeout,
    TheoremHypothesisViolated,
)
from .entanglement import SweepGrid, sweep
from .gaussian import vacuum
from .io import (
    load_graph,
    matrix_from_json,
    matrix_to_json,
    read_json,
    read_matrix_csv,
    system_from_json,
    system_to_json,
    write_json,
)
from .lyapunov import is_hurwitz
from .switching import StagePolicy, make_schedule, realize_lasers, run_schedule
from .systems import (
    EprParams,
    ExtendedSystem,
    build_extended_drift,
    build_target_drift,
    check_theorem2,
    epr_target,
)

EXIT_OK = 0
EXIT_FAIL = 2
EXIT_TIMEOUT = 3
EXIT_USAGE = 64

log = logging.getLogger("quasilocal")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _positive(x):
    v = float(x)
    if not v > 0:
        raise argparse.ArgumentTypeError(f"expected a positive number, got {x}")
    return v


def _range(text):
    try:
        lo, hi, n = text.split(":")
        return float(lo), float(hi), int(n)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a:b:n, got {text!r}") from None


def _spectrum(ev):
    order = np.lexsort((ev.imag, ev.real))
    return [[float(ev[i].real), float(ev[i].imag)] for i in order]


def _emit(doc, as_json, lines, out=None):
    if as_json:
        print(write_json(doc))
    else:
        for line in lines:
            print(line)
    if out:
        write_json(doc, out)


# -- verify ---------------------------------------------------------------

def cmd_verify(args) -> int:
    target, kappa, gamma, eps = system_from_json(read_json(args.system))
    kappa = 1.0 if kappa is None else kappa
    ext = ExtendedSystem(target, kappa, gamma)
    A1, _ = build_target_drift(target)
    rep1 = is_hurwitz(A1)
    A, _ = build_extended_drift(ext)
    rep = is_hurwitz(A)
    doc = {
        "command": "verify",
        "system": {"n": target.n, "m": target.m, "kappa": kappa, "gamma": gamma, "epsilon": eps},
        "hurwitz": {
            "target": rep1.hurwitz,
            "target_max_real": rep1.max_real,
            "extended": rep.hurwitz,
            "extended_max_real": rep.max_real,
            "extended_spectrum": _spectrum(rep.eigenvalues),
        },
        "theorem1": None,
        "theorem2": None,
        "steady_purity": None,
        "status": "FAIL",
        "diagnosis": None,
    }
    lines = [f"system: n={target.n} m={target.m} kappa={kappa:g} gamma={gamma:g}"]
    lines.append("extended spectrum: " + ", ".join(f"{a:+.6g}{b:+.6g}j" for a, b in doc["hurwitz"]["extended_spectrum"]))
    if not rep1:
        doc["diagnosis"] = f"drift not Hurwitz (target max Re = {rep1.max_real:.3g})"
        lines += [f"FAIL: {doc['diagnosis']}"]
        _emit(doc, args.json, lines, args.out)
        return EXIT_FAIL
    try:
        cert = check_theorem2(ext, args.tol)
    except (NoUniqueSteadyState, TheoremHypothesisViolated) as exc:
        doc["diagnosis"] = str(exc)
        _emit(doc, args.json, lines + [f"FAIL: {exc}"], args.out)
        return EXIT_FAIL
    t1 = cert.theorem1
    doc["theorem1"] = t1.as_dict()
    doc["theorem2"] = cert.as_dict()
    doc["steady_purity"] = cert.target_purity
    passed = cert.passed
    doc["status"] = "PASS" if passed else "FAIL"
    if not passed:
        doc["diagnosis"] = "; ".join(cert.notes) or "extended steady state differs from diag(V1, I/2)"
    lines += [
        f"theorem 1: kernel residual {t1.kernel_residual:.3e}, hamiltonian residual {t1.hamiltonian_residual:.3e}",
        f"theorem 2: off-diagonal {cert.offdiag_residual:.3e}, auxiliary {cert.auxiliary_residual:.3e}, "
        f"target {cert.target_residual:.3e}",
        f"steady purity {cert.target_purity:.6f}",
        doc["status"] + ("" if passed else f": {doc['diagnosis']}"),
    ]
    _emit(doc, args.json, lines, args.out)
    return EXIT_OK if passed else EXIT_FAIL


# -- epr ------------------------------------------------------------------

def cmd_epr(args) -> int:
    p = EprParams(args.r, args.kappa, args.gamma, args.epsilon, args.mu).normalized()
    doc = system_to_json(epr_target(p), kappa=p.kappa, gamma=p.gamma if p.gamma else None,
                         epsilon=p.epsilon if p.epsilon != 1 else None)
    text = write_json(doc, args.out)
    if not args.out:
        print(text)
    return EXIT_OK


# -- cluster --------------------------------------------------------------

def _premix(spec, n):
    if spec is None or spec == "none":
        return None
    if spec == "square":
        if n != 4:
            raise UsageError("the built-in square premix needs a 4-node graph")
        return SQUARE_PREMIX
    return read_matrix_csv(spec)


def cmd_cluster(args) -> int:
    g = load_graph(args.graph)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        if args.method == "polar":
            u = unitary_polar(g)
        else:
            u = unitary_gram_schmidt(g, _premix(args.premix, g.n))
    xi = float(np.arctanh(args.r))
    state = cluster_covariance(u, xi)
    null = nullifier_covariance(state, g)
    dev = float(np.max(np.abs(null - expected_nullifier_covariance(g, xi))))
    lasers = realize_lasers(u, args.omega, args.r)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    bundle = {
        "n": g.n,
        "r": args.r,
        "xi": xi,
        "mu": 1.0,
        "omega": args.omega,
        "method": u.method,
        "adjacency": matrix_to_json(g.A),
        "U": matrix_to_json(u.U),
        "R": matrix_to_json(u.R),
        "stages": list(range(1, g.n + 1)),
        "nullifier_check": {"max_deviation": dev, "passed": dev <= 1e-9},
        "warnings": [str(w.message) for w in caught],
    }
    write_json(bundle, out / "bundle.json")
    write_json({"method": u.method, "U": matrix_to_json(u.U)}, out / "unitary.json")
    write_json(matrix_to_json(state.cov), out / "target_covariance.json")
    write_json(matrix_to_json(null), out / "nullifier_covariance.json")
    lasers.to_csv(out / "lasers.csv")
    print(f"wrote protocol bundle for {g.n} nodes to {out} (method {u.method}, r = {args.r:g})")
    print(f"nullifier check: max deviation {dev:.3e} ({'ok' if dev <= 1e-9 else 'FAILED'})")
    for msg in bundle["warnings"]:
        print(f"warning: {msg}", file=sys.stderr)
    return EXIT_OK if dev <= 1e-9 else EXIT_FAIL


# -- switch ---------------------------------------------------------------

def _load_bundle(path):
    path = Path(path)
    if path.is_dir():
        path = path / "bundle.json"
    doc = read_json(path)
    try:
        U = matrix_from_json(doc["U"])
        r = float(doc["r"])
        stages = [int(k) for k in doc.get("stages", range(1, U.shape[0] + 1))]
        mu = float(doc.get("mu", 1.0))
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidInput(f"malformed bundle: {exc}") from exc
    return U, r, mu, stages


def cmd_switch(args) -> int:
    U, r, mu, stages = _load_bundle(args.bundle)
    schedule = make_schedule(U, r, mu, stages)
    policy = StagePolicy(args.tol, args.max_duration)
    n = schedule.n
    doc = {"command": "switch", "n": n, "r": r, "kappa": args.kappa, "tol": args.tol, "mu": args.mu}
    try:
        res = run_schedule(vacuum(n), schedule, args.kappa, policy)
    except StageTimeout as exc:
        doc.update(status="TIMEOUT", stage=exc.stage, residual=exc.residual, diagnosis=str(exc))
        _emit(doc, args.json, [f"TIMEOUT: {exc}"], args.out)
        return EXIT_TIMEOUT
    bound = max(n, 1) * 10 * args.tol
    ok = res.distance <= bound
    doc.update(
        status="PASS" if ok else "FAIL",
        stages=[
            {"k": s.k, "duration": s.duration, "duration_physical": s.duration / args.mu,
             "residual": s.residual, "steps": s.steps}
            for s in res.log
        ],
        distance=res.distance,
        bound=bound,
        purity=res.purity,
        final_covariance=matrix_to_json(res.cov),
    )
    lines = [f"stage {s.k}: t = {s.duration:.4g}/mu, residual {s.residual:.3e}" for s in res.log]
    lines += [f"distance to target covariance {res.distance:.3e} (bound {bound:.1e})",
              f"purity {res.purity:.8f}", doc["status"]]
    _emit(doc, args.json, lines, args.out)
    return EXIT_OK if ok else EXIT_FAIL


# -- sweep ----------------------------------------------------------------

def cmd_sweep(args) -> int:
    grid = SweepGrid(args.xi, args.kappa, args.gamma, args.epsilon)
    table = sweep(grid, args.method)
    if args.out:
        table.to_csv(args.out)
    else:
        table.to_csv(sys.stdout)
    xi, kappa, en, status = table.max_row()
    msg = f"max E_N = {en:.6f} at xi = {xi:.6g} (r = {np.tanh(xi):.6g}), kappa = {kappa:.6g}"
    print(msg, file=sys.stdout if args.out else sys.stderr)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="quasilocal", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    v = sub.add_parser("verify", help="certify a system file")
    v.add_argument("system")
    v.add_argument("--tol", type=_positive, default=1e-8)
    v.add_argument("--json", action="store_true")
    v.add_argument("--out")
    v.set_defaults(func=cmd_verify)

    e = sub.add_parser("epr", help="write the two-ensemble system file")
    e.add_argument("--r", type=float, default=0.8)
    e.add_argument("--kappa", type=_positive, default=1.0)
    e.add_argument("--gamma", type=float, default=0.0)
    e.add_argument("--epsilon", type=_positive, default=1.0)
    e.add_argument("--mu", type=_positive, default=1.0)
    e.add_argument("--out")
    e.set_defaults(func=cmd_epr)

    c = sub.add_parser("cluster", help="synthesise a switching protocol for a graph")
    c.add_argument("graph")
    c.add_argument("--r", type=float, default=0.8)
    c.add_argument("--method", choices=["polar", "gs"], default="polar")
    c.add_argument("--premix", help="'square', 'none' or a CSV matrix (gs only)")
    c.add_argument("--omega", type=_positive, default=1.0)
    c.add_argument("--out", default="bundle")
    c.set_defaults(func=cmd_cluster)

    s = sub.add_parser("switch", help="simulate a protocol bundle from vacuum")
    s.add_argument("bundle")
    s.add_argument("--kappa", type=_positive, default=1.0)
    s.add_argument("--tol", type=_positive, default=1e-6)
    s.add_argument("--max-duration", type=_positive, default=500.0)
    s.add_argument("--mu", type=_positive, default=1.0, help="rescales reported times only")
    s.add_argument("--json", action="store_true")
    s.add_argument("--out")
    s.set_defaults(func=cmd_switch)

    w = sub.add_parser("sweep", help="E_N over a (xi, kappa) grid as CSV")
    w.add_argument("--gamma", type=float, default=0.0)
    w.add_argument("--epsilon", type=_positive, default=1.0)
    w.add_argument("--xi", type=_range, default=(0.05, 3.0, 50))
    w.add_argument("--kappa", type=_range, default=(0.05, 3.0, 50))
    w.add_argument("--method", choices=["closed", "numeric"])
    w.add_argument("--out")
    w.set_defaults(func=cmd_sweep)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    if getattr(args, "r", None) is not None and not 0 <= args.r < 1:
        parser.error("--r must lie in [0, 1)")
    try:
        return args.func(args)
    except (InvalidInput, UsageError, OSError) as exc:
        print(f"quasilocal: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except QuasilocalError as exc:
        print(f"quasilocal: failure: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())

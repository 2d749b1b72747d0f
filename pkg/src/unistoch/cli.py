"""Command-line interface.

Exit codes: 0 unistochastic / success, 1 not unistochastic, 2 undecided,
64 usage or parse error, 65 validation error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.stats import binomtest

from . import birkhoff, entangle, hadamard, unicheck
from .matcore import (
    ATOL,
    BistochasticMatrix,
    ParseError,
    UnistochError,
    dumps_matrix,
    load_matrix,
    matrix_to_dict,
    squared_moduli,
    unitarity_defect,
    validate_bistochastic,
)

EXIT_OK, EXIT_NOT, EXIT_UNDECIDED = 0, 1, 2
EXIT_USAGE, EXIT_INVALID = 64, 65

STATUS_EXIT = {
    unicheck.Status.UNISTOCHASTIC: EXIT_OK,
    unicheck.Status.NOT_UNISTOCHASTIC: EXIT_NOT,
    unicheck.Status.UNDECIDED: EXIT_UNDECIDED,
}

VOLUME_CHUNK = 1 << 16


class UsageError(Exception):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    seed: int = 0
    samples: int = 1_000_000
    n: int = 3
    restarts: int = 20
    atol: float = ATOL
    tol: float = 1e-14
    out: str | None = None

    def __post_init__(self):
        if self.samples < 1 or self.restarts < 1 or self.n < 2:
            raise UnistochError("samples, restarts must be positive and n >= 2")
        if not (self.atol > 0 and self.tol > 0):
            raise UnistochError("tolerances must be positive")


def worker_count() -> int:
    cap = os.environ.get("UNISTOCH_THREADS")
    n = os.cpu_count() or 1
    if cap:
        try:
            n = min(n, max(1, int(cap)))
        except ValueError:
            pass
    return n


# -- commands ----------------------------------------------------------------


def cmd_check(b: BistochasticMatrix, restarts: int = 20, seed: int = 0, tol: float = 1e-14):
    return unicheck.check(b, restarts=restarts, seed=seed, tol=tol)


def _volume_chunk(seed: int, index: int, size: int) -> tuple[int, int]:
    batch = birkhoff.sample_uniform_array(3, size, seed, stream=index)
    slack = unicheck.closure_slack(batch)
    inside = int((slack >= -unicheck.CLOSE_TOL).sum())
    ortho = int((np.abs(slack) <= unicheck.ORTHO_TOL).sum())
    return inside, ortho


def cmd_volume(config: ExperimentConfig, workers: int | None = None) -> dict:
    """Monte Carlo estimate of the unistochastic fraction of the 3x3 polytope.

    Samples are cut into fixed chunks, each drawn from its own ``(seed,
    chunk)`` substream, so the result does not depend on ``workers``.
    """
    if config.n != 3:
        raise unicheck.UnistochError("the volume experiment is only exact for n = 3")
    start = time.perf_counter()
    sizes = [VOLUME_CHUNK] * (config.samples // VOLUME_CHUNK)
    if config.samples % VOLUME_CHUNK:
        sizes.append(config.samples % VOLUME_CHUNK)
    workers = workers or worker_count()
    with ThreadPoolExecutor(max_workers=workers) as pool:
        parts = list(pool.map(lambda a: _volume_chunk(config.seed, *a), enumerate(sizes)))
    inside = sum(p[0] for p in parts)
    ortho = sum(p[1] for p in parts)
    ci = binomtest(inside, config.samples).proportion_ci(confidence_level=0.95, method="wilson")
    return {
        "n": 3,
        "samples": config.samples,
        "seed": config.seed,
        "unistochastic": inside,
        "fraction": inside / config.samples,
        "ci_low": float(ci.low),
        "ci_high": float(ci.high),
        "orthostochastic_hits": ortho,
        "orthostochastic_fraction": ortho / config.samples,
        "wall_time_s": time.perf_counter() - start,
    }


def triangle_corners(which: str) -> list[birkhoff.PermutationMatrix]:
    if which == "even":
        perms = [(0, 1, 2), (1, 2, 0), (2, 0, 1)]
    elif which == "odd":
        perms = [(1, 0, 2), (2, 1, 0), (0, 2, 1)]
    else:
        raise UsageError(f"unknown triangle {which!r}; use even or odd")
    return [birkhoff.PermutationMatrix(p) for p in perms]


def cmd_scan_triangle(grid: int, which: str = "even"):
    """Yield ``(a, b, c, status, defect)`` over a barycentric grid of a corner triangle."""
    if grid < 2:
        raise UsageError("grid must be at least 2")
    p1, p2, p3 = (p.matrix for p in triangle_corners(which))
    for i in range(grid, -1, -1):
        for j in range(grid - i, -1, -1):
            k = grid - i - j
            a, b, c = i / grid, j / grid, k / grid
            m = validate_bistochastic(a * p1 + b * p2 + c * p3)
            v = unicheck.check_exact_n3(m)
            yield a, b, c, v.status.value, v.defect


def _make_object(what: str, n: int | None, phi: float | None):
    if what == "fourier":
        return hadamard.fourier(n or 3)
    if what == "family4":
        return hadamard.hadamard_family_n4(phi or 0.0)
    if what == "sylvester":
        dim = n or 2
        k = dim.bit_length() - 1
        if dim < 1 or 2**k != dim:
            raise UnistochError("sylvester needs --n to be a power of 2")
        return hadamard.sylvester(k)
    if what == "circulant":
        return hadamard.circulant_hadamard(hadamard.gauss_sequence(n or 3))
    if what == "basis":
        dim = n or 3
        h = hadamard.hadamard_family_n4(phi) if (phi is not None and dim == 4) else hadamard.fourier(dim)
        return entangle.build_basis(entangle.cyclic_latin(dim), h)
    raise UsageError(f"unknown construction {what!r}")


def cmd_make(what: str, n: int | None = None, phi: float | None = None) -> tuple[dict, dict]:
    """Build an object; return ``(json_object, verification_summary)``."""
    obj = _make_object(what, n, phi)
    if isinstance(obj, entangle.EntangledBasis):
        rep = entangle.verify_basis(obj)
        summary = {
            "what": what,
            "n": obj.n,
            "gram_deviation": rep.gram_deviation,
            "reduced_deviation": rep.reduced_deviation,
            "basis_ok": rep.accepted(),
        }
        return obj.to_dict(), summary
    summary = {
        "what": what,
        "n": obj.n,
        "unitarity_defect": unitarity_defect(obj.entries),
        "complex_hadamard": hadamard.is_complex_hadamard(obj),
    }
    return matrix_to_dict(obj), summary


# -- argument parsing --------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="unistoch", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    c = sub.add_parser("check", help="decide whether a bistochastic matrix is unistochastic")
    c.add_argument("input", help="matrix JSON file (a unitary is mapped to its squared moduli)")
    c.add_argument("--restarts", type=int, default=20)
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--tol", type=float, default=1e-14)
    c.add_argument("--atol", type=float, default=ATOL)

    v = sub.add_parser("volume", help="estimate the unistochastic fraction of the 3x3 polytope")
    v.add_argument("--n", type=int, default=3)
    v.add_argument("--samples", type=int, default=1_000_000)
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--atol", type=float, default=ATOL)
    v.add_argument("--out")
    v.add_argument("--format", choices=["json", "csv"], default="json")

    s = sub.add_parser("scan", help="scan a corner triangle of the 3x3 polytope")
    s.add_argument("--grid", type=int, default=30)
    s.add_argument("--which", choices=["even", "odd"], default="even")
    s.add_argument("--out")
    s.add_argument("--format", choices=["json", "csv"], default="csv")

    m = sub.add_parser("make", help="construct a Hadamard matrix or entangled basis")
    m.add_argument("what", choices=["fourier", "family4", "sylvester", "circulant", "basis"])
    m.add_argument("--n", type=int)
    m.add_argument("--phi", type=float)
    m.add_argument("--out")

    smp = sub.add_parser("sample", help="uniform samples of the polytope as JSON lines")
    smp.add_argument("--n", type=int, default=3)
    smp.add_argument("--samples", type=int, default=10)
    smp.add_argument("--seed", type=int, default=0)
    smp.add_argument("--out")
    return p


def _emit(text: str, out: str | None):
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _run(args) -> int:
    if args.command == "check":
        try:
            m = load_matrix(args.input, atol=args.atol)
        except OSError as exc:
            raise ParseError(str(exc)) from None
        if not isinstance(m, BistochasticMatrix):
            m = squared_moduli(m)
        verdict = cmd_check(m, restarts=args.restarts, seed=args.seed, tol=args.tol)
        print(json.dumps(verdict.to_dict()))
        return STATUS_EXIT[verdict.status]

    if args.command == "volume":
        cfg = ExperimentConfig(seed=args.seed, samples=args.samples, n=args.n, atol=args.atol, out=args.out)
        res = cmd_volume(cfg)
        if args.format == "json":
            text = json.dumps(res, indent=2) + "\n"
        else:
            buf = io.StringIO()
            w = csv.DictWriter(buf, fieldnames=list(res), lineterminator="\n")
            w.writeheader()
            w.writerow(res)
            text = buf.getvalue()
        _emit(text, args.out)
        return EXIT_OK

    if args.command == "scan":
        rows = list(cmd_scan_triangle(args.grid, args.which))
        if args.format == "csv":
            buf = io.StringIO()
            w = csv.writer(buf, lineterminator="\n")
            w.writerow(["a", "b", "c", "status", "defect"])
            for a, b, c, st, d in rows:
                w.writerow([repr(a), repr(b), repr(c), st, repr(d)])
            text = buf.getvalue()
        else:
            keys = ("a", "b", "c", "status", "defect")
            text = json.dumps([dict(zip(keys, r)) for r in rows]) + "\n"
        _emit(text, args.out)
        return EXIT_OK

    if args.command == "make":
        obj, summary = cmd_make(args.what, n=args.n, phi=args.phi)
        text = json.dumps(obj) + "\n"
        if args.out:
            _emit(text, args.out)
            print(json.dumps(summary))
        else:
            sys.stdout.write(text)
            print(json.dumps(summary), file=sys.stderr)
        return EXIT_OK

    if args.command == "sample":
        cfg = ExperimentConfig(seed=args.seed, samples=args.samples, n=args.n)
        lines = [dumps_matrix(b) for b in birkhoff.sample_uniform(cfg.n, cfg.samples, cfg.seed)]
        _emit("\n".join(lines) + "\n", args.out)
        return EXIT_OK
    raise UsageError(f"unknown command {args.command}")


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _run(args)
    except (ParseError, UsageError) as exc:
        print(f"unistoch: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except UnistochError as exc:
        print(f"unistoch: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())

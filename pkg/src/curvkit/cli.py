"""Command-line front end: ``curvkit <command> FILE [flags]``."""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import tempfile
import time
from pathlib import Path

import numpy as np

from curvkit import __version__
from curvkit.errors import CurvkitError
from curvkit.io import FunctionBundle, load

EXIT_OK, EXIT_NEGATIVE, EXIT_ERROR = 0, 1, 2


class UsageError(CurvkitError):
    pass


def _floats(v):
    return [float(x) for x in np.asarray(v, dtype=float).ravel()]


def _bundle(path) -> FunctionBundle:
    obj = load(path)
    if not isinstance(obj, FunctionBundle):
        raise UsageError(f"{path} describes a problem, this command needs a function file")
    return obj


def _problem(path):
    obj = load(path)
    if isinstance(obj, FunctionBundle):
        raise UsageError(f"{path} describes a function, this command needs a problem file")
    return obj


def _grid(base: dict, args):
    from curvkit.oracle import SampleGrid

    cfg = dict(base)
    if getattr(args, "levels", None) is not None:
        cfg["levels"] = args.levels
    if getattr(args, "seed", None) is not None:
        cfg["seed"] = args.seed
    try:
        return SampleGrid(**cfg)
    except TypeError as exc:
        raise UsageError(f"bad grid settings: {exc}") from None


# Commands return (result dict, human text, exit code).


def cmd_d2(args):
    from curvkit.subderiv import d2

    b = _bundle(args.file)
    val = d2(b.h, b.point, b.multiplier, b.direction)
    return val.to_dict(), f"d2 = {val.value} [{val.kind.value}]\n  " + "\n  ".join(val.trace), EXIT_OK


def cmd_d1(args):
    from curvkit.subderiv import subderivative

    b = _bundle(args.file)
    val = subderivative(b.h, b.point, b.direction)
    return val.to_dict(), f"d = {val.value} [{val.kind.value}]\n  " + "\n  ".join(val.trace), EXIT_OK


def cmd_oracle(args):
    from curvkit.oracle import estimate_d, estimate_d2

    b = _bundle(args.file)
    grid = _grid(b.grid, args)
    if args.first:
        est = estimate_d(b.h, b.point, b.direction, grid)
    else:
        est = estimate_d2(b.h, b.point, b.multiplier, b.direction, grid)
    minima = ", ".join(f"{v:.6g}" for v in est.level_minima[-4:])
    out = est.to_dict()
    out["grid"] = grid.to_dict()
    return out, f"{est.label}\n  last level minima: {minima}", EXIT_OK


def _directions_file(path):
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if isinstance(doc, dict):
        doc = doc.get("directions")
    if not isinstance(doc, list) or not doc:
        raise UsageError(f"{path}: expected a nonempty list of directions")
    return tuple(np.asarray(d, dtype=float) for d in doc)


def _mode(args, p):
    from curvkit.sosc import DirectionsList, parse_mode

    text = args.mode
    if text is None:
        if "directions" in p.meta:
            return DirectionsList(tuple(np.asarray(d, dtype=float) for d in p.meta["directions"]))
        text = "auto"
    if text.startswith("file:"):
        return DirectionsList(_directions_file(text[5:]))
    try:
        return parse_mode(text, args.seed or 0)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _certify(args, p):
    from curvkit.sosc import certify

    return certify(p, _mode(args, p), exact=args.rational)


def cmd_certify(args):
    from curvkit.sosc import Verdict

    p = _problem(args.file)
    cert = _certify(args, p)
    lines = [f"verdict: {cert.verdict.value}"]
    if cert.witness is not None:
        lines.append(f"witness u = {_floats(cert.witness)}")
    if cert.value_min is not None:
        lines.append(f"value_min = {cert.value_min:.6g}, growth eps = {cert.growth_eps:.6g}")
    if cert.subspace:
        sub = cert.subspace
        desc = f"subspace of dimension {sub.get('dimension')}"
        if "min_eigenvalue" in sub:
            desc += f", reduced form min eigenvalue {sub['min_eigenvalue']:.6g}"
        lines.append(desc)
    ok = sum(1 for d in cert.directions if d)
    lines.append(f"directions certified: {ok}/{len(cert.directions)}")
    lines += [f"note: {n}" for n in cert.notes]
    code = EXIT_NEGATIVE if cert.verdict is Verdict.NOT_CERTIFIED else EXIT_OK
    return cert.to_dict(), "\n".join(lines), code


def cmd_growth(args):
    from curvkit.oracle import GrowthVerdict, verify_essential_min, verify_quadratic_growth
    from curvkit.subderiv import Compose, SumSmooth

    obj = load(args.file)
    seed = args.seed or 0
    eps = args.eps
    extra = {}
    if isinstance(obj, FunctionBundle):
        if eps is None:
            raise UsageError("--eps is required for function files")
        rep = verify_quadratic_growth(obj.h, obj.point, eps, args.delta, args.samples, seed)
    else:
        if eps is None:
            cert = _certify(args, obj)
            if cert.growth_eps is None or cert.growth_eps <= 0:
                raise UsageError(f"no certified value to derive eps from ({cert.verdict.value}); pass --eps")
            eps = cert.growth_eps
            extra["eps_from_certificate"] = cert.verdict.value
        if obj.kind.value == "composite":
            rep = verify_quadratic_growth(SumSmooth(obj.f0, Compose(obj.g, obj.F)), obj.x, eps, args.delta, args.samples, seed)
        else:
            rep = verify_essential_min(obj.f0, obj.F, obj.C, obj.x, eps, args.delta, args.samples, seed)
    out = rep.to_dict() | extra
    text = f"growth: {rep.verdict.value} (eps={eps:.6g}, delta={args.delta:g}, samples={rep.samples})"
    if rep.witness is not None:
        text += f"\n  witness x = {list(rep.witness)}, violation {rep.violation:.3g}"
    return out, text, EXIT_NEGATIVE if rep.verdict is GrowthVerdict.FAILS_AT else EXIT_OK


def cmd_probe(args):
    from curvkit.oracle import circle_projection, projection_alignment_probe, sequence_ratio_probe, sphere_center_sequence
    from curvkit.subderiv import Indicator

    if args.sphere_center:
        ratios = sequence_ratio_probe(circle_projection, [0.0, 0.0], [1.0, 0.0], sphere_center_sequence(args.k_max))
        text = "sphere-center ratios: " + ", ".join(f"{r:.4g}" for r in ratios)
        return {"ratios": ratios}, text, EXIT_OK
    if args.file is None:
        raise UsageError("probe-projection needs a function file or --sphere-center")
    b = _bundle(args.file)
    if not isinstance(b.h, Indicator):
        raise UsageError("probe-projection needs an indicator function")
    probe = projection_alignment_probe(b.h.S, b.point, b.direction, _grid(b.grid, args))
    text = f"final residual {probe.final_residual:.3e}, max ratio {probe.max_ratio:.4g}"
    return probe.to_dict(), text, EXIT_OK


def cmd_selftest(args):
    from curvkit import selftest

    lines = []
    results = selftest.run_all(set(args.only) if args.only else None, echo=lines.append)
    passed = sum(r.passed for r in results)
    lines.append(f"{passed}/{len(results)} criteria passed")
    out = {"criteria": [{"number": r.number, "title": r.title, "passed": r.passed, "detail": r.detail, "seconds": r.seconds} for r in results]}
    return out, "\n".join(lines), EXIT_OK if passed == len(results) else EXIT_NEGATIVE


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="curvkit", description="Second subderivatives and second-order optimality certificates.")
    ap.add_argument("--version", action="version", version=f"curvkit {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    def command(name, fn, help_text, file_required=True):
        sp = sub.add_parser(name, help=help_text)
        if file_required:
            sp.add_argument("file")
        sp.add_argument("--json", metavar="PATH", help="also write the report as JSON")
        sp.set_defaults(fn=fn)
        return sp

    command("d2", cmd_d2, "second subderivative of a function file")
    command("d1", cmd_d1, "first subderivative of a function file")
    sp = command("oracle", cmd_oracle, "sampled estimate of the second subderivative")
    sp.add_argument("--levels", type=int)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--first", action="store_true", help="estimate the first subderivative instead")
    sp = command("certify", cmd_certify, "second-order sufficient condition certificate")
    sp.add_argument("--mode", help="subspace | sphere:N[,SEED] | file:PATH | auto (default)")
    sp.add_argument("--seed", type=int)
    sp.add_argument("--rational", action="store_true", help="exact arithmetic for polyhedral data and LPs")
    sp = command("growth", cmd_growth, "sampled quadratic-growth check")
    sp.add_argument("--eps", type=float)
    sp.add_argument("--delta", type=float, default=1e-2)
    sp.add_argument("--samples", type=int, default=100_000)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--mode", help="certification mode used to derive the default eps")
    sp.add_argument("--rational", action="store_true")
    sp = command("probe-projection", cmd_probe, "projection alignment along a ray", file_required=False)
    sp.add_argument("file", nargs="?")
    sp.add_argument("--levels", type=int)
    sp.add_argument("--sphere-center", action="store_true", help="run the turning-ray probe toward the circle center")
    sp.add_argument("--k-max", type=int, default=12)
    sp = command("selftest", cmd_selftest, "run the acceptance checks", file_required=False)
    sp.add_argument("--only", type=int, nargs="+", metavar="K")
    return ap


def config_hash(args, argv) -> str:
    h = hashlib.sha256()
    path = getattr(args, "file", None)
    if path and Path(path).is_file():
        h.update(Path(path).read_bytes())
    h.update(json.dumps(list(argv), sort_keys=True).encode())
    return h.hexdigest()


def write_atomic(path, text: str):
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    start = time.perf_counter()
    try:
        result, text, code = args.fn(args)
    except (CurvkitError, ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"curvkit {args.command}: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR
    elapsed = time.perf_counter() - start
    report = {
        "command": ["curvkit"] + argv,
        "config_hash": config_hash(args, argv),
        "version": __version__,
        "result": result,
        "exit_code": code,
        "seconds": elapsed,
    }
    print(f"$ curvkit {' '.join(argv)}")
    print(text)
    print(f"[curvkit {__version__}, config {report['config_hash'][:12]}, {elapsed:.2f}s, exit {code}]")
    if args.json:
        try:
            write_atomic(args.json, json.dumps(report, indent=2, sort_keys=True, allow_nan=False, default=str))
        except (ValueError, OSError) as exc:
            print(f"curvkit {args.command}: error writing {args.json}: {exc}", file=sys.stderr)
            return EXIT_ERROR
    return code


if __name__ == "__main__":
    sys.exit(main())

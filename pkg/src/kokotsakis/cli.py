"""Command-line front end: ``kokotsakis check|simulate|certify|generate``.

Exit codes: 0 flexible (or success), 1 rigid, 2 degenerate or unreadable
input.  With ``--json`` the full report goes to stdout as JSON.
"""
import argparse
import json
import os
import sys
import tempfile
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import angles as ang
from .errors import KokotsakisError, StepFailure
from .flow import chi_higher_derivatives, integrate_flow, mesh_to_obj, trajectory_csv
from .incidence import flexibility_via_incidence
from .infinitesimal import chi
from .mesh import faces_planar, load_mesh, save_mesh

EXIT_FLEXIBLE, EXIT_RIGID, EXIT_DEGENERATE = 0, 1, 2
GENERATE_DRAWS = 50


def write_atomic(path, data):
    """Write bytes to ``path`` via a temporary file and a rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data if isinstance(data, bytes) else data.encode("utf-8"))
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _read(path):
    if path == "-":
        return sys.stdin.buffer.read()
    return Path(path).read_bytes()


def _positive(text):
    value = float(text)
    if not value > 0:
        raise argparse.ArgumentTypeError("must be strictly positive")
    return value


def parse_samples(text):
    """``"LO..HI"`` -> ``range(LO, HI + 1)``."""
    try:
        lo, hi = (int(x) for x in text.split(".."))
    except ValueError:
        raise argparse.ArgumentTypeError("expected LO..HI with integers") from None
    if hi < lo:
        raise argparse.ArgumentTypeError("sample range is empty")
    return range(lo, hi + 1)


def _dump(obj):
    return json.dumps(obj, indent=1, default=_jsonable)


def _jsonable(x):
    if isinstance(x, np.generic):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    raise TypeError(f"not serializable: {type(x)}")


# -------------------------------------------------------------------- check


def check_mesh(data, tol=1e-8, order=6):
    """Report dict and exit code for one mesh document."""
    mesh = load_mesh(data)
    x = chi(mesh)
    residual = abs(x.value - 1.0)
    report = {"n": mesh.n, "chi": x.value, "chi_residual": residual, "infinitesimally_flexible": residual <= tol}
    if faces_planar(mesh):
        try:
            v = flexibility_via_incidence(mesh, chi_tol=tol)
            report["incidence"] = {
                "condition": v.condition,
                "holds": v.flexible,
                "residual": v.result.residual,
                "product": v.product,
                "agrees_with_chi": v.agrees,
            }
        except KokotsakisError as exc:
            report["incidence"] = {"error": f"{type(exc).__name__}: {exc}"}
    else:
        report["incidence"] = None
    flexible = residual <= tol
    if order >= 1:
        try:
            d = chi_higher_derivatives(mesh, K=order)
            report["derivatives"] = d.to_dict()
            report["derivatives"]["vanishing"] = [d.vanishes(k) for k in range(1, order + 1)]
            flexible = flexible and all(d.vanishes(k) for k in range(1, order + 1))
        except StepFailure as exc:
            report["derivatives"] = {"error": str(exc)}
            flexible = False
    report["verdict"] = "flexible" if flexible else "rigid"
    return report, EXIT_FLEXIBLE if flexible else EXIT_RIGID


def _format_check(name, report):
    lines = [f"{name}: chi = {report['chi']:.15g}  |chi - 1| = {report['chi_residual']:.3g}"]
    inc = report.get("incidence")
    if inc is None:
        lines.append("  incidence: skipped (faces not planar)")
    elif "error" in inc:
        lines.append(f"  incidence: {inc['error']}")
    else:
        state = "holds" if inc["holds"] else "fails"
        lines.append(f"  incidence: condition {inc['condition']} {state} (residual {inc['residual']:.3g})")
    der = report.get("derivatives")
    if der is not None and "error" in der:
        lines.append(f"  derivatives: {der['error']}")
    elif der is not None:
        for k in range(1, der["order"] + 1):
            mark = "~ 0" if der["vanishing"][k - 1] else "!= 0"
            lines.append(f"  chi^({k}) = {der['values'][k]: .6g} +- {der['errors'][k]:.3g}  {mark}")
    lines.append(f"  verdict: {report['verdict']}")
    return "\n".join(lines)


def _guard(fn, *args):
    """Run one job; input problems become a degenerate report."""
    try:
        return fn(*args)
    except (KokotsakisError, ValueError, OSError) as exc:
        return {"error": f"{type(exc).__name__}: {exc}", "verdict": "degenerate"}, EXIT_DEGENERATE


def _check_job(path, tol, order):
    return _guard(lambda: check_mesh(_read(path), tol, order))


def _run_batch(job, paths, args, jobs):
    if jobs > 1 and len(paths) > 1 and "-" not in paths:
        with ProcessPoolExecutor(jobs) as pool:
            return list(pool.map(job, paths, *([a] * len(paths) for a in args)))
    return [job(p, *args) for p in paths]


def _emit(paths, results, as_json, formatter, out_dir, suffix):
    code = 0
    records = []
    for path, (report, rc) in zip(paths, results):
        code = max(code, rc)
        records.append({"input": path, **report})
        if "error" in report:
            print(f"{path}: {report['error']}", file=sys.stderr)
        elif not as_json:
            print(formatter(path, report))
        if out_dir is not None and "error" not in report:
            stem = "stdin" if path == "-" else Path(path).stem
            write_atomic(Path(out_dir) / f"{stem}{suffix}", _dump(report) + "\n")
    if as_json:
        print(_dump(records[0] if len(records) == 1 else records))
    return code


def cmd_check(args):
    results = _run_batch(_check_job, args.inputs, (args.tol, args.order), args.jobs)
    return _emit(args.inputs, results, args.json, _format_check, args.out, ".check.json")


# ------------------------------------------------------------------ certify


def certify_document(data, samples=ang.SAMPLES, threshold=ang.THRESHOLD, mode="auto"):
    doc = ang.load_angles(data)
    if mode == "exact" and doc.exact is None:
        raise ValueError("document carries no half_tangents for the exact path")
    use_exact = doc.exact is not None and mode != "float"
    target = doc.exact if use_exact else doc.angles
    if target.n != 4:
        raise ValueError("certification needs four vertices")
    cert = ang.flex_certificate(target, samples=samples, threshold=threshold)
    report = cert.to_dict()
    code = {"flexible": EXIT_FLEXIBLE, "rigid": EXIT_RIGID}.get(cert.verdict, EXIT_DEGENERATE)
    return report, code


def _format_certify(name, report):
    kind = "exact" if report["exact"] else f"threshold {report['threshold']:g}"
    valid = sum(s["value"] is not None for s in report["samples"])
    return (
        f"{name}: {report['verdict']} ({kind}); {valid} valid samples, "
        f"max normalized resultant {report['max_normalized_resultant']:.3g}, "
        f"{len(report['fallbacks'])} normalization fallbacks"
    )


def _certify_job(path, samples, threshold, mode):
    return _guard(lambda: certify_document(_read(path), samples, threshold, mode))


def cmd_certify(args):
    mode = "exact" if args.exact else ("float" if args.float else "auto")
    threshold = args.tol if args.tol is not None else ang.THRESHOLD
    results = _run_batch(_certify_job, args.inputs, (tuple(args.samples), threshold, mode), args.jobs)
    return _emit(args.inputs, results, args.json, _format_certify, args.out, ".certificate.json")


# ----------------------------------------------------------------- simulate


def cmd_simulate(args):
    try:
        mesh = load_mesh(_read(args.input))
    except (KokotsakisError, OSError) as exc:
        print(f"{args.input}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    if args.duration == 0 or args.frames <= 1:
        times = [0.0]
    else:
        times = np.linspace(0.0, args.duration, args.frames).tolist()
    try:
        traj = integrate_flow(mesh, times[-1], tol=args.tol, t_eval=times)
    except (StepFailure, KokotsakisError) as exc:
        print(f"simulation failed at t = 0: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    out = Path(args.out)
    for k, state in enumerate(traj.states):
        write_atomic(out / f"frame_{k:06d}.obj", mesh_to_obj(state.mesh, f"t = {state.time!r}"))
    write_atomic(out / "monitor.csv", trajectory_csv(traj))
    chis = traj.chis
    summary = {
        "frames": len(traj.states),
        "t_end": float(traj.final.time),
        "max_chi_deviation": float(np.abs(chis - 1.0).max()),
        "truncated": traj.truncated,
        "reason": traj.reason,
        "steps": traj.steps,
        "rejected_steps": traj.rejected,
    }
    if traj.truncated:
        print(f"trajectory truncated: {traj.reason}", file=sys.stderr)
    if args.json:
        print(_dump(summary))
    else:
        print(
            f"wrote {summary['frames']} frames to {out}; t_end = {summary['t_end']:.6g}, "
            f"max |chi - 1| = {summary['max_chi_deviation']:.3g}"
        )
    return EXIT_FLEXIBLE


# ----------------------------------------------------------------- generate


def generate_family(family, seed, base="voss", flips=None):
    """Deterministic ``(angles_bytes, mesh_bytes)`` for one family draw."""
    rng = np.random.default_rng(seed)
    # some draws admit no real dihedrals; keep drawing from the same stream
    for draw in range(GENERATE_DRAWS):
        exact = ang.random_exact_family(family, rng, base=base, flips=flips)
        angles = exact.to_angle_set()
        try:
            mesh, omega1 = ang.find_realization(angles, rng)
            break
        except ang.NoRealRealization:
            continue
    else:
        raise ang.NoRealRealization(f"none of {GENERATE_DRAWS} draws has a real realization")
    relations = ang.relation_residuals(angles, ang.family_relations(family, base=base, flips=flips))
    meta = {"family": family, "seed": seed, "draw": draw, "relations": relations}
    if family == "sign_flip":
        meta["base"] = base
        meta["flips"] = list(flips) if flips is not None else list(ang.edge_face_flips(4))
    mesh_meta = dict(meta, omega1=omega1, omega=mesh.meta.get("omega"))
    return ang.save_angles(exact, meta), save_mesh(mesh, mesh_meta)


def cmd_generate(args):
    try:
        angles_doc, mesh_doc = generate_family(args.family, args.seed, args.base, args.flip)
    except KokotsakisError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    if args.out is None:
        sys.stdout.write(mesh_doc.decode("utf-8"))
    else:
        out = Path(args.out)
        write_atomic(out / f"{args.family}_{args.seed}.mesh.json", mesh_doc)
        write_atomic(out / f"{args.family}_{args.seed}.angles.json", angles_doc)
        if not args.json:
            print(f"wrote {args.family}_{args.seed}.mesh.json and .angles.json to {out}")
    if args.json and args.out is not None:
        print(_dump({"mesh": json.loads(mesh_doc), "angles": json.loads(angles_doc)}))
    return EXIT_FLEXIBLE


# ------------------------------------------------------------------ parser


def build_parser():
    p = argparse.ArgumentParser(prog="kokotsakis", description="Flexibility of Kokotsakis meshes.")
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("check", help="infinitesimal and higher-order flexibility of mesh documents")
    c.add_argument("inputs", nargs="+", help="mesh JSON files, or - for stdin")
    c.add_argument("--tol", type=_positive, default=1e-8, help="tolerance on |chi - 1|")
    c.add_argument("--order", type=int, default=6, metavar="K", help="highest derivative of chi to test")
    c.add_argument("--json", action="store_true")
    c.add_argument("--out", metavar="DIR")
    c.add_argument("--jobs", type=int, default=1)
    c.set_defaults(func=cmd_check)

    s = sub.add_parser("simulate", help="integrate the flexion flow and write OBJ frames")
    s.add_argument("input")
    s.add_argument("--duration", type=float, default=1.0)
    s.add_argument("--frames", type=int, default=11)
    s.add_argument("--tol", type=_positive, default=1e-9, help="integrator tolerance")
    s.add_argument("--out", metavar="DIR", required=True)
    s.add_argument("--json", action="store_true")
    s.set_defaults(func=cmd_simulate)

    r = sub.add_parser("certify", help="angle-space flexibility certificate of a quadrangle")
    r.add_argument("inputs", nargs="+", help="angles JSON files, or - for stdin")
    r.add_argument("--samples", type=parse_samples, default=range(-50, 51), metavar="LO..HI")
    r.add_argument("--tol", type=_positive, default=None, help="verdict threshold (float path)")
    mode = r.add_mutually_exclusive_group()
    mode.add_argument("--exact", action="store_true", help="require the rational path")
    mode.add_argument("--float", action="store_true", help="ignore half tangents; use floats")
    r.add_argument("--json", action="store_true")
    r.add_argument("--out", metavar="DIR")
    r.add_argument("--jobs", type=int, default=1)
    r.set_defaults(func=cmd_certify)

    g = sub.add_parser("generate", help="seeded mesh and angles from a flexible family")
    g.add_argument("family", choices=ang.FAMILIES)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--base", default="voss", choices=[f for f in ang.FAMILIES if f != "sign_flip"])
    g.add_argument("--flip", nargs="+", metavar="LABEL", help="wing labels to reverse, e.g. w4 v1")
    g.add_argument("--out", metavar="DIR", help="directory for both documents (default: mesh to stdout)")
    g.add_argument("--json", action="store_true")
    g.set_defaults(func=cmd_generate)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except BrokenPipeError:
        return EXIT_DEGENERATE


if __name__ == "__main__":
    sys.exit(main())

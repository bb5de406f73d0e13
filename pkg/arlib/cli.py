"""arlib command-line entry point

Usage:
    arlib validate grushin                       Sampled assumption checks
    arlib geodesic r4 --q 0.3 0 0 0 --smax 0.1   Normal extremal from Sigma as CSV
    arlib density r4 --q 0.3 0 0 0 --pipeline both
    arlib check-cd grushin --out results/grushin.json
    arlib report results/
"""

import argparse
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from arlib import __version__
from arlib.errors import (
    ArlibError,
    InsufficientTail,
    NoDivergence,
    OriginNotSingular,
    ReportError,
)
from arlib.geometry.cdcheck import (
    DEFAULT_K_GRID,
    fit_singularity,
    policy,
    sample_curve,
    verdict,
)
from arlib.geometry.disintegration import (
    Pipeline,
    closed_form_jet,
    density_profile,
    jet_difference,
    numeric_taylor_jet,
    profile_log_second_derivative,
)
from arlib.geometry.hamiltonian import TOL, exp_from_surface, hamiltonian_value
from arlib.geometry.structure import (
    POINTS_PER_AXIS,
    check_structure,
    detect_step_2d,
    load_structure,
    validate_structure,
)
from arlib.utils.io import atomic_write, dumps_json, format_csv, write_csv, write_json
from arlib.utils.log import log, set_verbosity

__all__ = ["RunConfig", "build_parser", "run", "main", "EXIT_OK", "EXIT_ERROR", "EXIT_INCONCLUSIVE", "EXIT_USAGE"]

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_INCONCLUSIVE = 2
EXIT_USAGE = 64


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


@dataclass(frozen=True)
class RunConfig:
    command: str
    structure: str | None = None
    options: dict = field(default_factory=dict)
    out: str | None = None
    verbosity: int = 0
    seed: int = 0

    @classmethod
    def from_args(cls, args):
        options = {
            k: v for k, v in vars(args).items() if k not in ("command", "structure", "out", "verbose", "seed")
        }
        if args.seed < 0:
            raise UsageError("--seed must be a non-negative integer")
        return cls(
            command=args.command,
            structure=getattr(args, "structure", None),
            options=options,
            out=getattr(args, "out", None),
            verbosity=args.verbose,
            seed=args.seed,
        )


def _positive(text):
    value = float(text)
    if not value > 0:
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text!r}")
    return value


def _xgrid(text):
    try:
        a, b, k = text.split(":")
        a, b, k = float(a), float(b), int(k)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a:b:k, got {text!r}") from None
    if not (a > 0 and b > 0 and k >= 2):
        raise argparse.ArgumentTypeError(f"need a, b > 0 and k >= 2, got {text!r}")
    return np.geomspace(a, b, k)


def _profile(text):
    try:
        a, b, k = text.split(":")
        a, b, k = float(a), float(b), int(k)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected smin:smax:k, got {text!r}") from None
    if not (a < 0 < b and k >= 5):
        raise argparse.ArgumentTypeError(f"need smin < 0 < smax and k >= 5, got {text!r}")
    return np.linspace(a, b, k)


def _k_list(text):
    try:
        return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def build_parser():
    parser = _Parser(prog="arlib", description="Curvature-dimension disproofs for almost-Riemannian structures")
    parser.add_argument("--version", action="version", version=f"arlib {__version__}")
    parser.add_argument("-v", "--verbose", action="count", default=0, help="-v info, -vv debug, -vvv trace")
    parser.add_argument("--seed", type=int, default=0, help="seed for randomised sampling (default: 0)")
    subparsers = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = subparsers.add_parser("validate", help="Run the sampled structure checks")
    p.add_argument("structure", help="structure file or bundled name")
    p.add_argument("--points", type=int, default=POINTS_PER_AXIS, help="sampling points per axis")

    p = subparsers.add_parser("geodesic", help="Integrate G(., q) and emit CSV")
    p.add_argument("structure")
    p.add_argument("--q", type=float, nargs="+", required=True, help="base point on Sigma")
    p.add_argument("--smax", type=_positive, default=0.1)
    p.add_argument("--tol", type=_positive, default=TOL)
    p.add_argument("--samples", type=int, default=21)
    p.add_argument("--out", "-o", help="CSV path (default: stdout)")

    p = subparsers.add_parser("density", help="Density jet at q as JSON, optional profile CSV")
    p.add_argument("structure")
    p.add_argument("--q", type=float, nargs="+", required=True)
    p.add_argument("--pipeline", choices=["closed", "taylor", "both"], default="closed")
    p.add_argument("--profile", type=_profile, help="smin:smax:k uniform s-grid")
    p.add_argument("--profile-out", help="profile CSV path (default: <out>.profile.csv)")
    p.add_argument("--out", "-o", help="JSON path (default: stdout)")

    p = subparsers.add_parser("check-cd", help="Sample, fit and certify CD(K,N) failure")
    p.add_argument("structure")
    p.add_argument("--xgrid", type=_xgrid, help="a:b:k geometric grid")
    p.add_argument("--K", type=_k_list, default=DEFAULT_K_GRID, help="comma-separated K values")
    p.add_argument("--pipeline", choices=["closed", "taylor"], default="closed")
    p.add_argument("--out", "-o", help="report JSON path")

    p = subparsers.add_parser("report", help="Summarise check-cd reports in a directory")
    p.add_argument("results", help="directory of check-cd JSON reports")
    p.add_argument("--csv", help="curve CSV path (default: <results>/curves.csv)")
    return parser


def _emit(text, path=None):
    if path is None:
        sys.stdout.write(text)
    else:
        atomic_write(path, text)
        log.info("wrote %s", path)


def _base_point(s, coords):
    if len(coords) != s.dim:
        raise UsageError(f"--q needs {s.dim} coordinates for {s.name}, got {len(coords)}")
    return np.array(coords, dtype=float)


def cmd_validate(cfg):
    s = load_structure(cfg.structure, validate=False)
    diagnostics = check_structure(s, points_per_axis=cfg.options["points"], seed=cfg.seed)
    print(f"{s.name}: n = {s.n}, regularity = {s.regularity}")
    if s.n == 1:
        try:
            print(f"step: {detect_step_2d(s)}")
        except ArlibError as e:
            print(f"step: undetected ({e})")
    for d in diagnostics:
        print(f"  {d}")
    validate_structure(s, diagnostics)
    print("valid")
    return EXIT_OK


def cmd_geodesic(cfg):
    s = load_structure(cfg.structure, seed=cfg.seed, tolerate=(OriginNotSingular,))
    q = _base_point(s, cfg.options["q"])
    if cfg.options["samples"] < 2:
        raise UsageError("--samples must be >= 2")
    arc = exp_from_surface(s, q, cfg.options["smax"], cfg.options["tol"])
    s_values = np.linspace(-arc.s_max, arc.s_max, cfg.options["samples"])
    names = ["x"] + [f"z{i}" for i in range(1, s.dim)]
    header = ["s"] + names + ["p" + c for c in names] + ["2H"]
    rows = []
    for sv in s_values:
        st = arc(sv)
        rows.append([sv, *st.point, *st.covector, 2.0 * hamiltonian_value(s, st)])
    _emit(format_csv(header, rows), cfg.out)
    return EXIT_OK


def _profile_path(cfg):
    """Profile CSV path: --profile-out, else next to --out; stdout only carries the JSON."""
    if cfg.options["profile_out"]:
        return cfg.options["profile_out"]
    if cfg.out is None:
        raise UsageError("--profile needs --profile-out or --out")
    out = Path(cfg.out)
    return str(out.with_name(out.stem + ".profile.csv"))


def cmd_density(cfg):
    s = load_structure(cfg.structure, seed=cfg.seed, tolerate=(OriginNotSingular,))
    q = _base_point(s, cfg.options["q"])
    choice = cfg.options["pipeline"]
    grid = cfg.options["profile"]
    profile_out = _profile_path(cfg) if grid is not None else None

    jets = {}
    if choice in ("closed", "both"):
        jets["closed"] = closed_form_jet(s, q)
    if choice in ("taylor", "both"):
        jets["taylor"] = numeric_taylor_jet(s, q)
    payload = {
        "arlib": __version__,
        "seed": cfg.seed,
        "structure": s.name,
        "q": q,
        "jets": {k: jet.to_dict() for k, jet in jets.items()},
    }
    if len(jets) == 2:
        payload["difference"] = jet_difference(jets["closed"], jets["taylor"])

    if grid is not None:
        profile = density_profile(s, q, grid)
        try:
            payload["profile_log_second"] = profile_log_second_derivative(profile)
        except ValueError as e:
            log.warning("no finite-difference value: %s", e)
        write_csv(profile_out, ["s", "h"], profile)
        log.info("wrote %s", profile_out)
    _emit(dumps_json(payload), cfg.out)
    return EXIT_OK


def cmd_check_cd(cfg):
    s = load_structure(cfg.structure, validate=False)
    diagnostics = check_structure(s, seed=cfg.seed)
    validate_structure(s, diagnostics, tolerate=(OriginNotSingular,))
    pipeline = Pipeline(cfg.options["pipeline"])
    K_grid = cfg.options["K"]

    curve = sample_curve(s, cfg.options["xgrid"], pipeline)
    report = {
        "arlib": __version__,
        "seed": cfg.seed,
        "structure": s.name,
        "regularity": str(s.regularity),
        "pipeline": pipeline.value,
        "samples": [[x, v] for x, v in curve],
        "failures": [[x, reason] for x, reason in curve.failures],
        "policy": policy(),
        "diagnostics": [d.to_dict() for d in diagnostics],
    }

    code = EXIT_OK
    try:
        result = verdict(s, fit_singularity(curve), K_grid)
    except NoDivergence as e:
        result = e.verdict
        code = EXIT_INCONCLUSIVE
    except InsufficientTail as e:
        report.update(
            fit=None,
            verdict="INCONCLUSIVE",
            certified=False,
            statement="inconclusive: the sampled curve does not certify divergence",
            reason=str(e),
            K_grid=list(K_grid),
            per_K=[],
        )
        result = None
        code = EXIT_INCONCLUSIVE
    if result is not None:
        report.update(result.to_dict())
        report["structure"] = s.name

    if cfg.out:
        write_json(cfg.out, report)
        log.info("wrote %s", cfg.out)
    fit = report["fit"]
    if fit is None:
        print(f"{s.name}: {report['verdict']} ({report['reason']})")
    else:
        print(f"{s.name}: order {fit['order']:.4g}, coeff {fit['coeff']:.4g}, verdict {report['verdict']}")
    if code == EXIT_OK:
        print(report["statement"])
    return code


def _load_report(path):
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as e:
        raise ReportError(f"{path}: unreadable report: {e}") from e
    if not isinstance(data, dict) or not {"structure", "verdict", "samples"} <= set(data):
        raise ReportError(f"{path}: not a check-cd report")
    return data


def _sig(value):
    return "-" if value is None else f"{value:.4g}"


def cmd_report(cfg):
    results = Path(cfg.options["results"])
    if not results.is_dir():
        raise ReportError(f"{results} is not a directory")
    paths = sorted(p for p in results.glob("*.json"))
    if not paths:
        raise ReportError(f"no check-cd reports (*.json) in {results}")

    reports = [(p, _load_report(p)) for p in paths]
    header = f"{'file':24s} {'structure':20s} {'order':>10s} {'coeff':>10s} {'r2':>8s}  verdict"
    print(header)
    print("-" * len(header))
    rows = []
    for path, data in reports:
        fit = data.get("fit") or {}
        print(
            f"{path.name:24s} {data['structure']:20s} {_sig(fit.get('order')):>10s} "
            f"{_sig(fit.get('coeff')):>10s} {_sig(fit.get('r2')):>8s}  {data['verdict']}"
        )
        rows.extend([data["structure"], x, v] for x, v in data["samples"])

    csv_path = cfg.options["csv"] or results / "curves.csv"
    write_csv(csv_path, ["structure", "x", "value"], rows)
    print(f"curves: {csv_path}")
    return EXIT_OK


COMMANDS = {
    "validate": cmd_validate,
    "geodesic": cmd_geodesic,
    "density": cmd_density,
    "check-cd": cmd_check_cd,
    "report": cmd_report,
}


# options whose values may start with '-' (smin:smax:k, K lists)
_DASH_VALUED = ("--profile", "--K")


def _attach_dash_values(argv):
    """Rewrite ``--K -10,0`` as ``--K=-10,0`` so argparse does not read the value as a flag."""
    out = []
    tokens = iter(argv)
    for token in tokens:
        if token in _DASH_VALUED:
            value = next(tokens, None)
            if value is not None:
                out.append(f"{token}={value}")
                continue
        out.append(token)
    return out


def run(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(_attach_dash_values(sys.argv[1:] if argv is None else argv))
        if args.command is None:
            parser.print_help()
            return EXIT_USAGE
        cfg = RunConfig.from_args(args)
        set_verbosity(cfg.verbosity)
        return COMMANDS[cfg.command](cfg)
    except UsageError as e:
        print(e, file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else EXIT_OK
    except (ArlibError, OSError, ValueError) as e:
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        for d in getattr(e, "diagnostics", ()):
            print(f"  {d}", file=sys.stderr)
        return EXIT_ERROR


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()

"""Command-line front end.

``<orbifold>`` is a preset name (see ``list-presets``) or a path to a JSON
config file.

CSV columns:
  heat-coeffs  exponent, coefficient, provenance       (absolute coefficient of t^exponent)
  spectrum     eigenvalue, multiplicity
  fit          exponent, coefficient, uncertainty, provenance

Exit codes: 0 success, 1 computation failure, 2 config or group error,
3 DISAGREE or Inconclusive from ``detect``. ORBISPEC_THREADS caps the worker
threads used for spectra and trace sampling.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

from .catalog import get_preset, list_presets
from .config import OrbifoldConfig
from .errors import ConfigError, GroupError, Inconclusive, OrbispecError
from .heat_fit import FitConfig, compare_analytic_vs_fitted, fit_spectrum, spectral_verdict, spectrum_for_fit
from .heat_invariants import asymptotic_series
from .isometry import GroupAction
from .spectrum import flat_orbifold_spectrum, sphere_orbifold_spectrum
from .stratification import enumerate_strata, is_locally_orientable

EXIT_FAILURE = 1
EXIT_CONFIG = 2
EXIT_DISAGREE = 3


def load_orbifold(ref: str) -> tuple[GroupAction, FitConfig]:
    path = Path(ref)
    if path.suffix == ".json" or path.exists():
        if not path.exists():
            raise ConfigError(f"no such config file: {ref}")
        cfg = OrbifoldConfig.load(path)
        return cfg.build(), cfg.fit_config()
    try:
        preset = get_preset(ref)
    except KeyError as exc:
        raise ConfigError(str(exc.args[0])) from None
    return preset.action, FitConfig()


def _write(text: str, path: str | None) -> None:
    if path:
        Path(path).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_list_presets(args) -> int:
    rows = [("name", "n", "kind", "|G|", "loc. orientable", "singular strata (dim, |iso|, count)")]
    for p in list_presets():
        a = p.action
        rows.append((p.name, str(a.geometry.dimension), p.kind, str(a.order),
                     "yes" if p.locally_orientable else "no",
                     " ".join(f"({d},{o},{c})" for d, o, c in p.strata) or "none"))
    widths = [max(len(r[i]) for r in rows) for i in range(len(rows[0]))]
    for r in rows:
        print("  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip())
    return 0


def cmd_strata(args) -> int:
    action, _ = load_orbifold(args.orbifold)
    report = enumerate_strata(action)
    print(report.to_text())
    if args.json:
        Path(args.json).write_text(report.to_json())
    return 0


def cmd_heat_coeffs(args) -> int:
    action, _ = load_orbifold(args.orbifold)
    series = asymptotic_series(action, args.jmax)
    _write(series.to_csv(), args.output)
    return 0


def cmd_spectrum(args) -> int:
    action, fit_cfg = load_orbifold(args.orbifold)
    if action.geometry.is_torus:
        cutoff = args.cutoff if args.cutoff is not None else fit_cfg.cutoff
        if cutoff is None:
            raise ConfigError("flat spectra need --cutoff")
        spec = flat_orbifold_spectrum(action, cutoff)
    else:
        l_max = args.lmax if args.lmax is not None else fit_cfg.l_max
        if l_max is None and args.cutoff is not None:
            # largest degree with l(l+1)/r^2 <= cutoff
            l_max = 0
            r2 = action.geometry.radius**2
            while (l_max + 1) * (l_max + 2) / r2 <= args.cutoff:
                l_max += 1
        if l_max is None:
            raise ConfigError("sphere spectra need --lmax or --cutoff")
        spec = sphere_orbifold_spectrum(action, l_max)
    _write(spec.to_csv(), args.output)
    return 0


def _fit_config(base: FitConfig, args) -> FitConfig:
    over = {}
    if getattr(args, "jmax", None) is not None:
        over["j_max"] = args.jmax
    if getattr(args, "tmin", None) is not None:
        over["t_min"] = args.tmin
    return replace(base, **over) if over else base


def cmd_fit(args) -> int:
    action, base = load_orbifold(args.orbifold)
    cfg = _fit_config(base, args)
    fit = fit_spectrum(spectrum_for_fit(action, cfg), cfg)
    _write(fit.to_csv(), args.output)
    analytic = asymptotic_series(action, cfg.order(action.geometry.dimension))
    report = compare_analytic_vs_fitted(analytic, fit, flat=action.geometry.is_torus)
    print(report.to_text(), file=sys.stderr if not args.output else sys.stdout)
    return 0


def cmd_detect(args) -> int:
    action, base = load_orbifold(args.orbifold)
    cfg = _fit_config(base, args)
    truth, _ = is_locally_orientable(action)
    yn = {True: "yes", False: "no"}
    try:
        verdict = spectral_verdict(spectrum_for_fit(action, cfg), config=cfg)
    except Inconclusive as exc:
        print(f"locally orientable: inconclusive ({exc}; group-truth: {yn[truth]}; DISAGREE)")
        return EXIT_DISAGREE
    agree = verdict.locally_orientable == truth
    print(f"locally orientable: {yn[verdict.locally_orientable]} (spectral margin {verdict.margin:.3e}; "
          f"group-truth: {yn[truth]}; {'AGREE' if agree else 'DISAGREE'})")
    return 0 if agree else EXIT_DISAGREE


def cmd_verify_all(args) -> int:
    from .verification import run_all

    results = run_all()
    for r in results:
        print(r.line())
    failed = [r.number for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} criteria passed")
    return EXIT_FAILURE if failed else 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="orbispec", description=__doc__,
                                formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = p.add_subparsers(dest="command", required=True)

    sub.add_parser("list-presets", help="table of catalog orbifolds").set_defaults(func=cmd_list_presets)

    s = sub.add_parser("strata", help="singular stratification")
    s.add_argument("orbifold")
    s.add_argument("--json", metavar="FILE", help="also write the report as JSON")
    s.set_defaults(func=cmd_strata)

    s = sub.add_parser("heat-coeffs", help="analytic heat coefficients (CSV)")
    s.add_argument("orbifold")
    s.add_argument("--jmax", type=int, default=None, help="highest j in t^(j/2) (default n + 4)")
    s.add_argument("--output", "-o", metavar="FILE")
    s.set_defaults(func=cmd_heat_coeffs)

    s = sub.add_parser("spectrum", help="exact spectrum (CSV)")
    s.add_argument("orbifold")
    s.add_argument("--cutoff", type=float, default=None, help="largest eigenvalue kept")
    s.add_argument("--lmax", type=int, default=None, help="sphere only: largest harmonic degree")
    s.add_argument("--output", "-o", metavar="FILE")
    s.set_defaults(func=cmd_spectrum)

    for name, func, helptext in (("fit", cmd_fit, "fitted heat coefficients (CSV) and comparison table"),
                                 ("detect", cmd_detect, "spectral local orientability verdict")):
        s = sub.add_parser(name, help=helptext)
        s.add_argument("orbifold")
        s.add_argument("--jmax", type=int, default=None)
        s.add_argument("--tmin", type=float, default=None)
        if name == "fit":
            s.add_argument("--output", "-o", metavar="FILE")
        s.set_defaults(func=func)

    sub.add_parser("verify-all", help="run the acceptance matrix").set_defaults(func=cmd_verify_all)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, GroupError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OrbispecError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())

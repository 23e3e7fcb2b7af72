"""Refit each preset with t_min halved and report coefficient shifts.

    python3 scripts/fit_stability.py [preset ...]

A shift larger than the first fit's uncertainty is flagged. Three-dimensional
presets need a much larger cutoff at the halved grid, so expect them to take
a while (or hit ShellOverflow).
"""

import argparse

from orbispec.catalog import get_preset, list_presets
from orbispec.errors import OrbispecError
from orbispec.heat_fit import FitConfig, fit_action


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("presets", nargs="*")
    args = parser.parse_args()
    presets = [get_preset(n) for n in args.presets] if args.presets else list_presets()
    for p in presets:
        action = p.action
        cfg = FitConfig().resolved(action.geometry)
        first = fit_action(action, cfg)
        try:
            second = fit_action(action, cfg.halved())
        except OrbispecError as exc:
            print(f"{p.name:20s} skipped: {type(exc).__name__}: {exc}")
            continue
        worst = max(abs(c - second.series.coefficients[j]) / first.uncertainties[j]
                    for j, c in first.series.coefficients.items())
        print(f"{p.name:20s} max |shift| / sigma = {worst:.3f}  {'ok' if worst <= 1 else 'UNSTABLE'}")


if __name__ == "__main__":
    main()

"""Convergence of the weighted strain error under uniform refinement.

By default runs the quadratic axial field plus a few fields that exercise
the radial and shear couplings, for each requested stabiliser.
"""

import argparse
from pathlib import Path

from axivem.assembly import write_csv
from axivem.element import Formulation
from axivem.verify import ManufacturedField, convergence_study

FIELDS = {
    "quadratic": ("0", "z**2/100"),
    "radial_quadratic": ("r**2/100", "0"),
    "shear_mixed": ("z**2/100", "r*z/100"),
    "trig": ("sin(r)*cos(z)/100", "cos(r)*sin(z)/100"),
}


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", type=Path, default=Path("results/convergence"))
    ap.add_argument("--fields", nargs="+", default=list(FIELDS), choices=list(FIELDS))
    ap.add_argument("--stabilizers", nargs="+", default=["linear", "constant_strain"])
    ap.add_argument("--max-level", type=int, default=16)
    args = ap.parse_args(argv)
    args.out.mkdir(parents=True, exist_ok=True)

    levels = []
    n = 4
    while n <= args.max_level:
        levels.append((n, n))
        n *= 2
    rows, rates = [], []
    for modes in args.stabilizers:
        form = Formulation(stabilized_modes=modes)
        for name in args.fields:
            study = convergence_study(ManufacturedField(*FIELDS[name], name=name),
                                      levels=levels, formulation=form)
            for div, h, err in study.rows():
                rows.append((modes, name, div, h, err))
            rates.append((modes, name, study.rate_label(), "yes" if study.monotone else "no"))
            print(f"{modes:<16} {name:<17} rate={study.rate_label():>7} "
                  f"errors={', '.join(f'{e:.3e}' for e in study.errors)}")
    write_csv(args.out / "convergence.csv", ("stabilizer", "field", "divisions", "h", "error"), rows)
    write_csv(args.out / "rate.csv", ("stabilizer", "field", "rate", "monotone"), rates)
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()

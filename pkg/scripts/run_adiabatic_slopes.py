#!/usr/bin/env python3
"""Adiabatic-theory convergence: invariance, spectra, and propagation.

Produces the three headline slope measurements (projection commutator,
band-spectrum Hausdorff distance, Egorov error) into out/adiabatic/.
"""

import json
import os
import sys

from sphere_sapt.cli import main

OUT = os.environ.get("SPHERE_SAPT_OUT", "out/adiabatic")


def run():
    rc = main(["invariance-slopes", "--lambda", "0.2", "--band", "0.5",
               "--two-j", "10,20,40,80", "--out", OUT])
    rc |= main(["bands", "--lambda", "0.2", "--band", "0.5",
                "--two-j", "10,20,40,80", "--out", OUT])
    rc |= main(["egorov", "--lambda", "0.2", "--band", "0.5",
                "--observable", "n1", "--time", "1.0",
                "--two-j", "10,20,40,80", "--out", OUT])
    for name in ("invariance-slopes", "bands", "egorov"):
        with open(os.path.join(OUT, f"{name}.json")) as fh:
            rep = json.load(fh)
        fits = rep.get("fits") or {"error": rep.get("fit")}
        print(name, {k: round(v["slope"], 3) for k, v in fits.items() if v})
    return rc


if __name__ == "__main__":
    sys.exit(run())

#!/usr/bin/env python3
"""Walk causal knowledge along the three-subject chain and around the cycle.

Usage: python3 scripts/demo_knowledge_transport.py
"""

from pathlib import Path

import numpy as np

from cknet import (
    Intervention,
    generate_ck,
    mixture_distance,
    observational_measure,
)
from cknet.config import load_config
from cknet.rck import PathQuery, relative_measure, rck_family

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


def main() -> None:
    sheaf, _ = load_config(str(FIXTURES / "chain_abc.json"))
    chi_a = observational_measure(sheaf.node_stalks["A"])
    print("subject A observational covariance:")
    print(np.array_str(chi_a.components[0].cov, precision=4))

    for target, edges in (("B", ("X",)), ("C", ("X", "Y"))):
        out = relative_measure(sheaf, PathQuery("A", target, edges), chi_a)
        print(f"\nA's knowledge as seen from {target} (via {','.join(edges)}):")
        print(np.array_str(out.components[0].cov, precision=4))

    ck = generate_ck(
        sheaf.node_stalks["A"],
        [Intervention.hard({"A2": 1.0}), Intervention.soft({("A2", "A1"): 0.0})],
    )
    family = rck_family(sheaf, PathQuery("A", "C", ("X", "Y")), ck)
    print(f"\ntransported {len(family)} measures of A's knowledge to C")

    cycle, _ = load_config(str(FIXTURES / "cycle4.json"))
    chi_p = observational_measure(cycle.node_stalks["P"])
    upper = relative_measure(cycle, PathQuery("P", "R", ("e1", "e2")), chi_p)
    lower = relative_measure(cycle, PathQuery("P", "R", ("e4", "e3")), chi_p)
    gap = mixture_distance(upper, lower)
    print(f"\ncycle fixture: the two P->R paths disagree by {gap:.6f}")
    print("(same source knowledge, different routes, different conclusions)")


if __name__ == "__main__":
    main()

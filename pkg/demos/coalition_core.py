"""Coalition games of a three-agent market and their cores.

A stronger top agent makes the grand coalition stable; at lambda_3 = 4 the
pair coalitions exactly exhaust it.

Run: python3 demos/coalition_core.py
"""

import numpy as np

from partition_opt import build_game, core_check, uniform_grid_multiplicative
from partition_opt.games import members


def describe(top):
    inst = uniform_grid_multiplicative(600, [1, 2, top], [1 / 3, 1 / 3, 1 / 3])
    game = build_game(inst)
    cert = core_check(game)
    print(f"lambda = (1, 2, {top}): game {np.round(game.in_cardinality_order(), 4)}")
    print(f"  core {cert.status.value}{' (on the boundary)' if cert.boundary else ''}")
    if cert.allocation is not None:
        print(f"  allocation {np.round(cert.allocation, 4)}")
    for mask, weight in cert.violating_collection:
        print(f"  blocking weight {weight:.3f} on coalition {[i + 1 for i in members(mask)]}")


for top in (3, 4, 5):
    describe(top)

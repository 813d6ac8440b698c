"""Two agents on a uniform grid: prices, cells and the split of value.

Run: python3 demos/two_agent_prices.py
"""

import numpy as np

from partition_opt import random_positive, solve_dual, transportation_lp, value_report


def main():
    for regime in ("S", "US", "OS"):
        inst = random_positive(200, 2, capacities=regime, seed=7)
        rep = solve_dual(inst)
        values = value_report(inst, rep.partition, rep.price)
        primal = transportation_lp(inst).objective
        print(f"{inst.regime.tag.value:>15}: prices {np.round(rep.price.prices, 4)}"
              f"  dual {rep.dual_value:.6f}  primal {primal:.6f}")
        for i in range(inst.n_agents):
            print(f"{'':17}agent {i}: mass {values.served[i]:.4f}"
                  f"  profit {values.agent_profits[i]:.4f}  surplus {values.consumer_surpluses[i]:.4f}")


if __name__ == "__main__":
    main()

"""Multiplicative wisdoms: closed-form band values against the generic solver.

Run: python3 demos/multiplicative_bands.py
"""

from partition_opt import individual_values, solve_dual, uniform_grid_multiplicative
from partition_opt.closed_form import closed_form_solution, model_from_instance

inst = uniform_grid_multiplicative(10_000, [1, 2], [0.5, 0.5])
model, lambdas = model_from_instance(inst)
closed = closed_form_solution(model, lambdas, inst.capacities)
generic = individual_values(inst, solve_dual(inst).partition)

print("band edges (mass):", closed.breakpoints)
print("closed form values:", closed.individual_values)
print("generic solver:    ", generic)
print("max difference:    ", abs(closed.individual_values - generic).max())

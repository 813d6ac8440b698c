"""Near-extremal instances for the two monotonicity bounds.

Run: python3 demos/sharpness.py
"""

from partition_opt.monotonicity import (
    build_sharpness_new,
    build_sharpness_new1,
    demonstrate_new,
    demonstrate_new1,
)

case = build_sharpness_new(beta=3.0, s=2.5, top=4.0, bottom=2.5)
rep, ratio = demonstrate_new(case)
print(f"row grown past 3x: value ratio {ratio:.4f} (guaranteed >= 2, target < 2.5)")
print(f"  bound satisfied: {rep.satisfied}")

case = build_sharpness_new1(beta=1.5, amount=1.0, s=0.9)
rep, drop = demonstrate_new1(case)
print(f"row 1.5x plus a hat: value drop {drop:.4f} M (allowed up to 1, target > 0.9)")
print(f"  bound satisfied: {rep.satisfied}")

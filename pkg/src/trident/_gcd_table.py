"""Euclid step-count frequencies for nonzero uniform 32-bit pairs.

Generated by scripts/make_gcd_table.py; do not edit by hand.
"""

STEP_TABLE_PAIRS = 400000000
STEP_TABLE_SEED = 20020101
STEP_COUNTS = (
    0, 1, 22, 202, 1193, 5717,
    23836, 82497, 251413, 672184, 1598812, 3407365,
    6544430, 11374902, 17973992, 25906519, 34136902, 41197078,
    45628988, 46415449, 43411047, 37342723, 29562932, 21521598,
    14405679, 8863543, 5002703, 2590229, 1228159, 531232,
    209686, 75150, 24418, 7051, 1789, 455,
    83, 18, 3, 0, 0, 0,
)

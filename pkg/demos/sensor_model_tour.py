"""A tour of the count-sensor model.

The sensor is a column-stochastic confusion table: column w gives the
probability of each observed count when the true count is w.  The last row
aggregates every detection above the maximum count.  We build the synthetic
family used in the experiments and poke at its properties.
"""

import numpy as np

from swarmmap import sample_observation, synthesize_sensor_model

np.set_printoptions(precision=3, suppress=True)

# The reference sensor: counts up to 12, noise growing with the true count.
model = synthesize_sensor_model(12, 0.5, 0.1)
print("table shape (observations x true counts):", model.table.shape)
print("column sums:", model.table.sum(axis=0))

# Diagonal dominance fades as w grows: larger counts are harder to read.
print("\nP(o == w | w), the chance of reading the cell exactly right:")
print(np.diag(model.table))

# The overshoot row: probability of detecting *more* than 12 weeds.
print("\nP(overshoot | w):")
print(model.table[13])

# Sampling is reproducible given a seeded generator.
rng = np.random.default_rng(42)
draws = [sample_observation(model, 6, rng) for _ in range(20)]
print("\n20 observations of a cell with 6 weeds:", draws)

# Empirically the draws match the column.
rng = np.random.default_rng(7)
n = 50_000
counts = np.bincount(
    [sample_observation(model, 6, rng) for _ in range(n)], minlength=14
)
print("\nempirical vs table frequencies for w=6:")
print(np.stack([counts / n, model.table[:, 6]]))

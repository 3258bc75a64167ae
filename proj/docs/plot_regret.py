"""Plot mean cumulative regret (+/- 1 s.e.) per agent from a traces.csv."""
import sys

import matplotlib.pyplot as plt
import pandas as pd

path = sys.argv[1] if len(sys.argv) > 1 else "out/traces.csv"
out = sys.argv[2] if len(sys.argv) > 2 else "regret.png"
df = pd.read_csv(path, comment="#")
stats = df.groupby(["agent", "timestep"])["cum_regret"].agg(["mean", "sem"]).reset_index()
fig, ax = plt.subplots(figsize=(6, 4))
for agent, g in stats.groupby("agent"):
    ax.plot(g["timestep"], g["mean"], label=agent)
    ax.fill_between(g["timestep"], g["mean"] - g["sem"], g["mean"] + g["sem"], alpha=0.2)
ax.set_xlabel("timestep")
ax.set_ylabel("cumulative regret")
ax.legend()
fig.tight_layout()
fig.savefig(out, dpi=150)

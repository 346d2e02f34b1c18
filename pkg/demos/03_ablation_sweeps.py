# %% [markdown]
# # Sweeping window size, threshold and anchor strength
#
# The same grids the command-line `sweep` runs, done in-process. Each point
# is averaged over a few toy-model seeds.

# %%
import math

import numpy as np

from lead import LeadConfig, SwitchConfig, ToyTransformer, decode


def run(seed, **kw):
    sw = kw.pop("switch", {})
    cfg = LeadConfig(switch=SwitchConfig(**{"max_switches": 5, **sw}),
                     max_reasoning_steps=150, max_answer_steps=4, **kw)
    return decode(ToyTransformer(seed=seed), [], [1, 2], cfg).summary()


seeds = range(3)

# %% Persistence window: 0 switches freely, inf never leaves discrete decoding
for window in (0, 8, 32, 128, math.inf):
    latent = np.mean([run(s, switch={"window": window})["latent_steps"] for s in seeds])
    print(f"window={window!s:>4}: mean latent steps {latent:6.1f}")

# %% Threshold: dynamic versus fixed extremes
for label, sw in [("dynamic", {"window": 8}),
                  ("fixed 0", {"window": 0, "threshold_mode": "fixed", "initial_ref_entropy": 0.0}),
                  ("fixed inf", {"window": 0, "threshold_mode": "fixed", "initial_ref_entropy": math.inf})]:
    s = [run(k, switch=sw) for k in seeds]
    frac = np.mean([x["latent_steps"] / x["reasoning_length"] for x in s])
    print(f"{label:>9}: latent fraction {frac:.2f}")

# %% Anchor strength only changes the first embedding of each latent phase
for lam in (0.0, 0.2, 0.4, 0.6):
    s = [run(k, lam=lam, switch={"window": 4}) for k in seeds]
    print(f"lambda={lam:.1f}: injections {sum(x['injections'] for x in s):3d}, "
          f"mean H {np.mean([x['mean_entropy'] for x in s]):.3f}")

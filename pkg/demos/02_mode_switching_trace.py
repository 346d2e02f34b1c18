# %% [markdown]
# # Watching the controller switch modes
#
# Decode with the seeded toy transformer and print the per-step trace:
# entropy, the reference entropy it is compared against, the mode, and events.

# %%
from lead import LeadConfig, SwitchConfig, ToyTransformer, decode, entropy_summary

model = ToyTransformer(seed=7)
sp = model.specials
vision = [sp.vision_start, sp.image_pad, sp.vision_end]

# A short window makes switching visible in a 60-step toy run.
cfg = LeadConfig(switch=SwitchConfig(window=2, max_switches=5), max_reasoning_steps=60, max_answer_steps=8)
result = decode(model, vision, [1, 2, 3], cfg)

# %%
print(" step  H       H_ref   mode      event               inj  token")
for r in result.reasoning_trace:
    print(f"{r.step:5d}  {r.entropy:.3f}  {r.ref_entropy:.3f}  {r.mode.value:8s}  "
          f"{r.event.value:18s}  {'*' if r.injected else ' '}    {r.token}")

# %%
stats = entropy_summary(result)
print(f"\ntermination={result.termination}  latent steps={stats.latent_steps}  "
      f"transitions={stats.transitions}  mean H={stats.mean:.3f}")
print("answer tokens:", result.answer_tokens)

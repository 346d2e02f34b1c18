# %% [markdown]
# # Masking high-entropy steps
#
# The branch task makes one early, uncertain decision that the answer depends
# on. Masking the fed-back embedding of high-entropy steps segment by segment
# shows where the chain is fragile.

# %%
from lead import LeadConfig, decode, masking_ablation
from lead.tasks import ANSWER_A, BranchTaskModel, exact_match

model = BranchTaskModel(n_filler=9)
cfg = LeadConfig(max_answer_steps=3)
score = exact_match([ANSWER_A])
baseline = decode(model, [], [0], cfg)
print("reasoning:", baseline.reasoning_tokens, "answer:", baseline.answer_tokens)

# %%
for condition in ("mask_high_entropy", "mask_low_entropy", "mask_random"):
    deltas = [masking_ablation(model, [], [0], cfg, condition, seg, score, baseline=baseline).delta
              for seg in range(1, 6)]
    print(f"{condition:18s}", " ".join(f"{d:+.0f}" for d in deltas))

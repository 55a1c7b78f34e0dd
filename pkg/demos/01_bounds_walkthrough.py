"""
Error-gap bounds on exact joint distributions
=============================================

Walks through the executable inequalities in ``fairrep.metrics`` on small
finite joints, where every quantity is computed exactly instead of sampled.

Run with ``python demos/01_bounds_walkthrough.py``.
"""

# %%
import numpy as np

from fairrep import metrics as M

# %% [markdown]
# A joint whose predictor looks only at ``Y`` satisfies equalized odds by
# construction. Give the two groups different base rates and see what that
# costs.

# %%
joint = M.make_eo_joint(base_rates=(0.6, 0.4), group_mass=(0.5, 0.5), fpr=0.3, fnr=0.1)
rep = M.exact_report(joint)
print(f"base rates       {rep.base_rate0:.2f} / {rep.base_rate1:.2f}  (gap {rep.delta_br:.2f})")
print(f"group errors     {rep.err0:.2f} / {rep.err1:.2f}  (gap {rep.err_gap:.2f})")
print(f"BER              {rep.ber:.2f}")
print(f"DP gap, EO gap   {rep.dp_gap:.2f}, {rep.eo_gap:.2e}")

# %% [markdown]
# Under equalized odds the error gap is exactly the base-rate gap times
# |FPR - FNR|, and the demographic-parity gap can be no larger than the
# base-rate gap.

# %%
identity = rep.delta_br * abs(rep.fpr - rep.fnr)
print(f"err_gap = {rep.err_gap:.6f}, delta_br * |fpr - fnr| = {identity:.6f}")
for check in (M.check_eo_identity(rep), M.check_thm2(rep), M.check_thm3(rep), M.check_cor41(rep)):
    print(f"{check.name:28s} lhs={check.lhs:.4f} rhs={check.rhs:.4f} pass={check.passed}")

# %% [markdown]
# The sum of the group errors is at most twice the balanced error rate. With
# g_a = P(Y=1 | A=a) the slack is FPR * (g_0 + g_1) + FNR * (2 - g_0 - g_1),
# so it closes only for a perfect predictor.

# %%
for fpr, fnr in [(0.3, 0.1), (0.05, 0.05), (0.0, 0.0)]:
    r = M.exact_report(M.make_eo_joint((0.6, 0.4), (0.5, 0.5), fpr=fpr, fnr=fnr))
    slack = fpr * (r.base_rate0 + r.base_rate1) + fnr * (2 - r.base_rate0 - r.base_rate1)
    print(f"fpr={fpr:.2f} fnr={fnr:.2f}: err0+err1={r.err0 + r.err1:.4f}  2*BER={2 * r.ber:.4f}  slack={slack:.4f}")

# %% [markdown]
# The unconditional bound holds for any classifier, fair or not. Draw a few
# hundred random joints and look at the smallest slack.

# %%
rng = np.random.default_rng(0)
slacks = [M.check_thm4(M.random_joint(rng, n_points=int(rng.integers(2, 7)))).slack for _ in range(500)]
print(f"error-gap bound: min slack over 500 random joints = {min(slacks):.3e}")

# %% [markdown]
# Finally, sampled predictions converge to the exact values.

# %%
for n in (1_000, 100_000):
    r = M.report(M.sample_predictions(joint, n, seed=1))
    print(f"n={n:>7}: err_gap={r.err_gap:.4f} (exact {rep.err_gap:.4f})  ber={r.ber:.4f} (exact {rep.ber:.4f})")

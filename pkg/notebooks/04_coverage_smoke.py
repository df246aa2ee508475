# %% [markdown]
# # A small coverage study
#
# Each replicate simulates an ACD(1,1) series with `beta = (0.25, 0.25)`,
# estimates it, and checks whether the truth falls in each method's region:
#
# - `FMB`: bootstrap quantile of `Q*`
# - `S`: the same statistic against chi-square
# - `Wald`: HAC sandwich
# - `LR`: GEL criterion ratio
#
# This runs 40 replicates for illustration. The full study uses 2000
# (`fmb coverage --n 100 --bandwidth 3`).

# %%
import io

from fmboot.bench import CoverageConfig, run_coverage, write_report_csv

cfg = CoverageConfig(n=100, bandwidth=3.0, mc_reps=40, bootstrap_r=499, seed=1)
reports = run_coverage(cfg, threads=1)
buf = io.StringIO()
write_report_csv(buf, reports)
print(buf.getvalue())

# %% [markdown]
# With 40 replicates the Monte Carlo standard error is around 0.05 at
# nominal 0.90, so only large differences between methods mean anything.

"""Watch the log-determinant of a GUE matrix settle into a Gaussian.

The tridiagonal model makes one replicate cost O(n), so large sizes are cheap.
Run:  python demos/logdet_clt.py
"""

from wignerlogdet.experiments import tridiagonal_traces
from wignerlogdet.dense_logdet import standardize_logdet
from wignerlogdet.stats import ks_one_sample, summary

SEED = 11

for n in (64, 256, 1024, 4096):
    trace, _ = tridiagonal_traces(n, beta=2, seed=SEED, replicates=1000, keep_h=False)
    x = standardize_logdet(trace.log_abs_Dn, n, "gue")
    s = summary(x)
    ks = ks_one_sample(x)
    print(f"n={n:5d}  mean={s.mean:+.3f}  var={s.variance:.3f}  KS={ks.D:.3f}")

# Convergence is slow (errors of order 1/sqrt(log n)), so the variance
# approaches 1 only gradually.

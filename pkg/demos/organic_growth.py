"""
Why cumulative ratios look log-normal
=====================================

Each synthetic topic grows multiplicatively: every ten minutes it gains a
random multiple of what it already has, damped as the topic gets older. The
ratio of a topic's size at two moments is then a product of many random
factors, and its logarithm a sum of them.
"""

import numpy as np

from trendspam import synth
from trendspam.growth import Subset, ratio_distribution
from trendspam.statfit import fit_lognormal, histogram, ks_test_lognormal

corpus = synth.generate_corpus(n_topics=500, seed=1)
print(f"{len(corpus.stream):,} events over {len(corpus.topic_starts)} topics")

# ratios of cumulative counts, anchored at each topic's first trending hour
for pair in [(10, 2), (8, 3)]:
    sample = ratio_distribution(corpus.stream, pair, t0s=corpus.topic_starts)
    fit = fit_lognormal(sample.values)
    ks = ks_test_lognormal(sample.values, fit)
    print(f"C{pair}: mu={fit.mu:.3f} sigma={fit.sigma:.3f} "
          f"D={ks.d_stat:.4f} (critical {ks.critical_value:.4f}) passed={ks.passed}")

# the log of the ratio should look roughly symmetric
sample = ratio_distribution(corpus.stream, (10, 2), t0s=corpus.topic_starts, subset=Subset.RETWEET)
h = histogram(np.log(sample.values), bins=12)
for left, right, count, _ in h.rows():
    print(f"{left:6.2f} .. {right:6.2f} {'#' * (count // 4)}")

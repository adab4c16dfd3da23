"""
Bots leave a spike in the retweet ratios
========================================

Bots that retweet the opening post of a topic in tight bursts add a lump of
retweets right at the start of the topic's life. That lump inflates the early
cumulative count, so the growth ratio of those topics collapses toward one and
the retweet-only ratio sample stops looking log-normal. Originals are left
untouched. Removing the accounts with a high user-retweet ratio undoes it.
"""

from trendspam import spamdetect, synth
from trendspam.growth import Subset, ratio_distribution
from trendspam.statfit import fit_lognormal, ks_test_lognormal


def ks(stream, subset):
    s = ratio_distribution(stream, (10, 2), t0s=corpus.topic_starts, subset=subset)
    return ks_test_lognormal(s.values, fit_lognormal(s.values))


corpus = synth.generate_corpus(n_topics=500, seed=2)
plans = synth.spam_scenarios(corpus, seed=2, target_share=0.35)
spam = synth.inject_bots(corpus, plans, seed=2)
print(f"{len(plans)} campaigns, {len(spam.bots)} bots")

for subset in (Subset.ORIGINAL, Subset.RETWEET):
    r = ks(spam.stream, subset)
    print(f"with bots, {subset.value:8s}: D={r.d_stat:.4f} passed={r.passed}")

# bots retweet one author many times; organic users spread their retweets
profiles = spamdetect.user_retweet_profiles(spam.stream)
suspects = spamdetect.flag_suspects(profiles, policy=spamdetect.SpamPolicy(ratio_threshold=5))
report = synth.evaluate_detection(spam, suspects)
print(f"flagged {len(suspects)}: precision {report.precision:.3f}, recall {report.recall:.3f}")

cleaned, removal = spamdetect.remove_spam(spam.stream, suspects)
print(f"removed {removal.removed_fraction_of_retweets:.1%} of retweets")
r = ks(cleaned, Subset.RETWEET)
print(f"after removal, retweet : D={r.d_stat:.4f} passed={r.passed}")

# a bot's timing is just as telling as its ratio
bot = sorted(spam.bots)[0]
print(bot, spamdetect.burst_features(spam.stream, bot))

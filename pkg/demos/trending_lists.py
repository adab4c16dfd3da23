"""
Hourly trending lists and how long topics stay on them
======================================================

The trending list is the top 50 topics by events in each hour. A topic's
episode is every hour it spends on the list, gaps included. Here topic
lifetimes are drawn from a heavy-tailed law, and the durations read back from
the lists follow it.
"""

import numpy as np

from trendspam.events import EventStream, Kind, PostEvent
from trendspam.statfit import fit_powerlaw
from trendspam.trending import HOUR, band_persistence, build_episodes, compute_snapshots

rng = np.random.default_rng(0)
n_topics = 2500
lifetimes = np.floor((1 - rng.random(n_topics)) ** (-1 / 1.3)).astype(int)
starts = rng.integers(0, 24 * 3, n_topics)
volume = rng.integers(2, 12, n_topics)

# more topics are alive in a typical hour than the list has room for, so
# hourly noise in volume pushes topics on and off the list
events = []
for q in range(n_topics):
    for h in range(lifetimes[q]):
        for k in range(rng.poisson(volume[q])):
            events.append(PostEvent(f"q{q:03d}-{h:04d}-{k}", int((starts[q] + h) * HOUR + k),
                                    f"u{q}", Kind.ORIGINAL, topic_keys=frozenset({f"topic{q:03d}"})))
stream = EventStream.from_events(events)

snapshots = compute_snapshots(stream, k=50)
episodes = build_episodes(snapshots)
durations = np.array([e.hours_on_list for e in episodes])
print(f"{len(snapshots)} hourly lists, {len(episodes)} topics ever trended")
print(f"median {np.median(durations):.0f} h, longest {durations.max()} h, "
      f"{sum(e.reappearances > 0 for e in episodes)} topics dropped off and came back")

fit = fit_powerlaw(durations)
print(f"power law: alpha={fit.alpha:.2f} above {fit.xmin:.0f} h ({fit.n_tail} topics)")

# how much of its time a topic spends in the bottom half of the list
for hours, frac in band_persistence(episodes, k=50)[:8]:
    print(f"{hours:3d} h on list: {frac:.0%} of hours in ranks 26-50")

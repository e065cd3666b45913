"""Shared fixtures: an independent influence oracle used by the unit and
acceptance suites."""

import pytest


@pytest.fixture(scope="session")
def influence_oracle():
    """Naive reference for the level-walk influence score.

    Materializes every follower level by full neighborhood expansion (the
    raw recurrence), then sums first-reach counts obtained by explicit set
    differences against all earlier levels.  Deliberately a different
    algorithm from the production breadth-first walk.
    """

    def oracle(followers, n_users, u, p, d_max=None):
        cap = n_users if d_max is None else min(d_max, n_users)
        levels = []
        current = set(followers.get(u, ())) - {u}
        for _ in range(cap):
            levels.append(current)
            nxt = set()
            for x in current:
                nxt |= set(followers.get(x, ()))
            current = nxt - {u}
        seen = set()
        total = 0.0
        for i, level in enumerate(levels, start=1):
            new = level - seen
            total += (p ** (i - 1)) * len(new)
            seen |= level
        return total / (n_users - 1)

    return oracle

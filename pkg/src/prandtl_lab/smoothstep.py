"""Quintic cutoff used for profile blending and weighted-mass windows.

cutoff(s) = 1 for s <= 0, 0 for s >= 1, and 1 - 10 s^3 + 15 s^4 - 6 s^5
in between; C^2 across the joins.
"""

import numpy as np


def cutoff(s):
    s = np.asarray(s, dtype=float)
    t = np.clip(s, 0.0, 1.0)
    return 1.0 - t * t * t * (10.0 - 15.0 * t + 6.0 * t * t)


def cutoff_d1(s):
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    m = (s > 0.0) & (s < 1.0)
    t = s[m]
    out[m] = -t * t * (30.0 - 60.0 * t + 30.0 * t * t)
    return out


def cutoff_d2(s):
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    m = (s > 0.0) & (s < 1.0)
    t = s[m]
    out[m] = -t * (60.0 - 180.0 * t + 120.0 * t * t)
    return out

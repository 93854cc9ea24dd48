"""Hypothesis strategies shared across the test modules."""

import numpy as np
from hypothesis import assume
from hypothesis import strategies as st

from wishart_mrc import WishartPair


def gap_ok(values, min_gap):
    v = np.sort(np.asarray(values))
    return len(v) < 2 or np.min(np.diff(v) / v[1:]) >= min_gap


@st.composite
def spectra(draw, size, lo=0.2, hi=2.0, min_gap=0.1):
    """Sorted positive spectra with well separated values."""
    values = draw(st.lists(st.floats(lo, hi), min_size=size, max_size=size))
    assume(gap_ok(values, min_gap))
    return tuple(sorted(values))


@st.composite
def wishart_pairs(draw, max_n=4, max_m=4, n=None, m=None):
    n = n if n is not None else draw(st.integers(1, max_n))
    m = m if m is not None else draw(st.integers(n, max(n, max_m)))
    return WishartPair.from_values(draw(spectra(n)), draw(spectra(m)))

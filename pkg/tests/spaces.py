"""Hypothesis strategies shared by the property tests."""

import numpy as np
from hypothesis import strategies as st

from stmc import harness as H


@st.composite
def timed_spaces(draw, min_n=1, max_n=5, prefix="p"):
    seed = draw(st.integers(0, 2**32 - 1))
    n = draw(st.integers(min_n, max_n))
    return H.random_space(np.random.default_rng(seed), n, prefix=prefix)


@st.composite
def space_and_perm(draw, min_n=1, max_n=5):
    X = draw(timed_spaces(min_n, max_n))
    perm = draw(st.permutations(range(X.n)))
    return X, list(perm)

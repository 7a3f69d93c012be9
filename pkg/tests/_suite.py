"""Fixed random instance suite shared by the property tests."""

from qprelax.instances import random_bounded_instance


def suite_params(count=50):
    """(n, m_extra, p, seed) with n <= 4, m = 2n + m_extra <= 10, p <= 1."""
    out = []
    for seed in range(count):
        n = 2 + seed % 3
        out.append((n, min(2, 10 - 2 * n), seed % 2, seed))
    return out


def suite(count=50):
    return [random_bounded_instance(*args) for args in suite_params(count)]

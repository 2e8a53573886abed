import numpy as np
import pytest

from bagins.pcm import Direction, Judgment, LinguisticPCM

TABLE1 = (0.0222, 0.0444, 0.0667, 0.0889, 0.1111, 0.1333, 0.1556, 0.1778, 0.2000)


def consistent_matrix(w):
    w = np.asarray(w, dtype=float)
    return w[:, None] / w[None, :]


def random_pcm(rng, n, grades=range(1, 10), pcm_id="rand"):
    grades = list(grades)
    judgments = [
        Judgment(i, j, int(rng.choice(grades)),
                 Direction.I_OVER_J if rng.random() < 0.5 else Direction.J_OVER_I)
        for i in range(n) for j in range(i + 1, n)
    ]
    return LinguisticPCM(pcm_id, n, tuple(judgments))


def pcm_from_triples(n, triples, pcm_id="t"):
    return LinguisticPCM(pcm_id, n, tuple(Judgment(i, j, g, Direction(d)) for i, j, g, d in triples))


def charpoly_oracle(a):
    """Perron root and eigenvector of a 3x3 matrix from its characteristic polynomial.

    lambda^3 - tr(A) lambda^2 + (sum of principal 2x2 minors) lambda - det(A) = 0;
    the eigenvector is the cross product of two rows of A - lambda I.
    """
    (a11, a12, a13), (a21, a22, a23), (a31, a32, a33) = a
    tr = a11 + a22 + a33
    minors = (a11 * a22 - a12 * a21) + (a11 * a33 - a13 * a31) + (a22 * a33 - a23 * a32)
    det = (a11 * (a22 * a33 - a23 * a32) - a12 * (a21 * a33 - a23 * a31)
           + a13 * (a21 * a32 - a22 * a31))
    roots = np.roots([1.0, -tr, minors, -det])
    lam = max(r.real for r in roots if abs(r.imag) < 1e-9)
    m = np.array(a, dtype=float) - lam * np.eye(3)
    v = np.cross(m[0], m[1])
    return lam, v / v.sum()


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def table1_matrix():
    return consistent_matrix(np.arange(1, 10) / 45)


@pytest.fixture
def pcm_242():
    """n=3, grades 2, 4, 2 all i_over_j: consistent under the 1..9 scale."""
    return pcm_from_triples(3, [(0, 1, 2, "i_over_j"), (0, 2, 4, "i_over_j"), (1, 2, 2, "i_over_j")])


@pytest.fixture
def pcm_contradictory4():
    """Weights 8:4:2:1 verbalized exactly, then pair (0,2) reversed."""
    return pcm_from_triples(4, [
        (0, 1, 2, "i_over_j"), (0, 2, 4, "j_over_i"), (0, 3, 8, "i_over_j"),
        (1, 2, 2, "i_over_j"), (1, 3, 4, "i_over_j"), (2, 3, 2, "i_over_j"),
    ])

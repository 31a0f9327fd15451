#!/usr/bin/env python3
"""Brute-force item similarity, item graph and preference matrix for the
collaborative-filtering fixtures in test_netdata.cpp.

Run: python3 tests/oracles/cf_oracle.py
"""
import math
from fractions import Fraction

# 4-item similarity fixture: (user, item, value)
COSINE_ROWS = [
    (0, 0, 1.0), (0, 1, 1.0),
    (1, 0, 2.0), (1, 1, 1.0), (1, 2, 3.0),
    (2, 2, 1.0), (2, 3, 4.0),
    (3, 0, 1.0), (3, 3, 2.0),
]

# 3-user, 3-item preference fixture
PREF_ROWS = [
    (0, 0, 5.0), (0, 1, 3.0),
    (1, 0, 4.0), (1, 2, 2.0),
    (2, 1, 1.0), (2, 2, 5.0),
]


def matrix(rows, n, m):
    r = [[0.0] * m for _ in range(n)]
    for u, i, v in rows:
        r[u][i] += v
    return r


def cosine(r, m):
    cols = [[row[j] for row in r] for j in range(m)]
    sim = [[0.0] * m for _ in range(m)]
    for a in range(m):
        for b in range(m):
            na = math.sqrt(sum(x * x for x in cols[a]))
            nb = math.sqrt(sum(x * x for x in cols[b]))
            if na == 0 or nb == 0:
                continue
            sim[a][b] = min(1.0, max(0.0, sum(x * y for x, y in zip(cols[a], cols[b])) / (na * nb)))
    return sim


def preferences(r, sim, m, fill=0.1):
    out = []
    for row in r:
        rated = [l for l in range(m) if row[l] != 0]
        if not rated:
            out.append([fill] * m)
            continue
        score = []
        for j in range(m):
            den = sum(sim[j][l] for l in rated)
            num = sum(sim[j][l] * row[l] for l in rated)
            score.append(num / den if den > 0 else 0.0)
        lo, hi = min(score), max(score)
        if hi > lo:
            out.append([(s - lo) / (hi - lo) for s in score])
        elif hi > 0:
            out.append([1.0] * m)
        else:
            out.append([fill] * m)
    return out


def main():
    sim = cosine(matrix(COSINE_ROWS, 4, 4), 4)
    print("cosine (4 items):")
    for a in range(4):
        print("  " + ", ".join(repr(x) for x in sim[a]))
    print("item edges at threshold 0.5:",
          [(a, b) for a in range(4) for b in range(a + 1, 4) if sim[a][b] > 0.5])
    r = matrix(PREF_ROWS, 3, 3)
    s3 = cosine(r, 3)
    print("cosine (3 items):")
    for a in range(3):
        print("  " + ", ".join(repr(x) for x in s3[a]))
    print("preferences (3 users x 3 items):")
    for row in preferences(r, s3, 3):
        print("  " + ", ".join(repr(x) for x in row))


if __name__ == "__main__":
    main()

"""Reference values for the baseline and user-KNN tests.

Straight-line numpy/python implementations written from the formulas,
sharing no code with the C++ library. Run: python3 neighborhood_oracle.py
"""
import itertools
import math

RATINGS = {
    1: {10: 5, 11: 3, 12: 4, 13: 1},
    2: {10: 4, 11: 2, 12: 5, 14: 3},
    3: {10: 1, 11: 5, 13: 4, 14: 2, 15: 3},
    4: {11: 4, 12: 3, 13: 2, 15: 5},
    5: {10: 2, 12: 2, 14: 4, 15: 1},
}
LO, HI = 1.0, 5.0


def baseline(damping):
    all_r = [r for row in RATINGS.values() for r in row.values()]
    mu = sum(all_r) / len(all_r)
    items = sorted({i for row in RATINGS.values() for i in row})
    bi = {}
    for i in items:
        rs = [row[i] for row in RATINGS.values() if i in row]
        bi[i] = sum(r - mu for r in rs) / (damping + len(rs))
    bu = {}
    for u, row in RATINGS.items():
        bu[u] = sum(r - mu - bi[i] for i, r in row.items()) / (damping + len(row))
    return mu, bu, bi


def sim(u, v, kind, shrinkage=100.0, damping=5.0):
    common = sorted(set(RATINGS[u]) & set(RATINGS[v]))
    if not common:
        return 0.0
    x = [RATINGS[u][i] for i in common]
    y = [RATINGS[v][i] for i in common]
    n = len(common)
    if kind == "cosine":
        d = math.sqrt(sum(a * a for a in x) * sum(b * b for b in y))
        return sum(a * b for a, b in zip(x, y)) / d if d else 0.0
    if kind == "msd":
        return 1.0 / (sum((a - b) ** 2 for a, b in zip(x, y)) / n + 1.0)
    if kind == "pearson":
        mx, my = sum(x) / n, sum(y) / n
        cx = [a - mx for a in x]
        cy = [b - my for b in y]
        vx, vy = sum(a * a for a in cx), sum(b * b for b in cy)
        if vx < 1e-12 or vy < 1e-12:
            return 0.0
        return sum(a * b for a, b in zip(cx, cy)) / math.sqrt(vx * vy)
    if kind == "pearson_baseline":
        mu, bu, bi = baseline(damping)
        rx = [RATINGS[u][i] - (mu + bu[u] + bi[i]) for i in common]
        ry = [RATINGS[v][i] - (mu + bu[v] + bi[i]) for i in common]
        d = math.sqrt(sum(a * a for a in rx) * sum(b * b for b in ry))
        if d == 0:
            return 0.0
        return sum(a * b for a, b in zip(rx, ry)) / d * n / (n + shrinkage)
    raise ValueError(kind)


def predict(u, i, kind, k, mean_center):
    cands = []
    for v in sorted(RATINGS):
        if v == u or i not in RATINGS[v]:
            continue
        if not set(RATINGS[u]) & set(RATINGS[v]):
            continue
        s = sim(u, v, kind)
        if s < 0.0:
            continue
        cands.append((-s, v, s))
    cands.sort()
    nb = cands[:k]
    mean = {w: sum(RATINGS[w].values()) / len(RATINGS[w]) for w in RATINGS}
    num = sum(s * ((RATINGS[v][i] - mean[v]) if mean_center else RATINGS[v][i]) for _, v, s in nb)
    den = sum(abs(s) for _, v, s in nb)
    if den == 0:
        mu, bu, bi = baseline(5.0)
        return min(HI, max(LO, mu + bu[u] + bi[i]))
    est = (mean[u] + num / den) if mean_center else num / den
    return min(HI, max(LO, est))


if __name__ == "__main__":
    for d in (0.0, 5.0):
        mu, bu, bi = baseline(d)
        print(f"damping {d}: mu={mu!r}")
        print("  b_user", [repr(bu[u]) for u in sorted(bu)])
        print("  b_item", [repr(bi[i]) for i in sorted(bi)])
    for kind in ("cosine", "msd", "pearson", "pearson_baseline"):
        print(kind, [repr(sim(u, v, kind)) for u, v in itertools.combinations(sorted(RATINGS), 2)])
    for kind in ("cosine", "msd", "pearson", "pearson_baseline"):
        for mc in (True, False):
            print("predict", kind, "mean_center" if mc else "raw",
                  [repr(predict(u, i, kind, 2, mc)) for u, i in ((1, 14), (2, 13), (4, 10), (5, 11))])

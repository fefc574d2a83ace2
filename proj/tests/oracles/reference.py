#!/usr/bin/env python3
"""Independent numpy reference for the factor-break statistics.

Generates fixed-seed panels under tests/data/ and freezes the statistics
computed here into tests/data/oracle_values.json. Every quantity is built
from direct sums (no prefix sums) so the C++ implementation is checked
against a separate code path.

Usage: python3 tests/oracles/reference.py [output_dir]
"""

import json
import math
import sys
from pathlib import Path

import numpy as np


def write_csv(path, x):
    with open(path, "w") as fh:
        for row in x:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")


def read_back(path):
    return np.loadtxt(path, delimiter=",", ndmin=2)


def null_panel(n, t, r0, rho, rng):
    f = np.zeros((t, r0))
    f[0] = rng.standard_normal(r0)
    for s in range(1, t):
        f[s] = rho * f[s - 1] + math.sqrt(1 - rho * rho) * rng.standard_normal(r0)
    lam = rng.standard_normal((n, r0))
    e = math.sqrt(r0) * rng.standard_normal((t, n))
    return f @ lam.T + e


def pc(x, r):
    t = x.shape[0]
    gram = x @ x.T
    w, v = np.linalg.eigh(gram)
    order = np.argsort(w)[::-1][:r]
    g = math.sqrt(t) * v[:, order]
    lam = x.T @ g / t
    for j in range(r):
        idx = np.argmax(np.abs(lam[:, j]))
        if lam[idx, j] < 0:
            g[:, j] *= -1
            lam[:, j] *= -1
    return g, lam, w[order] / (x.shape[0] * x.shape[1])


def trim(t, eps):
    return math.ceil(eps * t - 1e-9), math.floor((1 - eps) * t + 1e-9)


def logdet(m):
    sign, val = np.linalg.slogdet(m)
    assert sign > 0
    return val


def lr_at(g, k):
    t = g.shape[0]
    s1 = g[:k].T @ g[:k] / k
    s2 = g[k:].T @ g[k:] / (t - k)
    return -k * logdet(s1) - (t - k) * logdet(s2)


def lr_m_at(g, k):
    t = g.shape[0]
    a = g[:k] - g[:k].mean(axis=0)
    b = g[k:] - g[k:].mean(axis=0)
    return -k * logdet(a.T @ a / k) - (t - k) * logdet(b.T @ b / (t - k))


def vech(m):
    r = m.shape[0]
    return np.array([m[i, j] for j in range(r) for i in range(j, r)])


def vec(m):
    return m.reshape(-1, order="F")


def gamma(u, j):
    t = u.shape[0]
    out = np.zeros((u.shape[1], u.shape[1]))
    for s in range(j, t):
        out += np.outer(u[s], u[s - j])
    return out / t


def nw_bandwidth(u):
    t = u.shape[0]
    n = min(int(math.floor(4.0 * (t / 100.0) ** (2.0 / 9.0))), t - 1)
    sig = [float(np.sum(u[j:] * u[: t - j]) / t) for j in range(n + 1)]
    s0 = sig[0] + 2 * sum(sig[1:])
    s1 = 2 * sum(j * sig[j] for j in range(1, n + 1))
    if s0 <= 0:
        return 0.0
    gam = 1.1447 * ((s1 / s0) ** 2) ** (1.0 / 3.0)
    return gam * t ** (1.0 / 3.0)


def hac(u, bw):
    t = u.shape[0]
    om = gamma(u, 0)
    for j in range(1, t):
        w = 1.0 - j / bw if bw > 0 else 0.0
        if w <= 0:
            break
        gj = gamma(u, j)
        om += w * (gj + gj.T)
    return om


def moments_vech(g):
    r = g.shape[1]
    return np.array([vech(np.outer(x, x) - np.eye(r)) for x in g])


def sup_curve(vals):
    ks = sorted(vals)
    best = ks[0]
    for k in ks:
        if vals[k] > vals[best]:
            best = k
    return vals[best], best


def wald_curve(g, eps, use_hac):
    t, r = g.shape
    u = moments_vech(g)
    bw = nw_bandwidth(u) if use_hac else 0.0
    lo, hi = trim(t, eps)
    out = {}
    for k in range(lo, hi + 1):
        p = k / t
        s1 = g[:k].T @ g[:k] / k
        s2 = g[k:].T @ g[k:] / (t - k)
        a = math.sqrt(t) * vech(s1 - s2)
        w1 = u[:k]
        w2 = u[k:]
        o1 = hac(w1, bw) if use_hac else gamma(w1, 0)
        o2 = hac(w2, bw) if use_hac else gamma(w2, 0)
        sa = o1 / p + o2 / (1 - p)
        out[k] = float(a @ np.linalg.solve(sa, a))
    return out


def lm_curve(g, eps, use_hac):
    t, r = g.shape
    u = moments_vech(g)
    om = hac(u, nw_bandwidth(u)) if use_hac else gamma(u, 0)
    lo, hi = trim(t, eps)
    out = {}
    for k in range(lo, hi + 1):
        p = k / t
        s = u[:k].sum(axis=0) / math.sqrt(t)
        out[k] = float(s @ np.linalg.solve(om, s)) / (p * (1 - p))
    return out


def wwald_curve(g):
    t, r = g.shape
    m = np.hstack([g, moments_vech(g)])
    om = hac(m, nw_bandwidth(m))
    out = {}
    for k in range(r + 1, t):
        s = m[:k].sum(axis=0) / math.sqrt(t)
        out[k] = float(s @ np.linalg.solve(om, s))
    return out


def multi_lr_exhaustive(g, eps, demean):
    t = g.shape[0]
    h = math.ceil(eps * t - 1e-9)

    def seg(a, b):
        x = g[a:b]
        if demean:
            x = x - x.mean(axis=0)
        return -(b - a) * logdet(x.T @ x / (b - a))

    best = (-math.inf, None)
    for k1 in range(h, t + 1):
        for k2 in range(k1 + h, t - h + 1):
            v = seg(0, k1) + seg(k1, k2) + seg(k2, t)
            if v > best[0]:
                best = (v, (k1, k2))
    return best


def fine_grid_cv(omega, eps, grid, reps, seed, chunk=250):
    """sup (1/2) omega B(pi)^2 / (pi(1-pi)) for a scalar bridge, quantiles by nearest rank."""
    rng = np.random.default_rng(seed)
    lo, hi = trim(grid, eps)
    pis = np.arange(lo, hi + 1) / grid
    sups = []
    done = 0
    while done < reps:
        n = min(chunk, reps - done)
        w = np.cumsum(rng.standard_normal((n, grid)) / math.sqrt(grid), axis=1)
        w = np.hstack([np.zeros((n, 1)), w])
        b = w[:, lo : hi + 1] - pis * w[:, -1:]
        sups.append(np.max(0.5 * omega * b * b / (pis * (1 - pis)), axis=1))
        done += n
    sups = np.sort(np.concatenate(sups))
    return {lvl: float(sups[math.ceil((1 - lvl) * reps - 1e-9) - 1]) for lvl in (0.10, 0.05, 0.01)}


def instance_record(g, eps):
    t, r = g.shape
    lo, hi = trim(t, eps)
    rec = {"T": t, "r": r, "epsilon": eps}
    lr = {k: lr_at(g, k) for k in range(lo, hi + 1)}
    lrm = {k: lr_m_at(g, k) for k in range(lo, hi + 1)}
    rec["sup_lr"], rec["argmax_lr"] = sup_curve(lr)
    rec["sup_lr_m"], rec["argmax_lr_m"] = sup_curve(lrm)
    rec["wald_white"], rec["argmax_wald_white"] = sup_curve(wald_curve(g, eps, False))
    rec["wald_hac"], rec["argmax_wald_hac"] = sup_curve(wald_curve(g, eps, True))
    rec["wwald"], rec["argmax_wwald"] = sup_curve(wwald_curve(g))
    v, ks = multi_lr_exhaustive(g, eps, False)
    vm, ksm = multi_lr_exhaustive(g, eps, True)
    rec["multi2_lr"], rec["multi2_breaks"] = v, list(ks)
    rec["multi2_lr_m"], rec["multi2_breaks_m"] = vm, list(ksm)
    return rec


def instance_panel(i, rng):
    t = int(rng.integers(40, 201))
    n = int(rng.integers(20, 121))
    r = int(rng.integers(1, 4))
    rho = 0.5 if i % 2 else 0.0
    x = null_panel(n, t, r, rho, rng)
    if i % 4 == 3:
        # loadings of the last factor vanish after T/2
        f = np.zeros((t, r))
        f[0] = rng.standard_normal(r)
        for s in range(1, t):
            f[s] = rho * f[s - 1] + math.sqrt(1 - rho * rho) * rng.standard_normal(r)
        lam = rng.standard_normal((n, r))
        lam2 = lam.copy()
        lam2[:, -1] = 0.0
        x = np.vstack([f[: t // 2] @ lam.T, f[t // 2 :] @ lam2.T]) + math.sqrt(r) * rng.standard_normal((t, n))
    return x - x.mean(axis=0), r


def main():
    out = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(__file__).resolve().parents[1] / "data"
    out.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(20240611)
    values = {}

    # N=20, T=30 Gaussian panel: eigenvector oracle.
    small = rng.standard_normal((30, 20))
    write_csv(out / "gauss_30x20.csv", small)
    small = read_back(out / "gauss_30x20.csv")
    small = small - small.mean(axis=0)
    g, lam, ev = pc(small, 2)
    values["gauss_30x20"] = {"r": 2, "ghat": g.tolist(), "eigvals": ev.tolist()}

    # N=T=100 null panel with three factors.
    x = null_panel(100, 100, 3, 0.0, rng)
    write_csv(out / "null_100x100.csv", x)
    x = read_back(out / "null_100x100.csv")
    x = x - x.mean(axis=0)
    g, lam, ev = pc(x, 3)
    t = g.shape[0]
    eps = 0.15
    lo, hi = trim(t, eps)
    lr = {k: lr_at(g, k) for k in range(lo, hi + 1)}
    lrm = {k: lr_m_at(g, k) for k in range(lo, hi + 1)}
    rec = {"r": 3, "epsilon": eps, "eigvals": ev.tolist(), "lr_half": lr_at(g, t // 2)}
    rec["sup_lr"], rec["argmax_lr"] = sup_curve(lr)
    rec["sup_lr_m"], rec["argmax_lr_m"] = sup_curve(lrm)
    u = np.array([vec(np.outer(v, v) - np.eye(3)) for v in g])
    bw = nw_bandwidth(u)
    rec["hac_vec_bandwidth"] = bw
    rec["hac_vec_omega"] = hac(u, bw).tolist()
    for name, curve in [
        ("wald_white", wald_curve(g, eps, False)),
        ("wald_hac", wald_curve(g, eps, True)),
        ("lm_white", lm_curve(g, eps, False)),
        ("lm_hac", lm_curve(g, eps, True)),
        ("wwald", wwald_curve(g)),
    ]:
        rec[name], rec["argmax_" + name] = sup_curve(curve)
    values["null_100x100"] = rec

    # Smaller T=60 panel for the two-break exhaustive search (r=2 here).
    x = null_panel(40, 60, 2, 0.3, rng)
    write_csv(out / "null_60x40.csv", x)
    x = read_back(out / "null_60x40.csv")
    x = x - x.mean(axis=0)
    g, _, _ = pc(x, 2)
    v, ks = multi_lr_exhaustive(g, 0.15, False)
    vm, ksm = multi_lr_exhaustive(g, 0.15, True)
    values["null_60x40"] = {
        "r": 2,
        "epsilon": 0.15,
        "multi2_lr": v,
        "multi2_breaks": list(ks),
        "multi2_lr_m": vm,
        "multi2_breaks_m": list(ksm),
    }

    # Fixed-bandwidth HAC on a short AR(1) series, for the double-loop check.
    z = np.zeros((50, 2))
    for s in range(1, 50):
        z[s] = 0.5 * z[s - 1] + rng.standard_normal(2)
    write_csv(out / "ar1_50x2.csv", z)
    z = read_back(out / "ar1_50x2.csv")
    values["ar1_50x2"] = {"bandwidth": 4.0, "omega": hac(z, 4.0).tolist()}

    # Twenty fixed-seed factor matrices with T <= 200 for the equivalence suite.
    inst_dir = out / "instances"
    inst_dir.mkdir(exist_ok=True)
    instances = []
    for i in range(20):
        x, r = instance_panel(i, rng)
        g, _, _ = pc(x, r)
        name = "ghat_%02d.csv" % i
        write_csv(inst_dir / name, g)
        g = read_back(inst_dir / name)
        rec = instance_record(g, 0.15 if i % 3 else 0.30)
        rec["file"] = "instances/" + name
        instances.append(rec)
    values["instances"] = instances

    # Independent fine-grid simulation for the r=1, omega=2 variance-only law.
    values["cv_fine_grid"] = {
        "omega": 2.0,
        "epsilon": 0.15,
        "grid": 10000,
        "reps": 50000,
        "quantiles": {"%.2f" % k: v for k, v in fine_grid_cv(2.0, 0.15, 10000, 50000, 7).items()},
    }

    with open(out / "oracle_values.json", "w") as fh:
        json.dump(values, fh, indent=1)


if __name__ == "__main__":
    main()

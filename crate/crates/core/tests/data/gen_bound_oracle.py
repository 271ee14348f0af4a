#!/usr/bin/env python3
"""Regenerates bound_oracle.json: a frozen grid of bound-formula inputs with
extended-precision reference outputs (mpmath, 60 digits).

Each grid point carries the closed-form inputs plus synthetic (theta, p,
vartheta, pr_c, pr_i) arguments chosen away from cancellation, so every
reference value is well-conditioned and a 1e-10 relative comparison against
the double-precision implementation is meaningful.
"""

import json
import math
import random

import mpmath as mp

mp.mp.dps = 60

random.seed(20250826)

N_POINTS = 50


def f64(x):
    """Round-trip through double precision so the JSON inputs are exact."""
    return float(x)


def theta_p(inp):
    d1, ds, ds1 = mp.mpf(inp["delta_1"]), mp.mpf(inp["delta_s"]), mp.mpf(inp["delta_s1"])
    eta1, eta2 = mp.mpf(inp["eta1"]), mp.mpf(inp["eta2"])
    M, N, T, P = inp["m"], inp["n"], inp["t"], mp.mpf(inp["power"])
    noise = mp.sqrt((1 + d1) * eta2 * M / P)
    t1 = (1 - 2 * ds) / (ds1 + 2 * (1 - ds) * noise)
    t2 = (1 - 2 * ds) ** 2 / ((1 - ds) ** 2 * (mp.sqrt(eta1) + noise) ** 2)
    t3 = (mp.sqrt(eta1) - noise) ** 2 * (1 - ds) ** 2 / ds1 ** 2
    theta = min(t1, t2, t3)
    if theta > 0:
        p = (2 * mp.exp(-N * (mp.log(theta) - 1 + 1 / theta))
             + M * mp.exp(-N * (theta - 1 - mp.log(theta)))
             + mp.exp(-N * T * (eta2 - mp.log(eta2) - 1)))
    else:
        p = mp.inf
    vartheta = (1 - ds) * P / (4 * eta2 * M)
    return theta, p, vartheta


def subset_count(n, lo, hi):
    return sum(mp.binomial(n, t) for t in range(lo, min(hi, n) + 1)) - 1


def pr_common_raw(inp, p):
    K = inp["k"]
    # mirror the implementation's double-precision ceil
    t_max = min(int(math.ceil((1.0 + inp["gamma"]) / 2.0 * K)), K)
    c0 = subset_count(inp["s"], 0, inp["s_c"])
    pm = mp.mpf(p)
    tail = sum(mp.binomial(K, t) * (1 - pm) ** t * pm ** (K - t) for t in range(t_max + 1))
    return 1 - 2 * c0 * tail


def pr_individual_raw(inp, theta):
    th = mp.mpf(theta)
    ds = mp.mpf(inp["delta_s"])
    eta2 = mp.mpf(inp["eta2"])
    M, N, T, s = inp["m"], inp["n"], inp["t"], inp["s"]
    vth = (1 - ds) * mp.mpf(inp["power"]) / (4 * eta2 * M)
    ci = subset_count(s, inp["s_c"], s)
    e1 = mp.exp(-N * (mp.log(th) - 1 + 1 / th))
    e2 = mp.exp(-N * (th - 1 - mp.log(th)))
    e3 = mp.exp(-N * (mp.log(vth) - 1 + 1 / vth))
    e4 = mp.exp(-N * T * (eta2 - mp.log(eta2) - 1))
    return 1 - ci * e1 - ci * M * e2 - s * e3 - e4


def nmae(inp, pr_c, pr_i):
    ds, d2s, d1 = (mp.mpf(inp["delta_s"]), mp.mpf(inp["delta_2s"]), mp.mpf(inp["delta_1"]))
    M, N, T, s = inp["m"], inp["n"], inp["t"], inp["s"]
    P = mp.mpf(inp["power"])
    first = mp.sqrt(M * N * s / (P * T * (1 - ds))) * mp.gamma(N - mp.mpf("0.5")) / mp.gamma(N)
    distortion = (1 - ds + d2s) / (1 - ds)
    c_i = (1 - mp.mpf(pr_c)) * distortion
    e_i = (1 - mp.mpf(pr_i)) * distortion
    slack = mp.mpf(inp["epsilon"]) * (1 + mp.sqrt((1 + d1) / (1 - ds)))
    return first + c_i + e_i + slack, c_i, e_i


def rates(inp, theta, vartheta, p):
    th, vth, pm = mp.mpf(theta), mp.mpf(vartheta), mp.mpf(p)
    eta2 = mp.mpf(inp["eta2"])
    T, g = inp["t"], mp.mpf(inp["gamma"])
    a = mp.log(th) - 1 + 1 / th
    b = th - 1 - mp.log(th)
    c = T * (eta2 - mp.log(eta2) - 1)
    d = mp.log(vth) - 1 + 1 / vth
    beta1 = min(a, b, c)
    beta2 = min(a, b, c, d)
    r_k = (1 - g) / 2 * mp.log((1 - pm) * (1 - g) / (pm * (1 + g))) - mp.log(2 * (1 - pm) / (1 + g))
    # high-SNR level: recompute theta with the threshold rescaled to sqrt(P)
    resc = dict(inp)
    resc["eta2"] = f64(math.sqrt(inp["power"]))
    th2, _, _ = theta_p(resc)
    if th2 > 1:
        ds, d2s = mp.mpf(inp["delta_s"]), mp.mpf(inp["delta_2s"])
        M, N = inp["m"], inp["n"]
        ci = subset_count(inp["s"], inp["s_c"], inp["s"])
        e = (1 - ds + d2s) / (1 - ds) * (
            mp.exp(-N * (mp.log(th2) - 1 + 1 / th2))
            + M * mp.exp(-N * (th2 - 1 - mp.log(th2))))
        e_high = ci * e
        e_high_valid = True
    else:
        e_high, e_high_valid = mp.mpf(0), False
    return beta1, beta2, r_k, e_high, e_high_valid


def chernoff(k, x):
    xm = mp.mpf(x)
    return mp.exp(-k * (-1 + xm - mp.log(xm)))


def ld_rate(p, K, K2):
    pm = mp.mpf(p)
    a = 1 - mp.mpf(K2) / K
    return a * mp.log(a / pm) + (1 - a) * mp.log((1 - a) / (1 - pm))


def draw_point():
    s = random.randint(2, 20)
    s_c = random.randint(0, s - 1)
    delta_s = f64(random.uniform(0.0, 0.4))
    inp = {
        "delta_1": f64(random.uniform(0.0, 0.15)),
        "delta_s": delta_s,
        "delta_s1": f64(random.uniform(max(delta_s, 0.02), 0.49)),
        "delta_2s": f64(random.uniform(delta_s, 0.9)),
        "eta1": f64(random.uniform(0.05, 0.9)),
        "eta2": f64(random.uniform(1.1, 5.0)),
        "m": random.randint(16, 256),
        "n": random.randint(1, 64),
        "t": random.randint(8, 64),
        "k": random.randint(2, 64),
        "s": s,
        "s_c": s_c,
        "power": f64(10.0 ** random.uniform(0.5, 5.0)),
        "gamma": f64(random.uniform(0.0, 0.9)),
        "epsilon": f64(random.uniform(0.0, 0.3)),
    }
    gamma = inp["gamma"]
    syn = {
        "theta": f64(random.uniform(1.05, 5.0)),
        "vartheta": f64(random.uniform(1.05, 50.0)),
        "p": f64(random.uniform(1e-4, min(0.45, 0.9 * (1.0 - gamma) / 2.0))),
        "pr_c": f64(random.uniform(0.0, 1.0)),
        "pr_i": f64(random.uniform(0.0, 1.0)),
    }
    cher_k = random.choice([1, 2, 5, 20, 90])
    cher = {
        "k": cher_k,
        "x_lower": f64(random.uniform(0.05, 0.95)),
        "x_upper": f64(random.uniform(1.05, 6.0)),
    }
    ld_k = random.randint(10, 400)
    frac = random.uniform(syn["p"] + 0.05, 0.95)
    ld_k2 = min(max(int(round((1.0 - frac) * ld_k)), 1), ld_k - 1)
    ld = {"p": syn["p"], "k": ld_k, "k2": ld_k2}
    if ld["p"] >= 1.0 - ld_k2 / ld_k:
        return None
    return inp, syn, cher, ld


def well_conditioned(v, floor=1e-2):
    return abs(v) >= floor


def main():
    points = []
    while len(points) < N_POINTS:
        drawn = draw_point()
        if drawn is None:
            continue
        inp, syn, cher, ld = drawn
        theta, p, vartheta = theta_p(inp)
        if theta <= 0 or not mp.isfinite(p):
            continue
        prc_raw = pr_common_raw(inp, syn["p"])
        pri_raw = pr_individual_raw(inp, syn["theta"])
        if not (well_conditioned(prc_raw) and well_conditioned(pri_raw)):
            continue
        nm, c_i, e_i = nmae(inp, syn["pr_c"], syn["pr_i"])
        b1, b2, rk, ehigh, ehigh_valid = rates(inp, syn["theta"], syn["vartheta"], syn["p"])
        if not well_conditioned(rk, 1e-3):
            continue
        rate = ld_rate(ld["p"], ld["k"], ld["k2"])
        points.append({
            "inputs": inp,
            "synthetic": syn,
            "chernoff": cher,
            "ld": ld,
            "oracle": {
                "theta": float(theta),
                "p": float(p),
                "vartheta": float(vartheta),
                "pr_common_raw": float(prc_raw),
                "pr_individual_raw": float(pri_raw),
                "nmae_upper": float(nm),
                "nmae_c_i": float(c_i),
                "nmae_e_i": float(e_i),
                "beta1": float(b1),
                "beta2": float(b2),
                "r_k": float(rk),
                "e_highsnr": float(ehigh),
                "e_highsnr_valid": ehigh_valid,
                "chernoff_lower": float(chernoff(cher["k"], cher["x_lower"])),
                "chernoff_upper": float(chernoff(cher["k"], cher["x_upper"])),
                "ld_rate": float(rate),
            },
        })
    with open("bound_oracle.json", "w") as f:
        json.dump({"points": points}, f, indent=1)
    print(f"wrote {len(points)} points")


if __name__ == "__main__":
    main()

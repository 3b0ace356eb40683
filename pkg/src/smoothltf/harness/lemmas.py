"""Registry of executable inequality checks, emitted as result rows.

Each row holds the check id, its parameters, the measured value, the bound and
the comparison (``<=`` or ``>=``). ``bound_scale`` multiplies every ``<=``
bound; values below 1 tighten the checks and serve as a negative control.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from ..analysis import noise_sensitivity, smoothing_l1_gap
from ..approx import (
    TILTING_C,
    TailProfile,
    berry_esseen_gap,
    exp_neg_approx,
    mgf_bound,
    moment_bound,
    rademacher_average_law,
    rerandomize_law,
    resample_channel_law,
    taylor_exp,
    taylor_remainder_bound,
    tilting_second_moment,
    total_variation,
)
from ..cube import LinearThresholdFunction, ProductDistribution, cube_points, subexp_tail_probe
from ..rng import make_rng
from ..structure import (
    DecompositionBudget,
    case2_sign_agreement,
    critical_index,
    decompose,
    regular_subsample_check,
    tail_concentration_check,
    tail_decay_bound,
)
from .records import LEMMA_SCHEMA

PROFILES = {"smoke": 1, "standard": 10, "thorough": 100}


class UnknownLemma(KeyError):
    pass


def _row(lemma_id, params, measured, bound, relation="<=", bound_scale=1.0):
    if relation == "<=":
        bound = bound * bound_scale
        passed = measured <= bound
    else:
        passed = measured >= bound
    return {"schema": LEMMA_SCHEMA, "id": lemma_id, "params": params, "measured": float(measured),
            "bound": float(bound), "relation": relation, "passed": bool(passed)}


def random_ltf(n, rng):
    w = rng.standard_normal(n)
    return LinearThresholdFunction(w, float(rng.normal(0.0, 0.5 * np.linalg.norm(w))))


def brute_force_critical_index(u, alpha):
    """Definition scan, O(n^2): sort by magnitude, recompute every tail norm from scratch."""
    s = sorted(u, key=abs, reverse=True)
    for i in range(len(s)):
        if abs(s[i]) <= alpha * math.sqrt(sum(v * v for v in s[i:])):
            return i + 1
    return None


# ------------------------------------------------------------------- checks


def check_ns(scale, seed, bs):
    rng = make_rng(seed, "lm:ns")
    count, n = 5 * scale, 10
    deltas = (0.25, 0.10, 0.04, 0.01)
    worst = dict.fromkeys(deltas, 0.0)
    for _ in range(count):
        f = random_ltf(n, rng)
        mu = ProductDistribution(rng.uniform(0.1, 0.9, n))
        for d in deltas:
            worst[d] = max(worst[d], noise_sensitivity(f, d, mu).value)
    return [_row("lm:ns", {"delta": d, "n": n, "functions": count}, worst[d], 1.25 * math.sqrt(d),
                 bound_scale=bs) for d in deltas]


def check_opgap(scale, seed, bs):
    rng = make_rng(seed, "lm:opgap")
    count, n = 3 * scale, 10
    rows = []
    for sigma in (0.05, 0.25):
        fs = [random_ltf(n, rng) for _ in range(count)]
        mu = ProductDistribution.bitflip(n, sigma)
        for rho in (0.01, 0.04, 0.25):
            gaps = [smoothing_l1_gap(f, rho, sigma).value for f in fs]
            ns = [noise_sensitivity(f, rho, mu).value for f in fs]
            params = {"sigma": sigma, "rho": rho, "n": n, "functions": count}
            rows.append(_row("lm:opgap", params, max(gaps), 2.5 * math.sqrt(rho), bound_scale=bs))
            # |T f(z) - f(z)| = 2 P_y[f(y) != f(z)] for +-1 valued f, so gap = 2 NS exactly
            rows.append(_row("lm:opgap", {**params, "relation": "gap - 2NS"},
                             max(g - 2 * s for g, s in zip(gaps, ns)), 1e-12, bound_scale=bs))
    return rows


def check_decomp(scale, seed, bs):
    rows = []
    for rho in (0.2, 0.5):
        for sigma in (0.1, 0.3):
            tv = max(total_variation(rerandomize_law(z, rho, sigma), resample_channel_law(z, rho, sigma))
                     for z in cube_points(3))
            rows.append(_row("eq:decomp", {"rho": rho, "sigma": sigma, "n": 3}, tv, 1e-12, bound_scale=bs))
    return rows


def check_regularity(scale, seed, bs):
    rep = regular_subsample_check(np.ones(400), 1 / 20, 0.5, 0.01, trials=1000 * scale,
                                  seed=make_rng(seed, "lm:regularity"))
    return [_row("lm:regularity", {"n": 400, "alpha": 0.05, "rho_eff": 0.5, "delta": 0.01,
                                   "trials": rep.trials},
                 rep.frequency, rep.required - 3 * rep.std_error, relation=">=")]


def check_auxi3(scale, seed, bs):
    rng = make_rng(seed, "lm:auxi3")
    n, eps = 50, 0.05
    w = rng.standard_normal(n)
    z = np.where(rng.random(n) < 0.1, -1, 1)
    rows = []
    for variant in (4, 2):
        rep = tail_concentration_check(w, np.arange(n), z, 0.1, 0.1, 2.0, 1.0, eps, trials=20 * scale,
                                       inner=500, seed=rng, variant=variant)
        rows.append(_row("lm:auxi3", {"n": n, "eps": eps, "rho": 0.1, "sigma": 0.1, "lam": 2.0,
                                      "alpha_tail": 1.0, "variant": variant, "C": rep.C},
                         rep.good_fraction, 1 - eps - rep.half_width, relation=">="))
    return rows


def check_approx(scale, seed, bs):
    rng = make_rng(seed, "lm:approx")
    n, K, eps, rho, sigma = 14, 6, 0.1, 0.1, 0.1
    u = 3.0 ** -np.arange(n) * rng.choice([-1, 1], n)
    rep = decompose(u, 0.3, DecompositionBudget(K, eps, rho, sigma))
    decay = max(rep.sigma(rep.H + 1) / tail_decay_bound(rep, i) for i in range(1, rep.H + 1))
    zs = [np.where(rng.random(n) < sigma, -1, 1) for _ in range(10 * scale)]
    probs = [case2_sign_agreement(u, 0.1, rep.H, rho, sigma, z).value for z in zs]
    return [
        _row("lm:approx", {"n": n, "K": K, "case": rep.case, "check": "tail decay"}, decay, 1.0,
             bound_scale=bs),
        _row("lm:approx", {"n": n, "K": K, "eps": eps, "draws": len(zs), "check": "sign agreement"},
             float(np.mean(np.array(probs) <= eps)), 1 - eps, relation=">="),
    ]


def check_critical(scale, seed, bs):
    rng = make_rng(seed, "def:critical-index")
    mismatches, count = 0, 100 * scale
    for _ in range(count):
        n = int(rng.integers(1, 65))
        u = rng.standard_normal(n) * np.exp(rng.uniform(-4, 0) * np.arange(n) * rng.random())
        alpha = float(rng.choice(np.arange(1, 10) / 10))
        mismatches += critical_index(u, alpha).ell != brute_force_critical_index(u.tolist(), alpha)
    return [_row("def:critical-index", {"vectors": count}, mismatches, 0, bound_scale=bs)]


def check_berry_esseen(scale, seed, bs):
    rng = make_rng(seed, "thm:berry-esseen")
    ratios = []
    for _ in range(4 * scale):
        n = int(rng.integers(4, 17))
        ratios.append(berry_esseen_gap(rng.standard_normal(n)).ratio)
    two = berry_esseen_gap([1.0]).gap
    ones = berry_esseen_gap(np.ones(20))
    return [
        _row("thm:berry-esseen", {"vectors": len(ratios), "constant": 1.0}, max(ratios), 1.0, bound_scale=bs),
        _row("thm:berry-esseen", {"u": "all-ones", "n": 20}, ones.gap, ones.lyapunov, bound_scale=bs),
        _row("thm:berry-esseen", {"u": "e_1", "target": 0.3413447460685429},
             abs(two - 0.3413447460685429), 1e-4, bound_scale=bs),
    ]


def check_tilting(scale, seed, bs):
    rows = []
    for b in (0.0, 1.0, -1.0, 3.0, -3.0, 5.0, -5.0):
        t = tilting_second_moment(b)
        rows.append(_row("lm:tilting2", {"b": b, "C": TILTING_C}, t.value, t.bound, bound_scale=bs))
    return rows


def check_exp_approx(scale, seed, bs):
    rows = []
    for T in (10.0, 25.0, 50.0):
        for eps in (1e-2, 1e-3):
            a = exp_neg_approx(T, eps)
            rows.append(_row("lm:auxi2", {"T": T, "eps": eps, "degree": a.degree}, a.sup_error, eps,
                             bound_scale=bs))
    ratio = exp_neg_approx(50.0, 1e-3).degree / exp_neg_approx(12.5, 1e-3).degree
    rows.append(_row("lm:auxi2", {"check": "deg(50)/deg(12.5)", "eps": 1e-3}, ratio, 2.5, bound_scale=bs))
    return rows


def check_taylor(scale, seed, bs):
    x = np.linspace(-5, 5, 1001 * scale)
    x = x[x != 0]
    rows = []
    for k in (4, 8, 16):
        # near 0 the bound drops below float64 rounding of p_k(x) - e^x; allow a few ulps of e^|x|
        slack = 4 * np.finfo(float).eps * np.exp(np.abs(x))
        ratio = np.max(np.abs(taylor_exp(k)(x) - np.exp(x)) / (taylor_remainder_bound(x, k) + slack))
        rows.append(_row("lm:taylor", {"k": k, "grid": x.size}, float(ratio), 1.0, bound_scale=bs))
    return rows


def check_moments(scale, seed, bs):
    vals, probs = rademacher_average_law(16)
    prof = TailProfile(math.sqrt(2.0), 1.0)
    return [_row("lm:auxi", {"k": k, "lam": prof.lam, "alpha_tail": 1.0, "law": "rademacher-average-16"},
                 float(probs @ np.abs(vals) ** k), moment_bound(k, prof), bound_scale=bs)
            for k in (2, 4, 6)]


def check_mgf(scale, seed, bs):
    vals, probs = rademacher_average_law(16)
    prof = TailProfile(math.sqrt(2.0), 1.0)
    return [_row("lm:auxi1", {"a": a, "lam": prof.lam, "alpha_tail": 1.0, "law": "rademacher-average-16"},
                 float(probs @ np.exp(a * np.abs(vals))), mgf_bound(a, prof), bound_scale=bs)
            for a in (0.5, 1.0, 2.0)]


def check_subexp(scale, seed, bs):
    rep = subexp_tail_probe(ProductDistribution.uniform(16), 2.0, 1.0, n_directions=8,
                            n_samples=5000 * scale, seed=make_rng(seed, "def:subexp"))
    return [_row("def:subexp", {"n": 16, "lam": 2.0, "alpha_tail": 1.0, "directions": 8},
                 float(rep.worst_excess.max()), 0.0, bound_scale=bs)]


REGISTRY = {
    "lm:ns": check_ns,
    "lm:opgap": check_opgap,
    "eq:decomp": check_decomp,
    "lm:regularity": check_regularity,
    "lm:auxi3": check_auxi3,
    "lm:approx": check_approx,
    "def:critical-index": check_critical,
    "thm:berry-esseen": check_berry_esseen,
    "lm:tilting2": check_tilting,
    "lm:auxi2": check_exp_approx,
    "lm:taylor": check_taylor,
    "lm:auxi": check_moments,
    "lm:auxi1": check_mgf,
    "def:subexp": check_subexp,
}


def resolve(selector) -> list[str]:
    if selector in (None, "all") or selector == ["all"]:
        return list(REGISTRY)
    ids = [selector] if isinstance(selector, str) else list(selector)
    ids = [i for part in ids for i in part.split(",") if i]
    unknown = [i for i in ids if i not in REGISTRY]
    if unknown:
        raise UnknownLemma(f"unknown lemma id(s): {', '.join(unknown)}")
    return ids


def _run(args):
    lemma_id, scale, seed, bound_scale = args
    return REGISTRY[lemma_id](scale, seed, bound_scale)


def lemma_check_suite(selector="all", profile: str = "smoke", seed: int = 0, jobs: int = 1,
                      bound_scale: float = 1.0) -> list[dict]:
    """Run the selected checks; rows come back in registry (or selector) order."""
    if profile not in PROFILES:
        raise ValueError(f"unknown budget profile {profile!r}; choose from {sorted(PROFILES)}")
    tasks = [(i, PROFILES[profile], seed, bound_scale) for i in resolve(selector)]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            chunks = list(pool.map(_run, tasks))
    else:
        chunks = [_run(t) for t in tasks]
    return [row for chunk in chunks for row in chunk]


def format_table(rows) -> str:
    lines = [f"{'id':<20} {'result':<6} {'measured':>14} {'rel':>3} {'bound':>14}  params"]
    for r in rows:
        params = ", ".join(f"{k}={v}" for k, v in r["params"].items())
        lines.append(f"{r['id']:<20} {'PASS' if r['passed'] else 'FAIL':<6} {r['measured']:>14.6g} "
                     f"{r['relation']:>3} {r['bound']:>14.6g}  {params}")
    return "\n".join(lines)

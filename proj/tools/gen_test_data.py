#!/usr/bin/env python3
"""Regenerates the frozen test fixtures.

Writes
  tests/data/oracle/   synthetic series plus reference statistics from
                       statsmodels (ADF) and a numpy Johansen
                       implementation cross-validated against
                       statsmodels' coint_johansen
  data/fixture/        the bundled synthetic market dataset used by the
                       pipeline tests and the CLI examples

The repository ships the generated files; rerunning this script must be
a no-op apart from intentional parameter changes.
"""

import json
import os

import numpy as np
from statsmodels.tsa.stattools import adfuller
from statsmodels.tsa.vector_ar.vecm import coint_johansen

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
ORACLE_DIR = os.path.join(ROOT, "tests", "data", "oracle")
FIXTURE_DIR = os.path.join(ROOT, "data", "fixture")


def write_series(name, values):
    path = os.path.join(ORACLE_DIR, name)
    with open(path, "w") as f:
        f.write("value\n")
        for v in values:
            f.write("%.17g\n" % v)


def johansen_trace(y, x, k, det):
    """Bivariate Johansen trace test, transitory VECM form.

    det: 'none' | 'restricted-constant' | 'unrestricted-constant'
    """
    data = np.column_stack([y, x]).astype(float)
    n, p = data.shape
    dx = np.diff(data, axis=0)
    T = n - 1 - k
    d0 = dx[k:]
    if k > 0:
        Z = np.column_stack([dx[k - j - 1 : n - 1 - j - 1] for j in range(k)])
    else:
        Z = np.zeros((T, 0))
    L1 = data[k : n - 1]
    if det == "unrestricted-constant":
        Z = np.column_stack([Z, np.ones(T)]) if Z.size else np.ones((T, 1))
    if det == "restricted-constant":
        L1 = np.column_stack([L1, np.ones(T)])

    def resid(Y, X):
        if X.shape[1] == 0:
            return Y
        coef, *_ = np.linalg.lstsq(X, Y, rcond=None)
        return Y - X @ coef

    R0 = resid(d0, Z)
    R1 = resid(L1, Z)
    S00 = R0.T @ R0 / T
    S11 = R1.T @ R1 / T
    S01 = R0.T @ R1 / T
    M = np.linalg.solve(S11, S01.T @ np.linalg.solve(S00, S01))
    ev = np.sort(np.real(np.linalg.eigvals(M)))[::-1][:p]
    ev = np.clip(ev, 0.0, 1 - 1e-16)
    trace = [-T * np.sum(np.log1p(-ev[r:])) for r in range(p)]
    return list(ev), trace


def main():
    os.makedirs(ORACLE_DIR, exist_ok=True)
    os.makedirs(FIXTURE_DIR, exist_ok=True)
    rng = np.random.default_rng(20240517)
    n = 500

    series = {}

    # 6 random walks (rw_5 with drift)
    for i in range(6):
        drift = 0.05 if i == 5 else 0.0
        series[f"rw_{i}"] = np.cumsum(rng.standard_normal(n) + drift) + 50.0

    # 5 white-noise series
    for i in range(5):
        series[f"wn_{i}"] = rng.standard_normal(n) * (1.0 + 0.5 * i)

    # 5 stationary AR(1) series
    for i, phi in enumerate([0.5, 0.7, 0.9, -0.5, 0.95]):
        e = rng.standard_normal(n)
        y = np.empty(n)
        y[0] = e[0]
        for t in range(1, n):
            y[t] = phi * y[t - 1] + e[t]
        series[f"ar1_{i}"] = y

    # 2 cointegrated pairs: x = a*y + stationary AR(1)
    for i, (a, phi) in enumerate([(1.0, 0.6), (0.8, 0.8)]):
        y = np.cumsum(rng.standard_normal(n)) + 100.0
        e = rng.standard_normal(n)
        s = np.empty(n)
        s[0] = e[0]
        for t in range(1, n):
            s[t] = phi * s[t - 1] + e[t]
        series[f"pair{i}_y"] = y
        series[f"pair{i}_x"] = a * y + 5.0 + s

    assert len(series) == 20
    for name, values in series.items():
        write_series(name + ".csv", values)

    # --- ADF expectations (statsmodels is the oracle) ---
    adf_cases = []
    kinds = {"n": "no-constant", "c": "constant", "ct": "constant+trend"}
    plans = []
    names = sorted(series)
    for idx, name in enumerate(names):
        reg = ["c", "ct", "n"][idx % 3]
        if idx % 2 == 0:
            plans.append((name, reg, idx % 5, False))  # fixed lags 0..4
        else:
            plans.append((name, reg, 8, True))  # AIC selection up to 8
    # a few extra fixed-lag constant cases for the drifted walk and pairs
    plans += [("rw_5", "c", 2, False), ("pair0_x", "c", 1, False),
              ("pair1_y", "ct", 3, False)]
    for name, reg, lags, auto in plans:
        data = series[name]
        if auto:
            stat, pval, used, nobs, *_ = adfuller(data, maxlag=lags,
                                                  regression=reg, autolag="AIC")
        else:
            stat, pval, used, nobs, *_ = adfuller(data, maxlag=lags,
                                                  regression=reg, autolag=None)
        adf_cases.append({
            "series": name + ".csv",
            "regression": kinds[reg],
            "max_lags": lags,
            "autolag": auto,
            "stat": stat,
            "pvalue": pval,
            "lags": int(used),
            "nobs": int(nobs),
        })

    # --- Johansen expectations ---
    # The numpy implementation above is validated against statsmodels'
    # coint_johansen for the two deterministic cases statsmodels covers,
    # then trusted for the restricted-constant case.
    sm_det = {"none": -1, "unrestricted-constant": 0}
    for (yn, xn) in [("pair0_y", "pair0_x"), ("rw_0", "rw_1")]:
        for k in (1, 2):
            for det, order in sm_det.items():
                ev, tr = johansen_trace(series[yn], series[xn], k, det)
                ref = coint_johansen(np.column_stack([series[yn], series[xn]]),
                                     order, k)
                rel = np.max(np.abs(np.array(tr) - ref.trace_stat)
                             / np.abs(ref.trace_stat))
                assert rel < 1e-10, (yn, xn, k, det, rel)

    joh_cases = []
    joh_plans = [
        ("pair0_y", "pair0_x", 1, "restricted-constant"),
        ("pair0_y", "pair0_x", 1, "none"),
        ("pair0_y", "pair0_x", 1, "unrestricted-constant"),
        ("pair0_y", "pair0_x", 2, "restricted-constant"),
        ("pair1_y", "pair1_x", 1, "restricted-constant"),
        ("pair1_y", "pair1_x", 3, "unrestricted-constant"),
        ("rw_0", "rw_1", 1, "restricted-constant"),
        ("rw_0", "rw_1", 1, "none"),
        ("rw_0", "rw_1", 2, "unrestricted-constant"),
        ("rw_2", "rw_3", 1, "restricted-constant"),
        ("rw_3", "rw_4", 4, "restricted-constant"),
        ("rw_2", "rw_5", 2, "none"),
    ]
    for yn, xn, k, det in joh_plans:
        ev, tr = johansen_trace(series[yn], series[xn], k, det)
        joh_cases.append({
            "y": yn + ".csv",
            "x": xn + ".csv",
            "lag": k,
            "det": det,
            "eig": ev,
            "trace": tr,
        })

    with open(os.path.join(ORACLE_DIR, "expected.json"), "w") as f:
        json.dump({"adf": adf_cases, "johansen": joh_cases}, f, indent=1)
    print(f"oracle: {len(adf_cases)} ADF cases, {len(joh_cases)} Johansen cases")

    # --- bundled fixture dataset -------------------------------------
    # Target SPX follows a noisy geometric walk whose next-day return
    # partially corrects the spreads of two cointegrated companions;
    # the remaining candidates are independent walks.
    frng = np.random.default_rng(1)
    days = 420
    mu, sigma = 0.0, 0.009
    phi1, phi2 = 0.80, 0.65
    s1_sig, s2_sig = 1.5, 1.2
    kappa1, kappa2 = 0.014, -0.011

    spx = np.empty(days)
    s1 = np.empty(days)
    s2 = np.empty(days)
    spx[0] = 100.0
    s1[0] = s1_sig * frng.standard_normal()
    s2[0] = s2_sig * frng.standard_normal()
    s1_scale = s1_sig / np.sqrt(1 - phi1 ** 2)
    s2_scale = s2_sig / np.sqrt(1 - phi2 ** 2)
    for t in range(1, days):
        r = (mu + kappa1 * (s1[t - 1] / s1_scale) + kappa2 * (s2[t - 1] / s2_scale)
             + sigma * frng.standard_normal())
        spx[t] = spx[t - 1] * np.exp(r)
        s1[t] = phi1 * s1[t - 1] + s1_sig * frng.standard_normal()
        s2[t] = phi2 * s2[t - 1] + s2_sig * frng.standard_normal()
    coin1 = 1.2 * spx + 10.0 + s1
    coin2 = 0.6 * spx + 40.0 + s2

    walks = {}
    for i in range(4):
        r = frng.standard_normal(days) * 0.025 + 0.0005
        walks[f"RW{i + 1}"] = 80.0 * np.exp(np.cumsum(r))

    # weekday calendar from 2021-01-04
    dates = []
    day = np.datetime64("2021-01-04")
    while len(dates) < days:
        if np.is_busday(day):
            dates.append(str(day))
        day += 1

    def write_fixture(name, values, gaps=()):
        with open(os.path.join(FIXTURE_DIR, name + ".csv"), "w") as f:
            f.write("Date,Open,High,Low,Close,Volume\n")
            for i, (d, v) in enumerate(zip(dates, values)):
                close = "null" if i in gaps else "%.6f" % v
                f.write(f"{d},{v * 0.99:.6f},{v * 1.01:.6f},{v * 0.98:.6f},"
                        f"{close},{1000 + i}\n")

    write_fixture("SPX", spx)
    write_fixture("COIN1", coin1)
    write_fixture("COIN2", coin2)
    for name, values in walks.items():
        write_fixture(name, values, gaps=(37, 110) if name == "RW2" else ())
    print(f"fixture: {days} days, SPX range "
          f"{spx.min():.1f}..{spx.max():.1f}")


if __name__ == "__main__":
    main()

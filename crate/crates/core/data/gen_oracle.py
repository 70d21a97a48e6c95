#!/usr/bin/env python3
"""Regenerate the extended-precision oracle tables shipped with mcev-core.

Usage:  python3 gen_oracle.py            (writes ratio_oracle.csv next to this file)
        python3 gen_oracle.py --check    (prints spot values used as frozen test constants)

Values come from direct 60-digit summation of the first-kind confluent
hypergeometric series sum_s (theta)_s / ((omega)_s s!) x^s.  No library
hypergeometric routine is used for the table itself; mpmath.hyp1f1 is only
consulted as a sanity cross-check.  Parameters are written with repr() so the
binary64 values read back by Rust are exactly the ones the oracle evaluated.
"""
import os
import sys

from mpmath import mp, mpf, hyp1f1, besseli, whitm, loggamma, log, sqrt, pi, e

mp.dps = 60


def kummer_series(theta, omega, x):
    theta, omega, x = mpf(theta), mpf(omega), mpf(x)
    total = mpf(1)
    term = mpf(1)
    s = 0
    eps = mpf(10) ** (-70)
    while True:
        term *= (theta + s) * x / ((omega + s) * (s + 1))
        s += 1
        total += term
        if s > x + 10 and abs(term) < eps * abs(total):
            return total
        if s > 200000:
            raise RuntimeError("oracle series did not converge")


def ratio(theta, omega, x):
    return kummer_series(theta - 1.0, omega, x) / kummer_series(theta, omega, x)


THETAS = [0.6, 1.2, 2.5, 5.1]
OMEGAS = [1.3, 2.2, 5.24]
XS = [0.0, 0.01, 0.5, 1.0, 4.0, 10.0, 40.0, 100.0, 400.0, 800.0]


def stress_params():
    lam, eta = 1.2, 2.12
    return 0.5 + eta - lam, 1.0 + 2.0 * eta


def rows():
    out = []
    for th in THETAS:
        for om in OMEGAS:
            for x in XS:
                out.append((th, om, x))
    th, om = stress_params()
    for x in [0.5, 1.0, 2.0, 4.0, 40.0, 100.0, 200.0, 400.0, 700.0, 800.0]:
        out.append((th, om, x))
    # extra points used by unit tests
    for th, om, x in [(1.7, 2.2, 0.5), (1.7, 2.2, 5.0), (1.7, 2.2, 100.0), (3.5, 2.0, 50.0)]:
        out.append((th, om, x))
    return out


def write_table(path):
    with open(path, "w") as fh:
        fh.write("theta,omega,x,value\n")
        for th, om, x in rows():
            v = ratio(th, om, x)
            check = hyp1f1(th - 1.0, om, x) / hyp1f1(th, om, x)
            assert abs(v - check) <= mpf(10) ** (-40) * abs(v), (th, om, x)
            fh.write(f"{th!r},{om!r},{x!r},{mp.nstr(v, 25, min_fixed=-1000, max_fixed=1000)}\n")


def spot_values():
    print("kummer(1.2,2.5,10) =", mp.nstr(kummer_series(1.2, 2.5, 10.0), 25))
    print("ratio(1.7,2.2,0.5) =", mp.nstr(ratio(1.7, 2.2, 0.5), 25))
    print("ratio(1.7,2.2,100) =", mp.nstr(ratio(1.7, 2.2, 100.0), 25))
    th, om = stress_params()
    print("stress theta,omega =", repr(th), repr(om))
    print("ratio(stress,800) =", mp.nstr(ratio(th, om, 800.0), 25))
    print("ln kummer(stress,800) =", mp.nstr(log(kummer_series(th, om, 800.0)), 25))
    print("I_1.8(10) =", mp.nstr(besseli(mpf(1.8), mpf(10)), 25))
    print("I_2.3(0.7) =", mp.nstr(besseli(mpf(2.3), mpf(0.7)), 25))
    print("I_5.07(60) e^-60 =", mp.nstr(besseli(mpf(5.07), mpf(60)) * mp.exp(-60), 25))
    print("M_{0.3,0.9}(4) =", mp.nstr(whitm(mpf(0.3), mpf(0.9), mpf(4)), 25))
    print("lnGamma(7.3) =", mp.nstr(loggamma(mpf(7.3)), 25))
    print("lnGamma(0.1) =", mp.nstr(loggamma(mpf(0.1)), 25))
    print("lnGamma(123.4) =", mp.nstr(loggamma(mpf(123.4)), 25))


if __name__ == "__main__":
    if "--check" in sys.argv:
        spot_values()
    else:
        write_table(os.path.join(os.path.dirname(os.path.abspath(__file__)), "ratio_oracle.csv"))

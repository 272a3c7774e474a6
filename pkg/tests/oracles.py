"""Independent high-precision oracles used across the test suite.

The Bessel oracles are ascending power series summed with mpmath at a
precision that over-provisions for the alternating-series cancellation
(about x/2.3 digits are lost at argument x), so results are exact to far
below any tolerance asserted in the tests.  They deliberately share no code
with the production implementations.
"""

import mpmath as mp


def _dps_for(x: float) -> int:
    return 40 + int(0.9 * abs(x))


def j0_oracle(x) -> float:
    """J0 by its ascending series."""
    with mp.workdps(_dps_for(x)):
        xm = mp.mpf(x)
        q = -((xm / 2) ** 2)
        term = mp.mpf(1)
        total = mp.mpf(1)
        m = 0
        while abs(term) > mp.mpf("1e-38") * max(mp.mpf(1), abs(total)):
            m += 1
            term *= q / (m * m)
            total += term
        return float(total)


def y0_oracle(x) -> float:
    """Y0 by its ascending series with the logarithmic term."""
    with mp.workdps(_dps_for(x)):
        xm = mp.mpf(x)
        q = -((xm / 2) ** 2)
        term = mp.mpf(1)
        harmonic = mp.mpf(0)
        tail = mp.mpf(0)
        m = 0
        while True:
            m += 1
            term *= q / (m * m)
            harmonic += mp.mpf(1) / m
            contrib = -term * harmonic
            tail += contrib
            if abs(contrib) < mp.mpf("1e-38") * max(mp.mpf(1), abs(tail)):
                break
        # reuse of the series for J0 keeps this self-contained
        qj = -((xm / 2) ** 2)
        jt = mp.mpf(1)
        jtot = mp.mpf(1)
        m = 0
        while abs(jt) > mp.mpf("1e-38") * max(mp.mpf(1), abs(jtot)):
            m += 1
            jt *= qj / (m * m)
            jtot += jt
        val = (2 / mp.pi) * ((mp.log(xm / 2) + mp.euler) * jtot + tail)
        return float(val)


def bisect_root(f, lo: float, hi: float, iters: int = 200) -> float:
    """Plain bisection; f(lo) and f(hi) must bracket a sign change."""
    flo = f(lo)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if fm == 0.0:
            return mid
        if (flo < 0) == (fm < 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)

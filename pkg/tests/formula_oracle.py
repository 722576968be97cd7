"""High-precision reference evaluation of the drift bound formulas.

Written independently of ``mcmc_certify.bounds``: every expression is typed
term by term in mpmath at 50 digits, with no shared helpers.  Results are the
squared quantities (sigma^2, C0, C1^2, C2^2) with fbar norm 1.
"""

from mpmath import mp, mpf, sqrt

mp.dps = 50


def geo_oracle(lam, K, beta, pi_V, pi_sqrtV, xi_V, xi_sqrtV, xn_V, xn_sqrtV):
    lam, K, beta = mpf(lam), mpf(K), mpf(beta)
    pi_V, pi_sqrtV = mpf(pi_V), mpf(pi_sqrtV)
    rl, rk = sqrt(lam), sqrt(K)

    c0_V = lam / (1 - lam) * pi_V + (K - lam - beta) / (beta * (1 - lam)) + mpf(1) / 2
    c0_sqrtV = rl / (1 - rl) * pi_sqrtV + (rk - rl - beta) / (beta * (1 - rl)) + mpf(1) / 2
    s2 = (1 + rl) / (1 - rl) * pi_V + 2 * (rk - rl - beta) / (beta * (1 - rl)) * pi_sqrtV

    def block(v, sv):
        v, sv = mpf(v), mpf(sv)
        return (v / (1 - rl) ** 2
                + 2 * (rk - rl - beta) / (beta * (1 - rl) ** 2) * sv
                + (beta * (K - lam - beta) + 2 * (rk - rl - beta) ** 2) / (beta**2 * (1 - rl) ** 2))

    return {"c0_V": c0_V, "c0_sqrtV": c0_sqrtV, "s2": s2,
            "c1_sq": block(xi_V, xi_sqrtV), "c2_sq": block(xn_V, xn_sqrtV)}


def poly_oracle(lam, K, beta, alpha, pi, xi):
    """``pi`` and ``xi`` map an exponent eta to the moment of V^eta."""
    lam, K, b, a = mpf(lam), mpf(K), mpf(beta), mpf(alpha)
    P = {mpf(k): mpf(v) for k, v in pi.items()}
    X = {mpf(k): mpf(v) for k, v in xi.items()}

    def get(d, eta):
        for k, v in d.items():
            if abs(k - eta) < mpf(10) ** -12:
                return v
        raise KeyError(eta)

    om = 1 - lam
    c0 = get(P, a) / (a * om) + (K**a - 1 - b) / (b * a * om) + 1 / b - mpf(1) / 2
    s2 = (get(P, 3 * a - 2) + 4 * get(P, 2 * a - 1) / (a * om)
          + 2 * ((2 * K ** (a / 2) - 2 - 2 * b) / (a * b * om) + 1 / b - 1) * get(P, mpf(3) / 2 * a - 1))

    tail = ((a * om + 4) / (a * b * om)
            + (K ** (2 * a - 1) - 1 - b) / ((2 * a - 1) * b * om)
            + 4 * (K**a - 1 - b) / (a**2 * b * om**2)
            + 2 * ((2 * K ** (a / 2) - 2 - 2 * b) / (a * b * om) + 1 / b) ** 2
            - 2 * ((2 * K ** (a / 2) - 2 - 2 * b) / (a * b * om) + 1 / b))
    half = (8 * K ** (a / 2) - 8 - 8 * b) / (a**2 * b * om**2) + (4 - 4 * b) / (a * b * om)

    c1_sq = (get(X, 2 * a - 1) / ((2 * a - 1) * om) + 4 * get(X, a) / (a**2 * om**2)
             + half * get(X, a / 2) + tail)
    c2_sq = (1 / ((2 * a - 1) * b ** ((2 * a - 1) / a) * om) * ((K - lam) / om) ** ((4 * a - 2) / a)
             + 4 * (K - lam) ** 2 / (a**2 * b * om**4)
             + half * (K - lam) / (sqrt(b) * om)
             + tail)
    return {"c0": c0, "s2": s2, "c1_sq": c1_sq, "c2_sq": c2_sq}

"""Independent reference solutions computed by adaptive quadrature (scipy.integrate.quad).

For omega = g(r) cos(m theta) the free-space stream function separates into a
radial Green's-function integral; the annulus solution adds A r^m + B r^-m so
that psi vanishes on both circles (zero circulation on the inner one).
"""

import numpy as np
from scipy.integrate import quad

def psi_free(g, m, r):
    """Radial profile of the free-space stream function of g(s) cos(m theta), and its r-derivative."""
    if m == 0:
        P = lambda s: np.log(max(r, s))
        dP = lambda s: (1.0/r if s < r else 0.0)
    else:
        P = lambda s: -(1/(2*m))*(min(r,s)/max(r,s))**m
        dP = lambda s: (0.5*s**m*r**(-m-1) if s < r else -0.5*r**(m-1)*s**(-m))
    pts = [r] if 1 < r < 2 else None
    val = quad(lambda s: P(s)*g(s)*s, 1, 2, points=pts, epsabs=1e-14, epsrel=1e-13, limit=200)[0]
    der = quad(lambda s: dP(s)*g(s)*s, 1, 2, points=pts, epsabs=1e-14, epsrel=1e-13, limit=200)[0]
    return val, der

def annulus_velocity(g, m, r, theta):
    """Polar velocity (u_r, u_theta) in the annulus: zero circulation on r = 1, u.n = 0 on both circles."""
    if m == 0:
        _, d = psi_free(g, 0, r)
        return 0.0*theta, d + 0*theta
    p1, _ = psi_free(g, m, 1.0); p2, _ = psi_free(g, m, 2.0)
    # harmonic correction A r^m + B r^-m cancels psi on both circles
    M = np.array([[1, 1], [2.0**m, 2.0**-m]])
    A, B = np.linalg.solve(M, [-p1, -p2])
    p, d = psi_free(g, m, r)
    psi = p + A*r**m + B*r**-m
    dpsi = d + m*A*r**(m-1) - m*B*r**(-m-1)
    # u_r = -(1/r) d psi/d theta, u_theta = d psi/d r
    return (m/r)*psi*np.sin(m*theta), dpsi*np.cos(m*theta)

def free_velocity(g, m, r, theta):
    p, d = psi_free(g, m, r)
    return (m/r)*p*np.sin(m*theta), d*np.cos(m*theta)


def elliptic_period_quad(h):
    """Pendulum libration period by direct quadrature of 4 * int_0^a dx / sqrt(2 (cos x - cos a))."""
    a = np.arccos(-h)
    k = np.sin(a / 2)
    # substitution sin(x/2) = k sin(phi) removes the endpoint singularity
    return 4.0 * quad(lambda p: 1.0 / np.sqrt(1.0 - (k * np.sin(p)) ** 2), 0.0, np.pi / 2, epsabs=1e-13, epsrel=1e-13)[0]


def orbit_return_times(perm, E):
    """First return to E by forward iteration of the permutation, one point at a time."""
    E = set(E)
    out = {}
    for x in sorted(E):
        y, k = perm[x], 1
        while y not in E:
            y, k = perm[y], k + 1
        out[x] = k
    return out


def an_sets_forward(perm, E, n_max):
    """A_i as {x : f^k(x) in E for some k >= i}, scanning k up to i + n (enough for any cycle)."""
    n = len(perm)
    E = set(E)
    sets = []
    for i in range(n_max + 1):
        a = set()
        for x in range(n):
            y = x
            for _ in range(i):
                y = perm[y]
            for _ in range(n):
                if y in E:
                    a.add(x)
                    break
                y = perm[y]
        sets.append(a)
    return sets

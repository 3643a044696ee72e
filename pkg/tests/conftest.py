import numpy as np

from np_duet import oracle as bie


def exterior_points(g, count, seed=0, margin=0.05, outside=False):
    """Random points in a box around the pair, at least ``margin`` from both circles.

    With ``outside`` only points exterior to both disks are kept.
    """
    rng = np.random.default_rng(seed)
    rmax = max(g.r1, g.r2)
    pts = []
    while len(pts) < count:
        p = complex(rng.uniform(g.c1 - g.r1 - 1, g.c2 + g.r2 + 1), rng.uniform(-rmax - 1, rmax + 1))
        dist = [abs(p - g.center(s)) - g.radius(s) for s in (1, 2)]
        if min(abs(d) for d in dist) >= margin and abs(p) > 1e-3 and (min(dist) > 0 or not outside):
            pts.append(p)
    return np.array(pts)


def oracle_error(sol, nodes=256, points=50, seed=0, system=None):
    """Normwise relative difference between the spectral field and the Nystrom field."""
    g = sol.geometry
    sysm = system if system is not None else bie.assemble(g, nodes)
    bg = sol.background
    eta = np.real(bg.evaluate(sysm.nodes, 1)[1] * np.conj(sysm.normals))
    phi = bie.oracle_solve(sysm, eta, sol.lambda1, sol.lambda2)
    pts = exterior_points(g, points, seed)
    uo = bie.oracle_field(sysm, phi, lambda z: bg.evaluate(z, 0)[0], pts)
    us = sol.evaluate(pts).u
    return float(np.max(np.abs(us - uo)) / np.max(np.abs(uo)))

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from np_duet.errors import DomainError, GeometryError, PoleError
from np_duet.geometry import (INFINITY, Frame, Zone, classify_zone, contraction_map,
                              contraction_map_derivative, derive_geometry, forward_map,
                              forward_map_ext, inverse_map, inverse_map_ext, physical_zone_codes,
                              reflection_map_G, reflection_map_G_derivative, singular_function_q1,
                              singular_function_q1_grad)

radius = st.floats(0.2, 5.0)
separation = st.floats(1e-6, 0.5)

# 30-digit evaluations of the closed forms
REFERENCE = {
    (1.0, 1.0, 0.01): dict(beta=0.20024984394500785728, c1=-1.1051249219725039286,
                           c2=0.90487507802749607136, R1=0.90487507802749607136,
                           R2=1.1051249219725039286, rho=0.81879890683526710344),
    (1.2, 0.8, 0.05): dict(beta=0.44135054479499488484, c1=-1.4407972236170096375,
                           c2=0.60920277638299036246, R1=0.83287223235167896058,
                           R2=1.3131916514724815591, rho=0.6342350954011773365),
}


@pytest.mark.parametrize("args", list(REFERENCE))
def test_reference_constants(args):
    g = derive_geometry(*args)
    for name, val in REFERENCE[args].items():
        assert getattr(g, name) == pytest.approx(val, rel=1e-14, abs=1e-15)
    assert g.p1 == -g.beta and g.p2 == 0


def test_fixed_point_images():
    g = derive_geometry(1, 1, 0.01)
    assert forward_map(g, -g.beta) == 0
    assert forward_map(g, -2 * g.beta) == pytest.approx(0.5)
    assert forward_map_ext(g, 0) is INFINITY
    assert forward_map_ext(g, INFINITY) == 1
    assert inverse_map_ext(g, 1) is INFINITY
    assert inverse_map(g, 0) == pytest.approx(-g.beta)
    assert inverse_map(g, -1) == pytest.approx(-g.beta / 2)


def test_errors():
    with pytest.raises(DomainError):
        derive_geometry(1, -1, 0.1)
    with pytest.raises(DomainError):
        derive_geometry(1, 1, 0)
    g = derive_geometry(1, 1, 0.01)
    with pytest.raises(PoleError):
        forward_map(g, 0)
    with pytest.raises(PoleError):
        inverse_map(g, 1)
    with pytest.raises(PoleError):
        singular_function_q1(g, g.p1)
    with pytest.raises(DomainError):
        contraction_map(g, 1, 0, 1.0, g.c2)
    with pytest.raises(DomainError):
        reflection_map_G(g, g.c1)
    with pytest.raises(GeometryError):
        Frame.from_disks(0, 1, 1.5, 1)


@settings(max_examples=60, deadline=None)
@given(radius, radius, st.floats(1e-4, 0.5))
def test_invariants(r1, r2, eps):
    g = derive_geometry(r1, r2, eps)
    assert abs((g.c2 - g.c1) - (r1 + r2 + eps)) <= 4e-16 * (r1 + r2 + eps)
    assert 0 < g.R1 < 1 < g.R2 and 0 < g.rho < 1
    theta = 2 * np.pi * np.arange(64) / 64
    for side in (1, 2):
        z = g.center(side) + g.radius(side) * np.exp(1j * theta)
        a = np.abs(forward_map(g, z))
        assert np.max(np.abs(a - g.Rj(side))) < 1e-12 * g.Rj(side)
        q = singular_function_q1(g, z)
        assert np.ptp(q) <= 1e-12 * max(1.0, np.max(np.abs(q)))


@settings(max_examples=40, deadline=None)
@given(radius, radius, separation)
def test_boundary_image_conditioning(r1, r2, eps):
    # below eps ~ 1e-4 the rounding of c + r e^{it} itself, amplified by
    # |T'(z)| = beta / |z|^2, dominates; the error stays at that level
    g = derive_geometry(r1, r2, eps)
    theta = 2 * np.pi * np.arange(64) / 64
    for side in (1, 2):
        z = g.center(side) + g.radius(side) * np.exp(1j * theta)
        zeta = forward_map(g, z)
        cond = np.finfo(float).eps * (abs(g.center(side)) + g.radius(side)) * g.beta / np.abs(z) ** 2
        err = np.abs(np.abs(zeta) - g.Rj(side))
        assert np.all(err <= 1e-12 * g.Rj(side) + 8 * cond)


@settings(max_examples=40, deadline=None)
@given(radius, radius, separation, st.integers(0, 2 ** 31 - 1))
def test_round_trip(r1, r2, eps, seed):
    g = derive_geometry(r1, r2, eps)
    rng = np.random.default_rng(seed)
    s = np.sqrt(rng.uniform(g.R1 ** 2, g.R2 ** 2, 1000))
    zeta = s * np.exp(2j * np.pi * rng.uniform(size=1000))
    zeta = zeta[np.abs(zeta - 1) > 1e-6]
    back = forward_map(g, inverse_map(g, zeta))
    assert np.max(np.abs(back - zeta) / np.abs(zeta)) < 1e-13


@settings(max_examples=30, deadline=None)
@given(radius, radius, separation, st.integers(0, 2 ** 31 - 1))
def test_zone_partition(r1, r2, eps, seed):
    g = derive_geometry(r1, r2, eps)
    rng = np.random.default_rng(seed)
    span = max(r1, r2) + 1
    z = rng.uniform(g.c1 - span, g.c2 + span, 1000) + 1j * rng.uniform(-span, span, 1000)
    d1, d2 = np.abs(z - g.c1) / r1, np.abs(z - g.c2) / r2
    keep = (np.abs(d1 - 1) > 1e-9) & (np.abs(d2 - 1) > 1e-9) & (z != 0)
    z, d1, d2 = z[keep], d1[keep], d2[keep]
    expect = np.where(d1 < 1, 1, np.where(d2 < 1, 2, 0))
    assert np.array_equal(physical_zone_codes(g, z), expect)


def test_zone_ties():
    g = derive_geometry(1.2, 0.8, 0.05)
    assert classify_zone(g, g.R1) is Zone.INCLUSION1
    assert classify_zone(g, g.R2) is Zone.ANNULUS
    assert classify_zone(g, 1) is Zone.ANNULUS
    assert classify_zone(g, g.R2 + 1) is Zone.INCLUSION2
    assert Zone.ANNULUS.tag == "annulus"


def test_rho_monotone_in_eps():
    rho = [derive_geometry(1.2, 0.8, e).rho for e in np.geomspace(1e-6, 0.1, 20)]
    assert np.all(np.diff(rho) < 0)


def test_q1_gap_gradient_slope():
    eps = np.array([1e-2, 1e-3, 1e-4, 1e-5])
    vals = []
    for e in eps:
        g = derive_geometry(1, 1, e)
        mid = sum(g.gap) / 2
        vals.append(abs(singular_function_q1_grad(g, mid)))
    slope = np.polyfit(np.log(eps), np.log(vals), 1)[0]
    assert abs(slope + 0.5) < 0.05
    g = derive_geometry(1, 1, 0.01)
    assert singular_function_q1(g, -g.beta / 2 + 3j) == pytest.approx(0, abs=1e-15)


def test_contraction_maps():
    g = derive_geometry(1.2, 0.8, 0.05)
    rng = np.random.default_rng(1)
    for side in (1, 2):
        c, r = g.center(side), g.radius(side)
        z = c + r * np.sqrt(rng.uniform(size=200)) * np.exp(2j * np.pi * rng.uniform(size=200))
        assert np.allclose(contraction_map(g, 1, 0, 1.0, z if side == 1 else z - c + g.c1),
                           z if side == 1 else z - c + g.c1, rtol=1e-13, atol=1e-13)
        tlo = g.rho ** 2 if side == 1 else g.rho
        for l in (0, 1, 5, 30):
            for t in (tlo, 1.0):
                w = contraction_map(g, side, l, t, z)
                assert np.all(np.abs(w - c) <= r * (1 + 1e-12))
    z = g.c1 + g.r1 * np.exp(2j * np.pi * np.arange(32) / 32)
    ratios = []
    for l in range(31):
        d = np.max(np.abs(contraction_map_derivative(g, 1, l, 1.0, z)))
        ratios.append(d / (g.rho ** (2 * l) * (l + 1)))
    assert max(ratios) < 10 * min(ratios)
    h = 1e-6
    z0 = g.c1 + 0.3
    fd = (contraction_map(g, 1, 2, 0.7, z0 + h) - contraction_map(g, 1, 2, 0.7, z0 - h)) / (2 * h)
    assert contraction_map_derivative(g, 1, 2, 0.7, z0) == pytest.approx(fd, rel=1e-7)


def test_reflection_map():
    g = derive_geometry(1.2, 0.8, 0.05)
    z = g.c1 + g.r1 * np.exp(2j * np.pi * np.arange(64) / 64)
    z = z[np.abs(z) > 1e-12]
    w = reflection_map_G(g, z)
    assert np.allclose(np.abs(forward_map(g, w)), g.R1, rtol=1e-12)
    rng = np.random.default_rng(2)
    p = rng.uniform(-6, 6, 400) + 1j * rng.uniform(-6, 6, 400)
    p = p[(np.abs(p - g.c1) > g.r1) & (np.abs((g.R1 ** 2 - 1) * np.conj(p) - g.beta) > 1e-3)][:200]
    assert np.all(np.abs(reflection_map_G(g, p) - g.c1) <= g.r1 * (1 + 1e-12))
    bounds = []
    for e in (1e-2, 1e-3, 1e-4, 1e-5):
        ge = derive_geometry(1, 1, e)
        q = ge.c2 + (ge.r2 + 0.5) * np.exp(2j * np.pi * np.arange(64) / 64)
        bounds.append(np.max(np.abs(reflection_map_G_derivative(ge, q))))
    assert max(bounds) < 2 * min(bounds)


def test_frame_round_trip():
    fr = Frame.from_disks(3 + 1j, 1.2, 3 + 1j + 2.05 * np.exp(0.7j), 0.8)
    g = fr.geometry
    assert fr.to_frame(3 + 1j) == pytest.approx(g.c1)
    assert fr.to_frame(3 + 1j + 2.05 * np.exp(0.7j)) == pytest.approx(g.c2)
    w = np.array([0.3 - 2j, 5 + 4j])
    assert np.allclose(fr.from_frame(fr.to_frame(w)), w, rtol=1e-14)

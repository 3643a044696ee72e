import numpy as np
import pytest

from np_duet import oracle as bie
from np_duet.errors import CompatibilityError, DomainError
from np_duet.geometry import derive_geometry
from np_duet.spectrum import eigenfunction_twodisks, solve_modes

G = derive_geometry(1.2, 0.8, 0.05)


@pytest.fixture(scope="module")
def nystrom():
    return bie.assemble(G, 256)


def test_assembly_errors():
    with pytest.raises(DomainError):
        bie.assemble(G, 15)
    with pytest.raises(DomainError):
        bie.assemble(G, 8)
    with pytest.raises(DomainError):
        bie.assemble(G, 32, parametrization="chebyshev")


def test_diagonal_block_kernel(nystrom):
    n = nystrom.nodes_per_circle
    for j, c in enumerate(nystrom.circles):
        block = nystrom.A_kernel[j * n:(j + 1) * n, j * n:(j + 1) * n]
        assert np.allclose(block, 1 / (4 * np.pi * c.radius), rtol=1e-15)


def test_log_kernel_symmetric(nystrom):
    Gk = nystrom.G_kernel
    assert np.max(np.abs(Gk - Gk.T)) < 1e-13 * np.max(np.abs(Gk))


def test_gauss_identity(nystrom):
    # the double layer of the indicator of circle b is 1/2 on circle b and 0 on the other
    D = nystrom.DL_matrix
    for b, sb in enumerate(nystrom.slices()):
        ind = np.zeros(D.shape[0])
        ind[sb] = 1
        out = D @ ind
        for a, sa in enumerate(nystrom.slices()):
            assert np.allclose(out[sa], 0.5 if a == b else 0.0, atol=1e-12)


def test_single_disk_annihilates_zero_mean():
    c = bie.uniform_circle(0.3 - 0.2j, 1.5, 64)
    sysm = bie.assemble_circles([c])
    for m in (1, 2, 7):
        assert np.max(np.abs(sysm.K_matrix @ np.exp(1j * m * c.tau))) < 1e-12


def test_symmetrization_residual_convergence():
    coarse = bie.symmetrization_residual(bie.assemble(G, 64))
    fine = bie.symmetrization_residual(bie.assemble(G, 256))
    assert fine * 1e4 <= coarse
    assert bie.symmetrization_residual(bie.assemble(derive_geometry(1, 1, 0.05), 256)) < 1e-8


def test_symmetrization_residual_swap():
    g = derive_geometry(1, 1, 0.05)
    a = bie.assemble(g, 64)
    b = bie.assemble_circles(a.circles[::-1], geometry=g)
    assert bie.symmetrization_residual(a) == pytest.approx(bie.symmetrization_residual(b), rel=1e-10)


def test_zero_data(nystrom):
    phi = bie.oracle_solve(nystrom, np.zeros(512), 0.75, 1.0)
    assert not np.any(phi)
    x = np.array([3.0 + 1j, -4.0])
    assert np.allclose(bie.oracle_field(nystrom, phi, lambda z: np.real(z), x), x.real)


def test_eigenmode_solve(nystrom):
    eta = np.concatenate([eigenfunction_twodisks(G, 1, "+", c.points, s)
                          for s, c in zip((1, 2), nystrom.circles)])
    for lam in (0.75, -1.5, 0.5):
        phi = bie.oracle_solve(nystrom, eta, lam, lam)
        a = solve_modes(lam, lam, G.rho, [1.0], [0.0]).a_plus[0]
        assert np.max(np.abs(phi - a * eta)) < 1e-8 * np.max(np.abs(eta))


def test_constant_density_far_field():
    sysm = bie.assemble(G, 64, parametrization="uniform")
    phi = np.zeros(128)
    phi[:64] = 1.0
    mass = 2 * np.pi * G.r1
    x = np.array([1e3, -2e2 + 5e2j, 40.0j])
    val = bie.oracle_field(sysm, phi, None, x, M=1024)
    assert np.allclose(val, mass / (2 * np.pi) * np.log(np.abs(x - G.c1)), rtol=1e-12)


def test_compatibility_and_modes(nystrom):
    with pytest.raises(CompatibilityError):
        bie.oracle_solve(nystrom, np.ones(512), 0.75, 1.0)
    with pytest.raises(DomainError):
        bie.oracle_solve(nystrom, np.zeros(512), 0.5, 1.0, mode="full")
    with pytest.raises(DomainError):
        bie.oracle_solve(nystrom, np.zeros(512), 0.75, 1.0, mode="other")


def test_full_and_deflated_solves_agree(nystrom):
    eta = np.real(np.conj(nystrom.normals))  # normal derivative of x
    a = bie.oracle_solve(nystrom, eta, 0.75, 5 / 9)
    b = bie.oracle_solve(nystrom, eta, 0.75, 5 / 9, mode="full")
    assert np.max(np.abs(a - b)) < 1e-9 * np.max(np.abs(a))


def test_near_boundary_warning(nystrom):
    with pytest.warns(RuntimeWarning, match="quadrature error"):
        bie.oracle_field(nystrom, np.zeros(512), None, np.array([G.c1 + G.r1 + 1e-6]))


def test_spectrum(nystrom):
    clusters = bie.oracle_spectrum(nystrom)
    half = [c for c in clusters if abs(c[0] - 0.5) < 1e-8]
    assert len(half) == 1 and half[0][1] == 2
    for n in range(1, 9):
        for s in (1, -1):
            exact = -s * 0.5 * G.rho ** n
            near = min(clusters, key=lambda c: abs(c[0] - exact))
            assert abs(near[0] - exact) < 1e-8
    assert bie.raw_eigenvalues(nystrom).size == 512

import importlib.util

import numpy as np
import pytest

from cpr_ldp._kernels import _pykernels

HAS_COMPILED = importlib.util.find_spec("cpr_ldp._kernels._ckernels") is not None
if HAS_COMPILED:
    from cpr_ldp._kernels import _ckernels

needs_compiled = pytest.mark.skipif(not HAS_COMPILED, reason="compiled kernels not built")


def two_level_matrix(rng, m=40, b=32, p=1.3, q=0.5):
    """Random two-level density matrix shaped like the randomizer channel."""
    dens = np.full((m, b), q)
    for j in range(m):
        lo = rng.integers(0, b - 4)
        dens[j, lo : lo + 4] = p
    return dens


class TestEmMechanics:
    def test_one_iteration_from_uniform(self):
        # every observation favors component 1 at level p against q
        p, q = 1.3, 0.5
        dens = np.array([[p, q]] * 10)
        pi, _, _, _ = _pykernels.em_decode(dens, np.array([0.25, 0.75]), 1, 1e-30)
        assert pi[0] == pytest.approx(p / (p + q), rel=1e-12)

    def test_monotone_concentration(self):
        p, q = 5.0, 0.1
        dens = np.array([[p, q]] * 8)
        grid = np.array([0.25, 0.75])
        previous = 0.5
        for iters in range(1, 10):
            pi, _, _, _ = _pykernels.em_decode(dens, grid, iters, 1e-30)
            assert pi[0] > previous
            previous = pi[0]
        assert previous > 0.99

    def test_point_mass_pseudo_sample(self):
        b = 8
        dens = np.full((1, b), 1e-30)
        dens[0, 0] = 1e30
        grid = (np.arange(1, b + 1) - 0.5) / b
        _, pseudo, _, _ = _pykernels.em_decode(dens, grid, 5, 1e-12)
        assert pseudo[0] == pytest.approx(1.0 / (2 * b), abs=1e-12)

    def test_loglik_trace_monotone(self):
        rng = np.random.default_rng(0)
        dens = two_level_matrix(rng)
        grid = np.linspace(0.01, 0.99, dens.shape[1])
        _, _, loglik, sums = _pykernels.em_decode(dens, grid, 60, 1e-12)
        assert np.all(np.diff(loglik) >= -1e-10)
        np.testing.assert_allclose(sums, 1.0, atol=1e-12)

    def test_rejects_bad_shapes(self):
        with pytest.raises(ValueError):
            _pykernels.em_decode(np.ones((3, 4)), np.ones(5), 10, 1e-6)


class TestKdeGridEval:
    def test_matches_direct_formula(self):
        rng = np.random.default_rng(1)
        z = rng.random(17)
        grid = np.linspace(0, 1, 101)
        h = 0.07
        direct = np.array(
            [sum(np.exp(-((g - zi) ** 2) / (2 * h * h)) for zi in z) / (len(z) * h) for g in grid]
        )
        np.testing.assert_allclose(_pykernels.kde_grid_eval(z, h, grid), direct, rtol=1e-12)

    def test_rejects_bad_input(self):
        with pytest.raises(ValueError):
            _pykernels.kde_grid_eval(np.array([]), 0.1, np.linspace(0, 1, 8))
        with pytest.raises(ValueError):
            _pykernels.kde_grid_eval(np.array([0.5]), 0.0, np.linspace(0, 1, 8))


@needs_compiled
class TestBackendParity:
    def test_em_decode_parity(self):
        rng = np.random.default_rng(2)
        for trial in range(5):
            m = int(rng.integers(1, 60))
            b = int(rng.integers(2, 80))
            dens = two_level_matrix(rng, m=m, b=max(b, 6))
            grid = (np.arange(1, dens.shape[1] + 1) - 0.5) / dens.shape[1]
            py = _pykernels.em_decode(dens, grid, 40, 1e-8)
            cy = _ckernels.em_decode(dens, grid, 40, 1e-8)
            for a, b_ in zip(py, cy):
                np.testing.assert_allclose(a, b_, rtol=1e-10, atol=1e-12)

    def test_kde_parity(self):
        rng = np.random.default_rng(3)
        z = rng.random(33)
        grid = np.linspace(0, 1, 257)
        for h in (0.003, 0.05, 0.4):
            np.testing.assert_allclose(
                _ckernels.kde_grid_eval(z, h, grid),
                _pykernels.kde_grid_eval(z, h, grid),
                rtol=1e-12,
                atol=1e-300,
            )

    def test_selected_backend_is_compiled(self):
        import cpr_ldp._kernels as kernels

        assert kernels.BACKEND in ("cython", "python")

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from skipfree import _accel, kernels
from skipfree.distributions import make_finite, make_poisson_shifted
from skipfree.montecarlo import censor_cut

from conftest import walk_laws

needs_numba = pytest.mark.skipif(not _accel.HAVE_NUMBA, reason="numba unavailable or disabled")


def brute_power(pmf, n):
    out = np.array([1.0])
    for _ in range(n):
        out = np.convolve(out, pmf)
    return out


class TestPropagate:
    @pytest.mark.parametrize("backend", ["numpy", pytest.param("numba", marks=needs_numba)])
    @given(d=walk_laws(max_size=6, max_point=5), n=st.integers(1, 15), hi=st.integers(-3, 6))
    @settings(max_examples=25)
    def test_exact_below_window(self, backend, d, n, hi):
        if hi < -n:
            return
        masses, offset, dropped, lost, _ = kernels.propagate(d.pmf, -1, n, hi, backend=backend)
        full = brute_power(d.pmf, n)
        upto = hi - offset + 1
        np.testing.assert_allclose(masses[:upto], full[:upto], atol=1e-15)
        assert dropped == pytest.approx(full[upto:].sum(), abs=1e-13)
        assert abs(lost) <= n * 1e-15  # only the rounding of sum(pmf) - 1

    @needs_numba
    @given(d=walk_laws(), n=st.integers(1, 40), hi=st.integers(-1, 10))
    @settings(max_examples=40)
    def test_backends_bit_identical(self, d, n, hi):
        a = kernels.propagate(d.pmf, -1, n, hi, record_level=-1, backend="numba")
        b = kernels.propagate(d.pmf, -1, n, hi, record_level=-1, backend="numpy")
        np.testing.assert_array_equal(a[0], b[0])
        assert a[1:4] == b[1:4]
        np.testing.assert_array_equal(a[4], b[4])

    def test_record_tracks_level(self):
        d = make_finite([(-1, 0.3), (1, 0.7)])
        _, _, _, _, rec = kernels.propagate(d.pmf, -1, 5, 1, record_level=-1)
        assert rec[0] == pytest.approx(0.3)
        assert rec[1] == 0.0
        assert rec[2] == pytest.approx(3 * 0.7 * 0.09)

    def test_defect_is_lost(self):
        d = make_poisson_shifted(1.5)
        _, _, dropped, lost, _ = kernels.propagate(d.pmf, -1, 10, 3)
        # defect leaks from the mass still inside the window at each step
        assert 0.5 * 10 * d.truncation_defect < lost <= 10 * d.truncation_defect * (1 + 1e-9)

    def test_unreachable_window(self):
        with pytest.raises(ValueError):
            kernels.propagate(np.array([0.5, 0.5]), -1, 3, -4)


class TestSampling:
    def test_split_words_order(self):
        raw = np.array([0x0000000200000001, 0x0000000400000003], dtype=np.uint64)
        np.testing.assert_array_equal(kernels.split_words(raw, 3), [1, 2, 3])

    @given(walk_laws())
    @settings(max_examples=40)
    def test_guide_lookup_matches_searchsorted(self, d):
        thr, guide, shift = kernels.sampling_table(d.pmf)
        assert thr[-1] == 1 << 32
        rng = np.random.default_rng(7)
        u = rng.integers(0, 1 << 32, size=5000, dtype=np.uint64)
        u = np.concatenate([u, thr[:-1], thr[:-1] - 1, [0, (1 << 32) - 1]]).astype(np.uint64)
        expect = np.minimum(np.searchsorted(thr, u, side="right"), thr.size - 1)
        # guide gives a lower bound on the index; a forward scan finishes it
        for word, e in zip(u, expect):
            i = guide[int(word) >> int(shift)]
            while word >= thr[i]:
                i += 1
            assert i == e

    def test_thresholds_quantise_the_cdf(self):
        thr, _, _ = kernels.sampling_table([0.25, 0.5, 0.25])
        np.testing.assert_array_equal(thr, [1 << 30, 3 << 30, 1 << 32])


def _block(d, k, horizon, n, seed, backend, cut=None):
    table = kernels.sampling_table(d.pmf)
    bitgen = np.random.PCG64(seed)
    cut = censor_cut(d) if cut is None else cut
    return kernels.run_walk_block(bitgen, table, d.support.astype(np.int64), k, horizon, n, 1, cut, backend)


class TestWalkBlock:
    @needs_numba
    @pytest.mark.parametrize("k", [0, 3])
    @pytest.mark.parametrize(
        "d", [make_finite([(-1, 0.3), (1, 0.7)]), make_poisson_shifted(1.5), make_finite([(-1, 0.4), (0, 0.2), (2, 0.4)])]
    )
    def test_backends_bit_identical(self, d, k):
        for horizon in (1, 7, 500):
            a = _block(d, k, horizon, 3000, 11, "numba")
            b = _block(d, k, horizon, 3000, 11, "numpy")
            np.testing.assert_array_equal(a, b)

    def test_one_step(self):
        d = make_finite([(-1, 0.3), (1, 0.7)])
        c = _block(d, 0, 1, 20000, 3, "numpy")
        assert c[kernels.HIT] == c[kernels.ODD] == c[kernels.NEG] == c[kernels.HIT_ODD]
        assert c[kernels.EVEN] == c[kernels.BOTH] == 0
        assert c[kernels.HIT] / 20000 == pytest.approx(0.3, abs=0.015)
        # the up-steppers are all one step from -1 and still undecided
        assert c[kernels.C_HIT] == 20000 - c[kernels.HIT]

    def test_tallies_are_consistent(self):
        d = make_poisson_shifted(1.5)
        c = _block(d, 2, 300, 20000, 5, "numpy")
        assert c[kernels.HIT_ODD] <= c[kernels.HIT]
        assert c[kernels.RET0_ODD] <= c[kernels.RET0] <= c[kernels.NONPOS]
        assert c[kernels.BOTH] <= min(c[kernels.EVEN], c[kernels.ODD])
        assert c[kernels.EVEN] + c[kernels.ODD] - c[kernels.BOTH] == c[kernels.NEG]

    def test_escape_rule(self):
        d = make_finite([(-1, 0.3), (1, 0.7)])
        with_cut = _block(d, 0, 2000, 20000, 9, "numpy")
        no_cut = _block(d, 0, 2000, 20000, 9, "numpy", cut=0)
        # no hit this run happens after an escape, so the hit tallies agree
        assert with_cut[kernels.HIT] == no_cut[kernels.HIT]
        # with the cut survivors retire as escaped; without it all are censored
        assert with_cut[kernels.C_HIT] == 0
        assert no_cut[kernels.C_HIT] == 20000 - no_cut[kernels.HIT]

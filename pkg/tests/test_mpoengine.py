
import numpy as np
import pytest
import scipy.linalg as la

from thermalchain import freefermion as ff
from thermalchain import mpoengine as mpo
from thermalchain import oracle
from thermalchain.models import ChainSpec, SZ, TermList, build_term_list
from thermalchain.oracle import DenseOperator, embed

XX8 = ChainSpec.xy(8, 0.0, 0.0)


def dense_trotter(terms, beta, epsilon):
    """Dense state after the same symmetric bond splitting the engine uses."""
    n = terms.n
    hs = mpo.bond_hamiltonians(terms)

    def layer(parity, tau):
        g = np.eye(2**n, dtype=complex)
        for b, h in enumerate(hs):
            if b % 2 == parity:
                g = g @ embed(la.expm(-tau * h), b, n)
        return g

    step = layer(0, epsilon / 4) @ layer(1, epsilon / 2) @ layer(0, epsilon / 4)
    rho = np.eye(2**n, dtype=complex) / 2**n
    for _ in range(int(round(beta / epsilon))):
        rho = step @ rho @ step.conj().T
        rho /= np.trace(rho)
    return DenseOperator(n, rho)


def cooled(spec, beta, epsilon=0.05, d_max=256):
    terms = build_term_list(spec)
    return mpo.evolve(mpo.init_infinite_temperature(spec.n), mpo.build_gates(terms, epsilon),
                      int(round(beta / epsilon)), d_max)


@pytest.fixture(scope="module")
def xx8_beta1():
    return cooled(XX8, 1.0)


class TestInfiniteTemperature:
    def test_coefficients(self):
        st = mpo.init_infinite_temperature(3)
        c = mpo.to_coefficients(st)
        assert c[0, 0, 0] == pytest.approx(1 / 8)
        assert np.count_nonzero(c) == 1
        assert mpo.trace_log(st) == pytest.approx(0.0, abs=1e-15)

    @pytest.mark.parametrize("n", [2, 5, 9])
    def test_measures(self, n):
        st = mpo.init_infinite_temperature(n)
        assert mpo.osee_mpo(st, n // 2) == 0.0
        assert mpo.purity(st) == pytest.approx(2.0**-n, rel=1e-12)
        assert mpo.mutual_purity(st, 1) == pytest.approx(0.0, abs=1e-12)

    def test_cool_at_zero(self):
        (pt,) = mpo.cool(build_term_list(XX8), [0.0])
        assert pt.steps == 0 and mpo.osee_mpo(pt.state, 4) == 0.0

    def test_bad_size(self):
        with pytest.raises(ValueError):
            mpo.init_infinite_temperature(0)


class TestGates:
    def test_small_step_identity(self):
        terms = build_term_list(ChainSpec.tilted_ising(4, 1.0, 1.0))
        errs = []
        for eps in (1e-2, 1e-3):
            g = mpo.build_gates(terms, eps)
            errs.append(max(np.linalg.norm(m - np.eye(16)) for m in g.even.values()))
        assert errs[1] < errs[0] / 5 and errs[1] < 1e-2

    def test_single_bond_exact(self):
        spec = ChainSpec.tilted_ising(2, 0.7, 0.4)
        terms = build_term_list(spec)
        eps = 0.3
        st = mpo.evolve_step(mpo.init_infinite_temperature(2), mpo.build_gates(terms, eps), 16)
        H = oracle.dense_hamiltonian(terms)
        g = la.expm(-eps * H / 2)
        rho = g @ (np.eye(4) / 4) @ g.conj().T
        rho /= np.trace(rho)
        np.testing.assert_allclose(
            mpo.to_coefficients(st), oracle.pauli_coefficients(DenseOperator(2, rho)), atol=1e-14
        )

    def test_one_step_third_order(self):
        terms = build_term_list(ChainSpec.xy(4, 0.0, 0.0))
        H = oracle.dense_hamiltonian(terms)
        defects = []
        for eps in (0.2, 0.1):
            st = mpo.evolve_step(mpo.init_infinite_temperature(4), mpo.build_gates(terms, eps), 64)
            rho = la.expm(-eps * H)
            rho /= np.trace(rho)
            ref = oracle.pauli_coefficients(DenseOperator(4, rho))
            defects.append(np.max(np.abs(mpo.to_coefficients(st) - ref)))
        assert 6.0 < defects[0] / defects[1] < 10.0

    def test_charge_conservation_detected(self):
        xx = mpo.build_gates(build_term_list(XX8), 0.1)
        tilted = mpo.build_gates(build_term_list(ChainSpec.tilted_ising(4, 1.0, 1.0)), 0.1)
        assert xx.charge_mask == mpo.FULL_MASK
        assert tilted.charge_mask != mpo.FULL_MASK

    def test_fields_shared_between_bonds(self):
        terms = TermList(3, [], [(l, SZ * (l + 1)) for l in range(3)])
        total = sum(embed(h, b, 3) for b, h in enumerate(mpo.bond_hamiltonians(terms)))
        np.testing.assert_allclose(total, oracle.dense_hamiltonian(terms))

    def test_bad_epsilon(self):
        with pytest.raises(ValueError):
            mpo.build_gates(build_term_list(XX8), 0.0)


class TestEvolution:
    def test_matches_dense_thermal(self, xx8_beta1):
        rho = oracle.dense_thermal(build_term_list(XX8), 1.0)
        ref = oracle.pauli_coefficients(rho)
        assert np.max(np.abs(mpo.to_coefficients(xx8_beta1) - ref)) < 1e-6

    def test_matches_dense_trotter(self, xx8_beta1):
        ref = dense_trotter(build_term_list(XX8), 1.0, 0.05)
        np.testing.assert_allclose(
            mpo.to_coefficients(xx8_beta1), oracle.pauli_coefficients(ref), atol=1e-10
        )
        assert mpo.purity(xx8_beta1) == pytest.approx(oracle.purity(ref.matrix), abs=1e-8)
        assert mpo.mutual_purity(xx8_beta1, 4) == pytest.approx(
            oracle.dense_mutual_purity(ref, 4), abs=1e-8
        )

    def test_second_order_convergence(self):
        rho = oracle.dense_thermal(build_term_list(XX8), 1.0)
        ref = oracle.pauli_coefficients(rho)
        errs = [np.max(np.abs(mpo.to_coefficients(cooled(XX8, 1.0, eps)) - ref))
                for eps in (0.1, 0.05)]
        assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.15)

    def test_spot_check_coefficients(self, xx8_beta1):
        full = mpo.to_coefficients(xx8_beta1)
        gen = np.random.default_rng(4)
        for _ in range(20):
            s = tuple(int(v) for v in gen.integers(0, 4, 8))
            assert mpo.coefficient(xx8_beta1, s) == pytest.approx(full[s], abs=1e-14)

    def test_trace_preserved_every_step(self):
        st = mpo.init_infinite_temperature(6)
        gates = mpo.build_gates(build_term_list(ChainSpec.tilted_ising(6, 1.0, 1.0)), 0.1)
        for _ in range(10):
            st = mpo.evolve_step(st, gates, 16)
            assert mpo.trace_log(st) == pytest.approx(0.0, abs=1e-12)

    def test_cool_lands_on_grid(self):
        terms = build_term_list(ChainSpec.xy(6, 0.3, 0.5))
        pts = list(mpo.cool(terms, [0.12, 0.5, 1.0], epsilon=0.05, d_max=64))
        assert [p.beta for p in pts] == [0.12, 0.5, 1.0]
        rho = oracle.dense_thermal(terms, 0.12)
        assert np.max(np.abs(mpo.to_coefficients(pts[0].state)
                             - oracle.pauli_coefficients(rho))) < 1e-5
        with pytest.raises(ValueError, match="ascending"):
            list(mpo.cool(terms, [1.0, 0.5]))

    def test_pure_limit_purity(self):
        st = cooled(ChainSpec.xy(4, 0.5, 2.0), 12.0, epsilon=0.1, d_max=64)
        assert mpo.purity(st) == pytest.approx(1.0, abs=1e-6)

    def test_tilted_ising_mutual_purity(self):
        spec = ChainSpec.tilted_ising(8, 1.0, 1.0)
        terms = build_term_list(spec)
        exact = oracle.dense_mutual_purity(oracle.dense_thermal(terms, 2.0), 4)
        vals = [mpo.mutual_purity(cooled(spec, 2.0, eps), 4) for eps in (0.05, 0.025)]
        # second-order Richardson removes the leading Trotter error
        extrapolated = (4 * vals[1] - vals[0]) / 3
        assert extrapolated == pytest.approx(exact, abs=1e-6)
        ref = dense_trotter(terms, 2.0, 0.05)
        assert vals[0] == pytest.approx(oracle.dense_mutual_purity(ref, 4), abs=1e-8)

    def test_xx16_against_free_fermions(self):
        spec = ChainSpec.xy(16, 0.0, 0.0)
        pt = list(mpo.cool(build_term_list(spec), [4.0], epsilon=0.05, d_max=128))[-1]
        exact = ff.osee(ff.gamma_operator_space(ff.spectrum_of(spec), 4.0), 8)
        assert mpo.osee_mpo(pt.state, 8) == pytest.approx(exact, abs=1e-3)

    def test_small_step_converges_to_free_fermions(self):
        spec = ChainSpec.xy(12, 0.5, 0.9)
        st = cooled(spec, 1.0, epsilon=0.0125, d_max=256)
        exact = ff.osee(ff.gamma_operator_space(ff.spectrum_of(spec), 1.0), 6)
        assert mpo.osee_mpo(st, 6) == pytest.approx(exact, abs=1e-3)


class TestCharges:
    def test_blocked_equals_dense_path(self):
        spec = ChainSpec.xy(6, 0.0, 0.4)
        gates = mpo.build_gates(build_term_list(spec), 0.1)
        blocked = mpo.init_infinite_temperature(6)
        plain = mpo.from_coefficients(mpo.to_coefficients(blocked))
        assert plain.charge_mask == 0
        # no truncation, so degenerate values at a cutoff cannot be picked differently
        blocked = mpo.evolve(blocked, gates, 10, 64)
        plain = mpo.evolve(plain, gates, 10, 64)
        np.testing.assert_allclose(mpo.to_coefficients(blocked), mpo.to_coefficients(plain),
                                   atol=1e-12)
        for cut in range(1, 6):
            np.testing.assert_allclose(mpo.schmidt_values(blocked, cut),
                                       mpo.schmidt_values(plain, cut), atol=1e-10)

    def test_mask_restricted_for_tilted_field(self):
        gates = mpo.build_gates(build_term_list(ChainSpec.tilted_ising(5, 1.0, 1.0)), 0.1)
        st = mpo.evolve(mpo.init_infinite_temperature(5), gates, 3, 32)
        assert st.charge_mask == gates.charge_mask


class TestGauge:
    def test_identity_unchanged(self):
        st = mpo.init_infinite_temperature(5)
        out = mpo.reorthogonalize(st)
        for a, b in zip(st.tensors, out.tensors):
            np.testing.assert_allclose(np.abs(a), np.abs(b))
        assert out.log_prefactor == pytest.approx(st.log_prefactor)

    def test_coefficients_and_spectra_invariant(self):
        st = cooled(ChainSpec.tilted_ising(6, 1.0, 1.0), 1.0, epsilon=0.1, d_max=64)
        once = mpo.reorthogonalize(st)
        twice = mpo.reorthogonalize(once)
        np.testing.assert_allclose(mpo.to_coefficients(once), mpo.to_coefficients(st), atol=1e-12)
        for cut in range(1, 6):
            np.testing.assert_allclose(mpo.schmidt_values(twice, cut),
                                       mpo.schmidt_values(once, cut), atol=1e-12)
            assert mpo.osee_mpo(once, cut) == pytest.approx(mpo.osee_mpo(st, cut), abs=1e-12)

    def test_center_moves_preserve_operator(self):
        st = cooled(ChainSpec.xy(6, 0.3, 0.2), 0.5, epsilon=0.1, d_max=64)
        ref = mpo.to_coefficients(st)
        work = st.copy()
        for site in (5, 0, 3):
            mpo.move_center(work, site)
            assert work.center == site
            np.testing.assert_allclose(mpo.to_coefficients(work), ref, atol=1e-12)

    def test_cut_validation(self):
        with pytest.raises(ValueError):
            mpo.schmidt_values(mpo.init_infinite_temperature(3), 3)
        with pytest.raises(ValueError):
            mpo.mutual_purity(mpo.init_infinite_temperature(3), 0)


class TestTruncation:
    def _prepared(self):
        spec = ChainSpec.tilted_ising(6, 1.0, 1.0)
        st = cooled(spec, 1.5, epsilon=0.1, d_max=64)
        gate = mpo.build_gates(build_term_list(spec), 0.3).even[1]
        return st, gate

    def test_eckart_young(self):
        st, gate = self._prepared()
        exact, trunc = st.copy(), st.copy()
        mpo.apply_gate(exact, 2, gate, 10**6, svd_cut=0.0)
        d = exact.tensors[2].shape[2]
        discarded = mpo.apply_gate(trunc, 2, gate, max(1, d // 8), svd_cut=0.0)
        e = mpo.to_coefficients(exact)
        t = mpo.to_coefficients(trunc)
        assert discarded > 1e-8
        assert np.sum((e - t) ** 2) / np.sum(e**2) == pytest.approx(discarded, rel=1e-8)

    def test_split_block_keeps_largest(self, rng):
        theta = rng.normal(size=(12, 9))
        u, s, vh, q, discarded = mpo.split_block(theta, 4, 0.0)
        full = np.linalg.svd(theta, compute_uv=False)
        np.testing.assert_allclose(s, full[:4])
        assert discarded == pytest.approx(np.sum(full[4:] ** 2) / np.sum(full**2))
        np.testing.assert_allclose(u.T @ u, np.eye(4), atol=1e-12)

    def test_split_block_by_charge(self, rng):
        row_q = rng.integers(0, 4, 16)
        col_q = rng.integers(0, 4, 12)
        theta = rng.normal(size=(16, 12)) * (row_q[:, None] == col_q[None, :])
        u, s, vh, q, _ = mpo.split_block(theta, 100, 0.0, row_q, col_q)
        np.testing.assert_allclose((u * s) @ vh, theta, atol=1e-12)
        np.testing.assert_allclose(s, np.linalg.svd(theta, compute_uv=False)[: s.size], atol=1e-12)

    def test_monotone_in_bond_dimension(self):
        terms = build_term_list(ChainSpec.tilted_ising(10, 1.0, 1.0))
        weights = []
        for d in (4, 8, 16, 32):
            (pt,) = mpo.cool(terms, [2.0], epsilon=0.1, d_max=d)
            weights.append(pt.state.discarded_weight)
            assert pt.state.max_bond <= d
        assert all(b <= a for a, b in zip(weights, weights[1:]))
        assert weights[0] > 0

    def test_degenerate_split(self):
        with pytest.raises(mpo.DegenerateStateError):
            mpo.split_block(np.zeros((4, 4)), 2, 0.0)


class TestCorrelationMeasures:
    def test_uncoupled_chain_is_product(self):
        terms = TermList(6, [], [(l, 0.3 * (l + 1) * SZ) for l in range(6)])
        for pt in mpo.cool(terms, [0.5, 2.0, 5.0], epsilon=0.1, d_max=16):
            assert mpo.mutual_purity(pt.state, 3) == pytest.approx(0.0, abs=1e-12)
            assert mpo.osee_mpo(pt.state, 3) == pytest.approx(0.0, abs=1e-12)
            rho = oracle.dense_from_pauli(mpo.to_coefficients(pt.state))
            assert oracle.dense_qmi(rho, 3) == pytest.approx(0.0, abs=1e-10)

    def test_mutual_purity_tracks_qmi(self):
        spec = ChainSpec.tilted_ising(6, 1.0, 1.0)
        terms = build_term_list(spec)
        grid = np.geomspace(0.05, 8, 24)
        mp = np.array([mpo.mutual_purity(p.state, 3)
                       for p in mpo.cool(terms, grid, epsilon=0.025, d_max=64)])
        qmi = np.array([oracle.dense_qmi(oracle.dense_thermal(terms, b), 3) for b in grid])
        assert np.all(mp > 0) and np.all(qmi > 0)

        def onset(vals):
            return grid[np.argmax(vals >= 0.5 * vals.max())]

        ratio = onset(mp) / onset(qmi)
        assert 0.5 <= ratio <= 2.0


class TestCheckpoint:
    def test_roundtrip(self, tmp_path, xx8_beta1):
        path = tmp_path / "state.npz"
        mpo.save_checkpoint(xx8_beta1, path)
        back = mpo.load_checkpoint(path)
        assert back.beta == xx8_beta1.beta and back.center == xx8_beta1.center
        assert back.charge_mask == xx8_beta1.charge_mask
        np.testing.assert_array_equal(mpo.to_coefficients(back), mpo.to_coefficients(xx8_beta1))
        gates = mpo.build_gates(build_term_list(XX8), 0.05)
        a = mpo.evolve(back, gates, 4, 256)
        b = mpo.evolve(xx8_beta1, gates, 4, 256)
        np.testing.assert_array_equal(mpo.to_coefficients(a), mpo.to_coefficients(b))

    def test_continuation_matches_single_run(self):
        terms = build_term_list(ChainSpec.xy(6, 0.2, 0.3))
        first = list(mpo.cool(terms, [0.5], epsilon=0.05, d_max=64))[-1].state
        cont = list(mpo.cool(terms, [1.0], epsilon=0.05, d_max=64, start=first))[-1].state
        direct = list(mpo.cool(terms, [1.0], epsilon=0.05, d_max=64))[-1].state
        np.testing.assert_allclose(mpo.to_coefficients(cont), mpo.to_coefficients(direct),
                                   atol=1e-12)

import itertools
from functools import reduce

import numpy as np
import pytest

from thermalchain import freefermion as ff
from thermalchain.models import (
    SX,
    SY,
    SZ,
    ChainSpec,
    build_majorana_form,
    build_term_list,
    staggered_fields,
)
from thermalchain.oracle import dense_hamiltonian, embed

from .conftest import random_xy_specs


def _manual_dense(spec):
    """Hamiltonian assembled directly from Kronecker products of Paulis."""
    n = spec.n
    eye = np.eye(2)

    def op(site_ops):
        return reduce(np.kron, [site_ops.get(l, eye) for l in range(n)])

    H = np.zeros((2**n, 2**n), dtype=complex)
    for l in range(n - 1):
        if spec.family == "XY":
            H += (1 + spec.gamma) / 2 * op({l: SX, l + 1: SX})
            H += (1 - spec.gamma) / 2 * op({l: SY, l + 1: SY})
        elif spec.family == "TiltedIsing":
            H += op({l: SX, l + 1: SX})
        else:
            H += op({l: SX, l + 1: SX}) + op({l: SY, l + 1: SY})
            H += spec.delta * op({l: SZ, l + 1: SZ})
    for l in range(n):
        if spec.family == "XY":
            H += spec.h * op({l: SZ})
        elif spec.family == "TiltedIsing":
            H += spec.hx * op({l: SX}) + spec.hz * op({l: SZ})
        else:
            H += spec.site_fields()[l] * op({l: SZ})
    return H


def _free_spectrum(lambdas):
    return np.sort([sum(4 * lam * s for lam, s in zip(lambdas, signs))
                    for signs in itertools.product((-0.5, 0.5), repeat=len(lambdas))])


class TestChainSpec:
    def test_unknown_family(self):
        with pytest.raises(ValueError, match="unknown family"):
            ChainSpec("Heisenberg", 4)

    @pytest.mark.parametrize("n", [0, -1, 2.5])
    def test_bad_size(self, n):
        with pytest.raises(ValueError):
            ChainSpec("XY", n)

    def test_field_length(self):
        with pytest.raises(ValueError, match="site fields"):
            ChainSpec.xxz(4, 0.5, [0.0, 1.0])

    def test_staggered_pattern(self):
        assert staggered_fields(4) == (0.0, -1.0, 0.0, -1.0)
        spec = ChainSpec.xxz(4, 0.5, staggered_fields(4))
        np.testing.assert_array_equal(spec.site_fields(), [0, -1, 0, -1])

    def test_labels(self):
        assert "gamma=0.5" in ChainSpec.xy(4, 0.5, 1).label()
        assert ChainSpec.xxz(3, 0.5).site_fields().tolist() == [0, 0, 0]


class TestMajoranaForm:
    def test_single_spin(self):
        form = build_majorana_form(ChainSpec.xy(1, 0.3, 1.0))
        np.testing.assert_allclose(form.H, [[0, -0.5j], [0.5j, 0]])
        fs = ff.fermion_spectrum(form)
        np.testing.assert_allclose(fs.lambdas, [0.5])

    def test_two_site_ising(self):
        form = build_majorana_form(ChainSpec.xy(2, 1.0, 0.0))
        expected = np.zeros((4, 4), dtype=complex)
        expected[1, 2], expected[2, 1] = -0.5j, 0.5j
        np.testing.assert_allclose(form.H, expected)
        np.testing.assert_allclose(ff.fermion_spectrum(form).lambdas, [0.0, 0.5], atol=1e-15)

    def test_rejects_other_families(self):
        with pytest.raises(ValueError):
            build_majorana_form(ChainSpec.tilted_ising(3, 1, 1))

    @pytest.mark.parametrize("spec", random_xy_specs(15, 8, seed=3))
    def test_antisymmetric_hermitian(self, spec):
        H = build_majorana_form(spec).H
        assert np.max(np.abs(H + H.T)) < 1e-12
        assert np.max(np.abs(H - H.conj().T)) < 1e-12

    @pytest.mark.parametrize("spec", random_xy_specs(8, 8, seed=11) + [ChainSpec.xy(8, 0, 0),
                                                                       ChainSpec.xy(6, 0.5, 0.9)])
    def test_spectrum_reconstruction(self, spec):
        lambdas = ff.spectrum_of(spec).lambdas
        dense = np.linalg.eigvalsh(dense_hamiltonian(build_term_list(spec)))
        np.testing.assert_allclose(_free_spectrum(lambdas), dense, atol=1e-9)


class TestTermList:
    @pytest.mark.parametrize(
        "spec",
        [
            ChainSpec.xy(2, 0.0, 0.0),
            ChainSpec.xy(5, 0.4, -0.7),
            ChainSpec.tilted_ising(3, 1.0, 1.0),
            ChainSpec.xxz(4, 0.5, staggered_fields(4)),
            ChainSpec.xxz(10, -0.3, np.linspace(-1, 1, 10)),
        ],
    )
    def test_reassembles_dense(self, spec):
        np.testing.assert_array_equal(dense_hamiltonian(build_term_list(spec)), _manual_dense(spec))

    def test_xx_bond(self):
        terms = build_term_list(ChainSpec.xy(2, 0.0, 0.0))
        assert len(terms.bond_terms) == 1
        np.testing.assert_allclose(terms.bond_terms[0][1], 0.5 * (np.kron(SX, SX) + np.kron(SY, SY)))

    def test_tilted_terms(self):
        terms = build_term_list(ChainSpec.tilted_ising(3, 1.0, 1.0))
        assert [l for l, _ in terms.bond_terms] == [0, 1]
        assert len(terms.site_terms) == 3
        for _, op in terms.site_terms:
            np.testing.assert_allclose(op, SX + SZ)

    def test_embedding_order(self):
        # site 0 is the most significant tensor factor
        np.testing.assert_allclose(embed(SZ, 0, 2), np.kron(SZ, np.eye(2)))

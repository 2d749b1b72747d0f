import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from unistoch.hadamard import fourier
from unistoch.matcore import (
    BistochasticMatrix,
    ColSumError,
    DegenerateInput,
    DephasedUnitary,
    NegativeEntry,
    NotSquare,
    NotUnitary,
    ParseError,
    RowSumError,
    UnitaryMatrix,
    dephase,
    load_matrix,
    matrix_from_dict,
    matrix_to_dict,
    squared_moduli,
    unitarity_defect,
    unitarity_triangle_areas,
    validate_bistochastic,
)
from unistoch.unicheck import haar_unitary, haar_unitary_array


def rotation(theta):
    c, s = math.cos(theta), math.sin(theta)
    return UnitaryMatrix(np.array([[c, -s], [s, c]]))


class TestValidate:
    def test_identity(self):
        b = validate_bistochastic(np.eye(3), atol=1e-10)
        assert isinstance(b, BistochasticMatrix)
        assert b.n == 3

    def test_van_der_waerden(self):
        b = validate_bistochastic(np.full((3, 3), 1 / 3))
        np.testing.assert_allclose(b.entries, 1 / 3)

    def test_row_sum(self):
        with pytest.raises(RowSumError):
            validate_bistochastic([[0.6, 0.6], [0.4, 0.4]])

    def test_col_sum(self):
        with pytest.raises(ColSumError):
            validate_bistochastic([[0.6, 0.4], [0.6, 0.4]])

    def test_negative(self):
        with pytest.raises(NegativeEntry):
            validate_bistochastic([[1.1, -0.1], [-0.1, 1.1]])

    def test_not_square(self):
        with pytest.raises(NotSquare):
            validate_bistochastic(np.ones((2, 3)) / 3)

    def test_clamps_tiny_negatives(self):
        b = validate_bistochastic([[1 + 1e-12, -1e-12], [-1e-12, 1 + 1e-12]])
        assert b.entries.min() == 0.0
        assert b.entries.max() == 1.0

    def test_entries_read_only(self):
        b = validate_bistochastic(np.eye(2))
        with pytest.raises(ValueError):
            b.entries[0, 0] = 3.0


class TestSquaredModuli:
    def test_identity(self):
        np.testing.assert_array_equal(squared_moduli(UnitaryMatrix(np.eye(4))).entries, np.eye(4))

    @pytest.mark.parametrize("n", [2, 3, 5, 8])
    def test_fourier_gives_center(self, n):
        np.testing.assert_allclose(squared_moduli(fourier(n)).entries, 1 / n, atol=1e-14)

    def test_rotation(self):
        b = squared_moduli(rotation(math.pi / 6)).entries
        np.testing.assert_allclose(b, [[0.75, 0.25], [0.25, 0.75]], atol=1e-15)

    def test_non_unitary_rejected(self):
        with pytest.raises(NotUnitary):
            UnitaryMatrix(np.ones((2, 2)))

    def test_passes_validation_for_haar(self):
        rng = np.random.default_rng(5)
        for u in haar_unitary_array(4, 200, rng):
            assert unitarity_defect(u) < 1e-10
            validate_bistochastic(squared_moduli(UnitaryMatrix(u)).entries, atol=1e-8)


class TestDephase:
    def test_pure_rephasing(self):
        d = dephase(UnitaryMatrix(np.diag([1j, 1j])))
        np.testing.assert_allclose(d.entries, np.eye(2), atol=1e-15)

    def test_fourier3_fixed(self):
        f = fourier(3)
        np.testing.assert_allclose(dephase(f).entries, f.entries, atol=1e-14)

    def test_zero_first_row_entries(self):
        # zeros in row 0 take phase factor 1 and leave other entries alone
        u = UnitaryMatrix(np.array([[1, 0, 0], [0, 0, 1j], [0, -1, 0]], dtype=complex))
        d = dephase(u)
        assert isinstance(d, DephasedUnitary)
        np.testing.assert_allclose(np.abs(d.entries), np.abs(u.entries))
        assert np.all(d.entries.real >= 0)

    def test_row_and_column_real(self):
        rng = np.random.default_rng(1)
        d = dephase(haar_unitary(5, rng))
        edge = np.concatenate([d.entries[0], d.entries[:, 0]])
        assert np.abs(edge.imag).max() <= 1e-15
        assert edge.real.min() >= 0

    def test_views(self):
        d = dephase(fourier(3))
        np.testing.assert_allclose(d.moduli, 1 / math.sqrt(3))
        np.testing.assert_allclose(d.phases[1, 1], 2 * math.pi / 3)


@st.composite
def unitary_and_phases(draw):
    n = draw(st.integers(2, 6))
    seed = draw(st.integers(0, 2**32 - 1))
    rng = np.random.default_rng(seed)
    u = haar_unitary_array(n, 1, rng)[0]
    d1 = np.exp(1j * rng.uniform(0, 2 * np.pi, n))
    d2 = np.exp(1j * rng.uniform(0, 2 * np.pi, n))
    return u, d1, d2


@settings(max_examples=200, deadline=None)
@given(unitary_and_phases())
def test_rephasing_invariance(data):
    u, d1, d2 = data
    v = d1[:, None] * u * d2[None, :]
    b1 = squared_moduli(UnitaryMatrix(u)).entries
    b2 = squared_moduli(UnitaryMatrix(v)).entries
    assert np.abs(b1 - b2).max() <= 1e-12


@settings(max_examples=200, deadline=None)
@given(unitary_and_phases())
def test_dephase_preserves_moduli_and_is_idempotent(data):
    u, d1, d2 = data
    u = UnitaryMatrix(d1[:, None] * u * d2[None, :])
    once = dephase(u)
    twice = dephase(once.inner)
    assert np.abs(squared_moduli(once.inner).entries - squared_moduli(u).entries).max() <= 1e-12
    assert np.abs(twice.entries - once.entries).max() <= 1e-10


class TestTriangleAreas:
    def test_fourier(self):
        areas = unitarity_triangle_areas(fourier(3)).areas
        np.testing.assert_allclose(areas, math.sqrt(3) / 36, rtol=1e-12)
        assert abs(math.sqrt(3) / 36 - 0.0481125) < 1e-7

    def test_identity(self):
        assert unitarity_triangle_areas(UnitaryMatrix(np.eye(3))).areas == (0.0,) * 6

    def test_equal_areas_haar(self):
        rng = np.random.default_rng(0)
        for u in haar_unitary_array(3, 1000, rng):
            assert unitarity_triangle_areas(UnitaryMatrix(u)).spread < 1e-9

    def test_heron_against_cross_product(self):
        # oracle: area of the triangle spanned by two of the complex sides
        rng = np.random.default_rng(2)
        for u in haar_unitary_array(3, 50, rng):
            z = np.conj(u[:, 0]) * u[:, 1]
            oracle = 0.5 * abs((np.conj(z[0]) * z[1]).imag)
            areas = unitarity_triangle_areas(UnitaryMatrix(u)).areas
            assert areas[0] == pytest.approx(oracle, abs=1e-13)

    def test_degenerate_input(self):
        m = np.abs(fourier(3).entries).copy()
        m[0, 0] = 3.0  # breaks the triangle inequality hard
        from unistoch import matcore

        with pytest.raises(DegenerateInput):
            matcore._kahan_area(*(m[:, 0] * m[:, 1]), atol=1e-10)

    def test_needs_3x3(self):
        with pytest.raises(ValueError):
            unitarity_triangle_areas(fourier(4))


class TestJson:
    def test_bistochastic_round_trip(self):
        b = validate_bistochastic(np.full((3, 3), 1 / 3))
        d = json.loads(json.dumps(matrix_to_dict(b)))
        assert d["kind"] == "bistochastic" and d["n"] == 3
        np.testing.assert_array_equal(matrix_from_dict(d).entries, b.entries)

    def test_unitary_round_trip(self):
        u = fourier(4)
        d = json.loads(json.dumps(matrix_to_dict(u)))
        assert d["kind"] == "unitary"
        assert d["entries"][1][1] == pytest.approx([0.0, 0.5], abs=1e-15)
        np.testing.assert_array_equal(matrix_from_dict(d).entries, u.entries)

    def test_shape_mismatch(self):
        with pytest.raises(ParseError):
            matrix_from_dict({"n": 3, "kind": "bistochastic", "entries": [[1, 0], [0, 1]]})

    def test_bad_kind(self):
        with pytest.raises(ParseError):
            matrix_from_dict({"n": 2, "kind": "stochastic", "entries": [[1, 0], [0, 1]]})

    def test_malformed_file(self, tmp_path):
        p = tmp_path / "m.json"
        p.write_text("{not json")
        with pytest.raises(ParseError):
            load_matrix(p)

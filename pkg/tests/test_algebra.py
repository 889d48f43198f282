import math

import numpy as np
import pytest

from weylpath import (
    OperatorPoly,
    ScaleContext,
    SymbolPoly,
    eval2,
    fock_coherent,
    harmonic_hamiltonian,
    load_hamiltonian,
    normalize,
    operator_matrix,
    p_symbol,
    q_symbol,
    quartic_position_hamiltonian,
    symbol_to_qp,
    weyl_quantize,
    weyl_symbol,
)
from weylpath.errors import HamiltonianFormatError


def assert_terms(actual: dict, expected: dict, tol: float = 1e-12):
    keys = set(actual) | set(expected)
    for k in keys:
        assert abs(actual.get(k, 0.0) - expected.get(k, 0.0)) < tol, (
            k,
            actual.get(k),
            expected.get(k),
        )


def random_hermitian(rng, max_degree: int) -> OperatorPoly:
    terms = {}
    for m in range(max_degree + 1):
        for n in range(max_degree + 1 - m):
            if (n, m) in terms:
                terms[(m, n)] = np.conj(terms[(n, m)])
            else:
                c = rng.normal() + 1j * rng.normal()
                terms[(m, n)] = c.real if m == n else c
    return OperatorPoly(terms)


class TestNormalize:
    def test_single_commutator(self):
        assert_terms(normalize([(1, "a adag")]).terms, {(1, 1): 1, (0, 0): 1})

    def test_already_normal(self):
        assert_terms(normalize([(1, "adag a")]).terms, {(1, 1): 1})

    def test_double_word_against_fock_matrices(self):
        # verify a a adag adag by multiplying truncated ladder matrices
        op = normalize([(1, "a a adag adag")])
        assert_terms(op.terms, {(2, 2): 1, (1, 1): 4, (0, 0): 2})
        dim = 6
        a = np.diag(np.sqrt(np.arange(1, dim + 3)), k=1)
        word = a @ a @ a.conj().T @ a.conj().T
        built = operator_matrix(op, dim + 2)
        assert np.max(np.abs(word[:dim, :dim] - built[:dim, :dim])) < 1e-12

    def test_empty_input(self):
        assert normalize([]).terms == {}

    def test_linear_in_coefficients(self):
        mixed = normalize([(2.0, "a adag"), (-1j, "adag a")])
        assert_terms(mixed.terms, {(1, 1): 2 - 1j, (0, 0): 2})

    def test_product_is_homomorphism(self):
        # canonical product must agree with truncated matrix multiplication
        rng = np.random.default_rng(7)
        for _ in range(5):
            p1 = random_hermitian(rng, 2)
            p2 = random_hermitian(rng, 2)
            prod = p1 * p2
            cutoff = 12
            m1 = operator_matrix(p1, cutoff)
            m2 = operator_matrix(p2, cutoff)
            mp = operator_matrix(prod, cutoff)
            inner = slice(0, cutoff - 3)  # rows unaffected by truncation
            assert np.max(np.abs((m1 @ m2 - mp)[inner, inner])) < 1e-10


class TestSymbols:
    def test_harmonic_q(self):
        ctx = ScaleContext.default()
        sym = q_symbol(harmonic_hamiltonian(ctx))
        assert_terms(sym.terms, {(1, 1): 1.0, (0, 0): 0.5})

    def test_harmonic_p(self):
        ctx = ScaleContext.default()
        sym = p_symbol(harmonic_hamiltonian(ctx))
        assert_terms(sym.terms, {(1, 1): 1.0, (0, 0): -0.5})

    def test_harmonic_w(self):
        ctx = ScaleContext.default()
        sym = weyl_symbol(harmonic_hamiltonian(ctx))
        assert_terms(sym.terms, {(1, 1): 1.0})

    def test_number_operator_commutators(self):
        num = OperatorPoly({(1, 1): 1.0})
        assert_terms(p_symbol(num).terms, {(1, 1): 1.0, (0, 0): -1.0})
        assert_terms(weyl_symbol(num).terms, {(1, 1): 1.0, (0, 0): -0.5})
        a_adag = normalize([(1, "a adag")])
        assert_terms(q_symbol(a_adag).terms, {(1, 1): 1.0, (0, 0): 1.0})

    @pytest.mark.parametrize("b", [0.5, 1.0, 2.0])
    def test_quartic_symbol_table(self, b):
        # H = p^2/2 + x^2/2 + x^4 at hbar = m = 1 with free width b
        ctx = ScaleContext(hbar=1.0, mass=1.0, omega=1.0, b=b)
        H = quartic_position_hamiltonian(1.0, ctx)
        hq = symbol_to_qp(q_symbol(H), ctx)
        hp = symbol_to_qp(p_symbol(H), ctx)
        hw = symbol_to_qp(weyl_symbol(H), ctx)
        shift = 0.25 * (b**2 + 1.0 / b**2)
        assert_terms(
            hq,
            {(0, 2): 0.5, (2, 0): 0.5 + 3 * b**2, (4, 0): 1.0,
             (0, 0): shift + 0.75 * b**4},
        )
        assert_terms(
            hp,
            {(0, 2): 0.5, (2, 0): 0.5 - 3 * b**2, (4, 0): 1.0,
             (0, 0): -shift + 0.75 * b**4},
        )
        assert_terms(hw, {(0, 2): 0.5, (2, 0): 0.5, (4, 0): 1.0})

    @pytest.mark.parametrize("b", [0.5, 1.0, 2.0])
    def test_average_minus_weyl_is_constant(self, b):
        ctx = ScaleContext(hbar=1.0, mass=1.0, omega=1.0, b=b)
        H = quartic_position_hamiltonian(1.0, ctx)
        avg = (q_symbol(H) + p_symbol(H)).scaled(0.5)
        diff = avg - weyl_symbol(H)
        assert_terms(diff.trimmed().terms, {(0, 0): 0.75 * b**4})

    def test_degree_three_average_identity(self):
        # exact average W = (Q + P)/2 holds for total degree <= 3
        rng = np.random.default_rng(11)
        for _ in range(20):
            op = random_hermitian(rng, 3)
            avg = (q_symbol(op) + p_symbol(op)).scaled(0.5)
            assert_terms(avg.terms, weyl_symbol(op).terms, tol=1e-13)

    def test_q_symbol_is_coherent_expectation(self):
        rng = np.random.default_rng(13)
        cutoff = 60
        for _ in range(8):
            op = random_hermitian(rng, 4)
            mat = operator_matrix(op, cutoff)
            z = (rng.normal() + 1j * rng.normal()) * 0.9
            vec = fock_coherent(z, cutoff).amplitudes
            expect = np.vdot(vec, mat @ vec)
            val = q_symbol(op).eval(z, np.conj(z))
            assert abs(val - expect) < 1e-10

    def test_hermitian_source_gives_real_section_values(self):
        rng = np.random.default_rng(17)
        op = random_hermitian(rng, 4)
        for sym in (q_symbol(op), p_symbol(op), weyl_symbol(op)):
            for _ in range(10):
                z = rng.normal() + 1j * rng.normal()
                assert abs(np.imag(sym.eval(z, np.conj(z)))) < 1e-12


class TestWeylQuantize:
    def test_harmonic_square_sum(self):
        ctx = ScaleContext(hbar=1.0, mass=1.0, omega=1.0, b=1.0)
        op = weyl_quantize({(2, 0): 1.0, (0, 2): 1.0}, ctx)
        assert_terms(op.terms, {(1, 1): 2.0, (0, 0): 1.0})

    def test_qp_cross_term_round_trip(self):
        ctx = ScaleContext(hbar=1.0, mass=1.0, omega=1.0, b=1.3)
        op = weyl_quantize({(1, 1): 1.0}, ctx)
        bc = ctx.b * ctx.c
        assert_terms(op.terms, {(2, 0): 0.5j * bc, (0, 2): -0.5j * bc})
        back = symbol_to_qp(weyl_symbol(op), ctx)
        assert_terms(back, {(1, 1): 1.0})

    def test_quartic_position_power(self):
        ctx = ScaleContext(hbar=1.0, mass=1.0, omega=1.0, b=1.0)
        op = weyl_quantize({(4, 0): 1.0}, ctx)
        assert_terms(
            op.terms,
            {(4, 0): 0.25, (3, 1): 1.0, (2, 2): 1.5, (1, 3): 1.0, (0, 4): 0.25,
             (2, 0): 1.5, (1, 1): 3.0, (0, 2): 1.5, (0, 0): 0.75},
        )
        back = symbol_to_qp(weyl_symbol(op), ctx)
        assert_terms(back, {(4, 0): 1.0})

    def test_round_trip_random_polynomials(self):
        rng = np.random.default_rng(19)
        ctx = ScaleContext(hbar=0.7, mass=1.2, omega=0.9, b=0.8)
        for _ in range(10):
            qp = {
                (int(rng.integers(0, 4)), int(rng.integers(0, 4))): complex(
                    rng.normal()
                )
                for _ in range(4)
            }
            op = weyl_quantize(qp, ctx)
            back = symbol_to_qp(weyl_symbol(op), ctx)
            assert_terms(back, qp, tol=1e-11)


class TestEval2:
    def test_plain_product(self):
        out = eval2(SymbolPoly({(1, 1): 1.0}), 2.0, 3.0, order=2)
        assert out.value == 6.0
        assert out.du == 3.0 and out.dv == 2.0
        assert out.duv == 1.0 and out.duu == 0.0 and out.dvv == 0.0

    def test_hermitian_real_section(self):
        ctx = ScaleContext.default()
        sym = q_symbol(harmonic_hamiltonian(ctx))
        z = 0.3 - 1.1j
        assert abs(np.imag(eval2(sym, z, np.conj(z)).value)) < 1e-14

    def test_second_derivatives_match_finite_differences(self):
        ctx = ScaleContext.default()
        sym = weyl_symbol(quartic_position_hamiltonian(1.0, ctx))
        u0, v0 = 0.4 + 0.2j, -0.3 + 0.5j
        out = eval2(sym, u0, v0, order=2)

        def stencils(h):
            uu = (sym.eval(u0 + h, v0) - 2 * sym.eval(u0, v0) + sym.eval(u0 - h, v0)) / h**2
            vv = (sym.eval(u0, v0 + h) - 2 * sym.eval(u0, v0) + sym.eval(u0, v0 - h)) / h**2
            uv = (
                sym.eval(u0 + h, v0 + h)
                - sym.eval(u0 + h, v0 - h)
                - sym.eval(u0 - h, v0 + h)
                + sym.eval(u0 - h, v0 - h)
            ) / (4 * h**2)
            return np.array([uu, vv, uv])

        # one Richardson pass removes the O(h^2) truncation bias
        coarse, fine = stencils(2e-4), stencils(1e-4)
        fd = (4 * fine - coarse) / 3
        exact = np.array([out.duu, out.dvv, out.duv])
        assert np.max(np.abs(fd - exact)) < 1e-8

    def test_order_validation(self):
        with pytest.raises(ValueError):
            eval2(SymbolPoly({}), 0, 0, order=3)


class TestScaleContext:
    def test_width_product_is_hbar(self):
        ctx = ScaleContext(hbar=0.7, mass=2.0, omega=3.0, b=0.4)
        assert ctx.b * ctx.c == pytest.approx(0.7, abs=1e-15)

    def test_default_width(self):
        ctx = ScaleContext.default(hbar=2.0, mass=0.5, omega=4.0)
        assert ctx.b == pytest.approx(math.sqrt(2.0 / 2.0))

    def test_label_round_trip(self):
        ctx = ScaleContext(hbar=1.3, mass=0.7, omega=2.1, b=0.9)
        rng = np.random.default_rng(23)
        for _ in range(20):
            q, p = rng.normal(size=2) * 3
            q2, p2 = ctx.qp_from_z(ctx.z_from_qp(q, p))
            assert abs(q2 - q) < 1e-14 * max(1, abs(q))
            assert abs(p2 - p) < 1e-14 * max(1, abs(p))

    def test_rejects_nonpositive_scales(self):
        with pytest.raises(ValueError):
            ScaleContext(hbar=-1.0)


class TestHamiltonianLoader:
    def test_normal_ordering(self, tmp_path):
        path = tmp_path / "h.json"
        path.write_text(
            '{"hbar": 1.0, "omega": 2.0, "ordering": "normal",'
            ' "terms": [{"m": 1, "n": 1, "re": 2.0}, {"m": 0, "n": 0, "re": 1.0}]}'
        )
        op, ctx = load_hamiltonian(str(path))
        assert_terms(op.terms, {(1, 1): 2.0, (0, 0): 1.0})
        assert ctx.omega == 2.0
        assert ctx.b == pytest.approx(math.sqrt(0.5))

    def test_weyl_qp_ordering(self):
        data = {
            "hbar": 1.0,
            "width_b": 1.0,
            "ordering": "weyl_qp",
            "terms": [{"m": 2, "n": 0, "re": 1.0}, {"m": 0, "n": 2, "re": 1.0}],
        }
        op, _ = load_hamiltonian(data)
        assert_terms(op.terms, {(1, 1): 2.0, (0, 0): 1.0})

    def test_rejects_unknown_ordering(self):
        with pytest.raises(HamiltonianFormatError, match="ordering"):
            load_hamiltonian({"ordering": "antinormal", "terms": []})

    def test_rejects_bad_term_fields(self):
        with pytest.raises(HamiltonianFormatError, match=r"terms\[0\].n"):
            load_hamiltonian(
                {"ordering": "normal", "terms": [{"m": 1, "n": -2, "re": 1.0}]}
            )

    def test_json_error_carries_location(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text('{"hbar": 1.0,\n  "terms": [}')
        with pytest.raises(HamiltonianFormatError, match="line 2"):
            load_hamiltonian(str(path))

    def test_rejects_nonpositive_hbar(self):
        with pytest.raises(HamiltonianFormatError, match="hbar"):
            load_hamiltonian({"hbar": 0.0, "ordering": "normal", "terms": []})

"""Ladder-operator polynomial algebra and Q/P/Weyl symbol calculus.

Operators are stored normal ordered: a polynomial is a map
``(m, n) -> c`` representing ``sum c_mn adag^m a^n`` with ``[a, adag] = 1``.
Phase-space symbols are polynomials in two *independent* complex arguments
``(u, v)``; on the real section ``v = conj(u) = conj(z)``.  The three symbols
are related by the exact (terminating) differential maps

    A_Q = exp(+1/2 d_u d_v) A_W,        A_P = exp(-1/2 d_u d_v) A_W,

so all conversions are finite and exact for polynomials.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import HamiltonianFormatError

__all__ = [
    "OperatorPoly",
    "SymbolPoly",
    "ScaleContext",
    "SymbolValue",
    "normalize",
    "q_symbol",
    "p_symbol",
    "weyl_symbol",
    "weyl_quantize",
    "symbol_to_qp",
    "eval2",
    "load_hamiltonian",
    "harmonic_hamiltonian",
    "quartic_position_hamiltonian",
]

_PRUNE = 0.0  # coefficients exactly equal to zero are dropped


def _pruned(terms: dict) -> dict:
    return {k: complex(c) for k, c in terms.items() if c != _PRUNE}


def _poly_add(acc: dict, other: dict, scale: complex = 1.0) -> None:
    """In-place ``acc += scale * other`` on exponent-keyed dicts."""
    for key, c in other.items():
        acc[key] = acc.get(key, 0.0) + scale * c


def _poly_mul(p1: dict, p2: dict) -> dict:
    out: dict = {}
    for (i1, j1), c1 in p1.items():
        for (i2, j2), c2 in p2.items():
            key = (i1 + i2, j1 + j2)
            out[key] = out.get(key, 0.0) + c1 * c2
    return out


def _poly_pow(p: dict, k: int) -> dict:
    out = {(0, 0): 1.0 + 0.0j}
    for _ in range(k):
        out = _poly_mul(out, p)
    return out


def _falling(m: int, k: int) -> float:
    """Falling factorial m (m-1) ... (m-k+1)."""
    out = 1.0
    for i in range(k):
        out *= m - i
    return out


class OperatorPoly:
    """Polynomial in one ladder pair, kept in normal-ordered canonical form.

    Parameters
    ----------
    terms : dict
        Map ``(m, n) -> coefficient`` of ``adag^m a^n``.  Zero coefficients
        are pruned, so the canonical form is unique.
    hbar : float
        Planck constant carried along for downstream consumers.
    """

    def __init__(self, terms: dict, hbar: float = 1.0):
        if hbar <= 0:
            raise ValueError("hbar must be positive")
        for m, n in terms:
            if m < 0 or n < 0:
                raise ValueError(f"negative ladder exponent in term ({m}, {n})")
        self.terms = _pruned(terms)
        self.hbar = float(hbar)

    def __repr__(self):
        inner = ", ".join(
            f"({m},{n}): {c:.6g}" for (m, n), c in sorted(self.terms.items())
        )
        return f"OperatorPoly({{{inner}}}, hbar={self.hbar})"

    @property
    def degree(self) -> int:
        return max((m + n for m, n in self.terms), default=0)

    def is_hermitian(self, tol: float = 1e-12) -> bool:
        """True iff c_mn = conj(c_nm) for every term, within ``tol``."""
        scale = max((abs(c) for c in self.terms.values()), default=1.0)
        for (m, n), c in self.terms.items():
            if abs(c - np.conj(self.terms.get((n, m), 0.0))) > tol * max(scale, 1.0):
                return False
        return True

    def dagger(self) -> "OperatorPoly":
        return OperatorPoly(
            {(n, m): np.conj(c) for (m, n), c in self.terms.items()}, self.hbar
        )

    def __add__(self, other: "OperatorPoly") -> "OperatorPoly":
        acc = dict(self.terms)
        _poly_add(acc, other.terms)
        return OperatorPoly(acc, self.hbar)

    def scaled(self, factor: complex) -> "OperatorPoly":
        return OperatorPoly(
            {k: factor * c for k, c in self.terms.items()}, self.hbar
        )

    def __mul__(self, other: "OperatorPoly") -> "OperatorPoly":
        """Canonical product, re-normal-ordered with a^n adag^m expansions."""
        acc: dict = {}
        for (m1, n1), c1 in self.terms.items():
            for (m2, n2), c2 in other.terms.items():
                # a^n1 adag^m2 = sum_k k! C(n1,k) C(m2,k) adag^(m2-k) a^(n1-k)
                for k in range(min(n1, m2) + 1):
                    coeff = (
                        c1
                        * c2
                        * math.factorial(k)
                        * math.comb(n1, k)
                        * math.comb(m2, k)
                    )
                    key = (m1 + m2 - k, n1 + n2 - k)
                    acc[key] = acc.get(key, 0.0) + coeff
        return OperatorPoly(acc, self.hbar)


class SymbolPoly:
    """Polynomial phase-space function ``sum c_mn v^m u^n``.

    ``u`` and ``v`` are independent complex arguments; the real section is
    ``u = z``, ``v = conj(z)``.  Evaluation and derivatives are exact.
    """

    def __init__(self, terms: dict):
        self.terms = _pruned(terms)

    def __repr__(self):
        inner = ", ".join(
            f"v^{m} u^{n}: {c:.6g}" for (m, n), c in sorted(self.terms.items())
        )
        return f"SymbolPoly({{{inner}}})"

    @property
    def degree(self) -> int:
        return max((m + n for m, n in self.terms), default=0)

    def __add__(self, other: "SymbolPoly") -> "SymbolPoly":
        acc = dict(self.terms)
        _poly_add(acc, other.terms)
        return SymbolPoly(acc)

    def __sub__(self, other: "SymbolPoly") -> "SymbolPoly":
        acc = dict(self.terms)
        _poly_add(acc, other.terms, -1.0)
        return SymbolPoly(acc)

    def __mul__(self, other: "SymbolPoly") -> "SymbolPoly":
        return SymbolPoly(_poly_mul(self.terms, other.terms))

    def scaled(self, factor: complex) -> "SymbolPoly":
        return SymbolPoly({k: factor * c for k, c in self.terms.items()})

    def trimmed(self, tol: float = 1e-14) -> "SymbolPoly":
        """Drop coefficients below ``tol`` relative to the largest one."""
        scale = max((abs(c) for c in self.terms.values()), default=0.0)
        return SymbolPoly(
            {k: c for k, c in self.terms.items() if abs(c) > tol * scale}
        )

    def derivative(self, wrt: str) -> "SymbolPoly":
        """Exact partial derivative, ``wrt`` in {"u", "v"}."""
        out: dict = {}
        for (m, n), c in self.terms.items():
            if wrt == "u" and n > 0:
                out[(m, n - 1)] = out.get((m, n - 1), 0.0) + n * c
            elif wrt == "v" and m > 0:
                out[(m - 1, n)] = out.get((m - 1, n), 0.0) + m * c
        return SymbolPoly(out)

    def eval(self, u, v):
        """Evaluate at (possibly array-valued) independent arguments."""
        out = 0.0j
        for (m, n), c in self.terms.items():
            out = out + c * v**m * u**n
        return out

    def grad(self, u, v):
        return self.derivative("u").eval(u, v), self.derivative("v").eval(u, v)

    def hess(self, u, v):
        du = self.derivative("u")
        dv = self.derivative("v")
        return (
            du.derivative("u").eval(u, v),
            dv.derivative("v").eval(u, v),
            du.derivative("v").eval(u, v),
        )


@dataclass
class SymbolValue:
    """Value and exact partial derivatives of a symbol at one point."""

    value: complex
    du: complex | None = None
    dv: complex | None = None
    duu: complex | None = None
    dvv: complex | None = None
    duv: complex | None = None


def eval2(sym: SymbolPoly, u: complex, v: complex, order: int = 0) -> SymbolValue:
    """Evaluate a symbol and its partials up to ``order`` in {0, 1, 2}."""
    if order not in (0, 1, 2):
        raise ValueError("order must be 0, 1 or 2")
    out = SymbolValue(value=sym.eval(u, v))
    if order >= 1:
        out.du, out.dv = sym.grad(u, v)
    if order == 2:
        out.duu, out.dvv, out.duv = sym.hess(u, v)
    return out


@dataclass(frozen=True)
class ScaleContext:
    """Physical scales: length width ``b`` and momentum width ``c = hbar/b``.

    The coherent label map is ``z = (q/b + i p/c) / sqrt(2)``.
    """

    hbar: float = 1.0
    mass: float = 1.0
    omega: float = 1.0
    b: float = field(default=1.0)

    def __post_init__(self):
        if min(self.hbar, self.mass, self.omega, self.b) <= 0:
            raise ValueError("hbar, mass, omega and b must all be positive")

    @classmethod
    def default(cls, hbar: float = 1.0, mass: float = 1.0, omega: float = 1.0):
        """Context with the ground-state width b = sqrt(hbar / m omega)."""
        return cls(hbar, mass, omega, math.sqrt(hbar / (mass * omega)))

    @property
    def c(self) -> float:
        return self.hbar / self.b

    def z_from_qp(self, q, p):
        return (q / self.b + 1j * p / self.c) / math.sqrt(2.0)

    def qp_from_z(self, z):
        z = np.asarray(z) if isinstance(z, np.ndarray) else z
        q = self.b * math.sqrt(2.0) * np.real(z)
        p = self.c * math.sqrt(2.0) * np.imag(z)
        return q, p


def normalize(word_list, hbar: float = 1.0) -> OperatorPoly:
    """Normal order a linear combination of ladder words.

    Parameters
    ----------
    word_list : sequence of (coefficient, word)
        Each word is a string over the alphabet {"a", "adag"}, whitespace
        separated, read left to right as an operator product.
    hbar : float
        Carried into the resulting :class:`OperatorPoly`.

    Returns
    -------
    OperatorPoly
        The canonical form obtained by repeated use of ``a adag = adag a + 1``.
    """
    total: dict = {}
    for coeff, word in word_list:
        acc = {(0, 0): complex(coeff)}
        for letter in word.split():
            if letter == "a":
                acc = {(m, n + 1): c for (m, n), c in acc.items()}
            elif letter == "adag":
                nxt: dict = {}
                for (m, n), c in acc.items():
                    # adag^m a^n adag = adag^(m+1) a^n + n adag^m a^(n-1)
                    nxt[(m + 1, n)] = nxt.get((m + 1, n), 0.0) + c
                    if n > 0:
                        key = (m, n - 1)
                        nxt[key] = nxt.get(key, 0.0) + n * c
                acc = nxt
            else:
                raise ValueError(f"unknown ladder letter {letter!r}")
        _poly_add(total, acc)
    return OperatorPoly(total, hbar)


def _apply_exp_mixed(terms: dict, s: float) -> dict:
    """Apply exp(s d_u d_v) to a (u, v) polynomial, exactly."""
    out: dict = {}
    for (m, n), c in terms.items():
        for k in range(min(m, n) + 1):
            coeff = c * s**k / math.factorial(k) * _falling(m, k) * _falling(n, k)
            key = (m - k, n - k)
            out[key] = out.get(key, 0.0) + coeff
    return out


def q_symbol(op: OperatorPoly) -> SymbolPoly:
    """Q symbol: substitute adag^m a^n -> v^m u^n in the normal-ordered form.

    On the real section this is the expectation <z|op|z>.
    """
    return SymbolPoly(dict(op.terms))


def p_symbol(op: OperatorPoly) -> SymbolPoly:
    """P symbol: weight of the diagonal coherent-state expansion.

    Equivalent to reordering to antinormal form ``a^n adag^m`` and then
    substituting ``a -> u``, ``adag -> v``; realised here as
    exp(-d_u d_v) applied to the Q symbol.
    """
    return SymbolPoly(_apply_exp_mixed(op.terms, -1.0))


def weyl_symbol(op: OperatorPoly) -> SymbolPoly:
    """Weyl (symmetric-ordering) symbol, via Gaussian de-smoothing of Q."""
    return SymbolPoly(_apply_exp_mixed(op.terms, -0.5))


def _uv_linear_forms(ctx: ScaleContext):
    """(q, p) expressed as linear (u, v) polynomials and vice versa."""
    rt2 = math.sqrt(2.0)
    q_poly = {(1, 0): ctx.b / rt2, (0, 1): ctx.b / rt2}
    p_poly = {(1, 0): 1j * ctx.c / rt2, (0, 1): -1j * ctx.c / rt2}
    u_poly = {(1, 0): 1.0 / (ctx.b * rt2), (0, 1): 1j / (ctx.c * rt2)}
    v_poly = {(1, 0): 1.0 / (ctx.b * rt2), (0, 1): -1j / (ctx.c * rt2)}
    return q_poly, p_poly, u_poly, v_poly


def weyl_quantize(qp_terms: dict, ctx: ScaleContext) -> OperatorPoly:
    """Operator whose Weyl symbol is the given (q, p) polynomial.

    Parameters
    ----------
    qp_terms : dict
        Map ``(j, k) -> coefficient`` of ``q^j p^k``.
    ctx : ScaleContext
        Supplies the widths of the label map.

    Returns
    -------
    OperatorPoly
        Normal-ordered operator; ``weyl_symbol`` of the result reproduces the
        input after the z <-> (q, p) substitution, exactly.
    """
    q_poly, p_poly, _, _ = _uv_linear_forms(ctx)
    weyl: dict = {}
    for (j, k), c in qp_terms.items():
        if j < 0 or k < 0:
            raise ValueError(f"negative power in qp term ({j}, {k})")
        term = _poly_mul(_poly_pow(q_poly, j), _poly_pow(p_poly, k))
        _poly_add(weyl, term, complex(c))
    normal = _apply_exp_mixed(weyl, +0.5)  # Q symbol of the target operator
    return OperatorPoly(normal, ctx.hbar)


def symbol_to_qp(sym: SymbolPoly, ctx: ScaleContext, tol: float = 1e-13) -> dict:
    """Rewrite a (u, v) symbol as a polynomial in the real variables (q, p).

    Returns a map ``(j, k) -> coefficient`` of ``q^j p^k``; coefficients below
    ``tol`` (relative) are trimmed so Hermitian inputs give clean tables.
    """
    _, _, u_poly, v_poly = _uv_linear_forms(ctx)
    out: dict = {}
    for (m, n), c in sym.terms.items():
        term = _poly_mul(_poly_pow(v_poly, m), _poly_pow(u_poly, n))
        _poly_add(out, term, c)
    scale = max((abs(c) for c in out.values()), default=0.0)
    return {k: c for k, c in out.items() if abs(c) > tol * scale}


def symbol_for_form(op: OperatorPoly, form: str) -> SymbolPoly:
    """Dispatch to the Q, P or Weyl symbol by one-letter form name."""
    form = form.lower()
    if form == "q":
        return q_symbol(op)
    if form == "p":
        return p_symbol(op)
    if form == "w":
        return weyl_symbol(op)
    raise ValueError(f"unknown symbol form {form!r}; expected q, p or w")


def harmonic_hamiltonian(ctx: ScaleContext) -> OperatorPoly:
    """hbar omega (adag a + 1/2)."""
    hw = ctx.hbar * ctx.omega
    return OperatorPoly({(1, 1): hw, (0, 0): 0.5 * hw}, ctx.hbar)


def quartic_position_hamiltonian(lam: float, ctx: ScaleContext) -> OperatorPoly:
    """p^2/2m + m omega^2 q^2 / 2 + lam q^4, Weyl quantized."""
    qp = {
        (0, 2): 1.0 / (2.0 * ctx.mass),
        (2, 0): 0.5 * ctx.mass * ctx.omega**2,
        (4, 0): lam,
    }
    return weyl_quantize(qp, ctx)


def _require(cond: bool, msg: str):
    if not cond:
        raise HamiltonianFormatError(msg)


def load_hamiltonian(source) -> tuple[OperatorPoly, ScaleContext]:
    """Read a Hamiltonian description from a JSON file path or a dict.

    Schema::

        {"hbar": 1.0, "mass": 1.0, "omega": 1.0, "width_b": 1.0,
         "ordering": "normal" | "weyl_qp",
         "terms": [{"m": 2, "n": 0, "re": 0.5, "im": 0.0}, ...]}

    ``(m, n)`` indexes ``adag^m a^n`` for "normal" ordering and ``q^m p^n``
    for "weyl_qp".  Mixed orderings are not expressible and hence rejected.
    """
    if isinstance(source, dict):
        data = source
    else:
        try:
            with open(source) as fh:
                data = json.load(fh)
        except OSError as exc:
            raise HamiltonianFormatError(f"cannot read {source}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise HamiltonianFormatError(
                f"{source}: invalid JSON at line {exc.lineno} column {exc.colno}: "
                f"{exc.msg}"
            ) from exc

    _require(isinstance(data, dict), "top-level JSON value must be an object")
    hbar = data.get("hbar", 1.0)
    mass = data.get("mass", 1.0)
    omega = data.get("omega", 1.0)
    for name, val in (("hbar", hbar), ("mass", mass), ("omega", omega)):
        _require(
            isinstance(val, (int, float)) and val > 0,
            f"field '{name}' must be a positive number, got {val!r}",
        )
    width_b = data.get("width_b", math.sqrt(hbar / (mass * omega)))
    _require(
        isinstance(width_b, (int, float)) and width_b > 0,
        f"field 'width_b' must be a positive number, got {width_b!r}",
    )
    ctx = ScaleContext(hbar=hbar, mass=mass, omega=omega, b=float(width_b))

    ordering = data.get("ordering", "normal")
    _require(
        ordering in ("normal", "weyl_qp"),
        f"field 'ordering' must be 'normal' or 'weyl_qp', got {ordering!r}",
    )
    raw_terms = data.get("terms", [])
    _require(isinstance(raw_terms, list), "field 'terms' must be a list")

    terms: dict = {}
    for i, entry in enumerate(raw_terms):
        _require(isinstance(entry, dict), f"terms[{i}] must be an object")
        for fieldname in ("m", "n"):
            _require(
                isinstance(entry.get(fieldname), int) and entry[fieldname] >= 0,
                f"terms[{i}].{fieldname} must be a non-negative integer",
            )
        re_part = entry.get("re", 0.0)
        im_part = entry.get("im", 0.0)
        for fieldname, val in (("re", re_part), ("im", im_part)):
            _require(
                isinstance(val, (int, float)),
                f"terms[{i}].{fieldname} must be a number",
            )
        key = (entry["m"], entry["n"])
        terms[key] = terms.get(key, 0.0) + complex(re_part, im_part)

    if ordering == "normal":
        return OperatorPoly(terms, ctx.hbar), ctx
    return weyl_quantize(terms, ctx), ctx

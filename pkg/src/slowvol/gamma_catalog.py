"""Symbolic catalog of the growth invariant gamma(M) and its flow bound.

gamma(M) is the sum of two homotopy invariants: the polynomial growth
degree of the fundamental group and the degree of homology growth of the
based loop space.  Both are known constants for the manifolds in this
catalog, so evaluation is a recursion over a small expression tree:
atoms carry (gamma_pi1, gamma_loop) pairs, Product adds componentwise
(infinity-absorbing), and FiniteCover is the identity.

The payoff is :func:`theorem_bound`: every Reeb-type flow on the unit
cosphere bundle of M has slow volume growth at least gamma(M) - 1, so the
catalog supplies the number that measured exponents are compared against.

Descriptors also parse from a compact string grammar, e.g. ``"T(2) x S(2)"``,
``"Nil(1)"``, ``"cover:T(3)"``; see :func:`parse`.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

from .errors import CatalogInvariantError, MalformedDescriptor

INF = math.inf


# ---------------------------------------------------------------------------
# descriptor tree
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Atom:
    name: str
    param: int | None = None

    def __str__(self):
        return self.name if self.param is None else f"{self.name}({self.param})"


@dataclass(frozen=True)
class Product:
    left: object
    right: object

    def __str__(self):
        return f"{self.left} x {self.right}"


@dataclass(frozen=True)
class FiniteCover:
    child: object

    def __str__(self):
        return f"cover:{self.child}"


@dataclass(frozen=True)
class GammaResult:
    """Evaluated invariant with the derived flow bound.

    ``slow`` is true when gamma_total is finite: only then does the
    polynomial bound regime apply; infinite gamma signals exponential-type
    complexity (positive entropy expected).
    """

    gamma_pi1: float
    gamma_loop: float
    gamma_total: float
    theorem_bound: float
    dimension: int
    slow: bool


class _AtomSpec:
    def __init__(self, dim, pair, check=None, cross_like=False, circle=False,
                 param_doc=""):
        self.dim = dim            # param -> dimension
        self.pair = pair          # param -> (gamma_pi1, gamma_loop)
        self.check = check        # param validator -> error string or None
        self.cross_like = cross_like  # param -> bool if callable
        self.circle = circle
        self.param_doc = param_doc


def _need_none(p):
    return None if p is None else "takes no parameter"


def _need_int(lo):
    def check(p):
        if p is None:
            return "requires an integer parameter"
        if p < lo:
            return f"parameter must be >= {lo}"
        return None
    return check


def _check_nil(p):
    if p is None:
        return "requires a nonzero euler number"
    if p == 0:
        return "euler number must be nonzero"
    return None


def _check_s2xr(p):
    if p is None or not 1 <= p <= 4:
        return "quotient index must be one of 1..4"
    return None


_ATOMS = {
    # spheres: S(1) is the circle, S(d >= 2) simply connected
    "S": _AtomSpec(
        dim=lambda p: p,
        pair=lambda p: (1, 0) if p == 1 else (0, 1),
        check=_need_int(1),
        cross_like=lambda p: p >= 2,
        circle=lambda p: p == 1,
        param_doc="dimension d >= 1",
    ),
    "RP": _AtomSpec(
        dim=lambda p: p,
        pair=lambda p: (0, 1),
        check=_need_int(2),
        cross_like=True,
        param_doc="dimension d >= 2",
    ),
    "CP": _AtomSpec(
        dim=lambda p: 2 * p,
        pair=lambda p: (0, 1),
        check=_need_int(1),
        cross_like=True,
        param_doc="complex dimension n >= 1",
    ),
    "HP": _AtomSpec(
        dim=lambda p: 4 * p,
        pair=lambda p: (0, 1),
        check=_need_int(1),
        cross_like=True,
        param_doc="quaternionic dimension n >= 1",
    ),
    "CaP": _AtomSpec(
        dim=lambda p: 16,
        pair=lambda p: (0, 1),
        check=_need_none,
        cross_like=True,
    ),
    "T": _AtomSpec(
        dim=lambda p: p,
        pair=lambda p: (p, 0),
        check=_need_int(1),
        circle=lambda p: p == 1,
        param_doc="dimension d >= 1",
    ),
    "Klein": _AtomSpec(
        dim=lambda p: 2,
        pair=lambda p: (2, 0),
        check=_need_none,
    ),
    "Sigma": _AtomSpec(
        dim=lambda p: 2,
        pair=lambda p: (0, 1) if p == 0 else ((2, 0) if p == 1 else (INF, 0)),
        check=_need_int(0),
        cross_like=lambda p: p == 0,
        param_doc="genus g >= 0",
    ),
    "Nil": _AtomSpec(
        dim=lambda p: 3,
        pair=lambda p: (4, 0),
        check=_check_nil,
        param_doc="euler number != 0",
    ),
    "S2xR": _AtomSpec(
        dim=lambda p: 3,
        pair=lambda p: (1, 1),
        check=_check_s2xr,
        param_doc="which quotient, 1..4",
    ),
    "T3Q": _AtomSpec(
        dim=lambda p: 3,
        pair=lambda p: (3, 0),
        check=_need_none,
    ),
    "S3Q": _AtomSpec(
        dim=lambda p: 3,
        pair=lambda p: (0, 1),
        check=_need_none,
        cross_like=True,
    ),
    "Sol": _AtomSpec(
        dim=lambda p: 3,
        pair=lambda p: (INF, 0),
        check=_need_none,
    ),
    # generic fast manifold of dimension d: only the bound = infinity matters
    "Fast": _AtomSpec(
        dim=lambda p: p,
        pair=lambda p: (0, INF),
        check=_need_int(1),
        param_doc="dimension d >= 1",
    ),
}

_ALIASES = {
    "Circle": ("S", 1),
    "Sphere": ("S", None),
    "Torus": ("T", None),
    "KleinBottle": ("Klein", None),
    "Surface": ("Sigma", None),
    "NilCircleBundle": ("Nil", None),
    "CayleyPlane": ("CaP", None),
}


def atom(name, param=None):
    """Construct and validate a catalog atom."""
    if name in _ALIASES:
        base, fixed = _ALIASES[name]
        if fixed is not None:
            if param is not None and param != fixed:
                raise MalformedDescriptor(f"{name} takes no parameter")
            param = fixed
        name = base
    spec = _ATOMS.get(name)
    if spec is None:
        raise MalformedDescriptor(
            f"unknown atom {name!r}; known: {', '.join(sorted(_ATOMS))}"
        )
    if spec.check is not None:
        msg = spec.check(param)
        if msg:
            raise MalformedDescriptor(f"{name}: {msg}")
    return Atom(name, param)


# convenience constructors mirroring the catalog
def circle():
    return atom("S", 1)


def sphere(d):
    return atom("S", d)


def real_projective(d):
    return atom("RP", d)


def complex_projective(n):
    return atom("CP", n)


def quaternionic_projective(n):
    return atom("HP", n)


def cayley_plane():
    return atom("CaP")


def torus(d):
    return atom("T", d)


def klein_bottle():
    return atom("Klein")


def orientable_surface(genus):
    return atom("Sigma", genus)


def nil_circle_bundle(euler=1):
    return atom("Nil", euler)


def s2xr_quotient(which):
    return atom("S2xR", which)


def t3_finite_quotient():
    return atom("T3Q")


def s3_quotient():
    return atom("S3Q")


def sol3():
    return atom("Sol")


def fast(d):
    return atom("Fast", d)


def product(a, b, *rest):
    node = Product(a, b)
    for r in rest:
        node = Product(node, r)
    return node


def finite_cover(child):
    return FiniteCover(child)


# ---------------------------------------------------------------------------
# evaluation
# ---------------------------------------------------------------------------

def _call(v, p):
    return v(p) if callable(v) else v


def _evaluate(descriptor):
    """Recursive (gamma_pi1, gamma_loop, dimension) without consistency checks."""
    if isinstance(descriptor, Atom):
        spec = _ATOMS.get(descriptor.name)
        if spec is None or (spec.check is not None and spec.check(descriptor.param)):
            raise MalformedDescriptor(f"invalid atom {descriptor!r}")
        g1, g2 = spec.pair(descriptor.param)
        return g1, g2, spec.dim(descriptor.param)
    if isinstance(descriptor, Product):
        a1, a2, da = _evaluate(descriptor.left)
        b1, b2, db = _evaluate(descriptor.right)
        return a1 + b1, a2 + b2, da + db
    if isinstance(descriptor, FiniteCover):
        return _evaluate(descriptor.child)
    raise MalformedDescriptor(f"not a descriptor node: {descriptor!r}")


def gamma(descriptor):
    """Evaluate gamma(M) = gamma(pi_1) + gamma(loop space) on the catalog.

    Raises :class:`CatalogInvariantError` when a finite result violates the
    dimension bound gamma <= d(d-1)/2 + 1 or falls below 1; both would be
    catalog bugs, not user errors.
    """
    gamma_pi1, gamma_loop, dim = _evaluate(descriptor)
    return _finish(descriptor, gamma_pi1, gamma_loop, dim)


def _finish(descriptor, gamma_pi1, gamma_loop, dim):
    total = gamma_pi1 + gamma_loop
    slow = math.isfinite(total)
    if slow:
        cap = dim * (dim - 1) // 2 + 1
        if total > cap:
            raise CatalogInvariantError(
                f"{descriptor}: gamma {total} exceeds dimension bound {cap}"
            )
        if total < 1:
            raise CatalogInvariantError(
                f"{descriptor}: gamma {total} below 1 for a closed manifold"
            )
        total = int(total)
    bound = total - 1 if slow else INF
    return GammaResult(
        gamma_pi1=gamma_pi1,
        gamma_loop=gamma_loop,
        gamma_total=total,
        theorem_bound=bound,
        dimension=dim,
        slow=slow,
    )


def theorem_bound(descriptor):
    """gamma(M) - 1, the lower bound on slow volume growth of any Reeb flow."""
    return gamma(descriptor).theorem_bound


def cross_check_dimension_bound(descriptor):
    """True iff the result is not slow, or satisfies gamma <= d(d-1)/2 + 1."""
    gamma_pi1, gamma_loop, dim = _evaluate(descriptor)
    total = gamma_pi1 + gamma_loop
    if not math.isfinite(total):
        return True
    return 1 <= total <= dim * (dim - 1) // 2 + 1


def is_single_generator_type(descriptor):
    """True for atoms whose gamma = 1 comes from one-element cohomology,
    plus the circle; these are exactly the catalog's gamma_total = 1 cases."""
    if not isinstance(descriptor, Atom):
        return False
    spec = _ATOMS[descriptor.name]
    return bool(_call(spec.cross_like, descriptor.param)
                or _call(spec.circle, descriptor.param))


def catalog_atoms():
    """One representative per atom kind, for sweep-style tests."""
    return [
        circle(), sphere(2), sphere(3), real_projective(2), real_projective(3),
        complex_projective(1), complex_projective(2), quaternionic_projective(1),
        cayley_plane(), torus(1), torus(2), torus(3), torus(4), klein_bottle(),
        orientable_surface(0), orientable_surface(1), orientable_surface(2),
        nil_circle_bundle(1), nil_circle_bundle(-2), s2xr_quotient(1),
        s2xr_quotient(4), t3_finite_quotient(), s3_quotient(), sol3(), fast(4),
    ]


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

_TOKEN = re.compile(r"\s*(?:(?P<name>[A-Za-z][A-Za-z0-9]*)"
                    r"|(?P<int>-?\d+)"
                    r"|(?P<punct>[():]))")


def _tokenize(text):
    pos = 0
    tokens = []
    while pos < len(text):
        match = _TOKEN.match(text, pos)
        if match is None:
            stripped = text[pos:].lstrip()
            if not stripped:
                break
            at = len(text) - len(stripped)
            raise MalformedDescriptor(
                f"descriptor parse error at position {at}: "
                f"unexpected character {stripped[0]!r}"
            )
        kind = match.lastgroup
        tokens.append((kind, match.group(kind), match.start(kind)))
        pos = match.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text):
        self.text = text
        self.tokens = _tokenize(text)
        self.pos = 0

    def peek(self):
        return self.tokens[self.pos]

    def next(self):
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def fail(self, expected):
        kind, value, at = self.peek()
        got = repr(value) if kind != "end" else "end of input"
        raise MalformedDescriptor(
            f"descriptor parse error at position {at}: expected {expected}, got {got}"
        )

    def parse(self):
        node = self.parse_product()
        if self.peek()[0] != "end":
            self.fail("'x' or end of input")
        return node

    def parse_product(self):
        node = self.parse_term()
        while True:
            kind, value, _ = self.peek()
            if kind == "name" and value == "x":
                self.next()
                node = Product(node, self.parse_term())
            else:
                return node

    def parse_term(self):
        kind, value, at = self.peek()
        if kind == "name" and value == "cover":
            save = self.pos
            self.next()
            k2, v2, _ = self.peek()
            if k2 == "punct" and v2 == ":":
                self.next()
                return FiniteCover(self.parse_term())
            self.pos = save  # a plain atom named "cover" is not known; fall through
        if kind == "punct" and value == "(":
            self.next()
            node = self.parse_product()
            k2, v2, _ = self.peek()
            if not (k2 == "punct" and v2 == ")"):
                self.fail("')'")
            self.next()
            return node
        if kind != "name":
            self.fail("an atom name, 'cover:', or '('")
        self.next()
        param = None
        k2, v2, _ = self.peek()
        if k2 == "punct" and v2 == "(":
            self.next()
            k3, v3, _ = self.peek()
            if k3 != "int":
                self.fail("an integer parameter")
            self.next()
            param = int(v3)
            k4, v4, _ = self.peek()
            if not (k4 == "punct" and v4 == ")"):
                self.fail("')'")
            self.next()
        try:
            return atom(value, param)
        except MalformedDescriptor as exc:
            raise MalformedDescriptor(
                f"descriptor parse error at position {at}: {exc}"
            ) from None


def parse(text):
    """Parse a descriptor string, e.g. "T(2) x S(2)", "cover:T(3)", "Nil(1)"."""
    if not text or not text.strip():
        raise MalformedDescriptor("empty descriptor")
    return _Parser(text).parse()

"""Potential expressions, the concentration landscape and its critical points.

Potentials are written in a small closed grammar::

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := '-' unary | power
    power  := atom ('^' unary)?          # exponent must be variable-free
    atom   := number | xK | func '(' expr ')' | '(' expr ')'
    func   := sin | cos | exp | sqrt | tanh

Every tree can be differentiated symbolically and the derivative stays in the
grammar (powers only ever have constant exponents).
"""
from __future__ import annotations

import itertools
import math
import re
from dataclasses import dataclass, field

import numpy as np


class ExpressionError(ValueError):
    """Base error for the expression grammar."""


class ExpressionSyntaxError(ExpressionError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at offset {offset})")
        self.offset = offset


class ExpressionDomainError(ExpressionError, ArithmeticError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (node at offset {offset})")
        self.offset = offset


class ParameterError(ValueError):
    pass


UNARY_FUNCS = ("sin", "cos", "exp", "sqrt", "tanh")


# --------------------------------------------------------------------------
# tree nodes


@dataclass(frozen=True)
class Node:
    pos: int = field(default=0, compare=False, kw_only=True)


@dataclass(frozen=True)
class Const(Node):
    value: float


@dataclass(frozen=True)
class Var(Node):
    index: int  # 1-based


@dataclass(frozen=True)
class Unary(Node):
    op: str  # 'neg' or one of UNARY_FUNCS
    arg: Node


@dataclass(frozen=True)
class Binary(Node):
    op: str  # '+', '-', '*', '/', '^'
    left: Node
    right: Node


@dataclass(frozen=True)
class ExpressionTree:
    """A parsed expression in ``dim`` variables, with its source text."""

    root: Node
    dim: int
    text: str = ""

    def __call__(self, point):
        return evaluate(self, point)

    def __str__(self):
        return to_string(self.root)


# --------------------------------------------------------------------------
# parsing

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<name>[A-Za-z_][A-Za-z_0-9]*)|(?P<op>[-+*/^()]))"
)


def _tokenize(text: str):
    tokens = []
    i = 0
    n = len(text)
    while i < n:
        if text[i].isspace():
            i += 1
            continue
        m = _TOKEN_RE.match(text, i)
        if m is None or m.end() == i:
            raise ExpressionSyntaxError(f"unexpected character {text[i]!r}", i)
        kind = m.lastgroup
        start = m.start(kind)
        tokens.append((kind, m.group(kind), start))
        i = m.end()
    tokens.append(("end", "", n))
    return tokens


class _Parser:
    def __init__(self, text: str, dim: int):
        self.text = text
        self.dim = dim
        self.tokens = _tokenize(text)
        self.k = 0

    @property
    def tok(self):
        return self.tokens[self.k]

    def advance(self):
        t = self.tokens[self.k]
        self.k += 1
        return t

    def expect(self, value):
        kind, val, pos = self.tok
        if val != value or kind == "end":
            what = "end of input" if kind == "end" else repr(val)
            raise ExpressionSyntaxError(f"expected {value!r}, found {what}", pos)
        self.advance()

    def parse(self) -> Node:
        node = self.expr()
        kind, val, pos = self.tok
        if kind != "end":
            raise ExpressionSyntaxError(f"unexpected token {val!r}", pos)
        return node

    def expr(self):
        node = self.term()
        while self.tok[1] in ("+", "-") and self.tok[0] == "op":
            _, op, pos = self.advance()
            node = Binary(op, node, self.term(), pos=pos)
        return node

    def term(self):
        node = self.unary()
        while self.tok[1] in ("*", "/") and self.tok[0] == "op":
            _, op, pos = self.advance()
            node = Binary(op, node, self.unary(), pos=pos)
        return node

    def unary(self):
        if self.tok[0] == "op" and self.tok[1] == "-":
            _, _, pos = self.advance()
            return Unary("neg", self.unary(), pos=pos)
        if self.tok[0] == "op" and self.tok[1] == "+":
            self.advance()
            return self.unary()
        return self.power()

    def power(self):
        base = self.atom()
        if self.tok[0] == "op" and self.tok[1] == "^":
            _, _, pos = self.advance()
            expo = self.unary()
            if _has_variables(expo):
                raise ExpressionSyntaxError("exponent must be constant", pos + 1)
            value = float(_eval_node(expo, np.zeros(0)))
            return Binary("^", base, Const(value, pos=expo.pos), pos=pos)
        return base

    def atom(self):
        kind, val, pos = self.tok
        if kind == "num":
            self.advance()
            return Const(float(val), pos=pos)
        if kind == "name":
            self.advance()
            if val in UNARY_FUNCS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Unary(val, arg, pos=pos)
            m = re.fullmatch(r"x(\d+)", val)
            if m:
                idx = int(m.group(1))
                if idx < 1 or idx > self.dim:
                    raise ExpressionSyntaxError(
                        f"variable {val} exceeds dimension {self.dim}", pos)
                return Var(idx, pos=pos)
            if val == "pi":
                return Const(math.pi, pos=pos)
            raise ExpressionSyntaxError(f"unknown identifier {val!r}", pos)
        if kind == "op" and val == "(":
            self.advance()
            node = self.expr()
            self.expect(")")
            return node
        what = "end of input" if kind == "end" else repr(val)
        raise ExpressionSyntaxError(f"unexpected {what}", pos)


def _has_variables(node: Node) -> bool:
    if isinstance(node, Var):
        return True
    if isinstance(node, Unary):
        return _has_variables(node.arg)
    if isinstance(node, Binary):
        return _has_variables(node.left) or _has_variables(node.right)
    return False


def parse(text: str, dim: int) -> ExpressionTree:
    """Parse ``text`` into an expression over ``x1..x{dim}``."""
    if dim < 1:
        raise ParameterError("dim must be >= 1")
    if not text or not text.strip():
        raise ExpressionSyntaxError("empty expression", 0)
    return ExpressionTree(_Parser(text, dim).parse(), dim, text)


# --------------------------------------------------------------------------
# evaluation


def _eval_node(node: Node, x):
    if isinstance(node, Const):
        return node.value
    if isinstance(node, Var):
        return x[node.index - 1]
    if isinstance(node, Unary):
        a = _eval_node(node.arg, x)
        op = node.op
        if op == "neg":
            return -a
        if op == "sqrt":
            if np.any(np.asarray(a) < 0):
                raise ExpressionDomainError("sqrt of negative value", node.pos)
            return np.sqrt(a)
        return getattr(np, op)(a)
    a = _eval_node(node.left, x)
    b = _eval_node(node.right, x)
    op = node.op
    if op == "+":
        return a + b
    if op == "-":
        return a - b
    if op == "*":
        return a * b
    if op == "/":
        if np.any(np.asarray(b) == 0):
            raise ExpressionDomainError("division by zero", node.pos)
        return a / b
    # '^' with constant exponent
    if b != int(b) and np.any(np.asarray(a) < 0):
        raise ExpressionDomainError("fractional power of negative value", node.pos)
    if b < 0 and np.any(np.asarray(a) == 0):
        raise ExpressionDomainError("negative power of zero", node.pos)
    if b == int(b) and abs(b) <= 64:
        return np.power(a, int(b)) if b >= 0 else 1.0 / np.power(a, -int(b))
    return np.power(a, b)


def evaluate(tree: ExpressionTree, point):
    """Evaluate ``tree`` at ``point``.

    ``point`` is a length-``dim`` sequence whose entries may be scalars or
    broadcastable numpy arrays (one array per coordinate); the result has the
    broadcast shape.
    """
    if len(point) != tree.dim:
        raise ParameterError(f"point has length {len(point)}, expected {tree.dim}")
    x = [np.asarray(c, dtype=float) for c in point]
    with np.errstate(over="raise", invalid="raise"):
        try:
            out = _eval_node(tree.root, x)
        except FloatingPointError as exc:
            raise ExpressionDomainError(str(exc), tree.root.pos) from None
    shape = np.broadcast_shapes(*[c.shape for c in x]) if x else ()
    out = np.broadcast_to(np.asarray(out, dtype=float), shape)
    return float(out) if out.ndim == 0 else np.array(out)


# --------------------------------------------------------------------------
# symbolic differentiation

_ZERO = Const(0.0)
_ONE = Const(1.0)


def _is_zero(n: Node) -> bool:
    return isinstance(n, Const) and n.value == 0.0


def _mul(a: Node, b: Node, pos=0) -> Node:
    if _is_zero(a) or _is_zero(b):
        return _ZERO
    if isinstance(a, Const) and a.value == 1.0:
        return b
    if isinstance(b, Const) and b.value == 1.0:
        return a
    return Binary("*", a, b, pos=pos)


def _add(a: Node, b: Node, pos=0) -> Node:
    if _is_zero(a):
        return b
    if _is_zero(b):
        return a
    return Binary("+", a, b, pos=pos)


def _sub(a: Node, b: Node, pos=0) -> Node:
    if _is_zero(b):
        return a
    if _is_zero(a):
        return Unary("neg", b, pos=pos)
    return Binary("-", a, b, pos=pos)


def _diff(node: Node, i: int) -> Node:
    if isinstance(node, Const):
        return _ZERO
    if isinstance(node, Var):
        return _ONE if node.index == i else _ZERO
    p = node.pos
    if isinstance(node, Unary):
        da = _diff(node.arg, i)
        if _is_zero(da):
            return _ZERO
        a = node.arg
        if node.op == "neg":
            return Unary("neg", da, pos=p)
        if node.op == "sin":
            return _mul(Unary("cos", a, pos=p), da, p)
        if node.op == "cos":
            return Unary("neg", _mul(Unary("sin", a, pos=p), da, p), pos=p)
        if node.op == "exp":
            return _mul(node, da, p)
        if node.op == "sqrt":
            return Binary("/", da, _mul(Const(2.0), node, p), pos=p)
        if node.op == "tanh":
            sech2 = Binary("-", _ONE, Binary("^", node, Const(2.0), pos=p), pos=p)
            return _mul(sech2, da, p)
        raise AssertionError(node.op)
    a, b = node.left, node.right
    da, db = _diff(a, i), _diff(b, i)
    if node.op == "+":
        return _add(da, db, p)
    if node.op == "-":
        return _sub(da, db, p)
    if node.op == "*":
        return _add(_mul(da, b, p), _mul(a, db, p), p)
    if node.op == "/":
        num = _sub(_mul(da, b, p), _mul(a, db, p), p)
        if _is_zero(num):
            return _ZERO
        return Binary("/", num, Binary("^", b, Const(2.0), pos=p), pos=p)
    # '^' with constant exponent b
    n = b.value
    if _is_zero(da):
        return _ZERO
    if n == 0.0:
        return _ZERO
    base_pow = a if n - 1.0 == 1.0 else Binary("^", a, Const(n - 1.0), pos=p)
    inner = _ONE if n - 1.0 == 0.0 else base_pow
    return _mul(_mul(Const(n), inner, p), da, p)


def derivative(tree: ExpressionTree, i: int) -> ExpressionTree:
    """Symbolic partial derivative with respect to ``x{i}`` (1-based)."""
    return ExpressionTree(_diff(tree.root, i), tree.dim)


def gradient(tree: ExpressionTree, point) -> np.ndarray:
    """Gradient at ``point`` via symbolic differentiation."""
    return np.array([evaluate(d, point) for d in gradient_trees(tree)])


_GRAD_CACHE: dict = {}


def gradient_trees(tree: ExpressionTree) -> list[ExpressionTree]:
    key = (tree.root, tree.dim)
    out = _GRAD_CACHE.get(key)
    if out is None:
        out = [derivative(tree, i) for i in range(1, tree.dim + 1)]
        _GRAD_CACHE[key] = out
    return out


# --------------------------------------------------------------------------
# printing

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "neg": 3, "^": 4}


def to_string(node: Node) -> str:
    """Print with enough parentheses that re-parsing gives the same tree."""
    if isinstance(node, Const):
        if node.value < 0:
            return f"(-{-node.value!r})"
        return repr(node.value)
    if isinstance(node, Var):
        return f"x{node.index}"
    if isinstance(node, Unary):
        if node.op == "neg":
            return f"(-{to_string(node.arg)})"
        return f"{node.op}({to_string(node.arg)})"
    return f"({to_string(node.left)} {node.op} {to_string(node.right)})"


# --------------------------------------------------------------------------
# built-in families


def family(name: str, dim: int, **kw) -> str:
    """Expression text for a named potential family.

    ``constant`` (value), ``bump`` (base, amp, width, center) giving
    ``base + amp*exp(-|x-center|^2/width^2)``, ``harmonic`` (base, amp,
    center) giving ``base + amp*|x-center|^2``, and ``double_well`` (base,
    amp, sep, stiff) giving ``base + amp*(x1^2-sep^2)^2 + stiff*(x2^2+...)``.
    """
    center = kw.get("center", [0.0] * dim)

    def sq(k):
        c = center[k - 1]
        return f"(x{k} - {c!r})^2" if c else f"x{k}^2"

    r2 = " + ".join(sq(k) for k in range(1, dim + 1))
    if name == "constant":
        return repr(float(kw.get("value", 1.0)))
    if name == "bump":
        base = float(kw.get("base", 1.0))
        amp = float(kw.get("amp", 0.5))
        width = float(kw.get("width", 1.0))
        return f"{base!r} + {amp!r}*exp(-({r2})/{width**2!r})"
    if name == "harmonic":
        base = float(kw.get("base", 1.0))
        amp = float(kw.get("amp", 1.0))
        return f"{base!r} + {amp!r}*({r2})"
    if name == "double_well":
        base = float(kw.get("base", 1.0))
        amp = float(kw.get("amp", 1.0))
        sep = float(kw.get("sep", 0.5))
        stiff = float(kw.get("stiff", 1.0))
        text = f"{base!r} + {amp!r}*(x1^2 - {sep**2!r})^2"
        if dim > 1:
            rest = " + ".join(f"x{k}^2" for k in range(2, dim + 1))
            text += f" + {stiff!r}*({rest})"
        return text
    raise ParameterError(f"unknown potential family {name!r}")


# --------------------------------------------------------------------------
# potential sets and hypotheses

NAMES = ("J1", "J2", "K1", "K2")


@dataclass(frozen=True)
class PotentialSet:
    J1: ExpressionTree
    J2: ExpressionTree
    K1: ExpressionTree
    K2: ExpressionTree
    dim: int
    # (lower C, upper M) per potential, in NAMES order
    declared_bounds: tuple = ((1e-12, math.inf),) * 4

    def __post_init__(self):
        if self.dim not in (1, 2, 3):
            raise ParameterError("dim must be 1, 2 or 3")
        for t in self.trees:
            if t.dim != self.dim:
                raise ParameterError("potential dimension mismatch")

    @classmethod
    def from_strings(cls, J1="1", J2="1", K1="1", K2="1", dim=3, bounds=None):
        trees = [parse(s, dim) for s in (J1, J2, K1, K2)]
        if bounds is None:
            bounds = ((1e-12, math.inf),) * 4
        return cls(*trees, dim=dim, declared_bounds=tuple(tuple(b) for b in bounds))

    @property
    def trees(self):
        return (self.J1, self.J2, self.K1, self.K2)

    @property
    def texts(self):
        return {n: (t.text or str(t)) for n, t in zip(NAMES, self.trees)}

    def values(self, point):
        return tuple(evaluate(t, point) for t in self.trees)


@dataclass
class ValidationReport:
    passed: bool
    minima: dict
    maxima: dict
    max_grad_norm: dict
    violations: list  # (name, point, value, reason)


def _lattice(box, samples):
    box = np.asarray(box, dtype=float)
    axes = [np.linspace(lo, hi, samples) for lo, hi in box]
    mesh = np.meshgrid(*axes, indexing="ij")
    return [m.ravel() for m in mesh]


def validate_hypotheses(pset: PotentialSet, box, samples: int,
                        grad_bounds=None) -> ValidationReport:
    """Check lower/upper bounds (and gradient bounds if given) on a lattice."""
    if samples < 2:
        raise ParameterError("samples must be >= 2")
    pts = _lattice(box, samples)
    minima, maxima, gmax, viol = {}, {}, {}, []
    for k, (name, tree) in enumerate(zip(NAMES, pset.trees)):
        lo, hi = pset.declared_bounds[k]
        vals = np.broadcast_to(evaluate(tree, pts), pts[0].shape)
        grads = np.array([np.broadcast_to(evaluate(d, pts), pts[0].shape)
                          for d in gradient_trees(tree)])
        gnorm = np.sqrt((grads ** 2).sum(axis=0))
        minima[name] = float(vals.min())
        maxima[name] = float(vals.max())
        gmax[name] = float(gnorm.max())
        if lo <= 0:
            viol.append((name, None, lo, "declared lower bound must be > 0"))
        for j in np.flatnonzero(vals < lo):
            viol.append((name, [float(p[j]) for p in pts], float(vals[j]), "below lower bound"))
        for j in np.flatnonzero(np.abs(vals) > hi):
            viol.append((name, [float(p[j]) for p in pts], float(vals[j]), "above upper bound"))
        if grad_bounds is not None:
            for j in np.flatnonzero(gnorm > grad_bounds[k]):
                viol.append((name, [float(p[j]) for p in pts], float(gnorm[j]),
                             "gradient above bound"))
    return ValidationReport(not viol, minima, maxima, gmax, viol)


# --------------------------------------------------------------------------
# concentration functions


def _check_positive(vals, Q):
    for name, v in zip(NAMES, vals):
        if np.any(np.asarray(v) <= 0):
            raise ExpressionDomainError(f"{name} is not positive at {Q}", 0)


def gamma(pset: PotentialSet, Q) -> float:
    """J1^(1/2)/J2 + K1^(1/2)/K2 at Q."""
    j1, j2, k1, k2 = pset.values(Q)
    _check_positive((j1, j2, k1, k2), Q)
    return np.sqrt(j1) / j2 + np.sqrt(k1) / k2


def gamma_bar_exponents(p: float, N: int) -> tuple[float, float]:
    return p / (p - 1.0) - N / 2.0, -1.0 / (p - 1.0)


def check_exponent(p: float, N: int):
    """Reject (p, N) outside the accepted range (any p > 1 for N <= 2)."""
    if N < 1:
        raise ParameterError(f"unsupported dimension {N}")
    if not p > 1.0:
        raise ParameterError("p must exceed 1")
    if N >= 3 and not p < N / (N - 2.0):
        raise ParameterError(f"p={p} is not subcritical for N={N} (need p < {N / (N - 2.0)})")


def gamma_bar(pset: PotentialSet, Q, p: float, N: int) -> float:
    """General-exponent landscape J1^(p/(p-1)-N/2) J2^(-1/(p-1)) + (K terms)."""
    check_exponent(p, N)
    a, b = gamma_bar_exponents(p, N)
    j1, j2, k1, k2 = pset.values(Q)
    _check_positive((j1, j2, k1, k2), Q)
    return j1 ** a * j2 ** b + k1 ** a * k2 ** b


@dataclass(frozen=True)
class GammaKind:
    kind: str = "classic"  # or "general"
    p: float = 2.0
    N: int = 3

    def to_json(self):
        if self.kind == "classic":
            return {"kind": "classic"}
        return {"kind": "general", "p": self.p, "N": self.N}

    @property
    def exponents(self):
        if self.kind == "classic":
            return 0.5, -1.0
        return gamma_bar_exponents(self.p, self.N)


def landscape_value(pset: PotentialSet, Q, mode: GammaKind):
    if mode.kind == "classic":
        return gamma(pset, Q)
    return gamma_bar(pset, Q, mode.p, mode.N)


def landscape_gradient(pset: PotentialSet, Q, mode: GammaKind) -> np.ndarray:
    """Exact gradient of the landscape by the chain rule on symbolic derivatives."""
    a, b = mode.exponents
    j1, j2, k1, k2 = pset.values(Q)
    _check_positive((j1, j2, k1, k2), Q)
    gj1, gj2, gk1, gk2 = (gradient(t, Q) for t in pset.trees)
    return (a * j1 ** (a - 1) * j2 ** b * gj1 + b * j1 ** a * j2 ** (b - 1) * gj2
            + a * k1 ** (a - 1) * k2 ** b * gk1 + b * k1 ** a * k2 ** (b - 1) * gk2)


def landscape_hessian(pset, Q, mode, step=1e-5) -> np.ndarray:
    Q = np.asarray(Q, dtype=float)
    n = Q.size
    H = np.empty((n, n))
    for i in range(n):
        e = np.zeros(n)
        e[i] = step
        H[:, i] = (landscape_gradient(pset, Q + e, mode)
                   - landscape_gradient(pset, Q - e, mode)) / (2 * step)
    return 0.5 * (H + H.T)


@dataclass
class CriticalPoint:
    Q: list
    value: float
    kind: str  # min | max | saddle
    isolation_radius: float
    grad_norm: float = 0.0
    hessian_eigenvalues: list = field(default_factory=list)


@dataclass
class LandscapeReport:
    critical_points: list
    gamma_kind: GammaKind
    degenerate: bool = False
    degenerate_count: int = 0
    status: str = "ok"

    def to_json(self):
        return {
            "critical_points": [
                {"Q": c.Q, "value": c.value, "kind": c.kind,
                 "isolation_radius": c.isolation_radius}
                for c in self.critical_points],
            "gamma_kind": self.gamma_kind.to_json(),
            "degenerate": self.degenerate,
            "status": self.status,
        }

    def extrema(self):
        return [c for c in self.critical_points if c.kind in ("min", "max")]


GRAD_TOL = 1e-8
EIG_TOL = 1e-6
MERGE_TOL = 1e-4


def _classify(eigs):
    if np.any(np.abs(eigs) < EIG_TOL):
        return "degenerate"
    if np.all(eigs > 0):
        return "min"
    if np.all(eigs < 0):
        return "max"
    return "saddle"


def _local_search(pset, q0, lo, hi, mode, max_iter=200):
    """Damped Newton on grad = 0 with a gradient-step fallback and backtracking."""
    q = q0.copy()
    g = landscape_gradient(pset, q, mode)
    gn = np.linalg.norm(g)
    for _ in range(max_iter):
        if gn <= 1e-12:
            break
        H = landscape_hessian(pset, q, mode)
        try:
            step = -np.linalg.solve(H, g)
            if not np.all(np.isfinite(step)):
                raise np.linalg.LinAlgError
        except np.linalg.LinAlgError:
            step = -g
        # gradient step as fallback direction (descent or ascent by curvature sign)
        t = 1.0
        improved = False
        for _ in range(40):
            qn = np.clip(q + t * step, lo, hi)
            gn_new = np.linalg.norm(landscape_gradient(pset, qn, mode))
            if gn_new < gn * (1 - 1e-4 * t) or gn_new < 1e-12:
                improved = True
                break
            t *= 0.5
        if not improved:
            step = -g / max(gn, 1e-300)
            t = 0.1 * float(np.min(hi - lo))
            for _ in range(60):
                qn = np.clip(q + t * step, lo, hi)
                gn_new = np.linalg.norm(landscape_gradient(pset, qn, mode))
                if gn_new < gn:
                    improved = True
                    break
                t *= 0.5
            if not improved:
                break
        q = qn
        g = landscape_gradient(pset, q, mode)
        gn = np.linalg.norm(g)
    return q, gn


def find_critical_points(pset: PotentialSet, box, mode: GammaKind | None = None,
                         seeds_per_axis: int = 5, shrink: float = 0.05) -> LandscapeReport:
    """Multistart search for critical points of the landscape inside ``box``.

    The search region is ``box`` shrunk by ``shrink`` times its width on each
    side. Results are deduplicated and classified by Hessian eigenvalue signs.
    """
    mode = mode or GammaKind()
    box = np.asarray(box, dtype=float)
    width = box[:, 1] - box[:, 0]
    lo = box[:, 0] + shrink * width
    hi = box[:, 1] - shrink * width
    diam = float(np.linalg.norm(hi - lo))
    axes = [np.linspace(a, b, seeds_per_axis) for a, b in zip(lo, hi)]
    seeds = [np.array(s) for s in itertools.product(*axes)]

    # a landscape with vanishing gradient and Hessian at every seed is flat
    flat = all(
        np.linalg.norm(landscape_gradient(pset, s, mode)) <= GRAD_TOL
        and np.all(np.abs(np.linalg.eigvalsh(landscape_hessian(pset, s, mode))) < EIG_TOL)
        for s in seeds)
    if flat:
        return LandscapeReport([], mode, degenerate=True, degenerate_count=len(seeds),
                               status="degenerate: landscape gradient vanishes identically")

    found = []
    for s in seeds:
        q, gn = _local_search(pset, s, lo, hi, mode)
        if gn > GRAD_TOL:
            continue
        if np.any(q <= lo + 1e-12) or np.any(q >= hi - 1e-12):
            continue
        found.append((q, gn))
    # deterministic order before deduplication
    found.sort(key=lambda t: tuple(np.round(t[0], 12)))
    merged: list = []
    for q, gn in found:
        for k, (q2, gn2) in enumerate(merged):
            if np.linalg.norm(q - q2) <= MERGE_TOL * diam:
                if gn < gn2:
                    merged[k] = (q, gn)
                break
        else:
            merged.append((q, gn))

    points, ndeg = [], 0
    for q, gn in merged:
        eigs = np.linalg.eigvalsh(landscape_hessian(pset, q, mode))
        kind = _classify(eigs)
        if kind == "degenerate":
            ndeg += 1
            continue
        points.append(CriticalPoint([float(v) for v in q], float(landscape_value(pset, q, mode)),
                                    kind, 0.0, float(gn), [float(e) for e in eigs]))
    for c in points:
        q = np.array(c.Q)
        others = [np.linalg.norm(q - np.array(o.Q)) for o in points if o is not c]
        to_edge = float(min(np.min(q - lo), np.min(hi - q)))
        c.isolation_radius = float(min(others)) if others else to_edge
    status = "ok" if points else "no isolated critical points"
    return LandscapeReport(points, mode, degenerate=False, degenerate_count=ndeg, status=status)


def sphere_probes(dim: int, count: int) -> np.ndarray:
    """Deterministic, roughly uniform unit vectors."""
    if dim == 1:
        return np.array([[1.0], [-1.0]] * max(1, count // 2))
    if dim == 2:
        t = 2 * np.pi * np.arange(count) / count
        return np.stack([np.cos(t), np.sin(t)], axis=1)
    k = np.arange(count) + 0.5
    z = 1 - 2 * k / count
    phi = np.pi * (1 + 5 ** 0.5) * k
    r = np.sqrt(1 - z * z)
    return np.stack([r * np.cos(phi), r * np.sin(phi), z], axis=1)


def random_tree(rng: np.random.Generator, dim: int, depth: int = 3) -> ExpressionTree:
    """Random smooth expression, used by the derivative and round-trip checks."""
    def build(d):
        if d == 0 or rng.random() < 0.25:
            if rng.random() < 0.5:
                return Const(float(np.round(rng.uniform(0.1, 2.0), 3)))
            return Var(int(rng.integers(1, dim + 1)))
        r = rng.random()
        if r < 0.3:
            op = str(rng.choice(["sin", "cos", "exp", "tanh"]))
            arg = build(d - 1)
            if op == "exp":
                arg = Binary("*", Const(0.3), arg)
            return Unary(op, arg)
        if r < 0.4:
            # strictly positive argument for sqrt
            return Unary("sqrt", Binary("+", Const(1.5), Binary("^", build(d - 1), Const(2.0))))
        if r < 0.5:
            return Binary("^", build(d - 1), Const(float(rng.integers(2, 4))))
        if r < 0.6:
            return Binary("/", build(d - 1), Binary("+", Const(2.0), Unary("sin", build(d - 1))))
        op = str(rng.choice(["+", "-", "*"]))
        return Binary(op, build(d - 1), build(d - 1))

    root = build(depth)
    return ExpressionTree(root, dim, to_string(root))

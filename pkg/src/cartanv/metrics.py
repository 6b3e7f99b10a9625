"""Built-in Cartan structures and the plain-text metric expression format.

Expression grammar (one expression per file, UTF-8)::

    expr   := expr ('+' | '-') term | term
    term   := term ('*' | '/') factor | factor
    factor := ('+' | '-') factor | atom ('^' | '**') number | atom
    atom   := number | x1..xn | p1..pn | 'sqrt(' expr ')' | '(' expr ')'

The expression defines ``K^2``.  It is parsed with :mod:`ast` and evaluated by a
small tree walker, so it works on floats and jets alike and nothing else can be
executed.
"""

from __future__ import annotations

import ast
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import jets
from .cartan import CartanStructure, PhasePoint, homogeneity_certificate
from .errors import CartanError, ConfigurationError, DomainError, ExpressionError, HomogeneityViolation, UnknownMetric

EPSILON_DIAG = 0.3
OFFDIAG_COUPLING = 0.15
OFFDIAG_BUMP = 0.25
RANDERS_B0 = 0.3
RANDERS_DRIFT = 0.05
QUARTIC_CONE = 0.2
PROBE_POINTS = 32


@dataclass(frozen=True)
class MetricDescriptor:
    label: str
    dim: int
    structure: CartanStructure
    expression: str
    quadratic: bool | None = None
    x_independent: bool | None = None
    reinhart_expected: bool | None = None
    params: dict = field(default_factory=dict)

    @property
    def flags(self) -> dict[str, bool | None]:
        return {
            "quadratic": self.quadratic,
            "x_independent": self.x_independent,
            "reinhart_expected": self.reinhart_expected,
        }


# -- built-in fundamental functions ----------------------------------------------

def _euclidean(x, p):
    return sum(pi * pi for pi in p)


def _quadratic_diag(x, p):
    return sum((1 + EPSILON_DIAG * xi * xi) * pi * pi for xi, pi in zip(x, p))


def offdiag_matrix(x):
    """``a^ij(x) = I + 0.15 (ones - I) + 0.25 x x^T / (1 + |x|^2)``; works on jets."""
    n = len(x)
    denom = 1 + sum(xi * xi for xi in x)
    return [
        [
            (1.0 if i == j else OFFDIAG_COUPLING) + OFFDIAG_BUMP * x[i] * x[j] / denom
            for j in range(n)
        ]
        for i in range(n)
    ]


def _quadratic_offdiag(x, p):
    a = offdiag_matrix(x)
    n = len(p)
    return sum(a[i][j] * p[i] * p[j] for i in range(n) for j in range(n))


def randers_drift(x, b0: Sequence[float]):
    """``b^i(x) = b0_i + 0.05 x_{i+1} / (1 + |x|^2)`` with cyclic index."""
    n = len(x)
    denom = 1 + sum(xi * xi for xi in x)
    return [b0[i] + RANDERS_DRIFT * x[(i + 1) % n] / denom for i in range(n)]


def make_randers(b0: Sequence[float]):
    b0 = tuple(float(v) for v in b0)

    def k_squared(x, p):
        quad = sum((1 + EPSILON_DIAG * xi * xi) * pi * pi for xi, pi in zip(x, p))
        b = randers_drift(x, b0)
        k = jets.sqrt(quad) + sum(bi * pi for bi, pi in zip(b, p))
        return k * k

    return k_squared


def _quartic_root(x, p):
    return jets.sqrt(sum(pi ** 4 for pi in p))


def _quartic_cone(z: PhasePoint) -> bool:
    p = np.abs(z.p)
    return bool(np.all(p >= QUARTIC_CONE * np.linalg.norm(p)))


BUILTIN_LABELS = ("euclidean", "quadratic-diag", "quadratic-offdiag", "randers-dual", "quartic-root")

_SUMMARIES = {
    "euclidean": "K^2 = sum p_i^2",
    "quadratic-diag": f"K^2 = sum (1 + {EPSILON_DIAG} x_i^2) p_i^2",
    "quadratic-offdiag": f"K^2 = a^ij(x) p_i p_j, a = I + {OFFDIAG_COUPLING}(ones - I) + {OFFDIAG_BUMP} x x^T/(1+|x|^2)",
    "randers-dual": f"K = sqrt(sum (1 + {EPSILON_DIAG} x_i^2) p_i^2) + b^i(x) p_i",
    "quartic-root": f"K = (sum p_i^4)^(1/4) on the cone |p_i| >= {QUARTIC_CONE} |p|",
}


def builtin(label: str, dim: int = 3, b0: Sequence[float] | None = None) -> MetricDescriptor:
    """Descriptor of a built-in metric in dimension ``dim``."""
    if dim < 2:
        raise ValueError("dimension must be at least 2")
    params: dict[str, Any] = {}
    validity = None
    if label == "euclidean":
        fn, flags = _euclidean, (True, True, True)
    elif label == "quadratic-diag":
        fn, flags = _quadratic_diag, (True, False, True)
    elif label == "quadratic-offdiag":
        fn, flags = _quadratic_offdiag, (True, False, True)
    elif label == "randers-dual":
        b0 = tuple(b0) if b0 is not None else (RANDERS_B0,) + (0.0,) * (dim - 1)
        if len(b0) != dim:
            raise ValueError("b0 must have one entry per dimension")
        if np.linalg.norm(b0) + RANDERS_DRIFT / 2 > 0.4:
            raise ValueError("drift one-form too long; |b|_a must stay below 0.4")
        fn, flags = make_randers(b0), (False, False, False)
        params["b0"] = list(b0)
    elif label == "quartic-root":
        fn, flags = _quartic_root, (False, True, False)
        validity = _quartic_cone
        params["cone"] = QUARTIC_CONE
    else:
        raise UnknownMetric(f"unknown metric {label!r}; choose from {', '.join(BUILTIN_LABELS)}")
    structure = CartanStructure(
        dim=dim,
        k_squared=fn,
        label=label,
        validity=validity,
        flags=dict(zip(("quadratic", "x_independent", "reinhart_expected"), flags)),
        expression=_SUMMARIES[label],
    )
    return MetricDescriptor(label, dim, structure, _SUMMARIES[label], *flags, params=params)


# -- user expressions ------------------------------------------------------------

_IDENT = re.compile(r"^([xp])([1-9][0-9]*)$")


class _Compiler:
    """Validates an expression tree and turns it into a jet-friendly callable."""

    def __init__(self, dim: int):
        self.dim = dim

    def check(self, node: ast.AST) -> None:
        if isinstance(node, ast.Expression):
            return self.check(node.body)
        if isinstance(node, ast.BinOp):
            if not isinstance(node.op, (ast.Add, ast.Sub, ast.Mult, ast.Div, ast.Pow)):
                raise ExpressionError(f"operator {type(node.op).__name__} is not supported")
            if isinstance(node.op, ast.Pow) and _number(node.right) is None:
                raise ExpressionError("exponents must be numeric constants")
            self.check(node.left)
            if not isinstance(node.op, ast.Pow):
                self.check(node.right)
            return None
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.UAdd, ast.USub)):
            return self.check(node.operand)
        if isinstance(node, ast.Constant) and _number(node) is not None:
            return None
        if isinstance(node, ast.Name):
            m = _IDENT.match(node.id)
            if not m:
                raise ExpressionError(f"unknown identifier {node.id!r}")
            if int(m.group(2)) > self.dim:
                raise ExpressionError(f"{node.id} exceeds dimension {self.dim}")
            return None
        if isinstance(node, ast.Call):
            if not (isinstance(node.func, ast.Name) and node.func.id == "sqrt"):
                raise ExpressionError("only sqrt(...) calls are supported")
            if len(node.args) != 1 or node.keywords:
                raise ExpressionError("sqrt takes exactly one argument")
            return self.check(node.args[0])
        raise ExpressionError(f"unsupported syntax: {ast.dump(node)[:60]}")


def _number(node: ast.AST) -> float | None:
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)) and not isinstance(node.value, bool):
        return float(node.value)
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
        v = _number(node.operand)
        if v is None:
            return None
        return -v if isinstance(node.op, ast.USub) else v
    return None


def _evaluate(node: ast.AST, x, p):
    if isinstance(node, ast.Expression):
        return _evaluate(node.body, x, p)
    if isinstance(node, ast.Constant):
        return float(node.value)
    if isinstance(node, ast.Name):
        m = _IDENT.match(node.id)
        return (x if m.group(1) == "x" else p)[int(m.group(2)) - 1]
    if isinstance(node, ast.UnaryOp):
        v = _evaluate(node.operand, x, p)
        return -v if isinstance(node.op, ast.USub) else v
    if isinstance(node, ast.Call):
        return jets.sqrt(_evaluate(node.args[0], x, p))
    left = _evaluate(node.left, x, p)
    op = node.op
    if isinstance(op, ast.Pow):
        r = _number(node.right)
        if float(r).is_integer() and r >= 0:
            return left ** int(r)
        if isinstance(left, jets.Jet):
            return left.power(r)
        if left <= 0 and not float(r).is_integer():
            raise DomainError("non-integer power of a non-positive number")
        return left ** r
    right = _evaluate(node.right, x, p)
    if isinstance(op, ast.Add):
        return left + right
    if isinstance(op, ast.Sub):
        return left - right
    if isinstance(op, ast.Mult):
        return left * right
    if not isinstance(right, jets.Jet) and right == 0:
        raise ZeroDivisionError("division by zero in metric expression")
    return left / right


def infer_dim(text: str) -> int:
    idx = [int(m) for m in re.findall(r"\b[xp]([1-9][0-9]*)\b", text)]
    if not idx:
        raise ExpressionError("expression mentions no coordinates")
    return max(2, max(idx))


def parse_expression(text: str, dim: int | None = None, label: str = "user") -> CartanStructure:
    """Compile a ``K^2`` expression into a :class:`CartanStructure` (no certification)."""
    text = text.strip()
    if not text:
        raise ExpressionError("empty expression")
    dim = infer_dim(text) if dim is None else dim
    if dim < 2:
        raise ExpressionError("dimension must be at least 2")
    try:
        # '^' must bind like '**', tighter than the arithmetic operators
        tree = ast.parse(text.replace("^", "**"), mode="eval")
    except SyntaxError as exc:
        raise ExpressionError(f"cannot parse expression: {exc.msg}") from exc
    _Compiler(dim).check(tree)

    def k_squared(x, p):
        return _evaluate(tree, x, p)

    return CartanStructure(dim=dim, k_squared=k_squared, label=label, expression=text)


def probe_points(dim: int, count: int = PROBE_POINTS, seed: int = 0) -> list[PhasePoint]:
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        x = rng.uniform(-1, 1, dim)
        u = rng.normal(size=dim)
        out.append(PhasePoint(tuple(x), tuple(rng.uniform(0.5, 2.0) * u / np.linalg.norm(u))))
    return out


def certify(structure: CartanStructure, count: int = PROBE_POINTS, tol: float = 1e-10) -> int:
    """Run the homogeneity certificate at probe points; returns how many were usable.

    Points outside the validity domain or where the fiber metric is degenerate are
    skipped; a homogeneity failure anywhere aborts.
    """
    used = 0
    for z in probe_points(structure.dim, count):
        if not structure.is_valid(z):
            continue
        try:
            homogeneity_certificate(structure, z, tol)
        except HomogeneityViolation:
            raise
        except CartanError:
            continue
        used += 1
    if used == 0:
        raise ConfigurationError("no probe point lies in the domain of a Cartan structure")
    return used


def load_expression(text: str, dim: int | None = None, label: str = "user") -> MetricDescriptor:
    """Parse and certify a user metric."""
    structure = parse_expression(text, dim, label)
    certify(structure)
    return MetricDescriptor(label, structure.dim, structure, text.strip())


def load_metric_file(path: str | Path, dim: int | None = None) -> MetricDescriptor:
    text = Path(path).read_text(encoding="utf-8")
    return load_expression(text, dim, label=Path(path).stem)

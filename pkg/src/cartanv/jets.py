"""Truncated multivariate Taylor arithmetic (forward-mode jets).

A :class:`Jet` stores, for every multi-index ``alpha`` of a downward-closed
truncation set, the Taylor-normalised coefficient ``d^alpha f / alpha!`` of a
function at a base point.  Multiplication is then plain truncated polynomial
convolution.  Jets are *array valued*: the coefficient array has shape
``(*shape, M)`` where ``M`` is the number of monomials, so a whole tensor of
scalar fields travels through one numpy operation.

The truncation set is described by a :class:`JetSpace`: the active coordinates
(each tagged as a position ``x`` or a momentum ``p`` coordinate) together with a
maximal degree in the positions, in the momenta, and in total.  Differentiating
along a momentum lowers the momentum and total degree by one, and binary
operations between jets of different orders restrict both operands to the
common (smaller) space first.
"""

from __future__ import annotations

import functools
import itertools
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import DomainError, SingularityError

MAX_TOTAL_ORDER = 5


@dataclass(frozen=True)
class DerivSpec:
    """Which derivatives a lift must carry.

    ``active_vars`` are indices into the ``2n`` phase coordinates
    ``(x_1..x_n, p_1..p_n)``.  ``total_order`` bounds the total degree of any
    stored monomial and defaults to ``p_order + x_order``.
    """

    n: int
    p_order: int
    x_order: int = 0
    active_vars: tuple[int, ...] | None = None
    total_order: int | None = None

    def __post_init__(self):
        if not 0 <= self.p_order <= 4:
            raise ValueError("p_order must lie in 0..4")
        if not 0 <= self.x_order <= 2:
            raise ValueError("x_order must lie in 0..2")
        if self.active_vars is None:
            xs = range(self.n) if self.x_order > 0 else ()
            ps = range(self.n, 2 * self.n) if self.p_order > 0 else ()
            object.__setattr__(self, "active_vars", tuple(xs) + tuple(ps))
        if self.total_order is None:
            object.__setattr__(self, "total_order", self.p_order + self.x_order)
        if self.total_order > MAX_TOTAL_ORDER:
            raise ValueError(f"total order above {MAX_TOTAL_ORDER} is not supported")
        if max(self.p_order, self.x_order) > 0 and not self.active_vars:
            raise ValueError("active_vars must be nonempty when any order > 0")
        if any(not 0 <= v < 2 * self.n for v in self.active_vars):
            raise ValueError("active variable index out of range")

    def space(self) -> JetSpace:
        return JetSpace.get(
            self.n, tuple(sorted(self.active_vars)), self.x_order, self.p_order, self.total_order
        )


class JetSpace:
    """Monomial bookkeeping for one truncation set.  Instances are cached."""

    def __init__(self, n: int, active: tuple[int, ...], xo: int, po: int, tot: int):
        self.n = n
        self.active = active
        self.xo, self.po, self.tot = xo, po, tot
        self.is_p = np.array([v >= n for v in active], dtype=bool)
        self.position = {v: k for k, v in enumerate(active)}
        m = len(active)
        monos = []
        for deg in range(tot + 1):
            for combo in itertools.combinations_with_replacement(range(m), deg):
                alpha = [0] * m
                for k in combo:
                    alpha[k] += 1
                dp = sum(a for a, isp in zip(alpha, self.is_p) if isp)
                if dp <= po and deg - dp <= xo:
                    monos.append(tuple(alpha))
        monos.sort(key=lambda a: (sum(a), [-v for v in a]))
        self.monomials = np.array(monos, dtype=np.int64).reshape(len(monos), m)
        self.index = {a: i for i, a in enumerate(monos)}
        self.size = len(monos)
        self.degree = self.monomials.sum(axis=1)
        self.factorial = np.array(
            [math.prod(math.factorial(v) for v in a) for a in monos], dtype=float
        )
        pairs_i, pairs_j, pairs_k = [], [], []
        for k, gamma in enumerate(monos):
            for alpha in itertools.product(*(range(g + 1) for g in gamma)):
                beta = tuple(g - a for g, a in zip(gamma, alpha))
                pairs_i.append(self.index[alpha])
                pairs_j.append(self.index[beta])
                pairs_k.append(k)
        self.pair_i = np.array(pairs_i, dtype=np.int64)
        self.pair_j = np.array(pairs_j, dtype=np.int64)
        pk = np.array(pairs_k, dtype=np.int64)
        self.pair_starts = np.flatnonzero(np.r_[True, pk[1:] != pk[:-1]])

    @staticmethod
    def get(n: int, active: tuple[int, ...], xo: int, po: int, tot: int) -> JetSpace:
        xo = min(xo, tot)
        po = min(po, tot)
        if not any(v < n for v in active):
            xo = 0
        if not any(v >= n for v in active):
            po = 0
        return _space(n, tuple(active), xo, po, min(tot, xo + po))

    @property
    def key(self):
        return (self.n, self.active, self.xo, self.po, self.tot)

    def meet(self, other: JetSpace) -> JetSpace:
        if self is other:
            return self
        if self.n != other.n or self.active != other.active:
            raise ValueError("jets over different active variables cannot be combined")
        return JetSpace.get(
            self.n, self.active, min(self.xo, other.xo), min(self.po, other.po),
            min(self.tot, other.tot),
        )

    @functools.lru_cache(maxsize=None)
    def restriction(self, target: JetSpace) -> np.ndarray:
        """Indices into ``self`` of the monomials of a smaller space."""
        return np.array([self.index[tuple(a)] for a in target.monomials], dtype=np.int64)

    def lowered(self, var: int) -> JetSpace:
        if var not in self.position:
            raise ValueError(f"coordinate {var} is not active in this jet")
        if var >= self.n:
            if self.po == 0:
                raise ValueError("jet carries no further momentum derivatives")
            return JetSpace.get(self.n, self.active, self.xo, self.po - 1, self.tot - 1)
        if self.xo == 0:
            raise ValueError("jet carries no further position derivatives")
        return JetSpace.get(self.n, self.active, self.xo - 1, self.po, self.tot - 1)

    @functools.lru_cache(maxsize=None)
    def derivative_map(self, var: int):
        target = self.lowered(var)
        k = self.position[var]
        src, fac = [], []
        for beta in target.monomials:
            alpha = list(beta)
            alpha[k] += 1
            src.append(self.index[tuple(alpha)])
            fac.append(beta[k] + 1.0)
        return target, np.array(src, dtype=np.int64), np.array(fac)

    def variable(self, var: int, value: float) -> np.ndarray:
        c = np.zeros(self.size)
        c[0] = value
        if var in self.position:
            unit = [0] * len(self.active)
            unit[self.position[var]] = 1
            idx = self.index.get(tuple(unit))
            if idx is not None:
                c[idx] = 1.0
        return c


@functools.lru_cache(maxsize=None)
def _space(n, active, xo, po, tot) -> JetSpace:
    return JetSpace(n, active, xo, po, tot)


def _as_array(v):
    return v if isinstance(v, np.ndarray) else np.asarray(v, dtype=float)


class Jet:
    """Array of truncated Taylor expansions sharing one :class:`JetSpace`."""

    __array_priority__ = 100

    def __init__(self, space: JetSpace, coeffs: np.ndarray):
        self.space = space
        self.coeffs = coeffs

    # -- construction --------------------------------------------------------
    @classmethod
    def constant(cls, space: JetSpace, value) -> Jet:
        value = _as_array(value)
        c = np.zeros(value.shape + (space.size,))
        c[..., 0] = value
        return cls(space, c)

    def zeros_like(self) -> Jet:
        return Jet(self.space, np.zeros_like(self.coeffs))

    # -- accessors -----------------------------------------------------------
    @property
    def shape(self) -> tuple[int, ...]:
        return self.coeffs.shape[:-1]

    @property
    def value(self):
        v = self.coeffs[..., 0]
        return float(v) if v.ndim == 0 else v.copy()

    @property
    def base(self):
        return self.value

    def coeff(self, alpha: Sequence[int]):
        """Taylor coefficient of multi-index ``alpha`` over the active variables."""
        return self.coeffs[..., self.space.index[tuple(alpha)]]

    def coefficient_map(self) -> dict[tuple[int, ...], float]:
        if self.shape:
            raise ValueError("coefficient_map is defined for scalar jets only")
        return {tuple(int(v) for v in a): float(c) for a, c in zip(self.space.monomials, self.coeffs)}

    def partial(self, alpha: Sequence[int]):
        """Exact partial derivative ``d^alpha f`` at the base point."""
        i = self.space.index[tuple(alpha)]
        return self.coeffs[..., i] * self.space.factorial[i]

    def partial_global(self, *coords: int):
        """Partial derivative along the listed global phase coordinates."""
        alpha = [0] * len(self.space.active)
        for c in coords:
            alpha[self.space.position[c]] += 1
        return self.partial(alpha)

    def gradient(self) -> np.ndarray:
        """First derivatives along the active variables, last axis = variable."""
        m = len(self.space.active)
        out = np.zeros(self.shape + (m,))
        for k in range(m):
            unit = [0] * m
            unit[k] = 1
            i = self.space.index.get(tuple(unit))
            if i is not None:
                out[..., k] = self.coeffs[..., i]
        return out

    def d(self, var: int) -> Jet:
        """Jet of the partial derivative along global coordinate ``var``."""
        target, src, fac = self.space.derivative_map(var)
        return Jet(target, self.coeffs[..., src] * fac)

    def restrict(self, target: JetSpace) -> Jet:
        if target is self.space:
            return self
        return Jet(target, self.coeffs[..., self.space.restriction(target)])

    def __getitem__(self, idx) -> Jet:
        if not isinstance(idx, tuple):
            idx = (idx,)
        if any(i is Ellipsis for i in idx):
            idx = idx + (slice(None),)
        return Jet(self.space, self.coeffs[idx])

    def __len__(self):
        return self.shape[0]

    def __iter__(self):
        for k in range(len(self)):
            yield self[k]

    @property
    def T(self) -> Jet:
        return self.transpose(*reversed(range(len(self.shape))))

    def transpose(self, *axes: int) -> Jet:
        return Jet(self.space, self.coeffs.transpose(tuple(axes) + (len(self.shape),)))

    def reshape(self, *shape) -> Jet:
        return Jet(self.space, self.coeffs.reshape(tuple(shape) + (self.space.size,)))

    def sum(self, axis=None) -> Jet:
        if axis is None:
            axis = tuple(range(len(self.shape)))
        elif isinstance(axis, int):
            axis = (axis if axis >= 0 else len(self.shape) + axis,)
        return Jet(self.space, self.coeffs.sum(axis=axis))

    def __repr__(self):
        return f"Jet(shape={self.shape}, orders=(x{self.space.xo}, p{self.space.po}, tot{self.space.tot}), value={self.value!r})"

    # -- arithmetic ----------------------------------------------------------
    def _align(self, other: Jet):
        s = self.space.meet(other.space)
        return self.restrict(s), other.restrict(s), s

    def __add__(self, other):
        if isinstance(other, Jet):
            a, b, s = self._align(other)
            return Jet(s, a.coeffs + b.coeffs)
        other = _as_array(other)
        c = np.array(np.broadcast_to(self.coeffs, np.broadcast_shapes(self.coeffs.shape, other.shape + (1,))))
        c[..., 0] += other
        return Jet(self.space, c)

    __radd__ = __add__

    def __neg__(self):
        return Jet(self.space, -self.coeffs)

    def __pos__(self):
        return self

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, Jet):
            a, b, s = self._align(other)
            prod = a.coeffs[..., s.pair_i] * b.coeffs[..., s.pair_j]
            return Jet(s, np.add.reduceat(prod, s.pair_starts, axis=-1))
        other = _as_array(other)
        return Jet(self.space, self.coeffs * other[..., None])

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Jet):
            return self * other.reciprocal()
        other = _as_array(other)
        if np.any(other == 0):
            raise SingularityError("division by zero")
        return Jet(self.space, self.coeffs / other[..., None])

    def __rtruediv__(self, other):
        return self.reciprocal() * other

    def __pow__(self, r):
        if isinstance(r, (int, np.integer)) and r >= 0:
            out = Jet.constant(self.space, np.ones(self.shape))
            base = self
            k = int(r)
            while k:
                if k & 1:
                    out = out * base
                k >>= 1
                if k:
                    base = base * base
            return out
        return self.power(float(r))

    # -- elementary functions via Taylor composition -------------------------
    def _compose(self, taylor: list[np.ndarray]) -> Jet:
        """Return ``f(self)`` given ``taylor[k] = f^(k)(base) / k!``."""
        h = Jet(self.space, self.coeffs.copy())
        h.coeffs[..., 0] = 0.0
        out = Jet.constant(self.space, taylor[-1])
        for c in reversed(taylor[:-1]):
            out = out * h + c
        return out

    def power(self, r: float) -> Jet:
        a0 = _as_array(self.value)
        if float(r).is_integer() and r < 0:
            if np.any(a0 == 0):
                raise SingularityError("negative power of a jet with zero base")
        elif not float(r).is_integer() and np.any(a0 <= 0):
            raise DomainError("non-integer power of a jet with non-positive base")
        taylor, coef = [], 1.0
        for k in range(self.space.tot + 1):
            taylor.append(coef * a0 ** (r - k))
            coef *= (r - k) / (k + 1)
        return self._compose(taylor)

    def reciprocal(self) -> Jet:
        a0 = _as_array(self.value)
        if np.any(a0 == 0):
            raise SingularityError("division by a jet with zero base")
        return self.power(-1.0)

    def sqrt(self) -> Jet:
        if np.any(_as_array(self.value) <= 0):
            raise DomainError("square root of a jet with non-positive base")
        return self.power(0.5)


# -- free functions -------------------------------------------------------------

def sqrt(v):
    """Square root accepting jets or plain numbers; raises DomainError off-domain."""
    if isinstance(v, Jet):
        return v.sqrt()
    a = _as_array(v)
    if np.any(a < 0) or np.any(np.isnan(a)):
        raise DomainError("square root of a negative number")
    out = np.sqrt(a)
    return float(out) if out.ndim == 0 else out


def value(v):
    """Base value of a jet, or the number itself."""
    return v.value if isinstance(v, Jet) else v


def grad(f: Jet, coords: Sequence[int]) -> Jet:
    """Jet of the partial derivatives along ``coords``, stacked as a new last axis."""
    return stack([f.d(c) for c in coords], axis=-1)


def directional(f: Jet, v: Sequence[float]) -> np.ndarray | float:
    """Derivative of ``f`` at the base point along the numeric vector ``v``."""
    out = 0.0
    for k, vk in enumerate(v):
        if vk == 0.0:
            continue
        if k not in f.space.position:
            raise ValueError(f"direction has a component along inactive coordinate {k}")
        out = out + vk * f.d(k).value
    return out


def directional_jet(f: Jet, v: Jet) -> Jet:
    """Jet of ``v^k d_k f`` for a jet-valued vector ``v``.

    Only active coordinates contribute; the caller guarantees ``v`` has no
    component along a frozen one.
    """
    out = None
    for k in f.space.active:
        term = v[k] * f.d(k)
        out = term if out is None else out + term
    return out


def stack(items: Sequence, axis: int = 0) -> Jet:
    """Stack jets (and constants) along a new prefix axis."""
    jets = [it for it in items if isinstance(it, Jet)]
    if not jets:
        raise ValueError("stack needs at least one jet")
    space = functools.reduce(lambda s, j: s.meet(j.space), jets[1:], jets[0].space)
    shape = jets[0].shape
    coeffs = []
    for it in items:
        if isinstance(it, Jet):
            coeffs.append(it.restrict(space).coeffs)
        else:
            coeffs.append(Jet.constant(space, np.broadcast_to(_as_array(it), shape)).coeffs)
    if axis < 0:
        axis += len(shape) + 1
    return Jet(space, np.stack(coeffs, axis=axis))


def _common(items: Sequence) -> list[Jet]:
    found = [it for it in items if isinstance(it, Jet)]
    if not found:
        raise ValueError("at least one operand must be a jet")
    space = functools.reduce(lambda s, j: s.meet(j.space), found[1:], found[0].space)
    return [
        it.restrict(space) if isinstance(it, Jet) else Jet.constant(space, it) for it in items
    ]


def concatenate(items: Sequence, axis: int = -1) -> Jet:
    """Concatenate jets and constant arrays along an existing axis."""
    parts = _common(items)
    if axis < 0:
        axis -= 1
    return Jet(parts[0].space, np.concatenate([p.coeffs for p in parts], axis=axis))


def block(rows: Sequence[Sequence]) -> Jet:
    """Assemble a jet matrix from a nested list of blocks (jets or arrays)."""
    flat = _common([b for row in rows for b in row])
    it = iter(flat)
    built = [concatenate([next(it) for _ in row], axis=-1) for row in rows]
    return concatenate(built, axis=-2)


def einsum(subscripts: str, a, b):
    """Two-operand einsum where either operand may be a jet."""
    ins, out = subscripts.replace(" ", "").split("->")
    sa, sb = ins.split(",")
    if isinstance(a, Jet) and isinstance(b, Jet):
        a, b, s = a._align(b)
        prod = np.einsum(f"{sa}Z,{sb}Z->{out}Z", a.coeffs[..., s.pair_i], b.coeffs[..., s.pair_j])
        return Jet(s, np.add.reduceat(prod, s.pair_starts, axis=-1))
    if isinstance(a, Jet):
        return Jet(a.space, np.einsum(f"{sa}Z,{sb}->{out}Z", a.coeffs, _as_array(b)))
    if isinstance(b, Jet):
        return Jet(b.space, np.einsum(f"{sa},{sb}Z->{out}Z", _as_array(a), b.coeffs))
    return np.einsum(subscripts, a, b)


def inv(a: Jet, base_inverse: np.ndarray | None = None) -> Jet:
    """Inverse of a square jet matrix.

    Only the base value is inverted numerically; higher coefficients follow from
    the terminating series ``(A0 + H)^-1 = sum_k (-A0^-1 H)^k A0^-1`` which is the
    all-orders form of ``d(A^-1) = -A^-1 dA A^-1``.
    """
    a0inv = np.linalg.inv(a.value) if base_inverse is None else base_inverse
    h = Jet(a.space, a.coeffs.copy())
    h.coeffs[..., 0] = 0.0
    m = -einsum("ij,jk->ik", a0inv, h)
    term = Jet.constant(a.space, a0inv)
    out = term
    for _ in range(a.space.tot):
        term = einsum("ij,jk->ik", m, term)
        out = out + term
    return out


def variables(spec: DerivSpec, z: Sequence[float]) -> list:
    """Coordinate list where active variables are jets and the rest are floats."""
    space = spec.space()
    z = [float(v) for v in z]
    return [Jet(space, space.variable(k, v)) if k in space.position else v for k, v in enumerate(z)]


def lift(f: Callable[[list], object], z: Sequence[float], spec: DerivSpec) -> Jet:
    """Truncated Taylor expansion of ``f`` at the phase point ``z``.

    ``f`` receives the ``2n`` phase coordinates (jets for the active ones) and
    must be written with operations jets support.  Partial derivatives are then
    recoverable as ``alpha! * coeff(alpha)`` or directly via :meth:`Jet.partial`.
    """
    out = f(variables(spec, z))
    if not isinstance(out, Jet):
        return Jet.constant(spec.space(), out)
    return out

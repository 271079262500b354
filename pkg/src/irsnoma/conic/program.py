"""Solver-agnostic conic programs.

A program has real scalar variables and matrix blocks (complex Hermitian
or real symmetric).  Every expression is a real affine function

    const + Σ c_i x_i + Σ_b Re Tr(C_b X_b)

and every constraint places a tuple of such expressions in a cone.  The
objective is always maximized.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from numbers import Real

import numpy as np

HERMITIAN = "hermitian"
SYMMETRIC = "symmetric"

# cone kinds and their arity (None = variable)
CONES = {
    "eq": 1,  # e == 0
    "nonneg": 1,  # e >= 0
    "soc": None,  # ‖(e1, …, en)‖ <= e0
    "rsoc": None,  # e0·e1 >= ‖(e2, …)‖², e0, e1 >= 0
    "exp": 3,  # e1·exp(e0/e1) <= e2, e1 > 0
    "pow": 3,  # e0^a · e1^(1−a) >= |e2|
    "psd": 0,  # block membership
}


class Affine:
    __slots__ = ("terms", "blocks", "const")

    def __init__(self, terms=None, blocks=None, const: float = 0.0):
        self.terms: dict[int, float] = dict(terms or {})
        self.blocks: dict[int, np.ndarray] = dict(blocks or {})
        self.const = float(const)

    @classmethod
    def constant(cls, c: float) -> "Affine":
        return cls(const=c)

    @classmethod
    def trace(cls, block: int, coeff) -> "Affine":
        """Re Tr(C X_block)."""
        return cls(blocks={block: np.asarray(coeff, dtype=complex)})

    def copy(self) -> "Affine":
        return Affine(self.terms, {b: c.copy() for b, c in self.blocks.items()}, self.const)

    def _combine(self, other, sign: float) -> "Affine":
        if isinstance(other, Real):
            return Affine(self.terms, self.blocks, self.const + sign * float(other))
        if not isinstance(other, Affine):
            return NotImplemented
        terms = dict(self.terms)
        for i, c in other.terms.items():
            terms[i] = terms.get(i, 0.0) + sign * c
        blocks = dict(self.blocks)
        for b, c in other.blocks.items():
            blocks[b] = blocks[b] + sign * c if b in blocks else sign * c
        return Affine(terms, blocks, self.const + sign * other.const)

    def __add__(self, other):
        return self._combine(other, 1.0)

    __radd__ = __add__

    def __sub__(self, other):
        return self._combine(other, -1.0)

    def __rsub__(self, other):
        return (-self)._combine(other, 1.0)

    def __mul__(self, k):
        if not isinstance(k, Real):
            return NotImplemented
        k = float(k)
        return Affine({i: k * c for i, c in self.terms.items()},
                      {b: k * c for b, c in self.blocks.items()}, k * self.const)

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0

    def __truediv__(self, k):
        return self * (1.0 / float(k))

    def is_constant(self) -> bool:
        return not any(self.terms.values()) and not self.blocks

    def evaluate(self, scalars: np.ndarray, blocks: list[np.ndarray] | None = None) -> float:
        val = self.const + sum(c * scalars[i] for i, c in self.terms.items())
        for b, c in self.blocks.items():
            val += float(np.real(np.sum(c * blocks[b].T)))
        return float(val)

    def same_as(self, other: "Affine") -> bool:
        return (self.const == other.const and self.terms == other.terms
                and self.blocks.keys() == other.blocks.keys()
                and all(np.array_equal(c, other.blocks[b]) for b, c in self.blocks.items()))

    def __repr__(self):
        parts = [f"{self.const:g}"] + [f"{c:+g}*x{i}" for i, c in sorted(self.terms.items())]
        parts += [f"+Tr(C·X{b})" for b in sorted(self.blocks)]
        return "Affine(" + " ".join(parts) + ")"


@dataclass(frozen=True)
class Block:
    name: str
    dim: int
    kind: str = HERMITIAN

    @property
    def n_params(self) -> int:
        n = self.dim
        return n * n if self.kind == HERMITIAN else n * (n + 1) // 2


@dataclass
class Constraint:
    kind: str
    exprs: tuple[Affine, ...] = ()
    block: int | None = None
    param: float | None = None
    label: str = ""

    def same_as(self, other: "Constraint") -> bool:
        return (self.kind == other.kind and self.block == other.block
                and self.param == other.param and self.label == other.label
                and len(self.exprs) == len(other.exprs)
                and all(a.same_as(b) for a, b in zip(self.exprs, other.exprs)))


class ProgramError(ValueError):
    pass


@dataclass
class ConicProgram:
    scalar_names: list[str] = field(default_factory=list)
    blocks: list[Block] = field(default_factory=list)
    objective: Affine = field(default_factory=Affine)
    constraints: list[Constraint] = field(default_factory=list)

    # --- building -----------------------------------------------------
    def scalar(self, name: str) -> Affine:
        self.scalar_names.append(name)
        return Affine({len(self.scalar_names) - 1: 1.0})

    def block(self, name: str, dim: int, kind: str = HERMITIAN, psd: bool = True) -> int:
        self.blocks.append(Block(name, dim, kind))
        idx = len(self.blocks) - 1
        if psd:
            self.constraints.append(Constraint("psd", block=idx, label=f"{name} psd"))
        return idx

    def add(self, kind: str, *exprs, param=None, label: str = "") -> Constraint:
        exprs = tuple(e if isinstance(e, Affine) else Affine.constant(e) for e in exprs)
        c = Constraint(kind, exprs, param=param, label=label)
        self.constraints.append(c)
        return c

    def eq(self, lhs, rhs=0.0, label=""):
        return self.add("eq", _as_affine(lhs) - rhs, label=label)

    def geq(self, lhs, rhs=0.0, label=""):
        return self.add("nonneg", _as_affine(lhs) - rhs, label=label)

    def leq(self, lhs, rhs=0.0, label=""):
        return self.add("nonneg", _as_affine(rhs) - lhs, label=label)

    def soc(self, t, xs, label=""):
        return self.add("soc", t, *xs, label=label)

    def rsoc(self, x, y, zs, label=""):
        return self.add("rsoc", x, y, *zs, label=label)

    def exp_cone(self, x, y, z, label=""):
        return self.add("exp", x, y, z, label=label)

    def pow_cone(self, x, y, z, a: float, label=""):
        return self.add("pow", x, y, z, param=float(a), label=label)

    def maximize(self, expr):
        self.objective = _as_affine(expr)

    # --- inspection ---------------------------------------------------
    @property
    def n_scalars(self) -> int:
        return len(self.scalar_names)

    def count(self, kind: str, label_prefix: str | None = None) -> int:
        return sum(1 for c in self.constraints if c.kind == kind
                   and (label_prefix is None or c.label.startswith(label_prefix)))

    def scalars_named(self, prefix: str) -> list[int]:
        return [i for i, n in enumerate(self.scalar_names) if n.startswith(prefix)]

    def validate(self) -> "ConicProgram":
        ns, nb = self.n_scalars, len(self.blocks)

        def check(e: Affine, where: str):
            if not np.isfinite(e.const):
                raise ProgramError(f"{where}: non-finite constant")
            for i, c in e.terms.items():
                if not 0 <= i < ns:
                    raise ProgramError(f"{where}: unknown scalar x{i}")
                if not np.isfinite(c):
                    raise ProgramError(f"{where}: non-finite coefficient")
            for b, c in e.blocks.items():
                if not 0 <= b < nb:
                    raise ProgramError(f"{where}: unknown block {b}")
                d = self.blocks[b].dim
                if c.shape != (d, d) or not np.all(np.isfinite(c)):
                    raise ProgramError(f"{where}: bad coefficient matrix for block {b}")

        check(self.objective, "objective")
        for n, c in enumerate(self.constraints):
            where = f"constraint {n} ({c.kind} {c.label})"
            if c.kind not in CONES:
                raise ProgramError(f"{where}: unknown cone")
            arity = CONES[c.kind]
            if c.kind == "psd":
                if c.block is None or not 0 <= c.block < nb:
                    raise ProgramError(f"{where}: unknown block")
                continue
            if arity is not None and len(c.exprs) != arity:
                raise ProgramError(f"{where}: expected {arity} expressions")
            if c.kind == "soc" and len(c.exprs) < 1 or c.kind == "rsoc" and len(c.exprs) < 2:
                raise ProgramError(f"{where}: too few expressions")
            if c.kind == "pow" and not (c.param is not None and 0 < c.param < 1):
                raise ProgramError(f"{where}: power-cone exponent must lie in (0, 1)")
            for e in c.exprs:
                check(e, where)
        return self

    def same_as(self, other: "ConicProgram") -> bool:
        return (self.scalar_names == other.scalar_names and self.blocks == other.blocks
                and self.objective.same_as(other.objective)
                and len(self.constraints) == len(other.constraints)
                and all(a.same_as(b) for a, b in zip(self.constraints, other.constraints)))


def _as_affine(e) -> Affine:
    return e if isinstance(e, Affine) else Affine.constant(float(e))

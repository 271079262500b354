"""Reusable cone constructions for the rate constraints."""

from __future__ import annotations

import math

from .program import Affine, ConicProgram

LN2 = math.log(2.0)


def epigraph_log_reciprocal_product(p: ConicProgram, S: Affine, I: Affine, R: Affine,
                                    label: str = "sic") -> list[Affine]:
    """Impose log2(1 + 1/(S·I)) <= R exactly.

    With a = ln S + ln I and ρ = R·ln 2 the constraint reads
    softplus(−a) <= ρ, i.e. e^(−ρ) + e^(−a−ρ) <= 1, which takes four
    exponential cones.  Returns the auxiliary variables (a_S, a_I, p, q).
    """
    n = p.n_scalars
    a_s = p.scalar(f"aux_{label}_lnS_{n}")
    a_i = p.scalar(f"aux_{label}_lnI_{n}")
    e1 = p.scalar(f"aux_{label}_p_{n}")
    e2 = p.scalar(f"aux_{label}_q_{n}")
    rho = R * LN2
    one = Affine.constant(1.0)
    p.exp_cone(a_s, one, S, label=f"{label} lnS")
    p.exp_cone(a_i, one, I, label=f"{label} lnI")
    p.exp_cone(-rho, one, e1, label=f"{label} p")
    p.exp_cone(-rho - a_s - a_i, one, e2, label=f"{label} q")
    p.leq(e1 + e2, 1.0, label=f"{label} sum")
    return [a_s, a_i, e1, e2]


def reciprocal_bound(p: ConicProgram, S: Affine, expr: Affine, label: str = "recip"):
    """Impose 1/S <= expr, i.e. the rotated cone S·expr >= 1."""
    return p.rsoc(S, expr, [Affine.constant(1.0)], label=label)

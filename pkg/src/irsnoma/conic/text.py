"""Plain-text layout of a :class:`ConicProgram`.

::

    conic-program 1 maximize
    scalar <index> <name>
    block <index> <hermitian|symmetric> <dim> <name>
    objective
    <expr>
    constraint <kind> <n_exprs> <block|-> <param|-> <label...>
    <expr>            (n_exprs lines)
    end

An expression line is ``expr <const> | <i>:<coef> ... | <b>@<r>,<c>=<re>,<im> ...``
listing the nonzero entries of each block coefficient matrix.  Floats are
written with ``repr`` so a dump re-parses to an identical program.
"""

from __future__ import annotations

import numpy as np

from .program import Affine, Block, ConicProgram, Constraint

HEADER = "conic-program 1 maximize"


def _fmt(x: float) -> str:
    return repr(float(x))


def _dump_expr(e: Affine) -> str:
    terms = " ".join(f"{i}:{_fmt(c)}" for i, c in e.terms.items())
    ents = []
    for b, c in e.blocks.items():
        ents.append(f"{b}#{c.shape[0]}")
        for r, col in zip(*np.nonzero(c)):
            z = c[r, col]
            ents.append(f"{b}@{r},{col}={_fmt(z.real)},{_fmt(z.imag)}")
    return f"expr {_fmt(e.const)} | {terms} | {' '.join(ents)}"


def _parse_expr(line: str) -> Affine:
    head, terms, ents = line.split("|")
    const = float(head.split()[1])
    t = {}
    for tok in terms.split():
        i, c = tok.split(":")
        t[int(i)] = float(c)
    blocks: dict[int, np.ndarray] = {}
    for tok in ents.split():
        if "#" in tok:
            b, n = tok.split("#")
            blocks[int(b)] = np.zeros((int(n), int(n)), complex)
            continue
        b, rest = tok.split("@")
        pos, val = rest.split("=")
        r, c = pos.split(",")
        re, im = val.split(",")
        blocks[int(b)][int(r), int(c)] = complex(float(re), float(im))
    return Affine(t, blocks, const)


def dumps(prog: ConicProgram) -> str:
    out = [HEADER]
    out += [f"scalar {i} {n}" for i, n in enumerate(prog.scalar_names)]
    out += [f"block {i} {b.kind} {b.dim} {b.name}" for i, b in enumerate(prog.blocks)]
    out += ["objective", _dump_expr(prog.objective)]
    for c in prog.constraints:
        blk = "-" if c.block is None else str(c.block)
        par = "-" if c.param is None else _fmt(c.param)
        out.append(f"constraint {c.kind} {len(c.exprs)} {blk} {par} {c.label}".rstrip())
        out += [_dump_expr(e) for e in c.exprs]
    out.append("end")
    return "\n".join(out) + "\n"


def loads(text: str) -> ConicProgram:
    lines = text.splitlines()
    if not lines or lines[0].strip() != HEADER:
        raise ValueError("not a conic-program dump")
    prog = ConicProgram()
    it = iter(lines[1:])
    for line in it:
        if line.startswith("scalar "):
            prog.scalar_names.append(line.split(" ", 2)[2])
        elif line.startswith("block "):
            _, _, kind, dim, name = line.split(" ", 4)
            prog.blocks.append(Block(name, int(dim), kind))
        elif line == "objective":
            prog.objective = _parse_expr(next(it))
        elif line.startswith("constraint "):
            parts = line.split(" ", 5)
            kind, n, blk, par = parts[1], int(parts[2]), parts[3], parts[4]
            label = parts[5] if len(parts) > 5 else ""
            exprs = tuple(_parse_expr(next(it)) for _ in range(n))
            prog.constraints.append(Constraint(
                kind, exprs, None if blk == "-" else int(blk),
                None if par == "-" else float(par), label))
        elif line == "end":
            break
        elif line.strip():
            raise ValueError(f"unexpected line: {line!r}")
    return prog

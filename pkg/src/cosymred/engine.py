"""Batched evaluation of expressions over arrays of sample points.

An expression compiles once into a flat postfix tape (int opcodes plus a
constant pool).  Two interchangeable executors run the tape:

* `cosymred._speedups.eval_tape` - compiled extension, scalar stack per point;
* `_numpy_eval` - pure-python walk with a stack of numpy vectors.

The compiled executor is used when the extension imported successfully and
the environment variable COSYMRED_PURE is unset; both produce identical
results up to floating-point associativity (they apply the same operation
order, so in practice bit-identical).  Out-of-domain samples yield nan/inf
here; callers that need precise diagnostics use `expr.evaluate`.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

from . import expr as ex

OP_CONST = 0
OP_VAR = 1
OP_ADD = 2
OP_SUB = 3
OP_MUL = 4
OP_DIV = 5
OP_NEG = 6
OP_POW = 7
OP_SIN = 8
OP_COS = 9
OP_EXP = 10
OP_LOG = 11

OPCODES = {
    "const": OP_CONST,
    "var": OP_VAR,
    "add": OP_ADD,
    "sub": OP_SUB,
    "mul": OP_MUL,
    "div": OP_DIV,
    "neg": OP_NEG,
    "pow": OP_POW,
    "sin": OP_SIN,
    "cos": OP_COS,
    "exp": OP_EXP,
    "log": OP_LOG,
}

_CALL_OPS = {"sin": OP_SIN, "cos": OP_COS, "exp": OP_EXP, "log": OP_LOG}


@dataclass(frozen=True)
class Tape:
    """Postfix program: ops[i] with argument args[i] (constant-pool index,
    coordinate index, or integer exponent depending on the op)."""

    ops: np.ndarray
    args: np.ndarray
    consts: np.ndarray
    slots: int
    ncoords: int


@lru_cache(maxsize=8192)
def compile_tape(e: ex.Expr, coords: tuple[str, ...]) -> Tape:
    index = {name: i for i, name in enumerate(coords)}
    ops: list[int] = []
    args: list[int] = []
    consts: list[float] = []

    def emit(node: ex.Expr) -> int:
        """Append the node's program; return its stack requirement."""
        if isinstance(node, ex.Num):
            ops.append(OP_CONST)
            args.append(len(consts))
            consts.append(node.value)
            return 1
        if isinstance(node, ex.Pi):
            ops.append(OP_CONST)
            args.append(len(consts))
            consts.append(math.pi)
            return 1
        if isinstance(node, ex.Sym):
            try:
                ops.append(OP_VAR)
                args.append(index[node.name])
            except KeyError:
                raise ex.EvalDomainError(f"no coordinate '{node.name}' in chart", node) from None
            return 1
        if isinstance(node, (ex.Add, ex.Sub, ex.Mul, ex.Div)):
            la = emit(node.left)
            rb = emit(node.right)
            op = {ex.Add: OP_ADD, ex.Sub: OP_SUB, ex.Mul: OP_MUL, ex.Div: OP_DIV}[type(node)]
            ops.append(op)
            args.append(0)
            return max(la, rb + 1)
        if isinstance(node, ex.Neg):
            need = emit(node.operand)
            ops.append(OP_NEG)
            args.append(0)
            return need
        if isinstance(node, ex.Pow):
            need = emit(node.base)
            ops.append(OP_POW)
            args.append(node.exponent)
            return need
        if isinstance(node, ex.Call):
            need = emit(node.arg)
            ops.append(_CALL_OPS[node.func])
            args.append(0)
            return need
        raise TypeError(f"not an expression node: {node!r}")

    slots = emit(e)
    return Tape(
        ops=np.asarray(ops, dtype=np.int32),
        args=np.asarray(args, dtype=np.int32),
        consts=np.asarray(consts, dtype=np.float64),
        slots=slots,
        ncoords=len(coords),
    )


def _numpy_eval(tape: Tape, pts: np.ndarray) -> np.ndarray:
    npts = pts.shape[0]
    stack: list[np.ndarray] = []
    ops, args, consts = tape.ops, tape.args, tape.consts
    with np.errstate(all="ignore"):
        for i in range(len(ops)):
            op = ops[i]
            if op == OP_CONST:
                stack.append(np.full(npts, consts[args[i]]))
            elif op == OP_VAR:
                stack.append(pts[:, args[i]].copy())
            elif op == OP_ADD:
                b = stack.pop()
                stack[-1] = stack[-1] + b
            elif op == OP_SUB:
                b = stack.pop()
                stack[-1] = stack[-1] - b
            elif op == OP_MUL:
                b = stack.pop()
                stack[-1] = stack[-1] * b
            elif op == OP_DIV:
                b = stack.pop()
                stack[-1] = stack[-1] / b
            elif op == OP_NEG:
                stack[-1] = -stack[-1]
            elif op == OP_POW:
                stack[-1] = np.power(stack[-1], int(args[i]))
            elif op == OP_SIN:
                stack[-1] = np.sin(stack[-1])
            elif op == OP_COS:
                stack[-1] = np.cos(stack[-1])
            elif op == OP_EXP:
                stack[-1] = np.exp(stack[-1])
            else:
                stack[-1] = np.log(stack[-1])
    return stack[0]


try:
    from . import _speedups as _ext
except ImportError:
    _ext = None

_FORCE_PURE = bool(os.environ.get("COSYMRED_PURE"))


def backend_name() -> str:
    return "compiled" if (_ext is not None and not _FORCE_PURE) else "numpy"


def _compiled_eval(tape: Tape, pts: np.ndarray) -> np.ndarray:
    return _ext.eval_tape(tape.ops, tape.args, tape.consts, pts, tape.slots)


def eval_tape(tape: Tape, pts: np.ndarray) -> np.ndarray:
    pts = np.ascontiguousarray(pts, dtype=np.float64)
    if _ext is not None and not _FORCE_PURE:
        return _compiled_eval(tape, pts)
    return _numpy_eval(tape, pts)


def eval_expr(e: ex.Expr, coords: Sequence[str], pts: np.ndarray) -> np.ndarray:
    """Values of e at each row of pts (columns ordered like coords)."""
    return eval_tape(compile_tape(e, tuple(coords)), pts)


def eval_exprs(exprs: Sequence[ex.Expr], coords: Sequence[str], pts: np.ndarray) -> np.ndarray:
    """Column-stacked values, shape (len(pts), len(exprs))."""
    pts = np.ascontiguousarray(pts, dtype=np.float64)
    if len(exprs) == 0:
        return np.zeros((pts.shape[0], 0))
    return np.column_stack([eval_expr(e, coords, pts) for e in exprs])

# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled tape executor.  Semantics mirror engine._numpy_eval exactly;
opcode values must stay in sync with engine.OPCODES (checked by a test
against the OPCODES dict exported below)."""

from libc.math cimport sin, cos, exp, log, pow
from libc.stdlib cimport malloc, free

import numpy as np

cdef enum:
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


def eval_tape(ops, args, consts, pts, slots):
    cdef const int[::1] o = ops
    cdef const int[::1] a = args
    cdef const double[::1] c = consts
    cdef const double[:, ::1] x = np.ascontiguousarray(pts, dtype=np.float64)
    cdef Py_ssize_t npts = x.shape[0]
    cdef Py_ssize_t nops = o.shape[0]
    cdef Py_ssize_t i, k
    cdef int op, arg
    cdef int top
    cdef double rhs

    out_arr = np.empty(npts, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef double* stack = <double*> malloc((slots + 1) * sizeof(double))
    if stack == NULL:
        raise MemoryError()
    try:
        for i in range(npts):
            top = -1
            for k in range(nops):
                op = o[k]
                arg = a[k]
                if op == OP_CONST:
                    top += 1
                    stack[top] = c[arg]
                elif op == OP_VAR:
                    top += 1
                    stack[top] = x[i, arg]
                elif op == OP_ADD:
                    rhs = stack[top]
                    top -= 1
                    stack[top] = stack[top] + rhs
                elif op == OP_SUB:
                    rhs = stack[top]
                    top -= 1
                    stack[top] = stack[top] - rhs
                elif op == OP_MUL:
                    rhs = stack[top]
                    top -= 1
                    stack[top] = stack[top] * rhs
                elif op == OP_DIV:
                    rhs = stack[top]
                    top -= 1
                    stack[top] = stack[top] / rhs  # IEEE inf/nan on zero, like numpy
                elif op == OP_NEG:
                    stack[top] = -stack[top]
                elif op == OP_POW:
                    stack[top] = pow(stack[top], <double> arg)
                elif op == OP_SIN:
                    stack[top] = sin(stack[top])
                elif op == OP_COS:
                    stack[top] = cos(stack[top])
                elif op == OP_EXP:
                    stack[top] = exp(stack[top])
                else:
                    stack[top] = log(stack[top])
            out[i] = stack[0]
    finally:
        free(stack)
    return out_arr

#!/usr/bin/env python3
"""Solve a sparse SDPA file (as written by `cran_sim --dump-sdpa`) with cvxpy.

    python3 tools/sdpa_check.py problem.dat-s [CVXOPT|CLARABEL|SCS]

Prints the solver status and the optimal value of min c^T x subject to
sum_i x_i F_i - F_0 >= 0, for comparison with the first trace row's
surrogate_obj.
"""
import argparse

import cvxpy as cp
import numpy as np


def read_sdpa(path):
    lines = [l for l in open(path) if l.strip() and not l.startswith(('"', '*'))]
    m = int(lines[0].split()[0])
    sizes = [int(x) for x in lines[2].replace(',', ' ').split()]
    c = np.array([float(x) for x in lines[3].replace(',', ' ').split()])
    entries = {}
    for l in lines[4:]:
        mat, blk, i, j, v = l.split()
        entries.setdefault((int(mat), int(blk)), []).append((int(i) - 1, int(j) - 1, float(v)))
    return m, sizes, c, entries


def build(m, sizes, c, entries):
    x = cp.Variable(m)
    cons = []
    for k, n in enumerate(sizes, 1):
        dim = abs(n)
        if n > 0:
            def mat(a):
                M = np.zeros((dim, dim))
                for i, j, v in entries.get((a, k), []):
                    M[i, j] = M[j, i] = v
                return M
            expr = -mat(0)
            for a in range(1, m + 1):
                if (a, k) in entries:
                    expr = expr + x[a - 1] * mat(a)
            cons.append((expr + expr.T) / 2 >> 0)
        else:
            A = np.zeros((dim, m))
            b = np.zeros(dim)
            for i, _, v in entries.get((0, k), []):
                b[i] = v
            for a in range(1, m + 1):
                for i, _, v in entries.get((a, k), []):
                    A[i, a - 1] = v
            cons.append(A @ x - b >= 0)
    return cp.Problem(cp.Minimize(c @ x), cons)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("file")
    ap.add_argument("solver", nargs="?", default="CVXOPT")
    args = ap.parse_args()
    prob = build(*read_sdpa(args.file))
    try:
        prob.solve(solver=args.solver)
        print(prob.status, prob.value)
    except cp.error.SolverError as e:
        print("solver-error", e)


if __name__ == "__main__":
    main()

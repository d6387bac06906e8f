"""Time the numba and numpy kernel sets on a refined mesh of the jump case.

    python benchmarks/bench_kernels.py [--levels 7] [--repeat 5]

Numba timings exclude compilation (one warm-up call per kernel).
"""

import argparse
import time

import numpy as np
import scipy.sparse as sp

from nitsche_fem.assembly import assemble
from nitsche_fem.cases import get_case
from nitsche_fem.elements import reference_cell
from nitsche_fem.kernels import kernel_set
from nitsche_fem.mesh import uniform_sequence
from nitsche_fem.quadrature import gauss_edge


def best_of(fn, repeat):
    fn()
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--levels", type=int, default=7)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--element", default="p1", choices=["p1", "q1"])
    args = ap.parse_args()

    case = get_case("paper-3-3")
    m = uniform_sequence(case.domain, args.element, args.levels)[-1]
    ref = reference_cell(m.kind)
    rule = ref.volume_rule(4)
    phi, dphi = ref.tabulate(rule)
    erule = gauss_edge(4)
    phi_e, dphi_e = ref.tabulate_edges(erule)
    rng = np.random.default_rng(0)
    qshape = (m.nelements, len(rule))
    mu, f = rng.random(qshape), rng.normal(size=qshape)
    coef = rng.normal(size=m.elements.shape)
    fargs = (m.coords[m.facet_element], m.facet_local_edge, phi_e, dphi_e, erule.weights,
             m.facet_normal, m.facet_lengths(), rng.normal(size=(len(m.facet_element), 4)), 10.0)
    A = sp.csr_matrix(assemble(m, case.regularized()).matrix)
    x = rng.normal(size=A.shape[0])
    csr = (A.indptr.astype(np.int64), A.indices.astype(np.int64), A.data, x)

    print(f"{m.kind} mesh: {m.nelements} elements, {m.nnodes} nodes, nnz {A.nnz}")
    print(f"{'kernel':<12}{'numba [ms]':>12}{'numpy [ms]':>12}{'speedup':>10}")
    ks = {name: kernel_set(name) for name in ("numba", "numpy")}
    jobs = {
        "volume": lambda k: k.volume(m.coords, phi, dphi, rule.weights, mu, f),
        "facet": lambda k: k.facet(*fargs),
        "l2": lambda k: k.l2(m.coords, coef, phi, dphi, rule.weights, f),
        "csr_matvec": lambda k: k.csr_matvec(*csr),
    }
    for label, job in jobs.items():
        t = {name: best_of(lambda k=k: job(k), args.repeat) for name, k in ks.items()}
        print(f"{label:<12}{1e3 * t['numba']:>12.3f}{1e3 * t['numpy']:>12.3f}"
              f"{t['numpy'] / t['numba']:>10.1f}")


if __name__ == "__main__":
    main()

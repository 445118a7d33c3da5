"""Time candidate enumeration on the pure-Python and compiled kernels.

    python3 benchmarks/bench_enumerate.py [--circuits 24] [--roles 4] [--repeat 3]

Both backends run on identical seeded problems; the script checks that
they return the same candidates before reporting timings.
"""

from __future__ import annotations

import argparse
import random
import time

from bra.bif import Bif, Circuit, Citation, Connection, Sign, Species, Transmitter, UniformCircuit
from bra.scid import kernel
from bra.scid.engine import enumerate_candidates
from bra.scid.model import FunctionTemplate, Role, RoleEdge

REF = (Citation("bench"),)
SIGNS = [Sign.EXCITATORY, Sign.INHIBITORY, Sign.MODULATORY]


def problem(seed: int, n: int, n_roles: int, density: float):
    rng = random.Random(seed)
    cs = [
        UniformCircuit(f"u{i:02d}", f"roi/u{i}", Species.RAT, rng.choice(SIGNS), Transmitter.GLUTAMATE, 100, REF)
        for i in range(n)
    ]
    top = Circuit("roi", "roi", Species.RAT, frozenset(c.id for c in cs), REF)
    ks = []
    for a in cs:
        for b in cs:
            if a is not b and rng.random() < density:
                ks.append(Connection(f"k{len(ks):04d}", a.id, b.id, Species.RAT, references=REF))
    bif = Bif.build(f"bench{seed}", [*cs, top], ks)
    roles = tuple(Role(f"r{i}", f"role {i}") for i in range(n_roles))
    edges = tuple(
        RoleEdge(f"e{i}", f"r{i}", f"r{i + 1}", None, 2, "s") for i in range(n_roles - 1)
    ) + (RoleEdge("back", f"r{n_roles - 1}", "r0", Sign.INHIBITORY, 1, "s"),)
    return bif, ["roi"], FunctionTemplate("bench", roles, edges, ())


def timed(fn, repeat: int) -> tuple[float, object]:
    best, out = float("inf"), None
    for _ in range(repeat):
        start = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - start)
    return best, out


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--circuits", type=int, default=24)
    ap.add_argument("--roles", type=int, default=4)
    ap.add_argument("--density", type=float, default=0.15)
    ap.add_argument("--seeds", type=int, default=3)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    backends = kernel.available_backends()
    print(f"backends: {', '.join(backends)}; {args.circuits} circuits, {args.roles} roles, density {args.density}")
    if "compiled" not in backends:
        print("compiled kernel not built; only the Python timing is shown")
    print(f"{'seed':>4} {'candidates':>10} " + " ".join(f"{b:>12}" for b in backends) + ("   speedup" if len(backends) > 1 else ""))
    for seed in range(args.seeds):
        bif, roi, template = problem(seed, args.circuits, args.roles, args.density)
        times, results = {}, {}
        for b in backends:
            times[b], cset = timed(lambda: enumerate_candidates(bif, roi, template, backend=b), args.repeat)
            results[b] = [(tuple(sorted(c.assignment.items())), c.realized_edges) for c in cset.candidates]
        if len(backends) > 1 and results["python"] != results["compiled"]:
            raise SystemExit(f"seed {seed}: backends disagree")
        row = f"{seed:>4} {len(results['python']):>10} " + " ".join(f"{times[b] * 1e3:>10.1f}ms" for b in backends)
        if len(backends) > 1:
            row += f"   {times['python'] / times['compiled']:>6.1f}x"
        print(row)


if __name__ == "__main__":
    main()

"""Command-line entry point: ``qdistsim <subcommand> ...``."""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import warnings
from pathlib import Path
from typing import Sequence


from .circuit import VIRTUAL_NODE, Circuit, validate
from .errors import CapacityWarning, CircuitValidationError, QdsError
from .metrics import AccountingProfile, count_distributed, count_monolithic, qpe_sweep, sweep_csv
from .scheduler import Allocation, Program, build_parallel_program
from .topology import Topology

log = logging.getLogger("qdistsim")


class UsageError(Exception):
    """Bad flags or input files; maps to exit status 2."""


def _topology(args) -> Topology | None:
    if getattr(args, "topology", None):
        return Topology.load(args.topology)
    if getattr(args, "sizes", None):
        try:
            return Topology.from_sizes(int(s) for s in args.sizes.split(","))
        except ValueError as e:
            raise UsageError(f"bad --sizes {args.sizes!r}: {e}") from None
    return None


def _profile(args) -> AccountingProfile:
    return AccountingProfile.load(args.profile) if getattr(args, "profile", None) else AccountingProfile()


def _emit(args, payload: dict, human: Sequence[str]) -> None:
    if args.json:
        print(json.dumps(payload, sort_keys=True))
    else:
        for line in human:
            print(line)


def _write(path: str | None, text: str) -> None:
    if path:
        Path(path).write_text(text)


def _n_range(text: str) -> range:
    if ".." in text:
        lo, hi = text.split("..", 1)
        return range(int(lo), int(hi) + 1)
    return range(int(text), int(text) + 1)


def cmd_run(args) -> int:
    from .engine import run_parallel

    try:
        data = json.loads(Path(args.circuit).read_text())
        circuit = Circuit.from_dict(data)
    except (KeyError, TypeError, ValueError) as e:
        if isinstance(e, CircuitValidationError):
            raise
        raise UsageError(f"malformed circuit JSON: {e}") from None
    topology = _topology(args)
    if topology is None:
        raise UsageError("run needs --topology or --sizes")
    virtual = all(q.node == VIRTUAL_NODE for q in circuit.qubits)
    validate(circuit, None if virtual else topology).raise_if_invalid()
    prog = Program(circuit, args.shots)
    if virtual:
        pp = build_parallel_program(topology, [prog])
    else:
        from .scheduler import ParallelProgram, Schedule

        alloc = Allocation.identity(prog.qubit_order)
        sets = tuple(frozenset({0}) if n in alloc.nodes else frozenset() for n in topology.node_ids)
        pp = ParallelProgram((prog,), Schedule((sets,), topology.node_ids), None, (alloc,))
    result = run_parallel(pp, topology, args.seed, strict=args.strict, latency=args.latency)
    dc = result.distributed[0]
    report = count_distributed(dc, _profile(args))
    _write(args.output, result.to_json() + "\n")
    _write(args.trace, "".join(json.dumps(r, sort_keys=True) + "\n" for t in result.traces for r in t))
    _write(args.report, report.to_json() + "\n")
    out = result.outcomes[0]
    _emit(args, {"counts": out.counts, "report": report.to_dict(), "blocks": len(dc.blocks)}, [
        f"shots {out.shots}, cat blocks {len(dc.blocks)}, total ops {report.total_ops}",
        *(f"{k} {v}" for k, v in sorted(out.counts.items(), key=lambda kv: (-kv[1], kv[0]))),
    ])
    return 0


def cmd_qpe(args) -> int:
    from .algorithms.qpe import phase_unitary, qpe_circuit, qpe_parallel_program, qpe_topology
    from .engine import run_parallel

    topology = _topology(args) or qpe_topology(args.n)
    pp = qpe_parallel_program(args.n, phase_unitary(args.phase), args.shots, topology)
    result = run_parallel(pp, topology, args.seed, strict=args.strict)
    mono = count_monolithic(qpe_circuit(args.n, phase_unitary(args.phase)), _profile(args))
    dist = count_distributed(result.distributed[0], _profile(args))
    counts = result.outcomes[0].counts
    modal = max(sorted(counts), key=lambda s: counts[s])
    _write(args.trace, "".join(json.dumps(r, sort_keys=True) + "\n" for t in result.traces for r in t))
    _write(args.output, result.to_json() + "\n")
    _emit(args, {
        "estimate": result.value, "modal": modal, "modal_frequency": counts[modal] / args.shots,
        "monolithic_ops": mono.total_ops, "distributed_ops": dist.total_ops, "report": dist.to_dict(),
    }, [
        f"estimated phase {result.value}",
        f"modal outcome {modal} ({counts[modal]}/{args.shots})",
        f"operations: monolithic {mono.total_ops}, distributed {dist.total_ops} "
        f"({dist.epr_pairs} EPR pairs, {dist.classical_messages} classical messages)",
    ])
    return 0


def cmd_vqe(args) -> int:
    from .algorithms.vqe import load_terms, vqe_programs
    from .engine import run_parallel

    if not args.exact and args.seed is None:
        raise UsageError("--seed is required unless --exact is given")
    terms = load_terms(args.terms)
    ansatz = Circuit.load(args.ansatz)
    topology = _topology(args) or Topology.from_sizes([10, 10, 10])
    pp = vqe_programs(terms, ansatz, topology, shots=args.shots, exact=args.exact)
    result = run_parallel(pp, topology, 0 if args.seed is None else args.seed, trace_shots=0)
    _emit(args, {"energy": result.value, "rounds": pp.schedule.one_based(),
                 "per_term": [o.expectation for o in result.outcomes]},
          [f"energy {result.value:.9g}", f"{len(terms)} terms in {pp.schedule.r} round(s)"])
    return 0


def cmd_plae(args) -> int:
    from .algorithms.plae import PlaeConfig, plae_programs, plae_queries, ry_oracle
    from .engine import run_parallel

    cfg = PlaeConfig(args.beta, args.K, args.shots)
    oracle, grover = ry_oracle(args.amplitude)
    topology = _topology(args) or Topology.from_sizes([args.K * args.copies])
    pp = plae_programs(oracle, grover, cfg, topology, copies=args.copies, resolution=args.resolution)
    result = run_parallel(pp, topology, args.seed, trace_shots=0)
    _emit(args, {"estimate": result.value, "queries": plae_queries(cfg),
                 "hits": [o.counts.get("1", 0) for o in result.outcomes]},
          [f"estimated amplitude {result.value:.9g}", f"queries {plae_queries(cfg)}"])
    return 0


def cmd_kmeans(args) -> int:
    from .algorithms.kmeans import kmeans, load_vectors_csv

    if not args.exact and args.seed is None:
        raise UsageError("--seed is required unless --exact is given")
    points = load_vectors_csv(args.csv)
    topology = _topology(args) or Topology.from_sizes([10, 10, 10])
    assign, cents = kmeans(points, args.k, topology, iterations=args.iterations, shots=args.shots,
                           exact=args.exact, seed=0 if args.seed is None else args.seed)
    _emit(args, {"assignments": assign, "centroids": cents.tolist()},
          [f"point {i}: cluster {a}" for i, a in enumerate(assign)])
    return 0


def cmd_sweep_qpe(args) -> int:
    rows = qpe_sweep(_n_range(args.n), _profile(args))
    text = sweep_csv(rows)
    _write(args.output, text)
    if args.json:
        for n, mono, dist in rows:
            print(json.dumps({"n": n, "monolithic": mono, "distributed": dist}))
    else:
        sys.stdout.write(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qdistsim", description="Distributed quantum program simulator.")
    p.add_argument("--json", action="store_true", help="machine-readable JSON output")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, seed_required=True):
        sp.add_argument("--json", action="store_true", default=argparse.SUPPRESS)
        sp.add_argument("--topology", help="topology JSON file")
        sp.add_argument("--sizes", help="comma-separated QPU sizes, e.g. 10,10")
        sp.add_argument("--seed", type=int, required=seed_required)
        sp.add_argument("--shots", type=int, default=1000)

    sp = sub.add_parser("run", help="run a circuit JSON on a topology")
    common(sp)
    sp.add_argument("--circuit", required=True)
    sp.add_argument("--strict", action="store_true", help="fail instead of using overflow ancillas")
    sp.add_argument("--latency", type=int, default=1)
    sp.add_argument("--output")
    sp.add_argument("--trace")
    sp.add_argument("--report")
    sp.add_argument("--profile", help="accounting profile JSON")
    sp.set_defaults(func=cmd_run)

    sp = sub.add_parser("qpe", help="distributed phase estimation demo")
    common(sp)
    sp.add_argument("--n", type=int, default=3)
    sp.add_argument("--phase", type=float, required=True)
    sp.add_argument("--strict", action="store_true")
    sp.add_argument("--output")
    sp.add_argument("--trace")
    sp.add_argument("--profile")
    sp.set_defaults(func=cmd_qpe)

    sp = sub.add_parser("vqe", help="energy of a Pauli-sum Hamiltonian")
    common(sp, seed_required=False)
    sp.add_argument("--terms", required=True)
    sp.add_argument("--ansatz", required=True)
    sp.add_argument("--exact", action="store_true")
    sp.set_defaults(func=cmd_vqe)

    sp = sub.add_parser("plae", help="power-law amplitude estimation for an RY oracle")
    common(sp)
    sp.add_argument("--beta", type=float, required=True)
    sp.add_argument("--K", type=int, required=True)
    sp.add_argument("--amplitude", type=float, required=True, help="true success probability of the RY oracle")
    sp.add_argument("--copies", type=int, default=1)
    sp.add_argument("--resolution", type=int, default=10_000)
    sp.set_defaults(func=cmd_plae)

    sp = sub.add_parser("kmeans", help="swap-test k-means on CSV feature vectors")
    common(sp, seed_required=False)
    sp.add_argument("--csv", required=True)
    sp.add_argument("--k", type=int, required=True)
    sp.add_argument("--iterations", type=int, default=5)
    sp.add_argument("--exact", action="store_true")
    sp.set_defaults(func=cmd_kmeans)

    sp = sub.add_parser("sweep-qpe", help="operation counts of QPE, monolithic vs distributed, as CSV")
    sp.add_argument("--json", action="store_true", default=argparse.SUPPRESS)
    sp.add_argument("--n", default="1..11", help="n or lo..hi")
    sp.add_argument("--profile")
    sp.add_argument("--output")
    sp.set_defaults(func=cmd_sweep_qpe)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    logging.basicConfig(level=os.environ.get("QDISTSIM_LOG_LEVEL", "WARNING").upper(), stream=sys.stderr)
    args = build_parser().parse_args(argv)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("default", CapacityWarning)
            return args.func(args)
    except CircuitValidationError as e:
        print("invalid circuit:", file=sys.stderr)
        for v in e.violations:
            print(f"  {v}", file=sys.stderr)
        return 2
    except (UsageError, QdsError, ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except Exception as e:  # pragma: no cover - last resort
        log.exception("internal error")
        print(f"internal error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

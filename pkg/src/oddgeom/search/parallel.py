"""Partitioned geometry search: split the tree at a fixed line depth and run
the subtrees one after another or in worker processes.

Workers share only the remaining node allowance and the number of solutions
found so far. Subtree results are merged in frontier order, so a complete
run returns the same list as the single-threaded search.
"""

from __future__ import annotations

import logging
import multiprocessing as mp
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from ..geometry import LineSystem, OddGeometryParams
from .budget import Meter, SearchBudget, SearchStats, StopSearch
from .geometry_search import run_search

log = logging.getLogger(__name__)

_shared = {}


def write_checkpoint(path: str | Path, params: OddGeometryParams, frontier: list[list[int]]) -> None:
    allowed = ",".join(str(a) for a in sorted(params.allowed)) or "-"
    out = ["# pending subtrees of a partitioned geometry search",
           f"F {params.v} {params.b} {params.r} {params.d} {allowed}"]
    out += [" ".join(f"{m:x}" for m in node) for node in frontier]
    Path(path).write_text("\n".join(out) + "\n")


def read_checkpoint(path: str | Path) -> tuple[OddGeometryParams, list[list[int]]]:
    params = None
    frontier = []
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if params is None:
            tok = line.split()
            if len(tok) != 6 or tok[0] != "F":
                raise ValueError(f"line {lineno}: expected 'F v b r d allowed'")
            allowed = frozenset() if tok[5] == "-" else frozenset(int(a) for a in tok[5].split(","))
            params = OddGeometryParams(*(int(x) for x in tok[1:5]), allowed)
            continue
        try:
            frontier.append([int(x, 16) for x in line.split()])
        except ValueError:
            raise ValueError(f"line {lineno}: bad hex mask") from None
    if params is None:
        raise ValueError("checkpoint has no parameter line")
    return params, frontier


def _init_worker(nodes, found):
    _shared["nodes"] = nodes
    _shared["found"] = found


def _run_subtree(params, node, symmetry, budget, start, emit_limit):
    meter = Meter(budget, shared=_shared["nodes"], start=start)
    found_counter = _shared["found"]
    found = []

    def sink(ls):
        found.append(ls.lines)
        with found_counter.get_lock():
            found_counter.value += 1
            total = found_counter.value
        if emit_limit is not None and total >= emit_limit:
            raise StopSearch

    if emit_limit is not None and found_counter.value >= emit_limit:
        stats = SearchStats(stopped_early=True)
        return found, stats
    stats = run_search(params, meter, sink, symmetry=symmetry, seed=node)
    meter.give_back()
    return found, stats


def partitioned_geometries(params: OddGeometryParams, budget: SearchBudget, emit_limit: int | None,
                           *, symmetry_breaking: bool = True, split_depth: int = 2,
                           checkpoint: str | None = None, resume: str | None = None
                           ) -> tuple[list[LineSystem], SearchStats]:
    start = time.monotonic()
    meter = Meter(budget, start=start)
    total = SearchStats()
    if resume:
        saved, frontier = read_checkpoint(resume)
        if saved != params:
            raise ValueError(f"checkpoint parameters {saved} differ from {params}")
    else:
        frontier = []
        # frontier collection runs in-process under the main budget
        found_early: list[LineSystem] = []
        total = run_search(params, meter, found_early.append, symmetry=symmetry_breaking,
                           stop_depth=split_depth, on_frontier=frontier.append)
        if found_early:
            # b <= split_depth: the whole search fit in the frontier phase
            total.seconds = meter.elapsed()
            return found_early[:emit_limit] if emit_limit else found_early, total
        if total.truncated:
            log.warning("budget ran out while building the frontier; no checkpoint written")
            total.seconds = meter.elapsed()
            return [], total

    results: list[tuple[list, SearchStats]] = []
    if budget.thread_count == 1:
        found: list[LineSystem] = []

        def sink(ls):
            found.append(ls)
            if emit_limit is not None and len(found) >= emit_limit:
                raise StopSearch

        for node in frontier:
            if meter.truncated or (emit_limit is not None and len(found) >= emit_limit):
                results.append(([], None))
                continue
            before = len(found)
            stats = run_search(params, meter, sink, symmetry=symmetry_breaking, seed=node)
            results.append(([ls.lines for ls in found[before:]], stats))
    else:
        nodes_left = mp.Value("q", max(0, budget.max_nodes - meter.nodes))
        found_count = mp.Value("q", 0)
        ctx = mp.get_context("fork") if "fork" in mp.get_all_start_methods() else None
        with ProcessPoolExecutor(max_workers=budget.thread_count, mp_context=ctx,
                                 initializer=_init_worker, initargs=(nodes_left, found_count)) as pool:
            futures = [pool.submit(_run_subtree, params, node, symmetry_breaking, budget, start, emit_limit)
                       for node in frontier]
            results = [f.result() for f in futures]

    systems: list[LineSystem] = []
    pending = []
    for node, (lines_list, stats) in zip(frontier, results):
        if stats is None:
            pending.append(node)
            total.truncated = True
            continue
        total = total + stats
        if not stats.complete:
            pending.append(node)
        systems.extend(LineSystem(params.v, lines) for lines in lines_list)
    if emit_limit is not None and len(systems) > emit_limit:
        systems = systems[:emit_limit]
    if emit_limit is not None and len(systems) >= emit_limit and pending:
        total.stopped_early = True
    total.solutions_found = len(systems)
    if checkpoint:
        write_checkpoint(checkpoint, params, pending)
    total.seconds = time.monotonic() - start
    return systems, total

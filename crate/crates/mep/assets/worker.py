"""Sandbox worker: runs a candidate select_parents against population snapshots.

Usage: python3 worker.py CANDIDATE_FILE

Reads one JSON request per line on stdin and answers each with one JSON line
holding parent1_index and parent2_index, or an error message.
"""

import json
import random
import sys
import traceback
import types


class RandomNumberGenerator:
    def __init__(self, seed=0):
        self._rng = random.Random(seed)

    def rand(self):
        return self._rng.random()

    def randint(self, high):
        return self._rng.randrange(high)

    def __call__(self):
        return self._rng.getrandbits(32)


class Route:
    def __init__(self, visits):
        self._visits = list(visits)

    def visits(self):
        return list(self._visits)

    def __len__(self):
        return len(self._visits)

    def __iter__(self):
        return iter(self._visits)


class Solution:
    def __init__(self, routes, cost, feasible):
        self._routes = [Route(r) for r in routes]
        self._cost = cost
        self._feasible = feasible

    def routes(self):
        return list(self._routes)

    def num_routes(self):
        return len(self._routes)

    def num_clients(self):
        return sum(len(r) for r in self._routes)

    def is_feasible(self):
        return self._feasible


class CostEvaluator:
    """Costs come precomputed from the solver."""

    def penalised_cost(self, solution):
        return solution._cost

    def cost(self, solution):
        return solution._cost if solution._feasible else sys.maxsize


def install_shim():
    pyvrp = types.ModuleType("pyvrp")
    inner = types.ModuleType("pyvrp._pyvrp")
    for cls in (RandomNumberGenerator, Route, Solution, CostEvaluator):
        setattr(inner, cls.__name__, cls)
        setattr(pyvrp, cls.__name__, cls)
    pyvrp._pyvrp = inner
    sys.modules["pyvrp"] = pyvrp
    sys.modules["pyvrp._pyvrp"] = inner


def reply(obj):
    sys.stdout.write(json.dumps(obj) + "\n")
    sys.stdout.flush()


def main():
    install_shim()
    with open(sys.argv[1]) as fh:
        source = fh.read()
    namespace = {"__name__": "candidate"}
    exec(compile(source, "candidate.py", "exec"), namespace)
    select = namespace.get("select_parents")
    if select is None:
        sys.stderr.write("candidate defines no select_parents\n")
        return 2

    evaluator = CostEvaluator()
    for line in sys.stdin:
        if not line.strip():
            continue
        req = json.loads(line)
        population = [
            Solution(routes, cost, feasible)
            for routes, cost, feasible in zip(req["population"], req["costs"], req["feasible"])
        ]
        rng = RandomNumberGenerator(req["seed"])
        try:
            first, second = select(list(population), rng, evaluator, req["k"])
        except Exception:
            reply({"error": traceback.format_exc(limit=3)})
            continue
        index = {id(s): i for i, s in enumerate(population)}
        if id(first) not in index or id(second) not in index:
            reply({"error": "select_parents returned objects that are not population members"})
            continue
        reply({"parent1_index": index[id(first)], "parent2_index": index[id(second)]})
    return 0


if __name__ == "__main__":
    sys.exit(main())

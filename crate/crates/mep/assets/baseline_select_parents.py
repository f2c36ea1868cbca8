from pyvrp._pyvrp import CostEvaluator, RandomNumberGenerator, Solution


def select_parents(
    population: list[Solution],
    rng: RandomNumberGenerator,
    cost_evaluator: CostEvaluator,
    k: int = 2
) -> tuple[Solution, Solution]:
    """
    Binary tournament on penalised cost; the second parent must differ
    from the first when the population allows it.
    """
    def tournament():
        a = population[rng.randint(len(population))]
        b = population[rng.randint(len(population))]
        if cost_evaluator.penalised_cost(b) < cost_evaluator.penalised_cost(a):
            return b
        return a

    parent1 = tournament()
    parent2 = tournament()
    tries = 0
    while parent2 is parent1 and len(population) > 1 and tries < 10:
        parent2 = tournament()
        tries += 1
    return parent1, parent2

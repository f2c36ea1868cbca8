//! Population bookkeeping: cached penalised costs, pairwise broken-pairs
//! distances and the rank-based biased fitness.

use crate::cost::CostEvaluator;
use crate::solution::{broken_pairs, Solution};

/// Number of closest members averaged for the diversity contribution.
pub const NUM_CLOSE: usize = 5;

#[derive(Debug, Clone)]
pub struct Member {
    pub solution: Solution,
    /// Penalised cost under the evaluator current at insertion (or at the
    /// last penalty update).
    pub cost: i64,
    pub feasible: bool,
    /// Lower is better.
    pub fitness: f64,
}

#[derive(Debug, Clone)]
pub struct Population {
    members: Vec<Member>,
    /// Symmetric broken-pairs distances, `dist[i][j]`.
    dist: Vec<Vec<f64>>,
    elite_fraction: f64,
}

impl Population {
    pub fn new(elite_fraction: f64) -> Self {
        Population {
            members: Vec::new(),
            dist: Vec::new(),
            elite_fraction,
        }
    }

    /// Builds a population from solutions, computing costs and fitness.
    pub fn from_solutions(solutions: Vec<Solution>, evaluator: &CostEvaluator, elite_fraction: f64) -> Self {
        let mut pop = Population::new(elite_fraction);
        for s in solutions {
            pop.push(s, evaluator);
        }
        pop.update_fitness();
        pop
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn members(&self) -> &[Member] {
        &self.members
    }

    pub fn member(&self, i: usize) -> &Member {
        &self.members[i]
    }

    pub fn solution(&self, i: usize) -> &Solution {
        &self.members[i].solution
    }

    pub fn solutions(&self) -> impl Iterator<Item = &Solution> {
        self.members.iter().map(|m| &m.solution)
    }

    pub fn elite_fraction(&self) -> f64 {
        self.elite_fraction
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        self.dist[i][j]
    }

    /// Adds a solution and refreshes every member's fitness.
    pub fn add(&mut self, solution: Solution, evaluator: &CostEvaluator) {
        self.push(solution, evaluator);
        self.update_fitness();
    }

    fn push(&mut self, solution: Solution, evaluator: &CostEvaluator) {
        let row: Vec<f64> = self
            .members
            .iter()
            .map(|m| symmetric_broken_pairs(&m.solution, &solution))
            .collect();
        for (r, &d) in self.dist.iter_mut().zip(&row) {
            r.push(d);
        }
        let mut row = row;
        row.push(0.0);
        self.dist.push(row);
        self.members.push(Member {
            cost: evaluator.penalised_cost(&solution),
            feasible: solution.is_feasible(),
            solution,
            fitness: 0.0,
        });
    }

    /// Removes member `i` without recomputing fitness.
    pub fn remove(&mut self, i: usize) -> Member {
        self.dist.remove(i);
        for r in &mut self.dist {
            r.remove(i);
        }
        self.members.remove(i)
    }

    /// Re-prices every member, e.g. after a penalty update.
    pub fn reevaluate(&mut self, evaluator: &CostEvaluator) {
        for m in &mut self.members {
            m.cost = evaluator.penalised_cost(&m.solution);
        }
        self.update_fitness();
    }

    /// Mean distance to the `NUM_CLOSE` nearest other members.
    pub fn avg_closest(&self, i: usize) -> f64 {
        let mut ds: Vec<f64> = (0..self.len()).filter(|&j| j != i).map(|j| self.dist[i][j]).collect();
        if ds.is_empty() {
            return 0.0;
        }
        ds.sort_by(f64::total_cmp);
        let k = ds.len().min(NUM_CLOSE);
        ds[..k].iter().sum::<f64>() / k as f64
    }

    /// Biased fitness: cost rank plus `(1 - elite_fraction)` times the
    /// diversity rank, both normalised to `[0, 1]` with ties averaged.
    pub fn update_fitness(&mut self) {
        let n = self.len();
        if n == 0 {
            return;
        }
        let costs: Vec<f64> = self.members.iter().map(|m| m.cost as f64).collect();
        // Larger distance is better, so rank the negated value.
        let div: Vec<f64> = (0..n).map(|i| -self.avg_closest(i)).collect();
        let cost_rank = fractional_ranks(&costs);
        let div_rank = fractional_ranks(&div);
        let denom = if n > 1 { (n - 1) as f64 } else { 1.0 };
        for (i, m) in self.members.iter_mut().enumerate() {
            m.fitness = cost_rank[i] / denom + (1.0 - self.elite_fraction) * div_rank[i] / denom;
        }
    }

    /// Index of the cheapest feasible member (first on ties).
    pub fn best_feasible(&self) -> Option<usize> {
        let mut best: Option<usize> = None;
        for (i, m) in self.members.iter().enumerate() {
            if m.feasible && best.is_none_or(|b| m.cost < self.members[b].cost) {
                best = Some(i);
            }
        }
        best
    }

    /// Index of the cheapest member by penalised cost (first on ties).
    pub fn best(&self) -> Option<usize> {
        let mut best: Option<usize> = None;
        for (i, m) in self.members.iter().enumerate() {
            if best.is_none_or(|b| m.cost < self.members[b].cost) {
                best = Some(i);
            }
        }
        best
    }

    /// True when some other member has exactly the same adjacency structure.
    pub fn has_duplicate(&self, i: usize) -> bool {
        (0..self.len()).any(|j| j != i && self.dist[i][j] == 0.0)
    }
}

fn symmetric_broken_pairs(a: &Solution, b: &Solution) -> f64 {
    0.5 * (broken_pairs(a, b) + broken_pairs(b, a))
}

/// 0-based ranks of `values` ascending, ties receiving their mean rank.
pub fn fractional_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let mean = (i + j) as f64 / 2.0;
        for &k in &order[i..=j] {
            ranks[k] = mean;
        }
        i = j + 1;
    }
    ranks
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranks_average_ties() {
        assert_eq!(fractional_ranks(&[3.0, 1.0, 3.0, 2.0]), vec![2.5, 0.0, 2.5, 1.0]);
        assert_eq!(fractional_ranks(&[5.0, 5.0, 5.0]), vec![1.0, 1.0, 1.0]);
        assert!(fractional_ranks(&[]).is_empty());
    }
}

//! Cycle-mean and cycle-ratio analysis on the block graph of an SFT.
//!
//! Integrals of locally constant functions against invariant measures have
//! their extremes on periodic orbits, so cycle means (Karp) and cycle ratios
//! (Dinkelbach iteration over Karp) give exact descriptions of the integral
//! ranges used for domains, feasibility tests, and condition checks.

use crate::error::{Error, Result};
use crate::symbolic::{enumerate_words, LocallyConstantPotential, Sft, Word, DEFAULT_MAX_WORDS};

const MEAN_TOL: f64 = 1e-11;

/// De Bruijn-style graph whose nodes are admissible `(K-1)`-words and whose
/// edges are admissible `K`-words; cycles correspond to periodic orbits and
/// edge weights to depth-`K` potential values.
#[derive(Debug, Clone)]
pub struct BlockGraph {
    pub nodes: Vec<Word>,
    /// (from node, to node, K-word spelled by the edge)
    pub edges: Vec<(usize, usize, Vec<u8>)>,
    out: Vec<Vec<usize>>,
}

impl BlockGraph {
    /// Block graph at depth `K >= 2`.
    pub fn new(sft: &Sft, depth: usize) -> Result<Self> {
        assert!(depth >= 2, "block graph needs depth >= 2");
        let nodes = enumerate_words(sft, depth - 1, DEFAULT_MAX_WORDS)?;
        let index: std::collections::BTreeMap<&[u8], usize> = nodes
            .iter()
            .enumerate()
            .map(|(i, w)| (w.symbols(), i))
            .collect();
        let mut edges = Vec::new();
        let mut out = vec![Vec::new(); nodes.len()];
        for (u, w) in nodes.iter().enumerate() {
            let last = *w.symbols().last().unwrap();
            for &a in sft.successors(last) {
                let mut kw = w.symbols().to_vec();
                kw.push(a);
                let v = index[&kw[1..]];
                out[u].push(edges.len());
                edges.push((u, v, kw));
            }
        }
        Ok(Self { nodes, edges, out })
    }

    /// Depth used to weight edges (length of the edge words).
    pub fn depth(&self) -> usize {
        self.edges[0].2.len()
    }

    /// Edge weights from a potential lifted to this graph's depth.
    pub fn weights(&self, sft: &Sft, pot: &LocallyConstantPotential) -> Result<Vec<f64>> {
        let lifted = pot.lift(sft, self.depth())?;
        Ok(self.edges.iter().map(|(_, _, w)| lifted.value(w)).collect())
    }

    fn n(&self) -> usize {
        self.nodes.len()
    }

    /// Karp's minimum cycle mean restricted to `active` edges; `None` when the
    /// active subgraph has no cycle.
    pub fn min_cycle_mean(&self, weights: &[f64], active: Option<&[bool]>) -> Option<f64> {
        let n = self.n();
        let rounds = n + 1;
        let mut dist = vec![vec![f64::INFINITY; n]; rounds];
        for v in 0..n {
            dist[0][v] = 0.0;
        }
        for k in 1..rounds {
            for (e, &(u, v, _)) in self.edges.iter().enumerate() {
                if active.map_or(true, |a| a[e]) && dist[k - 1][u].is_finite() {
                    let cand = dist[k - 1][u] + weights[e];
                    if cand < dist[k][v] {
                        dist[k][v] = cand;
                    }
                }
            }
        }
        let mut best: Option<f64> = None;
        for v in 0..n {
            if !dist[n][v].is_finite() {
                continue;
            }
            let mut worst = f64::NEG_INFINITY;
            for k in 0..n {
                if dist[k][v].is_finite() {
                    worst = worst.max((dist[n][v] - dist[k][v]) / (n - k) as f64);
                }
            }
            if worst.is_finite() {
                best = Some(best.map_or(worst, |b: f64| b.min(worst)));
            }
        }
        best
    }

    pub fn max_cycle_mean(&self, weights: &[f64], active: Option<&[bool]>) -> Option<f64> {
        let negated: Vec<f64> = weights.iter().map(|w| -w).collect();
        self.min_cycle_mean(&negated, active).map(|m| -m)
    }

    /// Edges lying on cycles whose mean equals `target` (within tolerance),
    /// assuming `target` is the minimum cycle mean of the active subgraph.
    /// Uses Bellman-Ford potentials on reduced weights.
    pub fn critical_edges(&self, weights: &[f64], target: f64, active: Option<&[bool]>) -> Vec<bool> {
        let n = self.n();
        let mut pot = vec![0.0f64; n];
        // Bellman-Ford relaxation with reduced weights w - target; no negative
        // cycles by assumption, so n rounds suffice.
        for _ in 0..n {
            for (e, &(u, v, _)) in self.edges.iter().enumerate() {
                if active.map_or(true, |a| a[e]) {
                    let cand = pot[u] + weights[e] - target;
                    if cand < pot[v] - 1e-15 {
                        pot[v] = cand;
                    }
                }
            }
        }
        let tight: Vec<bool> = self
            .edges
            .iter()
            .enumerate()
            .map(|(e, &(u, v, _))| {
                active.map_or(true, |a| a[e])
                    && (pot[u] + weights[e] - target - pot[v]).abs() <= 1e-9
            })
            .collect();
        // Keep only tight edges inside strongly connected components of the
        // tight subgraph: exactly the edges on zero-reduced-weight cycles.
        let comp = self.tarjan_scc(&tight);
        self.edges
            .iter()
            .enumerate()
            .map(|(e, &(u, v, _))| tight[e] && comp[u] == comp[v])
            .collect()
    }

    fn tarjan_scc(&self, active: &[bool]) -> Vec<usize> {
        let n = self.n();
        let mut index = vec![usize::MAX; n];
        let mut low = vec![0usize; n];
        let mut comp = vec![usize::MAX; n];
        let mut on_stack = vec![false; n];
        let mut stack = Vec::new();
        let mut next_index = 0usize;
        let mut next_comp = 0usize;
        // Iterative Tarjan to avoid recursion depth issues.
        for root in 0..n {
            if index[root] != usize::MAX {
                continue;
            }
            let mut call: Vec<(usize, usize)> = vec![(root, 0)];
            while let Some(&mut (v, ref mut ei)) = call.last_mut() {
                if *ei == 0 {
                    index[v] = next_index;
                    low[v] = next_index;
                    next_index += 1;
                    stack.push(v);
                    on_stack[v] = true;
                }
                let mut advanced = false;
                while *ei < self.out[v].len() {
                    let e = self.out[v][*ei];
                    *ei += 1;
                    if !active[e] {
                        continue;
                    }
                    let w = self.edges[e].1;
                    if index[w] == usize::MAX {
                        call.push((w, 0));
                        advanced = true;
                        break;
                    } else if on_stack[w] {
                        low[v] = low[v].min(index[w]);
                    }
                }
                if advanced {
                    continue;
                }
                if low[v] == index[v] {
                    while let Some(w) = stack.pop() {
                        on_stack[w] = false;
                        comp[w] = next_comp;
                        if w == v {
                            break;
                        }
                    }
                    next_comp += 1;
                }
                call.pop();
                if let Some(&mut (parent, _)) = call.last_mut() {
                    low[parent] = low[parent].min(low[v]);
                }
            }
        }
        comp
    }

    /// Shortest cycle (then lexicographically smallest word) using only
    /// `active` edges. Returns edge indices around the cycle.
    pub fn shortest_cycle(&self, active: &[bool]) -> Option<Vec<usize>> {
        let n = self.n();
        let mut best: Option<(usize, Vec<u8>, Vec<usize>)> = None;
        for start in 0..n {
            // BFS from start back to start over active edges.
            let mut dist = vec![usize::MAX; n];
            let mut pred: Vec<Option<usize>> = vec![None; n];
            let mut queue = std::collections::VecDeque::new();
            dist[start] = 0;
            queue.push_back(start);
            let mut closing: Option<usize> = None;
            'bfs: while let Some(u) = queue.pop_front() {
                for &e in &self.out[u] {
                    if !active[e] {
                        continue;
                    }
                    let v = self.edges[e].1;
                    if v == start {
                        closing = Some(e);
                        break 'bfs;
                    }
                    if dist[v] == usize::MAX {
                        dist[v] = dist[u] + 1;
                        pred[v] = Some(e);
                        queue.push_back(v);
                    }
                }
            }
            let Some(closing) = closing else { continue };
            let mut cycle = vec![closing];
            let mut node = self.edges[closing].0;
            while node != start {
                let e = pred[node].expect("path back to start");
                cycle.push(e);
                node = self.edges[e].0;
            }
            cycle.reverse();
            let word = self.cycle_word(&cycle);
            let better = match &best {
                None => true,
                Some((len, w, _)) => cycle.len() < *len || (cycle.len() == *len && word < *w),
            };
            if better {
                best = Some((cycle.len(), word, cycle));
            }
        }
        best.map(|(_, _, c)| c)
    }

    /// One period of the word spelled by a cycle (leading symbol per edge).
    pub fn cycle_word(&self, cycle: &[usize]) -> Vec<u8> {
        cycle
            .iter()
            .map(|&e| self.nodes[self.edges[e].0].symbols()[0])
            .collect()
    }

    pub fn cycle_sum(&self, cycle: &[usize], weights: &[f64]) -> f64 {
        cycle.iter().map(|&e| weights[e]).sum()
    }

    /// The witness cycle achieving the minimum cycle mean, with the
    /// shortest-then-lexicographic tie-break.
    pub fn min_mean_witness(&self, weights: &[f64], active: Option<&[bool]>) -> Option<Vec<usize>> {
        let mean = self.min_cycle_mean(weights, active)?;
        let critical = self.critical_edges(weights, mean, active);
        self.shortest_cycle(&critical)
    }

    pub fn max_mean_witness(&self, weights: &[f64], active: Option<&[bool]>) -> Option<Vec<usize>> {
        let negated: Vec<f64> = weights.iter().map(|w| -w).collect();
        self.min_mean_witness(&negated, active)
    }
}

/// Outcome of a directed cycle-ratio search.
#[derive(Debug, Clone, PartialEq)]
pub enum RatioExtreme {
    /// Attained finite extreme with the witness cycle word.
    Finite { value: f64, witness: Vec<u8> },
    /// A zero-denominator cycle lets the ratio diverge in this direction.
    Unbounded { witness: Vec<u8> },
    /// No cycle with positive denominator sum exists.
    Empty,
}

/// Maximum over cycles with positive `den`-sum of `num`-sum / `den`-sum, by
/// Dinkelbach iteration on the parametric max-mean-cycle problem. Requires
/// all cycle `den`-sums to be nonnegative (condition checked upstream).
pub fn max_cycle_ratio(graph: &BlockGraph, num: &[f64], den: &[f64]) -> Result<RatioExtreme> {
    // Any cycle at all with positive denominator? Start from the cycle that
    // maximizes the denominator mean.
    let Some(den_max) = graph.max_cycle_mean(den, None) else {
        return Ok(RatioExtreme::Empty);
    };
    if den_max <= MEAN_TOL {
        return Ok(RatioExtreme::Empty);
    }
    let seed = graph
        .max_mean_witness(den, None)
        .expect("witness exists when a cycle exists");
    let mut lambda = graph.cycle_sum(&seed, num) / graph.cycle_sum(&seed, den);
    let mut witness = seed;
    for _ in 0..200 {
        let shifted: Vec<f64> = num
            .iter()
            .zip(den)
            .map(|(n, d)| n - lambda * d)
            .collect();
        let gain = graph
            .max_cycle_mean(&shifted, None)
            .expect("irreducible graph has cycles");
        if gain <= MEAN_TOL {
            return Ok(RatioExtreme::Finite {
                value: lambda,
                witness: graph.cycle_word(&witness),
            });
        }
        let cycle = graph
            .max_mean_witness(&shifted, None)
            .expect("witness for positive gain");
        let den_sum = graph.cycle_sum(&cycle, den);
        let num_sum = graph.cycle_sum(&cycle, num);
        if den_sum <= MEAN_TOL * cycle.len() as f64 {
            // Positive shifted sum with ~zero denominator: ratio diverges.
            return Ok(RatioExtreme::Unbounded {
                witness: graph.cycle_word(&cycle),
            });
        }
        let next = num_sum / den_sum;
        if next <= lambda + 1e-15 {
            return Ok(RatioExtreme::Finite {
                value: lambda.max(next),
                witness: graph.cycle_word(&cycle),
            });
        }
        lambda = next;
        witness = cycle;
    }
    Err(Error::NonConvergence {
        what: "cycle ratio iteration",
    })
}

/// Minimum cycle ratio, by negating the numerator.
pub fn min_cycle_ratio(graph: &BlockGraph, num: &[f64], den: &[f64]) -> Result<RatioExtreme> {
    let negated: Vec<f64> = num.iter().map(|x| -x).collect();
    Ok(match max_cycle_ratio(graph, &negated, den)? {
        RatioExtreme::Finite { value, witness } => RatioExtreme::Finite {
            value: -value,
            witness,
        },
        other => other,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn golden() -> Sft {
        Sft::new(vec![vec![true, true], vec![true, false]]).unwrap()
    }

    #[test]
    fn cycle_means_on_golden_mean() {
        let sft = golden();
        let graph = BlockGraph::new(&sft, 2).unwrap();
        let ind1 = LocallyConstantPotential::indicator(&sft, &[1]).unwrap();
        let w = graph.weights(&sft, &ind1).unwrap();
        // cycles: 0-loop (mean 0) and 01 (mean 1/2)
        assert!((graph.min_cycle_mean(&w, None).unwrap() - 0.0).abs() < 1e-12);
        assert!((graph.max_cycle_mean(&w, None).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn witness_tie_break_prefers_short_then_lex() {
        let sft = Sft::full_shift(2);
        let graph = BlockGraph::new(&sft, 2).unwrap();
        let zero = LocallyConstantPotential::constant(&sft, 0.0);
        let w = graph.weights(&sft, &zero).unwrap();
        let cycle = graph.min_mean_witness(&w, None).unwrap();
        assert_eq!(graph.cycle_word(&cycle), vec![0]);
    }

    #[test]
    fn ratio_search_matches_hand_extremes() {
        let sft = golden();
        let graph = BlockGraph::new(&sft, 2).unwrap();
        let ind1 = LocallyConstantPotential::indicator(&sft, &[1]).unwrap();
        let one = LocallyConstantPotential::constant(&sft, 1.0);
        let num = graph.weights(&sft, &ind1).unwrap();
        let den = graph.weights(&sft, &one).unwrap();
        match max_cycle_ratio(&graph, &num, &den).unwrap() {
            RatioExtreme::Finite { value, witness } => {
                assert!((value - 0.5).abs() < 1e-12);
                assert_eq!(witness.len(), 2); // the "01" cycle up to rotation
            }
            other => panic!("unexpected {other:?}"),
        }
        match min_cycle_ratio(&graph, &num, &den).unwrap() {
            RatioExtreme::Finite { value, .. } => assert!(value.abs() < 1e-12),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn zero_denominator_cycle_is_unbounded() {
        // psi = (0, log 2) on the full shift, phi = 1: the 0-loop has zero
        // denominator and positive numerator.
        let sft = Sft::full_shift(2);
        let graph = BlockGraph::new(&sft, 2).unwrap();
        let one = LocallyConstantPotential::constant(&sft, 1.0);
        let psi = LocallyConstantPotential::from_symbols(&sft, &[0.0, 2f64.ln()]).unwrap();
        let num = graph.weights(&sft, &one).unwrap();
        let den = graph.weights(&sft, &psi).unwrap();
        match max_cycle_ratio(&graph, &num, &den).unwrap() {
            RatioExtreme::Unbounded { witness } => assert_eq!(witness, vec![0]),
            other => panic!("unexpected {other:?}"),
        }
        // the minimum is attained on the 1-...-cycles with the largest psi
        match min_cycle_ratio(&graph, &num, &den).unwrap() {
            RatioExtreme::Finite { value, .. } => {
                assert!((value - 1.0 / 2f64.ln()).abs() < 1e-12)
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn critical_subgraph_is_exactly_the_zero_loop() {
        let sft = Sft::full_shift(2);
        let graph = BlockGraph::new(&sft, 2).unwrap();
        let u = LocallyConstantPotential::from_symbols(&sft, &[0.0, 2f64.ln()]).unwrap();
        let w = graph.weights(&sft, &u).unwrap();
        let critical = graph.critical_edges(&w, 0.0, None);
        let active: Vec<usize> = (0..graph.edges.len()).filter(|&e| critical[e]).collect();
        assert_eq!(active.len(), 1);
        let (u0, v0, ref kw) = graph.edges[active[0]];
        assert_eq!(u0, v0);
        assert_eq!(kw, &vec![0, 0]);
    }
}

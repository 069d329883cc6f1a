//! Transportation simplex on the bipartite supply/demand graph.
//!
//! Nodes `0..m` are sources, `m..m+n` sinks. The basis is a spanning tree of
//! `m + n − 1` cells. Supplies are perturbed (`a_i + ε`, `b_last + mε`) so
//! every basic flow stays positive and pivots cannot stall; the final flows
//! are recomputed on the optimal tree from the unperturbed marginals.

use super::TransportPlan;
use crate::{Error, Result};

struct Basis {
    m: usize,
    n: usize,
    cells: Vec<(usize, usize)>,
    flow: Vec<f64>,
    adj: Vec<Vec<usize>>,
}

impl Basis {
    fn add(&mut self, i: usize, j: usize, f: f64) -> usize {
        let id = self.cells.len();
        self.cells.push((i, j));
        self.flow.push(f);
        self.adj[i].push(id);
        self.adj[self.m + j].push(id);
        id
    }

    fn other(&self, cell: usize, node: usize) -> usize {
        let (i, j) = self.cells[cell];
        if node == i {
            self.m + j
        } else {
            i
        }
    }

    /// Replaces cell `out` with `(i, j)` carrying flow `f`, keeping the id.
    fn replace(&mut self, out: usize, i: usize, j: usize, f: f64) {
        let (oi, oj) = self.cells[out];
        for node in [oi, self.m + oj] {
            let pos = self.adj[node].iter().position(|&c| c == out).unwrap();
            self.adj[node].swap_remove(pos);
        }
        self.cells[out] = (i, j);
        self.flow[out] = f;
        self.adj[i].push(out);
        self.adj[self.m + j].push(out);
    }
}

/// Tree rooted at source 0: parent edge, parent node, depth, and potentials
/// with `u_i + v_j = c_ij` on every basic cell.
struct Rooted {
    parent_cell: Vec<usize>,
    parent: Vec<usize>,
    depth: Vec<usize>,
    pot: Vec<f64>,
}

fn root(b: &Basis, cost: &[Vec<f64>]) -> Rooted {
    let nodes = b.m + b.n;
    let mut r = Rooted {
        parent_cell: vec![usize::MAX; nodes],
        parent: vec![usize::MAX; nodes],
        depth: vec![0; nodes],
        pot: vec![0.0; nodes],
    };
    let mut seen = vec![false; nodes];
    let mut stack = vec![0usize];
    seen[0] = true;
    while let Some(u) = stack.pop() {
        for &c in &b.adj[u] {
            let w = b.other(c, u);
            if seen[w] {
                continue;
            }
            seen[w] = true;
            let (i, j) = b.cells[c];
            r.pot[w] = cost[i][j] - r.pot[u];
            r.parent[w] = u;
            r.parent_cell[w] = c;
            r.depth[w] = r.depth[u] + 1;
            stack.push(w);
        }
    }
    r
}

/// Staircase initial basis with exactly `m + n − 1` cells.
fn northwest(a: &[f64], b: &[f64]) -> Basis {
    let (m, n) = (a.len(), b.len());
    let mut basis = Basis { m, n, cells: Vec::new(), flow: Vec::new(), adj: vec![Vec::new(); m + n] };
    let (mut ra, mut rb) = (a.to_vec(), b.to_vec());
    let (mut i, mut j) = (0, 0);
    loop {
        let f = ra[i].min(rb[j]).max(0.0);
        basis.add(i, j, f);
        ra[i] -= f;
        rb[j] -= f;
        if i + 1 == m && j + 1 == n {
            break;
        }
        if i + 1 == m || (j + 1 < n && ra[i] > rb[j]) {
            j += 1;
        } else {
            i += 1;
        }
    }
    basis
}

/// Flows on a spanning tree that meet the marginals, by peeling leaves.
fn tree_flows(basis: &Basis, a: &[f64], b: &[f64]) -> Vec<f64> {
    let (m, n) = (basis.m, basis.n);
    let mut resid: Vec<f64> = a.iter().chain(b).copied().collect();
    let mut deg: Vec<usize> = basis.adj.iter().map(Vec::len).collect();
    let mut used = vec![false; basis.cells.len()];
    let mut flow = vec![0.0; basis.cells.len()];
    let mut leaves: Vec<usize> = (0..m + n).filter(|&v| deg[v] == 1).collect();
    while let Some(v) = leaves.pop() {
        if deg[v] != 1 {
            continue;
        }
        let c = *basis.adj[v].iter().find(|&&c| !used[c]).unwrap();
        used[c] = true;
        let w = basis.other(c, v);
        flow[c] = resid[v];
        resid[w] -= resid[v];
        resid[v] = 0.0;
        deg[v] -= 1;
        deg[w] -= 1;
        if deg[w] == 1 {
            leaves.push(w);
        }
    }
    flow
}

/// Minimum-cost coupling of `a` (rows) and `b` (columns) under `cost`.
pub fn emd(a: &[f64], b: &[f64], cost: &[Vec<f64>]) -> Result<TransportPlan> {
    let (m, n) = (a.len(), b.len());
    if m == 0 || n == 0 {
        return Err(Error::usage("empty marginal"));
    }
    if cost.len() != m || cost.iter().any(|r| r.len() != n) {
        return Err(Error::usage("cost matrix shape does not match marginals"));
    }
    let cmax = cost.iter().flatten().fold(0.0f64, |acc, &c| acc.max(c.abs()));
    if !cmax.is_finite() {
        return Err(Error::numerical("non-finite transport cost"));
    }

    let eps = 1e-10 / m as f64;
    let pa: Vec<f64> = a.iter().map(|x| x + eps).collect();
    let mut pb = b.to_vec();
    pb[n - 1] += m as f64 * eps;
    let mut basis = northwest(&pa, &pb);

    let tol = 1e-12 * (1.0 + cmax);
    let cells = m * n;
    let block = ((cells as f64).sqrt().ceil() as usize).max(m + n).min(cells);
    let mut cursor = 0usize;
    let max_pivots = 50 * cells + 1000;
    let mut in_basis = vec![false; cells];
    for &(i, j) in &basis.cells {
        in_basis[i * n + j] = true;
    }

    for _ in 0..max_pivots {
        let r = root(&basis, cost);
        // block pricing: scan from the cursor, stop at the first block that
        // holds a negative reduced cost
        let mut best: Option<(usize, f64)> = None;
        let mut scanned = 0;
        while scanned < cells {
            let len = block.min(cells - scanned);
            for k in 0..len {
                let idx = (cursor + k) % cells;
                if in_basis[idx] {
                    continue;
                }
                let (i, j) = (idx / n, idx % n);
                let rc = cost[i][j] - r.pot[i] - r.pot[m + j];
                if rc < -tol && best.map_or(true, |(_, v)| rc < v) {
                    best = Some((idx, rc));
                }
            }
            cursor = (cursor + len) % cells;
            scanned += len;
            if best.is_some() {
                break;
            }
        }
        let Some((enter, _)) = best else {
            let flow = tree_flows(&basis, a, b);
            let mut entries = Vec::with_capacity(basis.cells.len());
            let mut total = 0.0;
            for (&(i, j), &f) in basis.cells.iter().zip(&flow) {
                let f = f.max(0.0);
                if f > 0.0 {
                    total += f * cost[i][j];
                    entries.push((i, j, f));
                }
            }
            entries.sort_by_key(|&(i, j, _)| (i, j));
            return Ok(TransportPlan { rows: m, cols: n, entries, cost: total });
        };

        // cycle: entering cell, then the tree path from sink j back to
        // source i with alternating signs starting negative at j
        let (ei, ej) = (enter / n, enter % n);
        let (mut u, mut w) = (m + ej, ei);
        let mut from_j = Vec::new();
        let mut from_i = Vec::new();
        while u != w {
            if r.depth[u] >= r.depth[w] {
                from_j.push(r.parent_cell[u]);
                u = r.parent[u];
            } else {
                from_i.push(r.parent_cell[w]);
                w = r.parent[w];
            }
        }
        from_j.extend(from_i.into_iter().rev());
        let path = from_j;

        let mut leave = path[0];
        let mut theta = f64::INFINITY;
        for &c in path.iter().step_by(2) {
            if basis.flow[c] < theta {
                theta = basis.flow[c];
                leave = c;
            }
        }
        for (k, &c) in path.iter().enumerate() {
            if k % 2 == 0 {
                basis.flow[c] -= theta;
            } else {
                basis.flow[c] += theta;
            }
        }
        let (li, lj) = basis.cells[leave];
        in_basis[li * n + lj] = false;
        in_basis[enter] = true;
        basis.replace(leave, ei, ej, theta);
    }
    Err(Error::numerical("transport simplex did not converge"))
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::rng::{stream, Stream};
    use rand::Rng;

    /// Minimum over all vertices of the transport polytope, found by
    /// enumerating every spanning tree of the bipartite graph and keeping
    /// the feasible ones.
    pub(crate) fn brute_force(a: &[f64], b: &[f64], cost: &[Vec<f64>]) -> f64 {
        let (m, n) = (a.len(), b.len());
        let cells: Vec<(usize, usize)> = (0..m).flat_map(|i| (0..n).map(move |j| (i, j))).collect();
        let k = m + n - 1;
        let mut best = f64::INFINITY;
        let mut pick: Vec<usize> = (0..k).collect();
        loop {
            // spanning-tree check by union-find
            let mut uf: Vec<usize> = (0..m + n).collect();
            fn find(uf: &mut Vec<usize>, x: usize) -> usize {
                if uf[x] != x {
                    let r = find(uf, uf[x]);
                    uf[x] = r;
                }
                uf[x]
            }
            let mut ok = true;
            for &c in &pick {
                let (i, j) = cells[c];
                let (ri, rj) = (find(&mut uf, i), find(&mut uf, m + j));
                if ri == rj {
                    ok = false;
                    break;
                }
                uf[ri] = rj;
            }
            if ok {
                let mut basis = Basis { m, n, cells: Vec::new(), flow: Vec::new(), adj: vec![Vec::new(); m + n] };
                for &c in &pick {
                    basis.add(cells[c].0, cells[c].1, 0.0);
                }
                let flow = tree_flows(&basis, a, b);
                if flow.iter().all(|&f| f >= -1e-12) {
                    let v: f64 = basis.cells.iter().zip(&flow).map(|(&(i, j), f)| f * cost[i][j]).sum();
                    best = best.min(v);
                }
            }
            // next combination
            let mut t = k;
            loop {
                if t == 0 {
                    return best;
                }
                t -= 1;
                if pick[t] < cells.len() - k + t {
                    break;
                }
                if t == 0 && pick[0] >= cells.len() - k {
                    return best;
                }
            }
            pick[t] += 1;
            for s in t + 1..k {
                pick[s] = pick[s - 1] + 1;
            }
        }
    }

    fn random_marginal(rng: &mut impl Rng, n: usize) -> Vec<f64> {
        let raw: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
        let s: f64 = raw.iter().sum();
        raw.iter().map(|x| x / s).collect()
    }

    #[test]
    fn matches_brute_force_on_small_instances() {
        let mut rng = stream(42, Stream::Sampling, 0);
        for _ in 0..100 {
            let (m, n) = (rng.gen_range(1..=4), rng.gen_range(1..=4));
            let a = random_marginal(&mut rng, m);
            let b = random_marginal(&mut rng, n);
            let cost: Vec<Vec<f64>> = (0..m).map(|_| (0..n).map(|_| rng.gen_range(0.0..3.0)).collect()).collect();
            let plan = emd(&a, &b, &cost).unwrap();
            let bf = brute_force(&a, &b, &cost);
            assert!((plan.cost - bf).abs() < 1e-9, "{} vs {bf}", plan.cost);
        }
    }

    #[test]
    fn degenerate_uniform_instance() {
        // equal masses make every northwest step degenerate
        let n = 40;
        let a = vec![1.0 / n as f64; n];
        let cost: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| ((i as f64) - (n - 1 - j) as f64).abs()).collect()).collect();
        let plan = emd(&a, &a, &cost).unwrap();
        assert!(plan.cost.abs() < 1e-12);
    }

    #[test]
    fn basis_size_is_tree() {
        let b = northwest(&[0.2, 0.3, 0.5], &[0.5, 0.5]);
        assert_eq!(b.cells.len(), 4);
        let b = northwest(&[0.5, 0.5], &[0.5, 0.5]);
        assert_eq!(b.cells.len(), 3);
    }
}

//! Shortest paths and minimum spanning forests on random geometric graphs.
//!
//! Graphs are Erdős–Rényi over nodes placed uniformly in the unit square,
//! with Euclidean edge weights. Quality is `optimal / achieved` total weight,
//! with Bellman-Ford and Prim as the oracles; an invalid answer scores 0.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Deadline, Expired};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    pub w: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Graph {
    pub nodes: usize,
    pub points: Vec<[f64; 2]>,
    pub edges: Vec<Edge>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathInstance {
    pub graph: Graph,
    pub source: usize,
    pub target: usize,
}

impl Graph {
    /// Fraction of the `n(n-1)/2` possible edges that are present.
    pub fn density(&self) -> f64 {
        let n = self.nodes as f64;
        if self.nodes < 2 {
            0.0
        } else {
            self.edges.len() as f64 / (n * (n - 1.0) / 2.0)
        }
    }

    pub fn distance(&self, a: usize, b: usize) -> f64 {
        let (p, q) = (self.points[a], self.points[b]);
        ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt()
    }

    fn adjacency(&self) -> Vec<Vec<(usize, f64)>> {
        let mut adj = vec![Vec::new(); self.nodes];
        for e in &self.edges {
            adj[e.u].push((e.v, e.w));
            adj[e.v].push((e.u, e.w));
        }
        adj
    }
}

pub fn generate_graph<R: Rng + ?Sized>(n: usize, p: f64, rng: &mut R) -> Graph {
    let points: Vec<[f64; 2]> = (0..n).map(|_| [rng.random::<f64>(), rng.random::<f64>()]).collect();
    let mut g = Graph {
        nodes: n,
        points,
        edges: Vec::new(),
    };
    for u in 0..n {
        for v in u + 1..n {
            if rng.random::<f64>() < p {
                let w = g.distance(u, v);
                g.edges.push(Edge { u, v, w });
            }
        }
    }
    g
}

/// Random graph with the path requested from node 0 to node `n - 1`.
pub fn generate_path<R: Rng + ?Sized>(n: usize, p: f64, rng: &mut R) -> PathInstance {
    PathInstance {
        graph: generate_graph(n, p, rng),
        source: 0,
        target: n - 1,
    }
}

#[derive(PartialEq)]
struct Frontier(f64, usize);

impl Eq for Frontier {}

impl Ord for Frontier {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then_with(|| other.1.cmp(&self.1))
    }
}

impl PartialOrd for Frontier {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

pub fn dijkstra(p: &PathInstance, deadline: &Deadline) -> Result<Option<Vec<usize>>, Expired> {
    let adj = p.graph.adjacency();
    let n = p.graph.nodes;
    let mut dist = vec![f64::INFINITY; n];
    let mut prev = vec![usize::MAX; n];
    let mut heap = BinaryHeap::new();
    dist[p.source] = 0.0;
    heap.push(Frontier(0.0, p.source));
    let mut pops = 0u32;
    while let Some(Frontier(d, u)) = heap.pop() {
        pops += 1;
        if pops.is_multiple_of(1024) {
            deadline.check()?;
        }
        if d > dist[u] {
            continue;
        }
        if u == p.target {
            break;
        }
        for &(v, w) in &adj[u] {
            let nd = d + w;
            if nd < dist[v] {
                dist[v] = nd;
                prev[v] = u;
                heap.push(Frontier(nd, v));
            }
        }
    }
    if !dist[p.target].is_finite() {
        return Ok(None);
    }
    let mut path = vec![p.target];
    while let Some(&last) = path.last() {
        if last == p.source {
            break;
        }
        path.push(prev[last]);
    }
    path.reverse();
    Ok(Some(path))
}

const WALK_RESTARTS: usize = 64;
const WALK_NOISE: f64 = 0.5;

/// Repeated randomized greedy descents toward the target. Each step moves to
/// the unvisited neighbor minimizing `(w + dist_to_target) * (1 + noise)`;
/// dead ends abandon the walk. The cheapest completed walk is returned.
pub fn greedy_walk<R: Rng + ?Sized>(
    p: &PathInstance,
    rng: &mut R,
    deadline: &Deadline,
) -> Result<Option<Vec<usize>>, Expired> {
    let adj = p.graph.adjacency();
    let mut best: Option<(f64, Vec<usize>)> = None;
    let mut visited = vec![false; p.graph.nodes];
    for _ in 0..WALK_RESTARTS {
        deadline.check()?;
        visited.iter_mut().for_each(|v| *v = false);
        let mut path = vec![p.source];
        let mut cost = 0.0;
        visited[p.source] = true;
        let mut u = p.source;
        while u != p.target {
            let next = adj[u]
                .iter()
                .filter(|(v, _)| !visited[*v])
                .map(|&(v, w)| {
                    let score = (w + p.graph.distance(v, p.target)) * (1.0 + WALK_NOISE * rng.random::<f64>());
                    (score, v, w)
                })
                .min_by(|a, b| a.0.total_cmp(&b.0));
            let Some((_, v, w)) = next else { break };
            visited[v] = true;
            path.push(v);
            cost += w;
            u = v;
        }
        if u == p.target && best.as_ref().is_none_or(|(c, _)| cost < *c) {
            best = Some((cost, path));
        }
    }
    Ok(best.map(|(_, path)| path))
}

struct DisjointSets(Vec<usize>);

impl DisjointSets {
    fn new(n: usize) -> Self {
        DisjointSets((0..n).collect())
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.0[x] != x {
            self.0[x] = self.0[self.0[x]];
            x = self.0[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.0[ra] = rb;
        true
    }
}

fn by_weight(g: &Graph, order: &mut [usize]) {
    order.sort_by(|&a, &b| g.edges[a].w.total_cmp(&g.edges[b].w).then(a.cmp(&b)));
}

pub fn kruskal(g: &Graph, deadline: &Deadline) -> Result<Vec<usize>, Expired> {
    let mut order: Vec<usize> = (0..g.edges.len()).collect();
    by_weight(g, &mut order);
    deadline.check()?;
    let mut sets = DisjointSets::new(g.nodes);
    let mut forest = Vec::new();
    for i in order {
        let e = g.edges[i];
        if sets.union(e.u, e.v) {
            forest.push(i);
            if forest.len() + 1 == g.nodes {
                break;
            }
        }
    }
    Ok(forest)
}

/// Kruskal over a random half of the edges, then any remaining edges in
/// random order to join what is still disconnected.
pub fn edge_sampling<R: Rng + ?Sized>(g: &Graph, rng: &mut R, deadline: &Deadline) -> Result<Vec<usize>, Expired> {
    let mut order: Vec<usize> = (0..g.edges.len()).collect();
    order.shuffle(rng);
    let (sample, rest) = order.split_at_mut(g.edges.len() / 2);
    by_weight(g, sample);
    deadline.check()?;
    let mut sets = DisjointSets::new(g.nodes);
    let mut forest = Vec::new();
    for &i in sample.iter().chain(rest.iter()) {
        let e = g.edges[i];
        if sets.union(e.u, e.v) {
            forest.push(i);
        }
    }
    Ok(forest)
}

fn bellman_ford(g: &Graph, source: usize) -> Vec<f64> {
    let mut dist = vec![f64::INFINITY; g.nodes];
    dist[source] = 0.0;
    for _ in 1..g.nodes.max(2) {
        let mut changed = false;
        for e in &g.edges {
            if dist[e.u] + e.w < dist[e.v] {
                dist[e.v] = dist[e.u] + e.w;
                changed = true;
            }
            if dist[e.v] + e.w < dist[e.u] {
                dist[e.u] = dist[e.v] + e.w;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    dist
}

pub fn path_quality(p: &PathInstance, path: Option<&[usize]>) -> f64 {
    let optimal = bellman_ford(&p.graph, p.source)[p.target];
    let Some(path) = path else {
        return if optimal.is_finite() { 0.0 } else { 1.0 };
    };
    if path.first() != Some(&p.source) || path.last() != Some(&p.target) {
        return 0.0;
    }
    let mut weight: HashMap<(usize, usize), f64> = HashMap::new();
    for e in &p.graph.edges {
        let key = (e.u.min(e.v), e.u.max(e.v));
        let w = weight.entry(key).or_insert(f64::INFINITY);
        *w = w.min(e.w);
    }
    let mut cost = 0.0;
    for pair in path.windows(2) {
        match weight.get(&(pair[0].min(pair[1]), pair[0].max(pair[1]))) {
            Some(w) => cost += w,
            None => return 0.0,
        }
    }
    if cost <= 0.0 {
        1.0
    } else {
        optimal / cost
    }
}

/// Minimum spanning forest weight by dense Prim, one tree per component.
fn prim_weight(g: &Graph) -> f64 {
    let n = g.nodes;
    let mut w = vec![vec![f64::INFINITY; n]; n];
    for e in &g.edges {
        if e.w < w[e.u][e.v] {
            w[e.u][e.v] = e.w;
            w[e.v][e.u] = e.w;
        }
    }
    let mut in_tree = vec![false; n];
    let mut key = vec![f64::INFINITY; n];
    let mut total = 0.0;
    for _ in 0..n {
        let u = (0..n)
            .filter(|&v| !in_tree[v])
            .min_by(|&a, &b| key[a].total_cmp(&key[b]))
            .expect("a node remains");
        if key[u].is_finite() {
            total += key[u];
        }
        in_tree[u] = true;
        for v in 0..n {
            if !in_tree[v] && w[u][v] < key[v] {
                key[v] = w[u][v];
            }
        }
    }
    total
}

fn component_count(g: &Graph) -> usize {
    let adj = g.adjacency();
    let mut seen = vec![false; g.nodes];
    let mut count = 0;
    for s in 0..g.nodes {
        if seen[s] {
            continue;
        }
        count += 1;
        let mut stack = vec![s];
        seen[s] = true;
        while let Some(u) = stack.pop() {
            for &(v, _) in &adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
    }
    count
}

pub fn forest_quality(g: &Graph, edges: &[usize]) -> f64 {
    if edges.iter().any(|&i| i >= g.edges.len()) {
        return 0.0;
    }
    if edges.len() + component_count(g) != g.nodes {
        return 0.0;
    }
    let sub = Graph {
        nodes: g.nodes,
        points: g.points.clone(),
        edges: edges.iter().map(|&i| g.edges[i]).collect(),
    };
    // a spanning forest with the right edge count must reach every node of each component
    if component_count(&sub) != component_count(g) {
        return 0.0;
    }
    let achieved: f64 = sub.edges.iter().map(|e| e.w).sum();
    let optimal = prim_weight(g);
    if achieved <= 0.0 {
        1.0
    } else {
        optimal / achieved
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    #[test]
    fn edge_count_matches_recount_and_binomial_range() {
        let g = generate_graph(20, 0.5, &mut seeded(7));
        let mut recount = 0;
        for u in 0..20 {
            for v in u + 1..20 {
                if g.edges.iter().any(|e| (e.u, e.v) == (u, v)) {
                    recount += 1;
                }
            }
        }
        assert_eq!(recount, g.edges.len());
        let sigma = (190.0f64 * 0.25).sqrt();
        assert!((g.edges.len() as f64 - 95.0).abs() <= 3.0 * sigma, "{}", g.edges.len());
        assert!((g.density() - g.edges.len() as f64 / 190.0).abs() < 1e-12);
    }

    #[test]
    fn dijkstra_is_optimal() {
        let d = Deadline::unlimited();
        for s in 0..10 {
            let p = generate_path(120, 0.08, &mut seeded(s));
            let path = dijkstra(&p, &d).unwrap();
            assert!((path_quality(&p, path.as_deref()) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn greedy_walk_returns_valid_paths() {
        let d = Deadline::unlimited();
        for s in 0..10 {
            let p = generate_path(120, 0.08, &mut seeded(s));
            let path = greedy_walk(&p, &mut seeded(s + 100), &d).unwrap();
            let q = path_quality(&p, path.as_deref());
            assert!(q > 0.0 && q <= 1.0 + 1e-12, "{q}");
        }
    }

    #[test]
    fn unreachable_target() {
        let g = Graph {
            nodes: 3,
            points: vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
            edges: vec![Edge { u: 0, v: 1, w: 1.0 }],
        };
        let p = PathInstance {
            graph: g,
            source: 0,
            target: 2,
        };
        let d = Deadline::unlimited();
        assert_eq!(dijkstra(&p, &d).unwrap(), None);
        assert_eq!(greedy_walk(&p, &mut seeded(0), &d).unwrap(), None);
        assert_eq!(path_quality(&p, None), 1.0);
        assert_eq!(path_quality(&p, Some(&[0, 2])), 0.0);
    }

    #[test]
    fn hand_built_path_scores() {
        // square 0-1-3 and 0-2-3 with a long diagonal 0-3
        let edges = vec![
            Edge { u: 0, v: 1, w: 1.0 },
            Edge { u: 1, v: 3, w: 1.0 },
            Edge { u: 0, v: 2, w: 2.0 },
            Edge { u: 2, v: 3, w: 2.0 },
            Edge { u: 0, v: 3, w: 3.0 },
        ];
        let g = Graph {
            nodes: 4,
            points: vec![[0.0; 2]; 4],
            edges,
        };
        let p = PathInstance {
            graph: g.clone(),
            source: 0,
            target: 3,
        };
        assert_eq!(path_quality(&p, Some(&[0, 1, 3])), 1.0);
        assert_eq!(path_quality(&p, Some(&[0, 2, 3])), 0.5);
        assert_eq!(path_quality(&p, Some(&[0, 3])), 2.0 / 3.0);
        assert_eq!(path_quality(&p, Some(&[1, 3])), 0.0);
        assert_eq!(forest_quality(&g, &[0, 1, 2]), 1.0);
        assert_eq!(forest_quality(&g, &[0, 2, 4]), 4.0 / 6.0);
        assert_eq!(forest_quality(&g, &[0, 1]), 0.0);
        assert_eq!(forest_quality(&g, &[0, 1, 4]), 0.0);
    }

    #[test]
    fn kruskal_matches_prim_and_sampling_is_a_spanning_forest() {
        let d = Deadline::unlimited();
        for s in 0..10 {
            let g = generate_graph(100, 0.03, &mut seeded(s));
            assert!((forest_quality(&g, &kruskal(&g, &d).unwrap()) - 1.0).abs() < 1e-9);
            let q = forest_quality(&g, &edge_sampling(&g, &mut seeded(s), &d).unwrap());
            assert!(q > 0.0 && q <= 1.0 + 1e-9);
        }
    }
}

//! The Erdős–Rényi multigraph grown alongside the transposition walk.
//!
//! Every non-trivial transposition `(i j)` adds an edge `i - j`, repeated
//! edges included. Only component tallies are kept: a union-find forest with
//! the vertex count `v` and edge count `e` stored at each root. A component
//! is a tree when `e = v − 1`, unicyclic when `e = v` and complex beyond.

use rand::Rng;
use rand_distr::{Distribution, Geometric};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ComponentClass {
    Tree,
    Unicyclic,
    Complex,
}

impl ComponentClass {
    pub fn classify(vertices: usize, edges: usize) -> Self {
        if edges + 1 == vertices {
            ComponentClass::Tree
        } else if edges == vertices {
            ComponentClass::Unicyclic
        } else {
            debug_assert!(edges > vertices);
            ComponentClass::Complex
        }
    }
}

/// Component census of an [`EvolvingMultigraph`].
#[derive(Debug, Clone, PartialEq)]
pub struct ComponentCounts {
    pub component_count: usize,
    pub giant_size: usize,
    /// `tree_count_by_size[k]` is T_k, the number of tree components on `k`
    /// vertices (index 0 unused).
    pub tree_count_by_size: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct EvolvingMultigraph {
    parent: Vec<u32>,
    /// Vertex tally, valid at roots.
    vertices: Vec<u32>,
    /// Edge tally including multi-edges and self-loops, valid at roots.
    edges: Vec<u64>,
    component_count: usize,
    total_edges: u64,
    giant: usize,
}

impl EvolvingMultigraph {
    /// The empty graph on vertices `1..=n`.
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 || n >= u32::MAX as usize {
            return Err(Error::InvalidConfig(format!("graph size {n} out of range")));
        }
        Ok(EvolvingMultigraph {
            parent: (0..n as u32).collect(),
            vertices: vec![1; n],
            edges: vec![0; n],
            component_count: n,
            total_edges: 0,
            giant: 1,
        })
    }

    pub fn n(&self) -> usize {
        self.parent.len()
    }

    fn check(&self, v: usize) -> Result<u32> {
        if v == 0 || v > self.n() {
            Err(Error::OutOfRange {
                position: v,
                n: self.n(),
            })
        } else {
            Ok((v - 1) as u32)
        }
    }

    fn find(&mut self, mut x: u32) -> u32 {
        let mut root = x;
        while self.parent[root as usize] != root {
            root = self.parent[root as usize];
        }
        while self.parent[x as usize] != root {
            let next = self.parent[x as usize];
            self.parent[x as usize] = root;
            x = next;
        }
        root
    }

    fn find_immutable(&self, mut x: u32) -> u32 {
        while self.parent[x as usize] != x {
            x = self.parent[x as usize];
        }
        x
    }

    /// Adds the edge `i - j` (a self-loop when `i = j`). Returns whether two
    /// components merged.
    pub fn add_edge(&mut self, i: usize, j: usize) -> Result<bool> {
        let (a, b) = (self.check(i)?, self.check(j)?);
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        self.total_edges += 1;
        if ra == rb {
            self.edges[ra as usize] += 1;
            return Ok(false);
        }
        if self.vertices[ra as usize] < self.vertices[rb as usize] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb as usize] = ra;
        self.vertices[ra as usize] += self.vertices[rb as usize];
        self.edges[ra as usize] += self.edges[rb as usize] + 1;
        self.component_count -= 1;
        self.giant = self.giant.max(self.vertices[ra as usize] as usize);
        Ok(true)
    }

    pub fn component_count(&self) -> usize {
        self.component_count
    }

    pub fn giant_size(&self) -> usize {
        self.giant
    }

    pub fn total_edges(&self) -> u64 {
        self.total_edges
    }

    /// Representative of the component holding `v`; equal representatives
    /// mean the same component.
    pub fn component_of(&self, v: usize) -> Result<usize> {
        Ok(self.find_immutable(self.check(v)?) as usize + 1)
    }

    pub fn same_component(&self, i: usize, j: usize) -> Result<bool> {
        Ok(self.component_of(i)? == self.component_of(j)?)
    }

    /// `(v, e)` of the component holding `vertex`.
    pub fn tallies_of(&self, vertex: usize) -> Result<(usize, usize)> {
        let r = self.find_immutable(self.check(vertex)?) as usize;
        Ok((self.vertices[r] as usize, self.edges[r] as usize))
    }

    pub fn class_of(&self, vertex: usize) -> Result<ComponentClass> {
        let (v, e) = self.tallies_of(vertex)?;
        Ok(ComponentClass::classify(v, e))
    }

    /// Vertex count of the component holding `vertex`.
    pub fn component_size(&self, vertex: usize) -> Result<usize> {
        Ok(self.tallies_of(vertex)?.0)
    }

    /// Component census by a linear sweep over roots.
    pub fn component_counts(&self) -> ComponentCounts {
        let n = self.n();
        let mut tree_count_by_size = vec![0; n + 1];
        for x in 0..n {
            if self.parent[x] as usize == x {
                let (v, e) = (self.vertices[x] as usize, self.edges[x] as usize);
                if ComponentClass::classify(v, e) == ComponentClass::Tree {
                    tree_count_by_size[v] += 1;
                }
            }
        }
        ComponentCounts {
            component_count: self.component_count,
            giant_size: self.giant,
            tree_count_by_size,
        }
    }
}

/// An independent `G(n, p)` sample: each of the `C(n, 2)` pairs is an edge
/// with probability `p`. Pairs are visited by geometric skipping, so the cost
/// is proportional to the number of edges.
pub fn gnp_snapshot<R: Rng + ?Sized>(n: usize, p: f64, rng: &mut R) -> Result<EvolvingMultigraph> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::domain("gnp_snapshot", p, "0 <= p <= 1"));
    }
    let mut g = EvolvingMultigraph::new(n)?;
    if p == 0.0 || n < 2 {
        return Ok(g);
    }
    let pairs = n as u64 * (n as u64 - 1) / 2;
    let skip = Geometric::new(p).map_err(|_| Error::domain("gnp_snapshot", p, "0 < p <= 1"))?;
    // Pair index m enumerates (i, j), i < j, row by row.
    let mut m = skip.sample(rng);
    let (mut row, mut row_start) = (0u64, 0u64);
    while m < pairs {
        while m >= row_start + (n as u64 - 1 - row) {
            row_start += n as u64 - 1 - row;
            row += 1;
        }
        let col = row + 1 + (m - row_start);
        g.add_edge(row as usize + 1, col as usize + 1)?;
        m = m.saturating_add(1).saturating_add(skip.sample(rng));
    }
    Ok(g)
}

/// The random graph of the continuous-time walk at time `t`: `G(n, p)` with
/// `p = 1 − exp(−2t/n²)`.
pub fn bernoulli_snapshot<R: Rng + ?Sized>(
    n: usize,
    t: f64,
    rng: &mut R,
) -> Result<EvolvingMultigraph> {
    if t.is_nan() || t < 0.0 {
        return Err(Error::domain("bernoulli_snapshot", t, "t >= 0"));
    }
    let nf = n as f64;
    let p = -(-2.0 * t / (nf * nf)).exp_m1();
    gnp_snapshot(n, p, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::par::replicate_rng;
    use crate::stats;
    use crate::theory;

    #[test]
    fn edge_tallies() {
        let mut g = EvolvingMultigraph::new(5).unwrap();
        assert!(g.add_edge(1, 2).unwrap());
        assert_eq!(g.component_count(), 4);
        assert_eq!(g.class_of(1).unwrap(), ComponentClass::Tree);
        assert!(!g.add_edge(1, 2).unwrap());
        assert_eq!(g.tallies_of(2).unwrap(), (2, 2));
        assert_eq!(g.class_of(1).unwrap(), ComponentClass::Unicyclic);

        let mut h = EvolvingMultigraph::new(5).unwrap();
        h.add_edge(1, 2).unwrap();
        h.add_edge(2, 3).unwrap();
        h.add_edge(1, 3).unwrap();
        assert_eq!(h.tallies_of(3).unwrap(), (3, 3));
        assert_eq!(h.class_of(3).unwrap(), ComponentClass::Unicyclic);
        h.add_edge(2, 3).unwrap();
        assert_eq!(h.class_of(3).unwrap(), ComponentClass::Complex);
        assert_eq!(h.component_count(), 3);
        assert!(!h.add_edge(4, 4).unwrap());
        assert_eq!(h.class_of(4).unwrap(), ComponentClass::Unicyclic);
        assert!(h.add_edge(0, 1).is_err());
    }

    #[test]
    fn empty_graph_census() {
        let g = EvolvingMultigraph::new(7).unwrap();
        let c = g.component_counts();
        assert_eq!(c.component_count, 7);
        assert_eq!(c.tree_count_by_size[1], 7);
        assert_eq!(c.giant_size, 1);
    }

    #[test]
    fn zero_time_snapshot_is_empty() {
        let g = bernoulli_snapshot(50, 0.0, &mut replicate_rng(1, 0)).unwrap();
        assert_eq!(g.total_edges(), 0);
        assert_eq!(g.component_count(), 50);
    }

    #[test]
    fn snapshot_edge_count_is_binomial() {
        let (n, t) = (200usize, 150.0f64);
        let p = -(-2.0 * t / (n * n) as f64).exp_m1();
        let counts: Vec<f64> = (0..2000)
            .map(|r| {
                bernoulli_snapshot(n, t, &mut replicate_rng(3, r))
                    .unwrap()
                    .total_edges() as f64
            })
            .collect();
        let expected = (n * (n - 1) / 2) as f64 * p;
        assert!((stats::mean(&counts) - expected).abs() < 3.0 * stats::std_error(&counts));
    }

    #[test]
    fn subcritical_cluster_law_is_borel() {
        let (n, c) = (2000usize, 0.5f64);
        let sizes: Vec<u64> = (0..20_000)
            .map(|r| {
                let g =
                    bernoulli_snapshot(n, c * n as f64 / 2.0, &mut replicate_rng(5, r)).unwrap();
                g.component_size(1).unwrap() as u64
            })
            .collect();
        let hist = stats::histogram(&sizes);
        let tv = stats::tv_distance_to_pmf(&hist, |k| {
            if k == 0 {
                0.0
            } else {
                theory::borel_pmf(c, k).unwrap()
            }
        });
        assert!(tv < 0.02, "tv {tv}");
    }
}

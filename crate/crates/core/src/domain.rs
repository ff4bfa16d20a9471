//! Discrete domains: general connected graphs and the 4-connected grid.
//!
//! Distances are unweighted shortest-path lengths. On a [`GridDomain`] that is
//! the L1 (Manhattan) distance between cells, which the grid computes directly.

use std::collections::VecDeque;

use crate::error::{Error, Result};

pub type VertexId = usize;

/// Anything the gradually varied machinery can run on.
pub trait Domain {
    fn graph(&self) -> &DomainGraph;

    fn vertex_count(&self) -> usize {
        self.graph().vertex_count()
    }

    /// Shortest-path distance from `source` to every vertex.
    fn distances_from(&self, source: VertexId) -> Result<Vec<usize>> {
        self.graph().bfs(source)
    }

    fn distance(&self, a: VertexId, b: VertexId) -> Result<usize> {
        self.graph().distance(a, b)
    }
}

/// Connected, undirected, unweighted graph without self-loops.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DomainGraph {
    adjacency: Vec<Vec<VertexId>>,
}

impl DomainGraph {
    /// Builds a graph from an edge list. Duplicate edges are collapsed;
    /// self-loops, out-of-range ids and disconnected graphs are rejected.
    pub fn new(vertex_count: usize, edges: &[(VertexId, VertexId)]) -> Result<Self> {
        if vertex_count == 0 {
            return Err(Error::EmptyGraph);
        }
        let mut adjacency = vec![Vec::new(); vertex_count];
        for &(a, b) in edges {
            for v in [a, b] {
                if v >= vertex_count {
                    return Err(Error::InvalidVertex { vertex: v, count: vertex_count });
                }
            }
            if a == b {
                return Err(Error::SelfLoop(a, b));
            }
            adjacency[a].push(b);
            adjacency[b].push(a);
        }
        for list in &mut adjacency {
            list.sort_unstable();
            list.dedup();
        }
        let graph = Self { adjacency };
        let reach = graph.bfs(0)?;
        if let Some(v) = reach.iter().position(|&d| d == usize::MAX) {
            return Err(Error::Disconnected(v));
        }
        Ok(graph)
    }

    pub fn vertex_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn neighbors(&self, v: VertexId) -> &[VertexId] {
        &self.adjacency[v]
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// Every edge once, as `(a, b)` with `a < b`, in ascending order.
    pub fn edges(&self) -> impl Iterator<Item = (VertexId, VertexId)> + '_ {
        self.adjacency
            .iter()
            .enumerate()
            .flat_map(|(a, list)| list.iter().filter(move |&&b| b > a).map(move |&b| (a, b)))
    }

    pub fn check_vertex(&self, v: VertexId) -> Result<()> {
        if v < self.vertex_count() {
            Ok(())
        } else {
            Err(Error::InvalidVertex { vertex: v, count: self.vertex_count() })
        }
    }

    /// Breadth-first distances from `source`; unreachable vertices get `usize::MAX`
    /// (only possible while the constructor is still validating connectivity).
    pub fn bfs(&self, source: VertexId) -> Result<Vec<usize>> {
        self.check_vertex(source)?;
        let mut dist = vec![usize::MAX; self.vertex_count()];
        let mut queue = VecDeque::new();
        dist[source] = 0;
        queue.push_back(source);
        while let Some(u) = queue.pop_front() {
            let next = dist[u] + 1;
            for &w in &self.adjacency[u] {
                if dist[w] == usize::MAX {
                    dist[w] = next;
                    queue.push_back(w);
                }
            }
        }
        Ok(dist)
    }

    pub fn distance(&self, a: VertexId, b: VertexId) -> Result<usize> {
        self.check_vertex(b)?;
        if a == b {
            self.check_vertex(a)?;
            return Ok(0);
        }
        Ok(self.bfs(a)?[b])
    }
}

impl Domain for DomainGraph {
    fn graph(&self) -> &DomainGraph {
        self
    }
}

/// Rectangular grid with 4-neighbour connectivity, row-major vertex ids.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GridDomain {
    rows: usize,
    cols: usize,
    graph: DomainGraph,
}

impl GridDomain {
    pub fn new(rows: usize, cols: usize) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::ZeroDimension { rows, cols });
        }
        let mut edges = Vec::with_capacity(2 * rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                let v = i * cols + j;
                if j + 1 < cols {
                    edges.push((v, v + 1));
                }
                if i + 1 < rows {
                    edges.push((v, v + cols));
                }
            }
        }
        Ok(Self { rows, cols, graph: DomainGraph::new(rows * cols, &edges)? })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn vertex(&self, row: usize, col: usize) -> VertexId {
        debug_assert!(row < self.rows && col < self.cols);
        row * self.cols + col
    }

    pub fn cell(&self, v: VertexId) -> (usize, usize) {
        (v / self.cols, v % self.cols)
    }
}

impl Domain for GridDomain {
    fn graph(&self) -> &DomainGraph {
        &self.graph
    }

    fn distances_from(&self, source: VertexId) -> Result<Vec<usize>> {
        self.graph.check_vertex(source)?;
        let (si, sj) = self.cell(source);
        Ok((0..self.rows * self.cols)
            .map(|v| {
                let (i, j) = self.cell(v);
                i.abs_diff(si) + j.abs_diff(sj)
            })
            .collect())
    }

    fn distance(&self, a: VertexId, b: VertexId) -> Result<usize> {
        self.graph.check_vertex(a)?;
        self.graph.check_vertex(b)?;
        let (ai, aj) = self.cell(a);
        let (bi, bj) = self.cell(b);
        Ok(ai.abs_diff(bi) + aj.abs_diff(bj))
    }
}

/// Convenience wrapper matching the usual call shape.
pub fn build_grid(rows: usize, cols: usize) -> Result<GridDomain> {
    GridDomain::new(rows, cols)
}

/// Shortest-path distance between two vertices of any domain.
pub fn graph_distance<D: Domain + ?Sized>(domain: &D, a: VertexId, b: VertexId) -> Result<usize> {
    domain.distance(a, b)
}

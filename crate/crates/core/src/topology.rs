// Copyright 2026 The repnet Authors
// SPDX-License-Identifier: Apache-2.0

//! Network generators, edge-list files, and union-find connectivity over
//! live-edge subsets.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::{LinkModel, Topology, DEFAULT_ATTENUATION_PER_KM};

/// Disjoint sets over nodes that also count the edges merged into each set.
#[derive(Debug, Clone)]
pub struct UnionFind {
    parent: Vec<usize>,
    rank: Vec<u8>,
    edges: Vec<usize>,
    largest: usize,
    total: usize,
}

impl UnionFind {
    pub fn new(nodes: usize) -> Self {
        UnionFind {
            parent: (0..nodes).collect(),
            rank: vec![0; nodes],
            edges: vec![0; nodes],
            largest: 0,
            total: 0,
        }
    }

    pub fn reset(&mut self) {
        for (i, p) in self.parent.iter_mut().enumerate() {
            *p = i;
        }
        self.rank.fill(0);
        self.edges.fill(0);
        self.largest = 0;
        self.total = 0;
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        let mut root = x;
        while self.parent[root] != root {
            root = self.parent[root];
        }
        while self.parent[x] != root {
            let next = self.parent[x];
            self.parent[x] = root;
            x = next;
        }
        root
    }

    /// Merges the endpoints of an edge and counts the edge in their component.
    pub fn add_edge(&mut self, u: usize, v: usize) -> usize {
        let (mut a, mut b) = (self.find(u), self.find(v));
        if a != b {
            if self.rank[a] < self.rank[b] {
                std::mem::swap(&mut a, &mut b);
            }
            self.parent[b] = a;
            if self.rank[a] == self.rank[b] {
                self.rank[a] += 1;
            }
            self.edges[a] += self.edges[b];
            self.edges[b] = 0;
        }
        self.edges[a] += 1;
        self.total += 1;
        self.largest = self.largest.max(self.edges[a]);
        a
    }

    pub fn connected(&mut self, u: usize, v: usize) -> bool {
        self.find(u) == self.find(v)
    }

    /// Edge count of the component containing `x`.
    pub fn component_edges(&mut self, x: usize) -> usize {
        let r = self.find(x);
        self.edges[r]
    }

    pub fn largest_component_edges(&self) -> usize {
        self.largest
    }

    pub fn total_edges(&self) -> usize {
        self.total
    }

    /// Sum of the per-root counters; always equals [`Self::total_edges`].
    pub fn counted_edges(&self) -> usize {
        self.parent
            .iter()
            .enumerate()
            .filter(|&(i, &p)| i == p)
            .map(|(i, _)| self.edges[i])
            .sum()
    }
}

fn check_lattice(width: usize, height: usize) -> Result<()> {
    if width < 2 || height < 2 {
        return Err(Error::invalid("lattice", format!("{width}x{height} is degenerate; both sides must be >= 2")));
    }
    Ok(())
}

/// Open-boundary `width x height` grid with nearest-neighbour edges.
/// Node `(x, y)` has index `y * width + x`.
pub fn square_lattice(width: usize, height: usize) -> Result<Topology> {
    check_lattice(width, height)?;
    Topology::new(width * height, grid_edges(width, height, false))
}

/// The square grid plus the `(x, y) - (x+1, y+1)` diagonal of every cell,
/// giving coordination number 6 away from the boundary.
pub fn triangular_lattice(width: usize, height: usize) -> Result<Topology> {
    check_lattice(width, height)?;
    Topology::new(width * height, grid_edges(width, height, true))
}

fn grid_edges(width: usize, height: usize, diagonals: bool) -> Vec<(usize, usize)> {
    let id = |x: usize, y: usize| y * width + x;
    let mut edges = Vec::with_capacity(3 * width * height);
    for y in 0..height {
        for x in 0..width {
            if x + 1 < width {
                edges.push((id(x, y), id(x + 1, y)));
            }
            if y + 1 < height {
                edges.push((id(x, y), id(x, y + 1)));
            }
            if diagonals && x + 1 < width && y + 1 < height {
                edges.push((id(x, y), id(x + 1, y + 1)));
            }
        }
    }
    edges
}

/// Indexing for the triangulated pyramid: row `i` (1-based, apex first)
/// holds `i` nodes at positions `1..=i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Pyramid {
    layers: usize,
}

impl Pyramid {
    pub fn new(layers: usize) -> Result<Self> {
        if layers < 2 {
            return Err(Error::invalid("n_layers", format!("{layers} layers; at least 2 are required")));
        }
        Ok(Pyramid { layers })
    }

    pub fn layers(&self) -> usize {
        self.layers
    }

    pub fn node(&self, row: usize, position: usize) -> usize {
        debug_assert!(row >= 1 && row <= self.layers && position >= 1 && position <= row);
        row * (row - 1) / 2 + position - 1
    }

    pub fn apex(&self) -> usize {
        0
    }

    /// Bottom-row node at position `x`, counted from the left corner.
    pub fn bottom(&self, x: usize) -> Result<usize> {
        if x == 0 || x > self.layers {
            return Err(Error::invalid("x", format!("bottom position {x} outside 1..={}", self.layers)));
        }
        Ok(self.node(self.layers, x))
    }

    /// Middle bottom position (left of middle for even layer counts).
    pub fn center_position(&self) -> usize {
        self.layers.div_ceil(2)
    }

    pub fn bottom_center(&self) -> usize {
        self.node(self.layers, self.center_position())
    }

    pub fn topology(&self) -> Topology {
        let n = self.layers;
        let mut edges = Vec::with_capacity(3 * n * (n - 1) / 2);
        for row in 1..=n {
            for pos in 1..=row {
                if pos < row {
                    edges.push((self.node(row, pos), self.node(row, pos + 1)));
                }
                if row < n {
                    edges.push((self.node(row, pos), self.node(row + 1, pos)));
                    edges.push((self.node(row, pos), self.node(row + 1, pos + 1)));
                }
            }
        }
        Topology::new(n * (n + 1) / 2, edges).expect("pyramid construction is valid")
    }
}

pub fn pyramid(layers: usize) -> Result<Topology> {
    Ok(Pyramid::new(layers)?.topology())
}

/// Linear repeater chain with `links` elementary links.
pub fn chain(links: usize) -> Result<Topology> {
    if links == 0 {
        return Err(Error::invalid("M", "a chain needs at least one link"));
    }
    Topology::new(links + 1, (0..links).map(|i| (i, i + 1)).collect())
}

/// How lengths in an edge-list file turn into probabilities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeListOptions {
    pub alpha: f64,
    pub extra_loss: f64,
    pub n_par: u32,
}

impl Default for EdgeListOptions {
    fn default() -> Self {
        EdgeListOptions {
            alpha: DEFAULT_ATTENUATION_PER_KM,
            extra_loss: 1.0,
            n_par: 1,
        }
    }
}

#[derive(Clone, Copy, PartialEq)]
enum EdgeStyle {
    Length,
    Probability,
}

/// Parses the plain-text edge-list format:
///
/// ```text
/// nodes 3
/// 0 1 22.0      # length in km
/// 1 2 p=0.5     # or an explicit probability (not both styles in one file)
/// ```
pub fn parse_edge_list(text: &str, options: &EdgeListOptions) -> Result<(Topology, LinkModel)> {
    let mut node_count: Option<usize> = None;
    let mut style: Option<EdgeStyle> = None;
    let mut edges = Vec::new();
    let mut values = Vec::new();
    let err = |line: usize, message: String| Error::Parse { line, message };

    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        let Some(nodes) = node_count else {
            match fields.as_slice() {
                ["nodes", n] => {
                    let n = n
                        .parse::<usize>()
                        .ok()
                        .filter(|&n| n > 0)
                        .ok_or_else(|| err(line_no, format!("invalid node count `{n}`")))?;
                    node_count = Some(n);
                    continue;
                }
                _ => return Err(err(line_no, "expected `nodes <N>` header".into())),
            }
        };
        let [u, v, value] = fields.as_slice() else {
            return Err(err(line_no, format!("expected `u v <length_km>` or `u v p=<prob>`, got `{line}`")));
        };
        let parse_node = |s: &str| {
            s.parse::<usize>()
                .map_err(|_| err(line_no, format!("invalid node id `{s}`")))
        };
        let (u, v) = (parse_node(u)?, parse_node(v)?);
        if u == v {
            return Err(err(line_no, format!("self-loop on node {u}")));
        }
        if u >= nodes || v >= nodes {
            return Err(err(line_no, format!("node id out of range [0, {nodes})")));
        }
        let (this_style, number) = match value.strip_prefix("p=") {
            Some(p) => (EdgeStyle::Probability, p),
            None => (EdgeStyle::Length, *value),
        };
        if style.is_some_and(|s| s != this_style) {
            return Err(err(line_no, "mixed length and probability styles".into()));
        }
        style = Some(this_style);
        let number: f64 = number
            .parse()
            .map_err(|_| err(line_no, format!("invalid number `{number}`")))?;
        let p = match this_style {
            EdgeStyle::Probability => {
                if !(number > 0.0 && number <= 1.0) {
                    return Err(err(line_no, format!("probability {number} not in (0, 1]")));
                }
                number
            }
            EdgeStyle::Length => crate::model::effective_probability(number, options.alpha, options.extra_loss, options.n_par)
                .map_err(|e| err(line_no, e.to_string()))?,
        };
        edges.push((u, v));
        values.push(p);
    }
    let nodes = node_count.ok_or_else(|| err(0, "missing `nodes <N>` header".into()))?;
    Ok((Topology::new(nodes, edges)?, LinkModel::from_probabilities(values)?))
}

pub fn load_edge_list(path: impl AsRef<Path>, options: &EdgeListOptions) -> Result<(Topology, LinkModel)> {
    let text = std::fs::read_to_string(path)?;
    parse_edge_list(&text, options)
}

/// Serializes a topology in the probability style accepted by [`parse_edge_list`].
pub fn format_edge_list(topology: &Topology, links: &LinkModel) -> String {
    let mut out = format!("nodes {}\n", topology.node_count());
    for (i, &(u, v)) in topology.edges().iter().enumerate() {
        let _ = writeln!(out, "{u} {v} p={}", links.probability(i));
    }
    out
}

/// Largest number of live edges in one connected component.
pub fn largest_cluster_edges(live_edges: &[usize], topology: &Topology) -> usize {
    let mut uf = UnionFind::new(topology.node_count());
    for &e in live_edges {
        let (u, v) = topology.edge(e);
        uf.add_edge(u, v);
    }
    uf.largest_component_edges()
}

/// Whether `a` and `b` are joined by a path of live edges.
pub fn connected(live_edges: &[usize], topology: &Topology, a: usize, b: usize) -> bool {
    if a == b {
        return true;
    }
    let mut uf = UnionFind::new(topology.node_count());
    for &e in live_edges {
        let (u, v) = topology.edge(e);
        uf.add_edge(u, v);
    }
    uf.connected(a, b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn union_find_counts() {
        let mut uf = UnionFind::new(6);
        uf.add_edge(0, 1);
        uf.add_edge(1, 2);
        uf.add_edge(2, 0);
        uf.add_edge(3, 4);
        assert_eq!(uf.largest_component_edges(), 3);
        assert_eq!(uf.component_edges(4), 1);
        assert_eq!(uf.counted_edges(), 4);
        assert!(uf.connected(0, 2));
        assert!(!uf.connected(0, 3));
        let r = uf.find(2);
        assert_eq!(uf.find(2), r);
        uf.reset();
        assert_eq!(uf.total_edges(), 0);
        assert!(!uf.connected(0, 1));
    }

    #[test]
    fn square_counts() {
        let t = square_lattice(2, 2).unwrap();
        assert_eq!((t.node_count(), t.edge_count()), (4, 4));
        let big = square_lattice(500, 500).unwrap();
        assert_eq!(big.edge_count(), 499_000);
        assert!(square_lattice(1, 5).is_err());
    }

    #[test]
    fn triangular_counts() {
        for (w, h) in [(2, 2), (3, 5), (10, 7)] {
            let sq = square_lattice(w, h).unwrap().edge_count();
            let tri = triangular_lattice(w, h).unwrap();
            assert_eq!(tri.edge_count(), sq + (w - 1) * (h - 1));
        }
        let t = triangular_lattice(5, 5).unwrap();
        assert_eq!(t.degree(2 * 5 + 2), 6);
    }

    #[test]
    fn pyramid_counts() {
        let t = pyramid(2).unwrap();
        assert_eq!((t.node_count(), t.edge_count()), (3, 3));
        let t = pyramid(5).unwrap();
        assert_eq!((t.node_count(), t.edge_count()), (15, 30));
        assert!(pyramid(1).is_err());
        let p = Pyramid::new(5).unwrap();
        assert_eq!(p.bottom_center(), p.bottom(3).unwrap());
        assert!(p.bottom(6).is_err());
    }

    #[test]
    fn pyramid_mirror_is_automorphism() {
        for layers in 2..8 {
            let p = Pyramid::new(layers).unwrap();
            let t = p.topology();
            let mut mirror = vec![0; t.node_count()];
            for row in 1..=layers {
                for pos in 1..=row {
                    mirror[p.node(row, pos)] = p.node(row, row + 1 - pos);
                }
            }
            let normalize = |(u, v): (usize, usize)| (u.min(v), u.max(v));
            let mut original: Vec<_> = t.edges().iter().map(|&e| normalize(e)).collect();
            let mut mapped: Vec<_> = t.edges().iter().map(|&(u, v)| normalize((mirror[u], mirror[v]))).collect();
            original.sort_unstable();
            mapped.sort_unstable();
            assert_eq!(original, mapped);
            assert_eq!(mirror[p.apex()], p.apex());
            for x in 1..=layers {
                assert_eq!(mirror[p.bottom(x).unwrap()], p.bottom(layers + 1 - x).unwrap());
            }
        }
    }

    #[test]
    fn chain_shape() {
        let t = chain(1).unwrap();
        assert_eq!((t.node_count(), t.edge_count()), (2, 1));
        let t = chain(10).unwrap();
        assert_eq!(t.node_count(), 11);
        assert_eq!(t.degree(0), 1);
        assert_eq!(t.degree(10), 1);
        assert!((1..10).all(|i| t.degree(i) == 2));
    }

    #[test]
    fn edge_list_parsing() {
        let opts = EdgeListOptions::default();
        let (t, l) = parse_edge_list("nodes 2\n0 1 p=0.5\n", &opts).unwrap();
        assert_eq!(t.edge_count(), 1);
        assert_eq!(l.probability(0), 0.5);

        let (_, l) = parse_edge_list("# a comment\nnodes 2 # header\n0 1 22.0\n", &opts).unwrap();
        assert!((l.probability(0) - (-1.0f64).exp()).abs() < 1e-15);

        let e = parse_edge_list("nodes 2\n0 0 p=0.5\n", &opts).unwrap_err();
        assert!(matches!(e, Error::Parse { line: 2, .. }), "{e}");
        let e = parse_edge_list("nodes 3\n0 1 p=0.5\n1 2 10\n", &opts).unwrap_err();
        assert!(matches!(e, Error::Parse { line: 3, .. }), "{e}");
        let e = parse_edge_list("nodes 2\n0 5 p=0.5\n", &opts).unwrap_err();
        assert!(matches!(e, Error::Parse { line: 2, .. }));
        assert!(parse_edge_list("0 1 p=0.5\n", &opts).is_err());
        assert!(parse_edge_list("nodes 2\n0 1\n", &opts).is_err());
        assert!(parse_edge_list("nodes 2\n0 1 p=1.5\n", &opts).is_err());
    }

    #[test]
    fn edge_list_round_trip() {
        let t = pyramid(4).unwrap();
        let l = LinkModel::homogeneous(t.edge_count(), 0.25).unwrap();
        let (t2, l2) = parse_edge_list(&format_edge_list(&t, &l), &EdgeListOptions::default()).unwrap();
        assert_eq!(t, t2);
        assert_eq!(l, l2);
    }

    #[test]
    fn cluster_examples() {
        let t = Topology::new(6, vec![(0, 1), (1, 2), (2, 0), (3, 4), (4, 5), (5, 3)]).unwrap();
        assert_eq!(largest_cluster_edges(&[], &t), 0);
        assert!(!connected(&[], &t, 0, 1));
        assert!(connected(&[], &t, 2, 2));
        assert_eq!(largest_cluster_edges(&t.all_edge_indices(), &t), 3);
        let sq = square_lattice(4, 3).unwrap();
        let all = sq.all_edge_indices();
        assert_eq!(largest_cluster_edges(&all, &sq), sq.edge_count());
        for a in 0..sq.node_count() {
            for b in 0..sq.node_count() {
                assert!(connected(&all, &sq, a, b));
            }
        }
    }
}

use super::{Grid, Rect};

/// Disjoint-set forest with path halving and union by size.
#[derive(Debug, Clone)]
pub struct UnionFind {
    parent: Vec<u32>,
    size: Vec<u32>,
}

impl UnionFind {
    pub fn new(len: usize) -> Self {
        assert!(len <= u32::MAX as usize, "union-find capacity exceeded");
        UnionFind {
            parent: (0..len as u32).collect(),
            size: vec![1; len],
        }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] as usize != x {
            let grand = self.parent[self.parent[x] as usize];
            self.parent[x] = grand;
            x = grand as usize;
        }
        x
    }

    /// Returns the new root.
    pub fn union(&mut self, a: usize, b: usize) -> usize {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return ra;
        }
        if self.size[ra] < self.size[rb] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra as u32;
        self.size[ra] += self.size[rb];
        ra
    }

    pub fn set_size(&mut self, x: usize) -> usize {
        let r = self.find(x);
        self.size[r] as usize
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Cluster {
    pub size: usize,
    pub bbox: Rect,
}

impl Cluster {
    /// Chebyshev diameter of the cell set.
    pub fn linf_diameter(&self) -> usize {
        (self.bbox.w.max(self.bbox.h) - 1) as usize
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct ClusterSummary {
    pub cluster_count: usize,
    pub max_linf_diameter: usize,
    /// Ordered by each cluster's first cell in row-major order.
    pub clusters: Vec<Cluster>,
}

/// Labels occupied cells into 4-connected clusters.
pub fn occupied_clusters(g: &Grid) -> ClusterSummary {
    let w = g.width();
    let occ = g.occupied();
    let mut uf = UnionFind::new(g.area());
    for (x, y) in occ.iter_ones() {
        let i = y * w + x;
        if x > 0 && occ.get(x - 1, y) {
            uf.union(i, i - 1);
        }
        if y > 0 && occ.get(x, y - 1) {
            uf.union(i, i - w);
        }
    }

    // root -> slot in `clusters`
    let mut slot = std::collections::HashMap::new();
    let mut clusters: Vec<Cluster> = Vec::new();
    let mut extents: Vec<(i64, i64, i64, i64)> = Vec::new();
    for (x, y) in occ.iter_ones() {
        let r = uf.find(y * w + x);
        let (x, y) = (x as i64, y as i64);
        let k = *slot.entry(r).or_insert_with(|| {
            clusters.push(Cluster {
                size: 0,
                bbox: Rect::EMPTY,
            });
            extents.push((x, y, x, y));
            clusters.len() - 1
        });
        clusters[k].size += 1;
        let e = &mut extents[k];
        e.0 = e.0.min(x);
        e.1 = e.1.min(y);
        e.2 = e.2.max(x);
        e.3 = e.3.max(y);
    }
    for (c, &(xa, ya, xb, yb)) in clusters.iter_mut().zip(&extents) {
        c.bbox = Rect::from_corners(xa, ya, xb, yb);
    }
    let max_linf_diameter = clusters.iter().map(Cluster::linf_diameter).max().unwrap_or(0);
    ClusterSummary {
        cluster_count: clusters.len(),
        max_linf_diameter,
        clusters,
    }
}

//! Unimodality spanning forest.
//!
//! Candidate edges between subcluster centers are visited in ascending Euclidean
//! distance. An edge is tested only when its endpoints lie in different trees, and a
//! unimodal verdict merges the two trees. Each resulting tree is one final cluster.

use ndarray::{Array2, Axis};
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::diptest::DipPValue;
use crate::error::{Error, Result};
use crate::overcluster::{sq_dist, Overclustering};
use crate::pairtest::{unimodal_pair, PairTestConfig, PairTestRecord, Subcluster, Verdict};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub i: usize,
    pub j: usize,
    pub weight: f64,
}

/// All center pairs with `i < j`, sorted by weight, ties by `(i, j)`.
#[derive(Clone, Debug, PartialEq)]
pub struct CenterGraph {
    k: usize,
    edges: Vec<Edge>,
}

impl CenterGraph {
    pub fn new(centers: &Array2<f64>) -> Self {
        let k = centers.nrows();
        let mut edges = Vec::with_capacity(k * k.saturating_sub(1) / 2);
        for i in 0..k {
            for j in i + 1..k {
                let weight = sq_dist(centers.row(i), centers.row(j)).sqrt();
                edges.push(Edge { i, j, weight });
            }
        }
        edges.sort_by(|a, b| {
            a.weight
                .total_cmp(&b.weight)
                .then(a.i.cmp(&b.i))
                .then(a.j.cmp(&b.j))
        });
        Self { k, edges }
    }

    pub fn vertex_count(&self) -> usize {
        self.k
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }
}

/// Disjoint sets with path compression and union by rank.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnionFind {
    parent: Vec<usize>,
    rank: Vec<u8>,
    components: usize,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
            rank: vec![0; n],
            components: n,
        }
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn find(&mut self, x: usize) -> usize {
        let mut root = x;
        while self.parent[root] != root {
            root = self.parent[root];
        }
        let mut cur = x;
        while self.parent[cur] != root {
            let next = self.parent[cur];
            self.parent[cur] = root;
            cur = next;
        }
        root
    }

    /// Merges the sets of `a` and `b`; `false` if they were already joined.
    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        let (hi, lo) = if self.rank[ra] >= self.rank[rb] {
            (ra, rb)
        } else {
            (rb, ra)
        };
        self.parent[lo] = hi;
        if self.rank[hi] == self.rank[lo] {
            self.rank[hi] += 1;
        }
        self.components -= 1;
        true
    }
}

/// Source of pair verdicts for the forest traversal.
pub trait PairVerdict {
    fn test_pair(&mut self, i: usize, j: usize, weight: f64) -> Result<PairTestRecord>;
}

/// Verdicts from the balanced dip test on the data of an overclustering.
pub struct DipPairVerdict<'a> {
    subclusters: Vec<Array2<f64>>,
    cfg: PairTestConfig,
    pvalue: &'a dyn DipPValue,
}

impl<'a> DipPairVerdict<'a> {
    pub fn new(
        oc: &Overclustering,
        ds: &Dataset,
        cfg: PairTestConfig,
        pvalue: &'a dyn DipPValue,
    ) -> Result<Self> {
        cfg.validate()?;
        if oc.assignments.len() != ds.len() {
            return Err(Error::LengthMismatch(oc.assignments.len(), ds.len()));
        }
        let subclusters = oc
            .members()
            .iter()
            .map(|rows| {
                if rows.len() < 2 {
                    return Err(Error::TooFewPoints(rows.len()));
                }
                Ok(ds.points().select(Axis(0), rows))
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            subclusters,
            cfg,
            pvalue,
        })
    }
}

impl PairVerdict for DipPairVerdict<'_> {
    fn test_pair(&mut self, i: usize, j: usize, _weight: f64) -> Result<PairTestRecord> {
        unimodal_pair(
            Subcluster {
                id: i,
                points: self.subclusters[i].view(),
            },
            Subcluster {
                id: j,
                points: self.subclusters[j].view(),
            },
            &self.cfg,
            self.pvalue,
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestedEdge {
    pub edge: Edge,
    pub record: PairTestRecord,
}

#[derive(Clone, Debug, PartialEq)]
pub struct UnimodalityForest {
    pub accepted: Vec<TestedEdge>,
    pub rejected: Vec<TestedEdge>,
    pub trees: UnionFind,
}

impl UnimodalityForest {
    pub fn k(&self) -> usize {
        self.trees.components()
    }

    pub fn vertex_count(&self) -> usize {
        self.trees.len()
    }

    pub fn tests_performed(&self) -> usize {
        self.accepted.len() + self.rejected.len()
    }
}

/// Lazy Kruskal traversal over `graph`. Same-tree edges are skipped untested.
pub fn build_forest_with<V: PairVerdict + ?Sized>(
    graph: &CenterGraph,
    verdicts: &mut V,
) -> Result<UnimodalityForest> {
    let mut trees = UnionFind::new(graph.vertex_count());
    let mut accepted = Vec::new();
    let mut rejected = Vec::new();
    for &edge in graph.edges() {
        if trees.components() == 1 {
            break;
        }
        if trees.find(edge.i) == trees.find(edge.j) {
            continue;
        }
        let record = verdicts.test_pair(edge.i, edge.j, edge.weight)?;
        if record.verdict == Verdict::Unimodal {
            trees.union(edge.i, edge.j);
            accepted.push(TestedEdge { edge, record });
        } else {
            rejected.push(TestedEdge { edge, record });
        }
    }
    Ok(UnimodalityForest {
        accepted,
        rejected,
        trees,
    })
}

/// Builds the forest over `oc` with the balanced dip pair test.
pub fn build_forest(
    oc: &Overclustering,
    ds: &Dataset,
    cfg: PairTestConfig,
    pvalue: &dyn DipPValue,
) -> Result<UnimodalityForest> {
    let mut verdicts = DipPairVerdict::new(oc, ds, cfg, pvalue)?;
    build_forest_with(&CenterGraph::new(&oc.centers), &mut verdicts)
}

/// Final partition derived from the forest.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusteringResult {
    pub k: usize,
    /// Final cluster id of every point.
    pub assignments: Vec<usize>,
    /// Final cluster id of every subcluster.
    pub subcluster_labels: Vec<usize>,
}

impl ClusteringResult {
    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &a in &self.assignments {
            sizes[a] += 1;
        }
        sizes
    }
}

/// Labels every point with its tree. Tree ids are numbered in order of their smallest
/// subcluster id.
pub fn extract_clusters(forest: &UnimodalityForest, oc: &Overclustering) -> ClusteringResult {
    let mut trees = forest.trees.clone();
    let mut root_label = vec![usize::MAX; trees.len()];
    let mut next = 0;
    let subcluster_labels: Vec<usize> = (0..trees.len())
        .map(|v| {
            let r = trees.find(v);
            if root_label[r] == usize::MAX {
                root_label[r] = next;
                next += 1;
            }
            root_label[r]
        })
        .collect();
    ClusteringResult {
        k: next,
        assignments: oc
            .assignments
            .iter()
            .map(|&a| subcluster_labels[a])
            .collect(),
        subcluster_labels,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use proptest::prelude::*;

    struct Fixed(Verdict, usize);

    impl PairVerdict for Fixed {
        fn test_pair(&mut self, i: usize, j: usize, _w: f64) -> Result<PairTestRecord> {
            self.1 += 1;
            Ok(PairTestRecord::fixed(i, j, self.0))
        }
    }

    fn oc_from(centers: Array2<f64>, assignments: Vec<usize>) -> Overclustering {
        Overclustering {
            centers,
            assignments,
            sse: 0.0,
        }
    }

    #[test]
    fn single_vertex_has_no_edges() {
        assert!(CenterGraph::new(&array![[1.0, 2.0]]).edges().is_empty());
    }

    #[test]
    fn pythagorean_weights() {
        let g = CenterGraph::new(&array![[0.0, 0.0], [3.0, 0.0], [0.0, 4.0]]);
        let w: Vec<f64> = g.edges().iter().map(|e| e.weight).collect();
        assert_eq!(w, vec![3.0, 4.0, 5.0]);
    }

    #[test]
    fn equal_weights_ordered_lexicographically() {
        let g = CenterGraph::new(&array![[0.0], [1.0], [2.0], [3.0]]);
        let pairs: Vec<(usize, usize)> = g.edges()[..3].iter().map(|e| (e.i, e.j)).collect();
        assert_eq!(pairs, vec![(0, 1), (1, 2), (2, 3)]);
    }

    #[test]
    fn union_find_contract() {
        let mut uf = UnionFind::new(5);
        assert!(uf.union(0, 1));
        assert!(uf.union(3, 4));
        assert!(!uf.union(1, 0));
        assert_eq!(uf.components(), 3);
        assert_eq!(uf.find(0), uf.find(1));
        assert_ne!(uf.find(0), uf.find(3));
        let r = uf.find(4);
        assert_eq!(uf.find(r), r);
    }

    #[test]
    fn all_multimodal_keeps_every_vertex() {
        let g = CenterGraph::new(&array![[0.0], [1.0], [5.0], [9.0]]);
        let mut stub = Fixed(Verdict::Multimodal, 0);
        let f = build_forest_with(&g, &mut stub).unwrap();
        assert_eq!(f.k(), 4);
        assert!(f.accepted.is_empty());
        assert_eq!(stub.1, 6);
    }

    #[test]
    fn all_unimodal_uses_k_minus_one_tests() {
        let g = CenterGraph::new(&array![[0.0], [1.0], [5.0], [9.0], [2.0]]);
        let mut stub = Fixed(Verdict::Unimodal, 0);
        let f = build_forest_with(&g, &mut stub).unwrap();
        assert_eq!(f.k(), 1);
        assert_eq!(f.accepted.len(), 4);
        assert_eq!(stub.1, 4);
    }

    #[test]
    fn extraction_identity_and_full_merge() {
        let oc = oc_from(array![[0.0], [4.0], [8.0]], vec![2, 0, 1, 2, 0]);
        let g = CenterGraph::new(&oc.centers);

        let none = build_forest_with(&g, &mut Fixed(Verdict::Multimodal, 0)).unwrap();
        let res = extract_clusters(&none, &oc);
        assert_eq!(res.k, 3);
        assert_eq!(res.assignments, oc.assignments);

        let all = build_forest_with(&g, &mut Fixed(Verdict::Unimodal, 0)).unwrap();
        let res = extract_clusters(&all, &oc);
        assert_eq!(res.k, 1);
        assert!(res.assignments.iter().all(|&a| a == 0));
        assert_eq!(res.sizes(), vec![5]);
    }

    #[test]
    fn labels_follow_smallest_subcluster_id() {
        // Only the pair (1, 2) merges; subcluster 0 stays alone.
        struct Only12;
        impl PairVerdict for Only12 {
            fn test_pair(&mut self, i: usize, j: usize, _w: f64) -> Result<PairTestRecord> {
                let v = if (i, j) == (1, 2) {
                    Verdict::Unimodal
                } else {
                    Verdict::Multimodal
                };
                Ok(PairTestRecord::fixed(i, j, v))
            }
        }
        let oc = oc_from(array![[10.0], [0.0], [1.0]], vec![2, 1, 0]);
        let f = build_forest_with(&CenterGraph::new(&oc.centers), &mut Only12).unwrap();
        let res = extract_clusters(&f, &oc);
        assert_eq!(res.subcluster_labels, vec![0, 1, 1]);
        assert_eq!(res.assignments, vec![1, 1, 0]);
    }

    /// Records every tested pair and fails if a same-tree pair is ever tested.
    struct Auditor {
        uf: UnionFind,
        rule: fn(usize, usize) -> bool,
        tested: usize,
    }

    impl PairVerdict for Auditor {
        fn test_pair(&mut self, i: usize, j: usize, _w: f64) -> Result<PairTestRecord> {
            assert_ne!(self.uf.find(i), self.uf.find(j), "same-tree pair tested");
            self.tested += 1;
            let v = if (self.rule)(i, j) {
                self.uf.union(i, j);
                Verdict::Unimodal
            } else {
                Verdict::Multimodal
            };
            Ok(PairTestRecord::fixed(i, j, v))
        }
    }

    proptest! {
        #[test]
        fn test_economy_and_acyclicity(
            raw in proptest::collection::vec((-50i32..50, -50i32..50), 1..25)
        ) {
            let k = raw.len();
            let centers = Array2::from_shape_fn((k, 2), |(r, c)| {
                f64::from(if c == 0 { raw[r].0 } else { raw[r].1 })
            });
            let g = CenterGraph::new(&centers);
            let mut audit = Auditor {
                uf: UnionFind::new(k),
                rule: |i, j| (i * 7 + j * 3) % 4 != 0,
                tested: 0,
            };
            let f = build_forest_with(&g, &mut audit).unwrap();
            prop_assert!(audit.tested <= k * (k - 1) / 2);
            prop_assert_eq!(f.k(), k - f.accepted.len());
            prop_assert!(f.accepted.iter().all(|e| e.record.verdict == Verdict::Unimodal));
            prop_assert!(f.rejected.iter().all(|e| e.record.verdict == Verdict::Multimodal));
            let w: Vec<f64> = g.edges().iter().map(|e| e.weight).collect();
            prop_assert!(w.windows(2).all(|p| p[0] <= p[1]));
        }
    }
}

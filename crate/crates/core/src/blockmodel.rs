//! Vertices, dyads, the design matrix and sufficient statistics of a
//! beta-stochastic blockmodel `M(n1, ..., nk)`.
//!
//! Blocks and vertices are 1-based throughout the public surface. Dyads are
//! ordered lexicographically on their canonical `((i,v),(j,w))` endpoints,
//! which is also the column order of the design matrix.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;

/// Block sizes `(n1, ..., nk)` of a model.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct BlockSpec {
    sizes: Vec<usize>,
}

impl BlockSpec {
    pub fn new(sizes: Vec<usize>) -> Result<Self> {
        if sizes.is_empty() {
            return Err(Error::InvalidSpec("at least one block is required".into()));
        }
        if let Some(pos) = sizes.iter().position(|&s| s == 0) {
            return Err(Error::InvalidSpec(format!("block {} has size 0", pos + 1)));
        }
        if sizes.iter().sum::<usize>() < 2 {
            return Err(Error::InvalidSpec("the model needs at least two vertices".into()));
        }
        Ok(Self { sizes })
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn num_blocks(&self) -> usize {
        self.sizes.len()
    }

    pub fn num_vertices(&self) -> usize {
        self.sizes.iter().sum()
    }

    /// Size of 1-based block `i`.
    pub fn block_size(&self, i: usize) -> usize {
        self.sizes[i - 1]
    }

    /// All vertices in lexicographic order.
    pub fn vertices(&self) -> impl Iterator<Item = Vertex> + '_ {
        self.sizes
            .iter()
            .enumerate()
            .flat_map(|(b, &s)| (1..=s).map(move |v| Vertex::new(b + 1, v)))
    }

    /// Block pairs `(i, j)` with `i <= j`, lexicographic.
    pub fn block_pairs(&self) -> Vec<(usize, usize)> {
        let k = self.num_blocks();
        (1..=k).flat_map(|i| (i..=k).map(move |j| (i, j))).collect()
    }

    pub fn num_block_pairs(&self) -> usize {
        let k = self.num_blocks();
        k * (k + 1) / 2
    }

    pub fn num_dyads(&self) -> usize {
        let n = self.num_vertices();
        n * (n - 1) / 2
    }

    pub fn contains(&self, v: Vertex) -> bool {
        v.block >= 1 && v.block <= self.num_blocks() && v.index >= 1 && v.index <= self.block_size(v.block)
    }

    /// 0-based position of a vertex in the lexicographic vertex order.
    pub fn vertex_position(&self, v: Vertex) -> usize {
        self.sizes[..v.block - 1].iter().sum::<usize>() + v.index - 1
    }

    /// 0-based position of block pair `{i, j}` among the alpha rows.
    pub fn block_pair_position(&self, i: usize, j: usize) -> usize {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        let k = self.num_blocks();
        // rows for blocks 1..i-1 come first: sum_{r<i} (k - r + 1)
        (1..i).map(|r| k - r + 1).sum::<usize>() + (j - i)
    }
}

impl TryFrom<Vec<usize>> for BlockSpec {
    type Error = Error;

    fn try_from(sizes: Vec<usize>) -> Result<Self> {
        Self::new(sizes)
    }
}

impl From<BlockSpec> for Vec<usize> {
    fn from(spec: BlockSpec) -> Self {
        spec.sizes
    }
}

impl fmt::Display for BlockSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.sizes.iter().map(|s| s.to_string()).collect();
        write!(f, "M({})", parts.join(","))
    }
}

/// Vertex `(block, index)`, both 1-based.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(from = "[usize; 2]", into = "[usize; 2]")]
pub struct Vertex {
    pub block: usize,
    pub index: usize,
}

impl Vertex {
    pub const fn new(block: usize, index: usize) -> Self {
        Self { block, index }
    }
}

impl From<[usize; 2]> for Vertex {
    fn from([block, index]: [usize; 2]) -> Self {
        Self { block, index }
    }
}

impl From<Vertex> for [usize; 2] {
    fn from(v: Vertex) -> Self {
        [v.block, v.index]
    }
}

impl fmt::Display for Vertex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.block, self.index)
    }
}

/// Unordered pair of distinct vertices, stored with `first < second`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "[Vertex; 2]", into = "[Vertex; 2]")]
pub struct Dyad {
    first: Vertex,
    second: Vertex,
}

impl Dyad {
    pub fn new(a: Vertex, b: Vertex) -> Result<Self> {
        match a.cmp(&b) {
            std::cmp::Ordering::Less => Ok(Self { first: a, second: b }),
            std::cmp::Ordering::Greater => Ok(Self { first: b, second: a }),
            std::cmp::Ordering::Equal => Err(Error::InvalidGraph(format!("self-loop at {a}"))),
        }
    }

    /// Shorthand for tests and tables: `Dyad::of((1,1),(2,1))`.
    pub fn of(a: (usize, usize), b: (usize, usize)) -> Self {
        Self::new(Vertex::new(a.0, a.1), Vertex::new(b.0, b.1)).expect("distinct endpoints")
    }

    pub fn first(&self) -> Vertex {
        self.first
    }

    pub fn second(&self) -> Vertex {
        self.second
    }

    pub fn contains(&self, v: Vertex) -> bool {
        self.first == v || self.second == v
    }

    /// Block pair `(i, j)` with `i <= j`.
    pub fn block_pair(&self) -> (usize, usize) {
        (self.first.block, self.second.block)
    }
}

impl TryFrom<[Vertex; 2]> for Dyad {
    type Error = Error;

    fn try_from([a, b]: [Vertex; 2]) -> Result<Self> {
        Self::new(a, b)
    }
}

impl From<Dyad> for [Vertex; 2] {
    fn from(d: Dyad) -> Self {
        [d.first, d.second]
    }
}

impl fmt::Display for Dyad {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.first, self.second)
    }
}

/// All dyads of `spec` in design-matrix column order.
pub fn enumerate_dyads(spec: &BlockSpec) -> Vec<Dyad> {
    let vertices: Vec<Vertex> = spec.vertices().collect();
    let mut dyads = Vec::with_capacity(spec.num_dyads());
    for (a, &x) in vertices.iter().enumerate() {
        for &y in &vertices[a + 1..] {
            dyads.push(Dyad { first: x, second: y });
        }
    }
    dyads
}

/// Column lookup for the dyads of one model.
#[derive(Clone, Debug)]
pub struct DyadIndex {
    dyads: Vec<Dyad>,
    positions: HashMap<Dyad, usize>,
}

impl DyadIndex {
    pub fn new(spec: &BlockSpec) -> Self {
        let dyads = enumerate_dyads(spec);
        let positions = dyads.iter().enumerate().map(|(i, d)| (*d, i)).collect();
        Self { dyads, positions }
    }

    pub fn dyads(&self) -> &[Dyad] {
        &self.dyads
    }

    pub fn len(&self) -> usize {
        self.dyads.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dyads.is_empty()
    }

    pub fn position(&self, d: &Dyad) -> Option<usize> {
        self.positions.get(d).copied()
    }

    /// Column of the dyad joining `a` and `b`; panics if it is not a dyad of the model.
    pub fn column(&self, a: Vertex, b: Vertex) -> usize {
        let d = Dyad::new(a, b).expect("distinct endpoints");
        self.positions[&d]
    }
}

/// Row label of the design matrix.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RowLabel {
    Beta(Vertex),
    Alpha(usize, usize),
}

impl fmt::Display for RowLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RowLabel::Beta(v) => write!(f, "beta_{v}"),
            RowLabel::Alpha(i, j) => write!(f, "alpha_{i},{j}"),
        }
    }
}

/// Dense zero-one design matrix with beta rows, then alpha rows.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DesignMatrix {
    spec: BlockSpec,
    row_labels: Vec<RowLabel>,
    dyads: Vec<Dyad>,
    entries: Vec<Vec<u8>>,
}

/// JSON form of a design matrix.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DesignMatrixJson {
    pub blocks: Vec<usize>,
    pub row_labels: Vec<String>,
    pub column_labels: Vec<String>,
    pub entries: Vec<Vec<u8>>,
}

pub fn design_matrix(spec: &BlockSpec) -> DesignMatrix {
    let dyads = enumerate_dyads(spec);
    let mut row_labels: Vec<RowLabel> = spec.vertices().map(RowLabel::Beta).collect();
    row_labels.extend(spec.block_pairs().into_iter().map(|(i, j)| RowLabel::Alpha(i, j)));

    let entries = row_labels
        .iter()
        .map(|label| {
            dyads
                .iter()
                .map(|d| match *label {
                    RowLabel::Beta(v) => d.contains(v) as u8,
                    RowLabel::Alpha(i, j) => (d.block_pair() == (i, j)) as u8,
                })
                .collect()
        })
        .collect();

    DesignMatrix { spec: spec.clone(), row_labels, dyads, entries }
}

impl DesignMatrix {
    pub fn spec(&self) -> &BlockSpec {
        &self.spec
    }

    pub fn nrows(&self) -> usize {
        self.entries.len()
    }

    pub fn ncols(&self) -> usize {
        self.dyads.len()
    }

    pub fn get(&self, r: usize, c: usize) -> u8 {
        self.entries[r][c]
    }

    pub fn row(&self, r: usize) -> &[u8] {
        &self.entries[r]
    }

    pub fn rows(&self) -> &[Vec<u8>] {
        &self.entries
    }

    pub fn row_labels(&self) -> &[RowLabel] {
        &self.row_labels
    }

    pub fn dyads(&self) -> &[Dyad] {
        &self.dyads
    }

    pub fn column_labels(&self) -> Vec<String> {
        self.dyads.iter().map(|d| format!("p_{d}")).collect()
    }

    pub fn integer_rows(&self) -> Vec<Vec<i64>> {
        self.entries.iter().map(|r| r.iter().map(|&x| x as i64).collect()).collect()
    }

    pub fn column_sums(&self) -> Vec<u32> {
        (0..self.ncols())
            .map(|c| self.entries.iter().map(|r| r[c] as u32).sum())
            .collect()
    }

    /// `A * x` for any additive scalar.
    pub fn apply<T>(&self, x: &[T]) -> Vec<T>
    where
        T: Copy + num_traits::Zero,
    {
        assert_eq!(x.len(), self.ncols());
        self.entries
            .iter()
            .map(|row| {
                row.iter()
                    .zip(x)
                    .filter(|(&a, _)| a != 0)
                    .fold(T::zero(), |acc, (_, &v)| acc + v)
            })
            .collect()
    }

    /// `y^T * A` in exact integer arithmetic.
    pub fn left_apply(&self, y: &[i64]) -> Vec<i64> {
        assert_eq!(y.len(), self.nrows());
        (0..self.ncols())
            .map(|c| self.entries.iter().zip(y).map(|(r, &w)| r[c] as i64 * w).sum())
            .collect()
    }

    pub fn to_json(&self) -> DesignMatrixJson {
        DesignMatrixJson {
            blocks: self.spec.sizes().to_vec(),
            row_labels: self.row_labels.iter().map(|l| l.to_string()).collect(),
            column_labels: self.column_labels(),
            entries: self.entries.clone(),
        }
    }
}

/// Exact rank of a design matrix together with a basis of its rows.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RankInfo {
    pub rank: usize,
    /// Greedy (first-come) set of independent rows, increasing.
    pub pivot_rows: Vec<usize>,
}

pub fn rank_exact(a: &DesignMatrix) -> RankInfo {
    let pivot_rows = linalg::independent_rows(&a.integer_rows());
    RankInfo { rank: pivot_rows.len(), pivot_rows }
}

/// One left-null vector per block: sum of the block's beta rows minus twice
/// its within-block alpha row minus its between-block alpha rows.
pub fn row_dependencies(spec: &BlockSpec) -> Vec<Vec<i64>> {
    let k = spec.num_blocks();
    let nrows = spec.num_vertices() + spec.num_block_pairs();
    let alpha0 = spec.num_vertices();
    (1..=k)
        .map(|i| {
            let mut y = vec![0i64; nrows];
            for v in 1..=spec.block_size(i) {
                y[spec.vertex_position(Vertex::new(i, v))] = 1;
            }
            for j in 1..=k {
                let w = if i == j { 2 } else { 1 };
                y[alpha0 + spec.block_pair_position(i, j)] -= w;
            }
            y
        })
        .collect()
}

/// Reorders blocks: the result has sizes `(n_tau(1), ..., n_tau(k))`, with
/// `tau` given as a 1-based permutation of `1..=k`.
pub fn permute_blocks(spec: &BlockSpec, tau: &[usize]) -> Result<BlockSpec> {
    let k = spec.num_blocks();
    if tau.len() != k {
        return Err(Error::InvalidPermutation(format!("expected {k} entries, got {}", tau.len())));
    }
    let mut seen = vec![false; k];
    for &t in tau {
        if t == 0 || t > k || seen[t - 1] {
            return Err(Error::InvalidPermutation(format!("{tau:?} is not a permutation of 1..={k}")));
        }
        seen[t - 1] = true;
    }
    BlockSpec::new(tau.iter().map(|&t| spec.block_size(t)).collect())
}

/// Permutation that sorts the blocks by decreasing size (stable).
pub fn descending_order(spec: &BlockSpec) -> Vec<usize> {
    let mut tau: Vec<usize> = (1..=spec.num_blocks()).collect();
    tau.sort_by_key(|&b| std::cmp::Reverse(spec.block_size(b)));
    tau
}

/// Simple undirected graph on the vertices of a model.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    spec: BlockSpec,
    edges: BTreeSet<Dyad>,
}

#[derive(Debug, Serialize, Deserialize)]
struct GraphJson {
    blocks: Vec<usize>,
    edges: Vec<[[usize; 2]; 2]>,
}

impl Graph {
    pub fn new(spec: BlockSpec, edges: impl IntoIterator<Item = Dyad>) -> Result<Self> {
        let mut set = BTreeSet::new();
        for (n, d) in edges.into_iter().enumerate() {
            for v in [d.first(), d.second()] {
                if !spec.contains(v) {
                    return Err(Error::InvalidGraph(format!("edge {n}: vertex {v} is not in {spec}")));
                }
            }
            if !set.insert(d) {
                return Err(Error::InvalidGraph(format!("edge {n}: duplicate edge {d}")));
            }
        }
        Ok(Self { spec, edges: set })
    }

    pub fn empty(spec: BlockSpec) -> Self {
        Self { spec, edges: BTreeSet::new() }
    }

    pub fn complete(spec: BlockSpec) -> Self {
        let edges = enumerate_dyads(&spec).into_iter().collect();
        Self { spec, edges }
    }

    pub fn spec(&self) -> &BlockSpec {
        &self.spec
    }

    pub fn edges(&self) -> &BTreeSet<Dyad> {
        &self.edges
    }

    pub fn has_edge(&self, d: &Dyad) -> bool {
        self.edges.contains(d)
    }

    /// 0/1 dyad indicator in column order.
    pub fn indicator(&self) -> Vec<u8> {
        enumerate_dyads(&self.spec).iter().map(|d| self.edges.contains(d) as u8).collect()
    }

    pub(crate) fn with_edges(&self, edges: BTreeSet<Dyad>) -> Self {
        Self { spec: self.spec.clone(), edges }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: GraphJson = serde_json::from_str(text)
            .map_err(|e| Error::InvalidGraph(format!("line {}, column {}: {e}", e.line(), e.column())))?;
        let spec = BlockSpec::new(raw.blocks)?;
        let mut edges = Vec::with_capacity(raw.edges.len());
        for (n, [a, b]) in raw.edges.into_iter().enumerate() {
            let d = Dyad::new(a.into(), b.into())
                .map_err(|e| Error::InvalidGraph(format!("edge {n}: {e}")))?;
            edges.push(d);
        }
        Self::new(spec, edges)
    }

    pub fn to_json(&self) -> String {
        let raw = GraphJson {
            blocks: self.spec.sizes().to_vec(),
            edges: self.edges.iter().map(|d| [d.first().into(), d.second().into()]).collect(),
        };
        serde_json::to_string(&raw).expect("graph serializes")
    }
}

/// Degree sequence followed by block-pair edge counts.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SufficientStatistic {
    pub degrees: Vec<u64>,
    pub block_counts: Vec<u64>,
}

impl SufficientStatistic {
    pub fn to_vec(&self) -> Vec<u64> {
        self.degrees.iter().chain(&self.block_counts).copied().collect()
    }
}

pub fn sufficient_statistic(graph: &Graph) -> SufficientStatistic {
    let spec = graph.spec();
    let mut degrees = vec![0u64; spec.num_vertices()];
    let mut block_counts = vec![0u64; spec.num_block_pairs()];
    for d in graph.edges() {
        degrees[spec.vertex_position(d.first())] += 1;
        degrees[spec.vertex_position(d.second())] += 1;
        let (i, j) = d.block_pair();
        block_counts[spec.block_pair_position(i, j)] += 1;
    }
    SufficientStatistic { degrees, block_counts }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(s: &[usize]) -> BlockSpec {
        BlockSpec::new(s.to_vec()).unwrap()
    }

    #[test]
    fn spec_validation() {
        assert!(BlockSpec::new(vec![]).is_err());
        assert!(BlockSpec::new(vec![1]).is_err());
        assert!(BlockSpec::new(vec![2, 0]).is_err());
        assert!(BlockSpec::new(vec![1, 1]).is_ok());
        assert_ne!(spec(&[3, 2]), spec(&[2, 3]));
    }

    #[test]
    fn dyads_of_small_models() {
        let d = enumerate_dyads(&spec(&[3, 2]));
        assert_eq!(d.len(), 10);
        assert_eq!(d[0], Dyad::of((1, 1), (1, 2)));
        assert_eq!(d[9], Dyad::of((2, 1), (2, 2)));

        assert_eq!(enumerate_dyads(&spec(&[2])), vec![Dyad::of((1, 1), (1, 2))]);

        let d = enumerate_dyads(&spec(&[1, 1, 1]));
        assert_eq!(d.len(), 3);
        assert!(d.iter().all(|d| d.block_pair().0 != d.block_pair().1));
    }

    #[test]
    fn dyad_is_canonical() {
        let a = Dyad::new(Vertex::new(2, 1), Vertex::new(1, 3)).unwrap();
        assert_eq!(a.first(), Vertex::new(1, 3));
        assert!(Dyad::new(Vertex::new(1, 1), Vertex::new(1, 1)).is_err());
    }

    #[test]
    fn single_dyad_design_matrix() {
        let a = design_matrix(&spec(&[2]));
        assert_eq!(a.rows(), &[vec![1], vec![1], vec![1]]);
    }

    #[test]
    fn design_matrix_shape_421() {
        let a = design_matrix(&spec(&[4, 2, 1]));
        assert_eq!((a.nrows(), a.ncols()), (13, 21));
        assert_eq!(a.row_labels().iter().filter(|l| matches!(l, RowLabel::Beta(_))).count(), 7);
    }

    #[test]
    fn block_pair_positions_follow_row_order() {
        let s = spec(&[2, 3, 1, 2]);
        for (pos, (i, j)) in s.block_pairs().into_iter().enumerate() {
            assert_eq!(s.block_pair_position(i, j), pos);
            assert_eq!(s.block_pair_position(j, i), pos);
        }
    }

    #[test]
    fn ranks() {
        assert_eq!(rank_exact(&design_matrix(&spec(&[2]))).rank, 1);
        for n in 3..=7 {
            assert_eq!(rank_exact(&design_matrix(&spec(&[n]))).rank, n);
        }
        assert_eq!(rank_exact(&design_matrix(&spec(&[3, 2]))).rank, 6);
    }

    #[test]
    fn dependencies_of_small_models() {
        let deps = row_dependencies(&spec(&[3, 2]));
        // beta(1,1..3), beta(2,1..2), alpha11, alpha12, alpha22
        assert_eq!(deps[0], vec![1, 1, 1, 0, 0, -2, -1, 0]);
        assert_eq!(deps[1], vec![0, 0, 0, 1, 1, 0, -1, -2]);
        assert_eq!(row_dependencies(&spec(&[2]))[0], vec![1, 1, -2]);

        let s = spec(&[1, 1]);
        let a = design_matrix(&s);
        assert!(a.row(2).iter().all(|&x| x == 0), "alpha_1,1 row is empty");
        let y = &row_dependencies(&s)[0];
        assert_eq!(a.left_apply(y), vec![0]);
    }

    #[test]
    fn permutations() {
        assert_eq!(permute_blocks(&spec(&[3, 2]), &[2, 1]).unwrap(), spec(&[2, 3]));
        assert_eq!(permute_blocks(&spec(&[3, 2]), &[1, 2]).unwrap(), spec(&[3, 2]));
        let s = spec(&[5, 3, 1, 6, 1, 2]);
        let tau = descending_order(&s);
        assert_eq!(permute_blocks(&s, &tau).unwrap(), spec(&[6, 5, 3, 2, 1, 1]));
        assert!(permute_blocks(&s, &[1, 1, 2, 3, 4, 5]).is_err());
        assert!(permute_blocks(&s, &[1, 2]).is_err());
        assert!(permute_blocks(&s, &[0, 1, 2, 3, 4, 5]).is_err());
    }

    #[test]
    fn complete_graph_statistic() {
        let g = Graph::complete(spec(&[2, 1]));
        assert_eq!(sufficient_statistic(&g).to_vec(), vec![2, 2, 2, 1, 2, 0]);
        let e = Graph::empty(spec(&[3, 2]));
        assert!(sufficient_statistic(&e).to_vec().iter().all(|&x| x == 0));
    }

    #[test]
    fn graph_json_errors_carry_locations() {
        let err = Graph::from_json(r#"{"blocks":[2,1],"edges":[[[1,1],[1,2]],[[1,1],[3,1]]]}"#).unwrap_err();
        assert!(err.to_string().contains("edge 1"), "{err}");
        let err = Graph::from_json(r#"{"blocks":[2,1],"edges":[[[1,1],[1,1]]]}"#).unwrap_err();
        assert!(err.to_string().contains("edge 0"), "{err}");
        let err = Graph::from_json(r#"{"blocks":[2,1],"edges":[[[1,1],[1,2]],[[1,2],[1,1]]]}"#).unwrap_err();
        assert!(err.to_string().contains("duplicate"), "{err}");
        let err = Graph::from_json("{\"blocks\":[2,1],\n\"edges\":[[1,2]]}").unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
    }

    #[test]
    fn graph_json_round_trip() {
        let g = Graph::complete(spec(&[2, 2]));
        assert_eq!(Graph::from_json(&g.to_json()).unwrap(), g);
    }
}

mod common;

use common::*;
use proptest::prelude::*;
use sbm_mldeg::blockmodel::*;

#[test]
fn m32_design_matrix_is_bit_exact() {
    let a = design_matrix(&spec(&[3, 2]));
    let rows: Vec<String> = a.rows().iter().map(|r| r.iter().map(|x| x.to_string()).collect()).collect();
    assert_eq!(rows, M32_MATRIX);
}

#[test]
fn sample_graph_statistic() {
    let g = Graph::new(spec(&[3, 4, 3]), SAMPLE_GRAPH_EDGES.iter().map(|&(a, b)| Dyad::of(a, b))).unwrap();
    assert_eq!(sufficient_statistic(&g).to_vec(), SAMPLE_GRAPH_STATISTIC);
}

#[test]
fn sample_graph_via_json() {
    let text = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/../cli/tests/data/sample_graph.json")).unwrap();
    let g = Graph::from_json(&text).unwrap();
    assert_eq!(g.edges().len(), 15);
    assert_eq!(sufficient_statistic(&g).to_vec(), SAMPLE_GRAPH_STATISTIC);
}

#[test]
fn malformed_graphs_are_located() {
    let e = Graph::from_json("{\"blocks\": [2, 2],\n \"edges\": [[[1, 1], [3, 1]]]}").unwrap_err();
    assert!(e.to_string().contains("edge 0"), "{e}");
    let e = Graph::from_json("{\"blocks\": [2, 2],\n \"edges\": [[[1, 1]").unwrap_err();
    assert!(e.to_string().contains("line 2"), "{e}");
}

fn arb_spec(max_blocks: usize, max_size: usize) -> impl Strategy<Value = BlockSpec> {
    prop::collection::vec(1..=max_size, 1..=max_blocks)
        .prop_filter("at least two vertices", |s| s.iter().sum::<usize>() >= 2)
        .prop_map(|s| BlockSpec::new(s).unwrap())
}

proptest! {
    #[test]
    fn dependencies_annihilate_the_design(s in arb_spec(4, 4)) {
        let a = design_matrix(&s);
        for dep in row_dependencies(&s) {
            prop_assert!(a.left_apply(&dep).iter().all(|&x| x == 0));
        }
        prop_assert!(rank_exact(&a).rank <= a.nrows() - s.num_blocks());
    }

    #[test]
    fn every_column_has_three_ones(s in arb_spec(4, 4)) {
        let a = design_matrix(&s);
        prop_assert!(a.column_sums().iter().all(|&c| c == 3));
        prop_assert_eq!(a.ncols(), s.num_vertices() * (s.num_vertices() - 1) / 2);
    }

    #[test]
    fn graph_json_round_trips(s in arb_spec(3, 4), mask in any::<u64>()) {
        let dyads = enumerate_dyads(&s);
        let g = Graph::new(s.clone(), dyads.iter().enumerate().filter(|(i, _)| mask >> (i % 64) & 1 == 1).map(|(_, d)| *d)).unwrap();
        prop_assert_eq!(Graph::from_json(&g.to_json()).unwrap(), g);
    }

    #[test]
    fn statistic_is_design_times_indicator(s in arb_spec(3, 4), mask in any::<u64>()) {
        let dyads = enumerate_dyads(&s);
        let g = Graph::new(s.clone(), dyads.iter().enumerate().filter(|(i, _)| mask >> (i % 64) & 1 == 1).map(|(_, d)| *d)).unwrap();
        let ind: Vec<u64> = g.indicator().iter().map(|&x| x as u64).collect();
        prop_assert_eq!(design_matrix(&s).apply(&ind), sufficient_statistic(&g).to_vec());
    }

    #[test]
    fn permutation_preserves_shape(s in arb_spec(4, 5), seed in any::<u64>()) {
        let k = s.num_blocks();
        let mut tau: Vec<usize> = (1..=k).collect();
        let mut r = rng(seed);
        use rand::seq::SliceRandom;
        tau.shuffle(&mut r);
        let t = permute_blocks(&s, &tau).unwrap();
        prop_assert_eq!(t.num_dyads(), s.num_dyads());
        prop_assert_eq!(rank_exact(&design_matrix(&t)).rank, rank_exact(&design_matrix(&s)).rank);
    }
}

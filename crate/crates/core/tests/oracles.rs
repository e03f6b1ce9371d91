//! Hand-derived example values, each checked against the brute-force oracle
//! before being asserted against the library.

mod common;

use common::*;
use meshca::iem::{cdal_cost, cxls_wt, enumerate_xls, score, tid, Metric};
use meshca::optimizer::{bio_assign, Scheme, SchemeConfig};
use meshca::topology::{gen_grid, ChannelAssignment, ConflictGraph};

fn check(expected: f64, oracle: f64, got: f64) {
    assert!(
        (oracle - expected).abs() < 1e-12,
        "oracle {oracle} disagrees with frozen {expected}"
    );
    assert!((got - expected).abs() < 1e-12, "implementation {got} != {expected}");
}

#[test]
fn e1_uniform_metrics() {
    let (t, ca) = e1_all_ch0();
    check(2.0, naive_tid(&t, &ca), tid(&t, &ca).unwrap().value);
    check(1.0, naive_cdal(&t, &ca), cdal_cost(&t, &ca).unwrap().value);
    check(0.0, naive_cxls(&t, &ca, 2), cxls_wt(&t, &ca, 2).unwrap().value);
}

#[test]
fn e2_metrics() {
    let (t, ca) = e2_all_01();
    check(4.0, naive_tid(&t, &ca), tid(&t, &ca).unwrap().value);
    check(0.0, naive_cdal(&t, &ca), cdal_cost(&t, &ca).unwrap().value);
    check(1.0, naive_cxls(&t, &ca, 2), cxls_wt(&t, &ca, 2).unwrap().value);
}

#[test]
fn e2_c3_cxls() {
    let (t, ca) = e2_c3_optimal();
    check(2.0, naive_cxls(&t, &ca, 2), cxls_wt(&t, &ca, 2).unwrap().value);
}

#[test]
fn e2_realized_links_and_conflicts() {
    let (t, ca) = e2_all_01();
    assert_eq!(naive_links(&t, &ca).len(), 4);
    let g = ConflictGraph::build(&t, &ca).unwrap();
    assert_eq!(g.vertex_count(), 4);
    assert_eq!(g.edge_count(), 2);
}

#[test]
fn square_grid_two_hop_paths() {
    let t = gen_grid(2, 2, 100.0, params(100.0, 2, 1, 1)).unwrap();
    let naive = naive_paths(&t, 2);
    assert_eq!(naive.len(), 4);
    let mut got = enumerate_xls(&t, 2);
    got.sort();
    let mut naive_sorted = naive;
    naive_sorted.sort();
    assert_eq!(got, naive_sorted);
}

#[test]
fn grid_5x5_path_counts_match_oracle() {
    let t = gen_grid(5, 5, 250.0, params(250.0, 2, 1, 1)).unwrap();
    for hops in 1..=3 {
        assert_eq!(
            enumerate_xls(&t, hops).len(),
            naive_paths(&t, hops).len(),
            "hops={hops}"
        );
    }
    // sum over nodes of C(degree, 2)
    assert_eq!(enumerate_xls(&t, 2).len(), 4 + 12 * 3 + 9 * 6);
}

#[test]
fn bio_optima_match_exhaustive_oracle() {
    let cases = [
        (line(1, 2), Metric::Tid, 2.0),
        (line(2, 2), Metric::Tid, 4.0),
        (line(2, 3), Metric::Cxls, 2.0),
    ];
    for (t, metric, expected) in cases {
        let eval = |ca: &ChannelAssignment| score(metric, &t, ca).unwrap().value;
        let (oracle_ca, oracle_v) = naive_optimum(
            &t,
            |ca| match metric {
                Metric::Tid => naive_tid(&t, ca),
                Metric::Cdal => naive_cdal(&t, ca),
                Metric::Cxls => naive_cxls(&t, ca, 2),
            },
            metric == Metric::Cxls,
        )
        .unwrap();
        assert_eq!(oracle_v, expected);
        let (ca, s, feasible) = bio_assign(&t, &SchemeConfig::new(Scheme::Bio, metric, 0)).unwrap();
        assert!(feasible);
        assert_eq!(s.value, expected);
        assert_eq!(eval(&ca), expected);
        assert_eq!(ca, oracle_ca, "lexicographic tie-break");
    }
}

#[test]
fn bio_cdal_matches_oracle_on_small_grid() {
    let t = gen_grid(2, 2, 100.0, params(100.0, 1, 1, 3)).unwrap();
    let (oracle_ca, oracle_v) = naive_optimum(&t, |ca| naive_cdal(&t, ca), false).unwrap();
    let (ca, s, _) = bio_assign(&t, &SchemeConfig::new(Scheme::Bio, Metric::Cdal, 0)).unwrap();
    assert!((s.value - oracle_v).abs() < 1e-9);
    assert_eq!(ca, oracle_ca);
}

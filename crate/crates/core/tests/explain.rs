use std::collections::BTreeSet;
use std::sync::Arc;

use cpsexplain::checker::{annotate_signals, check_failing_trace, Label, ViolationInstance};
use cpsexplain::cluster::{
    build_explanation, default_error_threshold, elbow, kmeans_1d, map_to_blocks, total_sse,
    Cluster, ClusterError, TimedSignal,
};
use cpsexplain::manifest::{Block, ModelManifest, RequirementParams};
use cpsexplain::miner::SpecEntry;
use cpsexplain::stl::{parse_formula, EvalOptions, Span};
use cpsexplain::trace::{BlockPath, Domain, Signal, Trace, VarKind, VariableMeta, Verdict};
use proptest::prelude::*;

fn points(times: &[f64]) -> Vec<TimedSignal> {
    times
        .iter()
        .enumerate()
        .map(|(i, &t)| TimedSignal::new(format!("s{i:03}"), t))
        .collect()
}

/// Minimal SSE over every assignment of points to k non-empty labels.
fn brute_force_sse(times: &[f64], k: usize) -> f64 {
    let n = times.len();
    let mut best = f64::INFINITY;
    let mut labels = vec![0usize; n];
    loop {
        let mut groups = vec![Vec::new(); k];
        for (i, &l) in labels.iter().enumerate() {
            groups[l].push(times[i]);
        }
        if groups.iter().all(|g| !g.is_empty()) {
            let sse: f64 = groups
                .iter()
                .map(|g| {
                    let m = g.iter().sum::<f64>() / g.len() as f64;
                    g.iter().map(|t| (t - m).powi(2)).sum::<f64>()
                })
                .sum();
            best = best.min(sse);
        }
        let mut i = 0;
        while i < n {
            labels[i] += 1;
            if labels[i] < k {
                break;
            }
            labels[i] = 0;
            i += 1;
        }
        if i == n {
            return best;
        }
    }
}

#[test]
fn two_pairs_match_brute_force() {
    let c = kmeans_1d(&points(&[1.0, 1.0, 9.0, 9.0]), 2).unwrap();
    assert_eq!(total_sse(&c), brute_force_sse(&[1.0, 1.0, 9.0, 9.0], 2));
    assert_eq!(total_sse(&c), 0.0);
}

#[test]
fn violation_times_near_two_and_four_seconds_form_two_clusters() {
    let mut times = vec![1.99; 5];
    times.extend([2.03; 9]);
    times.extend([3.99; 4]);
    times.push(4.00);
    let c = elbow(&points(&times), default_error_threshold(10.0, times.len())).unwrap();
    assert_eq!(c.len(), 2);
    assert!((c[0].mean_time - 2.01).abs() < 0.05);
    assert!((c[1].mean_time - 3.99).abs() < 0.05);
}

#[test]
fn tight_groups_need_three_clusters() {
    let times = [1.0, 1.0, 5.0, 5.0, 9.0, 9.0];
    // by hand: k=2 leaves 1,1,5,5 together with SSE 16; k=3 has SSE 0
    assert_eq!(brute_force_sse(&times, 2), 16.0);
    let c = elbow(&points(&times), 1.0).unwrap();
    assert_eq!(c.len(), 3);
}

#[test]
fn elbow_rejects_bad_threshold() {
    assert_eq!(
        elbow(&points(&[1.0]), 0.0),
        Err(ClusterError::InvalidThreshold(0.0))
    );
}

fn manifest() -> ModelManifest {
    let blocks = Block::node(
        "root",
        vec![
            Block::node(
                "sensors",
                vec![Block::leaf("left_inner"), Block::leaf("right_inner")],
            ),
            Block::leaf("hydraulics"),
        ],
    );
    let vars = vec![
        VariableMeta::new(
            "li",
            Domain::Real,
            VarKind::PlainSignal,
            "root/sensors/left_inner",
        ),
        VariableMeta::new(
            "ri",
            Domain::Real,
            VarKind::PlainSignal,
            "root/sensors/right_inner",
        ),
        VariableMeta::new("p", Domain::Real, VarKind::PlainSignal, "root/hydraulics"),
    ];
    let params = RequirementParams {
        m: 0.5,
        n: 0.1,
        big_t: 1.0,
        t: 0.5,
    };
    ModelManifest::new(blocks, vars, "true".into(), params).unwrap()
}

fn paths(v: &[BlockPath]) -> Vec<String> {
    v.iter().map(|b| b.to_string()).collect()
}

#[test]
fn blocks_include_ancestors_once() {
    let m = manifest();
    let one = Cluster {
        members: vec![TimedSignal::new("li", 2.0)],
        mean_time: 2.0,
        sse: 0.0,
    };
    assert_eq!(
        paths(&map_to_blocks(&one, &m).unwrap()),
        vec!["root", "root/sensors", "root/sensors/left_inner"]
    );
    let two = Cluster {
        members: vec![TimedSignal::new("li", 2.0), TimedSignal::new("ri", 2.0)],
        mean_time: 2.0,
        sse: 0.0,
    };
    assert_eq!(
        paths(&map_to_blocks(&two, &m).unwrap()),
        vec![
            "root",
            "root/sensors",
            "root/sensors/left_inner",
            "root/sensors/right_inner"
        ]
    );
    let bad = Cluster {
        members: vec![TimedSignal::new("q", 2.0)],
        mean_time: 2.0,
        sse: 0.0,
    };
    assert_eq!(
        map_to_blocks(&bad, &m),
        Err(ClusterError::UnknownVariable("q".into()))
    );
}

fn faulty_trace(m: &ModelManifest) -> Trace {
    let sig = |name: &str, s: &[(f64, f64)]| {
        Signal::from_reals(Arc::new(m.variable(name).unwrap().clone()), s).unwrap()
    };
    Trace::new(vec![
        sig(
            "li",
            &[(0.0, 1.0), (2.0, 1.0), (2.0001, -1.0), (10.0, -1.0)],
        ),
        sig("ri", &[(0.0, 1.0), (10.0, 1.0)]),
        sig("p", &[(0.0, 3.0), (4.0, 3.0), (4.0001, 0.1), (10.0, 0.1)]),
    ])
    .unwrap()
    .with_verdict(Verdict::Fail)
}

fn spec() -> Vec<SpecEntry> {
    [
        "alw (li > 0)",
        "alw (li - ri <= 0.5)",
        "alw (p >= 2)",
        "alw (ri > 0)",
    ]
    .iter()
    .enumerate()
    .map(|(i, t)| SpecEntry {
        id: format!("psi{}", i + 1),
        formula: parse_formula(t).unwrap(),
        block: None,
        template: None,
    })
    .collect()
}

#[test]
fn two_faults_give_two_ordered_snapshots() {
    let m = manifest();
    let tr = faulty_trace(&m);
    let violations = check_failing_trace(&spec(), &tr, &EvalOptions::default()).unwrap();
    let ids: Vec<&str> = violations.iter().map(|v| v.property.as_str()).collect();
    assert_eq!(ids, vec!["psi1", "psi3"]);
    let ann = annotate_signals(&violations, &tr);
    assert_eq!(
        ann.iter().map(|a| a.label).collect::<Vec<_>>(),
        vec![Label::Fail, Label::Pass, Label::Fail]
    );
    let e = build_explanation(&ann, &violations, &m, default_error_threshold(10.0, 2)).unwrap();
    assert_eq!(e.snapshots.len(), 2);
    let (a, b) = (&e.snapshots[0], &e.snapshots[1]);
    assert!(a.mean_time < b.mean_time);
    assert!((a.mean_time - 2.0).abs() < 0.01 && (b.mean_time - 4.0).abs() < 0.01);
    assert_eq!(a.properties, vec!["psi1"]);
    assert_eq!(
        paths(&a.blocks),
        vec!["root", "root/sensors", "root/sensors/left_inner"]
    );
    assert_eq!(paths(&b.blocks), vec!["root", "root/hydraulics"]);
}

#[test]
fn no_fail_signal_is_inconclusive() {
    let m = manifest();
    let tr = faulty_trace(&m);
    let ann = annotate_signals(&[], &tr);
    assert_eq!(
        build_explanation(&ann, &[], &m, 1.0),
        Err(ClusterError::NoViolations)
    );
}

#[test]
fn property_goes_to_snapshot_of_its_earliest_signal() {
    let m = manifest();
    let tr = faulty_trace(&m);
    let v = |p: &str, signals: &[&str], tau: f64| ViolationInstance {
        property: p.into(),
        signals: signals.iter().map(|s| s.to_string()).collect(),
        intervals: vec![Span::closed(tau, 10.0)],
        first_time: tau,
    };
    let violations = vec![
        v("psi1", &["li"], 2.0),
        v("psi2", &["p"], 4.0),
        v("psi3", &["li", "p"], 4.0),
    ];
    let ann = annotate_signals(&violations, &tr);
    let e = build_explanation(&ann, &violations, &m, 0.5).unwrap();
    assert_eq!(e.snapshots[0].properties, vec!["psi1", "psi3"]);
    assert_eq!(e.snapshots[1].properties, vec!["psi2"]);
}

proptest! {
    #![proptest_config(ProptestConfig {
        cases: 200,
        rng_seed: proptest::test_runner::RngSeed::Fixed(31),
        ..ProptestConfig::default()
    })]

    #[test]
    fn dynamic_program_matches_exhaustive_search(
        times in prop::collection::vec(0.0f64..10.0, 1..8),
        k in 1usize..4,
    ) {
        prop_assume!(k <= times.len());
        let got = total_sse(&kmeans_1d(&points(&times), k).unwrap());
        let want = brute_force_sse(&times, k);
        prop_assert!((got - want).abs() <= 1e-9 * (1.0 + want), "{} vs {}", got, want);
    }

    #[test]
    fn sse_never_increases_with_k(times in prop::collection::vec(0.0f64..10.0, 1..40)) {
        let mut prev = f64::INFINITY;
        for k in 1..=times.len() {
            let c = kmeans_1d(&points(&times), k).unwrap();
            for cl in &c {
                let mean = cl.members.iter().map(|m| m.time).sum::<f64>() / cl.members.len() as f64;
                prop_assert_eq!(cl.mean_time, mean);
            }
            let sse = total_sse(&c);
            prop_assert!(sse <= prev, "k = {}: {} > {}", k, sse, prev);
            prev = sse;
        }
    }

    #[test]
    fn elbow_is_minimal(times in prop::collection::vec(0.0f64..10.0, 1..30), threshold in 0.01f64..50.0) {
        let c = elbow(&points(&times), threshold).unwrap();
        let k = c.len();
        let distinct = times.iter().map(|t| t.to_bits()).collect::<BTreeSet<_>>().len();
        prop_assert!(total_sse(&c) <= threshold || k == distinct);
        if k > 1 {
            prop_assert!(total_sse(&kmeans_1d(&points(&times), k - 1).unwrap()) > threshold);
        }
    }

    #[test]
    fn snapshots_partition_fail_signals(t1 in 0.0f64..10.0, t2 in 0.0f64..10.0, t3 in 0.0f64..10.0) {
        let m = manifest();
        let tr = faulty_trace(&m);
        let violations: Vec<ViolationInstance> = [("li", t1), ("ri", t2), ("p", t3)]
            .iter()
            .enumerate()
            .map(|(i, (s, t))| ViolationInstance {
                property: format!("psi{}", i + 1),
                signals: vec![s.to_string()],
                intervals: vec![Span::closed(*t, 10.0)],
                first_time: *t,
            })
            .collect();
        let ann = annotate_signals(&violations, &tr);
        let e = build_explanation(&ann, &violations, &m, default_error_threshold(10.0, 3)).unwrap();
        let mut seen: Vec<String> = e.snapshots.iter().flat_map(|s| s.signals.iter().map(|x| x.signal.clone())).collect();
        seen.sort();
        prop_assert_eq!(seen, vec!["li", "p", "ri"]);
        for w in e.snapshots.windows(2) {
            prop_assert!(w[0].mean_time <= w[1].mean_time);
        }
        for s in &e.snapshots {
            let set: BTreeSet<String> = s.blocks.iter().map(|b| b.to_string()).collect();
            for b in &s.blocks {
                for a in b.with_ancestors() {
                    prop_assert!(set.contains(&a.to_string()));
                }
            }
        }
        let again = build_explanation(&ann, &violations, &m, default_error_threshold(10.0, 3)).unwrap();
        prop_assert_eq!(e, again);
    }
}

use std::sync::Arc;

use cpsexplain::manifest::{Block, ModelManifest, RequirementParams};
use cpsexplain::miner::{
    build_observations, confidence, group_variables, infer_properties, mine, parse_spec,
    render_spec, MinedProperty, MinerError, MiningConfig, ObservationMatrix, Template,
};
use cpsexplain::stl::{violation_intervals, EvalOptions};
use cpsexplain::trace::{BlockPath, Domain, Signal, Trace, VarKind, VariableMeta};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn matrix(domain: Domain, vars: &[&str], rows: Vec<Vec<f64>>) -> ObservationMatrix {
    ObservationMatrix {
        block: BlockPath::from("root"),
        domain,
        variables: vars.iter().map(|v| v.to_string()).collect(),
        rows,
    }
}

fn assertions(props: &[MinedProperty]) -> Vec<&str> {
    props.iter().map(|p| p.assertion.as_str()).collect()
}

#[test]
fn toy_observations_yield_the_textbook_invariants() {
    let obs = matrix(
        Domain::Real,
        &["x", "y"],
        vec![vec![1.0, 3.0], vec![2.0, 2.0], vec![4.0, 0.0]],
    );
    // three observations cannot clear the default gate, so the gate is opened
    let props = infer_properties(&obs, 0.0).unwrap();
    let found = assertions(&props);
    for expected in ["alw (x > 0)", "alw (x + y == 4)", "alw (y >= 0)"] {
        assert!(
            found.contains(&expected),
            "{expected} missing from {found:?}"
        );
    }
    // y = -x + 4 is the sum relation again
    assert!(!props.iter().any(|p| p.template == Template::LinearBinary));
}

#[test]
fn toy_observations_are_not_significant_by_default() {
    let obs = matrix(
        Domain::Real,
        &["x", "y"],
        vec![vec![1.0, 3.0], vec![2.0, 2.0], vec![4.0, 0.0]],
    );
    assert!(infer_properties(&obs, 0.99).unwrap().is_empty());
}

#[test]
fn confidence_matches_chance_model() {
    // n = 3 observations of 3 distinct values: (2/3)^3 chance of a one-sided bound
    assert!((confidence(Template::LowerBound, 3, 3.0, 0) - 19.0 / 27.0).abs() < 1e-15);
    // two of four labels seen 10 times: (1/2)^10
    assert!((confidence(Template::OneOf, 10, 4.0, 2) - 1023.0 / 1024.0).abs() < 1e-15);
    // constant over 8 Boolean observations: (1/2)^7
    assert!((confidence(Template::Constant, 8, 2.0, 0) - 127.0 / 128.0).abs() < 1e-15);
}

#[test]
fn enum_membership_is_mined() {
    let labels: Vec<String> = ["2", "3", "4"].iter().map(|s| s.to_string()).collect();
    let rows = (0..200).map(|k| vec![(k % 2) as f64]).collect();
    let props = infer_properties(&matrix(Domain::Enum(labels), &["mode"], rows), 0.99).unwrap();
    assert_eq!(assertions(&props), vec!["alw (mode in {2,3})"]);
    assert_eq!(props[0].labels, vec!["2", "3"]);
}

#[test]
fn enum_with_every_label_seen_yields_nothing() {
    let labels: Vec<String> = ["A", "B"].iter().map(|s| s.to_string()).collect();
    let rows = (0..200).map(|k| vec![(k % 2) as f64]).collect();
    let props = infer_properties(&matrix(Domain::Enum(labels), &["s"], rows), 0.99).unwrap();
    assert!(props.is_empty());
}

#[test]
fn boolean_equality_is_mined() {
    let rows = (0..100)
        .map(|k| vec![((k / 7) % 2) as f64, ((k / 7) % 2) as f64])
        .collect();
    let props = infer_properties(&matrix(Domain::Boolean, &["a", "b"], rows), 0.99).unwrap();
    assert_eq!(assertions(&props), vec!["alw (a == b)"]);
}

#[test]
fn constant_suppresses_its_consequences() {
    let rows = (0..100).map(|k| vec![5.0, k as f64]).collect();
    let props = infer_properties(&matrix(Domain::Real, &["c", "x"], rows), 0.99).unwrap();
    let found = assertions(&props);
    assert!(found.contains(&"alw (c == 5)"));
    assert!(!found
        .iter()
        .any(|a| a.starts_with("alw (c >=") || a.starts_with("alw (c <=")));
    assert!(!found.contains(&"alw (c > 0)"));
}

#[test]
fn rejects_single_observation() {
    let obs = matrix(Domain::Real, &["x"], vec![vec![1.0]]);
    assert_eq!(
        infer_properties(&obs, 0.99),
        Err(MinerError::TooFewObservations(1))
    );
}

fn params() -> RequirementParams {
    RequirementParams {
        m: 0.5,
        n: 0.1,
        big_t: 1.0,
        t: 0.5,
    }
}

fn plant_like_manifest() -> ModelManifest {
    let vars = vec![
        VariableMeta::new("x", Domain::Real, VarKind::PlainSignal, "root/a"),
        VariableMeta::new("y", Domain::Real, VarKind::PlainSignal, "root/a"),
        VariableMeta::new("z", Domain::Real, VarKind::PlainSignal, "root/a"),
        VariableMeta::new("w", Domain::Real, VarKind::PlainSignal, "root/b"),
        VariableMeta::new("on", Domain::Boolean, VarKind::PlainSignal, "root/b"),
    ];
    let blocks = Block::node("root", vec![Block::leaf("a"), Block::leaf("b")]);
    ModelManifest::new(blocks, vars, "true".into(), params()).unwrap()
}

/// Random traces where `y = 2x + 1` and `x + z = 3` hold at the samples,
/// `w` takes values 1..=3 on its own irregular clock and `on` toggles rarely.
fn random_suite(seed: u64, traces: usize) -> (ModelManifest, Vec<Trace>) {
    let m = plant_like_manifest();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let suite = (0..traces)
        .map(|_| {
            let n = rng.gen_range(20..80);
            let mut t = 0.0;
            let times: Vec<f64> = (0..n)
                .map(|k| {
                    if k > 0 {
                        t += rng.gen_range(0.05..0.3);
                    }
                    t
                })
                .collect();
            let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let y: Vec<f64> = x.iter().map(|v| 2.0 * v + 1.0).collect();
            let z: Vec<f64> = x.iter().map(|v| 3.0 - v).collect();
            let wn = rng.gen_range(5..40);
            let mut wt = 0.0;
            let w_times: Vec<f64> = (0..wn)
                .map(|k| {
                    if k > 0 {
                        wt += rng.gen_range(0.1..0.5);
                    }
                    wt
                })
                .collect();
            let w: Vec<f64> = (0..wn).map(|_| rng.gen_range(1..4) as f64).collect();
            let on: Vec<f64> = times
                .iter()
                .map(|&s| if s > 3.0 { 1.0 } else { 0.0 })
                .collect();
            let sig = |name: &str, ts: &[f64], vs: Vec<f64>| {
                let meta = Arc::new(m.variable(name).unwrap().clone());
                Signal::from_codes(meta, ts.to_vec(), vs).unwrap()
            };
            Trace::new(vec![
                sig("x", &times, x),
                sig("y", &times, y),
                sig("z", &times, z),
                sig("w", &w_times, w),
                sig("on", &times, on),
            ])
            .unwrap()
        })
        .collect();
    (m, suite)
}

fn all_names(m: &ModelManifest) -> Vec<String> {
    m.variables.iter().map(|v| v.name.clone()).collect()
}

#[test]
fn groups_follow_block_and_domain() {
    let m = plant_like_manifest();
    let groups = group_variables(&m, &all_names(&m));
    let shape: Vec<(String, Vec<String>)> = groups
        .iter()
        .map(|g| (g.block.to_string(), g.variables.clone()))
        .collect();
    assert_eq!(
        shape,
        vec![
            ("root/a".into(), vec!["x".into(), "y".into(), "z".into()]),
            ("root/b".into(), vec!["w".into()]),
            ("root/b".into(), vec!["on".into()]),
        ]
    );
}

#[test]
fn observation_rows_cover_every_sample_and_the_end() {
    let (m, suite) = random_suite(3, 1);
    let groups = group_variables(&m, &["w".to_string()]);
    let obs = build_observations(&groups[0], &suite, None).unwrap();
    let w = suite[0].signal("w").unwrap();
    let extra = usize::from(w.last_time() < suite[0].end());
    assert_eq!(obs.rows.len(), w.len() + extra);
}

#[test]
fn linear_relations_are_found_on_the_suite() {
    let (m, suite) = random_suite(5, 10);
    let props = mine(&suite, &m, &all_names(&m), &MiningConfig::default()).unwrap();
    let found = assertions(&props);
    assert!(found.contains(&"alw (y - 2*x == 1)"), "{found:?}");
    assert!(found.contains(&"alw (x + z == 3)"), "{found:?}");
    assert!(found.contains(&"alw (w > 0)"), "{found:?}");
    assert!(found.contains(&"alw (w <= 3)"), "{found:?}");
    let ids: Vec<String> = (1..=props.len()).map(|i| format!("psi{i}")).collect();
    assert_eq!(props.iter().map(|p| p.id.clone()).collect::<Vec<_>>(), ids);
}

#[test]
fn spec_file_round_trips_mined_properties() {
    let (m, suite) = random_suite(6, 4);
    let props = mine(&suite, &m, &all_names(&m), &MiningConfig::default()).unwrap();
    let entries = parse_spec(&render_spec(&props)).unwrap();
    assert_eq!(
        entries,
        props
            .iter()
            .map(MinedProperty::to_entry)
            .collect::<Vec<_>>()
    );
}

#[test]
fn mining_rejects_unknown_and_empty_inputs() {
    let m = plant_like_manifest();
    assert_eq!(
        mine(&[], &m, &all_names(&m), &MiningConfig::default()),
        Err(MinerError::NoPassingTraces)
    );
    let (_, suite) = random_suite(1, 1);
    assert_eq!(
        mine(&suite, &m, &["nope".to_string()], &MiningConfig::default()),
        Err(MinerError::UnknownVariable("nope".into()))
    );
}

proptest! {
    #![proptest_config(ProptestConfig {
        cases: 48,
        rng_seed: proptest::test_runner::RngSeed::Fixed(23),
        ..ProptestConfig::default()
    })]

    #[test]
    fn mined_properties_hold_densely_on_mining_traces(seed in any::<u64>(), gate in 0.0f64..0.999) {
        let (m, suite) = random_suite(seed, 3);
        let config = MiningConfig { significance: gate, grid_step: None };
        let props = mine(&suite, &m, &all_names(&m), &config).unwrap();
        for p in &props {
            for tr in &suite {
                let v = violation_intervals(&p.formula(), tr, &EvalOptions::default()).unwrap();
                prop_assert!(v.is_empty(), "{} violated on {:?}", p.assertion, v);
            }
        }
    }

    #[test]
    fn mining_is_deterministic_and_suppression_idempotent(seed in any::<u64>()) {
        let (m, suite) = random_suite(seed, 2);
        let a = mine(&suite, &m, &all_names(&m), &MiningConfig::default()).unwrap();
        let b = mine(&suite, &m, &all_names(&m), &MiningConfig::default()).unwrap();
        prop_assert_eq!(&a, &b);
        let again = cpsexplain::miner::suppress_implied(a.clone());
        prop_assert_eq!(again, a);
    }

    #[test]
    fn every_surviving_property_clears_the_gate(seed in any::<u64>(), gate in 0.0f64..0.999) {
        let (m, suite) = random_suite(seed, 2);
        let config = MiningConfig { significance: gate, grid_step: None };
        for p in mine(&suite, &m, &all_names(&m), &config).unwrap() {
            prop_assert!(p.confidence > gate);
        }
    }
}

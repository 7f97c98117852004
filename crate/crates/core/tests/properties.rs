// SPDX-License-Identifier: Apache-2.0

//! Property tests over generated machines and configurations.

mod common;

use std::collections::BTreeSet;

use common::{corrupt, permutation_machine, random_input, Corruption, CORRUPTIONS};
use proptest::prelude::*;
use qtm::cli::machine_file::{parse_source, print_machine, MachineKind};
use qtm::compat::{bv_form, counter_tape_view, encode_extra_symbols, example_p, example_s, from_bv, from_counter_tape};
use qtm::configuration::Configuration;
use qtm::distribution::{ppd_of, Ppd};
use qtm::evolution::{isometry_check, Qtm};
use qtm::machine::{Direction, LocalCondition, Machine, Symbol, DEFAULT_UNITARITY_TOLERANCE};
use qtm::observation::{enumerate_runs, RunEvent, TauSchedule, DEFAULT_NODE_BUDGET};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn configuration(m: &Machine, state: usize, counter: u64, left: &[usize], right: &[usize]) -> Configuration {
    let states: Vec<_> = m.states().states().collect();
    let symbols: Vec<Symbol> = m.alphabet().symbols().collect();
    let q = states[state % states.len()];
    let counter = if m.is_source(q) || m.is_target(q) { counter } else { 0 };
    let word = |w: &[usize]| w.iter().map(|i| symbols[i % symbols.len()]).collect();
    Configuration::canonical(word(left), q, word(right), counter)
}

#[test]
fn generator_covers_mixing_and_both_directions() {
    let machines: Vec<_> = (0..50).map(permutation_machine).collect();
    assert!(machines.iter().any(|g| g.rows.iter().any(|r| r.1.len() == 2)));
    assert!(machines.iter().any(|g| g.rows.iter().all(|r| r.1.len() == 1)));
    for d in [Direction::L, Direction::R] {
        assert!(machines.iter().any(|g| g.rows.iter().any(|r| r.1.iter().any(|e| e.0 .2 == d))));
    }
    assert!(machines.iter().any(|g| g.alphabet.len() == 3));
}

fn expected_condition(how: Corruption) -> LocalCondition {
    match how {
        Corruption::ScaledRow => LocalCondition::UnitRows,
        Corruption::SharedImage | Corruption::SkewedRow => LocalCondition::OrthogonalRows,
        Corruption::OpposedMoves => LocalCondition::SeparatedMoves,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn generated_machines_are_valid_isometries(seed in 0u64..10_000) {
        let m = permutation_machine(seed).machine();
        prop_assert!(m.validate(DEFAULT_UNITARITY_TOLERANCE).valid);
        prop_assert!(isometry_check(&m, 3).max_deviation <= 1e-8);
    }

    #[test]
    fn each_corruption_breaks_its_own_condition(seed in 0u64..10_000, kind in 0usize..4) {
        let how = CORRUPTIONS[kind];
        let m = corrupt(&permutation_machine(seed), how, seed).machine();
        let report = m.validate(DEFAULT_UNITARITY_TOLERANCE);
        let hit: BTreeSet<_> = report.violations.iter().map(|v| v.condition).collect();
        prop_assert_eq!(hit, BTreeSet::from([expected_condition(how)]));
        prop_assert!(isometry_check(&m, 2).max_deviation >= 1e-3);
    }

    #[test]
    fn machine_files_round_trip(seed in 0u64..10_000) {
        let d = permutation_machine(seed).description();
        let text = print_machine(&d, MachineKind::Qtm);
        let back = parse_source(&text).unwrap();
        prop_assert_eq!(back.kind, MachineKind::Qtm);
        prop_assert_eq!(print_machine(&back.description, MachineKind::Qtm), text);
        prop_assert_eq!(qtm::machine::build_machine(&back.description).unwrap(), qtm::machine::build_machine(&d).unwrap());
    }

    #[test]
    fn looped_form_round_trips(seed in 0u64..10_000) {
        let m = permutation_machine(seed).machine();
        let b = bv_form(&m).unwrap();
        let text = print_machine(&b.to_description(), MachineKind::Bv);
        let parsed = qtm::cli::machine_file::parse_machine(&text).unwrap();
        prop_assert_eq!(parsed, qtm::cli::machine_file::ParsedMachine::Bv(b.clone()));
        prop_assert_eq!(from_bv(&b).unwrap(), m);
    }

    #[test]
    fn evolution_is_reversible_and_monotone(seed in 0u64..10_000, steps in 1usize..40) {
        let qtm = Qtm::new(permutation_machine(seed).machine()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let phi = random_input(qtm.machine(), 3, 5, &mut rng);
        let mut cur = phi.clone();
        let mut prev = ppd_of(qtm.machine(), &cur).unwrap();
        for _ in 0..steps {
            let next = qtm.step(&cur);
            prop_assert!(qtm.step_backward(&next).max_coefficient_distance(&cur) <= 1e-9);
            prop_assert!((next.norm() - 1.0).abs() <= 1e-9);
            let p = ppd_of(qtm.machine(), &next).unwrap();
            prop_assert!(prev.leq(&p));
            prev = p;
            cur = next;
        }
    }

    #[test]
    fn encodings_are_bijective(
        which in 0usize..2,
        state in 0usize..8,
        counter in 0u64..50,
        left in prop::collection::vec(0usize..3, 0..6),
        right in prop::collection::vec(0usize..3, 0..6),
    ) {
        let m = if which == 0 { example_p() } else { example_s() };
        let c = configuration(&m, state, counter, &left, &right);
        let enc = encode_extra_symbols(&m).unwrap();
        let e = enc.encode(&c);
        prop_assert!(e.counter() == 0);
        prop_assert_eq!(enc.decode(&e).unwrap(), c.clone());
        let view = counter_tape_view(&m, &c);
        prop_assert_eq!(view.counter.cells.len() as u64, c.counter());
        prop_assert_eq!(from_counter_tape(&m, &view).unwrap(), c);
    }

    #[test]
    fn encoding_is_injective(
        a in (0usize..8, 0u64..6, prop::collection::vec(0usize..3, 0..4), prop::collection::vec(0usize..3, 0..4)),
        b in (0usize..8, 0u64..6, prop::collection::vec(0usize..3, 0..4), prop::collection::vec(0usize..3, 0..4)),
    ) {
        let m = example_s();
        let enc = encode_extra_symbols(&m).unwrap();
        let (x, y) = (configuration(&m, a.0, a.1, &a.2, &a.3), configuration(&m, b.0, b.1, &b.2, &b.3));
        prop_assert_eq!(x == y, enc.encode(&x) == enc.encode(&y));
    }

    #[test]
    fn observed_outputs_stick(seed in 0u64..10_000, stride in 1usize..4, offset in 0usize..3) {
        let qtm = Qtm::new(permutation_machine(seed).machine()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let phi = random_input(qtm.machine(), 2, 4, &mut rng);
        let tau = TauSchedule::every(stride, offset).unwrap();
        let tree = enumerate_runs(&qtm, &phi, &tau, 10, DEFAULT_NODE_BUDGET).unwrap();
        for id in 0..tree.node_count() {
            let node = tree.node(id);
            if let Some(parent) = node.parent {
                if let Some(n) = tree.node(parent).observed {
                    prop_assert_eq!(node.observed, Some(n));
                }
                prop_assert!(node.probability <= tree.node(parent).probability + 1e-12);
            }
            // A measurement follows the step taken at an observed time.
            if let RunEvent::Measure(_) = node.event {
                prop_assert!(tau.observes(node.depth - 1));
            }
        }
    }

    #[test]
    fn ppd_serialization_round_trips(masses in prop::collection::btree_map(0u64..20, 0.0f64..0.05, 0..10)) {
        let p = Ppd::from_entries(masses).unwrap();
        let back = Ppd::parse(&p.serialize()).unwrap();
        prop_assert!(p.max_distance(&back) <= 1e-11);
        prop_assert_eq!(p.support().collect::<Vec<_>>(), back.support().collect::<Vec<_>>());
    }

    #[test]
    fn schedules_print_and_parse(stride in 1usize..9, offset in 0usize..9, list in prop::collection::btree_set(0usize..40, 1..6)) {
        for tau in [TauSchedule::every(stride, offset).unwrap(), TauSchedule::list(list.iter().copied().collect()).unwrap()] {
            let back = TauSchedule::parse(&tau.to_string()).unwrap();
            prop_assert_eq!(&back, &tau);
            for i in 0..20 {
                prop_assert!(tau.observes(tau.tau(i)));
                prop_assert!(tau.tau(i) < tau.tau(i + 1));
            }
        }
    }
}

mod common;

use cncc_core::model::reacted_solution;
use cncc_core::{
    builtin_cncc_learning, builtin_cncc_recognition, check_confluence, check_termination,
    dataflow_closure_check, explore, run, run_from, ChamState, Confluence, Hormone, HormoneGate,
    RunConfig, SchedulerPolicy, Termination,
};

const LEARNING: [&str; 6] = ["TS_SC", "TS_DL", "TS_CC", "TS_EL", "TS_RL", "TS_IL"];

fn policies() -> [SchedulerPolicy; 3] {
    [SchedulerPolicy::Lexicographic, SchedulerPolicy::Fifo, SchedulerPolicy::Random]
}

#[test]
fn learning_sequence_under_every_policy_and_seed() {
    let p = builtin_cncc_learning();
    for scheduler in policies() {
        for seed in 0..20 {
            let cfg = RunConfig {
                scheduler,
                seed,
                ..RunConfig::default()
            };
            let t = run(&p, &p.solution, &cfg);
            assert_eq!(t.rule_sequence(), LEARNING, "{scheduler} {seed}");
            assert_eq!(t.terminal, reacted_solution());
            assert!(!t.truncated);
        }
    }
}

#[test]
fn recognition_has_four_steps() {
    let p = builtin_cncc_recognition();
    let t = run(&p, &p.solution, &RunConfig::default());
    assert_eq!(t.rule_sequence(), ["TS_SC", "TS_DL", "TS_CC", "TS_EL"]);
    assert_eq!(t.terminal, reacted_solution());
}

#[test]
fn builtin_state_spaces_are_linear() {
    for (p, states) in [(builtin_cncc_learning(), 7), (builtin_cncc_recognition(), 5)] {
        let g = explore(&p, &p.solution, 64).unwrap();
        assert_eq!(g.states.len(), states);
        assert_eq!(g.edges.len(), states - 1);
        assert_eq!(g.terminals.len(), 1);
        assert_eq!(g.longest_path(), Some(states - 1));
        assert_eq!(check_termination(&g), Termination::Terminating);
        assert!(matches!(check_confluence(&g), Confluence::Confluent { .. }));
    }
}

#[test]
fn fixture_verdicts() {
    let diamond = common::load(common::fixture("diamond.cham"));
    let g = explore(&diamond, &diamond.solution, 64).unwrap();
    assert_eq!((g.states.len(), g.edges.len()), (4, 4));
    assert_eq!(
        check_confluence(&g),
        Confluence::Confluent {
            terminal: "B { DL; SC }".into()
        }
    );

    let fork = common::load(common::fixture("fork.cham"));
    let g = explore(&fork, &fork.solution, 64).unwrap();
    assert!(matches!(check_confluence(&g), Confluence::NonConfluent { witness: Some(_) }));
    assert_eq!(check_termination(&g), Termination::Terminating);

    let cycle = common::load(common::fixture("cycle.cham"));
    let g = explore(&cycle, &cycle.solution, 64).unwrap();
    assert_eq!(
        check_termination(&g),
        Termination::Cycle {
            witness: vec!["A { SC }".into(), "B { SC }".into(), "A { SC }".into()]
        }
    );
}

#[test]
fn exploring_past_the_bound_fails() {
    let p = builtin_cncc_learning();
    let err = explore(&p, &p.solution, 3).unwrap_err();
    assert_eq!(err.bound, 3);
    assert!(err.partial.states.len() <= 3);
}

#[test]
fn zero_thresholds_match_ungated_traces() {
    let mut gate = HormoneGate::neutral();
    for h in Hormone::ALL {
        gate = gate.with_threshold(h, 0);
    }
    for p in [builtin_cncc_learning(), builtin_cncc_recognition()] {
        for scheduler in policies() {
            let plain = RunConfig {
                scheduler,
                seed: 3,
                ..RunConfig::default()
            };
            let gated = RunConfig {
                gate: gate.clone(),
                ..plain.clone()
            };
            assert_eq!(run(&p, &p.solution, &plain).to_json(), run(&p, &p.solution, &gated).to_json());
        }
    }
}

#[test]
fn depleted_hormone_blocks_second_iteration_until_released() {
    let p = builtin_cncc_learning();
    let gate = HormoneGate::neutral()
        .with_threshold(Hormone::Rl, 1)
        .with_initial_level(Hormone::Rl, 1);
    let cfg = RunConfig {
        gate: gate.clone(),
        ..RunConfig::default()
    };
    let first = run(&p, &p.solution, &cfg);
    assert_eq!(first.rule_sequence(), LEARNING);
    assert_eq!(first.final_hormones.get(Hormone::Rl), 0);

    let second = run_from(
        &p,
        ChamState {
            solution: p.solution.clone(),
            hormones: first.final_hormones.clone(),
        },
        &cfg,
    );
    assert_eq!(second.rule_sequence(), ["TS_SC", "TS_DL", "TS_CC", "TS_EL"]);

    let mut hormones = second.final_hormones.clone();
    hormones.release(Hormone::Rl, 1);
    let resumed = run_from(
        &p,
        ChamState {
            solution: second.terminal.clone(),
            hormones,
        },
        &cfg,
    );
    assert_eq!(resumed.rule_sequence(), ["TS_RL", "TS_IL"]);
    assert_eq!(resumed.terminal, reacted_solution());
}

#[test]
fn random_scheduler_is_reproducible() {
    let p = common::load(common::fixture("diamond.cham"));
    let cfg = RunConfig {
        scheduler: SchedulerPolicy::Random,
        seed: 99,
        ..RunConfig::default()
    };
    let a = run(&p, &p.solution, &cfg).to_json();
    assert_eq!(a, run(&p, &p.solution, &cfg).to_json());
    let orders: std::collections::BTreeSet<Vec<String>> = (0..32)
        .map(|seed| {
            let t = run(&p, &p.solution, &RunConfig { seed, ..cfg.clone() });
            t.rule_sequence().into_iter().map(str::to_owned).collect()
        })
        .collect();
    assert_eq!(orders.len(), 2);
}

#[test]
fn trace_replay_reaches_terminal() {
    let p = builtin_cncc_learning();
    let gate = HormoneGate::neutral();
    let t = run(&p, &p.solution, &RunConfig::default());
    let end = t.replay(&p, ChamState::new(p.solution.clone(), &gate), &gate).unwrap();
    assert_eq!(end.solution, t.terminal);
}

#[test]
fn unclosed_fixture_reports_unbound_input() {
    let p = common::load(common::fixture("unclosed.cham"));
    let report = dataflow_closure_check(&p);
    assert!(!report.is_closed());
    assert_eq!(report.unbound_inputs.len(), 1);
    assert_eq!(report.unbound_inputs[0].rule, "R");
}

//! Rewriting: enabledness, firing, scheduled runs with traces, and
//! exhaustive state-space exploration with confluence and termination
//! verdicts.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::gate::{endocrine_gate_eval, HormoneGate, HormoneLevels};
use crate::program::{ChamProgram, ReactionRule};
use crate::term::Solution;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EngineError {
    #[error("unknown rule `{0}`")]
    UnknownRule(String),
    #[error("rule `{0}` is not enabled")]
    RuleNotEnabled(String),
}

/// A solution together with the hormone reservoir.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ChamState {
    pub solution: Solution,
    pub hormones: HormoneLevels,
}

impl ChamState {
    pub fn new(solution: Solution, gate: &HormoneGate) -> Self {
        Self {
            solution,
            hormones: gate.initial(),
        }
    }
}

fn rule_enabled(rule: &ReactionRule, state: &ChamState, gate: &HormoneGate) -> bool {
    state.solution.contains(rule.consumes()) && endocrine_gate_eval(gate, rule, &state.hormones)
}

/// Names of the rules that can fire in `state`, in lexicographic order.
pub fn enabled_rules(state: &ChamState, program: &ChamProgram, gate: &HormoneGate) -> Vec<String> {
    let mut names: Vec<String> = program
        .rules
        .iter()
        .filter(|r| rule_enabled(r, state, gate))
        .map(|r| r.name().to_owned())
        .collect();
    names.sort();
    names
}

/// `state - consumes + produces`, with the reservoir updated.
pub fn fire(
    state: &ChamState,
    rule_name: &str,
    program: &ChamProgram,
    gate: &HormoneGate,
) -> Result<ChamState, EngineError> {
    let rule = program
        .rule(rule_name)
        .ok_or_else(|| EngineError::UnknownRule(rule_name.to_owned()))?;
    fire_rule(state, rule, gate)
}

fn fire_rule(state: &ChamState, rule: &ReactionRule, gate: &HormoneGate) -> Result<ChamState, EngineError> {
    if !endocrine_gate_eval(gate, rule, &state.hormones) {
        return Err(EngineError::RuleNotEnabled(rule.name().to_owned()));
    }
    let rest = state
        .solution
        .remove(rule.consumes())
        .ok_or_else(|| EngineError::RuleNotEnabled(rule.name().to_owned()))?;
    let mut hormones = state.hormones.clone();
    hormones.apply(rule);
    Ok(ChamState {
        solution: crate::term::solution_union(&rest, rule.produces()),
        hormones,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SchedulerPolicy {
    /// Smallest enabled rule name.
    #[default]
    Lexicographic,
    /// The rule that has been continuously enabled the longest; ties go to
    /// declaration order.
    Fifo,
    /// Uniform choice from a seeded ChaCha stream.
    Random,
}

impl SchedulerPolicy {
    pub const ALL: [SchedulerPolicy; 3] = [
        SchedulerPolicy::Lexicographic,
        SchedulerPolicy::Fifo,
        SchedulerPolicy::Random,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SchedulerPolicy::Lexicographic => "lex",
            SchedulerPolicy::Fifo => "fifo",
            SchedulerPolicy::Random => "random",
        }
    }
}

impl fmt::Display for SchedulerPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SchedulerPolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "lex" | "lexicographic" => Ok(SchedulerPolicy::Lexicographic),
            "fifo" => Ok(SchedulerPolicy::Fifo),
            "random" => Ok(SchedulerPolicy::Random),
            other => Err(format!("unknown scheduler `{other}` (expected lex, fifo or random)")),
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub scheduler: SchedulerPolicy,
    pub max_steps: usize,
    pub seed: u64,
    pub gate: HormoneGate,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            scheduler: SchedulerPolicy::Lexicographic,
            max_steps: 100,
            seed: 0,
            gate: HormoneGate::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TraceStep {
    pub index: usize,
    pub rule: String,
    pub consumed: Vec<String>,
    pub produced: Vec<String>,
    pub hormones: BTreeMap<String, u64>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trace {
    /// Free-form program label for the serialized document.
    pub program: String,
    pub scheduler: SchedulerPolicy,
    pub seed: u64,
    pub steps: Vec<TraceStep>,
    pub terminal: Solution,
    pub final_hormones: HormoneLevels,
    pub truncated: bool,
}

#[derive(Serialize)]
struct TraceDoc<'a> {
    program: &'a str,
    scheduler: &'a str,
    seed: u64,
    steps: &'a [TraceStep],
    terminal: Vec<String>,
    truncated: bool,
}

impl Trace {
    pub fn rule_sequence(&self) -> Vec<&str> {
        self.steps.iter().map(|s| s.rule.as_str()).collect()
    }

    pub fn to_json(&self) -> String {
        let doc = TraceDoc {
            program: &self.program,
            scheduler: self.scheduler.name(),
            seed: self.seed,
            steps: &self.steps,
            terminal: self.terminal.render_entries(),
            truncated: self.truncated,
        };
        serde_json::to_string_pretty(&doc).expect("trace serializes")
    }

    /// Re-fires every step from `initial` and returns the resulting state.
    pub fn replay(&self, program: &ChamProgram, initial: ChamState, gate: &HormoneGate) -> Result<ChamState, EngineError> {
        self.steps
            .iter()
            .try_fold(initial, |state, step| fire(&state, &step.rule, program, gate))
    }
}

/// Runs from `initial` with the reservoir at the gate's initial levels.
pub fn run(program: &ChamProgram, initial: &Solution, cfg: &RunConfig) -> Trace {
    run_from(program, ChamState::new(initial.clone(), &cfg.gate), cfg)
}

/// Fires scheduler-chosen enabled rules until none is enabled or
/// `cfg.max_steps` firings happened.
pub fn run_from(program: &ChamProgram, initial: ChamState, cfg: &RunConfig) -> Trace {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut state = initial;
    let mut steps = Vec::new();
    // fifo bookkeeping: rule index -> step at which it became enabled
    let mut enabled_since: HashMap<usize, usize> = HashMap::new();
    let mut truncated = false;

    loop {
        let mut enabled: Vec<usize> = program
            .rules
            .iter()
            .enumerate()
            .filter(|(_, r)| rule_enabled(r, &state, &cfg.gate))
            .map(|(i, _)| i)
            .collect();
        if enabled.is_empty() {
            break;
        }
        if steps.len() >= cfg.max_steps {
            truncated = true;
            break;
        }
        enabled_since.retain(|i, _| enabled.contains(i));
        for &i in &enabled {
            enabled_since.entry(i).or_insert(steps.len());
        }
        enabled.sort_by(|a, b| program.rules[*a].name().cmp(program.rules[*b].name()));

        let chosen = match cfg.scheduler {
            SchedulerPolicy::Lexicographic => enabled[0],
            SchedulerPolicy::Fifo => *enabled
                .iter()
                .min_by_key(|i| (enabled_since[*i], **i))
                .expect("non-empty"),
            SchedulerPolicy::Random => enabled[rng.random_range(0..enabled.len())],
        };
        let rule = &program.rules[chosen];
        state = fire_rule(&state, rule, &cfg.gate).expect("enabled rule fires");
        enabled_since.remove(&chosen);
        steps.push(TraceStep {
            index: steps.len() + 1,
            rule: rule.name().to_owned(),
            consumed: rule.consumes().render_entries(),
            produced: rule.produces().render_entries(),
            hormones: state.hormones.snapshot(),
        });
    }

    Trace {
        program: String::new(),
        scheduler: cfg.scheduler,
        seed: cfg.seed,
        steps,
        terminal: state.solution,
        final_hormones: state.hormones,
        truncated,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Edge {
    pub from: usize,
    pub rule: String,
    pub to: usize,
}

/// Reachability graph over solutions. State 0 is the initial solution.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StateGraph {
    pub states: Vec<Solution>,
    pub edges: Vec<Edge>,
    pub terminals: Vec<usize>,
    /// True when the frontier emptied before the state bound was hit.
    pub complete: bool,
}

impl StateGraph {
    pub fn state_key(&self, i: usize) -> String {
        self.states[i].canonical()
    }

    pub fn out_degree(&self, i: usize) -> usize {
        self.edges.iter().filter(|e| e.from == i).count()
    }

    fn successors(&self) -> Vec<Vec<usize>> {
        let mut succ = vec![Vec::new(); self.states.len()];
        for e in &self.edges {
            succ[e.from].push(e.to);
        }
        succ
    }

    /// Length of the longest firing sequence, or `None` if the graph has a
    /// cycle.
    pub fn longest_path(&self) -> Option<usize> {
        let order = topo_order(&self.successors())?;
        let succ = self.successors();
        let mut best = vec![0usize; self.states.len()];
        for &v in order.iter().rev() {
            best[v] = succ[v].iter().map(|w| best[*w] + 1).max().unwrap_or(0);
        }
        best.first().copied()
    }

    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph cham {\n  rankdir=LR;\n  node [shape=box, fontsize=9];\n");
        for (i, s) in self.states.iter().enumerate() {
            let label = s.canonical().replace('"', "\\\"").replace(" // ", "\\n");
            let shape = if self.terminals.contains(&i) {
                ", peripheries=2"
            } else {
                ""
            };
            out.push_str(&format!("  s{i} [label=\"{label}\"{shape}];\n"));
        }
        for e in &self.edges {
            out.push_str(&format!("  s{} -> s{} [label=\"{}\"];\n", e.from, e.to, e.rule));
        }
        out.push_str("}\n");
        out
    }
}

fn topo_order(succ: &[Vec<usize>]) -> Option<Vec<usize>> {
    let n = succ.len();
    let mut indeg = vec![0usize; n];
    for s in succ {
        for &w in s {
            indeg[w] += 1;
        }
    }
    let mut queue: VecDeque<usize> = (0..n).filter(|v| indeg[*v] == 0).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(v) = queue.pop_front() {
        order.push(v);
        for &w in &succ[v] {
            indeg[w] -= 1;
            if indeg[w] == 0 {
                queue.push_back(w);
            }
        }
    }
    (order.len() == n).then_some(order)
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("state bound {bound} exceeded")]
pub struct BoundExceeded {
    pub bound: usize,
    pub partial: StateGraph,
}

/// Breadth-first closure of every interleaving, ungated, visiting at most
/// `state_bound` distinct solutions.
pub fn explore(program: &ChamProgram, initial: &Solution, state_bound: usize) -> Result<StateGraph, BoundExceeded> {
    let gate = HormoneGate::default();
    let mut graph = StateGraph {
        states: vec![initial.clone()],
        edges: Vec::new(),
        terminals: Vec::new(),
        complete: false,
    };
    let mut index: HashMap<Solution, usize> = HashMap::from([(initial.clone(), 0)]);
    let mut frontier = VecDeque::from([0usize]);
    let mut rules: Vec<&ReactionRule> = program.rules.iter().collect();
    rules.sort_by(|a, b| a.name().cmp(b.name()));

    if state_bound == 0 {
        return Err(BoundExceeded { bound: 0, partial: graph });
    }

    while let Some(current) = frontier.pop_front() {
        let state = ChamState {
            solution: graph.states[current].clone(),
            hormones: HormoneLevels::default(),
        };
        let mut fired = false;
        for rule in &rules {
            if !rule_enabled(rule, &state, &gate) {
                continue;
            }
            fired = true;
            let next = fire_rule(&state, rule, &gate).expect("enabled").solution;
            let to = match index.get(&next) {
                Some(&i) => i,
                None => {
                    if graph.states.len() >= state_bound {
                        graph.terminals.sort_unstable();
                        return Err(BoundExceeded {
                            bound: state_bound,
                            partial: graph,
                        });
                    }
                    let i = graph.states.len();
                    graph.states.push(next.clone());
                    index.insert(next, i);
                    frontier.push_back(i);
                    i
                }
            };
            graph.edges.push(Edge {
                from: current,
                rule: rule.name().to_owned(),
                to,
            });
        }
        if !fired {
            graph.terminals.push(current);
        }
    }
    graph.terminals.sort_unstable();
    graph.complete = true;
    Ok(graph)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "verdict", rename_all = "camelCase")]
pub enum Confluence {
    Confluent { terminal: String },
    /// Two distinct terminals, or `None` when the graph has no terminal at all.
    NonConfluent { witness: Option<(String, String)> },
    Unknown,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "verdict", rename_all = "camelCase")]
pub enum Termination {
    Terminating,
    /// A state sequence that starts and ends at the same state.
    Cycle { witness: Vec<String> },
    Unknown,
}

pub fn check_confluence(g: &StateGraph) -> Confluence {
    if !g.complete {
        return Confluence::Unknown;
    }
    match g.terminals.as_slice() {
        [only] => Confluence::Confluent {
            terminal: g.state_key(*only),
        },
        [] => Confluence::NonConfluent { witness: None },
        [a, b, ..] => Confluence::NonConfluent {
            witness: Some((g.state_key(*a), g.state_key(*b))),
        },
    }
}

pub fn check_termination(g: &StateGraph) -> Termination {
    if !g.complete {
        return Termination::Unknown;
    }
    match find_cycle(&g.successors()) {
        None => Termination::Terminating,
        Some(cycle) => Termination::Cycle {
            witness: cycle.into_iter().map(|i| g.state_key(i)).collect(),
        },
    }
}

pub(crate) fn find_cycle(succ: &[Vec<usize>]) -> Option<Vec<usize>> {
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        New,
        Active,
        Done,
    }
    let n = succ.len();
    let mut mark = vec![Mark::New; n];
    for root in 0..n {
        if mark[root] != Mark::New {
            continue;
        }
        // (vertex, next successor position)
        let mut stack: Vec<(usize, usize)> = vec![(root, 0)];
        mark[root] = Mark::Active;
        while let Some(&mut (v, ref mut pos)) = stack.last_mut() {
            if *pos < succ[v].len() {
                let w = succ[v][*pos];
                *pos += 1;
                match mark[w] {
                    Mark::New => {
                        mark[w] = Mark::Active;
                        stack.push((w, 0));
                    }
                    Mark::Active => {
                        let start = stack.iter().position(|(u, _)| *u == w).expect("on stack");
                        let mut cycle: Vec<usize> = stack[start..].iter().map(|(u, _)| *u).collect();
                        cycle.push(w);
                        return Some(cycle);
                    }
                    Mark::Done => {}
                }
            } else {
                mark[v] = Mark::Done;
                stack.pop();
            }
        }
    }
    None
}

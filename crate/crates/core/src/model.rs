//! The built-in CNCC learning and recognition programs and the static
//! analyses run over them: dataflow closure and dependency ordering.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;
use thiserror::Error;

use crate::engine::find_cycle;
use crate::parser::parse_molecule;
use crate::program::{ChamProgram, Declarations, ReactionRule};
use crate::term::{DataKind, DataSymbol, Molecule, Processor, Solution};

use DataSymbol::*;

/// One processing stage: its initial (`SS_*`) and reacted (`SM_*`) forms.
struct StageForms {
    processor: Processor,
    initial: &'static [&'static str],
    reacted: &'static [&'static str],
}

const STAGES: [StageForms; 6] = [
    StageForms {
        processor: Processor::Sc,
        initial: &["i(Mi) <> i(Mn) <> i(Es) <> g(EH_SC) <> SC <> o(Sa) <> o(Sv) <> d(EH_SC)"],
        reacted: &["SC <> i(Mi) <> i(Mn) <> i(Es) <> g(EH_SC) <> o(Sa) <> o(Sv) <> d(EH_SC)"],
    },
    StageForms {
        processor: Processor::Dl,
        initial: &[
            "i(Sa) <> i(Ma) <> g(EH_DL) <> DL <> o(Fa)",
            "i(Sv) <> i(Mv) <> DL <> o(Fv) <> d(EH_DL)",
        ],
        reacted: &[
            "DL <> i(Sa) <> i(Ma) <> g(EH_DL) <> o(Fa)",
            "DL <> i(Sv) <> i(Mv) <> o(Fv) <> d(EH_DL)",
        ],
    },
    StageForms {
        processor: Processor::Rl,
        initial: &["i(Cp) <> g(EH_RL) <> RL <> o(Ei) <> o(Es) <> d(EH_RL)"],
        reacted: &["RL <> i(Cp) <> g(EH_RL) <> o(Ei) <> o(Es) <> d(EH_RL)"],
    },
    StageForms {
        processor: Processor::Il,
        initial: &[
            "i(Ei) <> i(Cp) <> g(EH_IL) <> IL <> o(Mp) <> o(Ma) <> o(Mv) <> o(Mt) <> o(Ms) <> d(EH_IL)",
        ],
        reacted: &[
            "IL <> i(Ei) <> i(Cp) <> g(EH_IL) <> o(Mp) <> o(Ma) <> o(Mv) <> o(Mt) <> o(Ms) <> d(EH_IL)",
        ],
    },
    StageForms {
        processor: Processor::Cc,
        initial: &[
            "i(Fa) <> i(Mt) <> g(EH_CC) <> CC <> o(Ct) <> d(EH_CC)",
            "i(Fv) <> i(Ms) <> g(EH_CC) <> CC <> o(Cs) <> d(EH_CC)",
        ],
        reacted: &[
            "CC <> i(Fa) <> i(Mt) <> g(EH_CC) <> o(Ct) <> d(EH_CC)",
            "CC <> i(Fv) <> i(Ms) <> g(EH_CC) <> o(Cs) <> d(EH_CC)",
        ],
    },
    StageForms {
        processor: Processor::El,
        initial: &["i(Ct) <> i(Cs) <> i(Fa) <> i(Fv) <> g(EH_EL) <> EL <> o(Cp) <> d(EH_EL)"],
        reacted: &["EL <> i(Ct) <> i(Cs) <> i(Fa) <> i(Fv) <> g(EH_EL) <> o(Cp) <> d(EH_EL)"],
    },
];

/// Feedback and media symbols seeded from outside on the first iteration.
pub const EXTERNALS: [DataSymbol; 7] = [Mi, Mn, Es, Ma, Mv, Mt, Ms];

pub fn initial_part(p: Processor) -> String {
    format!("SS_{}", p.name())
}

pub fn reacted_part(p: Processor) -> String {
    format!("SM_{}", p.name())
}

pub fn rule_name(p: Processor) -> String {
    format!("TS_{}", p.name())
}

fn molecules(texts: &[&str]) -> Vec<Molecule> {
    let decls = Declarations::all();
    texts
        .iter()
        .map(|t| parse_molecule(t, &decls).expect("builtin molecule parses"))
        .collect()
}

fn stage(p: Processor) -> &'static StageForms {
    STAGES.iter().find(|s| s.processor == p).expect("six stages")
}

/// `SS_x` sub-solution of one stage.
pub fn initial_form(p: Processor) -> Solution {
    let mut s = Solution::new();
    for m in molecules(stage(p).initial) {
        s.add(initial_part(p), m);
    }
    s
}

/// `SM_x` sub-solution of one stage.
pub fn reacted_form(p: Processor) -> Solution {
    let mut s = Solution::new();
    for m in molecules(stage(p).reacted) {
        s.add(reacted_part(p), m);
    }
    s
}

/// The fully reacted solution `SM_SC // ... // SM_IL`.
pub fn reacted_solution() -> Solution {
    Processor::ALL
        .iter()
        .fold(Solution::new(), |acc, p| crate::term::solution_union(&acc, &reacted_form(*p)))
}

/// `TS_x`: rewrite `SS_x` into `SM_x`. For every non-external input, the
/// reacted molecule that outputs it is required as a catalyst, which is
/// how data dependencies between stages become enabling conditions.
fn stage_rule(p: Processor) -> ReactionRule {
    let initial = initial_form(p);
    let reacted = reacted_form(p);
    let externals: BTreeSet<DataSymbol> = EXTERNALS.into_iter().collect();
    let inputs: BTreeSet<DataSymbol> = initial
        .entries()
        .flat_map(|(_, m)| m.inputs().collect::<Vec<_>>())
        .filter(|d| !externals.contains(d))
        .collect();

    let mut catalysts = Solution::new();
    for d in inputs {
        let producer = STAGES
            .iter()
            .filter(|s| s.processor != p)
            .flat_map(|s| {
                molecules(s.reacted)
                    .into_iter()
                    .map(move |m| (reacted_part(s.processor), m))
            })
            .find(|(_, m)| m.outputs().any(|o| o == d))
            .expect("every internal input has a producer");
        if !catalysts.contains(&Solution::singleton(producer.0.clone(), producer.1.clone())) {
            catalysts.add(producer.0, producer.1);
        }
    }

    let consumes = crate::term::solution_union(&initial, &catalysts);
    let produces = crate::term::solution_union(&reacted, &catalysts);
    ReactionRule::new(rule_name(p), consumes, produces).expect("non-empty")
}

/// Rules in the order the stages are listed: SC, DL, RL, IL, CC, EL.
fn builtin_rules() -> Vec<ReactionRule> {
    STAGES.iter().map(|s| stage_rule(s.processor)).collect()
}

fn builtin(solution: Solution) -> ChamProgram {
    ChamProgram {
        decls: Declarations::all(),
        externals: EXTERNALS.into_iter().collect(),
        solution,
        rules: builtin_rules(),
    }
}

/// Six `SS_*` parts and the six stage rules.
pub fn builtin_cncc_learning() -> ChamProgram {
    let solution = STAGES
        .iter()
        .fold(Solution::new(), |acc, s| crate::term::solution_union(&acc, &initial_form(s.processor)));
    builtin(solution)
}

/// Same rules; RL and IL start already reacted, so only the perception and
/// decision stages can fire.
pub fn builtin_cncc_recognition() -> ChamProgram {
    let mut solution = Solution::new();
    for p in [Processor::Sc, Processor::Dl, Processor::Cc, Processor::El] {
        solution = crate::term::solution_union(&solution, &initial_form(p));
    }
    for p in [Processor::Rl, Processor::Il] {
        solution = crate::term::solution_union(&solution, &reacted_form(p));
    }
    builtin(solution)
}

/// `(inputs, outputs)` of a stage's compute contract.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StageSignature {
    pub inputs: BTreeSet<DataSymbol>,
    pub outputs: BTreeSet<DataSymbol>,
}

impl StageSignature {
    fn new(inputs: &[DataSymbol], outputs: &[DataSymbol]) -> Self {
        Self {
            inputs: inputs.iter().copied().collect(),
            outputs: outputs.iter().copied().collect(),
        }
    }
}

/// Compute contracts of the six stages.
pub fn stage_signatures() -> BTreeMap<String, StageSignature> {
    [
        (Processor::Sc, StageSignature::new(&[Mi, Mn, Es], &[Sa, Sv])),
        (Processor::Dl, StageSignature::new(&[Sa, Ma, Sv, Mv], &[Fa, Fv])),
        (Processor::Cc, StageSignature::new(&[Fa, Mt, Fv, Ms], &[Ct, Cs])),
        (Processor::El, StageSignature::new(&[Ct, Cs, Fa, Fv], &[Cp])),
        (Processor::Rl, StageSignature::new(&[Cp], &[Ei, Es])),
        (Processor::Il, StageSignature::new(&[Ei, Cp], &[Mp, Ma, Mv, Mt, Ms, Mn])),
    ]
    .into_iter()
    .map(|(p, s)| (rule_name(p), s))
    .collect()
}

/// Both programs plus symbol typing and stage contracts.
#[derive(Debug, Clone)]
pub struct CnccFramework {
    pub learning: ChamProgram,
    pub recognition: ChamProgram,
    pub token_types: BTreeMap<DataSymbol, DataKind>,
    pub stage_signatures: BTreeMap<String, StageSignature>,
}

impl CnccFramework {
    pub fn new() -> Self {
        Self {
            learning: builtin_cncc_learning(),
            recognition: builtin_cncc_recognition(),
            token_types: DataSymbol::ALL.iter().map(|d| (*d, d.kind())).collect(),
            stage_signatures: stage_signatures(),
        }
    }
}

impl Default for CnccFramework {
    fn default() -> Self {
        Self::new()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct RuleSymbol {
    pub rule: String,
    #[serde(serialize_with = "ser_symbol")]
    pub symbol: DataSymbol,
}

fn ser_symbol<S: serde::Serializer>(d: &DataSymbol, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(d.name())
}

fn ser_symbols<S: serde::Serializer>(ds: &BTreeSet<DataSymbol>, s: S) -> Result<S::Ok, S::Error> {
    s.collect_seq(ds.iter().map(|d| d.name()))
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ClosureReport {
    pub unbound_inputs: Vec<RuleSymbol>,
    pub unused_outputs: Vec<RuleSymbol>,
    #[serde(serialize_with = "ser_symbols")]
    pub externals_used: BTreeSet<DataSymbol>,
}

impl ClosureReport {
    pub fn is_closed(&self) -> bool {
        self.unbound_inputs.is_empty()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Checks that every symbol a rule reads is written by some rule or is
/// declared external. Rules are reported in declaration order, symbols in
/// symbol-table order.
pub fn dataflow_closure_check(p: &ChamProgram) -> ClosureReport {
    let produced: BTreeSet<DataSymbol> = p.rules.iter().flat_map(|r| r.output_symbols()).collect();
    let consumed: BTreeSet<DataSymbol> = p.rules.iter().flat_map(|r| r.input_symbols()).collect();
    let mut report = ClosureReport::default();
    for rule in &p.rules {
        for d in rule.input_symbols() {
            if p.externals.contains(&d) {
                report.externals_used.insert(d);
            } else if !produced.contains(&d) {
                report.unbound_inputs.push(RuleSymbol {
                    rule: rule.name().to_owned(),
                    symbol: d,
                });
            }
        }
        for d in rule.output_symbols() {
            if !consumed.contains(&d) {
                report.unused_outputs.push(RuleSymbol {
                    rule: rule.name().to_owned(),
                    symbol: d,
                });
            }
        }
    }
    report
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("cyclic dependency: {}", witness.join(" -> "))]
pub struct CyclicDependency {
    pub witness: Vec<String>,
}

/// Rules that can ever fire: everything they consume is in the initial
/// solution or produced by another such rule.
fn live_rules(p: &ChamProgram) -> Vec<&ReactionRule> {
    let mut available = p.solution.clone();
    let mut live = vec![false; p.rules.len()];
    loop {
        let mut changed = false;
        for (i, rule) in p.rules.iter().enumerate() {
            if live[i] {
                continue;
            }
            let ready = rule.consumes().entries().all(|(part, m)| {
                available.part(part).is_some_and(|bag| bag.count(m) > 0)
            });
            if ready {
                live[i] = true;
                changed = true;
                for (part, m) in rule.produces().entries() {
                    if available.part(part).is_none_or(|bag| bag.count(m) == 0) {
                        available.add(part, m.clone());
                    }
                }
            }
        }
        if !changed {
            break;
        }
    }
    p.rules
        .iter()
        .zip(live)
        .filter_map(|(r, l)| l.then_some(r))
        .collect()
}

/// Every topological order of the live rules under produce-before-consume
/// edges. External symbols are feedback seeded from outside and add no
/// edge. Orders are returned in lexicographic order of rule names.
pub fn dependency_order(p: &ChamProgram) -> Result<Vec<Vec<String>>, CyclicDependency> {
    let mut rules = live_rules(p);
    rules.sort_by(|a, b| a.name().cmp(b.name()));
    let n = rules.len();
    let mut succ = vec![Vec::new(); n];
    for (i, a) in rules.iter().enumerate() {
        let outs = a.output_symbols();
        for (j, b) in rules.iter().enumerate() {
            let feeds = b
                .input_symbols()
                .iter()
                .any(|d| outs.contains(d) && !p.externals.contains(d));
            if feeds {
                succ[i].push(j);
            }
        }
    }
    if let Some(cycle) = find_cycle(&succ) {
        return Err(CyclicDependency {
            witness: cycle.into_iter().map(|i| rules[i].name().to_owned()).collect(),
        });
    }

    let mut indeg = vec![0usize; n];
    for s in &succ {
        for &j in s {
            indeg[j] += 1;
        }
    }
    let mut orders = Vec::new();
    let mut current = Vec::with_capacity(n);
    let mut used = vec![false; n];
    enumerate_orders(&succ, &mut indeg, &mut used, &mut current, &mut |order| {
        orders.push(order.iter().map(|i| rules[*i].name().to_owned()).collect());
    });
    Ok(orders)
}

fn enumerate_orders(
    succ: &[Vec<usize>],
    indeg: &mut [usize],
    used: &mut [bool],
    current: &mut Vec<usize>,
    emit: &mut dyn FnMut(&[usize]),
) {
    if current.len() == succ.len() {
        emit(current);
        return;
    }
    for v in 0..succ.len() {
        if used[v] || indeg[v] != 0 {
            continue;
        }
        used[v] = true;
        current.push(v);
        for &w in &succ[v] {
            indeg[w] -= 1;
        }
        enumerate_orders(succ, indeg, used, current, emit);
        for &w in &succ[v] {
            indeg[w] += 1;
        }
        current.pop();
        used[v] = false;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{enabled_rules, fire, ChamState};
    use crate::gate::HormoneGate;
    use crate::parser::parse_program;
    use crate::term::{multiset_equal, Atom, Hormone};

    fn names(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn learning_shape() {
        let p = builtin_cncc_learning();
        assert_eq!(p.rules.len(), 6);
        assert_eq!(p.solution.part_count(), 6);
        assert_eq!(p.decls.data.len(), 17);
        assert_eq!(p.decls.hormones.len(), 6);
        let parts: Vec<&str> = p.solution.part_names().collect();
        assert_eq!(parts, vec!["SS_CC", "SS_DL", "SS_EL", "SS_IL", "SS_RL", "SS_SC"]);
    }

    #[test]
    fn saliency_rule_consumes_media_attention_and_feedback() {
        let p = builtin_cncc_learning();
        let rule = p.rule("TS_SC").unwrap();
        let (part, m) = rule.consumes().entries().next().unwrap();
        assert_eq!(part, "SS_SC");
        let atoms = m.atoms();
        assert_eq!(
            &atoms[..4],
            &[
                Atom::Input(Mi),
                Atom::Input(Mn),
                Atom::Input(Es),
                Atom::Generate(Hormone::Sc)
            ]
        );
        assert_eq!(rule.consumes().size(), 1);
    }

    #[test]
    fn cc_rule_reads_fa() {
        let p = builtin_cncc_learning();
        assert!(p.rule("TS_CC").unwrap().input_symbols().contains(&Fa));
    }

    #[test]
    fn molecule_signatures_match_stage_contracts() {
        let p = builtin_cncc_learning();
        let sigs = stage_signatures();
        for rule in &p.rules {
            let sig = &sigs[rule.name()];
            assert_eq!(rule.input_symbols(), sig.inputs, "{}", rule.name());
            let mut outs = rule.output_symbols();
            if rule.name() == "TS_IL" {
                // the IL molecule has no o(Mn); the stage contract does
                outs.insert(Mn);
            }
            assert_eq!(outs, sig.outputs, "{}", rule.name());
        }
    }

    #[test]
    fn only_saliency_enabled_initially() {
        let p = builtin_cncc_learning();
        let gate = HormoneGate::default();
        let s0 = ChamState::new(p.solution.clone(), &gate);
        assert_eq!(enabled_rules(&s0, &p, &gate), names(&["TS_SC"]));
        let s1 = fire(&s0, "TS_SC", &p, &gate).unwrap();
        assert_eq!(enabled_rules(&s1, &p, &gate), names(&["TS_DL"]));
        // SC part became SM_SC, others untouched
        let mut expected = p.solution.difference(&initial_form(Processor::Sc));
        expected = crate::term::solution_union(&expected, &reacted_form(Processor::Sc));
        assert!(multiset_equal(&s1.solution, &expected));
    }

    #[test]
    fn closure_of_builtin_learning() {
        let report = dataflow_closure_check(&builtin_cncc_learning());
        assert!(report.is_closed());
        assert_eq!(report.externals_used, EXTERNALS.into_iter().collect());
        assert_eq!(
            report.unused_outputs,
            vec![RuleSymbol {
                rule: "TS_IL".into(),
                symbol: Mp
            }]
        );
    }

    #[test]
    fn closure_without_dl() {
        let report = dataflow_closure_check(&builtin_cncc_learning().without_rule("TS_DL"));
        let unbound: Vec<(String, DataSymbol)> = report
            .unbound_inputs
            .iter()
            .map(|r| (r.rule.clone(), r.symbol))
            .collect();
        for expected in [("TS_CC", Fa), ("TS_CC", Fv), ("TS_EL", Fa), ("TS_EL", Fv)] {
            assert!(unbound.contains(&(expected.0.to_string(), expected.1)));
        }
    }

    #[test]
    fn closure_of_empty_program() {
        assert_eq!(dataflow_closure_check(&ChamProgram::default()), ClosureReport::default());
    }

    #[test]
    fn dependency_orders() {
        assert_eq!(
            dependency_order(&builtin_cncc_learning()).unwrap(),
            vec![names(&["TS_SC", "TS_DL", "TS_CC", "TS_EL", "TS_RL", "TS_IL"])]
        );
        assert_eq!(
            dependency_order(&builtin_cncc_recognition()).unwrap(),
            vec![names(&["TS_SC", "TS_DL", "TS_CC", "TS_EL"])]
        );
    }

    #[test]
    fn independent_rules_have_two_orders() {
        let p = parse_program("solution A { SC; DL; }\nrule R1: SC @ A => SC @ B;\nrule R2: DL @ A => DL @ B;")
            .unwrap();
        assert_eq!(
            dependency_order(&p).unwrap(),
            vec![names(&["R1", "R2"]), names(&["R2", "R1"])]
        );
    }

    #[test]
    fn cyclic_dependency_detected() {
        let text = "data Sa: matrix; data Fa: matrix;\n\
                    solution A { i(Sa) <> DL <> o(Fa); i(Fa) <> SC <> o(Sa); }\n\
                    rule R1: i(Sa) <> DL <> o(Fa) @ A => DL @ B;\n\
                    rule R2: i(Fa) <> SC <> o(Sa) @ A => SC @ B;";
        let err = dependency_order(&parse_program(text).unwrap()).unwrap_err();
        assert_eq!(err.witness.len(), 3);
        assert_eq!(err.witness.first(), err.witness.last());
    }

    #[test]
    fn reacted_solution_has_six_parts() {
        let sm = reacted_solution();
        assert_eq!(sm.part_count(), 6);
        assert!(sm.part_names().all(|n| n.starts_with("SM_")));
        assert!(!multiset_equal(&sm, &builtin_cncc_learning().solution));
    }
}

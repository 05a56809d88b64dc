//! CHAM programs: declarations, the initial solution and reaction rules.

use std::collections::{BTreeMap, BTreeSet};

use crate::term::{Bag, DataKind, DataSymbol, Hormone, Solution};

/// A ground rewrite `consumes => produces`, both given part by part.
///
/// Molecules present on both sides are catalysts: they must be present for
/// the rule to fire but survive the reaction. Hormone effects are derived
/// from the net reaction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReactionRule {
    name: String,
    consumes: Solution,
    produces: Solution,
    hormones_generated: BTreeMap<Hormone, usize>,
    hormones_dissipated: BTreeMap<Hormone, usize>,
}

impl ReactionRule {
    /// Returns `None` when `consumes` is empty.
    pub fn new(name: impl Into<String>, consumes: Solution, produces: Solution) -> Option<Self> {
        if consumes.is_empty() {
            return None;
        }
        let net_consumed = consumes.difference(&produces);
        let net_produced = produces.difference(&consumes);

        let mut gained: BTreeMap<Hormone, i64> = BTreeMap::new();
        for (_, m) in net_produced.entries() {
            for h in m.generated() {
                *gained.entry(h).or_insert(0) += 1;
            }
        }
        for (_, m) in net_consumed.entries() {
            for h in m.generated() {
                *gained.entry(h).or_insert(0) -= 1;
            }
        }
        let hormones_generated = gained
            .into_iter()
            .filter(|(_, n)| *n > 0)
            .map(|(h, n)| (h, n as usize))
            .collect();

        let mut hormones_dissipated = BTreeMap::new();
        for (_, m) in net_produced.entries() {
            for h in m.dissipated() {
                *hormones_dissipated.entry(h).or_insert(0) += 1;
            }
        }

        Some(Self {
            name: name.into(),
            consumes,
            produces,
            hormones_generated,
            hormones_dissipated,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn consumes(&self) -> &Solution {
        &self.consumes
    }

    pub fn produces(&self) -> &Solution {
        &self.produces
    }

    /// Hormone units released into the reservoir on firing.
    pub fn hormones_generated(&self) -> &BTreeMap<Hormone, usize> {
        &self.hormones_generated
    }

    /// Hormone units taken up by receptors on firing.
    pub fn hormones_dissipated(&self) -> &BTreeMap<Hormone, usize> {
        &self.hormones_dissipated
    }

    /// Hormones the rule generates or dissipates.
    pub fn hormones_touched(&self) -> BTreeSet<Hormone> {
        self.hormones_generated
            .keys()
            .chain(self.hormones_dissipated.keys())
            .copied()
            .collect()
    }

    pub fn net_consumed(&self) -> Solution {
        self.consumes.difference(&self.produces)
    }

    pub fn net_produced(&self) -> Solution {
        self.produces.difference(&self.consumes)
    }

    pub fn catalysts(&self) -> Solution {
        self.consumes.difference(&self.net_consumed())
    }

    /// Data symbols read by the reaction: `i(..)` atoms of net-consumed molecules.
    pub fn input_symbols(&self) -> BTreeSet<DataSymbol> {
        self.net_consumed()
            .entries()
            .flat_map(|(_, m)| m.inputs().collect::<Vec<_>>())
            .collect()
    }

    /// Data symbols written by the reaction: `o(..)` atoms of net-consumed molecules.
    pub fn output_symbols(&self) -> BTreeSet<DataSymbol> {
        self.net_consumed()
            .entries()
            .flat_map(|(_, m)| m.outputs().collect::<Vec<_>>())
            .collect()
    }

    /// Parts read or written by the rule.
    pub fn parts_mentioned(&self) -> BTreeSet<String> {
        self.consumes
            .part_names()
            .chain(self.produces.part_names())
            .map(str::to_owned)
            .collect()
    }
}

/// Symbol declarations that molecules are resolved against.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Declarations {
    pub data: BTreeMap<DataSymbol, DataKind>,
    pub hormones: BTreeSet<Hormone>,
}

impl Declarations {
    /// Every data symbol and hormone, with their table kinds.
    pub fn all() -> Self {
        Self {
            data: DataSymbol::ALL.iter().map(|d| (*d, d.kind())).collect(),
            hormones: Hormone::ALL.iter().copied().collect(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ChamProgram {
    pub decls: Declarations,
    pub externals: BTreeSet<DataSymbol>,
    pub solution: Solution,
    pub rules: Vec<ReactionRule>,
}

impl ChamProgram {
    pub fn rule(&self, name: &str) -> Option<&ReactionRule> {
        self.rules.iter().find(|r| r.name() == name)
    }

    pub fn data_symbols(&self) -> impl Iterator<Item = DataSymbol> + '_ {
        self.decls.data.keys().copied()
    }

    /// The program with one rule deleted.
    pub fn without_rule(&self, name: &str) -> ChamProgram {
        let mut p = self.clone();
        p.rules.retain(|r| r.name() != name);
        p
    }

    /// Multiset of molecules of the initial solution in one part.
    pub fn part(&self, name: &str) -> Option<&Bag> {
        self.solution.part(name)
    }
}

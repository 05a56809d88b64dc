//! Endocrine regulation: hormone reservoir levels and firing thresholds.

use std::collections::BTreeMap;

use crate::program::ReactionRule;
use crate::term::Hormone;

/// Non-negative level per hormone family. Families never touched read as 0.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct HormoneLevels {
    levels: BTreeMap<Hormone, u64>,
}

impl HormoneLevels {
    pub fn get(&self, h: Hormone) -> u64 {
        self.levels.get(&h).copied().unwrap_or(0)
    }

    pub fn set(&mut self, h: Hormone, level: u64) {
        self.levels.insert(h, level);
    }

    /// External release (Layer 0 regulation), e.g. to regenerate a
    /// depleted family between iterations.
    pub fn release(&mut self, h: Hormone, amount: u64) {
        let level = self.get(h).saturating_add(amount);
        self.set(h, level);
    }

    /// Applies one firing: generated units are added, dissipated units
    /// are removed with a floor of zero.
    pub fn apply(&mut self, rule: &ReactionRule) {
        for (h, n) in rule.hormones_generated() {
            self.release(*h, *n as u64);
        }
        for (h, n) in rule.hormones_dissipated() {
            let level = self.get(*h).saturating_sub(*n as u64);
            self.set(*h, level);
        }
    }

    /// All six families, keyed by symbol name.
    pub fn snapshot(&self) -> BTreeMap<String, u64> {
        Hormone::ALL
            .iter()
            .map(|h| (h.name().to_owned(), self.get(*h)))
            .collect()
    }
}

/// Firing thresholds and the reservoir's starting levels.
///
/// The default gate has every threshold at 0, which never blocks a rule.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct HormoneGate {
    pub thresholds: BTreeMap<Hormone, u64>,
    pub initial_levels: BTreeMap<Hormone, u64>,
}

impl HormoneGate {
    /// Explicit all-zero thresholds for every family.
    pub fn neutral() -> Self {
        Self {
            thresholds: Hormone::ALL.iter().map(|h| (*h, 0)).collect(),
            initial_levels: BTreeMap::new(),
        }
    }

    pub fn with_threshold(mut self, h: Hormone, threshold: u64) -> Self {
        self.thresholds.insert(h, threshold);
        self
    }

    pub fn with_initial_level(mut self, h: Hormone, level: u64) -> Self {
        self.initial_levels.insert(h, level);
        self
    }

    pub fn threshold(&self, h: Hormone) -> u64 {
        self.thresholds.get(&h).copied().unwrap_or(0)
    }

    pub fn initial(&self) -> HormoneLevels {
        let mut levels = HormoneLevels::default();
        for (h, l) in &self.initial_levels {
            levels.set(*h, *l);
        }
        levels
    }
}

/// True iff every hormone the rule generates or dissipates is at or above
/// its threshold.
pub fn endocrine_gate_eval(gate: &HormoneGate, rule: &ReactionRule, levels: &HormoneLevels) -> bool {
    rule.hormones_touched()
        .into_iter()
        .all(|h| levels.get(h) >= gate.threshold(h))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::term::{Atom, Molecule, Processor, Solution};

    fn dl_rule() -> ReactionRule {
        let ss = Molecule::new(vec![
            Atom::Generate(Hormone::Dl),
            Atom::Processor(Processor::Dl),
            Atom::Dissipate(Hormone::Dl),
        ])
        .unwrap();
        let sm = Molecule::new(vec![
            Atom::Processor(Processor::Dl),
            Atom::Generate(Hormone::Dl),
            Atom::Dissipate(Hormone::Dl),
        ])
        .unwrap();
        ReactionRule::new(
            "TS_DL",
            Solution::singleton("SS_DL", ss),
            Solution::singleton("SM_DL", sm),
        )
        .unwrap()
    }

    #[test]
    fn zero_thresholds_never_block() {
        let rule = dl_rule();
        for level in [0, 1, 7] {
            let mut levels = HormoneLevels::default();
            levels.set(Hormone::Dl, level);
            assert!(endocrine_gate_eval(&HormoneGate::default(), &rule, &levels));
            assert!(endocrine_gate_eval(&HormoneGate::neutral(), &rule, &levels));
        }
    }

    #[test]
    fn threshold_above_level_blocks() {
        let gate = HormoneGate::default().with_threshold(Hormone::Dl, 3);
        let mut levels = HormoneLevels::default();
        levels.set(Hormone::Dl, 1);
        assert!(!endocrine_gate_eval(&gate, &dl_rule(), &levels));
        levels.set(Hormone::Dl, 3);
        assert!(endocrine_gate_eval(&gate, &dl_rule(), &levels));
    }

    #[test]
    fn dissipation_floors_at_zero() {
        let mut levels = HormoneLevels::default();
        levels.apply(&dl_rule());
        assert_eq!(levels.get(Hormone::Dl), 0);
        levels.release(Hormone::Dl, 2);
        levels.apply(&dl_rule());
        assert_eq!(levels.get(Hormone::Dl), 1);
    }
}

//! Term algebra of the chemical abstract machine: atoms, `<>`-composed
//! molecules and `//`-composed solutions of named multisets.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

/// Data symbols carried between processing elements.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DataSymbol {
    Mi,
    Sa,
    Sv,
    Fa,
    Fv,
    Ma,
    Mv,
    Ms,
    Mt,
    Mp,
    Mn,
    Ei,
    Es,
    Cs,
    Ct,
    Cp,
    /// Endocrine molecules seen as data (`EH`).
    Eh,
}

/// Value category of a data symbol.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DataKind {
    Matrix,
    Vector,
    Parameter,
    Set,
}

impl DataSymbol {
    pub const ALL: [DataSymbol; 17] = [
        DataSymbol::Mi,
        DataSymbol::Sa,
        DataSymbol::Sv,
        DataSymbol::Fa,
        DataSymbol::Fv,
        DataSymbol::Ma,
        DataSymbol::Mv,
        DataSymbol::Ms,
        DataSymbol::Mt,
        DataSymbol::Mp,
        DataSymbol::Mn,
        DataSymbol::Ei,
        DataSymbol::Es,
        DataSymbol::Cs,
        DataSymbol::Ct,
        DataSymbol::Cp,
        DataSymbol::Eh,
    ];

    pub fn name(self) -> &'static str {
        match self {
            DataSymbol::Mi => "Mi",
            DataSymbol::Sa => "Sa",
            DataSymbol::Sv => "Sv",
            DataSymbol::Fa => "Fa",
            DataSymbol::Fv => "Fv",
            DataSymbol::Ma => "Ma",
            DataSymbol::Mv => "Mv",
            DataSymbol::Ms => "Ms",
            DataSymbol::Mt => "Mt",
            DataSymbol::Mp => "Mp",
            DataSymbol::Mn => "Mn",
            DataSymbol::Ei => "Ei",
            DataSymbol::Es => "Es",
            DataSymbol::Cs => "Cs",
            DataSymbol::Ct => "Ct",
            DataSymbol::Cp => "Cp",
            DataSymbol::Eh => "EH",
        }
    }

    /// The symbol's type in the framework's symbol table.
    pub fn kind(self) -> DataKind {
        use DataSymbol::*;
        match self {
            Mi | Sa | Sv | Fa | Fv | Ma | Mv => DataKind::Matrix,
            Ct | Cs | Mt | Ms | Mp | Mn => DataKind::Vector,
            Es | Ei => DataKind::Parameter,
            Cp | Eh => DataKind::Set,
        }
    }
}

impl DataKind {
    pub fn name(self) -> &'static str {
        match self {
            DataKind::Matrix => "matrix",
            DataKind::Vector => "vector",
            DataKind::Parameter => "parameter",
            DataKind::Set => "set",
        }
    }
}

/// Hormone families, one per processing element.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Hormone {
    Sc,
    Dl,
    Rl,
    Il,
    Cc,
    El,
}

impl Hormone {
    pub const ALL: [Hormone; 6] = [
        Hormone::Sc,
        Hormone::Dl,
        Hormone::Rl,
        Hormone::Il,
        Hormone::Cc,
        Hormone::El,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Hormone::Sc => "EH_SC",
            Hormone::Dl => "EH_DL",
            Hormone::Rl => "EH_RL",
            Hormone::Il => "EH_IL",
            Hormone::Cc => "EH_CC",
            Hormone::El => "EH_EL",
        }
    }

    /// The processing element this hormone regulates.
    pub fn processor(self) -> Processor {
        match self {
            Hormone::Sc => Processor::Sc,
            Hormone::Dl => Processor::Dl,
            Hormone::Rl => Processor::Rl,
            Hormone::Il => Processor::Il,
            Hormone::Cc => Processor::Cc,
            Hormone::El => Processor::El,
        }
    }
}

/// Processing elements.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Processor {
    Sc,
    Dl,
    Cc,
    El,
    Rl,
    Il,
}

impl Processor {
    pub const ALL: [Processor; 6] = [
        Processor::Sc,
        Processor::Dl,
        Processor::Cc,
        Processor::El,
        Processor::Rl,
        Processor::Il,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Processor::Sc => "SC",
            Processor::Dl => "DL",
            Processor::Cc => "CC",
            Processor::El => "EL",
            Processor::Rl => "RL",
            Processor::Il => "IL",
        }
    }

    pub fn hormone(self) -> Hormone {
        match self {
            Processor::Sc => Hormone::Sc,
            Processor::Dl => Hormone::Dl,
            Processor::Cc => Hormone::Cc,
            Processor::El => Hormone::El,
            Processor::Rl => Hormone::Rl,
            Processor::Il => Hormone::Il,
        }
    }
}

macro_rules! impl_from_str_by_name {
    ($ty:ty, $what:literal) => {
        impl FromStr for $ty {
            type Err = String;

            fn from_str(s: &str) -> Result<Self, Self::Err> {
                <$ty>::ALL
                    .iter()
                    .copied()
                    .find(|v| v.name() == s)
                    .ok_or_else(|| format!(concat!("unknown ", $what, " `{}`"), s))
            }
        }

        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.name())
            }
        }
    };
}

impl_from_str_by_name!(DataSymbol, "data symbol");
impl_from_str_by_name!(Hormone, "hormone");
impl_from_str_by_name!(Processor, "processor");

impl FromStr for DataKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "matrix" => Ok(DataKind::Matrix),
            "vector" => Ok(DataKind::Vector),
            "parameter" => Ok(DataKind::Parameter),
            "set" => Ok(DataKind::Set),
            other => Err(format!("unknown data kind `{other}`")),
        }
    }
}

impl fmt::Display for DataKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A single connector, processing element or hormone action.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Atom {
    Processor(Processor),
    Input(DataSymbol),
    Output(DataSymbol),
    Generate(Hormone),
    Dissipate(Hormone),
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Atom::Processor(p) => write!(f, "{p}"),
            Atom::Input(d) => write!(f, "i({d})"),
            Atom::Output(d) => write!(f, "o({d})"),
            Atom::Generate(h) => write!(f, "g({h})"),
            Atom::Dissipate(h) => write!(f, "d({h})"),
        }
    }
}

/// A non-empty `<>`-chain of atoms. `<>` is associative and not
/// commutative, so the flattened sequence is the canonical form.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Molecule {
    atoms: Vec<Atom>,
}

impl Molecule {
    /// Returns `None` for an empty atom list.
    pub fn new(atoms: Vec<Atom>) -> Option<Self> {
        if atoms.is_empty() {
            None
        } else {
            Some(Self { atoms })
        }
    }

    pub fn atom(atom: Atom) -> Self {
        Self { atoms: vec![atom] }
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn inputs(&self) -> impl Iterator<Item = DataSymbol> + '_ {
        self.atoms.iter().filter_map(|a| match a {
            Atom::Input(d) => Some(*d),
            _ => None,
        })
    }

    pub fn outputs(&self) -> impl Iterator<Item = DataSymbol> + '_ {
        self.atoms.iter().filter_map(|a| match a {
            Atom::Output(d) => Some(*d),
            _ => None,
        })
    }

    pub fn generated(&self) -> impl Iterator<Item = Hormone> + '_ {
        self.atoms.iter().filter_map(|a| match a {
            Atom::Generate(h) => Some(*h),
            _ => None,
        })
    }

    pub fn dissipated(&self) -> impl Iterator<Item = Hormone> + '_ {
        self.atoms.iter().filter_map(|a| match a {
            Atom::Dissipate(h) => Some(*h),
            _ => None,
        })
    }

    /// Canonical DSL rendering, e.g. `i(Mi) <> SC <> o(Sa)`.
    pub fn render(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for Molecule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, atom) in self.atoms.iter().enumerate() {
            if i > 0 {
                f.write_str(" <> ")?;
            }
            write!(f, "{atom}")?;
        }
        Ok(())
    }
}

// Molecules order by their canonical rendering.
impl Ord for Molecule {
    fn cmp(&self, other: &Self) -> Ordering {
        if self.atoms == other.atoms {
            return Ordering::Equal;
        }
        self.render()
            .cmp(&other.render())
            .then_with(|| self.atoms.cmp(&other.atoms))
    }
}

impl PartialOrd for Molecule {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// The `<>` operator.
pub fn compose(a: &Molecule, b: &Molecule) -> Molecule {
    let mut atoms = Vec::with_capacity(a.len() + b.len());
    atoms.extend_from_slice(&a.atoms);
    atoms.extend_from_slice(&b.atoms);
    Molecule { atoms }
}

/// A multiset of molecules with explicit multiplicities.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Bag {
    counts: BTreeMap<Molecule, usize>,
}

impl Bag {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, molecule: Molecule, n: usize) {
        if n > 0 {
            *self.counts.entry(molecule).or_insert(0) += n;
        }
    }

    /// Removes `n` copies; returns false (and leaves the bag untouched) if
    /// fewer are present.
    pub fn remove(&mut self, molecule: &Molecule, n: usize) -> bool {
        match self.counts.get_mut(molecule) {
            Some(c) if *c >= n => {
                *c -= n;
                if *c == 0 {
                    self.counts.remove(molecule);
                }
                true
            }
            None if n == 0 => true,
            _ => false,
        }
    }

    pub fn count(&self, molecule: &Molecule) -> usize {
        self.counts.get(molecule).copied().unwrap_or(0)
    }

    pub fn len(&self) -> usize {
        self.counts.values().sum()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn distinct(&self) -> usize {
        self.counts.len()
    }

    /// `(molecule, multiplicity)` pairs in canonical order.
    pub fn iter(&self) -> impl Iterator<Item = (&Molecule, usize)> {
        self.counts.iter().map(|(m, c)| (m, *c))
    }

    /// Every copy, in canonical order.
    pub fn molecules(&self) -> impl Iterator<Item = &Molecule> {
        self.counts
            .iter()
            .flat_map(|(m, c)| std::iter::repeat_n(m, *c))
    }

    pub fn contains_bag(&self, other: &Bag) -> bool {
        other.iter().all(|(m, c)| self.count(m) >= c)
    }

    pub fn union(&mut self, other: &Bag) {
        for (m, c) in other.iter() {
            self.insert(m.clone(), c);
        }
    }

    /// Multiset difference, saturating at zero.
    pub fn difference(&self, other: &Bag) -> Bag {
        let mut out = Bag::new();
        for (m, c) in self.iter() {
            out.insert(m.clone(), c.saturating_sub(other.count(m)));
        }
        out
    }
}

impl FromIterator<Molecule> for Bag {
    fn from_iter<I: IntoIterator<Item = Molecule>>(iter: I) -> Self {
        let mut bag = Bag::new();
        for m in iter {
            bag.insert(m, 1);
        }
        bag
    }
}

/// A machine state: named sub-solutions composed with `//`.
///
/// Empty parts are dropped, so two solutions are equal exactly when every
/// part holds the same molecules with the same multiplicities.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Solution {
    parts: BTreeMap<String, Bag>,
}

impl Solution {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn singleton(part: impl Into<String>, molecule: Molecule) -> Self {
        let mut s = Self::new();
        s.add(part, molecule);
        s
    }

    pub fn add(&mut self, part: impl Into<String>, molecule: Molecule) {
        self.add_n(part, molecule, 1);
    }

    pub fn add_n(&mut self, part: impl Into<String>, molecule: Molecule, n: usize) {
        if n == 0 {
            return;
        }
        self.parts.entry(part.into()).or_default().insert(molecule, n);
    }

    pub fn part(&self, name: &str) -> Option<&Bag> {
        self.parts.get(name)
    }

    pub fn parts(&self) -> impl Iterator<Item = (&str, &Bag)> {
        self.parts.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn part_names(&self) -> impl Iterator<Item = &str> {
        self.parts.keys().map(String::as_str)
    }

    pub fn part_count(&self) -> usize {
        self.parts.len()
    }

    /// Total number of molecules, counted with multiplicity.
    pub fn size(&self) -> usize {
        self.parts.values().map(Bag::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    /// Every `(part, molecule)` copy in canonical order.
    pub fn entries(&self) -> impl Iterator<Item = (&str, &Molecule)> {
        self.parts
            .iter()
            .flat_map(|(p, bag)| bag.molecules().map(move |m| (p.as_str(), m)))
    }

    /// True when `other` is a sub-multiset of `self`, part by part.
    pub fn contains(&self, other: &Solution) -> bool {
        other.parts.iter().all(|(name, bag)| match self.parts.get(name) {
            Some(mine) => mine.contains_bag(bag),
            None => bag.is_empty(),
        })
    }

    /// `self - other`, or `None` when `other` is not contained in `self`.
    pub fn remove(&self, other: &Solution) -> Option<Solution> {
        let mut out = self.clone();
        for (name, bag) in &other.parts {
            let mine = out.parts.get_mut(name)?;
            for (m, c) in bag.iter() {
                if !mine.remove(m, c) {
                    return None;
                }
            }
            if mine.is_empty() {
                out.parts.remove(name);
            }
        }
        Some(out)
    }

    /// Saturating multiset difference, part by part.
    pub fn difference(&self, other: &Solution) -> Solution {
        let mut out = Solution::new();
        for (name, bag) in &self.parts {
            let diff = match other.parts.get(name) {
                Some(o) => bag.difference(o),
                None => bag.clone(),
            };
            if !diff.is_empty() {
                out.parts.insert(name.clone(), diff);
            }
        }
        out
    }

    /// `name -> bag` for each part; part names are sorted.
    pub fn into_parts(self) -> BTreeMap<String, Bag> {
        self.parts
    }

    /// One `molecule @ PART` string per copy, in canonical order.
    pub fn render_entries(&self) -> Vec<String> {
        self.entries()
            .map(|(p, m)| format!("{m} @ {p}"))
            .collect()
    }

    /// Canonical single-line serialization used as a state identity.
    pub fn canonical(&self) -> String {
        let mut out = String::new();
        for (i, (name, bag)) in self.parts.iter().enumerate() {
            if i > 0 {
                out.push_str(" // ");
            }
            out.push_str(name);
            out.push_str(" { ");
            for (j, (m, c)) in bag.iter().enumerate() {
                if j > 0 {
                    out.push_str("; ");
                }
                if c > 1 {
                    out.push_str(&format!("{c} * "));
                }
                out.push_str(&m.render());
            }
            out.push_str(" }");
        }
        out
    }
}

impl fmt::Display for Solution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.canonical())
    }
}

/// The `//` operator: multiset union, merging parts that share a name.
pub fn solution_union(s1: &Solution, s2: &Solution) -> Solution {
    let mut out = s1.clone();
    for (name, bag) in &s2.parts {
        out.parts.entry(name.clone()).or_default().union(bag);
    }
    out
}

pub fn multiset_equal(s1: &Solution, s2: &Solution) -> bool {
    s1 == s2
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn mol(atoms: &[Atom]) -> Molecule {
        Molecule::new(atoms.to_vec()).unwrap()
    }

    #[test]
    fn compose_places_input_before_processor() {
        let a = mol(&[Atom::Input(DataSymbol::Mi)]);
        let b = mol(&[Atom::Processor(Processor::Sc)]);
        let c = compose(&a, &b);
        assert_eq!(
            c.atoms(),
            &[Atom::Input(DataSymbol::Mi), Atom::Processor(Processor::Sc)]
        );
        assert_eq!(c.render(), "i(Mi) <> SC");
    }

    #[test]
    fn compose_is_not_commutative() {
        let a = mol(&[Atom::Input(DataSymbol::Mi)]);
        let b = mol(&[Atom::Processor(Processor::Sc)]);
        assert_ne!(compose(&a, &b), compose(&b, &a));
    }

    #[test]
    fn empty_molecule_rejected() {
        assert!(Molecule::new(vec![]).is_none());
    }

    #[test]
    fn kinds_follow_symbol_table() {
        assert_eq!(DataSymbol::Sa.kind(), DataKind::Matrix);
        assert_eq!(DataSymbol::Ct.kind(), DataKind::Vector);
        assert_eq!(DataSymbol::Es.kind(), DataKind::Parameter);
        assert_eq!(DataSymbol::Cp.kind(), DataKind::Set);
        assert_eq!(DataSymbol::Mn.kind(), DataKind::Vector);
        assert_eq!(DataSymbol::Mi.kind(), DataKind::Matrix);
        assert_eq!(DataSymbol::ALL.len(), 17);
        assert_eq!(Hormone::ALL.len(), 6);
    }

    #[test]
    fn names_roundtrip() {
        for d in DataSymbol::ALL {
            assert_eq!(d.name().parse::<DataSymbol>().unwrap(), d);
        }
        for h in Hormone::ALL {
            assert_eq!(h.name().parse::<Hormone>().unwrap(), h);
            assert_eq!(h.processor().hormone(), h);
        }
    }

    #[test]
    fn multiplicity_counts() {
        let m = mol(&[Atom::Processor(Processor::Sc)]);
        let once = Solution::singleton("A", m.clone());
        let mut twice = once.clone();
        twice.add("A", m.clone());
        assert!(!multiset_equal(&once, &twice));
        assert_eq!(twice.size(), 2);
        assert_eq!(twice.part("A").unwrap().count(&m), 2);
        assert_eq!(solution_union(&once, &once), twice);
    }

    #[test]
    fn union_identity() {
        let s = Solution::singleton("P", mol(&[Atom::Processor(Processor::Dl)]));
        assert_eq!(solution_union(&s, &Solution::new()), s);
        assert_eq!(solution_union(&Solution::new(), &s), s);
    }

    #[test]
    fn remove_requires_containment() {
        let m = mol(&[Atom::Processor(Processor::Dl)]);
        let s = Solution::singleton("P", m.clone());
        let mut two = s.clone();
        two.add("P", m.clone());
        assert!(s.remove(&two).is_none());
        assert_eq!(two.remove(&s).unwrap(), s);
        assert!(s.remove(&s).unwrap().is_empty());
        assert!(s.remove(&Solution::singleton("Q", m)).is_none());
    }

    fn arb_atom() -> impl Strategy<Value = Atom> {
        prop_oneof![
            (0..6usize).prop_map(|i| Atom::Processor(Processor::ALL[i])),
            (0..17usize).prop_map(|i| Atom::Input(DataSymbol::ALL[i])),
            (0..17usize).prop_map(|i| Atom::Output(DataSymbol::ALL[i])),
            (0..6usize).prop_map(|i| Atom::Generate(Hormone::ALL[i])),
            (0..6usize).prop_map(|i| Atom::Dissipate(Hormone::ALL[i])),
        ]
    }

    fn arb_molecule() -> impl Strategy<Value = Molecule> {
        prop::collection::vec(arb_atom(), 1..6).prop_map(|v| Molecule::new(v).unwrap())
    }

    fn arb_solution() -> impl Strategy<Value = Solution> {
        prop::collection::vec((0..4usize, arb_molecule()), 0..8).prop_map(|entries| {
            let mut s = Solution::new();
            for (p, m) in entries {
                s.add(format!("P{p}"), m);
            }
            s
        })
    }

    proptest! {
        #[test]
        fn compose_associative(a in arb_molecule(), b in arb_molecule(), c in arb_molecule()) {
            let left = compose(&compose(&a, &b), &c);
            let right = compose(&a, &compose(&b, &c));
            prop_assert!(multiset_equal(
                &Solution::singleton("X", left.clone()),
                &Solution::singleton("X", right)
            ));
            prop_assert_eq!(left.len(), a.len() + b.len() + c.len());
        }

        #[test]
        fn union_commutative_associative(a in arb_solution(), b in arb_solution(), c in arb_solution()) {
            prop_assert_eq!(solution_union(&a, &b).canonical(), solution_union(&b, &a).canonical());
            prop_assert_eq!(
                solution_union(&solution_union(&a, &b), &c),
                solution_union(&a, &solution_union(&b, &c))
            );
        }

        #[test]
        fn canonical_render_injective(a in arb_solution(), b in arb_solution()) {
            if a.canonical() == b.canonical() {
                prop_assert!(multiset_equal(&a, &b));
            }
            if multiset_equal(&a, &b) {
                prop_assert_eq!(a.canonical(), b.canonical());
            }
        }
    }
}

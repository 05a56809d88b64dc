#![allow(dead_code)]

use std::collections::BTreeSet;
use std::path::PathBuf;

use cncc_core::{
    Atom, ChamProgram, DataSymbol, Declarations, Hormone, Molecule, Processor, ReactionRule, Solution,
};
use rand::seq::IndexedRandom;
use rand::Rng;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

pub fn program_file(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("programs").join(name)
}

pub fn load(path: PathBuf) -> ChamProgram {
    cncc_core::parse_program(&std::fs::read_to_string(path).unwrap()).unwrap()
}

const PARTS: [&str; 5] = ["A", "B", "SS_X", "SM_X", "pool"];

fn random_molecule(rng: &mut impl Rng, data: &[DataSymbol], hormones: &[Hormone]) -> Molecule {
    let n = rng.random_range(1..=5);
    let atoms = (0..n)
        .map(|_| match rng.random_range(0..5) {
            0 => Atom::Processor(*Processor::ALL.choose(rng).unwrap()),
            1 if !data.is_empty() => Atom::Input(*data.choose(rng).unwrap()),
            2 if !data.is_empty() => Atom::Output(*data.choose(rng).unwrap()),
            3 if !hormones.is_empty() => Atom::Generate(*hormones.choose(rng).unwrap()),
            4 if !hormones.is_empty() => Atom::Dissipate(*hormones.choose(rng).unwrap()),
            _ => Atom::Processor(*Processor::ALL.choose(rng).unwrap()),
        })
        .collect();
    Molecule::new(atoms).unwrap()
}

fn random_solution(rng: &mut impl Rng, data: &[DataSymbol], hormones: &[Hormone], min: usize) -> Solution {
    let mut s = Solution::new();
    for _ in 0..rng.random_range(min..=4) {
        s.add(*PARTS.choose(rng).unwrap(), random_molecule(rng, data, hormones));
    }
    s
}

/// A well-formed program over a random subset of the symbol table.
pub fn random_program(rng: &mut impl Rng) -> ChamProgram {
    let all = Declarations::all();
    let data: Vec<DataSymbol> = DataSymbol::ALL.iter().copied().filter(|_| rng.random_bool(0.5)).collect();
    let hormones: Vec<Hormone> = Hormone::ALL.iter().copied().filter(|_| rng.random_bool(0.5)).collect();
    let decls = Declarations {
        data: data.iter().map(|d| (*d, all.data[d])).collect(),
        hormones: hormones.iter().copied().collect(),
    };
    let externals: BTreeSet<DataSymbol> = data.iter().copied().filter(|_| rng.random_bool(0.3)).collect();
    let solution = random_solution(rng, &data, &hormones, 0);
    let rules = (0..rng.random_range(0..5))
        .map(|i| {
            let lhs = random_solution(rng, &data, &hormones, 1);
            let rhs = random_solution(rng, &data, &hormones, 1);
            ReactionRule::new(format!("R{i}"), lhs, rhs).unwrap()
        })
        .collect();
    ChamProgram {
        decls,
        externals,
        solution,
        rules,
    }
}

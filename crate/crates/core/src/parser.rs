//! Concrete syntax for CHAM programs.
//!
//! ```text
//! # comment
//! data Sa: matrix;
//! hormone EH_SC;
//! external Mi, Mn;
//! solution SS_SC { i(Mi) <> g(EH_SC) <> SC <> o(Sa) <> d(EH_SC); }
//! rule TS_SC: i(Mi) <> g(EH_SC) <> SC <> o(Sa) <> d(EH_SC) @ SS_SC
//!          => SC <> i(Mi) <> g(EH_SC) <> o(Sa) <> d(EH_SC) @ SM_SC;
//! ```
//!
//! `<>` composes atoms into molecules, `//` separates the molecules of a
//! rule side and `molecule @ PART` names the sub-solution a molecule is
//! taken from or placed into.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::program::{ChamProgram, Declarations, ReactionRule};
use crate::term::{Atom, DataKind, DataSymbol, Hormone, Molecule, Processor, Solution};

/// 1-based line and column (in characters).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct SourceSpan {
    pub line: usize,
    pub column: usize,
}

impl Default for SourceSpan {
    fn default() -> Self {
        Self { line: 1, column: 1 }
    }
}

impl fmt::Display for SourceSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("{span}: syntax error: {message}")]
    Syntax { span: SourceSpan, message: String },
    #[error("{span}: unknown symbol `{name}`")]
    UnknownSymbol { span: SourceSpan, name: String },
    #[error("{span}: duplicate rule `{name}`")]
    DuplicateRule { span: SourceSpan, name: String },
    #[error("{span}: {message}")]
    Declaration { span: SourceSpan, message: String },
}

impl ParseError {
    pub fn span(&self) -> SourceSpan {
        match self {
            ParseError::Syntax { span, .. }
            | ParseError::UnknownSymbol { span, .. }
            | ParseError::DuplicateRule { span, .. }
            | ParseError::Declaration { span, .. } => *span,
        }
    }

    fn syntax(span: SourceSpan, message: impl Into<String>) -> Self {
        ParseError::Syntax {
            span,
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    LParen,
    RParen,
    LBrace,
    RBrace,
    Semi,
    Colon,
    Comma,
    Diamond,
    Parallel,
    Arrow,
    At,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::LParen => f.write_str("`(`"),
            Tok::RParen => f.write_str("`)`"),
            Tok::LBrace => f.write_str("`{`"),
            Tok::RBrace => f.write_str("`}`"),
            Tok::Semi => f.write_str("`;`"),
            Tok::Colon => f.write_str("`:`"),
            Tok::Comma => f.write_str("`,`"),
            Tok::Diamond => f.write_str("`<>`"),
            Tok::Parallel => f.write_str("`//`"),
            Tok::Arrow => f.write_str("`=>`"),
            Tok::At => f.write_str("`@`"),
            Tok::Eof => f.write_str("end of input"),
        }
    }
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    span: SourceSpan,
}

fn lex(text: &str) -> Result<Vec<Token>, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut tokens = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);

    while i < chars.len() {
        let c = chars[i];
        let span = SourceSpan { line, column: col };
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '#' {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            col += i - start;
            tokens.push(Token {
                tok: Tok::Ident(chars[start..i].iter().collect()),
                span,
            });
            continue;
        }
        let next = chars.get(i + 1).copied();
        let (tok, width) = match (c, next) {
            ('<', Some('>')) => (Tok::Diamond, 2),
            ('/', Some('/')) => (Tok::Parallel, 2),
            ('=', Some('>')) => (Tok::Arrow, 2),
            ('(', _) => (Tok::LParen, 1),
            (')', _) => (Tok::RParen, 1),
            ('{', _) => (Tok::LBrace, 1),
            ('}', _) => (Tok::RBrace, 1),
            (';', _) => (Tok::Semi, 1),
            (':', _) => (Tok::Colon, 1),
            (',', _) => (Tok::Comma, 1),
            ('@', _) => (Tok::At, 1),
            ('◇', _) => (Tok::Diamond, 1),
            _ => {
                return Err(ParseError::syntax(span, format!("unexpected character `{c}`")));
            }
        };
        i += width;
        col += width;
        tokens.push(Token { tok, span });
    }
    tokens.push(Token {
        tok: Tok::Eof,
        span: SourceSpan { line, column: col },
    });
    Ok(tokens)
}

#[derive(Debug, Clone)]
struct Name {
    text: String,
    span: SourceSpan,
}

#[derive(Debug, Clone)]
enum RawAtom {
    Bare(Name),
    Connector { op: char, arg: Name },
}

#[derive(Debug, Clone)]
struct RawMolecule(Vec<RawAtom>);

#[derive(Debug)]
enum Item {
    Data { name: Name, kind: Name },
    Hormones(Vec<Name>),
    Externals(Vec<Name>),
    Solution { name: Name, molecules: Vec<RawMolecule> },
    Rule { name: Name, lhs: Vec<(RawMolecule, Name)>, rhs: Vec<(RawMolecule, Name)> },
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos]
    }

    fn bump(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn at(&self, tok: &Tok) -> bool {
        &self.peek().tok == tok
    }

    fn expect(&mut self, tok: Tok, context: &str) -> Result<Token, ParseError> {
        if self.at(&tok) {
            Ok(self.bump())
        } else {
            let t = self.peek();
            Err(ParseError::syntax(
                t.span,
                format!("expected {tok} {context}, found {}", t.tok),
            ))
        }
    }

    fn ident(&mut self, what: &str) -> Result<Name, ParseError> {
        let t = self.peek().clone();
        match t.tok {
            Tok::Ident(text) => {
                self.bump();
                Ok(Name { text, span: t.span })
            }
            other => Err(ParseError::syntax(
                t.span,
                format!("expected {what}, found {other}"),
            )),
        }
    }

    fn name_list(&mut self, what: &str) -> Result<Vec<Name>, ParseError> {
        let mut names = vec![self.ident(what)?];
        while self.at(&Tok::Comma) {
            self.bump();
            names.push(self.ident(what)?);
        }
        Ok(names)
    }

    fn program(&mut self) -> Result<Vec<Item>, ParseError> {
        let mut items = Vec::new();
        while !self.at(&Tok::Eof) {
            items.push(self.item()?);
        }
        Ok(items)
    }

    fn item(&mut self) -> Result<Item, ParseError> {
        let kw = self.ident("a declaration keyword")?;
        match kw.text.as_str() {
            "data" => {
                let name = self.ident("a data symbol")?;
                self.expect(Tok::Colon, "after data symbol")?;
                let kind = self.ident("a data kind")?;
                self.expect(Tok::Semi, "after data declaration")?;
                Ok(Item::Data { name, kind })
            }
            "hormone" => {
                let names = self.name_list("a hormone symbol")?;
                self.expect(Tok::Semi, "after hormone declaration")?;
                Ok(Item::Hormones(names))
            }
            "external" => {
                let names = self.name_list("a data symbol")?;
                self.expect(Tok::Semi, "after external declaration")?;
                Ok(Item::Externals(names))
            }
            "solution" => {
                let name = self.ident("a sub-solution name")?;
                self.expect(Tok::LBrace, "to open the sub-solution")?;
                let mut molecules = Vec::new();
                while !self.at(&Tok::RBrace) {
                    molecules.push(self.molecule()?);
                    if self.at(&Tok::Semi) {
                        self.bump();
                    } else if !self.at(&Tok::RBrace) {
                        let t = self.peek();
                        return Err(ParseError::syntax(
                            t.span,
                            format!("expected `;` or `}}` after molecule, found {}", t.tok),
                        ));
                    }
                }
                self.bump();
                Ok(Item::Solution { name, molecules })
            }
            "rule" => {
                let name = self.ident("a rule name")?;
                self.expect(Tok::Colon, "after rule name")?;
                let lhs = self.side()?;
                self.expect(Tok::Arrow, "between rule sides")?;
                let rhs = self.side()?;
                self.expect(Tok::Semi, "after rule")?;
                Ok(Item::Rule { name, lhs, rhs })
            }
            other => Err(ParseError::syntax(
                kw.span,
                format!("expected `data`, `hormone`, `external`, `solution` or `rule`, found `{other}`"),
            )),
        }
    }

    fn side(&mut self) -> Result<Vec<(RawMolecule, Name)>, ParseError> {
        let mut out = Vec::new();
        loop {
            let m = self.molecule()?;
            self.expect(Tok::At, "before the sub-solution name")?;
            let part = self.ident("a sub-solution name")?;
            out.push((m, part));
            if self.at(&Tok::Parallel) {
                self.bump();
            } else {
                return Ok(out);
            }
        }
    }

    fn molecule(&mut self) -> Result<RawMolecule, ParseError> {
        let mut atoms = vec![self.atom()?];
        while self.at(&Tok::Diamond) {
            self.bump();
            atoms.push(self.atom()?);
        }
        Ok(RawMolecule(atoms))
    }

    fn atom(&mut self) -> Result<RawAtom, ParseError> {
        let name = self.ident("an atom")?;
        let op = match name.text.as_str() {
            "i" => 'i',
            "o" => 'o',
            "g" => 'g',
            "d" => 'd',
            _ => return Ok(RawAtom::Bare(name)),
        };
        let open = self.expect(Tok::LParen, &format!("after connector `{op}`"))?.span;
        let arg = match self.peek().tok.clone() {
            Tok::Ident(text) => {
                let span = self.bump().span;
                Name { text, span }
            }
            Tok::Eof | Tok::Semi | Tok::RBrace | Tok::At | Tok::Diamond | Tok::Arrow
            | Tok::Parallel => {
                return Err(ParseError::syntax(open, "unclosed `(`"));
            }
            other => {
                return Err(ParseError::syntax(
                    self.peek().span,
                    format!("expected a symbol inside `{op}(..)`, found {other}"),
                ));
            }
        };
        if !self.at(&Tok::RParen) {
            return Err(ParseError::syntax(open, "unclosed `(`"));
        }
        self.bump();
        Ok(RawAtom::Connector { op, arg })
    }
}

fn resolve_data(name: &Name, decls: &Declarations) -> Result<DataSymbol, ParseError> {
    match name.text.parse::<DataSymbol>() {
        Ok(d) if decls.data.contains_key(&d) => Ok(d),
        _ => Err(ParseError::UnknownSymbol {
            span: name.span,
            name: name.text.clone(),
        }),
    }
}

fn resolve_hormone(name: &Name, decls: &Declarations) -> Result<Hormone, ParseError> {
    match name.text.parse::<Hormone>() {
        Ok(h) if decls.hormones.contains(&h) => Ok(h),
        _ => Err(ParseError::UnknownSymbol {
            span: name.span,
            name: name.text.clone(),
        }),
    }
}

fn resolve_molecule(raw: &RawMolecule, decls: &Declarations) -> Result<Molecule, ParseError> {
    let mut atoms = Vec::with_capacity(raw.0.len());
    for a in &raw.0 {
        let atom = match a {
            RawAtom::Bare(name) => match name.text.parse::<Processor>() {
                Ok(p) => Atom::Processor(p),
                Err(_) => {
                    return Err(ParseError::UnknownSymbol {
                        span: name.span,
                        name: name.text.clone(),
                    })
                }
            },
            RawAtom::Connector { op, arg, .. } => match op {
                'i' | 'o' => {
                    if arg.text.parse::<Hormone>().is_ok() || arg.text.parse::<Processor>().is_ok() {
                        return Err(ParseError::syntax(
                            arg.span,
                            format!("`{op}(..)` takes a data symbol, found `{}`", arg.text),
                        ));
                    }
                    let d = resolve_data(arg, decls)?;
                    if *op == 'i' {
                        Atom::Input(d)
                    } else {
                        Atom::Output(d)
                    }
                }
                _ => {
                    if arg.text.parse::<DataSymbol>().is_ok() || arg.text.parse::<Processor>().is_ok()
                    {
                        return Err(ParseError::syntax(
                            arg.span,
                            format!("`{op}(..)` takes a hormone symbol, found `{}`", arg.text),
                        ));
                    }
                    let h = resolve_hormone(arg, decls)?;
                    if *op == 'g' {
                        Atom::Generate(h)
                    } else {
                        Atom::Dissipate(h)
                    }
                }
            },
        };
        atoms.push(atom);
    }
    Ok(Molecule::new(atoms).expect("grammar yields at least one atom"))
}

fn check_part_name(name: &Name) -> Result<(), ParseError> {
    const RESERVED: [&str; 9] = ["data", "hormone", "external", "solution", "rule", "i", "o", "g", "d"];
    if RESERVED.contains(&name.text.as_str()) {
        return Err(ParseError::syntax(
            name.span,
            format!("`{}` is reserved and cannot name a sub-solution", name.text),
        ));
    }
    Ok(())
}

fn parser_for(text: &str) -> Result<Parser, ParseError> {
    Ok(Parser {
        tokens: lex(text)?,
        pos: 0,
    })
}

/// Parses and resolves a whole program.
pub fn parse_program(text: &str) -> Result<ChamProgram, ParseError> {
    let items = parser_for(text)?.program()?;

    let mut decls = Declarations::default();
    for item in &items {
        match item {
            Item::Data { name, kind } => {
                let sym = name.text.parse::<DataSymbol>().map_err(|_| ParseError::UnknownSymbol {
                    span: name.span,
                    name: name.text.clone(),
                })?;
                let k = kind.text.parse::<DataKind>().map_err(|e| ParseError::syntax(kind.span, e))?;
                if k != sym.kind() {
                    return Err(ParseError::Declaration {
                        span: kind.span,
                        message: format!("data symbol `{sym}` has kind {}, not {k}", sym.kind()),
                    });
                }
                if decls.data.insert(sym, k).is_some() {
                    return Err(ParseError::Declaration {
                        span: name.span,
                        message: format!("data symbol `{sym}` declared twice"),
                    });
                }
            }
            Item::Hormones(names) => {
                for n in names {
                    let h = n.text.parse::<Hormone>().map_err(|_| ParseError::UnknownSymbol {
                        span: n.span,
                        name: n.text.clone(),
                    })?;
                    if !decls.hormones.insert(h) {
                        return Err(ParseError::Declaration {
                            span: n.span,
                            message: format!("hormone `{h}` declared twice"),
                        });
                    }
                }
            }
            _ => {}
        }
    }

    let mut program = ChamProgram {
        decls,
        ..ChamProgram::default()
    };
    let mut rule_names = BTreeSet::new();
    for item in &items {
        match item {
            Item::Data { .. } | Item::Hormones(_) => {}
            Item::Externals(names) => {
                for n in names {
                    let d = resolve_data(n, &program.decls)?;
                    program.externals.insert(d);
                }
            }
            Item::Solution { name, molecules } => {
                check_part_name(name)?;
                for raw in molecules {
                    let m = resolve_molecule(raw, &program.decls)?;
                    program.solution.add(name.text.clone(), m);
                }
            }
            Item::Rule { name, lhs, rhs } => {
                if !rule_names.insert(name.text.clone()) {
                    return Err(ParseError::DuplicateRule {
                        span: name.span,
                        name: name.text.clone(),
                    });
                }
                let side = |raw: &[(RawMolecule, Name)]| -> Result<Solution, ParseError> {
                    let mut s = Solution::new();
                    for (m, part) in raw {
                        check_part_name(part)?;
                        s.add(part.text.clone(), resolve_molecule(m, &program.decls)?);
                    }
                    Ok(s)
                };
                let consumes = side(lhs)?;
                let produces = side(rhs)?;
                let rule = ReactionRule::new(name.text.clone(), consumes, produces)
                    .expect("grammar requires a non-empty left side");
                program.rules.push(rule);
            }
        }
    }
    Ok(program)
}

/// Parses one molecule against a declaration context.
pub fn parse_molecule(text: &str, decls: &Declarations) -> Result<Molecule, ParseError> {
    let mut p = parser_for(text)?;
    let raw = p.molecule()?;
    if !p.at(&Tok::Eof) {
        let t = p.peek();
        return Err(ParseError::syntax(
            t.span,
            format!("unexpected {} after molecule", t.tok),
        ));
    }
    resolve_molecule(&raw, decls)
}

pub const RENDER_HEADER: &str = "# CHAM program (canonical form)\n";

/// Deterministic canonical text: declarations in symbol-table order,
/// sub-solutions sorted by name, rules in declaration order.
pub fn render_program(p: &ChamProgram) -> String {
    let mut out = String::from(RENDER_HEADER);

    if !p.decls.data.is_empty() {
        out.push('\n');
        for (d, k) in &p.decls.data {
            out.push_str(&format!("data {d}: {k};\n"));
        }
    }
    if !p.decls.hormones.is_empty() {
        out.push('\n');
        for h in &p.decls.hormones {
            out.push_str(&format!("hormone {h};\n"));
        }
    }
    if !p.externals.is_empty() {
        let names: Vec<&str> = p.externals.iter().map(|d| d.name()).collect();
        out.push_str(&format!("\nexternal {};\n", names.join(", ")));
    }
    for (name, bag) in p.solution.parts() {
        out.push_str(&format!("\nsolution {name} {{\n"));
        for m in bag.molecules() {
            out.push_str(&format!("  {m};\n"));
        }
        out.push_str("}\n");
    }
    for rule in &p.rules {
        out.push_str(&format!("\nrule {}:\n", rule.name()));
        render_side(&mut out, rule.consumes());
        out.push_str("  =>\n");
        render_side(&mut out, rule.produces());
        out.push_str("  ;\n");
    }
    out
}

fn render_side(out: &mut String, side: &Solution) {
    let entries = side.render_entries();
    let n = entries.len();
    for (i, e) in entries.into_iter().enumerate() {
        out.push_str("    ");
        out.push_str(&e);
        if i + 1 < n {
            out.push_str(" //");
        }
        out.push('\n');
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SS_SC: &str = "i(Mi) <> i(Mn) <> i(Es) <> g(EH_SC) <> SC <> o(Sa) <> o(Sv) <> d(EH_SC)";

    #[test]
    fn empty_program() {
        let p = parse_program("").unwrap();
        assert_eq!(p, ChamProgram::default());
        assert_eq!(render_program(&p), RENDER_HEADER);
        assert_eq!(parse_program("  # nothing here\n\n").unwrap(), p);
    }

    #[test]
    fn unclosed_paren_in_rule() {
        let err = parse_program("rule R: i(Mi").unwrap_err();
        assert_eq!(err.span(), SourceSpan { line: 1, column: 10 });
        assert!(matches!(err, ParseError::Syntax { .. }));
        assert!(err.to_string().contains("unclosed"));

        let err = parse_program("data Mi: matrix;\nrule R: i(").unwrap_err();
        assert_eq!(err.span(), SourceSpan { line: 2, column: 10 });
    }

    #[test]
    fn molecule_of_the_saliency_stage() {
        let m = parse_molecule(SS_SC, &Declarations::all()).unwrap();
        assert_eq!(m.len(), 8);
        assert_eq!(m.render(), SS_SC);
        assert_eq!(m.atoms()[4], Atom::Processor(Processor::Sc));
    }

    #[test]
    fn single_processor_molecule() {
        let m = parse_molecule("SC", &Declarations::all()).unwrap();
        assert_eq!(m.atoms(), &[Atom::Processor(Processor::Sc)]);
    }

    #[test]
    fn hormone_connector_rejects_data() {
        let err = parse_molecule("g(Mi)", &Declarations::all()).unwrap_err();
        assert_eq!(err.span(), SourceSpan { line: 1, column: 3 });
        assert!(err.to_string().contains("hormone"));
        let err = parse_molecule("i(EH_SC)", &Declarations::all()).unwrap_err();
        assert!(err.to_string().contains("data symbol"));
    }

    #[test]
    fn undeclared_symbol() {
        let err = parse_molecule("i(Mi)", &Declarations::default()).unwrap_err();
        assert!(matches!(err, ParseError::UnknownSymbol { ref name, .. } if name == "Mi"));
        let err = parse_program("solution A { XX; }").unwrap_err();
        assert!(matches!(err, ParseError::UnknownSymbol { ref name, .. } if name == "XX"));
    }

    #[test]
    fn duplicate_rule() {
        let err = parse_program("rule R: SC @ A => DL @ B;\nrule R: SC @ A => DL @ B;").unwrap_err();
        assert!(matches!(err, ParseError::DuplicateRule { ref name, span } if name == "R" && span.line == 2));
    }

    #[test]
    fn declared_kind_must_match_table() {
        let err = parse_program("data Sa: vector;").unwrap_err();
        assert!(matches!(err, ParseError::Declaration { .. }));
    }

    #[test]
    fn span_points_into_bad_token() {
        let text = "data Mi: matrix;\nsolution A {\n  i(Mi) <> ?? ;\n}";
        let err = parse_program(text).unwrap_err();
        assert_eq!(err.span(), SourceSpan { line: 3, column: 12 });
    }

    #[test]
    fn part_listing_order_is_irrelevant() {
        let a = "solution B { SC; }\nsolution A { DL; }";
        let b = "solution A { DL; }\nsolution B { SC; }";
        let pa = parse_program(a).unwrap();
        let pb = parse_program(b).unwrap();
        assert_eq!(render_program(&pa), render_program(&pb));
    }

    #[test]
    fn colliding_parts_merge() {
        let p = parse_program("solution A { SC; }\nsolution A { SC; DL; }").unwrap();
        assert_eq!(p.solution.size(), 3);
        assert_eq!(p.solution.part_count(), 1);
    }

    #[test]
    fn roundtrip_small_program() {
        let text = "data Mi: matrix; data Sa: matrix; hormone EH_SC; external Mi;\n\
                    solution SS { i(Mi) <> g(EH_SC) <> SC <> o(Sa) <> d(EH_SC); }\n\
                    rule T: i(Mi) <> g(EH_SC) <> SC <> o(Sa) <> d(EH_SC) @ SS // SC @ X\n\
                    => SC <> i(Mi) <> g(EH_SC) <> o(Sa) <> d(EH_SC) @ SM // SC @ X;";
        let p = parse_program(text).unwrap();
        let rendered = render_program(&p);
        let q = parse_program(&rendered).unwrap();
        assert_eq!(p, q);
        assert_eq!(render_program(&q), rendered);
    }

    #[test]
    fn unicode_diamond_accepted() {
        let m = parse_molecule("i(Mi) ◇ SC", &Declarations::all()).unwrap();
        assert_eq!(m.render(), "i(Mi) <> SC");
    }
}

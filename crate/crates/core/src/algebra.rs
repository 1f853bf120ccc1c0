//! The dynamic algebra: positive monomials over `p`, `q` and lifted `w`
//! generators, the `!` morphism, and rewriting of mixed starred words.
//!
//! Monomials are flat atom sequences; an atom at depth `k` stands for
//! `!^k(gen)`. Products compose right to left, the same way edge weights
//! compose along a path.

use std::fmt;
use std::str::FromStr;

use smallvec::SmallVec;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AlgebraError {
    #[error("word does not reduce to a stable form: {0}")]
    NonStableResidue(String),
    #[error("bad weight `{text}`: {reason}")]
    BadWeight { text: String, reason: String },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Generator {
    P,
    Q,
    /// Mux premise with identity `name` and exponent `lift`.
    W { name: u32, lift: u32 },
}

impl Generator {
    pub fn is_w(self) -> bool {
        matches!(self, Generator::W { .. })
    }

    fn lift(self) -> Option<u32> {
        match self {
            Generator::W { lift, .. } => Some(lift),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Atom {
    pub gen: Generator,
    pub depth: u32,
}

impl Atom {
    pub const fn new(gen: Generator, depth: u32) -> Self {
        Atom { gen, depth }
    }

    pub const fn p(depth: u32) -> Self {
        Atom::new(Generator::P, depth)
    }

    pub const fn q(depth: u32) -> Self {
        Atom::new(Generator::Q, depth)
    }

    pub const fn w(name: u32, lift: u32, depth: u32) -> Self {
        Atom::new(Generator::W { name, lift }, depth)
    }

    // Crossing a `w` of the given lift turns one `!` into `lift` of them.
    fn lifted(self, lift: u32) -> Atom {
        Atom::new(self.gen, self.depth + lift - 1)
    }
}

type Atoms = SmallVec<[Atom; 4]>;

/// A positive monomial in normal form. The empty monomial is `1`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Monomial(Atoms);

impl Monomial {
    pub fn one() -> Self {
        Monomial(Atoms::new())
    }

    pub fn atom(a: Atom) -> Self {
        let mut atoms = Atoms::new();
        atoms.push(a);
        Monomial(atoms)
    }

    /// Builds a monomial from arbitrary atoms, normalizing them.
    pub fn from_atoms<I: IntoIterator<Item = Atom>>(atoms: I) -> Self {
        let mut stack = Reducer::default();
        for a in atoms {
            let ok = stack.push(Letter::pos(a));
            debug_assert!(ok, "positive words never vanish");
        }
        Monomial(stack.into_letters().into_iter().map(|l| l.atom).collect())
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_one(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn min_depth(&self) -> Option<u32> {
        self.0.iter().map(|a| a.depth).min()
    }

    /// True when no adjacent pair is a swapping redex.
    pub fn is_normal(&self) -> bool {
        self.0
            .windows(2)
            .all(|w| !(w[1].gen.is_w() && w[0].depth > w[1].depth))
    }

    /// Reversed word with every letter starred.
    pub fn starred(&self) -> MixedWord {
        MixedWord(self.0.iter().rev().map(|&a| Letter::star(a)).collect())
    }

    pub fn to_word(&self) -> MixedWord {
        MixedWord(self.0.iter().map(|&a| Letter::pos(a)).collect())
    }
}

pub fn one() -> Monomial {
    Monomial::one()
}

/// Applies `!` k times.
pub fn bang(m: &Monomial, k: u32) -> Monomial {
    Monomial(
        m.0.iter()
            .map(|a| Atom::new(a.gen, a.depth + k))
            .collect(),
    )
}

pub fn mul(a: &Monomial, b: &Monomial) -> Monomial {
    if a.is_one() {
        return b.clone();
    }
    if b.is_one() {
        return a.clone();
    }
    let mut stack = Reducer::with_capacity(a.len() + b.len());
    for &atom in a.0.iter().chain(b.0.iter()) {
        stack.push(Letter::pos(atom));
    }
    Monomial(stack.into_letters().into_iter().map(|l| l.atom).collect())
}

/// Either zero or a nonzero positive monomial.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Weight {
    Zero,
    Pos(Monomial),
}

/// Either zero or `a·b⋆`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum StableResult {
    Zero,
    Stable(Monomial, Monomial),
}

impl StableResult {
    pub fn is_zero(&self) -> bool {
        matches!(self, StableResult::Zero)
    }
}

impl fmt::Display for StableResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StableResult::Zero => f.write_str("0"),
            StableResult::Stable(a, b) => write!(f, "{a} ; {b}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Letter {
    pub atom: Atom,
    pub starred: bool,
}

impl Letter {
    pub const fn pos(atom: Atom) -> Self {
        Letter { atom, starred: false }
    }

    pub const fn star(atom: Atom) -> Self {
        Letter { atom, starred: true }
    }
}

/// An arbitrary word over starred and unstarred atoms.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MixedWord(pub Vec<Letter>);

impl MixedWord {
    pub fn concat(mut self, other: &MixedWord) -> MixedWord {
        self.0.extend_from_slice(&other.0);
        self
    }
}

impl fmt::Display for MixedWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("1");
        }
        for (i, l) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(".")?;
            }
            write_atom(f, &l.atom)?;
            if l.starred {
                f.write_str("*")?;
            }
        }
        Ok(())
    }
}

/// Result of looking at one adjacent pair.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Step {
    Stuck,
    Vanish,
    Zero,
    Swap(Letter, Letter),
}

/// The oriented equations, applied to the adjacent pair `l r`.
pub fn step(l: Letter, r: Letter) -> Step {
    let (k, j) = (l.atom.depth, r.atom.depth);
    match (l.starred, r.starred) {
        (false, false) => match r.atom.gen.lift() {
            Some(e) if k > j => Step::Swap(r, Letter::pos(l.atom.lifted(e))),
            _ => Step::Stuck,
        },
        (true, true) => match l.atom.gen.lift() {
            Some(e) if j > k => Step::Swap(Letter::star(r.atom.lifted(e)), l),
            _ => Step::Stuck,
        },
        (true, false) => {
            if k == j {
                if l.atom.gen == r.atom.gen {
                    Step::Vanish
                } else {
                    Step::Zero
                }
            } else if k > j {
                match r.atom.gen.lift() {
                    Some(e) => Step::Swap(r, Letter::star(l.atom.lifted(e))),
                    None => Step::Stuck,
                }
            } else {
                match l.atom.gen.lift() {
                    Some(e) => Step::Swap(Letter::pos(r.atom.lifted(e)), l),
                    None => Step::Stuck,
                }
            }
        }
        (false, true) => Step::Stuck,
    }
}

/// Incremental normalizer: the stack never holds a redex.
#[derive(Clone, Debug, Default)]
pub struct Reducer {
    stack: Vec<Letter>,
    pending: Vec<Letter>,
}

impl Reducer {
    pub fn with_capacity(n: usize) -> Self {
        Reducer {
            stack: Vec::with_capacity(n),
            pending: Vec::new(),
        }
    }

    /// Appends one letter on the right. Returns false if the word became zero.
    pub fn push(&mut self, letter: Letter) -> bool {
        self.pending.push(letter);
        while let Some(t) = self.pending.pop() {
            let Some(&s) = self.stack.last() else {
                self.stack.push(t);
                continue;
            };
            match step(s, t) {
                Step::Stuck => self.stack.push(t),
                Step::Vanish => {
                    self.stack.pop();
                }
                Step::Zero => {
                    self.pending.clear();
                    return false;
                }
                Step::Swap(a, b) => {
                    self.stack.pop();
                    self.pending.push(b);
                    self.pending.push(a);
                }
            }
        }
        true
    }

    pub fn push_word(&mut self, word: &[Letter]) -> bool {
        word.iter().all(|&l| self.push(l))
    }

    pub fn letters(&self) -> &[Letter] {
        &self.stack
    }

    pub fn into_letters(self) -> Vec<Letter> {
        self.stack
    }
}

/// A normal form: zero, or an irreducible word.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NormalWord {
    Zero,
    Word(MixedWord),
}

impl NormalWord {
    pub fn to_stable(&self) -> Result<StableResult, AlgebraError> {
        match self {
            NormalWord::Zero => Ok(StableResult::Zero),
            NormalWord::Word(w) => split_stable(&w.0)
                .ok_or_else(|| AlgebraError::NonStableResidue(w.to_string())),
        }
    }
}

// Reads `a·b⋆` off an irreducible word, if it has that shape.
fn split_stable(letters: &[Letter]) -> Option<StableResult> {
    let cut = letters.iter().position(|l| l.starred).unwrap_or(letters.len());
    if letters[cut..].iter().any(|l| !l.starred) {
        return None;
    }
    let a = Monomial(letters[..cut].iter().map(|l| l.atom).collect());
    let b = Monomial(letters[cut..].iter().rev().map(|l| l.atom).collect());
    Some(StableResult::Stable(a, b))
}

pub fn reduce_word(word: &MixedWord) -> NormalWord {
    let mut r = Reducer::with_capacity(word.0.len());
    if r.push_word(&word.0) {
        NormalWord::Word(MixedWord(r.into_letters()))
    } else {
        NormalWord::Zero
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Strategy {
    Leftmost,
    Rightmost,
}

/// Plain search-and-rewrite normalizer, used to cross-check `Reducer`.
pub fn reduce_with(word: &MixedWord, strategy: Strategy) -> NormalWord {
    let mut w = word.0.clone();
    loop {
        let mut pick = None;
        let n = w.len();
        for i in 0..n.saturating_sub(1) {
            let idx = match strategy {
                Strategy::Leftmost => i,
                Strategy::Rightmost => n - 2 - i,
            };
            let s = step(w[idx], w[idx + 1]);
            if s != Step::Stuck {
                pick = Some((idx, s));
                break;
            }
        }
        match pick {
            None => return NormalWord::Word(MixedWord(w)),
            Some((_, Step::Zero)) => return NormalWord::Zero,
            Some((i, Step::Vanish)) => {
                w.drain(i..i + 2);
            }
            Some((i, Step::Swap(a, b))) => {
                w[i] = a;
                w[i + 1] = b;
            }
            Some((_, Step::Stuck)) => unreachable!(),
        }
    }
}

pub fn normalize_word(word: &MixedWord) -> Result<StableResult, AlgebraError> {
    reduce_word(word).to_stable()
}

/// Stable form of `b⋆·a`.
pub fn star_mul(b: &Monomial, a: &Monomial) -> Result<StableResult, AlgebraError> {
    let mut r = Reducer::with_capacity(a.len() + b.len());
    for &atom in b.0.iter().rev() {
        r.stack.push(Letter::star(atom));
    }
    for &atom in a.0.iter() {
        if !r.push(Letter::pos(atom)) {
            return Ok(StableResult::Zero);
        }
    }
    split_stable(&r.stack)
        .ok_or_else(|| AlgebraError::NonStableResidue(MixedWord(r.stack).to_string()))
}

/// `fin u = u·u⋆`; true iff `fin m1 · fin m2 ⋯ fin mk` is zero.
pub fn fin_product_zero(ms: &[Monomial]) -> bool {
    let mut r = Reducer::default();
    for m in ms {
        if !r.push_word(&m.to_word().0) || !r.push_word(&m.starred().0) {
            return true;
        }
    }
    false
}

fn write_atom(f: &mut fmt::Formatter<'_>, a: &Atom) -> fmt::Result {
    if a.depth > 0 {
        write!(f, "!{}:", a.depth)?;
    }
    match a.gen {
        Generator::P => f.write_str("p"),
        Generator::Q => f.write_str("q"),
        Generator::W { name, lift } => write!(f, "w({name},{lift})"),
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_atom(f, self)
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("1");
        }
        for (i, a) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(".")?;
            }
            write_atom(f, a)?;
        }
        Ok(())
    }
}

impl fmt::Display for Weight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Weight::Zero => f.write_str("0"),
            Weight::Pos(m) => m.fmt(f),
        }
    }
}

fn bad(text: &str, reason: impl Into<String>) -> AlgebraError {
    AlgebraError::BadWeight {
        text: text.to_string(),
        reason: reason.into(),
    }
}

fn parse_nat(text: &str, s: &str) -> Result<u32, AlgebraError> {
    if s.is_empty() || !s.bytes().all(|b| b.is_ascii_digit()) {
        return Err(bad(text, format!("expected a number, got `{s}`")));
    }
    s.parse().map_err(|_| bad(text, "number out of range"))
}

fn parse_atom(text: &str, s: &str) -> Result<Atom, AlgebraError> {
    let (depth, gen) = match s.strip_prefix('!') {
        Some(rest) => {
            let (d, g) = rest
                .split_once(':')
                .ok_or_else(|| bad(text, "missing `:` after depth"))?;
            let depth = parse_nat(text, d)?;
            if depth == 0 {
                return Err(bad(text, "explicit depth must be positive"));
            }
            (depth, g)
        }
        None => (0, s),
    };
    let gen = match gen {
        "p" => Generator::P,
        "q" => Generator::Q,
        g => {
            let inner = g
                .strip_prefix("w(")
                .and_then(|g| g.strip_suffix(')'))
                .ok_or_else(|| bad(text, format!("unknown generator `{g}`")))?;
            let (n, l) = inner
                .split_once(',')
                .ok_or_else(|| bad(text, "w needs name,lift"))?;
            Generator::W {
                name: parse_nat(text, n)?,
                lift: parse_nat(text, l)?,
            }
        }
    };
    Ok(Atom::new(gen, depth))
}

impl FromStr for Weight {
    type Err = AlgebraError;

    fn from_str(text: &str) -> Result<Self, Self::Err> {
        match text {
            "0" => Ok(Weight::Zero),
            "1" => Ok(Weight::Pos(Monomial::one())),
            _ => {
                let atoms: Atoms = text
                    .split('.')
                    .map(|s| parse_atom(text, s))
                    .collect::<Result<_, _>>()?;
                let m = Monomial(atoms);
                if !m.is_normal() {
                    return Err(bad(text, "monomial is not in normal form"));
                }
                Ok(Weight::Pos(m))
            }
        }
    }
}

impl FromStr for Monomial {
    type Err = AlgebraError;

    fn from_str(text: &str) -> Result<Self, Self::Err> {
        match text.parse::<Weight>()? {
            Weight::Pos(m) => Ok(m),
            Weight::Zero => Err(bad(text, "zero is not a positive monomial")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(s: &str) -> Monomial {
        s.parse().unwrap()
    }

    #[test]
    fn one_is_identity() {
        assert_eq!(mul(&one(), &m("q")), m("q"));
        assert_eq!(star_mul(&one(), &m("p.q")), Ok(StableResult::Stable(m("p.q"), one())));
        assert_eq!(bang(&one(), 5), one());
    }

    #[test]
    fn bang_shifts_depths() {
        assert_eq!(bang(&m("p"), 1), m("!1:p"));
        assert_eq!(bang(&m("w(0,2).!2:p"), 2), m("!2:w(0,2).!4:p"));
    }

    #[test]
    fn swapping_rule() {
        assert_eq!(mul(&m("!1:p"), &m("w(0,2)")), m("w(0,2).!2:p"));
        assert_eq!(mul(&m("q"), &m("p")), m("q.p"));
        // two bangs crossing a lift-3 mux: one is consumed, three are added
        assert_eq!(mul(&m("!2:q"), &m("w(1,3)")), m("w(1,3).!4:q"));
        // lift zero strips one level
        assert_eq!(mul(&m("!2:q"), &m("w(1,0)")), m("w(1,0).!1:q"));
    }

    #[test]
    fn star_mul_examples() {
        assert_eq!(star_mul(&m("p"), &m("p")), Ok(StableResult::Stable(one(), one())));
        assert_eq!(star_mul(&m("q"), &m("p")), Ok(StableResult::Zero));
        assert_eq!(star_mul(&m("q.p"), &m("q")), Ok(StableResult::Stable(one(), m("p"))));
        assert_eq!(
            star_mul(&m("w(0,2)"), &m("!1:p")),
            Ok(StableResult::Stable(m("!2:p"), m("w(0,2)")))
        );
        assert!(matches!(
            star_mul(&m("p"), &m("!1:q")),
            Err(AlgebraError::NonStableResidue(_))
        ));
    }

    #[test]
    fn normalize_examples() {
        let w = MixedWord(vec![Letter::star(Atom::p(0)), Letter::pos(Atom::p(0))]);
        assert_eq!(normalize_word(&w), Ok(StableResult::Stable(one(), one())));
        let w = MixedWord(vec![
            Letter::pos(Atom::q(0)),
            Letter::star(Atom::q(0)),
            Letter::pos(Atom::p(0)),
        ]);
        assert_eq!(normalize_word(&w), Ok(StableResult::Zero));
        assert_eq!(
            normalize_word(&MixedWord::default()),
            Ok(StableResult::Stable(one(), one()))
        );
    }

    #[test]
    fn fin_products() {
        assert!(fin_product_zero(&[m("q"), m("q.p.w(0,2)"), m("q.q")]));
        assert!(fin_product_zero(&[m("p"), m("q")]));
        assert!(!fin_product_zero(&[m("p.q"), m("p.q")]));
        assert!(!fin_product_zero(&[one(), one(), one()]));
    }

    #[test]
    fn weight_text_round_trip() {
        for s in ["0", "1", "p", "w(0,2).!2:p", "w(3,1).!1:q.!4:w(7,2)"] {
            let w: Weight = s.parse().unwrap();
            assert_eq!(w.to_string(), s);
        }
        for s in ["", "x", "!0:p", "!2p", "w(1)", "p..q", "!1:p.w(0,2)x"] {
            assert!(s.parse::<Weight>().is_err(), "{s}");
        }
        // not normal: the w should have been swapped to the left
        assert!("!1:p.w(0,2)".parse::<Weight>().is_err());
    }
}

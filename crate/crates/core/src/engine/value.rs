//! Symbolic values: linear sums, addresses and boolean formulas.

use std::collections::BTreeMap;
use std::fmt;

/// A symbol. `id` is unique per analysis; `label` is the stable display name
/// used in summaries (the same parameter gets the same label in every run).
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Symbol {
    pub id: u32,
    pub label: String,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Atom {
    Sym(Symbol),
    /// Nonlinear term, keyed canonically by symbol ids.
    Opaque {
        key: String,
        label: String,
    },
}

impl Atom {
    fn key(&self) -> String {
        match self {
            Atom::Sym(s) => format!("s{}", s.id),
            Atom::Opaque { key, .. } => key.clone(),
        }
    }

    pub fn label(&self) -> &str {
        match self {
            Atom::Sym(s) => &s.label,
            Atom::Opaque { label, .. } => label,
        }
    }
}

/// `c + Σ k·atom` over nonnegative integer atoms.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Num {
    pub c: i128,
    pub terms: BTreeMap<Atom, i128>,
}

impl Num {
    pub fn constant(c: i128) -> Num {
        Num {
            c,
            terms: BTreeMap::new(),
        }
    }

    pub fn atom(a: Atom) -> Num {
        let mut terms = BTreeMap::new();
        terms.insert(a, 1);
        Num { c: 0, terms }
    }

    pub fn sym(s: Symbol) -> Num {
        Num::atom(Atom::Sym(s))
    }

    pub fn as_const(&self) -> Option<i128> {
        self.terms.is_empty().then_some(self.c)
    }

    pub fn is_zero(&self) -> bool {
        self.as_const() == Some(0)
    }

    pub fn add(&self, o: &Num) -> Num {
        let mut r = self.clone();
        r.c += o.c;
        for (a, k) in &o.terms {
            let e = r.terms.entry(a.clone()).or_insert(0);
            *e += k;
            if *e == 0 {
                r.terms.remove(a);
            }
        }
        r
    }

    pub fn scale(&self, k: i128) -> Num {
        if k == 0 {
            return Num::constant(0);
        }
        Num {
            c: self.c * k,
            terms: self.terms.iter().map(|(a, v)| (a.clone(), v * k)).collect(),
        }
    }

    pub fn neg(&self) -> Num {
        self.scale(-1)
    }

    pub fn sub(&self, o: &Num) -> Num {
        self.add(&o.neg())
    }

    fn key(&self) -> String {
        let mut s = self.c.to_string();
        for (a, k) in &self.terms {
            s.push_str(&format!("+{k}{}", a.key()));
        }
        s
    }

    pub fn mul(&self, o: &Num) -> Num {
        match (self.as_const(), o.as_const()) {
            (Some(a), _) => o.scale(a),
            (_, Some(b)) => self.scale(b),
            _ => {
                let (x, y) = if self.key() <= o.key() {
                    (self, o)
                } else {
                    (o, self)
                };
                Num::atom(Atom::Opaque {
                    key: format!("({})*({})", x.key(), y.key()),
                    label: format!("({x})*({y})"),
                })
            }
        }
    }

    /// Integer division; callers guard against a zero divisor.
    pub fn div(&self, o: &Num) -> Num {
        if let Some(d) = o.as_const().filter(|d| *d > 0) {
            if let Some(a) = self.as_const() {
                return Num::constant(a.div_euclid(d));
            }
            if self.c % d == 0 && self.terms.values().all(|k| k % d == 0) {
                return Num {
                    c: self.c / d,
                    terms: self.terms.iter().map(|(a, k)| (a.clone(), k / d)).collect(),
                };
            }
        }
        Num::atom(Atom::Opaque {
            key: format!("({})/({})", self.key(), o.key()),
            label: format!("({self})/({o})"),
        })
    }

    pub fn atoms(&self) -> impl Iterator<Item = &Atom> {
        self.terms.keys()
    }
}

impl fmt::Display for Num {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (a, k) in &self.terms {
            let sign = if *k < 0 {
                "-"
            } else if first {
                ""
            } else {
                "+"
            };
            let mag = k.abs();
            if mag == 1 {
                write!(f, "{sign}{}", a.label())?;
            } else {
                write!(f, "{sign}{mag}*{}", a.label())?;
            }
            first = false;
        }
        if first {
            write!(f, "{}", self.c)
        } else if self.c > 0 {
            write!(f, "+{}", self.c)
        } else if self.c < 0 {
            write!(f, "{}", self.c)
        } else {
            Ok(())
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Addr {
    Const(String),
    Sym(Symbol),
}

impl fmt::Display for Addr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Addr::Const(c) => f.write_str(c),
            Addr::Sym(s) => f.write_str(&s.label),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Formula {
    Const(bool),
    Var(Symbol),
    Not(Box<Formula>),
    And(Vec<Formula>),
    Or(Vec<Formula>),
    AddrEq(Addr, Addr),
    /// `sum >= 0`
    Ge0(Num),
    /// `sum == 0`
    Eq0(Num),
}

impl Formula {
    #[allow(clippy::should_implement_trait)]
    pub fn not(self) -> Formula {
        match self {
            Formula::Const(b) => Formula::Const(!b),
            Formula::Not(inner) => *inner,
            other => Formula::Not(Box::new(other)),
        }
    }

    pub fn and(items: Vec<Formula>) -> Formula {
        let mut out = vec![];
        for f in items {
            match f {
                Formula::Const(true) => {}
                Formula::Const(false) => return Formula::Const(false),
                Formula::And(inner) => out.extend(inner),
                other => out.push(other),
            }
        }
        out.dedup();
        match out.len() {
            0 => Formula::Const(true),
            1 => out.pop().unwrap(),
            _ => Formula::And(out),
        }
    }

    pub fn or(items: Vec<Formula>) -> Formula {
        let mut out = vec![];
        for f in items {
            match f {
                Formula::Const(false) => {}
                Formula::Const(true) => return Formula::Const(true),
                Formula::Or(inner) => out.extend(inner),
                other => out.push(other),
            }
        }
        out.dedup();
        match out.len() {
            0 => Formula::Const(false),
            1 => out.pop().unwrap(),
            _ => Formula::Or(out),
        }
    }

    pub fn ge0(n: Num) -> Formula {
        match n.as_const() {
            Some(c) => Formula::Const(c >= 0),
            // A sum of nonnegative atoms with nonnegative coefficients.
            None if n.c >= 0 && n.terms.values().all(|k| *k > 0) => Formula::Const(true),
            None => Formula::Ge0(n),
        }
    }

    pub fn eq0(n: Num) -> Formula {
        match n.as_const() {
            Some(c) => Formula::Const(c == 0),
            None if n.c > 0 && n.terms.values().all(|k| *k > 0) => Formula::Const(false),
            None if n.c < 0 && n.terms.values().all(|k| *k < 0) => Formula::Const(false),
            None => Formula::Eq0(n),
        }
    }

    pub fn addr_eq(a: Addr, b: Addr) -> Formula {
        match (&a, &b) {
            _ if a == b => Formula::Const(true),
            (Addr::Const(_), Addr::Const(_)) => Formula::Const(false),
            _ if a <= b => Formula::AddrEq(a, b),
            _ => Formula::AddrEq(b, a),
        }
    }

    pub fn as_const(&self) -> Option<bool> {
        match self {
            Formula::Const(b) => Some(*b),
            _ => None,
        }
    }

    /// Display form bounded to a finite vocabulary: literals and (negated)
    /// symbols print as themselves, anything larger prints as `sym`.
    pub fn summary_label(&self) -> String {
        match self {
            Formula::Const(b) => b.to_string(),
            Formula::Var(s) => s.label.clone(),
            Formula::Not(inner) => match inner.as_ref() {
                Formula::Var(s) => format!("!{}", s.label),
                _ => "sym".into(),
            },
            _ => "sym".into(),
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::Const(b) => write!(f, "{b}"),
            Formula::Var(s) => f.write_str(&s.label),
            Formula::Not(inner) => write!(f, "!({inner})"),
            Formula::And(xs) | Formula::Or(xs) => {
                let op = if matches!(self, Formula::And(_)) {
                    " && "
                } else {
                    " || "
                };
                let parts: Vec<String> = xs.iter().map(|x| format!("({x})")).collect();
                f.write_str(&parts.join(op))
            }
            Formula::AddrEq(a, b) => write!(f, "{a} == {b}"),
            Formula::Ge0(n) => write!(f, "{n} >= 0"),
            Formula::Eq0(n) => write!(f, "{n} == 0"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Value {
    Num(Num),
    /// `twin` marks the ordinary caller: the same account data as the
    /// privileged sender, but never equal to it in comparisons.
    Addr {
        a: Addr,
        twin: bool,
    },
    Bool(Formula),
}

impl Value {
    pub fn addr(a: Addr) -> Value {
        Value::Addr { a, twin: false }
    }

    pub fn num(&self) -> &Num {
        match self {
            Value::Num(n) => n,
            other => panic!("expected numeric value, got {other:?}"),
        }
    }

    pub fn formula(&self) -> &Formula {
        match self {
            Value::Bool(f) => f,
            other => panic!("expected boolean value, got {other:?}"),
        }
    }

    pub fn address(&self) -> &Addr {
        match self {
            Value::Addr { a, .. } => a,
            other => panic!("expected address value, got {other:?}"),
        }
    }

    /// The value as stored: caller identity tags do not persist.
    pub fn stored(self) -> Value {
        match self {
            Value::Addr { a, .. } => Value::addr(a),
            other => other,
        }
    }

    pub fn equals(&self, o: &Value) -> Formula {
        match (self, o) {
            (Value::Num(a), Value::Num(b)) => Formula::eq0(a.sub(b)),
            (Value::Addr { a, twin: ta }, Value::Addr { a: b, twin: tb }) => {
                if ta != tb {
                    Formula::Const(false)
                } else {
                    Formula::addr_eq(a.clone(), b.clone())
                }
            }
            (Value::Bool(a), Value::Bool(b)) => {
                if a == b {
                    Formula::Const(true)
                } else {
                    Formula::or(vec![
                        Formula::and(vec![a.clone(), b.clone()]),
                        Formula::and(vec![a.clone().not(), b.clone().not()]),
                    ])
                }
            }
            _ => Formula::Const(false),
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Num(n) => write!(f, "{n}"),
            Value::Addr { a, twin: false } => write!(f, "{a}"),
            Value::Addr { a, twin: true } => write!(f, "{a}'"),
            Value::Bool(b) => write!(f, "{b}"),
        }
    }
}

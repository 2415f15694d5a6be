//! Decision procedure for path conditions.
//!
//! Boolean structure is split by case analysis; each leaf is a conjunction of
//! bool literals, address (dis)equalities (union-find) and linear integer
//! inequalities (Fourier-Motzkin with gcd tightening).

use std::collections::{BTreeMap, BTreeSet};

use super::value::{Addr, Atom, Formula, Num};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SatResult {
    Sat,
    Unsat,
    Unknown,
}

const MAX_LEAVES: usize = 4096;
const MAX_FM_ROWS: usize = 4000;

#[derive(Clone, Debug)]
enum Lit {
    Bool(u32, bool),
    Addr(Addr, Addr, bool),
    Ge0(Num),
}

/// Negation normal form; `Eq0` is expanded into two inequalities.
fn nnf(f: &Formula, positive: bool) -> Formula {
    match (f, positive) {
        (Formula::Const(b), p) => Formula::Const(*b == p),
        (Formula::Var(_) | Formula::AddrEq(..), true) => f.clone(),
        (Formula::Var(_) | Formula::AddrEq(..), false) => Formula::Not(Box::new(f.clone())),
        (Formula::Not(inner), p) => nnf(inner, !p),
        (Formula::And(xs), true) | (Formula::Or(xs), false) => {
            Formula::and(xs.iter().map(|x| nnf(x, positive)).collect())
        }
        (Formula::Or(xs), true) | (Formula::And(xs), false) => {
            Formula::or(xs.iter().map(|x| nnf(x, positive)).collect())
        }
        (Formula::Ge0(n), true) => Formula::ge0(n.clone()),
        (Formula::Ge0(n), false) => Formula::ge0(n.neg().sub(&Num::constant(1))),
        (Formula::Eq0(n), true) => {
            Formula::and(vec![Formula::ge0(n.clone()), Formula::ge0(n.neg())])
        }
        (Formula::Eq0(n), false) => Formula::or(vec![
            Formula::ge0(n.sub(&Num::constant(1))),
            Formula::ge0(n.neg().sub(&Num::constant(1))),
        ]),
    }
}

struct Search {
    leaves: usize,
    unknown: bool,
}

impl Search {
    fn run(&mut self, mut pending: Vec<Formula>, mut lits: Vec<Lit>) -> bool {
        while let Some(f) = pending.pop() {
            match f {
                Formula::Const(true) => {}
                Formula::Const(false) => return false,
                Formula::And(xs) => pending.extend(xs),
                Formula::Or(xs) => {
                    for x in xs {
                        if self.leaves >= MAX_LEAVES {
                            self.unknown = true;
                            return false;
                        }
                        let mut p = pending.clone();
                        p.push(x);
                        if self.run(p, lits.clone()) {
                            return true;
                        }
                    }
                    return false;
                }
                Formula::Var(s) => lits.push(Lit::Bool(s.id, true)),
                Formula::AddrEq(a, b) => lits.push(Lit::Addr(a, b, true)),
                Formula::Ge0(n) => lits.push(Lit::Ge0(n)),
                Formula::Not(inner) => match *inner {
                    Formula::Var(s) => lits.push(Lit::Bool(s.id, false)),
                    Formula::AddrEq(a, b) => lits.push(Lit::Addr(a, b, false)),
                    other => pending.push(nnf(&other, false)),
                },
                Formula::Eq0(_) => pending.push(nnf(&f, true)),
            }
        }
        self.leaves += 1;
        match check_leaf(&lits) {
            SatResult::Sat => true,
            SatResult::Unsat => false,
            SatResult::Unknown => {
                self.unknown = true;
                false
            }
        }
    }
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn find(&mut self, x: usize) -> usize {
        let p = self.parent[x];
        if p == x {
            return x;
        }
        let r = self.find(p);
        self.parent[x] = r;
        r
    }
}

fn check_leaf(lits: &[Lit]) -> SatResult {
    let mut bools: BTreeMap<u32, bool> = BTreeMap::new();
    let mut addr_ids: BTreeMap<Addr, usize> = BTreeMap::new();
    let mut eqs = vec![];
    let mut neqs = vec![];
    let mut rows = vec![];
    for l in lits {
        match l {
            Lit::Bool(id, v) => {
                if bools.insert(*id, *v).is_some_and(|old| old != *v) {
                    return SatResult::Unsat;
                }
            }
            Lit::Addr(a, b, pos) => {
                let n = addr_ids.len();
                let ia = *addr_ids.entry(a.clone()).or_insert(n);
                let n = addr_ids.len();
                let ib = *addr_ids.entry(b.clone()).or_insert(n);
                if *pos {
                    eqs.push((ia, ib));
                } else {
                    neqs.push((ia, ib));
                }
            }
            Lit::Ge0(n) => rows.push(n.clone()),
        }
    }
    let mut uf = UnionFind {
        parent: (0..addr_ids.len()).collect(),
    };
    for (a, b) in eqs {
        let (ra, rb) = (uf.find(a), uf.find(b));
        uf.parent[ra] = rb;
    }
    let mut const_of_class: BTreeMap<usize, &Addr> = BTreeMap::new();
    for (addr, id) in &addr_ids {
        if let Addr::Const(_) = addr {
            let r = uf.find(*id);
            if let Some(other) = const_of_class.insert(r, addr) {
                if other != addr {
                    return SatResult::Unsat;
                }
            }
        }
    }
    for (a, b) in neqs {
        if uf.find(a) == uf.find(b) {
            return SatResult::Unsat;
        }
    }
    fourier_motzkin(&rows)
}

fn gcd(a: i128, b: i128) -> i128 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

type Row = (BTreeMap<usize, i128>, i128);

/// Normalize `Σ k·x + c >= 0`; `None` means trivially false.
fn normalize(mut row: Row) -> Option<Option<Row>> {
    row.0.retain(|_, k| *k != 0);
    if row.0.is_empty() {
        return if row.1 >= 0 { Some(None) } else { None };
    }
    let g = row.0.values().fold(0, |g, k| gcd(g, *k));
    if g > 1 {
        for k in row.0.values_mut() {
            *k /= g;
        }
        row.1 = row.1.div_euclid(g);
    }
    Some(Some(row))
}

/// `m1·r + m2·s`, dropping zero coefficients; `None` on overflow.
fn combine(r: &Row, m1: i128, s: &Row, m2: i128) -> Option<Row> {
    let mut coeffs: BTreeMap<usize, i128> = BTreeMap::new();
    for (row, m) in [(r, m1), (s, m2)] {
        for (x, k) in &row.0 {
            let e = coeffs.entry(*x).or_insert(0);
            *e = e.checked_add(k.checked_mul(m)?)?;
        }
    }
    coeffs.retain(|_, k| *k != 0);
    let c = r.1.checked_mul(m1)?.checked_add(s.1.checked_mul(m2)?)?;
    Some((coeffs, c))
}

fn negated(r: &Row) -> Row {
    (r.0.iter().map(|(x, k)| (*x, -k)).collect(), -r.1)
}

/// An equality (a row whose negation is also present) with a unit coefficient.
fn unit_equality(rows: &BTreeSet<Row>, vars: &BTreeSet<usize>) -> Option<(usize, Row)> {
    rows.iter().find_map(|r| {
        let (v, _) = r.0.iter().find(|(x, k)| k.abs() == 1 && vars.contains(x))?;
        rows.contains(&negated(r)).then(|| (*v, r.clone()))
    })
}

/// Integer model by back-substitution in reverse elimination order.
fn reconstruct(trail: &[(usize, Vec<Row>)]) -> Option<BTreeMap<usize, i128>> {
    let mut model = BTreeMap::new();
    for (v, rows) in trail.iter().rev() {
        let (mut lo, mut hi) = (i128::MIN, i128::MAX);
        for (coeffs, c) in rows {
            let mut rest = *c;
            for (x, k) in coeffs {
                if x != v {
                    rest = rest.checked_add(k.checked_mul(*model.get(x)?)?)?;
                }
            }
            let k = coeffs[v];
            if k > 0 {
                lo = lo.max(-rest.div_euclid(k));
            } else {
                hi = hi.min(rest.div_euclid(-k));
            }
        }
        let val = if lo > i128::MIN {
            lo
        } else if hi < i128::MAX {
            hi
        } else {
            0
        };
        if val > hi {
            return None;
        }
        model.insert(*v, val);
    }
    Some(model)
}

/// Integer feasibility of `Σ k·x + c >= 0` rows over nonnegative atoms.
///
/// Unit equalities are substituted exactly, the rest is eliminated over the
/// rationals with gcd tightening. `Sat` is only returned once an integer model
/// is rebuilt; otherwise the answer is `Unknown`.
fn fourier_motzkin(sums: &[Num]) -> SatResult {
    let mut atom_ids: BTreeMap<&Atom, usize> = BTreeMap::new();
    let mut rows: BTreeSet<Row> = BTreeSet::new();
    for n in sums {
        for a in n.atoms() {
            let next = atom_ids.len();
            atom_ids.entry(a).or_insert(next);
        }
    }
    // Every atom is a nonnegative integer.
    for id in atom_ids.values() {
        rows.insert((BTreeMap::from([(*id, 1)]), 0));
    }
    for n in sums {
        let row = (
            n.terms.iter().map(|(a, k)| (atom_ids[a], *k)).collect(),
            n.c,
        );
        match normalize(row) {
            None => return SatResult::Unsat,
            Some(None) => {}
            Some(Some(r)) => {
                rows.insert(r);
            }
        }
    }
    let mut vars: BTreeSet<usize> = atom_ids.values().copied().collect();
    let mut trail: Vec<(usize, Vec<Row>)> = vec![];
    while !vars.is_empty() {
        let (v, next) = if let Some((v, eq)) = unit_equality(&rows, &vars) {
            let ke = eq.0[&v];
            let neg = negated(&eq);
            let mut next = BTreeSet::new();
            for r in rows {
                let Some(&a) = r.0.get(&v) else {
                    next.insert(r);
                    continue;
                };
                if r == eq || r == neg {
                    continue;
                }
                let Some(s) = combine(&r, 1, &eq, -a * ke) else {
                    return SatResult::Unknown;
                };
                match normalize(s) {
                    None => return SatResult::Unsat,
                    Some(None) => {}
                    Some(Some(s)) => {
                        next.insert(s);
                    }
                }
            }
            trail.push((v, vec![eq, neg]));
            (v, next)
        } else {
            let v = *vars
                .iter()
                .min_by_key(|v| {
                    let pos = rows
                        .iter()
                        .filter(|r| r.0.get(v).is_some_and(|k| *k > 0))
                        .count();
                    let neg = rows
                        .iter()
                        .filter(|r| r.0.get(v).is_some_and(|k| *k < 0))
                        .count();
                    pos * neg
                })
                .expect("vars is non-empty");
            let (with, without): (Vec<Row>, Vec<Row>) =
                rows.into_iter().partition(|r| r.0.contains_key(&v));
            let mut next: BTreeSet<Row> = without.into_iter().collect();
            for p in with.iter().filter(|r| r.0[&v] > 0) {
                for n in with.iter().filter(|r| r.0[&v] < 0) {
                    let Some(s) = combine(p, -n.0[&v], n, p.0[&v]) else {
                        return SatResult::Unknown;
                    };
                    match normalize(s) {
                        None => return SatResult::Unsat,
                        Some(None) => {}
                        Some(Some(s)) => {
                            next.insert(s);
                        }
                    }
                }
            }
            trail.push((v, with));
            (v, next)
        };
        vars.remove(&v);
        if next.len() > MAX_FM_ROWS {
            return SatResult::Unknown;
        }
        rows = next;
    }
    match reconstruct(&trail) {
        Some(_) => SatResult::Sat,
        None => SatResult::Unknown,
    }
}

/// Satisfiability of a conjunction.
pub fn check(constraints: &[Formula]) -> SatResult {
    let f = Formula::and(constraints.to_vec());
    let mut s = Search {
        leaves: 0,
        unknown: false,
    };
    if s.run(vec![f], vec![]) {
        SatResult::Sat
    } else if s.unknown {
        SatResult::Unknown
    } else {
        SatResult::Unsat
    }
}

/// Whether `pc` entails `goal` (only when the negation is refuted).
pub fn entails(pc: &[Formula], goal: &Formula) -> bool {
    let mut cs = pc.to_vec();
    cs.push(goal.clone().not());
    check(&cs) == SatResult::Unsat
}

#[cfg(test)]
mod tests {
    use super::super::value::Symbol;
    use super::*;

    fn sym(id: u32) -> Num {
        Num::sym(Symbol {
            id,
            label: format!("x{id}"),
        })
    }

    #[test]
    fn linear_bounds() {
        let x = sym(1);
        // x - 3 >= 0 and 2 - x >= 0 is unsat
        let f = vec![
            Formula::ge0(x.sub(&Num::constant(3))),
            Formula::ge0(Num::constant(2).sub(&x)),
        ];
        assert_eq!(check(&f), SatResult::Unsat);
        assert!(entails(
            &[Formula::ge0(x.sub(&Num::constant(1)))],
            &Formula::eq0(x.clone()).not()
        ));
    }

    #[test]
    fn gcd_tightening_finds_integer_gap() {
        let x = sym(1);
        // 2x == 1 has no integer solution.
        let f = vec![Formula::eq0(x.scale(2).sub(&Num::constant(1)))];
        assert_eq!(check(&f), SatResult::Unsat);
    }

    #[test]
    fn rational_only_solutions_are_not_sat() {
        let (x, y) = (sym(1), sym(2));
        // x + 2y == 5 and 2y - x >= 4 force x = -1.
        let f = vec![
            Formula::eq0(x.add(&y.scale(2)).sub(&Num::constant(5))),
            Formula::ge0(y.scale(2).sub(&x).sub(&Num::constant(4))),
        ];
        assert_eq!(check(&f), SatResult::Unsat);
    }

    #[test]
    fn address_disequality_chain() {
        let a = Addr::Sym(Symbol {
            id: 1,
            label: "a".into(),
        });
        let b = Addr::Sym(Symbol {
            id: 2,
            label: "b".into(),
        });
        let c = Addr::Const("0x0".into());
        let f = vec![
            Formula::addr_eq(a.clone(), b.clone()),
            Formula::addr_eq(b.clone(), c.clone()),
            Formula::addr_eq(a, c).not(),
        ];
        assert_eq!(check(&f), SatResult::Unsat);
    }
}

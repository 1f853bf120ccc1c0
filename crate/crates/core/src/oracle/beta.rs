use std::collections::BTreeSet;

use crate::translate::Term;

use super::OracleError;

#[derive(Clone, Debug, PartialEq, Eq)]
enum Db {
    Bound(usize),
    Free(String),
    Lam(Box<Db>),
    App(Box<Db>, Box<Db>),
}

fn to_db(t: &Term, env: &mut Vec<String>) -> Db {
    match t {
        Term::Var(x) => match env.iter().rev().position(|y| y == x) {
            Some(i) => Db::Bound(i),
            None => Db::Free(x.clone()),
        },
        Term::Abs(x, b) => {
            env.push(x.clone());
            let body = to_db(b, env);
            env.pop();
            Db::Lam(Box::new(body))
        }
        Term::App(f, a) => Db::App(Box::new(to_db(f, env)), Box::new(to_db(a, env))),
    }
}

fn shift(t: &Db, by: isize, cutoff: usize) -> Db {
    match t {
        Db::Bound(i) if *i >= cutoff => Db::Bound((*i as isize + by) as usize),
        Db::Bound(_) | Db::Free(_) => t.clone(),
        Db::Lam(b) => Db::Lam(Box::new(shift(b, by, cutoff + 1))),
        Db::App(f, a) => Db::App(Box::new(shift(f, by, cutoff)), Box::new(shift(a, by, cutoff))),
    }
}

/// `body[0 := arg]`, with the binder removed.
fn subst(body: &Db, arg: &Db, depth: usize) -> Db {
    match body {
        Db::Bound(i) if *i == depth => shift(arg, depth as isize, 0),
        Db::Bound(i) if *i > depth => Db::Bound(i - 1),
        Db::Bound(_) | Db::Free(_) => body.clone(),
        Db::Lam(b) => Db::Lam(Box::new(subst(b, arg, depth + 1))),
        Db::App(f, a) => Db::App(Box::new(subst(f, arg, depth)), Box::new(subst(a, arg, depth))),
    }
}

/// One leftmost-outermost step, if any redex exists.
fn step(t: &Db) -> Option<Db> {
    match t {
        Db::App(f, a) => {
            if let Db::Lam(b) = &**f {
                return Some(subst(b, a, 0));
            }
            if let Some(f2) = step(f) {
                return Some(Db::App(Box::new(f2), a.clone()));
            }
            step(a).map(|a2| Db::App(f.clone(), Box::new(a2)))
        }
        Db::Lam(b) => step(b).map(|b2| Db::Lam(Box::new(b2))),
        _ => None,
    }
}

fn from_db(t: &Db, names: &mut Vec<String>, avoid: &BTreeSet<String>) -> Term {
    match t {
        Db::Bound(i) => Term::Var(names[names.len() - 1 - i].clone()),
        Db::Free(x) => Term::Var(x.clone()),
        Db::Lam(b) => {
            let mut k = names.len();
            let name = loop {
                let c = format!("x{k}");
                if !avoid.contains(&c) && !names.contains(&c) {
                    break c;
                }
                k += 1;
            };
            names.push(name.clone());
            let body = from_db(b, names, avoid);
            names.pop();
            Term::Abs(name, Box::new(body))
        }
        Db::App(f, a) => Term::app(from_db(f, names, avoid), from_db(a, names, avoid)),
    }
}

/// Normal-order reduction with at most `fuel` steps.
pub fn beta_normal_form(t: &Term, fuel: u64) -> Result<Term, OracleError> {
    let mut cur = to_db(t, &mut Vec::new());
    let mut used = 0;
    while let Some(next) = step(&cur) {
        if used == fuel {
            return Err(OracleError::FuelExhausted(fuel));
        }
        used += 1;
        cur = next;
    }
    let avoid = t.free_vars().into_iter().collect();
    Ok(from_db(&cur, &mut Vec::new(), &avoid))
}

pub fn alpha_eq(a: &Term, b: &Term) -> bool {
    to_db(a, &mut Vec::new()) == to_db(b, &mut Vec::new())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::translate::parse;

    fn nf(src: &str) -> Term {
        beta_normal_form(&parse(src).unwrap(), 10_000).unwrap()
    }

    #[test]
    fn two_identity() {
        assert!(alpha_eq(&nf(r"(\f \x (f)(f)x) \x x"), &parse(r"\y y").unwrap()));
    }

    #[test]
    fn two_two_is_four() {
        assert!(alpha_eq(&nf("(2)(2)"), &Term::church(4)));
    }

    #[test]
    fn omega_runs_out_of_fuel() {
        let omega = parse(r"(\x x x) \x x x").unwrap();
        assert_eq!(beta_normal_form(&omega, 100), Err(OracleError::FuelExhausted(100)));
    }

    #[test]
    fn capture_is_avoided() {
        // (λx λy x) y  ->  λz y, not λy y
        let t = nf(r"(\x \y x) y");
        assert!(alpha_eq(&t, &parse(r"\z y").unwrap()));
        assert!(!alpha_eq(&t, &parse(r"\y y").unwrap()));
    }
}

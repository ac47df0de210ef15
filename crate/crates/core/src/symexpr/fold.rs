//! Canonicalising fold: sums of coefficient-weighted monomials over opaque
//! bases (variables, function applications, irreducible sums).

use std::cmp::Ordering;
use std::collections::HashMap;

use super::{Node, ScalarField};

/// Sorted list of (base, exponent) with nonzero exponents.
type Mono = Vec<(ScalarField, i32)>;

#[derive(Clone, Debug, Default)]
struct Poly {
    terms: Vec<(Mono, f64)>,
}

/// Largest positive power of a sum that is expanded.
const MAX_EXPAND: i32 = 4;

fn cmp_mono(a: &Mono, b: &Mono) -> Ordering {
    for ((ba, ea), (bb, eb)) in a.iter().zip(b) {
        let o = ba.structural_cmp(bb).then(ea.cmp(eb));
        if o != Ordering::Equal {
            return o;
        }
    }
    a.len().cmp(&b.len())
}

fn mul_mono(a: &Mono, b: &Mono) -> Option<Mono> {
    let mut out: Mono = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        let o = match (a.get(i), b.get(j)) {
            (Some(x), Some(y)) => x.0.structural_cmp(&y.0),
            (Some(_), None) => Ordering::Less,
            _ => Ordering::Greater,
        };
        match o {
            Ordering::Less => {
                out.push(a[i].clone());
                i += 1;
            }
            Ordering::Greater => {
                out.push(b[j].clone());
                j += 1;
            }
            Ordering::Equal => {
                let e = a[i].1.checked_add(b[j].1)?;
                if e != 0 {
                    out.push((a[i].0.clone(), e));
                }
                i += 1;
                j += 1;
            }
        }
    }
    Some(out)
}

impl Poly {
    fn constant(c: f64) -> Self {
        let mut p = Poly {
            terms: vec![(Vec::new(), c)],
        };
        p.normalize();
        p
    }

    fn base(b: ScalarField, e: i32) -> Self {
        Poly {
            terms: vec![(vec![(b, e)], 1.0)],
        }
    }

    fn as_const(&self) -> Option<f64> {
        match self.terms.as_slice() {
            [] => Some(0.0),
            [(m, c)] if m.is_empty() => Some(*c),
            _ => None,
        }
    }

    fn normalize(&mut self) {
        self.terms.sort_by(|a, b| cmp_mono(&a.0, &b.0));
        let mut merged: Vec<(Mono, f64)> = Vec::with_capacity(self.terms.len());
        for (m, c) in self.terms.drain(..) {
            match merged.last_mut() {
                Some(last) if cmp_mono(&last.0, &m) == Ordering::Equal => last.1 += c,
                _ => merged.push((m, c)),
            }
        }
        merged.retain(|(_, c)| *c != 0.0);
        self.terms = merged;
    }

    fn add(&self, other: &Poly, sign: f64) -> Poly {
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().map(|(m, c)| (m.clone(), sign * c)));
        let mut p = Poly { terms };
        p.normalize();
        p
    }

    fn mul(&self, other: &Poly) -> Option<Poly> {
        let mut terms = Vec::with_capacity(self.terms.len() * other.terms.len());
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                terms.push((mul_mono(ma, mb)?, ca * cb));
            }
        }
        let mut p = Poly { terms };
        p.normalize();
        Some(p)
    }

    fn to_field(&self) -> ScalarField {
        let mut acc: Option<ScalarField> = None;
        for (m, c) in &self.terms {
            let mut num = ScalarField::one();
            let mut den = ScalarField::one();
            for (b, e) in m {
                if *e > 0 {
                    num = ScalarField::mul(&num, &ScalarField::powi(b, *e));
                } else {
                    den = ScalarField::mul(&den, &ScalarField::powi(b, -*e));
                }
            }
            let term = ScalarField::div(&ScalarField::mul(&ScalarField::constant(c.abs()), &num), &den);
            acc = Some(match acc {
                None if *c < 0.0 => ScalarField::neg(&term),
                None => term,
                Some(a) if *c < 0.0 => ScalarField::from_node(Node::Sub(a, term)),
                Some(a) => ScalarField::from_node(Node::Add(a, term)),
            });
        }
        acc.unwrap_or_else(ScalarField::zero)
    }

    fn single_term(&self) -> Option<(&Mono, f64)> {
        match self.terms.as_slice() {
            [(m, c)] => Some((m, *c)),
            _ => None,
        }
    }

    fn powi(&self, n: i32) -> Option<Poly> {
        if n == 0 {
            return Some(Poly::constant(1.0));
        }
        if let Some((m, c)) = self.single_term() {
            let cn = c.powi(n);
            if !cn.is_finite() || cn == 0.0 {
                return None;
            }
            let mono = m
                .iter()
                .map(|(b, e)| e.checked_mul(n).map(|en| (b.clone(), en)))
                .collect::<Option<Mono>>()?;
            return Some(Poly {
                terms: vec![(mono, cn)],
            });
        }
        if (1..=MAX_EXPAND).contains(&n) {
            let mut acc = self.clone();
            for _ in 1..n {
                acc = acc.mul(self)?;
            }
            return Some(acc);
        }
        None
    }
}

struct Folder {
    memo: HashMap<usize, Poly>,
}

impl Folder {
    fn fold(&mut self, f: &ScalarField) -> Poly {
        if let Some(p) = self.memo.get(&f.ptr_key()) {
            return p.clone();
        }
        let p = self.fold_uncached(f);
        self.memo.insert(f.ptr_key(), p.clone());
        p
    }

    fn opaque(f: ScalarField) -> Poly {
        match f.as_const() {
            Some(c) => Poly::constant(c),
            None => Poly::base(f, 1),
        }
    }

    fn fold_uncached(&mut self, f: &ScalarField) -> Poly {
        match f.node() {
            Node::Const(c) => Poly::constant(*c),
            Node::Var(_) => Poly::base(f.clone(), 1),
            Node::Add(a, b) => self.fold(a).add(&self.fold(b), 1.0),
            Node::Sub(a, b) => self.fold(a).add(&self.fold(b), -1.0),
            Node::Mul(a, b) => {
                let (pa, pb) = (self.fold(a), self.fold(b));
                pa.mul(&pb).unwrap_or_else(|| {
                    Self::opaque(ScalarField::mul(&pa.to_field(), &pb.to_field()))
                })
            }
            Node::Div(a, b) => {
                let (pa, pb) = (self.fold(a), self.fold(b));
                let inv = match pb.as_const() {
                    Some(0.0) => None,
                    _ => pb.powi(-1).or_else(|| Some(Poly::base(pb.to_field(), -1))),
                };
                inv.and_then(|i| pa.mul(&i)).unwrap_or_else(|| {
                    Poly::base(
                        ScalarField::from_node(Node::Div(pa.to_field(), pb.to_field())),
                        1,
                    )
                })
            }
            Node::Pow(a, n) => {
                let pa = self.fold(a);
                pa.powi(*n)
                    .unwrap_or_else(|| Poly::base(pa.to_field(), *n))
            }
            Node::Func(func, a) => {
                let arg = self.fold(a).to_field();
                Self::opaque(ScalarField::apply(*func, &arg))
            }
        }
    }
}

pub(super) fn fold(f: &ScalarField) -> ScalarField {
    let mut folder = Folder {
        memo: HashMap::new(),
    };
    folder.fold(f).to_field()
}

#[cfg(test)]
mod tests {
    use super::super::ScalarField;

    fn p(t: &str) -> ScalarField {
        ScalarField::parse(t, 4).unwrap()
    }

    #[test]
    fn like_terms_merge() {
        assert_eq!(p("2*y1 + 3*y1").fold_constants(), p("5*y1"));
        assert_eq!(p("(y1 + y2)^2 - y1^2 - 2*y1*y2").fold_constants(), p("y2^2"));
        assert_eq!(p("y1*y2/y2").fold_constants(), p("y1"));
    }

    #[test]
    fn functions_of_constants_evaluate() {
        assert_eq!(p("exp(y1 - y1)").fold_constants().as_const(), Some(1.0));
        assert_eq!(p("sin(0)*y2 + 2").fold_constants().as_const(), Some(2.0));
    }

    #[test]
    fn function_arguments_are_canonical() {
        assert_eq!(
            p("exp(y1*y2) - exp(y2*y1)").fold_constants().as_const(),
            Some(0.0)
        );
    }

    #[test]
    fn zero_denominator_is_kept() {
        let f = p("y1/(y2 - y2)").fold_constants();
        assert!(f.eval(&[1.0, 2.0, 0.0, 0.0]).is_err());
    }

    #[test]
    fn fold_is_idempotent() {
        let f = p("(y1 - 2*x1)*(y2 + 1)/exp(y1) - 3*tanh(x2)^2").fold_constants();
        assert_eq!(f.fold_constants(), f);
    }
}

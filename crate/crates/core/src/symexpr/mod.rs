//! Closed-form scalar fields on coordinate charts.
//!
//! A [`ScalarField`] is an immutable expression tree over the chart
//! coordinates. Trees are reference counted, so cloning is cheap and
//! subtrees are freely shared between fields. Differentiation is exact
//! and closed: the derivative of a field is again a field.
//!
//! Variables are addressed by index. The printer and parser use the
//! fixed names `y1, y2` for the base coordinates and `x1, x2` for the
//! fibre coordinates of the cotangent chart.

mod fold;
mod parse;
mod print;

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

pub use parse::ParseError;

/// Coordinate names, in variable-index order.
pub const VAR_NAMES: [&str; 4] = ["y1", "y2", "x1", "x2"];

/// Denominators smaller than this in magnitude count as a singular-locus hit.
pub const SINGULAR_EPS: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Func {
    Exp,
    Log,
    Sin,
    Cos,
    Tanh,
}

impl Func {
    pub const ALL: [Func; 5] = [Func::Exp, Func::Log, Func::Sin, Func::Cos, Func::Tanh];

    pub fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tanh => "tanh",
        }
    }

    fn from_name(name: &str) -> Option<Func> {
        Func::ALL.into_iter().find(|f| f.name() == name)
    }

    /// Applies the function, rejecting arguments outside its domain.
    fn apply(self, x: f64) -> Result<f64, EvalError> {
        match self {
            Func::Exp => Ok(x.exp()),
            Func::Log if x > 0.0 => Ok(x.ln()),
            Func::Log => Err(EvalError::LogDomain { arg: x }),
            Func::Sin => Ok(x.sin()),
            Func::Cos => Ok(x.cos()),
            Func::Tanh => Ok(x.tanh()),
        }
    }
}

#[derive(Debug, Clone)]
pub enum Node {
    Const(f64),
    Var(usize),
    Add(ScalarField, ScalarField),
    Sub(ScalarField, ScalarField),
    Mul(ScalarField, ScalarField),
    Div(ScalarField, ScalarField),
    Pow(ScalarField, i32),
    Func(Func, ScalarField),
}

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum EvalError {
    #[error("division by {denominator:e} on the singular locus")]
    SingularDivision { denominator: f64 },
    #[error("log of non-positive argument {arg}")]
    LogDomain { arg: f64 },
    #[error("non-finite intermediate value")]
    NonFinite,
    #[error("variable index {index} outside a point of dimension {dim}")]
    VarOutOfRange { index: usize, dim: usize },
}

/// An exact-differentiable closed-form function of the chart coordinates.
#[derive(Clone)]
pub struct ScalarField(Arc<Node>);

impl fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ScalarField({self})")
    }
}

impl ScalarField {
    /// Wraps a node verbatim, without any folding.
    pub fn from_node(node: Node) -> Self {
        ScalarField(Arc::new(node))
    }

    pub fn node(&self) -> &Node {
        &self.0
    }

    pub fn constant(c: f64) -> Self {
        Self::from_node(Node::Const(c))
    }

    pub fn zero() -> Self {
        Self::constant(0.0)
    }

    pub fn one() -> Self {
        Self::constant(1.0)
    }

    pub fn var(index: usize) -> Self {
        Self::from_node(Node::Var(index))
    }

    /// Parses `text` allowing the first `nvars` names of [`VAR_NAMES`].
    pub fn parse(text: &str, nvars: usize) -> Result<Self, ParseError> {
        parse::parse(text, nvars)
    }

    pub fn as_const(&self) -> Option<f64> {
        match *self.0 {
            Node::Const(c) => Some(c),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.as_const() == Some(0.0)
    }

    pub fn is_one(&self) -> bool {
        self.as_const() == Some(1.0)
    }

    fn ptr_key(&self) -> usize {
        Arc::as_ptr(&self.0) as usize
    }

    // Light-folding constructors. These never change the value at regular
    // points and keep trees produced by differentiation small.

    pub fn add(a: &Self, b: &Self) -> Self {
        match (a.as_const(), b.as_const()) {
            (Some(x), Some(y)) => Self::constant(x + y),
            (Some(x), _) if x == 0.0 => b.clone(),
            (_, Some(y)) if y == 0.0 => a.clone(),
            _ => Self::from_node(Node::Add(a.clone(), b.clone())),
        }
    }

    pub fn sub(a: &Self, b: &Self) -> Self {
        match (a.as_const(), b.as_const()) {
            (Some(x), Some(y)) => Self::constant(x - y),
            (Some(x), _) if x == 0.0 => Self::neg(b),
            (_, Some(y)) if y == 0.0 => a.clone(),
            _ => Self::from_node(Node::Sub(a.clone(), b.clone())),
        }
    }

    pub fn mul(a: &Self, b: &Self) -> Self {
        match (a.as_const(), b.as_const()) {
            (Some(x), Some(y)) => Self::constant(x * y),
            (Some(x), _) | (_, Some(x)) if x == 0.0 => Self::zero(),
            (Some(x), _) if x == 1.0 => b.clone(),
            (_, Some(y)) if y == 1.0 => a.clone(),
            _ => Self::from_node(Node::Mul(a.clone(), b.clone())),
        }
    }

    pub fn div(a: &Self, b: &Self) -> Self {
        match (a.as_const(), b.as_const()) {
            (Some(x), Some(y)) if y != 0.0 => Self::constant(x / y),
            (Some(x), _) if x == 0.0 => Self::zero(),
            (_, Some(y)) if y == 1.0 => a.clone(),
            _ => Self::from_node(Node::Div(a.clone(), b.clone())),
        }
    }

    pub fn powi(a: &Self, n: i32) -> Self {
        match (n, a.as_const()) {
            (0, _) => Self::one(),
            (1, _) => a.clone(),
            (_, Some(x)) if x.powi(n).is_finite() && (n > 0 || x != 0.0) => {
                Self::constant(x.powi(n))
            }
            _ => Self::from_node(Node::Pow(a.clone(), n)),
        }
    }

    pub fn neg(a: &Self) -> Self {
        if let Some(x) = a.as_const() {
            return Self::constant(-x);
        }
        if let Node::Mul(l, r) = a.node() {
            if let Some(c) = l.as_const() {
                return Self::mul(&Self::constant(-c), r);
            }
        }
        Self::from_node(Node::Mul(Self::constant(-1.0), a.clone()))
    }

    pub fn apply(f: Func, a: &Self) -> Self {
        if let Some(x) = a.as_const() {
            if let Ok(v) = f.apply(x) {
                if v.is_finite() {
                    return Self::constant(v);
                }
            }
        }
        Self::from_node(Node::Func(f, a.clone()))
    }

    pub fn exp(&self) -> Self {
        Self::apply(Func::Exp, self)
    }

    pub fn log(&self) -> Self {
        Self::apply(Func::Log, self)
    }

    pub fn sin(&self) -> Self {
        Self::apply(Func::Sin, self)
    }

    pub fn cos(&self) -> Self {
        Self::apply(Func::Cos, self)
    }

    pub fn tanh(&self) -> Self {
        Self::apply(Func::Tanh, self)
    }

    /// Sum of an iterator of fields, folding zeros.
    pub fn sum<'a>(items: impl IntoIterator<Item = &'a ScalarField>) -> Self {
        items
            .into_iter()
            .fold(Self::zero(), |acc, x| Self::add(&acc, x))
    }

    /// Largest variable index referenced, if any.
    pub fn max_var(&self) -> Option<usize> {
        match self.node() {
            Node::Const(_) => None,
            Node::Var(i) => Some(*i),
            Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) => {
                a.max_var().max(b.max_var())
            }
            Node::Pow(a, _) | Node::Func(_, a) => a.max_var(),
        }
    }

    /// Number of nodes, counting shared subtrees once per occurrence.
    pub fn size(&self) -> usize {
        match self.node() {
            Node::Const(_) | Node::Var(_) => 1,
            Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) => {
                1 + a.size() + b.size()
            }
            Node::Pow(a, _) | Node::Func(_, a) => 1 + a.size(),
        }
    }

    /// Evaluates the field at `p`. Points on the singular locus are errors.
    pub fn eval(&self, p: &[f64]) -> Result<f64, EvalError> {
        let v = match self.node() {
            Node::Const(c) => *c,
            Node::Var(i) => *p.get(*i).ok_or(EvalError::VarOutOfRange {
                index: *i,
                dim: p.len(),
            })?,
            Node::Add(a, b) => a.eval(p)? + b.eval(p)?,
            Node::Sub(a, b) => a.eval(p)? - b.eval(p)?,
            Node::Mul(a, b) => a.eval(p)? * b.eval(p)?,
            Node::Div(a, b) => {
                let num = a.eval(p)?;
                let den = b.eval(p)?;
                if den.abs() < SINGULAR_EPS {
                    return Err(EvalError::SingularDivision { denominator: den });
                }
                num / den
            }
            Node::Pow(a, n) => {
                let base = a.eval(p)?;
                if *n < 0 && base.abs() < SINGULAR_EPS {
                    return Err(EvalError::SingularDivision { denominator: base });
                }
                base.powi(*n)
            }
            Node::Func(f, a) => f.apply(a.eval(p)?)?,
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(EvalError::NonFinite)
        }
    }

    /// Exact partial derivative with respect to variable `var`.
    pub fn diff(&self, var: usize) -> Self {
        let mut memo = HashMap::new();
        self.diff_memo(var, &mut memo)
    }

    fn diff_memo(&self, var: usize, memo: &mut HashMap<usize, ScalarField>) -> Self {
        if let Some(d) = memo.get(&self.ptr_key()) {
            return d.clone();
        }
        let d = match self.node() {
            Node::Const(_) => Self::zero(),
            Node::Var(i) => Self::constant(if *i == var { 1.0 } else { 0.0 }),
            Node::Add(a, b) => Self::add(&a.diff_memo(var, memo), &b.diff_memo(var, memo)),
            Node::Sub(a, b) => Self::sub(&a.diff_memo(var, memo), &b.diff_memo(var, memo)),
            Node::Mul(a, b) => {
                let da = a.diff_memo(var, memo);
                let db = b.diff_memo(var, memo);
                Self::add(&Self::mul(&da, b), &Self::mul(a, &db))
            }
            Node::Div(a, b) => {
                let da = a.diff_memo(var, memo);
                let db = b.diff_memo(var, memo);
                if db.is_zero() {
                    Self::div(&da, b)
                } else {
                    let num = Self::sub(&Self::mul(&da, b), &Self::mul(a, &db));
                    Self::div(&num, &Self::powi(b, 2))
                }
            }
            Node::Pow(a, n) => {
                let da = a.diff_memo(var, memo);
                let outer = Self::mul(&Self::constant(f64::from(*n)), &Self::powi(a, n - 1));
                Self::mul(&outer, &da)
            }
            Node::Func(f, a) => {
                let da = a.diff_memo(var, memo);
                if da.is_zero() {
                    Self::zero()
                } else {
                    let outer = match f {
                        Func::Exp => self.clone(),
                        Func::Log => Self::div(&Self::one(), a),
                        Func::Sin => a.cos(),
                        Func::Cos => Self::neg(&a.sin()),
                        Func::Tanh => Self::sub(&Self::one(), &Self::powi(self, 2)),
                    };
                    Self::mul(&outer, &da)
                }
            }
        };
        memo.insert(self.ptr_key(), d.clone());
        d
    }

    /// Semantically equal field with constant subtrees collapsed and like
    /// terms and factors merged.
    pub fn fold_constants(&self) -> Self {
        fold::fold(self)
    }

    /// Replaces variable `var` by `with` everywhere.
    pub fn substitute(&self, var: usize, with: &ScalarField) -> Self {
        match self.node() {
            Node::Const(_) => self.clone(),
            Node::Var(i) if *i == var => with.clone(),
            Node::Var(_) => self.clone(),
            Node::Add(a, b) => Self::add(&a.substitute(var, with), &b.substitute(var, with)),
            Node::Sub(a, b) => Self::sub(&a.substitute(var, with), &b.substitute(var, with)),
            Node::Mul(a, b) => Self::mul(&a.substitute(var, with), &b.substitute(var, with)),
            Node::Div(a, b) => Self::div(&a.substitute(var, with), &b.substitute(var, with)),
            Node::Pow(a, n) => Self::powi(&a.substitute(var, with), *n),
            Node::Func(f, a) => Self::apply(*f, &a.substitute(var, with)),
        }
    }

    /// Total structural order, used to canonicalise sums and products.
    pub fn structural_cmp(&self, other: &Self) -> Ordering {
        if Arc::ptr_eq(&self.0, &other.0) {
            return Ordering::Equal;
        }
        fn tag(n: &Node) -> u8 {
            match n {
                Node::Const(_) => 0,
                Node::Var(_) => 1,
                Node::Add(..) => 2,
                Node::Sub(..) => 3,
                Node::Mul(..) => 4,
                Node::Div(..) => 5,
                Node::Pow(..) => 6,
                Node::Func(..) => 7,
            }
        }
        match (self.node(), other.node()) {
            (Node::Const(a), Node::Const(b)) => a.total_cmp(b),
            (Node::Var(a), Node::Var(b)) => a.cmp(b),
            (Node::Add(a, b), Node::Add(c, d))
            | (Node::Sub(a, b), Node::Sub(c, d))
            | (Node::Mul(a, b), Node::Mul(c, d))
            | (Node::Div(a, b), Node::Div(c, d)) => {
                a.structural_cmp(c).then_with(|| b.structural_cmp(d))
            }
            (Node::Pow(a, n), Node::Pow(b, m)) => a.structural_cmp(b).then(n.cmp(m)),
            (Node::Func(f, a), Node::Func(g, b)) => f.cmp(g).then_with(|| a.structural_cmp(b)),
            (x, y) => tag(x).cmp(&tag(y)),
        }
    }
}

impl PartialEq for ScalarField {
    fn eq(&self, other: &Self) -> bool {
        self.structural_cmp(other) == Ordering::Equal
    }
}

impl Eq for ScalarField {}

impl fmt::Display for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        print::write_expr(self, f)
    }
}

impl From<f64> for ScalarField {
    fn from(c: f64) -> Self {
        ScalarField::constant(c)
    }
}

macro_rules! binop {
    ($tr:ident, $method:ident, $ctor:ident) => {
        impl std::ops::$tr<&ScalarField> for &ScalarField {
            type Output = ScalarField;
            fn $method(self, rhs: &ScalarField) -> ScalarField {
                ScalarField::$ctor(self, rhs)
            }
        }
        impl std::ops::$tr<ScalarField> for ScalarField {
            type Output = ScalarField;
            fn $method(self, rhs: ScalarField) -> ScalarField {
                ScalarField::$ctor(&self, &rhs)
            }
        }
        impl std::ops::$tr<&ScalarField> for ScalarField {
            type Output = ScalarField;
            fn $method(self, rhs: &ScalarField) -> ScalarField {
                ScalarField::$ctor(&self, rhs)
            }
        }
        impl std::ops::$tr<ScalarField> for &ScalarField {
            type Output = ScalarField;
            fn $method(self, rhs: ScalarField) -> ScalarField {
                ScalarField::$ctor(self, &rhs)
            }
        }
    };
}

binop!(Add, add, add);
binop!(Sub, sub, sub);
binop!(Mul, mul, mul);
binop!(Div, div, div);

impl std::ops::Neg for &ScalarField {
    type Output = ScalarField;
    fn neg(self) -> ScalarField {
        ScalarField::neg(self)
    }
}

impl std::ops::Neg for ScalarField {
    type Output = ScalarField;
    fn neg(self) -> ScalarField {
        ScalarField::neg(&self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p2(text: &str) -> ScalarField {
        ScalarField::parse(text, 2).unwrap()
    }

    #[test]
    fn eval_basic() {
        assert_eq!(p2("y1*y2").eval(&[2.0, 3.0]).unwrap(), 6.0);
        assert_eq!(p2("exp(0)").eval(&[0.3, -7.0]).unwrap(), 1.0);
    }

    #[test]
    fn eval_singular_locus_is_error() {
        let err = p2("1/y1").eval(&[0.0, 1.0]).unwrap_err();
        assert!(matches!(err, EvalError::SingularDivision { .. }));
        let err = p2("log(y1 - 1)").eval(&[0.5, 0.0]).unwrap_err();
        assert!(matches!(err, EvalError::LogDomain { .. }));
        let err = p2("y2^-2").eval(&[1.0, 0.0]).unwrap_err();
        assert!(matches!(err, EvalError::SingularDivision { .. }));
    }

    #[test]
    fn diff_power_rule() {
        let d = p2("y1^2*y2").diff(0);
        assert_eq!(d.to_string(), "2*y1*y2");
        let mixed = p2("y1*y2").diff(0).diff(1);
        assert_eq!(mixed.eval(&[0.3, 9.0]).unwrap(), 1.0);
        assert_eq!(p2("tanh(y2)").diff(1).eval(&[0.0, 0.0]).unwrap(), 1.0);
    }

    #[test]
    fn diff_of_unused_variable_is_zero() {
        assert!(p2("sin(y1)*exp(y1)").diff(1).is_zero());
    }

    #[test]
    fn fold_examples() {
        assert_eq!(p2("0*y1 + 3").fold_constants().as_const(), Some(3.0));
        assert_eq!(p2("y1*1").fold_constants(), p2("y1"));
        assert_eq!(p2("y1*y2 - y2*y1").fold_constants().as_const(), Some(0.0));
    }

    #[test]
    fn substitute_fibre_variables() {
        let f = ScalarField::parse("x1*y2 + y1", 4).unwrap();
        let g = f.substitute(2, &ScalarField::zero());
        assert_eq!(g.eval(&[3.0, 5.0]).unwrap(), 3.0);
    }

    #[test]
    fn eval_is_deterministic() {
        let f = p2("exp(sin(y1)*y2)/(1 + y1^2) - tanh(y2*y1)");
        let a = f.eval(&[0.37, -1.2]).unwrap();
        let b = f.clone().eval(&[0.37, -1.2]).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
    }
}

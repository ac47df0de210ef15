use std::fmt;

use super::{Node, ScalarField, VAR_NAMES};

const PREC_SUM: u8 = 1;
const PREC_PRODUCT: u8 = 2;
const PREC_POWER: u8 = 3;
const PREC_ATOM: u8 = 4;

fn precedence(f: &ScalarField) -> u8 {
    match f.node() {
        Node::Add(..) | Node::Sub(..) => PREC_SUM,
        Node::Mul(..) | Node::Div(..) => PREC_PRODUCT,
        Node::Pow(..) => PREC_POWER,
        _ => PREC_ATOM,
    }
}

fn write_const(c: f64, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    if c.is_sign_negative() {
        f.write_str("(-")?;
        write_magnitude(-c, f)?;
        return f.write_str(")");
    }
    write_magnitude(c, f)
}

fn write_magnitude(c: f64, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    if c.fract() == 0.0 && c < 1e15 {
        write!(f, "{}", c as i64)
    } else {
        write!(f, "{c:?}")
    }
}

fn write_wrapped(e: &ScalarField, paren: bool, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    if paren {
        f.write_str("(")?;
        write_expr(e, f)?;
        f.write_str(")")
    } else {
        write_expr(e, f)
    }
}

/// Writes `e` so that parsing the output reproduces the same tree.
pub(super) fn write_expr(e: &ScalarField, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    let (l, op, r, prec) = match e.node() {
        Node::Const(c) => return write_const(*c, f),
        Node::Var(i) => {
            return match VAR_NAMES.get(*i) {
                Some(name) => f.write_str(name),
                None => write!(f, "v{i}"),
            }
        }
        Node::Func(func, arg) => {
            write!(f, "{}(", func.name())?;
            write_expr(arg, f)?;
            return f.write_str(")");
        }
        Node::Pow(base, n) => {
            write_wrapped(base, precedence(base) < PREC_ATOM, f)?;
            return write!(f, "^{n}");
        }
        Node::Add(l, r) => (l, " + ", r, PREC_SUM),
        Node::Sub(l, r) => (l, " - ", r, PREC_SUM),
        Node::Mul(l, r) => (l, "*", r, PREC_PRODUCT),
        Node::Div(l, r) => (l, "/", r, PREC_PRODUCT),
    };
    write_wrapped(l, precedence(l) < prec, f)?;
    f.write_str(op)?;
    write_wrapped(r, precedence(r) <= prec, f)
}

#[cfg(test)]
mod tests {
    use super::super::ScalarField;

    fn round_trip(text: &str) {
        let a = ScalarField::parse(text, 4).unwrap();
        let printed = a.to_string();
        let b = ScalarField::parse(&printed, 4).unwrap();
        assert_eq!(a, b, "{text} -> {printed}");
    }

    #[test]
    fn round_trips() {
        for t in [
            "y1*y2",
            "exp(-2*y1)",
            "y1 - (y2 - x1)",
            "y1/(y2*x2)",
            "(y1 + y2)^3",
            "(y1^2)^-3",
            "-y1^2",
            "(-2)^2",
            "-0",
            "0.1*y1 + 1e-20 - 3e30",
            "tanh(sin(cos(log(y1))))/-x2",
        ] {
            round_trip(t);
        }
    }

    #[test]
    fn minimal_parentheses() {
        let f = ScalarField::parse("(y1*y2) + (y1/y2)", 2).unwrap();
        assert_eq!(f.to_string(), "y1*y2 + y1/y2");
    }
}

use std::fmt;

use super::{Expr, Node, Num};

const ADD: u8 = 10;
const MUL: u8 = 20;
const NEG: u8 = 25;
const POW: u8 = 30;
const ATOM: u8 = 40;

fn const_prec(n: Num) -> u8 {
    if n.is_negative() {
        NEG
    } else if matches!(n, Num::Rational(_)) && !n.is_integer() {
        MUL
    } else {
        ATOM
    }
}

fn prec(e: &Expr) -> u8 {
    match e.kind() {
        Node::Const(n) => const_prec(*n),
        Node::Sym(_) | Node::Tau | Node::Sin(_) | Node::Cos(_) | Node::Exp(_) => ATOM,
        Node::Add(..) | Node::Sub(..) => ADD,
        Node::Mul(..) | Node::Div(..) => MUL,
        Node::Neg(_) => NEG,
        Node::Pow(..) => POW,
    }
}

/// Parenthesizes `e` unless its precedence is at least `min`; a leading minus
/// is wrapped too when `no_lead_minus` is set.
fn child(f: &mut fmt::Formatter<'_>, e: &Expr, min: u8, no_lead_minus: bool) -> fmt::Result {
    let text = e.to_string();
    if prec(e) < min || (no_lead_minus && text.starts_with('-')) {
        write!(f, "({text})")
    } else {
        f.write_str(&text)
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind() {
            Node::Const(n) => write!(f, "{n}"),
            Node::Sym(s) => write!(f, "{s}"),
            Node::Tau => f.write_str("tau"),
            Node::Add(a, b) => {
                child(f, a, ADD, false)?;
                f.write_str(" + ")?;
                child(f, b, ADD + 1, true)
            }
            Node::Sub(a, b) => {
                child(f, a, ADD, false)?;
                f.write_str(" - ")?;
                child(f, b, ADD + 1, true)
            }
            Node::Mul(a, b) => {
                child(f, a, MUL, false)?;
                f.write_str("*")?;
                child(f, b, MUL + 1, true)
            }
            Node::Div(a, b) => {
                child(f, a, MUL, false)?;
                f.write_str("/")?;
                child(f, b, MUL + 1, true)
            }
            Node::Neg(a) => {
                f.write_str("-")?;
                child(f, a, NEG, true)
            }
            Node::Pow(a, n) => {
                child(f, a, ATOM, true)?;
                if *n < 0 {
                    write!(f, "^({n})")
                } else {
                    write!(f, "^{n}")
                }
            }
            Node::Sin(a) => write!(f, "sin({a})"),
            Node::Cos(a) => write!(f, "cos({a})"),
            Node::Exp(a) => write!(f, "exp({a})"),
        }
    }
}

#[cfg(test)]
mod tests {
    use crate::expr::{parse, Expr};

    fn show(s: &str) -> String {
        parse(s).unwrap().to_string()
    }

    #[test]
    fn canonical_spacing() {
        assert_eq!(show("p * pm+q*qm"), "p*pm + q*qm");
        assert_eq!(show("sin(t)*qd - (q+qm)^2/2"), "sin(t)*qd - (q + qm)^2/2");
    }

    #[test]
    fn right_operands_keep_grouping() {
        assert_eq!(show("q - (qm - qp)"), "q - (qm - qp)");
        assert_eq!(show("q/(p*pm)"), "q/(p*pm)");
        assert_eq!(show("(q+p)*(qm-pm)"), "(q + p)*(qm - pm)");
    }

    #[test]
    fn signs_and_rationals() {
        assert_eq!(show("q - 2*p"), "q - 2*p");
        assert_eq!(show("q + -2*p"), "q - 2*p");
        assert_eq!(show("-q^2"), "-q^2");
        assert_eq!(show("(-q)^2"), "(-q)^2");
        assert_eq!(Expr::ratio(1, 2).to_string(), "1/2");
        assert_eq!((Expr::q(0) * Expr::ratio(1, 2)).to_string(), "1/2*q");
        assert_eq!(Expr::pow(Expr::q(0), -2).to_string(), "q^(-2)");
    }
}

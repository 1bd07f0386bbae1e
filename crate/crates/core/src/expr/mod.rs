//! Expression engine over the delay jet space.
//!
//! Symbols are `t`, `q`, `p` at the three points `t - tau`, `t`, `t + tau`,
//! with derivatives of `q` and `p` up to second order. Expressions are
//! immutable trees with cheap clones; the smart constructors fold constants
//! and drop trivial terms but never attempt general simplification.

mod calculus;
mod jet;
mod num;
mod parse;
mod print;
mod sample;

use std::fmt;
use std::ops;
use std::sync::Arc;

use thiserror::Error;

pub use self::jet::JetPoint;
pub use self::num::Num;
pub use self::parse::parse;
pub use self::sample::{is_zero, random_jet, SampleError, Sampler, ZeroCheck};

/// Errors raised by parsing, calculus and evaluation.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExprError {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdentifier { name: String, offset: usize },
    #[error("total derivative of `{0}` needs a third derivative")]
    OrderOverflow(Symbol),
    #[error("shifting `{symbol}` by {direction:+} leaves the three-point stencil")]
    ShiftOverflow { symbol: Symbol, direction: i8 },
    #[error("no value for `{0}` at this jet point")]
    MissingSymbol(Symbol),
    #[error("division by zero")]
    DivisionByZero,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Base {
    T,
    Q,
    P,
}

/// A coordinate of the delay jet space.
///
/// `shift` counts delays (`-1` is `t - tau`), `order` counts time derivatives.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Symbol {
    base: Base,
    shift: i8,
    order: u8,
}

impl Symbol {
    /// Panics outside the stencil; use [`Symbol::try_new`] for untrusted input.
    pub const fn new(base: Base, shift: i8, order: u8) -> Symbol {
        match Symbol::try_new(base, shift, order) {
            Some(s) => s,
            None => panic!("symbol outside the delay jet space"),
        }
    }

    pub const fn try_new(base: Base, shift: i8, order: u8) -> Option<Symbol> {
        let ok_shift = shift >= -1 && shift <= 1;
        let ok_order = match base {
            Base::T => order == 0,
            _ => order <= 2,
        };
        if ok_shift && ok_order {
            Some(Symbol { base, shift, order })
        } else {
            None
        }
    }

    pub const fn t(shift: i8) -> Symbol {
        Symbol::new(Base::T, shift, 0)
    }

    pub const fn q(shift: i8) -> Symbol {
        Symbol::new(Base::Q, shift, 0)
    }

    pub const fn p(shift: i8) -> Symbol {
        Symbol::new(Base::P, shift, 0)
    }

    pub const fn qd(shift: i8) -> Symbol {
        Symbol::new(Base::Q, shift, 1)
    }

    pub const fn pd(shift: i8) -> Symbol {
        Symbol::new(Base::P, shift, 1)
    }

    pub fn base(self) -> Base {
        self.base
    }

    pub fn shift(self) -> i8 {
        self.shift
    }

    pub fn order(self) -> u8 {
        self.order
    }

    pub fn shifted(self, direction: i8) -> Option<Symbol> {
        Symbol::try_new(self.base, self.shift + direction, self.order)
    }

    pub fn derivative(self) -> Option<Symbol> {
        Symbol::try_new(self.base, self.shift, self.order + 1)
    }

    /// Every symbol of the vocabulary, time symbols first.
    pub fn all() -> Vec<Symbol> {
        let mut out = Vec::with_capacity(21);
        for s in -1..=1 {
            out.push(Symbol::t(s));
        }
        for base in [Base::Q, Base::P] {
            for order in 0..=2 {
                for s in -1..=1 {
                    out.push(Symbol::new(base, s, order));
                }
            }
        }
        out
    }

    pub fn name(self) -> &'static str {
        const T: [&str; 3] = ["tm", "t", "tp"];
        const Q: [[&str; 3]; 3] = [
            ["qm", "q", "qp"],
            ["qdm", "qd", "qdp"],
            ["qddm", "qdd", "qddp"],
        ];
        const P: [[&str; 3]; 3] = [
            ["pm", "p", "pp"],
            ["pdm", "pd", "pdp"],
            ["pddm", "pdd", "pddp"],
        ];
        let s = (self.shift + 1) as usize;
        match self.base {
            Base::T => T[s],
            Base::Q => Q[self.order as usize][s],
            Base::P => P[self.order as usize][s],
        }
    }

    pub fn from_name(name: &str) -> Option<Symbol> {
        Symbol::all().into_iter().find(|s| s.name() == name)
    }

    /// Slot in a jet point's value table; time symbols have none.
    pub(crate) fn slot(self) -> Option<usize> {
        let b = match self.base {
            Base::T => return None,
            Base::Q => 0,
            Base::P => 1,
        };
        Some(b * 9 + self.order as usize * 3 + (self.shift + 1) as usize)
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, PartialEq)]
pub enum Node {
    Const(Num),
    Sym(Symbol),
    Tau,
    Add(Expr, Expr),
    Sub(Expr, Expr),
    Mul(Expr, Expr),
    Div(Expr, Expr),
    Pow(Expr, i32),
    Neg(Expr),
    Sin(Expr),
    Cos(Expr),
    Exp(Expr),
}

/// Shared, immutable expression tree.
#[derive(Clone, Debug, PartialEq)]
pub struct Expr(Arc<Node>);

#[allow(clippy::should_implement_trait)]
impl Expr {
    fn node(n: Node) -> Expr {
        Expr(Arc::new(n))
    }

    pub fn kind(&self) -> &Node {
        &self.0
    }

    pub fn num(n: Num) -> Expr {
        Expr::node(Node::Const(n))
    }

    pub fn int(n: i64) -> Expr {
        Expr::num(Num::int(n))
    }

    pub fn ratio(n: i64, d: i64) -> Expr {
        Expr::num(Num::ratio(n, d))
    }

    /// Whole floats become exact integers so structural comparisons stay clean.
    pub fn real(x: f64) -> Expr {
        Expr::num(Num::from_f64(x))
    }

    pub fn zero() -> Expr {
        Expr::num(Num::ZERO)
    }

    pub fn one() -> Expr {
        Expr::num(Num::ONE)
    }

    pub fn sym(s: Symbol) -> Expr {
        Expr::node(Node::Sym(s))
    }

    pub fn tau() -> Expr {
        Expr::node(Node::Tau)
    }

    pub fn t(shift: i8) -> Expr {
        Expr::sym(Symbol::t(shift))
    }

    pub fn q(shift: i8) -> Expr {
        Expr::sym(Symbol::q(shift))
    }

    pub fn p(shift: i8) -> Expr {
        Expr::sym(Symbol::p(shift))
    }

    pub fn qd(shift: i8) -> Expr {
        Expr::sym(Symbol::qd(shift))
    }

    pub fn pd(shift: i8) -> Expr {
        Expr::sym(Symbol::pd(shift))
    }

    pub fn as_const(&self) -> Option<Num> {
        match self.kind() {
            Node::Const(n) => Some(*n),
            _ => None,
        }
    }

    pub fn is_zero_const(&self) -> bool {
        self.as_const().is_some_and(Num::is_zero)
    }

    pub fn is_one_const(&self) -> bool {
        self.as_const().is_some_and(Num::is_one)
    }

    pub fn add(a: Expr, b: Expr) -> Expr {
        if a.is_zero_const() {
            return b;
        }
        if b.is_zero_const() {
            return a;
        }
        if let (Some(x), Some(y)) = (a.as_const(), b.as_const()) {
            return Expr::num(x.add(y));
        }
        if let Some(c) = b.as_const() {
            if c.is_negative() {
                return Expr::sub(a, Expr::num(c.neg()));
            }
        }
        match b.kind() {
            Node::Neg(inner) => return Expr::sub(a, inner.clone()),
            Node::Mul(c, rest) => {
                if let Some(c) = c.as_const().filter(|c| c.is_negative()) {
                    return Expr::sub(a, Expr::mul(Expr::num(c.neg()), rest.clone()));
                }
            }
            _ => {}
        }
        Expr::node(Node::Add(a, b))
    }

    pub fn sub(a: Expr, b: Expr) -> Expr {
        if b.is_zero_const() {
            return a;
        }
        if a.is_zero_const() {
            return Expr::neg(b);
        }
        if let (Some(x), Some(y)) = (a.as_const(), b.as_const()) {
            return Expr::num(x.sub(y));
        }
        if a == b {
            return Expr::zero();
        }
        if let Some(c) = b.as_const() {
            if c.is_negative() {
                return Expr::add(a, Expr::num(c.neg()));
            }
        }
        match b.kind() {
            Node::Neg(inner) => return Expr::add(a, inner.clone()),
            Node::Mul(c, rest) => {
                if let Some(c) = c.as_const().filter(|c| c.is_negative()) {
                    return Expr::add(a, Expr::mul(Expr::num(c.neg()), rest.clone()));
                }
            }
            _ => {}
        }
        Expr::node(Node::Sub(a, b))
    }

    /// Constants are kept on the left so that `c1*(c2*x)` folds.
    pub fn mul(a: Expr, b: Expr) -> Expr {
        let (a, b) = match (a.as_const(), b.as_const()) {
            (None, Some(_)) => (b, a),
            _ => (a, b),
        };
        if let Some(x) = a.as_const() {
            if x.is_zero() {
                return Expr::zero();
            }
            if x.is_one() {
                return b;
            }
            if let Some(y) = b.as_const() {
                return Expr::num(x.mul(y));
            }
            if x == Num::int(-1) {
                return Expr::neg(b);
            }
            match b.kind() {
                Node::Mul(c, rest) => {
                    if let Some(y) = c.as_const() {
                        return Expr::mul(Expr::num(x.mul(y)), rest.clone());
                    }
                }
                Node::Neg(inner) => return Expr::mul(Expr::num(x.neg()), inner.clone()),
                _ => {}
            }
        }
        if b.is_zero_const() {
            return Expr::zero();
        }
        Expr::node(Node::Mul(a, b))
    }

    /// `None` when the denominator is the literal zero.
    pub fn checked_div(a: Expr, b: Expr) -> Option<Expr> {
        if b.is_zero_const() {
            return None;
        }
        if b.is_one_const() || a.is_zero_const() {
            return Some(a);
        }
        if let (Some(x), Some(y)) = (a.as_const(), b.as_const()) {
            return Some(Expr::num(x.div(y)?));
        }
        Some(Expr::node(Node::Div(a, b)))
    }

    pub fn pow(base: Expr, n: i32) -> Expr {
        if n == 0 {
            return Expr::one();
        }
        if n == 1 {
            return base;
        }
        if let Some(c) = base.as_const() {
            if let Some(v) = c.powi(n) {
                return Expr::num(v);
            }
        }
        Expr::node(Node::Pow(base, n))
    }

    pub fn neg(a: Expr) -> Expr {
        match a.kind() {
            Node::Const(c) => Expr::num(c.neg()),
            Node::Neg(inner) => inner.clone(),
            Node::Mul(c, rest) if c.as_const().is_some() => {
                Expr::mul(Expr::num(c.as_const().unwrap().neg()), rest.clone())
            }
            _ => Expr::node(Node::Neg(a)),
        }
    }

    pub fn sin(a: Expr) -> Expr {
        if a.is_zero_const() {
            return Expr::zero();
        }
        Expr::node(Node::Sin(a))
    }

    pub fn cos(a: Expr) -> Expr {
        if a.is_zero_const() {
            return Expr::one();
        }
        Expr::node(Node::Cos(a))
    }

    pub fn exp(a: Expr) -> Expr {
        if a.is_zero_const() {
            return Expr::one();
        }
        Expr::node(Node::Exp(a))
    }

    pub fn sum<I: IntoIterator<Item = Expr>>(terms: I) -> Expr {
        terms.into_iter().fold(Expr::zero(), Expr::add)
    }

    /// Number of nodes counting shared subtrees once per occurrence.
    pub fn size(&self) -> usize {
        1 + match self.kind() {
            Node::Const(_) | Node::Sym(_) | Node::Tau => 0,
            Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) => {
                a.size() + b.size()
            }
            Node::Pow(a, _) | Node::Neg(a) | Node::Sin(a) | Node::Cos(a) | Node::Exp(a) => a.size(),
        }
    }
}

impl From<Symbol> for Expr {
    fn from(s: Symbol) -> Expr {
        Expr::sym(s)
    }
}

impl From<f64> for Expr {
    fn from(x: f64) -> Expr {
        Expr::real(x)
    }
}

impl From<i64> for Expr {
    fn from(n: i64) -> Expr {
        Expr::int(n)
    }
}

macro_rules! binop {
    ($trait:ident, $method:ident, $ctor:expr) => {
        impl ops::$trait<Expr> for Expr {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                $ctor(self, rhs)
            }
        }
        impl ops::$trait<&Expr> for Expr {
            type Output = Expr;
            fn $method(self, rhs: &Expr) -> Expr {
                $ctor(self, rhs.clone())
            }
        }
        impl ops::$trait<Expr> for &Expr {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                $ctor(self.clone(), rhs)
            }
        }
        impl ops::$trait<&Expr> for &Expr {
            type Output = Expr;
            fn $method(self, rhs: &Expr) -> Expr {
                $ctor(self.clone(), rhs.clone())
            }
        }
        impl ops::$trait<f64> for Expr {
            type Output = Expr;
            fn $method(self, rhs: f64) -> Expr {
                $ctor(self, Expr::real(rhs))
            }
        }
        impl ops::$trait<f64> for &Expr {
            type Output = Expr;
            fn $method(self, rhs: f64) -> Expr {
                $ctor(self.clone(), Expr::real(rhs))
            }
        }
        impl ops::$trait<Expr> for f64 {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                $ctor(Expr::real(self), rhs)
            }
        }
        impl ops::$trait<&Expr> for f64 {
            type Output = Expr;
            fn $method(self, rhs: &Expr) -> Expr {
                $ctor(Expr::real(self), rhs.clone())
            }
        }
    };
}

fn div_or_panic(a: Expr, b: Expr) -> Expr {
    Expr::checked_div(a, b).expect("division by the literal constant zero")
}

binop!(Add, add, Expr::add);
binop!(Sub, sub, Expr::sub);
binop!(Mul, mul, Expr::mul);
binop!(Div, div, div_or_panic);

impl ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::neg(self)
    }
}

impl ops::Neg for &Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::neg(self.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vocabulary_names_round_trip() {
        let all = Symbol::all();
        assert_eq!(all.len(), 21);
        for s in all {
            assert_eq!(Symbol::from_name(s.name()), Some(s));
        }
        assert_eq!(Symbol::from_name("pp"), Some(Symbol::p(1)));
        assert_eq!(Symbol::from_name("qdddm"), None);
    }

    #[test]
    fn time_symbols_have_no_derivatives() {
        assert!(Symbol::try_new(Base::T, 0, 1).is_none());
        assert!(Symbol::try_new(Base::Q, 2, 0).is_none());
        assert!(Symbol::t(0).derivative().is_none());
        assert_eq!(Symbol::q(-1).derivative(), Some(Symbol::qd(-1)));
    }

    #[test]
    fn constructors_fold_trivial_terms() {
        let q = Expr::q(0);
        assert_eq!(&q * 0.0, Expr::zero());
        assert_eq!(&q * 1.0, q);
        assert_eq!(&q - &q, Expr::zero());
        assert_eq!(Expr::int(2) * (Expr::int(3) * &q), Expr::int(6) * &q);
        assert_eq!(-(-q.clone()), q);
        assert_eq!(Expr::pow(q.clone(), 1), q);
        assert_eq!(Expr::cos(Expr::zero()), Expr::one());
    }

    #[test]
    fn literal_zero_denominator_is_rejected() {
        assert!(Expr::checked_div(Expr::q(0), Expr::zero()).is_none());
        assert_eq!(
            Expr::checked_div(Expr::int(1), Expr::int(4)),
            Some(Expr::ratio(1, 4))
        );
    }
}

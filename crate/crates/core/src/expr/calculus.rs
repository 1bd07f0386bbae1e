use std::collections::BTreeSet;

use super::{Base, Expr, ExprError, Node, Symbol};

impl Expr {
    /// Applies `f` to the children and rebuilds through the smart constructors.
    fn try_map<E>(&self, f: &mut impl FnMut(&Expr) -> Result<Expr, E>) -> Result<Expr, E> {
        Ok(match self.kind() {
            Node::Const(_) | Node::Sym(_) | Node::Tau => self.clone(),
            Node::Add(a, b) => Expr::add(f(a)?, f(b)?),
            Node::Sub(a, b) => Expr::sub(f(a)?, f(b)?),
            Node::Mul(a, b) => Expr::mul(f(a)?, f(b)?),
            Node::Div(a, b) => {
                let den = f(b)?;
                // A substituted denominator can only fold to zero if the
                // original expression was singular everywhere.
                Expr::checked_div(f(a)?, den).expect("denominator folded to literal zero")
            }
            Node::Pow(a, n) => Expr::pow(f(a)?, *n),
            Node::Neg(a) => Expr::neg(f(a)?),
            Node::Sin(a) => Expr::sin(f(a)?),
            Node::Cos(a) => Expr::cos(f(a)?),
            Node::Exp(a) => Expr::exp(f(a)?),
        })
    }

    /// Symbols occurring in the expression.
    pub fn symbols(&self) -> BTreeSet<Symbol> {
        let mut out = BTreeSet::new();
        self.collect_symbols(&mut out);
        out
    }

    fn collect_symbols(&self, out: &mut BTreeSet<Symbol>) {
        match self.kind() {
            Node::Sym(s) => {
                out.insert(*s);
            }
            Node::Const(_) | Node::Tau => {}
            Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) => {
                a.collect_symbols(out);
                b.collect_symbols(out);
            }
            Node::Pow(a, _) | Node::Neg(a) | Node::Sin(a) | Node::Cos(a) | Node::Exp(a) => {
                a.collect_symbols(out)
            }
        }
    }

    pub fn contains_tau(&self) -> bool {
        match self.kind() {
            Node::Tau => true,
            Node::Const(_) | Node::Sym(_) => false,
            Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) => {
                a.contains_tau() || b.contains_tau()
            }
            Node::Pow(a, _) | Node::Neg(a) | Node::Sin(a) | Node::Cos(a) | Node::Exp(a) => {
                a.contains_tau()
            }
        }
    }

    pub fn depends_on(&self, s: Symbol) -> bool {
        self.symbols().contains(&s)
    }

    /// Partial derivative treating every symbol as an independent coordinate.
    pub fn partial(&self, s: Symbol) -> Expr {
        match self.kind() {
            Node::Const(_) | Node::Tau => Expr::zero(),
            Node::Sym(x) => {
                if *x == s {
                    Expr::one()
                } else {
                    Expr::zero()
                }
            }
            Node::Add(a, b) => a.partial(s) + b.partial(s),
            Node::Sub(a, b) => a.partial(s) - b.partial(s),
            Node::Mul(a, b) => a.partial(s) * b + a * b.partial(s),
            Node::Div(a, b) => quotient_rule(a, b, a.partial(s), b.partial(s)),
            Node::Pow(a, n) => Expr::int(*n as i64) * Expr::pow(a.clone(), n - 1) * a.partial(s),
            Node::Neg(a) => -a.partial(s),
            Node::Sin(a) => Expr::cos(a.clone()) * a.partial(s),
            Node::Cos(a) => -(Expr::sin(a.clone()) * a.partial(s)),
            Node::Exp(a) => self * a.partial(s),
        }
    }

    /// The three-point total derivative `D`.
    ///
    /// Time symbols at every shift advance at unit rate; `q`, `p` and their
    /// first derivatives move up one order. Order-2 input is an error.
    pub fn total_derivative(&self) -> Result<Expr, ExprError> {
        Ok(match self.kind() {
            Node::Const(_) | Node::Tau => Expr::zero(),
            Node::Sym(x) => match x.base() {
                Base::T => Expr::one(),
                _ => Expr::sym(x.derivative().ok_or(ExprError::OrderOverflow(*x))?),
            },
            Node::Add(a, b) => a.total_derivative()? + b.total_derivative()?,
            Node::Sub(a, b) => a.total_derivative()? - b.total_derivative()?,
            Node::Mul(a, b) => a.total_derivative()? * b + a * b.total_derivative()?,
            Node::Div(a, b) => quotient_rule(a, b, a.total_derivative()?, b.total_derivative()?),
            Node::Pow(a, n) => {
                Expr::int(*n as i64) * Expr::pow(a.clone(), n - 1) * a.total_derivative()?
            }
            Node::Neg(a) => -a.total_derivative()?,
            Node::Sin(a) => Expr::cos(a.clone()) * a.total_derivative()?,
            Node::Cos(a) => -(Expr::sin(a.clone()) * a.total_derivative()?),
            Node::Exp(a) => self * a.total_derivative()?,
        })
    }

    /// `S+` for `direction = 1`, `S-` for `direction = -1`.
    pub fn shift(&self, direction: i8) -> Result<Expr, ExprError> {
        self.try_map_symbols(&mut |s| {
            s.shifted(direction)
                .map(Expr::sym)
                .ok_or(ExprError::ShiftOverflow { symbol: s, direction })
        })
    }

    /// Replaces symbols for which `f` returns `Some`.
    pub fn substitute(&self, f: &impl Fn(Symbol) -> Option<Expr>) -> Expr {
        self.try_map_symbols(&mut |s| Ok::<_, std::convert::Infallible>(f(s).unwrap_or_else(|| Expr::sym(s))))
            .unwrap_or_else(|e| match e {})
    }

    pub fn substitute_one(&self, s: Symbol, with: &Expr) -> Expr {
        self.substitute(&|x| (x == s).then(|| with.clone()))
    }

    fn try_map_symbols<E>(
        &self,
        f: &mut impl FnMut(Symbol) -> Result<Expr, E>,
    ) -> Result<Expr, E> {
        match self.kind() {
            Node::Sym(s) => f(*s),
            _ => self.try_map(&mut |c| c.try_map_symbols(f)),
        }
    }
}

fn quotient_rule(a: &Expr, b: &Expr, da: Expr, db: Expr) -> Expr {
    let num = da * b - a * db;
    if num.is_zero_const() {
        return Expr::zero();
    }
    num / Expr::pow(b.clone(), 2)
}

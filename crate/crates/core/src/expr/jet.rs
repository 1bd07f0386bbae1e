use super::{Base, Expr, ExprError, Node, Symbol};

/// Numeric values for the jet coordinates at one time `t`.
///
/// Time symbols are not stored: `t - tau` and `t + tau` are derived from `t`
/// so the delay constraint holds by construction.
#[derive(Clone, Debug, PartialEq)]
pub struct JetPoint {
    tau: f64,
    t: f64,
    values: [Option<f64>; 18],
}

impl JetPoint {
    pub fn new(tau: f64, t: f64) -> JetPoint {
        assert!(tau > 0.0, "delay must be positive");
        JetPoint {
            tau,
            t,
            values: [None; 18],
        }
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn get(&self, s: Symbol) -> Option<f64> {
        match s.slot() {
            Some(i) => self.values[i],
            None => Some(self.t + s.shift() as f64 * self.tau),
        }
    }

    /// Setting a time symbol moves the whole stencil.
    pub fn set(&mut self, s: Symbol, v: f64) {
        match s.slot() {
            Some(i) => self.values[i] = Some(v),
            None => self.t = v - s.shift() as f64 * self.tau,
        }
    }

    pub fn with(mut self, s: Symbol, v: f64) -> JetPoint {
        self.set(s, v);
        self
    }

    pub fn clear(&mut self, s: Symbol) {
        if let Some(i) = s.slot() {
            self.values[i] = None;
        }
    }

    /// The jet seen from `t + direction*tau`; slots that fall off the stencil
    /// are dropped.
    pub fn advanced(&self, direction: i8) -> JetPoint {
        let mut out = JetPoint::new(self.tau, self.t + direction as f64 * self.tau);
        for s in Symbol::all() {
            if s.base() == Base::T {
                continue;
            }
            if let Some(src) = s.shifted(direction) {
                if let Some(v) = self.get(src) {
                    out.set(s, v);
                }
            }
        }
        out
    }

    pub fn eval(&self, e: &Expr) -> Result<f64, ExprError> {
        e.eval(self)
    }
}

impl Expr {
    pub fn eval(&self, j: &JetPoint) -> Result<f64, ExprError> {
        let mut scale = 0.0;
        self.eval_scaled(j, &mut scale)
    }

    /// Evaluates and records the largest magnitude of any intermediate node.
    pub fn eval_scaled(&self, j: &JetPoint, scale: &mut f64) -> Result<f64, ExprError> {
        let v = match self.kind() {
            Node::Const(c) => c.to_f64(),
            Node::Sym(s) => j.get(*s).ok_or(ExprError::MissingSymbol(*s))?,
            Node::Tau => j.tau,
            Node::Add(a, b) => a.eval_scaled(j, scale)? + b.eval_scaled(j, scale)?,
            Node::Sub(a, b) => a.eval_scaled(j, scale)? - b.eval_scaled(j, scale)?,
            Node::Mul(a, b) => a.eval_scaled(j, scale)? * b.eval_scaled(j, scale)?,
            Node::Div(a, b) => {
                let num = a.eval_scaled(j, scale)?;
                let den = b.eval_scaled(j, scale)?;
                if den == 0.0 {
                    return Err(ExprError::DivisionByZero);
                }
                num / den
            }
            Node::Pow(a, n) => {
                let base = a.eval_scaled(j, scale)?;
                if base == 0.0 && *n < 0 {
                    return Err(ExprError::DivisionByZero);
                }
                base.powi(*n)
            }
            Node::Neg(a) => -a.eval_scaled(j, scale)?,
            Node::Sin(a) => a.eval_scaled(j, scale)?.sin(),
            Node::Cos(a) => a.eval_scaled(j, scale)?.cos(),
            Node::Exp(a) => a.eval_scaled(j, scale)?.exp(),
        };
        if v.abs() > *scale {
            *scale = v.abs();
        }
        Ok(v)
    }
}

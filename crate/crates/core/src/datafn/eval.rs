use thiserror::Error;

use super::ast::{BinOp, Expr, ExprKind, Func, Span, Var};

/// Values of the family parameters.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Params {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl Params {
    pub fn new(a: f64, b: f64, c: f64) -> Self {
        Self { a, b, c }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("division by zero at {span}")]
    DivisionByZero { span: Span },
    #[error("root of a negative number at {span}")]
    NegativeRoot { span: Span },
    #[error("non-finite value at {span}")]
    NonFinite { span: Span },
}

/// Evaluates `expr` at radius `r`.
pub fn eval(expr: &Expr, r: f64, params: &Params) -> Result<f64, EvalError> {
    let value = match &expr.kind {
        ExprKind::Num(x) => *x,
        ExprKind::Var(v) => match v {
            Var::R => r,
            Var::A => params.a,
            Var::B => params.b,
            Var::C => params.c,
        },
        ExprKind::Neg(e) => -eval(e, r, params)?,
        ExprKind::Binary(op, lhs, rhs) => {
            let x = eval(lhs, r, params)?;
            let y = eval(rhs, r, params)?;
            match op {
                BinOp::Add => x + y,
                BinOp::Sub => x - y,
                BinOp::Mul => x * y,
                BinOp::Div => {
                    if y == 0.0 {
                        return Err(EvalError::DivisionByZero { span: expr.span });
                    }
                    x / y
                }
                BinOp::Pow => power(x, y, expr.span)?,
            }
        }
        ExprKind::Call(func, arg) => {
            let x = eval(arg, r, params)?;
            match func {
                Func::Exp => x.exp(),
                Func::Sin => x.sin(),
                Func::Cos => x.cos(),
                Func::Cosh => x.cosh(),
                Func::Sqrt => {
                    if x < 0.0 {
                        return Err(EvalError::NegativeRoot { span: expr.span });
                    }
                    x.sqrt()
                }
                Func::Ang => (1.0 + x * x).sqrt(),
            }
        }
    };
    if value.is_finite() {
        Ok(value)
    } else {
        Err(EvalError::NonFinite { span: expr.span })
    }
}

fn power(x: f64, y: f64, span: Span) -> Result<f64, EvalError> {
    if y.fract() == 0.0 && y.abs() <= 64.0 {
        if x == 0.0 && y < 0.0 {
            return Err(EvalError::DivisionByZero { span });
        }
        return Ok(x.powi(y as i32));
    }
    if x < 0.0 {
        return Err(EvalError::NegativeRoot { span });
    }
    Ok(x.powf(y))
}

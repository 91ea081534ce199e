use std::fmt;

/// Byte range of a subexpression in the source text.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        Self { start, end }
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "bytes {}..{}", self.start, self.end)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Var {
    R,
    A,
    B,
    C,
}

impl Var {
    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "r" => Some(Var::R),
            "A" => Some(Var::A),
            "B" => Some(Var::B),
            "C" => Some(Var::C),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Var::R => "r",
            Var::A => "A",
            Var::B => "B",
            Var::C => "C",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Exp,
    Sin,
    Cos,
    Sqrt,
    Cosh,
    /// `ang(x) = sqrt(1 + x^2)`
    Ang,
}

impl Func {
    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "exp" => Some(Func::Exp),
            "sin" => Some(Func::Sin),
            "cos" => Some(Func::Cos),
            "sqrt" => Some(Func::Sqrt),
            "cosh" => Some(Func::Cosh),
            "ang" => Some(Func::Ang),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Sqrt => "sqrt",
            Func::Cosh => "cosh",
            Func::Ang => "ang",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    pub fn symbol(&self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Pow => "^",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExprKind {
    Num(f64),
    Var(Var),
    Neg(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

/// Parsed expression tree. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    pub kind: ExprKind,
    pub span: Span,
}

impl Expr {
    pub fn new(kind: ExprKind, span: Span) -> Self {
        Self { kind, span }
    }

    pub(crate) fn binary(op: BinOp, lhs: Expr, rhs: Expr) -> Self {
        let span = Span::new(lhs.span.start, rhs.span.end);
        Self::new(ExprKind::Binary(op, Box::new(lhs), Box::new(rhs)), span)
    }

    /// Tree equality ignoring source positions.
    pub fn same_structure(&self, other: &Expr) -> bool {
        match (&self.kind, &other.kind) {
            (ExprKind::Num(a), ExprKind::Num(b)) => a.to_bits() == b.to_bits(),
            (ExprKind::Var(a), ExprKind::Var(b)) => a == b,
            (ExprKind::Neg(a), ExprKind::Neg(b)) => a.same_structure(b),
            (ExprKind::Binary(o1, l1, r1), ExprKind::Binary(o2, l2, r2)) => {
                o1 == o2 && l1.same_structure(l2) && r1.same_structure(r2)
            }
            (ExprKind::Call(f1, a1), ExprKind::Call(f2, a2)) => f1 == f2 && a1.same_structure(a2),
            _ => false,
        }
    }

    /// True if the variable occurs anywhere in the tree.
    pub fn mentions(&self, var: Var) -> bool {
        match &self.kind {
            ExprKind::Num(_) => false,
            ExprKind::Var(v) => *v == var,
            ExprKind::Neg(e) | ExprKind::Call(_, e) => e.mentions(var),
            ExprKind::Binary(_, l, r) => l.mentions(var) || r.mentions(var),
        }
    }
}

/// Fully parenthesised form; re-parses to the same tree.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            ExprKind::Num(x) => write!(f, "{x}"),
            ExprKind::Var(v) => f.write_str(v.name()),
            ExprKind::Neg(e) => write!(f, "(-{e})"),
            ExprKind::Binary(op, l, r) => write!(f, "({l} {} {r})", op.symbol()),
            ExprKind::Call(func, a) => write!(f, "{}({a})", func.name()),
        }
    }
}

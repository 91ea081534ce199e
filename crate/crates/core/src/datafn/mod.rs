//! Expression language for radial initial-data profiles.
//!
//! Expressions are written in the radius `r` and the family parameters `A`, `B`, `C`.
//!
//! | precedence | operators                         | associativity |
//! |------------|-----------------------------------|---------------|
//! | 1 (tight)  | `^`                               | right         |
//! | 2          | unary `-`                         | prefix        |
//! | 3          | `*`, `/`                          | left          |
//! | 4 (loose)  | `+`, `-`                          | left          |
//!
//! Functions: `exp`, `sin`, `cos`, `sqrt`, `cosh` and `ang(x) = sqrt(1 + x^2)`.
//! So `-r^2` is `-(r^2)` and `2^-1` is `0.5`. Juxtaposition (`2r`) is rejected.
//! The ground state is not a symbol; families refer to it through flags
//! (see [`DataProfile::times_q`] and [`DataFamily::add_q`]).

/// Plain-text grammar summary for command-line help.
pub const GRAMMAR_HELP: &str = "\
Expressions use the radius r and the parameters A, B, C.
  precedence  operators   associativity
  1 (tight)   ^           right
  2           unary -     prefix
  3           * /         left
  4 (loose)   + -         left
Functions: exp sin cos sqrt cosh ang, with ang(x) = sqrt(1 + x^2).
Numbers: 12, 0.5, 1e-3. -r^2 means -(r^2); 2^-1 is 0.5.
Juxtaposition is rejected: write 2*r, not 2r.
The ground state Q is not a symbol; use add_q (u0 + Q) or a builtin family.";

mod ast;
mod eval;
mod families;
mod parser;

pub use ast::{BinOp, Expr, ExprKind, Func, Span, Var};
pub use eval::{eval, EvalError, Params};
pub use families::{builtin_family, DataFamily, DataProfile, BUILTIN_FAMILIES};
pub use parser::{parse, ParseError};

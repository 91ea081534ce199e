//! Data families `(u0, u1)` parameterised by `A`, `B` and optionally `C`.

use super::{eval, parse, Expr, Params, Var};
use crate::{Error, RadialGrid, Result};

/// One component of a datum: `expr(r; A, B, C)`, optionally multiplied by `Q(r)`.
#[derive(Debug, Clone)]
pub struct DataProfile {
    pub source: String,
    pub expr: Expr,
    pub times_q: bool,
}

impl DataProfile {
    pub fn parse(source: &str) -> Result<Self> {
        Ok(Self { source: source.to_string(), expr: parse(source)?, times_q: false })
    }

    pub fn times_q(mut self) -> Self {
        self.times_q = true;
        self
    }

    /// Human-readable form, with the ground state written as `Q`.
    pub fn describe(&self) -> String {
        if self.times_q {
            format!("({})*Q", self.source)
        } else {
            self.source.clone()
        }
    }
}

/// `(u0, u1) = ([Q +] f, g)` with `f`, `g` given by [`DataProfile`]s.
#[derive(Debug, Clone)]
pub struct DataFamily {
    pub name: String,
    pub u0: DataProfile,
    pub u1: DataProfile,
    /// Adds the ground state to `u0`.
    pub add_q: bool,
}

/// Names accepted by [`builtin_family`].
pub const BUILTIN_FAMILIES: &[&str] = &[
    "fig1_1_left",
    "fig1_1_right",
    "fig1_2_left",
    "fig1_2_right",
    "fig1_3_left",
    "fig1_3_right",
    "fig1_4",
    "fig1_6_left",
    "curve1",
    "3param",
];

/// Expression pair of a registered figure family.
pub fn builtin_family(name: &str) -> Result<DataFamily> {
    let (u0, u1, add_q, q_factor) = match name {
        "fig1_1_left" => ("A*exp(-r^2)", "B*exp(-r^2)", true, false),
        "fig1_1_right" => ("A", "B", false, true),
        "fig1_2_left" => ("A*exp(-r^2)", "B*exp(-r^2)", false, false),
        "fig1_2_right" => ("A*r^2*exp(-4*(r^2-1)^2)", "B*r^2*exp(-(r^2-1))", false, false),
        "fig1_3_left" => ("A*exp(-ang(r))", "B*sin(6*r^2)*exp(-(r^2-1)^2/10)", false, false),
        "fig1_3_right" => (
            "A*r^2*cos(10*r^2)*exp(-ang(r^2))",
            "B*sin(6*r^2)*exp(-4*(r^2-1)^2)",
            false,
            false,
        ),
        "fig1_4" => ("A*exp(-r^2/ang(r))", "B*exp(-r^2)", false, false),
        // e^{-3/2 <r>} read as exp(-(3/2) ang(r))
        "fig1_6_left" => ("A*r*sin(6*r)*exp(-3/2*ang(r))", "B*cos(6*r)*exp(-(r^2-1/4)^2)", false, false),
        // the curved section: the pair itself is the datum
        "curve1" => ("(A+B)*B*cos(2*(A-B)*r)*exp(-r^2/ang(r))", "(A-B)*exp(-r^2)", false, false),
        "3param" => ("A*r^2*cos(C*r)*exp(-r^2)", "B*r^3*sin(6*r)*exp(-2*(r^2-1)^2)", false, false),
        _ => {
            return Err(Error::config(format!(
                "unknown family `{name}`; known families: {}",
                BUILTIN_FAMILIES.join(", ")
            )))
        }
    };
    let mut u0 = DataProfile::parse(u0)?;
    let mut u1 = DataProfile::parse(u1)?;
    if q_factor {
        u0 = u0.times_q();
        u1 = u1.times_q();
    }
    Ok(DataFamily { name: name.to_string(), u0, u1, add_q })
}

impl DataFamily {
    pub fn custom(u0: &str, u1: &str, add_q: bool) -> Result<Self> {
        Ok(Self {
            name: "custom".into(),
            u0: DataProfile::parse(u0)?,
            u1: DataProfile::parse(u1)?,
            add_q,
        })
    }

    /// Whether any component depends on the ground state.
    pub fn needs_ground_state(&self) -> bool {
        self.add_q || self.u0.times_q || self.u1.times_q
    }

    pub fn uses_c(&self) -> bool {
        self.u0.expr.mentions(Var::C) || self.u1.expr.mentions(Var::C)
    }

    pub fn describe(&self) -> (String, String) {
        let u0 = if self.add_q {
            format!("Q + {}", self.u0.describe())
        } else {
            self.u0.describe()
        };
        (u0, self.u1.describe())
    }

    /// Samples `(u0, u1)` on `grid`. `q` must hold the ground state on the same grid
    /// whenever [`needs_ground_state`](Self::needs_ground_state) is true.
    pub fn sample(&self, grid: &RadialGrid, params: &Params, q: Option<&[f64]>) -> Result<(Vec<f64>, Vec<f64>)> {
        if self.needs_ground_state() {
            let q = q.ok_or_else(|| Error::config("family needs the ground state"))?;
            grid.check_len("ground state samples", q.len())?;
        }
        let u0 = sample_profile(&self.u0, grid, params, q, self.add_q)?;
        let u1 = sample_profile(&self.u1, grid, params, q, false)?;
        Ok((u0, u1))
    }
}

fn sample_profile(
    profile: &DataProfile,
    grid: &RadialGrid,
    params: &Params,
    q: Option<&[f64]>,
    add_q: bool,
) -> Result<Vec<f64>> {
    grid.radii()
        .enumerate()
        .map(|(j, r)| {
            let mut x = eval(&profile.expr, r, params).map_err(|e| Error::Data {
                radius: r,
                message: format!("`{}`: {e}", profile.source),
            })?;
            if profile.times_q {
                x *= q.map_or(0.0, |q| q[j]);
            }
            if add_q {
                x += q.map_or(0.0, |q| q[j]);
            }
            Ok(x)
        })
        .collect()
}

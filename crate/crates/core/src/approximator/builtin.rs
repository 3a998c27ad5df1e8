//! Named fit targets.

use num_complex::Complex64;

use super::expr::Expr;

/// A resolved target function.
#[derive(Debug, Clone, PartialEq)]
pub enum Target {
    Sin,
    Cos,
    Exp,
    /// Any expression in `z`: polynomial literals, rational functions and
    /// compositions of the built-ins.
    Expression(Expr),
}

impl Target {
    pub fn eval(&self, z: Complex64) -> Complex64 {
        match self {
            Target::Sin => z.sin(),
            Target::Cos => z.cos(),
            Target::Exp => z.exp(),
            Target::Expression(e) => e.eval(&[], z),
        }
    }
}

pub const BUILTIN_NAMES: &[&str] = &["sin", "cos", "exp"];

/// Resolves `sin`, `cos`, `exp` or `expr:<expression in z>`.
pub fn resolve(name: &str) -> Result<Target, String> {
    match name.trim() {
        "sin" => Ok(Target::Sin),
        "cos" => Ok(Target::Cos),
        "exp" => Ok(Target::Exp),
        other => {
            let Some(src) = other.strip_prefix("expr:") else {
                return Err(format!(
                    "unknown function '{other}' (built-ins: {}; or expr:<expression in z>)",
                    BUILTIN_NAMES.join(", ")
                ));
            };
            let e = Expr::parse(src).map_err(|e| format!("in '{src}': {e}"))?;
            if e.param_count() > 0 {
                return Err(format!("fit targets may only use z, found parameters in '{src}'"));
            }
            Ok(Target::Expression(e))
        }
    }
}

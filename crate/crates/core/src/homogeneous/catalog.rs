//! Built-in algebras.

use super::algebra::LieAlgebraSpec;
use crate::error::{Error, Result};

pub const NAMES: [&str; 4] = ["abelian4", "sl2c", "h8", "u2"];

fn source(name: &str) -> Option<&'static str> {
    Some(match name {
        "abelian4" => include_str!("../../catalog/abelian4.alg"),
        "sl2c" => include_str!("../../catalog/sl2c.alg"),
        "h8" => include_str!("../../catalog/h8.alg"),
        "u2" => include_str!("../../catalog/u2.alg"),
        _ => return None,
    })
}

pub fn builtin(name: &str) -> Result<LieAlgebraSpec> {
    let text = source(name).ok_or_else(|| Error::Invalid(format!("unknown algebra `{name}` (known: {})", NAMES.join(", "))))?;
    LieAlgebraSpec::parse(text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_entries_validate() {
        for name in NAMES {
            let spec = builtin(name).unwrap();
            assert_eq!(spec.id, name);
            assert!(spec.jacobi_residual() < 1e-12);
            assert!(spec.nijenhuis_residual() < 1e-12);
        }
        assert!(builtin("abelian4").unwrap().is_abelian());
        assert!(builtin("nope").is_err());
    }
}

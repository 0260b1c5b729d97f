//! Named observable triples, addressable from the command line.
//!
//! Torus triples come from the oracle catalogue and are evaluated in
//! pullback mode; direct triples are Lipschitz functions of the plane
//! coordinates, used for the decay bound.

use crate::observable::Observable;
use crate::oracle::{self, OracleError};
use num_complex::Complex64;

/// A resolved triple with its limit, when one is known.
#[derive(Clone, Debug)]
pub struct Triple {
    pub name: String,
    pub functions: [Observable<Complex64>; 3],
    /// Closed-form limit of `phi_n` as `n` grows.
    pub target: Option<Complex64>,
}

impl Triple {
    pub fn refs(&self) -> [&Observable<Complex64>; 3] {
        let [f, g, h] = &self.functions;
        [f, g, h]
    }
}

/// Names of the direct-mode triples.
pub const DIRECT_TRIPLES: [&str; 3] = ["coords", "sum-coords", "sines"];

fn direct_triple(name: &str) -> Option<[Observable<Complex64>; 3]> {
    let x = || Observable::direct("x", |x, _| x);
    let y = || Observable::direct("y", |_, y| y);
    match name {
        "coords" => Some([Observable::constant(1.0), x(), y()]),
        "sum-coords" => Some([Observable::direct("x+y", |x, y| x + y), x(), y()]),
        "sines" => Some([
            Observable::direct("sin(x+y)", |x, y| (x + y).sin()),
            Observable::direct("sin(x)", |x, _| x.sin()),
            Observable::direct("sin(y)", |_, y| y.sin()),
        ]),
        _ => None,
    }
}

/// All triple names, torus presets first.
pub fn triple_names() -> Vec<&'static str> {
    oracle::catalogue().iter().map(|p| p.name).chain(DIRECT_TRIPLES).collect()
}

/// Resolves a triple by name.
pub fn triple(name: &str) -> Result<Triple, OracleError> {
    if let Some(functions) = direct_triple(name) {
        // Lipschitz functions of the coordinates: phi_n -> 0.
        return Ok(Triple { name: name.into(), functions, target: Some(Complex64::new(0.0, 0.0)) });
    }
    let p = oracle::preset(name)?;
    Ok(Triple { name: name.into(), functions: p.functions.map(Observable::pullback), target: Some(p.closed_form) })
}

/// Resolves a pullback quadruple for the Hochschild residual.
pub fn quadruple(name: &str) -> Result<[Observable<Complex64>; 4], OracleError> {
    Ok(oracle::quadruple(name)?.functions.map(Observable::pullback))
}

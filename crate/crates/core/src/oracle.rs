//! Independent ground truth on the torus: midpoint quadrature of
//! `2 * int f (g_u h_v - g_v h_u)`, a catalogue of trigonometric presets with
//! hand-derived integrals, rank-one projections of prescribed degree, and
//! the pairing integral `(1/(pi i)) int Tr(e [e_u, e_v])`.
//!
//! Orientation: `u` is the first coordinate, `v` the second, and `d/du` is
//! always taken before `d/dv`. This matches the vertex cycle `v0 -> v1 -> v2`
//! of the square kernel.

use crate::summation::deterministic_sum;
use nalgebra::Matrix2;
use num_complex::Complex64;
use std::f64::consts::PI;
use std::sync::OnceLock;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("unknown preset `{0}`")]
    UnknownPreset(String),
    #[error("grid size {got} below the minimum {min}")]
    GridTooSmall { got: usize, min: usize },
    #[error("degree {0} outside the supported range -3..=3")]
    DegreeOutOfRange(i32),
    #[error("preset `{name}`: closed form {closed} disagrees with quadrature {quadrature}")]
    CatalogueMismatch { name: &'static str, closed: f64, quadrature: f64 },
}

/// A smooth 1-periodic function on the torus with optional analytic partials.
#[derive(Clone, Copy)]
pub struct SmoothFn {
    pub name: &'static str,
    pub value: fn(f64, f64) -> f64,
    pub du: Option<fn(f64, f64) -> f64>,
    pub dv: Option<fn(f64, f64) -> f64>,
}

impl std::fmt::Debug for SmoothFn {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name)
    }
}

impl SmoothFn {
    pub const fn new(
        name: &'static str,
        value: fn(f64, f64) -> f64,
        du: fn(f64, f64) -> f64,
        dv: fn(f64, f64) -> f64,
    ) -> Self {
        Self { name, value, du: Some(du), dv: Some(dv) }
    }

    /// Partials only by central differences.
    pub const fn numeric(name: &'static str, value: fn(f64, f64) -> f64) -> Self {
        Self { name, value, du: None, dv: None }
    }

    pub fn eval(&self, u: f64, v: f64) -> f64 {
        (self.value)(u, v)
    }

    /// Analytic partials when available, otherwise central differences with
    /// the given step.
    pub fn gradient(&self, u: f64, v: f64, step: f64) -> (f64, f64) {
        let du = match self.du {
            Some(d) => d(u, v),
            None => (self.eval(u + step, v) - self.eval(u - step, v)) / (2.0 * step),
        };
        let dv = match self.dv {
            Some(d) => d(u, v),
            None => (self.eval(u, v + step) - self.eval(u, v - step)) / (2.0 * step),
        };
        (du, dv)
    }
}

pub mod trig {
    //! Trigonometric monomials used by the presets.
    use super::SmoothFn;
    use std::f64::consts::TAU;

    pub const ONE: SmoothFn = SmoothFn::new("1", |_, _| 1.0, |_, _| 0.0, |_, _| 0.0);
    pub const SIN_U: SmoothFn =
        SmoothFn::new("sin(2 pi u)", |u, _| (TAU * u).sin(), |u, _| TAU * (TAU * u).cos(), |_, _| 0.0);
    pub const COS_U: SmoothFn =
        SmoothFn::new("cos(2 pi u)", |u, _| (TAU * u).cos(), |u, _| -TAU * (TAU * u).sin(), |_, _| 0.0);
    pub const SIN_V: SmoothFn =
        SmoothFn::new("sin(2 pi v)", |_, v| (TAU * v).sin(), |_, _| 0.0, |_, v| TAU * (TAU * v).cos());
    pub const COS_V: SmoothFn =
        SmoothFn::new("cos(2 pi v)", |_, v| (TAU * v).cos(), |_, _| 0.0, |_, v| -TAU * (TAU * v).sin());
    pub const COS_U_COS_V: SmoothFn = SmoothFn::new(
        "cos(2 pi u) cos(2 pi v)",
        |u, v| (TAU * u).cos() * (TAU * v).cos(),
        |u, v| -TAU * (TAU * u).sin() * (TAU * v).cos(),
        |u, v| -TAU * (TAU * u).cos() * (TAU * v).sin(),
    );
    pub const SIN_U_PLUS_V: SmoothFn = SmoothFn::new(
        "sin(2 pi (u + v))",
        |u, v| (TAU * (u + v)).sin(),
        |u, v| TAU * (TAU * (u + v)).cos(),
        |u, v| TAU * (TAU * (u + v)).cos(),
    );
    pub const COS_U_PLUS_V: SmoothFn = SmoothFn::new(
        "cos(2 pi (u + v))",
        |u, v| (TAU * (u + v)).cos(),
        |u, v| -TAU * (TAU * (u + v)).sin(),
        |u, v| -TAU * (TAU * (u + v)).sin(),
    );
    pub const COS_U_PLUS_SIN_V: SmoothFn = SmoothFn::new(
        "cos(2 pi u) + sin(2 pi v)",
        |u, v| (TAU * u).cos() + (TAU * v).sin(),
        |u, _| -TAU * (TAU * u).sin(),
        |_, v| TAU * (TAU * v).cos(),
    );
    pub const SIN_U_COS_V: SmoothFn = SmoothFn::new(
        "sin(2 pi u) cos(2 pi v)",
        |u, v| (TAU * u).sin() * (TAU * v).cos(),
        |u, v| TAU * (TAU * u).cos() * (TAU * v).cos(),
        |u, v| -TAU * (TAU * u).sin() * (TAU * v).sin(),
    );
    pub const COS_U_MINUS_2V: SmoothFn = SmoothFn::new(
        "cos(2 pi (u - 2v))",
        |u, v| (TAU * (u - 2.0 * v)).cos(),
        |u, v| -TAU * (TAU * (u - 2.0 * v)).sin(),
        |u, v| 2.0 * TAU * (TAU * (u - 2.0 * v)).sin(),
    );
}

/// A named triple `(f, g, h)` with its integral `2 int f dg ^ dh`.
#[derive(Clone, Debug)]
pub struct SmoothPreset {
    pub name: &'static str,
    pub functions: [SmoothFn; 3],
    pub closed_form: Complex64,
    /// How the closed form was obtained.
    pub derivation: &'static str,
}

/// Four torus functions for the Hochschild coboundary check.
#[derive(Clone, Debug)]
pub struct SmoothQuadruple {
    pub name: &'static str,
    pub functions: [SmoothFn; 4],
}

fn real(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

fn build_catalogue() -> Vec<SmoothPreset> {
    use trig::*;
    vec![
        SmoothPreset {
            name: "bott-flux",
            functions: [COS_U_COS_V, SIN_U, SIN_V],
            closed_form: real(2.0 * PI * PI),
            derivation:
                "g_u h_v - g_v h_u = 4 pi^2 cos(2 pi u) cos(2 pi v); the mean of cos^2 cos^2 is 1/4, so 2 * 4 pi^2 / 4",
        },
        SmoothPreset {
            name: "stokes-null",
            functions: [ONE, SIN_U, SIN_V],
            closed_form: real(0.0),
            derivation: "dg ^ dh is exact, its integral over a closed surface vanishes",
        },
        SmoothPreset {
            name: "mixed-mode",
            functions: [SIN_U, SIN_U_PLUS_V, COS_V],
            closed_form: real(2.0 * PI * PI),
            derivation: "g_u h_v - g_v h_u = -4 pi^2 cos(a + b) sin b with a = 2 pi u, b = 2 pi v; \
                         sin a cos(a + b) sin b averages to -1/4, giving 2 * pi^2",
        },
        SmoothPreset {
            name: "cyclic-probe",
            functions: [COS_U_PLUS_SIN_V, SIN_U_COS_V, COS_U_MINUS_2V],
            closed_form: real(-PI * PI),
            derivation: "g_u h_v - g_v h_u = 4 pi^2 sin(a - 2b)(2 cos a cos b - sin a sin b) with \
                         a = 2 pi u, b = 2 pi v; expanding against cos a + sin b into trig monomials \
                         leaves the constant -1/8, giving 2 * 4 pi^2 * (-1/8)",
        },
    ]
}

fn quadruples() -> Vec<SmoothQuadruple> {
    use trig::*;
    vec![SmoothQuadruple {
        name: "hochschild-probe",
        functions: [COS_U_PLUS_SIN_V, SIN_U_COS_V, COS_U_MINUS_2V, SIN_U_PLUS_V],
    }]
}

/// Registration-time cross-check tolerance against quadrature at `m = 512`.
pub const CATALOGUE_TOLERANCE: f64 = 1e-8;
pub const CATALOGUE_GRID: usize = 512;

/// Checks every catalogue entry against [`wedge_quadrature`].
pub fn verify_catalogue(presets: &[SmoothPreset]) -> Result<(), OracleError> {
    for p in presets {
        let [f, g, h] = &p.functions;
        let q = wedge_quadrature(f, g, h, CATALOGUE_GRID, 1)?;
        if (q - p.closed_form).norm() > CATALOGUE_TOLERANCE {
            return Err(OracleError::CatalogueMismatch { name: p.name, closed: p.closed_form.re, quadrature: q.re });
        }
    }
    Ok(())
}

/// The preset catalogue, verified against quadrature on first use.
pub fn catalogue() -> &'static [SmoothPreset] {
    static CATALOGUE: OnceLock<Vec<SmoothPreset>> = OnceLock::new();
    CATALOGUE.get_or_init(|| {
        let presets = build_catalogue();
        if let Err(err) = verify_catalogue(&presets) {
            panic!("preset catalogue failed registration: {err}");
        }
        presets
    })
}

pub fn preset(name: &str) -> Result<&'static SmoothPreset, OracleError> {
    catalogue().iter().find(|p| p.name == name).ok_or_else(|| OracleError::UnknownPreset(name.into()))
}

pub fn closed_form_target(name: &str) -> Result<Complex64, OracleError> {
    preset(name).map(|p| p.closed_form)
}

pub fn quadruple(name: &str) -> Result<SmoothQuadruple, OracleError> {
    quadruples().into_iter().find(|q| q.name == name).ok_or_else(|| OracleError::UnknownPreset(name.into()))
}

pub fn quadruple_names() -> Vec<&'static str> {
    quadruples().iter().map(|q| q.name).collect()
}

/// Midpoint-rule value of `2 int f (g_u h_v - g_v h_u) du dv` on an `m x m`
/// grid. Missing partials use central differences at step `1/m`.
pub fn wedge_quadrature(
    f: &SmoothFn,
    g: &SmoothFn,
    h: &SmoothFn,
    m: usize,
    workers: usize,
) -> Result<Complex64, OracleError> {
    if m < 4 {
        return Err(OracleError::GridTooSmall { got: m, min: 4 });
    }
    let step = 1.0 / m as f64;
    let total = (m * m) as u64;
    let sum = deterministic_sum(total, 2, workers, |k| {
        let (i, j) = ((k % m as u64) as f64, (k / m as u64) as f64);
        let (u, v) = ((i + 0.5) * step, (j + 0.5) * step);
        let (gu, gv) = g.gradient(u, v, step);
        let (hu, hv) = h.gradient(u, v, step);
        real(f.eval(u, v) * (gu * hv - gv * hu))
    });
    Ok(sum * (2.0 / total as f64))
}

/// A smooth rank-one projection field `e(u, v) = (I + n . sigma) / 2`
/// built from a unit vector field `n` of prescribed degree.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProjectionField {
    pub degree: i32,
}

/// Radius of the disc outside which the field sits at the south pole.
const CAP_RADIUS: f64 = 0.5;
/// Step for the fourth-order central differences of `e`.
const DIFF_STEP: f64 = 1e-3;

fn flat(t: f64) -> f64 {
    if t > 0.0 {
        (-1.0 / t).exp()
    } else {
        0.0
    }
}

/// C-infinity step: 0 for `t <= 0`, 1 for `t >= 1`.
pub fn smooth_step(t: f64) -> f64 {
    let a = flat(t);
    let b = flat(1.0 - t);
    a / (a + b)
}

fn wrap(x: f64) -> f64 {
    x - x.floor()
}

impl ProjectionField {
    /// Unit vector at `(u, v)`. Polar angle runs from the north pole at the
    /// centre of the fundamental square to the south pole at radius
    /// [`CAP_RADIUS`]; the azimuth winds `degree` times.
    pub fn unit_vector(&self, u: f64, v: f64) -> [f64; 3] {
        let x = wrap(u) - 0.5;
        let y = wrap(v) - 0.5;
        let r = x.hypot(y);
        let theta = PI * smooth_step(r / CAP_RADIUS);
        let (sin_t, cos_t) = theta.sin_cos();
        if self.degree == 0 {
            return [sin_t, 0.0, cos_t];
        }
        if r == 0.0 {
            return [0.0, 0.0, cos_t];
        }
        let w = Complex64::new(x / r, y / r);
        let w = if self.degree > 0 { w } else { w.conj() };
        let z = w.powi(self.degree.abs()) * sin_t;
        [z.re, z.im, cos_t]
    }

    pub fn eval(&self, u: f64, v: f64) -> Matrix2<Complex64> {
        let [a, b, c] = self.unit_vector(u, v);
        let half = 0.5;
        Matrix2::new(
            Complex64::new(half * (1.0 + c), 0.0),
            Complex64::new(half * a, -half * b),
            Complex64::new(half * a, half * b),
            Complex64::new(half * (1.0 - c), 0.0),
        )
    }

    fn partial(&self, u: f64, v: f64, along_u: bool) -> Matrix2<Complex64> {
        let h = DIFF_STEP;
        let at = |t: f64| if along_u { self.eval(u + t, v) } else { self.eval(u, v + t) };
        (at(-2.0 * h) - at(-h) * Complex64::from(8.0) + at(h) * Complex64::from(8.0) - at(2.0 * h))
            / Complex64::from(12.0 * h)
    }

    pub fn du(&self, u: f64, v: f64) -> Matrix2<Complex64> {
        self.partial(u, v, true)
    }

    pub fn dv(&self, u: f64, v: f64) -> Matrix2<Complex64> {
        self.partial(u, v, false)
    }
}

pub const MAX_DEGREE: i32 = 3;

pub fn bott_projection(degree: i32) -> Result<ProjectionField, OracleError> {
    if degree.abs() > MAX_DEGREE {
        return Err(OracleError::DegreeOutOfRange(degree));
    }
    Ok(ProjectionField { degree })
}

/// `(1/(pi i)) int Tr(e (e_u e_v - e_v e_u)) du dv` by the midpoint rule.
pub fn chern_pairing_oracle(e: &ProjectionField, m: usize, workers: usize) -> Result<Complex64, OracleError> {
    if m < 64 {
        return Err(OracleError::GridTooSmall { got: m, min: 64 });
    }
    chern_pairing_with(|u, v| (e.eval(u, v), e.du(u, v), e.dv(u, v)), m, workers)
}

/// Same integral for an arbitrary field given with its partials.
pub fn chern_pairing_with<F>(field: F, m: usize, workers: usize) -> Result<Complex64, OracleError>
where
    F: Fn(f64, f64) -> (Matrix2<Complex64>, Matrix2<Complex64>, Matrix2<Complex64>) + Sync,
{
    let step = 1.0 / m as f64;
    let total = (m * m) as u64;
    let sum = deterministic_sum(total, 2, workers, |k| {
        let (i, j) = ((k % m as u64) as f64, (k / m as u64) as f64);
        let (e, eu, ev) = field((i + 0.5) * step, (j + 0.5) * step);
        (e * (eu * ev - ev * eu)).trace()
    });
    Ok(sum / (total as f64 * PI * Complex64::i()))
}

/// Distance of `x` to the nearest even integer.
pub fn even_lattice_distance(x: f64) -> f64 {
    (x - 2.0 * (x / 2.0).round()).abs()
}

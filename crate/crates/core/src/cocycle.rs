//! The approximating combinatorial integration `phi_n` and its diagnostics.
//!
//! `phi_n(f, g, h)` is the sum over the level-n squares of the per-square
//! trace `Tr(f [F,g] [F,h] M)`. Squares are addressed by their lexicographic
//! word index and summed with [`deterministic_sum`], so results are
//! bit-identical for any worker count.

use crate::cantor::dust_image_f64;
use crate::fredholm::{CMatrix, Entry, VertexValues};
use crate::geometry::{corner_of_index, vertices_of, GeometryError, IfsPreset, SquareStream};
use crate::observable::{Mode, Observable, ObservableClass};
use crate::summation::deterministic_sum;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::ops::RangeInclusive;
use std::time::Instant;
use thiserror::Error;

/// Default level budget for scalar observables (16,777,216 squares).
pub const SCALAR_LEVEL_BUDGET: u32 = 12;
/// Default level budget for matrix observables.
pub const MATRIX_LEVEL_BUDGET: u32 = 10;
/// Tolerance for the projection identities `e^2 = e`, `e = e*`.
pub const PROJECTION_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CocycleError {
    #[error("level {level} exceeds the budget {budget}; pass an override to run it")]
    BudgetExceeded { level: u32, budget: u32 },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("observables disagree on matrix size ({0} vs {1})")]
    KindMismatch(usize, usize),
    #[error("pullback observables need the cantor_dust preset, got {0}")]
    PullbackUnsupported(IfsPreset),
    #[error("observables `{0}` and `{1}` use different evaluation modes")]
    ModeMismatch(String, String),
    #[error("`{name}` is not a projection: deviation {deviation:e} at ({u}, {v})")]
    NotProjection { name: String, deviation: f64, u: f64, v: f64 },
    #[error("`{0}` must be evaluated in pullback mode")]
    NotPullback(String),
}

/// Execution settings shared by every engine entry point.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EngineConfig {
    pub workers: usize,
    /// Lift the default level budgets (exact-integer limits still apply).
    pub allow_large: bool,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self { workers: default_workers(), allow_large: false }
    }
}

impl EngineConfig {
    pub fn with_workers(workers: usize) -> Self {
        Self { workers: workers.max(1), ..Self::default() }
    }
}

/// Logical CPU count, used when no worker count is configured.
pub fn default_workers() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

fn check_budget<T: Entry>(level: u32, sample: &T, cfg: &EngineConfig) -> Result<(), CocycleError> {
    let budget = if sample.dim() > 1 { MATRIX_LEVEL_BUDGET } else { SCALAR_LEVEL_BUDGET };
    if level > budget && !cfg.allow_large {
        return Err(CocycleError::BudgetExceeded { level, budget });
    }
    Ok(())
}

fn check_kinds<T: Entry>(obs: &[&Observable<T>]) -> Result<T, CocycleError> {
    let samples: Vec<T> = obs.iter().map(|o| o.eval(0.25, 0.75)).collect();
    let dim = samples[0].dim();
    for s in &samples[1..] {
        if s.dim() != dim {
            return Err(CocycleError::KindMismatch(dim, s.dim()));
        }
    }
    Ok(samples.into_iter().next().expect("at least one observable"))
}

/// `phi_n(f, g, h)` over the level-n squares of `preset`.
pub fn phi_n<T: Entry>(
    preset: IfsPreset,
    level: u32,
    f: &Observable<T>,
    g: &Observable<T>,
    h: &Observable<T>,
    cfg: &EngineConfig,
) -> Result<Complex64, CocycleError> {
    let sample = check_kinds(&[f, g, h])?;
    check_budget(level, &sample, cfg)?;
    let needs_torus = [f, g, h].iter().any(|o| o.mode() == Mode::Pullback);
    if needs_torus && preset != IfsPreset::CantorDust {
        return Err(CocycleError::PullbackUnsupported(preset));
    }
    let total = SquareStream::with_override(preset, level)?.len() as u64;
    let scale = 3f64.powi(-(level as i32));
    let term = |index: u64| {
        let (kx, ky) = corner_of_index(preset, level, index);
        let verts = vertices_of(kx, ky, level);
        let plane = verts.map(|p| (p.px as f64 * scale, p.py as f64 * scale));
        let torus = if needs_torus { verts.map(dust_image_f64) } else { plane };
        let values = |o: &Observable<T>| VertexValues([0, 1, 2, 3].map(|i| o.at(plane[i], torus[i])));
        T::kernel(&values(f), &values(g), &values(h))
    };
    Ok(deterministic_sum(total, preset.map_count() as u64, cfg.workers, term))
}

/// How vertex coordinates equal to 1 are treated in the subdivision sum.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Boundary {
    /// Identify opposite edges (evaluate at coordinate 0 instead of 1).
    Torus,
    /// Evaluate at the raw corner of the unit square.
    Square,
}

/// The same kernel summed over the `4^n` cells of the `2^n` subdivision,
/// with the observables evaluated at the dyadic cell corners.
pub fn phi_subdivision<T: Entry>(
    level: u32,
    f: &Observable<T>,
    g: &Observable<T>,
    h: &Observable<T>,
    boundary: Boundary,
    cfg: &EngineConfig,
) -> Result<Complex64, CocycleError> {
    for o in [f, g, h] {
        if o.mode() != Mode::Pullback {
            return Err(CocycleError::NotPullback(o.name().to_string()));
        }
    }
    let sample = check_kinds(&[f, g, h])?;
    check_budget(level, &sample, cfg)?;
    let side = 1u64 << level;
    let scale = 0.5f64.powi(level as i32);
    let coord = |k: u64| match boundary {
        Boundary::Torus if k == side => 0.0,
        _ => k as f64 * scale,
    };
    let term = |index: u64| {
        let (i, j) = (index % side, index / side);
        let corners = [(i, j), (i + 1, j), (i + 1, j + 1), (i, j + 1)].map(|(a, b)| (coord(a), coord(b)));
        let values = |o: &Observable<T>| VertexValues(corners.map(|(u, v)| o.eval(u, v)));
        T::kernel(&values(f), &values(g), &values(h))
    };
    Ok(deterministic_sum(side * side, 4, cfg.workers, term))
}

/// Result of the Lipschitz decay bound `|phi_n| <= 8 |f| Lip(g) Lip(h) (4/9)^n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LipschitzCheck {
    pub n: u32,
    pub phi_re: f64,
    pub phi_im: f64,
    pub sup_f: f64,
    pub lip_g: f64,
    pub lip_h: f64,
    pub bound: f64,
    pub holds: bool,
}

#[derive(Clone, Copy, Default)]
struct VertexStats {
    sup_f: f64,
    lip_g: f64,
    lip_h: f64,
}

impl VertexStats {
    fn merge(self, o: Self) -> Self {
        Self { sup_f: self.sup_f.max(o.sup_f), lip_g: self.lip_g.max(o.lip_g), lip_h: self.lip_h.max(o.lip_h) }
    }
}

const VERTEX_PAIRS: [(usize, usize); 6] = [(0, 1), (1, 2), (2, 3), (3, 0), (0, 2), (1, 3)];

/// Sup norm of `f` and difference-quotient Lipschitz estimates of `g`, `h`
/// over the vertices of the level-n squares.
fn vertex_stats(
    preset: IfsPreset,
    level: u32,
    f: &Observable<Complex64>,
    g: &Observable<Complex64>,
    h: &Observable<Complex64>,
    cfg: &EngineConfig,
) -> Result<VertexStats, CocycleError> {
    let total = SquareStream::with_override(preset, level)?.len() as u64;
    let scale = 3f64.powi(-(level as i32));
    let stats = |index: u64| {
        let (kx, ky) = corner_of_index(preset, level, index);
        let verts = vertices_of(kx, ky, level);
        let fv = verts.map(|p| f.at_vertex(p));
        let gv = verts.map(|p| g.at_vertex(p));
        let hv = verts.map(|p| h.at_vertex(p));
        let mut s = VertexStats { sup_f: fv.iter().map(|z| z.norm()).fold(0.0, f64::max), ..Default::default() };
        for (a, b) in VERTEX_PAIRS {
            let dx = (verts[a].px as f64 - verts[b].px as f64) * scale;
            let dy = (verts[a].py as f64 - verts[b].py as f64) * scale;
            let dist = dx.hypot(dy);
            s.lip_g = s.lip_g.max((gv[a] - gv[b]).norm() / dist);
            s.lip_h = s.lip_h.max((hv[a] - hv[b]).norm() / dist);
        }
        s
    };
    let run = || (0..total).into_par_iter().map(stats).reduce(VertexStats::default, VertexStats::merge);
    if cfg.workers <= 1 {
        Ok((0..total).map(stats).fold(VertexStats::default(), VertexStats::merge))
    } else {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(cfg.workers).build().expect("thread pool");
        Ok(pool.install(run))
    }
}

pub fn lipschitz_check(
    preset: IfsPreset,
    level: u32,
    f: &Observable<Complex64>,
    g: &Observable<Complex64>,
    h: &Observable<Complex64>,
    cfg: &EngineConfig,
) -> Result<LipschitzCheck, CocycleError> {
    let phi = phi_n(preset, level, f, g, h, cfg)?;
    let s = vertex_stats(preset, level, f, g, h, cfg)?;
    let bound = 8.0 * s.sup_f * s.lip_g * s.lip_h * (4.0f64 / 9.0).powi(level as i32);
    Ok(LipschitzCheck {
        n: level,
        phi_re: phi.re,
        phi_im: phi.im,
        sup_f: s.sup_f,
        lip_g: s.lip_g,
        lip_h: s.lip_h,
        bound,
        holds: phi.norm() <= bound,
    })
}

/// Checks `e^2 = e` and `e = e*` at the torus images of the vertices of the
/// level-`min(n, 4)` dust squares.
pub fn check_projection(p: &Observable<CMatrix>, level: u32) -> Result<(), CocycleError> {
    if p.class() != ObservableClass::MatrixProjection || p.mode() != Mode::Pullback {
        return Err(CocycleError::NotProjection { name: p.name().into(), deviation: f64::INFINITY, u: 0.0, v: 0.0 });
    }
    let sample_level = level.min(4);
    for sq in SquareStream::with_override(IfsPreset::CantorDust, sample_level)? {
        for vertex in sq.vertices() {
            let (u, v) = dust_image_f64(vertex);
            let e = p.eval(u, v);
            let idem = (&e * &e - &e).iter().map(|z| z.norm()).fold(0.0, f64::max);
            let herm = (&e - e.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
            let deviation = idem.max(herm);
            if deviation > PROJECTION_TOLERANCE {
                return Err(CocycleError::NotProjection { name: p.name().into(), deviation, u, v });
            }
        }
    }
    Ok(())
}

/// `(1/(2 pi i)) phi_n(p, p, p)` with the matrix trace inside the kernel.
pub fn pairing_n(
    preset: IfsPreset,
    level: u32,
    p: &Observable<CMatrix>,
    cfg: &EngineConfig,
) -> Result<Complex64, CocycleError> {
    check_projection(p, level)?;
    let phi = phi_n(preset, level, p, p, p, cfg)?;
    Ok(phi / (2.0 * PI * Complex64::i()))
}

/// `|phi_n(f, g, h) - phi_n(h, f, g)|`.
pub fn cyclicity_residual(
    preset: IfsPreset,
    level: u32,
    f: &Observable<Complex64>,
    g: &Observable<Complex64>,
    h: &Observable<Complex64>,
    cfg: &EngineConfig,
) -> Result<f64, CocycleError> {
    let a = phi_n(preset, level, f, g, h, cfg)?;
    let b = phi_n(preset, level, h, f, g, cfg)?;
    Ok((a - b).norm())
}

fn product(a: &Observable<Complex64>, b: &Observable<Complex64>) -> Result<Observable<Complex64>, CocycleError> {
    a.product(b).ok_or_else(|| CocycleError::ModeMismatch(a.name().into(), b.name().into()))
}

/// `|b phi_n (a0, a1, a2, a3)|` for the Hochschild coboundary
/// `phi(a0 a1, a2, a3) - phi(a0, a1 a2, a3) + phi(a0, a1, a2 a3) - phi(a3 a0, a1, a2)`.
pub fn hochschild_residual(
    preset: IfsPreset,
    level: u32,
    a: [&Observable<Complex64>; 4],
    cfg: &EngineConfig,
) -> Result<f64, CocycleError> {
    let [a0, a1, a2, a3] = a;
    let t1 = phi_n(preset, level, &product(a0, a1)?, a2, a3, cfg)?;
    let t2 = phi_n(preset, level, a0, &product(a1, a2)?, a3, cfg)?;
    let t3 = phi_n(preset, level, a0, a1, &product(a2, a3)?, cfg)?;
    let t4 = phi_n(preset, level, &product(a3, a0)?, a1, a2, cfg)?;
    Ok((t1 - t2 + t3 - t4).norm())
}

/// One row of a convergence table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CocycleReport {
    pub preset: String,
    pub functions: String,
    pub n: u32,
    pub squares: u64,
    pub phi_re: f64,
    pub phi_im: f64,
    pub target_re: Option<f64>,
    pub target_im: Option<f64>,
    pub abs_err: Option<f64>,
    pub err_ratio: Option<f64>,
    pub cyclicity_residual: Option<f64>,
    pub hochschild_residual: Option<f64>,
    pub wall_ms: f64,
}

/// Inputs for [`convergence_table`].
#[derive(Clone, Debug)]
pub struct ConvergenceSpec<'a> {
    pub preset: IfsPreset,
    pub label: String,
    pub functions: [&'a Observable<Complex64>; 3],
    pub levels: RangeInclusive<u32>,
    pub target: Option<Complex64>,
    pub cyclicity: bool,
    pub hochschild: Option<[&'a Observable<Complex64>; 4]>,
}

pub fn convergence_table(spec: &ConvergenceSpec<'_>, cfg: &EngineConfig) -> Result<Vec<CocycleReport>, CocycleError> {
    let [f, g, h] = spec.functions;
    let mut rows: Vec<CocycleReport> = Vec::new();
    for n in spec.levels.clone() {
        let start = Instant::now();
        let phi = phi_n(spec.preset, n, f, g, h, cfg)?;
        let cyclicity = if spec.cyclicity { Some(cyclicity_residual(spec.preset, n, f, g, h, cfg)?) } else { None };
        let hochschild = match spec.hochschild {
            Some(q) => Some(hochschild_residual(spec.preset, n, q, cfg)?),
            None => None,
        };
        let abs_err = spec.target.map(|t| (phi - t).norm());
        let err_ratio = match (abs_err, rows.last().and_then(|r| r.abs_err)) {
            (Some(e), Some(prev)) if prev > 0.0 => Some(e / prev),
            _ => None,
        };
        rows.push(CocycleReport {
            preset: spec.preset.name().to_string(),
            functions: spec.label.clone(),
            n,
            squares: spec.preset.square_count(n)?,
            phi_re: phi.re,
            phi_im: phi.im,
            target_re: spec.target.map(|t| t.re),
            target_im: spec.target.map(|t| t.im),
            abs_err,
            err_ratio,
            cyclicity_residual: cyclicity,
            hochschild_residual: hochschild,
            wall_ms: start.elapsed().as_secs_f64() * 1e3,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fredholm::kernel_trace_oracle;
    use crate::geometry::enumerate_squares;
    use crate::oracle::{bott_projection, trig};

    fn cfg() -> EngineConfig {
        EngineConfig::with_workers(1)
    }

    fn coords() -> [Observable<Complex64>; 3] {
        [Observable::constant(1.0), Observable::direct("x", |x, _| x), Observable::direct("y", |_, y| y)]
    }

    fn bott_flux() -> [Observable<Complex64>; 3] {
        [trig::COS_U_COS_V, trig::SIN_U, trig::SIN_V].map(Observable::pullback)
    }

    #[test]
    fn riemann_sum_closed_form() {
        let [f, g, h] = coords();
        for n in 0..=6 {
            let phi = phi_n(IfsPreset::CantorDust, n, &f, &g, &h, &cfg()).unwrap();
            let expected = 2.0 * (4.0f64 / 9.0).powi(n as i32);
            assert!((phi.re - expected).abs() <= 1e-12 * expected, "n={n}");
            assert_eq!(phi.im, 0.0);
        }
        let phi = phi_n(IfsPreset::CantorDust, 1, &f, &g, &h, &cfg()).unwrap();
        assert!((phi.re - 8.0 / 9.0).abs() < 1e-15);
        let phi = phi_n(IfsPreset::CantorDust, 2, &f, &g, &h, &cfg()).unwrap();
        assert!((phi.re - 32.0 / 81.0).abs() < 1e-15);
    }

    #[test]
    fn riemann_sum_matches_matrix_oracle() {
        let [f, g, h] = coords();
        for n in 0..=3 {
            let mut total = Complex64::new(0.0, 0.0);
            for sq in enumerate_squares(IfsPreset::CantorDust, n).unwrap() {
                let vals = |o: &Observable<Complex64>| VertexValues(sq.vertices().map(|p| o.at_vertex(p)));
                total += kernel_trace_oracle(&vals(&f), &vals(&g), &vals(&h)).unwrap();
            }
            let phi = phi_n(IfsPreset::CantorDust, n, &f, &g, &h, &cfg()).unwrap();
            assert!((phi - total).norm() < 1e-13);
        }
    }

    #[test]
    fn full_subdivision_is_plain_riemann_sum() {
        let [_, g, h] = coords();
        let f = Observable::direct("x+y", |x, y| x + y);
        for n in 1..=4 {
            let phi = phi_n(IfsPreset::FullSubdivision3, n, &f, &g, &h, &cfg()).unwrap();
            // Each square contributes e^2/2 * (sum of f at vertices); on the full
            // grid this is 2 * trapezoid(x + y) = 2 * 1 exactly.
            assert!((phi.re - 2.0).abs() < 1e-12, "n={n}: {phi}");
        }
    }

    #[test]
    fn constant_g_gives_zero() {
        let [f, _, h] = bott_flux();
        let g = Observable::constant(3.0);
        for n in 0..5 {
            assert_eq!(phi_n(IfsPreset::CantorDust, n, &f, &g, &h, &cfg()).unwrap(), Complex64::new(0.0, 0.0));
        }
    }

    #[test]
    fn pullback_matches_subdivision() {
        let [f, g, h] = bott_flux();
        for n in 1..=6 {
            let a = phi_n(IfsPreset::CantorDust, n, &f, &g, &h, &cfg()).unwrap();
            let b = phi_subdivision(n, &f, &g, &h, Boundary::Torus, &cfg()).unwrap();
            assert!((a - b).norm() <= 1e-12 * a.norm().max(1.0), "n={n}: {a} vs {b}");
        }
    }

    #[test]
    fn subdivision_of_coordinates() {
        let f = Observable::pullback_fn("1", |_, _| 1.0);
        let u = Observable::pullback_fn("u", |u, _| u);
        let v = Observable::pullback_fn("v", |_, v| v);
        for n in 0..=6 {
            let phi = phi_subdivision(n, &f, &u, &v, Boundary::Square, &cfg()).unwrap();
            assert!((phi.re - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn subdivision_requires_pullback() {
        let [f, g, h] = coords();
        assert!(matches!(phi_subdivision(2, &f, &g, &h, Boundary::Torus, &cfg()), Err(CocycleError::NotPullback(_))));
    }

    #[test]
    fn symmetric_slot_decays() {
        let [f, g, _] = bott_flux();
        let mut values = Vec::new();
        for n in 4..=8 {
            values.push(phi_subdivision(n, &f, &g, &g, Boundary::Torus, &cfg()).unwrap().norm());
        }
        // The limit is int f dg ^ dg = 0; fit C from the largest 2^n |phi_n|.
        let c = values.iter().enumerate().map(|(k, v)| v * 2f64.powi(4 + k as i32)).fold(0.0, f64::max);
        for (k, v) in values.iter().enumerate() {
            assert!(*v <= c * 2f64.powi(-(4 + k as i32)) + 1e-12);
        }
        assert!(values[4] < 1e-10 || values[4] < values[0]);
    }

    #[test]
    fn bott_flux_approaches_target() {
        let [f, g, h] = bott_flux();
        let target = 2.0 * PI * PI;
        let e8 = (phi_n(IfsPreset::CantorDust, 8, &f, &g, &h, &cfg()).unwrap().re - target).abs();
        let e9 = (phi_n(IfsPreset::CantorDust, 9, &f, &g, &h, &cfg()).unwrap().re - target).abs();
        assert!(e9 < e8);
        assert!(e9 < 1e-3);
    }

    #[test]
    fn trilinearity() {
        let [f, g, h] = bott_flux();
        let k = Observable::pullback(trig::COS_U_PLUS_SIN_V);
        let sum = Observable::pullback_fn("g+2k", move |u, v| {
            trig::SIN_U.eval(u, v) + 2.0 * trig::COS_U_PLUS_SIN_V.eval(u, v)
        });
        for n in [2, 5] {
            let lhs = phi_n(IfsPreset::CantorDust, n, &f, &sum, &h, &cfg()).unwrap();
            let rhs = phi_n(IfsPreset::CantorDust, n, &f, &g, &h, &cfg()).unwrap()
                + 2.0 * phi_n(IfsPreset::CantorDust, n, &f, &k, &h, &cfg()).unwrap();
            assert!((lhs - rhs).norm() < 1e-11);
        }
    }

    #[test]
    fn budget_guard() {
        let [f, g, h] = coords();
        let err = phi_n(IfsPreset::CantorDust, 13, &f, &g, &h, &cfg()).unwrap_err();
        assert_eq!(err, CocycleError::BudgetExceeded { level: 13, budget: 12 });
        let p = Observable::projection(bott_projection(1).unwrap());
        assert!(matches!(
            pairing_n(IfsPreset::CantorDust, 11, &p, &cfg()),
            Err(CocycleError::BudgetExceeded { budget: 10, .. })
        ));
    }

    #[test]
    fn pullback_needs_dust() {
        let [f, g, h] = bott_flux();
        assert_eq!(
            phi_n(IfsPreset::SierpinskiCarpet, 2, &f, &g, &h, &cfg()),
            Err(CocycleError::PullbackUnsupported(IfsPreset::SierpinskiCarpet))
        );
        let [a, b, c] = coords();
        assert!(phi_n(IfsPreset::SierpinskiCarpet, 2, &a, &b, &c, &cfg()).is_ok());
    }

    #[test]
    fn kind_mismatch() {
        let a = Observable::new("2x2", Mode::Pullback, ObservableClass::SmoothPullback, |_, _| CMatrix::identity(2, 2));
        let b = Observable::new("3x3", Mode::Pullback, ObservableClass::SmoothPullback, |_, _| CMatrix::identity(3, 3));
        assert_eq!(phi_n(IfsPreset::CantorDust, 1, &a, &b, &a, &cfg()), Err(CocycleError::KindMismatch(2, 3)));
    }

    #[test]
    fn lipschitz_coordinates() {
        let [f, g, h] = coords();
        for n in 1..=5 {
            let c = lipschitz_check(IfsPreset::CantorDust, n, &f, &g, &h, &cfg()).unwrap();
            assert!(c.holds);
            assert_eq!(c.sup_f, 1.0);
            assert!((c.lip_g - 1.0).abs() < 1e-12);
            assert!((c.bound - 8.0 * (4.0f64 / 9.0).powi(n as i32)).abs() < 1e-12);
        }
    }

    #[test]
    fn residuals_vanish_on_trivial_inputs() {
        let [f, _, h] = bott_flux();
        let one = Observable::pullback_fn("1", |_, _| 1.0);
        assert_eq!(cyclicity_residual(IfsPreset::CantorDust, 3, &f, &one, &h, &cfg()).unwrap(), 0.0);
        assert_eq!(cyclicity_residual(IfsPreset::CantorDust, 3, &f, &f, &f, &cfg()).unwrap(), 0.0);
        let g = Observable::pullback(trig::SIN_U);
        let r = hochschild_residual(IfsPreset::CantorDust, 4, [&f, &one, &g, &h], &cfg()).unwrap();
        assert!(r < 1e-12);
    }

    #[test]
    fn hochschild_mode_mismatch() {
        let [f, g, h] = bott_flux();
        let x = Observable::direct("x", |x, _| x);
        assert!(matches!(
            hochschild_residual(IfsPreset::CantorDust, 2, [&f, &x, &g, &h], &cfg()),
            Err(CocycleError::ModeMismatch(_, _))
        ));
    }

    #[test]
    fn pairing_of_constant_projection() {
        let p = Observable::new("diag(1,0)", Mode::Pullback, ObservableClass::MatrixProjection, |_, _| {
            let mut m = CMatrix::zeros(2, 2);
            m[(0, 0)] = Complex64::new(1.0, 0.0);
            m
        });
        for n in 0..5 {
            assert_eq!(pairing_n(IfsPreset::CantorDust, n, &p, &cfg()).unwrap().norm(), 0.0);
        }
    }

    #[test]
    fn pairing_rejects_non_projection() {
        let q = Observable::new("2I", Mode::Pullback, ObservableClass::MatrixProjection, |_, _| {
            CMatrix::identity(2, 2) * Complex64::new(2.0, 0.0)
        });
        assert!(matches!(pairing_n(IfsPreset::CantorDust, 2, &q, &cfg()), Err(CocycleError::NotProjection { .. })));
        let untagged =
            Observable::new("I", Mode::Pullback, ObservableClass::SmoothPullback, |_, _| CMatrix::identity(2, 2));
        assert!(matches!(
            pairing_n(IfsPreset::CantorDust, 2, &untagged, &cfg()),
            Err(CocycleError::NotProjection { .. })
        ));
    }

    #[test]
    fn pairing_degree_one_tends_to_two() {
        let p = Observable::projection(bott_projection(1).unwrap());
        let a = pairing_n(IfsPreset::CantorDust, 7, &p, &cfg()).unwrap();
        let b = pairing_n(IfsPreset::CantorDust, 8, &p, &cfg()).unwrap();
        assert!((b.re - 2.0).abs() < (a.re - 2.0).abs());
        assert!((b.re - 2.0).abs() < 0.01, "{b}");
        assert!(b.im.abs() < 1e-9);
    }

    #[test]
    fn table_for_coordinates() {
        let [f, g, h] = coords();
        let spec = ConvergenceSpec {
            preset: IfsPreset::CantorDust,
            label: "coords".into(),
            functions: [&f, &g, &h],
            levels: 1..=6,
            target: Some(Complex64::new(0.0, 0.0)),
            cyclicity: false,
            hochschild: None,
        };
        let rows = convergence_table(&spec, &cfg()).unwrap();
        assert_eq!(rows.len(), 6);
        for r in &rows {
            let expected = 2.0 * (4.0f64 / 9.0).powi(r.n as i32);
            assert!((r.abs_err.unwrap() - expected).abs() <= 1e-12 * expected);
            assert_eq!(r.squares, 4u64.pow(r.n));
        }
        assert_eq!(rows[0].err_ratio, None);
        for r in &rows[1..] {
            assert!((r.err_ratio.unwrap() - 4.0 / 9.0).abs() < 1e-12);
        }
        #[allow(clippy::reversed_empty_ranges)]
        let empty = ConvergenceSpec { levels: 3..=2, ..spec };
        assert!(convergence_table(&empty, &cfg()).unwrap().is_empty());
    }

    #[test]
    fn determinism_across_workers() {
        let [f, g, h] = bott_flux();
        let one = phi_n(IfsPreset::CantorDust, 8, &f, &g, &h, &EngineConfig::with_workers(1)).unwrap();
        for w in [2, 4] {
            let many = phi_n(IfsPreset::CantorDust, 8, &f, &g, &h, &EngineConfig::with_workers(w)).unwrap();
            assert_eq!(one.re.to_bits(), many.re.to_bits());
            assert_eq!(one.im.to_bits(), many.im.to_bits());
        }
    }
}

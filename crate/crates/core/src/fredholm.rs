//! The four-dimensional Fredholm module attached to a single square.
//!
//! Vertices are numbered counter-clockwise from the bottom-left corner
//! (`v0` bottom-left, `v1` bottom-right, `v2` top-right, `v3` top-left).
//! The Hilbert space is `l2(v0) + l2(v2)` (even part) followed by
//! `l2(v1) + l2(v3)` (odd part), so every 4x4 operator in this module is
//! written in the basis order `(v0, v2, v1, v3)`.
//!
//! Two evaluation routes for the per-square trace `Tr(f [F,g] [F,h] M)` live
//! here: [`kernel_trace`] uses the closed form in vertex differences and is
//! what the engine calls, [`kernel_trace_oracle`] assembles the operators
//! explicitly and multiplies them.

use nalgebra::{DMatrix, Matrix2, Matrix4};
use num_complex::Complex64;
use std::fmt;
use thiserror::Error;

/// Dense complex matrix used for matrix-valued observables and the oracle.
pub type CMatrix = DMatrix<Complex64>;

/// Position in the operator basis -> vertex number.
pub const BASIS_ORDER: [usize; 4] = [0, 2, 1, 3];

/// `sqrt(2) * F` in the basis `(v0, v2, v1, v3)`; all entries are 0 or +-1.
pub const F_SCALED: [[i64; 4]; 4] = [[0, 0, 1, 1], [0, 0, -1, 1], [1, -1, 0, 0], [1, 1, 0, 0]];

pub const GRADING: [i64; 4] = [1, 1, -1, -1];

pub const M_INT: [[i64; 4]; 4] = [[0, 1, 0, 0], [-1, 0, 0, 0], [0, 0, 0, 1], [0, 0, -1, 0]];

pub const N_INT: [[i64; 2]; 2] = [[0, 1], [-1, 0]];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FredholmError {
    #[error("vertex values mix scalar and matrix entries")]
    MixedKind,
    #[error("matrix dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("matrix entries must be square, found {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
}

/// Ring element that can sit at a vertex: a complex scalar or a square
/// complex matrix.
pub trait Entry: Clone + Send + Sync + 'static {
    fn sub(&self, rhs: &Self) -> Self;
    fn add(&self, rhs: &Self) -> Self;
    fn mul(&self, rhs: &Self) -> Self;
    fn trace(&self) -> Complex64;
    /// Matrix size (1 for scalars).
    fn dim(&self) -> usize;
    fn to_block(&self) -> CMatrix;
    /// Hermitian adjoint.
    fn adjoint(&self) -> Self;
    fn max_abs(&self) -> f64;

    /// `Tr(f [F,g] [F,h] M)` on one square, without dimension checks.
    fn kernel(f: &VertexValues<Self>, g: &VertexValues<Self>, h: &VertexValues<Self>) -> Complex64 {
        kernel_generic(f, g, h)
    }
}

impl Entry for Complex64 {
    fn sub(&self, rhs: &Self) -> Self {
        self - rhs
    }
    fn add(&self, rhs: &Self) -> Self {
        self + rhs
    }
    fn mul(&self, rhs: &Self) -> Self {
        self * rhs
    }
    fn trace(&self) -> Complex64 {
        *self
    }
    fn dim(&self) -> usize {
        1
    }
    fn to_block(&self) -> CMatrix {
        CMatrix::from_element(1, 1, *self)
    }
    fn adjoint(&self) -> Self {
        self.conj()
    }
    fn max_abs(&self) -> f64 {
        self.norm()
    }

    #[inline]
    fn kernel(f: &VertexValues<Self>, g: &VertexValues<Self>, h: &VertexValues<Self>) -> Complex64 {
        let [f0, f1, f2, f3] = f.0;
        let [g0, g1, g2, g3] = g.0;
        let [h0, h1, h2, h3] = h.0;
        let twice = f0 * ((g1 - g0) * (h2 - h1) - (g3 - g0) * (h2 - h3))
            + f2 * ((g3 - g2) * (h0 - h3) - (g1 - g2) * (h0 - h1))
            - f1 * ((g0 - g1) * (h3 - h0) - (g2 - g1) * (h3 - h2))
            - f3 * ((g2 - g3) * (h1 - h2) - (g0 - g3) * (h1 - h0));
        twice * 0.5
    }
}

impl Entry for CMatrix {
    fn sub(&self, rhs: &Self) -> Self {
        self - rhs
    }
    fn add(&self, rhs: &Self) -> Self {
        self + rhs
    }
    fn mul(&self, rhs: &Self) -> Self {
        self * rhs
    }
    fn trace(&self) -> Complex64 {
        CMatrix::trace(self)
    }
    fn dim(&self) -> usize {
        self.nrows()
    }
    fn to_block(&self) -> CMatrix {
        self.clone()
    }
    fn adjoint(&self) -> Self {
        CMatrix::adjoint(self)
    }
    fn max_abs(&self) -> f64 {
        self.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

/// The values of one function at the vertices `v0..v3` of a square,
/// indexed by vertex number.
#[derive(Clone, Debug, PartialEq)]
pub struct VertexValues<T>(pub [T; 4]);

impl<T: Entry> VertexValues<T> {
    /// Checks that every entry is square and has the same size.
    pub fn try_new(values: [T; 4]) -> Result<Self, FredholmError> {
        let expected = values[0].dim();
        for v in &values {
            let block = v.to_block();
            if block.nrows() != block.ncols() {
                return Err(FredholmError::NotSquare { rows: block.nrows(), cols: block.ncols() });
            }
            if v.dim() != expected {
                return Err(FredholmError::DimensionMismatch { expected, found: v.dim() });
            }
        }
        Ok(Self(values))
    }

    pub fn dim(&self) -> usize {
        self.0[0].dim()
    }

    /// `f_{i,j} = f(j) - f(i)`.
    pub fn diff(&self, i: usize, j: usize) -> T {
        self.0[j].sub(&self.0[i])
    }

    pub fn map<U>(&self, mut op: impl FnMut(&T) -> U) -> VertexValues<U> {
        VertexValues([op(&self.0[0]), op(&self.0[1]), op(&self.0[2]), op(&self.0[3])])
    }
}

impl VertexValues<Complex64> {
    pub fn real(values: [f64; 4]) -> Self {
        Self(values.map(|x| Complex64::new(x, 0.0)))
    }
}

/// A vertex value whose kind is only known at run time.
#[derive(Clone, Debug, PartialEq)]
pub enum Value {
    Scalar(Complex64),
    Matrix(CMatrix),
}

/// Vertex values after kind resolution.
#[derive(Clone, Debug, PartialEq)]
pub enum AnyVertexValues {
    Scalar(VertexValues<Complex64>),
    Matrix(VertexValues<CMatrix>),
}

impl AnyVertexValues {
    pub fn from_values(values: [Value; 4]) -> Result<Self, FredholmError> {
        if values.iter().all(|v| matches!(v, Value::Scalar(_))) {
            Ok(Self::Scalar(VertexValues(values.map(|v| match v {
                Value::Scalar(z) => z,
                Value::Matrix(_) => unreachable!(),
            }))))
        } else if values.iter().all(|v| matches!(v, Value::Matrix(_))) {
            let mats = values.map(|v| match v {
                Value::Matrix(m) => m,
                Value::Scalar(_) => unreachable!(),
            });
            Ok(Self::Matrix(VertexValues::try_new(mats)?))
        } else {
            Err(FredholmError::MixedKind)
        }
    }

    pub fn build_rho(&self) -> CMatrix {
        match self {
            Self::Scalar(v) => build_rho(v),
            Self::Matrix(v) => build_rho(v),
        }
    }
}

fn to_complex4(m: &[[i64; 4]; 4], scale: f64) -> Matrix4<Complex64> {
    Matrix4::from_fn(|i, j| Complex64::new(m[i][j] as f64 * scale, 0.0))
}

/// Floating-point copies of the fixed operators.
#[derive(Clone, Debug, PartialEq)]
pub struct FredholmConstants {
    pub f: Matrix4<Complex64>,
    pub epsilon: Matrix4<Complex64>,
    pub m: Matrix4<Complex64>,
    pub n: Matrix2<Complex64>,
}

impl Default for FredholmConstants {
    fn default() -> Self {
        let mut epsilon = Matrix4::zeros();
        for (i, s) in GRADING.iter().enumerate() {
            epsilon[(i, i)] = Complex64::new(*s as f64, 0.0);
        }
        Self {
            f: to_complex4(&F_SCALED, std::f64::consts::FRAC_1_SQRT_2),
            epsilon,
            m: to_complex4(&M_INT, 1.0),
            n: Matrix2::from_fn(|i, j| Complex64::new(N_INT[i][j] as f64, 0.0)),
        }
    }
}

fn kron_identity(op: &Matrix4<Complex64>, n: usize) -> CMatrix {
    let mut out = CMatrix::zeros(4 * n, 4 * n);
    for a in 0..4 {
        for b in 0..4 {
            let z = op[(a, b)];
            if z != Complex64::new(0.0, 0.0) {
                for k in 0..n {
                    out[(a * n + k, b * n + k)] = z;
                }
            }
        }
    }
    out
}

/// `rho(f)`: block diagonal with `f(v0), f(v2), f(v1), f(v3)`.
pub fn build_rho<T: Entry>(f: &VertexValues<T>) -> CMatrix {
    let n = f.dim();
    let mut out = CMatrix::zeros(4 * n, 4 * n);
    for (pos, &vertex) in BASIS_ORDER.iter().enumerate() {
        out.view_mut((pos * n, pos * n), (n, n)).copy_from(&f.0[vertex].to_block());
    }
    out
}

/// `[F, rho(f)]` with `F` tensored with the identity in matrix mode.
pub fn commutator<T: Entry>(f: &VertexValues<T>) -> CMatrix {
    let consts = FredholmConstants::default();
    let big_f = kron_identity(&consts.f, f.dim());
    let rho = build_rho(f);
    &big_f * &rho - &rho * &big_f
}

fn check_same_dim<T: Entry>(
    f: &VertexValues<T>,
    g: &VertexValues<T>,
    h: &VertexValues<T>,
) -> Result<(), FredholmError> {
    for v in [f, g, h] {
        VertexValues::try_new(v.0.clone())?;
    }
    let expected = f.dim();
    for v in [g, h] {
        if v.dim() != expected {
            return Err(FredholmError::DimensionMismatch { expected, found: v.dim() });
        }
    }
    Ok(())
}

fn kernel_generic<T: Entry>(f: &VertexValues<T>, g: &VertexValues<T>, h: &VertexValues<T>) -> Complex64 {
    // One bracket per vertex, products kept in the order f * dg * dh.
    let term = |a: usize, b: usize, c: usize, d: usize, e: usize| {
        // g_{a,b} h_{b,c} - g_{a,d} h_{d,e}
        g.diff(a, b).mul(&h.diff(b, c)).sub(&g.diff(a, d).mul(&h.diff(d, e)))
    };
    let s0 = f.0[0].mul(&term(0, 1, 2, 3, 2));
    let s2 = f.0[2].mul(&term(2, 3, 0, 1, 0));
    let s1 = f.0[1].mul(&term(1, 0, 3, 2, 3));
    let s3 = f.0[3].mul(&term(3, 2, 1, 0, 1));
    (s0.trace() + s2.trace() - s1.trace() - s3.trace()) * 0.5
}

/// Closed-form `Tr(f [F,g] [F,h] M)` for one square.
pub fn kernel_trace<T: Entry>(
    f: &VertexValues<T>,
    g: &VertexValues<T>,
    h: &VertexValues<T>,
) -> Result<Complex64, FredholmError> {
    check_same_dim(f, g, h)?;
    Ok(T::kernel(f, g, h))
}

/// The same trace computed by forming every operator explicitly.
pub fn kernel_trace_oracle<T: Entry>(
    f: &VertexValues<T>,
    g: &VertexValues<T>,
    h: &VertexValues<T>,
) -> Result<Complex64, FredholmError> {
    check_same_dim(f, g, h)?;
    let consts = FredholmConstants::default();
    let big_m = kron_identity(&consts.m, f.dim());
    let product = build_rho(f) * commutator(g) * commutator(h) * big_m;
    Ok(product.trace())
}

type IntMat = [[i64; 4]; 4];

fn int_mul(a: &IntMat, b: &IntMat) -> IntMat {
    let mut out = [[0i64; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            out[i][j] = (0..4).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    out
}

fn int_combine(a: &IntMat, b: &IntMat, wa: i64, wb: i64) -> IntMat {
    let mut out = [[0i64; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            out[i][j] = wa * a[i][j] + wb * b[i][j];
        }
    }
    out
}

fn int_max_abs(a: &IntMat) -> i64 {
    a.iter().flatten().map(|x| x.abs()).max().unwrap_or(0)
}

fn int_diag(d: [i64; 4]) -> IntMat {
    let mut out = [[0i64; 4]; 4];
    for i in 0..4 {
        out[i][i] = d[i];
    }
    out
}

fn gcd(a: i128, b: i128) -> i128 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

/// One identity of the fixed operators and its max-abs deviation.
#[derive(Clone, Debug, PartialEq)]
pub struct IdentityCheck {
    pub identity: String,
    pub deviation: f64,
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct ConstantsReport {
    pub checks: Vec<IdentityCheck>,
}

#[derive(Clone, Debug, PartialEq, Error)]
#[error("identity `{identity}` violated, max deviation {deviation}")]
pub struct ConstantsViolation {
    pub identity: String,
    pub deviation: f64,
}

impl fmt::Display for ConstantsReport {
    fn fmt(&self, out: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(out, "{:<40} deviation {:e}", c.identity, c.deviation)?;
        }
        Ok(())
    }
}

/// Verifies the module identities in exact integer arithmetic for the
/// standard `F`.
pub fn check_constants() -> Result<ConstantsReport, ConstantsViolation> {
    check_constants_for(&F_SCALED)
}

/// Same as [`check_constants`] for an arbitrary `sqrt(2) * F` with integer
/// entries.
pub fn check_constants_for(f_scaled: &IntMat) -> Result<ConstantsReport, ConstantsViolation> {
    let mut report = ConstantsReport::default();
    let mut record = |identity: String, deviation: f64| {
        if deviation != 0.0 {
            return Err(ConstantsViolation { identity, deviation });
        }
        report.checks.push(IdentityCheck { identity, deviation });
        Ok(())
    };

    let mut transpose = [[0i64; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            transpose[i][j] = f_scaled[j][i];
        }
    }
    let dev = int_max_abs(&int_combine(f_scaled, &transpose, 1, -1)) as f64 * std::f64::consts::FRAC_1_SQRT_2;
    record("F = F*".into(), dev)?;

    let identity = int_diag([1; 4]);
    let square = int_mul(f_scaled, f_scaled);
    let dev = int_max_abs(&int_combine(&square, &identity, 1, -2)) as f64 / 2.0;
    record("F^2 = I".into(), dev)?;

    let eps = int_diag(GRADING);
    let anti = int_combine(&int_mul(f_scaled, &eps), &int_mul(&eps, f_scaled), 1, 1);
    let dev = int_max_abs(&anti) as f64 * std::f64::consts::FRAC_1_SQRT_2;
    record("F eps + eps F = 0".into(), dev)?;

    let mut n_sum = [[0i64; 4]; 4];
    for i in 0..2 {
        for j in 0..2 {
            n_sum[i][j] = N_INT[i][j];
            n_sum[i + 2][j + 2] = N_INT[i][j];
        }
    }
    record("M = N + N".into(), int_max_abs(&int_combine(&M_INT, &n_sum, 1, -1)) as f64)?;

    for level in 0u32..3 {
        // Last Cantor dust square at this level: corner (3^k - 1, 3^k - 1) over 3^k.
        let denom = 3i64.pow(level);
        let c = denom - 1;
        let xs = [c, c + 1, c + 1, c];
        let ys = [c, c, c + 1, c + 1];
        let rho = |vals: [i64; 4]| int_diag(BASIS_ORDER.map(|v| vals[v]));
        let comm = |vals: [i64; 4]| {
            let r = rho(vals);
            int_combine(&int_mul(f_scaled, &r), &int_mul(&r, f_scaled), 1, -1)
        };
        // [F,x][F,y] = (1/2) (1/denom^2) [F~,X][F~,Y] with integer numerators X, Y;
        // the prefactor -2/e^2 = -2 denom^2.
        let raw = int_mul(&comm(xs), &comm(ys));
        let num: i128 = -2 * (denom as i128).pow(2);
        let den: i128 = 2 * (denom as i128).pow(2);
        let g = gcd(num, den);
        let (num, den) = (num / g, den / g);
        let mut worst = 0f64;
        for i in 0..4 {
            for j in 0..4 {
                let lhs = M_INT[i][j] as i128 * den;
                let rhs = raw[i][j] as i128 * num;
                worst = worst.max(((lhs - rhs).abs() as f64) / den as f64);
            }
        }
        record(format!("M = -(2/e^2)[F,x][F,y], e = 1/{denom}"), worst)?;
    }
    Ok(report)
}

//! Functions on the Cantor dust as the cocycle engine sees them.

use crate::fredholm::{CMatrix, Entry};
use crate::geometry::TriadicPoint;
use crate::oracle::{ProjectionField, SmoothFn};
use num_complex::Complex64;
use std::fmt;
use std::sync::Arc;

/// Where an observable is evaluated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Mode {
    /// At the torus image `(c(x), c(y))` of the vertex.
    Pullback,
    /// At the vertex coordinates themselves.
    Direct,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ObservableClass {
    SmoothPullback,
    LipschitzDirect,
    MatrixProjection,
}

type EvalFn<T> = Arc<dyn Fn(f64, f64) -> T + Send + Sync>;

/// A scalar- or matrix-valued function with an evaluation rule.
#[derive(Clone)]
pub struct Observable<T> {
    name: String,
    mode: Mode,
    class: ObservableClass,
    eval: EvalFn<T>,
}

impl<T> fmt::Debug for Observable<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Observable")
            .field("name", &self.name)
            .field("mode", &self.mode)
            .field("class", &self.class)
            .finish()
    }
}

impl<T: Entry> Observable<T> {
    pub fn new(
        name: impl Into<String>,
        mode: Mode,
        class: ObservableClass,
        eval: impl Fn(f64, f64) -> T + Send + Sync + 'static,
    ) -> Self {
        Self { name: name.into(), mode, class, eval: Arc::new(eval) }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn class(&self) -> ObservableClass {
        self.class
    }

    /// Value at a point already expressed in this observable's coordinates.
    #[inline]
    pub fn eval(&self, x: f64, y: f64) -> T {
        (self.eval)(x, y)
    }

    /// Value at a vertex given both its plane and torus coordinates.
    #[inline]
    pub fn at(&self, plane: (f64, f64), torus: (f64, f64)) -> T {
        match self.mode {
            Mode::Direct => self.eval(plane.0, plane.1),
            Mode::Pullback => self.eval(torus.0, torus.1),
        }
    }

    /// Value at an exact vertex.
    pub fn at_vertex(&self, p: TriadicPoint) -> T {
        match self.mode {
            Mode::Direct => {
                let (x, y) = p.to_f64();
                self.eval(x, y)
            }
            Mode::Pullback => {
                let (u, v) = crate::cantor::dust_image_f64(p);
                self.eval(u, v)
            }
        }
    }

    /// The same function evaluated under another mode.
    pub fn with_mode(&self, mode: Mode) -> Self {
        let class = match (mode, self.class) {
            (_, ObservableClass::MatrixProjection) => ObservableClass::MatrixProjection,
            (Mode::Direct, _) => ObservableClass::LipschitzDirect,
            (Mode::Pullback, _) => ObservableClass::SmoothPullback,
        };
        Self { name: self.name.clone(), mode, class, eval: self.eval.clone() }
    }

    /// Pointwise product; `None` if the modes differ.
    pub fn product(&self, other: &Self) -> Option<Self> {
        if self.mode != other.mode {
            return None;
        }
        let (a, b) = (self.eval.clone(), other.eval.clone());
        let class = if self.class == other.class { self.class } else { ObservableClass::SmoothPullback };
        Some(Self {
            name: format!("({})*({})", self.name, other.name),
            mode: self.mode,
            class,
            eval: Arc::new(move |x, y| a(x, y).mul(&b(x, y))),
        })
    }
}

impl Observable<Complex64> {
    /// The constant function; evaluation mode is irrelevant.
    pub fn constant(value: f64) -> Self {
        Self::new(format!("{value}"), Mode::Direct, ObservableClass::LipschitzDirect, move |_, _| {
            Complex64::new(value, 0.0)
        })
    }

    /// `c*(f)` for a torus function.
    pub fn pullback(f: SmoothFn) -> Self {
        Self::new(f.name, Mode::Pullback, ObservableClass::SmoothPullback, move |u, v| {
            Complex64::new(f.eval(u, v), 0.0)
        })
    }

    /// A real function of the plane coordinates, evaluated directly on the dust.
    pub fn direct(name: impl Into<String>, f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        Self::new(name, Mode::Direct, ObservableClass::LipschitzDirect, move |x, y| Complex64::new(f(x, y), 0.0))
    }

    /// A real torus function given as a closure, pulled back through `c`.
    pub fn pullback_fn(name: impl Into<String>, f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        Self::new(name, Mode::Pullback, ObservableClass::SmoothPullback, move |u, v| Complex64::new(f(u, v), 0.0))
    }
}

impl Observable<CMatrix> {
    /// `e o c` for a projection field.
    pub fn projection(field: ProjectionField) -> Self {
        Self::new(
            format!("bott(degree {})", field.degree),
            Mode::Pullback,
            ObservableClass::MatrixProjection,
            move |u, v| {
                let m = field.eval(u, v);
                CMatrix::from_iterator(2, 2, m.iter().copied())
            },
        )
    }
}

//! Property tests for the trace kernel, the Cantor map and the engine.

use dustcycle::cantor::{cantor_dyadic, cantor_level};
use dustcycle::cocycle::{phi_n, EngineConfig};
use dustcycle::fredholm::{kernel_trace, kernel_trace_oracle, CMatrix, VertexValues};
use dustcycle::geometry::IfsPreset;
use dustcycle::observable::Observable;
use num_complex::Complex64;
use proptest::prelude::*;

fn complex() -> impl Strategy<Value = Complex64> {
    (-10.0..10.0f64, -10.0..10.0f64).prop_map(|(re, im)| Complex64::new(re, im))
}

fn scalar_values() -> impl Strategy<Value = VertexValues<Complex64>> {
    proptest::array::uniform4(complex()).prop_map(VertexValues)
}

fn matrix() -> impl Strategy<Value = CMatrix> {
    proptest::array::uniform4(complex()).prop_map(|e| CMatrix::from_row_slice(2, 2, &e))
}

fn matrix_values() -> impl Strategy<Value = VertexValues<CMatrix>> {
    proptest::array::uniform4(matrix()).prop_map(VertexValues)
}

fn combine(a: &VertexValues<Complex64>, s: Complex64, b: &VertexValues<Complex64>) -> VertexValues<Complex64> {
    VertexValues([0, 1, 2, 3].map(|i| a.0[i] + s * b.0[i]))
}

proptest! {
    #[test]
    fn scalar_kernel_matches_oracle(f in scalar_values(), g in scalar_values(), h in scalar_values()) {
        let fast = kernel_trace(&f, &g, &h).unwrap();
        let slow = kernel_trace_oracle(&f, &g, &h).unwrap();
        prop_assert!((fast - slow).norm() <= 1e-10 * (1.0 + slow.norm()));
    }

    #[test]
    fn matrix_kernel_matches_oracle(f in matrix_values(), g in matrix_values(), h in matrix_values()) {
        let fast = kernel_trace(&f, &g, &h).unwrap();
        let slow = kernel_trace_oracle(&f, &g, &h).unwrap();
        prop_assert!((fast - slow).norm() <= 1e-10 * (1.0 + slow.norm()));
    }

    #[test]
    fn kernel_is_trilinear(
        f in scalar_values(), g in scalar_values(), h in scalar_values(),
        k in scalar_values(), s in complex(),
    ) {
        let tol = 1e-9;
        let lhs = kernel_trace(&combine(&f, s, &k), &g, &h).unwrap();
        let rhs = kernel_trace(&f, &g, &h).unwrap() + s * kernel_trace(&k, &g, &h).unwrap();
        prop_assert!((lhs - rhs).norm() <= tol * (1.0 + rhs.norm()));
        let lhs = kernel_trace(&f, &combine(&g, s, &k), &h).unwrap();
        let rhs = kernel_trace(&f, &g, &h).unwrap() + s * kernel_trace(&f, &k, &h).unwrap();
        prop_assert!((lhs - rhs).norm() <= tol * (1.0 + rhs.norm()));
        let lhs = kernel_trace(&f, &g, &combine(&h, s, &k)).unwrap();
        let rhs = kernel_trace(&f, &g, &h).unwrap() + s * kernel_trace(&f, &g, &k).unwrap();
        prop_assert!((lhs - rhs).norm() <= tol * (1.0 + rhs.norm()));
    }

    #[test]
    fn kernel_kills_constants_in_derivative_slots(f in scalar_values(), g in scalar_values(), c in complex()) {
        let konst = VertexValues([c; 4]);
        prop_assert_eq!(kernel_trace(&f, &konst, &g).unwrap(), Complex64::new(0.0, 0.0));
        prop_assert_eq!(kernel_trace(&f, &g, &konst).unwrap(), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn cantor_exact_agrees_with_recursion(level in 0u32..12, seed in any::<u64>()) {
        let p = seed % (3u64.pow(level) + 1);
        let exact = cantor_dyadic(p, level).unwrap().to_f64();
        let x = p as f64 / 3f64.powi(level as i32);
        let rec = cantor_level(x, level + 2).unwrap();
        prop_assert!((exact - rec).abs() < 1e-12, "p={p} level={level}: {exact} vs {rec}");
    }

    #[test]
    fn cantor_is_monotone(level in 1u32..14, seed in any::<u64>()) {
        let top = 3u64.pow(level);
        let p = seed % top;
        let a = cantor_dyadic(p, level).unwrap().to_f64();
        let b = cantor_dyadic(p + 1, level).unwrap().to_f64();
        prop_assert!(a <= b);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn phi_is_bit_identical_across_workers(level in 1u32..7, workers in 2usize..6, a in -3.0..3.0f64) {
        let f = Observable::pullback_fn("cos", move |u, v| (a * u).cos() + v);
        let g = Observable::pullback_fn("sin", move |u, v| (u + a * v).sin());
        let h = Observable::direct("x y", |x, y| x * y);
        let one = phi_n(IfsPreset::CantorDust, level, &f, &g, &h, &EngineConfig::with_workers(1)).unwrap();
        let many = phi_n(IfsPreset::CantorDust, level, &f, &g, &h, &EngineConfig::with_workers(workers)).unwrap();
        prop_assert_eq!(one.re.to_bits(), many.re.to_bits());
        prop_assert_eq!(one.im.to_bits(), many.im.to_bits());
    }
}

//! Independent real-space checks of the truncated-stable symbol and of `L^alpha` applied spectrally.

use std::f64::consts::PI;

use fracdrift_core::field::{Grid, ScalarField};
use fracdrift_core::levy::{apply_operator, symbol_for, truncated_stable_symbol, LevySpec};

/// Composite Simpson rule on `[a, b]` with `m` (even) panels.
fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, m: usize) -> f64 {
    let h = (b - a) / m as f64;
    let mut s = f(a) + f(b);
    for k in 1..m {
        s += f(a + k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

/// `int_0^inf rho pi(rho) g(rho) drho` where `g(rho) ~ g2 rho^2` below `rho0`.
/// The core `(rho0, 1]` is integrated in `t = ln rho`, the tail on `[1, 46]`.
fn radial(spec: &LevySpec, g: impl Fn(f64) -> f64, g2: f64) -> f64 {
    let rho0: f64 = 1e-4;
    let head = spec.cbar1 * g2 * rho0.powf(2.0 - spec.alpha) / (2.0 - spec.alpha);
    let core = simpson(|t| {
        let rho = t.exp();
        rho * rho * spec.kernel(rho) * g(rho)
    }, rho0.ln(), 0.0, 8000);
    let tail = simpson(|rho| rho * spec.kernel(rho) * g(rho), 1.0, 46.0, 40_000);
    head + core + tail
}

/// Trapezoid rule over the circle, exact for trigonometric polynomials of degree `< m`.
fn circle(f: impl Fn(f64) -> f64, m: usize) -> f64 {
    let h = 2.0 * PI / m as f64;
    (0..m).map(|k| f(k as f64 * h)).sum::<f64>() * h
}

#[test]
fn symbol_matches_dense_polar_quadrature() {
    let spec = LevySpec::truncated_stable(1.2, 0.5, 1.0, 1.0);
    for k in [1.0, 2f64.sqrt(), 2.0, 3.0] {
        // u = k rho <= 138, so 256 angles resolve cos(u cos phi)
        let g = |rho: f64| circle(|phi| 1.0 - (k * rho * phi.cos()).cos(), 256);
        let oracle = radial(&spec, g, PI * k * k / 2.0);
        let (value, _) = truncated_stable_symbol(&spec, k, 1e-10);
        let rel = (value - oracle).abs() / oracle;
        assert!(rel < 1e-6, "k = {k}: symbol {value} vs polar {oracle} (rel {rel:e})");
    }
}

#[test]
fn spectral_operator_matches_principal_value_integral() {
    let spec = LevySpec::truncated_stable(0.8, 0.3, 1.5, 2.0);
    let grid = Grid::standard(32).unwrap();
    // trigonometric polynomial evaluated in closed form away from the grid
    let modes = [(1.0, 0.0, 0.7, 0.0), (1.0, 2.0, -0.4, 0.3), (3.0, -1.0, 0.2, 1.1)];
    let f = |x: f64, y: f64| modes.iter().map(|&(m1, m2, c, ph)| c * (m1 * x + m2 * y + ph).cos()).sum::<f64>();
    let lap = |x: f64, y: f64| modes.iter().map(|&(m1, m2, c, ph)| -(m1 * m1 + m2 * m2) * c * (m1 * x + m2 * y + ph).cos()).sum::<f64>();
    let field = ScalarField::from_fn(grid, f);
    let lf = apply_operator(&symbol_for(&spec, &grid).unwrap(), &field).unwrap();
    for (i, j) in [(0usize, 0usize), (5, 17), (20, 9), (31, 31)] {
        let (x, y) = (grid.coord(i), grid.coord(j));
        // f(x) - f(x + rho e) averaged over directions; -rho^2 lap/4 near zero
        let g = |rho: f64| circle(|phi| f(x, y) - f(x + rho * phi.cos(), y + rho * phi.sin()), 256);
        let oracle = radial(&spec, g, -PI * lap(x, y) / 2.0);
        let got = lf.at(i, j);
        assert!((got - oracle).abs() < 1e-6 * (1.0 + oracle.abs()), "({i},{j}): spectral {got} vs real-space {oracle}");
    }
}

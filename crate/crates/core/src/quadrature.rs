//! Globally adaptive Gauss-Kronrod (7/15) quadrature.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728_0,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
}

fn rule(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = fc * WGK[7];
    let mut g = fc * WG[3];
    for i in 0..7 {
        let x = h * XGK[i];
        let s = f(c - x) + f(c + x);
        k += WGK[i] * s;
        if i % 2 == 1 {
            g += WG[i / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

struct Piece {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Piece {
    fn eq(&self, o: &Self) -> bool {
        self.error == o.error
    }
}
impl Eq for Piece {}
impl PartialOrd for Piece {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Piece {
    fn cmp(&self, o: &Self) -> Ordering {
        self.error.total_cmp(&o.error)
    }
}

/// Integrates `f` over `[a, b]` to absolute tolerance `tol`, starting from
/// `initial` equal panels and bisecting the worst panel at most `max_panels` times.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64, initial: usize, max_panels: usize) -> QuadResult {
    if a == b {
        return QuadResult { value: 0.0, error: 0.0 };
    }
    let mut heap = BinaryHeap::new();
    let m = initial.max(1);
    let w = (b - a) / m as f64;
    for i in 0..m {
        let (lo, hi) = (a + w * i as f64, a + w * (i + 1) as f64);
        let (value, error) = rule(&f, lo, hi);
        heap.push(Piece { a: lo, b: hi, value, error });
    }
    let mut total_err: f64 = heap.iter().map(|p| p.error).sum();
    let mut splits = 0;
    while total_err > tol && splits < max_panels {
        let worst = heap.pop().expect("nonempty");
        let mid = 0.5 * (worst.a + worst.b);
        let (v1, e1) = rule(&f, worst.a, mid);
        let (v2, e2) = rule(&f, mid, worst.b);
        total_err += e1 + e2 - worst.error;
        heap.push(Piece { a: worst.a, b: mid, value: v1, error: e1 });
        heap.push(Piece { a: mid, b: worst.b, value: v2, error: e2 });
        splits += 1;
        if splits % 64 == 0 {
            // resum to stop cancellation drift in the running total
            total_err = heap.iter().map(|p| p.error).sum();
        }
    }
    total_err = heap.iter().map(|p| p.error).sum();
    let mut pieces = heap.into_vec();
    pieces.sort_by(|x, y| x.a.total_cmp(&y.a));
    let value = pieces.iter().map(|p| p.value).sum();
    QuadResult { value, error: total_err }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_exact() {
        let r = integrate(|x| x.powi(5) - 3.0 * x * x + 1.0, -1.0, 2.0, 1e-13, 1, 10);
        assert!((r.value - (64.0 / 6.0 - 1.0 / 6.0 - 9.0 + 3.0)).abs() < 1e-12);
        assert!(r.error <= 1e-13);
    }

    #[test]
    fn oscillatory_and_singular() {
        let r = integrate(|x| (50.0 * x).cos(), 0.0, 1.0, 1e-12, 4, 2000);
        assert!((r.value - (50.0f64).sin() / 50.0).abs() < 1e-11);
        let r = integrate(|x: f64| x.powf(-0.5), 1e-12, 1.0, 1e-9, 1, 4000);
        assert!((r.value - (2.0 - 2.0 * 1e-6)).abs() < 1e-8);
    }
}

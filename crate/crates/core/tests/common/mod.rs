//! Oracles shared by the integration tests. Nothing here calls the closed
//! forms under test.

#![allow(dead_code)]

use nmrqc_core::magnet::PrismMagnet;

const GK_NODES: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const K15_WEIGHTS: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728_0,
];
const G7_WEIGHTS: [f64; 4] =
    [0.129_484_966_168_869_7, 0.279_705_391_489_276_7, 0.381_830_050_505_118_9, 0.417_959_183_673_469_4];

fn gk15(f: &mut dyn FnMut(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let (c, h) = (0.5 * (a + b), 0.5 * (b - a));
    let mut k = 0.0;
    let mut g = 0.0;
    for (i, (&x, &w)) in GK_NODES.iter().zip(&K15_WEIGHTS).enumerate() {
        let pair = if x == 0.0 { f(c) } else { f(c - h * x) + f(c + h * x) };
        k += w * pair;
        if i % 2 == 1 {
            g += G7_WEIGHTS[i / 2] * pair;
        }
    }
    (k * h, ((k - g) * h).abs())
}

/// Adaptive Gauss–Kronrod 7/15 quadrature to absolute tolerance `tol`.
pub fn integrate(f: &mut dyn FnMut(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn rec(f: &mut dyn FnMut(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
        let (est, err) = gk15(f, a, b);
        if err <= tol || depth >= 40 {
            return est;
        }
        let m = 0.5 * (a + b);
        rec(f, a, m, 0.5 * tol, depth + 1) + rec(f, m, b, 0.5 * tol, depth + 1)
    }
    rec(f, a, b, tol, 0)
}

/// Field of the ±M surface charges by direct 2D quadrature over both faces.
pub fn prism_field_quadrature(m: &PrismMagnet, r: [f64; 3]) -> [f64; 3] {
    let mu0_over_4pi = 1e-7 * 1.000_000_000_55;
    let (hx, hy, hz) = (0.5 * m.width, 0.5 * m.depth, 0.5 * m.height);
    let c = m.center;
    let mut out = [0.0; 3];
    for (comp, slot) in out.iter_mut().enumerate() {
        let mut total = 0.0;
        for (zf, sign) in [(c[2] + hz, 1.0), (c[2] - hz, -1.0)] {
            let d = [r[0], r[1], r[2] - zf];
            // the face integrals are dimensionless and O(1)
            let tol = 1e-12;
            let mut outer = |yp: f64| {
                let mut inner = |xp: f64| {
                    let v = [d[0] - xp, d[1] - yp, d[2]];
                    let r2 = v[0] * v[0] + v[1] * v[1] + v[2] * v[2];
                    v[comp] / (r2 * r2.sqrt())
                };
                integrate(&mut inner, c[0] - hx, c[0] + hx, tol / (2.0 * hy))
            };
            total += sign * integrate(&mut outer, c[1] - hy, c[1] + hy, tol);
        }
        *slot = mu0_over_4pi * m.magnetization * total;
    }
    out
}

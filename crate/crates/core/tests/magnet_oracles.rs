mod common;

use nmrqc_core::magnet::{FieldSource, PrismMagnet};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn magnets() -> Vec<PrismMagnet> {
    vec![
        PrismMagnet::design(),
        PrismMagnet::from_polarization("cube", 3e-6, 3e-6, 3e-6, [1e-6, -2e-6, 0.5e-6], 1.2).unwrap(),
        PrismMagnet::from_polarization("slab", 20e-6, 1e-6, 8e-6, [0.0, 0.0, 0.0], 2.0).unwrap(),
    ]
}

/// Exterior points within a few magnet sizes, kept a little away from the surface.
fn exterior_points(m: &PrismMagnet, count: usize, seed: u64) -> Vec<[f64; 3]> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let half = [0.5 * m.width, 0.5 * m.depth, 0.5 * m.height];
    let margin = 0.05 * m.width.min(m.depth).min(m.height);
    let mut pts = Vec::new();
    while pts.len() < count {
        let p: [f64; 3] = std::array::from_fn(|k| m.center[k] + rng.gen_range(-2.5..2.5) * half[k].max(2e-6));
        let inflated = (0..3).all(|k| (p[k] - m.center[k]).abs() <= half[k] + margin);
        if !inflated {
            pts.push(p);
        }
    }
    pts
}

fn norm(v: [f64; 3]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

#[test]
fn closed_form_matches_surface_charge_quadrature() {
    for (i, m) in magnets().iter().enumerate() {
        for r in exterior_points(m, 34, 11 + i as u64) {
            let exact = m.field_at(r).unwrap();
            let quad = common::prism_field_quadrature(m, r);
            let scale = norm(quad);
            for k in 0..3 {
                let err = (exact[k] - quad[k]).abs() / scale;
                assert!(err < 1e-6, "{} at {r:?}: component {k} off by {err:e}", m.label);
            }
        }
    }
}

#[test]
fn gradient_matches_central_differences() {
    let h = 1e-9;
    for (i, m) in magnets().iter().enumerate() {
        for r in exterior_points(m, 34, 101 + i as u64) {
            let g = m.grad_bz_at(r).unwrap();
            let fd: [f64; 3] = std::array::from_fn(|k| {
                let (mut a, mut b) = (r, r);
                a[k] += h;
                b[k] -= h;
                (m.bz_at(a).unwrap() - m.bz_at(b).unwrap()) / (2.0 * h)
            });
            for k in 0..3 {
                let err = (g[k] - fd[k]).abs() / norm(g);
                assert!(err < 1e-6, "{} at {r:?}: d/dx{k} off by {err:e}", m.label);
            }
        }
    }
}

#[test]
fn exterior_field_is_curl_and_divergence_free() {
    let h = 1e-9;
    for (i, m) in magnets().iter().enumerate() {
        for r in exterior_points(m, 20, 1001 + i as u64) {
            // jac[i][j] = ∂B_i/∂x_j
            let mut jac = [[0.0; 3]; 3];
            for j in 0..3 {
                let (mut a, mut b) = (r, r);
                a[j] += h;
                b[j] -= h;
                let (fa, fb) = (m.field_at(a).unwrap(), m.field_at(b).unwrap());
                for comp in 0..3 {
                    jac[comp][j] = (fa[comp] - fb[comp]) / (2.0 * h);
                }
            }
            let largest = jac.iter().flatten().fold(0.0f64, |s, v| s.max(v.abs()));
            let trace = jac[0][0] + jac[1][1] + jac[2][2];
            assert!(trace.abs() < 1e-6 * largest, "div {trace:e} vs {largest:e}");
            for (a, b) in [(0, 1), (0, 2), (1, 2)] {
                assert!((jac[a][b] - jac[b][a]).abs() < 1e-6 * largest, "curl ({a},{b}) at {r:?}");
            }
            let g = m.grad_bz_at(r).unwrap();
            for j in 0..3 {
                assert!((jac[2][j] - g[j]).abs() < 1e-6 * largest);
            }
        }
    }
}

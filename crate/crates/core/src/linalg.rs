//! Dense complex linear algebra on spin-1/2 registers.
//!
//! Basis convention: spin `s` of an `n`-spin register is bit `n − 1 − s` of
//! the basis index (spin 0 is the most significant), and bit value 0 is
//! |↑⟩ (I_z = +½).

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

/// A 2×2 single-spin operator in the (↑, ↓) basis.
pub type Gate2 = [[C64; 2]; 2];

pub fn dim(n_spins: usize) -> usize {
    1usize << n_spins
}

pub fn spin_mask(n_spins: usize, spin: usize) -> usize {
    1usize << (n_spins - 1 - spin)
}

/// I_z eigenvalue of `spin` in basis state `idx`.
pub fn iz_value(n_spins: usize, spin: usize, idx: usize) -> f64 {
    if idx & spin_mask(n_spins, spin) == 0 {
        0.5
    } else {
        -0.5
    }
}

/// exp(−iθ(cos φ I_x + sin φ I_y)).
pub fn rotation(theta: f64, phi: f64) -> Gate2 {
    let c = C64::new((0.5 * theta).cos(), 0.0);
    let s = (0.5 * theta).sin();
    let minus_i_s = C64::new(0.0, -s);
    [[c, minus_i_s * C64::from_polar(1.0, -phi)], [minus_i_s * C64::from_polar(1.0, phi), c]]
}

/// exp(−iφ I_z).
pub fn rotation_z(angle: f64) -> Gate2 {
    [[C64::from_polar(1.0, -0.5 * angle), ZERO], [ZERO, C64::from_polar(1.0, 0.5 * angle)]]
}

/// Left-multiplies `m` by `g` acting on `spin` (all columns).
pub fn apply_gate_rows(m: &mut CMatrix, n_spins: usize, spin: usize, g: &Gate2) {
    let mask = spin_mask(n_spins, spin);
    let ncols = m.ncols();
    for i0 in 0..m.nrows() {
        if i0 & mask != 0 {
            continue;
        }
        let i1 = i0 | mask;
        for c in 0..ncols {
            let a = m[(i0, c)];
            let b = m[(i1, c)];
            m[(i0, c)] = g[0][0] * a + g[0][1] * b;
            m[(i1, c)] = g[1][0] * a + g[1][1] * b;
        }
    }
}

pub fn apply_gate_vec(v: &mut CVector, n_spins: usize, spin: usize, g: &Gate2) {
    let mask = spin_mask(n_spins, spin);
    for i0 in 0..v.len() {
        if i0 & mask != 0 {
            continue;
        }
        let i1 = i0 | mask;
        let a = v[i0];
        let b = v[i1];
        v[i0] = g[0][0] * a + g[0][1] * b;
        v[i1] = g[1][0] * a + g[1][1] * b;
    }
}

/// Right-multiplies `m` by `g†` acting on `spin`: m ← m · g†.
pub fn apply_gate_cols_adjoint(m: &mut CMatrix, n_spins: usize, spin: usize, g: &Gate2) {
    let mask = spin_mask(n_spins, spin);
    let nrows = m.nrows();
    for j0 in 0..m.ncols() {
        if j0 & mask != 0 {
            continue;
        }
        let j1 = j0 | mask;
        for r in 0..nrows {
            let a = m[(r, j0)];
            let b = m[(r, j1)];
            m[(r, j0)] = a * g[0][0].conj() + b * g[0][1].conj();
            m[(r, j1)] = a * g[1][0].conj() + b * g[1][1].conj();
        }
    }
}

pub fn is_diagonal(m: &CMatrix) -> bool {
    for c in 0..m.ncols() {
        for r in 0..m.nrows() {
            if r != c && m[(r, c)] != ZERO {
                return false;
            }
        }
    }
    true
}

/// Spectral decomposition of a Hermitian generator, reusable for any
/// evolution time.
#[derive(Clone, Debug)]
pub enum HermitianExp {
    Diagonal(Vec<f64>),
    Dense { values: Vec<f64>, vectors: CMatrix },
}

impl HermitianExp {
    pub fn new(h: &CMatrix) -> Self {
        if is_diagonal(h) {
            return HermitianExp::Diagonal((0..h.nrows()).map(|i| h[(i, i)].re).collect());
        }
        let eig = SymmetricEigen::new(h.clone());
        HermitianExp::Dense { values: eig.eigenvalues.iter().copied().collect(), vectors: eig.eigenvectors }
    }

    /// exp(−i H t).
    pub fn propagator(&self, t: f64) -> CMatrix {
        match self {
            HermitianExp::Diagonal(d) => {
                let n = d.len();
                let mut u = CMatrix::zeros(n, n);
                for (i, e) in d.iter().enumerate() {
                    u[(i, i)] = C64::from_polar(1.0, -e * t);
                }
                u
            }
            HermitianExp::Dense { values, vectors } => {
                let mut scaled = vectors.clone();
                for (j, e) in values.iter().enumerate() {
                    let ph = C64::from_polar(1.0, -e * t);
                    for r in 0..scaled.nrows() {
                        scaled[(r, j)] *= ph;
                    }
                }
                scaled * vectors.adjoint()
            }
        }
    }

    /// Left-multiplies `m` by exp(−iHt) without forming the full propagator
    /// when the generator is diagonal.
    pub fn apply_left(&self, t: f64, m: &CMatrix) -> CMatrix {
        match self {
            HermitianExp::Diagonal(d) => {
                let mut out = m.clone();
                for (i, e) in d.iter().enumerate() {
                    let ph = C64::from_polar(1.0, -e * t);
                    for c in 0..out.ncols() {
                        out[(i, c)] *= ph;
                    }
                }
                out
            }
            HermitianExp::Dense { .. } => self.propagator(t) * m,
        }
    }
}

/// exp(−i H t) for Hermitian H.
pub fn expm_hermitian(h: &CMatrix, t: f64) -> CMatrix {
    HermitianExp::new(h).propagator(t)
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// ‖U†U − 1‖_max.
pub fn unitarity_error(u: &CMatrix) -> f64 {
    let n = u.nrows();
    let p = u.adjoint() * u;
    max_abs(&(p - CMatrix::identity(n, n)))
}

/// ‖A − A†‖_max.
pub fn hermiticity_error(a: &CMatrix) -> f64 {
    max_abs(&(a - a.adjoint()))
}

pub fn trace(m: &CMatrix) -> C64 {
    (0..m.nrows().min(m.ncols())).map(|i| m[(i, i)]).sum()
}

/// Tr(A† B) without forming the product.
pub fn inner(a: &CMatrix, b: &CMatrix) -> C64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

use nalgebra::SymmetricEigen;

use crate::error::{Error, Result};
use crate::format_float;
use crate::linalg::{dim, hermiticity_error, iz_value, trace, CMatrix, CVector, C64, ONE, ZERO};

use super::SpinSystem;

const STATE_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub enum QuantumState {
    Pure(CVector),
    Density(CMatrix),
}

impl QuantumState {
    pub fn pure(v: CVector) -> Result<Self> {
        let n = v.norm();
        if (n - 1.0).abs() > STATE_TOL {
            return Err(Error::InvalidState(format!("state norm {n} is not 1")));
        }
        check_power_of_two(v.len())?;
        Ok(QuantumState::Pure(v))
    }

    pub fn density(m: CMatrix) -> Result<Self> {
        check_power_of_two(m.nrows())?;
        if m.nrows() != m.ncols() {
            return Err(Error::InvalidState("density operator must be square".into()));
        }
        if hermiticity_error(&m) > STATE_TOL {
            return Err(Error::InvalidState("density operator is not Hermitian".into()));
        }
        let tr = trace(&m);
        if (tr - ONE).norm() > STATE_TOL {
            return Err(Error::InvalidState(format!("trace {tr} is not 1")));
        }
        let min = SymmetricEigen::new(m.clone()).eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
        if min < -STATE_TOL {
            return Err(Error::InvalidState(format!("negative eigenvalue {min:e}")));
        }
        Ok(QuantumState::Density(m))
    }

    /// Every spin up.
    pub fn all_up(n_spins: usize) -> Self {
        let mut v = CVector::zeros(dim(n_spins));
        v[0] = ONE;
        QuantumState::Pure(v)
    }

    /// Every spin along +x.
    pub fn all_x(n_spins: usize) -> Self {
        let d = dim(n_spins);
        QuantumState::Pure(CVector::from_element(d, C64::new((d as f64).sqrt().recip(), 0.0)))
    }

    pub fn maximally_mixed(n_spins: usize) -> Self {
        let d = dim(n_spins);
        QuantumState::Density(CMatrix::identity(d, d) / C64::new(d as f64, 0.0))
    }

    /// Hilbert-space dimension.
    pub fn dim(&self) -> usize {
        match self {
            QuantumState::Pure(v) => v.len(),
            QuantumState::Density(m) => m.nrows(),
        }
    }

    pub fn n_spins(&self) -> usize {
        self.dim().trailing_zeros() as usize
    }

    pub fn to_density(&self) -> CMatrix {
        match self {
            QuantumState::Pure(v) => v * v.adjoint(),
            QuantumState::Density(m) => m.clone(),
        }
    }

    /// Norm error for pure states, trace error for density operators.
    pub fn normalization_error(&self) -> f64 {
        match self {
            QuantumState::Pure(v) => (v.norm() - 1.0).abs(),
            QuantumState::Density(m) => (trace(m) - ONE).norm(),
        }
    }

    pub(crate) fn apply_unitary(&mut self, u: &CMatrix) {
        match self {
            QuantumState::Pure(v) => *v = u * &*v,
            QuantumState::Density(m) => *m = u * &*m * u.adjoint(),
        }
    }
}

fn check_power_of_two(n: usize) -> Result<()> {
    if n == 0 || !n.is_power_of_two() {
        return Err(Error::InvalidState(format!("dimension {n} is not a power of two")));
    }
    Ok(())
}

/// ⟨op⟩ (real part; `op` is expected Hermitian).
pub fn expectation(state: &QuantumState, op: &CMatrix) -> f64 {
    match state {
        QuantumState::Pure(v) => (v.adjoint() * op * v)[(0, 0)].re,
        QuantumState::Density(m) => trace(&(op * m)).re,
    }
}

/// Σ over the plane's chains of ⟨I_z⟩.
pub fn expectation_iz_plane(sys: &SpinSystem, state: &QuantumState, plane: usize) -> Result<f64> {
    if plane >= sys.n_planes() {
        return Err(Error::InvalidArgument(format!("plane {plane} out of range")));
    }
    if state.dim() != sys.dim() {
        return Err(Error::DimensionMismatch { expected: sys.dim(), actual: state.dim() });
    }
    let n = sys.total_spins();
    let spins: Vec<usize> = sys.spins_in_plane(plane).collect();
    let weight = |idx: usize| spins.iter().map(|&s| iz_value(n, s, idx)).sum::<f64>();
    Ok(match state {
        QuantumState::Pure(v) => v.iter().enumerate().map(|(i, a)| a.norm_sqr() * weight(i)).sum(),
        QuantumState::Density(m) => (0..m.nrows()).map(|i| m[(i, i)].re * weight(i)).sum(),
    })
}

/// |⟨a|b⟩|² for pure states, Tr(ρσ) when either is mixed.
pub fn state_fidelity(a: &QuantumState, b: &QuantumState) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch { expected: a.dim(), actual: b.dim() });
    }
    Ok(match (a, b) {
        (QuantumState::Pure(x), QuantumState::Pure(y)) => {
            let ov: C64 = x.iter().zip(y.iter()).map(|(p, q)| p.conj() * q).fold(ZERO, |s, z| s + z);
            ov.norm_sqr()
        }
        _ => trace(&(a.to_density() * b.to_density())).re,
    })
}

/// Trajectory table: time, per-plane ⟨I_z⟩, fidelity to `target` (empty
/// column when no target is given).
pub fn trajectory_csv(sys: &SpinSystem, traj: &super::Trajectory, target: Option<&QuantumState>) -> Result<String> {
    let mut out = String::from("time_s");
    for p in 0..sys.n_planes() {
        out.push_str(&format!(",Iz_plane{p}"));
    }
    out.push_str(",fidelity_to_target\n");
    for (t, s) in traj.times.iter().zip(&traj.states) {
        out.push_str(&format_float(*t));
        for p in 0..sys.n_planes() {
            out.push(',');
            out.push_str(&format_float(expectation_iz_plane(sys, s, p)?));
        }
        out.push(',');
        if let Some(tg) = target {
            out.push_str(&format_float(state_fidelity(s, tg)?));
        }
        out.push('\n');
    }
    Ok(out)
}

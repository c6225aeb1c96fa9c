//! Hadamard sign matrices and the selective π-pulse schedules built from them.
//!
//! Row `i` of a sign matrix is the toggling-frame sign of I_z on plane `i`
//! during each of `k` equal time slots. The zz coupling between planes `i`
//! and `j` survives the cycle with weight `(1/k) Σ_t m[i,t] m[j,t]`.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};

use super::sequence::{PulseEvent, Sequence, Target};

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SignMatrix {
    rows: Vec<Vec<i8>>,
    columns: usize,
}

impl SignMatrix {
    pub fn new(rows: Vec<Vec<i8>>) -> Result<Self> {
        let columns = rows.first().map_or(0, Vec::len);
        if columns == 0 {
            return Err(Error::InvalidArgument("sign matrix needs at least one column".into()));
        }
        for (i, r) in rows.iter().enumerate() {
            if r.len() != columns {
                return Err(Error::InvalidArgument(format!("row {i} has {} entries, expected {columns}", r.len())));
            }
            if r.iter().any(|&s| s != 1 && s != -1) {
                return Err(Error::InvalidArgument(format!("row {i} has entries other than ±1")));
            }
        }
        Ok(SignMatrix { rows, columns })
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    /// Number of time slots `k`.
    pub fn n_columns(&self) -> usize {
        self.columns
    }

    pub fn row(&self, i: usize) -> &[i8] {
        &self.rows[i]
    }

    pub fn rows(&self) -> &[Vec<i8>] {
        &self.rows
    }

    pub fn dot(&self, i: usize, j: usize) -> i64 {
        self.rows[i].iter().zip(&self.rows[j]).map(|(&a, &b)| (a * b) as i64).sum()
    }

    /// True when every pair of distinct rows is orthogonal.
    pub fn is_decoupling(&self) -> bool {
        (0..self.n_rows()).all(|i| (i + 1..self.n_rows()).all(|j| self.dot(i, j) == 0))
    }
}

/// Sylvester Hadamard matrix of order 2^`log2_order`.
pub fn sylvester(log2_order: u32) -> SignMatrix {
    let mut rows: Vec<Vec<i8>> = vec![vec![1]];
    for _ in 0..log2_order {
        let n = rows.len();
        let mut next = vec![Vec::with_capacity(2 * n); 2 * n];
        for (i, r) in rows.iter().enumerate() {
            next[i].extend_from_slice(r);
            next[i].extend_from_slice(r);
            next[i + n].extend_from_slice(r);
            next[i + n].extend(r.iter().map(|&s| -s));
        }
        rows = next;
    }
    let columns = rows.len();
    SignMatrix { rows, columns }
}

/// First `n` rows of the Sylvester matrix of order 2^⌈log₂ max(n, 2)⌉.
pub fn hadamard_sign_matrix(n: usize) -> Result<SignMatrix> {
    if n == 0 {
        return Err(Error::InvalidArgument("need at least one plane".into()));
    }
    let order = n.max(2).next_power_of_two();
    let mut full = sylvester(order.trailing_zeros());
    full.rows.truncate(n);
    Ok(full)
}

/// Fraction of the zz coupling between planes `i` and `j` that survives.
pub fn effective_coupling_scale(m: &SignMatrix, i: usize, j: usize) -> Result<f64> {
    if i == j {
        return Err(Error::InvalidArgument("scale of a plane with itself".into()));
    }
    if i >= m.n_rows() || j >= m.n_rows() {
        return Err(Error::InvalidArgument(format!("plane out of range for {} rows", m.n_rows())));
    }
    Ok(m.dot(i, j) as f64 / m.n_columns() as f64)
}

/// Selective π pulses realizing the sign rows of `m`.
///
/// Every plane starts in the +1 frame. A π pulse is centred on each slot
/// boundary where the row changes sign; a row ending at −1 gets a final
/// reset pulse that ends exactly at the cycle time, and a row starting at
/// −1 gets a pulse starting at t = 0.
pub fn decoupling_schedule(m: &SignMatrix, slot: f64, pi_width: f64) -> Result<Sequence> {
    if !(slot > 0.0) {
        return Err(Error::InvalidArgument(format!("slot must be positive, got {slot}")));
    }
    if !(pi_width >= 0.0) || pi_width > slot / 4.0 {
        return Err(Error::InvalidArgument(format!(
            "π width {pi_width:e} s must lie in [0, slot/4 = {:e} s]",
            slot / 4.0
        )));
    }
    let k = m.n_columns();
    let cycle = k as f64 * slot;
    let mut events = Vec::new();
    for (plane, row) in m.rows().iter().enumerate() {
        let pi = |t_start: f64| PulseEvent::new(t_start, pi_width, PI, 0.0, Target::Plane(plane));
        if row[0] == -1 {
            events.push(pi(0.0));
        }
        for t in 1..k {
            if row[t] != row[t - 1] {
                events.push(pi(t as f64 * slot - 0.5 * pi_width));
            }
        }
        if row[k - 1] == -1 {
            events.push(pi(cycle - pi_width));
        }
    }
    Sequence::new(format!("hadamard-{}x{}", m.n_rows(), k), events, cycle)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RecoupleReport {
    pub matrix: SignMatrix,
    pub pair: (usize, usize),
    /// Pairs other than `pair` that involve one of its planes and keep a
    /// nonzero coupling scale, with that scale.
    pub degraded: Vec<(usize, usize, f64)>,
}

/// Gives planes `i` and `j` identical sign rows so their coupling survives.
///
/// Row `j` is replaced by row `i`. If that leaves a spectator coupled to
/// the pair and the Sylvester matrix of the same order has a spare row
/// orthogonal to every spectator row, both planes are moved onto it
/// instead. Remaining spectator couplings are reported, never hidden.
pub fn recouple(m: &SignMatrix, pair: (usize, usize)) -> Result<RecoupleReport> {
    let (i, j) = pair;
    if i == j {
        return Err(Error::InvalidArgument("recoupling a plane with itself".into()));
    }
    if i >= m.n_rows() || j >= m.n_rows() {
        return Err(Error::InvalidArgument(format!("plane out of range for {} rows", m.n_rows())));
    }
    let mut rows = m.rows().to_vec();
    rows[j] = rows[i].clone();
    let mut out = SignMatrix { rows, columns: m.n_columns() };
    let mut degraded = spectator_couplings(&out, i, j);

    if !degraded.is_empty() && m.n_columns().is_power_of_two() {
        let full = sylvester(m.n_columns().trailing_zeros());
        let spare = full.rows().iter().find(|cand| {
            out.rows()
                .iter()
                .enumerate()
                .filter(|&(p, _)| p != i && p != j)
                .all(|(_, r)| r.iter().zip(cand.iter()).map(|(&a, &b)| (a * b) as i64).sum::<i64>() == 0)
        });
        if let Some(row) = spare {
            out.rows[i] = row.clone();
            out.rows[j] = row.clone();
            degraded = spectator_couplings(&out, i, j);
        }
    }
    Ok(RecoupleReport { matrix: out, pair, degraded })
}

fn spectator_couplings(m: &SignMatrix, i: usize, j: usize) -> Vec<(usize, usize, f64)> {
    let mut v = Vec::new();
    for p in 0..m.n_rows() {
        if p == i || p == j {
            continue;
        }
        for q in [i, j] {
            let d = m.dot(p, q);
            if d != 0 {
                v.push((p.min(q), p.max(q), d as f64 / m.n_columns() as f64));
            }
        }
    }
    v.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
    v
}

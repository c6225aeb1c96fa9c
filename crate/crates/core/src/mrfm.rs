//! Force-detected readout: effective-pure-state magnetization, gradient
//! force, cantilever thermal noise, scalability curves and cyclic
//! adiabatic inversion (CAI).

use std::f64::consts::{LN_2, PI};

use serde::{Deserialize, Serialize};

use crate::constants::{GAMMA_F19, HBAR, K_B};
use crate::error::{Error, Result};
use crate::linalg::{CMatrix, CVector, C64};
use crate::pulses::cycle_time_model;
use crate::spinsys::evolve_time_dependent;

/// Decoherence times of the three budget traces (s).
pub const BUDGET_T2_VALUES: [f64; 3] = [0.1, 10.0, 1000.0];

/// Upper end of the qubit-count search.
pub const MAX_QUBIT_SEARCH: usize = 1 << 20;

/// B₀/T bracket (T/K) for the required-field solve.
pub const FIELD_OVER_TEMP_BRACKET: (f64, f64) = (1e-6, 1e8);

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CantileverModel {
    /// N/m.
    pub spring_constant: f64,
    /// Hz.
    pub resonance_freq: f64,
    pub quality: f64,
    /// K.
    pub temperature: f64,
    /// Hz.
    pub bandwidth: f64,
}

impl CantileverModel {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("spring_constant", self.spring_constant),
            ("resonance_freq", self.resonance_freq),
            ("quality", self.quality),
            ("temperature", self.temperature),
            ("bandwidth", self.bandwidth),
        ];
        check_positive(&fields)
    }
}

impl Default for CantileverModel {
    fn default() -> Self {
        CantileverModel { spring_constant: 2.6e-4, resonance_freq: 5e3, quality: 5e4, temperature: 4.0, bandwidth: 1.0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalabilityParams {
    /// Applied field (T).
    pub b0: f64,
    /// K.
    pub temperature: f64,
    /// Chain copies per plane.
    pub copies: f64,
    pub qubits: usize,
    /// |∇B_z| (T/m).
    pub grad: f64,
    pub gamma: f64,
    /// Decoherence time without the cycle (s).
    pub t2_0: f64,
    /// Pulses per block.
    pub block_length: f64,
    /// Adjacent-plane splitting (rad/s).
    pub delta_omega: f64,
    /// Force noise density (N/√Hz).
    pub force_threshold: f64,
    /// Detection bandwidth (Hz).
    pub bandwidth: f64,
}

impl Default for ScalabilityParams {
    fn default() -> Self {
        ScalabilityParams {
            b0: 7.0,
            temperature: 4.0,
            copies: 1e7,
            qubits: 10,
            grad: 1.4e6,
            gamma: GAMMA_F19,
            t2_0: 0.1,
            block_length: 16.0,
            delta_omega: 2.0 * PI * 19.2e3,
            force_threshold: 5.6e-18,
            bandwidth: 1.0,
        }
    }
}

impl ScalabilityParams {
    pub fn validate(&self) -> Result<()> {
        if self.qubits == 0 {
            return Err(Error::InvalidArgument("qubits must be ≥ 1".into()));
        }
        check_positive(&[
            ("b0", self.b0),
            ("temperature", self.temperature),
            ("copies", self.copies),
            ("grad", self.grad),
            ("gamma", self.gamma),
            ("t2_0", self.t2_0),
            ("block_length", self.block_length),
            ("delta_omega", self.delta_omega),
            ("force_threshold", self.force_threshold),
            ("bandwidth", self.bandwidth),
        ])
    }

    /// Smallest detectable force, noise density × √bandwidth (N).
    pub fn detection_threshold(&self) -> f64 {
        self.force_threshold * self.bandwidth.sqrt()
    }

    pub fn field_over_temp(&self) -> f64 {
        self.b0 / self.temperature
    }

    pub fn with_qubits(&self, n: usize) -> Self {
        ScalabilityParams { qubits: n, ..*self }
    }
}

fn check_positive(fields: &[(&str, f64)]) -> Result<()> {
    for &(name, v) in fields {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::InvalidArgument(format!("{name} must be positive and finite, got {v}")));
        }
    }
    Ok(())
}

/// ħγB₀/(2k_BT) for a given B₀/T.
fn zeeman_ratio(gamma: f64, b_over_t: f64) -> f64 {
    HBAR * gamma * b_over_t / (2.0 * K_B)
}

/// (γħN/2)(1 − e^{−2nx})/(1 + e^{−2x})ⁿ, which equals
/// γħ(N/2ⁿ) sinh(nx)/coshⁿ(x) without overflow.
fn magnetization(gamma: f64, copies: f64, n: usize, b_over_t: f64) -> f64 {
    let x = zeeman_ratio(gamma, b_over_t);
    let n = n as f64;
    let ln_m = (0.5 * gamma * HBAR * copies).ln() + (-(-2.0 * n * x).exp_m1()).ln() - n * (-2.0 * x).exp().ln_1p();
    ln_m.exp()
}

/// Usable magnetization of the effective pure state (J/T).
pub fn effective_pure_magnetization(p: &ScalabilityParams) -> Result<f64> {
    p.validate()?;
    Ok(magnetization(p.gamma, p.copies, p.qubits, p.field_over_temp()))
}

/// High-temperature limit (γ²ħ²B₀/2k_BT)·N·n·2⁻ⁿ (J/T).
pub fn high_temp_magnetization(p: &ScalabilityParams) -> Result<f64> {
    p.validate()?;
    let n = p.qubits as f64;
    let ln = (p.gamma * p.gamma * HBAR * HBAR * p.b0 / (2.0 * K_B * p.temperature) * p.copies * n).ln() - n * LN_2;
    Ok(ln.exp())
}

/// F = M_z |∇B_z| (N).
pub fn readout_force(mz: f64, grad: f64) -> f64 {
    mz * grad.abs()
}

/// √(4 k k_B T / (2π f₀ Q)) in N/√Hz.
pub fn thermal_force_noise(c: &CantileverModel) -> Result<f64> {
    c.validate()?;
    Ok((4.0 * c.spring_constant * K_B * c.temperature / (2.0 * PI * c.resonance_freq * c.quality)).sqrt())
}

fn force(p: &ScalabilityParams, n: usize, b_over_t: f64) -> f64 {
    readout_force(magnetization(p.gamma, p.copies, n, b_over_t), p.grad)
}

/// Largest n whose readout force reaches the detection threshold; 0 when
/// even one qubit is below it.
///
/// The force is non-increasing in n, so an exponential search followed by
/// bisection finds the crossing.
pub fn max_measurable_qubits(p: &ScalabilityParams) -> Result<usize> {
    p.validate()?;
    let thr = p.detection_threshold();
    let bt = p.field_over_temp();
    let ok = |n: usize| force(p, n, bt) >= thr;
    if !ok(1) {
        return Ok(0);
    }
    let mut lo = 1;
    let mut hi = 2;
    while ok(hi) {
        lo = hi;
        hi *= 2;
        if hi > MAX_QUBIT_SEARCH {
            return Err(Error::BracketFailure {
                lo: lo as f64,
                hi: hi as f64,
                detail: format!("force still above threshold at n = {lo}; magnetization is saturated"),
            });
        }
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if ok(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

/// B₀/T (T/K) at which n qubits give exactly the detection threshold.
pub fn required_field_over_temp(n: usize, p: &ScalabilityParams) -> Result<f64> {
    p.validate()?;
    if n == 0 {
        return Err(Error::InvalidArgument("n must be ≥ 1".into()));
    }
    let thr = p.detection_threshold();
    let (mut lo, mut hi) = FIELD_OVER_TEMP_BRACKET;
    let (f_lo, f_hi) = (force(p, n, lo), force(p, n, hi));
    if !(f_lo < thr && f_hi >= thr) {
        return Err(Error::BracketFailure {
            lo,
            hi,
            detail: format!(
                "n = {n}: force {f_lo:e} N at the low end and {f_hi:e} N at the high end do not straddle {thr:e} N"
            ),
        });
    }
    // force is increasing in B₀/T; bisect in log space
    for _ in 0..200 {
        let mid = (lo * hi).sqrt();
        if force(p, n, mid) >= thr {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi / lo - 1.0 < 1e-13 {
            break;
        }
    }
    Ok(hi)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GateBudget {
    /// t_c = L n²/Δω (s).
    pub cycle_time: f64,
    /// T₂⁰/t_c.
    pub budget: f64,
    /// budget × L = T₂⁰Δω/n², independent of L.
    pub budget_times_l: f64,
}

pub fn gate_budget(p: &ScalabilityParams) -> Result<GateBudget> {
    p.validate()?;
    let cycle_time = cycle_time_model(p.qubits, p.block_length, p.delta_omega)?;
    let n2 = (p.qubits * p.qubits) as f64;
    Ok(GateBudget { cycle_time, budget: p.t2_0 / cycle_time, budget_times_l: p.t2_0 * p.delta_omega / n2 })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ScalabilityRow {
    pub n: usize,
    pub b_over_t_required: f64,
    /// budget × L for each of [`BUDGET_T2_VALUES`].
    pub budget_l: [f64; 3],
}

pub fn scalability_row(n: usize, p: &ScalabilityParams) -> Result<ScalabilityRow> {
    let b_over_t_required = required_field_over_temp(n, p)?;
    let mut budget_l = [0.0; 3];
    for (slot, &t2) in budget_l.iter_mut().zip(&BUDGET_T2_VALUES) {
        *slot = gate_budget(&ScalabilityParams { t2_0: t2, qubits: n, ..*p })?.budget_times_l;
    }
    Ok(ScalabilityRow { n, b_over_t_required, budget_l })
}

pub fn scalability_csv(rows: &[ScalabilityRow]) -> String {
    let mut out = String::from("n,B_over_T_required,budgetL_T2_0p1s,budgetL_T2_10s,budgetL_T2_1000s\n");
    for r in rows {
        out.push_str(&format!(
            "{},{:e},{:e},{:e},{:e}\n",
            r.n, r.b_over_t_required, r.budget_l[0], r.budget_l[1], r.budget_l[2]
        ));
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CAIParams {
    /// Rotating-frame drive amplitude (T).
    pub b1: f64,
    /// Modulation frequency ω_m (rad/s).
    pub omega_m: f64,
    /// Frequency excursion Ω (rad/s).
    pub excursion: f64,
    /// Integration window (s); a whole number of modulation periods.
    pub duration: f64,
    pub gamma: f64,
    /// Plane splitting the excursion must stay below (rad/s).
    pub delta_omega: f64,
}

impl Default for CAIParams {
    fn default() -> Self {
        let omega_m = 2.0 * PI * 500.0;
        let excursion = 2.0 * PI * 5e3;
        // ω₁²/(Ωω_m) = 10
        let omega_1 = (10.0 * excursion * omega_m).sqrt();
        CAIParams {
            b1: omega_1 / GAMMA_F19,
            omega_m,
            excursion,
            duration: 4.0 * 2.0 * PI / omega_m,
            gamma: GAMMA_F19,
            delta_omega: 2.0 * PI * 19.2e3,
        }
    }
}

impl CAIParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.b1 >= 0.0 && self.b1.is_finite()) {
            return Err(Error::InvalidArgument(format!("b1 must be ≥ 0, got {}", self.b1)));
        }
        check_positive(&[
            ("omega_m", self.omega_m),
            ("excursion", self.excursion),
            ("duration", self.duration),
            ("gamma", self.gamma),
            ("delta_omega", self.delta_omega),
        ])
    }

    pub fn omega_1(&self) -> f64 {
        self.gamma * self.b1
    }

    /// ω₁²/(Ωω_m).
    pub fn adiabaticity(&self) -> f64 {
        self.omega_1().powi(2) / (self.excursion * self.omega_m)
    }

    pub fn periods(&self) -> f64 {
        self.duration * self.omega_m / (2.0 * PI)
    }

    /// Non-fatal findings about the parameter choice.
    pub fn warnings(&self) -> Vec<String> {
        let mut w = Vec::new();
        if self.excursion >= self.delta_omega {
            w.push(format!(
                "excursion {:e} rad/s is not below the plane splitting {:e} rad/s; neighbouring planes are swept too",
                self.excursion, self.delta_omega
            ));
        }
        w
    }
}

/// Instantaneous drive detuning Ω sin(ω_m t).
pub fn cai_detuning(p: &CAIParams, t: f64) -> f64 {
    p.excursion * (p.omega_m * t).sin()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarization {
    /// Along the effective field at the start of the window.
    Up,
    Down,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CaiTrace {
    pub times: Vec<f64>,
    pub detuning: Vec<f64>,
    pub iz: Vec<f64>,
    /// min |⟨I_z⟩| / (½|Δ|/√(Δ² + ω₁²)) where the denominator exceeds 0.1;
    /// `None` when no sample qualifies.
    pub following: Option<f64>,
    /// Fourier amplitudes of ⟨I_z⟩ at k·ω_m for k = 0..=HARMONICS.
    pub harmonics: Vec<f64>,
    pub max_norm_error: f64,
    pub warnings: Vec<String>,
}

impl CaiTrace {
    /// Fourier amplitude at ω_m.
    pub fn modulation_amplitude(&self) -> f64 {
        self.harmonics[1]
    }

    /// Harmonic k ≥ 1 with the largest amplitude.
    pub fn peak_harmonic(&self) -> usize {
        (1..self.harmonics.len()).max_by(|&a, &b| self.harmonics[a].total_cmp(&self.harmonics[b])).unwrap_or(1)
    }
}

pub const HARMONICS: usize = 5;
const STEPS_PER_PERIOD: f64 = 2000.0;
const MAX_CAI_STEPS: usize = 10_000_000;

/// Integrates a single spin under H(t) = −[Δ(t) I_z + ω₁ I_x] over the
/// configured window.
///
/// The window starts at ω_m t = π/2, where the detuning peaks, so the
/// initial state can be prepared along (or against) the effective field.
pub fn simulate_cai_readout(p: &CAIParams, initial: Polarization) -> Result<CaiTrace> {
    p.validate()?;
    let periods = p.periods();
    if (periods - periods.round()).abs() > 1e-9 * periods.max(1.0) || periods.round() < 1.0 {
        return Err(Error::InvalidArgument(format!(
            "duration covers {periods} modulation periods; a whole number ≥ 1 is required"
        )));
    }
    let w1 = p.omega_1();
    let period = 2.0 * PI / p.omega_m;
    let fastest = p.excursion.max(w1).max(p.omega_m);
    let dt_max = (period / STEPS_PER_PERIOD).min(0.05 / fastest);
    let steps_f = (p.duration / dt_max).ceil();
    if steps_f > MAX_CAI_STEPS as f64 {
        return Err(Error::StepUnderflow(format!("CAI run needs {steps_f} steps (limit {MAX_CAI_STEPS})")));
    }
    let steps = steps_f as usize;
    let dt = p.duration / steps as f64;
    let t0 = 0.5 * PI / p.omega_m;

    let theta = w1.atan2(cai_detuning(p, t0));
    let (c, s) = ((0.5 * theta).cos(), (0.5 * theta).sin());
    let psi0 = match initial {
        Polarization::Up => CVector::from_vec(vec![C64::new(c, 0.0), C64::new(s, 0.0)]),
        Polarization::Down => CVector::from_vec(vec![C64::new(-s, 0.0), C64::new(c, 0.0)]),
    };

    let hamiltonian = |t: f64| {
        let d = cai_detuning(p, t);
        let mut h = CMatrix::zeros(2, 2);
        h[(0, 0)] = C64::new(-0.5 * d, 0.0);
        h[(1, 1)] = C64::new(0.5 * d, 0.0);
        h[(0, 1)] = C64::new(-0.5 * w1, 0.0);
        h[(1, 0)] = C64::new(-0.5 * w1, 0.0);
        h
    };
    let mut times = Vec::with_capacity(steps + 1);
    let mut iz = Vec::with_capacity(steps + 1);
    let mut max_norm_error: f64 = 0.0;
    evolve_time_dependent(&psi0, t0, dt, steps, hamiltonian, |t, psi| {
        let (a, b) = (psi[0].norm_sqr(), psi[1].norm_sqr());
        max_norm_error = max_norm_error.max((a + b - 1.0).abs());
        times.push(t);
        iz.push(0.5 * (a - b));
    })?;
    let detuning: Vec<f64> = times.iter().map(|&t| cai_detuning(p, t)).collect();

    let mut following: Option<f64> = None;
    for (&m, &d) in iz.iter().zip(&detuning) {
        let norm = (d * d + w1 * w1).sqrt();
        if norm == 0.0 {
            continue;
        }
        let ideal = 0.5 * d.abs() / norm;
        if ideal > 0.1 {
            let f = m.abs() / ideal;
            following = Some(following.map_or(f, |g: f64| g.min(f)));
        }
    }

    // the last sample repeats the first phase of the modulation
    let n = steps as f64;
    let harmonics = (0..=HARMONICS)
        .map(|k| {
            let w = k as f64 * p.omega_m;
            let sum: C64 =
                times[..steps].iter().zip(&iz[..steps]).map(|(&t, &m)| C64::from_polar(m, -w * (t - t0))).sum();
            if k == 0 {
                sum.norm() / n
            } else {
                2.0 * sum.norm() / n
            }
        })
        .collect();

    Ok(CaiTrace { times, detuning, iz, following, harmonics, max_norm_error, warnings: p.warnings() })
}

/// Trace table: time, detuning, ⟨I_z⟩ and the adiabatic-following target.
pub fn cai_trace_csv(p: &CAIParams, trace: &CaiTrace) -> String {
    let w1 = p.omega_1();
    let mut out = String::from("time_s,detuning_rad_per_s,Iz,Iz_adiabatic\n");
    for ((&t, &d), &m) in trace.times.iter().zip(&trace.detuning).zip(&trace.iz) {
        let norm = (d * d + w1 * w1).sqrt();
        let target = if norm == 0.0 { 0.0 } else { 0.5 * d / norm };
        out.push_str(&format!("{t:e},{d:e},{m:e},{target:e}\n"));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p() -> ScalabilityParams {
        ScalabilityParams::default()
    }

    #[test]
    fn single_qubit_is_two_level_boltzmann() {
        let q = p().with_qubits(1);
        let x = HBAR * q.gamma * q.b0 / (2.0 * K_B * q.temperature);
        let expect = 0.5 * q.gamma * HBAR * q.copies * x.tanh();
        let m = effective_pure_magnetization(&q).unwrap();
        assert!((m / expect - 1.0).abs() < 1e-12);
    }

    #[test]
    fn high_temperature_limit() {
        for (ratio, tol) in [(1e-2, 1e-2), (1e-3, 1e-4)] {
            // choose B₀ so that ħγB₀/k_BT equals `ratio`
            let base = p();
            let b0 = ratio * K_B * base.temperature / (HBAR * base.gamma);
            let q = ScalabilityParams { b0, ..base };
            let r = effective_pure_magnetization(&q).unwrap() / high_temp_magnetization(&q).unwrap();
            assert!((r - 1.0).abs() < tol, "{ratio}: {r}");
        }
    }

    #[test]
    fn saturation_limit() {
        let q = ScalabilityParams { b0: 1e6, temperature: 1e-3, qubits: 400, ..p() };
        let m = effective_pure_magnetization(&q).unwrap();
        assert!((m / (0.5 * q.gamma * HBAR * q.copies) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn large_n_does_not_overflow() {
        let q = ScalabilityParams { b0: 20.0, temperature: 0.01, qubits: 600, ..p() };
        let m = effective_pure_magnetization(&q).unwrap();
        assert!(m.is_finite() && m > 0.0);
    }

    #[test]
    fn high_temp_scalings() {
        let a = high_temp_magnetization(&p()).unwrap();
        let hot = high_temp_magnetization(&ScalabilityParams { temperature: 8.0, ..p() }).unwrap();
        assert!((hot / a - 0.5).abs() < 1e-14);
        let next = high_temp_magnetization(&p().with_qubits(11)).unwrap();
        assert!((next / a - 11.0 / 20.0).abs() < 1e-14);
    }

    #[test]
    fn force_anchor_at_design_point() {
        let m = effective_pure_magnetization(&p()).unwrap();
        let f = readout_force(m, p().grad);
        let paper = 1e-15 * 10.0 * 2f64.powi(-10);
        assert!(f / paper > 0.5 && f / paper < 2.0, "{f:e}");
        assert!(f >= p().force_threshold);
        assert_eq!(readout_force(0.0, 1e6), 0.0);
        let n = max_measurable_qubits(&p()).unwrap();
        assert!((8..=12).contains(&n), "{n}");
    }

    #[test]
    fn infinite_threshold_measures_nothing() {
        let q = ScalabilityParams { force_threshold: 1e300, ..p() };
        assert_eq!(max_measurable_qubits(&q).unwrap(), 0);
    }

    #[test]
    fn thermal_noise_values() {
        let c = CantileverModel::default();
        let f = thermal_force_noise(&c).unwrap();
        assert!((f / 6.0e-18 - 1.0).abs() < 0.02, "{f:e}");
        let hot = thermal_force_noise(&CantileverModel { temperature: 16.0, ..c }).unwrap();
        assert!((hot / f - 2.0).abs() < 1e-14);
        let q4 = thermal_force_noise(&CantileverModel { quality: 2e5, ..c }).unwrap();
        assert!((q4 / f - 0.5).abs() < 1e-14);
    }

    #[test]
    fn required_field_round_trip() {
        let q = p();
        let mut prev = 0.0;
        for n in [2, 5, 10, 40, 120, 300] {
            let bt = required_field_over_temp(n, &q).unwrap();
            assert!(bt > prev);
            prev = bt;
            let at = ScalabilityParams { b0: bt * q.temperature, ..q };
            let back = max_measurable_qubits(&at).unwrap();
            assert!(back.abs_diff(n) <= 1, "{n} → {bt} → {back}");
        }
        let n10 = required_field_over_temp(10, &q).unwrap();
        assert!((n10 / 1.75 - 1.0).abs() < 0.3, "{n10}");
    }

    #[test]
    fn unreachable_threshold_is_a_bracket_failure() {
        // even full polarization cannot reach this force
        let q = ScalabilityParams { force_threshold: 1.0, ..p() };
        assert!(matches!(required_field_over_temp(3, &q), Err(Error::BracketFailure { .. })));
    }

    #[test]
    fn gate_budget_values() {
        let b = gate_budget(&p()).unwrap();
        assert!((b.budget_times_l / 1.21e2 - 1.0).abs() < 0.01);
        assert!((b.budget * p().block_length / b.budget_times_l - 1.0).abs() < 1e-12);
        let long = gate_budget(&ScalabilityParams { t2_0: 1000.0, ..p() }).unwrap();
        assert!((long.budget / b.budget / 1e4 - 1.0).abs() < 1e-12);
        let double = gate_budget(&p().with_qubits(20)).unwrap();
        assert!((b.budget / double.budget - 4.0).abs() < 1e-12);
    }

    #[test]
    fn detuning_shape() {
        let c = CAIParams::default();
        assert_eq!(cai_detuning(&c, 0.0), 0.0);
        assert!((cai_detuning(&c, 0.5 * PI / c.omega_m) - c.excursion).abs() < 1e-9 * c.excursion);
        let n = 1000;
        let period = 2.0 * PI / c.omega_m;
        let mean: f64 = (0..n).map(|i| cai_detuning(&c, period * i as f64 / n as f64)).sum::<f64>() / n as f64;
        assert!(mean.abs() < 1e-9 * c.excursion);
    }

    #[test]
    fn cai_follows_adiabatically() {
        let c = CAIParams::default();
        assert!((c.adiabaticity() - 10.0).abs() < 1e-9);
        let tr = simulate_cai_readout(&c, Polarization::Up).unwrap();
        assert!(tr.following.unwrap() >= 0.99, "{:?}", tr.following);
        assert_eq!(tr.peak_harmonic(), 1);
        assert!(tr.max_norm_error < 1e-10);
        assert!(tr.warnings.is_empty());
    }

    #[test]
    fn cai_down_mirrors_up() {
        let c = CAIParams { duration: 2.0 * PI / CAIParams::default().omega_m, ..CAIParams::default() };
        let up = simulate_cai_readout(&c, Polarization::Up).unwrap();
        let down = simulate_cai_readout(&c, Polarization::Down).unwrap();
        for (a, b) in up.iz.iter().zip(&down.iz) {
            assert!((a + b).abs() < 1e-10);
        }
    }

    #[test]
    fn cai_without_drive_is_static() {
        let c = CAIParams { b1: 0.0, ..CAIParams::default() };
        let tr = simulate_cai_readout(&c, Polarization::Up).unwrap();
        assert!(tr.iz.iter().all(|&m| (m - 0.5).abs() < 1e-12));
        assert!(tr.modulation_amplitude() < 1e-12);
    }

    #[test]
    fn cai_rejects_fractional_periods_and_warns() {
        let c = CAIParams { duration: 1.5 * 2.0 * PI / 3141.0, omega_m: 3141.0, ..CAIParams::default() };
        assert!(simulate_cai_readout(&c, Polarization::Up).is_err());
        let wide = CAIParams { excursion: 2.0 * PI * 30e3, ..CAIParams::default() };
        assert_eq!(wide.warnings().len(), 1);
    }

    proptest! {
        #[test]
        fn magnetization_increases_with_field_over_temp(n in 1usize..400, r in 0.01f64..500.0, k in 1.01f64..3.0) {
            let q = p();
            prop_assert!(magnetization(q.gamma, q.copies, n, r * k) > magnetization(q.gamma, q.copies, n, r));
        }

        #[test]
        fn max_qubits_monotone(bt in 0.5f64..700.0, k in 1.0f64..4.0) {
            let base = ScalabilityParams { b0: bt, temperature: 1.0, ..p() };
            let n = max_measurable_qubits(&base).unwrap();
            let more_field = max_measurable_qubits(&ScalabilityParams { b0: bt * k, ..base }).unwrap();
            let more_copies = max_measurable_qubits(&ScalabilityParams { copies: base.copies * k, ..base }).unwrap();
            let more_grad = max_measurable_qubits(&ScalabilityParams { grad: base.grad * k, ..base }).unwrap();
            let higher_thr = max_measurable_qubits(&ScalabilityParams { force_threshold: base.force_threshold * k, ..base }).unwrap();
            prop_assert!(more_field >= n && more_copies >= n && more_grad >= n && higher_thr <= n);
        }

        #[test]
        fn budget_times_l_ignores_block_length(l in 1.0f64..100.0, n in 1usize..500) {
            let a = gate_budget(&ScalabilityParams { block_length: l, qubits: n, ..p() }).unwrap();
            let b = gate_budget(&ScalabilityParams { block_length: 2.0 * l, qubits: n, ..p() }).unwrap();
            prop_assert_eq!(a.budget_times_l, b.budget_times_l);
        }
    }
}

//! One function per subcommand. Each returns a complete [`Report`]; the
//! caller decides where it goes.

use std::f64::consts::{PI, TAU};

use rayon::prelude::*;
use serde_json::Value;

use nmrqc_core::lattice::{
    b_coefficient, intra_chain_coupling, sigma_over_delta, splitting, to_hz, ChainLattice, PRESETS,
};
use nmrqc_core::magnet::{
    plane_homogeneity, sample, splitting_profile, FieldSample, FieldSource, LinearField, PrismMagnet, Vec3,
};
use nmrqc_core::mrfm::{
    cai_trace_csv, effective_pure_magnetization, gate_budget, max_measurable_qubits, readout_force,
    required_field_over_temp, scalability_csv, scalability_row, simulate_cai_readout, thermal_force_noise, HARMONICS,
};
use nmrqc_core::pulses::{
    compile_cnot, decoupling_schedule, effective_coupling_scale, hadamard_sign_matrix, interleave, recouple, to_csv,
    to_json, wahuha, Sequence, Target,
};
use nmrqc_core::spinsys::{
    build_system_with, evolve, gate_fidelity, local_z_fidelity, propagator, state_fidelity, trajectory_csv,
    QuantumState, SpinSystem, SystemOptions,
};

use crate::config::{FieldKind, InitialState, RunConfig, ScheduleKind};
use crate::output::{num, Report, Table};
use crate::CliError;

pub struct Ctx<'a> {
    pub cfg: &'a RunConfig,
    pub verbose: bool,
}

impl Ctx<'_> {
    fn log(&self, msg: impl AsRef<str>) {
        if self.verbose {
            eprintln!("nmrqc: {}", msg.as_ref());
        }
    }
}

/// `count` evenly spaced points from `start` to `stop` inclusive.
fn linspace(start: f64, stop: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![start],
        _ => (0..count).map(|i| start + (stop - start) * i as f64 / (count - 1) as f64).collect(),
    }
}

fn require(cond: bool, msg: impl Into<String>) -> Result<(), CliError> {
    if cond {
        Ok(())
    } else {
        Err(CliError::config(msg.into()))
    }
}

pub fn lattice(ctx: &Ctx) -> Result<Report, CliError> {
    let l = &ctx.cfg.lattice;
    require(l.max_separation >= 1, "lattice.max_separation must be at least 1")?;
    require(
        l.lambda_min.is_finite() && l.lambda_max.is_finite() && l.lambda_min >= 0.0 && l.lambda_max >= l.lambda_min,
        "lattice.lambda_min/lambda_max must satisfy 0 ≤ min ≤ max",
    )?;
    let lat = ctx.cfg.lattice()?;
    ctx.log(format!("lattice {} (a = {:e} m)", lat.name, lat.a));

    let mut report = Report::new("lattice");
    let mut couplings = Table::new("coupling_table", &["separation", "delta_omega_rad_per_s", "delta_omega_Hz"]);
    for k in 1..=l.max_separation {
        let w = intra_chain_coupling(&lat, 0, k as i64)?;
        couplings.push(vec![Value::from(k), num(w), num(to_hz(w))]);
    }

    let mut b_table = Table::new("b_table", &["lambda", "b"]);
    let lambdas = linspace(l.lambda_min, l.lambda_max, l.lambda_count);
    let bs: Vec<f64> = lambdas.par_iter().map(|&x| b_coefficient(x)).collect();
    for (x, b) in lambdas.iter().zip(bs) {
        b_table.push(vec![num(*x), num(b)]);
    }

    // the configured lattice plus every preset, for the comparison rows
    let mut lattices = vec![lat.clone()];
    for name in PRESETS {
        lattices.push(ChainLattice::preset(name)?);
    }
    let metrics = lattices.par_iter().map(|x| sigma_over_delta(x, l.rel_tol)).collect::<Result<Vec<_>, _>>()?;
    let m = &metrics[0];

    let mut trace = Table::new("sigma_trace", &["cutoff_radius_m", "sigma_over_delta"]);
    for &(r, s) in &m.trace {
        trace.push(vec![num(r), num(s)]);
    }

    let reference = &metrics[1 + PRESETS.iter().position(|&p| p == "fluorapatite").expect("preset exists")];
    let mut comparison =
        Table::new("sigma_comparison", &["lattice", "sigma_over_delta", "delta_over_sigma", "ratio_to_fluorapatite"]);
    let mut push_row = |label: &str, s: f64| {
        comparison.push(vec![Value::from(label), num(s), num(1.0 / s), num(s / reference.sigma_over_delta)]);
    };
    push_row("configured", m.sigma_over_delta);
    for (name, mm) in PRESETS.iter().zip(&metrics[1..]) {
        push_row(name, mm.sigma_over_delta);
    }

    report.set("lattice", lat.name.clone());
    report.set_f("a_m", lat.a);
    report.set_f("nearest_transverse_spacing_m", lat.nearest_transverse_spacing());
    report.set_f("delta_omega_nn_rad_per_s", m.delta_omega_nn);
    report.set_f("delta_omega_nn_Hz", to_hz(m.delta_omega_nn));
    report.set_f("sigma_rad_per_s", m.sigma);
    report.set_f("sigma_over_delta", m.sigma_over_delta);
    report.set_f("delta_over_sigma", 1.0 / m.sigma_over_delta);
    report.set_f("ratio_to_fluorapatite", m.sigma_over_delta / reference.sigma_over_delta);
    report.set_f("convergence_radius_m", m.convergence_radius);
    report.set_f("rel_tol", l.rel_tol);
    report.tables.extend([couplings, b_table, trace, comparison]);
    Ok(report)
}

fn prism_or_linear(ctx: &Ctx) -> Result<(Box<dyn FieldSource>, Vec3), CliError> {
    let m = &ctx.cfg.magnet;
    let prism: PrismMagnet = m.prism()?;
    let r0 = m.eval_point_m.unwrap_or_else(|| prism.above_top_center(m.standoff_m));
    require(r0.iter().all(|c| c.is_finite()), "magnet evaluation point must be finite")?;
    let src: Box<dyn FieldSource> = match m.field {
        FieldKind::Prism => Box::new(prism),
        FieldKind::Linear => Box::new(LinearField { b0: 0.0, gradient: m.linear_gradient_T_per_m, origin: r0 }),
    };
    Ok((src, r0))
}

pub fn magnet(ctx: &Ctx) -> Result<Report, CliError> {
    let m = &ctx.cfg.magnet;
    require(m.planes >= 2, "magnet.planes must be at least 2")?;
    require(m.homogeneity_samples >= 1, "magnet.homogeneity_samples must be at least 1")?;
    let lat = ctx.cfg.lattice()?;
    let (src, r0) = prism_or_linear(ctx)?;
    ctx.log(format!("magnet field at ({:e}, {:e}, {:e}) m", r0[0], r0[1], r0[2]));

    let at = sample(src.as_ref(), r0)?;
    let gradient = at.grad_bz[2].abs();

    let override_src = m.grad_override_T_per_m.map(|g| LinearField { b0: 0.0, gradient: [0.0, 0.0, g], origin: r0 });
    let profile_src: &dyn FieldSource = match &override_src {
        Some(f) => f,
        None => src.as_ref(),
    };
    let profile = splitting_profile(profile_src, r0, lat.a, m.planes, lat.gamma)?;
    let mut splitting_table = Table::new(
        "splitting_profile",
        &["plane", "offset_rad_per_s", "offset_Hz", "local_splitting_rad_per_s", "local_splitting_Hz"],
    );
    for (i, &w) in profile.offsets.iter().enumerate() {
        let local = profile.local_splittings.get(i).copied();
        splitting_table.push(vec![
            Value::from(i),
            num(w),
            num(to_hz(w)),
            local.map_or(Value::Null, num),
            local.map_or(Value::Null, |x| num(to_hz(x))),
        ]);
    }
    let mean_split =
        profile.local_splittings.iter().map(|x| x.abs()).sum::<f64>() / profile.local_splittings.len() as f64;

    let homogeneity = plane_homogeneity(src.as_ref(), r0, m.patch_x_m, m.patch_y_m, lat.a, m.homogeneity_samples)?;

    let xs = linspace(m.map_x_m.0, m.map_x_m.1, m.map_x_m.2);
    let ys = linspace(m.map_y_m.0, m.map_y_m.1, m.map_y_m.2);
    let zs = linspace(m.map_z_m.0, m.map_z_m.1, m.map_z_m.2);
    let mut points: Vec<Vec3> = Vec::with_capacity(xs.len() * ys.len() * zs.len());
    for &x in &xs {
        for &y in &ys {
            points.extend(zs.iter().map(|&z| [x, y, z]));
        }
    }
    ctx.log(format!("field map over {} points", points.len()));
    let samples = points.par_iter().map(|&r| sample(src.as_ref(), r)).collect::<Result<Vec<FieldSample>, _>>()?;
    let mut map =
        Table::new("field_map", &["x_m", "y_m", "z_m", "Bz_T", "dBz_dx_T_per_m", "dBz_dy_T_per_m", "dBz_dz_T_per_m"]);
    for s in &samples {
        let [x, y, z] = s.position;
        let [gx, gy, gz] = s.grad_bz;
        map.push([x, y, z, s.bz, gx, gy, gz].into_iter().map(num).collect());
    }

    let mut report = Report::new("magnet");
    report.set("field", if m.field == FieldKind::Prism { "prism" } else { "linear" });
    report.set_f("eval_x_m", r0[0]);
    report.set_f("eval_y_m", r0[1]);
    report.set_f("eval_z_m", r0[2]);
    report.set_f("magnet_Bz_T", at.bz);
    report.set_f("total_Bz_T", m.external_field_T + at.bz);
    report.set_f("grad_Bz_T_per_m", gradient);
    report.set_f("grad_Bz_T_per_um", gradient * 1e-6);
    report.set_f("design_gradient_reported_T_per_m", nmrqc_core::magnet::DESIGN_GRADIENT_REPORTED);
    report.set_f("gradient_ratio_to_reported", gradient / nmrqc_core::magnet::DESIGN_GRADIENT_REPORTED);
    match m.grad_override_T_per_m {
        Some(g) => report.set_f("grad_override_T_per_m", g),
        None => report.set("grad_override_T_per_m", Value::Null),
    }
    report.set_f("delta_omega_rad_per_s", mean_split);
    report.set_f("delta_omega_Hz", to_hz(mean_split));
    report.set_f("homogeneity_max_variation_T", homogeneity.max_variation);
    report.set_f("homogeneity_plane_step_T", homogeneity.plane_step);
    report.set_f("homogeneity_ratio", homogeneity.ratio);
    report.set("homogeneity_pass", homogeneity.pass);
    report.tables.extend([splitting_table, map]);
    Ok(report)
}

/// Default π width 1/Δω for the configured lattice and gradient.
fn pi_width(ctx: &Ctx, lat: &ChainLattice) -> Result<f64, CliError> {
    if let Some(w) = ctx.cfg.sequence.pi_width_s {
        return Ok(w);
    }
    let dw = splitting(lat, ctx.cfg.system.grad_T_per_m);
    require(dw > 0.0, "sequence.pi_width_s is required when the gradient is zero")?;
    Ok(1.0 / dw)
}

pub fn schedule(ctx: &Ctx, recouple_pair: Option<(usize, usize)>) -> Result<Report, CliError> {
    let s = &ctx.cfg.sequence;
    let n = ctx.cfg.system.planes;
    require(n >= 1, "system.planes must be at least 1")?;
    let lat = ctx.cfg.lattice()?;
    let width = pi_width(ctx, &lat)?;

    let bb = wahuha(s.tau_s, s.broadband_width_s)?;
    let slot = s.slot_s.unwrap_or(bb.cycle_time);
    let mut matrix = hadamard_sign_matrix(n)?;
    let mut degraded = Vec::new();
    if let Some(pair) = recouple_pair {
        let r = recouple(&matrix, pair)?;
        matrix = r.matrix;
        degraded = r.degraded;
    }
    let selective = decoupling_schedule(&matrix, slot, width)?;
    ctx.log(format!("interleaving {} selective pulses into {}", selective.len(), bb.label));
    let timeline = interleave(&bb, &selective)?;

    let mut report = Report::new("schedule");
    let mut channels = Table::new("schedule_channels", &["channel", "pulses"]);
    let count = |t: Target| timeline.events().iter().filter(|e| e.target == t).count();
    channels.push(vec![Value::from("broadband"), Value::from(count(Target::Broadband))]);
    for p in 0..n {
        channels.push(vec![Value::from(format!("plane{p}")), Value::from(count(Target::Plane(p)))]);
    }

    let mut signs = Table::new("sign_matrix", &["plane", "signs"]);
    for (p, row) in matrix.rows().iter().enumerate() {
        let text: String = row.iter().map(|&x| if x > 0 { '+' } else { '-' }).collect();
        signs.push(vec![Value::from(p), Value::from(text)]);
    }

    let mut scales = Table::new("coupling_scales", &["plane_i", "plane_j", "effective_scale"]);
    for i in 0..n {
        for j in i + 1..n {
            scales.push(vec![Value::from(i), Value::from(j), num(effective_coupling_scale(&matrix, i, j)?)]);
        }
    }

    let mut degraded_table = Table::new("degraded_pairs", &["plane_i", "plane_j", "effective_scale"]);
    for (i, j, x) in &degraded {
        degraded_table.push(vec![Value::from(*i), Value::from(*j), num(*x)]);
    }

    report.set("planes", n);
    report.set("sign_columns", matrix.n_columns());
    report.set_f("tau_s", s.tau_s);
    report.set_f("broadband_width_s", s.broadband_width_s);
    report.set_f("slot_s", slot);
    report.set_f("pi_width_s", width);
    report.set_f("cycle_time_s", timeline.cycle_time);
    report.set("broadband_repetitions", count(Target::Broadband) / bb.len().max(1));
    report.set("events", timeline.len());
    report.set("timeline_lines", 1 + n);
    report.set("validation", "pass");
    match recouple_pair {
        Some((i, j)) => {
            report.set("recouple", format!("{i},{j}"));
            report.set_f("recoupled_scale", effective_coupling_scale(&matrix, i, j)?);
        }
        None => report.set("recouple", Value::Null),
    }
    report.set("degraded_pairs", degraded.len());
    report.tables.extend([channels, signs, scales, degraded_table]);
    report.files.push(("schedule.json".into(), to_json(&timeline) + "\n"));
    report.files.push(("schedule.csv".into(), to_csv(&timeline)));
    Ok(report)
}

fn initial_state(kind: InitialState, n_spins: usize) -> QuantumState {
    match kind {
        InitialState::AllUp => QuantumState::all_up(n_spins),
        InitialState::AllX => QuantumState::all_x(n_spins),
    }
}

fn build(ctx: &Ctx, lat: &ChainLattice, chains: &[[f64; 2]]) -> Result<SpinSystem, CliError> {
    let s = &ctx.cfg.system;
    let opts = SystemOptions { same_plane_couplings: s.same_plane_couplings };
    Ok(build_system_with(lat, s.planes, chains, s.grad_T_per_m, opts)?)
}

pub fn simulate(ctx: &Ctx) -> Result<Report, CliError> {
    let sim = &ctx.cfg.simulate;
    let lat = ctx.cfg.lattice()?;
    let chains = &ctx.cfg.system.chain_positions_a;
    require(!chains.is_empty(), "system.chain_positions_a must list at least one chain")?;
    let sys = build(ctx, &lat, chains)?;
    let mode = sim.mode.into();
    ctx.log(format!("{} spins in {} planes × {} chains", sys.total_spins(), sys.n_planes(), sys.n_chains()));

    let mut report = Report::new("simulate");
    report.set("spins", sys.total_spins());
    report.set("planes", sys.n_planes());
    report.set("chains", sys.n_chains());
    let psi0 = initial_state(sim.initial_state, sys.total_spins());

    // decoupling is judged up to z phases, so only the CNOT has a target state
    let (seq, target_state): (Sequence, Option<QuantumState>) = match sim.schedule {
        ScheduleKind::Decoupling => {
            let m = hadamard_sign_matrix(sys.n_planes())?;
            let slot = match sim.slot_s {
                Some(x) => x,
                None => wahuha(ctx.cfg.sequence.tau_s, 0.0)?.cycle_time,
            };
            let seq = decoupling_schedule(&m, slot, sim.pi_width_s)?;
            let u = propagator(&sys, &seq, mode)?;
            let f = local_z_fidelity(&u);
            report.set("schedule", "decoupling");
            report.set_f("identity_fidelity", f);
            report.set_f("identity_infidelity", 1.0 - f);
            (seq, None)
        }
        ScheduleKind::Wahuha => {
            let seq = wahuha(ctx.cfg.sequence.tau_s, ctx.cfg.sequence.broadband_width_s)?;
            report.set("schedule", "wahuha");
            (seq, None)
        }
        ScheduleKind::Cnot => {
            let prog = compile_cnot(&sys, sim.control_plane, sim.target_plane)?;
            let u = propagator(&sys, &prog.sequence, mode)?;
            let f = gate_fidelity(&u, &prog.target)?;
            report.set("schedule", "cnot");
            report.set("control_plane", sim.control_plane);
            report.set("target_plane", sim.target_plane);
            report.set_f("coupling_rad_per_s", prog.coupling);
            report.set_f("gate_time_s", prog.gate_time);
            report.set_f("cnot_fidelity", f);
            report.set_f("cnot_infidelity", 1.0 - f);
            if sys.n_chains() > 1 {
                let isolated = build(ctx, &lat, &chains[..1])?;
                let iso = compile_cnot(&isolated, sim.control_plane, sim.target_plane)?;
                let f_iso = gate_fidelity(&propagator(&isolated, &iso.sequence, mode)?, &iso.target)?;
                let ratio = sigma_over_delta(&lat, ctx.cfg.lattice.rel_tol)?.sigma_over_delta;
                report.set_f("isolated_cnot_fidelity", f_iso);
                report.set_f("spectator_induced_infidelity", f_iso - f);
                report.set_f("spectator_bound", 4.0 * ratio * ratio);
            }
            let target = match &psi0 {
                QuantumState::Pure(v) => QuantumState::pure(prog.target.matrix() * v)?,
                QuantumState::Density(r) => {
                    let u = prog.target.matrix();
                    QuantumState::density(u * r * u.adjoint())?
                }
            };
            (prog.sequence, Some(target))
        }
    };
    report.set("mode", format!("{:?}", sim.mode).to_lowercase());
    report.set_f("duration_s", seq.cycle_time);
    report.set("pulses", seq.len());

    let traj = evolve(&sys, &seq, &psi0, mode)?;
    if let Some(t) = &target_state {
        report.set_f("final_state_fidelity", state_fidelity(traj.final_state(), t)?);
    }
    report.set("trajectory_points", traj.times.len());
    report.files.push(("trajectory.csv".into(), trajectory_csv(&sys, &traj, target_state.as_ref())?));
    Ok(report)
}

pub fn scalability(ctx: &Ctx) -> Result<Report, CliError> {
    let c = &ctx.cfg.scalability;
    require(!c.n_values.is_empty(), "scalability.n_values must not be empty")?;
    require(c.n_values.iter().all(|&n| n >= 1), "scalability.n_values entries must be ≥ 1")?;
    let p = c.params();
    p.validate()?;
    ctx.log(format!("scalability over {} grid points", c.n_values.len()));
    let rows = c.n_values.par_iter().map(|&n| scalability_row(n, &p)).collect::<Result<Vec<_>, _>>()?;

    let extreme = nmrqc_core::mrfm::ScalabilityParams { b0: c.extreme_B0_T, temperature: c.extreme_temperature_K, ..p };
    extreme.validate()?;
    let design = (max_measurable_qubits(&p), max_measurable_qubits(&extreme));
    let force = readout_force(effective_pure_magnetization(&p)?, p.grad);
    let budget = gate_budget(&p)?;

    let mut report = Report::new("scalability");
    report.set("qubits", p.qubits);
    report.set_f("B_over_T", p.field_over_temp());
    report.set_f("readout_force_N", force);
    report.set_f("detection_threshold_N", p.detection_threshold());
    report.set("max_measurable_qubits", design.0?);
    report.set_f("B_over_T_required", required_field_over_temp(p.qubits, &p)?);
    report.set_f("extreme_B_over_T", extreme.field_over_temp());
    report.set("extreme_max_measurable_qubits", design.1?);
    report.set_f("cycle_time_s", budget.cycle_time);
    report.set_f("budget", budget.budget);
    report.set_f("budget_times_L", budget.budget_times_l);
    report.set("grid_points", rows.len());
    report.files.push(("scalability.csv".into(), scalability_csv(&rows)));
    Ok(report)
}

pub fn readout(ctx: &Ctx) -> Result<Report, CliError> {
    let r = &ctx.cfg.readout;
    require(r.periods >= 1, "readout.periods must be at least 1")?;
    let p = r.params();
    p.validate()?;
    let cantilever = r.cantilever.model();
    cantilever.validate()?;
    for w in p.warnings() {
        ctx.log(format!("warning: {w}"));
    }
    let trace = simulate_cai_readout(&p, r.initial)?;

    let mut harmonics = Table::new("cai_harmonics", &["k", "frequency_Hz", "amplitude"]);
    for (k, &a) in trace.harmonics.iter().enumerate().take(HARMONICS + 1) {
        harmonics.push(vec![Value::from(k), num(k as f64 * p.omega_m / TAU), num(a)]);
    }

    let mut report = Report::new("readout");
    report.set_f("omega_1_rad_per_s", p.omega_1());
    report.set_f("adiabaticity", p.adiabaticity());
    report.set_f("periods", p.periods());
    report.set("following", trace.following.map_or(Value::Null, num));
    report.set_f("modulation_amplitude", trace.modulation_amplitude());
    report.set("peak_harmonic", trace.peak_harmonic());
    report.set_f("peak_frequency_Hz", trace.peak_harmonic() as f64 * p.omega_m / (2.0 * PI));
    report.set_f("modulation_frequency_Hz", p.omega_m / TAU);
    report.set_f("max_norm_error", trace.max_norm_error);
    report.set_f("thermal_force_noise_N_per_sqrtHz", thermal_force_noise(&cantilever)?);
    report.set("warnings", trace.warnings.join("; "));
    report.tables.push(harmonics);
    report.files.push(("cai_trace.csv".into(), cai_trace_csv(&p, &trace)));
    Ok(report)
}

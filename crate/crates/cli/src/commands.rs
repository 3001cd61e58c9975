use std::f64::consts::TAU;

use num_complex::Complex;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde_json::json;

use emech::circuit::{
    coupling_from_circuit, direct_waveguide_decay, from_physical, parse_circuits, resonator_derived, write_circuit,
    ResonatorSpec,
};
use emech::device::tuned_frequency;
use emech::device_file::{bundled_devices, load_devices, write_devices};
use emech::dynamics::{backaction_occupancies, hybridized_modes, BathSpec, TwoModeSystem};
use emech::electrostatics::{
    equilibrium_gap, pull_in_voltage, stiffness_for_pull_in, ParallelPlateActuator, TRANSDUCER_AREA,
};
use emech::fitting::{
    init_exp_decay, init_lorentzian, model_by_name, nls_fit, AvoidedCrossing, FitData, FitOptions, FitResult, TlsLaw,
    MODEL_NAMES,
};
use emech::pipelines::plot::{Plot, Series};
use emech::pipelines::results::ResultsDir;
use emech::pipelines::{
    default_detunings, detuning_for_cooperativity, eit_params_from_system, fit_eit, fit_ringdown, linear_grid,
    pipeline_cooperativity_vs_v, pipeline_g_vs_v, pipeline_lifetime_vs_detuning, pipeline_thermometry_vs_v, synth_eit,
    synth_psd, synth_ringdown, thermometry_grid, EitSweepOptions, LifetimeOptions, RingdownConfig,
    ThermometryOptions,
};
use emech::thermometry::{
    calibrate_gain, extract_occupancy, extract_occupancy_naive, johnson_power, output_psd, AmplifierChain, LineParams,
    PsdTrace,
};
use emech::tls::{
    dipole_coupling, saturable_linewidth, stark_shift, strain_coupling_report, telegraph_trace, StrainMode,
    TelegraphFluctuator, TlsLinewidthModel, TlsParams,
};

use crate::args::*;
use crate::io::{device, read_columns};
use crate::{CliError, CliResult};

pub fn run(cli: &Cli) -> CliResult {
    match &cli.command {
        Command::Eit(a) => eit(cli, a),
        Command::Crossing(a) => crossing(cli, a),
        Command::Ringdown(a) => ringdown(cli, a),
        Command::Lifetime(a) => lifetime(cli, a),
        Command::Coupling(a) => coupling(cli, a),
        Command::Psd(a) => psd(cli, a),
        Command::Thermometry(a) => thermometry(cli, a),
        Command::CalibrateGain(a) => calibrate(cli, a),
        Command::Circuit(a) => circuit(cli, a),
        Command::Tls(a) => tls(cli, a),
        Command::Pullin(a) => pullin(cli, a),
        Command::Fit(a) => fit(cli, a),
        Command::Devices(a) => devices(cli, a),
    }
}

/// Each subcommand owns `<out>/<name>`; artifacts from an earlier run there are removed.
fn outdir(cli: &Cli, name: &str) -> CliResult<ResultsDir> {
    let path = cli.out.join(name);
    if path.is_dir() {
        for entry in std::fs::read_dir(&path)? {
            let p = entry?.path();
            let ours = p.extension().is_some_and(|e| ["json", "csv", "svg", "conf"].iter().any(|x| e == *x));
            if p.is_file() && ours {
                std::fs::remove_file(&p)?;
            }
        }
    }
    let dir = ResultsDir::create(path)?;
    dir.write_inputs(cli)?;
    Ok(dir)
}

fn done(dir: &ResultsDir, summary: &str) {
    println!("{summary}");
    println!("results in {}", dir.path().display());
}

fn lookup(cli: &Cli, id: &str) -> CliResult<emech::DeviceRecordF64> {
    device(cli.devices.as_deref(), id)
}

fn chain(c: &ChainArgs, nu_if: f64) -> CliResult<AmplifierChain<f64>> {
    AmplifierChain::new(c.gain, c.n_add, nu_if).map_err(|e| CliError::Usage(e.to_string()))
}

/// Writes `fit.json` and turns a non-converged fit into a data error.
fn check_fit(dir: &ResultsDir, fit: &FitResult<f64>) -> CliResult {
    dir.write_json("fit.json", fit)?;
    if fit.converged {
        Ok(())
    } else {
        Err(CliError::Data(format!("fit did not converge ({:?})", fit.termination)))
    }
}

fn eit(cli: &Cli, a: &EitArgs) -> CliResult {
    let dev = lookup(cli, &a.device)?;
    let mut sys = TwoModeSystem::from_device(&dev, a.vdc);
    if let Some(g) = a.g {
        sys.g = g;
    }
    if let Some(d) = a.detuning {
        sys = sys.with_detuning(TAU * d);
    }
    sys = sys.with_fano_phase(a.fano_phase);
    let f_r = sys.mw.omega_r / TAU;
    let f_m = sys.mech.omega_m / TAU;
    let half = 3.0 * sys.kappa() / TAU + (f_r - f_m).abs() + 2.0 * sys.g.abs();
    let mut grid = linear_grid(f_r, half, a.points.max(3) | 1);
    if sys.g != 0.0 && a.fine_points > 0 {
        grid.extend(linear_grid(f_m, 20.0 * sys.mech.gamma_total_linewidth / TAU, a.fine_points));
        grid.sort_by(|x, y| x.total_cmp(y));
        grid.dedup();
    }
    let trace = synth_eit(&sys, &grid, a.noise, cli.seed)?;
    let dir = outdir(cli, "eit")?;
    dir.write_text("trace.csv", &trace.to_csv())?;
    let offs: Vec<f64> = trace.frequencies.iter().map(|f| (f - f_r) / 1e6).collect();
    let mag: Vec<f64> = trace.reflection.iter().map(|r| r.norm()).collect();
    dir.write_plot(
        "reflection.svg",
        &Plot::new(&format!("device {} at {} V", dev.id, a.vdc), "f - f_r (MHz)", "|r|").with(Series::line("|r|", offs, mag)),
    )?;
    let modes = hybridized_modes(&sys);
    let mut report = json!({
        "device": dev.id,
        "g_Hz": sys.g,
        "cavity_detuning_Hz": sys.cavity_detuning() / TAU,
        "strong_coupling": sys.is_strong_coupling(),
        "min_abs_reflection": trace.min_magnitude(),
        "modes_Hz": modes.iter().map(|m| json!({"frequency": m.re, "linewidth": -2.0 * m.im})).collect::<Vec<_>>(),
        "points": trace.frequencies.len(),
    });
    let mut fit_res = None;
    if a.fit {
        if sys.g == 0.0 {
            return Err(CliError::Usage("fitting needs a nonzero coupling".into()));
        }
        let mut init = eit_params_from_system(&sys, f_m);
        // Start away from the truth so the fit has work to do.
        for (k, s) in [(2, 0.9), (3, 1.1), (4, 1.2), (5, 0.9)] {
            init[k] *= s;
        }
        let fit = fit_eit(&trace, f_m, &init, a.fano_phase != 0.0)?;
        report["fit"] = json!({
            "g_Hz": fit.param("g"),
            "g_sigma_Hz": fit.uncertainty("g"),
            "converged": fit.converged,
        });
        fit_res = Some(fit);
    }
    dir.write_report(&report)?;
    done(&dir, &format!("min |r| = {:.4}, g = {:.4e} Hz", trace.min_magnitude(), sys.g));
    match fit_res {
        Some(f) => check_fit(&dir, &f),
        None => Ok(()),
    }
}

fn crossing(cli: &Cli, a: &CrossingArgs) -> CliResult {
    let mut dev = lookup(cli, &a.device)?;
    if let Some(g0) = a.g0 {
        dev.coupling.g0 = g0;
    }
    let k = dev
        .k_tune
        .ok_or_else(|| CliError::Data(format!("device {} has no magnetic tuning constant", dev.id)))?;
    if a.steps < 5 {
        return Err(CliError::Usage("--steps must be at least 5".into()));
    }
    let base = TwoModeSystem::from_device(&dev, a.vdc);
    let w_max = base.mw.omega_r;
    let mut rng = ChaCha8Rng::seed_from_u64(cli.seed);
    let mut rows = Vec::with_capacity(a.steps);
    let mut x = Vec::with_capacity(a.steps);
    let mut y = Vec::with_capacity(a.steps);
    for i in 0..a.steps {
        let b = a.b_max * i as f64 / (a.steps - 1) as f64;
        let mut sys = base;
        sys.mw.omega_r = tuned_frequency(w_max, k, b);
        let [up, lo] = hybridized_modes(&sys);
        let zu: f64 = StandardNormal.sample(&mut rng);
        let zl: f64 = StandardNormal.sample(&mut rng);
        let (fu, fl) = (up.re + a.noise * zu, lo.re + a.noise * zl);
        rows.push(vec![b, sys.mw.omega_r / TAU, fu, fl, -2.0 * up.im, -2.0 * lo.im]);
        x.push(b);
        y.push(Complex::new(fu, fl));
    }
    let dir = outdir(cli, "crossing")?;
    dir.write_table(
        "modes.csv",
        &["field_T", "cavity_Hz", "upper_Hz", "lower_Hz", "upper_linewidth_Hz", "lower_linewidth_Hz"],
        &rows,
    )?;
    let bm: Vec<f64> = x.iter().map(|b| b * 1e3).collect();
    dir.write_plot(
        "modes.svg",
        &Plot::new("avoided crossing", "B (mT)", "frequency (GHz)")
            .with(Series::line("upper", bm.clone(), y.iter().map(|c| c.re / 1e9).collect()))
            .with(Series::line("lower", bm, y.iter().map(|c| c.im / 1e9).collect())),
    )?;
    let mut data = FitData::complex(x, y);
    if a.noise > 0.0 {
        data = data.with_sigma(vec![a.noise; rows.len()]);
    }
    let init = [w_max / TAU, k, base.mech.omega_m / TAU, 1.2 * base.g.abs()];
    let fit = nls_fit(&AvoidedCrossing, &data, &init, &FitOptions::default())?;
    let min_split = rows.iter().map(|r| r[2] - r[3]).fold(f64::INFINITY, f64::min);
    dir.write_report(&json!({
        "device": dev.id,
        "g_Hz": base.g,
        "min_splitting_Hz": min_split,
        "g_fit_Hz": fit.param("g"),
        "g_fit_sigma_Hz": fit.uncertainty("g"),
        "k_tune_fit": fit.param("k_tune"),
    }))?;
    done(&dir, &format!("minimum splitting {:.4} MHz, fitted g {:.4} MHz", min_split / 1e6, fit.params[3] / 1e6));
    check_fit(&dir, &fit)
}

fn ringdown(cli: &Cli, a: &RingdownArgs) -> CliResult {
    if !(a.tau > 0.0 && a.window > 0.0) {
        return Err(CliError::Usage("--tau and --window must be positive".into()));
    }
    let gamma = 1.0 / a.tau;
    let cfg = RingdownConfig {
        window: a.window,
        count: (5.0 / (gamma * a.window)).round().max(3.0) as usize,
        averages: a.averages,
    };
    let chain = chain(&a.chain, a.if_bw)?;
    let trace = synth_ringdown(gamma, a.n0, &cfg, &chain, !a.no_noise, cli.seed)?;
    let dir = outdir(cli, "ringdown")?;
    dir.write_text("trace.csv", &trace.to_csv())?;
    let fit = fit_ringdown(&trace)?;
    let (rate, rs) = (fit.params[1], fit.uncertainties[1]);
    let t_us: Vec<f64> = trace.times.iter().map(|t| t * 1e6).collect();
    let model: Vec<f64> = trace.times.iter().map(|t| fit.params[0] * (-rate * t).exp() + fit.params[2]).collect();
    dir.write_plot(
        "ringdown.svg",
        &Plot::new("ringdown", "t (us)", "phonons")
            .with(Series::points("data", t_us.clone(), trace.signal.clone()).with_errors(trace.sigma.clone()))
            .with(Series::line("fit", t_us, model)),
    )?;
    dir.write_report(&json!({
        "tau_true_s": a.tau,
        "tau_fit_s": 1.0 / rate,
        "tau_fit_sigma_s": rs / (rate * rate),
        "windows": cfg.count,
    }))?;
    done(&dir, &format!("tau = {:.2} +/- {:.2} us", 1e6 / rate, 1e6 * rs / (rate * rate)));
    check_fit(&dir, &fit)
}

fn lifetime(cli: &Cli, a: &LifetimeArgs) -> CliResult {
    let dev = lookup(cli, &a.device)?;
    let dets = if a.detunings.is_empty() { default_detunings() } else { a.detunings.clone() };
    let opts = LifetimeOptions { n0: a.n0, averages: a.averages, chain: chain(&a.chain, a.if_bw)?, seed: cli.seed };
    let res = pipeline_lifetime_vs_detuning(&dev, a.vdc, &dets, &opts)?;
    let dir = outdir(cli, "lifetime")?;
    let rows: Vec<Vec<f64>> =
        res.points.iter().map(|p| vec![p.detuning, p.tau, p.tau_sigma, p.gamma_em, p.tau_i, p.tau_i_sigma]).collect();
    dir.write_table(
        "lifetimes.csv",
        &["detuning_Hz", "tau_s", "tau_sigma_s", "gamma_em_per_s", "tau_i_s", "tau_i_sigma_s"],
        &rows,
    )?;
    let d: Vec<f64> = res.points.iter().map(|p| p.detuning / 1e6).collect();
    dir.write_plot(
        "lifetimes.svg",
        &Plot::new(&format!("device {} at {} V", dev.id, a.vdc), "detuning (MHz)", "tau (us)").with(
            Series::points("tau", d, res.points.iter().map(|p| p.tau * 1e6).collect())
                .with_errors(res.points.iter().map(|p| p.tau_sigma * 1e6).collect()),
        ),
    )?;
    dir.write_report(&res)?;
    done(
        &dir,
        &format!("intrinsic lifetime {:.1} +/- {:.1} us (global fit)", res.tau_i * 1e6, res.tau_i_sigma * 1e6),
    );
    Ok(())
}

fn coupling(cli: &Cli, a: &CouplingArgs) -> CliResult {
    let dev = lookup(cli, &a.device)?;
    let opts = EitSweepOptions { noise_sigma: a.noise, seed: cli.seed, ..EitSweepOptions::default() };
    let res = pipeline_g_vs_v(&dev, &a.voltages, &opts)?;
    let gi = a.gamma_i.map(|g| vec![g; a.voltages.len()]);
    let coop = pipeline_cooperativity_vs_v(&dev, &a.voltages, gi.as_deref())?;
    let dir = outdir(cli, "coupling")?;
    let rows: Vec<Vec<f64>> = res
        .points
        .iter()
        .zip(&coop)
        .map(|(p, c)| vec![p.voltage, p.g_true, p.g_fit, p.g_sigma, c.cooperativity])
        .collect();
    dir.write_table("coupling.csv", &["voltage_V", "g_true_Hz", "g_fit_Hz", "g_sigma_Hz", "cooperativity"], &rows)?;
    let v: Vec<f64> = res.points.iter().map(|p| p.voltage).collect();
    dir.write_plot(
        "coupling.svg",
        &Plot::new(&format!("device {}", dev.id), "V_dc (V)", "g (kHz)")
            .with(
                Series::points("fit", v.clone(), res.points.iter().map(|p| p.g_fit / 1e3).collect())
                    .with_errors(res.points.iter().map(|p| p.g_sigma / 1e3).collect()),
            )
            .with(Series::line("law", v.clone(), v.iter().map(|x| res.g0 * (x - res.v_offset) / 1e3).collect())),
    )?;
    dir.write_report(&json!({ "line": res, "cooperativity": coop }))?;
    let unconverged = res.points.iter().filter(|p| !p.converged).count();
    done(&dir, &format!("g0 = {:.3} +/- {:.3} kHz/V, V_off = {:.3} V", res.g0 / 1e3, res.g0_sigma / 1e3, res.v_offset));
    if unconverged > 0 {
        return Err(CliError::Data(format!("{unconverged} EIT fits did not converge")));
    }
    Ok(())
}

/// System used for noise spectra: the line carries the intrinsic decay only.
fn psd_system(dev: &emech::DeviceRecordF64, vdc: f64, detuning: Option<f64>) -> TwoModeSystem<f64> {
    let mut sys = TwoModeSystem::from_device(dev, vdc);
    sys.mech.gamma_total_linewidth = sys.mech.gamma_i_intrinsic_decay;
    let delta = detuning.map_or_else(|| detuning_for_cooperativity(&sys, 1.0), |d| TAU * d);
    sys.with_detuning(delta)
}

fn psd(cli: &Cli, a: &PsdArgs) -> CliResult {
    let dev = lookup(cli, &a.device)?;
    let sys = psd_system(&dev, a.vdc, a.detuning);
    let baths = BathSpec::new(a.baths.n_wg, a.baths.n_br, a.n_bm).map_err(|e| CliError::Usage(e.to_string()))?;
    let chain = chain(&a.chain, a.if_bw)?;
    let grid = thermometry_grid(&sys);
    let trace = match a.averages {
        Some(n) => synth_psd(&sys, &baths, &chain, &grid, n, cli.seed)?,
        None => PsdTrace {
            psd: grid.iter().map(|f| output_psd(&sys, &baths, &chain, TAU * f)).collect(),
            rbw: grid[1] - grid[0],
            frequencies: grid,
            averages: 1.0,
            background_subtracted: false,
        },
    };
    let dir = outdir(cli, "psd")?;
    dir.write_text("psd.csv", &trace.to_csv())?;
    let line = LineParams::predicted(&sys);
    let fc = line.center / TAU;
    dir.write_plot(
        "psd.svg",
        &Plot::new("output noise", "f - f_line (kHz)", "S (W/Hz)")
            .with(Series::line("psd", trace.frequencies.iter().map(|f| (f - fc) / 1e3).collect(), trace.psd.clone()))
            .log_y(),
    )?;
    let ba = backaction_occupancies(&sys, &baths, sys.cavity_detuning());
    dir.write_report(&json!({
        "detuning_Hz": sys.cavity_detuning() / TAU,
        "line_center_Hz": fc,
        "line_width_Hz": line.gamma / TAU,
        "n_r": ba.n_r,
        "n_m": ba.n_m,
        "readout_cooperativity": ba.c_eff,
    }))?;
    done(&dir, &format!("{} bins, mechanical occupancy {:.3}", trace.frequencies.len(), ba.n_m));
    Ok(())
}

fn thermometry(cli: &Cli, a: &ThermometryArgs) -> CliResult {
    let dev = lookup(cli, &a.device)?;
    let chain = chain(&a.chain, a.if_bw)?;
    if let Some(path) = &a.input {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Data(format!("cannot read {}: {e}", path.display())))?;
        let mut trace = PsdTrace::from_csv(&text, 0.0, a.averages)?;
        if trace.frequencies.len() < 2 {
            return Err(CliError::Data("spectrum needs at least two bins".into()));
        }
        trace.rbw = (trace.frequencies[1] - trace.frequencies[0]).abs();
        let sys = psd_system(&dev, a.vdc, a.detuning);
        let line = LineParams::predicted(&sys);
        let est = extract_occupancy(&trace, &sys, &chain, &line, a.baths.n_wg)?;
        let naive = extract_occupancy_naive(&trace, &sys, &chain, &line)?;
        let dir = outdir(cli, "thermometry")?;
        dir.write_report(&json!({ "estimate": est, "naive": naive }))?;
        done(&dir, &format!("n_b,m = {:.4} +/- {:.4}, n_b,r = {:.4} +/- {:.4}", est.n_b_m, est.n_b_m_sigma, est.n_b_r, est.n_b_r_sigma));
        return Ok(());
    }
    let nbm = match a.n_bm.len() {
        1 => vec![a.n_bm[0]; a.voltages.len()],
        n if n == a.voltages.len() => a.n_bm.clone(),
        _ => return Err(CliError::Usage("--n-bm needs one value or one per voltage".into())),
    };
    let truths = nbm
        .iter()
        .map(|&m| BathSpec::new(a.baths.n_wg, a.baths.n_br, m))
        .collect::<emech::Result<Vec<_>>>()
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let opts = ThermometryOptions { chain, averages: a.averages, target_cooperativity: 1.0, seed: cli.seed };
    let pts = pipeline_thermometry_vs_v(&dev, &a.voltages, &truths, &opts)?;
    let dir = outdir(cli, "thermometry")?;
    let rows: Vec<Vec<f64>> = pts
        .iter()
        .map(|p| vec![p.voltage, p.detuning, p.truth.n_b_m, p.n_b_m, p.n_b_m_sigma, p.n_b_r, p.n_b_r_sigma, p.n_b_m_naive])
        .collect();
    dir.write_table(
        "occupancies.csv",
        &["voltage_V", "detuning_Hz", "n_bm_true", "n_bm", "n_bm_sigma", "n_br", "n_br_sigma", "n_bm_naive"],
        &rows,
    )?;
    let v: Vec<f64> = pts.iter().map(|p| p.voltage).collect();
    dir.write_plot(
        "occupancies.svg",
        &Plot::new(&format!("device {}", dev.id), "V_dc (V)", "occupancy")
            .with(
                Series::points("n_b,m", v.clone(), pts.iter().map(|p| p.n_b_m).collect())
                    .with_errors(pts.iter().map(|p| p.n_b_m_sigma).collect()),
            )
            .with(
                Series::points("n_b,r", v, pts.iter().map(|p| p.n_b_r).collect())
                    .with_errors(pts.iter().map(|p| p.n_b_r_sigma).collect()),
            ),
    )?;
    dir.write_report(&pts)?;
    done(&dir, &format!("{} bias points analysed", pts.len()));
    Ok(())
}

fn calibrate(cli: &Cli, a: &CalibrateArgs) -> CliResult {
    let (temps, powers, sigma) = if let Some(path) = &a.input {
        let c = read_columns(path, 2)?;
        let s = c.cols.get(2).cloned();
        (c.cols[0].clone(), c.cols[1].clone(), s)
    } else {
        let gain = a.synthetic_gain.expect("clap requires --input or --synthetic-gain");
        let chain = AmplifierChain::new(gain, 0.0, a.if_bw).map_err(|e| CliError::Usage(e.to_string()))?;
        let temps = vec![0.02, 0.05, 0.1, 0.2, 0.4, 0.7, 1.0, 1.5, 2.0];
        let mut rng = ChaCha8Rng::seed_from_u64(cli.seed);
        let mut p = Vec::new();
        let mut s = Vec::new();
        for &t in &temps {
            let exact = johnson_power(t, a.nu, &chain, a.t_hemt)?;
            let z: f64 = StandardNormal.sample(&mut rng);
            p.push(exact * (1.0 + a.noise * z));
            s.push((a.noise * exact).max(f64::MIN_POSITIVE));
        }
        (temps, p, (a.noise > 0.0).then_some(s))
    };
    let cal = calibrate_gain(&temps, &powers, a.nu, a.if_bw, sigma.as_deref())?;
    let dir = outdir(cli, "calibrate-gain")?;
    let rows: Vec<Vec<f64>> = temps.iter().zip(&powers).map(|(t, p)| vec![*t, *p]).collect();
    dir.write_table("powers.csv", &["temperature_K", "power_W"], &rows)?;
    dir.write_report(&cal)?;
    done(&dir, &format!("G = {:.3} +/- {:.3} dB, T_HEMT = {:.3} +/- {:.3} K", cal.gain_db, cal.gain_db_sigma, cal.t_hemt, cal.t_hemt_sigma));
    Ok(())
}

fn circuit(cli: &Cli, a: &CircuitArgs) -> CliResult {
    let circuits = match &a.input {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Data(format!("cannot read {}: {e}", path.display())))?;
            parse_circuits(&text)?
        }
        None => {
            let spec = match a.vzpf {
                Some(v) => ResonatorSpec::ZeroPointVoltage(v),
                None => ResonatorSpec::Capacitance(a.cr.unwrap_or(12.1e-15)),
            };
            vec![("circuit".to_string(), from_physical(a.g0, spec, TAU * a.fr, TAU * a.fm, a.cm)?)]
        }
    };
    let dir = outdir(cli, "circuit")?;
    let mut text = String::new();
    let mut reports = Vec::new();
    for (id, c) in &circuits {
        c.validate()?;
        let d = resonator_derived(c);
        let w_m = c.omega_m();
        let g_ref = coupling_from_circuit(c, TAU * d.f_r, w_m);
        let at = c.at_voltage(a.vdc)?;
        let k_dir = direct_waveguide_decay(&at, w_m);
        reports.push(json!({
            "id": id,
            "f_r_Hz": d.f_r,
            "impedance_Ohm": d.z,
            "participation": d.eta,
            "f_m_Hz": w_m / TAU,
            "g0_Hz_per_V": g_ref / c.v_ref,
            "bias_V": a.vdc,
            "kappa_direct_Hz": k_dir,
        }));
        println!(
            "{id}: f_r = {:.4} GHz, Z = {:.0} Ohm, eta = {:.4}, g0 = {:.2} kHz/V, kappa_direct({} V) = {:.3} Hz",
            d.f_r / 1e9,
            d.z,
            d.eta,
            g_ref / c.v_ref / 1e3,
            a.vdc,
            k_dir
        );
        text.push_str(&write_circuit(id, c));
        text.push('\n');
    }
    dir.write_text("circuit.conf", &text)?;
    dir.write_report(&reports)?;
    done(&dir, &format!("{} circuit(s)", circuits.len()));
    Ok(())
}

fn tls_params(c: &TlsCommon, deformation: f64) -> CliResult<TlsParams<f64>> {
    let p = TlsParams { ratio_eps_over_e: c.ratio, ..TlsParams::new(0.0, 0.0, c.dipole, deformation) };
    p.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(p)
}

fn tls(cli: &Cli, a: &TlsArgs) -> CliResult {
    match &a.calc {
        TlsCalc::Stark { field, common } => {
            let p = tls_params(common, 0.0)?;
            let s = stark_shift(&p, *field);
            let dir = outdir(cli, "tls-stark")?;
            dir.write_report(&json!({ "field_V_per_m": field, "stark_shift_Hz": s }))?;
            done(&dir, &format!("Stark shift {:.4} GHz", s / 1e9));
        }
        TlsCalc::Dipole { e_zpf, common } => {
            let p = tls_params(common, 0.0)?;
            let g = dipole_coupling(&p, *e_zpf);
            let dir = outdir(cli, "tls-dipole")?;
            dir.write_report(&json!({ "e_zpf_V_per_m": e_zpf, "coupling_Hz": g }))?;
            done(&dir, &format!("dipole coupling {:.2} kHz", g / 1e3));
        }
        TlsCalc::Strain { freq, volume, youngs, deformation, common } => {
            let p = tls_params(common, *deformation)?;
            let mode = StrainMode { omega_m: TAU * freq, youngs_modulus: *youngs, strain_mode_volume: *volume };
            let rep = strain_coupling_report(&p, &mode).map_err(|e| CliError::Usage(e.to_string()))?;
            let dir = outdir(cli, "tls-strain")?;
            dir.write_report(&rep)?;
            done(
                &dir,
                &format!(
                    "S_zpf = {:.3e}, lambda = {:.2} MHz (eps/E = {}), {:.2} MHz (eps/E = 1)",
                    rep.s_zpf,
                    rep.lambda_with_ratio / 1e6,
                    common.ratio,
                    rep.lambda_without_ratio / 1e6
                ),
            );
        }
        TlsCalc::Saturation { participation, gamma_tls, n_c, beta, gamma_0, temperature, freq, growing } => {
            let model = TlsLinewidthModel {
                f_participation: *participation,
                gamma_tls: *gamma_tls,
                n_c: *n_c,
                beta: *beta,
                gamma_0: *gamma_0,
                temperature: *temperature,
                omega: TAU * freq,
            };
            model.validate().map_err(|e| CliError::Usage(e.to_string()))?;
            let law = if *growing { TlsLaw::Growing } else { TlsLaw::Saturating };
            let rows = (0..=80)
                .map(|i| {
                    let n = 10f64.powf(-2.0 + 0.1 * i as f64);
                    saturable_linewidth(&model, n, law).map(|g| vec![n, g])
                })
                .collect::<emech::Result<Vec<_>>>()?;
            let dir = outdir(cli, "tls-saturation")?;
            dir.write_table("linewidth.csv", &["phonons", "linewidth_Hz"], &rows)?;
            dir.write_plot(
                "linewidth.svg",
                &Plot::new("TLS-limited linewidth", "log10 phonons", "linewidth (kHz)").with(Series::line(
                    "linewidth",
                    rows.iter().map(|r| r[0].log10()).collect(),
                    rows.iter().map(|r| r[1] / 1e3).collect(),
                )),
            )?;
            done(&dir, &format!("linewidth {:.2} kHz at low power, {:.2} kHz at 1e6 phonons", rows[0][1] / 1e3, rows[80][1] / 1e3));
        }
        TlsCalc::Telegraph { rate_up, rate_down, shift, freq, duration, dt } => {
            let tf = TelegraphFluctuator { rate_up: *rate_up, rate_down: *rate_down, dispersive_shift: *shift };
            tf.validate().map_err(|e| CliError::Usage(e.to_string()))?;
            let tr = telegraph_trace(&tf, *freq, *duration, *dt, cli.seed)?;
            let dir = outdir(cli, "tls-telegraph")?;
            dir.write_text("trace.csv", &tr.to_csv())?;
            dir.write_report(&json!({
                "samples": tr.times.len(),
                "occupancy": tr.occupancy(),
                "stationary_occupancy": tf.stationary_occupancy(),
            }))?;
            done(&dir, &format!("occupancy {:.4} (stationary {:.4})", tr.occupancy(), tf.stationary_occupancy()));
        }
    }
    Ok(())
}

fn pullin(cli: &Cli, a: &PullinArgs) -> CliResult {
    let area = a.area.unwrap_or(TRANSDUCER_AREA);
    let k = match (a.k, a.vpi) {
        (Some(k), _) => k,
        (None, Some(v)) => stiffness_for_pull_in(v, a.gap, area),
        (None, None) => unreachable!("clap requires --k or --vpi"),
    };
    let act = ParallelPlateActuator::new(k, area, a.gap).map_err(|e| CliError::Usage(e.to_string()))?;
    let v_pi = pull_in_voltage(&act);
    let n = a.steps.max(2);
    let mut rows = Vec::with_capacity(n);
    for i in 0..n {
        let v = (v_pi * i as f64 / (n - 1) as f64).min(v_pi);
        if let Some(x) = equilibrium_gap(&act, v)?.gap() {
            rows.push(vec![v, x]);
        }
    }
    let dir = outdir(cli, "pullin")?;
    dir.write_table("gap.csv", &["voltage_V", "gap_m"], &rows)?;
    dir.write_plot(
        "gap.svg",
        &Plot::new("equilibrium gap", "V (V)", "gap (nm)").with(Series::line(
            "gap",
            rows.iter().map(|r| r[0]).collect(),
            rows.iter().map(|r| r[1] * 1e9).collect(),
        )),
    )?;
    dir.write_report(&json!({
        "stiffness_N_per_m": k,
        "area_m2": area,
        "gap_m": a.gap,
        "pull_in_voltage_V": v_pi,
        "gap_at_pull_in_m": rows.last().map(|r| r[1]),
    }))?;
    done(&dir, &format!("pull-in voltage {v_pi:.3} V"));
    Ok(())
}

fn fit(cli: &Cli, a: &FitArgs) -> CliResult {
    if a.list_models {
        for n in MODEL_NAMES {
            println!("{n}");
        }
        return Ok(());
    }
    let name = a.model.as_deref().expect("clap requires --model");
    let model = model_by_name::<f64>(name)?;
    let path = a.input.as_ref().expect("clap requires --input");
    let complex = model.is_complex();
    let c = read_columns(path, if complex { 3 } else { 2 })?;
    let x = c.cols[0].clone();
    let (mut data, sigma_col) = if complex {
        let y = c.cols[1].iter().zip(&c.cols[2]).map(|(&r, &i)| Complex::new(r, i)).collect();
        (FitData::complex(x.clone(), y), 3)
    } else {
        (FitData::real(x.clone(), c.cols[1].clone()), 2)
    };
    if let Some(s) = c.cols.get(sigma_col) {
        data = data.with_sigma(s.clone());
    }
    let init = if !a.init.is_empty() {
        a.init.clone()
    } else {
        match name {
            "lorentzian" => init_lorentzian(&x, &c.cols[1])?.to_vec(),
            "exp_decay" => init_exp_decay(&x, &c.cols[1])?.to_vec(),
            _ => return Err(CliError::Usage(format!("model `{name}` needs --init"))),
        }
    };
    let res = nls_fit(model.as_ref(), &data, &init, &FitOptions::default())?;
    let dir = outdir(cli, "fit")?;
    let rows: Vec<Vec<f64>> = x
        .iter()
        .map(|&xi| {
            let v = model.eval(&res.params, xi);
            if complex {
                vec![xi, v.re, v.im]
            } else {
                vec![xi, v.re]
            }
        })
        .collect();
    let xname = c.header[0].as_str();
    let header: Vec<&str> = if complex { vec![xname, "re", "im"] } else { vec![xname, "y"] };
    dir.write_table("model.csv", &header, &rows)?;
    for (n, (p, s)) in res.names.iter().zip(res.params.iter().zip(&res.uncertainties)) {
        println!("{n} = {p:.6e} +/- {s:.2e}");
    }
    done(&dir, &format!("{:?} after {} iterations", res.termination, res.iterations));
    check_fit(&dir, &res)
}

fn devices(cli: &Cli, a: &DevicesArgs) -> CliResult {
    let all = match &cli.devices {
        Some(p) => load_devices(p)?,
        None => bundled_devices(),
    };
    if a.json {
        println!("{}", serde_json::to_string_pretty(&all).map_err(|e| CliError::Data(e.to_string()))?);
        return Ok(());
    }
    println!(
        "{:<4} {:>10} {:>10} {:>9} {:>9} {:>9} {:>9} {:>9} {:>8} {:>8} {:>7}",
        "id", "f_m GHz", "f_r GHz", "gi kHz", "gt kHz", "ki kHz", "ke kHz", "g0 kHz/V", "V_off V", "tau_d us", "T mK"
    );
    for d in &all {
        let m = &d.mechanical;
        let w = &d.microwave;
        println!(
            "{:<4} {:>10.4} {:>10.4} {:>9.2} {:>9.2} {:>9.1} {:>9.1} {:>9.2} {:>8.2} {:>8.0} {:>7.0}",
            d.id,
            m.omega_m / TAU / 1e9,
            w.omega_r / TAU / 1e9,
            m.gamma_i_intrinsic_decay / TAU / 1e3,
            m.gamma_total_linewidth / TAU / 1e3,
            w.kappa_i / TAU / 1e3,
            w.kappa_e / TAU / 1e3,
            d.coupling.g0 / 1e3,
            d.coupling.v_offset,
            d.tau_d_max * 1e6,
            d.t_mxc * 1e3
        );
    }
    log::debug!("{}", write_devices(&all));
    Ok(())
}

//! Acceptance suite: one PASS/FAIL line per criterion, each with its runtime
//! bound. Exits non-zero if any criterion fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use softmax_analog::analysis;
use softmax_analog::devices::{EnvParams, NmosParams, NpnParams, TailSourceSpec};
use softmax_analog::network::{self, BranchDevice, LoadSpec, NetworkConfig};
use softmax_analog::transient::{self, Waveform};
use softmax_analog::{noise, oracle};
use softmax_analog_cli::{parse_config, run, transient_config, Command, LoadedConfig, Preset, RunManifest};

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

fn preset(p: Preset) -> LoadedConfig {
    parse_config(p.text(), p.name()).expect("preset parses")
}

fn random_ideal_network(rng: &mut ChaCha8Rng) -> (NetworkConfig<f64>, Vec<f64>) {
    let n = rng.random_range(2..=16);
    if rng.random_bool(0.5) {
        let is = 10f64.powf(rng.random_range(-16.0..-12.0));
        let cfg = NetworkConfig::uniform(
            n,
            BranchDevice::Npn(NpnParams::ideal(is)),
            LoadSpec::Resistor(rng.random_range(1.0..100.0)),
            TailSourceSpec::ideal(10f64.powf(rng.random_range(-5.0..-2.0))),
            5.0,
            0.0,
        );
        let bias = rng.random_range(0.5..0.8);
        let x = (0..n).map(|_| bias + rng.random_range(-0.2..0.2)).collect();
        (cfg, x)
    } else {
        let cfg = NetworkConfig::uniform(
            n,
            BranchDevice::Nmos(NmosParams {
                wl_ratio: rng.random_range(1.0..10.0),
                threshold_current: rng.random_range(0.1e-6..1e-6),
                threshold_voltage: rng.random_range(0.35..0.55),
                subthreshold_swing: rng.random_range(1.2..1.8),
                clm_coefficient: 0.0,
            }),
            LoadSpec::Resistor(rng.random_range(1e3..1e4)),
            TailSourceSpec::ideal(rng.random_range(50e-9..300e-9)),
            1.8,
            0.0,
        );
        let bias = rng.random_range(0.5..0.7);
        let x = (0..n).map(|_| bias + rng.random_range(-0.2..0.2)).collect();
        (cfg, x)
    }
}

fn oracle_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let (cfg, x) = random_ideal_network(&mut rng);
        let tol = cfg.tail.nominal_current * 1e-12;
        let op = match network::solve_operating_point(&cfg, &x, tol) {
            Ok(op) => op,
            Err(e) => return outcome(false, format!("solver failed: {e}")),
        };
        let p = oracle::softmax(&x, cfg.exponent_scale()).unwrap();
        for (f, q) in op.fractions().iter().zip(p.iter()) {
            worst = worst.max(((f - q) / q).abs());
        }
    }
    outcome(worst < 1e-9, format!("1000 configs, max relative deviation {worst:.3e} (< 1e-9)"))
}

fn noise_split() -> Outcome {
    let env = EnvParams::<f64>::default();
    let b = noise::branch_noise_budget(1e3, 1e-7, 1.0, 0.0, 1e3, &env).unwrap();
    let shot = 100.0 * b.term(noise::SHOT).unwrap().fraction;
    let thermal = 100.0 * b.term(noise::THERMAL).unwrap().fraction;
    let ratio = (1e3_f64 * 1.602176634e-19 * 1e-7 / (2.0 * env.kt())).sqrt();
    let closed = 100.0 * ratio / (1.0 + ratio);
    let ok = (shot - 4.21).abs() <= 0.03 && (thermal - 95.79).abs() <= 0.03 && (shot - closed).abs() < 1e-9;
    outcome(
        ok,
        format!("shot {shot:.4}% thermal {thermal:.4}% (published 4.21/95.79 +/- 0.03 pp; closed form {closed:.4}%)"),
    )
}

fn rc_transient() -> Outcome {
    let cfg = preset(Preset::NmosPaper);
    let tc = transient_config(&cfg, "nmos_paper", Some(false), 0).unwrap();
    let tau = tc.time_constant().unwrap();
    let r = transient::run_transient(&tc).unwrap();
    let rise = r.rise_time_1090.unwrap_or(f64::NAN);
    let fall = r.fall_time_9010.unwrap_or(f64::NAN);
    let settle = r.settle_time_998.unwrap_or(f64::NAN);
    let analytic_rise = 9f64.ln() * tau;
    let analytic_settle = 500f64.ln() * tau;
    let tau_ok = (tau - 175e-9).abs() < 1e-18;
    let rise_ok = (rise / analytic_rise - 1.0).abs() < 0.01 && (fall / analytic_rise - 1.0).abs() < 0.01;
    let bracket_ok = (360.2e-9..=389.4e-9).contains(&analytic_rise);
    let settle_ok = (settle / analytic_settle - 1.0).abs() < 0.01 && (settle / 922.6e-9 - 1.0).abs() < 0.30;
    outcome(
        tau_ok && rise_ok && bracket_ok && settle_ok,
        format!(
            "tau {:.1} ns, rise {:.1} ns / fall {:.1} ns vs ln9*tau {:.1} ns (published 360.2/389.4), \
             settle {:.1} ns vs ln500*tau {:.1} ns and published 922.6 ns ({:+.1}%)",
            tau * 1e9,
            rise * 1e9,
            fall * 1e9,
            analytic_rise * 1e9,
            settle * 1e9,
            analytic_settle * 1e9,
            100.0 * (settle / 922.6e-9 - 1.0)
        ),
    )
}

fn snr_calibration() -> Outcome {
    let cfg = preset(Preset::NmosPaper);
    let mut measured = Vec::new();
    for (ratio, expected) in [(500.0, 54.0), (6.0, 15.6)] {
        let waves = vec![Waveform::constant(0.6); 4];
        let mut tc = transient::TransientConfig::new(cfg.network.clone(), 50e-15, waves).unwrap();
        tc.duration = 12_000.0 * tc.time_step;
        let clean = transient::run_transient(&tc).unwrap();
        let signal = clean.output_voltage[0];
        tc.measurement_noise_sigma = signal / ratio;
        tc.rng_seed = 11;
        let r = transient::run_transient(&tc).unwrap();
        let m = transient::measure_snr(&r, 0.0, tc.duration).unwrap();
        measured.push((expected, m.snr_db, m.samples));
    }
    let ok = measured
        .iter()
        .all(|&(e, m, n)| (m - e).abs() <= 0.5 && n >= 10_000);
    outcome(
        ok,
        format!(
            "sigma=signal/500 -> {:.2} dB (54.0 +/- 0.5), sigma=signal/6 -> {:.2} dB (15.6 +/- 0.5), {} samples",
            measured[0].1, measured[1].1, measured[0].2
        ),
    )
}

fn error_limits() -> Outcome {
    let bip = preset(Preset::BipolarPaper);
    let sweep = bip.sweep.clone().unwrap();
    let mut bip_errs = Vec::new();
    for va in [10.0, 100.0, 1000.0, f64::INFINITY] {
        let mut net = bip.network.clone();
        for d in &mut net.branch_devices {
            if let BranchDevice::Npn(p) = d {
                p.early_voltage = va;
            }
        }
        let r = analysis::sigmoid_sweep(&net, sweep.branch, (sweep.start, sweep.stop), sweep.points, sweep.bias).unwrap();
        bip_errs.push(r.max_abs_error_pct);
    }
    let preset_err = analysis::sigmoid_sweep(&bip.network, sweep.branch, (sweep.start, sweep.stop), sweep.points, sweep.bias)
        .unwrap()
        .max_abs_error_pct;

    let nm = preset(Preset::NmosPaper);
    let ns = nm.sweep.clone().unwrap();
    let mut nmos_errs = Vec::new();
    for lambda in [0.1, 0.01, 0.001, 0.0] {
        let mut net = nm.network.clone();
        net.load = LoadSpec::Resistor(5e3);
        net.tail = TailSourceSpec::ideal(net.tail.nominal_current);
        for d in &mut net.branch_devices {
            if let BranchDevice::Nmos(p) = d {
                p.clm_coefficient = lambda;
            }
        }
        let r = analysis::sigmoid_sweep(&net, ns.branch, (ns.start, ns.stop), ns.points, ns.bias).unwrap();
        nmos_errs.push(r.max_abs_error_pct);
    }
    let bip_ok = bip_errs.windows(2).all(|w| w[1] < w[0]) && preset_err < 1.5;
    let nmos_ok = nmos_errs.windows(2).all(|w| w[1] < w[0]) && nmos_errs[3] < 1e-6;
    outcome(
        bip_ok && nmos_ok,
        format!(
            "bipolar max error % at V_A 10/100/1k/inf: {:.3e}/{:.3e}/{:.3e}/{:.3e} (preset {:.3}% < 1.5%); \
             nmos at lambda 0.1/0.01/0.001/0: {:.3e}/{:.3e}/{:.3e}/{:.3e}",
            bip_errs[0], bip_errs[1], bip_errs[2], bip_errs[3], preset_err, nmos_errs[0], nmos_errs[1], nmos_errs[2],
            nmos_errs[3]
        ),
    )
}

fn mismatch_law() -> Outcome {
    let cfg = preset(Preset::NmosPaper);
    let x = vec![0.6; 4];
    let sweep = analysis::mismatch_sigma_sweep(&cfg.network, &x, &[0.001, 0.005, 0.01, 0.02], 10_000, 3).unwrap();
    let exact = analysis::mismatch_exact_error(0.01, &x, &cfg.network, 0).unwrap();
    let closed = 0.01 * (1.0 - 0.25) / (1.0 + 0.01 / 4.0);
    let first = analysis::mismatch_first_order_error(0.01, &x, &cfg.network, 0).unwrap();
    let ok = sweep.r_squared > 0.99
        && (0.5..=1.5).contains(&sweep.slope)
        && (exact - closed).abs() < 1e-6
        && first == 0.01;
    outcome(
        ok,
        format!(
            "slope {:.3} (in [0.5, 1.5]), R^2 {:.5} (> 0.99); exact {:.5}% vs closed form {:.5}%, first order {:.2}%",
            sweep.slope,
            sweep.r_squared,
            100.0 * exact,
            100.0 * closed,
            100.0 * first
        ),
    )
}

fn invariance_suite() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut failures = Vec::new();

    let mut shift_dev = 0.0f64;
    let mut norm_dev = 0.0f64;
    let mut square_dev = 0.0f64;
    for _ in 0..1000 {
        let n = rng.random_range(1..20);
        let z: Vec<f64> = (0..n).map(|_| rng.random_range(-30.0..30.0)).collect();
        let c = rng.random_range(-50.0..50.0);
        let p = oracle::softmax(&z, 1.0).unwrap();
        let shifted: Vec<f64> = z.iter().map(|v| v + c).collect();
        let q = oracle::softmax(&shifted, 1.0).unwrap();
        for (a, b) in p.iter().zip(q.iter()) {
            shift_dev = shift_dev.max((a - b).abs());
        }
        norm_dev = norm_dev.max((p.iter().sum::<f64>() - 1.0).abs());
        let pos: Vec<f64> = z.iter().map(|v| v.abs() + 0.01).collect();
        let s = oracle::square_law_activation(&pos, 0.0).unwrap();
        square_dev = square_dev.max((s.iter().sum::<f64>() - 1.0).abs());
    }
    if shift_dev >= 1e-12 {
        failures.push(format!("shift {shift_dev:.1e}"));
    }
    if norm_dev >= 1e-12 {
        failures.push(format!("normalisation {norm_dev:.1e}"));
    }
    if square_dev >= 1e-12 {
        failures.push(format!("square law {square_dev:.1e}"));
    }

    let nm = preset(Preset::NmosPaper);
    let mut kcl_worst = 0.0f64;
    for _ in 0..200 {
        let mut net = nm.network.clone();
        net.load = LoadSpec::Resistor(rng.random_range(1e3..1e5));
        net.tail = TailSourceSpec::finite_impedance(200e-9, rng.random_range(1e5..1e8), 0.3);
        for d in &mut net.branch_devices {
            if let BranchDevice::Nmos(p) = d {
                p.clm_coefficient = rng.random_range(0.0..0.1);
            }
        }
        let x: Vec<f64> = (0..4).map(|_| rng.random_range(0.4..0.9)).collect();
        let tol = net.default_tolerance();
        let op = network::solve_operating_point(&net, &x, tol).unwrap();
        let total: f64 = op.branch_currents.iter().sum();
        kcl_worst = kcl_worst.max((total - net.tail.current(op.shared_node_voltage)).abs() / tol);
    }
    if kcl_worst > 1.0 {
        failures.push(format!("KCL {kcl_worst:.2} x tol"));
    }

    let z: [f64; 6] = [0.4, -1.0, 2.2, 0.0, 0.9, -0.3];
    let scale = 0.7;
    let jac = oracle::softmax_gradient(&z, scale).unwrap();
    let h = 1e-6_f64;
    let mut jac_dev = 0.0f64;
    for j in 0..z.len() {
        let (mut up, mut dn) = (z, z);
        up[j] += h;
        dn[j] -= h;
        let pu = oracle::softmax(&up, scale).unwrap();
        let pd = oracle::softmax(&dn, scale).unwrap();
        for i in 0..z.len() {
            jac_dev = jac_dev.max(((pu[i] - pd[i]) / (2.0 * h) - jac[i][j]).abs());
        }
    }
    if jac_dev >= 1e-6 {
        failures.push(format!("Jacobian {jac_dev:.1e}"));
    }

    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    for command in [Command::Transient, Command::Montecarlo, Command::Sweep, Command::Noise] {
        for d in &dirs {
            let m = RunManifest {
                preset: Some(Preset::NmosPaper),
                seed: 99,
                trials: Some(500),
                noise: Some(true),
                ..RunManifest::new(command, d.path())
            };
            run(&m).unwrap();
        }
    }
    for name in ["transient.csv", "montecarlo.csv", "sweep.csv", "noise.csv"] {
        let a = std::fs::read(dirs[0].path().join(name)).unwrap();
        let b = std::fs::read(dirs[1].path().join(name)).unwrap();
        if a != b {
            failures.push(format!("{name} differs between runs"));
        }
    }

    outcome(
        failures.is_empty(),
        if failures.is_empty() {
            format!(
                "shift {shift_dev:.1e}, sum {norm_dev:.1e}, square law {square_dev:.1e}, \
                 KCL {kcl_worst:.2} x tol, Jacobian {jac_dev:.1e}, CSV bytes identical"
            )
        } else {
            failures.join("; ")
        },
    )
}

fn sge_degradation() -> Outcome {
    let nm = preset(Preset::NmosPaper);
    let s = nm.sweep.clone().unwrap();
    let sweep_err = |tail: TailSourceSpec<f64>| {
        let mut net = nm.network.clone();
        net.tail = tail;
        analysis::sigmoid_sweep(&net, s.branch, (s.start, s.stop), s.points, s.bias)
            .unwrap()
            .max_abs_error_pct
    };
    let ideal = sweep_err(TailSourceSpec::ideal(200e-9));
    let finite: Vec<f64> = [0.1e6, 1e6, 10e6, 100e6]
        .iter()
        .map(|&r| sweep_err(TailSourceSpec::finite_impedance(200e-9, r, 0.3)))
        .collect();
    let sge = analysis::tail_systematic_gain_error(&TailSourceSpec::finite_impedance(200e-9, 1e6, 0.3), (0.3, 0.41));
    let ok = finite[1] > ideal
        && finite.windows(2).all(|w| w[1] < w[0])
        && finite[3] > ideal
        && (1e-7..1e-6).contains(&sge);
    outcome(
        ok,
        format!(
            "max error % ideal {ideal:.2e}; r_out 0.1/1/10/100 MOhm: {:.3}/{:.3}/{:.4}/{:.5}; SGE over 110 mV = {:.0} nA",
            finite[0],
            finite[1],
            finite[2],
            finite[3],
            sge * 1e9
        ),
    )
}

fn main() -> ExitCode {
    type Criterion = (u32, &'static str, fn() -> Outcome, u64);
    let criteria: [Criterion; 8] = [
        (1, "oracle equivalence", oracle_equivalence, 10),
        (2, "noise split", noise_split, 1),
        (3, "RC transient", rc_transient, 5),
        (4, "SNR calibration", snr_calibration, 10),
        (5, "error limits", error_limits, 30),
        (6, "mismatch law", mismatch_law, 60),
        (7, "invariance suite", invariance_suite, 10),
        (8, "SGE degradation", sge_degradation, 10),
    ];
    let mut failed = 0;
    for (id, name, check, bound) in criteria {
        let start = Instant::now();
        let o = check();
        let elapsed = start.elapsed();
        let in_time = elapsed < Duration::from_secs(bound);
        let pass = o.passed && in_time;
        if !pass {
            failed += 1;
        }
        println!(
            "criterion {id} [{name}]: {}  {}  ({:.2} s, bound {bound} s{})",
            if pass { "PASS" } else { "FAIL" },
            o.detail,
            elapsed.as_secs_f64(),
            if in_time { "" } else { ", over time" }
        );
    }
    println!("acceptance: {} of 8 criteria passed", 8 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

//! Exploration harness used while tuning the bundled scenarios.

use llcsim::*;

fn reference_params() -> ConverterParams {
    ConverterParams {
        v_in: 150.0,
        n1: 150.0 / 137.0,
        n2: 150.0 / 137.0,
        l_r1: 31e-6,
        l_r2: 31e-6,
        l_m1: 240e-6,
        l_m2: 240e-6,
        c_r1: 60e-9,
        c_r2: 60e-9,
        c_oss: 1e-9,
        c_o1: 4.7e-6,
        c_o2: 4.7e-6,
        f_s: 116.69e3,
        t_dead: 224e-9,
        r_ds_on: 0.0,
        v_f: 0.0,
    }
}

fn report(label: &str, params: &ConverterParams, loads: &LoadSpec, settings: &SimSettings) {
    let t0 = std::time::Instant::now();
    let (trace, residual) = run_to_steady_state(params, loads, settings).unwrap();
    let elapsed = t0.elapsed();
    let ss = trace.steady_state.unwrap();
    println!("==== {label} ====");
    println!(
        "cycles={} residual={:.3e} converged={} wall={:.2?} samples/period={}",
        ss.cycles, residual, ss.converged, elapsed, trace.len()
    );

    let power = power_report(&trace, params, loads).unwrap();
    println!(
        "p_in={:.2} W p_out1={:.2} W p_out2={:.2} W loss={:.3} W eff={:.4} balance={:.3e}",
        power.p_in, power.p_out1, power.p_out2, power.p_loss_conduction, power.efficiency,
        power.balance_residual
    );

    let zvs = zvs_report(&trace, params, default_zvs_threshold(params.v_in)).unwrap();
    println!(
        "zvs: achieved={:?} v_ds={:?} margins={:?} required_dt={:?} i_lm_pk={:?} t_dead={:.1} ns",
        zvs.switches.iter().map(|s| s.achieved).collect::<Vec<_>>(),
        zvs.switches.iter().map(|s| s.v_ds_at_turn_on).collect::<Vec<_>>(),
        zvs.switches.iter().map(|s| s.margin).collect::<Vec<_>>(),
        zvs.required_dead_time.map(|d| d * 1e9),
        zvs.i_lm_peaks,
        params.t_dead * 1e9,
    );

    println!(
        "v_o1 mean={:.2} v_o2 mean={:.2} vcr1_ac_pk={:.2} i_lr1_pk={:.3} i_lr2_pk={:.3}",
        trace.mean_of(|i| trace.x[i].v_o1),
        trace.mean_of(|i| trace.x[i].v_o2),
        analysis::vcr_ac_peak(&trace, Port::One),
        analysis::tank_peak_current(&trace, Port::One),
        analysis::tank_peak_current(&trace, Port::Two),
    );

    // Half-wave symmetry of tank states.
    let period = params.period();
    let grid = 512;
    let fields: [(&str, fn(&StateVector) -> f64); 6] = [
        ("i_lr1", |x| x.i_lr1),
        ("i_lr2", |x| x.i_lr2),
        ("i_lm1", |x| x.i_lm1),
        ("i_lm2", |x| x.i_lm2),
        ("v_cr1", |x| x.v_cr1),
        ("v_cr2", |x| x.v_cr2),
    ];
    for (name, f) in fields {
        let peak = trace.x.iter().map(|x| f(x).abs()).fold(0.0, f64::max);
        let mut worst: f64 = 0.0;
        for i in 0..grid {
            let t = period / 2.0 * i as f64 / grid as f64;
            let a = trace.interpolate(t, f);
            let b = trace.interpolate(t + period / 2.0, f);
            worst = worst.max((a + b).abs());
        }
        print!("{name}: asym={:.3}% ", 100.0 * worst / peak);
    }
    println!();

    // Event sequence of the second half period.
    println!("events (t in ns within period):");
    for e in &trace.events {
        println!("  {:>10.1}  {:?} {:?}", e.t * 1e9, e.kind, e.detail);
    }
    println!();
}

fn main() {
    let params = reference_params();
    let settings = SimSettings::default_for(params.f_s);

    // Balanced reference.
    report("reference balanced 270/270 W", &params, &LoadSpec::new(69.5, 69.5), &settings);

    // Case 1: 460 W / 80 W.
    report("case1 460/80 W", &params, &LoadSpec::new(40.8, 234.7), &settings);

    // Below resonance for the mode sequence.
    let mut below = params;
    below.f_s = 0.95 * 116.69e3;
    report("below resonance 0.95 f_r", &below, &LoadSpec::new(40.8, 234.7), &settings);

    // Hard-switched: zero dead time.
    let mut hard = params;
    hard.t_dead = 0.0;
    report("t_dead = 0", &hard, &LoadSpec::new(69.5, 69.5), &settings);
}

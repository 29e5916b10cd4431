//! Second exploration pass: convergence-rate and conservation tuning.

use llcsim::*;

fn params_with_co(c_o: f64) -> ConverterParams {
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
        c_o1: c_o,
        c_o2: c_o,
        f_s: 116.69e3,
        t_dead: 224e-9,
        r_ds_on: 0.0,
        v_f: 0.0,
    }
}

fn main() {
    // Convergence cycle count vs output capacitance.
    for c_o in [10e-6, 4.7e-6, 2.2e-6, 1.0e-6] {
        let params = params_with_co(c_o);
        let loads = LoadSpec::new(69.5, 69.5);
        let settings = SimSettings::default_for(params.f_s);
        let (trace, r) = run_to_steady_state(&params, &loads, &settings).unwrap();
        let ss = trace.steady_state.unwrap();
        let power = power_report(&trace, &params, &loads).unwrap();
        println!(
            "c_o={:>4.1}u cycles={:>3} r={:.2e} balance={:.2e} v_o_ripple_pp={:.2}",
            c_o * 1e6,
            ss.cycles,
            r,
            power.balance_residual,
            trace.x.iter().map(|x| x.v_o1).fold(f64::MIN, f64::max)
                - trace.x.iter().map(|x| x.v_o1).fold(f64::MAX, f64::min),
        );
    }

    // Tight tolerance: conservation quality for criterion-7-style runs.
    for (label, ss_tol, max_cycles) in [("1e-3", 1e-3, 500), ("1e-5", 1e-5, 1200), ("1e-7", 1e-7, 2000)]
    {
        let params = params_with_co(2.2e-6);
        let loads = LoadSpec::new(69.5, 69.5);
        let mut settings = SimSettings::default_for(params.f_s);
        settings.ss_tol = ss_tol;
        settings.max_cycles = max_cycles;
        let t0 = std::time::Instant::now();
        let (trace, r) = run_to_steady_state(&params, &loads, &settings).unwrap();
        let power = power_report(&trace, &params, &loads).unwrap();
        println!(
            "ss_tol={label}: cycles={} r={:.2e} balance={:.3e} eff={:.5} wall={:.2?}",
            trace.steady_state.unwrap().cycles,
            r,
            power.balance_residual,
            power.efficiency,
            t0.elapsed()
        );
    }

    // Conduction losses enabled: loss-accounting consistency.
    {
        let mut params = params_with_co(2.2e-6);
        params.r_ds_on = 0.1;
        params.v_f = 0.7;
        let loads = LoadSpec::new(69.5, 69.5);
        let mut settings = SimSettings::default_for(params.f_s);
        settings.ss_tol = 1e-5;
        settings.max_cycles = 1200;
        let (trace, _) = run_to_steady_state(&params, &loads, &settings).unwrap();
        let power = power_report(&trace, &params, &loads).unwrap();
        let consistency = ((power.p_in - power.p_out1 - power.p_out2) - power.p_loss_conduction).abs()
            / power.p_in;
        println!(
            "lossy: p_in={:.2} p_out={:.2} p_loss={:.2} eff={:.4} accounting={:.3e}",
            power.p_in,
            power.p_out1 + power.p_out2,
            power.p_loss_conduction,
            power.efficiency,
            consistency
        );
    }

    // Open port 2: ringing of the off tank for the spectrum check.
    {
        let params = params_with_co(2.2e-6);
        let loads = LoadSpec::new(208.6, f64::INFINITY);
        let mut settings = SimSettings::default_for(params.f_s);
        settings.dt = 1.0 / (params.f_s * 1024.0);
        settings.event_tol = settings.dt / 1024.0;
        settings.t_end = 200.0 / params.f_s;
        let t0 = std::time::Instant::now();
        let trace = simulate(&params, &loads, &settings, StateVector::zero()).unwrap();
        println!(
            "open-port sim: samples={} wall={:.2?} i_lr2 range=[{:.3},{:.3}] v_o2 end={:.2} diode2 events={}",
            trace.len(),
            t0.elapsed(),
            trace.x.iter().map(|x| x.i_lr2).fold(f64::MAX, f64::min),
            trace.x.iter().map(|x| x.i_lr2).fold(f64::MIN, f64::max),
            trace.x.last().unwrap().v_o2,
            trace
                .events
                .iter()
                .filter(|e| matches!(e.detail, EventDetail::Diode { port: Port::Two, .. }))
                .count()
        );
        // Last diode event on port 2 = start of the permanently-off interval.
        let last_d2 = trace
            .events
            .iter()
            .filter(|e| matches!(e.detail, EventDetail::Diode { port: Port::Two, .. }))
            .map(|e| e.t)
            .fold(0.0, f64::max);
        println!("last port-2 diode event at t={:.1} periods", last_d2 * params.f_s);
    }

    // Step-refinement: dt vs dt/2 on a 10-period fixed-horizon run.
    {
        let params = params_with_co(2.2e-6);
        let loads = LoadSpec::new(69.5, 69.5);
        let mut s1 = SimSettings::default_for(params.f_s);
        s1.t_end = 10.0 / params.f_s;
        let mut s2 = s1;
        s2.dt = s1.dt / 2.0;
        s2.event_tol = s1.event_tol / 2.0;
        let tr1 = simulate(&params, &loads, &s1, StateVector::zero()).unwrap();
        let tr2 = simulate(&params, &loads, &s2, StateVector::zero()).unwrap();
        let a = tr1.x.last().unwrap().to_array();
        let b = tr2.x.last().unwrap().to_array();
        let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
        let norm: f64 = b.iter().map(|v| v * v).sum::<f64>().sqrt();
        println!("refinement: |x_dt - x_dt/2| / |x| = {:.3e}", diff / norm);
    }
}

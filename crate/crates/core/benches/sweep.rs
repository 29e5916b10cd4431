//! Compares data-parallel and sequential execution of a load sweep.
//!
//! Run with `cargo bench -p llcsim`. The parallel group only exists when the
//! `parallel` feature (default) is enabled; the serial group always runs, so
//! a `--no-default-features` build benches the fallback path alone.

use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use llcsim::{ConverterParams, LoadSpec, SimSettings, SweepParam};

fn bench_params() -> (ConverterParams, LoadSpec, SimSettings) {
    let params = ConverterParams {
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
    };
    let loads = LoadSpec::new(69.5, 69.5);
    // Reduced resolution and cycle budget: the bench measures sweep
    // orchestration, not converged accuracy.
    let mut settings = SimSettings::default_for(params.f_s);
    settings.dt = 1.0 / (params.f_s * 1024.0);
    settings.event_tol = settings.dt / 1024.0;
    settings.ss_tol = 1e-2;
    settings.max_cycles = 40;
    (params, loads, settings)
}

fn sweep_benches(c: &mut Criterion) {
    let (params, loads, settings) = bench_params();
    let values = llcsim::sweep_values(208.6, 72.2, 8);

    let mut group = c.benchmark_group("load_sweep_8pt");
    group.sample_size(10);

    group.bench_function("serial", |b| {
        b.iter(|| {
            llcsim::run_sweep_serial(
                black_box(&params),
                black_box(&loads),
                &settings,
                SweepParam::RLoad1,
                &values,
            )
            .unwrap()
        })
    });

    #[cfg(feature = "parallel")]
    group.bench_function("parallel", |b| {
        b.iter(|| {
            llcsim::run_sweep(
                black_box(&params),
                black_box(&loads),
                &settings,
                SweepParam::RLoad1,
                &values,
            )
            .unwrap()
        })
    });

    group.finish();
}

criterion_group!(benches, sweep_benches);
criterion_main!(benches);

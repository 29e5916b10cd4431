//! Event-driven piecewise-linear simulator and analytic design toolkit for a
//! three-port isolated LLC DC-DC converter.
//!
//! The power stage is a fixed-frequency full bridge driving two independent
//! LLC tanks, one per two-winding transformer, each feeding a diode rectifier
//! and its own output port:
//!
//! ```text
//!        ┌──S1──┬────[l_r1]──[c_r1]──┬─(n1:1)─[rect]─┬─ v_o1
//! v_in ──┤      a                  [l_m1]          [c_o1]─[r_load1]
//!        ├──S2──┤                    │               │
//!        │      │                    ├───────────────┘ (port 1)
//!        ├──S3──┼────[l_r2]──[c_r2]──┤
//!        │      b                  [l_m2]  ... port 2 likewise
//!        └──S4──┘                    │
//! ```
//!
//! Within one conduction topology (bridge state plus rectifier polarities)
//! the circuit is linear; [`model`](crate::system) assembles the affine ODE
//! of each topology, the [`engine`] integrates it with fixed-step RK4 and
//! localizes conduction changes by bisection, and [`analysis`] provides the
//! closed-form design equations plus ZVS and power verification against the
//! simulated traces. [`sweep`] runs independent steady-state points, in
//! parallel under the default `parallel` feature.

pub mod analysis;
pub mod conduction;
pub mod engine;
pub mod error;
pub mod params;
pub mod state;
pub mod sweep;
pub mod system;
pub mod trace;

pub use analysis::{
    default_zvs_threshold, magnetizing_peak_current, power_report, required_dead_time,
    resonant_frequency, secondary_resonant_frequency, vcr_max, zvs_report, PowerReport, SwitchZvs,
    ZvsReport,
};
pub use conduction::{
    bridge_voltage, magnetizing_voltage, rectifier_transition, secondary_current, BridgeState,
    ConductionState, RectState,
};
pub use engine::{integrate_step, locate_event, run_to_steady_state, simulate, SimSettings};
pub use error::{Error, Result};
pub use params::{ConverterParams, LoadSpec, Port};
pub use state::StateVector;
pub use sweep::{run_sweep, run_sweep_serial, sweep_values, SweepParam, SweepRow};
pub use system::{assemble_system, AffineSystem, StateLayout, StateSlot};
pub use trace::{DerivedSignals, Event, EventDetail, EventKind, SteadyStateInfo, Trace};

/// Shared unit-test fixtures: the bundled 150 V reference design.
#[cfg(test)]
pub(crate) mod fixtures {
    use crate::params::{ConverterParams, LoadSpec};

    pub fn reference_params() -> ConverterParams {
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

    /// Balanced ~270 W per port at the nominal 137 V output.
    pub fn reference_loads() -> LoadSpec {
        LoadSpec::new(69.5, 69.5)
    }
}

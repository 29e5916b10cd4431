//! Time-sampled simulation output: states, derived signals and the event log.

use serde::Serialize;

use crate::conduction::{BridgeState, ConductionState, RectState};
use crate::params::{ConverterParams, LoadSpec, Port};
use crate::state::StateVector;

/// Signals derived from a state sample and its conduction topology.
#[derive(Clone, Copy, Debug, Default, Serialize)]
pub struct DerivedSignals {
    /// Rectifier diode currents D1..D8, amperes. D1..D4 belong to port 1,
    /// D5..D8 to port 2; within a port the POS pair is (D1, D4) / (D5, D8)
    /// and the NEG pair (D2, D3) / (D6, D7).
    pub i_d: [f64; 8],
    /// Drain-source voltages of S1..S4, volts.
    pub v_ds: [f64; 4],
    /// Current drawn from the input rail, amperes.
    pub i_in: f64,
    /// Instantaneous input power, watts.
    pub p_in: f64,
    /// Instantaneous power into each load, watts.
    pub p_o1: f64,
    pub p_o2: f64,
}

impl DerivedSignals {
    pub fn compute(
        x: &StateVector,
        cond: &ConductionState,
        params: &ConverterParams,
        loads: &LoadSpec,
    ) -> Self {
        let mut i_d = [0.0; 8];
        for port in Port::BOTH {
            let i_s = crate::conduction::secondary_current(port, x, params);
            let base = 4 * port.index();
            match cond.rect(port) {
                RectState::Pos => {
                    i_d[base] = i_s;
                    i_d[base + 3] = i_s;
                }
                RectState::Neg => {
                    i_d[base + 1] = -i_s;
                    i_d[base + 2] = -i_s;
                }
                RectState::Off => {}
            }
        }

        let v_ds = [
            params.v_in - x.v_a, // S1: rail to node A
            x.v_a,               // S2: node A to ground
            params.v_in - x.v_b, // S3: rail to node B
            x.v_b,               // S4: node B to ground
        ];

        let i_p = x.primary_current();
        let i_in = match cond.bridge {
            BridgeState::P | BridgeState::ClampP => i_p,
            BridgeState::N | BridgeState::ClampN => -i_p,
            // During dead time the rail sources the two high-side c_oss
            // displacement currents, which cancel (+i_p/2 and −i_p/2).
            BridgeState::Dead => 0.0,
        };

        DerivedSignals {
            i_d,
            v_ds,
            i_in,
            p_in: params.v_in * i_in,
            p_o1: x.v_o1 * x.v_o1 * loads.conductance(Port::One),
            p_o2: x.v_o2 * x.v_o2 * loads.conductance(Port::Two),
        }
    }

    /// Instantaneous conduction loss for the sample, watts: channel loss
    /// `2·r_ds_on·i_p²` while a switch pair conducts plus `v_f·|i_d|` per
    /// conducting rectifier diode.
    pub fn conduction_loss(
        x: &StateVector,
        cond: &ConductionState,
        params: &ConverterParams,
    ) -> f64 {
        let mut loss = 0.0;
        if cond.bridge.through_channels() {
            let i_p = x.primary_current();
            loss += 2.0 * params.r_ds_on * i_p * i_p;
        }
        for port in Port::BOTH {
            if cond.rect(port).is_conducting() {
                let i_s = crate::conduction::secondary_current(port, x, params);
                loss += 2.0 * params.v_f * i_s.abs();
            }
        }
        loss
    }
}

/// Classification of a logged event.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum EventKind {
    GateEdge,
    DiodeOn,
    DiodeOff,
    NodeClamp,
    HardSwitch,
}

impl EventKind {
    pub fn tag(self) -> &'static str {
        match self {
            EventKind::GateEdge => "GATE_EDGE",
            EventKind::DiodeOn => "DIODE_ON",
            EventKind::DiodeOff => "DIODE_OFF",
            EventKind::NodeClamp => "NODE_CLAMP",
            EventKind::HardSwitch => "HARD_SWITCH",
        }
    }
}

/// Structured payload of an event.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum EventDetail {
    /// A switch pair was gated off; the bridge enters dead time.
    GateOff,
    /// A switch pair was gated on. `v_ds_incoming` holds the drain-source
    /// voltages of the two incoming switches immediately before turn-on
    /// ((S1, S4) for `P`, (S2, S3) for `N`).
    GateOn { bridge: BridgeState, v_ds_incoming: [f64; 2] },
    /// A rectifier pair changed conduction. `bracket` is the width of the
    /// final event-localization bracket (0 for instantaneous transitions).
    Diode { port: Port, rect: RectState, bracket: f64 },
    /// The bridge nodes completed their swing and the incoming body diodes
    /// clamp them to the rails.
    NodeClamp { clamp: BridgeState, bracket: f64 },
    /// Gate-on arrived before the node swing completed; the residual
    /// drain-source voltages of the incoming pair were discharged hard.
    HardSwitch { bridge: BridgeState, v_ds_incoming: [f64; 2] },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Event {
    pub t: f64,
    pub kind: EventKind,
    pub detail: EventDetail,
}

/// Convergence bookkeeping attached to traces produced by
/// [`run_to_steady_state`](crate::engine::run_to_steady_state).
#[derive(Clone, Copy, Debug, Serialize)]
pub struct SteadyStateInfo {
    /// Relative period-to-period residual of the last completed cycle.
    pub residual: f64,
    /// Number of switching periods simulated.
    pub cycles: usize,
    pub converged: bool,
}

/// Time-sampled states plus derived signals and the event log.
///
/// Sample times are strictly increasing; every conduction change produces a
/// sample at the transition instant carrying the post-transition topology.
#[derive(Clone, Debug, Default)]
pub struct Trace {
    pub t: Vec<f64>,
    pub x: Vec<StateVector>,
    pub cond: Vec<ConductionState>,
    pub derived: Vec<DerivedSignals>,
    pub events: Vec<Event>,
    pub steady_state: Option<SteadyStateInfo>,
}

impl Trace {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    /// Appends a sample; a sample at the same time as the previous one
    /// replaces it (same-instant transition chains collapse into the final
    /// topology), keeping `t` strictly increasing.
    pub(crate) fn push_sample(
        &mut self,
        t: f64,
        x: StateVector,
        cond: ConductionState,
        derived: DerivedSignals,
    ) {
        if self.t.last() == Some(&t) {
            *self.x.last_mut().unwrap() = x;
            *self.cond.last_mut().unwrap() = cond;
            *self.derived.last_mut().unwrap() = derived;
        } else {
            debug_assert!(self.t.last().is_none_or(|last| t > *last));
            self.t.push(t);
            self.x.push(x);
            self.cond.push(cond);
            self.derived.push(derived);
        }
    }

    pub(crate) fn push_event(&mut self, t: f64, kind: EventKind, detail: EventDetail) {
        self.events.push(Event { t, kind, detail });
    }

    pub fn events_of_kind(&self, kind: EventKind) -> impl Iterator<Item = &Event> {
        self.events.iter().filter(move |e| e.kind == kind)
    }

    /// Linear interpolation of one state field at an arbitrary time inside
    /// the sampled span. `field` selects the component from each sample.
    pub fn interpolate(&self, t: f64, field: impl Fn(&StateVector) -> f64) -> f64 {
        assert!(!self.is_empty(), "empty trace");
        match self.t.binary_search_by(|probe| probe.partial_cmp(&t).unwrap()) {
            Ok(i) => field(&self.x[i]),
            Err(0) => field(&self.x[0]),
            Err(i) if i == self.len() => field(&self.x[self.len() - 1]),
            Err(i) => {
                let (t0, t1) = (self.t[i - 1], self.t[i]);
                let (y0, y1) = (field(&self.x[i - 1]), field(&self.x[i]));
                y0 + (y1 - y0) * (t - t0) / (t1 - t0)
            }
        }
    }

    /// Trapezoidal mean of a per-sample quantity over the full span.
    pub fn mean_of(&self, value: impl Fn(usize) -> f64) -> f64 {
        assert!(self.len() >= 2, "need at least two samples");
        let mut integral = 0.0;
        for i in 1..self.len() {
            let dt = self.t[i] - self.t[i - 1];
            integral += 0.5 * (value(i) + value(i - 1)) * dt;
        }
        integral / (self.t[self.len() - 1] - self.t[0])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn same_instant_samples_collapse() {
        let params = fixtures::reference_params();
        let loads = fixtures::reference_loads();
        let cond_a = ConductionState::new(BridgeState::P, RectState::Off, RectState::Off);
        let cond_b = ConductionState::new(BridgeState::P, RectState::Pos, RectState::Off);
        let x = StateVector::zero();
        let d = DerivedSignals::compute(&x, &cond_a, &params, &loads);

        let mut trace = Trace::default();
        trace.push_sample(0.0, x, cond_a, d);
        trace.push_sample(1e-6, x, cond_a, d);
        trace.push_sample(1e-6, x, cond_b, d);
        assert_eq!(trace.len(), 2);
        assert_eq!(trace.cond[1], cond_b);
    }

    #[test]
    fn diode_currents_follow_polarity() {
        let params = fixtures::reference_params();
        let loads = fixtures::reference_loads();
        let mut x = StateVector::zero();
        x.i_lr1 = 2.0;
        x.i_lm1 = 0.5;
        x.i_lr2 = -1.0;
        x.i_lm2 = 0.5;

        let cond = ConductionState::new(BridgeState::P, RectState::Pos, RectState::Neg);
        let d = DerivedSignals::compute(&x, &cond, &params, &loads);
        let i_s1 = params.n1 * 1.5;
        let i_s2 = params.n2 * -1.5;
        assert_eq!(d.i_d[0], i_s1);
        assert_eq!(d.i_d[3], i_s1);
        assert_eq!(d.i_d[1], 0.0);
        // Port 2 NEG pair carries the magnitude of the (negative) secondary current.
        assert_eq!(d.i_d[5], -i_s2);
        assert_eq!(d.i_d[6], -i_s2);
        assert_eq!(d.i_d[4], 0.0);
    }

    #[test]
    fn input_current_cancels_during_dead_time() {
        let params = fixtures::reference_params();
        let loads = fixtures::reference_loads();
        let mut x = StateVector::zero();
        x.i_lr1 = 3.0;
        let cond = ConductionState::new(BridgeState::Dead, RectState::Off, RectState::Off);
        let d = DerivedSignals::compute(&x, &cond, &params, &loads);
        assert_eq!(d.i_in, 0.0);

        let cond = ConductionState::new(BridgeState::N, RectState::Off, RectState::Off);
        let d = DerivedSignals::compute(&x, &cond, &params, &loads);
        assert_eq!(d.i_in, -3.0);
    }

    #[test]
    fn interpolation_is_linear_between_samples() {
        let params = fixtures::reference_params();
        let loads = fixtures::reference_loads();
        let cond = ConductionState::new(BridgeState::P, RectState::Off, RectState::Off);
        let mut trace = Trace::default();
        for (t, v) in [(0.0, 1.0), (1.0, 3.0)] {
            let mut x = StateVector::zero();
            x.i_lr1 = v;
            trace.push_sample(t, x, cond, DerivedSignals::compute(&x, &cond, &params, &loads));
        }
        assert_eq!(trace.interpolate(0.5, |x| x.i_lr1), 2.0);
        assert_eq!(trace.interpolate(-1.0, |x| x.i_lr1), 1.0);
        assert_eq!(trace.interpolate(2.0, |x| x.i_lr1), 3.0);
    }
}

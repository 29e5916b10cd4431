//! Event-driven integration of the mode-wise affine ODEs.
//!
//! The engine advances the circuit with fixed-step classical RK4 inside one
//! conduction topology and localizes conduction changes (diode edges, node
//! clamps) by bisection on scalar event functions, re-integrating from the
//! step start within the frozen mode. Gate edges come from the fixed
//! 50%-complementary schedule and are hit exactly. Everything is
//! deterministic: identical inputs produce bit-identical traces.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::conduction::{
    magnetizing_voltage, rectifier_transition, secondary_current, BridgeState, ConductionState,
    RectState,
};
use crate::error::{Error, Result};
use crate::params::{ConverterParams, LoadSpec, Port};
use crate::state::StateVector;
use crate::system::{assemble_system, AffineSystem};
use crate::trace::{DerivedSignals, EventDetail, EventKind, SteadyStateInfo, Trace};

/// Default resolution: dt = T_s / 4096.
pub const DEFAULT_STEPS_PER_PERIOD: f64 = 4096.0;
/// Default event bracketing tolerance: dt / 1024.
pub const DEFAULT_EVENT_TOL_RATIO: f64 = 1024.0;
/// Default steady-state residual target.
pub const DEFAULT_SS_TOL: f64 = 1e-3;
/// Default cycle budget for the steady-state march.
pub const DEFAULT_MAX_CYCLES: usize = 500;

/// Abort threshold: more discrete transitions than this within one base step
/// indicates chattering.
const CHATTER_LIMIT: usize = 50;
/// Residual node voltage (relative to v_in) above which a gate-on is logged
/// as a hard/partial switching event.
const HARD_SWITCH_NODE_TOL: f64 = 1e-6;
/// Denominator regularization of the steady-state residual.
const RESIDUAL_EPS: f64 = 1e-12;

/// Integration and convergence settings.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimSettings {
    /// Base integration step, seconds.
    pub dt: f64,
    /// Horizon for fixed-span simulation, seconds.
    pub t_end: f64,
    /// Event-time bracketing tolerance, seconds.
    pub event_tol: f64,
    /// Steady-state relative residual target.
    pub ss_tol: f64,
    /// Cycle budget for [`run_to_steady_state`].
    pub max_cycles: usize,
}

impl SimSettings {
    /// Defaults scaled to the switching frequency: dt = T_s/4096,
    /// event_tol = dt/1024, ss_tol = 1e-3, max_cycles = 500, and a 50-period
    /// horizon for fixed-span runs.
    pub fn default_for(f_s: f64) -> Self {
        let period = 1.0 / f_s;
        let dt = period / DEFAULT_STEPS_PER_PERIOD;
        Self {
            dt,
            t_end: 50.0 * period,
            event_tol: dt / DEFAULT_EVENT_TOL_RATIO,
            ss_tol: DEFAULT_SS_TOL,
            max_cycles: DEFAULT_MAX_CYCLES,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::param("dt", format!("must be finite and > 0, got {}", self.dt)));
        }
        if !(self.t_end.is_finite() && self.t_end > 0.0) {
            return Err(Error::param("t_end", format!("must be finite and > 0, got {}", self.t_end)));
        }
        if !(self.event_tol.is_finite() && self.event_tol > 0.0 && self.event_tol < self.dt) {
            return Err(Error::param(
                "event_tol",
                format!("must satisfy 0 < event_tol < dt, got {}", self.event_tol),
            ));
        }
        if !(self.ss_tol.is_finite() && self.ss_tol > 0.0) {
            return Err(Error::param("ss_tol", format!("must be > 0, got {}", self.ss_tol)));
        }
        if self.max_cycles == 0 {
            return Err(Error::param("max_cycles", "must be >= 1".to_string()));
        }
        Ok(())
    }
}

/// One classical 4th-order Runge-Kutta step of `dx/dt = A·x + b`.
pub fn integrate_step(sys: &AffineSystem, x: &DVector<f64>, dt: f64) -> Result<DVector<f64>> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::param("dt", format!("must be finite and > 0, got {dt}")));
    }
    if !sys.is_finite() {
        return Err(Error::NonFinite { what: "affine system", t: f64::NAN });
    }
    let x1 = rk4(sys, x, dt);
    if x1.iter().all(|v| v.is_finite()) {
        Ok(x1)
    } else {
        Err(Error::NonFinite { what: "integration step", t: f64::NAN })
    }
}

fn rk4(sys: &AffineSystem, x: &DVector<f64>, h: f64) -> DVector<f64> {
    let k1 = sys.derivative(x);
    let k2 = sys.derivative(&(x + &k1 * (h / 2.0)));
    let k3 = sys.derivative(&(x + &k2 * (h / 2.0)));
    let k4 = sys.derivative(&(x + &k3 * h));
    x + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0)
}

/// RK4 applied to an autonomous affine system is exactly the degree-4 Taylor
/// polynomial of the matrix exponential; for the repeated base step the
/// propagator pair `(phi, gamma)` is precomputed once per mode so that each
/// step is a single matrix-vector product `x' = phi·x + gamma`.
struct Stepper {
    phi: DMatrix<f64>,
    gamma: DVector<f64>,
}

impl Stepper {
    fn new(sys: &AffineSystem, h: f64) -> Self {
        let n = sys.dim();
        let ha = &sys.a * h;
        let id = DMatrix::<f64>::identity(n, n);

        // Horner form of I + hA + (hA)²/2 + (hA)³/6 + (hA)⁴/24.
        let mut p = &id + &ha * (1.0 / 4.0);
        p = &id + (&ha * &p) * (1.0 / 3.0);
        p = &id + (&ha * &p) * (1.0 / 2.0);
        let phi = &id + &ha * &p;

        // h·(I + hA/2 + (hA)²/6 + (hA)³/24)·b, same nesting.
        let mut g = &sys.b + (&ha * &sys.b) * (1.0 / 4.0);
        g = &sys.b + (&ha * &g) * (1.0 / 3.0);
        g = &sys.b + (&ha * &g) * (1.0 / 2.0);
        let gamma = g * h;

        Self { phi, gamma }
    }

    fn step_into(&self, x: &DVector<f64>, out: &mut DVector<f64>) {
        out.copy_from(&self.gamma);
        out.gemv(1.0, &self.phi, x, 1.0);
    }
}

/// Bisection root bracketing for a scalar event function with a strict sign
/// change on `[t0, t1]`. Returns the right end of the final bracket (the
/// first probed time past the crossing), bracketed to within `event_tol`.
pub fn locate_event(f: impl Fn(f64) -> f64, t0: f64, t1: f64, event_tol: f64) -> Result<f64> {
    bisect(f, t0, t1, event_tol).map(|(t, _)| t)
}

fn bisect(f: impl Fn(f64) -> f64, t0: f64, t1: f64, event_tol: f64) -> Result<(f64, f64)> {
    assert!(t1 > t0, "bisection bracket must have positive width");
    assert!(event_tol > 0.0, "event_tol must be positive");
    let f0 = f(t0);
    let f1 = f(t1);
    if f0 == 0.0 || f0 * f1 > 0.0 {
        return Err(Error::NoSignChange { t0, t1, f0, f1 });
    }
    let sign0 = f0.signum();
    let (mut a, mut b) = (t0, t1);
    while b - a > event_tol {
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            break; // bracket at floating-point resolution
        }
        if f(mid) * sign0 > 0.0 {
            a = mid;
        } else {
            b = mid;
        }
    }
    Ok((b, b - a))
}

/// Scalar event functions monitored within one conduction topology. Each is
/// positive in the current mode and a strict crossing to negative triggers
/// the associated transition.
#[derive(Clone, Copy, Debug, PartialEq)]
enum EventCheck {
    /// Conducting rectifier current returning to zero.
    RectOff(Port),
    /// Blocked rectifier forward-biasing in the positive polarity.
    RectOnPos(Port),
    /// Blocked rectifier forward-biasing in the negative polarity.
    RectOnNeg(Port),
    /// Node A reaching ground during dead time (clamp into `N` rails).
    ClampLow,
    /// Node A reaching the rail during dead time (clamp into `P` rails).
    ClampHigh,
}

fn event_value(
    check: EventCheck,
    x: &StateVector,
    cond: &ConductionState,
    params: &ConverterParams,
) -> f64 {
    match check {
        EventCheck::RectOff(port) => {
            let sign = cond
                .rect(port)
                .sign()
                .expect("RectOff is only monitored while conducting");
            sign * secondary_current(port, x, params)
        }
        EventCheck::RectOnPos(port) => {
            let threshold = params.tank(port).n * (x.v_out(port) + 2.0 * params.v_f);
            threshold - magnetizing_voltage(port, cond, x, params)
        }
        EventCheck::RectOnNeg(port) => {
            let threshold = params.tank(port).n * (x.v_out(port) + 2.0 * params.v_f);
            magnetizing_voltage(port, cond, x, params) + threshold
        }
        EventCheck::ClampLow => x.v_a,
        EventCheck::ClampHigh => params.v_in - x.v_a,
    }
}

fn event_catalog(cond: &ConductionState) -> Vec<EventCheck> {
    let mut checks = Vec::with_capacity(6);
    for port in Port::BOTH {
        if cond.rect(port).is_conducting() {
            checks.push(EventCheck::RectOff(port));
        } else {
            checks.push(EventCheck::RectOnPos(port));
            checks.push(EventCheck::RectOnNeg(port));
        }
    }
    if cond.bridge == BridgeState::Dead {
        checks.push(EventCheck::ClampLow);
        checks.push(EventCheck::ClampHigh);
    }
    checks
}

struct Runner<'a> {
    params: &'a ConverterParams,
    loads: &'a LoadSpec,
    settings: &'a SimSettings,
    t: f64,
    x: StateVector,
    cond: ConductionState,
    sys: AffineSystem,
    stepper: Stepper,
    checks: Vec<EventCheck>,
    packed: DVector<f64>,
    step_buf: DVector<f64>,
    trace: Trace,
    half: f64,
    /// Index of the half-period currently being executed.
    cur_half: u64,
    off_fired: bool,
    chatter_window_start: f64,
    chatter_count: usize,
}

impl<'a> Runner<'a> {
    fn new(
        params: &'a ConverterParams,
        loads: &'a LoadSpec,
        settings: &'a SimSettings,
        x0: StateVector,
        carry: Option<ConductionState>,
    ) -> Result<Self> {
        params.validate()?;
        loads.validate()?;
        settings.validate()?;
        if !x0.is_finite() {
            return Err(Error::NonFinite { what: "initial state", t: 0.0 });
        }

        let cond = carry.unwrap_or(ConductionState::new(
            BridgeState::Dead,
            RectState::Off,
            RectState::Off,
        ));
        let x = x0.with_pinned_nodes(&cond, params);
        let sys = assemble_system(params, &cond, loads)?;
        let stepper = Stepper::new(&sys, settings.dt);
        let checks = event_catalog(&cond);
        let packed = sys.layout.pack(&x);
        let dim = packed.len();

        let mut runner = Self {
            params,
            loads,
            settings,
            t: 0.0,
            x,
            cond,
            sys,
            stepper,
            checks,
            packed,
            step_buf: DVector::zeros(dim),
            trace: Trace::default(),
            half: 0.5 / params.f_s,
            cur_half: 0,
            off_fired: false,
            chatter_window_start: 0.0,
            chatter_count: 0,
        };

        // The schedule opens with the gate-on edge of the P pair at t = 0.
        runner.apply_gate_on(0.0)?;
        runner.settle_rectifiers(0.0)?;
        runner.rebuild();
        runner.record_sample();
        Ok(runner)
    }

    fn pair_for(half_index: u64) -> BridgeState {
        if half_index % 2 == 0 {
            BridgeState::P
        } else {
            BridgeState::N
        }
    }

    fn next_gate_time(&self) -> f64 {
        let boundary = (self.cur_half + 1) as f64 * self.half;
        if self.off_fired {
            boundary
        } else {
            boundary - self.params.t_dead
        }
    }

    fn record_sample(&mut self) {
        let derived = DerivedSignals::compute(&self.x, &self.cond, self.params, self.loads);
        self.trace.push_sample(self.t, self.x, self.cond, derived);
    }

    fn rebuild(&mut self) {
        // Components were validated at construction; assembly cannot fail here.
        self.sys = assemble_system(self.params, &self.cond, self.loads)
            .expect("validated inputs assemble");
        self.stepper = Stepper::new(&self.sys, self.settings.dt);
        self.checks = event_catalog(&self.cond);
        self.packed = self.sys.layout.pack(&self.x);
        self.step_buf = DVector::zeros(self.packed.len());
    }

    fn note_transition(&mut self, at: f64) -> Result<()> {
        if at - self.chatter_window_start >= self.settings.dt {
            self.chatter_window_start = at;
            self.chatter_count = 0;
        }
        self.chatter_count += 1;
        if self.chatter_count > CHATTER_LIMIT {
            Err(Error::Chattering { t: at, count: self.chatter_count })
        } else {
            Ok(())
        }
    }

    /// Applies the rectifier conduction rules until a fixpoint, emitting one
    /// event per pair change. Returns true if anything changed.
    fn settle_rectifiers(&mut self, at: f64) -> Result<bool> {
        let mut changed = false;
        loop {
            let next = rectifier_transition(&self.x, &self.cond, self.params);
            if next == self.cond {
                return Ok(changed);
            }
            for port in Port::BOTH {
                let (old, new) = (self.cond.rect(port), next.rect(port));
                if old == new {
                    continue;
                }
                if new == RectState::Off {
                    self.merge_off_currents(port);
                }
                let kind = if new == RectState::Off { EventKind::DiodeOff } else { EventKind::DiodeOn };
                self.trace.push_event(
                    at,
                    kind,
                    EventDetail::Diode { port, rect: new, bracket: 0.0 },
                );
                self.note_transition(at)?;
            }
            self.cond = next;
            changed = true;
        }
    }

    /// Enters the off topology with the flux-conserving common current, so
    /// the `i_lr = i_lm` identity holds exactly from the transition on.
    fn merge_off_currents(&mut self, port: Port) {
        let tank = self.params.tank(port);
        let merged = (tank.l_r * self.x.i_lr(port) + tank.l_m * self.x.i_lm(port))
            / (tank.l_r + tank.l_m);
        self.x.set_i_lr(port, merged);
        self.x.set_i_lm(port, merged);
    }

    fn clamp_bridge(&mut self, to: BridgeState, at: f64, bracket: f64) -> Result<()> {
        self.cond.bridge = to;
        self.x = self.x.with_pinned_nodes(&self.cond, self.params);
        self.trace
            .push_event(at, EventKind::NodeClamp, EventDetail::NodeClamp { clamp: to, bracket });
        self.note_transition(at)
    }

    fn apply_gate_on(&mut self, at: f64) -> Result<()> {
        let incoming = Self::pair_for(self.cur_half);
        let v_ds_incoming = match incoming {
            BridgeState::P => [self.params.v_in - self.x.v_a, self.x.v_b],
            BridgeState::N => [self.x.v_a, self.params.v_in - self.x.v_b],
            _ => unreachable!("gate-on targets a conducting pair"),
        };
        let residual = v_ds_incoming[0].abs().max(v_ds_incoming[1].abs());
        if residual > HARD_SWITCH_NODE_TOL * self.params.v_in + 1e-9 {
            self.trace.push_event(
                at,
                EventKind::HardSwitch,
                EventDetail::HardSwitch { bridge: incoming, v_ds_incoming },
            );
        }
        self.cond.bridge = incoming;
        self.x = self.x.with_pinned_nodes(&self.cond, self.params);
        self.trace.push_event(
            at,
            EventKind::GateEdge,
            EventDetail::GateOn { bridge: incoming, v_ds_incoming },
        );
        Ok(())
    }

    fn apply_gate_off(&mut self, at: f64) -> Result<()> {
        let was = self.cond.bridge;
        self.cond.bridge = BridgeState::Dead;
        self.trace.push_event(at, EventKind::GateEdge, EventDetail::GateOff);

        // If the tank current already pushes the freed nodes outward, the
        // body diodes of the pair that just released hold them at the rails.
        let i_p = self.x.primary_current();
        match was {
            BridgeState::P if i_p < 0.0 => self.clamp_bridge(BridgeState::ClampP, at, 0.0)?,
            BridgeState::N if i_p > 0.0 => self.clamp_bridge(BridgeState::ClampN, at, 0.0)?,
            _ => {}
        }
        Ok(())
    }

    fn apply_gate_boundary(&mut self, at: f64) -> Result<()> {
        if self.off_fired {
            self.cur_half += 1;
            self.apply_gate_on(at)?;
            self.off_fired = false;
        } else {
            self.apply_gate_off(at)?;
            self.off_fired = true;
        }
        self.settle_rectifiers(at)?;
        self.rebuild();
        Ok(())
    }

    fn apply_located_event(&mut self, check: EventCheck, at: f64, bracket: f64) -> Result<()> {
        match check {
            EventCheck::RectOff(port) => {
                self.merge_off_currents(port);
                self.cond = self.cond.with_rect(port, RectState::Off);
                self.trace.push_event(
                    at,
                    EventKind::DiodeOff,
                    EventDetail::Diode { port, rect: RectState::Off, bracket },
                );
                self.note_transition(at)?;
            }
            EventCheck::RectOnPos(port) | EventCheck::RectOnNeg(port) => {
                let rect = if matches!(check, EventCheck::RectOnPos(_)) {
                    RectState::Pos
                } else {
                    RectState::Neg
                };
                self.cond = self.cond.with_rect(port, rect);
                self.trace
                    .push_event(at, EventKind::DiodeOn, EventDetail::Diode { port, rect, bracket });
                self.note_transition(at)?;
            }
            EventCheck::ClampLow => self.clamp_bridge(BridgeState::ClampN, at, bracket)?,
            EventCheck::ClampHigh => self.clamp_bridge(BridgeState::ClampP, at, bracket)?,
        }
        Ok(())
    }

    /// Safety net for transitions whose event function never produced a
    /// strict sign change (grazing crossings starting exactly at a
    /// boundary). Reapplies the instantaneous rules at the current sample.
    fn enforce_consistency(&mut self, at: f64) -> Result<()> {
        let mut changed = false;
        if self.cond.bridge == BridgeState::Dead {
            let guard = 1e-9 * (1.0 + self.params.v_in);
            if self.x.v_a < -guard {
                self.clamp_bridge(BridgeState::ClampN, at, 0.0)?;
                changed = true;
            } else if self.x.v_a > self.params.v_in + guard {
                self.clamp_bridge(BridgeState::ClampP, at, 0.0)?;
                changed = true;
            }
        }
        changed |= self.settle_rectifiers(at)?;
        if changed {
            self.rebuild();
        }
        Ok(())
    }

    fn run_until(&mut self, t_stop: f64) -> Result<()> {
        while self.t < t_stop {
            let gate_t = self.next_gate_time();
            if gate_t <= self.t {
                self.apply_gate_boundary(gate_t)?;
                self.record_sample();
                continue;
            }

            let to_gate = gate_t - self.t;
            let to_stop = t_stop - self.t;
            let h = self.settings.dt.min(to_gate).min(to_stop);
            let t_next = if h == to_gate {
                gate_t
            } else if h == to_stop {
                t_stop
            } else {
                self.t + h
            };

            if h == self.settings.dt {
                self.stepper.step_into(&self.packed, &mut self.step_buf);
            } else {
                self.step_buf = rk4(&self.sys, &self.packed, h);
            }
            if !self.step_buf.iter().all(|v| v.is_finite()) {
                return Err(Error::NonFinite { what: "simulation state", t: self.t });
            }

            let x1 = self.sys.layout.unpack(&self.step_buf, &self.cond, self.params);

            // Scan the event functions across the step; bisect the earliest
            // strict crossing.
            let mut hit: Option<(f64, f64, EventCheck)> = None;
            let mut grazing = false;
            for &check in &self.checks {
                let g0 = event_value(check, &self.x, &self.cond, self.params);
                let g1 = event_value(check, &x1, &self.cond, self.params);
                if g0 > 0.0 && g1 < 0.0 {
                    let f = |tau: f64| {
                        if tau <= self.t {
                            return g0;
                        }
                        let v = rk4(&self.sys, &self.packed, tau - self.t);
                        let xf = self.sys.layout.unpack(&v, &self.cond, self.params);
                        event_value(check, &xf, &self.cond, self.params)
                    };
                    let (te, width) = bisect(f, self.t, t_next, self.settings.event_tol)?;
                    if hit.is_none_or(|(best, _, _)| te < best) {
                        hit = Some((te, width, check));
                    }
                } else if g1 < -1e-7 {
                    grazing = true;
                }
            }

            match hit {
                Some((te, width, check)) => {
                    let v = rk4(&self.sys, &self.packed, te - self.t);
                    self.x = self.sys.layout.unpack(&v, &self.cond, self.params);
                    self.t = te;
                    self.apply_located_event(check, te, width)?;
                    self.settle_rectifiers(te)?;
                    self.rebuild();
                    self.record_sample();
                }
                None => {
                    self.x = x1;
                    std::mem::swap(&mut self.packed, &mut self.step_buf);
                    self.t = t_next;
                    if grazing {
                        self.enforce_consistency(t_next)?;
                    }
                    self.record_sample();
                }
            }
        }
        Ok(())
    }

    fn into_trace(self) -> Trace {
        self.trace
    }
}

/// Simulates the converter over `settings.t_end` from the given initial
/// state, with the gate schedule starting at a P-pair turn-on at t = 0.
pub fn simulate(
    params: &ConverterParams,
    loads: &LoadSpec,
    settings: &SimSettings,
    x0: StateVector,
) -> Result<Trace> {
    let mut runner = Runner::new(params, loads, settings, x0, None)?;
    runner.run_until(settings.t_end)?;
    Ok(runner.into_trace())
}

/// Marches whole switching periods from the zero state until the relative
/// period-to-period residual drops below `settings.ss_tol` or the cycle
/// budget runs out. Returns the final-period trace and the residual; a
/// non-converged march still returns its last trace, flagged in
/// [`Trace::steady_state`].
pub fn run_to_steady_state(
    params: &ConverterParams,
    loads: &LoadSpec,
    settings: &SimSettings,
) -> Result<(Trace, f64)> {
    params.validate()?;
    settings.validate()?;
    let period = params.period();
    let period_settings = SimSettings { t_end: period, ..*settings };

    let mut x = StateVector::zero();
    let mut carry: Option<ConductionState> = None;
    let mut residual = f64::INFINITY;
    let mut converged = false;
    let mut cycles = 0;
    let mut trace = Trace::default();

    for cycle in 1..=settings.max_cycles {
        let mut runner = Runner::new(params, loads, &period_settings, x, carry)?;
        runner.run_until(period)?;
        let x_end = runner.x;
        carry = Some(runner.cond);

        let mut diff = 0.0;
        for (a, b) in x_end.to_array().iter().zip(x.to_array()) {
            diff += (a - b) * (a - b);
        }
        residual = diff.sqrt() / (x.norm() + RESIDUAL_EPS);
        cycles = cycle;
        x = x_end;
        trace = runner.into_trace();
        if residual < settings.ss_tol {
            converged = true;
            break;
        }
    }

    trace.steady_state = Some(SteadyStateInfo { residual, cycles, converged });
    Ok((trace, residual))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::system::StateSlot;

    fn lc_system(l: f64, c: f64) -> AffineSystem {
        // Single undamped LC tank expressed as an off-rectifier topology with
        // a vanishing magnetizing inductance contribution.
        let mut params = fixtures::reference_params();
        params.v_in = 0.0;
        params.l_r1 = l;
        params.l_m1 = 1e-18;
        params.c_r1 = c;
        let cond = ConductionState::new(BridgeState::P, RectState::Off, RectState::Off);
        assemble_system(&params, &cond, &crate::params::LoadSpec::open()).unwrap()
    }

    #[test]
    fn integrate_step_identity_on_zero_system() {
        let mut sys = lc_system(31e-6, 60e-9);
        sys.a.fill(0.0);
        sys.b.fill(0.0);
        let x = DVector::from_fn(sys.dim(), |i, _| (i as f64) - 2.5);
        let x1 = integrate_step(&sys, &x, 1e-6).unwrap();
        assert_eq!(x1, x);
    }

    #[test]
    fn integrate_step_constant_slope_is_exact() {
        let mut sys = lc_system(31e-6, 60e-9);
        sys.a.fill(0.0);
        sys.b.fill(0.0);
        sys.b[0] = 1.0;
        sys.b[2] = -3.0;
        // h chosen so h/6 is exact in binary; RK4 reproduces x + b·h exactly
        // for constant slopes.
        let h = 3.0 * 2.0_f64.powi(-20);
        let x = DVector::zeros(sys.dim());
        let x1 = integrate_step(&sys, &x, h).unwrap();
        assert_eq!(x1[0], h);
        assert_eq!(x1[2], -3.0 * h);
        assert_eq!(x1[1], 0.0);
    }

    #[test]
    fn integrate_step_rejects_bad_dt() {
        let sys = lc_system(31e-6, 60e-9);
        let x = DVector::zeros(sys.dim());
        assert!(integrate_step(&sys, &x, 0.0).is_err());
        assert!(integrate_step(&sys, &x, f64::NAN).is_err());
    }

    #[test]
    fn lc_oscillation_returns_to_start_after_one_period() {
        // 31 µH / 60 nF rings at 116.7 kHz; one full period at T/2000 steps
        // must return to the initial state within 1e-6 relative.
        let (l, c) = (31e-6, 60e-9);
        let sys = lc_system(l, c);
        let period = std::f64::consts::TAU * (l * c).sqrt();
        let steps = 2000;
        let h = period / steps as f64;

        let i0 = sys.layout.index_of(StateSlot::ITank(Port::One)).unwrap();
        let v0 = sys.layout.index_of(StateSlot::VCr(Port::One)).unwrap();
        let mut x = DVector::zeros(sys.dim());
        x[i0] = 1.0;
        for _ in 0..steps {
            x = integrate_step(&sys, &x, h).unwrap();
        }
        assert!((x[i0] - 1.0).abs() < 1e-6, "i = {}", x[i0]);
        // The voltage amplitude scale is sqrt(L/C)·I ≈ 22.7 V.
        let v_scale = (l / c).sqrt();
        assert!(x[v0].abs() < 1e-6 * v_scale, "v = {}", x[v0]);
    }

    #[test]
    fn cached_propagator_matches_direct_rk4() {
        let params = fixtures::reference_params();
        let loads = fixtures::reference_loads();
        let cond = ConductionState::new(BridgeState::P, RectState::Pos, RectState::Pos);
        let sys = assemble_system(&params, &cond, &loads).unwrap();
        let h = 1.0 / (params.f_s * 4096.0);
        let stepper = Stepper::new(&sys, h);

        let mut x = DVector::zeros(sys.dim());
        for (i, v) in x.iter_mut().enumerate() {
            *v = (i as f64 + 1.0) * 0.1;
        }
        let direct = rk4(&sys, &x, h);
        let mut cached = DVector::zeros(sys.dim());
        stepper.step_into(&x, &mut cached);
        for (a, b) in direct.iter().zip(cached.iter()) {
            assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()), "{a} vs {b}");
        }
    }

    #[test]
    fn locate_event_finds_linear_crossing_midstep() {
        let f = |t: f64| 1.0 - 2.0 * t; // crosses at 0.5
        let tol = 1e-6;
        let te = locate_event(f, 0.0, 1.0, tol).unwrap();
        assert!((te - 0.5).abs() <= tol, "{te}");
        assert!(f(te) <= 0.0, "returned time must be past the crossing");
    }

    #[test]
    fn locate_event_rejects_bracket_without_crossing() {
        let err = locate_event(|_| 1.0, 0.0, 1.0, 1e-6).unwrap_err();
        assert!(matches!(err, Error::NoSignChange { .. }));
    }
}

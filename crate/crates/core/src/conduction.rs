//! Discrete conduction topology of the converter and its transition rules.
//!
//! A conduction state fixes which semiconductors conduct; within one state
//! the circuit is linear. Sign conventions used throughout the crate:
//!
//! * tank current `i_lr` is positive flowing from bridge node A through the
//!   tank to node B;
//! * bridge state `P` means S1 and S4 conduct (node A at the rail, node B at
//!   ground), `N` means S2 and S3 conduct;
//! * rectifier state `POS` means the diode pair D1/D4 (port 1) or D5/D8
//!   (port 2) conducts, which happens while the secondary current
//!   `n·(i_lr − i_lm)` is positive.

use serde::{Deserialize, Serialize};

use crate::params::{ConverterParams, Port};
use crate::state::StateVector;

/// Relative guard applied to transition thresholds so that a state exactly at
/// a boundary stays put until a strict crossing (anti-chatter tie-break).
const TRANSITION_GUARD: f64 = 1e-9;

/// Conduction state of the full bridge.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BridgeState {
    /// S1 and S4 gated on: +v_in across the tanks.
    P,
    /// S2 and S3 gated on: −v_in across the tanks.
    N,
    /// All switches gated off; node voltages v_a, v_b are free states.
    Dead,
    /// Body diodes of S1 and S4 conduct; nodes pinned as in `P`.
    ClampP,
    /// Body diodes of S2 and S3 conduct; nodes pinned as in `N`.
    ClampN,
}

impl BridgeState {
    /// Sign of the pinned bridge voltage, `None` while the nodes are free.
    pub fn polarity(self) -> Option<f64> {
        match self {
            BridgeState::P | BridgeState::ClampP => Some(1.0),
            BridgeState::N | BridgeState::ClampN => Some(-1.0),
            BridgeState::Dead => None,
        }
    }

    /// True while the gated-on switch channels (not body diodes) carry the
    /// tank current, i.e. when `r_ds_on` applies.
    pub fn through_channels(self) -> bool {
        matches!(self, BridgeState::P | BridgeState::N)
    }

    pub fn tag(self) -> &'static str {
        match self {
            BridgeState::P => "P",
            BridgeState::N => "N",
            BridgeState::Dead => "DEAD",
            BridgeState::ClampP => "CLAMP_P",
            BridgeState::ClampN => "CLAMP_N",
        }
    }
}

/// Conduction state of one output rectifier.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RectState {
    /// D1/D4 (port 1) or D5/D8 (port 2) conduct.
    Pos,
    /// D2/D3 (port 1) or D6/D7 (port 2) conduct.
    Neg,
    /// All four diodes blocked; the tank carries the magnetizing current.
    Off,
}

impl RectState {
    /// Conducting polarity as a sign, `None` when off.
    pub fn sign(self) -> Option<f64> {
        match self {
            RectState::Pos => Some(1.0),
            RectState::Neg => Some(-1.0),
            RectState::Off => None,
        }
    }

    pub fn is_conducting(self) -> bool {
        !matches!(self, RectState::Off)
    }

    pub fn tag(self) -> &'static str {
        match self {
            RectState::Pos => "POS",
            RectState::Neg => "NEG",
            RectState::Off => "OFF",
        }
    }
}

/// Complete discrete topology descriptor: bridge leg state plus the
/// per-port rectifier polarity.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ConductionState {
    pub bridge: BridgeState,
    pub rect1: RectState,
    pub rect2: RectState,
}

impl ConductionState {
    pub fn new(bridge: BridgeState, rect1: RectState, rect2: RectState) -> Self {
        Self { bridge, rect1, rect2 }
    }

    pub fn rect(&self, port: Port) -> RectState {
        match port {
            Port::One => self.rect1,
            Port::Two => self.rect2,
        }
    }

    pub fn with_rect(mut self, port: Port, rect: RectState) -> Self {
        match port {
            Port::One => self.rect1 = rect,
            Port::Two => self.rect2 = rect,
        }
        self
    }

    pub fn with_bridge(mut self, bridge: BridgeState) -> Self {
        self.bridge = bridge;
        self
    }

    /// Compact tag used in trace CSV output, e.g. `P/POS/OFF`.
    pub fn mode_tag(&self) -> String {
        format!("{}/{}/{}", self.bridge.tag(), self.rect1.tag(), self.rect2.tag())
    }
}

impl std::fmt::Display for ConductionState {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.mode_tag())
    }
}

/// Voltage between the bridge nodes, `v_ab = v_a − v_b`, for the given
/// conduction state. While a switch pair conducts through its channels the
/// on-resistance drop `2·r_ds_on·i_p` is included; body-diode clamps pin the
/// nodes to the rails exactly.
pub fn bridge_voltage(cond: &ConductionState, x: &StateVector, params: &ConverterParams) -> f64 {
    let i_p = x.i_lr1 + x.i_lr2;
    match cond.bridge.polarity() {
        Some(sign) => {
            let drop = if cond.bridge.through_channels() {
                2.0 * params.r_ds_on * i_p
            } else {
                0.0
            };
            sign * params.v_in - drop
        }
        None => x.v_a - x.v_b,
    }
}

/// Voltage across the magnetizing branch of the given tank.
///
/// While the rectifier conducts the branch is clamped to the reflected
/// output voltage ±n·(v_o + 2·v_f); while it is off the branch divides the
/// tank drive with the series resonant inductor.
pub fn magnetizing_voltage(
    port: Port,
    cond: &ConductionState,
    x: &StateVector,
    params: &ConverterParams,
) -> f64 {
    let tank = params.tank(port);
    match cond.rect(port).sign() {
        Some(sign) => sign * tank.n * (x.v_out(port) + 2.0 * params.v_f),
        None => {
            let drive = bridge_voltage(cond, x, params) - x.v_cr(port);
            tank.l_m / (tank.l_r + tank.l_m) * drive
        }
    }
}

/// Reflected secondary current of the given tank, `n·(i_lr − i_lm)`.
pub fn secondary_current(port: Port, x: &StateVector, params: &ConverterParams) -> f64 {
    params.tank(port).n * (x.i_lr(port) - x.i_lm(port))
}

/// Applies the rectifier conduction rules to a state snapshot.
///
/// Per port: a conducting rectifier turns off once the secondary current has
/// crossed zero against its polarity; a blocked rectifier turns on with the
/// polarity of the magnetizing-branch voltage once |v_lm| exceeds the
/// reflected output voltage. A port exactly at a boundary keeps its state
/// (strict crossings only), which prevents chattering.
pub fn rectifier_transition(
    x: &StateVector,
    cond: &ConductionState,
    params: &ConverterParams,
) -> ConductionState {
    let mut next = *cond;
    for port in Port::BOTH {
        let tank = params.tank(port);
        match cond.rect(port) {
            RectState::Pos | RectState::Neg => {
                let sign = cond.rect(port).sign().unwrap();
                let i_s = secondary_current(port, x, params);
                let guard = TRANSITION_GUARD * (1.0 + x.i_lm(port).abs());
                if sign * i_s < -guard {
                    next = next.with_rect(port, RectState::Off);
                }
            }
            RectState::Off => {
                let v_lm = magnetizing_voltage(port, cond, x, params);
                let threshold = tank.n * (x.v_out(port) + 2.0 * params.v_f);
                let guard = TRANSITION_GUARD * (1.0 + threshold.abs());
                if v_lm > threshold + guard {
                    next = next.with_rect(port, RectState::Pos);
                } else if v_lm < -threshold - guard {
                    next = next.with_rect(port, RectState::Neg);
                }
            }
        }
    }
    next
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::ConverterParams;

    fn params() -> ConverterParams {
        ConverterParams {
            v_in: 150.0,
            n1: 1.0949,
            n2: 1.0949,
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

    fn cond(bridge: BridgeState, rect1: RectState, rect2: RectState) -> ConductionState {
        ConductionState::new(bridge, rect1, rect2)
    }

    #[test]
    fn conducting_rectifier_turns_off_on_negative_secondary_current() {
        let p = params();
        let mut x = StateVector::zero();
        x.v_o1 = 137.0;
        // Secondary current just crossed zero against POS polarity.
        x.i_lr1 = 1.0;
        x.i_lm1 = 1.0 + 1e-6;
        let c = cond(BridgeState::N, RectState::Pos, RectState::Off);
        let next = rectifier_transition(&x, &c, &p);
        assert_eq!(next.rect1, RectState::Off);
    }

    #[test]
    fn conducting_rectifier_stays_at_exact_zero_crossing() {
        let p = params();
        let mut x = StateVector::zero();
        x.i_lr1 = 1.0;
        x.i_lm1 = 1.0;
        let c = cond(BridgeState::N, RectState::Pos, RectState::Off);
        assert_eq!(rectifier_transition(&x, &c, &p).rect1, RectState::Pos);
    }

    #[test]
    fn blocked_rectifier_stays_below_reflected_threshold() {
        let p = params();
        let mut x = StateVector::zero();
        x.v_o2 = 137.0;
        // P bridge, v_cr2 = 0: v_lm2 = Lm/(Lr+Lm)·150 = 132.8 V < n·v_o2 = 150 V.
        let c = cond(BridgeState::P, RectState::Off, RectState::Off);
        let v_lm = magnetizing_voltage(Port::Two, &c, &x, &p);
        assert!(v_lm < p.n2 * x.v_o2);
        assert_eq!(rectifier_transition(&x, &c, &p).rect2, RectState::Off);
    }

    #[test]
    fn blocked_rectifier_turns_on_past_reflected_threshold() {
        let p = params();
        let mut x = StateVector::zero();
        x.v_o1 = 100.0;
        // Push the tank drive so v_lm1 exceeds n·v_o1 in the positive sense.
        x.v_cr1 = -50.0;
        let c = cond(BridgeState::P, RectState::Off, RectState::Off);
        let v_lm = magnetizing_voltage(Port::One, &c, &x, &p);
        assert!(v_lm > p.n1 * x.v_o1);
        assert_eq!(rectifier_transition(&x, &c, &p).rect1, RectState::Pos);

        // Mirrored drive turns it on in the negative polarity.
        x.v_cr1 = 50.0;
        let c = cond(BridgeState::N, RectState::Off, RectState::Off);
        assert_eq!(rectifier_transition(&x, &c, &p).rect1, RectState::Neg);
    }

    #[test]
    fn dead_bridge_voltage_tracks_free_nodes() {
        let p = params();
        let mut x = StateVector::zero();
        x.v_a = 90.0;
        x.v_b = 30.0;
        let c = cond(BridgeState::Dead, RectState::Off, RectState::Off);
        assert_eq!(bridge_voltage(&c, &x, &p), 60.0);
    }

    #[test]
    fn channel_conduction_includes_on_resistance_drop() {
        let mut p = params();
        p.r_ds_on = 0.1;
        let mut x = StateVector::zero();
        x.i_lr1 = 2.0;
        x.i_lr2 = 1.0;
        let c = cond(BridgeState::P, RectState::Pos, RectState::Pos);
        assert!((bridge_voltage(&c, &x, &p) - (150.0 - 2.0 * 0.1 * 3.0)).abs() < 1e-12);
        // Body-diode clamp pins to the rail exactly.
        let c = cond(BridgeState::ClampP, RectState::Pos, RectState::Pos);
        assert_eq!(bridge_voltage(&c, &x, &p), 150.0);
    }
}

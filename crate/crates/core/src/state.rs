//! Continuous state of the converter.

use serde::{Deserialize, Serialize};

use crate::conduction::{BridgeState, ConductionState};
use crate::params::{ConverterParams, Port};

/// Continuous states: tank currents, magnetizing currents, resonant and
/// output capacitor voltages, and the bridge mid-point node voltages.
///
/// `v_a` and `v_b` are free states only while the bridge is in `Dead`;
/// otherwise they are algebraically pinned to the rails.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StateVector {
    pub i_lr1: f64,
    pub i_lr2: f64,
    pub i_lm1: f64,
    pub i_lm2: f64,
    pub v_cr1: f64,
    pub v_cr2: f64,
    pub v_o1: f64,
    pub v_o2: f64,
    pub v_a: f64,
    pub v_b: f64,
}

impl StateVector {
    pub const DIM: usize = 10;

    pub const FIELD_NAMES: [&'static str; Self::DIM] = [
        "i_lr1", "i_lr2", "i_lm1", "i_lm2", "v_cr1", "v_cr2", "v_o1", "v_o2", "v_a", "v_b",
    ];

    pub fn zero() -> Self {
        Self::default()
    }

    pub fn to_array(&self) -> [f64; Self::DIM] {
        [
            self.i_lr1, self.i_lr2, self.i_lm1, self.i_lm2, self.v_cr1, self.v_cr2, self.v_o1,
            self.v_o2, self.v_a, self.v_b,
        ]
    }

    pub fn from_array(a: [f64; Self::DIM]) -> Self {
        Self {
            i_lr1: a[0],
            i_lr2: a[1],
            i_lm1: a[2],
            i_lm2: a[3],
            v_cr1: a[4],
            v_cr2: a[5],
            v_o1: a[6],
            v_o2: a[7],
            v_a: a[8],
            v_b: a[9],
        }
    }

    pub fn i_lr(&self, port: Port) -> f64 {
        match port {
            Port::One => self.i_lr1,
            Port::Two => self.i_lr2,
        }
    }

    pub fn i_lm(&self, port: Port) -> f64 {
        match port {
            Port::One => self.i_lm1,
            Port::Two => self.i_lm2,
        }
    }

    pub fn v_cr(&self, port: Port) -> f64 {
        match port {
            Port::One => self.v_cr1,
            Port::Two => self.v_cr2,
        }
    }

    pub fn v_out(&self, port: Port) -> f64 {
        match port {
            Port::One => self.v_o1,
            Port::Two => self.v_o2,
        }
    }

    pub fn set_i_lr(&mut self, port: Port, value: f64) {
        match port {
            Port::One => self.i_lr1 = value,
            Port::Two => self.i_lr2 = value,
        }
    }

    pub fn set_i_lm(&mut self, port: Port, value: f64) {
        match port {
            Port::One => self.i_lm1 = value,
            Port::Two => self.i_lm2 = value,
        }
    }

    /// Total primary current drawn through the bridge, `i_lr1 + i_lr2`.
    pub fn primary_current(&self) -> f64 {
        self.i_lr1 + self.i_lr2
    }

    /// Returns a copy with the node voltages pinned to the rails as dictated
    /// by the bridge state. A `Dead` bridge leaves the nodes untouched.
    pub fn with_pinned_nodes(mut self, cond: &ConductionState, params: &ConverterParams) -> Self {
        match cond.bridge {
            BridgeState::P | BridgeState::ClampP => {
                self.v_a = params.v_in;
                self.v_b = 0.0;
            }
            BridgeState::N | BridgeState::ClampN => {
                self.v_a = 0.0;
                self.v_b = params.v_in;
            }
            BridgeState::Dead => {}
        }
        self
    }

    /// Euclidean norm over all state components.
    pub fn norm(&self) -> f64 {
        self.to_array().iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conduction::RectState;

    #[test]
    fn array_round_trip_preserves_field_order() {
        let mut a = [0.0; StateVector::DIM];
        for (i, v) in a.iter_mut().enumerate() {
            *v = i as f64 + 1.0;
        }
        let x = StateVector::from_array(a);
        assert_eq!(x.to_array(), a);
        assert_eq!(x.i_lr1, 1.0);
        assert_eq!(x.v_b, 10.0);
    }

    #[test]
    fn pinning_follows_bridge_state() {
        let params = crate::fixtures::reference_params();
        let x = StateVector {
            v_a: 42.0,
            v_b: 17.0,
            ..StateVector::zero()
        };
        let p = ConductionState::new(BridgeState::P, RectState::Off, RectState::Off);
        let pinned = x.with_pinned_nodes(&p, &params);
        assert_eq!((pinned.v_a, pinned.v_b), (params.v_in, 0.0));

        let n = ConductionState::new(BridgeState::ClampN, RectState::Off, RectState::Off);
        let pinned = x.with_pinned_nodes(&n, &params);
        assert_eq!((pinned.v_a, pinned.v_b), (0.0, params.v_in));

        let dead = ConductionState::new(BridgeState::Dead, RectState::Off, RectState::Off);
        let free = x.with_pinned_nodes(&dead, &params);
        assert_eq!((free.v_a, free.v_b), (42.0, 17.0));
    }
}

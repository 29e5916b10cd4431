//! Assembly of the affine ODE `dx/dt = A·x + b` for one conduction state.
//!
//! The converter is piecewise linear: once the bridge and rectifier
//! conduction is fixed, every branch relation is linear and the circuit
//! reduces to a small affine system over the free states of that topology.
//!
//! Per tank `k` (series `l_rk – c_rk – magnetizing branch`, driven by the
//! bridge voltage `v_ab`):
//!
//! ```text
//! rectifier conducting with polarity s (±1):
//!     l_r·di_lr/dt = v_ab − v_cr − s·n·(v_o + 2·v_f)
//!     l_m·di_lm/dt = s·n·(v_o + 2·v_f)
//!     c_r·dv_cr/dt = i_lr
//!     c_o·dv_o/dt  = s·n·(i_lr − i_lm) − v_o/r_load
//!
//! rectifier off (magnetizing inductor in series with the tank, one
//! common current i = i_lr = i_lm):
//!     (l_r + l_m)·di/dt = v_ab − v_cr
//!     c_r·dv_cr/dt = i
//!     c_o·dv_o/dt  = −v_o/r_load
//! ```
//!
//! The bridge supplies `v_ab = ±v_in` (minus `2·r_ds_on·i_p` while switch
//! channels conduct) when pinned, and `v_ab = v_a − v_b` during dead time,
//! where each leg node carries the effective capacitance `2·c_oss`:
//!
//! ```text
//! 2·c_oss·dv_a/dt = −(i_lr1 + i_lr2)       2·c_oss·dv_b/dt = +(i_lr1 + i_lr2)
//! ```
//!
//! Every combination of bridge and rectifier states yields a well-defined
//! topology, so assembly is total over [`ConductionState`]; rejection only
//! happens for invalid component values.

use nalgebra::{DMatrix, DVector};

use crate::conduction::{BridgeState, ConductionState};
use crate::error::Result;
use crate::params::{ConverterParams, LoadSpec, Port};
use crate::state::StateVector;

/// Semantic identity of one row/column of the assembled system.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StateSlot {
    /// Resonant tank current of a port whose rectifier conducts.
    ILr(Port),
    /// Magnetizing current of a port whose rectifier conducts.
    ILm(Port),
    /// Common series current of a port whose rectifier is off
    /// (`i_lr = i_lm` collapses into one state).
    ITank(Port),
    /// Resonant capacitor voltage.
    VCr(Port),
    /// Output capacitor voltage.
    VOut(Port),
    /// Bridge node voltages, present only while the bridge is `Dead`.
    VNodeA,
    VNodeB,
}

/// Mapping between [`StateVector`] fields and the rows of one assembled
/// affine system.
#[derive(Clone, Debug, PartialEq)]
pub struct StateLayout {
    slots: Vec<StateSlot>,
}

impl StateLayout {
    pub fn for_conduction(cond: &ConductionState) -> Self {
        let mut slots = Vec::with_capacity(StateVector::DIM);
        for port in Port::BOTH {
            if cond.rect(port).is_conducting() {
                slots.push(StateSlot::ILr(port));
                slots.push(StateSlot::ILm(port));
            } else {
                slots.push(StateSlot::ITank(port));
            }
        }
        for port in Port::BOTH {
            slots.push(StateSlot::VCr(port));
        }
        for port in Port::BOTH {
            slots.push(StateSlot::VOut(port));
        }
        if cond.bridge == BridgeState::Dead {
            slots.push(StateSlot::VNodeA);
            slots.push(StateSlot::VNodeB);
        }
        Self { slots }
    }

    pub fn dim(&self) -> usize {
        self.slots.len()
    }

    pub fn slots(&self) -> &[StateSlot] {
        &self.slots
    }

    pub fn index_of(&self, slot: StateSlot) -> Option<usize> {
        self.slots.iter().position(|s| *s == slot)
    }

    /// Column index of the tank current of `port`, whichever representation
    /// is active.
    pub fn tank_current_index(&self, port: Port) -> usize {
        self.index_of(StateSlot::ILr(port))
            .or_else(|| self.index_of(StateSlot::ITank(port)))
            .expect("every layout carries a tank current per port")
    }

    /// Gathers the free states of `x` into a packed vector.
    pub fn pack(&self, x: &StateVector) -> DVector<f64> {
        DVector::from_iterator(
            self.dim(),
            self.slots.iter().map(|slot| match slot {
                StateSlot::ILr(p) => x.i_lr(*p),
                StateSlot::ILm(p) => x.i_lm(*p),
                StateSlot::ITank(p) => x.i_lr(*p),
                StateSlot::VCr(p) => x.v_cr(*p),
                StateSlot::VOut(p) => x.v_out(*p),
                StateSlot::VNodeA => x.v_a,
                StateSlot::VNodeB => x.v_b,
            }),
        )
    }

    /// Scatters a packed vector back into a full [`StateVector`]. A collapsed
    /// tank current fills both `i_lr` and `i_lm`; pinned node voltages are
    /// restored from the conduction state.
    pub fn unpack(
        &self,
        v: &DVector<f64>,
        cond: &ConductionState,
        params: &ConverterParams,
    ) -> StateVector {
        let mut x = StateVector::zero();
        for (i, slot) in self.slots.iter().enumerate() {
            let value = v[i];
            match slot {
                StateSlot::ILr(p) | StateSlot::ILm(p) | StateSlot::ITank(p) => {
                    let (lr, lm) = match p {
                        Port::One => (&mut x.i_lr1, &mut x.i_lm1),
                        Port::Two => (&mut x.i_lr2, &mut x.i_lm2),
                    };
                    match slot {
                        StateSlot::ILr(_) => *lr = value,
                        StateSlot::ILm(_) => *lm = value,
                        _ => {
                            *lr = value;
                            *lm = value;
                        }
                    }
                }
                StateSlot::VCr(Port::One) => x.v_cr1 = value,
                StateSlot::VCr(Port::Two) => x.v_cr2 = value,
                StateSlot::VOut(Port::One) => x.v_o1 = value,
                StateSlot::VOut(Port::Two) => x.v_o2 = value,
                StateSlot::VNodeA => x.v_a = value,
                StateSlot::VNodeB => x.v_b = value,
            }
        }
        x.with_pinned_nodes(cond, params)
    }
}

/// The affine ODE of one conduction topology, `dx/dt = A·x + b`, together
/// with the mapping from state-vector fields to rows.
#[derive(Clone, Debug)]
pub struct AffineSystem {
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    pub layout: StateLayout,
}

impl AffineSystem {
    pub fn dim(&self) -> usize {
        self.layout.dim()
    }

    /// `A·x + b`.
    pub fn derivative(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.a * x + &self.b
    }

    pub fn is_finite(&self) -> bool {
        self.a.iter().all(|v| v.is_finite()) && self.b.iter().all(|v| v.is_finite())
    }

    /// Extracts the square sub-block of `A` over the given slots.
    /// Used by the eigenfrequency oracles in tests.
    pub fn sub_block(&self, slots: &[StateSlot]) -> Option<DMatrix<f64>> {
        let idx: Option<Vec<usize>> = slots.iter().map(|s| self.layout.index_of(*s)).collect();
        let idx = idx?;
        let n = idx.len();
        let mut m = DMatrix::zeros(n, n);
        for (r, &ri) in idx.iter().enumerate() {
            for (c, &ci) in idx.iter().enumerate() {
                m[(r, c)] = self.a[(ri, ci)];
            }
        }
        Some(m)
    }
}

/// Assembles the affine ODE of the circuit under the given conduction
/// topology.
pub fn assemble_system(
    params: &ConverterParams,
    cond: &ConductionState,
    loads: &LoadSpec,
) -> Result<AffineSystem> {
    params.validate()?;
    loads.validate()?;

    let layout = StateLayout::for_conduction(cond);
    let dim = layout.dim();
    let mut a = DMatrix::zeros(dim, dim);
    let mut b = DVector::zeros(dim);

    let tank_current_cols = [
        layout.tank_current_index(Port::One),
        layout.tank_current_index(Port::Two),
    ];
    let node_cols = (layout.index_of(StateSlot::VNodeA), layout.index_of(StateSlot::VNodeB));

    // Adds the bridge drive v_ab, scaled by 1/l, into the given current row.
    let stamp_bridge_drive = |a: &mut DMatrix<f64>, b: &mut DVector<f64>, row: usize, inv_l: f64| {
        match cond.bridge.polarity() {
            Some(sign) => {
                b[row] += sign * params.v_in * inv_l;
                if cond.bridge.through_channels() {
                    for col in tank_current_cols {
                        a[(row, col)] -= 2.0 * params.r_ds_on * inv_l;
                    }
                }
            }
            None => {
                let (va, vb) = (node_cols.0.unwrap(), node_cols.1.unwrap());
                a[(row, va)] += inv_l;
                a[(row, vb)] -= inv_l;
            }
        }
    };

    for port in Port::BOTH {
        let tank = params.tank(port);
        let g_load = loads.conductance(port);
        let vcr = layout.index_of(StateSlot::VCr(port)).unwrap();
        let vo = layout.index_of(StateSlot::VOut(port)).unwrap();

        match cond.rect(port).sign() {
            Some(s) => {
                let ilr = layout.index_of(StateSlot::ILr(port)).unwrap();
                let ilm = layout.index_of(StateSlot::ILm(port)).unwrap();

                stamp_bridge_drive(&mut a, &mut b, ilr, 1.0 / tank.l_r);
                a[(ilr, vcr)] -= 1.0 / tank.l_r;
                a[(ilr, vo)] -= s * tank.n / tank.l_r;
                b[ilr] -= s * tank.n * 2.0 * params.v_f / tank.l_r;

                a[(ilm, vo)] += s * tank.n / tank.l_m;
                b[ilm] += s * tank.n * 2.0 * params.v_f / tank.l_m;

                a[(vcr, ilr)] += 1.0 / tank.c_r;

                a[(vo, ilr)] += s * tank.n / tank.c_o;
                a[(vo, ilm)] -= s * tank.n / tank.c_o;
                a[(vo, vo)] -= g_load / tank.c_o;
            }
            None => {
                let it = layout.index_of(StateSlot::ITank(port)).unwrap();
                let l_total = tank.l_r + tank.l_m;

                stamp_bridge_drive(&mut a, &mut b, it, 1.0 / l_total);
                a[(it, vcr)] -= 1.0 / l_total;

                a[(vcr, it)] += 1.0 / tank.c_r;

                a[(vo, vo)] -= g_load / tank.c_o;
            }
        }
    }

    if let (Some(va), Some(vb)) = node_cols {
        let inv_c_leg = 1.0 / (2.0 * params.c_oss);
        for col in tank_current_cols {
            a[(va, col)] -= inv_c_leg;
            a[(vb, col)] += inv_c_leg;
        }
    }

    Ok(AffineSystem { a, b, layout })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conduction::RectState;
    use crate::fixtures;

    fn cond(bridge: BridgeState, rect1: RectState, rect2: RectState) -> ConductionState {
        ConductionState::new(bridge, rect1, rect2)
    }

    /// Oscillation frequency (Hz) of the dominant imaginary eigenvalue pair.
    fn eigen_frequency(block: &DMatrix<f64>) -> f64 {
        block
            .complex_eigenvalues()
            .iter()
            .map(|l| l.im.abs())
            .fold(0.0_f64, f64::max)
            / std::f64::consts::TAU
    }

    #[test]
    fn conducting_tank_block_oscillates_at_series_resonance() {
        let params = fixtures::reference_params();
        let loads = fixtures::reference_loads();
        let sys = assemble_system(&params, &cond(BridgeState::P, RectState::Pos, RectState::Pos), &loads)
            .unwrap();
        let block = sys
            .sub_block(&[StateSlot::ILr(Port::One), StateSlot::VCr(Port::One)])
            .unwrap();
        let f_eig = eigen_frequency(&block);
        let f_closed = 1.0 / (std::f64::consts::TAU * (params.l_r1 * params.c_r1).sqrt());
        assert!(
            ((f_eig - f_closed) / f_closed).abs() < 1e-9,
            "eigen {f_eig} vs closed form {f_closed}"
        );
        // Reference component values land at 116.7 kHz.
        assert!((f_closed / 1000.0 - 116.7).abs() < 0.05, "{f_closed}");
    }

    #[test]
    fn off_tank_block_oscillates_at_secondary_resonance() {
        let params = fixtures::reference_params();
        let loads = fixtures::reference_loads();
        let sys = assemble_system(&params, &cond(BridgeState::P, RectState::Off, RectState::Off), &loads)
            .unwrap();
        let block = sys
            .sub_block(&[StateSlot::ITank(Port::Two), StateSlot::VCr(Port::Two)])
            .unwrap();
        let f_eig = eigen_frequency(&block);
        let f_closed =
            1.0 / (std::f64::consts::TAU * ((params.l_r2 + params.l_m2) * params.c_r2).sqrt());
        assert!(((f_eig - f_closed) / f_closed).abs() < 1e-9);
        // 31 µH + 240 µH against 60 nF rings at 39.5 kHz.
        assert!((f_closed / 1000.0 - 39.5).abs() < 0.05, "{f_closed}");
    }

    #[test]
    fn zero_input_open_load_off_rectifiers_is_stationary_at_origin() {
        let mut params = fixtures::reference_params();
        params.v_in = 0.0;
        let loads = LoadSpec::open();
        let sys = assemble_system(&params, &cond(BridgeState::P, RectState::Off, RectState::Off), &loads)
            .unwrap();
        let x = DVector::zeros(sys.dim());
        let dx = sys.derivative(&x);
        assert!(dx.iter().all(|v| *v == 0.0), "dx = {dx:?}");
    }

    #[test]
    fn dead_bridge_adds_two_node_states_with_shared_charging_current() {
        let params = fixtures::reference_params();
        let loads = fixtures::reference_loads();
        let sys = assemble_system(&params, &cond(BridgeState::Dead, RectState::Pos, RectState::Pos), &loads)
            .unwrap();
        assert_eq!(sys.dim(), 10);

        // dv_a/dt = -i_p/(2 c_oss), dv_b/dt = +i_p/(2 c_oss); the sum
        // v_a + v_b stays invariant through the swing.
        let mut x = StateVector::zero();
        x.i_lr1 = 2.0;
        x.i_lr2 = 1.0;
        x.v_a = params.v_in;
        let packed = sys.layout.pack(&x);
        let dx = sys.derivative(&packed);
        let va = sys.layout.index_of(StateSlot::VNodeA).unwrap();
        let vb = sys.layout.index_of(StateSlot::VNodeB).unwrap();
        let expected = 3.0 / (2.0 * params.c_oss);
        assert!((dx[va] + expected).abs() < expected * 1e-12);
        assert!((dx[vb] - expected).abs() < expected * 1e-12);
    }

    #[test]
    fn collapsed_layout_packs_and_unpacks_the_off_identity() {
        let params = fixtures::reference_params();
        let c = cond(BridgeState::P, RectState::Off, RectState::Pos);
        let layout = StateLayout::for_conduction(&c);
        assert_eq!(layout.dim(), 7);

        let mut x = StateVector::zero();
        x.i_lr1 = 0.5;
        x.i_lm1 = 0.5;
        x.i_lr2 = 2.0;
        x.i_lm2 = 1.0;
        x.v_o2 = 120.0;
        let packed = layout.pack(&x);
        let back = layout.unpack(&packed, &c, &params);
        assert_eq!(back.i_lr1, back.i_lm1);
        assert_eq!(back.i_lr1, 0.5);
        assert_eq!(back.i_lr2, 2.0);
        assert_eq!(back.i_lm2, 1.0);
        // Pinned bridge: nodes restored to the rails.
        assert_eq!((back.v_a, back.v_b), (params.v_in, 0.0));
    }

    #[test]
    fn rejects_invalid_components() {
        let mut params = fixtures::reference_params();
        params.c_r1 = 0.0;
        let loads = fixtures::reference_loads();
        assert!(assemble_system(&params, &cond(BridgeState::P, RectState::Pos, RectState::Pos), &loads)
            .is_err());
    }
}

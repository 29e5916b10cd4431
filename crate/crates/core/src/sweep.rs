//! Steady-state parameter sweeps.
//!
//! Sweep points are value-isolated: each point owns its parameter set and
//! runs to steady state independently, so the set is embarrassingly
//! parallel. With the default `parallel` feature the points run on the
//! rayon pool; [`run_sweep_serial`] is always available and produces the
//! same rows in the same order.

use serde::{Deserialize, Serialize};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::analysis::{default_zvs_threshold, power_report, zvs_report};
use crate::engine::{run_to_steady_state, SimSettings};
use crate::error::{Error, Result};
use crate::params::{ConverterParams, LoadSpec};

/// A sweepable scalar parameter of the converter or its loads.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParam {
    VIn,
    N1,
    N2,
    LR1,
    LR2,
    LM1,
    LM2,
    CR1,
    CR2,
    COss,
    CO1,
    CO2,
    FS,
    TDead,
    RDsOn,
    VF,
    RLoad1,
    RLoad2,
}

impl SweepParam {
    pub const ALL: [SweepParam; 18] = [
        SweepParam::VIn,
        SweepParam::N1,
        SweepParam::N2,
        SweepParam::LR1,
        SweepParam::LR2,
        SweepParam::LM1,
        SweepParam::LM2,
        SweepParam::CR1,
        SweepParam::CR2,
        SweepParam::COss,
        SweepParam::CO1,
        SweepParam::CO2,
        SweepParam::FS,
        SweepParam::TDead,
        SweepParam::RDsOn,
        SweepParam::VF,
        SweepParam::RLoad1,
        SweepParam::RLoad2,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SweepParam::VIn => "v_in",
            SweepParam::N1 => "n1",
            SweepParam::N2 => "n2",
            SweepParam::LR1 => "l_r1",
            SweepParam::LR2 => "l_r2",
            SweepParam::LM1 => "l_m1",
            SweepParam::LM2 => "l_m2",
            SweepParam::CR1 => "c_r1",
            SweepParam::CR2 => "c_r2",
            SweepParam::COss => "c_oss",
            SweepParam::CO1 => "c_o1",
            SweepParam::CO2 => "c_o2",
            SweepParam::FS => "f_s",
            SweepParam::TDead => "t_dead",
            SweepParam::RDsOn => "r_ds_on",
            SweepParam::VF => "v_f",
            SweepParam::RLoad1 => "r_load1",
            SweepParam::RLoad2 => "r_load2",
        }
    }

    pub fn apply(self, params: &mut ConverterParams, loads: &mut LoadSpec, value: f64) {
        match self {
            SweepParam::VIn => params.v_in = value,
            SweepParam::N1 => params.n1 = value,
            SweepParam::N2 => params.n2 = value,
            SweepParam::LR1 => params.l_r1 = value,
            SweepParam::LR2 => params.l_r2 = value,
            SweepParam::LM1 => params.l_m1 = value,
            SweepParam::LM2 => params.l_m2 = value,
            SweepParam::CR1 => params.c_r1 = value,
            SweepParam::CR2 => params.c_r2 = value,
            SweepParam::COss => params.c_oss = value,
            SweepParam::CO1 => params.c_o1 = value,
            SweepParam::CO2 => params.c_o2 = value,
            SweepParam::FS => params.f_s = value,
            SweepParam::TDead => params.t_dead = value,
            SweepParam::RDsOn => params.r_ds_on = value,
            SweepParam::VF => params.v_f = value,
            SweepParam::RLoad1 => loads.r_load1 = value,
            SweepParam::RLoad2 => loads.r_load2 = value,
        }
    }
}

impl std::str::FromStr for SweepParam {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::param("sweep.param", format!("unknown parameter name `{s}`")))
    }
}

/// One steady-state run of a sweep.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct SweepRow {
    pub value: f64,
    pub p_out1: f64,
    pub p_out2: f64,
    pub efficiency: f64,
    /// ZVS verdict per switch S1..S4 at the default threshold.
    pub zvs: [bool; 4],
    pub residual: f64,
    pub converged: bool,
}

/// `count` evenly spaced values from `start` to `stop` inclusive
/// (`count = 1` yields just `start`).
pub fn sweep_values(start: f64, stop: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![start],
        _ => (0..count)
            .map(|i| start + (stop - start) * i as f64 / (count - 1) as f64)
            .collect(),
    }
}

fn run_point(
    base_params: &ConverterParams,
    base_loads: &LoadSpec,
    settings: &SimSettings,
    param: SweepParam,
    value: f64,
) -> Result<SweepRow> {
    let mut params = *base_params;
    let mut loads = *base_loads;
    param.apply(&mut params, &mut loads, value);

    let (trace, residual) = run_to_steady_state(&params, &loads, settings)?;
    let power = power_report(&trace, &params, &loads)?;
    let zvs = zvs_report(&trace, &params, default_zvs_threshold(params.v_in))?;
    Ok(SweepRow {
        value,
        p_out1: power.p_out1,
        p_out2: power.p_out2,
        efficiency: power.efficiency,
        zvs: [
            zvs.switches[0].achieved,
            zvs.switches[1].achieved,
            zvs.switches[2].achieved,
            zvs.switches[3].achieved,
        ],
        residual,
        converged: trace.steady_state.map(|ss| ss.converged).unwrap_or(false),
    })
}

/// Runs one steady-state simulation per value, in parallel when the
/// `parallel` feature is enabled. Row order follows `values`.
pub fn run_sweep(
    params: &ConverterParams,
    loads: &LoadSpec,
    settings: &SimSettings,
    param: SweepParam,
    values: &[f64],
) -> Result<Vec<SweepRow>> {
    #[cfg(feature = "parallel")]
    {
        values
            .par_iter()
            .map(|&v| run_point(params, loads, settings, param, v))
            .collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        run_sweep_serial(params, loads, settings, param, values)
    }
}

/// Sequential fallback with identical semantics to [`run_sweep`].
pub fn run_sweep_serial(
    params: &ConverterParams,
    loads: &LoadSpec,
    settings: &SimSettings,
    param: SweepParam,
    values: &[f64],
) -> Result<Vec<SweepRow>> {
    values
        .iter()
        .map(|&v| run_point(params, loads, settings, param, v))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sweep_values_cover_endpoints() {
        let v = sweep_values(1.0, 5.0, 5);
        assert_eq!(v, vec![1.0, 2.0, 3.0, 4.0, 5.0]);
        assert_eq!(sweep_values(2.0, 9.0, 1), vec![2.0]);
        assert!(sweep_values(0.0, 1.0, 0).is_empty());
    }

    #[test]
    fn parameter_names_round_trip() {
        for p in SweepParam::ALL {
            let parsed: SweepParam = p.name().parse().unwrap();
            assert_eq!(parsed, p);
        }
        assert!("not_a_param".parse::<SweepParam>().is_err());
    }

    #[test]
    fn apply_touches_the_right_field() {
        let mut params = crate::fixtures::reference_params();
        let mut loads = crate::fixtures::reference_loads();
        SweepParam::TDead.apply(&mut params, &mut loads, 111e-9);
        assert_eq!(params.t_dead, 111e-9);
        SweepParam::RLoad2.apply(&mut params, &mut loads, 77.0);
        assert_eq!(loads.r_load2, 77.0);
    }
}

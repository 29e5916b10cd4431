//! Electrical constants of the power stage and the attached loads.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One of the two output ports / resonant tanks.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Port {
    One,
    Two,
}

impl Port {
    pub const BOTH: [Port; 2] = [Port::One, Port::Two];

    pub fn index(self) -> usize {
        match self {
            Port::One => 0,
            Port::Two => 1,
        }
    }
}

impl std::fmt::Display for Port {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.index() + 1)
    }
}

/// All electrical constants of the power stage.
///
/// The full bridge (switches S1..S4) drives two series resonant tanks in
/// parallel, one per transformer. Tank k is the series chain
/// `l_rk – c_rk – (l_mk ∥ ideal transformer nk:1)`; each secondary feeds a
/// full-bridge diode rectifier into the output capacitor `c_ok`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConverterParams {
    /// Input rail voltage, volts.
    pub v_in: f64,
    /// Transformer turns ratio (primary : secondary), tank 1.
    pub n1: f64,
    /// Transformer turns ratio (primary : secondary), tank 2.
    pub n2: f64,
    /// Resonant (leakage) inductance, henries.
    pub l_r1: f64,
    pub l_r2: f64,
    /// Magnetizing inductance on the primary side, henries.
    pub l_m1: f64,
    pub l_m2: f64,
    /// Resonant capacitance, farads.
    pub c_r1: f64,
    pub c_r2: f64,
    /// Per-switch output capacitance, farads (voltage-independent).
    pub c_oss: f64,
    /// Output filter capacitance, farads.
    pub c_o1: f64,
    pub c_o2: f64,
    /// Switching frequency, hertz.
    pub f_s: f64,
    /// Dead time between gate-off of one pair and gate-on of the other,
    /// seconds.
    pub t_dead: f64,
    /// Switch on-resistance, ohms (0 = ideal).
    pub r_ds_on: f64,
    /// Rectifier diode forward drop, volts (0 = ideal). Applies to the
    /// output rectifiers only; the bridge body diodes clamp ideally.
    pub v_f: f64,
}

/// Per-tank view of [`ConverterParams`].
#[derive(Clone, Copy, Debug)]
pub struct TankParams {
    pub n: f64,
    pub l_r: f64,
    pub l_m: f64,
    pub c_r: f64,
    pub c_o: f64,
}

impl ConverterParams {
    pub fn tank(&self, port: Port) -> TankParams {
        match port {
            Port::One => TankParams {
                n: self.n1,
                l_r: self.l_r1,
                l_m: self.l_m1,
                c_r: self.c_r1,
                c_o: self.c_o1,
            },
            Port::Two => TankParams {
                n: self.n2,
                l_r: self.l_r2,
                l_m: self.l_m2,
                c_r: self.c_r2,
                c_o: self.c_o2,
            },
        }
    }

    /// Switching period, seconds.
    pub fn period(&self) -> f64 {
        1.0 / self.f_s
    }

    pub fn validate(&self) -> Result<()> {
        // v_in = 0 is allowed: it is a meaningful degenerate case (the
        // converter at rest) and keeps zero-input simulations expressible.
        if !(self.v_in.is_finite() && self.v_in >= 0.0) {
            return Err(Error::param("v_in", format!("must be finite and >= 0, got {}", self.v_in)));
        }
        let positive: [(&'static str, f64); 11] = [
            ("n1", self.n1),
            ("n2", self.n2),
            ("l_r1", self.l_r1),
            ("l_r2", self.l_r2),
            ("l_m1", self.l_m1),
            ("l_m2", self.l_m2),
            ("c_r1", self.c_r1),
            ("c_r2", self.c_r2),
            ("c_o1", self.c_o1),
            ("c_o2", self.c_o2),
            ("f_s", self.f_s),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::param(name, format!("must be finite and > 0, got {v}")));
            }
        }
        if !(self.c_oss.is_finite() && self.c_oss > 0.0) {
            return Err(Error::param("c_oss", format!("must be finite and > 0, got {}", self.c_oss)));
        }
        if !(self.t_dead.is_finite() && self.t_dead >= 0.0) {
            return Err(Error::param("t_dead", format!("must be finite and >= 0, got {}", self.t_dead)));
        }
        if self.t_dead >= 0.5 / self.f_s {
            return Err(Error::param(
                "t_dead",
                format!("must be < half the switching period, got {} >= {}", self.t_dead, 0.5 / self.f_s),
            ));
        }
        if !(self.r_ds_on.is_finite() && self.r_ds_on >= 0.0) {
            return Err(Error::param("r_ds_on", format!("must be finite and >= 0, got {}", self.r_ds_on)));
        }
        if !(self.v_f.is_finite() && self.v_f >= 0.0) {
            return Err(Error::param("v_f", format!("must be finite and >= 0, got {}", self.v_f)));
        }
        Ok(())
    }
}

/// Resistive load attached to each port. `f64::INFINITY` means the port is
/// open (deactivated).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LoadSpec {
    pub r_load1: f64,
    pub r_load2: f64,
}

impl LoadSpec {
    pub fn new(r_load1: f64, r_load2: f64) -> Self {
        Self { r_load1, r_load2 }
    }

    /// Both ports open.
    pub fn open() -> Self {
        Self {
            r_load1: f64::INFINITY,
            r_load2: f64::INFINITY,
        }
    }

    pub fn resistance(&self, port: Port) -> f64 {
        match port {
            Port::One => self.r_load1,
            Port::Two => self.r_load2,
        }
    }

    /// Load conductance, siemens (0 for an open port).
    pub fn conductance(&self, port: Port) -> f64 {
        let r = self.resistance(port);
        if r.is_infinite() {
            0.0
        } else {
            1.0 / r
        }
    }

    pub fn is_open(&self, port: Port) -> bool {
        self.resistance(port).is_infinite()
    }

    pub fn validate(&self) -> Result<()> {
        for (name, r) in [("r_load1", self.r_load1), ("r_load2", self.r_load2)] {
            if r.is_nan() || r <= 0.0 {
                return Err(Error::param(name, format!("must be > 0 (inf = open), got {r}")));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn valid() -> ConverterParams {
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

    #[test]
    fn accepts_reference_values() {
        valid().validate().unwrap();
    }

    #[test]
    fn rejects_nonpositive_and_nonfinite() {
        let mut p = valid();
        p.l_r1 = 0.0;
        assert!(p.validate().is_err());

        let mut p = valid();
        p.l_m2 = f64::INFINITY;
        assert!(p.validate().is_err());

        let mut p = valid();
        p.c_r1 = -60e-9;
        assert!(p.validate().is_err());
    }

    #[test]
    fn rejects_dead_time_beyond_half_period() {
        let mut p = valid();
        p.t_dead = 0.5 / p.f_s;
        assert!(p.validate().is_err());
        p.t_dead = 0.4 / p.f_s;
        assert!(p.validate().is_ok());
    }

    #[test]
    fn open_load_has_zero_conductance() {
        let loads = LoadSpec::new(40.8, f64::INFINITY);
        assert!(loads.validate().is_ok());
        assert_eq!(loads.conductance(Port::Two), 0.0);
        assert!(loads.is_open(Port::Two));
        assert!(!loads.is_open(Port::One));
    }

    #[test]
    fn rejects_zero_and_negative_loads() {
        assert!(LoadSpec::new(0.0, 10.0).validate().is_err());
        assert!(LoadSpec::new(10.0, -5.0).validate().is_err());
        assert!(LoadSpec::new(f64::NAN, 10.0).validate().is_err());
    }
}

//! NAND2-equivalent gate counts and cycle latencies for MAC, weight-shared
//! MAC and PAS units, and for arrays built from them.
//!
//! Each component class costs a per-bit constant: adders and registers are
//! linear in the word width, the multiplier is quadratic, and a register-file
//! port is linear in both width and bin count. The constants are calibration,
//! not measurements.

use std::fmt;
use std::ops::Add;
use std::str::FromStr;

use crate::error::{invalid, Error, Result};

/// NAND2 gates per bit for each component class.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GateConstants {
    pub k_add: u64,
    pub k_mul: u64,
    pub k_reg: u64,
    pub k_port: u64,
}

impl Default for GateConstants {
    fn default() -> Self {
        Self {
            k_add: 9,
            k_mul: 10,
            k_reg: 6,
            k_port: 1,
        }
    }
}

impl GateConstants {
    pub fn new(k_add: u64, k_mul: u64, k_reg: u64, k_port: u64) -> Result<Self> {
        let k = Self {
            k_add,
            k_mul,
            k_reg,
            k_port,
        };
        k.validate()?;
        Ok(k)
    }

    pub fn validate(&self) -> Result<()> {
        for (field, v) in [
            ("k_add", self.k_add),
            ("k_mul", self.k_mul),
            ("k_reg", self.k_reg),
            ("k_port", self.k_port),
        ] {
            if v == 0 {
                return Err(invalid(field, "gate constant must be positive"));
            }
        }
        Ok(())
    }
}

/// Gate totals broken down by component class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct UnitGates {
    pub adder: u64,
    pub multiplier: u64,
    pub register: u64,
    pub port: u64,
    pub total: u64,
}

impl UnitGates {
    fn from_parts(adder: u64, multiplier: u64, register: u64, port: u64) -> Self {
        Self {
            adder,
            multiplier,
            register,
            port,
            total: adder + multiplier + register + port,
        }
    }

    pub fn scaled(self, n: u64) -> Self {
        Self::from_parts(
            self.adder * n,
            self.multiplier * n,
            self.register * n,
            self.port * n,
        )
    }
}

impl Add for UnitGates {
    type Output = UnitGates;

    fn add(self, rhs: UnitGates) -> UnitGates {
        UnitGates::from_parts(
            self.adder + rhs.adder,
            self.multiplier + rhs.multiplier,
            self.register + rhs.register,
            self.port + rhs.port,
        )
    }
}

/// Adder, multiplier and one accumulation register.
pub fn gates_simple_mac(w: u64, k: &GateConstants) -> UnitGates {
    UnitGates::from_parts(k.k_add * w, k.k_mul * w * w, k.k_reg * w, 0)
}

/// Simple MAC plus a `B`-entry weight register file with one port.
pub fn gates_ws_mac(w: u64, b: u64, k: &GateConstants) -> UnitGates {
    let mac = gates_simple_mac(w, k);
    UnitGates::from_parts(
        mac.adder,
        mac.multiplier,
        mac.register + b * k.k_reg * w,
        k.k_port * w * b,
    )
}

/// Adder and `B` accumulation registers behind a read and a write port.
/// There is no multiplier.
pub fn gates_pas(w: u64, b: u64, k: &GateConstants) -> UnitGates {
    UnitGates::from_parts(k.k_add * w, 0, b * k.k_reg * w, 2 * k.k_port * w * b)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AcceleratorKind {
    MacArray,
    WsMacArray,
    PasArraySharedMac,
}

impl AcceleratorKind {
    pub const ALL: [AcceleratorKind; 3] = [
        AcceleratorKind::MacArray,
        AcceleratorKind::WsMacArray,
        AcceleratorKind::PasArraySharedMac,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AcceleratorKind::MacArray => "mac-array",
            AcceleratorKind::WsMacArray => "ws-mac-array",
            AcceleratorKind::PasArraySharedMac => "pas-array-shared-mac",
        }
    }
}

impl fmt::Display for AcceleratorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AcceleratorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        AcceleratorKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| invalid("kind", format!("unknown accelerator kind {s:?}")))
    }
}

/// An array of identical units, optionally sharing post-pass MACs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AcceleratorSpec {
    pub kind: AcceleratorKind,
    pub n_units: u64,
    /// Post-pass MACs; only meaningful for the PAS kind.
    pub n_shared_mac: u64,
    pub w: u64,
    pub b: u64,
}

impl AcceleratorSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_units == 0 {
            return Err(invalid("n_units", "must be at least 1"));
        }
        if !(2..=64).contains(&self.w) {
            return Err(invalid("w", format!("width {} outside 2..=64", self.w)));
        }
        if self.kind != AcceleratorKind::MacArray && !(2..=256).contains(&self.b) {
            return Err(invalid(
                "b",
                format!("bin count {} outside 2..=256", self.b),
            ));
        }
        if self.kind == AcceleratorKind::PasArraySharedMac {
            if self.n_shared_mac == 0 {
                return Err(invalid("n_shared_mac", "PAS arrays need at least one MAC"));
            }
            if self.n_units < self.n_shared_mac {
                return Err(invalid(
                    "n_shared_mac",
                    format!(
                        "{} MACs exceed {} PAS units",
                        self.n_shared_mac, self.n_units
                    ),
                ));
            }
        }
        Ok(())
    }

    /// Lanes served by the busiest post-pass MAC; 0 for MAC-only arrays.
    pub fn pas_per_mac(&self) -> u64 {
        match self.kind {
            AcceleratorKind::PasArraySharedMac => self.n_units.div_ceil(self.n_shared_mac),
            _ => 0,
        }
    }
}

/// Whole-array gate totals.
pub fn gates_accelerator(spec: &AcceleratorSpec, k: &GateConstants) -> UnitGates {
    match spec.kind {
        AcceleratorKind::MacArray => gates_simple_mac(spec.w, k).scaled(spec.n_units),
        AcceleratorKind::WsMacArray => gates_ws_mac(spec.w, spec.b, k).scaled(spec.n_units),
        AcceleratorKind::PasArraySharedMac => {
            gates_pas(spec.w, spec.b, k).scaled(spec.n_units)
                + gates_ws_mac(spec.w, spec.b, k).scaled(spec.n_shared_mac)
        }
    }
}

/// Products summed per output element, `C * KX * KY`.
pub fn macops_per_output(c: u64, kx: u64, ky: u64) -> u64 {
    c * kx * ky
}

/// Cycle model for fully pipelined units consuming one pair per cycle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct LatencyModel {
    /// Extra cycles charged once per output for pipeline fill.
    pub fill: u64,
}

impl LatencyModel {
    pub fn mac(&self, n: u64) -> u64 {
        n + self.fill
    }

    /// PAS phase over `n` pairs, then `p` lanes take turns on one MAC for
    /// `b` cycles each.
    pub fn pasm(&self, n: u64, b: u64, p: u64) -> u64 {
        self.mac(n) + p * b
    }
}

pub fn latency_mac(n: u64) -> u64 {
    LatencyModel::default().mac(n)
}

pub fn latency_pasm(n: u64, b: u64, p: u64) -> u64 {
    LatencyModel::default().pasm(n, b, p)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatencyReport {
    pub n: u64,
    pub total_cycles: u64,
    pub mac_cycles: u64,
    /// `(total - mac) / mac`.
    pub overhead_ratio: f64,
}

impl LatencyReport {
    pub fn overhead_pct(&self) -> f64 {
        100.0 * self.overhead_ratio
    }
}

/// Cycles for one output element of `n` pairs on `spec`.
pub fn latency_report(spec: &AcceleratorSpec, n: u64, model: &LatencyModel) -> LatencyReport {
    let mac_cycles = model.mac(n);
    let total_cycles = match spec.kind {
        AcceleratorKind::PasArraySharedMac => model.pasm(n, spec.b, spec.pas_per_mac()),
        _ => mac_cycles,
    };
    LatencyReport {
        n,
        total_cycles,
        mac_cycles,
        overhead_ratio: (total_cycles - mac_cycles) as f64 / mac_cycles as f64,
    }
}

//! JSON experiment configuration.
//!
//! Convolution fields sit at the top level under their usual symbols
//! (`ih`, `iw`, `c`, `m`, `ky`, `kx`, `s`, `b`, `w`, `bias`, `relu`); the
//! quantizer, accelerator, gate constants and sweep ranges are nested.
//! Every field has a default, so `{}` is the default experiment: a 5x5
//! tile of 15 channels, two 3x3 kernels and 16 bins.

use std::path::Path;

use pasm_core::{
    AcceleratorKind, AcceleratorSpec, ConvConfig, GateConstants, InitPolicy, KMeansOptions,
    WordSpec,
};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

pub const GATE_CONSTANTS_ENV: &str = "PASM_GATE_CONSTANTS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum BackendChoice {
    Reference,
    WeightShared,
    Pasm,
    #[default]
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum InitChoice {
    #[default]
    EvenlySpaced,
    PlusPlus,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KMeansSection {
    pub max_iters: usize,
    pub restarts: usize,
    pub init: InitChoice,
}

impl Default for KMeansSection {
    fn default() -> Self {
        Self {
            max_iters: 100,
            restarts: 1,
            init: InitChoice::EvenlySpaced,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AcceleratorSection {
    pub kind: String,
    pub n_units: u64,
    pub n_shared_mac: u64,
}

impl Default for AcceleratorSection {
    fn default() -> Self {
        Self {
            kind: AcceleratorKind::PasArraySharedMac.name().to_string(),
            n_units: 16,
            n_shared_mac: 4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GatesSection {
    pub k_add: u64,
    pub k_mul: u64,
    pub k_reg: u64,
    pub k_port: u64,
}

impl Default for GatesSection {
    fn default() -> Self {
        let k = GateConstants::default();
        Self {
            k_add: k.k_add,
            k_mul: k.k_mul,
            k_reg: k.k_reg,
            k_port: k.k_port,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub w: Vec<u64>,
    pub b: Vec<u64>,
    pub kinds: Vec<String>,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            w: vec![4, 8, 16, 32],
            b: vec![4, 8, 16, 64, 256],
            kinds: AcceleratorKind::ALL
                .iter()
                .map(|k| k.name().to_string())
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub ih: usize,
    pub iw: usize,
    pub c: usize,
    pub m: usize,
    pub ky: usize,
    pub kx: usize,
    pub s: usize,
    /// Weight word width.
    pub w: u32,
    /// Image word width; defaults to `w`.
    pub w_image: Option<u32>,
    /// Bin count.
    pub b: usize,
    /// Per-kernel bias; defaults to zeros.
    pub bias: Option<Vec<i64>>,
    pub relu: bool,
    pub backend: BackendChoice,
    pub kmeans: KMeansSection,
    pub accelerator: AcceleratorSection,
    pub gates: GatesSection,
    pub sweep: SweepSection,
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            ih: 5,
            iw: 5,
            c: 15,
            m: 2,
            ky: 3,
            kx: 3,
            s: 1,
            w: 32,
            w_image: None,
            b: 16,
            bias: None,
            relu: false,
            backend: BackendChoice::All,
            kmeans: KMeansSection::default(),
            accelerator: AcceleratorSection::default(),
            gates: GatesSection::default(),
            sweep: SweepSection::default(),
            seed: 0,
        }
    }
}

fn word(field: &str, width: u32) -> CliResult<WordSpec> {
    WordSpec::new(width).map_err(|e| CliError::field(field, e))
}

/// Parses `PASM_GATE_CONSTANTS`-style `k_add,k_mul,k_reg,k_port`.
pub fn parse_gate_constants(s: &str) -> CliResult<GateConstants> {
    let parts = s
        .split(',')
        .map(|p| p.trim().parse::<u64>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| CliError::field(GATE_CONSTANTS_ENV, format!("{s:?}: {e}")))?;
    match parts[..] {
        [a, m, r, p] => {
            GateConstants::new(a, m, r, p).map_err(|e| CliError::field(GATE_CONSTANTS_ENV, e))
        }
        _ => Err(CliError::field(
            GATE_CONSTANTS_ENV,
            format!("expected four comma-separated integers, got {s:?}"),
        )),
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> CliResult<Self> {
        let cfg: Self =
            serde_json::from_str(text).map_err(|e| CliError::Validation(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Validation(format!("config {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Loads `path` if given, otherwise the default experiment.
    pub fn load_or_default(path: Option<&Path>) -> CliResult<Self> {
        path.map_or_else(|| Ok(Self::default()), Self::load)
    }

    pub fn validate(&self) -> CliResult<()> {
        self.conv()?.validate().map_err(CliError::from)?;
        if !(2..=256).contains(&self.b) {
            return Err(CliError::field(
                "b",
                format!("bin count {} outside 2..=256", self.b),
            ));
        }
        if self.kmeans.max_iters == 0 {
            return Err(CliError::field("kmeans.max_iters", "must be at least 1"));
        }
        if self.kmeans.restarts == 0 {
            return Err(CliError::field("kmeans.restarts", "must be at least 1"));
        }
        self.accelerator_spec(self.w as u64, self.b as u64)?;
        self.gate_constants_from_config()?;
        self.sweep_points()?;
        self.sweep_kinds()?;
        Ok(())
    }

    pub fn conv(&self) -> CliResult<ConvConfig> {
        let weight = word("w", self.w)?;
        let image = word("w_image", self.w_image.unwrap_or(self.w))?;
        let mut cfg = ConvConfig::new(
            (self.ih, self.iw),
            self.c,
            self.m,
            (self.ky, self.kx),
            self.s,
            image,
            weight,
        );
        cfg.relu = self.relu;
        if let Some(bias) = &self.bias {
            cfg.bias = bias.clone();
        }
        Ok(cfg)
    }

    pub fn kmeans_options(&self, seed: u64) -> KMeansOptions {
        KMeansOptions {
            max_iters: self.kmeans.max_iters,
            seed,
            init: match self.kmeans.init {
                InitChoice::EvenlySpaced => InitPolicy::EvenlySpaced,
                InitChoice::PlusPlus => InitPolicy::PlusPlus,
            },
            restarts: self.kmeans.restarts,
        }
    }

    pub fn accelerator_kind(&self) -> CliResult<AcceleratorKind> {
        self.accelerator
            .kind
            .parse()
            .map_err(|e| CliError::field("accelerator.kind", e))
    }

    pub fn accelerator_spec(&self, w: u64, b: u64) -> CliResult<AcceleratorSpec> {
        let spec = AcceleratorSpec {
            kind: self.accelerator_kind()?,
            n_units: self.accelerator.n_units,
            n_shared_mac: self.accelerator.n_shared_mac,
            w,
            b,
        };
        spec.validate().map_err(|e| match e {
            pasm_core::Error::InvalidConfig { field, reason } => {
                CliError::field(&format!("accelerator.{field}"), reason)
            }
            other => other.into(),
        })?;
        Ok(spec)
    }

    fn gate_constants_from_config(&self) -> CliResult<GateConstants> {
        let g = self.gates;
        GateConstants::new(g.k_add, g.k_mul, g.k_reg, g.k_port).map_err(|e| match e {
            pasm_core::Error::InvalidConfig { field, reason } => {
                CliError::field(&format!("gates.{field}"), reason)
            }
            other => other.into(),
        })
    }

    /// Gate constants from the config, overridden by `env_override` when set.
    pub fn gate_constants(&self, env_override: Option<&str>) -> CliResult<GateConstants> {
        match env_override {
            Some(s) => parse_gate_constants(s),
            None => self.gate_constants_from_config(),
        }
    }

    /// `(W, B)` pairs of the sweep, ordered by W then B.
    pub fn sweep_points(&self) -> CliResult<Vec<(u64, u64)>> {
        if self.sweep.w.is_empty() {
            return Err(CliError::field("sweep.w", "empty range"));
        }
        if self.sweep.b.is_empty() {
            return Err(CliError::field("sweep.b", "empty range"));
        }
        if let Some(w) = self.sweep.w.iter().find(|w| !(2..=64).contains(*w)) {
            return Err(CliError::field(
                "sweep.w",
                format!("width {w} outside 2..=64"),
            ));
        }
        if let Some(b) = self.sweep.b.iter().find(|b| !(2..=256).contains(*b)) {
            return Err(CliError::field(
                "sweep.b",
                format!("bin count {b} outside 2..=256"),
            ));
        }
        let mut ws = self.sweep.w.clone();
        let mut bs = self.sweep.b.clone();
        ws.sort_unstable();
        ws.dedup();
        bs.sort_unstable();
        bs.dedup();
        Ok(ws
            .iter()
            .flat_map(|&w| bs.iter().map(move |&b| (w, b)))
            .collect())
    }

    pub fn sweep_kinds(&self) -> CliResult<Vec<AcceleratorKind>> {
        if self.sweep.kinds.is_empty() {
            return Err(CliError::field("sweep.kinds", "empty list"));
        }
        let mut kinds = self
            .sweep
            .kinds
            .iter()
            .map(|k| k.parse().map_err(|e| CliError::field("sweep.kinds", e)))
            .collect::<CliResult<Vec<AcceleratorKind>>>()?;
        kinds.sort_unstable();
        kinds.dedup();
        Ok(kinds)
    }
}

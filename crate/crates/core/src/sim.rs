//! Cycle-level model of accelerator arrays.
//!
//! Two array styles are simulated one clock at a time:
//!
//! * weight-shared MAC lanes, each consuming one `(value, bin)` pair per
//!   cycle and multiply-accumulating against the shared weight file;
//! * PAS lanes, each adding one value per cycle into its bin registers,
//!   followed by a post-pass in which every shared MAC walks the bins of the
//!   lanes in its group, one bin per cycle, in ascending lane order.
//!
//! The post-pass starts only after every PAS lane has drained its stream.
//! Bin reset is charged no cycles.

use std::fmt;

use crate::conv::{pas_accumulate, postpass_multiply};
use crate::cost::{latency_mac, latency_pasm};
use crate::error::{invalid, Error, Result};

/// One input stream per lane, all of the same length `N`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LaneStream {
    lanes: Vec<Vec<(i64, usize)>>,
}

impl LaneStream {
    pub fn new(lanes: Vec<Vec<(i64, usize)>>) -> Result<Self> {
        let n = lanes.first().map(Vec::len).unwrap_or(0);
        if lanes.is_empty() {
            return Err(invalid("lanes", "need at least one lane"));
        }
        if n == 0 {
            return Err(invalid("n", "streams must be non-empty"));
        }
        if let Some(bad) = lanes.iter().position(|l| l.len() != n) {
            return Err(invalid(
                "lanes",
                format!("lane {bad} has {} pairs, lane 0 has {n}", lanes[bad].len()),
            ));
        }
        Ok(Self { lanes })
    }

    pub fn n(&self) -> usize {
        self.lanes[0].len()
    }

    pub fn n_lanes(&self) -> usize {
        self.lanes.len()
    }

    pub fn lane(&self, k: usize) -> &[(i64, usize)] {
        &self.lanes[k]
    }

    pub fn lanes(&self) -> &[Vec<(i64, usize)>] {
        &self.lanes
    }

    fn check_bins(&self, bins: usize) -> Result<()> {
        for lane in &self.lanes {
            if let Some(&(_, b)) = lane.iter().find(|&&(_, b)| b >= bins) {
                return Err(Error::BinOutOfRange { index: b, bins });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SimMode {
    WsMac,
    Pasm,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimConfig {
    pub n_lanes: usize,
    /// Post-pass MACs shared by the PAS lanes; ignored in MAC mode.
    pub n_shared_mac: usize,
    pub bins: usize,
    pub trace: bool,
}

impl SimConfig {
    pub fn validate(&self, mode: SimMode) -> Result<()> {
        if self.n_lanes == 0 {
            return Err(invalid("n_lanes", "must be at least 1"));
        }
        if self.bins == 0 {
            return Err(invalid("bins", "must be at least 1"));
        }
        if mode == SimMode::Pasm {
            if self.n_shared_mac == 0 {
                return Err(invalid("n_shared_mac", "PAS arrays need at least one MAC"));
            }
            if !self.n_lanes.is_multiple_of(self.n_shared_mac) {
                return Err(invalid(
                    "n_shared_mac",
                    format!(
                        "{} lanes cannot be split evenly over {} MACs",
                        self.n_lanes, self.n_shared_mac
                    ),
                ));
            }
        }
        Ok(())
    }

    /// Lanes served by each shared MAC.
    pub fn group_size(&self) -> usize {
        self.n_lanes / self.n_shared_mac.max(1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Action {
    /// Weight-shared MAC multiply-accumulate.
    Mac,
    /// PAS add into a bin register.
    Acc,
    /// Post-pass multiply-accumulate of one bin.
    Post,
}

impl Action {
    pub fn name(self) -> &'static str {
        match self {
            Action::Mac => "mac",
            Action::Acc => "acc",
            Action::Post => "post",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Unit {
    Mac(usize),
    Pas(usize),
}

impl fmt::Display for Unit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Unit::Mac(i) => write!(f, "mac{i}"),
            Unit::Pas(i) => write!(f, "pas{i}"),
        }
    }
}

/// One unit operation; `value` is the register contents after it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TraceEvent {
    pub cycle: u64,
    pub unit: Unit,
    pub action: Action,
    pub lane: usize,
    pub bin: usize,
    pub value: i128,
}

impl TraceEvent {
    pub const CSV_HEADER: &'static str = "cycle,unit,action,lane,bin,value";
}

impl fmt::Display for TraceEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{},{},{},{},{},{}",
            self.cycle,
            self.unit,
            self.action.name(),
            self.lane,
            self.bin,
            self.value
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimReport {
    pub mode: SimMode,
    pub n: usize,
    pub bins: usize,
    pub n_lanes: usize,
    pub n_shared_mac: usize,
    pub total_cycles: u64,
    pub lane_results: Vec<i128>,
    /// Busy cycles per unit, PAS lanes (if any) before MACs.
    pub busy: Vec<(Unit, u64)>,
    /// Cycle at which each lane's post-pass began (PAS mode only).
    pub post_start: Vec<u64>,
    pub trace: Vec<TraceEvent>,
}

impl SimReport {
    pub fn busy_of(&self, unit: Unit) -> Option<u64> {
        self.busy.iter().find(|(u, _)| *u == unit).map(|&(_, b)| b)
    }

    /// Trace as `cycle,unit,action,lane,bin,value` lines with a header.
    pub fn trace_csv(&self) -> String {
        let mut s = String::from(TraceEvent::CSV_HEADER);
        s.push('\n');
        for ev in &self.trace {
            s.push_str(&ev.to_string());
            s.push('\n');
        }
        s
    }
}

fn check_common(
    streams: &LaneStream,
    weights: &[i64],
    cfg: &SimConfig,
    mode: SimMode,
) -> Result<()> {
    cfg.validate(mode)?;
    if streams.n_lanes() != cfg.n_lanes {
        return Err(invalid(
            "n_lanes",
            format!(
                "config has {} lanes, streams have {}",
                cfg.n_lanes,
                streams.n_lanes()
            ),
        ));
    }
    if weights.len() != cfg.bins {
        return Err(invalid(
            "bins",
            format!(
                "config has {} bins, weight file has {}",
                cfg.bins,
                weights.len()
            ),
        ));
    }
    streams.check_bins(cfg.bins)
}

/// Fully pipelined weight-shared MAC per lane.
///
/// `weights` is the shared weight file indexed by bin.
pub fn sim_ws_mac_array(
    streams: &LaneStream,
    weights: &[i64],
    cfg: &SimConfig,
) -> Result<SimReport> {
    check_common(streams, weights, cfg, SimMode::WsMac)?;
    let n = streams.n();
    let mut acc = vec![0i128; cfg.n_lanes];
    let mut busy = vec![0u64; cfg.n_lanes];
    let mut pos = vec![0usize; cfg.n_lanes];
    let mut trace = Vec::new();
    let mut cycle = 0u64;

    while pos.iter().any(|&p| p < n) {
        for lane in 0..cfg.n_lanes {
            let Some(&(value, bin)) = streams.lane(lane).get(pos[lane]) else {
                continue;
            };
            acc[lane] = acc[lane].wrapping_add((value as i128).wrapping_mul(weights[bin] as i128));
            pos[lane] += 1;
            busy[lane] += 1;
            if cfg.trace {
                trace.push(TraceEvent {
                    cycle,
                    unit: Unit::Mac(lane),
                    action: Action::Mac,
                    lane,
                    bin,
                    value: acc[lane],
                });
            }
        }
        cycle += 1;
    }

    Ok(SimReport {
        mode: SimMode::WsMac,
        n,
        bins: cfg.bins,
        n_lanes: cfg.n_lanes,
        n_shared_mac: 0,
        total_cycles: cycle,
        lane_results: acc,
        busy: busy
            .into_iter()
            .enumerate()
            .map(|(i, b)| (Unit::Mac(i), b))
            .collect(),
        post_start: Vec::new(),
        trace,
    })
}

struct SharedMac {
    /// Lanes served, ascending.
    group: std::ops::Range<usize>,
    lane: usize,
    bin: usize,
    acc: i128,
    busy: u64,
}

impl SharedMac {
    fn done(&self) -> bool {
        self.lane >= self.group.end
    }
}

/// PAS lanes with round-robin shared post-pass MACs.
///
/// MAC `j` serves lanes `j*G .. (j+1)*G` where `G = n_lanes / n_shared_mac`.
pub fn sim_pasm_array(streams: &LaneStream, weights: &[i64], cfg: &SimConfig) -> Result<SimReport> {
    check_common(streams, weights, cfg, SimMode::Pasm)?;
    let n = streams.n();
    let group = cfg.group_size();
    let mut bins = vec![vec![0i128; cfg.bins]; cfg.n_lanes];
    let mut pos = vec![0usize; cfg.n_lanes];
    let mut pas_busy = vec![0u64; cfg.n_lanes];
    let mut results = vec![0i128; cfg.n_lanes];
    let mut post_start = vec![0u64; cfg.n_lanes];
    let mut macs: Vec<SharedMac> = (0..cfg.n_shared_mac)
        .map(|j| SharedMac {
            group: j * group..(j + 1) * group,
            lane: j * group,
            bin: 0,
            acc: 0,
            busy: 0,
        })
        .collect();
    let mut trace = Vec::new();
    let mut cycle = 0u64;

    loop {
        let accumulating = pos.iter().any(|&p| p < n);
        if accumulating {
            for lane in 0..cfg.n_lanes {
                let Some(&(value, bin)) = streams.lane(lane).get(pos[lane]) else {
                    continue;
                };
                let reg = &mut bins[lane][bin];
                *reg = reg.wrapping_add(value as i128);
                pos[lane] += 1;
                pas_busy[lane] += 1;
                if cfg.trace {
                    trace.push(TraceEvent {
                        cycle,
                        unit: Unit::Pas(lane),
                        action: Action::Acc,
                        lane,
                        bin,
                        value: *reg,
                    });
                }
            }
        } else if macs.iter().all(SharedMac::done) {
            break;
        } else {
            for (j, mac) in macs.iter_mut().enumerate() {
                if mac.done() {
                    continue;
                }
                if mac.bin == 0 {
                    post_start[mac.lane] = cycle;
                    mac.acc = 0;
                }
                let product = bins[mac.lane][mac.bin].wrapping_mul(weights[mac.bin] as i128);
                mac.acc = mac.acc.wrapping_add(product);
                mac.busy += 1;
                if cfg.trace {
                    trace.push(TraceEvent {
                        cycle,
                        unit: Unit::Mac(j),
                        action: Action::Post,
                        lane: mac.lane,
                        bin: mac.bin,
                        value: mac.acc,
                    });
                }
                mac.bin += 1;
                if mac.bin == cfg.bins {
                    results[mac.lane] = mac.acc;
                    mac.lane += 1;
                    mac.bin = 0;
                }
            }
        }
        cycle += 1;
    }

    let busy = pas_busy
        .into_iter()
        .enumerate()
        .map(|(i, b)| (Unit::Pas(i), b))
        .chain(macs.iter().enumerate().map(|(j, m)| (Unit::Mac(j), m.busy)))
        .collect();
    Ok(SimReport {
        mode: SimMode::Pasm,
        n,
        bins: cfg.bins,
        n_lanes: cfg.n_lanes,
        n_shared_mac: cfg.n_shared_mac,
        total_cycles: cycle,
        lane_results: results,
        busy,
        post_start,
        trace,
    })
}

/// Outcome of [`verify_sim_vs_analytic`].
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Verdict {
    pub expected_cycles: u64,
    pub mismatches: Vec<String>,
}

impl Verdict {
    pub fn passed(&self) -> bool {
        self.mismatches.is_empty()
    }
}

/// Checks a simulation against the analytic latency formulas and against
/// the functional accumulate/multiply primitives on the same streams.
pub fn verify_sim_vs_analytic(
    report: &SimReport,
    streams: &LaneStream,
    weights: &[i64],
) -> Verdict {
    let n = streams.n() as u64;
    let b = report.bins as u64;
    let expected_cycles = match report.mode {
        SimMode::WsMac => latency_mac(n),
        SimMode::Pasm => latency_pasm(n, b, (report.n_lanes / report.n_shared_mac.max(1)) as u64),
    };
    let mut mismatches = Vec::new();
    if report.total_cycles != expected_cycles {
        mismatches.push(format!(
            "total_cycles {} != analytic {expected_cycles}",
            report.total_cycles
        ));
    }
    if report.lane_results.len() != streams.n_lanes() {
        mismatches.push(format!(
            "{} lane results for {} lanes",
            report.lane_results.len(),
            streams.n_lanes()
        ));
    }
    for (k, lane) in streams.lanes().iter().enumerate() {
        let expected = pas_accumulate(lane.iter().copied(), report.bins)
            .and_then(|acc| postpass_multiply(&acc, weights));
        match (expected, report.lane_results.get(k)) {
            (Ok(want), Some(&got)) if want == got => {}
            (Ok(want), got) => mismatches.push(format!("lane {k}: result {got:?} != {want}")),
            (Err(e), _) => mismatches.push(format!("lane {k}: {e}")),
        }
    }
    for &(unit, busy) in &report.busy {
        let want = match (report.mode, unit) {
            (SimMode::Pasm, Unit::Mac(_)) => {
                (report.n_lanes / report.n_shared_mac.max(1)) as u64 * b
            }
            _ => n,
        };
        if busy != want {
            mismatches.push(format!("{unit}: busy {busy} != {want}"));
        }
    }
    Verdict {
        expected_cycles,
        mismatches,
    }
}

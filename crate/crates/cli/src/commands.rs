use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use pasm_core::{
    conv_reference, encode_kernel, first_mismatch, gates_accelerator, kmeans_quantize, latency_mac,
    latency_pasm, macops_per_output, sim_pasm_array, sim_ws_mac_array, verify_sim_vs_analytic,
    AcceleratorKind, AcceleratorSpec, Backend, ConvResult, EncodedKernel, GateConstants,
    LaneStream, QTensor, SimConfig, SimMode, WeightDictionary, WordSpec,
};
use rayon::prelude::*;

use crate::config::{BackendChoice, ExperimentConfig, GATE_CONSTANTS_ENV};
use crate::error::{CliError, CliResult};
use crate::fixtures::{self, FixtureSet};
use crate::io::{load_tensor, parse_text, store_tensor, to_text, TensorFormat};

pub const CSV_HEADER: &str =
    "W,B,kind,n_units,n_shared_mac,total_gates,mult_gates,reg_gates,cycles,overhead_pct";

#[derive(Debug, Parser)]
#[command(
    name = "pasm",
    version,
    about = "Weight-shared convolution engines, cost model and cycle simulator"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// JSON experiment config; defaults apply to missing fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output file.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Format for tensors written by this command.
    #[arg(long, default_value = "text-v1")]
    pub format: TensorFormat,
    /// Cycle trace output (simulate).
    #[arg(long)]
    pub trace: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Cluster weights into a dictionary and index tensor.
    Quantize(QuantizeArgs),
    /// Run the convolution backends on one layer.
    Run(RunArgs),
    /// Cycle-level simulation of a MAC or PAS array.
    Simulate(SimulateArgs),
    /// Gate and cycle costs at the configured W and B.
    Cost(CommonOnly),
    /// Gate and cycle costs over the configured W and B ranges.
    Sweep(CommonOnly),
    /// Check the bundled reference fixtures.
    Selftest(SelftestArgs),
}

#[derive(Debug, Args)]
pub struct CommonOnly {
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct QuantizeArgs {
    #[command(flatten)]
    pub common: Common,
    /// Weight tensor; a random kernel of the configured shape when absent.
    #[arg(long)]
    pub weights: Option<PathBuf>,
    #[arg(long)]
    pub dict_out: Option<PathBuf>,
    #[arg(long)]
    pub indices_out: Option<PathBuf>,
    /// Overrides the config bin count.
    #[arg(long)]
    pub bins: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FixtureChoice {
    Worked,
    Zero,
    Random,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub image: Option<PathBuf>,
    /// Full kernel tensor, quantized to the configured bin count.
    #[arg(long, conflicts_with_all = ["dict", "indices"])]
    pub kernel: Option<PathBuf>,
    /// Dictionary tensor of shape [B].
    #[arg(long, requires = "indices")]
    pub dict: Option<PathBuf>,
    /// Index tensor of shape [M, C, KY, KX].
    #[arg(long, requires = "dict")]
    pub indices: Option<PathBuf>,
    #[arg(long, conflicts_with_all = ["image", "kernel", "dict", "indices"])]
    pub fixture: Option<FixtureChoice>,
    /// Overrides the config backend.
    #[arg(long, value_parser = ["reference", "weightshared", "pasm", "all"])]
    pub backend: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeChoice {
    WsMac,
    Pasm,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, value_enum, default_value = "pasm")]
    pub mode: ModeChoice,
    /// Lanes; defaults to the accelerator unit count.
    #[arg(long)]
    pub lanes: Option<usize>,
    /// Shared post-pass MACs; defaults to the accelerator setting.
    #[arg(long)]
    pub macs: Option<usize>,
    /// Pairs per lane; defaults to C * KX * KY.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub bins: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SelftestArgs {
    #[command(flatten)]
    pub common: Common,
    /// Read fixtures from this directory instead of the bundled copies.
    #[arg(long)]
    pub fixtures: Option<PathBuf>,
}

/// Parses `args` (including the program name) and runs the command,
/// writing the report to `stdout`.
pub fn run_cli<I, T>(args: I, stdout: &mut dyn Write) -> CliResult<()>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => execute(cli.command, stdout),
        // --help and --version
        Err(e) if !e.use_stderr() => Ok(write!(stdout, "{}", e.render())?),
        Err(e) => {
            let text = e.render().to_string();
            let first = text.lines().next().unwrap_or_default();
            let first = first.strip_prefix("error: ").unwrap_or(first);
            Err(CliError::Validation(format!("{first} (see --help)")))
        }
    }
}

pub fn execute(command: Command, stdout: &mut dyn Write) -> CliResult<()> {
    let env_gates = std::env::var(GATE_CONSTANTS_ENV).ok();
    match command {
        Command::Quantize(a) => quantize(&a, stdout),
        Command::Run(a) => run(&a, stdout),
        Command::Simulate(a) => simulate(&a, stdout),
        Command::Cost(a) => {
            let cfg = load(&a.common)?;
            let points = vec![(cfg.w as u64, cfg.b as u64)];
            let csv = cost_csv(&cfg, &points, &cfg.gate_constants(env_gates.as_deref())?)?;
            emit(&a.common, &csv, stdout)
        }
        Command::Sweep(a) => {
            let cfg = load(&a.common)?;
            let csv = cost_csv(
                &cfg,
                &cfg.sweep_points()?,
                &cfg.gate_constants(env_gates.as_deref())?,
            )?;
            emit(&a.common, &csv, stdout)
        }
        Command::Selftest(a) => selftest(&a, stdout),
    }
}

fn load(common: &Common) -> CliResult<ExperimentConfig> {
    let mut cfg = ExperimentConfig::load_or_default(common.config.as_deref())?;
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn read_tensor(what: &str, path: &Path) -> CliResult<QTensor> {
    load_tensor(path, None).map_err(|e| CliError::field(what, format!("{}: {e}", path.display())))
}

fn write_tensor(what: &str, path: &Path, t: &QTensor, format: TensorFormat) -> CliResult<()> {
    store_tensor(path, t, format)
        .map_err(|e| CliError::field(what, format!("{}: {e}", path.display())))
}

fn emit(common: &Common, text: &str, stdout: &mut dyn Write) -> CliResult<()> {
    match &common.out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| CliError::field("out", format!("{}: {e}", path.display()))),
        None => Ok(stdout.write_all(text.as_bytes())?),
    }
}

/// Smallest signed width that holds every index of `dict`.
fn index_word(dict: &WeightDictionary) -> WordSpec {
    WordSpec::new((dict.index_bits() + 1).max(WordSpec::MIN_WIDTH)).expect("index width below 64")
}

fn quantize(a: &QuantizeArgs, stdout: &mut dyn Write) -> CliResult<()> {
    let cfg = load(&a.common)?;
    let bins = a.bins.unwrap_or(cfg.b);
    if !(2..=256).contains(&bins) {
        return Err(CliError::field(
            "bins",
            format!("bin count {bins} outside 2..=256"),
        ));
    }
    let weights = match &a.weights {
        Some(path) => read_tensor("weights", path)?,
        None => {
            let conv = cfg.conv()?;
            let shape = conv.kernel_shape();
            let data = fixtures::random_weights(shape.iter().product(), conv.weight_word, cfg.seed);
            QTensor::new(shape.to_vec(), conv.weight_word, data)?
        }
    };
    let q = kmeans_quantize(weights.data(), bins, &cfg.kmeans_options(cfg.seed))?;
    writeln!(
        stdout,
        "B={} SSE={} iterations={}",
        q.dictionary.len(),
        q.sse,
        q.iterations
    )?;
    writeln!(stdout, "dictionary: {:?}", q.dictionary.centroids())?;
    let dict = QTensor::new(
        vec![q.dictionary.len()],
        weights.word(),
        q.dictionary.centroids().to_vec(),
    )?;
    let idx_word = index_word(&q.dictionary);
    let indices = QTensor::new(
        weights.shape().to_vec(),
        idx_word,
        q.assignments.iter().map(|&i| i as i64).collect(),
    )?;
    if let Some(path) = &a.dict_out {
        write_tensor("dict-out", path, &dict, a.common.format)?;
    }
    if let Some(path) = &a.indices_out {
        write_tensor("indices-out", path, &indices, a.common.format)?;
    }
    Ok(())
}

fn load_encoded(dict_path: &Path, idx_path: &Path) -> CliResult<EncodedKernel> {
    let dict_t = read_tensor("dict", dict_path)?;
    let idx_t = read_tensor("indices", idx_path)?;
    if dict_t.rank() != 1 {
        return Err(CliError::field(
            "dict",
            format!("expected rank 1, got shape {:?}", dict_t.shape()),
        ));
    }
    let dict =
        WeightDictionary::new(dict_t.data().to_vec()).map_err(|e| CliError::field("dict", e))?;
    if dict.len() != dict_t.len() || dict.centroids() != dict_t.data() {
        return Err(CliError::field(
            "dict",
            "entries must be strictly increasing",
        ));
    }
    let shape: [usize; 4] = idx_t.shape().try_into().map_err(|_| {
        CliError::field(
            "indices",
            format!("expected rank 4, got shape {:?}", idx_t.shape()),
        )
    })?;
    let indices = idx_t
        .data()
        .iter()
        .map(|&i| {
            u8::try_from(i)
                .ok()
                .filter(|&i| (i as usize) < dict.len())
                .ok_or_else(|| {
                    CliError::field("indices", format!("index {i} outside 0..{}", dict.len()))
                })
        })
        .collect::<CliResult<Vec<u8>>>()?;
    EncodedKernel::new(shape, indices, dict, dict_t.word())
        .map_err(|e| CliError::field("indices", e))
}

fn run(a: &RunArgs, stdout: &mut dyn Write) -> CliResult<()> {
    let mut cfg = load(&a.common)?;
    if let Some(b) = &a.backend {
        cfg.backend = serde_json::from_value(serde_json::Value::String(b.clone()))
            .map_err(|e| CliError::field("backend", e))?;
    }
    let layer = match (a.fixture, &a.image) {
        (Some(FixtureChoice::Worked), _) => fixtures::worked()?,
        (Some(FixtureChoice::Zero), _) => fixtures::zero(&cfg.conv()?, cfg.b, cfg.seed)?,
        (Some(FixtureChoice::Random), _) => fixtures::random(&cfg.conv()?, cfg.b, cfg.seed)?,
        (None, Some(image_path)) => {
            let image = read_tensor("image", image_path)?;
            let kernel = match (&a.kernel, &a.dict, &a.indices) {
                (Some(k), _, _) => {
                    let kernel = read_tensor("kernel", k)?;
                    let q = kmeans_quantize(kernel.data(), cfg.b, &cfg.kmeans_options(cfg.seed))?;
                    if q.sse != 0 {
                        writeln!(
                            stdout,
                            "kernel quantized to {} bins, SSE={}",
                            q.dictionary.len(),
                            q.sse
                        )?;
                    }
                    encode_kernel(&kernel, &q.dictionary)
                        .map_err(|e| CliError::field("kernel", e))?
                }
                (None, Some(d), Some(i)) => load_encoded(d, i)?,
                _ => {
                    return Err(CliError::field(
                        "kernel",
                        "pass --kernel or --dict with --indices",
                    ))
                }
            };
            let [c, ih, iw]: [usize; 3] = image.shape().try_into().map_err(|_| {
                CliError::field(
                    "image",
                    format!("expected rank 3, got shape {:?}", image.shape()),
                )
            })?;
            let [m, kc, ky, kx] = kernel.shape();
            if kc != c {
                return Err(CliError::field(
                    "kernel",
                    format!("{kc} channels, image has {c}"),
                ));
            }
            let mut conv = cfg.conv()?;
            (conv.ih, conv.iw, conv.c, conv.m, conv.ky, conv.kx) = (ih, iw, c, m, ky, kx);
            conv.image_word = image.word();
            conv.weight_word = kernel.word();
            if cfg.bias.is_none() {
                conv.bias = vec![0; m];
            }
            conv.validate()?;
            fixtures::Layer {
                image,
                kernel,
                cfg: conv,
            }
        }
        (None, None) => return Err(CliError::field("image", "pass --image or --fixture")),
    };
    let conv = &layer.cfg;
    writeln!(stdout, "N={}", conv.macs_per_output())?;
    let backends: Vec<Backend> = match cfg.backend {
        BackendChoice::Reference => vec![Backend::Reference],
        BackendChoice::WeightShared => vec![Backend::WeightShared],
        BackendChoice::Pasm => vec![Backend::Pasm],
        BackendChoice::All => Backend::ALL.to_vec(),
    };
    let results = backends
        .iter()
        .map(|b| b.run(&layer.image, &layer.kernel, conv))
        .collect::<pasm_core::Result<Vec<ConvResult>>>()?;
    let first = &results[0];
    if let Some(path) = &a.common.out {
        write_tensor("out", path, &first.out, a.common.format)?;
    } else {
        write!(stdout, "{}", to_text(&first.out))?;
    }
    for (backend, result) in backends.iter().zip(&results).skip(1) {
        if let Some((m, y, x, lhs, rhs)) = first_mismatch(first, result) {
            writeln!(stdout, "verdict: FAIL")?;
            return Err(CliError::Verification(format!(
                "{} and {} differ at (m={m}, y={y}, x={x}): {lhs} != {rhs}",
                backends[0].name(),
                backend.name()
            )));
        }
    }
    if backends.len() > 1 {
        writeln!(
            stdout,
            "verdict: PASS ({} backends bit-exact)",
            backends.len()
        )?;
    }
    Ok(())
}

fn simulate(a: &SimulateArgs, stdout: &mut dyn Write) -> CliResult<()> {
    let cfg = load(&a.common)?;
    let conv = cfg.conv()?;
    let mode = match a.mode {
        ModeChoice::WsMac => SimMode::WsMac,
        ModeChoice::Pasm => SimMode::Pasm,
    };
    let sim = SimConfig {
        n_lanes: a.lanes.unwrap_or(cfg.accelerator.n_units as usize),
        n_shared_mac: a.macs.unwrap_or(cfg.accelerator.n_shared_mac as usize),
        bins: a.bins.unwrap_or(cfg.b),
        trace: a.common.trace.is_some(),
    };
    sim.validate(mode)?;
    let n = a.n.unwrap_or(conv.macs_per_output());
    let streams = LaneStream::new(fixtures::random_streams(
        sim.n_lanes,
        n,
        sim.bins,
        conv.image_word,
        cfg.seed,
    ))?;
    let weights = fixtures::random_weights(sim.bins, conv.weight_word, cfg.seed);
    let report = match mode {
        SimMode::WsMac => sim_ws_mac_array(&streams, &weights, &sim)?,
        SimMode::Pasm => sim_pasm_array(&streams, &weights, &sim)?,
    };
    let verdict = verify_sim_vs_analytic(&report, &streams, &weights);
    writeln!(
        stdout,
        "cycles={} expected={}",
        report.total_cycles, verdict.expected_cycles
    )?;
    for (unit, busy) in &report.busy {
        writeln!(stdout, "busy {unit} {busy}")?;
    }
    if let Some(path) = &a.common.trace {
        std::fs::write(path, report.trace_csv())
            .map_err(|e| CliError::field("trace", format!("{}: {e}", path.display())))?;
    }
    if !verdict.passed() {
        writeln!(stdout, "verdict: FAIL")?;
        return Err(CliError::Verification(verdict.mismatches.join("; ")));
    }
    writeln!(stdout, "verdict: PASS")?;
    Ok(())
}

/// One CSV row of the cost report.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub spec: AcceleratorSpec,
    pub total_gates: u64,
    pub mult_gates: u64,
    pub reg_gates: u64,
    pub cycles: u64,
    pub overhead_pct: f64,
}

impl ReportRow {
    pub fn csv(&self) -> String {
        let s = &self.spec;
        let shared = if s.kind == AcceleratorKind::PasArraySharedMac {
            s.n_shared_mac
        } else {
            0
        };
        format!(
            "{},{},{},{},{},{},{},{},{},{:.4}",
            s.w,
            s.b,
            s.kind,
            s.n_units,
            shared,
            self.total_gates,
            self.mult_gates,
            self.reg_gates,
            self.cycles,
            self.overhead_pct
        )
    }
}

/// Cost rows for every `(W, B)` point and configured kind, ordered by
/// W, then B, then kind.
pub fn cost_rows(
    cfg: &ExperimentConfig,
    points: &[(u64, u64)],
    k: &GateConstants,
) -> CliResult<Vec<ReportRow>> {
    let kinds = cfg.sweep_kinds()?;
    let n = cfg.conv()?.macs_per_output() as u64;
    let specs = points
        .iter()
        .flat_map(|&(w, b)| kinds.iter().map(move |&kind| (w, b, kind)))
        .map(|(w, b, kind)| {
            let mut spec = cfg.accelerator_spec(w, b)?;
            spec.kind = kind;
            spec.validate()?;
            Ok(spec)
        })
        .collect::<CliResult<Vec<_>>>()?;
    Ok(specs
        .par_iter()
        .map(|spec| {
            let g = gates_accelerator(spec, k);
            let mac = latency_mac(n);
            let cycles = match spec.kind {
                AcceleratorKind::PasArraySharedMac => latency_pasm(n, spec.b, spec.pas_per_mac()),
                _ => mac,
            };
            ReportRow {
                spec: *spec,
                total_gates: g.total,
                mult_gates: g.multiplier,
                reg_gates: g.register,
                cycles,
                overhead_pct: 100.0 * (cycles - mac) as f64 / mac as f64,
            }
        })
        .collect())
}

pub fn cost_csv(
    cfg: &ExperimentConfig,
    points: &[(u64, u64)],
    k: &GateConstants,
) -> CliResult<String> {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for row in cost_rows(cfg, points, k)? {
        out.push_str(&row.csv());
        out.push('\n');
    }
    Ok(out)
}

struct Checks<'a> {
    out: &'a mut dyn Write,
    passed: usize,
    failed: usize,
}

impl Checks<'_> {
    fn check(&mut self, name: &str, ok: bool, detail: String) -> CliResult<()> {
        if ok {
            self.passed += 1;
            writeln!(self.out, "PASS {name}: {detail}")?;
        } else {
            self.failed += 1;
            writeln!(self.out, "FAIL {name}: {detail}")?;
        }
        Ok(())
    }
}

fn selftest(a: &SelftestArgs, stdout: &mut dyn Write) -> CliResult<()> {
    let set = match &a.fixtures {
        Some(dir) => FixtureSet::from_dir(dir)?,
        None => FixtureSet::bundled(),
    };
    let field = |name: &str, e: crate::io::TensorIoError| CliError::field(name, e);
    let image = parse_text(&set.worked_image).map_err(|e| field("worked_image", e))?;
    let kernel = parse_text(&set.worked_kernel).map_err(|e| field("worked_kernel", e))?;
    let expected = parse_text(&set.worked_out).map_err(|e| field("worked_out", e))?;
    let macops = fixtures::parse_csv("macops", &set.macops, "c,k,macops")?;
    let cycles = fixtures::parse_csv("cycles", &set.cycles, "mode,lanes,macs,n,bins,cycles")?;
    let gates = fixtures::parse_csv(
        "gates",
        &set.gates,
        "kind,w,b,n_units,n_shared_mac,total_gates",
    )?;

    let mut checks = Checks {
        out: stdout,
        passed: 0,
        failed: 0,
    };

    let [c, ih, iw]: [usize; 3] = image
        .shape()
        .try_into()
        .map_err(|_| CliError::field("worked_image", "expected rank 3"))?;
    let [m, kc, ky, kx]: [usize; 4] = kernel
        .shape()
        .try_into()
        .map_err(|_| CliError::field("worked_kernel", "expected rank 4"))?;
    if kc != c {
        return Err(CliError::field(
            "worked_kernel",
            format!("{kc} channels, image has {c}"),
        ));
    }
    let conv = pasm_core::ConvConfig::new((ih, iw), c, m, (ky, kx), 1, image.word(), kernel.word());
    let reference = conv_reference(&image, &kernel, &conv)?;
    let distinct = WeightDictionary::new(kernel.data().to_vec())?;
    let ek = encode_kernel(&kernel, &distinct)?;
    for backend in Backend::ALL {
        let r = backend.run(&image, &ek, &conv)?;
        let ok = r.out.shape() == expected.shape() && r.out.data() == expected.data();
        checks.check(
            &format!("worked/{}", backend.name()),
            ok,
            format!("{:?}", r.out.data()),
        )?;
    }
    checks.check(
        "worked/reference-vs-expected",
        reference.out.data() == expected.data(),
        format!("expected {:?}", expected.data()),
    )?;

    for row in &macops {
        let (c, k, want) = (
            fixtures::parse_u64("macops", &row[0])?,
            fixtures::parse_u64("macops", &row[1])?,
            fixtures::parse_u64("macops", &row[2])?,
        );
        let got = macops_per_output(c, k, k);
        checks.check(
            &format!("macops/c{c}-k{k}"),
            got == want,
            format!("{got} (want {want})"),
        )?;
    }

    for row in &cycles {
        let mode = match row[0].as_str() {
            "pasm" => SimMode::Pasm,
            "ws-mac" => SimMode::WsMac,
            other => return Err(CliError::field("cycles", format!("unknown mode {other:?}"))),
        };
        let nums = row[1..]
            .iter()
            .map(|s| fixtures::parse_u64("cycles", s))
            .collect::<CliResult<Vec<u64>>>()?;
        let (lanes, macs, n, bins, want) = (
            nums[0] as usize,
            nums[1] as usize,
            nums[2] as usize,
            nums[3] as usize,
            nums[4],
        );
        let sim = SimConfig {
            n_lanes: lanes,
            n_shared_mac: macs,
            bins,
            trace: false,
        };
        let word = WordSpec::new(16).expect("valid width");
        let streams = LaneStream::new(fixtures::random_streams(lanes, n, bins, word, 7))?;
        let weights = fixtures::random_weights(bins, word, 7);
        let report = match mode {
            SimMode::WsMac => sim_ws_mac_array(&streams, &weights, &sim)?,
            SimMode::Pasm => sim_pasm_array(&streams, &weights, &sim)?,
        };
        let verdict = verify_sim_vs_analytic(&report, &streams, &weights);
        checks.check(
            &format!("cycles/{}-{lanes}x{macs}-n{n}-b{bins}", row[0]),
            report.total_cycles == want && verdict.passed(),
            format!("{} (want {want})", report.total_cycles),
        )?;
    }

    let k = GateConstants::default();
    for row in &gates {
        let kind: AcceleratorKind = row[0].parse().map_err(|e| CliError::field("gates", e))?;
        let nums = row[1..]
            .iter()
            .map(|s| fixtures::parse_u64("gates", s))
            .collect::<CliResult<Vec<u64>>>()?;
        let spec = AcceleratorSpec {
            kind,
            w: nums[0],
            b: nums[1],
            n_units: nums[2],
            n_shared_mac: nums[3],
        };
        spec.validate().map_err(|e| CliError::field("gates", e))?;
        let got = gates_accelerator(&spec, &k).total;
        checks.check(
            &format!("gates/{kind}-w{}-b{}", spec.w, spec.b),
            got == nums[4],
            format!("{got} (want {})", nums[4]),
        )?;
    }

    let (passed, failed) = (checks.passed, checks.failed);
    writeln!(checks.out, "selftest: {passed} passed, {failed} failed")?;
    if failed > 0 {
        return Err(CliError::Verification(format!(
            "{failed} selftest checks failed"
        )));
    }
    Ok(())
}

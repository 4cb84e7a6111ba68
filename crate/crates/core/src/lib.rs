//! Weight-shared convolution with parallel accumulate (PAS) units.
//!
//! The crate holds the integer tensor model, the k-means weight quantizer,
//! three equivalent convolution schedules, an analytic gate and latency
//! model, and a cycle-level simulator of MAC and PAS arrays.

pub mod conv;
pub mod cost;
pub mod error;
pub mod quantize;
pub mod sim;
pub mod tensor;

pub use conv::{
    apply_bias_relu, conv_pasm, conv_reference, conv_weight_shared, first_mismatch, output_dims,
    pas_accumulate, postpass_multiply, Backend, BinAccumulators, ConvConfig, ConvResult,
};
pub use cost::{
    gates_accelerator, gates_pas, gates_simple_mac, gates_ws_mac, latency_mac, latency_pasm,
    macops_per_output, AcceleratorKind, AcceleratorSpec, GateConstants, LatencyReport, UnitGates,
};
pub use error::{Error, Result};
pub use quantize::{
    decode_kernel, encode_kernel, kmeans_quantize, quantization_sse, EncodedKernel, InitPolicy,
    KMeansOptions, Quantized, WeightDictionary,
};
pub use sim::{
    sim_pasm_array, sim_ws_mac_array, verify_sim_vs_analytic, LaneStream, SimConfig, SimMode,
    SimReport, TraceEvent, Verdict,
};
pub use tensor::{acc_width, wrap_to_word, AccSpec, QTensor, WordSpec};

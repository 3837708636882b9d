//! Client and server state machines for blind injection, blind measurement
//! and their compositions, with ideal oracles and exact validators.

mod backend;
mod behavior;
mod oracle;
mod reduction;
mod session;
mod transcript;
mod view;

pub use backend::{BackendKind, Register};
pub use behavior::{live_wires, split_pre_measurement, uniform_harmful, DeviationPoint, NoiseKind, ServerBehavior};
pub use oracle::{
    distribution_gap, ideal_computation_state, ideal_distribution, ideal_resource_oracle, protocol_distribution,
    IdealOutput, ResourceKind,
};
pub use reduction::{pauli_component, pauli_reduction_check, pauli_rotation, ReductionReport, REDUCTION_TOLERANCE};
pub use session::{
    blind_measurements, blind_state_injection, output_mode, run_mbdqc, run_session, ChannelMode, InjectionChoice,
    InjectionInput, InjectionRun, KeyState, MbdqcClient, MbdqcOutput, OutputMode, ServerSnapshot, SessionOptions,
    SessionRun,
};
pub use transcript::{ClientLog, Direction, ProtocolMessage, SessionTranscript, TranscriptEntry};
pub use view::{client_message_count, server_view, view_distance, ServerView};

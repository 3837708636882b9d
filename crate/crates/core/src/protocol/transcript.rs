//! Message log of one session and the client's private record.

use std::fmt::Write;

use crate::dense::Angle;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    ClientToServer,
    ServerToClient,
}

impl Direction {
    pub fn arrow(self) -> &'static str {
        match self {
            Direction::ClientToServer => "C->S",
            Direction::ServerToClient => "S->C",
        }
    }
}

/// One message on the channel. Quantum payloads name the logical wires they
/// carry; the amplitudes live in the session's shared backend.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ProtocolMessage {
    RegisterPayload { wires: Vec<usize> },
    AncillaPayload { wire: usize },
    OutcomeBit(bool),
    AngleMessage(Angle),
    OutcomeString(Vec<bool>),
    /// Server keeps the register for the next layer.
    KeepRegisters,
    /// Server hands the register back to the client.
    RegisterReturn { wires: Vec<usize> },
}

impl ProtocolMessage {
    pub fn kind(&self) -> &'static str {
        match self {
            ProtocolMessage::RegisterPayload { .. } => "RegisterPayload",
            ProtocolMessage::AncillaPayload { .. } => "AncillaPayload",
            ProtocolMessage::OutcomeBit(_) => "OutcomeBit",
            ProtocolMessage::AngleMessage(_) => "AngleMessage",
            ProtocolMessage::OutcomeString(_) => "OutcomeString",
            ProtocolMessage::KeepRegisters => "KeepRegisters",
            ProtocolMessage::RegisterReturn { .. } => "RegisterReturn",
        }
    }

    /// Qubits the client sends to the server with this message.
    pub fn qubits_to_server(&self) -> usize {
        match self {
            ProtocolMessage::RegisterPayload { wires } => wires.len(),
            ProtocolMessage::AncillaPayload { .. } => 1,
            _ => 0,
        }
    }

    pub fn is_quantum(&self) -> bool {
        matches!(
            self,
            ProtocolMessage::RegisterPayload { .. }
                | ProtocolMessage::AncillaPayload { .. }
                | ProtocolMessage::RegisterReturn { .. }
        )
    }

    pub fn digest(&self) -> String {
        let wires = |w: &[usize]| w.iter().map(|q| (q + 1).to_string()).collect::<Vec<_>>().join(",");
        let bits = |b: &[bool]| b.iter().map(|&x| if x { '1' } else { '0' }).collect::<String>();
        match self {
            ProtocolMessage::RegisterPayload { wires: w } | ProtocolMessage::RegisterReturn { wires: w } => {
                format!("wires={}", wires(w))
            }
            ProtocolMessage::AncillaPayload { wire } => format!("wire={}", wire + 1),
            ProtocolMessage::OutcomeBit(b) => format!("b={}", *b as u8),
            ProtocolMessage::AngleMessage(d) => format!("delta={}", d.quarter_turns()),
            ProtocolMessage::OutcomeString(x) => format!("x={}", bits(x)),
            ProtocolMessage::KeepRegisters => "-".to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TranscriptEntry {
    pub step: usize,
    /// Layer index, 1-based.
    pub layer: usize,
    pub direction: Direction,
    pub message: ProtocolMessage,
}

/// Keys and secrets the client holds; never shown to the server.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ClientLog {
    /// Pad on all `n + t` wires after each layer's key update.
    pub keys_per_layer: Vec<(Vec<bool>, Vec<bool>)>,
    pub theta: Vec<Angle>,
    pub deltas: Vec<Angle>,
    pub b_prime: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SessionTranscript {
    pub entries: Vec<TranscriptEntry>,
    pub client_log: ClientLog,
}

impl SessionTranscript {
    pub(crate) fn push(&mut self, layer: usize, direction: Direction, message: ProtocolMessage) {
        let step = self.entries.len() + 1;
        self.entries.push(TranscriptEntry { step, layer, direction, message });
    }

    /// Qubits sent from client to server over the whole session.
    pub fn qubits_sent_to_server(&self) -> usize {
        self.entries
            .iter()
            .filter(|e| e.direction == Direction::ClientToServer)
            .map(|e| e.message.qubits_to_server())
            .sum()
    }

    /// Number of client-to-server quantum payload messages.
    pub fn quantum_payloads(&self) -> usize {
        self.entries
            .iter()
            .filter(|e| e.direction == Direction::ClientToServer && e.message.qubits_to_server() > 0)
            .count()
    }

    pub fn client_messages(&self) -> usize {
        self.entries.iter().filter(|e| e.direction == Direction::ClientToServer).count()
    }

    /// Each layer's angle follows that layer's outcome bit.
    pub fn check_angle_causality(&self) -> Result<()> {
        for (idx, e) in self.entries.iter().enumerate() {
            if let ProtocolMessage::AngleMessage(_) = e.message {
                let seen = self.entries[..idx].iter().any(|p| {
                    p.layer == e.layer
                        && p.direction == Direction::ServerToClient
                        && matches!(p.message, ProtocolMessage::OutcomeBit(_))
                });
                if !seen {
                    return Err(Error::Contract(format!(
                        "angle for layer {} sent before its outcome bit (step {})",
                        e.layer, e.step
                    )));
                }
            }
        }
        Ok(())
    }

    /// Line-oriented dump: `step direction kind digest`.
    pub fn dump(&self) -> String {
        let mut s = String::new();
        for e in &self.entries {
            let _ = writeln!(s, "{} {} {} {}", e.step, e.direction.arrow(), e.message.kind(), e.message.digest());
        }
        s
    }
}

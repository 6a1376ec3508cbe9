use std::fmt;

use serde::{Deserialize, Serialize};

use crate::codec::{CodecError, Decode, Decoder, Encode, Encoder};

/// Simulated time in milliseconds.
pub type Ticks = u64;

pub const TICKS_PER_SECOND: Ticks = 1_000;

/// Identifier of any participant: device, hospital, storage node, patient, doctor.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(String);

impl NodeId {
    pub fn new(id: impl Into<String>) -> Self {
        NodeId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

impl From<&str> for NodeId {
    fn from(s: &str) -> Self {
        NodeId(s.to_owned())
    }
}

impl From<String> for NodeId {
    fn from(s: String) -> Self {
        NodeId(s)
    }
}

impl AsRef<str> for NodeId {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

impl Encode for NodeId {
    fn encode(&self, enc: &mut Encoder) {
        enc.str(&self.0);
    }
}

impl Decode for NodeId {
    fn decode(dec: &mut Decoder<'_>) -> Result<Self, CodecError> {
        dec.string().map(NodeId)
    }
}

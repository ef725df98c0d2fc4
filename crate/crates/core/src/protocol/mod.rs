//! Entanglement-assisted discrimination protocols.

pub mod builtin;
pub mod leaf;
pub mod register;
pub mod resources;
pub mod run;
pub mod tree;

pub use builtin::{builtin_tree, BuiltinTheorem};
pub use leaf::{leaf_distinguishable, product_states_distinguishable, LeafCertificate, Strategy};
pub use register::{ExtendedState, Layout, Register};
pub use resources::{rationalize, LogSum, ResourceConfig, ResourceEntry, Q};
pub use run::{ebit_accounting, run_protocol, EbitAccount, ProtocolResult, Transcript};
pub use tree::{Block, Element, Node, NodeKind, ProtocolTree, ResourceEvent, TreeCheck};

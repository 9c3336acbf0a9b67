//! Post-signal diagnosis: functional maps to the reference shape, color
//! transport, TFCE permutation testing and threshold localization.

pub mod fmap;
pub mod localize;
pub mod pipeline;
pub mod test;
pub mod tfce;

pub use fmap::{estimate_functional_map, transport_texture, FunctionalMap, TransportedTexture};
pub use localize::{iou, threshold_localize};
pub use pipeline::DiagnosticReference;
pub use test::{pointwise_test, DiagnosticReport, Verdict};
pub use tfce::tfce_enhance;

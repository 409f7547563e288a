//! Windows in frequency space.

pub mod bundle;
pub mod compose;
pub mod eta;
pub mod phi;
pub mod weight;

pub use bundle::{WindowBundle, WindowConfig, WindowMetadata};
pub use compose::{
    compose_psi, ConstantWindow, EnvelopeWindow, FourierWindow, IndicatorWindow, ProductWindow, TiledWindow,
};
pub use eta::{EtaCertificate, EtaProfile, EtaTable};
pub use phi::{PhiProfile, TruncationCertificate};
pub use weight::{WeightKind, WeightSpec};

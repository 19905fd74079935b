//! Anonymization of GPS mobility traces by speed smoothing, with a
//! Geo-Indistinguishability baseline, a POI-extraction attack and
//! privacy/utility metrics.

pub mod attack;
pub mod error;
pub mod geo;
pub mod geoind;
pub mod io;
pub mod lambert;
pub mod metrics;
pub mod model;
pub mod preprocess;
pub mod promesse;
pub mod rng;
pub mod synth;

pub use attack::{extract_all_pois, extract_pois, AttackConfig, Poi, PoiMap};
pub use error::{ConfigError, GeoError, IoError, MetricsError, TraceError};
pub use geo::{distance, LocalPlane, Location, PlanarPoint};
pub use geoind::{geoind, GeoIndConfig};
pub use model::{Dataset, Fix, Record, Timestamp, Trace, UserId};
pub use preprocess::{preprocess, PreprocessConfig};
pub use promesse::{promesse, smooth_speed, PromesseConfig};
pub use synth::{generate_synthetic, SyntheticSpec};

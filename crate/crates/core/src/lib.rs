//! Geographic k-anonymity by Voronoi aggregation.
//!
//! A fine-grained initial regionalization (points with populations) is
//! coarsened by placing sites with a balanced-density row/cell procedure and
//! merging every initial region into the region of its nearest site.
//! Equivalence classes over the quasi-identifiers are merged per aggregated
//! region and classes smaller than `k` are suppressed, so the released data
//! is k-anonymous by construction.
//!
//! ```
//! use geoanon::prelude::*;
//!
//! let schema = QuasiIdentifierSchema::new(vec![Attribute::new("sex", ["f", "m"])]).unwrap();
//! let regions = vec![
//!     InitialRegion::new("a", Point2D::new(0.0, 0.0), 0),
//!     InitialRegion::new("b", Point2D::new(1.0, 0.0), 0),
//! ];
//! let records = vec![
//!     Record::new("p1", "a", vec![0]),
//!     Record::new("p2", "b", vec![0]),
//!     Record::new("p3", "b", vec![1]),
//! ];
//! let result = anonymize(&regions, &records, &schema, &AnonymizationConfig::new(2).with_sites(1)).unwrap();
//! assert_eq!(result.suppressed_record_ids, vec!["p3".to_string()]);
//! assert!(result.is_k_anonymous());
//! ```

pub mod aggregation;
pub mod baseline;
pub mod error;
pub mod ingest;
pub mod metrics;
pub mod model;
pub mod placement;
pub mod scenarios;
pub mod spatial;

pub use error::{Error, Result};

pub mod prelude {
    pub use crate::aggregation::{anonymize, anonymize_with_sites, AggregatedRegion, AnonymizationResult};
    pub use crate::error::{Error, Result};
    pub use crate::metrics::{MetricsReport, PhaseTimings};
    pub use crate::model::{
        compute_equivalence_classes, AnonymizationConfig, Attribute, CoordinateSource, EquivalenceClass,
        EquivalenceClassKey, InitialRegion, Point2D, QuasiIdentifierSchema, Record,
    };
    pub use crate::placement::{place_sites, Site};
}

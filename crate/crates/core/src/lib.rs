//! Natural-language service composition: match free-text requests to service
//! method descriptions by sentence embedding, bind arguments from entities
//! and working memory, chain methods through rules, pick concrete services by
//! QoS and execute the plan.

pub mod composition;
pub mod embedding;
pub mod entities;
pub mod matching;
pub mod metrics;
pub mod registry;
pub mod value;

pub use value::TypedValue;

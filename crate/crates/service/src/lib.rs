//! The HTTP term-suggestion service: API-keyed repository management, job
//! control, and ranked suggestions served from immutable published
//! snapshots.

pub mod auth;
pub mod http;
pub mod ratelimit;
pub mod server;
pub mod wire;

pub use auth::{ApiKeyRecord, AuthError, IssuedKey, KeyStore};
pub use http::{router, AppState};
pub use ratelimit::RateLimiter;
pub use server::{run_blocking, ServerHandle};

//! Test-only support: an independent brute-force ranking oracle, seeded
//! corpus generators, and the four-document fixture shared across test
//! suites. Nothing here is part of the shipped product; production crates
//! must never depend on it outside `dev-dependencies`.

pub mod corpus;
pub mod fixture;
pub mod oracle;

pub mod auth;
pub mod client;
pub mod crs;
pub mod field;
pub mod harness;
pub mod server;
pub mod store;

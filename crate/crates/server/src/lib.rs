//! Storage, file formats, the HTTP/WebSocket service and the simulator
//! behind the durian game.

pub mod config;
pub mod formats;
pub mod gate;
pub mod service;
pub mod sim;
pub mod stats;
pub mod store;

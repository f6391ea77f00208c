//! On-disk and on-wire document formats.

pub mod landmarks;
pub mod questions;
pub mod roads;
pub mod trace;

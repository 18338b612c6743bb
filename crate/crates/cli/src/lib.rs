//! Command-line driver and HTTP service around `structseg`.

pub mod commands;
pub mod rle;
pub mod service;
pub mod workspace;

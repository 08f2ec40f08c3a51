//! Abbreviated-action stability analysis of periodic traveling waves.

pub mod linalg;
pub mod models;
pub mod profile;
pub mod action;
pub mod stability;
pub mod evans;
pub mod modulation;
pub mod config;
pub mod sweep;
pub mod cases;
pub mod output;
pub mod validate;

#![no_std]
extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod beamforming;
pub mod config;
pub mod engine;
pub mod error;
pub mod fft;
pub mod fusion;
pub mod geometry;
pub mod linalg;
pub mod ofdm;
pub mod rng;
pub mod scenario;
pub mod sweep;

//! Hybrid precoding for millimeter-wave MIMO transceivers whose analog stage is
//! built from a small bank of variable phase shifters feeding a switch network.
//!
//! The analog precoder factors as `F_RF = S_t * P_t`, where `S_t` is a binary
//! switch matrix and `P_t` a generalized block-diagonal phase matrix holding
//! `N_c` quantized phase shifters per RF chain. Three designs are provided:
//!
//! * [`vps_hpd`] alternates a least-squares digital update with per-RF-chain
//!   phase (manifold descent) and switch (exhaustive search) updates.
//! * [`vps_lc_hpd`] minimizes a surrogate objective with three closed-form
//!   stages: a semi-unitary digital factor, the phase matrix, and a joint
//!   switch-matrix/scale fit.
//! * [`gc_vps`] splits the array into groups and solves each independently with
//!   either of the above.
//!
//! [`channel`] generates clustered mmWave channels and the fully digital
//! targets, and [`metrics`] evaluates spectral efficiency, hardware counts and
//! power.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod config;
pub mod error;
pub mod gc_vps;
pub mod linalg;
pub mod metrics;
pub mod precoder;
pub mod vps_hpd;
pub mod vps_lc_hpd;

pub use channel::{
    generate_channel, optimal_precoder_combiner, steering_vector, ChannelParams,
    ChannelRealization, DigitalTarget,
};
pub use config::{AnalogLayout, SystemConfig};
pub use error::{PrecodingError, Result};
pub use gc_vps::{gc_vps, gc_vps_unnormalized, partition_target, BaseSolver, GroupPlan};
pub use linalg::{CMatrix, CVector};
pub use precoder::{
    assemble_analog, normalize_digital, quantize_phase, residual, HybridPrecoder, PhaseMatrix,
    PhaseSet, Solution, SolverOptions, SwitchMatrix,
};
pub use metrics::{
    energy_efficiency, hardware_counts, spectral_efficiency, total_hw_power, Architecture,
    HardwareCounts, PowerModel, Sides,
};
pub use vps_hpd::{vps_hpd, vps_hpd_unnormalized};
pub use vps_lc_hpd::{vps_lc_hpd, vps_lc_hpd_unnormalized};



//! Feedback capacity of NOST finite-state channels.
//!
//! A NOST channel has an output law `Q(y|x,s')` and a state that evolves from
//! the output alone, `Q(s|y)`. With output feedback its capacity is the
//! maximum of `I(X;Y|Y')` over stationary joints `P(y',x)`; with causal state
//! information at the encoder the input letter is replaced by a Shannon
//! strategy `u: S → X`. Both problems are concave programs over a polytope
//! and are solved here by a conditional-gradient method.
//!
//! ```
//! use nostcap::{make_noisy_post, solve_cfb, SolverConfig};
//!
//! let channel = make_noisy_post(0.5, 0.0).unwrap();
//! let result = solve_cfb(&channel, &SolverConfig::default()).unwrap();
//! assert!((result.value_bits - 0.321928).abs() < 1e-5);
//! ```

pub mod channel;
pub mod error;
pub mod format;
pub mod lp;
pub mod markov;
pub mod simulator;
pub mod solver;

pub use channel::{
    average_channel, build_strategy_channel, check_connectivity, enumerate_strategies,
    make_iid_state_channel, make_noisy_post, validate_channel, Alphabets, AveragedChannel,
    ChannelTables, Connectivity, NostChannel, Strategy, StrategySet, ValidationReport,
    Violation,
};
pub use error::{Error, Result};
pub use markov::{
    conditional_mutual_information, induced_output_kernel, joint_from_policy, policy_from_joint,
    stationarity_residual, stationary_distribution, JointDist, OutputKernel, Policy,
    StationaryDist,
};
pub use simulator::{simulate_policy, SimConfig, SimPolicy, SimReport};
pub use solver::{
    binary_entropy, cardinality_bound, csi_gain_certificate, grid_oracle, maximize_information,
    noisy_post_objective, solve_cfb, solve_cfb_csi, solve_cfb_csi_with_strategies,
    CapacityResult, CertificateStatus, CsiCertificate, Setting, SolverConfig,
};

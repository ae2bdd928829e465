//! Time integration of networks.

mod dopri;
mod forward;
mod input;

pub use dopri::{integrate_dense, DenseTrajectory, IntegrationError, SolverConfig};
pub use forward::{
    forward_pass_stepped, forward_pass_whole, neuron_dynamics, DynnSimulation, ForwardConfig, NeuronField, NeuronNfe,
    NfeReport,
};
pub use input::{derive_input_signal, Analytic, InputSignal, Interpolation, Sampled, ScalarDrive, Side};

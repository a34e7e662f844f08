//! Association, effective gains, achievable rates and energy efficiency.

mod association;
mod power;
mod rate;
mod tensor;

pub use association::{associate, Association, AssociationMode};
pub use power::{
    circuit_power, downlink_consumption, gee, gee_uplink, CircuitModel, PowerAllocation,
};
pub use rate::{
    downlink_gains, downlink_logdets, downlink_rate, downlink_rate_direct, downlink_rates,
    uplink_rate, uplink_rates,
};
pub use tensor::{gain_tensor, GainTensor};

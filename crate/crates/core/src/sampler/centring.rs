//! Hierarchical centring of the metric effects.
//!
//! In the centred parameterization each metric's location
//! `γ_j = θ_s(j) + β_j` is sampled directly, so `ν_ij = H_i + γ_j`, and the
//! group effect becomes the mean of the negative-group locations. The
//! positive group effect is zero in both parameterizations.

use crate::model::{ParameterState, N_METRICS, N_POSITIVE};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CentringDirection {
    /// `metric_effects` hold `β` on input and `γ` on output.
    Centre,
    /// `metric_effects` hold `γ` on input and `β` on output.
    Uncentre,
}

/// Moves `state.metric_effects` between the `β` and `γ` parameterizations.
/// All other fields are untouched.
pub fn hierarchical_centring_transform(state: &ParameterState, direction: CentringDirection) -> ParameterState {
    let mut out = state.clone();
    let theta = state.group_effect;
    for j in N_POSITIVE..N_METRICS {
        out.metric_effects[j] = match direction {
            CentringDirection::Centre => state.metric_effects[j] + theta,
            CentringDirection::Uncentre => state.metric_effects[j] - theta,
        };
    }
    out
}

/// Metric locations `γ` of a state stored in the `β` parameterization.
pub fn metric_locations(state: &ParameterState) -> [f64; N_METRICS] {
    std::array::from_fn(|j| if j < N_POSITIVE { state.metric_effects[j] } else { state.metric_effects[j] + state.group_effect })
}

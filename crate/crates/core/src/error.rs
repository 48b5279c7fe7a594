use thiserror::Error;

/// Failures raised by the device models and searches.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    /// An argument is outside the domain of the model equation.
    #[error("{quantity} = {value} is outside the model domain ({reason})")]
    Domain {
        quantity: &'static str,
        value: f64,
        reason: &'static str,
    },

    /// A parameter set violates one of its invariants.
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParam { field: String, reason: String },

    /// The requested PV output power cannot be produced within the irradiance bracket.
    #[error("desired power {desired_w} W is unreachable; maximum within bracket is {achievable_w} W at {bracket_max_w_per_cm2} W/cm^2")]
    UnreachablePower {
        desired_w: f64,
        achievable_w: f64,
        bracket_max_w_per_cm2: f64,
    },
}

impl ModelError {
    pub(crate) fn domain(quantity: &'static str, value: f64, reason: &'static str) -> Self {
        ModelError::Domain {
            quantity,
            value,
            reason,
        }
    }

    pub(crate) fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        ModelError::InvalidParam {
            field: field.into(),
            reason: reason.into(),
        }
    }
}

pub type Result<T, E = ModelError> = std::result::Result<T, E>;

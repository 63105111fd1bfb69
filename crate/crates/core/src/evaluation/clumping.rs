use crate::error::{Error, Result};

/// Effective LAI from actual LAI and the clumping index Ω.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EffectiveLai {
    pub value: f64,
    /// Set when Ω > 1, which only very regular leaf arrangements produce.
    pub omega_above_one: bool,
}

/// `LAI_eff = Ω · LAI`.
pub fn effective_lai(actual_lai: f64, omega: f64) -> Result<EffectiveLai> {
    if !actual_lai.is_finite() || actual_lai < 0.0 {
        return Err(Error::usage(format!(
            "actual LAI must be finite and >= 0, got {actual_lai}"
        )));
    }
    if !omega.is_finite() || omega <= 0.0 {
        return Err(Error::usage(format!(
            "clumping index must be positive, got {omega}"
        )));
    }
    let omega_above_one = omega > 1.0;
    if omega_above_one {
        log::warn!("clumping index {omega} > 1 (regularly spaced foliage)");
    }
    Ok(EffectiveLai {
        value: omega * actual_lai,
        omega_above_one,
    })
}

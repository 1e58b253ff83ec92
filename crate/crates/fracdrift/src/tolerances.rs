//! Pinned pass/fail thresholds of the verification batteries.

/// Relative increase allowed for `||theta||_p` between checkpoints and between steps.
pub const MAX_PRINCIPLE_SLACK: f64 = 1e-6;
/// Drift-off single-mode run against `exp(-a(k) t)`, absolute on the samples.
pub const SINGLE_MODE_DECAY: f64 = 1e-8;
/// Relative error of the `p = 4` dissipation balance on the full SQG run.
pub const BALANCE_P4: f64 = 1e-3;
/// Fitted Besov-energy constant: allowed ratio between resolutions and between `dt` and `dt/2`.
pub const BESOV_ENERGY_STABILITY: f64 = 2.0;
/// Validation ratios may exceed the calibrated constant by at most this factor.
pub const FIT_HEADROOM: f64 = 2.0;
/// Fitted lemma constants may change by less than this factor under refinement.
pub const REFINEMENT_STABILITY: f64 = 2.0;
/// `max_s |B(s) - B(0)| / |B(0)|` on the pinned SQG scenario.
pub const TRANSFER_DRIFT: f64 = 1e-3;
/// Minimum reduction of the bracket drift when `dt` is halved.
pub const TRANSFER_ORDER_FACTOR: f64 = 2.0;
/// Linearity of the dual flow, absolute on the samples.
pub const DUAL_LINEARITY: f64 = 1e-8;
/// Relative change of the `C^0.1` seminorm of `theta(T0)` between N = 64 and N = 128.
pub const HOLDER_SMOOTHED_CHANGE: f64 = 0.25;
/// Minimum growth of the same functional on the rough initial data.
pub const HOLDER_ROUGH_GROWTH: f64 = 1.5;
/// Equivalence window between the double-integral and dyadic-block Besov estimators.
pub const BESOV_ESTIMATOR_WINDOW: (f64, f64) = (0.125, 8.0);

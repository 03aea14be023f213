//! Every pass/fail slack used by the checks, in one place.

/// Allowed excess of the fitted `log ||T||_{p->p}` slope over `1/2`.
pub const GROWTH_P_SLACK: f64 = 0.15;
/// Allowed excess of the fitted slope in `||w||_{A_p}` over the predicted exponent.
pub const GROWTH_AP_SLACK: f64 = 0.2;
/// Relative window for the log-time spectral identity.
pub const IDENTITY_WINDOW: f64 = 0.02;
/// Relative window for single-mode spectral identities.
pub const SINGLE_MODE_WINDOW: f64 = 0.005;
/// Relative window for `||s f|| / ||f|| = sqrt(v_n) kappa` (area integrals).
pub const AREA_PLANCHEREL_WINDOW: f64 = 0.05;
/// Relative window for `||g f|| / ||f|| = kappa` (g-functions).
pub const G_PLANCHEREL_WINDOW: f64 = 0.02;
/// Largest factor by which a sup ratio may move under grid refinement.
pub const RATIO_STABILITY_FACTOR: f64 = 2.0;
/// Largest change of a fitted exponent under grid refinement.
pub const EXPONENT_STABILITY: f64 = 0.1;
/// Largest relative spread `max/min - 1` of fitted kernel constants.
pub const KERNEL_CONSTANT_SPREAD: f64 = 0.2;
/// Relative mass a compactly supported kernel may leave outside `t + 4h`.
pub const SUPPORT_LEAK: f64 = 1e-6;
/// Halo, in grid cells, allowed around kernel supports.
pub const SUPPORT_HALO_CELLS: f64 = 4.0;
/// Relative threshold below which `g*` points are excluded from domination ratios.
pub const DOMINATION_FLOOR: f64 = 1e-14;
/// Largest fraction of excluded points before a domination check is inconclusive.
pub const DOMINATION_EXCLUSION: f64 = 0.01;
/// Relative kernel level above which the Gaussian exponent is fitted.
pub const KERNEL_FIT_FLOOR: f64 = 1e-12;
/// Stability of the `|h| <= C lambda` constant under grid refinement.
pub const CZ_CONSTANT_STABILITY: f64 = 0.25;
/// Spectral energy a band-limited family may leave outside its band.
pub const BAND_LEAK: f64 = 1e-10;
/// Minimal span `max/min` of A_p constants in a growth fit.
pub const AP_SPAN: f64 = 10.0;

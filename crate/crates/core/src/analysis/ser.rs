//! Symbol error rate of square QAM under Gaussian interference-plus-noise.

/// Gaussian tail probability `Q(x) = erfc(x / sqrt(2)) / 2`.
pub fn q_function(x: f64) -> f64 {
    0.5 * libm::erfc(x / std::f64::consts::SQRT_2)
}

/// SER of square `mc`-QAM at linear SINR `sinr`:
/// `1 - (1 - 2 (1 - 1/sqrt(mc)) Q(sqrt(3 sinr / (mc - 1))))^2`.
///
/// `sinr = inf` gives 0; `mc` must be a perfect square of at least 4.
pub fn analytic_ser_qam(sinr: f64, mc: usize) -> f64 {
    debug_assert!(sinr >= 0.0, "negative SINR {sinr}");
    let root = (mc as f64).sqrt();
    debug_assert!(mc >= 4 && (root.round() * root.round()) as usize == mc);
    if sinr.is_infinite() {
        return 0.0;
    }
    let p_axis = 2.0 * (root - 1.0) / root * q_function((3.0 * sinr.max(0.0) / (mc as f64 - 1.0)).sqrt());
    let ser = 1.0 - (1.0 - p_axis) * (1.0 - p_axis);
    ser.clamp(0.0, 1.0)
}

//! Text formatting shared by every CSV writer.

/// 17 significant digits, enough for a lossless `f64` round trip.
pub fn fmt_real(x: f64) -> String {
    format!("{x:.16e}")
}

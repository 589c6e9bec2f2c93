//! Fixed-point display helpers used by the statistics and report tables.

/// Format with two decimals, rounding ties to even. Aggregation always
/// happens in full precision; this is applied only at display time.
///
/// Ties are judged on the decimal value the float is meant to carry, so
/// `0.145` (stored as 0.14499999...) is treated as the tie it reads as.
pub fn fixed2(value: f64) -> String {
    let scaled = value * 100.0;
    let floor = scaled.floor();
    let frac = scaled - floor;
    let cents = if (frac - 0.5).abs() < 1e-9 {
        if floor % 2.0 == 0.0 {
            floor
        } else {
            floor + 1.0
        }
    } else {
        scaled.round()
    };
    let rounded = cents / 100.0;
    let text = format!("{rounded:.2}");
    if text == "-0.00" {
        "0.00".to_string()
    } else {
        text
    }
}

/// `"m.mm ± s.ss"` as printed in the score tables.
pub fn mean_pm_std(mean: f64, std: f64) -> String {
    format!("{} ± {}", fixed2(mean), fixed2(std))
}

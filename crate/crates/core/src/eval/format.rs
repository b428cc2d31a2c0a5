/// Rate in `[0, 1]` as a percentage with two decimals, e.g. `93.33%`.
pub fn pct2(rate: f64) -> String {
    format!("{:.2}%", rate * 100.0)
}

/// Rate as a percentage with one decimal and no sign, e.g. `5.6`.
pub fn pct1(rate: f64) -> String {
    format!("{:.1}", rate * 100.0)
}

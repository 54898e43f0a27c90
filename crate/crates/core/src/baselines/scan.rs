//! Boustrophedon sweep of the arena.

/// Row ordinates: `min(2rk, D)` for `k = 0..=ceil(D / 2r)`.
pub fn scan_rows(side: f64, radius: f64) -> Vec<f64> {
    let spacing = 2.0 * radius;
    let count = (side / spacing).ceil() as usize + 1;
    (0..count).map(|k| (k as f64 * spacing).min(side)).collect()
}

/// Corner points of the sweep, starting at the origin and alternating
/// direction on every row. Repeated rows (when the last two coincide at `D`)
/// are dropped.
pub fn scan_corners(side: f64, radius: f64) -> Vec<[f64; 2]> {
    let mut rows = scan_rows(side, radius);
    rows.dedup();
    let mut corners = Vec::with_capacity(2 * rows.len());
    for (k, &y) in rows.iter().enumerate() {
        if k % 2 == 0 {
            corners.push([0.0, y]);
            corners.push([side, y]);
        } else {
            corners.push([side, y]);
            corners.push([0.0, y]);
        }
    }
    corners
}

/// Full sweep length: one traverse per row plus the climbs between rows.
pub fn scan_sweep_length(side: f64, radius: f64) -> f64 {
    super::rrt::path_length(&scan_corners(side, radius))
}

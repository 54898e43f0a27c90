//! Visiting orders over GU communication disks.
//!
//! Reaching a GU means touching its disk; the cost of a leg is the distance
//! from the current point to the first point of the next disk along the
//! straight line towards its centre, and the tour continues from there.

pub(crate) fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// First point of the disk `(center, radius)` on the segment from `from`
/// to `center`; `from` itself when already inside.
pub fn disk_entry(from: [f64; 2], center: [f64; 2], radius: f64) -> [f64; 2] {
    let d = dist(from, center);
    if d <= radius {
        return from;
    }
    let t = (d - radius) / d;
    [
        from[0] + t * (center[0] - from[0]),
        from[1] + t * (center[1] - from[1]),
    ]
}

/// Length of an open tour from `start` visiting the disks in `order`.
pub fn tour_length(start: [f64; 2], gus: &[[f64; 2]], order: &[usize], radius: f64) -> f64 {
    let mut at = start;
    let mut total = 0.0;
    for &i in order {
        let next = disk_entry(at, gus[i], radius);
        total += dist(at, next);
        at = next;
    }
    total
}

/// Nearest-neighbour order: repeatedly the unvisited GU whose centre is
/// closest to the current point (lower index on ties), continuing from its
/// disk entry point.
pub fn greedy_order(gus: &[[f64; 2]], start: [f64; 2], radius: f64) -> Vec<usize> {
    let mut remaining: Vec<usize> = (0..gus.len()).collect();
    let mut order = Vec::with_capacity(gus.len());
    let mut at = start;
    while !remaining.is_empty() {
        let (pos, _) = remaining
            .iter()
            .enumerate()
            .map(|(k, &i)| (k, dist(at, gus[i])))
            .fold((0, f64::INFINITY), |best, cur| if cur.1 < best.1 { cur } else { best });
        let i = remaining.remove(pos);
        at = disk_entry(at, gus[i], radius);
        order.push(i);
    }
    order
}

/// Exhaustive search over all permutations. Only sensible for a handful of GUs.
pub fn brute_force_order(gus: &[[f64; 2]], start: [f64; 2], radius: f64) -> (Vec<usize>, f64) {
    fn recurse(
        gus: &[[f64; 2]],
        start: [f64; 2],
        radius: f64,
        prefix: &mut Vec<usize>,
        used: &mut Vec<bool>,
        best: &mut (Vec<usize>, f64),
    ) {
        if prefix.len() == gus.len() {
            let len = tour_length(start, gus, prefix, radius);
            if len < best.1 {
                *best = (prefix.clone(), len);
            }
            return;
        }
        for i in 0..gus.len() {
            if !used[i] {
                used[i] = true;
                prefix.push(i);
                recurse(gus, start, radius, prefix, used, best);
                prefix.pop();
                used[i] = false;
            }
        }
    }
    let mut best = (Vec::new(), f64::INFINITY);
    recurse(gus, start, radius, &mut Vec::new(), &mut vec![false; gus.len()], &mut best);
    best
}

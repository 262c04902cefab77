//! Sweep-line computation of the maximum multiplicity of a family of closed
//! intervals on the line.

/// Returns the largest number of intervals sharing a common point.
///
/// Intervals are treated as closed: at equal coordinates start events sort
/// before end events, so tangent intervals count as intersecting.
pub fn max_closed_overlap(intervals: &[(f64, f64)]) -> usize {
    if intervals.is_empty() {
        return 0;
    }
    // tag 0 = start, 1 = end; sorting by (coord, tag) applies the tie rule.
    let mut events: Vec<(f64, u8)> = Vec::with_capacity(2 * intervals.len());
    for &(a, b) in intervals {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        events.push((lo, 0));
        events.push((hi, 1));
    }
    events.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap().then(x.1.cmp(&y.1)));
    let mut depth = 0usize;
    let mut best = 0usize;
    for (_, tag) in events {
        if tag == 0 {
            depth += 1;
            best = best.max(depth);
        } else {
            depth -= 1;
        }
    }
    best
}

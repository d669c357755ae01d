/// Nodal values below this fraction of the largest magnitude are treated as
/// zero when locating the zero level line.
const SNAP: f64 = 1e-14;

/// Exact integrals of `max(v, 0)` and `max(-v, 0)` for the linear function
/// with the given vertex values on a triangle of the given area.
///
/// With mixed signs the triangle is cut along the zero level line. The piece
/// around the lone vertex of one sign is a triangle with edge fractions
/// `a / (a - b)` and `a / (a - c)`, so its integral is
/// `area * a^3 / (3 (a - b) (a - c))`; the other part follows from the mean.
pub fn pos_neg_part_integrals(values: [f64; 3], area: f64) -> (f64, f64) {
    assert!(area > 0.0, "triangle area must be positive, got {area}");
    let scale = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let v = values.map(|x| if x.abs() <= SNAP * scale { 0.0 } else { x });
    let total = area * (v[0] + v[1] + v[2]) / 3.0;

    let positives = v.iter().filter(|&&x| x > 0.0).count();
    let negatives = v.iter().filter(|&&x| x < 0.0).count();
    if negatives == 0 {
        return (total, 0.0);
    }
    if positives == 0 {
        return (0.0, -total);
    }
    if positives == 1 {
        let pos = lone_vertex_integral(v, area);
        (pos, (pos - total).max(0.0))
    } else {
        let neg = lone_vertex_integral(v.map(|x| -x), area);
        ((neg + total).max(0.0), neg)
    }
}

/// Integral of the positive part when exactly one value is positive.
fn lone_vertex_integral(v: [f64; 3], area: f64) -> f64 {
    let k = (0..3).find(|&i| v[i] > 0.0).expect("one positive value");
    let a = v[k];
    let b = v[(k + 1) % 3];
    let c = v[(k + 2) % 3];
    area * a * a * a / (3.0 * (a - b) * (a - c))
}

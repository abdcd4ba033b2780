//! Independent Mamdani evaluator for the level-sum rule base, written from
//! the definitions: triangular memberships, rule strength by min or product,
//! per-term activation by max or bounded sum, clipped consequents joined by
//! max, centroid of the result.

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Ops {
    MinMax,
    ProductBoundedSum,
}

/// (a, b, c) of Low / Medium / High, also Deny / Cautious / Grant.
pub const TRIANGLES: [(f64, f64, f64); 3] = [(0.0, 0.0, 0.5), (0.0, 0.5, 1.0), (0.5, 1.0, 1.0)];

pub fn tri(x: f64, (a, b, c): (f64, f64, f64)) -> f64 {
    if x < a || x > c {
        0.0
    } else if x <= b {
        if b == a {
            1.0
        } else {
            (x - a) / (b - a)
        }
    } else if c == b {
        1.0
    } else {
        (c - x) / (c - b)
    }
}

pub fn activations(r: f64, c: f64, e: f64, ops: Ops) -> [f64; 3] {
    let mut act = [0.0; 3];
    for (i, &ti) in TRIANGLES.iter().enumerate() {
        for (j, &tj) in TRIANGLES.iter().enumerate() {
            for (k, &tk) in TRIANGLES.iter().enumerate() {
                let d = [tri(r, ti), tri(c, tj), tri(e, tk)];
                let out = match i + j + k {
                    0..=2 => 0,
                    3..=4 => 1,
                    _ => 2,
                };
                match ops {
                    Ops::MinMax => act[out] = f64::max(act[out], d[0].min(d[1]).min(d[2])),
                    Ops::ProductBoundedSum => act[out] += d[0] * d[1] * d[2],
                }
            }
        }
    }
    act.map(|a| a.min(1.0))
}

pub fn mu(y: f64, act: &[f64; 3]) -> f64 {
    (0..3)
        .map(|t| act[t].min(tri(y, TRIANGLES[t])))
        .fold(0.0, f64::max)
}

/// Exact centroid: every kink of `mu` lies where two of its constituent
/// lines cross, so `mu` is linear between consecutive crossings and
/// Simpson's rule is exact on each piece.
pub fn centroid_exact(act: &[f64; 3]) -> f64 {
    // Lines as (slope, intercept).
    let mut lines = vec![(0.0, 0.0)];
    for &(a, b, c) in &TRIANGLES {
        if b > a {
            lines.push((1.0 / (b - a), -a / (b - a)));
        }
        if c > b {
            lines.push((-1.0 / (c - b), c / (c - b)));
        }
    }
    for &h in act {
        lines.push((0.0, h));
    }
    let mut xs = vec![0.0, 1.0];
    for &(a, b, c) in &TRIANGLES {
        xs.extend([a, b, c]);
    }
    for (i, &(m1, q1)) in lines.iter().enumerate() {
        for &(m2, q2) in &lines[i + 1..] {
            if m1 != m2 {
                let x = (q2 - q1) / (m1 - m2);
                if (0.0..=1.0).contains(&x) {
                    xs.push(x);
                }
            }
        }
    }
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    let (mut area, mut moment) = (0.0, 0.0);
    for w in xs.windows(2) {
        let (x0, x1) = (w[0], w[1]);
        let xm = 0.5 * (x0 + x1);
        let (f0, fm, f1) = (mu(x0, act), mu(xm, act), mu(x1, act));
        let h = x1 - x0;
        area += h / 6.0 * (f0 + 4.0 * fm + f1);
        moment += h / 6.0 * (x0 * f0 + 4.0 * xm * fm + x1 * f1);
    }
    moment / area
}

/// Composite trapezoid centroid over `intervals` equal steps.
pub fn centroid_grid(act: &[f64; 3], intervals: usize) -> f64 {
    let h = 1.0 / intervals as f64;
    let (mut area, mut moment) = (0.0, 0.0);
    for i in 0..=intervals {
        let y = i as f64 * h;
        let w = if i == 0 || i == intervals { 0.5 } else { 1.0 };
        let m = mu(y, act);
        area += w * m;
        moment += w * y * m;
    }
    moment / area
}

pub fn ds(r: f64, c: f64, e: f64, ops: Ops) -> f64 {
    centroid_exact(&activations(r, c, e, ops))
}

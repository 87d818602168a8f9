//! Derivative-free maximizers used by the protocol search: golden-section
//! line search and a two-dimensional Nelder-Mead simplex. Both are fully
//! deterministic.

/// Golden-section maximization on `[lo, hi]`.
///
/// Assumes the function is unimodal on the bracket; returns the midpoint of
/// the final bracket and its value.
pub fn golden_section_max(mut f: impl FnMut(f64) -> f64, lo: f64, hi: f64, tol: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > tol {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}

/// Nelder-Mead maximization in two dimensions.
///
/// The initial simplex is `start`, `start + (scale.0, 0)`,
/// `start + (0, scale.1)`. Iterates until the spread of simplex values
/// drops below `ftol` or `max_iter` is reached.
pub fn nelder_mead_max_2d(
    mut f: impl FnMut(f64, f64) -> f64,
    start: (f64, f64),
    scale: (f64, f64),
    ftol: f64,
    max_iter: usize,
) -> ((f64, f64), f64) {
    const ALPHA: f64 = 1.0; // reflection
    const GAMMA: f64 = 2.0; // expansion
    const RHO: f64 = 0.5; // contraction
    const SIGMA: f64 = 0.5; // shrink

    let mut pts = [
        start,
        (start.0 + scale.0, start.1),
        (start.0, start.1 + scale.1),
    ];
    let mut vals = [f(pts[0].0, pts[0].1), f(pts[1].0, pts[1].1), f(pts[2].0, pts[2].1)];

    for _ in 0..max_iter {
        // order descending by value (index 0 best)
        let mut order = [0usize, 1, 2];
        order.sort_by(|&i, &j| vals[j].partial_cmp(&vals[i]).expect("NaN objective"));
        let (best, mid, worst) = (order[0], order[1], order[2]);
        if (vals[best] - vals[worst]).abs() < ftol {
            break;
        }
        let centroid = (
            0.5 * (pts[best].0 + pts[mid].0),
            0.5 * (pts[best].1 + pts[mid].1),
        );
        let reflect = (
            centroid.0 + ALPHA * (centroid.0 - pts[worst].0),
            centroid.1 + ALPHA * (centroid.1 - pts[worst].1),
        );
        let fr = f(reflect.0, reflect.1);
        if fr > vals[best] {
            let expand = (
                centroid.0 + GAMMA * (reflect.0 - centroid.0),
                centroid.1 + GAMMA * (reflect.1 - centroid.1),
            );
            let fe = f(expand.0, expand.1);
            if fe > fr {
                pts[worst] = expand;
                vals[worst] = fe;
            } else {
                pts[worst] = reflect;
                vals[worst] = fr;
            }
        } else if fr > vals[mid] {
            pts[worst] = reflect;
            vals[worst] = fr;
        } else {
            let contract = (
                centroid.0 + RHO * (pts[worst].0 - centroid.0),
                centroid.1 + RHO * (pts[worst].1 - centroid.1),
            );
            let fc = f(contract.0, contract.1);
            if fc > vals[worst] {
                pts[worst] = contract;
                vals[worst] = fc;
            } else {
                // shrink toward the best point
                for i in 0..3 {
                    if i == best {
                        continue;
                    }
                    pts[i] = (
                        pts[best].0 + SIGMA * (pts[i].0 - pts[best].0),
                        pts[best].1 + SIGMA * (pts[i].1 - pts[best].1),
                    );
                    vals[i] = f(pts[i].0, pts[i].1);
                }
            }
        }
    }
    let mut best = 0;
    for i in 1..3 {
        if vals[i] > vals[best] {
            best = i;
        }
    }
    (pts[best], vals[best])
}

//! Nelder-Mead downhill simplex minimization.
//!
//! Derivative-free, so objectives may contain hard support constraints
//! expressed as +inf penalties.

/// Outcome of a simplex run.
#[derive(Debug, Clone)]
pub struct SimplexResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Minimizes `f` starting from `start`, with per-coordinate initial steps.
///
/// Converges when the function-value spread across the simplex falls below
/// `tol * (1 + |f_best|)` and the simplex diameter below `tol` in every
/// coordinate.
pub fn nelder_mead<F: Fn(&[f64]) -> f64>(
    f: F,
    start: &[f64],
    step: &[f64],
    max_iter: usize,
    tol: f64,
) -> SimplexResult {
    let n = start.len();
    assert!(n >= 1 && step.len() == n);

    // Initial simplex: start plus one vertex per coordinate.
    let mut verts: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    verts.push(start.to_vec());
    for i in 0..n {
        let mut v = start.to_vec();
        v[i] += if step[i] != 0.0 { step[i] } else { 1e-3 };
        verts.push(v);
    }
    let mut vals: Vec<f64> = verts.iter().map(|v| f(v)).collect();

    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iter {
        iterations += 1;

        // Order ascending by value (NaN sorts last).
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| vals[a].partial_cmp(&vals[b]).unwrap_or(std::cmp::Ordering::Equal));
        let best = order[0];
        let worst = order[n];
        let second_worst = order[n - 1];

        let spread = vals[worst] - vals[best];
        let diam = (0..n)
            .map(|i| {
                verts
                    .iter()
                    .map(|v| v[i])
                    .fold(f64::NEG_INFINITY, f64::max)
                    - verts.iter().map(|v| v[i]).fold(f64::INFINITY, f64::min)
            })
            .fold(0.0f64, f64::max);
        if spread.is_finite() && spread <= tol * (1.0 + vals[best].abs()) && diam <= tol.max(1e-12)
        {
            converged = true;
            break;
        }

        // Centroid of all but the worst vertex.
        let mut centroid = vec![0.0; n];
        for (k, v) in verts.iter().enumerate() {
            if k == worst {
                continue;
            }
            for i in 0..n {
                centroid[i] += v[i] / n as f64;
            }
        }

        let lerp = |a: &[f64], b: &[f64], t: f64| -> Vec<f64> {
            a.iter().zip(b).map(|(&ai, &bi)| ai + t * (bi - ai)).collect()
        };

        // Reflection.
        let reflected = lerp(&centroid, &verts[worst], -1.0);
        let f_r = f(&reflected);
        if f_r < vals[best] {
            // Expansion.
            let expanded = lerp(&centroid, &verts[worst], -2.0);
            let f_e = f(&expanded);
            if f_e < f_r {
                verts[worst] = expanded;
                vals[worst] = f_e;
            } else {
                verts[worst] = reflected;
                vals[worst] = f_r;
            }
            continue;
        }
        if f_r < vals[second_worst] {
            verts[worst] = reflected;
            vals[worst] = f_r;
            continue;
        }

        // Contraction (outside if the reflected point improved on the worst).
        let contracted = if f_r < vals[worst] {
            lerp(&centroid, &reflected, 0.5)
        } else {
            lerp(&centroid, &verts[worst], 0.5)
        };
        let f_c = f(&contracted);
        if f_c < vals[worst].min(f_r) {
            verts[worst] = contracted;
            vals[worst] = f_c;
            continue;
        }

        // Shrink toward the best vertex.
        let best_vert = verts[best].clone();
        for (k, v) in verts.iter_mut().enumerate() {
            if k == best {
                continue;
            }
            *v = lerp(&best_vert, v, 0.5);
            vals[k] = f(v);
        }
    }

    let (mut bi, mut bv) = (0usize, vals[0]);
    for (k, &v) in vals.iter().enumerate() {
        if v < bv {
            bv = v;
            bi = k;
        }
    }
    SimplexResult {
        x: verts[bi].clone(),
        value: bv,
        iterations,
        converged,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimizes_quadratic() {
        let f = |x: &[f64]| (x[0] - 3.0).powi(2) + 2.0 * (x[1] + 1.0).powi(2);
        let r = nelder_mead(f, &[0.0, 0.0], &[0.5, 0.5], 500, 1e-12);
        assert!(r.converged);
        assert!((r.x[0] - 3.0).abs() < 1e-5);
        assert!((r.x[1] + 1.0).abs() < 1e-5);
    }

    #[test]
    fn minimizes_rosenbrock() {
        let f = |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
        let r = nelder_mead(f, &[-1.2, 1.0], &[0.5, 0.5], 2000, 1e-14);
        assert!((r.x[0] - 1.0).abs() < 1e-4, "x = {:?}", r.x);
        assert!((r.x[1] - 1.0).abs() < 1e-4);
    }

    #[test]
    fn handles_infinite_penalty_regions() {
        // Constrained valley: infinite outside x[0] > 0.
        let f = |x: &[f64]| {
            if x[0] <= 0.0 {
                f64::INFINITY
            } else {
                (x[0].ln()).powi(2) + x[1].powi(2)
            }
        };
        let r = nelder_mead(f, &[0.5, 0.8], &[0.2, 0.2], 1000, 1e-12);
        assert!((r.x[0] - 1.0).abs() < 1e-4);
        assert!(r.x[1].abs() < 1e-4);
    }
}

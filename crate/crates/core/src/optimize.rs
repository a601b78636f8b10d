//! Derivative-free maximization: coordinate grid search, then Nelder–Mead.

/// Box constraint for one coordinate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bound {
    pub lo: f64,
    pub hi: f64,
}

impl Bound {
    pub fn new(lo: f64, hi: f64) -> Self {
        assert!(lo < hi, "empty bound [{lo}, {hi}]");
        Self { lo, hi }
    }

    fn clamp(&self, x: f64) -> f64 {
        x.clamp(self.lo, self.hi)
    }
}

#[derive(Debug, Clone)]
pub struct Maximum {
    pub x: Vec<f64>,
    pub value: f64,
    pub evaluations: usize,
}

/// Sweeps each coordinate over `points` values of its current window, keeps
/// the best, and halves the windows after each sweep.
pub fn coordinate_search<F>(f: &F, start: &[f64], bounds: &[Bound], points: usize, sweeps: usize) -> Maximum
where
    F: Fn(&[f64]) -> f64,
{
    let mut x = start.iter().zip(bounds).map(|(v, b)| b.clamp(*v)).collect::<Vec<_>>();
    let mut best = f(&x);
    let mut evaluations = 1;
    let mut widths: Vec<f64> = bounds.iter().map(|b| b.hi - b.lo).collect();
    for _ in 0..sweeps {
        for c in 0..x.len() {
            let lo = bounds[c].clamp(x[c] - 0.5 * widths[c]);
            let hi = bounds[c].clamp(x[c] + 0.5 * widths[c]);
            for k in 0..points {
                let mut trial = x.clone();
                trial[c] = lo + (hi - lo) * k as f64 / (points - 1) as f64;
                let v = f(&trial);
                evaluations += 1;
                if v > best {
                    best = v;
                    x = trial;
                }
            }
        }
        widths.iter_mut().for_each(|w| *w *= 0.5);
    }
    Maximum { x, value: best, evaluations }
}

/// Nelder–Mead on −f with standard coefficients; points are clamped to the box.
pub fn nelder_mead<F>(f: &F, start: &[f64], steps: &[f64], bounds: &[Bound], max_iter: usize, ftol: f64) -> Maximum
where
    F: Fn(&[f64]) -> f64,
{
    let n = start.len();
    let clamp = |v: Vec<f64>| v.into_iter().zip(bounds).map(|(x, b)| b.clamp(x)).collect::<Vec<_>>();
    let cost = |v: &[f64]| {
        let y = f(v);
        if y.is_nan() {
            f64::INFINITY
        } else {
            -y
        }
    };
    let mut simplex: Vec<Vec<f64>> = vec![clamp(start.to_vec())];
    for i in 0..n {
        let mut v = start.to_vec();
        v[i] += steps[i];
        simplex.push(clamp(v));
    }
    let mut vals: Vec<f64> = simplex.iter().map(|v| cost(v)).collect();
    let mut evaluations = n + 1;

    for _ in 0..max_iter {
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        vals = order.iter().map(|&i| vals[i]).collect();
        if (vals[n] - vals[0]).abs() <= ftol * vals[0].abs().max(1e-300) {
            break;
        }
        let centroid: Vec<f64> = (0..n).map(|j| simplex[..n].iter().map(|v| v[j]).sum::<f64>() / n as f64).collect();
        let along = |t: f64| clamp((0..n).map(|j| centroid[j] + t * (simplex[n][j] - centroid[j])).collect());

        let xr = along(-1.0);
        let fr = cost(&xr);
        evaluations += 1;
        if fr < vals[0] {
            let xe = along(-2.0);
            let fe = cost(&xe);
            evaluations += 1;
            if fe < fr {
                simplex[n] = xe;
                vals[n] = fe;
            } else {
                simplex[n] = xr;
                vals[n] = fr;
            }
        } else if fr < vals[n - 1] {
            simplex[n] = xr;
            vals[n] = fr;
        } else {
            let (xc, fc) = if fr < vals[n] {
                let x = along(-0.5);
                let v = cost(&x);
                (x, v)
            } else {
                let x = along(0.5);
                let v = cost(&x);
                (x, v)
            };
            evaluations += 1;
            if fc < vals[n].min(fr) {
                simplex[n] = xc;
                vals[n] = fc;
            } else {
                for i in 1..=n {
                    let v: Vec<f64> = (0..n).map(|j| simplex[0][j] + 0.5 * (simplex[i][j] - simplex[0][j])).collect();
                    simplex[i] = clamp(v);
                    vals[i] = cost(&simplex[i]);
                    evaluations += 1;
                }
            }
        }
    }
    let best = (0..=n).min_by(|&a, &b| vals[a].total_cmp(&vals[b])).unwrap();
    Maximum {
        x: simplex[best].clone(),
        value: -vals[best],
        evaluations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bowl(x: &[f64]) -> f64 {
        -((x[0] - 1.2).powi(2) + 3.0 * (x[1] + 0.7).powi(2) + 0.5 * (x[0] - 1.2) * (x[1] + 0.7))
    }

    #[test]
    fn coordinate_then_simplex_finds_quadratic_peak() {
        let b = [Bound::new(-5.0, 5.0), Bound::new(-5.0, 5.0)];
        let c = coordinate_search(&bowl, &[0.0, 0.0], &b, 11, 4);
        let m = nelder_mead(&bowl, &c.x, &[0.1, 0.1], &b, 500, 1e-14);
        assert!((m.x[0] - 1.2).abs() < 1e-4 && (m.x[1] + 0.7).abs() < 1e-4, "{:?}", m.x);
    }

    #[test]
    fn respects_bounds() {
        let f = |x: &[f64]| x[0];
        let b = [Bound::new(0.0, 2.0)];
        let m = nelder_mead(&f, &[1.0], &[0.3], &b, 200, 1e-12);
        assert!(m.x[0] <= 2.0 && m.value > 1.99);
    }
}

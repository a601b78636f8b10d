//! Dormand–Prince 5(4) with step-size control, stepping exactly onto the
//! requested output times.

use crate::error::{Error, Result};
use crate::operators::{C64, ZERO};

#[derive(Debug, Clone, Copy)]
pub struct Tolerances {
    pub rtol: f64,
    pub atol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { rtol: 1e-9, atol: 1e-9 }
    }
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// Integrates y' = f(t, y) from `t_grid[0]` and returns y at every grid time.
pub fn dopri5<F>(f: F, y0: &[C64], t_grid: &[f64], tol: Tolerances) -> Result<Vec<Vec<C64>>>
where
    F: Fn(f64, &[C64], &mut [C64]),
{
    let n = y0.len();
    let mut out = Vec::with_capacity(t_grid.len());
    out.push(y0.to_vec());
    if t_grid.len() < 2 {
        return Ok(out);
    }

    let mut y = y0.to_vec();
    let mut t = t_grid[0];
    let mut k: Vec<Vec<C64>> = vec![vec![ZERO; n]; 7];
    let mut tmp = vec![ZERO; n];
    let mut ynew = vec![ZERO; n];
    f(t, &y, &mut k[0]);
    let mut h = initial_step(&f, t, &y, &k[0], tol);

    let combo = |y: &[C64], k: &[Vec<C64>], coeffs: &[(usize, f64)], h: f64, out: &mut [C64]| {
        for i in 0..y.len() {
            let mut acc = ZERO;
            for &(s, c) in coeffs {
                acc += k[s][i] * c;
            }
            out[i] = y[i] + acc * h;
        }
    };

    for &t_out in &t_grid[1..] {
        while t < t_out {
            let mut last = false;
            if t + h >= t_out {
                h = t_out - t;
                last = true;
            }
            if h <= 1e-14 * t.abs().max(1.0) {
                return Err(Error::StepFailure { t });
            }

            combo(&y, &k, &[(0, A21)], h, &mut tmp);
            f(t + C2 * h, &tmp, &mut k[1]);
            combo(&y, &k, &[(0, A31), (1, A32)], h, &mut tmp);
            f(t + C3 * h, &tmp, &mut k[2]);
            combo(&y, &k, &[(0, A41), (1, A42), (2, A43)], h, &mut tmp);
            f(t + C4 * h, &tmp, &mut k[3]);
            combo(&y, &k, &[(0, A51), (1, A52), (2, A53), (3, A54)], h, &mut tmp);
            f(t + C5 * h, &tmp, &mut k[4]);
            combo(&y, &k, &[(0, A61), (1, A62), (2, A63), (3, A64), (4, A65)], h, &mut tmp);
            f(t + h, &tmp, &mut k[5]);
            combo(&y, &k, &[(0, B1), (2, B3), (3, B4), (4, B5), (5, B6)], h, &mut ynew);
            f(t + h, &ynew, &mut k[6]);

            let mut err = 0.0;
            for i in 0..n {
                let e = (k[0][i] * E1 + k[2][i] * E3 + k[3][i] * E4 + k[4][i] * E5 + k[5][i] * E6
                    + k[6][i] * E7)
                    * h;
                let sc = tol.atol + tol.rtol * y[i].norm().max(ynew[i].norm());
                err += (e.norm() / sc).powi(2);
            }
            let err = (err / n as f64).sqrt();

            if err <= 1.0 {
                t = if last { t_out } else { t + h };
                std::mem::swap(&mut y, &mut ynew);
                let (first, rest) = k.split_at_mut(1);
                first[0].copy_from_slice(&rest[5]);
                let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
                h *= fac;
            } else {
                h *= (0.9 * err.powf(-0.2)).clamp(0.2, 1.0);
            }
        }
        out.push(y.clone());
    }
    Ok(out)
}

fn initial_step<F>(f: &F, t: f64, y: &[C64], f0: &[C64], tol: Tolerances) -> f64
where
    F: Fn(f64, &[C64], &mut [C64]),
{
    let n = y.len() as f64;
    let sc: Vec<f64> = y.iter().map(|v| tol.atol + tol.rtol * v.norm()).collect();
    let d0 = (y.iter().zip(&sc).map(|(v, s)| (v.norm() / s).powi(2)).sum::<f64>() / n).sqrt();
    let d1 = (f0.iter().zip(&sc).map(|(v, s)| (v.norm() / s).powi(2)).sum::<f64>() / n).sqrt();
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    let y1: Vec<C64> = y.iter().zip(f0).map(|(a, b)| a + b * h0).collect();
    let mut f1 = vec![ZERO; y.len()];
    f(t + h0, &y1, &mut f1);
    let d2 = (f1
        .iter()
        .zip(f0)
        .zip(&sc)
        .map(|((a, b), s)| ((a - b).norm() / s).powi(2))
        .sum::<f64>()
        / n)
        .sqrt()
        / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    (100.0 * h0).min(h1)
}

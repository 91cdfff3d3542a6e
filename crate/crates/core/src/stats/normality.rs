//! Normality diagnostics for per-voxel trial samples: Q-Q pairs and the
//! Shapiro–Wilk test (Royston's AS R94 approximation).

use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct NormalityReport {
    pub w: f64,
    pub p_value: f64,
    pub n: usize,
    /// `(theoretical, empirical)` pairs, ascending.
    pub qq_pairs: Vec<(f64, f64)>,
}

fn std_normal() -> Normal {
    Normal::new(0.0, 1.0).expect("unit normal")
}

/// Blom plotting positions `(i − 3/8) / (n + 1/4)` mapped to normal quantiles.
pub fn blom_scores(n: usize) -> Vec<f64> {
    let z = std_normal();
    (1..=n)
        .map(|i| z.inverse_cdf((i as f64 - 0.375) / (n as f64 + 0.25)))
        .collect()
}

fn sorted_checked(samples: &[f64], max: usize) -> Result<Vec<f64>> {
    let n = samples.len();
    if n < 3 || n > max {
        return Err(Error::SampleSizeOutOfRange(n));
    }
    if let Some(index) = samples.iter().position(|x| !x.is_finite()) {
        return Err(Error::NonFinite { index });
    }
    let mut x = samples.to_vec();
    x.sort_by(f64::total_cmp);
    if x[0] == x[n - 1] {
        return Err(Error::ZeroVariance);
    }
    Ok(x)
}

/// Q-Q pairs against the standard normal.
///
/// The sorted sample is centred on its mean and divided by the least-squares
/// slope of sample on theoretical quantiles, so a sample that already equals
/// its normal scores lands on `y = x` and any affine copy gives the same pairs.
pub fn qq_data(samples: &[f64]) -> Result<Vec<(f64, f64)>> {
    let x = sorted_checked(samples, usize::MAX)?;
    let m = blom_scores(x.len());
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let slope = x.iter().zip(&m).map(|(xi, mi)| (xi - mean) * mi).sum::<f64>()
        / m.iter().map(|mi| mi * mi).sum::<f64>();
    Ok(m.into_iter().zip(x).map(|(mi, xi)| (mi, (xi - mean) / slope)).collect())
}

/// Largest vertical distance of Q-Q pairs from `y = x`.
pub fn qq_max_deviation(pairs: &[(f64, f64)]) -> f64 {
    pairs.iter().map(|(t, e)| (e - t).abs()).fold(0.0, f64::max)
}

/// `c[0] + c[1] x + … + c[len−1] x^{len−1}`.
fn poly(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &ci| acc * x + ci)
}

const C1: [f64; 6] = [0.0, 0.221157, -0.147981, -2.07119, 4.434685, -2.706056];
const C2: [f64; 6] = [0.0, 0.042981, -0.293762, -1.752461, 5.682633, -3.582633];
const C3: [f64; 4] = [0.544, -0.39978, 0.025054, -6.714e-4];
const C4: [f64; 4] = [1.3822, -0.77857, 0.062767, -0.0020322];
const C5: [f64; 4] = [-1.5861, -0.31082, -0.083751, 0.0038915];
const C6: [f64; 3] = [-0.4803, -0.082676, 0.0030302];
const G: [f64; 2] = [-2.273, 0.459];

/// Antisymmetric Shapiro–Wilk weights for a sample of size `n ≥ 3`, ordered
/// to match the ascending sample.
pub fn sw_coefficients(n: usize) -> Vec<f64> {
    let half = n / 2;
    let mut upper = vec![0.0; half];
    if n == 3 {
        upper[0] = std::f64::consts::FRAC_1_SQRT_2;
    } else {
        let m: Vec<f64> = blom_scores(n)[..half].to_vec();
        let summ2 = 2.0 * m.iter().map(|v| v * v).sum::<f64>();
        let ssumm2 = summ2.sqrt();
        let rsn = 1.0 / (n as f64).sqrt();
        let a1 = poly(&C1, rsn) - m[0] / ssumm2;
        let (first, fac) = if n > 5 {
            let a2 = -m[1] / ssumm2 + poly(&C2, rsn);
            upper[1] = a2;
            let fac = ((summ2 - 2.0 * m[0] * m[0] - 2.0 * m[1] * m[1]) / (1.0 - 2.0 * a1 * a1 - 2.0 * a2 * a2)).sqrt();
            (2, fac)
        } else {
            (1, ((summ2 - 2.0 * m[0] * m[0]) / (1.0 - 2.0 * a1 * a1)).sqrt())
        };
        upper[0] = a1;
        for i in first..half {
            upper[i] = -m[i] / fac;
        }
    }
    let mut a = vec![0.0; n];
    for (i, &ai) in upper.iter().enumerate() {
        a[i] = -ai;
        a[n - 1 - i] = ai;
    }
    a
}

/// Shapiro–Wilk W and its upper-tail p-value, valid for `3 ≤ n ≤ 5000`.
pub fn shapiro_wilk(samples: &[f64]) -> Result<NormalityReport> {
    let x = sorted_checked(samples, 5000)?;
    let n = x.len();
    let a = sw_coefficients(n);

    // 1 − W computed as in AS R94 to keep precision when W is close to 1
    let range = x[n - 1] - x[0];
    let nf = n as f64;
    let sa = a.iter().sum::<f64>() / nf;
    let sx = x.iter().map(|v| v / range).sum::<f64>() / nf;
    let (mut ssa, mut ssx, mut sax) = (0.0, 0.0, 0.0);
    for (ai, xi) in a.iter().zip(&x) {
        let asa = ai - sa;
        let xsx = xi / range - sx;
        ssa += asa * asa;
        ssx += xsx * xsx;
        sax += asa * xsx;
    }
    let ssassx = (ssa * ssx).sqrt();
    let w1 = ((ssassx - sax) * (ssassx + sax) / (ssa * ssx)).max(0.0);
    let w = 1.0 - w1;

    Ok(NormalityReport {
        w,
        p_value: sw_p_value(w, w1, n),
        n,
        qq_pairs: qq_data(&x)?,
    })
}

fn sw_p_value(w: f64, w1: f64, n: usize) -> f64 {
    if n == 3 {
        use std::f64::consts::{FRAC_PI_3, PI};
        return (6.0 / PI * (w.sqrt().asin() - FRAC_PI_3)).clamp(0.0, 1.0);
    }
    if w1 == 0.0 {
        return 1.0;
    }
    let nf = n as f64;
    let mut y = w1.ln();
    let (mean, sd) = if n <= 11 {
        let gamma = poly(&G, nf);
        if y >= gamma {
            return 1e-99;
        }
        y = -(gamma - y).ln();
        (poly(&C3, nf), poly(&C4, nf).exp())
    } else {
        let ln_n = nf.ln();
        (poly(&C5, ln_n), poly(&C6, ln_n).exp())
    };
    std_normal().sf((y - mean) / sd)
}

//! Bessel functions of the first kind (orders 0 and 1) and Gauss-Legendre rules.

use std::f64::consts::PI;

const ASYMPTOTIC_FROM: f64 = 25.0;

/// `J0(x)`.
pub fn bessel_j0(x: f64) -> f64 {
    bessel_j01(x).0
}

/// `J1(x)`.
pub fn bessel_j1(x: f64) -> f64 {
    bessel_j01(x).1
}

/// `(J0(x), J1(x))`: backward recurrence below 25, Hankel asymptotics above.
pub fn bessel_j01(x: f64) -> (f64, f64) {
    let ax = x.abs();
    let sign1 = if x < 0.0 { -1.0 } else { 1.0 };
    if ax == 0.0 {
        return (1.0, 0.0);
    }
    let (j0, j1) = if ax < ASYMPTOTIC_FROM {
        miller(ax)
    } else {
        (hankel(0.0, ax), hankel(1.0, ax))
    };
    (j0, sign1 * j1)
}

fn miller(x: f64) -> (f64, f64) {
    let mut start = (x + 40.0).ceil() as usize;
    if start % 2 == 1 {
        start += 1;
    }
    let mut next = 0.0; // J_{n+1}
    let mut cur = 1e-300; // J_n
    let mut even_sum = 0.0;
    let mut j0 = 0.0;
    let mut j1 = 0.0;
    for n in (1..=start).rev() {
        let prev = 2.0 * n as f64 / x * cur - next;
        next = cur;
        cur = prev;
        // cur is now J_{n-1}
        if n - 1 == 1 {
            j1 = cur;
        }
        if n - 1 == 0 {
            j0 = cur;
        } else if (n - 1) % 2 == 0 {
            even_sum += cur;
        }
        if cur.abs() > 1e250 {
            cur *= 1e-250;
            next *= 1e-250;
            even_sum *= 1e-250;
            j1 *= 1e-250;
        }
    }
    let norm = j0 + 2.0 * even_sum;
    (j0 / norm, j1 / norm)
}

fn hankel(order: f64, x: f64) -> f64 {
    let mu = 4.0 * order * order;
    let mut p = 0.0;
    let mut q = 0.0;
    let mut term = 1.0;
    let mut last = f64::INFINITY;
    for k in 0..60usize {
        if k > 0 {
            let odd = (2 * k - 1) as f64;
            term *= (mu - odd * odd) / (k as f64 * 8.0 * x);
        }
        if term.abs() > last {
            break;
        }
        last = term.abs();
        match k % 4 {
            0 => p += term,
            1 => q += term,
            2 => p -= term,
            _ => q -= term,
        }
        if term.abs() < 1e-17 {
            break;
        }
    }
    let chi = x - (0.5 * order + 0.25) * PI;
    (2.0 / (PI * x)).sqrt() * (p * chi.cos() - q * chi.sin())
}

/// Nodes and weights of the `n`-point Gauss-Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { z } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (z * pn - pm) / (z * z - 1.0);
            let dz = pn / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -z;
        nodes[n - 1 - i] = z;
        let w = 2.0 / ((1.0 - z * z) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Composite Gauss-Legendre integral of `f` over `[a, b]` with `panels` equal panels.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, panels: usize, order: usize) -> f64 {
    let (nodes, weights) = gauss_legendre(order);
    let h = (b - a) / panels as f64;
    let mut total = 0.0;
    for k in 0..panels {
        let mid = a + (k as f64 + 0.5) * h;
        let mut s = 0.0;
        for (x, w) in nodes.iter().zip(&weights) {
            s += w * f(mid + 0.5 * h * x);
        }
        total += 0.5 * h * s;
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    /// `J_n(x) = (1/π) ∫_0^π cos(nτ − x sin τ) dτ`; the trapezoid rule converges
    /// geometrically for this periodic integrand.
    fn bessel_by_integral(n: f64, x: f64) -> f64 {
        let m = 4000;
        let h = PI / m as f64;
        let mut s = 0.5 * ((0.0f64).cos() + (n * PI).cos());
        for k in 1..m {
            let tau = k as f64 * h;
            s += (n * tau - x * tau.sin()).cos();
        }
        s * h / PI
    }

    #[test]
    fn matches_integral_representation() {
        for &x in &[1e-3, 0.3, 1.0, 2.5, 7.9, 12.0, 24.9, 25.1, 40.0, 90.0, 250.0] {
            let (j0, j1) = bessel_j01(x);
            assert!((j0 - bessel_by_integral(0.0, x)).abs() < 1e-13, "J0({x})");
            assert!((j1 - bessel_by_integral(1.0, x)).abs() < 1e-13, "J1({x})");
        }
    }

    #[test]
    fn reference_values() {
        assert!((bessel_j0(1.0) - 0.765_197_686_557_966_6).abs() < 1e-15);
        assert!((bessel_j1(1.0) - 0.440_050_585_744_933_5).abs() < 1e-15);
        assert!((bessel_j1(-1.0) + 0.440_050_585_744_933_5).abs() < 1e-15);
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(8);
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(14)).sum();
        assert!((s - 2.0 / 15.0).abs() < 1e-14);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
    }
}

//! Exact integration of `g(u) e^{κ(u−shift)}` over `u = ln t`, with `g` interpolated
//! log-linearly between positive node values, linearly when a node value vanishes, and held
//! constant outside the node range.

/// `(e^x − 1)/x`, stable near zero.
fn phi1(x: f64) -> f64 {
    if x.abs() < 1e-8 { 1.0 + x / 2.0 } else { x.exp_m1() / x }
}

/// `(x e^x − e^x + 1)/x²`, stable near zero.
fn phi2(x: f64) -> f64 {
    if x.abs() < 1e-4 { 0.5 + x / 3.0 + x * x / 8.0 } else { (x * x.exp() - x.exp_m1()) / (x * x) }
}

/// `∫_a^b e^{ln g_a + λ(u−a) + κ(u−shift)} du`.
fn exp_piece(a: f64, b: f64, ln_ga: f64, lambda: f64, kappa: f64, shift: f64) -> f64 {
    let w = b - a;
    if w <= 0.0 {
        return 0.0;
    }
    let c = lambda + kappa;
    (ln_ga + kappa * (a - shift)).exp() * w * phi1(c * w)
}

/// `∫_a^b (g_a + σ(u−a)) e^{κ(u−shift)} du`.
fn linear_piece(a: f64, b: f64, ga: f64, sigma: f64, kappa: f64, shift: f64) -> f64 {
    let w = b - a;
    if w <= 0.0 {
        return 0.0;
    }
    let x = kappa * w;
    (kappa * (a - shift)).exp() * (ga * w * phi1(x) + sigma * w * w * phi2(x))
}

/// `∫_lo^hi g(u) e^{κ(u−shift)} du`; `lo` may be `−∞` when `κ > 0`.
pub(crate) fn integrate(u: &[f64], g: &[f64], lo: f64, hi: f64, kappa: f64, shift: f64) -> f64 {
    debug_assert_eq!(u.len(), g.len());
    if !(hi > lo) || u.is_empty() {
        return 0.0;
    }
    let last = u.len() - 1;
    let mut total = 0.0;
    // Below the first node.
    if lo < u[0] && g[0] > 0.0 {
        let b = hi.min(u[0]);
        total += if lo == f64::NEG_INFINITY {
            debug_assert!(kappa > 0.0);
            g[0] * (kappa * (b - shift)).exp() / kappa
        } else {
            exp_piece(lo, b, g[0].ln(), 0.0, kappa, shift)
        };
    }
    // Above the last node.
    if hi > u[last] && g[last] > 0.0 {
        let a = lo.max(u[last]);
        total += exp_piece(a, hi, g[last].ln(), 0.0, kappa, shift);
    }
    if last == 0 || hi <= u[0] || lo >= u[last] {
        return total;
    }
    let start = u.partition_point(|&x| x <= lo).saturating_sub(1);
    for i in start..last {
        let (u0, u1) = (u[i], u[i + 1]);
        if u0 >= hi {
            break;
        }
        let a = lo.max(u0);
        let b = hi.min(u1);
        if b <= a {
            continue;
        }
        let (g0, g1) = (g[i], g[i + 1]);
        if g0 == 0.0 && g1 == 0.0 {
            continue;
        }
        let h = u1 - u0;
        total += if g0 > 0.0 && g1 > 0.0 {
            let lambda = (g1.ln() - g0.ln()) / h;
            exp_piece(a, b, g0.ln() + lambda * (a - u0), lambda, kappa, shift)
        } else {
            let sigma = (g1 - g0) / h;
            linear_piece(a, b, g0 + sigma * (a - u0), sigma, kappa, shift)
        };
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constants_and_exponentials_are_exact() {
        let u: Vec<f64> = (0..40).map(|i| -10.0 + 0.3 * i as f64).collect();
        let g = vec![2.0; u.len()];
        let k = 1.7;
        let want = 2.0 * ((k * 1.5f64).exp() - (k * -12.0f64).exp()) / k;
        assert!((integrate(&u, &g, -12.0, 1.5, k, 0.0) / want - 1.0).abs() < 1e-12);
        let tail = integrate(&u, &g, f64::NEG_INFINITY, 1.5, k, 0.0);
        assert!((tail / (2.0 * (k * 1.5f64).exp() / k) - 1.0).abs() < 1e-12);
        // g = e^{-u}: log-linear interpolation is exact.
        let g: Vec<f64> = u.iter().map(|x| (-x).exp()).collect();
        // Integrand e^{-u} e^{2(u-0.5)} = e^{u-1}.
        let got = integrate(&u, &g, -9.0, 1.0, 2.0, 0.5);
        let exact = 1.0 - (-10.0f64).exp();
        assert!((got / exact - 1.0).abs() < 1e-12);
        assert_eq!(integrate(&u, &g, 1.0, 1.0, 2.0, 0.0), 0.0);
    }

    #[test]
    fn linear_segments_with_zeros() {
        let u = vec![0.0, 1.0, 2.0];
        let g = vec![0.0, 1.0, 0.0];
        // ∫ hat(u) du with κ = 0.
        assert!((integrate(&u, &g, 0.0, 2.0, 0.0, 0.0) - 1.0).abs() < 1e-12);
        assert!((integrate(&u, &g, 0.5, 1.0, 0.0, 0.0) - 0.375).abs() < 1e-12);
    }
}

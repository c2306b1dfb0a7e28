//! Richardson-extrapolated central differences.
//!
//! Both stencils below have error expansions in even powers of the step, so
//! two rounds of extrapolation over `h, h/2, h/4` cancel the `h²` and `h⁴`
//! terms.

/// Base step for every spatial and temporal difference.
pub const BASE_STEP: f64 = 1e-3;

fn extrapolate<const N: usize>(d: [[f64; N]; 3]) -> [f64; N] {
    let mut out = [0.0; N];
    for i in 0..N {
        let r1 = (4.0 * d[1][i] - d[0][i]) / 3.0;
        let r2 = (4.0 * d[2][i] - d[1][i]) / 3.0;
        out[i] = (16.0 * r2 - r1) / 15.0;
    }
    out
}

/// `f'(0)` for a vector-valued function of one variable.
pub fn first<const N: usize>(f: impl Fn(f64) -> [f64; N]) -> [f64; N] {
    let mut d = [[0.0; N]; 3];
    for (level, dl) in d.iter_mut().enumerate() {
        let h = BASE_STEP / f64::from(1u32 << level);
        let (p, m) = (f(h), f(-h));
        for i in 0..N {
            dl[i] = (p[i] - m[i]) / (2.0 * h);
        }
    }
    extrapolate(d)
}

/// `f''(0)` for a vector-valued function of one variable.
pub fn second<const N: usize>(f: impl Fn(f64) -> [f64; N]) -> [f64; N] {
    let c = f(0.0);
    let mut d = [[0.0; N]; 3];
    for (level, dl) in d.iter_mut().enumerate() {
        let h = BASE_STEP / f64::from(1u32 << level);
        let (p, m) = (f(h), f(-h));
        for i in 0..N {
            dl[i] = (p[i] - 2.0 * c[i] + m[i]) / (h * h);
        }
    }
    extrapolate(d)
}

/// `∂²f/∂s∂r` at the origin for a function of two variables.
pub fn mixed<const N: usize>(f: impl Fn(f64, f64) -> [f64; N]) -> [f64; N] {
    let mut d = [[0.0; N]; 3];
    for (level, dl) in d.iter_mut().enumerate() {
        let h = BASE_STEP / f64::from(1u32 << level);
        let (pp, pm, mp, mm) = (f(h, h), f(h, -h), f(-h, h), f(-h, -h));
        for i in 0..N {
            dl[i] = (pp[i] - pm[i] - mp[i] + mm[i]) / (4.0 * h * h);
        }
    }
    extrapolate(d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derivatives_of_smooth_functions() {
        let x0 = 0.3f64;
        let d = first(|s| [(x0 + s).sin(), (x0 + s).exp()]);
        assert!((d[0] - x0.cos()).abs() < 1e-11);
        assert!((d[1] - x0.exp()).abs() < 1e-11);
        let d2 = second(|s| [(x0 + s).sin()]);
        assert!((d2[0] + x0.sin()).abs() < 1e-8);
        let m = mixed(|s, r| [((x0 + s) * (1.0 + r)).sin()]);
        // ∂²/∂s∂r sin((x0+s)(1+r)) at 0 = cos(x0) − x0 sin(x0)
        assert!((m[0] - (x0.cos() - x0 * x0.sin())).abs() < 1e-8);
    }

    #[test]
    fn exact_on_polynomials() {
        let d = first(|s| [s * s * s + 2.0 * s]);
        assert!((d[0] - 2.0).abs() < 1e-12);
        let d2 = second(|s| [s * s * s * s + s * s]);
        assert!((d2[0] - 2.0).abs() < 1e-8);
    }
}

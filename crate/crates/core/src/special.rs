//! Special functions: the Faddeeva function, complex `erfc`, and Bessel
//! function sequences for the Chebyshev propagator.

use num_complex::Complex64;

const TWO_OVER_SQRT_PI: f64 = std::f64::consts::FRAC_2_SQRT_PI;

/// Faddeeva function `w(z) = exp(-z²) erfc(-iz)`.
///
/// Gautschi's continued fraction / Taylor scheme (TOMS 680), with the
/// reflection `w(z) = 2 exp(-z²) - w(-z)` for the lower half-plane. The
/// result overflows only where `exp(-z²)` itself does.
pub fn faddeeva(z: Complex64) -> Complex64 {
    let xabs = z.re.abs();
    let yabs = z.im.abs();
    let x = xabs / 6.3;
    let y = yabs / 4.4;
    let mut qrho = x * x + y * y;

    let xquad_full = xabs * xabs - yabs * yabs;
    let yquad_full = 2.0 * xabs * yabs;

    let small = qrho < 0.085_264;
    let (mut u, mut v);
    if small {
        // Taylor expansion of erfc around the origin.
        qrho = (1.0 - 0.85 * y) * qrho.sqrt();
        let n = (6.0 + 72.0 * qrho).round() as i64;
        let mut j = 2 * n + 1;
        let mut xsum = 1.0 / j as f64;
        let mut ysum = 0.0;
        for i in (1..=n).rev() {
            j -= 2;
            let xaux = (xsum * xquad_full - ysum * yquad_full) / i as f64;
            ysum = (xsum * yquad_full + ysum * xquad_full) / i as f64;
            xsum = xaux + 1.0 / j as f64;
        }
        let u1 = -TWO_OVER_SQRT_PI * (xsum * yabs + ysum * xabs) + 1.0;
        let v1 = TWO_OVER_SQRT_PI * (xsum * xabs - ysum * yabs);
        let daux = (-xquad_full).exp();
        let u2 = daux * yquad_full.cos();
        let v2 = -daux * yquad_full.sin();
        u = u1 * u2 - v1 * v2;
        v = u1 * v2 + v1 * u2;
    } else {
        // Laplace continued fraction, optionally accelerated by a truncated
        // Taylor sum (h > 0).
        let (h, kapn, nu);
        if qrho > 1.0 {
            h = 0.0;
            kapn = 0i64;
            qrho = qrho.sqrt();
            nu = (3.0 + 1442.0 / (26.0 * qrho + 77.0)) as i64;
        } else {
            qrho = (1.0 - y) * (1.0 - qrho).sqrt();
            h = 1.88 * qrho;
            kapn = (7.0 + 34.0 * qrho).round() as i64;
            nu = (16.0 + 26.0 * qrho).round() as i64;
        }
        let h2 = 2.0 * h;
        let use_taylor = h > 0.0;
        let mut qlambda = if use_taylor { h2.powi(kapn as i32) } else { 0.0 };

        let (mut rx, mut ry, mut sx, mut sy) = (0.0, 0.0, 0.0, 0.0);
        for n in (0..=nu).rev() {
            let np1 = (n + 1) as f64;
            let tx = yabs + h + np1 * rx;
            let ty = xabs - np1 * ry;
            let c = 0.5 / (tx * tx + ty * ty);
            rx = c * tx;
            ry = c * ty;
            if use_taylor && n <= kapn {
                let tx = qlambda + sx;
                sx = rx * tx - ry * sy;
                sy = ry * tx + rx * sy;
                qlambda /= h2;
            }
        }
        if use_taylor {
            u = TWO_OVER_SQRT_PI * sx;
            v = TWO_OVER_SQRT_PI * sy;
        } else {
            u = TWO_OVER_SQRT_PI * rx;
            v = TWO_OVER_SQRT_PI * ry;
        }
        if yabs == 0.0 {
            u = (-xabs * xabs).exp();
        }
    }

    if z.im < 0.0 {
        let daux = 2.0 * (-xquad_full).exp();
        let u2 = daux * yquad_full.cos();
        let v2 = -daux * yquad_full.sin();
        u = u2 - u;
        v = v2 - v;
        if z.re > 0.0 {
            v = -v;
        }
    } else if z.re < 0.0 {
        v = -v;
    }
    Complex64::new(u, v)
}

/// Complementary error function of a complex argument.
pub fn erfc(z: Complex64) -> Complex64 {
    if z.re >= 0.0 {
        (-z * z).exp() * faddeeva(Complex64::i() * z)
    } else {
        Complex64::new(2.0, 0.0) - erfc(-z)
    }
}

/// Bessel functions `J_0(x) ..= J_{n}(x)` for `x >= 0`, truncated after the
/// last order whose magnitude exceeds `cutoff`. Miller's backward recurrence
/// normalized with `J_0 + 2 Σ J_2k = 1`.
pub fn bessel_j_sequence(x: f64, cutoff: f64) -> Vec<f64> {
    assert!(x >= 0.0 && x.is_finite(), "bessel_j_sequence: bad argument {x}");
    if x == 0.0 {
        return vec![1.0];
    }
    let start = (x + 30.0 + 12.0 * x.cbrt()).ceil() as usize + 20;
    let mut j = vec![0.0; start + 2];
    j[start] = 1e-30;
    for k in (1..=start).rev() {
        j[k - 1] = 2.0 * k as f64 / x * j[k] - j[k + 1];
        if j[k - 1].abs() > 1e250 {
            for v in j.iter_mut().skip(k - 1) {
                *v *= 1e-250;
            }
        }
    }
    let mut norm = j[0];
    for k in (2..=start).step_by(2) {
        norm += 2.0 * j[k];
    }
    for v in j.iter_mut() {
        *v /= norm;
    }
    let mut last = 0;
    for (k, v) in j.iter().enumerate() {
        if v.abs() > cutoff {
            last = k;
        }
    }
    j.truncate(last + 1);
    j
}

#[cfg(test)]
mod tests {
    use super::*;

    // (Re z, Im z, Re w, Im w), 40-digit reference evaluation.
    const W_TABLE: &[(f64, f64, f64, f64)] = &[
        (0.0, 0.0, 1.0, 0.0),
        (0.5, 0.0, 0.7788007830714049, 0.47892517290104347),
        (1.0, 1.0, 0.3047442052569126, 0.20821893820283163),
        (-1.0, 1.0, 0.3047442052569126, -0.20821893820283163),
        (2.0, -3.0, 250.34730620373907, -159.18785104818724),
        (-2.0, -0.5, -0.12293249482276238, -0.32755513633331257),
        (0.1, -0.1, 1.1111214508575118, 0.13432898444395128),
        (5.0, 5.0, 0.056965439888176976, 0.055838742775391026),
        (-6.0, 0.01, 0.00016375289889683183, -0.09539592338660148),
        (7.5, -0.2, -0.002060474177302376, 0.07585611382518559),
        (0.0, 10.0, 0.05614099274382259, 0.0),
        (0.0, -3.0, 16205.988853999586, 0.0),
        (3.0, 0.2, 0.015626770455552115, 0.1996685632186661),
        (0.001, 0.002, 0.9977462401578149, 0.0011243874298884008),
        (20.0, -1.0, -0.001412234766392966, 0.028173995667521982),
        (-30.0, 40.0, 0.009027826365823543, -0.006768162575404747),
        (0.001, -4.0, 17771634.424332656, 142176.1096263196),
        (6.3, -4.4, -0.04264144051227875, 0.06001824879946102),
        (-2.5, -2.5, 1.878859433312511, 0.024735208705919963),
        (40.0, 0.0, 0.0, 0.014109151458534102),
    ];

    #[test]
    fn faddeeva_matches_reference_table() {
        for &(x, y, wr, wi) in W_TABLE {
            let w = faddeeva(Complex64::new(x, y));
            let exact = Complex64::new(wr, wi);
            let err = (w - exact).norm() / exact.norm().max(1.0);
            assert!(err < 1e-12, "w({x}+{y}i) = {w}, expected {exact}, err {err}");
        }
    }

    #[test]
    fn faddeeva_at_origin_is_one() {
        assert_eq!(faddeeva(Complex64::new(0.0, 0.0)), Complex64::new(1.0, 0.0));
    }

    #[test]
    fn erfc_reference_values() {
        assert_eq!(erfc(Complex64::new(0.0, 0.0)), Complex64::new(1.0, 0.0));
        let e1 = erfc(Complex64::new(1.0, 0.0));
        assert!((e1.re - 0.157_299_207_050_285_13).abs() < 1e-14);
        let table = [
            (0.5, 0.5, 0.3573870851451795, -0.4578813944351922),
            (-1.0, 2.0, 0.46335643422143497, 5.049143703447035),
            (2.0, -1.0, -0.0036063427256517507, -0.011259006028815025),
            (-0.3, -0.7, 1.5211610048601496, 0.8309109763683517),
            (3.0, 0.0, 2.209049699858544e-05, 0.0),
        ];
        for (x, y, er, ei) in table {
            let e = erfc(Complex64::new(x, y));
            assert!((e - Complex64::new(er, ei)).norm() < 1e-10, "erfc({x}+{y}i) = {e}");
        }
    }

    #[test]
    fn erfc_real_one_by_quadrature_of_definition() {
        // erfc(1) = 2/sqrt(pi) ∫_1^∞ exp(-t²) dt, composite Simpson on [1, 9].
        let n = 20_000;
        let (a, b) = (1.0_f64, 9.0_f64);
        let h = (b - a) / n as f64;
        let f = |t: f64| (-t * t).exp();
        let mut s = f(a) + f(b);
        for i in 1..n {
            let t = a + i as f64 * h;
            s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(t);
        }
        let quad = TWO_OVER_SQRT_PI * s * h / 3.0;
        assert!((erfc(Complex64::new(1.0, 0.0)).re - quad).abs() < 1e-12);
    }

    #[test]
    fn faddeeva_symmetry_conjugate() {
        // w(-conj z) = conj w(z)
        for &(x, y) in &[(0.3, 0.7), (2.0, 1.5), (4.0, -0.3), (0.05, -2.0)] {
            let z = Complex64::new(x, y);
            let lhs = faddeeva(-z.conj());
            let rhs = faddeeva(z).conj();
            assert!((lhs - rhs).norm() <= 1e-13 * rhs.norm().max(1.0));
        }
    }

    #[test]
    fn bessel_sequence_known_values() {
        let j = bessel_j_sequence(1.0, 1e-20);
        assert!((j[0] - 0.765_197_686_557_966_6).abs() < 1e-14);
        assert!((j[1] - 0.440_050_585_744_933_5).abs() < 1e-14);
        let j = bessel_j_sequence(100.0, 1e-20);
        assert!((j[0] - 0.019_985_850_304_223_12).abs() < 1e-12);
        assert!((j[50] - (-0.038_698_339_728_525_4)).abs() < 1e-12);
        assert!(j.len() > 100 && j.len() < 200);
    }
}

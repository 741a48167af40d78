//! Special functions not covered by `libm` or `errorfunctions`.

/// Euler-Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Exponential integral `E_1(x)` for `x > 0`.
pub fn exp_int_e1(x: f64) -> f64 {
    debug_assert!(x > 0.0);
    if x <= 1.0 {
        let mut sum = 0.0;
        let mut term = 1.0;
        for k in 1..60 {
            let kf = k as f64;
            term *= -x / kf;
            let add = term / kf;
            sum += add;
            if add.abs() < 1e-17 * sum.abs().max(1e-300) {
                break;
            }
        }
        -EULER_GAMMA - x.ln() - sum
    } else {
        // modified Lentz on the continued fraction
        let tiny = 1e-300;
        let mut b = x + 1.0;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..200 {
            let an = -((i * i) as f64);
            b += 2.0;
            d = 1.0 / (an * d + b);
            c = b + an / c;
            let del = c * d;
            h *= del;
            if (del - 1.0).abs() < 1e-16 {
                break;
            }
        }
        h * (-x).exp()
    }
}

/// Fills `out[q] = E_{q+1}(x)` for `q = 0..out.len()`.
pub fn exp_int_sequence(x: f64, out: &mut [f64]) {
    if out.is_empty() {
        return;
    }
    out[0] = exp_int_e1(x);
    let ex = (-x).exp();
    for q in 1..out.len() {
        out[q] = (ex - x * out[q - 1]) / q as f64;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn e1_reference_values() {
        // values from Abramowitz & Stegun table 5.1
        let cases = [
            (0.1, 1.822_923_958_419_390_7),
            (0.5, 0.559_773_594_776_160_8),
            (1.0, 0.219_383_934_395_520_3),
            (2.0, 0.048_900_510_708_061_1),
            (5.0, 0.001_148_295_591_275_325_5),
        ];
        for (x, e) in cases {
            let v = exp_int_e1(x);
            assert!(((v - e) / e).abs() < 1e-13, "E1({x}) = {v}, expected {e}");
        }
    }

    #[test]
    fn continuity_at_switch() {
        let a = exp_int_e1(1.0 - 1e-12);
        let b = exp_int_e1(1.0 + 1e-12);
        assert!((a - b).abs() < 1e-11);
    }

    #[test]
    fn recurrence_gives_e2() {
        let mut out = [0.0; 3];
        exp_int_sequence(0.5, &mut out);
        // E_2(0.5)
        assert!((out[1] - 0.326_643_862_324_553_0).abs() < 1e-13);
    }
}

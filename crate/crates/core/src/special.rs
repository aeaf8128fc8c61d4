//! Error function, complementary error function, and their inverses.
//!
//! `erf`/`erfc` follow W. J. Cody's rational approximations (three argument
//! regions, relative error below 1e-15 in double precision). The inverse
//! normal quantile uses Acklam's rational approximation refined by one
//! Halley step through the forward `erfc`, which brings the absolute error
//! to machine-precision level; the inverse error function is derived from
//! it and polished with one Newton step.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

const SQRT_2PI: f64 = 2.506_628_274_631_000_5;

// Cody region 1 (|x| <= 0.46875)
const ERF_A: [f64; 5] = [
    3.161_123_743_870_565_6e0,
    1.138_641_541_510_501_56e2,
    3.774_852_376_853_020_2e2,
    3.209_377_589_138_469_47e3,
    1.857_777_061_846_031_53e-1,
];
const ERF_B: [f64; 4] = [
    2.360_129_095_234_412_09e1,
    2.440_246_379_344_441_73e2,
    1.282_616_526_077_372_28e3,
    2.844_236_833_439_170_62e3,
];
// Cody region 2 (0.46875 < |x| <= 4)
const ERF_C: [f64; 9] = [
    5.641_884_969_886_700_9e-1,
    8.883_149_794_388_375_94e0,
    6.611_919_063_714_162_95e1,
    2.986_351_381_974_001_31e2,
    8.819_522_212_417_690_9e2,
    1.712_047_612_634_070_58e3,
    2.051_078_377_826_071_47e3,
    1.230_339_354_797_997_25e3,
    2.153_115_354_744_038_46e-8,
];
const ERF_D: [f64; 8] = [
    1.574_492_611_070_983_47e1,
    1.176_939_508_913_124_99e2,
    5.371_811_018_620_098_58e2,
    1.621_389_574_566_690_19e3,
    3.290_799_235_733_459_63e3,
    4.362_619_090_143_247_16e3,
    3.439_367_674_143_721_64e3,
    1.230_339_354_803_749_42e3,
];
// Cody region 3 (|x| > 4)
const ERF_P: [f64; 6] = [
    3.053_266_349_612_323_44e-1,
    3.603_448_999_498_044_39e-1,
    1.257_817_261_112_292_46e-1,
    1.608_378_514_874_227_66e-2,
    6.587_491_615_298_378_03e-4,
    1.631_538_713_730_209_78e-2,
];
const ERF_Q: [f64; 5] = [
    2.568_520_192_289_822_42e0,
    1.872_952_849_923_460_47e0,
    5.279_051_029_514_284_12e-1,
    6.051_834_131_244_131_91e-2,
    2.335_204_976_268_691_85e-3,
];
const FRAC_1_SQRT_PI: f64 = 5.641_895_835_477_562_9e-1;

/// erfc on `[0.46875, inf)`; the scaled tail regions of Cody's scheme.
fn erfc_tail(y: f64) -> f64 {
    debug_assert!(y >= 0.46875);
    let result = if y <= 4.0 {
        let mut num = ERF_C[8] * y;
        let mut den = y;
        for i in 0..7 {
            num = (num + ERF_C[i]) * y;
            den = (den + ERF_D[i]) * y;
        }
        (num + ERF_C[7]) / (den + ERF_D[7])
    } else {
        if y >= 26.543 {
            return 0.0;
        }
        let ysq = 1.0 / (y * y);
        let mut num = ERF_P[5] * ysq;
        let mut den = ysq;
        for i in 0..4 {
            num = (num + ERF_P[i]) * ysq;
            den = (den + ERF_Q[i]) * ysq;
        }
        let r = ysq * (num + ERF_P[4]) / (den + ERF_Q[4]);
        (FRAC_1_SQRT_PI - r) / y
    };
    // exp(-y^2) split to avoid cancellation in the exponent
    let ytrunc = (y * 16.0).trunc() / 16.0;
    let del = (y - ytrunc) * (y + ytrunc);
    (-ytrunc * ytrunc).exp() * (-del).exp() * result
}

/// Error function.
pub fn erf(x: f64) -> f64 {
    let y = x.abs();
    if y <= 0.46875 {
        let ysq = if y > 1.11e-16 { y * y } else { 0.0 };
        let mut num = ERF_A[4] * ysq;
        let mut den = ysq;
        for i in 0..3 {
            num = (num + ERF_A[i]) * ysq;
            den = (den + ERF_B[i]) * ysq;
        }
        x * (num + ERF_A[3]) / (den + ERF_B[3])
    } else {
        let e = 1.0 - erfc_tail(y);
        if x < 0.0 {
            -e
        } else {
            e
        }
    }
}

/// Complementary error function.
pub fn erfc(x: f64) -> f64 {
    let y = x.abs();
    if y <= 0.46875 {
        1.0 - erf(x)
    } else if x < 0.0 {
        2.0 - erfc_tail(y)
    } else {
        erfc_tail(y)
    }
}

/// Standard normal CDF.
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * erfc(-x * FRAC_1_SQRT_2)
}

// Acklam's inverse-normal coefficients.
const INV_A: [f64; 6] = [
    -3.969_683_028_665_376e1,
    2.209_460_984_245_205e2,
    -2.759_285_104_469_687e2,
    1.383_577_518_672_69e2,
    -3.066_479_806_614_716e1,
    2.506_628_277_459_239e0,
];
const INV_B: [f64; 5] = [
    -5.447_609_879_822_406e1,
    1.615_858_368_580_409e2,
    -1.556_989_798_598_866e2,
    6.680_131_188_771_972e1,
    -1.328_068_155_288_572e1,
];
const INV_C: [f64; 6] = [
    -7.784_894_002_430_293e-3,
    -3.223_964_580_411_365e-1,
    -2.400_758_277_161_838e0,
    -2.549_732_539_343_734e0,
    4.374_664_141_464_968e0,
    2.938_163_982_698_783e0,
];
const INV_D: [f64; 4] = [
    7.784_695_709_041_462e-3,
    3.224_671_290_700_398e-1,
    2.445_134_137_142_996e0,
    3.754_408_661_907_416e0,
];

fn acklam(p: f64) -> f64 {
    const P_LOW: f64 = 0.02425;
    if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((INV_C[0] * q + INV_C[1]) * q + INV_C[2]) * q + INV_C[3]) * q + INV_C[4]) * q
            + INV_C[5])
            / ((((INV_D[0] * q + INV_D[1]) * q + INV_D[2]) * q + INV_D[3]) * q + 1.0)
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((INV_A[0] * r + INV_A[1]) * r + INV_A[2]) * r + INV_A[3]) * r + INV_A[4]) * r
            + INV_A[5])
            * q
            / (((((INV_B[0] * r + INV_B[1]) * r + INV_B[2]) * r + INV_B[3]) * r + INV_B[4]) * r
                + 1.0)
    } else {
        let q = (-2.0 * (1.0 - p).ln()).sqrt();
        -(((((INV_C[0] * q + INV_C[1]) * q + INV_C[2]) * q + INV_C[3]) * q + INV_C[4]) * q
            + INV_C[5])
            / ((((INV_D[0] * q + INV_D[1]) * q + INV_D[2]) * q + INV_D[3]) * q + 1.0)
    }
}

/// Inverse standard normal CDF: returns `x` with `norm_cdf(x) = p`.
pub fn norm_quantile(p: f64) -> f64 {
    assert!(p > 0.0 && p < 1.0, "norm_quantile needs p in (0,1), got {p}");
    let x = acklam(p);
    // One Halley step against the Cody-accurate forward CDF.
    let e = norm_cdf(x) - p;
    let u = e * SQRT_2PI * (x * x / 2.0).exp();
    x - u / (1.0 + x * u / 2.0)
}

/// Value of a `N(mean, var)` variable exceeded with probability `p`:
/// `mean + sqrt(var) * norm_quantile(1 - p)`.
pub fn gaussian_upper_quantile_raw(p: f64, mean: f64, var: f64) -> f64 {
    debug_assert!(var >= 0.0);
    if var == 0.0 {
        return mean;
    }
    mean + var.sqrt() * norm_quantile(1.0 - p)
}

/// Inverse error function on `(-1, 1)`.
pub fn erf_inv(y: f64) -> f64 {
    assert!(y > -1.0 && y < 1.0, "erf_inv needs y in (-1,1), got {y}");
    if y == 0.0 {
        return 0.0;
    }
    let x = norm_quantile((1.0 + y) / 2.0) * FRAC_1_SQRT_2;
    // Newton step on erf(x) - y = 0; for |y| near 1 evaluate the residual
    // through erfc to avoid cancellation.
    let residual = if y > 0.5 {
        (1.0 - y) - erfc(x)
    } else if y < -0.5 {
        erfc(-x) - (1.0 + y)
    } else {
        y - erf(x)
    };
    x + residual * (PI.sqrt() / 2.0) * (x * x).exp()
}

#[cfg(test)]
mod tests {
    use super::*;

    // Reference values computed with mpmath at 40 significant digits.
    const NORM_QUANTILE_TABLE: [(f64, f64); 20] = [
        (1e-9, -5.997807015007686871562),
        (1e-7, -5.199337582192816931587),
        (1e-5, -4.264890793922824628499),
        (1e-4, -3.719016485455680564394),
        (1e-3, -3.09023230616781354154),
        (0.0025, -2.807033768343804117222),
        (0.01, -2.326347874040841100886),
        (0.025, -1.959963984540054235525),
        (0.05, -1.644853626951472714864),
        (0.1, -1.281551565544600466965),
        (0.2, -0.8416212335729142051787),
        (0.3, -0.5244005127080407840383),
        (0.4, -0.2533471031357997987982),
        (0.5, 0.0),
        (0.6, 0.2533471031357997987982),
        (0.75, 0.6744897501960817432022),
        (0.9, 1.281551565544600466965),
        (0.975, 1.959963984540054235525),
        (0.999, 3.09023230616781354154),
        (0.99999, 4.264890793922824628499),
    ];

    const ERF_INV_TABLE: [(f64, f64); 20] = [
        (-0.999999, -3.458910737279500022151),
        (-0.998, -2.185124219133004265706),
        (-0.9, -1.163087153676674086726),
        (-0.75, -0.8134198475976185416903),
        (-0.5, -0.4769362762044698733814),
        (-0.2, -0.1791434546212916764927),
        (-0.05, -0.04434038791000549383505),
        (-1e-3, -0.0008862271574665521045654),
        (-1e-6, -8.862269254529900273156e-7),
        (0.0, 0.0),
        (1e-6, 8.862269254529900273156e-7),
        (1e-3, 0.0008862271574665521045654),
        (0.05, 0.04434038791000549383505),
        (0.2, 0.1791434546212916764927),
        (0.5, 0.4769362762044698733814),
        (0.75, 0.8134198475976185416903),
        (0.9, 1.163087153676674086726),
        (0.99, 1.82138636771844967304),
        (0.998, 2.185124219133004265706),
        (0.999999, 3.458910737279500022151),
    ];

    #[test]
    fn norm_quantile_matches_reference() {
        for &(p, want) in &NORM_QUANTILE_TABLE {
            let got = norm_quantile(p);
            assert!(
                (got - want).abs() < 1e-9,
                "norm_quantile({p}) = {got}, want {want}"
            );
        }
    }

    #[test]
    fn erf_inv_matches_reference() {
        for &(y, want) in &ERF_INV_TABLE {
            let got = erf_inv(y);
            assert!((got - want).abs() < 1e-9, "erf_inv({y}) = {got}, want {want}");
        }
    }

    #[test]
    fn erf_round_trip() {
        let mut x = -0.95;
        while x < 0.95 {
            let f = erf(erf_inv(x));
            assert!((f - x).abs() < 1e-12, "erf(erf_inv({x})) = {f}");
            x += 0.01;
        }
    }

    #[test]
    fn erfc_symmetry_and_known_points() {
        assert!((erf(0.0)).abs() < 1e-300);
        assert!((erfc(0.0) - 1.0).abs() < 1e-15);
        // erf(1) = 0.8427007929497148693412 (mpmath)
        assert!((erf(1.0) - 0.8427007929497148693412).abs() < 1e-14);
        // erfc(3) = 2.209049699858544137278e-5
        assert!((erfc(3.0) - 2.209049699858544137278e-5).abs() < 1e-18);
        // erfc(10) = 2.088487583762544757001e-45
        assert!((erfc(10.0) / 2.088487583762544757001e-45 - 1.0).abs() < 1e-10);
        for &x in &[-2.5, -0.3, 0.0, 0.7, 4.2] {
            assert!((erf(x) + erf(-x)).abs() < 1e-15);
            assert!((erfc(x) + erfc(-x) - 2.0).abs() < 1e-14);
        }
    }

    #[test]
    fn quantile_cdf_round_trip() {
        for &p in &[1e-8, 1e-5, 1e-3, 0.1, 0.4, 0.5, 0.9, 0.999, 1.0 - 1e-7] {
            let x = norm_quantile(p);
            let back = norm_cdf(x);
            assert!(
                (back - p).abs() <= 1e-12 * p.max(1e-3),
                "norm_cdf(norm_quantile({p})) = {back}"
            );
        }
    }

    #[test]
    fn upper_quantile_degenerate_cases() {
        assert_eq!(gaussian_upper_quantile_raw(0.5, 3.0, 2.0), 3.0);
        assert_eq!(gaussian_upper_quantile_raw(1e-3, 7.0, 0.0), 7.0);
        let v = gaussian_upper_quantile_raw(1e-3, 0.0, 1.0);
        assert!((v - 3.09023230616781354154).abs() < 1e-9);
    }
}

//! One-dimensional integration rules used on radial profiles.

/// Radial rule for integrands without a closed-form antiderivative.
///
/// The interval is split into `panels` geometrically spaced panels, each of
/// which is integrated by adaptive 15-point Gauss-Kronrod bisection until
/// the local error estimate falls below its share of `rel_tol`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialRule {
    pub panels: usize,
    pub rel_tol: f64,
}

impl Default for RadialRule {
    fn default() -> Self {
        Self {
            panels: 64,
            rel_tol: 1e-9,
        }
    }
}

const MAX_DEPTH: u32 = 40;

// Gauss-Kronrod 7/15 nodes and weights on [-1, 1].
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// Kronrod estimate and |Kronrod - Gauss| on `[a, b]`.
pub fn gauss_kronrod_15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let pair = f(c - dx) + f(c + dx);
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    (kronrod * h, (kronrod - gauss).abs() * h)
}

fn adaptive<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, abs_tol: f64, depth: u32) -> f64 {
    let (value, err) = gauss_kronrod_15(f, a, b);
    if err <= abs_tol || depth >= MAX_DEPTH || (b - a) <= 1e-12 * b.abs().max(1.0) {
        return value;
    }
    let m = 0.5 * (a + b);
    adaptive(f, a, m, 0.5 * abs_tol, depth + 1) + adaptive(f, m, b, 0.5 * abs_tol, depth + 1)
}

/// Integral of `f` over `[a, b]` with `0 < a`.
///
/// `scale` is an estimate of the magnitude of the result; the absolute
/// tolerance handed to the panels is `rel_tol * scale`.
pub fn integrate_radial<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, rule: RadialRule, scale: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let panels = rule.panels.max(1);
    let ratio = (b / a).powf(1.0 / panels as f64);
    let tol = rule.rel_tol * scale.abs().max(f64::MIN_POSITIVE) / panels as f64;
    let mut lo = a;
    let mut total = 0.0;
    for i in 0..panels {
        let hi = if i + 1 == panels { b } else { lo * ratio };
        total += adaptive(&f, lo, hi, tol, 0);
        lo = hi;
    }
    total
}

/// `∫_a^b r^(1-n) dr` for `0 < a <= b`, stable near `n = 2`.
pub fn power_moment(exponent: f64, a: f64, b: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let p = 2.0 - exponent;
    let log_ratio = (b / a).ln();
    if (p * log_ratio).abs() < 1e-12 {
        return log_ratio;
    }
    a.powf(p) * (p * log_ratio).exp_m1() / p
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_kronrod_is_exact_on_polynomials() {
        let (v, e) = gauss_kronrod_15(&|x: f64| 3.0 * x * x - x + 2.0, -1.0, 2.0);
        // ∫(3x² - x + 2) dx over [-1, 2] = 9 - 1.5 + 6
        assert!((v - 13.5).abs() < 1e-13);
        assert!(e < 1e-12);
    }

    #[test]
    fn oscillatory_integral_matches_closed_form() {
        // ∫_1^50 cos(40 r) dr = (sin(2000) - sin(40)) / 40
        let exact = ((2000.0f64).sin() - (40.0f64).sin()) / 40.0;
        let v = integrate_radial(|r| (40.0 * r).cos(), 1.0, 50.0, RadialRule::default(), 0.05);
        assert!((v - exact).abs() < 1e-10, "{v} vs {exact}");
    }

    #[test]
    fn power_moment_closed_forms() {
        assert!((power_moment(2.0, 1.0, std::f64::consts::E) - 1.0).abs() < 1e-15);
        // n = 1: ∫ r^0 = b - a
        assert!((power_moment(1.0, 2.0, 5.0) - 3.0).abs() < 1e-13);
        // n = 4: ∫ r^-3 = (a^-2 - b^-2) / 2
        assert!((power_moment(4.0, 1.0, 2.0) - 0.375).abs() < 1e-15);
        // Continuity across n = 2.
        let below = power_moment(2.0 - 1e-9, 0.5, 300.0);
        let at = power_moment(2.0, 0.5, 300.0);
        assert!((below - at).abs() < 1e-7);
    }

    #[test]
    fn power_moment_matches_adaptive_rule() {
        for n in [1.73, 2.0, 3.19, 4.0] {
            let exact = power_moment(n, 0.5, 40.0);
            let numeric = integrate_radial(|r| r.powf(1.0 - n), 0.5, 40.0, RadialRule::default(), exact);
            assert!(((numeric - exact) / exact).abs() < 1e-9, "n = {n}");
        }
    }
}

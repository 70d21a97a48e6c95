//! Adaptive Gauss–Kronrod (7–15) quadrature, used only as a validation oracle.

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        kron += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    (kron * h, ((kron - gauss) * h).abs())
}

/// Integrate `f` over `[a, b]` to absolute tolerance `abs_tol` by recursive
/// bisection.
pub fn integrate(f: &impl Fn(f64) -> f64, a: f64, b: f64, abs_tol: f64) -> f64 {
    fn rec(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
        let (v, err) = gk15(f, a, b);
        if err <= tol.max(50.0 * f64::EPSILON * v.abs()) || depth > 30 {
            return v;
        }
        let m = 0.5 * (a + b);
        rec(f, a, m, 0.5 * tol, depth + 1) + rec(f, m, b, 0.5 * tol, depth + 1)
    }
    rec(f, a, b, abs_tol, 0)
}

/// `∫_0^∞ f` for a unimodal-ish non-negative integrand peaked near `peak`
/// with spread `width`: integrate over `[0, peak + k·width]`, growing `k`
/// until the tail panel is below `tail_rel` of the running total.
pub fn integrate_half_line(f: &impl Fn(f64) -> f64, peak: f64, width: f64, rel_tol: f64) -> f64 {
    let mut edges = vec![0.0];
    let lo = (peak - 10.0 * width).max(0.0);
    if lo > 0.0 {
        edges.push(lo);
    }
    edges.push(peak);
    let mut k = 10.0;
    edges.push(peak + k * width);
    let mut total = 0.0;
    for w in edges.windows(2) {
        total += integrate(f, w[0], w[1], 1e-3 * rel_tol * f(peak).abs().max(1e-300) * width);
    }
    let mut hi = peak + k * width;
    loop {
        k *= 2.0;
        let next = peak + k * width;
        let panel = integrate(f, hi, next, 1e-3 * rel_tol * total.abs());
        total += panel;
        hi = next;
        if panel.abs() < 1e-3 * rel_tol * total.abs() || k > 1e6 {
            break;
        }
    }
    total
}

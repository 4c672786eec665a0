//! Upper incomplete gamma function for the fractional shapes this crate
//! needs: `Gamma(a, y)` with `a` in `(-2, 1)`, `a` not an integer, `y > 0`.
//!
//! Shapes in `(0, 1)` are computed directly (power series for small `y`,
//! Lentz continued fraction otherwise); negative shapes come from the
//! downward recurrence
//!
//! ```text
//! Gamma(a - 1, y) = (Gamma(a, y) - y^{a-1} e^{-y}) / (a - 1)
//! ```
//!
//! The recurrence subtracts two comparable quantities, which loses a digit
//! or two around `y ~ 1..30` and degrades further as `a` approaches an
//! integer; both are acceptable for the tail integrals this feeds, and the
//! callers carry the achieved accuracy through to their own bounds.

const SERIES_CUTOFF: f64 = 1.2;
const MAX_CF_ITERS: usize = 500;

/// `Gamma(a, y)` for `a` in `(-2, 1)` excluding `{0, -1}`, `y > 0`.
pub fn gamma_upper(a: f64, y: f64) -> f64 {
    assert!(y > 0.0, "gamma_upper requires y > 0");
    assert!(
        a > -2.0 && a < 1.0 && a != 0.0 && a != -1.0,
        "shape {a} outside supported range"
    );
    if a > 0.0 {
        return gamma_upper_frac(a, y);
    }
    let mut shape = a;
    let mut steps = 0;
    while shape <= 0.0 {
        shape += 1.0;
        steps += 1;
    }
    let mut g = gamma_upper_frac(shape, y);
    for _ in 0..steps {
        shape -= 1.0;
        g = (g - (-y + shape * y.ln()).exp()) / shape;
    }
    g
}

/// `Gamma(a, y)` for `a` in `(0, 1)`.
pub fn gamma_upper_frac(a: f64, y: f64) -> f64 {
    debug_assert!(a > 0.0 && a < 1.0);
    if y > 745.0 {
        return 0.0;
    }
    if y < SERIES_CUTOFF {
        // Gamma(a) - gamma_lower(a, y), lower series: y^a sum (-y)^n / (n! (a+n))
        let mut pw = 1.0; // (-y)^n / n!
        let mut total = 1.0 / a;
        let mut n = 0.0;
        loop {
            n += 1.0;
            pw *= -y / n;
            let contrib = pw / (a + n);
            total += contrib;
            if contrib.abs() < 1e-18 * total.abs() {
                break;
            }
        }
        let lower = y.powf(a) * total;
        return statrs::function::gamma::gamma(a) - lower;
    }
    // Lentz continued fraction for the upper function
    let tiny = 1e-300;
    let mut b = y + 1.0 - a;
    let mut c = 1.0 / tiny;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..MAX_CF_ITERS {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < tiny {
            d = tiny;
        }
        c = b + an / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    (-y + a * y.ln()).exp() * h
}

#[cfg(test)]
mod tests {
    #![allow(clippy::excessive_precision)]

    use super::*;

    // (a, y, Gamma(a, y)) from a 40-digit reference evaluation
    const REFS: &[(f64, f64, f64)] = &[
        (0.5, 1e-8, 1.772253850906182693963),
        (0.5, 0.04, 1.377723789052774267065),
        (0.5, 0.5, 0.5624182315944071242795),
        (0.5, 1.19, 0.2178302303207859583676),
        (0.5, 1.21, 0.2123309857523772605145),
        (0.5, 5.0, 0.002774603260412809319491),
        (0.5, 30.0, 1.681303208652897861183e-14),
        (0.25, 1e-8, 3.585609908301908311708),
        (0.25, 0.04, 1.850908808625730216121),
        (0.25, 0.5, 0.5565804140094271343879),
        (0.25, 1.19, 0.1865647952265683746201),
        (0.25, 1.21, 0.1813105109445516586192),
        (0.25, 5.0, 0.00178389116628676808385),
        (0.25, 30.0, 7.127304255259822683269e-15),
        (0.9, 1e-8, 1.06862863201294807807),
        (0.9, 0.04, 1.008454186589967957814),
        (0.9, 0.5, 0.5937231651270924203861),
        (0.9, 1.19, 0.2837758008911711436147),
        (0.9, 1.21, 0.2778606273540900967812),
        (0.9, 5.0, 0.005639974208750521612862),
        (0.9, 30.0, 6.638244099839070218424e-14),
        (-0.5, 1e-8, 19996.45529229818863461),
        (-0.5, 0.04, 6.852446813417683560263),
        (-0.5, 0.5, 0.5906913067325993444014),
        (-0.5, 1.19, 0.1220978904263684535502),
        (-0.5, 1.21, 0.1175149001859498024829),
        (-0.5, 5.0, 0.000477396486672708459406),
        (-0.5, 30.0, 5.431437246902146783105e-16),
        (-0.25, 1e-8, 395.0983345234726198957),
        (-0.25, 0.04, 4.160848466463599066846),
        (-0.25, 0.5, 0.5712673030999203793826),
        (-0.25, 1.19, 0.1397574095275804245009),
        (-0.25, 1.21, 0.1349607762575355257333),
        (-0.25, 5.0, 0.0007400002351042209138982),
        (-0.25, 30.0, 1.281032101751899812583e-15),
        (-1.5, 1e-8, 666666646669.0298384679),
        (-1.5, 0.04, 75.49748872041514507976),
        (-1.5, 0.5, 0.7498909754592094990393),
        (-1.5, 1.19, 0.0748362386143371010745),
        (-1.5, 1.21, 0.07101675295887212162627),
        (-1.5, 5.0, 0.00008350920938474950028854),
        (-1.5, 30.0, 1.756204907039212448159e-17),
        (-1.25, 1e-8, 7999999603.921332781222),
        (-1.25, 0.04, 39.63913118699897306428),
        (-1.25, 0.5, 0.6970510791161563894983),
        (-1.25, 1.19, 0.08400902495488682972217),
        (-1.25, 1.21, 0.0800115113253512975332),
        (-1.25, 5.0, 0.000128949688889964522427),
        (-1.25, 30.0, 4.141184002257574760367e-17),
    ];

    #[test]
    fn matches_reference_values() {
        for &(a, y, want) in REFS {
            let got = gamma_upper(a, y);
            let rel = ((got - want) / want).abs();
            // the downward recurrence loses precision near integer shapes and
            // for y in the crossover region; 5e-12 covers the worst case here
            assert!(
                rel < 5e-12,
                "Gamma({a}, {y}): got {got:e}, want {want:e}, rel {rel:e}"
            );
        }
    }

    #[test]
    fn vanishes_for_huge_argument() {
        assert_eq!(gamma_upper(0.5, 800.0), 0.0);
    }
}

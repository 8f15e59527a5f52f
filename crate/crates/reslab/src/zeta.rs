//! Dynamical zeta functions evaluated from period-class data.
//!
//! Three closely related objects share the class table. The weighted zeta
//! `zeta1` is `exp(-S)` with `S = sum_classes (w_t / t) e^{i lambda t}`;
//! its logarithmic derivative is the direct class sum `(1/i) sum w_t
//! e^{i lambda t}`. The Ruelle zeta is a product over primitive orbits.
//! All three converge only above the weight-growth abscissa; continuation
//! below it goes through the factored lattice-line product instead, which
//! is entire in `lambda` and shares its zero set with `zeta1`.

use crate::systems::PeriodicOrbitData;
use crate::{C64, Error, Result};

/// One factor `(1 - rate * e^{i lambda spacing})` of the zeta product.
/// Its zeros form a horizontal line of resonances at height
/// `ln|rate| / spacing`, spaced `2 pi / spacing` apart.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LatticeLine {
    pub rate: C64,
    pub spacing: f64,
}

/// A truncated evaluation together with what is known about the error.
///
/// `tail_bound` dominates the omitted tail whenever `heuristic` is false;
/// when the class data certifies no geometric majorant the flag is set and
/// the bound is a best-effort estimate from the last observed term ratio.
#[derive(Clone, Copy, Debug)]
pub struct ZetaEvaluation {
    pub value: C64,
    pub truncation_horizon: f64,
    pub tail_bound: f64,
    pub heuristic: bool,
}

/// Relative floor below which further class terms cannot move the sum.
const TERM_FLOOR: f64 = 1e-16;
/// Consecutive growing terms treated as evidence of divergence.
const DIVERGENCE_RUN: usize = 3;

struct TailEstimate {
    bound: f64,
    heuristic: bool,
}

/// Sums `f(class)` over classes in ascending period order with early
/// stopping and divergence detection; returns the partial sum, the last
/// included term magnitude, and the period reached.
fn class_sum(
    data: &PeriodicOrbitData,
    lambda: C64,
    mut f: impl FnMut(f64, C64) -> C64,
) -> Result<(C64, f64, f64)> {
    let mut sum = C64::new(0.0, 0.0);
    let mut last_mag = 0.0f64;
    let mut reached = 0.0f64;
    let mut growth_run = 0usize;
    let mut prev_mag: Option<f64> = None;
    for class in &data.period_classes {
        let term = f(class.total_period, class.geometric_weight);
        let mag = term.norm();
        if let Some(p) = prev_mag {
            if mag > p {
                growth_run += 1;
                if growth_run >= DIVERGENCE_RUN {
                    return Err(Error::DivergentRegion { lambda });
                }
            } else {
                growth_run = 0;
            }
        }
        prev_mag = Some(mag);
        sum += term;
        last_mag = mag;
        reached = class.total_period;
        if mag < TERM_FLOOR * sum.norm() {
            break;
        }
    }
    Ok((sum, last_mag, reached))
}

/// Geometric tail majorant from the class-tail model: consecutive terms
/// shrink by at least `ratio = weight_ratio * e^{-Im(lambda) spacing}`.
fn tail_after(data: &PeriodicOrbitData, lambda: C64, last_mag: f64) -> TailEstimate {
    match data.class_tail {
        Some(tail) => {
            let ratio = tail.weight_ratio * (-lambda.im * tail.spacing).exp();
            if ratio < 1.0 {
                TailEstimate {
                    bound: last_mag * ratio / (1.0 - ratio),
                    heuristic: false,
                }
            } else {
                TailEstimate {
                    bound: f64::INFINITY,
                    heuristic: true,
                }
            }
        }
        None => TailEstimate {
            bound: last_mag,
            heuristic: true,
        },
    }
}

/// Logarithmic derivative of the weighted zeta: `(1/i) sum_t w_t
/// e^{i lambda t}` over the period classes.
pub fn zeta1_log_derivative(data: &PeriodicOrbitData, lambda: C64) -> Result<ZetaEvaluation> {
    let i = C64::new(0.0, 1.0);
    let (sum, last_mag, reached) =
        class_sum(data, lambda, |t, w| w * (i * lambda * t).exp())?;
    let tail = tail_after(data, lambda, last_mag);
    Ok(ZetaEvaluation {
        value: sum / i,
        truncation_horizon: reached,
        tail_bound: tail.bound,
        heuristic: tail.heuristic,
    })
}

/// The weighted zeta `exp(-sum_t (w_t / t) e^{i lambda t})`.
///
/// The exponent tail propagates to the value multiplicatively: a tail of
/// `s` on the exponent moves the value by at most `|value| (e^s - 1)`.
pub fn zeta1(data: &PeriodicOrbitData, lambda: C64) -> Result<ZetaEvaluation> {
    let i = C64::new(0.0, 1.0);
    let (s, last_mag, reached) =
        class_sum(data, lambda, |t, w| w / t * (i * lambda * t).exp())?;
    let value = (-s).exp();
    let tail = tail_after(data, lambda, last_mag);
    Ok(ZetaEvaluation {
        value,
        truncation_horizon: reached,
        tail_bound: value.norm() * tail.bound.exp_m1(),
        heuristic: tail.heuristic,
    })
}

/// The Ruelle zeta `prod (1 - e^{-lambda T})` over primitive orbit periods
/// up to the horizon.
///
/// Exact (zero tail) when the primitive list is exhaustive; otherwise the
/// tail uses the primitive-count envelope `#orbits(pT) <= 4 E^p / p`.
pub fn ruelle_zeta(data: &PeriodicOrbitData, lambda: C64) -> Result<ZetaEvaluation> {
    let orbits = data
        .primitive_orbits
        .as_ref()
        .ok_or(Error::MissingPrimitiveData)?;
    let mut value = C64::new(1.0, 0.0);
    let mut reached = 0.0f64;
    for orbit in orbits {
        value *= C64::new(1.0, 0.0) - (-lambda * orbit.primitive_period).exp();
        reached = reached.max(orbit.primitive_period);
    }

    if data.primitive_exhaustive {
        return Ok(ZetaEvaluation {
            value,
            truncation_horizon: data.horizon,
            tail_bound: 0.0,
            heuristic: false,
        });
    }

    let spacing = data
        .class_tail
        .map(|t| t.spacing)
        .or_else(|| data.period_classes.first().map(|c| c.total_period));
    let (tail_bound, heuristic) = match (data.primitive_growth, spacing) {
        (Some(growth), Some(spacing)) if spacing > 0.0 => {
            let p_done = (data.horizon / spacing).floor().max(1.0);
            let q = growth * (-lambda.re * spacing).exp();
            let x_next = (-lambda.re * spacing * (p_done + 1.0)).exp();
            if q < 1.0 && x_next <= 0.5 {
                // Omitted log factors: sum of 4 q^p / p over p > P, each
                // |log(1 - x)| <= 2|x|.
                let log_tail = 8.0 * q.powf(p_done + 1.0) / ((p_done + 1.0) * (1.0 - q));
                (value.norm() * log_tail.exp_m1(), false)
            } else {
                (f64::INFINITY, true)
            }
        }
        _ => (f64::INFINITY, true),
    };
    Ok(ZetaEvaluation {
        value,
        truncation_horizon: data.horizon,
        tail_bound,
        heuristic,
    })
}

/// The factored form `prod (1 - rate * e^{i lambda spacing})`: entire in
/// lambda, valid on both sides of the convergence abscissa.
pub fn product_form_zeta1(lines: &[LatticeLine], lambda: C64) -> C64 {
    let i = C64::new(0.0, 1.0);
    let mut value = C64::new(1.0, 0.0);
    for line in lines {
        value *= C64::new(1.0, 0.0) - line.rate * (i * lambda * line.spacing).exp();
    }
    value
}

/// Logarithmic derivative of the factored form:
/// `sum -i T rate e^{i lambda T} / (1 - rate e^{i lambda T})`.
pub fn product_form_log_derivative(lines: &[LatticeLine], lambda: C64) -> C64 {
    let i = C64::new(0.0, 1.0);
    let mut sum = C64::new(0.0, 0.0);
    for line in lines {
        let g = line.rate * (i * lambda * line.spacing).exp();
        sum += -i * line.spacing * g / (C64::new(1.0, 0.0) - g);
    }
    sum
}

/// Least-squares slope of `ln |w_t|` against `t` over the period classes:
/// the growth abscissa separating convergent from divergent half-planes.
/// Classes with vanishing weight are skipped; at least four usable classes
/// are required.
pub fn abscissa_estimate(data: &PeriodicOrbitData) -> Result<f64> {
    let points: Vec<(f64, f64)> = data
        .period_classes
        .iter()
        .filter(|c| c.geometric_weight.norm() > 0.0)
        .map(|c| (c.total_period, c.geometric_weight.norm().ln()))
        .collect();
    if points.len() < 4 {
        return Err(Error::InsufficientData {
            reason: format!(
                "abscissa fit needs at least 4 classes with nonzero weight, got {}",
                points.len()
            ),
        });
    }
    let n = points.len() as f64;
    let mean_x = points.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mean_x).powi(2)).sum();
    let sxy: f64 = points
        .iter()
        .map(|p| (p.0 - mean_x) * (p.1 - mean_y))
        .sum();
    Ok(sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::orbit::PrimitiveOrbit;
    use crate::systems::{
        classes_from_orbits, horseshoe_orbits, toral_suspension_period_classes,
        HorseshoeSuspension, ToralSuspension,
    };

    fn cat_data(max_multiple: u32) -> PeriodicOrbitData {
        toral_suspension_period_classes(
            &ToralSuspension {
                matrix: [[2, 1], [1, 1]],
                roof: 1.0,
            },
            max_multiple,
        )
        .unwrap()
    }

    fn horseshoe_data(max_word: u32) -> PeriodicOrbitData {
        horseshoe_orbits(
            &HorseshoeSuspension {
                expansion: 4.0,
                contraction: 0.25,
                symbol_count: 2,
                symbol_weights: vec![1.0, 1.0],
                roof: 1.0,
            },
            max_word,
        )
        .unwrap()
    }

    fn single_orbit_data(rate: f64, horizon: f64) -> PeriodicOrbitData {
        let orbit = PrimitiveOrbit::new(
            "o",
            1.0,
            vec![C64::new(rate.exp(), 0.0)],
            1,
            true,
            vec![C64::new(1.0, 0.0)],
        )
        .unwrap();
        classes_from_orbits(&[orbit], horizon).unwrap()
    }

    #[test]
    fn log_derivative_matches_closed_form() {
        // Constant-roof classes with unit weight: the sum telescopes to
        // e^{i lambda} / (i (1 - e^{i lambda})).
        let data = cat_data(60);
        let lambda = C64::new(0.0, 3.0);
        let eval = zeta1_log_derivative(&data, lambda).unwrap();
        let expect = C64::new(0.0, -0.052395696491255952);
        assert!((eval.value - expect).norm() < 1e-12, "got {}", eval.value);
        assert!(!eval.heuristic);
        // The class sum stops once terms fall below the relative term
        // floor, so the tail bound lands near that floor, not at the
        // horizon-60 scale.
        assert!(eval.tail_bound < 1e-18, "tail = {}", eval.tail_bound);
    }

    #[test]
    fn log_derivative_horseshoe_value() {
        let data = horseshoe_data(60);
        let eval = zeta1_log_derivative(&data, C64::new(0.0, 5.0)).unwrap();
        let expect = C64::new(0.0, -0.0060022395708014496);
        assert!((eval.value - expect).norm() < 1e-14, "got {}", eval.value);
    }

    #[test]
    fn zeta1_closed_form_on_constant_roof() {
        let data = cat_data(60);
        // At lambda with positive imaginary part the class sum is the
        // Taylor series of -log(1 - e^{i lambda}).
        let lambda = C64::new(1.0, 2.0);
        let eval = zeta1(&data, lambda).unwrap();
        let expect = C64::new(1.0, 0.0) - (C64::new(0.0, 1.0) * lambda).exp();
        assert!((eval.value - expect).norm() < 1e-14);
        assert!(!eval.heuristic);
        assert!((eval.value - expect).norm() <= eval.tail_bound + 1e-15);
    }

    #[test]
    fn zeta1_at_real_argument_converges_conditionally() {
        // At real lambda = pi the series alternates: truncation error at
        // horizon H decays only like 1/H, so the tolerance here is loose
        // and the tail report is flagged (ratio exactly 1).
        let data = cat_data(4000);
        let eval = zeta1(&data, C64::new(std::f64::consts::PI, 0.0)).unwrap();
        assert!((eval.value.re - 2.0).abs() < 1e-3, "got {}", eval.value);
        assert!(eval.value.im.abs() < 1e-10);
        assert!(eval.heuristic);
    }

    #[test]
    fn zeta1_vanishes_at_lattice_points() {
        let data = cat_data(2000);
        let eval = zeta1(&data, C64::new(0.0, 1e-3)).unwrap();
        // Near the resonance at 0 the value is small, reaching 0 in the
        // limit; with Im = 1e-3 the product form gives 1 - e^{-1e-3}.
        let expect = -(C64::new(0.0, 1e-3) * C64::new(0.0, 1.0)).exp() + 1.0;
        assert!((eval.value - expect).norm() < 2e-4, "got {}", eval.value);
    }

    #[test]
    fn empty_data_is_the_empty_product() {
        let data = PeriodicOrbitData::new(vec![], None, 1.0, None, None, true).unwrap();
        let z = zeta1(&data, C64::new(1.0, 1.0)).unwrap();
        assert_eq!(z.value, C64::new(1.0, 0.0));
        let d = zeta1_log_derivative(&data, C64::new(1.0, 1.0)).unwrap();
        assert_eq!(d.value, C64::new(0.0, 0.0));
    }

    #[test]
    fn divergence_guard_trips_below_abscissa() {
        let data = cat_data(60);
        match zeta1(&data, C64::new(0.0, -3.0)) {
            Err(Error::DivergentRegion { .. }) => {}
            other => panic!("expected divergence guard, got {other:?}"),
        }
        assert!(matches!(
            zeta1_log_derivative(&data, C64::new(0.0, -3.0)),
            Err(Error::DivergentRegion { .. })
        ));
    }

    #[test]
    fn ruelle_zeta_on_synthesized_primitives() {
        // Horizon 3 keeps the primitive list tiny (1 + 2 + 5 orbits); the
        // bracket product over their periods is frozen from a direct
        // high-precision evaluation.
        let data = cat_data(3);
        let eval = ruelle_zeta(&data, C64::new(1.0, 0.0)).unwrap();
        assert!(
            (eval.value.re - 0.366100290323872605).abs() < 1e-15,
            "got {}",
            eval.value
        );
        assert!(eval.value.im.abs() < 1e-18);
        // Re = 1 sits barely above the entropy abscissa ln((3+sqrt 5)/2),
        // so the certified tail is finite but enormous.
        assert!(!eval.heuristic);
        assert!(eval.tail_bound.is_finite());

        // Deeper in the convergence half-plane the tail tightens and must
        // dominate the next horizon's correction.
        let at3 = ruelle_zeta(&cat_data(3), C64::new(3.0, 0.0)).unwrap();
        let at6 = ruelle_zeta(&cat_data(6), C64::new(3.0, 0.0)).unwrap();
        assert!(!at3.heuristic);
        assert!(at3.tail_bound < 1e-2);
        assert!((at3.value - at6.value).norm() <= at3.tail_bound);
    }

    #[test]
    fn ruelle_zeta_requires_primitives() {
        let data = cat_data(60);
        assert!(data.primitive_orbits.is_none());
        assert!(matches!(
            ruelle_zeta(&data, C64::new(1.0, 0.0)),
            Err(Error::MissingPrimitiveData)
        ));
    }

    #[test]
    fn ruelle_zeta_exact_for_exhaustive_lists() {
        let data = single_orbit_data(0.7, 5.0);
        let lambda = C64::new(0.3, 0.4);
        let eval = ruelle_zeta(&data, lambda).unwrap();
        let expect = C64::new(1.0, 0.0) - (-lambda).exp();
        assert!((eval.value - expect).norm() < 1e-15);
        assert_eq!(eval.tail_bound, 0.0);
        assert!(!eval.heuristic);
    }

    #[test]
    fn ruelle_zeta_approaches_one_deep_in_the_plane() {
        let data = cat_data(3);
        let eval = ruelle_zeta(&data, C64::new(50.0, 0.0)).unwrap();
        assert!((eval.value - C64::new(1.0, 0.0)).norm() < 1e-20);
    }

    #[test]
    fn product_form_basics() {
        let lines = [LatticeLine {
            rate: C64::new(1.0, 0.0),
            spacing: 1.0,
        }];
        let at_pi = product_form_zeta1(&lines, C64::new(std::f64::consts::PI, 0.0));
        assert!((at_pi - C64::new(2.0, 0.0)).norm() < 1e-15);
        assert_eq!(product_form_zeta1(&[], C64::new(1.0, 1.0)), C64::new(1.0, 0.0));
        // Zero exactly on the lattice.
        let at_zero = product_form_zeta1(&lines, C64::new(0.0, 0.0));
        assert!(at_zero.norm() < 1e-15);
    }

    #[test]
    fn product_form_agrees_with_class_sum_above_abscissa() {
        let data = horseshoe_data(60);
        let lines = crate::systems::lattice_lines(
            &crate::systems::SystemSpec::HorseshoeSuspension(HorseshoeSuspension {
                expansion: 4.0,
                contraction: 0.25,
                symbol_count: 2,
                symbol_weights: vec![1.0, 1.0],
                roof: 1.0,
            }),
            1e-14,
        )
        .unwrap();
        let lambda = C64::new(0.0, 4.0);
        let from_classes = zeta1(&data, lambda).unwrap().value;
        let from_product = product_form_zeta1(&lines, lambda);
        assert!(
            (from_classes - C64::new(0.983804043911900965, 0.0)).norm() < 1e-12,
            "class sum drifted: {from_classes}"
        );
        assert!((from_classes - from_product).norm() < 1e-12);

        let dlog_classes = zeta1_log_derivative(&data, lambda).unwrap().value;
        let dlog_product = product_form_log_derivative(&lines, lambda);
        assert!((dlog_classes - dlog_product).norm() < 1e-12);
    }

    #[test]
    fn abscissa_estimates() {
        // Unimodular weights: flat growth.
        assert!(abscissa_estimate(&cat_data(10)).unwrap().abs() < 1e-10);
        // Horseshoe weights decay like 2^{-p}.
        let a = abscissa_estimate(&horseshoe_data(60)).unwrap();
        assert!((a - (-0.6931)).abs() < 0.02, "got {a}");
        // Single orbit with rate e^{0.7}: weights decay like e^{-0.7 t}.
        let a = abscissa_estimate(&single_orbit_data(0.7, 60.0)).unwrap();
        assert!((a - (-0.7)).abs() < 0.02, "got {a}");
    }

    #[test]
    fn abscissa_needs_four_classes() {
        assert!(matches!(
            abscissa_estimate(&cat_data(3)),
            Err(Error::InsufficientData { .. })
        ));
    }

    #[test]
    fn tail_bound_honesty_under_horizon_doubling() {
        let data30 = horseshoe_data(30);
        let data60 = horseshoe_data(60);
        for &lambda in &[C64::new(0.7, 2.0), C64::new(-3.0, 1.0), C64::new(0.0, 0.5)] {
            let short = zeta1_log_derivative(&data30, lambda).unwrap();
            let long = zeta1_log_derivative(&data60, lambda).unwrap();
            assert!(!short.heuristic);
            assert!(
                (short.value - long.value).norm() <= short.tail_bound * (1.0 + 1e-9) + 1e-18,
                "tail bound dishonest at {lambda}"
            );
        }
    }
}

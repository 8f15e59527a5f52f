//! Resonance counting statistics: disk-strip counts, per-unit-window
//! maxima, and least-squares growth-exponent fits over a radius grid.

use crate::resonance::{Resonance, WindowSpec};
use crate::{Error, Result};

/// Counting summary over a radius grid at fixed strip depth.
#[derive(Clone, Debug)]
pub struct CountReport {
    /// `(E, N(E))` rows, ordered by increasing `E`.
    pub strip_counts: Vec<(f64, u64)>,
    /// Largest multiplicity-weighted count over any window of real-part
    /// width 2 inside the strip.
    pub per_unit_max: u64,
    /// Least-squares slope of `log N` against `log E`.
    pub fitted_exponent: f64,
    /// Two standard errors of the fitted slope.
    pub fit_half_width: f64,
}

impl CountReport {
    /// Key: value rendering of the scalar fields.
    pub fn to_key_value(&self) -> String {
        format!(
            "per_unit_max: {}\nfitted_exponent: {}\nfit_half_width: {}\n",
            self.per_unit_max, self.fitted_exponent, self.fit_half_width
        )
    }

    /// CSV rendering of the count grid.
    pub fn strip_counts_csv(&self) -> String {
        let mut out = String::from("e,count\n");
        for (e, n) in &self.strip_counts {
            out.push_str(&format!("{e},{n}\n"));
        }
        out
    }
}

/// Multiplicity-weighted count of resonances with `|mu| <= e` and
/// `Im mu > -beta`. When a completeness region is supplied it must contain
/// the queried disk-strip intersection, otherwise the count would silently
/// undercount and the call is refused.
pub fn count_in_strip(
    resonances: &[Resonance],
    completeness: Option<&WindowSpec>,
    e: f64,
    beta: f64,
) -> Result<u64> {
    if !(e > 0.0) || !e.is_finite() {
        return Err(Error::InvalidWindow {
            reason: format!("strip radius must be positive and finite, got {e}"),
        });
    }
    if !beta.is_finite() {
        return Err(Error::InvalidWindow {
            reason: format!("strip depth must be finite, got {beta}"),
        });
    }
    if let Some(region) = completeness {
        let covered = region.re_min <= -e
            && region.re_max >= e
            && region.im_min <= -beta
            && region.im_max >= e;
        if !covered {
            return Err(Error::IncompleteSource {
                validated: format!(
                    "[{}, {}] x [{}, {}]",
                    region.re_min, region.re_max, region.im_min, region.im_max
                ),
                needed: format!("[{}, {}] x [{}, {}]", -e, e, -beta, e),
            });
        }
    }
    Ok(resonances
        .iter()
        .filter(|r| r.value.norm() <= e && r.value.im > -beta)
        .map(|r| r.multiplicity as u64)
        .sum())
}

/// Largest multiplicity-weighted count in any closed window
/// `|Re mu - E| <= 1` over points with `Im mu > -beta`.
pub fn per_unit_window_max(resonances: &[Resonance], beta: f64) -> u64 {
    let mut points: Vec<(f64, u64)> = resonances
        .iter()
        .filter(|r| r.value.im > -beta)
        .map(|r| (r.value.re, r.multiplicity as u64))
        .collect();
    points.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut best = 0;
    let mut sum = 0;
    let mut lo = 0;
    for hi in 0..points.len() {
        sum += points[hi].1;
        while points[hi].0 - points[lo].0 > 2.0 + crate::MERGE_TOLERANCE {
            sum -= points[lo].1;
            lo += 1;
        }
        best = best.max(sum);
    }
    best
}

/// Count over the radius grid, fit `log N` against `log E` by least squares,
/// and sweep the per-unit-window maximum. The grid needs at least six radii
/// and at least one resonance inside the smallest one, or the fit is
/// statistically meaningless and refused.
pub fn growth_fit(
    resonances: &[Resonance],
    completeness: Option<&WindowSpec>,
    e_grid: &[f64],
    beta: f64,
) -> Result<CountReport> {
    if e_grid.len() < 6 {
        return Err(Error::InsufficientData {
            reason: format!("growth fit needs at least 6 strip radii, got {}", e_grid.len()),
        });
    }
    let mut grid = e_grid.to_vec();
    grid.sort_by(f64::total_cmp);
    if grid.windows(2).any(|pair| pair[1] - pair[0] <= 0.0) {
        return Err(Error::InsufficientData {
            reason: "strip radii must be distinct".into(),
        });
    }
    let mut strip_counts = Vec::with_capacity(grid.len());
    for &e in &grid {
        strip_counts.push((e, count_in_strip(resonances, completeness, e, beta)?));
    }
    if strip_counts[0].1 == 0 {
        return Err(Error::InsufficientData {
            reason: format!("no resonances inside the smallest strip radius {}", grid[0]),
        });
    }
    let xs: Vec<f64> = strip_counts.iter().map(|(e, _)| e.ln()).collect();
    let ys: Vec<f64> = strip_counts.iter().map(|(_, n)| (*n as f64).ln()).collect();
    let n = xs.len() as f64;
    let x_mean = xs.iter().sum::<f64>() / n;
    let y_mean = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - x_mean).powi(2)).sum();
    let sxy: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (x - x_mean) * (y - y_mean))
        .sum();
    let slope = sxy / sxx;
    let intercept = y_mean - slope * x_mean;
    let rss: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - (intercept + slope * x)).powi(2))
        .sum();
    let stderr = (rss / (n - 2.0) / sxx).sqrt();
    Ok(CountReport {
        strip_counts,
        per_unit_max: per_unit_window_max(resonances, beta),
        fitted_exponent: slope,
        fit_half_width: 2.0 * stderr,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::resonance::Provenance;
    use crate::C64;

    const TAU: f64 = std::f64::consts::TAU;

    fn point(re: f64, im: f64, multiplicity: u32) -> Resonance {
        Resonance {
            value: C64::new(re, im),
            multiplicity,
            provenance: Provenance::ExactLattice,
        }
    }

    /// Integer comb `2 pi n` out to `|n| <= reach`, every point simple.
    fn cat_lattice(reach: i64) -> Vec<Resonance> {
        (-reach..=reach)
            .map(|n| point(TAU * n as f64, 0.0, 1))
            .collect()
    }

    /// Two horizontal lines at the first two horseshoe depths, with the
    /// deeper one doubled.
    fn horseshoe_lattice(reach: i64) -> Vec<Resonance> {
        let mut out = Vec::new();
        for n in -reach..=reach {
            out.push(point(TAU * n as f64, -(2.0f64.ln()), 1));
            out.push(point(TAU * n as f64, -(8.0f64.ln()), 2));
        }
        out
    }

    #[test]
    fn strip_counts_on_integer_comb() {
        let lattice = cat_lattice(300);
        assert_eq!(count_in_strip(&lattice, None, 100.0, 0.5).unwrap(), 31);
        assert_eq!(count_in_strip(&lattice, None, 5.0, 0.5).unwrap(), 1);
        let expected = [
            (50.0, 15),
            (100.0, 31),
            (200.0, 63),
            (400.0, 127),
            (800.0, 255),
            (1600.0, 509),
        ];
        for (e, n) in expected {
            assert_eq!(count_in_strip(&lattice, None, e, 0.5).unwrap(), n, "E = {e}");
        }
    }

    #[test]
    fn empty_strip_counts_zero() {
        let lattice = horseshoe_lattice(10);
        // Everything sits at depth ln 2 or below.
        assert_eq!(count_in_strip(&lattice, None, 5.0, 0.5).unwrap(), 0);
    }

    #[test]
    fn count_monotone_in_radius_and_depth() {
        let lattice = horseshoe_lattice(40);
        let mut prev = 0;
        for e in [1.0, 10.0, 50.0, 100.0, 200.0] {
            let n = count_in_strip(&lattice, None, e, 2.5).unwrap();
            assert!(n >= prev);
            prev = n;
        }
        let shallow = count_in_strip(&lattice, None, 100.0, 1.0).unwrap();
        let deep = count_in_strip(&lattice, None, 100.0, 2.5).unwrap();
        assert!(deep >= shallow);
    }

    #[test]
    fn completeness_region_enforced() {
        let lattice = cat_lattice(300);
        let region = WindowSpec::new(-100.0, 100.0, -0.5, 100.0).unwrap();
        assert_eq!(
            count_in_strip(&lattice, Some(&region), 100.0, 0.5).unwrap(),
            31
        );
        assert!(matches!(
            count_in_strip(&lattice, Some(&region), 200.0, 0.5),
            Err(Error::IncompleteSource { .. })
        ));
        assert!(matches!(
            count_in_strip(&lattice, Some(&region), 100.0, 0.7),
            Err(Error::IncompleteSource { .. })
        ));
    }

    #[test]
    fn growth_fit_on_integer_comb() {
        let lattice = cat_lattice(300);
        let grid = [50.0, 100.0, 200.0, 400.0, 800.0, 1600.0];
        let report = growth_fit(&lattice, None, &grid, 0.5).unwrap();
        assert!((report.fitted_exponent - 1.0).abs() <= 0.02);
        assert!(report.fit_half_width.is_finite() && report.fit_half_width >= 0.0);
        assert_eq!(report.per_unit_max, 1);
        assert_eq!(report.strip_counts.len(), 6);
        assert_eq!(report.strip_counts[5], (1600.0, 509));
    }

    #[test]
    fn per_unit_window_on_stacked_lines() {
        let lattice = horseshoe_lattice(260);
        assert_eq!(per_unit_window_max(&lattice, 2.5), 3);
        // Shallow strip sees only the simple line.
        assert_eq!(per_unit_window_max(&lattice, 1.0), 1);
        // The maximum does not depend on how far the lattice extends.
        assert_eq!(per_unit_window_max(&horseshoe_lattice(60), 2.5), 3);
    }

    #[test]
    fn growth_witness_increases() {
        let lattice = cat_lattice(300);
        let at = |e: f64| count_in_strip(&lattice, None, e, 0.5).unwrap() as f64;
        assert!(at(100.0) / 100.0f64.powf(0.9) < at(1000.0) / 1000.0f64.powf(0.9));
    }

    #[test]
    fn growth_fit_guards() {
        let lattice = cat_lattice(300);
        assert!(matches!(
            growth_fit(&lattice, None, &[50.0, 100.0, 200.0, 400.0, 800.0], 0.5),
            Err(Error::InsufficientData { .. })
        ));
        let dup = [50.0, 50.0, 100.0, 200.0, 400.0, 800.0];
        assert!(growth_fit(&lattice, None, &dup, 0.5).is_err());
        // Shifted comb with nothing near the origin.
        let empty_small: Vec<Resonance> = (60..=300).map(|n| point(TAU * n as f64, 0.0, 1)).collect();
        let grid = [50.0, 100.0, 200.0, 400.0, 800.0, 1600.0];
        assert!(matches!(
            growth_fit(&empty_small, None, &grid, 0.5),
            Err(Error::InsufficientData { .. })
        ));
    }

    #[test]
    fn report_rendering_is_stable() {
        let report = CountReport {
            strip_counts: vec![(50.0, 15), (100.0, 31)],
            per_unit_max: 1,
            fitted_exponent: 1.0157,
            fit_half_width: 0.02,
        };
        assert_eq!(
            report.to_key_value(),
            "per_unit_max: 1\nfitted_exponent: 1.0157\nfit_half_width: 0.02\n"
        );
        assert_eq!(report.strip_counts_csv(), "e,count\n50,15\n100,31\n");
    }
}

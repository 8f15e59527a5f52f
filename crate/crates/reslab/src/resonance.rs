//! Resonance sets: exact lattices read off product representations, and
//! numerical localization by argument-principle counting plus damped
//! Newton refinement.
//!
//! Numerical localization always works on the factored line product, which
//! is entire in `lambda`; the class-sum form of `zeta_1` diverges below the
//! weight-growth abscissa where most resonances live. The two forms share
//! their zero set wherever both converge.

use rayon::prelude::*;

use crate::orbit::{FixedPointDatum, PrimitiveOrbit};
use crate::quad::adaptive_simpson;
use crate::systems::ENUMERATION_BUDGET;
use crate::zeta::{product_form_log_derivative, product_form_zeta1, LatticeLine};
use crate::{C64, Error, Result, MERGE_TOLERANCE};

const TWO_PI: f64 = std::f64::consts::TAU;
/// Minimum sampled `|zeta_1|` on a contour before the window is nudged.
const EDGE_CLEARANCE: f64 = 1e-6;
/// Minimum samples per contour edge in the clearance probe; long edges get
/// proportionally more so the density per oscillation stays fixed.
const PROBE_SAMPLES: usize = 65;
/// Absolute tolerance per contour edge in the winding integral; four edges
/// stay well inside the 0.1 integer guard.
const EDGE_TOLERANCE: f64 = 2.5e-4;
/// Cap on forced quadrature subdivisions per edge (and on probe samples,
/// scaled), so degenerate oscillation hints cannot stall the pipeline.
const MAX_EDGE_CHUNKS: usize = 16_384;
/// Contour half-width used to read a converged zero's multiplicity.
const MULTIPLICITY_RADIUS: f64 = 1e-5;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Provenance {
    /// Read off a closed-form lattice; exact up to f64 round-off.
    ExactLattice,
    /// Found by counting and Newton refinement.
    Located,
}

impl Provenance {
    pub fn as_str(self) -> &'static str {
        match self {
            Provenance::ExactLattice => "exact",
            Provenance::Located => "located",
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct Resonance {
    pub value: C64,
    /// At least 1; lattice collisions and high-order zeros merge here.
    pub multiplicity: u32,
    pub provenance: Provenance,
}

/// Closed rectangle in the lambda plane. Containment is inclusive, with a
/// merge-tolerance slack so lattice points on the boundary are kept.
#[derive(Clone, Copy, Debug)]
pub struct WindowSpec {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
}

impl WindowSpec {
    pub fn new(re_min: f64, re_max: f64, im_min: f64, im_max: f64) -> Result<Self> {
        let all_finite =
            re_min.is_finite() && re_max.is_finite() && im_min.is_finite() && im_max.is_finite();
        if !all_finite || re_min >= re_max || im_min >= im_max {
            return Err(Error::InvalidWindow {
                reason: format!(
                    "need re_min < re_max and im_min < im_max, got [{re_min}, {re_max}] x [{im_min}, {im_max}]"
                ),
            });
        }
        Ok(WindowSpec {
            re_min,
            re_max,
            im_min,
            im_max,
        })
    }

    pub fn contains(&self, lambda: C64) -> bool {
        lambda.re >= self.re_min - MERGE_TOLERANCE
            && lambda.re <= self.re_max + MERGE_TOLERANCE
            && lambda.im >= self.im_min - MERGE_TOLERANCE
            && lambda.im <= self.im_max + MERGE_TOLERANCE
    }

    fn expanded(&self, delta: f64) -> WindowSpec {
        WindowSpec {
            re_min: self.re_min - delta,
            re_max: self.re_max + delta,
            im_min: self.im_min - delta,
            im_max: self.im_max + delta,
        }
    }

    fn corners(&self) -> [C64; 4] {
        [
            C64::new(self.re_min, self.im_min),
            C64::new(self.re_max, self.im_min),
            C64::new(self.re_max, self.im_max),
            C64::new(self.re_min, self.im_max),
        ]
    }
}

/// Resonance spectrum of the underlying map, as (value, multiplicity)
/// pairs; zero is excluded (its logarithm defines no resonance line).
#[derive(Clone, Debug)]
pub struct MapResonanceSet {
    pub entries: Vec<(C64, u32)>,
}

impl MapResonanceSet {
    pub fn new(entries: Vec<(C64, u32)>) -> Result<Self> {
        for &(r, mult) in &entries {
            if r.norm() == 0.0 {
                return Err(Error::ZeroMapResonance);
            }
            if !r.is_finite() || mult == 0 {
                return Err(Error::InvalidSystem {
                    reason: format!("map resonance ({r}, multiplicity {mult}) is not usable"),
                });
            }
        }
        Ok(MapResonanceSet { entries })
    }
}

/// Anchor-merge points within the merge tolerance, summing multiplicity
/// (each input point is one lattice representation).
pub(crate) fn merge_representations(mut points: Vec<(C64, u32)>) -> Vec<(C64, u32)> {
    points.sort_by(|a, b| a.0.re.total_cmp(&b.0.re).then_with(|| a.0.im.total_cmp(&b.0.im)));
    let mut merged: Vec<(C64, u32)> = Vec::with_capacity(points.len());
    for (v, m) in points {
        match merged.last_mut() {
            Some((anchor, count))
                if (v.re - anchor.re).abs() <= MERGE_TOLERANCE
                    && (v.im - anchor.im).abs() <= MERGE_TOLERANCE =>
            {
                *count += m;
            }
            _ => merged.push((v, m)),
        }
    }
    merged
}

pub(crate) fn into_resonances(points: Vec<(C64, u32)>, provenance: Provenance) -> Vec<Resonance> {
    merge_representations(points)
        .into_iter()
        .map(|(value, multiplicity)| Resonance {
            value,
            multiplicity,
            provenance,
        })
        .collect()
}

/// Lift the map spectrum through a constant-roof suspension: each map
/// resonance `r` yields the vertical-translate line
/// `lambda = (i Log r + 2 pi n) / T`, with collisions merged.
pub fn exact_suspension_lattice(
    map_resonances: &MapResonanceSet,
    roof: f64,
    window: &WindowSpec,
) -> Result<Vec<Resonance>> {
    if !(roof > 0.0 && roof.is_finite()) {
        return Err(Error::InvalidSystem {
            reason: format!("roof must be positive and finite, got {roof}"),
        });
    }
    let mut points: Vec<(C64, u32)> = Vec::new();
    for &(r, mult) in &map_resonances.entries {
        if r.norm() == 0.0 {
            return Err(Error::ZeroMapResonance);
        }
        let im = r.norm().ln() / roof;
        if im < window.im_min - MERGE_TOLERANCE || im > window.im_max + MERGE_TOLERANCE {
            continue;
        }
        let arg = r.arg();
        // Re lambda = (2 pi n - arg r) / T.
        let n_min = ((window.re_min - MERGE_TOLERANCE) * roof + arg) / TWO_PI;
        let n_max = ((window.re_max + MERGE_TOLERANCE) * roof + arg) / TWO_PI;
        for n in (n_min.ceil() as i64)..=(n_max.floor() as i64) {
            points.push((C64::new((TWO_PI * n as f64 - arg) / roof, im), mult));
            if points.len() as u64 > ENUMERATION_BUDGET {
                return Err(Error::BudgetExceeded {
                    projected: points.len() as u128,
                    budget: ENUMERATION_BUDGET,
                });
            }
        }
    }
    Ok(into_resonances(points, Provenance::ExactLattice))
}

/// Shared k-lattice walk: starting from `base`, add combinations of the
/// (strictly Im-decreasing) increments and emit every representation that
/// lands in the window, translated by `2 pi n / T` when `translate` is set.
struct LatticeWalk<'a> {
    increments: &'a [C64],
    window: &'a WindowSpec,
    /// Some((period)) for closed orbits (adds the n-translates), None for
    /// fixed points.
    translate: Option<f64>,
    points: Vec<(C64, u32)>,
}

impl LatticeWalk<'_> {
    fn emit(&mut self, lambda_t: C64) -> Result<()> {
        match self.translate {
            Some(t) => {
                let im = lambda_t.im / t;
                if im > self.window.im_max + MERGE_TOLERANCE {
                    return Ok(());
                }
                let n_min = ((self.window.re_min - MERGE_TOLERANCE) * t - lambda_t.re) / TWO_PI;
                let n_max = ((self.window.re_max + MERGE_TOLERANCE) * t - lambda_t.re) / TWO_PI;
                for n in (n_min.ceil() as i64)..=(n_max.floor() as i64) {
                    let re = (lambda_t.re + TWO_PI * n as f64) / t;
                    self.push(C64::new(re, im))?;
                }
            }
            None => {
                let lambda = lambda_t;
                if lambda.im <= self.window.im_max + MERGE_TOLERANCE
                    && lambda.re >= self.window.re_min - MERGE_TOLERANCE
                    && lambda.re <= self.window.re_max + MERGE_TOLERANCE
                {
                    self.push(lambda)?;
                }
            }
        }
        Ok(())
    }

    fn push(&mut self, lambda: C64) -> Result<()> {
        self.points.push((lambda, 1));
        if self.points.len() as u64 > ENUMERATION_BUDGET {
            return Err(Error::BudgetExceeded {
                projected: self.points.len() as u128,
                budget: ENUMERATION_BUDGET,
            });
        }
        Ok(())
    }

    fn floor_t(&self) -> f64 {
        match self.translate {
            Some(t) => (self.window.im_min - MERGE_TOLERANCE) * t,
            None => self.window.im_min - MERGE_TOLERANCE,
        }
    }

    fn descend(&mut self, z: C64, from: usize) -> Result<()> {
        // Every increment strictly lowers Im, so pruning here is complete.
        if z.im < self.floor_t() {
            return Ok(());
        }
        self.emit(z)?;
        for j in from..self.increments.len() {
            let inc = self.increments[j];
            self.descend(z + inc, j)?;
        }
        Ok(())
    }
}

/// Exact resonances of one closed orbit: for every weight eigenvalue `a`
/// and multi-index k (stable entries >= 1, unstable >= 0),
/// `lambda = (-i mu + i sum_st k_j nu_j - i sum_un k_j nu_j + 2 pi n
/// + pi eps) / T` with `a = e^{-mu}` and `e_j = e^{-nu_j}`. Multiplicity
/// is the number of representations landing on the same point.
pub fn exact_morse_smale_closed_orbit(
    orbit: &PrimitiveOrbit,
    window: &WindowSpec,
) -> Result<Vec<Resonance>> {
    let t = orbit.primitive_period;
    let eps = orbit.orientation_exponent() as f64;
    let i = C64::new(0.0, 1.0);

    // Per-direction increments in the z = lambda T plane; all have
    // strictly negative imaginary part (hyperbolicity).
    let mut increments: Vec<C64> = Vec::new();
    let mut stable_base = C64::new(0.0, 0.0);
    for e in &orbit.backward_poincare_eigenvalues {
        let nu = -e.ln();
        if e.norm() > 1.0 {
            increments.push(i * nu);
            stable_base += i * nu;
        } else {
            increments.push(-i * nu);
        }
    }

    let mut walk = LatticeWalk {
        increments: &increments,
        window,
        translate: Some(t),
        points: Vec::new(),
    };
    for a in &orbit.weight_eigenvalues {
        if a.norm() == 0.0 {
            continue;
        }
        let mu = -a.ln();
        let base = -i * mu + stable_base + C64::new(std::f64::consts::PI * eps, 0.0);
        walk.descend(base, 0)?;
    }
    Ok(into_resonances(walk.points, Provenance::ExactLattice))
}

/// Exact resonances of one hyperbolic fixed point:
/// `lambda = i (-mu_l + sum_st k_j g_j - sum_un k_j g_j)` over generator
/// eigenvalues `g_j` (stable entries k_j >= 1, unstable >= 0) and weight
/// generator eigenvalues `mu_l`. Fixed points contribute no zeros to the
/// orbit zeta function; their lattice exists only on the resolvent side.
pub fn exact_fixed_point_lattice(
    fp: &FixedPointDatum,
    window: &WindowSpec,
) -> Result<Vec<Resonance>> {
    let i = C64::new(0.0, 1.0);
    // Work in the z plane with lambda = i z: Im lambda = Re z... rotated
    // here so the shared walk's Im-pruning applies: store z' = i z directly.
    let mut increments: Vec<C64> = Vec::new();
    let mut stable_base = C64::new(0.0, 0.0);
    for g in &fp.generator_eigenvalues {
        let inc = if g.re < 0.0 { i * g } else { -i * g };
        increments.push(inc);
        if g.re < 0.0 {
            stable_base += inc;
        }
    }
    let mut walk = LatticeWalk {
        increments: &increments,
        window,
        translate: None,
        points: Vec::new(),
    };
    for mu in &fp.weight_generator_eigenvalues {
        let base = -i * mu + stable_base;
        walk.descend(base, 0)?;
    }
    Ok(into_resonances(walk.points, Provenance::ExactLattice))
}

/// Union of the exact lattices of every closed orbit and fixed point,
/// with coincident points merged (summed multiplicity).
pub fn morse_smale_union(
    orbits: &[PrimitiveOrbit],
    fixed_points: &[FixedPointDatum],
    window: &WindowSpec,
) -> Result<Vec<Resonance>> {
    let mut points: Vec<(C64, u32)> = Vec::new();
    for orbit in orbits {
        for r in exact_morse_smale_closed_orbit(orbit, window)? {
            points.push((r.value, r.multiplicity));
        }
    }
    for fp in fixed_points {
        for r in exact_fixed_point_lattice(fp, window)? {
            points.push((r.value, r.multiplicity));
        }
    }
    Ok(into_resonances(points, Provenance::ExactLattice))
}

/// A holomorphic function the localization machinery can evaluate: the
/// value and the logarithmic derivative at a point.
pub trait AnalyticMap: Sync {
    fn value(&self, lambda: C64) -> C64;
    fn log_derivative(&self, lambda: C64) -> C64;

    /// Shortest wavelength of value oscillations along the real axis.
    ///
    /// Contour quadrature seeds its subdivisions below this scale; a plain
    /// adaptive pass over an edge many wavelengths long can alias the
    /// oscillation and converge on a wrong winding number. The default
    /// (infinite) imposes no extra subdivision.
    fn oscillation_wavelength(&self) -> f64 {
        f64::INFINITY
    }
}

/// The factored zeta product over lattice lines; entire, so valid below
/// the class-sum abscissa.
pub struct LineProduct<'a> {
    pub lines: &'a [LatticeLine],
}

impl AnalyticMap for LineProduct<'_> {
    fn value(&self, lambda: C64) -> C64 {
        product_form_zeta1(self.lines, lambda)
    }

    fn log_derivative(&self, lambda: C64) -> C64 {
        product_form_log_derivative(self.lines, lambda)
    }

    fn oscillation_wavelength(&self) -> f64 {
        // Each factor 1 - r e^{i lambda T} oscillates with wavelength
        // 2 pi / T along the real axis.
        let max_spacing = self.lines.iter().map(|l| l.spacing).fold(0.0, f64::max);
        if max_spacing > 0.0 {
            TWO_PI / max_spacing
        } else {
            f64::INFINITY
        }
    }
}

/// How many sub-wavelength pieces an edge of this length needs; 1 when the
/// wavelength hint is infinite or the edge is short.
fn edge_chunks(f: &dyn AnalyticMap, len: f64, per_wavelength: f64) -> usize {
    let wl = f.oscillation_wavelength();
    if !wl.is_finite() || wl <= 0.0 {
        return 1;
    }
    ((len * per_wavelength / wl).ceil() as usize).clamp(1, MAX_EDGE_CHUNKS)
}

fn min_value_on_segment(f: &dyn AnalyticMap, a: C64, b: C64) -> f64 {
    let samples = PROBE_SAMPLES * edge_chunks(f, (b - a).norm(), 8.0);
    let mut min = f64::INFINITY;
    for k in 0..=samples {
        let t = k as f64 / samples as f64;
        let v = f.value(a + (b - a) * t).norm();
        if v < min {
            min = v;
        }
    }
    min
}

fn min_value_on_boundary(f: &dyn AnalyticMap, rect: &WindowSpec) -> f64 {
    let c = rect.corners();
    (0..4)
        .map(|k| min_value_on_segment(f, c[k], c[(k + 1) % 4]))
        .fold(f64::INFINITY, f64::min)
}

/// Nudges the rectangle outward until no sampled boundary point sits on a
/// near-zero of the map. Expansion steps escalate; the returned rectangle
/// is what subsequent counts refer to.
fn with_clear_boundary(f: &dyn AnalyticMap, window: &WindowSpec) -> Result<WindowSpec> {
    let mut rect = *window;
    for attempt in 0..4u32 {
        if min_value_on_boundary(f, &rect) >= EDGE_CLEARANCE {
            return Ok(rect);
        }
        if attempt == 3 {
            break;
        }
        rect = rect.expanded(0.37 * 1e-4 * 10f64.powi(attempt as i32));
    }
    Err(Error::ContourTooClose { attempts: 3 })
}

/// Winding integral over an already-cleared rectangle.
///
/// Edges are pre-split into sub-wavelength chunks before the adaptive pass:
/// adaptive quadrature alone can alias a periodic integrand over an edge
/// spanning many oscillations and settle on a wrong integer.
fn winding_count_cleared(f: &dyn AnalyticMap, rect: &WindowSpec) -> Result<i64> {
    let c = rect.corners();
    let mut total = C64::new(0.0, 0.0);
    for k in 0..4 {
        let a = c[k];
        let b = c[(k + 1) % 4];
        let chunks = edge_chunks(f, (b - a).norm(), 4.0);
        let tol = EDGE_TOLERANCE / chunks as f64;
        for j in 0..chunks {
            let lo = j as f64 / chunks as f64;
            let hi = (j + 1) as f64 / chunks as f64;
            total += adaptive_simpson(
                &|t| f.log_derivative(a + (b - a) * t) * (b - a),
                lo,
                hi,
                tol,
            );
        }
    }
    let raw = total / C64::new(0.0, TWO_PI);
    let rounded = raw.re.round();
    // NaN compares false against everything, so test finiteness first or a
    // pole sitting exactly on the contour would pass the integer guard.
    if !raw.re.is_finite() || !raw.im.is_finite() {
        return Err(Error::NonIntegerResidue { raw: raw.re });
    }
    if (raw.re - rounded).abs() >= 0.1 || raw.im.abs() >= 0.1 {
        return Err(Error::NonIntegerResidue { raw: raw.re });
    }
    Ok(rounded as i64)
}

/// Number of zeros (with multiplicity) of the map inside the window, by
/// the argument principle on the rectangle boundary.
///
/// When a zero sits within clearance of the boundary the window is
/// expanded outward (up to three escalating nudges, then
/// [`Error::ContourTooClose`]); the returned count refers to the expanded
/// rectangle, which only ever gains zeros relative to the request.
pub fn count_zeros_argument_principle(
    f: &dyn AnalyticMap,
    window: &WindowSpec,
) -> Result<i64> {
    let rect = with_clear_boundary(f, window)?;
    winding_count_cleared(f, &rect)
}

/// Newton refinement of one zero from a seed, with step damping.
///
/// The step `-1 / dlog` contracts for any finite multiplicity m (the map
/// `z -> z - (z - z0)/m` is a contraction toward `z0`); convergence needs
/// both a small value and a small step. Multiplicity is then read off a
/// small argument-principle contour around the converged point, so zeros
/// closer than about 1e-5 to each other are reported together.
pub fn refine_newton(f: &dyn AnalyticMap, seed: C64, tolerance: f64) -> Result<Resonance> {
    if !(tolerance > 0.0 && tolerance.is_finite()) {
        return Err(Error::InvalidSystem {
            reason: format!("newton tolerance must be positive, got {tolerance}"),
        });
    }
    const MAX_ITERATIONS: u32 = 100;
    let mut lambda = seed;
    for _ in 0..MAX_ITERATIONS {
        let v = f.value(lambda);
        let dl = f.log_derivative(lambda);
        let mut step = -dl.inv();
        if !step.is_finite() {
            // Exactly on a zero of the derivative or the function; shake
            // loose with a tolerance-scale displacement.
            step = C64::new(tolerance, tolerance);
        }
        // Halve while the value grows, up to 8 times, then accept.
        let mut halvings = 0;
        while halvings < 8 && f.value(lambda + step).norm() > v.norm() {
            step *= 0.5;
            halvings += 1;
        }
        lambda += step;
        if !lambda.is_finite() {
            return Err(Error::NoConvergence {
                seed,
                max_iterations: MAX_ITERATIONS,
            });
        }
        if f.value(lambda).norm() < tolerance && step.norm() < tolerance {
            let contour = WindowSpec {
                re_min: lambda.re - MULTIPLICITY_RADIUS,
                re_max: lambda.re + MULTIPLICITY_RADIUS,
                im_min: lambda.im - MULTIPLICITY_RADIUS,
                im_max: lambda.im + MULTIPLICITY_RADIUS,
            };
            // The converged zero sits at the contour's center; no probe.
            let mult = winding_count_cleared(f, &contour)?;
            if mult < 1 {
                return Err(Error::NoConvergence {
                    seed,
                    max_iterations: MAX_ITERATIONS,
                });
            }
            return Ok(Resonance {
                value: lambda,
                multiplicity: mult as u32,
                provenance: Provenance::Located,
            });
        }
    }
    Err(Error::NoConvergence {
        seed,
        max_iterations: MAX_ITERATIONS,
    })
}

#[derive(Clone, Copy, Debug)]
pub struct LocateTolerances {
    /// Bisection stops once a box fits in this diameter; Newton seeds start
    /// from the box center.
    pub seed_diameter: f64,
    /// Newton convergence tolerance on both the value and the step.
    pub newton_tol: f64,
}

impl Default for LocateTolerances {
    fn default() -> Self {
        LocateTolerances {
            seed_diameter: 1e-3,
            newton_tol: 1e-10,
        }
    }
}

struct Bisector<'a> {
    f: &'a dyn AnalyticMap,
    seed_diameter: f64,
}

/// Split fractions tried for a clear internal contour line; starting at
/// the midpoint and stepping aside when a zero sits on it. The off-center
/// entries matter near a multiple zero, where `|f|` decays like a power of
/// the distance and only a split far from the zero clears the probe.
const SPLIT_FRACTIONS: [f64; 8] = [0.5, 0.53, 0.47, 0.59, 0.25, 0.75, 0.37, 0.63];

/// Boxes within this factor of the seed diameter may stop subdividing when
/// no clear split line exists: they hold a zero cluster that Newton plus
/// the multiplicity contour resolves, and the final count verification
/// rejects the result if it does not.
const CLUSTER_SEED_FACTOR: f64 = 8.0;

impl Bisector<'_> {
    fn solve(&self, rect: &WindowSpec, count: i64, depth: u32) -> Result<Vec<C64>> {
        if count == 0 {
            return Ok(Vec::new());
        }
        let width = rect.re_max - rect.re_min;
        let height = rect.im_max - rect.im_min;
        if width.max(height) <= self.seed_diameter {
            return Ok(vec![C64::new(
                0.5 * (rect.re_min + rect.re_max),
                0.5 * (rect.im_min + rect.im_max),
            )]);
        }
        if depth == 0 {
            return Err(Error::ContourTooClose { attempts: 3 });
        }
        let split_re = width >= height;
        for frac in SPLIT_FRACTIONS {
            let (first, second, seg_a, seg_b) = if split_re {
                let x = rect.re_min + frac * width;
                (
                    WindowSpec { re_max: x, ..*rect },
                    WindowSpec { re_min: x, ..*rect },
                    C64::new(x, rect.im_min),
                    C64::new(x, rect.im_max),
                )
            } else {
                let y = rect.im_min + frac * height;
                (
                    WindowSpec { im_max: y, ..*rect },
                    WindowSpec { im_min: y, ..*rect },
                    C64::new(rect.re_min, y),
                    C64::new(rect.re_max, y),
                )
            };
            if min_value_on_segment(self.f, seg_a, seg_b) < EDGE_CLEARANCE {
                continue;
            }
            // The probe samples the split segment coarsely, so a zero can
            // still sit close enough to corrupt a child integral. A child
            // count that fails its integer guard, or children that do not
            // partition the parent count, both indict the split line; step
            // to the next fraction instead of failing.
            let counts = winding_count_cleared(self.f, &first)
                .and_then(|a| winding_count_cleared(self.f, &second).map(|b| (a, b)));
            let (count_first, count_second) = match counts {
                Ok(pair) => pair,
                Err(_) => continue,
            };
            if count_first + count_second != count {
                continue;
            }
            let (a, b) = rayon::join(
                || self.solve(&first, count_first, depth - 1),
                || self.solve(&second, count_second, depth - 1),
            );
            let mut seeds = a?;
            seeds.extend(b?);
            return Ok(seeds);
        }
        // No fraction cleared: the zeros crowd every candidate line, which
        // near seed scale means a tight cluster (or one multiple zero).
        // Hand the cluster center to Newton; the multiplicity contour and
        // the final count verification keep this honest.
        if width.max(height) <= CLUSTER_SEED_FACTOR * self.seed_diameter {
            return Ok(vec![C64::new(
                0.5 * (rect.re_min + rect.re_max),
                0.5 * (rect.im_min + rect.im_max),
            )]);
        }
        Err(Error::ContourTooClose {
            attempts: SPLIT_FRACTIONS.len() as u32,
        })
    }
}

/// Locates every zero of the line product inside the window.
///
/// Pipeline: clear the outer boundary, count the whole window, bisect with
/// count-gated recursion (children exactly partition their parent, split
/// lines are chosen to avoid zeros) down to seed boxes, refine each seed
/// by Newton, then verify that refined multiplicities add up to the full
/// window count before returning. Coincident refined points are collapsed
/// (they are the same zero), values outside the requested window after
/// boundary nudging are dropped.
pub fn locate_resonances(
    lines: &[LatticeLine],
    window: &WindowSpec,
    tolerances: &LocateTolerances,
) -> Result<Vec<Resonance>> {
    if lines.is_empty() {
        return Ok(Vec::new());
    }
    let product = LineProduct { lines };
    let f: &dyn AnalyticMap = &product;
    let rect = with_clear_boundary(f, window)?;
    let total = winding_count_cleared(f, &rect)?;
    if total == 0 {
        return Ok(Vec::new());
    }
    if total < 0 {
        return Err(Error::LocateVerification {
            located: 0,
            counted: total,
        });
    }

    let bisector = Bisector {
        f,
        seed_diameter: tolerances.seed_diameter,
    };
    let seeds = bisector.solve(&rect, total, 64)?;
    let refined: Result<Vec<Resonance>> = seeds
        .par_iter()
        .map(|&seed| refine_newton(f, seed, tolerances.newton_tol))
        .collect();
    let mut refined = refined?;

    // Coincident converged points are one zero reached from several seeds;
    // keep a single row (the contour multiplicities agree).
    refined.sort_by(|a, b| {
        a.value
            .re
            .total_cmp(&b.value.re)
            .then_with(|| a.value.im.total_cmp(&b.value.im))
    });
    let mut collapsed: Vec<Resonance> = Vec::with_capacity(refined.len());
    for r in refined {
        match collapsed.last_mut() {
            Some(last)
                if (r.value.re - last.value.re).abs() <= MERGE_TOLERANCE
                    && (r.value.im - last.value.im).abs() <= MERGE_TOLERANCE =>
            {
                last.multiplicity = last.multiplicity.max(r.multiplicity);
            }
            _ => collapsed.push(r),
        }
    }

    let located: i64 = collapsed.iter().map(|r| i64::from(r.multiplicity)).sum();
    if located != total {
        return Err(Error::LocateVerification {
            located,
            counted: total,
        });
    }
    collapsed.retain(|r| window.contains(r.value));
    Ok(collapsed)
}

/// CSV serialization: header `re,im,multiplicity,provenance`, shortest
/// round-trip float formatting, rows sorted by (re, im).
pub fn resonances_to_csv(resonances: &[Resonance]) -> String {
    let mut rows: Vec<&Resonance> = resonances.iter().collect();
    rows.sort_by(|a, b| {
        a.value
            .re
            .total_cmp(&b.value.re)
            .then_with(|| a.value.im.total_cmp(&b.value.im))
    });
    let mut out = String::from("re,im,multiplicity,provenance\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{}\n",
            r.value.re,
            r.value.im,
            r.multiplicity,
            r.provenance.as_str()
        ));
    }
    out
}

/// Inverse of [`resonances_to_csv`].
pub fn resonances_from_csv(text: &str) -> Result<Vec<Resonance>> {
    let bad = |line: usize, what: &str| Error::InvalidSystem {
        reason: format!("resonance csv line {}: {what}", line + 1),
    };
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, "re,im,multiplicity,provenance")) => {}
        _ => {
            return Err(Error::InvalidSystem {
                reason: "resonance csv: missing header".into(),
            })
        }
    }
    let mut out = Vec::new();
    for (idx, line) in lines {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            return Err(bad(idx, "expected 4 fields"));
        }
        let re: f64 = fields[0].parse().map_err(|_| bad(idx, "bad re"))?;
        let im: f64 = fields[1].parse().map_err(|_| bad(idx, "bad im"))?;
        let multiplicity: u32 = fields[2].parse().map_err(|_| bad(idx, "bad multiplicity"))?;
        let provenance = match fields[3] {
            "exact" => Provenance::ExactLattice,
            "located" => Provenance::Located,
            _ => return Err(bad(idx, "unknown provenance")),
        };
        out.push(Resonance {
            value: C64::new(re, im),
            multiplicity,
            provenance,
        });
    }
    Ok(out)
}

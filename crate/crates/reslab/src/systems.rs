//! Orbit-data generators for the model systems: suspensions of hyperbolic
//! toral automorphisms, weighted linear horseshoe suspensions, Morse-Smale
//! assemblies, and explicit user-supplied orbit lists.
//!
//! Toral matrix powers use arbitrary-precision integers: entries grow like
//! `lambda^p` and overflow 64 bits near p = 40, and exactness is what makes
//! the unimodular class weight identically `roof` rather than `roof (1+eps)`.

use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive, Zero};

use crate::orbit::{
    eigen_pow, geometric_term, FixedPointDatum, PeriodClass, PrimitiveOrbit,
};
use crate::zeta::LatticeLine;
use crate::{C64, Error, Result, HYPERBOLICITY_TOLERANCE, MERGE_TOLERANCE};

/// Enumeration guard for primitive-orbit synthesis and lattice-line
/// expansion; generators degrade gracefully (omit the optional data or
/// error) instead of exhausting memory.
pub const ENUMERATION_BUDGET: u64 = 500_000;

#[derive(Clone, Debug)]
pub struct ToralSuspension {
    /// 2x2 integer matrix, |det| = 1, |trace| > 2.
    pub matrix: [[i64; 2]; 2],
    /// Constant roof: the suspension flow crosses the fiber in this time.
    pub roof: f64,
}

#[derive(Clone, Debug)]
pub struct HorseshoeSuspension {
    /// Unstable linearization rate, > 1.
    pub expansion: f64,
    /// Stable linearization rate, in (0, 1).
    pub contraction: f64,
    pub symbol_count: usize,
    /// Per-symbol weight factors; negative entries are allowed and produce
    /// signed orbit weights.
    pub symbol_weights: Vec<f64>,
    pub roof: f64,
}

#[derive(Clone, Debug)]
pub struct MorseSmaleSystem {
    pub closed_orbits: Vec<PrimitiveOrbit>,
    pub fixed_points: Vec<FixedPointDatum>,
}

#[derive(Clone, Debug)]
pub enum SystemSpec {
    ToralSuspension(ToralSuspension),
    HorseshoeSuspension(HorseshoeSuspension),
    MorseSmale(MorseSmaleSystem),
    ExplicitOrbits { orbits: Vec<PrimitiveOrbit> },
}

impl SystemSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            SystemSpec::ToralSuspension(t) => {
                let det = matrix_det_i64(&t.matrix);
                if det.abs() != 1 {
                    return Err(Error::InvalidSystem {
                        reason: format!("toral matrix must have |det| = 1, got det = {det}"),
                    });
                }
                let trace = t.matrix[0][0] + t.matrix[1][1];
                if trace.abs() <= 2 {
                    return Err(Error::NotHyperbolic {
                        trace_abs: trace.abs(),
                    });
                }
                positive_finite(t.roof, "roof")
            }
            SystemSpec::HorseshoeSuspension(h) => {
                if !(h.expansion > 1.0 && h.expansion.is_finite())
                    || h.expansion.ln().abs() < HYPERBOLICITY_TOLERANCE
                {
                    return Err(Error::InvalidSystem {
                        reason: format!("expansion must exceed 1, got {}", h.expansion),
                    });
                }
                if !(h.contraction > 0.0 && h.contraction < 1.0)
                    || h.contraction.ln().abs() < HYPERBOLICITY_TOLERANCE
                {
                    return Err(Error::InvalidSystem {
                        reason: format!("contraction must lie in (0, 1), got {}", h.contraction),
                    });
                }
                if h.symbol_count < 2 {
                    return Err(Error::InvalidSystem {
                        reason: format!("symbol_count must be at least 2, got {}", h.symbol_count),
                    });
                }
                if h.symbol_weights.len() != h.symbol_count {
                    return Err(Error::InvalidSystem {
                        reason: format!(
                            "expected {} symbol weights, got {}",
                            h.symbol_count,
                            h.symbol_weights.len()
                        ),
                    });
                }
                if h.symbol_weights.iter().any(|w| !w.is_finite()) {
                    return Err(Error::InvalidSystem {
                        reason: "symbol weights must be finite".into(),
                    });
                }
                positive_finite(h.roof, "roof")
            }
            // Component invariants are enforced at construction time.
            SystemSpec::MorseSmale(_) | SystemSpec::ExplicitOrbits { .. } => Ok(()),
        }
    }

    /// Flow dimension used in bound reporting: suspensions of surface maps
    /// live in dimension 3; assemblies in 1 + the largest transverse rank.
    pub fn ambient_dimension(&self) -> usize {
        match self {
            SystemSpec::ToralSuspension(_) | SystemSpec::HorseshoeSuspension(_) => 3,
            SystemSpec::MorseSmale(ms) => {
                let from_orbits = ms
                    .closed_orbits
                    .iter()
                    .map(|o| 1 + o.backward_poincare_eigenvalues.len())
                    .max()
                    .unwrap_or(1);
                let from_fps = ms
                    .fixed_points
                    .iter()
                    .map(|fp| fp.generator_eigenvalues.len())
                    .max()
                    .unwrap_or(1);
                from_orbits.max(from_fps)
            }
            SystemSpec::ExplicitOrbits { orbits } => orbits
                .iter()
                .map(|o| 1 + o.backward_poincare_eigenvalues.len())
                .max()
                .unwrap_or(1),
        }
    }
}

fn positive_finite(x: f64, name: &str) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidSystem {
            reason: format!("{name} must be positive and finite, got {x}"),
        })
    }
}

fn matrix_det_i64(m: &[[i64; 2]; 2]) -> i64 {
    m[0][0] * m[1][1] - m[0][1] * m[1][0]
}

/// Geometric majorant for period classes beyond the data horizon: classes
/// continue at `spacing` gaps with `|w_{next}| <= weight_ratio |w_last|`.
#[derive(Clone, Copy, Debug)]
pub struct ClassTail {
    pub spacing: f64,
    pub weight_ratio: f64,
}

/// Complete orbit data for one system up to a period horizon.
#[derive(Clone, Debug)]
pub struct PeriodicOrbitData {
    /// Sorted strictly increasing in total_period.
    pub period_classes: Vec<PeriodClass>,
    /// Present when per-orbit enumeration fits the budget.
    pub primitive_orbits: Option<Vec<PrimitiveOrbit>>,
    /// Largest total period covered by the class table.
    pub horizon: f64,
    /// Tail majorant for truncation bounds, when the generator can certify
    /// one; absent means downstream tail bounds are heuristic.
    pub class_tail: Option<ClassTail>,
    /// When set to E, the number of primitive orbits with period p*spacing
    /// is at most 4 E^p / p (used for Ruelle-product tail bounds).
    pub primitive_growth: Option<f64>,
    /// True when `primitive_orbits` lists every closed orbit of the system
    /// (Morse-Smale and explicit systems), making the Ruelle product exact.
    pub primitive_exhaustive: bool,
}

impl PeriodicOrbitData {
    pub fn new(
        mut period_classes: Vec<PeriodClass>,
        primitive_orbits: Option<Vec<PrimitiveOrbit>>,
        horizon: f64,
        class_tail: Option<ClassTail>,
        primitive_growth: Option<f64>,
        primitive_exhaustive: bool,
    ) -> Result<Self> {
        period_classes.sort_by(|a, b| a.total_period.total_cmp(&b.total_period));
        for pair in period_classes.windows(2) {
            if pair[1].total_period - pair[0].total_period <= 0.0 {
                return Err(Error::InvalidSystem {
                    reason: format!(
                        "period classes not strictly increasing near t = {}",
                        pair[0].total_period
                    ),
                });
            }
        }
        if let Some(last) = period_classes.last() {
            if last.total_period > horizon + MERGE_TOLERANCE {
                return Err(Error::InvalidSystem {
                    reason: format!(
                        "class at t = {} exceeds horizon {horizon}",
                        last.total_period
                    ),
                });
            }
        }
        Ok(PeriodicOrbitData {
            period_classes,
            primitive_orbits,
            horizon,
            class_tail,
            primitive_growth,
            primitive_exhaustive,
        })
    }
}

fn bigint_matmul(a: &[[BigInt; 2]; 2], b: &[[BigInt; 2]; 2]) -> [[BigInt; 2]; 2] {
    [
        [
            &a[0][0] * &b[0][0] + &a[0][1] * &b[1][0],
            &a[0][0] * &b[0][1] + &a[0][1] * &b[1][1],
        ],
        [
            &a[1][0] * &b[0][0] + &a[1][1] * &b[1][0],
            &a[1][0] * &b[0][1] + &a[1][1] * &b[1][1],
        ],
    ]
}

fn bigint_matrix(m: &[[i64; 2]; 2]) -> [[BigInt; 2]; 2] {
    [
        [BigInt::from(m[0][0]), BigInt::from(m[0][1])],
        [BigInt::from(m[1][0]), BigInt::from(m[1][1])],
    ]
}

/// Exact number of fixed points of the p-th iterate of the torus map:
/// `N_p = |det(A^p - I)|`, computed in arbitrary-precision integers.
pub fn toral_fixed_point_count(matrix: &[[i64; 2]; 2], p: u32) -> Result<BigInt> {
    let trace = matrix[0][0] + matrix[1][1];
    if trace.abs() <= 2 {
        return Err(Error::NotHyperbolic {
            trace_abs: trace.abs(),
        });
    }
    assert!(p >= 1, "iterate order must be positive");
    let base = bigint_matrix(matrix);
    let mut power = base.clone();
    for _ in 1..p {
        power = bigint_matmul(&power, &base);
    }
    let det: BigInt = (&power[0][0] - 1) * (&power[1][1] - 1) - &power[0][1] * &power[1][0];
    Ok(det.abs())
}

fn mobius(n: u32) -> i32 {
    let mut n = n;
    let mut mu = 1i32;
    let mut d = 2u32;
    while d * d <= n {
        if n % d == 0 {
            n /= d;
            if n % d == 0 {
                return 0;
            }
            mu = -mu;
        }
        d += 1;
    }
    if n > 1 {
        mu = -mu;
    }
    mu
}

/// Exact count of primitive map orbits of least period q, via Mobius
/// inversion of the fixed-point counts.
fn toral_primitive_orbit_count(matrix: &[[i64; 2]; 2], q: u32) -> Result<BigInt> {
    let mut aperiodic = BigInt::zero();
    for d in 1..=q {
        if q % d == 0 {
            let mu = mobius(q / d);
            if mu != 0 {
                aperiodic += toral_fixed_point_count(matrix, d)? * BigInt::from(mu);
            }
        }
    }
    let quot = &aperiodic / q;
    debug_assert!(
        (&quot * q) == aperiodic,
        "aperiodic point count not divisible by period"
    );
    Ok(quot)
}

fn toral_eigenvalues(matrix: &[[i64; 2]; 2]) -> (f64, f64) {
    let trace = (matrix[0][0] + matrix[1][1]) as f64;
    let det = matrix_det_i64(matrix) as f64;
    // Integer hyperbolic 2x2 with |det| = 1 always has real spectrum.
    let disc = (trace * trace - 4.0 * det).sqrt();
    let big = 0.5 * (trace + trace.signum() * disc);
    let small = det / big;
    if big.abs() >= small.abs() {
        (big, small)
    } else {
        (small, big)
    }
}

/// Period classes (and, when the enumeration budget allows, synthesized
/// primitive orbits) for the suspension with constant roof.
///
/// The class at t = pT collects the `N_p` fixed points of the p-th map
/// iterate, each contributing its primitive period divided by `N_p`; the
/// exact-integer cancellation makes every class weight equal the roof.
pub fn toral_suspension_period_classes(
    spec: &ToralSuspension,
    max_multiple: u32,
) -> Result<PeriodicOrbitData> {
    SystemSpec::ToralSuspension(spec.clone()).validate()?;
    let t = spec.roof;
    let mut classes = Vec::with_capacity(max_multiple as usize);
    for p in 1..=max_multiple {
        // Numerator and denominator are the same exact integer: the count
        // N_p of fixed points of the p-th iterate. Computing it (rather
        // than hardcoding 1) keeps the NotHyperbolic check and the exact
        // cancellation visible.
        let n_p = toral_fixed_point_count(&spec.matrix, p)?;
        debug_assert!(n_p > BigInt::zero());
        classes.push(PeriodClass {
            total_period: p as f64 * t,
            geometric_weight: C64::new(t, 0.0),
        });
    }

    let primitive_orbits = synthesize_toral_primitives(spec, max_multiple)?;
    let (lam_big, _) = toral_eigenvalues(&spec.matrix);
    PeriodicOrbitData::new(
        classes,
        primitive_orbits,
        max_multiple as f64 * t,
        Some(ClassTail {
            spacing: t,
            weight_ratio: 1.0,
        }),
        Some(lam_big.abs()),
        false,
    )
}

fn synthesize_toral_primitives(
    spec: &ToralSuspension,
    max_multiple: u32,
) -> Result<Option<Vec<PrimitiveOrbit>>> {
    // Cheap float estimate first: sum of lambda^q / q primitive orbits.
    let (lam_big, lam_small) = toral_eigenvalues(&spec.matrix);
    let mut estimate = 0.0f64;
    for q in 1..=max_multiple {
        estimate += lam_big.abs().powi(q as i32) / q as f64;
        if estimate > 4.0 * ENUMERATION_BUDGET as f64 {
            return Ok(None);
        }
    }

    let mut orbits = Vec::new();
    for q in 1..=max_multiple {
        let count = toral_primitive_orbit_count(&spec.matrix, q)?;
        let count = match count.to_u64() {
            Some(c) => c,
            None => return Ok(None),
        };
        if orbits.len() as u64 + count > ENUMERATION_BUDGET {
            return Ok(None);
        }
        // Forward return map of a period-q orbit is A^q; the backward
        // spectrum is the inverse powers.
        let backward = vec![
            eigen_pow(C64::new(lam_big, 0.0), q).inv(),
            eigen_pow(C64::new(lam_small, 0.0), q).inv(),
        ];
        let stable_backward = backward
            .iter()
            .copied()
            .find(|e| e.norm() > 1.0)
            .expect("hyperbolic matrix has an expanding backward direction");
        let orientable = stable_backward.re > 0.0;
        for i in 0..count {
            orbits.push(PrimitiveOrbit::new(
                format!("t{q}-{i}"),
                q as f64 * spec.roof,
                backward.clone(),
                1,
                orientable,
                vec![C64::new(1.0, 0.0)],
            )?);
        }
    }
    Ok(Some(orbits))
}

/// All Lyndon words over `{0, .., symbol_count-1}` of length at most
/// `max_length`, ordered by (length, lexicographic) as the shortest-first
/// listing used for orbit ids.
pub fn lyndon_words(symbol_count: usize, max_length: usize) -> Vec<Vec<u8>> {
    assert!(symbol_count >= 1 && symbol_count <= 256);
    assert!(max_length >= 1);
    // Duval's generation: lexicographic stream of all Lyndon words <= n.
    let k = symbol_count as u16;
    let mut words: Vec<Vec<u8>> = Vec::new();
    let mut w = vec![0u8];
    loop {
        words.push(w.clone());
        let m = w.len();
        // Extend periodically to full length, then increment the tail.
        let mut next = Vec::with_capacity(max_length);
        for i in 0..max_length {
            next.push(w[i % m]);
        }
        while let Some(&last) = next.last() {
            if u16::from(last) + 1 == k {
                next.pop();
            } else {
                *next.last_mut().unwrap() += 1;
                break;
            }
        }
        if next.is_empty() {
            break;
        }
        w = next;
    }
    words.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    words
}

fn horseshoe_class_weight(h: &HorseshoeSuspension, p: u32) -> f64 {
    let weight_sum: f64 = h.symbol_weights.iter().sum();
    let mu_inv = 1.0 / h.expansion;
    let nu = h.contraction;
    // (sum g)^p / ((1 - mu^-p)(nu^-p - 1)), the transfer trace of the p-th
    // iterate, times the roof from the primitive-period factor.
    let denom = (1.0 - mu_inv.powi(p as i32)) * (nu.powi(-(p as i32)) - 1.0);
    h.roof * weight_sum.powi(p as i32) / denom
}

/// Primitive orbits from Lyndon words plus closed-form period classes for
/// the weighted full-shift horseshoe suspension.
pub fn horseshoe_orbits(
    spec: &HorseshoeSuspension,
    max_word_length: u32,
) -> Result<PeriodicOrbitData> {
    SystemSpec::HorseshoeSuspension(spec.clone()).validate()?;
    let t = spec.roof;
    let classes: Vec<PeriodClass> = (1..=max_word_length)
        .map(|p| PeriodClass {
            total_period: p as f64 * t,
            geometric_weight: C64::new(horseshoe_class_weight(spec, p), 0.0),
        })
        .collect();

    // Primitive enumeration is optional: k^p/p words exhaust the budget
    // quickly, but the closed-form classes above stay exact regardless.
    let mut word_estimate = 0.0f64;
    for q in 1..=max_word_length {
        word_estimate += (spec.symbol_count as f64).powi(q as i32) / q as f64;
    }
    let primitive_orbits = if word_estimate <= ENUMERATION_BUDGET as f64 {
        let mut orbits = Vec::new();
        for word in lyndon_words(spec.symbol_count, max_word_length as usize) {
            let q = word.len() as u32;
            let backward = vec![
                C64::new(spec.contraction.powi(-(q as i32)), 0.0),
                C64::new(spec.expansion.powi(-(q as i32)), 0.0),
            ];
            let weight: f64 = word
                .iter()
                .map(|&s| spec.symbol_weights[s as usize])
                .product();
            let id: String = word.iter().map(|&s| char::from(b'0' + s)).collect();
            orbits.push(PrimitiveOrbit::new(
                format!("w{id}"),
                q as f64 * t,
                backward,
                1,
                true,
                vec![C64::new(weight, 0.0)],
            )?);
        }
        Some(orbits)
    } else {
        None
    };

    let weight_sum: f64 = spec.symbol_weights.iter().sum();
    PeriodicOrbitData::new(
        classes,
        primitive_orbits,
        max_word_length as f64 * t,
        Some(ClassTail {
            spacing: t,
            // |w_{p+1}| / |w_p| increases monotonically to its supremum
            // |sum g| * nu (the denominator ratios are < 1 and -> 1).
            weight_ratio: weight_sum.abs() * spec.contraction,
        }),
        Some(spec.symbol_count as f64),
        false,
    )
}

/// Disjoint union of validated components: closed orbits produce the class
/// table (iterates up to the horizon, coincident periods merged); fixed
/// points carry no closed orbits and are returned alongside.
pub fn assemble_morse_smale(
    spec: &MorseSmaleSystem,
    horizon: f64,
) -> Result<(PeriodicOrbitData, Vec<FixedPointDatum>)> {
    let data = classes_from_orbits(&spec.closed_orbits, horizon)?;
    Ok((data, spec.fixed_points.clone()))
}

/// Class table for an explicit orbit list (the Morse-Smale path without
/// fixed points).
pub fn classes_from_orbits(
    orbits: &[PrimitiveOrbit],
    horizon: f64,
) -> Result<PeriodicOrbitData> {
    positive_finite(horizon, "horizon")?;
    let mut raw: Vec<PeriodClass> = Vec::new();
    let mut sorted: Vec<&PrimitiveOrbit> = orbits.iter().collect();
    sorted.sort_by(|a, b| {
        a.primitive_period
            .total_cmp(&b.primitive_period)
            .then_with(|| a.id.cmp(&b.id))
    });
    for orbit in sorted {
        let mut n = 1u32;
        while n as f64 * orbit.primitive_period <= horizon + MERGE_TOLERANCE {
            raw.push(PeriodClass {
                total_period: n as f64 * orbit.primitive_period,
                geometric_weight: geometric_term(orbit, n)?,
            });
            n += 1;
        }
    }
    raw.sort_by(|a, b| a.total_period.total_cmp(&b.total_period));
    let mut classes: Vec<PeriodClass> = Vec::new();
    for c in raw {
        match classes.last_mut() {
            Some(last) if (c.total_period - last.total_period).abs() <= MERGE_TOLERANCE => {
                last.geometric_weight += c.geometric_weight;
            }
            _ => classes.push(c),
        }
    }
    PeriodicOrbitData::new(
        classes,
        Some(orbits.to_vec()),
        horizon,
        None,
        None,
        true,
    )
}

/// Orbit data for any system variant at the given time horizon.
pub fn orbit_data(spec: &SystemSpec, horizon: f64) -> Result<PeriodicOrbitData> {
    spec.validate()?;
    positive_finite(horizon, "horizon")?;
    match spec {
        SystemSpec::ToralSuspension(t) => {
            toral_suspension_period_classes(t, (horizon / t.roof).floor() as u32)
        }
        SystemSpec::HorseshoeSuspension(h) => {
            horseshoe_orbits(h, (horizon / h.roof).floor() as u32)
        }
        SystemSpec::MorseSmale(ms) => Ok(assemble_morse_smale(ms, horizon)?.0),
        SystemSpec::ExplicitOrbits { orbits } => classes_from_orbits(orbits, horizon),
    }
}

/// Zeta-product lattice lines of the system, truncated to rates of modulus
/// at least `rate_floor`. Each entry is one factor `(1 - r e^{i lambda T})`;
/// coincident rates appear as repeated entries (their count is the line
/// multiplicity). Fixed points contribute no lines: their resonances are
/// not zeros of the orbit zeta function.
pub fn lattice_lines(spec: &SystemSpec, rate_floor: f64) -> Result<Vec<LatticeLine>> {
    spec.validate()?;
    if !(rate_floor > 0.0) {
        return Err(Error::InvalidSystem {
            reason: format!("rate floor must be positive, got {rate_floor}"),
        });
    }
    let mut lines = Vec::new();
    match spec {
        SystemSpec::ToralSuspension(t) => {
            // Unimodular transfer trace is identically 1: a single line.
            if 1.0 >= rate_floor {
                lines.push(LatticeLine {
                    rate: C64::new(1.0, 0.0),
                    spacing: t.roof,
                });
            }
        }
        SystemSpec::HorseshoeSuspension(h) => {
            let s: f64 = h.symbol_weights.iter().sum();
            if s != 0.0 {
                // trace_p = sum_{k,l >= 0} (s nu^{l+1} mu^{-k})^p.
                let mut l = 0u32;
                loop {
                    let lead = s.abs() * h.contraction.powi(l as i32 + 1);
                    if lead < rate_floor {
                        break;
                    }
                    let mut k = 0u32;
                    loop {
                        let rate = s
                            * h.contraction.powi(l as i32 + 1)
                            * h.expansion.powi(-(k as i32));
                        if rate.abs() < rate_floor {
                            break;
                        }
                        lines.push(LatticeLine {
                            rate: C64::new(rate, 0.0),
                            spacing: h.roof,
                        });
                        k += 1;
                        budget_check(lines.len())?;
                    }
                    l += 1;
                }
            }
        }
        SystemSpec::MorseSmale(ms) => {
            for orbit in &ms.closed_orbits {
                orbit_lines(orbit, rate_floor, &mut lines)?;
            }
        }
        SystemSpec::ExplicitOrbits { orbits } => {
            for orbit in orbits {
                orbit_lines(orbit, rate_floor, &mut lines)?;
            }
        }
    }
    lines.sort_by(|a, b| {
        b.rate
            .norm()
            .total_cmp(&a.rate.norm())
            .then_with(|| a.rate.re.total_cmp(&b.rate.re))
            .then_with(|| a.rate.im.total_cmp(&b.rate.im))
            .then_with(|| a.spacing.total_cmp(&b.spacing))
    });
    Ok(lines)
}

fn budget_check(len: usize) -> Result<()> {
    if len as u64 > ENUMERATION_BUDGET {
        return Err(Error::BudgetExceeded {
            projected: len as u128,
            budget: ENUMERATION_BUDGET,
        });
    }
    Ok(())
}

/// Geometric expansion of one closed orbit's iterate sum: rates
/// `(-1)^eps a_l prod_stable e_j^{-k_j} prod_unstable e_j^{k_j}` with
/// stable indices starting at 1, enumerated down to `rate_floor`.
fn orbit_lines(
    orbit: &PrimitiveOrbit,
    rate_floor: f64,
    lines: &mut Vec<LatticeLine>,
) -> Result<()> {
    let sign = if orbit.orientation_exponent() == 0 {
        C64::new(1.0, 0.0)
    } else {
        C64::new(-1.0, 0.0)
    };
    // Per-index multipliers, each of modulus < 1: stable directions use the
    // inverse eigenvalue, unstable directions the eigenvalue itself.
    let mut factors: Vec<C64> = Vec::new();
    let mut seeds_extra = C64::new(1.0, 0.0);
    for e in &orbit.backward_poincare_eigenvalues {
        if e.norm() > 1.0 {
            factors.push(e.inv());
            // k_j >= 1 on stable directions: fold one factor into the seed.
            seeds_extra *= e.inv();
        } else {
            factors.push(*e);
        }
    }
    for a in &orbit.weight_eigenvalues {
        if a.norm() == 0.0 {
            continue;
        }
        let seed = sign * a * seeds_extra;
        descend(seed, &factors, 0, rate_floor, orbit.primitive_period, lines)?;
    }
    Ok(())
}

fn descend(
    value: C64,
    factors: &[C64],
    from: usize,
    rate_floor: f64,
    spacing: f64,
    lines: &mut Vec<LatticeLine>,
) -> Result<()> {
    if value.norm() < rate_floor {
        return Ok(());
    }
    lines.push(LatticeLine {
        rate: value,
        spacing,
    });
    budget_check(lines.len())?;
    for j in from..factors.len() {
        descend(value * factors[j], factors, j, rate_floor, spacing, lines)?;
    }
    Ok(())
}

//! Domain types for periodic-orbit data and the per-orbit arithmetic
//! (determinant factors, iterate weights, geometric-side terms) consumed by
//! the zeta, resonance, and trace modules.
//!
//! Convention: `backward_poincare_eigenvalues` is the spectrum of the
//! linearized *backward* return map on the transverse space, so stable flow
//! directions carry modulus greater than one. Forward-map data must be
//! inverted before construction (the system assembly layer does this).

use crate::{C64, Error, Result, HYPERBOLICITY_TOLERANCE};

/// A primitive (non-repeated) closed orbit with its transverse linearization
/// and the spectrum of the weight-bundle transport over one traversal.
#[derive(Clone, Debug)]
pub struct PrimitiveOrbit {
    pub id: String,
    pub primitive_period: f64,
    pub backward_poincare_eigenvalues: Vec<C64>,
    /// Rank of the stable bundle along the orbit; equals the number of
    /// backward eigenvalues of modulus > 1.
    pub stable_count: usize,
    /// True when the return map preserves orientation of the stable bundle.
    pub stable_orientable: bool,
    pub weight_eigenvalues: Vec<C64>,
}

impl PrimitiveOrbit {
    pub fn new(
        id: impl Into<String>,
        primitive_period: f64,
        backward_poincare_eigenvalues: Vec<C64>,
        stable_count: usize,
        stable_orientable: bool,
        weight_eigenvalues: Vec<C64>,
    ) -> Result<Self> {
        let id = id.into();
        let invalid = |reason: String| Error::InvalidOrbit {
            id: id.clone(),
            reason,
        };
        if !(primitive_period > 0.0 && primitive_period.is_finite()) {
            return Err(invalid(format!(
                "primitive_period must be positive and finite, got {primitive_period}"
            )));
        }
        for e in &backward_poincare_eigenvalues {
            if !e.re.is_finite() || !e.im.is_finite() || e.norm() == 0.0 {
                return Err(invalid(format!("return-map eigenvalue {e} is not invertible")));
            }
            if e.norm().ln().abs() < HYPERBOLICITY_TOLERANCE {
                return Err(Error::NonHyperbolic {
                    value: *e,
                    context: format!("orbit `{id}`"),
                });
            }
        }
        let expanding = backward_poincare_eigenvalues
            .iter()
            .filter(|e| e.norm() > 1.0)
            .count();
        if expanding != stable_count {
            return Err(invalid(format!(
                "stable_count = {stable_count}, but {expanding} backward eigenvalues have modulus > 1"
            )));
        }
        if weight_eigenvalues.is_empty() {
            return Err(invalid("weight_eigenvalues must be nonempty".into()));
        }
        if weight_eigenvalues
            .iter()
            .any(|a| !a.re.is_finite() || !a.im.is_finite())
        {
            return Err(invalid("weight eigenvalues must be finite".into()));
        }
        Ok(PrimitiveOrbit {
            id,
            primitive_period,
            backward_poincare_eigenvalues,
            stable_count,
            stable_orientable,
            weight_eigenvalues,
        })
    }

    /// Orientation sign exponent: 0 when the stable bundle is orientable
    /// along the orbit, 1 otherwise.
    pub fn orientation_exponent(&self) -> u32 {
        if self.stable_orientable {
            0
        } else {
            1
        }
    }
}

/// A hyperbolic fixed point of the flow, described by the generator spectrum
/// of its linearization and of the weight-bundle transport.
#[derive(Clone, Debug)]
pub struct FixedPointDatum {
    pub id: String,
    /// Spectrum of `A` where the linearized flow is `exp(tA)`.
    pub generator_eigenvalues: Vec<C64>,
    pub stable_count: usize,
    /// Transport eigenvalues `mu_l`: the bundle action decays like
    /// `exp(-mu_l t)`; a trivial scalar bundle is the single entry 0.
    pub weight_generator_eigenvalues: Vec<C64>,
}

impl FixedPointDatum {
    pub fn new(
        id: impl Into<String>,
        generator_eigenvalues: Vec<C64>,
        stable_count: usize,
        weight_generator_eigenvalues: Vec<C64>,
    ) -> Result<Self> {
        let id = id.into();
        let invalid = |reason: String| Error::InvalidFixedPoint {
            id: id.clone(),
            reason,
        };
        for l in &generator_eigenvalues {
            if !l.re.is_finite() || !l.im.is_finite() {
                return Err(invalid(format!("generator eigenvalue {l} is not finite")));
            }
            if l.re.abs() < HYPERBOLICITY_TOLERANCE {
                return Err(Error::NonHyperbolic {
                    value: *l,
                    context: format!("fixed point `{id}` (generator real part near 0)"),
                });
            }
        }
        let contracting = generator_eigenvalues.iter().filter(|l| l.re < 0.0).count();
        if contracting != stable_count {
            return Err(invalid(format!(
                "stable_count = {stable_count}, but {contracting} generator eigenvalues have negative real part"
            )));
        }
        if weight_generator_eigenvalues.is_empty() {
            return Err(invalid(
                "weight_generator_eigenvalues must be nonempty (use [0] for a trivial bundle)"
                    .into(),
            ));
        }
        Ok(FixedPointDatum {
            id,
            generator_eigenvalues,
            stable_count,
            weight_generator_eigenvalues,
        })
    }
}

/// The n-th traversal of a primitive orbit.
#[derive(Clone, Copy, Debug)]
pub struct OrbitIterate<'a> {
    pub orbit: &'a PrimitiveOrbit,
    pub repetition: u32,
    pub total_period: f64,
}

impl<'a> OrbitIterate<'a> {
    pub fn new(orbit: &'a PrimitiveOrbit, repetition: u32) -> Self {
        assert!(repetition >= 1, "repetition must be at least 1");
        OrbitIterate {
            orbit,
            repetition,
            total_period: repetition as f64 * orbit.primitive_period,
        }
    }
}

/// All orbit iterates sharing one total period, aggregated into the single
/// coefficient they contribute to the geometric side of the trace formula.
#[derive(Clone, Copy, Debug)]
pub struct PeriodClass {
    pub total_period: f64,
    pub geometric_weight: C64,
}

/// `e^n` via modulus/argument decomposition: relative error stays `O(n ulp)`
/// where repeated multiplication would square it up.
pub fn eigen_pow(e: C64, n: u32) -> C64 {
    // Real eigenvalues stay exactly real (and keep exact signs) under powi;
    // the log/exp route would leak an O(eps) imaginary part.
    if e.im == 0.0 {
        return C64::new(e.re.powi(n as i32), 0.0);
    }
    match n {
        0 => C64::new(1.0, 0.0),
        1 => e,
        _ => {
            if e.norm() == 0.0 {
                return C64::new(0.0, 0.0);
            }
            (e.ln() * n as f64).exp()
        }
    }
}

/// `prod_j (1 - e_j^n)` without the absolute value; the signed product feeds
/// the orientation-sign identity and lattice-line derivations.
pub fn det_product(eigenvalues: &[C64], repetition: u32) -> Result<C64> {
    check_hyperbolic(eigenvalues)?;
    let mut prod = C64::new(1.0, 0.0);
    for e in eigenvalues {
        prod *= C64::new(1.0, 0.0) - eigen_pow(*e, repetition);
    }
    Ok(prod)
}

/// `|det(I - P^n)|` for a return map with the given spectrum.
pub fn det_factor(eigenvalues: &[C64], repetition: u32) -> Result<f64> {
    Ok(det_product(eigenvalues, repetition)?.norm())
}

fn check_hyperbolic(eigenvalues: &[C64]) -> Result<()> {
    for e in eigenvalues {
        if e.norm() == 0.0 {
            continue;
        }
        if e.norm().ln().abs() < HYPERBOLICITY_TOLERANCE {
            return Err(Error::NonHyperbolic {
                value: *e,
                context: "det_factor".into(),
            });
        }
    }
    Ok(())
}

/// Trace of the n-th power of the weight transport: the power sum of its
/// eigenvalues.
pub fn iterate_weight(weight_eigenvalues: &[C64], repetition: u32) -> C64 {
    weight_eigenvalues
        .iter()
        .map(|a| eigen_pow(*a, repetition))
        .sum()
}

/// The coefficient the n-th iterate of `orbit` contributes to the geometric
/// side: `T# . Tr(alpha^n) / |det(I - P^n)|`.
pub fn geometric_term(orbit: &PrimitiveOrbit, repetition: u32) -> Result<C64> {
    let det = det_factor(&orbit.backward_poincare_eigenvalues, repetition)?;
    Ok(iterate_weight(&orbit.weight_eigenvalues, repetition) * orbit.primitive_period / det)
}

//! The dual affine system on `C^m` built from the conjugate embeddings of a
//! homogeneous algebraic IFS.
//!
//! Conjugates of `beta` are split into expanding (`|beta_j| > 1`), unit-band
//! (`|beta_j| = 1`) and contracting blocks. The dual maps
//! `psi_i(z) = A z + b_i` act on the expanding block
//! (`A = diag(beta_1^-1, ..., beta_m^-1)`), share the exact-overlap
//! structure of the original system, and carry an explicit quantitative
//! separation: distinct level-`n` maps have rescaled translation vectors
//! `(t_(u,1), ..., t_(u,m))`, `t_(u,j) = sum_p a_(u_p, j) beta_j^(n-p+1)`,
//! at distance at least `C n^-(m'/m - 1)` with
//! `C = (D M^d)^(-1/m)`.

use std::collections::HashMap;
use std::sync::Arc;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::algebra::{norm_product_integer_check, rat_to_f64, NumberField};
use crate::census::OverlapCensus;
use crate::ifs::WeightedIFS;
use crate::{Error, Result};

/// Tolerance for classifying a conjugate as lying on the unit circle.
pub const UNIT_CIRCLE_TOL: f64 = 1e-9;

/// The dual system with its separation constants.
#[derive(Debug, Clone)]
pub struct DualSystem {
    pub field: Arc<NumberField>,
    /// Dual position -> field conjugate index. Expanding block first (the
    /// distinguished embedding leads), then the unit band, then the
    /// contracting block.
    pub permutation: Vec<usize>,
    /// Count of expanding conjugates.
    pub m: usize,
    /// Count of conjugates with modulus >= 1.
    pub m_prime: usize,
    /// Field degree `d`.
    pub degree: usize,
    /// `beta_j` in dual order.
    pub beta_conjugates: Vec<Complex64>,
    /// Diagonal of `A`: `beta_j^-1` for the expanding block.
    pub contraction_diag: Vec<Complex64>,
    /// `b_i`: per map, the expanding-block coordinates of the translation.
    pub translations: Vec<Vec<Complex64>>,
    /// Per map, all `d` coordinates (diagnostics and the `D` constant).
    pub translations_all: Vec<Vec<Complex64>>,
    /// Integrality denominator `M`.
    pub denominator: BigInt,
    /// `D`: bound constant for the non-expanding coordinate product.
    pub d_const: f64,
    /// `C = (D M^d)^(-1/m)`.
    pub c_const: f64,
    /// Upper bound on `diam(K~)` via the geometric series.
    pub dual_diam_bound: f64,
    /// True when the unit band was identified structurally (self-reciprocal
    /// minimal polynomial with `beta` the generator) rather than by
    /// tolerance.
    pub unit_band_structural: bool,
    pub warnings: Vec<String>,
}

impl DualSystem {
    /// `m'/m - 1`, the exponent of the claim bound decay.
    pub fn decay_exponent(&self) -> f64 {
        self.m_prime as f64 / self.m as f64 - 1.0
    }

    /// Minimum-distance bound `C n^-(m'/m - 1)` for distinct level-`n` maps.
    pub fn claim_bound(&self, n: usize) -> f64 {
        self.c_const * (n as f64).powf(-self.decay_exponent())
    }

    /// Growth envelope `((4 + 4 diam)/C)^(2m) n^(2(m'-m))` for `kappa_n`.
    pub fn kappa_envelope(&self, n: usize) -> f64 {
        ((4.0 + 4.0 * self.dual_diam_bound) / self.c_const).powi(2 * self.m as i32)
            * (n as f64).powi(2 * (self.m_prime - self.m) as i32)
    }
}

/// Builds the dual system from a homogeneous algebraic IFS.
pub fn build_dual(ifs: &WeightedIFS) -> Result<DualSystem> {
    let meta = ifs
        .algebraic
        .as_ref()
        .filter(|m| m.homogeneous)
        .ok_or_else(|| {
            Error::Unsupported("dual construction needs a homogeneous algebraic system".into())
        })?;
    let field = &meta.field;
    let d = field.degree;
    let beta_by_field: Vec<Complex64> = (0..d).map(|j| meta.beta.embed(j)).collect();
    if beta_by_field[0].norm() <= 1.0 + UNIT_CIRCLE_TOL {
        return Err(Error::InvalidIfs(
            "the distinguished embedding of beta must be expanding".into(),
        ));
    }

    // beta is the generator exactly when its coefficient vector is (0, 1, 0, ...).
    let beta_is_generator = {
        let c = meta.beta.coeffs();
        c.len() >= 2
            && c[0] == crate::algebra::Rat::from_integer(BigInt::from(0))
            && c[1] == crate::algebra::Rat::one()
            && c.iter().skip(2).all(|x| x == &crate::algebra::Rat::from_integer(BigInt::from(0)))
    };
    let structural = beta_is_generator && field.is_self_reciprocal();

    let mut warnings = Vec::new();
    #[derive(PartialEq, Eq, PartialOrd, Ord)]
    enum Band {
        Expanding,
        Unit,
        Contracting,
    }
    let band = |j: usize| -> Band {
        let mag = beta_by_field[j].norm();
        if (mag - 1.0).abs() <= UNIT_CIRCLE_TOL {
            Band::Unit
        } else if mag > 1.0 {
            Band::Expanding
        } else {
            Band::Contracting
        }
    };
    for j in 0..d {
        if band(j) == Band::Unit && !structural {
            warnings.push(format!(
                "conjugate {j} has |beta_j| within {UNIT_CIRCLE_TOL} of 1 but the unit band \
                 could not be confirmed structurally; possible misclassification"
            ));
        }
    }

    // Dual order: distinguished first, then remaining expanding by
    // descending modulus, unit band, contracting by descending modulus.
    let mut rest: Vec<usize> = (1..d).collect();
    rest.sort_by(|&a, &b| {
        band(a).cmp(&band(b)).then(
            beta_by_field[b]
                .norm()
                .partial_cmp(&beta_by_field[a].norm())
                .unwrap()
                .then(a.cmp(&b)),
        )
    });
    let mut permutation = vec![0usize];
    permutation.extend(rest);
    let m = permutation.iter().filter(|&&j| band(j) == Band::Expanding).count();
    let m_prime = m + permutation.iter().filter(|&&j| band(j) == Band::Unit).count();

    let beta_conjugates: Vec<Complex64> = permutation.iter().map(|&j| beta_by_field[j]).collect();
    let contraction_diag: Vec<Complex64> = beta_conjugates[..m]
        .iter()
        .map(|b| Complex64::new(1.0, 0.0) / b)
        .collect();

    // Exact translations and the integrality denominator M.
    let exact: Vec<crate::algebra::AlgebraicNumber> = ifs
        .maps
        .iter()
        .enumerate()
        .map(|(i, map)| {
            if let Some(te) = &map.translation_exact {
                Ok(te[0].clone())
            } else if let Some(tr) = &map.translation_rational {
                Ok(field.from_rational(tr[0].clone()))
            } else {
                Err(Error::Unsupported(format!(
                    "map {i} lacks an exact translation for the dual construction"
                )))
            }
        })
        .collect::<Result<_>>()?;
    let mut denominator = field.denominator_bound.clone();
    for a in &exact {
        denominator = denominator.lcm(&a.denominator_lcm());
    }
    denominator = denominator.abs();
    if denominator.is_one() && field.denominator_bound.is_one() {
        // nothing to add; M = 1
    }

    let translations_all: Vec<Vec<Complex64>> = exact
        .iter()
        .map(|a| permutation.iter().map(|&j| a.embed(j)).collect())
        .collect();
    let translations: Vec<Vec<Complex64>> = translations_all
        .iter()
        .map(|row| row[..m].to_vec())
        .collect();

    // D = (max 2|a_(i,j)| over the non-expanding block)^(d-m)
    //     * prod_(contracting) |beta_j| / (1 - |beta_j|).
    let mut max2a: f64 = 0.0;
    for row in &translations_all {
        for v in row.iter().take(d).skip(m) {
            max2a = max2a.max(2.0 * v.norm());
        }
    }
    let mut d_const = if d > m { max2a.powi((d - m) as i32) } else { 1.0 };
    for j in m_prime..d {
        let mag = beta_conjugates[j].norm();
        d_const *= mag / (1.0 - mag);
    }
    let m_pow_d = rat_to_f64(&crate::algebra::Rat::from_integer(denominator.clone())).powi(d as i32);
    let c_const = (d_const * m_pow_d).powf(-1.0 / m as f64);

    // diam(K~) <= 2 max|b_i| * sum_k ||A||^k.
    let a_norm = contraction_diag
        .iter()
        .map(|z| z.norm())
        .fold(0.0f64, f64::max);
    let max_b = translations
        .iter()
        .map(|b| b.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt())
        .fold(0.0f64, f64::max);
    let dual_diam_bound = 2.0 * max_b / (1.0 - a_norm);

    Ok(DualSystem {
        field: Arc::clone(field),
        permutation,
        m,
        m_prime,
        degree: d,
        beta_conjugates,
        contraction_diag,
        translations,
        translations_all,
        denominator,
        d_const,
        c_const,
        dual_diam_bound,
        unit_band_structural: structural,
        warnings,
    })
}

/// Rescaled translation vectors `t_(u,j) = beta_j * embed_j(scaled)` of the
/// level-`n` classes, in dual coordinate order.
///
/// With `coords = m` these are the points `A^-n psi_u(0)`; `coords = d`
/// exposes the full conjugate vector for diagnostics.
pub fn rescaled_points(
    dual: &DualSystem,
    census: &OverlapCensus,
    n: usize,
    coords: usize,
) -> Result<Vec<Vec<Complex64>>> {
    let table = census
        .depth(n)
        .ok_or_else(|| Error::InsufficientData(format!("census has no depth {n}")))?;
    if census.field.min_poly != dual.field.min_poly {
        return Err(Error::FieldMismatch);
    }
    let coords = coords.min(dual.degree);
    Ok(table
        .classes
        .iter()
        .map(|c| {
            (0..coords)
                .map(|jd| {
                    let j = dual.permutation[jd];
                    c.scaled_translation.embed(j) * dual.beta_conjugates[jd]
                })
                .collect()
        })
        .collect())
}

/// Report of the shared-overlap-structure verification.
#[derive(Debug, Clone)]
pub struct PropertyPReport {
    pub n: usize,
    pub pairs_checked: usize,
    pub exhaustive: bool,
    /// Smallest coordinate-wise distance seen across all conjugates.
    pub min_coordinate_gap: f64,
}

/// Verifies that distinct classes differ at *every* conjugate coordinate
/// (equality at one conjugate would force equality at all, by
/// irreducibility of the minimal polynomial).
///
/// Classes are exactly distinct by construction, so a numerically vanishing
/// coordinate difference is a correctness alarm, not a tolerance issue.
pub fn verify_property_p(
    dual: &DualSystem,
    census: &OverlapCensus,
    n: usize,
    pair_budget: usize,
    seed: u64,
) -> Result<PropertyPReport> {
    let points = rescaled_points(dual, census, n, dual.degree)?;
    let count = points.len();
    let total_pairs = count.saturating_mul(count.saturating_sub(1)) / 2;
    let exhaustive = total_pairs <= pair_budget;
    let mut min_gap = f64::INFINITY;
    let mut pairs_checked = 0usize;
    let mut check = |u: usize, v: usize| -> Result<()> {
        for j in 0..dual.degree {
            let du = points[u][j];
            let dv = points[v][j];
            let gap = (du - dv).norm();
            let tol = 1e-9 * (1.0 + du.norm() + dv.norm());
            min_gap = min_gap.min(gap);
            if gap <= tol {
                return Err(Error::CorrectnessAlarm(format!(
                    "distinct depth-{n} classes {u} and {v} collide at conjugate {j} \
                     (gap {gap:.3e}); shared overlap structure violated"
                )));
            }
        }
        pairs_checked += 1;
        Ok(())
    };
    if exhaustive {
        for u in 0..count {
            for v in u + 1..count {
                check(u, v)?;
            }
        }
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..pair_budget {
            let u = rng.gen_range(0..count);
            let v = rng.gen_range(0..count);
            if u != v {
                check(u, v)?;
            }
        }
    }
    Ok(PropertyPReport {
        n,
        pairs_checked,
        exhaustive,
        min_coordinate_gap: min_gap,
    })
}

/// `kappa_n` bounds: the largest number of rescaled points inside any
/// closed ball of radius `1 + diam(K~)`.
#[derive(Debug, Clone, Copy)]
pub struct KappaResult {
    pub n: usize,
    pub lower: usize,
    pub upper: usize,
    pub radius: f64,
}

/// Counts points in the worst ball.
///
/// For `m = 1` with a real expanding embedding the points are collinear and
/// a sorted two-pointer scan is exact (lower = upper). Otherwise a bucket
/// grid of side `radius` gives a certified sandwich: the densest single
/// bucket from below, the densest 3^(2m)-neighborhood from above.
pub fn kappa_n(dual: &DualSystem, census: &OverlapCensus, n: usize) -> Result<KappaResult> {
    let points = rescaled_points(dual, census, n, dual.m)?;
    let radius = 1.0 + dual.dual_diam_bound;
    let all_real = dual.m == 1 && points.iter().all(|p| p[0].im.abs() < 1e-9);
    if all_real {
        let mut xs: Vec<f64> = points.iter().map(|p| p[0].re).collect();
        xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let window = 2.0 * radius;
        let mut best = 0usize;
        let mut lo = 0usize;
        for hi in 0..xs.len() {
            while xs[hi] - xs[lo] > window {
                lo += 1;
            }
            best = best.max(hi - lo + 1);
        }
        return Ok(KappaResult {
            n,
            lower: best,
            upper: best,
            radius,
        });
    }
    // Bucket grid over R^(2m).
    let dims = 2 * dual.m;
    let mut buckets: HashMap<Vec<i64>, usize> = HashMap::new();
    let coord = |p: &Vec<Complex64>, k: usize| -> f64 {
        if k % 2 == 0 {
            p[k / 2].re
        } else {
            p[k / 2].im
        }
    };
    for p in &points {
        let key: Vec<i64> = (0..dims)
            .map(|k| (coord(p, k) / radius).floor() as i64)
            .collect();
        *buckets.entry(key).or_insert(0) += 1;
    }
    let lower = buckets.values().cloned().max().unwrap_or(0);
    let mut upper = 0usize;
    for key in buckets.keys() {
        let mut total = 0usize;
        let mut offset = vec![-1i64; dims];
        loop {
            let neighbor: Vec<i64> = key.iter().zip(&offset).map(|(a, b)| a + b).collect();
            total += buckets.get(&neighbor).copied().unwrap_or(0);
            // advance odometer over {-1,0,1}^dims
            let mut k = 0;
            loop {
                if k == dims {
                    break;
                }
                offset[k] += 1;
                if offset[k] <= 1 {
                    break;
                }
                offset[k] = -1;
                k += 1;
            }
            if k == dims {
                break;
            }
        }
        upper = upper.max(total);
    }
    Ok(KappaResult {
        n,
        lower,
        upper,
        radius,
    })
}

/// Result of the minimum-distance claim verification at one depth.
#[derive(Debug, Clone, Copy)]
pub struct ClaimCheck {
    pub n: usize,
    pub min_distance: f64,
    pub bound: f64,
    pub pairs_checked: usize,
    pub exhaustive: bool,
}

/// Verifies that distinct level-`n` classes keep their rescaled points at
/// distance `>= C n^-(m'/m - 1)` (up to 1e-9 numeric slack); a violation is
/// a correctness alarm.
pub fn separation_claim_check(
    dual: &DualSystem,
    census: &OverlapCensus,
    n: usize,
    seed: u64,
) -> Result<ClaimCheck> {
    let points = rescaled_points(dual, census, n, dual.m)?;
    let count = points.len();
    let bound = dual.claim_bound(n);
    let dist = |u: usize, v: usize| -> f64 {
        points[u]
            .iter()
            .zip(&points[v])
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt()
    };
    let mut min_distance = f64::INFINITY;
    let mut pairs_checked = 0usize;
    let all_real = dual.m == 1 && points.iter().all(|p| p[0].im.abs() < 1e-9);
    let exhaustive = all_real || count <= 10_000;
    if all_real {
        // Sorted adjacent gaps give the exact minimum for collinear points.
        let mut xs: Vec<f64> = points.iter().map(|p| p[0].re).collect();
        xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for w in xs.windows(2) {
            min_distance = min_distance.min(w[1] - w[0]);
            pairs_checked += 1;
        }
    } else if exhaustive {
        for u in 0..count {
            for v in u + 1..count {
                min_distance = min_distance.min(dist(u, v));
                pairs_checked += 1;
            }
        }
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..1_000_000usize {
            let u = rng.gen_range(0..count);
            let v = rng.gen_range(0..count);
            if u != v {
                min_distance = min_distance.min(dist(u, v));
                pairs_checked += 1;
            }
        }
    }
    if min_distance < bound - 1e-9 {
        return Err(Error::CorrectnessAlarm(format!(
            "depth {n}: min rescaled distance {min_distance} below the separation bound {bound}"
        )));
    }
    Ok(ClaimCheck {
        n,
        min_distance,
        bound,
        pairs_checked,
        exhaustive,
    })
}

/// Result of the conjugate-product integrality spot check.
#[derive(Debug, Clone, Copy)]
pub struct IntegralityReport {
    pub n: usize,
    pub pairs_checked: usize,
    /// Smallest |product| observed (must stay >= 1 for distinct classes).
    pub min_abs_product: f64,
}

/// For random distinct class pairs, `M^d prod_j (t_(u,j) - t_(v,j))` must be
/// a nonzero integer (up to embedding noise): the scaled differences are
/// algebraic integers and the product over all conjugates is rational.
pub fn integrality_check(
    dual: &DualSystem,
    census: &OverlapCensus,
    n: usize,
    pairs: usize,
    seed: u64,
) -> Result<IntegralityReport> {
    let points = rescaled_points(dual, census, n, dual.degree)?;
    let count = points.len();
    if count < 2 {
        return Err(Error::InsufficientData(
            "integrality check needs at least two classes".into(),
        ));
    }
    let m_f64 = dual
        .denominator
        .to_f64()
        .ok_or_else(|| Error::Numerical("denominator too large for f64".into()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut min_abs = f64::INFINITY;
    let mut checked = 0usize;
    while checked < pairs {
        let u = rng.gen_range(0..count);
        let v = rng.gen_range(0..count);
        if u == v {
            continue;
        }
        let values: Vec<Complex64> = (0..dual.degree)
            .map(|j| (points[u][j] - points[v][j]) * m_f64)
            .collect();
        let prod = norm_product_integer_check(&values, 1e-6)?;
        if prod == 0.0 {
            return Err(Error::CorrectnessAlarm(format!(
                "depth {n}: conjugate product vanished for distinct classes {u}, {v}"
            )));
        }
        min_abs = min_abs.min(prod.abs());
        checked += 1;
    }
    Ok(IntegralityReport {
        n,
        pairs_checked: checked,
        min_abs_product: min_abs,
    })
}

//! Exact enumeration of word compositions with canonical-form
//! deduplication, and the finite-scale overlap diagnostics built on it:
//! distinct-map counts `N_n`, aggregated class weights, `t_n`, `Delta_n`,
//! Garsia entropy, class spectra `T_n(q)` and dimension estimates.
//!
//! For a homogeneous system `x -> x/beta + a_i` the level-`n` composition
//! along the word `u` has translation `sum_p a_(u_p) beta^(1-p)`; scaling by
//! `beta^(n-1)` gives `sum_p a_(u_p) beta^(n-p)`, an element of the number
//! field whose canonical coefficient vector is the class key. Classes at
//! depth `n+1` are generated from classes at depth `n` by one
//! multiplication by `beta` and one translation per letter, which is
//! `O(N_n * l)` per level instead of `l^(n+1)`: right-composition preserves
//! map equality, so deduplicated classes expand exactly like words.

use std::collections::HashMap;
use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::algebra::{rat_to_f64, AlgebraicNumber, NumberField, Rat};
use crate::ifs::WeightedIFS;
use crate::sweep;
use crate::{Error, Result};

/// One exact-overlap class of level-`n` compositions.
#[derive(Debug, Clone)]
pub struct CanonicalComposition {
    /// `beta^(n-1)` times the translation of the composed map, exact.
    pub scaled_translation: AlgebraicNumber,
    /// Real value of the unscaled translation.
    pub numeric_translation: f64,
    /// Aggregated probability of all words in the class.
    pub weight_mass: f64,
    /// Exact mass when the weights are rational.
    pub weight_mass_exact: Option<Rat>,
    /// Number of words collapsing onto this map.
    pub word_count: u128,
}

/// Class table at one depth, sorted by canonical key.
#[derive(Debug, Clone)]
pub struct DepthTable {
    pub n: usize,
    pub classes: Vec<CanonicalComposition>,
}

impl DepthTable {
    pub fn class_count(&self) -> usize {
        self.classes.len()
    }
}

/// Per-depth class tables for a homogeneous algebraic system.
#[derive(Debug, Clone)]
pub struct OverlapCensus {
    pub field: Arc<NumberField>,
    pub beta: AlgebraicNumber,
    /// `depths[k]` holds depth `k + 1`.
    pub depths: Vec<DepthTable>,
    /// Set when the class budget stopped the expansion before the requested
    /// depth; holds the first depth that was not computed.
    pub truncated_at: Option<usize>,
}

impl OverlapCensus {
    pub fn max_depth(&self) -> usize {
        self.depths.len()
    }

    pub fn depth(&self, n: usize) -> Option<&DepthTable> {
        if n == 0 {
            return None;
        }
        self.depths.get(n - 1)
    }

    /// `N_n` for all computed depths.
    pub fn counts(&self) -> Vec<usize> {
        self.depths.iter().map(|d| d.classes.len()).collect()
    }

    /// First depth at which two distinct words share a map.
    pub fn first_overlap_depth(&self) -> Option<usize> {
        self.depths
            .iter()
            .find(|d| d.classes.iter().any(|c| c.word_count > 1))
            .map(|d| d.n)
    }

    /// `log |beta|` at the distinguished embedding.
    pub fn log_abs_beta(&self) -> f64 {
        self.beta.embed(0).norm().ln()
    }
}

/// Exact translations of the maps as field elements.
fn exact_translations(ifs: &WeightedIFS, field: &Arc<NumberField>) -> Result<Vec<AlgebraicNumber>> {
    ifs.maps
        .iter()
        .enumerate()
        .map(|(i, m)| {
            if let Some(te) = &m.translation_exact {
                let e = te[0].clone();
                if e.field != *field {
                    return Err(Error::FieldMismatch);
                }
                Ok(e)
            } else if let Some(tr) = &m.translation_rational {
                Ok(field.from_rational(tr[0].clone()))
            } else {
                Err(Error::Unsupported(format!(
                    "map {i} has no exact translation; the census needs field or rational data"
                )))
            }
        })
        .collect()
}

fn algebraic_meta(ifs: &WeightedIFS) -> Result<(&Arc<NumberField>, &AlgebraicNumber)> {
    match &ifs.algebraic {
        Some(meta) if meta.homogeneous => Ok((&meta.field, &meta.beta)),
        Some(_) => Err(Error::Unsupported(
            "census requires a homogeneous system".into(),
        )),
        None => Err(Error::Unsupported(
            "census requires homogeneous algebraic metadata".into(),
        )),
    }
}

/// Builds the class tables up to `n_max`, stopping early (with
/// `truncated_at` set) if a depth would exceed `class_budget` classes.
pub fn census(ifs: &WeightedIFS, n_max: usize, class_budget: usize) -> Result<OverlapCensus> {
    let (field, beta) = algebraic_meta(ifs)?;
    if beta.embed(0).im.abs() > 1e-9 {
        return Err(Error::Unsupported(
            "census requires a real distinguished embedding of beta".into(),
        ));
    }
    let mut out = OverlapCensus {
        field: Arc::clone(field),
        beta: beta.clone(),
        depths: Vec::new(),
        truncated_at: None,
    };
    extend_census(&mut out, ifs, n_max, class_budget)?;
    Ok(out)
}

/// Continues an existing census (possibly loaded from a snapshot) to
/// `n_max`.
pub fn extend_census(
    census: &mut OverlapCensus,
    ifs: &WeightedIFS,
    n_max: usize,
    class_budget: usize,
) -> Result<()> {
    let (field, beta) = algebraic_meta(ifs)?;
    if *beta != census.beta {
        return Err(Error::InvalidIfs(
            "census snapshot was built for a different beta".into(),
        ));
    }
    let translations = exact_translations(ifs, field)?;
    let weights_exact = ifs.weights_exact.clone();
    let beta_real = beta.embed(0).re;

    census.truncated_at = None;
    while census.depths.len() < n_max {
        let next_n = census.depths.len() + 1;
        // Projected upper bound on the class count for the next depth.
        let projected = census
            .depths
            .last()
            .map_or(ifs.len(), |d| d.classes.len() * ifs.len());
        if projected > class_budget {
            census.truncated_at = Some(next_n);
            return Ok(());
        }
        let table = if let Some(prev) = census.depths.last() {
            expand_depth(
                prev,
                beta,
                &translations,
                &ifs.weights,
                &weights_exact,
                beta_real,
            )
        } else {
            first_depth(field, &translations, &ifs.weights, &weights_exact)
        };
        verify_mass(&table, next_n)?;
        census.depths.push(table);
    }
    Ok(())
}

fn first_depth(
    field: &Arc<NumberField>,
    translations: &[AlgebraicNumber],
    weights: &[f64],
    weights_exact: &Option<Vec<Rat>>,
) -> DepthTable {
    let _ = field;
    let mut classes: HashMap<Vec<Rat>, CanonicalComposition> = HashMap::new();
    for (i, a) in translations.iter().enumerate() {
        let key = a.coeffs().to_vec();
        let entry = classes.entry(key).or_insert_with(|| CanonicalComposition {
            scaled_translation: a.clone(),
            numeric_translation: a.embed(0).re,
            weight_mass: 0.0,
            weight_mass_exact: weights_exact.as_ref().map(|_| Rat::zero()),
            word_count: 0,
        });
        entry.weight_mass += weights[i];
        if let (Some(me), Some(ws)) = (&mut entry.weight_mass_exact, weights_exact) {
            *me += ws[i].clone();
        }
        entry.word_count += 1;
    }
    sorted_table(1, classes)
}

fn expand_depth(
    prev: &DepthTable,
    beta: &AlgebraicNumber,
    translations: &[AlgebraicNumber],
    weights: &[f64],
    weights_exact: &Option<Vec<Rat>>,
    beta_real: f64,
) -> DepthTable {
    let n = prev.n + 1;
    let mut classes: HashMap<Vec<Rat>, CanonicalComposition> =
        HashMap::with_capacity(prev.classes.len() * translations.len());
    let scale = beta_real.powi(-(n as i32 - 1));
    for class in &prev.classes {
        let stretched = beta
            .checked_mul(&class.scaled_translation)
            .expect("same field");
        for (i, a) in translations.iter().enumerate() {
            let scaled = stretched.checked_add(a).expect("same field");
            let key = scaled.coeffs().to_vec();
            let entry = classes.entry(key).or_insert_with(|| {
                let numeric = scaled.embed(0).re * scale;
                CanonicalComposition {
                    scaled_translation: scaled.clone(),
                    numeric_translation: numeric,
                    weight_mass: 0.0,
                    weight_mass_exact: weights_exact.as_ref().map(|_| Rat::zero()),
                    word_count: 0,
                }
            });
            entry.weight_mass += class.weight_mass * weights[i];
            if let (Some(me), Some(ws)) = (&mut entry.weight_mass_exact, weights_exact) {
                *me += class.weight_mass_exact.as_ref().unwrap() * &ws[i];
            }
            entry.word_count += class.word_count;
        }
    }
    sorted_table(n, classes)
}

fn sorted_table(n: usize, classes: HashMap<Vec<Rat>, CanonicalComposition>) -> DepthTable {
    let mut entries: Vec<(Vec<Rat>, CanonicalComposition)> = classes.into_iter().collect();
    entries.sort_by(|a, b| a.0.cmp(&b.0));
    DepthTable {
        n,
        classes: entries.into_iter().map(|(_, c)| c).collect(),
    }
}

/// Total class mass must be exactly one for rational weights (and close to
/// one otherwise).
fn verify_mass(table: &DepthTable, n: usize) -> Result<()> {
    if table.classes.iter().all(|c| c.weight_mass_exact.is_some()) {
        let total: Rat = table
            .classes
            .iter()
            .map(|c| c.weight_mass_exact.clone().unwrap())
            .sum();
        if total != Rat::one() {
            return Err(Error::CorrectnessAlarm(format!(
                "depth {n}: exact class masses sum to {total}, not 1"
            )));
        }
    } else {
        let total: f64 = table.classes.iter().map(|c| c.weight_mass).sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::CorrectnessAlarm(format!(
                "depth {n}: class masses sum to {total}"
            )));
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Growth exponent and dimension estimates.
// ---------------------------------------------------------------------------

/// Per-depth growth data for `N_n`.
#[derive(Debug, Clone)]
pub struct GrowthReport {
    /// `log N_n / (n log |beta|)` per depth.
    pub per_n: Vec<f64>,
    /// Minimum over the computed depths: a rigorous upper bound on the
    /// limit, by submultiplicativity of `N_n`.
    pub upper_bound: f64,
    /// The deepest value, used as the point estimate.
    pub estimate: f64,
}

pub fn growth_exponent(census: &OverlapCensus) -> Result<GrowthReport> {
    if census.max_depth() < 2 {
        return Err(Error::InsufficientData(
            "growth exponent needs at least two census depths".into(),
        ));
    }
    let log_beta = census.log_abs_beta();
    let per_n: Vec<f64> = census
        .depths
        .iter()
        .map(|d| (d.classes.len() as f64).ln() / (d.n as f64 * log_beta))
        .collect();
    let upper_bound = per_n.iter().cloned().fold(f64::INFINITY, f64::min);
    let estimate = *per_n.last().unwrap();
    Ok(GrowthReport {
        per_n,
        upper_bound,
        estimate,
    })
}

/// `min{1, s_hat}` from the census growth exponent.
#[derive(Debug, Clone)]
pub struct DimKEstimate {
    /// From the Fekete upper bound (rigorous upper bound on the dimension).
    pub upper_bound: f64,
    /// From the deepest-level estimate.
    pub estimate: f64,
}

pub fn dim_k_estimate(census: &OverlapCensus) -> Result<DimKEstimate> {
    let g = growth_exponent(census)?;
    Ok(DimKEstimate {
        upper_bound: g.upper_bound.min(1.0),
        estimate: g.estimate.min(1.0),
    })
}

/// Class spectrum value `T_n(q) = log(sum p~^q) / (-n log |beta|)` and the
/// depth-`n` min-branch estimate `min{q-1, T_n(q)}`.
///
/// This is the per-level normalization used alongside the class tables; the
/// one-step normalization `sum p~^q |r|^(-T) = 1` differs from it by the
/// factor `n` and is not what the limit statement needs, so the per-level
/// form is implemented and the discrepancy is documented here rather than
/// resolved.
#[derive(Debug, Clone, Copy)]
pub struct TnSpectrumPoint {
    pub q: f64,
    pub t_n: f64,
    pub min_branch: f64,
}

pub fn tn_spectrum(census: &OverlapCensus, n: usize, q: f64) -> Result<TnSpectrumPoint> {
    let table = census
        .depth(n)
        .ok_or_else(|| Error::InsufficientData(format!("census has no depth {n}")))?;
    // log-sum-exp of q * ln(mass) over classes.
    let logs: Vec<f64> = table
        .classes
        .iter()
        .map(|c| q * c.weight_mass.ln())
        .collect();
    let mx = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let log_sum = mx + logs.iter().map(|x| (x - mx).exp()).sum::<f64>().ln();
    let t_n = log_sum / (-(n as f64) * census.log_abs_beta());
    Ok(TnSpectrumPoint {
        q,
        t_n,
        min_branch: if q >= 1.0 { (q - 1.0).min(t_n) } else { t_n },
    })
}

/// Garsia entropy `h_n = sum (-p~ ln p~)` at depth `n`, its per-level rate
/// and the dimension estimate `min{1, h_n / (n log |beta|)}`.
#[derive(Debug, Clone, Copy)]
pub struct GarsiaRow {
    pub n: usize,
    pub entropy: f64,
    pub rate: f64,
    pub dim_estimate: f64,
}

pub fn garsia_dimension(census: &OverlapCensus, n: usize) -> Result<GarsiaRow> {
    let table = census
        .depth(n)
        .ok_or_else(|| Error::InsufficientData(format!("census has no depth {n}")))?;
    let entropy: f64 = table
        .classes
        .iter()
        .map(|c| {
            if c.weight_mass > 0.0 {
                -c.weight_mass * c.weight_mass.ln()
            } else {
                0.0
            }
        })
        .sum();
    let rate = entropy / (n as f64 * census.log_abs_beta());
    Ok(GarsiaRow {
        n,
        entropy,
        rate,
        dim_estimate: rate.min(1.0),
    })
}

// ---------------------------------------------------------------------------
// t_n diagnostics (sweep-line over inflated image intervals).
// ---------------------------------------------------------------------------

/// Which window scale `t_n` uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TnVariant {
    /// Words from the section `W_n`, window radius `2^-n`.
    WnDyadic,
    /// Words of length `n`, window radius `|beta|^-n` (homogeneous only).
    SigmaBeta,
}

/// A `t_n` measurement.
///
/// The attractor is replaced by its bounding interval, so the reported value
/// is an upper bound on the exact `t_n` (deciding `K` against a window is
/// not computable in general); the sub-exponential-growth verdicts read off
/// these values stay meaningful because upper bounds can only inflate them.
#[derive(Debug, Clone, Copy)]
pub struct TnResult {
    pub n: usize,
    pub t_n: usize,
    /// Number of distinct maps that entered the sweep.
    pub distinct_maps: usize,
    /// `(1/n) log t_n`.
    pub log_rate: f64,
}

/// Sweep-line multiplicity of the inflated image intervals
/// `[t_u + min(sK), t_u + max(sK)] +- rho` for distinct maps.
pub fn t_n_from_classes(
    translations: &[f64],
    signed_scale: f64,
    hull: (f64, f64),
    rho: f64,
) -> usize {
    let (lo, hi) = hull;
    let img_lo = (signed_scale * lo).min(signed_scale * hi);
    let img_hi = (signed_scale * lo).max(signed_scale * hi);
    let intervals: Vec<(f64, f64)> = translations
        .iter()
        .map(|t| (t + img_lo - rho, t + img_hi + rho))
        .collect();
    sweep::max_closed_overlap(&intervals)
}

/// `t_n` for a homogeneous algebraic system, from its census.
///
/// `WnDyadic` maps the dyadic scale onto the word length
/// `k(n) = min{k : r^k <= 2^-n}` (homogeneous sections are single-length);
/// the census must reach that depth.
pub fn t_n_diagnostic(
    ifs: &WeightedIFS,
    census: &OverlapCensus,
    n: usize,
    variant: TnVariant,
) -> Result<TnResult> {
    if ifs.ambient_dim != 1 {
        return Err(Error::Unsupported("t_n sweep is one-dimensional".into()));
    }
    if !ifs.is_homogeneous() {
        return Err(Error::Unsupported(match variant {
            TnVariant::SigmaBeta => "the |beta|^-n window variant needs a homogeneous system",
            TnVariant::WnDyadic => {
                "use the rational W_n path for non-homogeneous systems"
            }
        }
        .into()));
    }
    let hull = ifs.attractor_hull_1d()?;
    let ratio = ifs.maps[0].ratio;
    let signed = ifs.maps[0].scale_1d();
    let (depth, rho) = match variant {
        TnVariant::SigmaBeta => (n, census.beta.embed(0).norm().powi(-(n as i32))),
        TnVariant::WnDyadic => {
            let mut k = ((n as f64) * 2f64.ln() / -ratio.ln()).ceil() as usize;
            k = k.max(1);
            while ratio.powi(k as i32) > 2f64.powi(-(n as i32)) {
                k += 1;
            }
            while k > 1 && ratio.powi(k as i32 - 1) <= 2f64.powi(-(n as i32)) {
                k -= 1;
            }
            (k, 2f64.powi(-(n as i32)))
        }
    };
    let table = census.depth(depth).ok_or_else(|| {
        Error::InsufficientData(format!(
            "census reaches depth {}, but depth {depth} is needed",
            census.max_depth()
        ))
    })?;
    let translations: Vec<f64> = table.classes.iter().map(|c| c.numeric_translation).collect();
    let t_n = t_n_from_classes(&translations, signed.powi(depth as i32), hull, rho);
    Ok(TnResult {
        n,
        t_n,
        distinct_maps: translations.len(),
        log_rate: (t_n as f64).ln() / n as f64,
    })
}

/// `t_n` (dyadic variant) for rational systems, with exact `W_n` map
/// deduplication; works for distinct ratios, e.g. integer-multiplier
/// systems.
pub fn t_n_dyadic_rational(ifs: &WeightedIFS, n: usize, budget: usize) -> Result<TnResult> {
    if ifs.ambient_dim != 1 {
        return Err(Error::Unsupported("t_n sweep is one-dimensional".into()));
    }
    let mut scales = Vec::new();
    let mut trans = Vec::new();
    for (i, m) in ifs.maps.iter().enumerate() {
        match (m.scale_1d_rational(), &m.translation_rational) {
            (Some(s), Some(t)) => {
                scales.push(s);
                trans.push(t[0].clone());
            }
            _ => {
                return Err(Error::Unsupported(format!(
                    "map {i} lacks exact rational data for W_n deduplication"
                )))
            }
        }
    }
    let threshold = Rat::new(BigInt::one(), BigInt::from(2).pow(n as u32));
    let mut distinct: HashMap<(Rat, Rat), ()> = HashMap::new();
    let mut visited = 0usize;
    let mut stack: Vec<(Rat, Rat)> = vec![(Rat::one(), Rat::zero())];
    while let Some((scale, t)) = stack.pop() {
        for (s_i, a_i) in scales.iter().zip(&trans) {
            visited += 1;
            if visited > budget {
                return Err(Error::BudgetExceeded(format!(
                    "W_n enumeration exceeded {budget} words"
                )));
            }
            let ns = &scale * s_i;
            let nt = &t + &(&scale * a_i);
            if ns.abs() <= threshold {
                distinct.entry((ns, nt)).or_insert(());
            } else {
                stack.push((ns, nt));
            }
        }
    }
    let hull = ifs.attractor_hull_1d()?;
    let rho = 2f64.powi(-(n as i32));
    // Distinct maps can have distinct scales; build each interval directly.
    let intervals: Vec<(f64, f64)> = distinct
        .keys()
        .map(|(s, t)| {
            let sf = rat_to_f64(s);
            let tf = rat_to_f64(t);
            let a = (sf * hull.0).min(sf * hull.1) + tf - rho;
            let b = (sf * hull.0).max(sf * hull.1) + tf + rho;
            (a, b)
        })
        .collect();
    let t_n = sweep::max_closed_overlap(&intervals);
    Ok(TnResult {
        n,
        t_n,
        distinct_maps: intervals.len(),
        log_rate: (t_n as f64).ln() / n as f64,
    })
}

// ---------------------------------------------------------------------------
// Exponential-separation diagnostics.
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy)]
pub struct EscRow {
    pub n: usize,
    /// Min distance over distinct words (0 once an exact overlap exists).
    pub delta: f64,
    /// Min distance over distinct maps.
    pub delta_tilde: f64,
}

#[derive(Debug, Clone)]
pub struct EscReport {
    pub rows: Vec<EscRow>,
    pub first_overlap_depth: Option<usize>,
    /// `c` fitted from `log delta~_n ~ n log c`.
    pub fitted_c: Option<f64>,
}

/// Word- and map-level minimum distances per depth.
///
/// Homogeneous `d = 1` only: with equal ratios and identity rotations the
/// similarity distance reduces to the translation distance.
pub fn esc_diagnostic(census: &OverlapCensus, n_max: usize) -> Result<EscReport> {
    let mut rows = Vec::new();
    for table in census.depths.iter().take(n_max) {
        if table.classes.len() < 2 {
            return Err(Error::InsufficientData(format!(
                "depth {}: a minimum over distinct maps needs at least two classes",
                table.n
            )));
        }
        let mut translations: Vec<f64> = table
            .classes
            .iter()
            .map(|c| c.numeric_translation)
            .collect();
        translations.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let delta_tilde = translations
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::INFINITY, f64::min);
        let has_overlap = table.classes.iter().any(|c| c.word_count > 1);
        rows.push(EscRow {
            n: table.n,
            delta: if has_overlap { 0.0 } else { delta_tilde },
            delta_tilde,
        });
    }
    // Least-squares fit of ln(delta~) against n.
    let samples: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.delta_tilde > 0.0)
        .map(|r| (r.n as f64, r.delta_tilde.ln()))
        .collect();
    let fitted_c = if samples.len() >= 2 {
        let n = samples.len() as f64;
        let sx: f64 = samples.iter().map(|s| s.0).sum();
        let sy: f64 = samples.iter().map(|s| s.1).sum();
        let sxx: f64 = samples.iter().map(|s| s.0 * s.0).sum();
        let sxy: f64 = samples.iter().map(|s| s.0 * s.1).sum();
        let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
        Some(slope.exp())
    } else {
        None
    };
    Ok(EscReport {
        rows,
        first_overlap_depth: census.first_overlap_depth(),
        fitted_c,
    })
}

// ---------------------------------------------------------------------------
// AWSC criteria.
// ---------------------------------------------------------------------------

/// The ratio-sum criterion: under ESC, AWSC holds iff `sum r_i <= 1`.
#[derive(Debug, Clone)]
pub struct RatioSumVerdict {
    pub sum: f64,
    pub sum_exact: Option<Rat>,
    /// The AWSC verdict under ESC.
    pub awsc_if_esc: bool,
    /// True when ESC was not asserted, making the verdict conditional.
    pub conditional: bool,
    /// `1 - sum` (negative when the criterion fails).
    pub margin: f64,
}

pub fn ratio_sum_criterion(ifs: &WeightedIFS) -> RatioSumVerdict {
    let sum: f64 = ifs.maps.iter().map(|m| m.ratio).sum();
    let sum_exact: Option<Rat> = ifs
        .maps
        .iter()
        .map(|m| m.ratio_exact.clone())
        .collect::<Option<Vec<_>>>()
        .map(|v| v.into_iter().sum());
    let awsc_if_esc = match &sum_exact {
        Some(e) => *e <= Rat::one(),
        None => sum <= 1.0 + 1e-12,
    };
    RatioSumVerdict {
        sum,
        sum_exact,
        awsc_if_esc,
        conditional: ifs.assertions.esc != Some(true),
        margin: 1.0 - sum,
    }
}

/// One row of the integer-system bound verification.
#[derive(Debug, Clone, Copy)]
pub struct BoundCheckRow {
    pub n: usize,
    pub t_n: usize,
    pub bound: f64,
}

/// Constants and per-`n` results of the `t_n < (n+1)^l (r + 2Q max|m| + 1)^d`
/// verification for integer-multiplier rational systems.
#[derive(Debug, Clone)]
pub struct BoundCheckReport {
    pub q_denominator: u64,
    pub r_const: u64,
    pub max_abs_multiplier: i64,
    pub bound_base: f64,
    pub rows: Vec<BoundCheckRow>,
}

/// Verifies the explicit `t_n` bound for systems `x -> x/m_i + a_i`.
///
/// The bound is proven, so any measured violation is a correctness alarm
/// (an implementation bug), not a tight inequality.
pub fn rational_integer_bound_check(
    ifs: &WeightedIFS,
    n_max: usize,
    budget: usize,
) -> Result<BoundCheckReport> {
    let meta = ifs.rational_integer.as_ref().ok_or_else(|| {
        Error::Unsupported("bound check requires integer-multiplier metadata".into())
    })?;
    if ifs.ambient_dim != 1 {
        return Err(Error::Unsupported(
            "bound verification is run on d = 1 instances".into(),
        ));
    }
    let q = meta.denominator;
    let max_abs_m = meta.multipliers.iter().map(|m| m.abs()).max().unwrap_or(0);
    // r = least integer greater than Q * diam(K); exact when the hull is.
    let r_const = match ifs.attractor_hull_1d_exact()? {
        Some((lo, hi)) => {
            let diam = &hi - &lo;
            let qd = &diam * Rat::from_integer(BigInt::from(q));
            let fl = qd.floor();
            let next = if qd.is_integer() { &qd + Rat::one() } else { &fl + Rat::one() };
            next.to_integer().to_u64().ok_or_else(|| {
                Error::Numerical("r constant overflows u64".into())
            })?
        }
        None => {
            let (lo, hi) = ifs.attractor_hull_1d()?;
            (q as f64 * (hi - lo)).floor() as u64 + 1
        }
    };
    let l = ifs.len() as f64;
    let bound_base = r_const as f64 + 2.0 * q as f64 * max_abs_m as f64 + 1.0;
    let mut rows = Vec::new();
    for n in 1..=n_max {
        let t = t_n_dyadic_rational(ifs, n, budget)?;
        let bound = ((n + 1) as f64).powf(l) * bound_base;
        if (t.t_n as f64) >= bound {
            return Err(Error::CorrectnessAlarm(format!(
                "measured t_{n} = {} is not below the proven bound {bound}",
                t.t_n
            )));
        }
        rows.push(BoundCheckRow {
            n,
            t_n: t.t_n,
            bound,
        });
    }
    Ok(BoundCheckReport {
        q_denominator: q,
        r_const,
        max_abs_multiplier: max_abs_m,
        bound_base,
        rows,
    })
}

// ---------------------------------------------------------------------------
// Binary snapshot for resuming deep censuses.
// ---------------------------------------------------------------------------

/// Versioned binary snapshot of a census (canonical-form table included),
/// for resuming deep runs.
pub mod snapshot {
    use super::*;
    use std::io::{Read, Write};

    const MAGIC: &[u8; 8] = b"SSCENSUS";
    const VERSION: u32 = 1;

    pub fn write_census<W: Write>(census: &OverlapCensus, w: &mut W) -> Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&VERSION.to_le_bytes())?;
        let deg = census.field.degree as u32;
        w.write_all(&deg.to_le_bytes())?;
        for c in &census.field.min_poly {
            write_bigint(w, c)?;
        }
        // The distinguished conjugate is the first by construction; record
        // where it sits in the canonical sort so the field can be rebuilt.
        let distinguished = canonical_position(&census.field);
        w.write_all(&(distinguished as u32).to_le_bytes())?;
        let denom = census
            .field
            .denominator_bound
            .to_u64()
            .ok_or_else(|| Error::Snapshot("denominator bound overflows u64".into()))?;
        w.write_all(&denom.to_le_bytes())?;
        for c in census.beta.coeffs() {
            write_rat(w, c)?;
        }
        w.write_all(&(census.depths.len() as u32).to_le_bytes())?;
        match census.truncated_at {
            Some(n) => {
                w.write_all(&[1u8])?;
                w.write_all(&(n as u32).to_le_bytes())?;
            }
            None => w.write_all(&[0u8, 0, 0, 0, 0])?,
        }
        for table in &census.depths {
            w.write_all(&(table.n as u32).to_le_bytes())?;
            w.write_all(&(table.classes.len() as u64).to_le_bytes())?;
            for class in &table.classes {
                for c in class.scaled_translation.coeffs() {
                    write_rat(w, c)?;
                }
                w.write_all(&class.word_count.to_le_bytes())?;
                w.write_all(&class.weight_mass.to_le_bytes())?;
                match &class.weight_mass_exact {
                    Some(m) => {
                        w.write_all(&[1u8])?;
                        write_rat(w, m)?;
                    }
                    None => w.write_all(&[0u8])?,
                }
            }
        }
        Ok(())
    }

    pub fn read_census<R: Read>(r: &mut R) -> Result<OverlapCensus> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Snapshot("bad magic".into()));
        }
        let version = read_u32(r)?;
        if version != VERSION {
            return Err(Error::Snapshot(format!("unsupported version {version}")));
        }
        let deg = read_u32(r)? as usize;
        let mut min_poly = Vec::with_capacity(deg + 1);
        for _ in 0..=deg {
            min_poly.push(read_bigint(r)?);
        }
        let distinguished = read_u32(r)? as usize;
        let denom = read_u64(r)?;
        let field = Arc::new(NumberField::new(min_poly, distinguished, denom)?);
        let mut beta_coeffs = Vec::with_capacity(deg);
        for _ in 0..deg {
            beta_coeffs.push(read_rat(r)?);
        }
        let beta = field.element(beta_coeffs);
        let beta_real = beta.embed(0).re;
        let n_depths = read_u32(r)? as usize;
        let mut flag = [0u8; 1];
        r.read_exact(&mut flag)?;
        let trunc_val = read_u32(r)? as usize;
        let truncated_at = if flag[0] == 1 { Some(trunc_val) } else { None };
        let mut depths = Vec::with_capacity(n_depths);
        for _ in 0..n_depths {
            let n = read_u32(r)? as usize;
            let count = read_u64(r)? as usize;
            let mut classes = Vec::with_capacity(count);
            let scale = beta_real.powi(-(n as i32 - 1));
            for _ in 0..count {
                let mut coeffs = Vec::with_capacity(deg);
                for _ in 0..deg {
                    coeffs.push(read_rat(r)?);
                }
                let scaled = field.element(coeffs);
                let mut wc = [0u8; 16];
                r.read_exact(&mut wc)?;
                let word_count = u128::from_le_bytes(wc);
                let mut mf = [0u8; 8];
                r.read_exact(&mut mf)?;
                let weight_mass = f64::from_le_bytes(mf);
                r.read_exact(&mut flag)?;
                let weight_mass_exact = if flag[0] == 1 { Some(read_rat(r)?) } else { None };
                let numeric_translation = scaled.embed(0).re * scale;
                classes.push(CanonicalComposition {
                    scaled_translation: scaled,
                    numeric_translation,
                    weight_mass,
                    weight_mass_exact,
                    word_count,
                });
            }
            depths.push(DepthTable { n, classes });
        }
        Ok(OverlapCensus {
            field,
            beta,
            depths,
            truncated_at,
        })
    }

    /// Index of the distinguished conjugate in the canonical (descending
    /// modulus) order, as `NumberField::new` expects it.
    fn canonical_position(field: &NumberField) -> usize {
        let z0 = field.conjugates[0];
        let mut sorted = field.conjugates.clone();
        sorted.sort_by(|a, b| {
            b.norm()
                .partial_cmp(&a.norm())
                .unwrap()
                .then(b.re.partial_cmp(&a.re).unwrap())
                .then(a.im.partial_cmp(&b.im).unwrap())
        });
        sorted
            .iter()
            .position(|z| (*z - z0).norm() == 0.0)
            .unwrap_or(0)
    }

    fn write_bigint<W: Write>(w: &mut W, x: &BigInt) -> Result<()> {
        let (sign, bytes) = x.to_bytes_le();
        let s: i8 = match sign {
            num_bigint::Sign::Minus => -1,
            num_bigint::Sign::NoSign => 0,
            num_bigint::Sign::Plus => 1,
        };
        w.write_all(&s.to_le_bytes())?;
        w.write_all(&(bytes.len() as u32).to_le_bytes())?;
        w.write_all(&bytes)?;
        Ok(())
    }

    fn read_bigint<R: Read>(r: &mut R) -> Result<BigInt> {
        let mut sb = [0u8; 1];
        r.read_exact(&mut sb)?;
        let len = read_u32(r)? as usize;
        if len > 1 << 24 {
            return Err(Error::Snapshot("implausible bigint length".into()));
        }
        let mut bytes = vec![0u8; len];
        r.read_exact(&mut bytes)?;
        let sign = match sb[0] as i8 {
            -1 => num_bigint::Sign::Minus,
            0 => num_bigint::Sign::NoSign,
            _ => num_bigint::Sign::Plus,
        };
        Ok(BigInt::from_bytes_le(sign, &bytes))
    }

    fn write_rat<W: Write>(w: &mut W, x: &Rat) -> Result<()> {
        write_bigint(w, x.numer())?;
        write_bigint(w, x.denom())
    }

    fn read_rat<R: Read>(r: &mut R) -> Result<Rat> {
        let numer = read_bigint(r)?;
        let denom = read_bigint(r)?;
        if denom.is_zero() {
            return Err(Error::Snapshot("zero denominator".into()));
        }
        Ok(Rat::new(numer, denom))
    }

    fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
        let mut b = [0u8; 4];
        r.read_exact(&mut b)?;
        Ok(u32::from_le_bytes(b))
    }

    fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
        let mut b = [0u8; 8];
        r.read_exact(&mut b)?;
        Ok(u64::from_le_bytes(b))
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::ifs::{AlgebraicMeta, SimilarityMap};

    fn rat(n: i64, d: i64) -> Rat {
        Rat::new(BigInt::from(n), BigInt::from(d))
    }

    /// Homogeneous system x/beta + a_i with rational digits over a field.
    pub(crate) fn homogeneous_system(
        min_poly: Vec<i64>,
        digits: &[Rat],
    ) -> (WeightedIFS, Arc<NumberField>) {
        let field = Arc::new(
            NumberField::new(min_poly.into_iter().map(BigInt::from).collect(), 0, 1).unwrap(),
        );
        let beta = field.generator();
        let beta_real = beta.embed(0).re;
        let ratio = 1.0 / beta_real.abs();
        let ratio_exact = if field.degree == 1 {
            beta.to_rational().map(|b| Rat::one() / b.abs())
        } else {
            None
        };
        let l = digits.len();
        let maps: Vec<SimilarityMap> = digits
            .iter()
            .map(|a| {
                let mut m = SimilarityMap::new_1d(
                    if beta_real < 0.0 { -ratio } else { ratio },
                    rat_to_f64(a),
                );
                m.ratio_exact = ratio_exact.clone();
                m.translation_rational = Some(vec![a.clone()]);
                m.translation_exact = Some(vec![field.from_rational(a.clone())]);
                m
            })
            .collect();
        let ifs = WeightedIFS {
            maps,
            weights: vec![1.0 / l as f64; l],
            weights_exact: Some(vec![rat(1, l as i64); l]),
            ambient_dim: 1,
            algebraic: Some(AlgebraicMeta {
                field: Arc::clone(&field),
                beta,
                homogeneous: true,
            }),
            rational_integer: None,
            assertions: Default::default(),
        };
        (ifs, field)
    }

    /// beta = 2 with digits {0, 1/2, 1}.
    pub(crate) fn digit_system() -> WeightedIFS {
        homogeneous_system(vec![-2, 1], &[rat(0, 1), rat(1, 2), rat(1, 1)]).0
    }

    /// beta = 2 with digits {0, 1}: no overlaps.
    pub(crate) fn binary_system() -> WeightedIFS {
        homogeneous_system(vec![-2, 1], &[rat(0, 1), rat(1, 1)]).0
    }

    /// beta = golden ratio with digits {0, 1}.
    pub(crate) fn golden_system() -> WeightedIFS {
        homogeneous_system(vec![-1, -1, 1], &[rat(0, 1), rat(1, 1)]).0
    }

    /// Brute-force oracle: canonicalize all l^n words independently.
    fn brute_force_classes(ifs: &WeightedIFS, n: usize) -> Vec<(Vec<Rat>, Rat, u128)> {
        let meta = ifs.algebraic.as_ref().unwrap();
        let field = &meta.field;
        let digits: Vec<AlgebraicNumber> = ifs
            .maps
            .iter()
            .map(|m| field.from_rational(m.translation_rational.as_ref().unwrap()[0].clone()))
            .collect();
        let weights = ifs.weights_exact.as_ref().unwrap();
        let l = ifs.len();
        let powers: Vec<AlgebraicNumber> = (0..n).map(|k| meta.beta.pow(k as u32)).collect();
        let mut acc: HashMap<Vec<Rat>, (Rat, u128)> = HashMap::new();
        let mut word = vec![0usize; n];
        loop {
            // scaled translation = sum_p a_(u_p) beta^(n-p), computed from
            // scratch with a power table (independent of the incremental path).
            let mut scaled = field.zero();
            let mut mass = Rat::one();
            for (p, &letter) in word.iter().enumerate() {
                scaled = scaled
                    .checked_add(&digits[letter].checked_mul(&powers[n - 1 - p]).unwrap())
                    .unwrap();
                mass *= weights[letter].clone();
            }
            let e = acc
                .entry(scaled.coeffs().to_vec())
                .or_insert((Rat::zero(), 0));
            e.0 += mass;
            e.1 += 1;
            // Next word in lexicographic order.
            let mut pos = n;
            loop {
                if pos == 0 {
                    break;
                }
                pos -= 1;
                word[pos] += 1;
                if word[pos] < l {
                    break;
                }
                word[pos] = 0;
            }
            if word.iter().all(|&w| w == 0) {
                break;
            }
        }
        let mut out: Vec<(Vec<Rat>, Rat, u128)> =
            acc.into_iter().map(|(k, (m, c))| (k, m, c)).collect();
        out.sort_by(|a, b| a.0.cmp(&b.0));
        out
    }

    #[test]
    fn digit_counts_match_closed_form() {
        let ifs = digit_system();
        let census = census(&ifs, 12, 10_000_000).unwrap();
        for table in &census.depths {
            let expected = (1u128 << (table.n + 1)) - 1;
            assert_eq!(table.classes.len() as u128, expected, "depth {}", table.n);
        }
    }

    #[test]
    fn binary_counts_are_powers_of_two() {
        let ifs = binary_system();
        let census = census(&ifs, 10, 10_000_000).unwrap();
        for table in &census.depths {
            assert_eq!(table.classes.len() as u128, 1u128 << table.n);
            assert!(table.classes.iter().all(|c| c.word_count == 1));
        }
    }

    #[test]
    fn golden_first_collision_at_depth_3() {
        let ifs = golden_system();
        let census = census(&ifs, 8, 10_000_000).unwrap();
        assert_eq!(census.depth(3).unwrap().classes.len(), 7);
        assert_eq!(census.first_overlap_depth(), Some(3));
        // One class carries two words, the rest one each.
        let doubled: Vec<_> = census
            .depth(3)
            .unwrap()
            .classes
            .iter()
            .filter(|c| c.word_count == 2)
            .collect();
        assert_eq!(doubled.len(), 1);
        assert_eq!(doubled[0].weight_mass_exact.as_ref().unwrap(), &rat(2, 8));
    }

    #[test]
    fn incremental_and_brute_force_tables_agree() {
        for ifs in [digit_system(), golden_system()] {
            let census = census(&ifs, 8, 10_000_000).unwrap();
            for n in 1..=8usize {
                let oracle = brute_force_classes(&ifs, n);
                let table = census.depth(n).unwrap();
                assert_eq!(table.classes.len(), oracle.len(), "N_{n}");
                for (class, (key, mass, count)) in table.classes.iter().zip(&oracle) {
                    assert_eq!(class.scaled_translation.coeffs(), &key[..]);
                    assert_eq!(class.weight_mass_exact.as_ref().unwrap(), mass);
                    assert_eq!(class.word_count, *count);
                }
            }
        }
    }

    #[test]
    fn submultiplicativity_of_counts() {
        let census = census(&golden_system(), 10, 10_000_000).unwrap();
        let counts = census.counts();
        for n in 1..=counts.len() {
            for m in 1..=counts.len() {
                if n + m <= counts.len() {
                    assert!(
                        counts[n + m - 1] <= counts[n - 1] * counts[m - 1],
                        "N_{} > N_{} N_{}",
                        n + m,
                        n,
                        m
                    );
                }
            }
        }
    }

    #[test]
    fn exact_masses_sum_to_one() {
        let census = census(&digit_system(), 10, 10_000_000).unwrap();
        for table in &census.depths {
            let total: Rat = table
                .classes
                .iter()
                .map(|c| c.weight_mass_exact.clone().unwrap())
                .sum();
            assert_eq!(total, Rat::one());
        }
    }

    #[test]
    fn budget_truncates_with_partial_result() {
        let ifs = digit_system();
        let census = census(&ifs, 30, 100).unwrap();
        assert!(census.truncated_at.is_some());
        assert!(census.max_depth() < 30);
        assert!(census.max_depth() >= 1);
    }

    #[test]
    fn growth_exponent_digit_system() {
        let ifs = digit_system();
        let census = census(&ifs, 12, 10_000_000).unwrap();
        let g = growth_exponent(&census).unwrap();
        // Closed form: log(2^(n+1) - 1)/(n log 2), decreasing towards 1.
        let expect_12 = (8191f64).ln() / (12.0 * 2f64.ln());
        assert!((g.estimate - expect_12).abs() < 1e-12);
        assert!((g.upper_bound - expect_12).abs() < 1e-12);
        assert!((g.upper_bound - 1.083).abs() < 1e-3);
        // Monotone decreasing sequence.
        for w in g.per_n.windows(2) {
            assert!(w[1] <= w[0] + 1e-12);
        }
    }

    #[test]
    fn growth_exponent_no_overlap() {
        let census = census(&binary_system(), 6, 10_000_000).unwrap();
        let g = growth_exponent(&census).unwrap();
        for v in g.per_n {
            assert!((v - 1.0).abs() < 1e-12);
        }
        let dim = dim_k_estimate(&census).unwrap();
        assert!((dim.estimate - 1.0).abs() < 1e-12);
    }

    #[test]
    fn growth_needs_two_depths() {
        let census = census(&binary_system(), 1, 10_000_000).unwrap();
        assert!(matches!(
            growth_exponent(&census),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn dim_k_for_base3_binary_digits() {
        // {0,1} with beta = 3: N_n = 2^n, dim = log2/log3.
        let (ifs, _) = homogeneous_system(vec![-3, 1], &[rat(0, 1), rat(1, 1)]);
        let census = census(&ifs, 10, 10_000_000).unwrap();
        let dim = dim_k_estimate(&census).unwrap();
        assert!((dim.estimate - 2f64.ln() / 3f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn tn_spectrum_values() {
        // No-overlap binary: T_n(q) = q - 1 for every n.
        let census_bin = census(&binary_system(), 8, 10_000_000).unwrap();
        for n in [1usize, 4, 8] {
            for q in [0.0, 0.7, 1.0, 2.0, 5.0] {
                let p = tn_spectrum(&census_bin, n, q).unwrap();
                assert!((p.t_n - (q - 1.0)).abs() < 1e-12, "n={n} q={q}: {}", p.t_n);
            }
        }
        // Digit system, depth 1: T_1(q) = (q-1) log3/log2.
        let census_digit = census(&digit_system(), 2, 10_000_000).unwrap();
        let p = tn_spectrum(&census_digit, 1, 2.0).unwrap();
        assert!((p.t_n - 3f64.ln() / 2f64.ln()).abs() < 1e-12);
        // T_n(1) = 0 at every depth.
        for n in 1..=2 {
            assert!(tn_spectrum(&census_digit, n, 1.0).unwrap().t_n.abs() < 1e-12);
        }
    }

    #[test]
    fn tn_spectrum_depth2_digit_oracle() {
        // Depth-2 class masses of the digit system: values 0..6 with
        // counts (1,1,2,1,2,1,1) out of 9.
        let census = census(&digit_system(), 2, 10_000_000).unwrap();
        let table = census.depth(2).unwrap();
        let counts: Vec<u128> = table.classes.iter().map(|c| c.word_count).collect();
        assert_eq!(counts, vec![1, 1, 2, 1, 2, 1, 1]);
        let q = 2.0;
        let sum: f64 = table
            .classes
            .iter()
            .map(|c| c.weight_mass.powf(q))
            .sum();
        let expect = sum.ln() / (-2.0 * 2f64.ln());
        let p = tn_spectrum(&census, 2, q).unwrap();
        assert!((p.t_n - expect).abs() < 1e-12);
    }

    #[test]
    fn garsia_entropy_values() {
        // No-overlap binary: estimate 1 for all n.
        let census_bin = census(&binary_system(), 8, 10_000_000).unwrap();
        for n in [2usize, 5, 8] {
            let g = garsia_dimension(&census_bin, n).unwrap();
            assert!((g.dim_estimate - 1.0).abs() < 1e-12);
        }
        // Digit system depth 1: min{1, log3/log2} = 1.
        let census_digit = census(&digit_system(), 1, 10_000_000).unwrap();
        let g = garsia_dimension(&census_digit, 1).unwrap();
        assert!((g.rate - 3f64.ln() / 2f64.ln()).abs() < 1e-12);
        assert!((g.dim_estimate - 1.0).abs() < 1e-12);
        // Golden depth 3: 6 words of mass 1/8, one of mass 2/8.
        let census_gold = census(&golden_system(), 3, 10_000_000).unwrap();
        let g3 = garsia_dimension(&census_gold, 3).unwrap();
        let h3 = 6.0 * (1.0 / 8.0) * 8f64.ln() + (2.0 / 8.0) * 4f64.ln();
        assert!((g3.entropy - h3).abs() < 1e-12);
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        assert!((g3.dim_estimate - (h3 / (3.0 * phi.ln())).min(1.0)).abs() < 1e-12);
    }

    #[test]
    fn garsia_entropy_is_subadditive() {
        let census = census(&digit_system(), 10, 10_000_000).unwrap();
        let h: Vec<f64> = (1..=10)
            .map(|n| garsia_dimension(&census, n).unwrap().entropy)
            .collect();
        for n in 1..=10usize {
            for m in 1..=10usize {
                if n + m <= 10 {
                    assert!(
                        h[n + m - 1] <= h[n - 1] + h[m - 1] + 1e-9,
                        "h_{} > h_{} + h_{}",
                        n + m,
                        n,
                        m
                    );
                }
            }
        }
    }

    #[test]
    fn esc_diagnostics_dyadic_shift() {
        // {x/2, x/2 + 1}: translations are distinct multiples of 2^(1-n).
        let (ifs, _) = homogeneous_system(vec![-2, 1], &[rat(0, 1), rat(1, 1)]);
        let census = census(&ifs, 12, 10_000_000).unwrap();
        let rep = esc_diagnostic(&census, 12).unwrap();
        for row in &rep.rows {
            let expect = 2f64.powi(-(row.n as i32 - 1));
            assert!((row.delta - expect).abs() < 1e-12, "n = {}", row.n);
            assert!((row.delta_tilde - expect).abs() < 1e-12);
        }
        assert!(rep.first_overlap_depth.is_none());
        // Fitted c should be very close to 1/2.
        assert!((rep.fitted_c.unwrap() - 0.5).abs() < 1e-9);
    }

    #[test]
    fn esc_diagnostics_digit_system() {
        let census = census(&digit_system(), 12, 10_000_000).unwrap();
        let rep = esc_diagnostic(&census, 12).unwrap();
        assert_eq!(rep.first_overlap_depth, Some(2));
        for row in &rep.rows {
            if row.n >= 2 {
                assert_eq!(row.delta, 0.0, "n = {}", row.n);
            }
            // Delta~ = 2^-n * (scaled gap 1/2 * 2) = distinct half-integer
            // scaled values spaced 1/2, unscaled by 2^(n-1).
            let expect = 0.5 * 2f64.powi(-(row.n as i32 - 1));
            assert!(
                (row.delta_tilde - expect).abs() < 1e-12,
                "n = {}: {}",
                row.n,
                row.delta_tilde
            );
        }
    }

    #[test]
    fn esc_diagnostics_golden() {
        let census = census(&golden_system(), 8, 10_000_000).unwrap();
        let rep = esc_diagnostic(&census, 8).unwrap();
        let row3 = rep.rows.iter().find(|r| r.n == 3).unwrap();
        assert_eq!(row3.delta, 0.0);
        assert!(row3.delta_tilde > 0.0);
        let row2 = rep.rows.iter().find(|r| r.n == 2).unwrap();
        assert!(row2.delta > 0.0);
    }

    #[test]
    fn esc_single_class_is_an_error() {
        let (ifs, _) = homogeneous_system(vec![-2, 1], &[rat(0, 1)]);
        let census = census(&ifs, 3, 10_000_000).unwrap();
        assert!(matches!(
            esc_diagnostic(&census, 3),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn t_n_osc_dyadic_window_is_small() {
        // {x/2, x/2 + 1/2}: images tile [0,1]; with the |beta|^-n window the
        // multiplicity stays at 4.
        let (ifs, _) = homogeneous_system(vec![-2, 1], &[rat(0, 1), rat(1, 2)]);
        let census = census(&ifs, 14, 10_000_000).unwrap();
        let mut last = 0;
        for n in 1..=14 {
            let t = t_n_diagnostic(&ifs, &census, n, TnVariant::SigmaBeta).unwrap();
            assert!(t.t_n <= 4, "t_{n} = {}", t.t_n);
            assert!(t.t_n >= last, "monotonicity failed at {n}");
            last = t.t_n;
        }
    }

    #[test]
    fn t_n_digit_system_is_bounded() {
        // Growth exponent is 1, so t_n stays bounded; the pigeonhole lower
        // bound N_n/(|beta|^n diam K + 1) must hold at every depth.
        let ifs = digit_system();
        let census = census(&ifs, 12, 10_000_000).unwrap();
        let (lo, hi) = ifs.attractor_hull_1d().unwrap();
        let diam = hi - lo;
        let mut last = 0;
        for n in 1..=12 {
            let t = t_n_diagnostic(&ifs, &census, n, TnVariant::SigmaBeta).unwrap();
            let n_n = census.depth(n).unwrap().classes.len() as f64;
            let pigeonhole = n_n / (2f64.powi(n as i32) * diam + 1.0);
            assert!(
                t.t_n as f64 >= pigeonhole - 1e-9,
                "pigeonhole violated at {n}: {} < {pigeonhole}",
                t.t_n
            );
            assert!(t.t_n >= last);
            last = t.t_n;
            assert!(t.t_n <= 16, "t_{n} = {} unexpectedly large", t.t_n);
        }
    }

    #[test]
    fn t_n_golden_plateaus() {
        // 1/rho is a Pisot number, so the weak separation condition holds and
        // t_n is bounded.
        let ifs = golden_system();
        let census = census(&ifs, 14, 10_000_000).unwrap();
        let mut values = Vec::new();
        for n in 1..=14 {
            let t = t_n_diagnostic(&ifs, &census, n, TnVariant::SigmaBeta).unwrap();
            values.push(t.t_n);
        }
        // Monotone and eventually constant.
        assert!(values.windows(2).all(|w| w[1] >= w[0]));
        assert_eq!(values[10], values[13], "no plateau: {values:?}");
        assert!(values[13] <= 16);
    }

    #[test]
    fn t_n_dyadic_vs_rational_enumeration() {
        // Homogeneous rational system: the census path and the exact W_n
        // rational path must agree on the dyadic variant.
        let (ifs, _) = homogeneous_system(vec![-2, 1], &[rat(0, 1), rat(1, 2)]);
        let census = census(&ifs, 14, 10_000_000).unwrap();
        for n in 1..=8 {
            let a = t_n_diagnostic(&ifs, &census, n, TnVariant::WnDyadic).unwrap();
            let b = t_n_dyadic_rational(&ifs, n, 10_000_000).unwrap();
            assert_eq!(a.t_n, b.t_n, "n = {n}");
            assert_eq!(a.distinct_maps, b.distinct_maps);
        }
    }

    #[test]
    fn ratio_sum_criterion_cases() {
        let half = WeightedIFS::uniform_1d(&[(0.5, 0.0), (0.5, 0.5)]);
        let v = ratio_sum_criterion(&half);
        assert!(v.awsc_if_esc);
        assert!(v.conditional);

        let mut mixed = WeightedIFS::uniform_1d(&[(0.5, 0.0), (1.0 / 3.0, 0.2), (0.25, 0.7)]);
        for (m, d) in mixed.maps.iter_mut().zip([2i64, 3, 4]) {
            m.ratio_exact = Some(rat(1, d));
        }
        mixed.assertions.esc = Some(true);
        let v = ratio_sum_criterion(&mixed);
        assert!(!v.awsc_if_esc);
        assert!(!v.conditional);
        assert_eq!(v.sum_exact.unwrap(), rat(13, 12));

        let thirds = WeightedIFS::uniform_1d(&[(1.0 / 3.0, 0.0), (1.0 / 3.0, 2.0 / 3.0)]);
        assert!(ratio_sum_criterion(&thirds).awsc_if_esc);
    }

    #[test]
    fn integer_bound_check_thirds() {
        // x/2 + {0, 1/3, 2/3}: Q = 3, diam K = 4/3, r = 5, bound 18 (n+1)^3.
        let third = rat(1, 3);
        let two_thirds = rat(2, 3);
        let half = rat(1, 2);
        let maps: Vec<SimilarityMap> = [Rat::zero(), third, two_thirds]
            .iter()
            .map(|t| SimilarityMap::new_1d_rational(half.clone(), t.clone()))
            .collect();
        let ifs = WeightedIFS {
            maps,
            weights: vec![1.0 / 3.0; 3],
            weights_exact: Some(vec![rat(1, 3); 3]),
            ambient_dim: 1,
            algebraic: None,
            rational_integer: Some(crate::ifs::RationalIntegerMeta {
                multipliers: vec![2, 2, 2],
                denominator: 3,
            }),
            assertions: Default::default(),
        };
        let report = rational_integer_bound_check(&ifs, 12, 50_000_000).unwrap();
        assert_eq!(report.r_const, 5);
        assert_eq!(report.bound_base, 18.0);
        for row in &report.rows {
            let expect = 18.0 * ((row.n + 1) as f64).powi(3);
            assert_eq!(row.bound, expect);
            assert!((row.t_n as f64) < expect);
            // Far below, in fact.
            assert!((row.t_n as f64) < expect / 10.0);
        }
    }

    #[test]
    fn integer_bound_check_single_map() {
        let mut ifs = WeightedIFS::uniform_1d(&[(0.5, 0.0)]);
        ifs.weights = vec![1.0];
        ifs.weights_exact = Some(vec![Rat::one()]);
        ifs.maps[0].ratio_exact = Some(rat(1, 2));
        ifs.maps[0].translation_rational = Some(vec![Rat::zero()]);
        ifs.rational_integer = Some(crate::ifs::RationalIntegerMeta {
            multipliers: vec![2],
            denominator: 1,
        });
        let report = rational_integer_bound_check(&ifs, 6, 1_000_000).unwrap();
        for row in &report.rows {
            assert_eq!(row.t_n, 1);
            assert!((row.t_n as f64) < row.bound);
        }
    }

    #[test]
    fn snapshot_roundtrip_and_resume() {
        let ifs = golden_system();
        let full = census(&ifs, 8, 10_000_000).unwrap();
        let partial = census(&ifs, 5, 10_000_000).unwrap();
        let mut buf = Vec::new();
        snapshot::write_census(&partial, &mut buf).unwrap();
        let mut reloaded = snapshot::read_census(&mut buf.as_slice()).unwrap();
        assert_eq!(reloaded.max_depth(), 5);
        extend_census(&mut reloaded, &ifs, 8, 10_000_000).unwrap();
        assert_eq!(reloaded.max_depth(), 8);
        for (a, b) in reloaded.depths.iter().zip(&full.depths) {
            assert_eq!(a.classes.len(), b.classes.len());
            for (x, y) in a.classes.iter().zip(&b.classes) {
                assert_eq!(
                    x.scaled_translation.coeffs(),
                    y.scaled_translation.coeffs()
                );
                assert_eq!(x.word_count, y.word_count);
                assert_eq!(x.weight_mass_exact, y.weight_mass_exact);
            }
        }
    }

    #[test]
    fn snapshot_rejects_garbage() {
        let mut bad = b"NOTACENS".to_vec();
        bad.extend_from_slice(&[0u8; 32]);
        assert!(snapshot::read_census(&mut bad.as_slice()).is_err());
    }
}

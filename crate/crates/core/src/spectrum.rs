//! The spectrum function `T(q)` solving `sum p_i^q r_i^(-T) = 1`, its
//! derivative, the piecewise `tau` on `[0,1]` for dimensional regular
//! systems, the `min{q-1, T(q)}` branch for `q >= 1` under exponential
//! separation, and the Legendre transform with per-point validity
//! annotations.

use rayon::prelude::*;

use crate::ifs::{SeparationReport, WeightedIFS};
use crate::solve;
use crate::{Error, Result};

/// Hard cap on `|q|`; beyond it the defining equation is numerically
/// meaningless in double precision.
pub const Q_LIMIT: f64 = 1e4;

/// Residual tolerance for the root of `sum p_i^q r_i^(-T) = 1`.
pub const ROOT_TOL: f64 = 1e-12;

/// Which expression `tau` takes on `[0,1]` for a dimensional regular system.
///
/// Serialized as `a` / `b` / `c` in CSV output.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TauCase {
    /// `T'(1) >= d`: `tau(q) = d(q-1)`.
    A,
    /// `T'(1) < d`, `T(0) >= -d`: `tau = T`.
    B,
    /// `T'(1) < d`, `T(0) < -d`: linear piece glued to `T` at `q_tilde`.
    C,
}

impl std::fmt::Display for TauCase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            TauCase::A => write!(f, "a"),
            TauCase::B => write!(f, "b"),
            TauCase::C => write!(f, "c"),
        }
    }
}

/// Which branch gave the tabulated `tau` value at a grid point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TauBranch {
    /// Linear piece `d(q-1)` (case a) or the case-c segment below `q_tilde`.
    Linear,
    /// `tau = T(q)`.
    SpectrumRoot,
    /// `tau = q - 1` (the min branch won for `q > 1`).
    QMinusOne,
}

impl std::fmt::Display for TauBranch {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            TauBranch::Linear => write!(f, "linear"),
            TauBranch::SpectrumRoot => write!(f, "T"),
            TauBranch::QMinusOne => write!(f, "q-1"),
        }
    }
}

/// How strongly a tabulated value is backed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Validity {
    /// Holds under the stated hypotheses (dimensional regularity on `[0,1]`,
    /// exponential separation for `q > 1`).
    Proven,
    /// The formula is reported but its hypotheses were not established.
    Conditional,
    /// No theorem covers the point; the value is a heuristic.
    Heuristic,
}

impl std::fmt::Display for Validity {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Validity::Proven => write!(f, "proven"),
            Validity::Conditional => write!(f, "conditional"),
            Validity::Heuristic => write!(f, "heuristic"),
        }
    }
}

/// Dimension summary; every entry is conditional on dimensional regularity.
#[derive(Debug, Clone)]
pub struct DimensionSummary {
    /// `T'(1)`, the similarity dimension of the measure.
    pub sim_dim_measure: f64,
    /// `-T(0)`, the similarity dimension of the attractor.
    pub sim_dim_set: f64,
    /// Root of `sum r_i^s = 1`.
    pub s: f64,
    /// `min(d, T'(1))`.
    pub hausdorff_measure: f64,
    /// `min(d, -T(0))`.
    pub hausdorff_set: f64,
    pub conditional: bool,
}

/// Tabulated spectrum data over a `q` grid.
#[derive(Debug, Clone)]
pub struct SpectrumResult {
    pub q_grid: Vec<f64>,
    pub t: Vec<f64>,
    pub t_prime: Vec<f64>,
    pub tau: Vec<f64>,
    pub branch: Vec<TauBranch>,
    pub validity: Vec<Validity>,
    pub case_label: TauCase,
    pub q_tilde: Option<f64>,
    pub q_zero: Option<f64>,
    pub dims: DimensionSummary,
    /// `[tau'(1), tau'(0+)]`: the proven multifractal range on `[0,1]`.
    pub alpha_unit_range: (f64, f64),
    /// `[tau'(inf), tau'(1+)]` endpoints with the `tau'(inf)` error bar.
    pub alpha_tail_range: (f64, f64),
    pub alpha_inf_error_bar: f64,
    /// Whether the `q > 1` branch is proven (ESC) or merely conditional.
    pub tail_proven: bool,
    /// Whether the `[0,1]` piece is proven (dimensional regularity assumed).
    pub unit_proven: bool,
}

/// Softmax-normalized terms of `sum exp(q ln p_i - T ln r_i)`; solving
/// `logsumexp = 0` instead of `sum = 1` keeps large `|q|` well-conditioned.
fn log_terms(ifs: &WeightedIFS, q: f64, t: f64) -> Vec<f64> {
    ifs.weights
        .iter()
        .zip(&ifs.maps)
        .map(|(p, m)| q * p.ln() - t * m.ratio.ln())
        .collect()
}

fn log_sum_exp(terms: &[f64]) -> f64 {
    let mx = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    mx + terms.iter().map(|x| (x - mx).exp()).sum::<f64>().ln()
}

/// Solves `sum p_i^q r_i^(-T(q)) = 1` for `T(q)`.
///
/// The left side is strictly increasing in `T` (every `r_i < 1`), so the
/// root is unique; it is found by geometric bracket expansion plus
/// safeguarded Newton on the log-sum.
pub fn solve_t(ifs: &WeightedIFS, q: f64) -> Result<f64> {
    if q.abs() > Q_LIMIT {
        return Err(Error::Range(format!("|q| = {} exceeds {Q_LIMIT}", q.abs())));
    }
    let g = |t: f64| log_sum_exp(&log_terms(ifs, q, t));
    let dg = |t: f64| {
        let terms = log_terms(ifs, q, t);
        let mx = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let ws: Vec<f64> = terms.iter().map(|x| (x - mx).exp()).collect();
        let total: f64 = ws.iter().sum();
        ws.iter()
            .zip(&ifs.maps)
            .map(|(w, m)| -w / total * m.ratio.ln())
            .sum::<f64>()
    };
    // Coarse a-priori bound on |T(q)| steers the initial bracket.
    let min_log_r = ifs
        .maps
        .iter()
        .map(|m| -m.ratio.ln())
        .fold(f64::INFINITY, f64::min);
    let max_abs_log_p = ifs
        .weights
        .iter()
        .map(|p| p.ln().abs())
        .fold(0.0f64, f64::max);
    let d = ifs.ambient_dim as f64;
    let scale =
        2.0 * d * (1.0 + q.abs()) * (max_abs_log_p + (ifs.len() as f64).ln() + 1.0) / min_log_r;
    let bracket = solve::expand_bracket(&g, -scale, scale)?;
    let root = solve::newton_bracketed(&g, &dg, bracket, 1e-15, ROOT_TOL, 200)?;
    debug_assert!(g(root).abs() <= ROOT_TOL * 4.0);
    Ok(root)
}

/// `T'(q)` from the implicit-function formula
/// `T' = (sum w_i ln p_i) / (sum w_i ln r_i)` with `w_i = p_i^q r_i^(-T)`.
pub fn t_derivative(ifs: &WeightedIFS, q: f64) -> Result<f64> {
    let t = solve_t(ifs, q)?;
    Ok(t_derivative_at(ifs, q, t))
}

fn t_derivative_at(ifs: &WeightedIFS, q: f64, t: f64) -> f64 {
    let terms = log_terms(ifs, q, t);
    let mx = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let ws: Vec<f64> = terms.iter().map(|x| (x - mx).exp()).collect();
    let num: f64 = ws.iter().zip(&ifs.weights).map(|(w, p)| w * p.ln()).sum();
    let den: f64 = ws.iter().zip(&ifs.maps).map(|(w, m)| w * m.ratio.ln()).sum();
    num / den
}

/// Similarity dimension `T'(1) = sum p ln p / sum p ln r` without solving.
pub fn similarity_dimension(ifs: &WeightedIFS) -> f64 {
    let num: f64 = ifs.weights.iter().map(|p| p * p.ln()).sum();
    let den: f64 = ifs
        .weights
        .iter()
        .zip(&ifs.maps)
        .map(|(p, m)| p * m.ratio.ln())
        .sum();
    num / den
}

/// The piecewise `tau` on `[0,1]` for a dimensional regular system.
#[derive(Debug, Clone)]
pub struct UnitIntervalTau {
    pub case_label: TauCase,
    pub q_tilde: Option<f64>,
    /// Value of `T` at `q_tilde` (case c only).
    pub t_at_q_tilde: Option<f64>,
    /// Slope of the linear piece: `d` in case a, `(d + T(q~))/q~` in case c.
    pub linear_slope: Option<f64>,
    /// Set when the caller did not assert dimensional regularity.
    pub conditional: bool,
}

impl UnitIntervalTau {
    /// Evaluates `tau(q)` for `q in [0,1]`.
    pub fn eval(&self, ifs: &WeightedIFS, d: f64, q: f64) -> Result<(f64, TauBranch)> {
        match self.case_label {
            TauCase::A => Ok((d * (q - 1.0), TauBranch::Linear)),
            TauCase::B => Ok((solve_t(ifs, q)?, TauBranch::SpectrumRoot)),
            TauCase::C => {
                let qt = self.q_tilde.unwrap();
                if q >= qt {
                    Ok((solve_t(ifs, q)?, TauBranch::SpectrumRoot))
                } else {
                    let slope = self.linear_slope.unwrap();
                    Ok((q * slope - d, TauBranch::Linear))
                }
            }
        }
    }
}

/// Decides the trichotomy case on `[0,1]` and, in the glued case, locates
/// `q_tilde` where `g(q) = T'(q) q - T(q)` crosses `d`.
///
/// Continuity at the gluing point and the slope identity
/// `(d + T(q~))/q~ = T'(q~)` are verified numerically; a failure raises a
/// numerical error with diagnostics.
pub fn tau_unit_interval(
    ifs: &WeightedIFS,
    d: f64,
    dimensional_regular: bool,
) -> Result<UnitIntervalTau> {
    let t1p = t_derivative(ifs, 1.0)?;
    let t0 = solve_t(ifs, 0.0)?;
    let conditional = !dimensional_regular;
    if t1p >= d {
        return Ok(UnitIntervalTau {
            case_label: TauCase::A,
            q_tilde: None,
            t_at_q_tilde: None,
            linear_slope: Some(d),
            conditional,
        });
    }
    if t0 >= -d {
        return Ok(UnitIntervalTau {
            case_label: TauCase::B,
            q_tilde: None,
            t_at_q_tilde: None,
            linear_slope: None,
            conditional,
        });
    }
    // Case c: g is decreasing (concavity of T), g(0) = -T(0) > d, g(1) = T'(1) < d.
    let g = |q: f64| -> f64 {
        let t = solve_t(ifs, q).expect("T solve inside [0,1]");
        t_derivative_at(ifs, q, t) * q - t
    };
    let g0 = -t0;
    let g1 = t1p;
    if !(g0 > d && g1 < d) {
        return Err(Error::Numerical(format!(
            "bisection bracket failure for q_tilde: g(0) = {g0}, g(1) = {g1}, d = {d}"
        )));
    }
    let q_tilde = solve::bisect(&|q| g(q) - d, (1e-12, 1.0), 1e-13)?;
    let t_qt = solve_t(ifs, q_tilde)?;
    let slope = (d + t_qt) / q_tilde;
    // Gluing checks: continuity and one-sided derivative matching.
    let lin_at_qt = q_tilde * slope - d;
    if (lin_at_qt - t_qt).abs() > 1e-9 {
        return Err(Error::Numerical(format!(
            "case-c continuity gap {} at q_tilde = {q_tilde}",
            (lin_at_qt - t_qt).abs()
        )));
    }
    let tp_qt = t_derivative_at(ifs, q_tilde, t_qt);
    if (slope - tp_qt).abs() > 1e-6 * (1.0 + tp_qt.abs()) {
        return Err(Error::Numerical(format!(
            "case-c slope mismatch: linear {slope} vs T'(q~) {tp_qt}"
        )));
    }
    Ok(UnitIntervalTau {
        case_label: TauCase::C,
        q_tilde: Some(q_tilde),
        t_at_q_tilde: Some(t_qt),
        linear_slope: Some(slope),
        conditional,
    })
}

/// `tau(q) = min{q-1, T(q)}` for `q >= 1`, with the kink `q_0` (if any).
#[derive(Debug, Clone)]
pub struct MinBranchTau {
    /// Root of `T(q) = q - 1` in `(1, inf)`, where `tau` loses
    /// differentiability.
    pub q_zero: Option<f64>,
    /// Proven only for `d = 1` under exponential separation.
    pub conditional: bool,
}

/// Evaluates the min branch and detects the kink.
///
/// A kink can exist only when `T'(1) > 1` and `r_i < p_i` for some `i`
/// (equivalently `min_i ln p_i / ln r_i < 1`), in which case `T - (q-1)`
/// starts positive after 1 and eventually goes negative.
pub fn tau_min_branch(ifs: &WeightedIFS, d: f64, esc: bool) -> Result<MinBranchTau> {
    let conditional = !(esc && (d - 1.0).abs() < 1e-12);
    let t1p = t_derivative(ifs, 1.0)?;
    let some_r_below_p = ifs
        .maps
        .iter()
        .zip(&ifs.weights)
        .any(|(m, p)| m.ratio < *p);
    let mut q_zero = None;
    if t1p > 1.0 + 1e-12 && some_r_below_p {
        let h = |q: f64| solve_t(ifs, q).expect("T solve for q > 1") - (q - 1.0);
        // h(1) = 0 with positive slope; expand right until the sign flips.
        let mut hi = 2.0;
        let mut found = false;
        for _ in 0..60 {
            if h(hi) < 0.0 {
                found = true;
                break;
            }
            hi *= 2.0;
            if hi > Q_LIMIT {
                break;
            }
        }
        if found {
            let lo = 1.0 + 1e-9;
            if h(lo) > 0.0 {
                q_zero = Some(solve::bisect(&h, (lo, hi), 1e-12)?);
            }
        }
    }
    Ok(MinBranchTau {
        q_zero,
        conditional,
    })
}

/// Default grid: 513 Chebyshev-spaced points on `[0, 8]` plus the geometric
/// tail `{16, 32, 64}`.
pub fn default_q_grid() -> Vec<f64> {
    let mut grid: Vec<f64> = (0..=512)
        .map(|k| 4.0 * (1.0 - (std::f64::consts::PI * k as f64 / 512.0).cos()))
        .collect();
    grid.extend_from_slice(&[16.0, 32.0, 64.0]);
    grid
}

/// Tabulates `T`, `T'` and `tau` over a grid, decides case labels and
/// assembles the dimension summary.
pub fn spectrum_result(
    ifs: &WeightedIFS,
    d: f64,
    q_grid: &[f64],
    separation: &SeparationReport,
    dimensional_regular: bool,
) -> Result<SpectrumResult> {
    let rep = ifs.validate();
    if !rep.is_valid() {
        return Err(Error::InvalidIfs(rep.violations.join("; ")));
    }
    let unit = tau_unit_interval(ifs, d, dimensional_regular)?;
    let esc = separation.esc.is_true();
    let min_branch = tau_min_branch(ifs, d, esc)?;

    let tq: Vec<(f64, f64)> = q_grid
        .par_iter()
        .map(|&q| {
            let t = solve_t(ifs, q)?;
            Ok((t, t_derivative_at(ifs, q, t)))
        })
        .collect::<Result<_>>()?;
    let t: Vec<f64> = tq.iter().map(|x| x.0).collect();
    let t_prime: Vec<f64> = tq.iter().map(|x| x.1).collect();

    let mut tau = Vec::with_capacity(q_grid.len());
    let mut branch = Vec::with_capacity(q_grid.len());
    let mut validity = Vec::with_capacity(q_grid.len());
    for (k, &q) in q_grid.iter().enumerate() {
        if q <= 1.0 {
            let (v, b) = unit.eval(ifs, d, q)?;
            tau.push(v);
            branch.push(b);
            validity.push(if dimensional_regular {
                Validity::Proven
            } else {
                Validity::Conditional
            });
        } else {
            let qm1 = q - 1.0;
            if t[k] <= qm1 {
                tau.push(t[k]);
                branch.push(TauBranch::SpectrumRoot);
            } else {
                tau.push(qm1);
                branch.push(TauBranch::QMinusOne);
            }
            validity.push(if !min_branch.conditional {
                Validity::Proven
            } else if esc {
                Validity::Conditional
            } else {
                // Without ESC only differentiability points of tau are
                // covered for q > 1; the min branch is a heuristic.
                Validity::Heuristic
            });
        }
    }

    let s = ifs.similarity_exponent()?;
    let t1p = t_derivative(ifs, 1.0)?;
    let t0 = solve_t(ifs, 0.0)?;
    let dims = DimensionSummary {
        sim_dim_measure: t1p,
        sim_dim_set: -t0,
        s,
        hausdorff_measure: t1p.min(d),
        hausdorff_set: (-t0).min(d),
        conditional: !dimensional_regular,
    };

    // tau'(1) and tau'(0+) on the unit interval.
    let tau_prime_1 = match unit.case_label {
        TauCase::A => d,
        _ => t1p,
    };
    let tau_prime_0 = match unit.case_label {
        TauCase::A => d,
        TauCase::B => t_derivative_at(ifs, 0.0, t0),
        TauCase::C => unit.linear_slope.unwrap(),
    };
    // tau'(inf) ~ T'(q_max), Richardson-style check at 2 q_max.
    let q_max = q_grid.iter().cloned().fold(8.0f64, f64::max);
    let tp_inf = t_derivative(ifs, q_max)?;
    let tp_inf2 = t_derivative(ifs, (2.0 * q_max).min(Q_LIMIT))?;
    let alpha_inf_error_bar = (tp_inf - tp_inf2).abs();
    // tau'(1+) = dim_H(mu) under dimensional regularity.
    let tau_prime_1_plus = t1p.min(d);

    Ok(SpectrumResult {
        q_grid: q_grid.to_vec(),
        t,
        t_prime,
        tau,
        branch,
        validity,
        case_label: unit.case_label,
        q_tilde: unit.q_tilde,
        q_zero: min_branch.q_zero,
        dims,
        alpha_unit_range: (tau_prime_1, tau_prime_0),
        alpha_tail_range: (tp_inf2, tau_prime_1_plus),
        alpha_inf_error_bar,
        tail_proven: !min_branch.conditional,
        unit_proven: dimensional_regular,
    })
}

/// Second-difference concavity check: returns the largest positive second
/// difference (0 for perfectly concave data).
pub fn max_convexity_defect(q: &[f64], v: &[f64]) -> f64 {
    let mut worst = 0.0f64;
    for k in 1..q.len().saturating_sub(1) {
        let h1 = q[k] - q[k - 1];
        let h2 = q[k + 1] - q[k];
        if h1 <= 0.0 || h2 <= 0.0 {
            continue;
        }
        let slope1 = (v[k] - v[k - 1]) / h1;
        let slope2 = (v[k + 1] - v[k]) / h2;
        worst = worst.max(slope2 - slope1);
    }
    worst
}

/// One point of the Legendre spectrum.
#[derive(Debug, Clone)]
pub struct LegendrePoint {
    pub alpha: f64,
    pub f: f64,
    pub validity: LegendreValidity,
    pub extrapolated: bool,
}

/// Validity source for a Legendre-spectrum point.
#[derive(Debug, Clone, PartialEq)]
pub enum LegendreValidity {
    /// Inside `[tau'(1), tau'(0+)]` for a dimensional regular system.
    DimensionalRegularRange,
    /// `alpha = T'(q)` for some `q > 1` with `T(q) <= q-1` under ESC.
    EscTailPoint,
    /// Inside `[tau'(inf), tau'(0+)]` under AWSC.
    AwscRange,
    Heuristic,
}

impl std::fmt::Display for LegendreValidity {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            LegendreValidity::DimensionalRegularRange => {
                write!(f, "proven (dimensional-regular range)")
            }
            LegendreValidity::EscTailPoint => {
                write!(f, "proven (exponential-separation tail point)")
            }
            LegendreValidity::AwscRange => {
                write!(f, "proven (asymptotically-weak-separation range)")
            }
            LegendreValidity::Heuristic => write!(f, "heuristic"),
        }
    }
}

/// The Legendre transform `f(alpha) = inf_q (alpha q - tau(q))` on a grid.
#[derive(Debug, Clone)]
pub struct LegendreSpectrum {
    pub points: Vec<LegendrePoint>,
}

/// Discrete Legendre transform `f(alpha) = min_q (alpha q - tau(q))`.
///
/// Validity per point: the dimensional-regular range `[tau'(1), tau'(0+)]`,
/// the ESC tail points `alpha = T'(q)` for `q > 1` with `T(q) <= q-1`
/// (excluding the open kink gap at `q_0`), the AWSC range
/// `[tau'(inf), tau'(0+)]`, and heuristic otherwise. Points outside
/// `[tau'(q_max), tau'(0+)]` are flagged as extrapolation.
pub fn legendre(
    spec: &SpectrumResult,
    alpha_grid: &[f64],
    separation: &SeparationReport,
) -> LegendreSpectrum {
    let esc = separation.esc.is_true();
    let awsc = separation.awsc.is_true();
    let (a1, a0) = spec.alpha_unit_range;
    let (ainf, _a1p) = spec.alpha_tail_range;
    // Slopes at the kink bound the excluded alpha gap: tau' jumps from 1
    // (the q-1 branch, left of q_0) down to T'(q_0).
    let kink_gap = spec.q_zero.map(|q0| {
        let idx = spec
            .q_grid
            .iter()
            .position(|&q| q >= q0)
            .unwrap_or(spec.q_grid.len() - 1);
        (spec.t_prime[idx], 1.0)
    });
    // tau'(q_max): slope at the far end of the grid.
    let tp_qmax = *spec.t_prime.last().unwrap_or(&ainf);

    let mut points = Vec::with_capacity(alpha_grid.len());
    for &alpha in alpha_grid {
        let mut best = f64::INFINITY;
        let mut best_q = spec.q_grid[0];
        for (k, &q) in spec.q_grid.iter().enumerate() {
            let v = alpha * q - spec.tau[k];
            if v < best {
                best = v;
                best_q = q;
            }
        }
        let in_unit_range = alpha >= a1 - 1e-12 && alpha <= a0 + 1e-12;
        let in_awsc_range = alpha >= ainf - 1e-12 && alpha <= a0 + 1e-12;
        let in_kink_gap = kink_gap
            .map(|(lo, hi)| alpha > lo + 1e-12 && alpha < hi - 1e-12)
            .unwrap_or(false);
        let validity = if spec.unit_proven && in_unit_range {
            LegendreValidity::DimensionalRegularRange
        } else if awsc && in_awsc_range {
            LegendreValidity::AwscRange
        } else if esc && best_q > 1.0 && !in_kink_gap && alpha < a1 + 1e-12 {
            // alpha = tau'(q) for the minimizing q > 1; under ESC these are
            // exactly the T'(q) with T(q) <= q-1.
            LegendreValidity::EscTailPoint
        } else {
            LegendreValidity::Heuristic
        };
        let extrapolated = alpha < tp_qmax.min(ainf) - 1e-9 || alpha > a0 + 1e-9;
        points.push(LegendrePoint {
            alpha,
            f: best,
            validity,
            extrapolated,
        });
    }
    LegendreSpectrum { points }
}

/// Default alpha grid: the secant slopes of the tabulated `tau`, which make
/// the discrete double transform exact on concave data.
pub fn secant_alpha_grid(spec: &SpectrumResult) -> Vec<f64> {
    let mut alphas = Vec::new();
    for k in 1..spec.q_grid.len() {
        let dq = spec.q_grid[k] - spec.q_grid[k - 1];
        if dq > 0.0 {
            alphas.push((spec.tau[k] - spec.tau[k - 1]) / dq);
        }
    }
    alphas.sort_by(|a, b| a.partial_cmp(b).unwrap());
    alphas.dedup_by(|a, b| (*a - *b).abs() < 1e-13);
    alphas
}

/// Applies the transform twice: recovers `tau` at the grid points (on the
/// proven concave range) and is used as an invariant check.
pub fn legendre_double_transform(spec: &SpectrumResult, alphas: &[f64], fs: &[f64]) -> Vec<f64> {
    spec.q_grid
        .iter()
        .map(|&q| {
            alphas
                .iter()
                .zip(fs)
                .map(|(&a, &f)| a * q - f)
                .fold(f64::INFINITY, f64::min)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ifs::classify;

    fn uniform(l: usize, r: f64) -> WeightedIFS {
        let maps: Vec<(f64, f64)> = (0..l)
            .map(|i| (r, i as f64 * (1.0 - r) / (l.max(2) - 1).max(1) as f64))
            .collect();
        WeightedIFS::uniform_1d(&maps)
    }

    #[test]
    fn t_at_one_is_zero() {
        for ifs in [uniform(2, 0.5), uniform(3, 0.5), uniform(2, 1.0 / 3.0)] {
            assert!(solve_t(&ifs, 1.0).unwrap().abs() < 1e-12);
        }
    }

    #[test]
    fn closed_form_uniform() {
        // T(q) = (q-1) log l / log(1/r)
        let ifs = uniform(3, 0.5);
        let t2 = solve_t(&ifs, 2.0).unwrap();
        assert!((t2 - 3f64.ln() / 2f64.ln()).abs() < 1e-10, "{t2}");
        let ifs2 = uniform(2, 0.5);
        let t0 = solve_t(&ifs2, 0.0).unwrap();
        assert!((t0 + 1.0).abs() < 1e-12);
    }

    #[test]
    fn residual_is_tiny_on_a_grid() {
        let mut ifs = uniform(3, 0.5);
        ifs.weights = vec![0.8, 0.1, 0.1];
        ifs.weights_exact = None;
        for &q in &[0.0, 0.3, 1.0, 2.0, 7.5, 64.0, -3.0] {
            let t = solve_t(&ifs, q).unwrap();
            let sum: f64 = ifs
                .weights
                .iter()
                .zip(&ifs.maps)
                .map(|(p, m)| p.powf(q) * m.ratio.powf(-t))
                .sum();
            assert!((sum - 1.0).abs() < 1e-11, "q={q}: residual {}", sum - 1.0);
        }
    }

    #[test]
    fn extreme_q_is_rejected() {
        let ifs = uniform(2, 0.5);
        assert!(matches!(solve_t(&ifs, 2e4), Err(Error::Range(_))));
    }

    #[test]
    fn derivative_formula_and_finite_difference_agree() {
        let mut ifs = uniform(3, 0.5);
        ifs.weights = vec![0.8, 0.1, 0.1];
        ifs.weights_exact = None;
        for &q in &[0.2, 1.0, 2.5, 6.0] {
            let d = t_derivative(&ifs, q).unwrap();
            let h = 1e-6;
            let fd = (solve_t(&ifs, q + h).unwrap() - solve_t(&ifs, q - h).unwrap()) / (2.0 * h);
            assert!((d - fd).abs() < 1e-6 * (1.0 + fd.abs()), "q={q}: {d} vs {fd}");
        }
    }

    #[test]
    fn derivative_at_one_closed_form() {
        let mut ifs = uniform(3, 0.5);
        ifs.weights = vec![0.8, 0.1, 0.1];
        ifs.weights_exact = None;
        let expect = (0.8 * 0.8f64.ln() + 0.2 * 0.1f64.ln()) / 0.5f64.ln();
        let got = t_derivative(&ifs, 1.0).unwrap();
        assert!((got - expect).abs() < 1e-12);
        assert!((got - 0.9220).abs() < 5e-4, "{got}");
        // Uniform system: constant derivative log3/log2.
        let u = uniform(3, 0.5);
        let c = 3f64.ln() / 2f64.ln();
        for &q in &[0.1, 1.0, 4.0] {
            assert!((t_derivative(&u, q).unwrap() - c).abs() < 1e-10);
        }
    }

    #[test]
    fn trichotomy_cases() {
        // (a) 3 maps at ratio 1/2: T'(1) = log3/log2 > 1.
        let a = tau_unit_interval(&uniform(3, 0.5), 1.0, true).unwrap();
        assert_eq!(a.case_label, TauCase::A);
        // (b) 2 maps at ratio 1/3.
        let b = tau_unit_interval(&uniform(2, 1.0 / 3.0), 1.0, true).unwrap();
        assert_eq!(b.case_label, TauCase::B);
        // (c) skewed weights on 3 maps at ratio 1/2.
        let mut c_ifs = uniform(3, 0.5);
        c_ifs.weights = vec![0.8, 0.1, 0.1];
        c_ifs.weights_exact = None;
        let c = tau_unit_interval(&c_ifs, 1.0, true).unwrap();
        assert_eq!(c.case_label, TauCase::C);
        let qt = c.q_tilde.unwrap();
        assert!(qt > 0.0 && qt < 1.0);
        // g(q_tilde) = d within 1e-9.
        let t = solve_t(&c_ifs, qt).unwrap();
        let g = t_derivative_at(&c_ifs, qt, t) * qt - t;
        assert!((g - 1.0).abs() < 1e-9, "g(q~) = {g}");
    }

    #[test]
    fn min_branch_kink_detection() {
        // Uniform ratio 1/2: T = q-1 exactly, no kink.
        let u2 = uniform(2, 0.5);
        let mb = tau_min_branch(&u2, 1.0, true).unwrap();
        assert!(mb.q_zero.is_none());
        // 3 maps ratio 1/2 uniform: T'(1) > 1 but r_i > p_i everywhere.
        let mb = tau_min_branch(&uniform(3, 0.5), 1.0, true).unwrap();
        assert!(mb.q_zero.is_none());
        // Skewed two-map system: T'(1) < 1, no kink.
        let mut skew = uniform(2, 0.5);
        skew.weights = vec![0.9, 0.1];
        skew.weights_exact = None;
        let mb = tau_min_branch(&skew, 1.0, true).unwrap();
        assert!(mb.q_zero.is_none());
        // A genuine kink: 4 maps ratio 0.4 with one dominant weight, so that
        // T'(1) > 1 while r_1 = 0.4 < p_1 = 0.7.
        let mut kink = uniform(4, 0.4);
        kink.weights = vec![0.7, 0.1, 0.1, 0.1];
        kink.weights_exact = None;
        let mb = tau_min_branch(&kink, 1.0, true).unwrap();
        let q0 = mb.q_zero.expect("kink expected");
        let t_q0 = solve_t(&kink, q0).unwrap();
        assert!(
            (t_q0 - (q0 - 1.0)).abs() < 1e-9,
            "T(q0) = {t_q0}, q0-1 = {}",
            q0 - 1.0
        );
    }

    #[test]
    fn spectrum_grid_and_concavity() {
        let mut ifs = uniform(3, 0.5);
        ifs.weights = vec![0.8, 0.1, 0.1];
        ifs.weights_exact = None;
        let rep = classify(&ifs, &[]).unwrap();
        let grid = default_q_grid();
        let spec = spectrum_result(&ifs, 1.0, &grid, &rep, true).unwrap();
        assert_eq!(spec.case_label, TauCase::C);
        assert!(max_convexity_defect(&spec.q_grid, &spec.t) <= 1e-8);
        assert!(max_convexity_defect(&spec.q_grid, &spec.tau) <= 1e-8);
        // tau(1) = 0 and tau(q) <= q-1 for q >= 1.
        for (k, &q) in spec.q_grid.iter().enumerate() {
            if (q - 1.0).abs() < 1e-12 {
                assert!(spec.tau[k].abs() < 1e-12);
            }
            if q >= 1.0 {
                assert!(spec.tau[k] <= q - 1.0 + 1e-12);
            }
        }
        // g(q) = T'(q) q - T(q) nonincreasing on [0,1].
        let mut last = f64::INFINITY;
        for (k, &q) in spec.q_grid.iter().enumerate() {
            if q > 1.0 {
                break;
            }
            let g = spec.t_prime[k] * q - spec.t[k];
            assert!(g <= last + 1e-9, "g increased at q = {q}");
            last = g;
        }
    }

    #[test]
    fn legendre_linear_tau_is_a_point() {
        // Uniform 2 maps ratio 1/2: tau(q) = q-1, f(1) = 1.
        let ifs = uniform(2, 0.5);
        let rep = classify(&ifs, &[]).unwrap();
        let spec = spectrum_result(&ifs, 1.0, &default_q_grid(), &rep, true).unwrap();
        let leg = legendre(&spec, &[1.0], &rep);
        assert!((leg.points[0].f - 1.0).abs() < 1e-12);
    }

    #[test]
    fn legendre_apex_equals_set_dimension() {
        // Uniform 2 maps ratio 1/3: apex f(log2/log3) = log2/log3.
        let ifs = uniform(2, 1.0 / 3.0);
        let rep = classify(&ifs, &[]).unwrap();
        let spec = spectrum_result(&ifs, 1.0, &default_q_grid(), &rep, true).unwrap();
        let alpha = 2f64.ln() / 3f64.ln();
        let leg = legendre(&spec, &[alpha], &rep);
        assert!((leg.points[0].f - alpha).abs() < 1e-9);
        // Standard bound f(alpha) <= min(alpha, d).
        assert!(leg.points[0].f <= alpha.min(1.0) + 1e-9);
    }

    #[test]
    fn legendre_double_transform_recovers_tau() {
        let mut ifs = uniform(3, 0.5);
        ifs.weights = vec![0.8, 0.1, 0.1];
        ifs.weights_exact = None;
        let rep = classify(&ifs, &[]).unwrap();
        // Restrict to [0,1]: 101 evenly spaced points.
        let grid: Vec<f64> = (0..=100).map(|k| k as f64 / 100.0).collect();
        let spec = spectrum_result(&ifs, 1.0, &grid, &rep, true).unwrap();
        let alphas = secant_alpha_grid(&spec);
        let leg = legendre(&spec, &alphas, &rep);
        let fs: Vec<f64> = leg.points.iter().map(|p| p.f).collect();
        let recovered = legendre_double_transform(&spec, &alphas, &fs);
        for k in 1..grid.len() - 1 {
            assert!(
                (recovered[k] - spec.tau[k]).abs() < 1e-6,
                "q = {}: {} vs {}",
                grid[k],
                recovered[k],
                spec.tau[k]
            );
        }
    }

    #[test]
    fn case_c_linear_piece_validity_annotation() {
        let mut ifs = uniform(3, 0.5);
        ifs.weights = vec![0.8, 0.1, 0.1];
        ifs.weights_exact = None;
        let rep = classify(&ifs, &[]).unwrap();
        let grid: Vec<f64> = (0..=200).map(|k| k as f64 * 8.0 / 200.0).collect();
        let spec = spectrum_result(&ifs, 1.0, &grid, &rep, true).unwrap();
        // The endpoint slope of the linear piece equals T'(q~).
        let qt = spec.q_tilde.unwrap();
        let t_qt = solve_t(&ifs, qt).unwrap();
        let endpoint_alpha = (1.0 + t_qt) / qt;
        let leg = legendre(&spec, &[endpoint_alpha], &rep);
        assert_eq!(
            leg.points[0].validity,
            LegendreValidity::DimensionalRegularRange
        );
        // Anything strictly above tau'(0+) is flagged as extrapolation.
        let above = spec.alpha_unit_range.1 + 0.5;
        let leg = legendre(&spec, &[above], &rep);
        assert!(leg.points[0].extrapolated);
    }

    #[test]
    fn dimension_summaries() {
        let ifs = uniform(2, 0.5);
        let rep = classify(&ifs, &[]).unwrap();
        let spec = spectrum_result(&ifs, 1.0, &default_q_grid(), &rep, true).unwrap();
        assert!((spec.dims.sim_dim_measure - 1.0).abs() < 1e-10);
        assert!((spec.dims.hausdorff_measure - 1.0).abs() < 1e-10);

        let ifs3 = uniform(3, 0.5);
        let rep3 = classify(&ifs3, &[]).unwrap();
        let spec3 = spectrum_result(&ifs3, 1.0, &default_q_grid(), &rep3, true).unwrap();
        let log32 = 3f64.ln() / 2f64.ln();
        assert!((spec3.dims.sim_dim_set - log32).abs() < 1e-10);
        assert!((spec3.dims.hausdorff_set - 1.0).abs() < 1e-10);

        let mut skew = uniform(3, 0.5);
        skew.weights = vec![0.8, 0.1, 0.1];
        skew.weights_exact = None;
        let reps = classify(&skew, &[]).unwrap();
        let specs = spectrum_result(&skew, 1.0, &default_q_grid(), &reps, true).unwrap();
        assert!((specs.dims.hausdorff_measure - 0.9220).abs() < 5e-4);
    }

    #[test]
    fn default_grid_shape() {
        let g = default_q_grid();
        assert_eq!(g.len(), 516);
        assert_eq!(g[0], 0.0);
        assert!((g[512] - 8.0).abs() < 1e-12);
        assert_eq!(&g[513..], &[16.0, 32.0, 64.0]);
    }
}

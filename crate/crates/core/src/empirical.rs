//! Dyadic discretization of the self-similar measure and empirical
//! estimates of `tau(q)`, used to validate the theoretical formulas.
//!
//! Each word `u` of the section `W_n` deposits its mass at the dyadic box
//! containing the image of a fixed reference point (the midpoint of the
//! attractor hull). Boxes stand in for the ball packing: for `q >= 0` box
//! and ball moment sums agree up to scale-independent constants, which the
//! two-scale slope cancels. Point-mass deposition misplaces mass by at most
//! one box, which is immaterial to slopes.

use std::collections::BTreeMap;

use crate::ifs::WeightedIFS;
use crate::{Error, Result};

/// Masses accumulated on dyadic boxes `[k 2^-n, (k+1) 2^-n)`.
#[derive(Debug, Clone)]
pub struct DyadicMeasure {
    pub n: usize,
    pub box_masses: BTreeMap<i64, f64>,
    pub total_mass: f64,
    /// Number of words deposited.
    pub word_count: usize,
}

impl DyadicMeasure {
    pub fn box_count(&self) -> usize {
        self.box_masses.len()
    }
}

/// Deposits the mass of every `W_n` word at the box of its reference-point
/// image; deterministic (sequential word order, one accumulator per box).
pub fn discretize(ifs: &WeightedIFS, n: usize, budget: usize) -> Result<DyadicMeasure> {
    if ifs.ambient_dim != 1 {
        return Err(Error::Unsupported("discretization requires d = 1".into()));
    }
    let (lo, hi) = ifs.attractor_hull_1d()?;
    let reference = 0.5 * (lo + hi);
    let scale = 2f64.powi(n as i32);
    let mut box_masses: BTreeMap<i64, f64> = BTreeMap::new();
    let mut word_count = 0usize;
    let mut visited = 0usize;
    ifs.visit_section(n, budget, &mut visited, &mut |_, s, t, mass| {
        let x = s * reference + t;
        let k = (x * scale).floor() as i64;
        *box_masses.entry(k).or_insert(0.0) += mass;
        word_count += 1;
    })?;
    let total_mass: f64 = box_masses.values().sum();
    let measure = DyadicMeasure {
        n,
        box_masses,
        total_mass,
        word_count,
    };
    // Mass conservation and support-width invariants.
    if (measure.total_mass - 1.0).abs() > 1e-12 {
        return Err(Error::CorrectnessAlarm(format!(
            "discretized mass {} differs from 1 beyond 1e-12",
            measure.total_mass
        )));
    }
    let span = measure
        .box_masses
        .keys()
        .last()
        .zip(measure.box_masses.keys().next())
        .map(|(hi_k, lo_k)| (hi_k - lo_k + 1) as f64)
        .unwrap_or(0.0);
    if span > (hi - lo) * scale + 2.0 {
        return Err(Error::CorrectnessAlarm(format!(
            "support spans {span} boxes, beyond diameter bound {}",
            (hi - lo) * scale + 2.0
        )));
    }
    Ok(measure)
}

/// Scale-`n` moment-sum slope `log(sum m_k^q) / (-n log 2)`.
pub fn empirical_tau(measure: &DyadicMeasure, q: f64) -> Result<f64> {
    if q < 0.0 {
        return Err(Error::Unsupported(
            "box-counting moments are unreliable for q < 0".into(),
        ));
    }
    let log_sum = moment_log_sum(measure, q);
    Ok(log_sum / (-(measure.n as f64) * 2f64.ln()))
}

/// `log sum m_k^q` via log-sum-exp.
fn moment_log_sum(measure: &DyadicMeasure, q: f64) -> f64 {
    let logs: Vec<f64> = measure
        .box_masses
        .values()
        .filter(|&&m| m > 0.0)
        .map(|m| q * m.ln())
        .collect();
    let mx = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    mx + logs.iter().map(|x| (x - mx).exp()).sum::<f64>().ln()
}

/// Two-scale slope `(log S(n2) - log S(n1)) / ((n1 - n2) log 2)`, which
/// cancels scale-independent constants in the moment sums.
pub fn two_scale_tau(coarse: &DyadicMeasure, fine: &DyadicMeasure, q: f64) -> Result<f64> {
    if q < 0.0 {
        return Err(Error::Unsupported(
            "box-counting moments are unreliable for q < 0".into(),
        ));
    }
    if coarse.n >= fine.n {
        return Err(Error::InvalidIfs(format!(
            "two-scale estimate needs n1 < n2, got {} and {}",
            coarse.n, fine.n
        )));
    }
    let s1 = moment_log_sum(coarse, q);
    let s2 = moment_log_sum(fine, q);
    Ok((s2 - s1) / ((coarse.n as f64 - fine.n as f64) * 2f64.ln()))
}

/// One histogram bin of the coarse multifractal spectrum.
#[derive(Debug, Clone, Copy)]
pub struct CoarseBin {
    pub alpha_center: f64,
    pub count: usize,
    /// `log2(count) / n`.
    pub f_n: f64,
}

/// Histogram of coarse local dimensions `alpha_k = log m_k / (-n log 2)`
/// with half-width `delta` bins.
///
/// The coarse histogram dominates the fine (Legendre) spectrum, so the
/// comparison bias is one-sided.
pub fn coarse_spectrum(measure: &DyadicMeasure, delta: f64) -> Result<Vec<CoarseBin>> {
    if measure.box_masses.is_empty() {
        return Err(Error::InvalidIfs("empty support".into()));
    }
    if delta <= 0.0 {
        return Err(Error::InvalidIfs("bin half-width must be positive".into()));
    }
    let n = measure.n as f64;
    let alphas: Vec<f64> = measure
        .box_masses
        .values()
        .filter(|&&m| m > 0.0)
        .map(|m| m.ln() / (-n * 2f64.ln()))
        .collect();
    let width = 2.0 * delta;
    let mut counts: BTreeMap<i64, usize> = BTreeMap::new();
    for a in &alphas {
        let bin = (a / width).floor() as i64;
        *counts.entry(bin).or_insert(0) += 1;
    }
    Ok(counts
        .into_iter()
        .map(|(bin, count)| CoarseBin {
            alpha_center: (bin as f64 + 0.5) * width,
            count,
            f_n: (count as f64).log2() / n,
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dyadic_uniform() -> WeightedIFS {
        WeightedIFS::uniform_1d(&[(0.5, 0.0), (0.5, 0.5)])
    }

    fn cantor_third() -> WeightedIFS {
        WeightedIFS::uniform_1d(&[(1.0 / 3.0, 0.0), (1.0 / 3.0, 2.0 / 3.0)])
    }

    #[test]
    fn dyadic_uniform_splits_exactly() {
        let m = discretize(&dyadic_uniform(), 3, 1_000_000).unwrap();
        assert_eq!(m.box_count(), 8);
        for &mass in m.box_masses.values() {
            assert!((mass - 0.125).abs() < 1e-15);
        }
    }

    #[test]
    fn cantor_level_two_boxes() {
        // Four pieces of mass 1/4 land in four distinct level-2 boxes.
        let m = discretize(&cantor_third(), 2, 1_000_000).unwrap();
        assert_eq!(m.box_count(), 4);
        for &mass in m.box_masses.values() {
            assert!((mass - 0.25).abs() < 1e-15);
        }
    }

    #[test]
    fn single_map_is_one_box() {
        let mut ifs = WeightedIFS::uniform_1d(&[(0.5, 0.25)]);
        ifs.weights = vec![1.0];
        ifs.weights_exact = None;
        let m = discretize(&ifs, 5, 1_000_000).unwrap();
        assert_eq!(m.box_count(), 1);
        assert!((m.total_mass - 1.0).abs() < 1e-15);
    }

    #[test]
    fn empirical_tau_uniform_is_exact() {
        let m = discretize(&dyadic_uniform(), 10, 1_000_000).unwrap();
        for &q in &[0.0, 0.5, 1.0, 2.0, 5.0, 8.0] {
            let tau = empirical_tau(&m, q).unwrap();
            assert!((tau - (q - 1.0)).abs() < 1e-12, "q = {q}: {tau}");
        }
    }

    #[test]
    fn two_scale_cancels_offsets() {
        let m14 = discretize(&cantor_third(), 14, 10_000_000).unwrap();
        let m16 = discretize(&cantor_third(), 16, 10_000_000).unwrap();
        let est = two_scale_tau(&m14, &m16, 2.0).unwrap();
        let theory = 2f64.ln() / 3f64.ln();
        assert!((est - theory).abs() <= 0.03, "estimate {est} vs {theory}");
    }

    #[test]
    fn two_scale_argument_order() {
        let m1 = discretize(&dyadic_uniform(), 4, 1_000_000).unwrap();
        let m2 = discretize(&dyadic_uniform(), 6, 1_000_000).unwrap();
        assert!(two_scale_tau(&m2, &m1, 1.0).is_err());
    }

    #[test]
    fn negative_q_is_unsupported() {
        let m = discretize(&dyadic_uniform(), 4, 1_000_000).unwrap();
        assert!(matches!(
            empirical_tau(&m, -1.0),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn budget_exhaustion_is_loud() {
        assert!(matches!(
            discretize(&dyadic_uniform(), 24, 1000),
            Err(Error::BudgetExceeded(_))
        ));
    }

    #[test]
    fn refinement_consistency() {
        // Aggregating scale n+1 boxes pairwise reproduces scale-n masses up
        // to boundary reassignment of single-word masses.
        let ifs = cantor_third();
        let coarse = discretize(&ifs, 8, 10_000_000).unwrap();
        let fine = discretize(&ifs, 9, 10_000_000).unwrap();
        let mut aggregated: BTreeMap<i64, f64> = BTreeMap::new();
        for (&k, &mass) in &fine.box_masses {
            *aggregated.entry(k.div_euclid(2)).or_insert(0.0) += mass;
        }
        let max_word_mass = 0.5f64.powi(
            // W_9 words for ratio 1/3 have length ceil(9 log2/log3) = 6.
            (9.0 * 2f64.ln() / 3f64.ln()).ceil() as i32,
        );
        let keys: std::collections::BTreeSet<i64> = coarse
            .box_masses
            .keys()
            .chain(aggregated.keys())
            .cloned()
            .collect();
        let mut tv = 0.0;
        let mut differing = 0usize;
        for k in keys {
            let a = coarse.box_masses.get(&k).copied().unwrap_or(0.0);
            let b = aggregated.get(&k).copied().unwrap_or(0.0);
            if (a - b).abs() > 1e-15 {
                differing += 1;
                tv += (a - b).abs();
            }
        }
        assert!(
            tv <= 2.0 * differing as f64 * max_word_mass + 1e-12,
            "tv = {tv}, differing = {differing}"
        );
    }

    #[test]
    fn coarse_spectrum_monofractals() {
        // Uniform dyadic: one bin at alpha = 1, height 1.
        let m = discretize(&dyadic_uniform(), 12, 10_000_000).unwrap();
        let bins = coarse_spectrum(&m, 0.05).unwrap();
        assert_eq!(bins.len(), 1);
        assert!((bins[0].alpha_center - 1.0).abs() <= 0.1);
        assert!((bins[0].f_n - 1.0).abs() < 1e-9);
        // Cantor: one bin at alpha = log2/log3 with height ~ log2/log3.
        let dim = 2f64.ln() / 3f64.ln();
        let m = discretize(&cantor_third(), 12, 10_000_000).unwrap();
        let bins = coarse_spectrum(&m, 0.05).unwrap();
        assert_eq!(bins.len(), 1);
        assert!((bins[0].alpha_center - dim).abs() <= 0.1);
        assert!((bins[0].f_n - dim).abs() < 0.05);
    }

    #[test]
    fn coarse_spectrum_requires_valid_bins() {
        let m = discretize(&dyadic_uniform(), 4, 1_000_000).unwrap();
        assert!(coarse_spectrum(&m, 0.0).is_err());
    }
}

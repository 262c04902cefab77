//! Weighted iterated function systems of similarities: validation, attractor
//! bounds, sections `W_n` of the word space, and separation-condition
//! classification from metadata and user assertions.

use std::sync::Arc;

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use crate::algebra::{rat_to_f64, AlgebraicNumber, NumberField, Rat};
use crate::solve;
use crate::{Error, Result};

/// One contracting similarity `x -> r U x + a`.
///
/// `ratio` is the contraction ratio `r in (0,1)`. For signed one-dimensional
/// systems the reflection lives in `orthogonal` (a 1x1 matrix `[-1]`), so the
/// signed scale is `ratio * orthogonal[0][0]`.
#[derive(Debug, Clone)]
pub struct SimilarityMap {
    pub ratio: f64,
    /// Exact contraction ratio when it is rational.
    pub ratio_exact: Option<Rat>,
    /// Orthogonal part; `None` means the identity.
    pub orthogonal: Option<DMatrix<f64>>,
    pub translation: Vec<f64>,
    /// Exact translation over the number field, when available.
    pub translation_exact: Option<Vec<AlgebraicNumber>>,
    /// Exact rational translation, when available.
    pub translation_rational: Option<Vec<Rat>>,
}

impl SimilarityMap {
    pub fn new_1d(ratio: f64, translation: f64) -> Self {
        SimilarityMap {
            ratio: ratio.abs(),
            ratio_exact: None,
            orthogonal: if ratio < 0.0 {
                Some(DMatrix::from_element(1, 1, -1.0))
            } else {
                None
            },
            translation: vec![translation],
            translation_exact: None,
            translation_rational: None,
        }
    }

    pub fn new_1d_rational(ratio: Rat, translation: Rat) -> Self {
        let mut m = SimilarityMap::new_1d(rat_to_f64(&ratio), rat_to_f64(&translation));
        m.ratio_exact = Some(ratio.abs());
        m.translation_rational = Some(vec![translation]);
        m
    }

    /// Signed scale factor for one-dimensional maps.
    pub fn scale_1d(&self) -> f64 {
        self.ratio * self.orientation_1d()
    }

    fn orientation_1d(&self) -> f64 {
        self.orthogonal.as_ref().map_or(1.0, |u| u[(0, 0)])
    }

    /// Signed exact rational scale, when the ratio is rational.
    pub fn scale_1d_rational(&self) -> Option<Rat> {
        let r = self.ratio_exact.clone()?;
        Some(if self.orientation_1d() < 0.0 { -r } else { r })
    }

    /// Applies the map to a point (1-D fast path, general-d otherwise).
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        match (&self.orthogonal, x.len()) {
            (None, 1) => vec![self.ratio * x[0] + self.translation[0]],
            (Some(u), 1) => vec![self.ratio * u[(0, 0)] * x[0] + self.translation[0]],
            (None, _) => x
                .iter()
                .zip(&self.translation)
                .map(|(xi, ai)| self.ratio * xi + ai)
                .collect(),
            (Some(u), _) => {
                let v = u * DMatrix::from_column_slice(x.len(), 1, x);
                v.column(0)
                    .iter()
                    .zip(&self.translation)
                    .map(|(xi, ai)| self.ratio * xi + ai)
                    .collect()
            }
        }
    }
}

/// Multipliers and common denominator for systems `x -> x/m_i + a_i` with
/// integer `m_i`, `|m_i| > 1`, and rational translations `a_i` with
/// `Q a_i` integral.
#[derive(Debug, Clone)]
pub struct RationalIntegerMeta {
    pub multipliers: Vec<i64>,
    pub denominator: u64,
}

/// Algebraic metadata for homogeneous systems `x -> x/beta + a_i`.
#[derive(Debug, Clone)]
pub struct AlgebraicMeta {
    pub field: Arc<NumberField>,
    /// The expansion factor `beta`, with `|embed_1(beta)| > 1`.
    pub beta: AlgebraicNumber,
    pub homogeneous: bool,
}

/// User-asserted separation statuses.
#[derive(Debug, Clone, Copy, Default)]
pub struct Assertions {
    pub osc: Option<bool>,
    pub esc: Option<bool>,
}

/// A weighted IFS of similarities with optional exact metadata.
#[derive(Debug, Clone)]
pub struct WeightedIFS {
    pub maps: Vec<SimilarityMap>,
    pub weights: Vec<f64>,
    pub weights_exact: Option<Vec<Rat>>,
    pub ambient_dim: usize,
    pub algebraic: Option<AlgebraicMeta>,
    pub rational_integer: Option<RationalIntegerMeta>,
    pub assertions: Assertions,
}

/// Outcome of `validate`: violations break invariants, warnings flag
/// assumptions the library cannot verify.
#[derive(Debug, Clone, Default)]
pub struct ValidationReport {
    pub violations: Vec<String>,
    pub warnings: Vec<String>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

/// A ball `B(center, radius)` invariant under every map, hence containing
/// the attractor.
#[derive(Debug, Clone)]
pub struct BoundingBall {
    pub center: Vec<f64>,
    pub radius: f64,
}

/// The section `W_n` of the word space: all words `u` with
/// `r_u <= 2^-n < r_(parent of u)`.
#[derive(Debug, Clone)]
pub struct SectionWn {
    pub n: usize,
    pub words: Vec<Vec<u32>>,
}

impl WeightedIFS {
    pub fn uniform_1d(ratios_and_translations: &[(f64, f64)]) -> Self {
        let l = ratios_and_translations.len();
        WeightedIFS {
            maps: ratios_and_translations
                .iter()
                .map(|&(r, a)| SimilarityMap::new_1d(r, a))
                .collect(),
            weights: vec![1.0 / l as f64; l],
            weights_exact: Some(vec![Rat::new(BigInt::one(), BigInt::from(l)); l]),
            ambient_dim: 1,
            algebraic: None,
            rational_integer: None,
            assertions: Assertions::default(),
        }
    }

    pub fn len(&self) -> usize {
        self.maps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.maps.is_empty()
    }

    /// All maps share one signed ratio (and orientation).
    pub fn is_homogeneous(&self) -> bool {
        if let Some(first) = self.maps.first() {
            self.maps
                .iter()
                .all(|m| m.ratio == first.ratio && m.scale_1d() == first.scale_1d())
        } else {
            false
        }
    }

    /// Checks every type invariant; violations are reported, not raised.
    pub fn validate(&self) -> ValidationReport {
        let mut rep = ValidationReport::default();
        if self.maps.is_empty() {
            rep.violations.push("no maps".into());
            return rep;
        }
        if self.weights.len() != self.maps.len() {
            rep.violations.push(format!(
                "{} weights for {} maps",
                self.weights.len(),
                self.maps.len()
            ));
        }
        for (i, m) in self.maps.iter().enumerate() {
            if !(m.ratio > 0.0 && m.ratio < 1.0) {
                rep.violations
                    .push(format!("map {i}: ratio {} outside (0,1)", m.ratio));
            }
            if m.translation.len() != self.ambient_dim {
                rep.violations.push(format!(
                    "map {i}: translation dimension {} != ambient {}",
                    m.translation.len(),
                    self.ambient_dim
                ));
            }
            if let Some(u) = &m.orthogonal {
                let d = self.ambient_dim;
                if u.nrows() != d || u.ncols() != d {
                    rep.violations
                        .push(format!("map {i}: orthogonal part is not {d}x{d}"));
                } else {
                    let gram = u.transpose() * u;
                    let id = DMatrix::<f64>::identity(d, d);
                    if (gram - id).abs().max() > 1e-9 {
                        rep.violations
                            .push(format!("map {i}: orthogonal part is not orthogonal"));
                    }
                }
            }
            if let Some(r) = &m.ratio_exact {
                if (rat_to_f64(r) - m.ratio).abs() > 1e-12 {
                    rep.violations
                        .push(format!("map {i}: exact ratio disagrees with numeric ratio"));
                }
            }
            if let Some(tr) = &m.translation_rational {
                for (k, t) in tr.iter().enumerate() {
                    if (rat_to_f64(t) - m.translation[k]).abs() > 1e-9 {
                        rep.violations.push(format!(
                            "map {i}: rational translation coordinate {k} disagrees with numeric"
                        ));
                    }
                }
            }
            if let Some(te) = &m.translation_exact {
                for (k, t) in te.iter().enumerate() {
                    let v = t.embed_real();
                    if (v - m.translation[k]).abs() > 1e-9 * (1.0 + v.abs()) {
                        rep.violations.push(format!(
                            "map {i}: exact translation coordinate {k} embeds to {v}, numeric is {}",
                            m.translation[k]
                        ));
                    }
                }
            }
        }
        // Weights: strictly positive, summing to one (exactly when rational).
        if self.weights.iter().any(|&p| p <= 0.0) {
            rep.violations.push("weights must be strictly positive".into());
        }
        match &self.weights_exact {
            Some(ws) => {
                let sum: Rat = ws.iter().cloned().sum();
                if sum != Rat::one() {
                    rep.violations
                        .push(format!("exact weights sum to {sum}, expected 1"));
                }
                for (i, w) in ws.iter().enumerate() {
                    if (rat_to_f64(w) - self.weights[i]).abs() > 1e-12 {
                        rep.violations
                            .push(format!("weight {i}: exact and numeric values disagree"));
                    }
                }
            }
            None => {
                let sum: f64 = self.weights.iter().sum();
                if (sum - 1.0).abs() > 1e-12 {
                    rep.violations
                        .push(format!("weights sum to {sum}, expected 1 within 1e-12"));
                }
            }
        }
        if let Some(meta) = &self.algebraic {
            let beta_mag = meta.beta.embed(0).norm();
            if beta_mag <= 1.0 {
                rep.violations.push(format!(
                    "|beta| = {beta_mag} at the distinguished embedding, expected > 1"
                ));
            }
            if meta.homogeneous {
                if !self.is_homogeneous() {
                    rep.violations
                        .push("homogeneous flag set but maps have distinct signed ratios".into());
                }
                let expect = 1.0 / meta.beta.embed(0).re;
                if let Some(m0) = self.maps.first() {
                    if (m0.scale_1d() - expect).abs() > 1e-9 * (1.0 + expect.abs()) {
                        rep.violations.push(format!(
                            "signed ratio {} disagrees with 1/beta = {expect}",
                            m0.scale_1d()
                        ));
                    }
                }
            }
            if meta.field.irreducibility == crate::algebra::Irreducibility::Assumed {
                rep.warnings.push(
                    "minimal polynomial irreducibility is assumed (no small-prime certificate)"
                        .into(),
                );
            }
        }
        if let Some(ri) = &self.rational_integer {
            if ri.multipliers.len() != self.maps.len() {
                rep.violations
                    .push("one integer multiplier required per map".into());
            }
            if ri.denominator == 0 {
                rep.violations.push("denominator Q must be positive".into());
            }
            for (i, &m) in ri.multipliers.iter().enumerate() {
                if m.abs() <= 1 {
                    rep.violations
                        .push(format!("multiplier m_{i} = {m} must satisfy |m| > 1"));
                }
                if let Some(map) = self.maps.get(i) {
                    if (map.ratio - 1.0 / m.abs() as f64).abs() > 1e-12 {
                        rep.violations
                            .push(format!("map {i}: ratio disagrees with 1/|m_{i}|"));
                    }
                }
            }
            let q = BigInt::from(ri.denominator);
            for (i, map) in self.maps.iter().enumerate() {
                match &map.translation_rational {
                    Some(tr) => {
                        for t in tr {
                            if !(t * Rat::from_integer(q.clone())).is_integer() {
                                rep.violations.push(format!(
                                    "map {i}: Q * translation is not integral (Q = {q})"
                                ));
                            }
                        }
                    }
                    None => rep.violations.push(format!(
                        "map {i}: rational-integer metadata requires rational translations"
                    )),
                }
            }
        }
        rep
    }

    /// The exponent `s` solving `sum r_i^s = 1` (the similarity dimension of
    /// the attractor when the maps do not overlap).
    pub fn similarity_exponent(&self) -> Result<f64> {
        let ratios: Vec<f64> = self.maps.iter().map(|m| m.ratio).collect();
        let f = |s: f64| ratios.iter().map(|r| r.powf(s)).sum::<f64>() - 1.0;
        let df = |s: f64| ratios.iter().map(|r| r.powf(s) * r.ln()).sum::<f64>();
        let bracket = solve::expand_bracket(&f, 0.0, 2.0)?;
        solve::newton_bracketed(&f, &df, bracket, 1e-15, 1e-13, 200)
    }

    /// A ball invariant under every map: center at the mean of the fixed
    /// points, radius `max_i |phi_i(c) - c| / (1 - r_i)`.
    ///
    /// Invariance `phi_i(B) subset B` is equivalent to
    /// `r_i R + |phi_i(c) - c| <= R`, which the chosen radius satisfies by
    /// construction; it is re-verified here and a violation is a correctness
    /// alarm.
    pub fn attractor_bound(&self) -> Result<BoundingBall> {
        let d = self.ambient_dim;
        let mut center = vec![0.0; d];
        for m in &self.maps {
            let fixed = fixed_point(m, d);
            for (c, x) in center.iter_mut().zip(&fixed) {
                *c += x / self.maps.len() as f64;
            }
        }
        let mut radius: f64 = 0.0;
        for m in &self.maps {
            let image = m.apply(&center);
            let dist = norm_diff(&image, &center);
            radius = radius.max(dist / (1.0 - m.ratio));
        }
        for (i, m) in self.maps.iter().enumerate() {
            let image = m.apply(&center);
            let dist = norm_diff(&image, &center);
            if m.ratio * radius + dist > radius * (1.0 + 1e-12) + 1e-12 {
                return Err(Error::CorrectnessAlarm(format!(
                    "map {i} does not keep the bounding ball invariant"
                )));
            }
        }
        Ok(BoundingBall { center, radius })
    }

    /// Numeric convex hull `[lo, hi]` of the 1-D attractor, computed by
    /// iterating the interval hull map to its fixed point.
    pub fn attractor_hull_1d(&self) -> Result<(f64, f64)> {
        if self.ambient_dim != 1 {
            return Err(Error::Unsupported("attractor hull requires d = 1".into()));
        }
        let ball = self.attractor_bound()?;
        let mut lo = ball.center[0] - ball.radius;
        let mut hi = ball.center[0] + ball.radius;
        for _ in 0..500 {
            let mut nlo = f64::INFINITY;
            let mut nhi = f64::NEG_INFINITY;
            for m in &self.maps {
                let s = m.scale_1d();
                let a = m.translation[0];
                let (x, y) = ((s * lo).min(s * hi) + a, (s * lo).max(s * hi) + a);
                nlo = nlo.min(x);
                nhi = nhi.max(y);
            }
            let done = (nlo - lo).abs() < 1e-15 * (1.0 + lo.abs())
                && (nhi - hi).abs() < 1e-15 * (1.0 + hi.abs());
            lo = nlo;
            hi = nhi;
            if done {
                break;
            }
        }
        Ok((lo, hi))
    }

    /// Exact rational hull of the 1-D attractor for rational systems.
    ///
    /// The hull endpoints satisfy `lo = min_i inf phi_i([lo,hi])` and
    /// `hi = max_i sup phi_i([lo,hi])`; the attaining policy is read off the
    /// numeric solution and the resulting 2x2 rational linear system is
    /// solved and verified exactly. Returns `None` when exact data is missing
    /// or the policy could not be pinned down.
    pub fn attractor_hull_1d_exact(&self) -> Result<Option<(Rat, Rat)>> {
        if self.ambient_dim != 1 {
            return Err(Error::Unsupported("attractor hull requires d = 1".into()));
        }
        let mut scales = Vec::new();
        let mut trans = Vec::new();
        for m in &self.maps {
            match (m.scale_1d_rational(), &m.translation_rational) {
                (Some(s), Some(t)) => {
                    scales.push(s);
                    trans.push(t[0].clone());
                }
                _ => return Ok(None),
            }
        }
        let (lo_f, hi_f) = self.attractor_hull_1d()?;
        // Identify, per endpoint, which (map, source endpoint) attains it.
        let pick = |minimize: bool| -> (usize, bool) {
            let mut best = (0usize, false);
            let mut best_val = if minimize {
                f64::INFINITY
            } else {
                f64::NEG_INFINITY
            };
            for (i, m) in self.maps.iter().enumerate() {
                let s = m.scale_1d();
                for (src_is_hi, x) in [(false, lo_f), (true, hi_f)] {
                    let v = s * x + m.translation[0];
                    if (minimize && v < best_val) || (!minimize && v > best_val) {
                        best_val = v;
                        best = (i, src_is_hi);
                    }
                }
            }
            best
        };
        let (i_lo, lo_from_hi) = pick(true);
        let (i_hi, hi_from_hi) = pick(false);
        // lo = s_ilo * src + a_ilo and hi = s_ihi * src + a_ihi as a linear
        // system in (lo, hi).
        let one = Rat::one();
        let coeff = |from_hi: bool, s: &Rat| -> (Rat, Rat) {
            if from_hi {
                (Rat::zero(), s.clone())
            } else {
                (s.clone(), Rat::zero())
            }
        };
        let (a11, a12) = coeff(lo_from_hi, &scales[i_lo]);
        let (a21, a22) = coeff(hi_from_hi, &scales[i_hi]);
        let m11 = &one - &a11;
        let m12 = -&a12;
        let m21 = -&a21;
        let m22 = &one - &a22;
        let det = &(&m11 * &m22) - &(&m12 * &m21);
        if det.is_zero() {
            return Ok(None);
        }
        let lo = &(&(&trans[i_lo] * &m22) - &(&trans[i_hi] * &m12)) / &det;
        let hi = &(&(&trans[i_hi] * &m11) - &(&trans[i_lo] * &m21)) / &det;
        // Verify the fixed-point property exactly; bail out if the numeric
        // policy was wrong (degenerate ties).
        let apply_min = (0..self.maps.len())
            .map(|i| {
                let s = &scales[i];
                let x = if s.is_negative() { &hi } else { &lo };
                &(s * x) + &trans[i]
            })
            .min()
            .unwrap();
        let apply_max = (0..self.maps.len())
            .map(|i| {
                let s = &scales[i];
                let x = if s.is_negative() { &lo } else { &hi };
                &(s * x) + &trans[i]
            })
            .max()
            .unwrap();
        if apply_min == lo && apply_max == hi && lo <= hi {
            Ok(Some((lo, hi)))
        } else {
            Ok(None)
        }
    }

    /// Builds `W_n`, failing if the enumeration would exceed `budget` words.
    pub fn build_section(&self, n: usize, budget: usize) -> Result<SectionWn> {
        let mut words = Vec::new();
        let mut visited = 0usize;
        self.visit_section(n, budget, &mut visited, &mut |word, _, _, _| {
            words.push(word.to_vec());
        })?;
        let section = SectionWn { n, words };
        self.check_section(&section)?;
        Ok(section)
    }

    /// Streams the words of `W_n` without materializing them: the callback
    /// receives `(word, signed scale, translation, mass)`.
    pub fn visit_section<F>(
        &self,
        n: usize,
        budget: usize,
        visited: &mut usize,
        f: &mut F,
    ) -> Result<()>
    where
        F: FnMut(&[u32], f64, f64, f64),
    {
        if self.ambient_dim != 1 {
            return Err(Error::Unsupported(
                "sections are enumerated for d = 1".into(),
            ));
        }
        let threshold = 2f64.powi(-(n as i32));
        let mut word = Vec::new();
        self.visit_rec(threshold, budget, visited, &mut word, 1.0, 0.0, 1.0, f)
    }

    #[allow(clippy::too_many_arguments)]
    fn visit_rec<F>(
        &self,
        threshold: f64,
        budget: usize,
        visited: &mut usize,
        word: &mut Vec<u32>,
        scale: f64,
        trans: f64,
        mass: f64,
        f: &mut F,
    ) -> Result<()>
    where
        F: FnMut(&[u32], f64, f64, f64),
    {
        for (i, m) in self.maps.iter().enumerate() {
            *visited += 1;
            if *visited > budget {
                return Err(Error::BudgetExceeded(format!(
                    "section enumeration exceeded {budget} words"
                )));
            }
            // Composition on the right: phi_word o phi_i.
            let s = scale * m.scale_1d();
            let t = trans + scale * m.translation[0];
            let p = mass * self.weights[i];
            word.push(i as u32);
            if s.abs() <= threshold {
                f(word, s, t, p);
            } else {
                self.visit_rec(threshold, budget, visited, word, s, t, p, f)?;
            }
            word.pop();
        }
        Ok(())
    }

    /// Section identity `sum_(u in W_n) r_u^s = 1` and the cardinality lower
    /// bound `#W_n >= 2^(n s)`; both are theorem-guaranteed, so a failure is
    /// a correctness alarm.
    fn check_section(&self, section: &SectionWn) -> Result<()> {
        let s = self.similarity_exponent()?;
        let mut total = 0.0;
        for word in &section.words {
            let r_u: f64 = word.iter().map(|&i| self.maps[i as usize].ratio).product();
            total += r_u.powf(s);
        }
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::CorrectnessAlarm(format!(
                "section mass sum {total} differs from 1 beyond 1e-9"
            )));
        }
        let bound = 2f64.powf(section.n as f64 * s);
        if (section.words.len() as f64) < bound * (1.0 - 1e-12) {
            return Err(Error::CorrectnessAlarm(format!(
                "#W_n = {} below the lower bound 2^(ns) = {bound}",
                section.words.len()
            )));
        }
        Ok(())
    }
}

fn fixed_point(m: &SimilarityMap, d: usize) -> Vec<f64> {
    if d == 1 {
        let s = m.scale_1d();
        return vec![m.translation[0] / (1.0 - s)];
    }
    // Solve (I - r U) x = a.
    let ru = match &m.orthogonal {
        Some(u) => u * m.ratio,
        None => DMatrix::<f64>::identity(d, d) * m.ratio,
    };
    let a = DMatrix::from_column_slice(d, 1, &m.translation);
    let sys = DMatrix::<f64>::identity(d, d) - ru;
    let sol = sys.lu().solve(&a).expect("contraction: I - rU invertible");
    sol.column(0).iter().copied().collect()
}

fn norm_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

// ---------------------------------------------------------------------------
// Separation-condition classification.
// ---------------------------------------------------------------------------

/// Why a separation status is believed.
#[derive(Debug, Clone, PartialEq)]
pub enum Evidence {
    Asserted,
    /// Implied by another condition through the standard implication chains.
    ImpliedBy(&'static str),
    /// Under ESC, AWSC holds iff the ratio sum is at most one.
    RatioSumAtMostOne { sum: f64 },
    /// Under ESC, a ratio sum above one rules AWSC out.
    RatioSumAboveOne { sum: f64 },
    /// Homogeneous algebraic system with at most `|beta|` maps.
    CardinalityAtMostBeta { len: usize, beta: f64 },
    /// Integer multipliers with rational translations always satisfy AWSC.
    IntegerRationalSystem,
    /// An exact overlap was found at this depth (rules ESC out).
    ExactOverlapAt { depth: usize },
    /// Census growth exponent `s <= 1` proves AWSC for homogeneous algebraic
    /// systems.
    GrowthExponentAtMostOne { s: f64 },
}

impl std::fmt::Display for Evidence {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Evidence::Asserted => write!(f, "asserted"),
            Evidence::ImpliedBy(c) => write!(f, "implied by {c}"),
            Evidence::RatioSumAtMostOne { sum } => {
                write!(f, "ESC with ratio sum {sum} <= 1")
            }
            Evidence::RatioSumAboveOne { sum } => {
                write!(f, "ESC with ratio sum {sum} > 1")
            }
            Evidence::CardinalityAtMostBeta { len, beta } => {
                write!(f, "homogeneous algebraic with {len} maps <= |beta| = {beta}")
            }
            Evidence::IntegerRationalSystem => {
                write!(f, "integer multipliers with rational translations")
            }
            Evidence::ExactOverlapAt { depth } => {
                write!(f, "exact overlap found at depth {depth}")
            }
            Evidence::GrowthExponentAtMostOne { s } => {
                write!(f, "distinct-map growth exponent {s} <= 1")
            }
        }
    }
}

/// Status of one separation condition.
#[derive(Debug, Clone, PartialEq)]
pub enum Status {
    True(Evidence),
    False(Evidence),
    Unknown(&'static str),
}

impl Status {
    pub fn is_true(&self) -> bool {
        matches!(self, Status::True(_))
    }
    pub fn is_false(&self) -> bool {
        matches!(self, Status::False(_))
    }
}

impl std::fmt::Display for Status {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Status::True(e) => write!(f, "true ({e})"),
            Status::False(e) => write!(f, "false ({e})"),
            Status::Unknown(hint) => write!(f, "unknown ({hint})"),
        }
    }
}

/// Known / implied separation statuses.
#[derive(Debug, Clone)]
pub struct SeparationReport {
    pub osc: Status,
    pub wsc: Status,
    pub awsc: Status,
    pub esc: Status,
    pub wesc: Status,
}

/// Extra facts a caller (e.g. a census run) can feed into classification.
#[derive(Debug, Clone, Copy)]
pub enum Fact {
    ExactOverlapAtDepth(usize),
    GrowthExponent(f64),
}

/// Applies the theorem shortcuts, the user assertions and the implication
/// closure `OSC => WSC => AWSC => WESC`, `OSC => ESC => WESC`.
pub fn classify(ifs: &WeightedIFS, facts: &[Fact]) -> Result<SeparationReport> {
    let unknown = Status::Unknown("needs census");
    let mut osc = unknown.clone();
    let mut wsc = unknown.clone();
    let mut awsc = unknown.clone();
    let mut esc = unknown.clone();
    let mut wesc = unknown.clone();

    if let Some(v) = ifs.assertions.osc {
        osc = if v {
            Status::True(Evidence::Asserted)
        } else {
            Status::False(Evidence::Asserted)
        };
    }
    if let Some(v) = ifs.assertions.esc {
        esc = if v {
            Status::True(Evidence::Asserted)
        } else {
            Status::False(Evidence::Asserted)
        };
    }
    for fact in facts {
        match *fact {
            Fact::ExactOverlapAtDepth(depth) => {
                // ESC forbids exact overlaps.
                set(&mut esc, Status::False(Evidence::ExactOverlapAt { depth }))?;
            }
            Fact::GrowthExponent(s) => {
                if ifs.algebraic.as_ref().is_some_and(|m| m.homogeneous) && s <= 1.0 + 1e-12 {
                    set(
                        &mut awsc,
                        Status::True(Evidence::GrowthExponentAtMostOne { s }),
                    )?;
                }
                // s > 1 would disprove AWSC, but a finite census only bounds
                // the limit from above, so no negative verdict is recorded.
            }
        }
    }

    // Ratio-sum criterion, conclusive only under ESC.
    if esc.is_true() {
        let sum: f64 = ifs.maps.iter().map(|m| m.ratio).sum();
        let exact: Option<Rat> = ifs
            .maps
            .iter()
            .map(|m| m.ratio_exact.clone())
            .collect::<Option<Vec<_>>>()
            .map(|v| v.into_iter().sum());
        let at_most_one = match &exact {
            Some(e) => *e <= Rat::one(),
            None => sum <= 1.0 + 1e-12,
        };
        if at_most_one {
            set(&mut awsc, Status::True(Evidence::RatioSumAtMostOne { sum }))?;
        } else {
            set(&mut awsc, Status::False(Evidence::RatioSumAboveOne { sum }))?;
        }
    }

    // Homogeneous algebraic systems with few maps.
    if let Some(meta) = &ifs.algebraic {
        if meta.homogeneous {
            let beta = meta.beta.embed(0).norm();
            if (ifs.len() as f64) <= beta + 1e-12 {
                set(
                    &mut awsc,
                    Status::True(Evidence::CardinalityAtMostBeta {
                        len: ifs.len(),
                        beta,
                    }),
                )?;
            }
        }
    }

    // Integer multipliers, rational translations.
    if ifs.rational_integer.is_some() {
        set(&mut awsc, Status::True(Evidence::IntegerRationalSystem))?;
    }

    // Implication closure to a fixed point.
    loop {
        let snapshot = (
            osc.clone(),
            wsc.clone(),
            awsc.clone(),
            esc.clone(),
            wesc.clone(),
        );
        if osc.is_true() {
            imply(&mut wsc, "OSC")?;
            imply(&mut esc, "OSC")?;
        }
        if wsc.is_true() {
            imply(&mut awsc, "WSC")?;
        }
        if awsc.is_true() {
            imply(&mut wesc, "AWSC")?;
        }
        if esc.is_true() {
            imply(&mut wesc, "ESC")?;
        }
        // Contrapositives.
        if wsc.is_false() {
            imply_false(&mut osc, "WSC fails")?;
        }
        if awsc.is_false() {
            imply_false(&mut wsc, "AWSC fails")?;
        }
        if wesc.is_false() {
            imply_false(&mut awsc, "WESC fails")?;
            imply_false(&mut esc, "WESC fails")?;
        }
        if let Status::False(Evidence::ExactOverlapAt { .. }) = esc {
            imply_false(&mut osc, "ESC fails (exact overlap)")?;
        }
        if (
            osc.clone(),
            wsc.clone(),
            awsc.clone(),
            esc.clone(),
            wesc.clone(),
        ) == snapshot
        {
            break;
        }
    }

    Ok(SeparationReport {
        osc,
        wsc,
        awsc,
        esc,
        wesc,
    })
}

fn set(slot: &mut Status, new: Status) -> Result<()> {
    match (&*slot, &new) {
        (Status::Unknown(_), _) => {
            *slot = new;
            Ok(())
        }
        (Status::True(_), Status::True(_)) | (Status::False(_), Status::False(_)) => Ok(()),
        (old, _) => Err(Error::InconsistentAssertions(format!(
            "cannot reconcile {old} with {new}"
        ))),
    }
}

fn imply(slot: &mut Status, from: &'static str) -> Result<()> {
    set(slot, Status::True(Evidence::ImpliedBy(from)))
}

fn imply_false(slot: &mut Status, from: &'static str) -> Result<()> {
    set(slot, Status::False(Evidence::ImpliedBy(from)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dyadic_osc() -> WeightedIFS {
        // {x/2, x/2 + 1/2}
        let mut ifs = WeightedIFS::uniform_1d(&[(0.5, 0.0), (0.5, 0.5)]);
        let half = Rat::new(BigInt::one(), BigInt::from(2));
        for (m, t) in ifs.maps.iter_mut().zip([Rat::zero(), half.clone()]) {
            m.ratio_exact = Some(half.clone());
            m.translation_rational = Some(vec![t]);
        }
        ifs
    }

    #[test]
    fn validate_accepts_the_dyadic_system() {
        let rep = dyadic_osc().validate();
        assert!(rep.is_valid(), "{:?}", rep.violations);
    }

    #[test]
    fn validate_rejects_bad_weights_and_ratios() {
        let mut ifs = WeightedIFS::uniform_1d(&[(0.5, 0.0), (0.5, 0.5)]);
        ifs.weights = vec![0.5, 0.6];
        ifs.weights_exact = None;
        let rep = ifs.validate();
        assert!(rep.violations.iter().any(|v| v.contains("sum")));

        let ifs = WeightedIFS::uniform_1d(&[(1.2, 0.0)]);
        let rep = ifs.validate();
        assert!(rep.violations.iter().any(|v| v.contains("outside (0,1)")));
    }

    #[test]
    fn attractor_bound_unit_interval() {
        let ifs = dyadic_osc();
        let ball = ifs.attractor_bound().unwrap();
        // K = [0,1]: the ball [c - R, c + R] must contain it.
        assert!(ball.center[0] - ball.radius <= 0.0 + 1e-12);
        assert!(ball.center[0] + ball.radius >= 1.0 - 1e-12);
        let (lo, hi) = ifs.attractor_hull_1d().unwrap();
        assert!((lo - 0.0).abs() < 1e-12 && (hi - 1.0).abs() < 1e-12);
    }

    #[test]
    fn attractor_bound_single_map() {
        let mut ifs = WeightedIFS::uniform_1d(&[(0.5, 0.0)]);
        ifs.weights = vec![1.0];
        ifs.weights_exact = Some(vec![Rat::one()]);
        let ball = ifs.attractor_bound().unwrap();
        assert!(ball.radius.abs() < 1e-12);
        assert!(ball.center[0].abs() < 1e-12);
    }

    #[test]
    fn attractor_hull_cantor() {
        let ifs = WeightedIFS::uniform_1d(&[(1.0 / 3.0, 0.0), (1.0 / 3.0, 2.0 / 3.0)]);
        let (lo, hi) = ifs.attractor_hull_1d().unwrap();
        assert!((lo - 0.0).abs() < 1e-12 && (hi - 1.0).abs() < 1e-12);
    }

    #[test]
    fn exact_hull_for_rational_systems() {
        // x/2 + {0, 1/3, 2/3}: hull = [0, 4/3].
        let third = Rat::new(BigInt::one(), BigInt::from(3));
        let half = Rat::new(BigInt::one(), BigInt::from(2));
        let thirds = [Rat::zero(), third.clone(), &third * Rat::from_integer(BigInt::from(2))];
        let maps: Vec<SimilarityMap> = thirds
            .iter()
            .map(|t| SimilarityMap::new_1d_rational(half.clone(), t.clone()))
            .collect();
        let ifs = WeightedIFS {
            maps,
            weights: vec![1.0 / 3.0; 3],
            weights_exact: Some(vec![third; 3]),
            ambient_dim: 1,
            algebraic: None,
            rational_integer: None,
            assertions: Assertions::default(),
        };
        let (lo, hi) = ifs.attractor_hull_1d_exact().unwrap().unwrap();
        assert_eq!(lo, Rat::zero());
        assert_eq!(hi, Rat::new(BigInt::from(4), BigInt::from(3)));
    }

    #[test]
    fn section_uniform_half_depth3() {
        let ifs = dyadic_osc();
        let w = ifs.build_section(3, 1_000_000).unwrap();
        assert_eq!(w.words.len(), 8);
        assert!(w.words.iter().all(|u| u.len() == 3));
    }

    #[test]
    fn section_mixed_ratios() {
        let ifs = WeightedIFS::uniform_1d(&[(0.5, 0.0), (0.25, 0.5)]);
        let w = ifs.build_section(2, 1_000_000).unwrap();
        let mut words = w.words.clone();
        words.sort();
        assert_eq!(words, vec![vec![0, 0], vec![0, 1], vec![1]]);
    }

    #[test]
    fn section_depth_zero_returns_single_letters() {
        let ifs = WeightedIFS::uniform_1d(&[(0.5, 0.0), (0.25, 0.5)]);
        let w = ifs.build_section(0, 1_000_000).unwrap();
        let mut words = w.words.clone();
        words.sort();
        assert_eq!(words, vec![vec![0], vec![1]]);
    }

    #[test]
    fn section_budget_errors_loudly() {
        let ifs = dyadic_osc();
        assert!(matches!(
            ifs.build_section(20, 100),
            Err(Error::BudgetExceeded(_))
        ));
    }

    #[test]
    fn forward_invariance_on_random_boundary_points() {
        let ifs = WeightedIFS::uniform_1d(&[(0.5, 0.0), (0.3, 0.7), (0.2, 0.1)]);
        let ball = ifs.attractor_bound().unwrap();
        let mut state = 0x9E3779B97F4A7C15u64;
        for _ in 0..100 {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            let sign = if state & 1 == 0 { 1.0 } else { -1.0 };
            let x = vec![ball.center[0] + sign * ball.radius];
            for m in &ifs.maps {
                let y = m.apply(&x);
                assert!(
                    (y[0] - ball.center[0]).abs() <= ball.radius * (1.0 + 1e-12) + 1e-12,
                    "image {} escapes ball",
                    y[0]
                );
            }
        }
    }

    #[test]
    fn classify_osc_implies_chain() {
        let mut ifs = dyadic_osc();
        ifs.assertions.osc = Some(true);
        let rep = classify(&ifs, &[]).unwrap();
        assert!(rep.osc.is_true());
        assert!(rep.wsc.is_true());
        assert!(rep.awsc.is_true());
        assert!(rep.esc.is_true());
        assert!(rep.wesc.is_true());
    }

    #[test]
    fn classify_esc_with_large_ratio_sum_fails_awsc() {
        let mut ifs = WeightedIFS::uniform_1d(&[(0.5, 0.0), (0.4, 0.3), (0.3, 0.7)]);
        ifs.assertions.esc = Some(true);
        let rep = classify(&ifs, &[]).unwrap();
        assert!(rep.awsc.is_false());
        assert!(rep.wsc.is_false());
        assert!(rep.osc.is_false());
    }

    #[test]
    fn classify_contradiction_is_an_error() {
        // OSC asserted, but ESC with ratio sum > 1 forces AWSC false,
        // contradicting OSC => WSC => AWSC.
        let mut ifs = WeightedIFS::uniform_1d(&[(0.5, 0.0), (0.4, 0.3), (0.3, 0.7)]);
        ifs.assertions.esc = Some(true);
        ifs.assertions.osc = Some(true);
        assert!(matches!(
            classify(&ifs, &[]),
            Err(Error::InconsistentAssertions(_))
        ));
    }

    #[test]
    fn classify_monotone_under_added_assertions() {
        let base = classify(&dyadic_osc(), &[]).unwrap();
        let mut asserted = dyadic_osc();
        asserted.assertions.osc = Some(true);
        let more = classify(&asserted, &[]).unwrap();
        for (a, b) in [
            (&base.osc, &more.osc),
            (&base.wsc, &more.wsc),
            (&base.awsc, &more.awsc),
            (&base.esc, &more.esc),
            (&base.wesc, &more.wesc),
        ] {
            if a.is_true() {
                assert!(b.is_true(), "positive status lost: {a} -> {b}");
            }
        }
    }

    #[test]
    fn similarity_exponent_closed_forms() {
        let ifs = dyadic_osc();
        assert!((ifs.similarity_exponent().unwrap() - 1.0).abs() < 1e-12);
        let cantor = WeightedIFS::uniform_1d(&[(1.0 / 3.0, 0.0), (1.0 / 3.0, 2.0 / 3.0)]);
        let s = cantor.similarity_exponent().unwrap();
        assert!((s - 2f64.ln() / 3f64.ln()).abs() < 1e-12);
    }
}

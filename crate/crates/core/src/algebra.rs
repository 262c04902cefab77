//! Exact arithmetic in a number field `Q(lambda)`.
//!
//! Elements are polynomials in the generator `lambda` of degree `< deg`,
//! with arbitrary-precision rational coefficients, always reduced modulo the
//! (monic, integer) minimal polynomial. Two elements are equal iff their
//! coefficient vectors are identical, which is what makes exact-overlap
//! detection possible. Numeric conjugate embeddings are computed once per
//! field by a companion-matrix eigenvalue method refined by Newton iteration;
//! they feed numeric diagnostics only, never equality decisions.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_complex::Complex64;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::{Error, Result};

pub type Rat = BigRational;

/// Residual tolerance for refined conjugate roots, relative to the
/// magnitude of the polynomial's terms at the root.
pub const ROOT_RESIDUAL_TOL: f64 = 1e-12;

/// How irreducibility of the minimal polynomial was established.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Irreducibility {
    /// Irreducible modulo the given prime, hence irreducible over `Q`.
    CertifiedModPrime(u64),
    /// No small-prime certificate found; irreducibility is assumed as a
    /// documented precondition (the polynomial is at least squarefree and
    /// has no rational root).
    Assumed,
}

/// A number field `Q(lambda)` given by the minimal polynomial of `lambda`.
///
/// `conjugates[0]` is the distinguished embedding `lambda_1`; the remaining
/// roots follow in a fixed canonical order (descending modulus, then
/// descending real part, then ascending imaginary part).
#[derive(Debug, Clone)]
pub struct NumberField {
    /// Monic integer minimal polynomial, constant term first.
    pub min_poly: Vec<BigInt>,
    pub degree: usize,
    pub conjugates: Vec<Complex64>,
    /// Positive integer `M` such that `M` times every declared generator of
    /// interest is an algebraic integer.
    pub denominator_bound: BigInt,
    pub irreducibility: Irreducibility,
}

impl PartialEq for NumberField {
    fn eq(&self, other: &Self) -> bool {
        self.min_poly == other.min_poly && self.conjugates[0] == other.conjugates[0]
    }
}
impl Eq for NumberField {}

impl NumberField {
    /// Builds the field from an integer coefficient list (constant first).
    ///
    /// `distinguished` indexes into the canonically sorted root list and
    /// selects which conjugate plays the role of `lambda_1`.
    pub fn new(min_poly: Vec<BigInt>, distinguished: usize, denominator_bound: u64) -> Result<Self> {
        let deg = min_poly.len().saturating_sub(1);
        if deg == 0 {
            return Err(Error::BadMinimalPolynomial(
                "degree must be at least 1".into(),
            ));
        }
        if min_poly[deg] != BigInt::one() {
            return Err(Error::BadMinimalPolynomial(format!(
                "polynomial must be monic with integer coefficients; leading coefficient is {}",
                min_poly[deg]
            )));
        }
        if denominator_bound == 0 {
            return Err(Error::BadMinimalPolynomial(
                "denominator bound M must be positive".into(),
            ));
        }

        let rat_poly: Vec<Rat> = min_poly.iter().map(|c| Rat::from_integer(c.clone())).collect();
        // A minimal polynomial is squarefree; gcd with the derivative must be
        // constant. Failure proves the input is not a minimal polynomial.
        let deriv = poly_derivative(&rat_poly);
        let g = poly_gcd(&rat_poly, &deriv);
        if poly_degree(&g) > 0 {
            return Err(Error::BadMinimalPolynomial(
                "polynomial is not squarefree (nontrivial gcd with its derivative)".into(),
            ));
        }
        // Monic integer polynomials have only integer rational roots, all
        // dividing the constant term. Finding one for degree > 1 proves
        // reducibility.
        if deg > 1 {
            if let Some(root) = integer_root(&min_poly) {
                return Err(Error::BadMinimalPolynomial(format!(
                    "polynomial is reducible: integer root {root}"
                )));
            }
        }
        let irreducibility = certify_irreducible(&min_poly, deg);

        let mut roots = polynomial_roots(&min_poly)?;
        roots.sort_by(|a, b| {
            b.norm()
                .partial_cmp(&a.norm())
                .unwrap()
                .then(b.re.partial_cmp(&a.re).unwrap())
                .then(a.im.partial_cmp(&b.im).unwrap())
        });
        if distinguished >= roots.len() {
            return Err(Error::BadMinimalPolynomial(format!(
                "distinguished conjugate index {distinguished} out of range for degree {deg}"
            )));
        }
        let lead = roots.remove(distinguished);
        roots.insert(0, lead);

        Ok(NumberField {
            min_poly,
            degree: deg,
            conjugates: roots,
            denominator_bound: BigInt::from(denominator_bound),
            irreducibility,
        })
    }

    /// Convenience constructor for the degree-1 field `Q` with generator `n`
    /// (minimal polynomial `x - n`). Useful for rational homogeneous systems.
    pub fn rational_generator(n: i64) -> Result<Self> {
        NumberField::new(vec![BigInt::from(-n), BigInt::one()], 0, 1)
    }

    /// True when the minimal polynomial is self-reciprocal (palindromic up
    /// to sign), so roots pair as `z, 1/z` and unit-circle membership can be
    /// inferred structurally rather than from floating point.
    pub fn is_self_reciprocal(&self) -> bool {
        let n = self.min_poly.len();
        let plus = (0..n).all(|i| self.min_poly[i] == self.min_poly[n - 1 - i]);
        let minus = (0..n).all(|i| self.min_poly[i] == -&self.min_poly[n - 1 - i]);
        plus || minus
    }

    pub fn zero(self: &Arc<Self>) -> AlgebraicNumber {
        AlgebraicNumber::from_coeffs(Arc::clone(self), vec![])
    }

    pub fn one(self: &Arc<Self>) -> AlgebraicNumber {
        AlgebraicNumber::from_rational(Arc::clone(self), Rat::one())
    }

    pub fn generator(self: &Arc<Self>) -> AlgebraicNumber {
        AlgebraicNumber::from_coeffs(Arc::clone(self), vec![Rat::zero(), Rat::one()])
    }

    pub fn from_rational(self: &Arc<Self>, r: Rat) -> AlgebraicNumber {
        AlgebraicNumber::from_rational(Arc::clone(self), r)
    }

    pub fn element(self: &Arc<Self>, coeffs: Vec<Rat>) -> AlgebraicNumber {
        AlgebraicNumber::from_coeffs(Arc::clone(self), coeffs)
    }
}

/// An element of a number field in canonical reduced form.
///
/// The coefficient vector always has length `field.degree`, so equality of
/// coefficient vectors is exactly equality of field elements.
#[derive(Debug, Clone)]
pub struct AlgebraicNumber {
    pub field: Arc<NumberField>,
    coeffs: Vec<Rat>,
}

impl PartialEq for AlgebraicNumber {
    fn eq(&self, other: &Self) -> bool {
        (Arc::ptr_eq(&self.field, &other.field) || self.field == other.field)
            && self.coeffs == other.coeffs
    }
}
impl Eq for AlgebraicNumber {}

impl AlgebraicNumber {
    pub fn from_coeffs(field: Arc<NumberField>, mut coeffs: Vec<Rat>) -> Self {
        reduce_mod_min_poly(&mut coeffs, &field.min_poly);
        coeffs.resize(field.degree, Rat::zero());
        AlgebraicNumber { field, coeffs }
    }

    pub fn from_rational(field: Arc<NumberField>, r: Rat) -> Self {
        Self::from_coeffs(field, vec![r])
    }

    /// Canonical coefficient vector of length `degree` (the class key used
    /// by the overlap census).
    pub fn coeffs(&self) -> &[Rat] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_zero())
    }

    pub fn to_rational(&self) -> Option<Rat> {
        if self.coeffs.iter().skip(1).all(|c| c.is_zero()) {
            Some(self.coeffs[0].clone())
        } else {
            None
        }
    }

    fn same_field(&self, other: &Self) -> Result<()> {
        if Arc::ptr_eq(&self.field, &other.field) || self.field == other.field {
            Ok(())
        } else {
            Err(Error::FieldMismatch)
        }
    }

    pub fn checked_add(&self, other: &Self) -> Result<Self> {
        self.same_field(other)?;
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a + b)
            .collect();
        Ok(AlgebraicNumber {
            field: Arc::clone(&self.field),
            coeffs,
        })
    }

    pub fn checked_sub(&self, other: &Self) -> Result<Self> {
        self.same_field(other)?;
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a - b)
            .collect();
        Ok(AlgebraicNumber {
            field: Arc::clone(&self.field),
            coeffs,
        })
    }

    pub fn checked_mul(&self, other: &Self) -> Result<Self> {
        self.same_field(other)?;
        let mut prod = vec![Rat::zero(); 2 * self.field.degree];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate() {
                if b.is_zero() {
                    continue;
                }
                prod[i + j] += a * b;
            }
        }
        Ok(Self::from_coeffs(Arc::clone(&self.field), prod))
    }

    /// Multiplicative inverse via the extended Euclidean algorithm against
    /// the minimal polynomial.
    pub fn inverse(&self) -> Result<Self> {
        if self.is_zero() {
            return Err(Error::ZeroInverse);
        }
        let min_poly: Vec<Rat> = self
            .field
            .min_poly
            .iter()
            .map(|c| Rat::from_integer(c.clone()))
            .collect();
        let a = poly_trim(self.coeffs.clone());
        let (g, s, _) = poly_extended_gcd(&a, &min_poly);
        if poly_degree(&g) != 0 {
            return Err(Error::BadMinimalPolynomial(
                "gcd with minimal polynomial is nonconstant; polynomial is reducible".into(),
            ));
        }
        let scale = g[0].recip();
        let coeffs = s.into_iter().map(|c| c * &scale).collect();
        Ok(Self::from_coeffs(Arc::clone(&self.field), coeffs))
    }

    pub fn neg(&self) -> Self {
        AlgebraicNumber {
            field: Arc::clone(&self.field),
            coeffs: self.coeffs.iter().map(|c| -c).collect(),
        }
    }

    pub fn pow(&self, mut e: u32) -> Self {
        let mut base = self.clone();
        let mut acc = AlgebraicNumber::from_rational(Arc::clone(&self.field), Rat::one());
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.checked_mul(&base).expect("same field");
            }
            e >>= 1;
            if e > 0 {
                base = base.checked_mul(&base).expect("same field");
            }
        }
        acc
    }

    /// Numeric value of the element at conjugate `j` (0 = distinguished).
    pub fn embed(&self, j: usize) -> Complex64 {
        let z = self.field.conjugates[j];
        let mut acc = Complex64::new(0.0, 0.0);
        for c in self.coeffs.iter().rev() {
            acc = acc * z + Complex64::new(rat_to_f64(c), 0.0);
        }
        acc
    }

    /// Real part of the distinguished embedding.
    pub fn embed_real(&self) -> f64 {
        self.embed(0).re
    }

    /// Least common multiple of the coefficient denominators: multiplying by
    /// it yields a polynomial in `lambda` with integer coefficients, hence an
    /// algebraic integer.
    pub fn denominator_lcm(&self) -> BigInt {
        let mut l = BigInt::one();
        for c in &self.coeffs {
            l = l.lcm(c.denom());
        }
        l.abs()
    }
}

impl std::ops::Add for &AlgebraicNumber {
    type Output = AlgebraicNumber;
    fn add(self, rhs: &AlgebraicNumber) -> AlgebraicNumber {
        self.checked_add(rhs).expect("field mismatch")
    }
}
impl std::ops::Sub for &AlgebraicNumber {
    type Output = AlgebraicNumber;
    fn sub(self, rhs: &AlgebraicNumber) -> AlgebraicNumber {
        self.checked_sub(rhs).expect("field mismatch")
    }
}
impl std::ops::Mul for &AlgebraicNumber {
    type Output = AlgebraicNumber;
    fn mul(self, rhs: &AlgebraicNumber) -> AlgebraicNumber {
        self.checked_mul(rhs).expect("field mismatch")
    }
}
impl std::ops::Neg for &AlgebraicNumber {
    type Output = AlgebraicNumber;
    fn neg(self) -> AlgebraicNumber {
        AlgebraicNumber::neg(self)
    }
}

impl fmt::Display for AlgebraicNumber {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut terms = Vec::new();
        for (i, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let t = match i {
                0 => format!("{c}"),
                1 => format!("{c}*L"),
                _ => format!("{c}*L^{i}"),
            };
            terms.push(t);
        }
        if terms.is_empty() {
            write!(f, "0")
        } else {
            write!(f, "{}", terms.join(" + "))
        }
    }
}

/// Checks that a product of per-conjugate values is (numerically) either
/// zero or a nonzero integer, as the norm of a suitably scaled algebraic
/// integer must be. Returns the real product.
///
/// The caller supplies the embeddings already scaled so that integrality is
/// expected (e.g. multiplied through by `M`). Tolerance is relative to
/// `1 + |product|`.
pub fn norm_product_integer_check(values: &[Complex64], tol: f64) -> Result<f64> {
    let mut prod = Complex64::new(1.0, 0.0);
    for v in values {
        prod *= v;
    }
    let scale = 1.0 + prod.norm();
    if prod.norm() <= tol * scale {
        return Ok(0.0);
    }
    let nearest = prod.re.round();
    if (prod.re - nearest).abs() <= tol * scale && prod.im.abs() <= tol * scale && nearest != 0.0 {
        Ok(prod.re)
    } else {
        Err(Error::EmbeddingPrecision(format!(
            "conjugate product {prod} is neither an integer nor zero within tolerance {tol}"
        )))
    }
}

pub fn rat_to_f64(r: &Rat) -> f64 {
    r.to_f64().unwrap_or_else(|| {
        // Fall back to a quotient of lossily converted parts.
        let n = r.numer().to_f64().unwrap_or(f64::NAN);
        let d = r.denom().to_f64().unwrap_or(f64::NAN);
        n / d
    })
}

// ---------------------------------------------------------------------------
// Rational polynomial helpers (coefficient lists, constant term first).
// ---------------------------------------------------------------------------

pub(crate) fn poly_trim(mut p: Vec<Rat>) -> Vec<Rat> {
    while p.last().is_some_and(|c| c.is_zero()) {
        p.pop();
    }
    p
}

pub(crate) fn poly_degree(p: &[Rat]) -> usize {
    p.iter().rposition(|c| !c.is_zero()).unwrap_or(0)
}

fn poly_is_zero(p: &[Rat]) -> bool {
    p.iter().all(|c| c.is_zero())
}

fn poly_derivative(p: &[Rat]) -> Vec<Rat> {
    if p.len() <= 1 {
        return vec![];
    }
    p.iter()
        .enumerate()
        .skip(1)
        .map(|(i, c)| c * Rat::from_integer(BigInt::from(i)))
        .collect()
}

fn poly_mul(a: &[Rat], b: &[Rat]) -> Vec<Rat> {
    if poly_is_zero(a) || poly_is_zero(b) {
        return vec![];
    }
    let mut out = vec![Rat::zero(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        if x.is_zero() {
            continue;
        }
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    poly_trim(out)
}

fn poly_sub(a: &[Rat], b: &[Rat]) -> Vec<Rat> {
    let n = a.len().max(b.len());
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let x = a.get(i).cloned().unwrap_or_else(Rat::zero);
        let y = b.get(i).cloned().unwrap_or_else(Rat::zero);
        out.push(x - y);
    }
    poly_trim(out)
}

fn poly_div_rem(a: &[Rat], b: &[Rat]) -> (Vec<Rat>, Vec<Rat>) {
    let db = poly_degree(b);
    assert!(!poly_is_zero(b), "division by zero polynomial");
    let mut rem = poly_trim(a.to_vec());
    if poly_degree(&rem) < db && !(!rem.is_empty() && db == 0) {
        return (vec![], rem);
    }
    let lead_inv = b[db].recip();
    let mut quot = vec![Rat::zero(); rem.len().saturating_sub(db)];
    while !poly_is_zero(&rem) && poly_degree(&rem) >= db {
        let dr = poly_degree(&rem);
        let c = &rem[dr] * &lead_inv;
        let shift = dr - db;
        for (i, bc) in b.iter().enumerate().take(db + 1) {
            let delta = &c * bc;
            rem[shift + i] -= delta;
        }
        rem = poly_trim(rem);
        quot[shift] = c;
        if dr == 0 {
            break;
        }
    }
    (poly_trim(quot), rem)
}

fn poly_gcd(a: &[Rat], b: &[Rat]) -> Vec<Rat> {
    let mut x = poly_trim(a.to_vec());
    let mut y = poly_trim(b.to_vec());
    while !poly_is_zero(&y) {
        let (_, r) = poly_div_rem(&x, &y);
        x = y;
        y = r;
    }
    if poly_is_zero(&x) {
        return x;
    }
    let inv = x[poly_degree(&x)].recip();
    x.iter().map(|c| c * &inv).collect()
}

fn poly_extended_gcd(a: &[Rat], b: &[Rat]) -> (Vec<Rat>, Vec<Rat>, Vec<Rat>) {
    let mut old_r = poly_trim(a.to_vec());
    let mut r = poly_trim(b.to_vec());
    let mut old_s: Vec<Rat> = vec![Rat::one()];
    let mut s: Vec<Rat> = vec![];
    let mut old_t: Vec<Rat> = vec![];
    let mut t: Vec<Rat> = vec![Rat::one()];
    while !poly_is_zero(&r) {
        let (q, rem) = poly_div_rem(&old_r, &r);
        let new_s = poly_sub(&old_s, &poly_mul(&q, &s));
        let new_t = poly_sub(&old_t, &poly_mul(&q, &t));
        old_r = std::mem::replace(&mut r, rem);
        old_s = std::mem::replace(&mut s, new_s);
        old_t = std::mem::replace(&mut t, new_t);
    }
    (old_r, old_s, old_t)
}

/// Reduces a coefficient list modulo a monic integer polynomial in place.
fn reduce_mod_min_poly(coeffs: &mut Vec<Rat>, min_poly: &[BigInt]) {
    let deg = min_poly.len() - 1;
    while coeffs.len() > deg {
        let top = coeffs.pop().unwrap();
        if top.is_zero() {
            continue;
        }
        let k = coeffs.len() - deg; // exponent offset of the reduced monomial
        for i in 0..deg {
            let m = Rat::from_integer(min_poly[i].clone());
            coeffs[k + i] -= &top * m;
        }
    }
}

/// Integer roots of a monic integer polynomial (divisors of the constant
/// term, rational root theorem). Returns the first found.
fn integer_root(min_poly: &[BigInt]) -> Option<BigInt> {
    let c0 = &min_poly[0];
    if c0.is_zero() {
        return Some(BigInt::zero());
    }
    let bound = c0.abs();
    // Try small divisors only; large constant terms get a bounded scan.
    let limit: BigInt = BigInt::from(1_000_000u64).min(bound.clone());
    let mut d = BigInt::one();
    while d <= limit {
        if (&bound % &d).is_zero() {
            for cand in [d.clone(), -d.clone()] {
                let mut acc = BigInt::zero();
                for c in min_poly.iter().rev() {
                    acc = acc * &cand + c;
                }
                if acc.is_zero() {
                    return Some(cand);
                }
            }
        }
        d += 1;
    }
    None
}

// ---------------------------------------------------------------------------
// Probabilistic irreducibility certificate via small-prime reductions.
// ---------------------------------------------------------------------------

fn certify_irreducible(min_poly: &[BigInt], deg: usize) -> Irreducibility {
    if deg == 1 {
        return Irreducibility::CertifiedModPrime(2);
    }
    for p in [2u64, 3, 5, 7, 11, 13, 17, 19, 23] {
        if let Some(f) = modp::reduce(min_poly, p) {
            if modp::is_irreducible(&f, p) {
                return Irreducibility::CertifiedModPrime(p);
            }
        }
    }
    Irreducibility::Assumed
}

/// Polynomial arithmetic over `GF(p)`, only what the irreducibility test
/// needs.
mod modp {
    use num_bigint::BigInt;
    use num_integer::Integer;
    use num_traits::ToPrimitive;

    /// Reduces an integer polynomial mod `p`; `None` if the leading
    /// coefficient vanishes (degree drops, certificate unusable).
    pub fn reduce(poly: &[BigInt], p: u64) -> Option<Vec<u64>> {
        let f: Vec<u64> = poly
            .iter()
            .map(|c| c.mod_floor(&BigInt::from(p)).to_u64().unwrap())
            .collect();
        if *f.last().unwrap() == 0 {
            None
        } else {
            Some(trim(f))
        }
    }

    fn trim(mut f: Vec<u64>) -> Vec<u64> {
        while f.last() == Some(&0) && f.len() > 1 {
            f.pop();
        }
        f
    }

    fn deg(f: &[u64]) -> usize {
        f.iter().rposition(|&c| c != 0).unwrap_or(0)
    }

    fn is_zero(f: &[u64]) -> bool {
        f.iter().all(|&c| c == 0)
    }

    fn mulmod(a: u64, b: u64, p: u64) -> u64 {
        ((a as u128 * b as u128) % p as u128) as u64
    }

    fn inv_mod(a: u64, p: u64) -> u64 {
        // Fermat: p prime.
        pow_mod(a, p - 2, p)
    }

    fn pow_mod(mut b: u64, mut e: u64, p: u64) -> u64 {
        let mut acc = 1u64;
        b %= p;
        while e > 0 {
            if e & 1 == 1 {
                acc = mulmod(acc, b, p);
            }
            b = mulmod(b, b, p);
            e >>= 1;
        }
        acc
    }

    fn poly_mul(a: &[u64], b: &[u64], p: u64) -> Vec<u64> {
        if is_zero(a) || is_zero(b) {
            return vec![0];
        }
        let mut out = vec![0u64; a.len() + b.len() - 1];
        for (i, &x) in a.iter().enumerate() {
            if x == 0 {
                continue;
            }
            for (j, &y) in b.iter().enumerate() {
                out[i + j] = (out[i + j] + mulmod(x, y, p)) % p;
            }
        }
        trim(out)
    }

    fn poly_rem(a: &[u64], m: &[u64], p: u64) -> Vec<u64> {
        let dm = deg(m);
        let lead_inv = inv_mod(m[dm], p);
        let mut r = trim(a.to_vec());
        while !is_zero(&r) && deg(&r) >= dm && dm > 0 {
            let dr = deg(&r);
            let c = mulmod(r[dr], lead_inv, p);
            let shift = dr - dm;
            for i in 0..=dm {
                let sub = mulmod(c, m[i], p);
                r[shift + i] = (r[shift + i] + p - sub) % p;
            }
            r = trim(r);
        }
        if dm == 0 {
            return vec![0];
        }
        r
    }

    fn poly_gcd(a: &[u64], b: &[u64], p: u64) -> Vec<u64> {
        let mut x = trim(a.to_vec());
        let mut y = trim(b.to_vec());
        while !is_zero(&y) {
            let r = poly_rem(&x, &y, p);
            x = y;
            y = r;
        }
        x
    }

    /// Computes `x^(p^k) mod f` by binary exponentiation.
    fn frobenius_power(f: &[u64], p: u64, k: u32) -> Vec<u64> {
        let mut e: u128 = 1;
        for _ in 0..k {
            e *= p as u128;
        }
        let mut acc = vec![1u64]; // 1
        let mut base = poly_rem(&[0, 1], f, p); // x mod f
        while e > 0 {
            if e & 1 == 1 {
                acc = poly_rem(&poly_mul(&acc, &base, p), f, p);
            }
            e >>= 1;
            if e > 0 {
                base = poly_rem(&poly_mul(&base, &base, p), f, p);
            }
        }
        acc
    }

    fn poly_sub(a: &[u64], b: &[u64], p: u64) -> Vec<u64> {
        let n = a.len().max(b.len());
        let mut out = vec![0u64; n];
        for i in 0..n {
            let x = a.get(i).copied().unwrap_or(0);
            let y = b.get(i).copied().unwrap_or(0);
            out[i] = (x + p - y) % p;
        }
        trim(out)
    }

    /// Rabin's irreducibility test for a monic-reducible-to-degree-d
    /// polynomial mod p.
    pub fn is_irreducible(f: &[u64], p: u64) -> bool {
        let d = deg(f);
        if d == 0 {
            return false;
        }
        if d == 1 {
            return true;
        }
        // Squarefree mod p is required for the test to be meaningful.
        let deriv: Vec<u64> = f
            .iter()
            .enumerate()
            .skip(1)
            .map(|(i, &c)| mulmod(c, (i as u64) % p, p))
            .collect();
        if is_zero(&deriv) || deg(&poly_gcd(f, &trim(deriv), p)) > 0 {
            return false;
        }
        // x^(p^d) == x mod f ...
        let xq = frobenius_power(f, p, d as u32);
        if poly_sub(&xq, &[0, 1], p) != vec![0] {
            return false;
        }
        // ... and gcd(x^(p^(d/l)) - x, f) == 1 for all prime divisors l of d.
        let mut rem_d = d;
        let mut l = 2usize;
        let mut prime_divs = Vec::new();
        while l * l <= rem_d {
            if rem_d % l == 0 {
                prime_divs.push(l);
                while rem_d % l == 0 {
                    rem_d /= l;
                }
            }
            l += 1;
        }
        if rem_d > 1 {
            prime_divs.push(rem_d);
        }
        for l in prime_divs {
            let k = (d / l) as u32;
            let g = frobenius_power(f, p, k);
            let diff = poly_sub(&g, &[0, 1], p);
            if deg(&poly_gcd(f, &diff, p)) > 0 || is_zero(&diff) {
                return false;
            }
        }
        true
    }
}

// ---------------------------------------------------------------------------
// Conjugate roots: companion-matrix eigenvalues plus Newton refinement.
// ---------------------------------------------------------------------------

fn polynomial_roots(min_poly: &[BigInt]) -> Result<Vec<Complex64>> {
    let deg = min_poly.len() - 1;
    let coeffs_f64: Vec<f64> = min_poly
        .iter()
        .map(|c| c.to_f64().ok_or_else(|| {
            Error::BadMinimalPolynomial("coefficient overflows f64 range".into())
        }))
        .collect::<Result<_>>()?;

    if deg == 1 {
        return Ok(vec![Complex64::new(-coeffs_f64[0], 0.0)]);
    }

    let mut companion = DMatrix::<f64>::zeros(deg, deg);
    for i in 1..deg {
        companion[(i, i - 1)] = 1.0;
    }
    for i in 0..deg {
        companion[(i, deg - 1)] = -coeffs_f64[i];
    }
    // The QR iteration can cycle on companion matrices whose eigenvalues all
    // sit on a circle (e.g. cyclotomic polynomials), so cap it and fall back
    // to a Durand-Kerner sweep; Newton refinement below fixes both up.
    let eigen = match nalgebra::linalg::Schur::try_new(companion, 1e-12, 20_000) {
        Some(schur) => schur.complex_eigenvalues(),
        None => nalgebra::DVector::from_vec(durand_kerner(&coeffs_f64)),
    };

    let eval = |z: Complex64| -> (Complex64, Complex64, f64) {
        let mut v = Complex64::new(0.0, 0.0);
        let mut dv = Complex64::new(0.0, 0.0);
        let mut scale = 0.0f64;
        let mut zpow = 1.0f64;
        for (k, c) in coeffs_f64.iter().enumerate() {
            scale += c.abs() * zpow;
            zpow *= z.norm();
            let _ = k;
        }
        for c in coeffs_f64.iter().rev() {
            dv = dv * z + v;
            v = v * z + Complex64::new(*c, 0.0);
        }
        (v, dv, scale.max(1.0))
    };

    let mut roots = Vec::with_capacity(deg);
    for z0 in eigen.iter() {
        let mut z = *z0;
        for _ in 0..100 {
            let (v, dv, _) = eval(z);
            if dv.norm() == 0.0 {
                break;
            }
            let step = v / dv;
            z -= step;
            if step.norm() < 1e-16 * (1.0 + z.norm()) {
                break;
            }
        }
        let (v, _, scale) = eval(z);
        if v.norm() > ROOT_RESIDUAL_TOL * scale {
            return Err(Error::EmbeddingPrecision(format!(
                "root {z} has residual {} above tolerance {ROOT_RESIDUAL_TOL}",
                v.norm() / scale
            )));
        }
        // Snap essentially-real roots to the real axis.
        if z.im.abs() < 1e-12 * (1.0 + z.norm()) {
            z = Complex64::new(z.re, 0.0);
        }
        roots.push(z);
    }
    Ok(roots)
}

/// Durand-Kerner simultaneous root iteration for a monic polynomial given by
/// f64 coefficients (constant first).
fn durand_kerner(coeffs: &[f64]) -> Vec<Complex64> {
    let deg = coeffs.len() - 1;
    let radius = 1.0 + coeffs.iter().map(|c| c.abs()).fold(0.0, f64::max);
    let seed = Complex64::new(0.4, 0.9);
    let mut zs: Vec<Complex64> = (0..deg)
        .map(|k| seed.powu(k as u32 + 1) * radius)
        .collect();
    let eval = |z: Complex64| {
        let mut v = Complex64::new(0.0, 0.0);
        for c in coeffs.iter().rev() {
            v = v * z + Complex64::new(*c, 0.0);
        }
        v
    };
    for _ in 0..500 {
        let mut max_step = 0.0f64;
        for i in 0..deg {
            let mut denom = Complex64::new(1.0, 0.0);
            for j in 0..deg {
                if j != i {
                    denom *= zs[i] - zs[j];
                }
            }
            if denom.norm() == 0.0 {
                continue;
            }
            let step = eval(zs[i]) / denom;
            zs[i] -= step;
            max_step = max_step.max(step.norm());
        }
        if max_step < 1e-14 * radius {
            break;
        }
    }
    zs
}

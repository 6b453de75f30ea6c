//! Sparse multivariate polynomials over the exact rationals.
//!
//! Monomials are sorted exponent vectors keyed by [`SymbolId`]; terms live in
//! a `BTreeMap` under a graded-lexicographic order so every traversal, print
//! and serialization is deterministic.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num::{BigInt, BigRational, Integer, One, Signed, Zero};

use super::symbol::SymbolId;
use super::ExprError;

/// A power product, kept sorted by symbol.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct Monomial(pub Vec<(SymbolId, u32)>);

impl Monomial {
    pub fn unit() -> Self {
        Monomial(Vec::new())
    }

    pub fn var(s: SymbolId) -> Self {
        Monomial(vec![(s, 1)])
    }

    pub fn total_degree(&self) -> u32 {
        self.0.iter().map(|(_, e)| *e).sum()
    }

    pub fn degree_of(&self, s: &SymbolId) -> u32 {
        self.0
            .iter()
            .find(|(t, _)| t == s)
            .map(|(_, e)| *e)
            .unwrap_or(0)
    }

    /// Total degree counting only symbols matching the predicate.
    pub fn degree_where(&self, pred: impl Fn(&SymbolId) -> bool) -> u32 {
        self.0
            .iter()
            .filter(|(s, _)| pred(s))
            .map(|(_, e)| *e)
            .sum()
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        let mut out = Vec::with_capacity(self.0.len() + other.0.len());
        let (mut i, mut j) = (0, 0);
        while i < self.0.len() && j < other.0.len() {
            match self.0[i].0.cmp(&other.0[j].0) {
                Ordering::Less => {
                    out.push(self.0[i].clone());
                    i += 1;
                }
                Ordering::Greater => {
                    out.push(other.0[j].clone());
                    j += 1;
                }
                Ordering::Equal => {
                    out.push((self.0[i].0.clone(), self.0[i].1 + other.0[j].1));
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&self.0[i..]);
        out.extend_from_slice(&other.0[j..]);
        Monomial(out)
    }

    /// Divide exactly; `None` when not divisible.
    pub fn div(&self, other: &Monomial) -> Option<Monomial> {
        let mut out = Vec::with_capacity(self.0.len());
        let mut j = 0;
        for (s, e) in &self.0 {
            let mut e = *e;
            while j < other.0.len() && other.0[j].0 < *s {
                return None; // divisor has a symbol we lack
            }
            if j < other.0.len() && other.0[j].0 == *s {
                if other.0[j].1 > e {
                    return None;
                }
                e -= other.0[j].1;
                j += 1;
            }
            if e > 0 {
                out.push((s.clone(), e));
            }
        }
        if j < other.0.len() {
            return None;
        }
        Some(Monomial(out))
    }

    pub fn gcd(&self, other: &Monomial) -> Monomial {
        let mut out = Vec::new();
        for (s, e) in &self.0 {
            let d = other.degree_of(s);
            if d > 0 {
                out.push((s.clone(), (*e).min(d)));
            }
        }
        Monomial(out)
    }

    pub fn without(&self, s: &SymbolId) -> Monomial {
        Monomial(self.0.iter().filter(|(t, _)| t != s).cloned().collect())
    }

    /// Split into the sub-monomial of symbols matching `pred` and the rest.
    pub fn split(&self, pred: impl Fn(&SymbolId) -> bool) -> (Monomial, Monomial) {
        let mut yes = Vec::new();
        let mut no = Vec::new();
        for (s, e) in &self.0 {
            if pred(s) {
                yes.push((s.clone(), *e));
            } else {
                no.push((s.clone(), *e));
            }
        }
        (Monomial(yes), Monomial(no))
    }
}

// Graded lex: total degree first, then larger power on the earlier symbol
// wins.
impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        self.total_degree()
            .cmp(&other.total_degree())
            .then_with(|| {
                let (mut i, mut j) = (0, 0);
                loop {
                    match (self.0.get(i), other.0.get(j)) {
                        (None, None) => return Ordering::Equal,
                        (Some(_), None) => return Ordering::Greater,
                        (None, Some(_)) => return Ordering::Less,
                        (Some((s, e)), Some((t, f))) => match s.cmp(t) {
                            Ordering::Less => return Ordering::Greater,
                            Ordering::Greater => return Ordering::Less,
                            Ordering::Equal => {
                                if e != f {
                                    return e.cmp(f);
                                }
                                i += 1;
                                j += 1;
                            }
                        },
                    }
                }
            })
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Sparse polynomial.  The zero polynomial has no terms; no stored
/// coefficient is zero.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Poly {
    pub terms: BTreeMap<Monomial, BigRational>,
}

impl Poly {
    pub fn zero() -> Poly {
        Poly {
            terms: BTreeMap::new(),
        }
    }

    pub fn one() -> Poly {
        Poly::constant(BigRational::one())
    }

    pub fn constant(c: BigRational) -> Poly {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(Monomial::unit(), c);
        }
        Poly { terms }
    }

    pub fn int(n: i64) -> Poly {
        Poly::constant(BigRational::from(BigInt::from(n)))
    }

    pub fn var(s: SymbolId) -> Poly {
        let mut terms = BTreeMap::new();
        terms.insert(Monomial::var(s), BigRational::one());
        Poly { terms }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_constant(&self) -> bool {
        self.terms.is_empty() || (self.terms.len() == 1 && self.terms.contains_key(&Monomial::unit()))
    }

    pub fn as_constant(&self) -> Option<BigRational> {
        if self.terms.is_empty() {
            return Some(BigRational::zero());
        }
        if self.terms.len() == 1 {
            if let Some(c) = self.terms.get(&Monomial::unit()) {
                return Some(c.clone());
            }
        }
        None
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn add_term(&mut self, m: Monomial, c: BigRational) {
        if c.is_zero() {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry(m) {
            Entry::Vacant(v) => {
                v.insert(c);
            }
            Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), -c.clone());
        }
        out
    }

    pub fn neg(&self) -> Poly {
        Poly {
            terms: self
                .terms
                .iter()
                .map(|(m, c)| (m.clone(), -c.clone()))
                .collect(),
        }
    }

    pub fn scale(&self, c: &BigRational) -> Poly {
        if c.is_zero() {
            return Poly::zero();
        }
        Poly {
            terms: self
                .terms
                .iter()
                .map(|(m, k)| (m.clone(), k * c))
                .collect(),
        }
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        if self.is_zero() || other.is_zero() {
            return Poly::zero();
        }
        // iterate over the smaller operand outside
        let (small, big) = if self.terms.len() <= other.terms.len() {
            (self, other)
        } else {
            (other, self)
        };
        let mut out = Poly::zero();
        for (m1, c1) in &small.terms {
            for (m2, c2) in &big.terms {
                out.add_term(m1.mul(m2), c1 * c2);
            }
        }
        out
    }

    pub fn mul_monomial(&self, m: &Monomial, c: &BigRational) -> Poly {
        if c.is_zero() {
            return Poly::zero();
        }
        Poly {
            terms: self
                .terms
                .iter()
                .map(|(m1, c1)| (m1.mul(m), c1 * c))
                .collect(),
        }
    }

    pub fn pow(&self, e: u32) -> Poly {
        let mut acc = Poly::one();
        for _ in 0..e {
            acc = acc.mul(self);
        }
        acc
    }

    pub fn leading(&self) -> Option<(&Monomial, &BigRational)> {
        self.terms.iter().next_back()
    }

    pub fn total_degree(&self) -> u32 {
        self.terms
            .keys()
            .map(|m| m.total_degree())
            .max()
            .unwrap_or(0)
    }

    pub fn degree_of(&self, s: &SymbolId) -> u32 {
        self.terms.keys().map(|m| m.degree_of(s)).max().unwrap_or(0)
    }

    pub fn symbols(&self) -> BTreeSet<SymbolId> {
        let mut out = BTreeSet::new();
        for m in self.terms.keys() {
            for (s, _) in &m.0 {
                out.insert(s.clone());
            }
        }
        out
    }

    pub fn contains_symbol_where(&self, pred: impl Fn(&SymbolId) -> bool + Copy) -> bool {
        self.terms
            .keys()
            .any(|m| m.0.iter().any(|(s, _)| pred(s)))
    }

    /// Formal partial derivative, with the opaque chain rule along dependent
    /// variables.
    pub fn derivative(&self, s: &SymbolId) -> Poly {
        let mut out = Poly::zero();
        for (m, c) in &self.terms {
            // explicit occurrence of s
            let e = m.degree_of(s);
            if e > 0 {
                let mut rest: Vec<(SymbolId, u32)> = Vec::new();
                for (t, k) in &m.0 {
                    if t == s {
                        if *k > 1 {
                            rest.push((t.clone(), k - 1));
                        }
                    } else {
                        rest.push((t.clone(), *k));
                    }
                }
                out.add_term(Monomial(rest), c * BigRational::from(BigInt::from(e)));
            }
            // chain rule through opaque symbols
            if let SymbolId::Dependent(_) = s {
                for (t, k) in &m.0 {
                    if let Some(dt) = t.formal_derivative(s) {
                        // d(t^k) = k t^(k-1) dt
                        let mut rest: Vec<(SymbolId, u32)> = Vec::new();
                        for (t2, k2) in &m.0 {
                            if t2 == t {
                                if *k2 > 1 {
                                    rest.push((t2.clone(), k2 - 1));
                                }
                            } else {
                                rest.push((t2.clone(), *k2));
                            }
                        }
                        let base = Monomial(rest).mul(&Monomial::var(dt));
                        out.add_term(base, c * BigRational::from(BigInt::from(*k)));
                    }
                }
            }
        }
        out
    }

    /// Substitute symbols by polynomials (simultaneously).
    pub fn substitute(&self, map: &BTreeMap<SymbolId, Poly>) -> Poly {
        if map.is_empty() {
            return self.clone();
        }
        let mut out = Poly::zero();
        for (m, c) in &self.terms {
            let mut acc = Poly::constant(c.clone());
            let mut plain = Monomial::unit();
            for (s, e) in &m.0 {
                match map.get(s) {
                    Some(p) => acc = acc.mul(&p.pow(*e)),
                    None => plain = plain.mul(&Monomial(vec![(s.clone(), *e)])),
                }
            }
            out = out.add(&acc.mul_monomial(&plain, &BigRational::one()));
        }
        out
    }

    /// Rename symbols (must be injective on the support, or collisions merge).
    pub fn map_symbols(&self, f: impl Fn(&SymbolId) -> SymbolId) -> Poly {
        let mut out = Poly::zero();
        for (m, c) in &self.terms {
            let mut v: Vec<(SymbolId, u32)> = Vec::with_capacity(m.0.len());
            for (s, e) in &m.0 {
                v.push((f(s), *e));
            }
            v.sort_by(|a, b| a.0.cmp(&b.0));
            // merge duplicates
            let mut merged: Vec<(SymbolId, u32)> = Vec::with_capacity(v.len());
            for (s, e) in v {
                if let Some(last) = merged.last_mut() {
                    if last.0 == s {
                        last.1 += e;
                        continue;
                    }
                }
                merged.push((s, e));
            }
            out.add_term(Monomial(merged), c.clone());
        }
        out
    }

    /// Exact division; `None` when `self` is not a polynomial multiple of `d`.
    pub fn exact_div(&self, d: &Poly) -> Option<Poly> {
        if d.is_zero() {
            return None;
        }
        if self.is_zero() {
            return Some(Poly::zero());
        }
        if let Some(c) = d.as_constant() {
            return Some(self.scale(&c.recip()));
        }
        let (dm, dc) = d.leading().unwrap();
        let mut rem = self.clone();
        let mut quo = Poly::zero();
        while !rem.is_zero() {
            let (rm, rc) = rem.leading().unwrap();
            let qm = rm.div(dm)?;
            let qc = rc / dc;
            quo.add_term(qm.clone(), qc.clone());
            rem = rem.sub(&d.mul_monomial(&qm, &qc));
        }
        Some(quo)
    }

    /// Exact evaluation at a rational point; all symbols must be bound.
    pub fn eval(&self, point: &BTreeMap<SymbolId, BigRational>) -> Result<BigRational, ExprError> {
        let mut acc = BigRational::zero();
        for (m, c) in &self.terms {
            let mut v = c.clone();
            for (s, e) in &m.0 {
                let x = point
                    .get(s)
                    .ok_or_else(|| ExprError::UnboundSymbol(s.to_string()))?;
                for _ in 0..*e {
                    v *= x;
                }
            }
            acc += v;
        }
        Ok(acc)
    }

    /// Scale to integer coefficients with content 1 and positive leading
    /// coefficient.  Returns the primitive polynomial (zero stays zero).
    pub fn primitive_normalized(&self) -> Poly {
        if self.is_zero() {
            return Poly::zero();
        }
        let mut den_lcm = BigInt::one();
        for c in self.terms.values() {
            den_lcm = den_lcm.lcm(c.denom());
        }
        let mut num_gcd = BigInt::zero();
        for c in self.terms.values() {
            let n = c.numer() * &den_lcm / c.denom();
            num_gcd = num_gcd.gcd(&n);
        }
        let mut scale = BigRational::new(den_lcm, num_gcd);
        if self.leading().unwrap().1.is_negative() {
            scale = -scale;
        }
        self.scale(&scale)
    }

    /// Group terms by their sub-monomial in symbols matching `pred`, giving
    /// a map from that sub-monomial to the coefficient polynomial in the
    /// remaining symbols.
    pub fn group_by(
        &self,
        pred: impl Fn(&SymbolId) -> bool + Copy,
    ) -> BTreeMap<Monomial, Poly> {
        let mut out: BTreeMap<Monomial, Poly> = BTreeMap::new();
        for (m, c) in &self.terms {
            let (key, rest) = m.split(pred);
            out.entry(key)
                .or_insert_with(Poly::zero)
                .add_term(rest, c.clone());
        }
        out.retain(|_, p| !p.is_zero());
        out
    }
}

// ---------------------------------------------------------------------------
// gcd
// ---------------------------------------------------------------------------

/// Multivariate gcd by primitive pseudo-remainder sequences, recursing on the
/// variable set.  The result is primitive with positive leading coefficient.
pub fn poly_gcd(a: &Poly, b: &Poly) -> Poly {
    if a.is_zero() {
        return b.primitive_normalized();
    }
    if b.is_zero() {
        return a.primitive_normalized();
    }
    if a.is_constant() || b.is_constant() {
        return Poly::one();
    }
    // fast path: trial division
    if a.exact_div(b).is_some() {
        return b.primitive_normalized();
    }
    if b.exact_div(a).is_some() {
        return a.primitive_normalized();
    }
    let va = a.symbols();
    let vb = b.symbols();
    // a variable present in only one argument cannot occur in the gcd, so
    // that argument may be replaced by its content with respect to it
    if let Some(v) = va.symmetric_difference(&vb).next() {
        return if va.contains(v) {
            poly_gcd(&content_wrt(a, v), b)
        } else {
            poly_gcd(a, &content_wrt(b, v))
        };
    }
    // strip variables certified (by rational specialization) to be absent
    // from the gcd; keep the rest as candidates for the main variable
    let mut live: Vec<SymbolId> = Vec::new();
    for v in &va {
        if certified_gcd_degree_zero(a, b, v) {
            return poly_gcd(&content_wrt(a, v), &content_wrt(b, v));
        }
        live.push(v.clone());
    }
    if live.is_empty() {
        return Poly::one();
    }
    // main variable: minimal combined degree keeps pseudo-remainders short
    let v = live
        .iter()
        .min_by_key(|s| a.degree_of(s) + b.degree_of(s))
        .unwrap()
        .clone();
    let ca = content_wrt(a, &v);
    let cb = content_wrt(b, &v);
    let pa = a.exact_div(&ca).expect("content divides");
    let pb = b.exact_div(&cb).expect("content divides");
    let cont_gcd = poly_gcd(&ca, &cb);

    // primitive PRS on the primitive parts
    let (mut p, mut q) = if pa.degree_of(&v) >= pb.degree_of(&v) {
        (pa, pb)
    } else {
        (pb, pa)
    };
    loop {
        let r = pseudo_rem(&p, &q, &v);
        if r.is_zero() {
            let prim = q
                .exact_div(&content_wrt(&q, &v))
                .expect("content divides")
                .primitive_normalized();
            return prim.mul(&cont_gcd).primitive_normalized();
        }
        if r.degree_of(&v) == 0 {
            // gcd free of v: only the contents share a factor
            return cont_gcd.primitive_normalized();
        }
        let rp = r.exact_div(&content_wrt(&r, &v)).expect("content divides");
        p = q;
        q = rp;
    }
}

/// Certificate that `gcd(a, b)` has degree zero in `v`, obtained by
/// specializing the other variables at a random rational point and running
/// univariate Euclid.
///
/// Soundness: write `a = g * h` for a common factor `g`.  If the image of `a`
/// keeps its full `v`-degree then the leading `v`-coefficient of `g` cannot
/// vanish at the point, so the image of `g` keeps its `v`-degree too; a
/// constant univariate gcd of the images therefore proves `deg_v(g) = 0`.
/// When the degree-retention check or the Euclid test fails the routine
/// answers `false` and the caller falls back to the full PRS.
fn certified_gcd_degree_zero(a: &Poly, b: &Poly, v: &SymbolId) -> bool {
    let mut state: u64 = 0x9e37_79b9_7f4a_7c15;
    let mut next = move || {
        state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
        let mut z = state;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    };
    // the degree-retention check can fail by bad luck; retry a few points
    for _ in 0..4 {
        let mut point = BTreeMap::new();
        for s in a.symbols().union(&b.symbols()) {
            if s != v {
                let z = next();
                let num = BigInt::from((z % 9) as i64 + 1) * if z & 0x100 == 0 { 1 } else { -1 };
                let den = BigInt::from(((z >> 9) % 3) as i64 + 1);
                point.insert(s.clone(), BigRational::new(num, den));
            }
        }
        let (Some(ua), Some(ub)) = (univariate_image(a, v, &point), univariate_image(b, v, &point))
        else {
            return false;
        };
        let deg = |u: &BTreeMap<u32, BigRational>| u.keys().max().copied().unwrap_or(0);
        if deg(&ua) < a.degree_of(v) || deg(&ub) < b.degree_of(v) {
            continue;
        }
        return univariate_gcd_degree(ua, ub) == 0;
    }
    false
}

/// Image of `p` as a univariate polynomial in `v` under a rational point for
/// the remaining variables; `None` if some symbol is unbound.
fn univariate_image(
    p: &Poly,
    v: &SymbolId,
    point: &BTreeMap<SymbolId, BigRational>,
) -> Option<BTreeMap<u32, BigRational>> {
    let mut out: BTreeMap<u32, BigRational> = BTreeMap::new();
    for (d, coeff) in univariate_coeffs(p, v) {
        let c = coeff.eval(point).ok()?;
        if !c.is_zero() {
            out.insert(d, c);
        }
    }
    Some(out)
}

/// Degree of the gcd of two univariate rational polynomials (Euclid).
fn univariate_gcd_degree(
    mut p: BTreeMap<u32, BigRational>,
    mut q: BTreeMap<u32, BigRational>,
) -> u32 {
    let deg = |u: &BTreeMap<u32, BigRational>| u.keys().max().copied().unwrap_or(0);
    if deg(&p) < deg(&q) {
        std::mem::swap(&mut p, &mut q);
    }
    while !q.is_empty() {
        let dq = deg(&q);
        let lq = q[&dq].clone();
        let mut r = p;
        while !r.is_empty() && deg(&r) >= dq {
            let dr = deg(&r);
            let factor = &r[&dr] / &lq;
            let shift = dr - dq;
            for (d, c) in &q {
                let e = r.entry(d + shift).or_insert_with(BigRational::zero);
                *e -= &factor * c;
            }
            r.retain(|_, c| !c.is_zero());
        }
        p = q;
        q = r;
    }
    deg(&p)
}

/// Content of `p` regarded as univariate in `v`: gcd of the coefficient
/// polynomials.
fn content_wrt(p: &Poly, v: &SymbolId) -> Poly {
    let coeffs = univariate_coeffs(p, v);
    let mut g = Poly::zero();
    for c in coeffs.into_values() {
        g = poly_gcd(&g, &c);
        if g.as_constant().map(|k| k.is_one()).unwrap_or(false) {
            break;
        }
    }
    g
}

/// Coefficients of `p` as a univariate polynomial in `v` (degree -> coeff).
pub fn univariate_coeffs(p: &Poly, v: &SymbolId) -> BTreeMap<u32, Poly> {
    let mut out: BTreeMap<u32, Poly> = BTreeMap::new();
    for (m, c) in &p.terms {
        let d = m.degree_of(v);
        out.entry(d)
            .or_insert_with(Poly::zero)
            .add_term(m.without(v), c.clone());
    }
    out.retain(|_, q| !q.is_zero());
    out
}

/// Pseudo-remainder of `a` by `b` with respect to `v`.
fn pseudo_rem(a: &Poly, b: &Poly, v: &SymbolId) -> Poly {
    let db = b.degree_of(v);
    let bc = univariate_coeffs(b, v);
    let lead_b = bc.get(&db).cloned().unwrap_or_else(Poly::zero);
    let mut r = a.clone();
    loop {
        let dr = r.degree_of(v);
        if r.is_zero() || dr < db {
            return r;
        }
        let rc = univariate_coeffs(&r, v);
        let lead_r = rc.get(&dr).cloned().unwrap_or_else(Poly::zero);
        // r := lead_b * r - lead_r * v^(dr-db) * b
        let shift = Monomial(vec![(v.clone(), dr - db)]);
        let shifted = if dr == db {
            b.mul(&lead_r)
        } else {
            b.mul(&lead_r).mul_monomial(&shift, &BigRational::one())
        };
        r = r.mul(&lead_b).sub(&shifted);
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (m, c) in self.terms.iter().rev() {
            let neg = c.is_negative();
            let mag = c.abs();
            if first {
                if neg {
                    write!(f, "-")?;
                }
                first = false;
            } else if neg {
                write!(f, " - ")?;
            } else {
                write!(f, " + ")?;
            }
            let unit_coeff = mag.is_one() && !m.0.is_empty();
            if !unit_coeff {
                if mag.is_integer() {
                    write!(f, "{}", mag.numer())?;
                } else {
                    write!(f, "{}/{}", mag.numer(), mag.denom())?;
                }
                if !m.0.is_empty() {
                    write!(f, "*")?;
                }
            }
            for (k, (s, e)) in m.0.iter().enumerate() {
                if k > 0 {
                    write!(f, "*")?;
                }
                if *e == 1 {
                    write!(f, "{s}")?;
                } else {
                    write!(f, "{s}^{e}")?;
                }
            }
        }
        Ok(())
    }
}

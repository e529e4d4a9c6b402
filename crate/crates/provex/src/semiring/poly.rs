//! Provenance polynomials with natural coefficients and exponents.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops::{Add, Mul};

use crate::error::{Error, Result};

/// A product of variables with exponents, sorted by variable name.
pub type Monomial = Vec<(String, u32)>;

/// A polynomial in canonical form: like monomials merged, no zero coefficients.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Polynomial {
    terms: BTreeMap<Monomial, u64>,
}

/// The provenance semirings reachable from N[X] by a homomorphism.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SemiringKind {
    NX,
    BX,
    Trio,
    Why,
    PosBool,
    Which,
}

impl SemiringKind {
    pub const ALL: [SemiringKind; 6] = [
        SemiringKind::NX,
        SemiringKind::BX,
        SemiringKind::Trio,
        SemiringKind::Why,
        SemiringKind::PosBool,
        SemiringKind::Which,
    ];

    pub fn parse(s: &str) -> Option<SemiringKind> {
        Some(match s.to_ascii_lowercase().as_str() {
            "nx" | "n[x]" => SemiringKind::NX,
            "bx" | "b[x]" => SemiringKind::BX,
            "trio" => SemiringKind::Trio,
            "why" => SemiringKind::Why,
            "posbool" => SemiringKind::PosBool,
            "which" | "lineage" => SemiringKind::Which,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            SemiringKind::NX => "nx",
            SemiringKind::BX => "bx",
            SemiringKind::Trio => "trio",
            SemiringKind::Why => "why",
            SemiringKind::PosBool => "posbool",
            SemiringKind::Which => "which",
        }
    }
}

fn mul_monomials(a: &Monomial, b: &Monomial) -> Monomial {
    let mut map: BTreeMap<String, u32> = a.iter().cloned().collect();
    for (v, e) in b {
        *map.entry(v.clone()).or_insert(0) += e;
    }
    map.into_iter().collect()
}

fn degree(m: &Monomial) -> u32 {
    m.iter().map(|(_, e)| e).sum()
}

fn expanded(m: &Monomial) -> Vec<&str> {
    m.iter().flat_map(|(v, e)| std::iter::repeat(v.as_str()).take(*e as usize)).collect()
}

impl Polynomial {
    pub fn zero() -> Polynomial {
        Polynomial::default()
    }

    pub fn one() -> Polynomial {
        Polynomial::constant(1)
    }

    pub fn constant(c: u64) -> Polynomial {
        let mut p = Polynomial::zero();
        if c > 0 {
            p.terms.insert(Vec::new(), c);
        }
        p
    }

    pub fn var(name: &str) -> Polynomial {
        let mut p = Polynomial::zero();
        p.terms.insert(vec![(name.to_string(), 1)], 1);
        p
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, u64)> {
        self.terms.iter().map(|(m, c)| (m, *c))
    }

    pub fn from_terms(terms: impl IntoIterator<Item = (Monomial, u64)>) -> Polynomial {
        let mut p = Polynomial::zero();
        for (m, c) in terms {
            p.add_term(m, c);
        }
        p
    }

    fn add_term(&mut self, m: Monomial, c: u64) {
        if c == 0 {
            return;
        }
        let mut map: BTreeMap<String, u32> = BTreeMap::new();
        for (v, e) in m {
            *map.entry(v).or_insert(0) += e;
        }
        let m: Monomial = map.into_iter().filter(|(_, e)| *e > 0).collect();
        *self.terms.entry(m).or_insert(0) += c;
    }

    pub fn variables(&self) -> BTreeSet<&str> {
        self.terms.keys().flat_map(|m| m.iter().map(|(v, _)| v.as_str())).collect()
    }

    /// Substitutes constants for variables.
    pub fn substitute(&self, values: &BTreeMap<&str, u64>) -> Polynomial {
        let mut out = Polynomial::zero();
        for (m, c) in &self.terms {
            let mut coeff = *c;
            let mut rest = Vec::new();
            for (v, e) in m {
                match values.get(v.as_str()) {
                    Some(x) => coeff = coeff.saturating_mul(x.saturating_pow(*e)),
                    None => rest.push((v.clone(), *e)),
                }
            }
            out.add_term(rest, coeff);
        }
        out
    }

    /// Keeps the monomials for which `keep` holds.
    pub fn retain(&mut self, mut keep: impl FnMut(&Monomial) -> bool) {
        self.terms.retain(|m, _| keep(m));
    }

    /// Applies the equational laws of `kind` to a canonical representative.
    pub fn normalize(&self, kind: SemiringKind) -> Polynomial {
        let flat = |p: &Polynomial, drop_exp: bool, drop_coeff: bool| {
            let mut out = Polynomial::zero();
            for (m, c) in &p.terms {
                let m = if drop_exp { m.iter().map(|(v, _)| (v.clone(), 1)).collect() } else { m.clone() };
                out.add_term(m, *c);
            }
            if drop_coeff {
                out.terms.values_mut().for_each(|c| *c = 1);
            }
            out
        };
        match kind {
            SemiringKind::NX => self.clone(),
            SemiringKind::BX => flat(self, false, true),
            SemiringKind::Trio => flat(self, true, false),
            SemiringKind::Why => flat(self, true, true),
            SemiringKind::PosBool => {
                let why = flat(self, true, true);
                let sets: Vec<BTreeSet<&str>> =
                    why.terms.keys().map(|m| m.iter().map(|(v, _)| v.as_str()).collect()).collect();
                let keep: Vec<bool> = sets
                    .iter()
                    .map(|s| !sets.iter().any(|o| o.len() < s.len() && o.is_subset(s)))
                    .collect();
                Polynomial::from_terms(why.terms.keys().zip(keep).filter(|(_, k)| *k).map(|(m, _)| (m.clone(), 1)))
            }
            SemiringKind::Which => {
                if self.is_zero() {
                    return Polynomial::zero();
                }
                let vars = self.variables();
                if vars.is_empty() {
                    return Polynomial::one();
                }
                Polynomial::from_terms(vars.into_iter().map(|v| (vec![(v.to_string(), 1)], 1)))
            }
        }
    }

    /// Parses `p^3 + 2*p*q*r`; `0` and `1` denote the constants.
    pub fn parse(text: &str) -> Result<Polynomial> {
        let mut out = Polynomial::zero();
        let text = text.trim();
        if text == "0" {
            return Ok(out);
        }
        for (i, term) in text.split('+').enumerate() {
            let term = term.trim();
            if term.is_empty() {
                return Err(Error::syntax(1, i + 1, "+", "empty monomial"));
            }
            let mut coeff = 1u64;
            let mut m = Vec::new();
            for factor in term.split(['*', '·']) {
                let factor = factor.trim();
                let (base, exp) = match factor.split_once('^') {
                    Some((b, e)) => {
                        let e = e.trim().parse::<u32>().map_err(|_| Error::syntax(1, i + 1, e, "bad exponent"))?;
                        (b.trim(), e)
                    }
                    None => (factor, 1),
                };
                if let Ok(n) = base.parse::<u64>() {
                    coeff = coeff.saturating_mul(n.saturating_pow(exp));
                } else if !base.is_empty() && base.chars().all(|c| c.is_alphanumeric() || c == '_') {
                    m.push((base.to_string(), exp));
                } else {
                    return Err(Error::syntax(1, i + 1, base, "expected a variable or a number"));
                }
            }
            out.add_term(m, coeff);
        }
        Ok(out)
    }
}

impl Add for &Polynomial {
    type Output = Polynomial;

    fn add(self, other: &Polynomial) -> Polynomial {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), *c);
        }
        out
    }
}

impl Mul for &Polynomial {
    type Output = Polynomial;

    fn mul(self, other: &Polynomial) -> Polynomial {
        let mut out = Polynomial::zero();
        for (a, x) in &self.terms {
            for (b, y) in &other.terms {
                out.add_term(mul_monomials(a, b), x.saturating_mul(*y));
            }
        }
        out
    }
}

impl fmt::Display for Polynomial {
    /// Monomials by descending degree, then by their expanded variable sequence.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        let mut terms: Vec<(&Monomial, u64)> = self.terms.iter().map(|(m, c)| (m, *c)).collect();
        terms.sort_by(|(a, _), (b, _)| degree(b).cmp(&degree(a)).then_with(|| expanded(a).cmp(&expanded(b))));
        for (i, (m, c)) in terms.into_iter().enumerate() {
            if i > 0 {
                f.write_str(" + ")?;
            }
            let mut parts = Vec::new();
            if c != 1 || m.is_empty() {
                parts.push(c.to_string());
            }
            for (v, e) in m.iter() {
                parts.push(if *e == 1 { v.clone() } else { format!("{v}^{e}") });
            }
            f.write_str(&parts.join("*"))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> Polynomial {
        Polynomial::parse(s).unwrap()
    }

    #[test]
    fn prints_in_canonical_order() {
        let x = &(&p("p") * &p("p")) * &p("p");
        let y = &(&p("2") * &p("q*r")) * &p("p");
        assert_eq!((&x + &y).to_string(), "p^3 + 2*p*q*r");
        assert_eq!(p("u*r*v_bar + t*s*v_bar").to_string(), "r*u*v_bar + s*t*v_bar");
        assert_eq!(Polynomial::zero().to_string(), "0");
        assert_eq!(p("3").to_string(), "3");
        assert_eq!(p("x*x + 1").to_string(), "x^2 + 1");
    }

    #[test]
    fn normalization_per_semiring() {
        let poly = p("p^3 + 2*p*q*r");
        assert_eq!(poly.normalize(SemiringKind::NX), poly);
        assert_eq!(poly.normalize(SemiringKind::BX).to_string(), "p^3 + p*q*r");
        assert_eq!(poly.normalize(SemiringKind::Trio).to_string(), "2*p*q*r + p");
        assert_eq!(poly.normalize(SemiringKind::Why).to_string(), "p*q*r + p");
        assert_eq!(poly.normalize(SemiringKind::PosBool).to_string(), "p");
        assert_eq!(poly.normalize(SemiringKind::Which).to_string(), "p + q + r");
    }

    #[test]
    fn substitution_annihilates() {
        let poly = p("t*s*v_bar + u*r*v_bar");
        let zero = BTreeMap::from([("v_bar", 0)]);
        assert!(poly.substitute(&zero).is_zero());
    }

    #[test]
    fn parse_rejects_garbage() {
        assert!(Polynomial::parse("p + ").is_err());
        assert!(Polynomial::parse("p^x").is_err());
        assert!(Polynomial::parse("(p)").is_err());
    }
}

//! Provenance questions: `WHY Q(n,s)` and `WHYNOT Q(n,X)`.

use std::collections::HashMap;
use std::fmt;

use crate::datalog::{parse_atom, Atom, Term};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Qualifier {
    Why,
    WhyNot,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ProvQuestion {
    pub qualifier: Qualifier,
    pub pattern: Atom,
}

impl ProvQuestion {
    pub fn why(pattern: Atom) -> ProvQuestion {
        ProvQuestion { qualifier: Qualifier::Why, pattern }
    }

    pub fn why_not(pattern: Atom) -> ProvQuestion {
        ProvQuestion { qualifier: Qualifier::WhyNot, pattern }
    }

    /// Parses `WHY <atom>`, `WHYNOT <atom>` or `WHY NOT <atom>` (case-insensitive).
    pub fn parse(text: &str) -> Result<ProvQuestion> {
        let text = text.trim();
        let word_end = text.find(|c: char| !c.is_alphabetic()).unwrap_or(text.len());
        let (word, rest) = text.split_at(word_end);
        let (qualifier, rest) = match word.to_ascii_uppercase().as_str() {
            "WHYNOT" => (Qualifier::WhyNot, rest),
            "WHY" => {
                let trimmed = rest.trim_start();
                let next_end = trimmed.find(|c: char| !c.is_alphabetic()).unwrap_or(trimmed.len());
                if trimmed[..next_end].eq_ignore_ascii_case("not") && !trimmed[next_end..].trim_start().is_empty() && trimmed[next_end..].trim_start().starts_with(|c: char| c.is_alphabetic()) {
                    (Qualifier::WhyNot, &trimmed[next_end..])
                } else {
                    (Qualifier::Why, rest)
                }
            }
            _ => return Err(Error::syntax(1, 1, word, "expected WHY or WHYNOT")),
        };
        if rest.trim().is_empty() {
            return Err(Error::syntax(1, text.len() + 1, "", "expected a question pattern"));
        }
        let pattern = parse_atom(rest.trim())?;
        Ok(ProvQuestion { qualifier, pattern })
    }
}

impl fmt::Display for ProvQuestion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let q = match self.qualifier {
            Qualifier::Why => "WHY",
            Qualifier::WhyNot => "WHYNOT",
        };
        write!(f, "{q} {}", self.pattern)
    }
}

/// Whether a ground tuple is an instance of the pattern (consistent variable bindings).
pub fn pattern_matches<S: AsRef<str>>(pattern: &Atom, tuple: &[S]) -> bool {
    if pattern.args.len() != tuple.len() {
        return false;
    }
    let mut seen: HashMap<&str, &str> = HashMap::new();
    pattern.args.iter().zip(tuple).all(|(p, v)| match p {
        Term::Const(c) => c == v.as_ref(),
        Term::Var(x) => *seen.entry(x).or_insert(v.as_ref()) == v.as_ref(),
        Term::Func(..) => false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_qualifiers() {
        let q = ProvQuestion::parse("WHY Q(n,s)").unwrap();
        assert_eq!(q.qualifier, Qualifier::Why);
        assert_eq!(q.pattern.to_string(), "Q(n,s)");
        let q = ProvQuestion::parse("WHYNOT Q(n,X)").unwrap();
        assert_eq!(q.qualifier, Qualifier::WhyNot);
        assert_eq!(q.pattern.args[1], Term::var("X"));
        let q = ProvQuestion::parse("why not Q(s,n)").unwrap();
        assert_eq!(q.qualifier, Qualifier::WhyNot);
        assert_eq!(q.to_string(), "WHYNOT Q(s,n)");
        assert!(matches!(ProvQuestion::parse("WHY"), Err(Error::Syntax { .. })));
        assert!(matches!(ProvQuestion::parse("HOW Q(a)"), Err(Error::Syntax { .. })));
    }

    #[test]
    fn matching_respects_repeated_variables() {
        let p = parse_atom("Q(X,X,a)").unwrap();
        assert!(pattern_matches(&p, &["b", "b", "a"]));
        assert!(!pattern_matches(&p, &["b", "c", "a"]));
        assert!(!pattern_matches(&p, &["b", "b", "c"]));
    }
}

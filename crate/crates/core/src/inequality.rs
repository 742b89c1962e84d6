//! Noncontextuality inequalities with exact rational coefficients.
//!
//! An inequality is a sum of correlation terms `x_n <prod_{k in E_n} A_k>`
//! over contexts `E_n` of pairwise compatible observables, normalized so
//! that its classical maximum over deterministic +-1 assignments is 1.
//! The classical bound is verified by exhaustive enumeration in exact
//! arithmetic; no floating point enters this module.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use num_rational::{Ratio, Rational64};
use num_traits::Signed;

use crate::error::{Error, Result};
use crate::textio::{content_lines, parse_err};
use crate::tol;

/// One correlation term: a nonzero rational coefficient and its context,
/// a strictly increasing list of 1-based observable indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Term {
    pub coeff: Rational64,
    pub context: Vec<usize>,
}

/// A noncontextuality inequality over `n_observables` dichotomic observables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Inequality {
    n_observables: usize,
    terms: Vec<Term>,
}

/// A deterministic assignment of +-1 outcomes to every observable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Assignment {
    signs: Vec<i8>,
}

/// Result of exhaustively checking the classical bound.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassicalBoundReport {
    pub max_value: Rational64,
    pub argmax: Assignment,
    pub is_normalized: bool,
    pub n_assignments_checked: u64,
}

impl Assignment {
    pub fn new(signs: Vec<i8>) -> Result<Self> {
        if signs.iter().any(|&s| s != 1 && s != -1) {
            return Err(Error::Precondition("assignment entries must be +1 or -1".into()));
        }
        Ok(Self { signs })
    }

    /// Assignment number `bits` in lexicographic order with +1 < -1:
    /// bit (n-k) of `bits` set means observable k is assigned -1.
    pub fn from_bits(bits: u64, n: usize) -> Self {
        let signs = (1..=n)
            .map(|k| if bits >> (n - k) & 1 == 0 { 1 } else { -1 })
            .collect();
        Self { signs }
    }

    pub fn all_plus(n: usize) -> Self {
        Self { signs: vec![1; n] }
    }

    pub fn signs(&self) -> &[i8] {
        &self.signs
    }

    pub fn len(&self) -> usize {
        self.signs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.signs.is_empty()
    }
}

impl std::fmt::Display for Assignment {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let body: Vec<&str> = self.signs.iter().map(|&s| if s > 0 { "+" } else { "-" }).collect();
        write!(f, "({})", body.join(","))
    }
}

impl Inequality {
    /// Builds an inequality, sorting each context and validating the
    /// invariants: indices in range and distinct, no duplicate contexts,
    /// at least one term, all coefficients nonzero.
    pub fn new(n_observables: usize, terms: Vec<Term>) -> Result<Self> {
        if n_observables == 0 {
            return Err(Error::EmptyInequality);
        }
        if terms.is_empty() {
            return Err(Error::Precondition("inequality needs at least one term".into()));
        }
        let mut seen: BTreeSet<Vec<usize>> = BTreeSet::new();
        let mut sorted_terms = Vec::with_capacity(terms.len());
        for mut term in terms {
            if term.coeff == Ratio::from_integer(0) {
                return Err(Error::Precondition("zero coefficient".into()));
            }
            if term.context.is_empty() {
                return Err(Error::Precondition("empty context".into()));
            }
            for &k in &term.context {
                if k == 0 || k > n_observables {
                    return Err(Error::IndexOutOfRange { index: k, n: n_observables });
                }
            }
            term.context.sort_unstable();
            if term.context.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::DuplicateContext {
                    context: join_indices(&term.context),
                });
            }
            if !seen.insert(term.context.clone()) {
                return Err(Error::DuplicateContext {
                    context: join_indices(&term.context),
                });
            }
            sorted_terms.push(term);
        }
        Ok(Self { n_observables, terms: sorted_terms })
    }

    pub fn n_observables(&self) -> usize {
        self.n_observables
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    /// Sum of |x_n|, the trivial bound on any classical or quantum value.
    pub fn coeff_abs_sum(&self) -> Rational64 {
        self.terms.iter().map(|t| t.coeff.abs()).sum()
    }

    /// The CHSH inequality: 1/2(<A1A3> + <A1A4> + <A2A3> - <A2A4>) <= 1.
    pub fn chsh() -> Self {
        let h = Ratio::new(1, 2);
        Self::new(
            4,
            vec![
                Term { coeff: h, context: vec![1, 3] },
                Term { coeff: h, context: vec![1, 4] },
                Term { coeff: h, context: vec![2, 3] },
                Term { coeff: -h, context: vec![2, 4] },
            ],
        )
        .expect("chsh is valid")
    }

    /// The KCBS inequality: -1/3 sum of the five cyclic pair correlations.
    pub fn kcbs() -> Self {
        let c = Ratio::new(-1, 3);
        Self::new(
            5,
            (1..=5)
                .map(|i| Term { coeff: c, context: vec![i, i % 5 + 1] })
                .collect(),
        )
        .expect("kcbs is valid")
    }

    /// Evaluates `sum_n x_n prod_{k in E_n} a_k` in exact arithmetic.
    pub fn classical_value(&self, a: &Assignment) -> Result<Rational64> {
        if a.len() != self.n_observables {
            return Err(Error::AssignmentLength { got: a.len(), expected: self.n_observables });
        }
        let mut acc: Ratio<i128> = Ratio::from_integer(0);
        for term in &self.terms {
            let sign: i128 = term.context.iter().map(|&k| i128::from(a.signs[k - 1])).product();
            acc += Ratio::new(i128::from(*term.coeff.numer()) * sign, i128::from(*term.coeff.denom()));
        }
        narrow(acc)
    }

    /// Contexts sharing an observable with `k`: the commutation neighbors.
    pub fn compatibility_neighbors(&self, k: usize) -> Result<BTreeSet<usize>> {
        if k == 0 || k > self.n_observables {
            return Err(Error::IndexOutOfRange { index: k, n: self.n_observables });
        }
        let mut out = BTreeSet::new();
        for term in &self.terms {
            if term.context.contains(&k) {
                out.extend(term.context.iter().copied().filter(|&l| l != k));
            }
        }
        Ok(out)
    }

    /// Exhaustively verifies the classical bound over all 2^N assignments.
    ///
    /// The argmax reported is the first maximizer in lexicographic order
    /// with +1 ordered before -1.
    pub fn validate_normalization(&self) -> Result<ClassicalBoundReport> {
        self.validate_normalization_with_guard(tol::ENUM_GUARD)
    }

    pub fn validate_normalization_with_guard(&self, guard: usize) -> Result<ClassicalBoundReport> {
        let n = self.n_observables;
        if n > guard {
            return Err(Error::EnumerationGuard { n, guard });
        }
        let (scaled, denom) = self.scaled_coeffs()?;
        let masks: Vec<u64> = self
            .terms
            .iter()
            .map(|t| t.context.iter().fold(0u64, |m, &k| m | 1 << (n - k)))
            .collect();
        let total = 1u64 << n;
        let mut best = i128::MIN;
        let mut best_bits = 0u64;
        for bits in 0..total {
            let value = scaled_value(&scaled, &masks, bits);
            if value > best {
                best = value;
                best_bits = bits;
            }
        }
        let max_value = narrow(Ratio::new(best, denom))?;
        Ok(ClassicalBoundReport {
            max_value,
            argmax: Assignment::from_bits(best_bits, n),
            is_normalized: max_value == Ratio::from_integer(1),
            n_assignments_checked: total,
        })
    }

    /// Coefficients scaled to a common denominator, for integer enumeration.
    fn scaled_coeffs(&self) -> Result<(Vec<i128>, i128)> {
        let mut denom: i128 = 1;
        for t in &self.terms {
            let q = i128::from(*t.coeff.denom());
            denom = denom
                .checked_div(num_integer::gcd(denom, q))
                .and_then(|d| d.checked_mul(q))
                .ok_or_else(|| Error::NumericOverflow("common denominator".into()))?;
        }
        let scaled = self
            .terms
            .iter()
            .map(|t| {
                i128::from(*t.coeff.numer())
                    .checked_mul(denom / i128::from(*t.coeff.denom()))
                    .ok_or_else(|| Error::NumericOverflow("scaled coefficient".into()))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok((scaled, denom))
    }

    /// Serializes to the `ineq v1` text format.
    pub fn to_text(&self) -> String {
        let mut out = String::from("ineq v1\n");
        let _ = writeln!(out, "observables {}", self.n_observables);
        for t in &self.terms {
            let coeff = if *t.coeff.denom() == 1 {
                t.coeff.numer().to_string()
            } else {
                format!("{}/{}", t.coeff.numer(), t.coeff.denom())
            };
            let _ = writeln!(out, "term {} : {}", coeff, join_indices(&t.context));
        }
        out
    }
}

fn join_indices(ctx: &[usize]) -> String {
    ctx.iter().map(|k| k.to_string()).collect::<Vec<_>>().join(" ")
}

fn scaled_value(scaled: &[i128], masks: &[u64], bits: u64) -> i128 {
    scaled
        .iter()
        .zip(masks)
        .map(|(&c, &m)| if (bits & m).count_ones() % 2 == 0 { c } else { -c })
        .sum()
}

fn narrow(r: Ratio<i128>) -> Result<Rational64> {
    let numer = i64::try_from(*r.numer())
        .map_err(|_| Error::NumericOverflow(format!("{r}")))?;
    let denom = i64::try_from(*r.denom())
        .map_err(|_| Error::NumericOverflow(format!("{r}")))?;
    Ok(Ratio::new(numer, denom))
}

/// Parses the `ineq v1` format:
///
/// ```text
/// ineq v1
/// observables <N>
/// term <coeff> : <i1> <i2> ...
/// ```
///
/// Coefficients are signed integers, finite decimals, or `p/q` fractions,
/// parsed exactly. Indices are 1-based.
pub fn parse_inequality(input: &str) -> Result<Inequality> {
    let lines = content_lines(input);
    let mut it = lines.iter();

    let header = it.next().ok_or_else(|| parse_err(1, "empty inequality file"))?;
    if header.text != "ineq v1" {
        return Err(parse_err(header.number, "expected header `ineq v1`"));
    }

    let obs_line = it
        .next()
        .ok_or_else(|| parse_err(header.number, "missing `observables <N>` line"))?;
    let n: usize = obs_line
        .text
        .strip_prefix("observables")
        .map(str::trim)
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| parse_err(obs_line.number, "expected `observables <N>`"))?;
    if n == 0 {
        return Err(Error::EmptyInequality);
    }

    let mut terms = Vec::new();
    for line in it {
        let body = line
            .text
            .strip_prefix("term")
            .ok_or_else(|| parse_err(line.number, "expected `term <coeff> : <indices>`"))?;
        let (coeff_str, idx_str) = body
            .split_once(':')
            .ok_or_else(|| parse_err(line.number, "missing `:` in term"))?;
        let coeff = parse_rational(coeff_str.trim(), line.number)?;
        let mut context = Vec::new();
        for tok in idx_str.split_whitespace() {
            let k: usize = tok
                .parse()
                .map_err(|_| parse_err(line.number, format!("bad index `{tok}`")))?;
            if k == 0 || k > n {
                return Err(Error::IndexOutOfRange { index: k, n });
            }
            context.push(k);
        }
        if context.is_empty() {
            return Err(parse_err(line.number, "term has no indices"));
        }
        // repeated indices within one context are rejected, not collapsed
        let mut sorted = context.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(parse_err(
                line.number,
                format!("duplicate index in context `{}`", idx_str.trim()),
            ));
        }
        if coeff == Ratio::from_integer(0) {
            return Err(parse_err(line.number, "zero coefficient"));
        }
        terms.push(Term { coeff, context });
    }

    Inequality::new(n, terms)
}

/// Parses an exact rational: integer, `p/q`, or finite decimal.
fn parse_rational(s: &str, line: usize) -> Result<Rational64> {
    if let Some((p, q)) = s.split_once('/') {
        let numer: i64 = p
            .trim()
            .parse()
            .map_err(|_| parse_err(line, format!("bad numerator `{p}`")))?;
        let denom: i64 = q
            .trim()
            .parse()
            .map_err(|_| parse_err(line, format!("bad denominator `{q}`")))?;
        if denom == 0 {
            return Err(parse_err(line, "zero denominator"));
        }
        return Ok(Ratio::new(numer, denom));
    }
    if let Some((int_part, frac_part)) = s.split_once('.') {
        if frac_part.is_empty() || !frac_part.bytes().all(|b| b.is_ascii_digit()) {
            return Err(parse_err(line, format!("bad decimal `{s}`")));
        }
        let negative = int_part.trim_start().starts_with('-');
        let int: i64 = if int_part == "-" || int_part.is_empty() {
            0
        } else {
            int_part
                .parse()
                .map_err(|_| parse_err(line, format!("bad decimal `{s}`")))?
        };
        let scale = 10i64
            .checked_pow(frac_part.len() as u32)
            .ok_or_else(|| Error::NumericOverflow(format!("decimal `{s}`")))?;
        let frac: i64 = frac_part
            .parse()
            .map_err(|_| parse_err(line, format!("bad decimal `{s}`")))?;
        let unsigned = int
            .unsigned_abs()
            .checked_mul(scale.unsigned_abs())
            .and_then(|v| v.checked_add(frac.unsigned_abs()))
            .ok_or_else(|| Error::NumericOverflow(format!("decimal `{s}`")))?;
        let numer = i64::try_from(unsigned)
            .map_err(|_| Error::NumericOverflow(format!("decimal `{s}`")))?;
        return Ok(Ratio::new(if negative { -numer } else { numer }, scale));
    }
    let int: i64 = s
        .parse()
        .map_err(|_| parse_err(line, format!("bad coefficient `{s}`")))?;
    Ok(Ratio::from_integer(int))
}

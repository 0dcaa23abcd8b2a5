//! Polynomial observables over diagonal generators.
//!
//! Grammar (whitespace ignored):
//!
//! ```text
//! expr    := ['+'|'-'] term (('+'|'-') term)*
//! term    := power (('*'|'/') power)*
//! power   := primary ['^' integer]
//! primary := number | 'z' | 'n'<site> | 'N' | 'Nt' | '(' expr ')'
//! ```
//!
//! `z` is the dimer imbalance `(n_1 − n_2)/(2Ñ)`, `n3` the occupation of
//! site 3, `N` the particle number and `Nt` is `Ñ = N + 1`. Division is only
//! allowed by constant subexpressions.

use crate::error::{Error, Result};
use crate::sparse::SparseOperator;

use super::FockBasis;

#[derive(Clone, Debug, PartialEq)]
enum Node {
    Const(f64),
    Z,
    Site(usize),
    ParticleCount,
    NTilde,
    Add(Box<Node>, Box<Node>),
    Sub(Box<Node>, Box<Node>),
    Mul(Box<Node>, Box<Node>),
    Div(Box<Node>, Box<Node>),
    Neg(Box<Node>),
    Pow(Box<Node>, u32),
}

/// Parsed observable, evaluable on any compatible basis.
#[derive(Clone, Debug, PartialEq)]
pub struct OperatorExpr {
    source: String,
    root: Node,
}

impl OperatorExpr {
    pub fn parse(src: &str) -> Result<Self> {
        let tokens = tokenize(src)?;
        let mut p = Parser { tokens, pos: 0 };
        let root = p.expr()?;
        if p.pos != p.tokens.len() {
            return Err(Error::Parse(format!(
                "unexpected `{}` in `{src}`",
                p.tokens[p.pos]
            )));
        }
        Ok(Self {
            source: src.to_string(),
            root,
        })
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    /// Diagonal of the operator on `basis`.
    pub fn diagonal(&self, basis: &FockBasis) -> Result<Vec<f64>> {
        check(&self.root, basis)?;
        Ok(basis.states().map(|s| eval(&self.root, basis, s)).collect())
    }
}

fn poly_add(a: &[f64], b: &[f64], sign: f64) -> Vec<f64> {
    let mut out = vec![0.0; a.len().max(b.len())];
    for (i, x) in a.iter().enumerate() {
        out[i] += x;
    }
    for (i, x) in b.iter().enumerate() {
        out[i] += sign * x;
    }
    out
}

fn poly_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

fn z_poly(node: &Node) -> Result<Vec<f64>> {
    Ok(match node {
        Node::Const(c) => vec![*c],
        Node::Z => vec![0.0, 1.0],
        Node::Add(a, b) => poly_add(&z_poly(a)?, &z_poly(b)?, 1.0),
        Node::Sub(a, b) => poly_add(&z_poly(a)?, &z_poly(b)?, -1.0),
        Node::Mul(a, b) => poly_mul(&z_poly(a)?, &z_poly(b)?),
        Node::Div(a, b) => {
            let d = z_poly(b)?;
            if d.len() != 1 || d[0] == 0.0 {
                return Err(Error::Parse("division by a non-constant or zero".into()));
            }
            z_poly(a)?.iter().map(|x| x / d[0]).collect()
        }
        Node::Neg(a) => z_poly(a)?.iter().map(|x| -x).collect(),
        Node::Pow(a, k) => {
            let base = z_poly(a)?;
            (0..*k).fold(vec![1.0], |acc, _| poly_mul(&acc, &base))
        }
        _ => {
            return Err(Error::UnknownGenerator(
                "only `z` and numbers have a classical imbalance polynomial".into(),
            ))
        }
    })
}

impl OperatorExpr {
    /// Coefficients `[c_0, c_1, …]` of the expression as a polynomial in the
    /// imbalance `z`, for expressions built from `z` and numbers only.
    pub fn z_polynomial(&self) -> Result<Vec<f64>> {
        z_poly(&self.root)
    }
}

/// Diagonal operator equal to the pointwise polynomial of the generators.
pub fn operator_polynomial(basis: &FockBasis, spec: &str) -> Result<SparseOperator> {
    let expr = OperatorExpr::parse(spec)?;
    Ok(SparseOperator::from_diagonal(&expr.diagonal(basis)?))
}

fn check(node: &Node, basis: &FockBasis) -> Result<()> {
    match node {
        Node::Z if basis.sites() != 2 => Err(Error::UnsupportedGeometry(
            "generator `z` needs a two-site basis".into(),
        )),
        Node::Site(j) if *j == 0 || *j > basis.sites() => Err(Error::SiteOutOfRange {
            site: *j,
            sites: basis.sites(),
        }),
        Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) => {
            check(a, basis)?;
            check(b, basis)
        }
        Node::Div(a, b) => {
            check(a, basis)?;
            if !is_constant(b) {
                return Err(Error::Parse("division by a non-constant operator".into()));
            }
            check(b, basis)
        }
        Node::Neg(a) | Node::Pow(a, _) => check(a, basis),
        _ => Ok(()),
    }
}

fn is_constant(node: &Node) -> bool {
    match node {
        Node::Const(_) | Node::ParticleCount | Node::NTilde => true,
        Node::Z | Node::Site(_) => false,
        Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) => {
            is_constant(a) && is_constant(b)
        }
        Node::Neg(a) | Node::Pow(a, _) => is_constant(a),
    }
}

fn eval(node: &Node, basis: &FockBasis, occ: &[u32]) -> f64 {
    match node {
        Node::Const(c) => *c,
        Node::Z => (occ[0] as f64 - occ[1] as f64) / (2.0 * basis.n_tilde()),
        Node::Site(j) => occ[j - 1] as f64,
        Node::ParticleCount => basis.particles() as f64,
        Node::NTilde => basis.n_tilde(),
        Node::Add(a, b) => eval(a, basis, occ) + eval(b, basis, occ),
        Node::Sub(a, b) => eval(a, basis, occ) - eval(b, basis, occ),
        Node::Mul(a, b) => eval(a, basis, occ) * eval(b, basis, occ),
        Node::Div(a, b) => eval(a, basis, occ) / eval(b, basis, occ),
        Node::Neg(a) => -eval(a, basis, occ),
        Node::Pow(a, k) => eval(a, basis, occ).powi(*k as i32),
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Token {
    Num(f64),
    Ident(String),
    Op(char),
}

impl std::fmt::Display for Token {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Token::Num(x) => write!(f, "{x}"),
            Token::Ident(s) => write!(f, "{s}"),
            Token::Op(c) => write!(f, "{c}"),
        }
    }
}

fn tokenize(src: &str) -> Result<Vec<Token>> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < chars.len()
                && (chars[i].is_ascii_digit()
                    || chars[i] == '.'
                    || chars[i] == 'e'
                    || ((chars[i] == '-' || chars[i] == '+') && i > start && chars[i - 1] == 'e'))
            {
                i += 1;
            }
            let text: String = chars[start..i].iter().collect();
            let v = text
                .parse::<f64>()
                .map_err(|_| Error::Parse(format!("bad number `{text}`")))?;
            out.push(Token::Num(v));
        } else if c.is_ascii_alphabetic() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_alphanumeric() {
                i += 1;
            }
            out.push(Token::Ident(chars[start..i].iter().collect()));
        } else if "+-*/^()".contains(c) {
            out.push(Token::Op(c));
            i += 1;
        } else {
            return Err(Error::Parse(format!("unexpected character `{c}`")));
        }
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek_op(&self) -> Option<char> {
        match self.tokens.get(self.pos) {
            Some(Token::Op(c)) => Some(*c),
            _ => None,
        }
    }

    fn expr(&mut self) -> Result<Node> {
        let mut node = match self.peek_op() {
            Some('-') => {
                self.pos += 1;
                Node::Neg(Box::new(self.term()?))
            }
            Some('+') => {
                self.pos += 1;
                self.term()?
            }
            _ => self.term()?,
        };
        while let Some(op @ ('+' | '-')) = self.peek_op() {
            self.pos += 1;
            let rhs = self.term()?;
            node = if op == '+' {
                Node::Add(Box::new(node), Box::new(rhs))
            } else {
                Node::Sub(Box::new(node), Box::new(rhs))
            };
        }
        Ok(node)
    }

    fn term(&mut self) -> Result<Node> {
        let mut node = self.power()?;
        while let Some(op @ ('*' | '/')) = self.peek_op() {
            self.pos += 1;
            let rhs = self.power()?;
            node = if op == '*' {
                Node::Mul(Box::new(node), Box::new(rhs))
            } else {
                Node::Div(Box::new(node), Box::new(rhs))
            };
        }
        Ok(node)
    }

    fn power(&mut self) -> Result<Node> {
        let base = self.primary()?;
        if self.peek_op() == Some('^') {
            self.pos += 1;
            match self.tokens.get(self.pos) {
                Some(Token::Num(k)) if k.fract() == 0.0 && *k >= 0.0 => {
                    self.pos += 1;
                    return Ok(Node::Pow(Box::new(base), *k as u32));
                }
                other => {
                    return Err(Error::Parse(format!(
                        "exponent must be a non-negative integer, got {other:?}"
                    )))
                }
            }
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Node> {
        let tok = self
            .tokens
            .get(self.pos)
            .cloned()
            .ok_or_else(|| Error::Parse("unexpected end of expression".into()))?;
        self.pos += 1;
        match tok {
            Token::Num(v) => Ok(Node::Const(v)),
            Token::Op('(') => {
                let inner = self.expr()?;
                if self.peek_op() != Some(')') {
                    return Err(Error::Parse("missing `)`".into()));
                }
                self.pos += 1;
                Ok(inner)
            }
            Token::Ident(name) => match name.as_str() {
                "z" => Ok(Node::Z),
                "N" => Ok(Node::ParticleCount),
                "Nt" => Ok(Node::NTilde),
                s if s.len() > 1
                    && s.starts_with('n')
                    && s[1..].chars().all(|c| c.is_ascii_digit()) =>
                {
                    Ok(Node::Site(s[1..].parse().unwrap()))
                }
                _ => Err(Error::UnknownGenerator(name)),
            },
            Token::Op(c) => Err(Error::Parse(format!("unexpected `{c}`"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fockspace::{site_number_operator, z_operator};

    #[test]
    fn z_plus_z_squared() {
        let n = 10u32;
        let b = FockBasis::new(2, n).unwrap();
        let a = operator_polynomial(&b, "z + z^2").unwrap();
        let z = n as f64 / (2.0 * (n as f64 + 1.0));
        assert!((a.entry(0, 0).re - (z + z * z)).abs() < 1e-15);
    }

    #[test]
    fn constant_is_identity() {
        let b = FockBasis::new(3, 4).unwrap();
        let one = operator_polynomial(&b, "1").unwrap();
        assert_eq!(one, SparseOperator::identity(b.dim()));
    }

    #[test]
    fn z_squared_matches_entrywise_square() {
        let b = FockBasis::new(2, 25).unwrap();
        let z = z_operator(&b).unwrap().diagonal_values().unwrap();
        let z2 = operator_polynomial(&b, "z^2")
            .unwrap()
            .diagonal_values()
            .unwrap();
        for (a, b) in z.iter().zip(&z2) {
            assert!((a * a - b).abs() <= 1e-15);
        }
    }

    #[test]
    fn classical_polynomial() {
        let e = OperatorExpr::parse("z + z^2").unwrap();
        assert_eq!(e.z_polynomial().unwrap(), vec![0.0, 1.0, 1.0]);
        let e = OperatorExpr::parse("(1 - 2*z)^2/4").unwrap();
        assert_eq!(e.z_polynomial().unwrap(), vec![0.25, -1.0, 1.0]);
        assert!(OperatorExpr::parse("n1").unwrap().z_polynomial().is_err());
    }

    #[test]
    fn scaled_site_occupation() {
        let b = FockBasis::new(3, 6).unwrap();
        let lhs = operator_polynomial(&b, "n1/N").unwrap();
        let rhs = site_number_operator(&b, 1, true).unwrap();
        for (l, r) in lhs
            .diagonal_values()
            .unwrap()
            .iter()
            .zip(rhs.diagonal_values().unwrap())
        {
            assert!((l - r).abs() <= 1e-15);
        }
        let mixed = operator_polynomial(&b, "-(n1 - n2)*2 + 0.5").unwrap();
        let s = b.state(3);
        let want = -((s[0] as f64) - (s[1] as f64)) * 2.0 + 0.5;
        assert_eq!(mixed.entry(3, 3).re, want);
    }

    #[test]
    fn errors() {
        let b = FockBasis::new(2, 4).unwrap();
        assert!(matches!(
            operator_polynomial(&b, "q + 1"),
            Err(Error::UnknownGenerator(g)) if g == "q"
        ));
        assert!(matches!(
            operator_polynomial(&b, "n3"),
            Err(Error::SiteOutOfRange { .. })
        ));
        assert!(operator_polynomial(&b, "1/z").is_err());
        assert!(operator_polynomial(&b, "z +").is_err());
        let b3 = FockBasis::new(3, 4).unwrap();
        assert!(operator_polynomial(&b3, "z").is_err());
    }
}

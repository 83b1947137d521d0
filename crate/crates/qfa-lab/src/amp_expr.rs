//! Amplitude expressions: the textual form of matrix entries in machine
//! files, e.g. `1/sqrt(2)` or `-1/(2*sqrt(2))`.
//!
//! The language is deliberately tiny: numeric literals, the imaginary
//! unit `i`, `sqrt`, unary minus, and the four arithmetic operators with
//! the usual precedence. Whitespace is insignificant. Parsing and
//! evaluation are separate so that files can round-trip through the
//! original expression text.

use crate::linalg::Complex64;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq)]
pub enum AmpExpr {
    Number(f64),
    ImagUnit,
    Neg(Box<AmpExpr>),
    Sqrt(Box<AmpExpr>),
    Add(Box<AmpExpr>, Box<AmpExpr>),
    Sub(Box<AmpExpr>, Box<AmpExpr>),
    Mul(Box<AmpExpr>, Box<AmpExpr>),
    Div(Box<AmpExpr>, Box<AmpExpr>),
}

#[derive(Debug, Error, PartialEq)]
#[error("amplitude syntax error at byte {offset}: {message}")]
pub struct AmpParseError {
    pub offset: usize,
    pub message: String,
}

#[derive(Debug, Error, PartialEq)]
pub enum AmpEvalError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("sqrt argument must be a nonnegative real, got {re}{im:+}i")]
    SqrtOutOfDomain { re: f64, im: f64 },
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Number(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    LParen,
    RParen,
}

fn tokenize(input: &str) -> Result<Vec<(Token, usize)>, AmpParseError> {
    let bytes = input.as_bytes();
    let mut out = Vec::new();
    let mut pos = 0;
    while pos < bytes.len() {
        let b = bytes[pos];
        match b {
            b' ' | b'\t' => {
                pos += 1;
            }
            b'+' => {
                out.push((Token::Plus, pos));
                pos += 1;
            }
            b'-' => {
                out.push((Token::Minus, pos));
                pos += 1;
            }
            b'*' => {
                out.push((Token::Star, pos));
                pos += 1;
            }
            b'/' => {
                out.push((Token::Slash, pos));
                pos += 1;
            }
            b'(' => {
                out.push((Token::LParen, pos));
                pos += 1;
            }
            b')' => {
                out.push((Token::RParen, pos));
                pos += 1;
            }
            b'0'..=b'9' => {
                let start = pos;
                while pos < bytes.len() && bytes[pos].is_ascii_digit() {
                    pos += 1;
                }
                if pos < bytes.len() && bytes[pos] == b'.' {
                    pos += 1;
                    if pos >= bytes.len() || !bytes[pos].is_ascii_digit() {
                        return Err(AmpParseError {
                            offset: pos.min(bytes.len()),
                            message: "expected digits after decimal point".into(),
                        });
                    }
                    while pos < bytes.len() && bytes[pos].is_ascii_digit() {
                        pos += 1;
                    }
                }
                let text = &input[start..pos];
                let value: f64 = text.parse().map_err(|_| AmpParseError {
                    offset: start,
                    message: format!("invalid numeric literal '{text}'"),
                })?;
                out.push((Token::Number(value), start));
            }
            b'a'..=b'z' | b'A'..=b'Z' => {
                let start = pos;
                while pos < bytes.len() && bytes[pos].is_ascii_alphanumeric() {
                    pos += 1;
                }
                out.push((Token::Ident(input[start..pos].to_string()), start));
            }
            _ => {
                return Err(AmpParseError {
                    offset: pos,
                    message: format!("unexpected byte {:?}", b as char),
                });
            }
        }
    }
    Ok(out)
}

struct Parser<'a> {
    tokens: &'a [(Token, usize)],
    pos: usize,
    input_len: usize,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&(Token, usize)> {
        self.tokens.get(self.pos)
    }

    fn here(&self) -> usize {
        self.tokens
            .get(self.pos)
            .map(|(_, o)| *o)
            .unwrap_or(self.input_len)
    }

    fn bump(&mut self) -> Option<(Token, usize)> {
        let t = self.tokens.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, want: Token, what: &str) -> Result<(), AmpParseError> {
        match self.bump() {
            Some((t, _)) if t == want => Ok(()),
            Some((_, at)) => Err(AmpParseError {
                offset: at,
                message: format!("expected {what}"),
            }),
            None => Err(AmpParseError {
                offset: self.input_len,
                message: format!("expected {what}, found end of input"),
            }),
        }
    }

    fn expr(&mut self) -> Result<AmpExpr, AmpParseError> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Some((Token::Plus, _)) => {
                    self.bump();
                    let rhs = self.term()?;
                    lhs = AmpExpr::Add(Box::new(lhs), Box::new(rhs));
                }
                Some((Token::Minus, _)) => {
                    self.bump();
                    let rhs = self.term()?;
                    lhs = AmpExpr::Sub(Box::new(lhs), Box::new(rhs));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<AmpExpr, AmpParseError> {
        let mut lhs = self.factor()?;
        loop {
            match self.peek() {
                Some((Token::Star, _)) => {
                    self.bump();
                    let rhs = self.factor()?;
                    lhs = AmpExpr::Mul(Box::new(lhs), Box::new(rhs));
                }
                Some((Token::Slash, _)) => {
                    self.bump();
                    let rhs = self.factor()?;
                    lhs = AmpExpr::Div(Box::new(lhs), Box::new(rhs));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn factor(&mut self) -> Result<AmpExpr, AmpParseError> {
        match self.bump() {
            Some((Token::Number(v), _)) => Ok(AmpExpr::Number(v)),
            Some((Token::Ident(name), at)) => match name.as_str() {
                "i" => Ok(AmpExpr::ImagUnit),
                "sqrt" => {
                    self.expect(Token::LParen, "'(' after sqrt")?;
                    let inner = self.expr()?;
                    self.expect(Token::RParen, "')' closing sqrt")?;
                    Ok(AmpExpr::Sqrt(Box::new(inner)))
                }
                other => Err(AmpParseError {
                    offset: at,
                    message: format!("unknown identifier '{other}'"),
                }),
            },
            Some((Token::Minus, _)) => {
                let inner = self.factor()?;
                Ok(AmpExpr::Neg(Box::new(inner)))
            }
            Some((Token::LParen, _)) => {
                let inner = self.expr()?;
                self.expect(Token::RParen, "closing ')'")?;
                Ok(inner)
            }
            Some((t, at)) => Err(AmpParseError {
                offset: at,
                message: format!("unexpected token {t:?}"),
            }),
            None => Err(AmpParseError {
                offset: self.input_len,
                message: "unexpected end of input".into(),
            }),
        }
    }
}

/// Parse one amplitude expression; the whole input must be consumed.
pub fn parse_amp(input: &str) -> Result<AmpExpr, AmpParseError> {
    let tokens = tokenize(input)?;
    if tokens.is_empty() {
        return Err(AmpParseError {
            offset: 0,
            message: "empty amplitude expression".into(),
        });
    }
    let mut p = Parser {
        tokens: &tokens,
        pos: 0,
        input_len: input.len(),
    };
    let e = p.expr()?;
    if p.pos != tokens.len() {
        return Err(AmpParseError {
            offset: p.here(),
            message: "trailing input after expression".into(),
        });
    }
    Ok(e)
}

/// Evaluate to a complex value. `sqrt` is only defined on nonnegative
/// reals; complex arguments are a domain error, not a branch choice.
pub fn eval(expr: &AmpExpr) -> Result<Complex64, AmpEvalError> {
    match expr {
        AmpExpr::Number(v) => Ok(Complex64::new(*v, 0.0)),
        AmpExpr::ImagUnit => Ok(Complex64::new(0.0, 1.0)),
        AmpExpr::Neg(inner) => Ok(-eval(inner)?),
        AmpExpr::Sqrt(inner) => {
            let v = eval(inner)?;
            if v.im != 0.0 || v.re < 0.0 {
                return Err(AmpEvalError::SqrtOutOfDomain { re: v.re, im: v.im });
            }
            Ok(Complex64::new(v.re.sqrt(), 0.0))
        }
        AmpExpr::Add(a, b) => Ok(eval(a)? + eval(b)?),
        AmpExpr::Sub(a, b) => Ok(eval(a)? - eval(b)?),
        AmpExpr::Mul(a, b) => Ok(eval(a)? * eval(b)?),
        AmpExpr::Div(a, b) => {
            let den = eval(b)?;
            if den == Complex64::new(0.0, 0.0) {
                return Err(AmpEvalError::DivisionByZero);
            }
            Ok(eval(a)? / den)
        }
    }
}

fn precedence(expr: &AmpExpr) -> u8 {
    match expr {
        AmpExpr::Add(..) | AmpExpr::Sub(..) => 1,
        AmpExpr::Mul(..) | AmpExpr::Div(..) => 2,
        AmpExpr::Neg(..) => 3,
        AmpExpr::Number(..) | AmpExpr::ImagUnit | AmpExpr::Sqrt(..) => 4,
    }
}

fn write_with_parens(out: &mut String, expr: &AmpExpr, min_prec: u8) {
    let prec = precedence(expr);
    let needs = prec < min_prec;
    if needs {
        out.push('(');
    }
    match expr {
        AmpExpr::Number(v) => {
            // f64 Display is the shortest decimal that round-trips, and
            // never uses exponent notation, so it stays inside the
            // expression grammar.
            out.push_str(&format!("{v}"));
        }
        AmpExpr::ImagUnit => out.push('i'),
        AmpExpr::Neg(inner) => {
            out.push('-');
            write_with_parens(out, inner, 4);
        }
        AmpExpr::Sqrt(inner) => {
            out.push_str("sqrt(");
            write_with_parens(out, inner, 0);
            out.push(')');
        }
        AmpExpr::Add(a, b) => {
            write_with_parens(out, a, 1);
            out.push_str(" + ");
            write_with_parens(out, b, 2);
        }
        AmpExpr::Sub(a, b) => {
            write_with_parens(out, a, 1);
            out.push_str(" - ");
            write_with_parens(out, b, 2);
        }
        AmpExpr::Mul(a, b) => {
            write_with_parens(out, a, 2);
            out.push('*');
            write_with_parens(out, b, 3);
        }
        AmpExpr::Div(a, b) => {
            write_with_parens(out, a, 2);
            out.push('/');
            write_with_parens(out, b, 3);
        }
    }
    if needs {
        out.push(')');
    }
}

/// Render in canonical form. Reparsing the result yields a structurally
/// identical tree, so evaluation agrees to the bit.
pub fn pretty(expr: &AmpExpr) -> String {
    let mut out = String::new();
    write_with_parens(&mut out, expr, 0);
    out
}

/// Render a complex constant as an expression that evaluates back to
/// exactly the same two doubles.
pub fn format_complex(z: Complex64) -> String {
    if z.im == 0.0 {
        format_real(z.re)
    } else if z.re == 0.0 {
        if z.im < 0.0 {
            format!("-{}*i", positive_real(-z.im))
        } else {
            format!("{}*i", positive_real(z.im))
        }
    } else if z.im < 0.0 {
        format!("{} - {}*i", format_real(z.re), positive_real(-z.im))
    } else {
        format!("{} + {}*i", format_real(z.re), positive_real(z.im))
    }
}

fn format_real(x: f64) -> String {
    if x < 0.0 {
        format!("-{}", positive_real(-x))
    } else {
        positive_real(x)
    }
}

fn positive_real(x: f64) -> String {
    debug_assert!(x >= 0.0);
    let s = format!("{x}");
    debug_assert_eq!(s.parse::<f64>().ok(), Some(x), "float did not round-trip");
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ev(src: &str) -> Complex64 {
        eval(&parse_amp(src).unwrap()).unwrap()
    }

    #[test]
    fn evaluates_reference_expressions() {
        let v = ev("1/sqrt(2)");
        assert!((v.re - 0.7071067811865475).abs() < 1e-16);
        assert_eq!(v.im, 0.0);

        let v = ev("-1/(2*sqrt(2))");
        assert!((v.re - (-0.35355339059327373)).abs() < 1e-16);

        let v = ev("i*i");
        assert_eq!(v, Complex64::new(-1.0, 0.0));

        assert_eq!(ev("2 + 3*4"), Complex64::new(14.0, 0.0));
        assert_eq!(ev("(2 + 3)*4"), Complex64::new(20.0, 0.0));
        assert_eq!(ev("1 - 2 - 3"), Complex64::new(-4.0, 0.0));
        assert_eq!(ev("0.5 - 0.25*i"), Complex64::new(0.5, -0.25));
    }

    #[test]
    fn sqrt_rejects_complex_and_negative_arguments() {
        let e = parse_amp("sqrt(i)").unwrap();
        assert!(matches!(
            eval(&e),
            Err(AmpEvalError::SqrtOutOfDomain { .. })
        ));
        let e = parse_amp("sqrt(-1)").unwrap();
        assert!(matches!(
            eval(&e),
            Err(AmpEvalError::SqrtOutOfDomain { .. })
        ));
    }

    #[test]
    fn division_by_zero_is_an_evaluation_error() {
        let e = parse_amp("1/(1 - 1)").unwrap();
        assert_eq!(eval(&e), Err(AmpEvalError::DivisionByZero));
    }

    #[test]
    fn syntax_errors_carry_byte_offsets() {
        let err = parse_amp("1 + @").unwrap_err();
        assert_eq!(err.offset, 4);
        let err = parse_amp("sqrt 2").unwrap_err();
        assert_eq!(err.offset, 5);
        let err = parse_amp("(1 + 2").unwrap_err();
        assert_eq!(err.offset, 6);
        let err = parse_amp("1 + ").unwrap_err();
        assert_eq!(err.offset, 4);
        let err = parse_amp("foo").unwrap_err();
        assert_eq!(err.offset, 0);
        let err = parse_amp("1 2").unwrap_err();
        assert_eq!(err.offset, 2);
    }

    #[test]
    fn pretty_round_trips_reference_expressions() {
        for src in [
            "1/sqrt(2)",
            "-1/(2*sqrt(2))",
            "i*i",
            "1 - 2 - 3",
            "1 - (2 - 3)",
            "2*(3 + 4)",
            "-(1 + i)",
            "sqrt(2)/2 + 0.5*i",
        ] {
            let tree = parse_amp(src).unwrap();
            let printed = pretty(&tree);
            let reparsed = parse_amp(&printed).unwrap();
            assert_eq!(tree, reparsed, "round trip changed {src:?} -> {printed:?}");
        }
    }

    #[test]
    fn format_complex_round_trips_exactly() {
        // Bit-identical round trip, except that negating a complex value
        // with a zero component flips that zero's sign; IEEE equality
        // still distinguishes every nonzero value exactly.
        fn same(a: f64, b: f64) -> bool {
            a.to_bits() == b.to_bits() || (a == 0.0 && b == 0.0)
        }
        for z in [
            Complex64::new(0.0, 0.0),
            Complex64::new(1.0, 0.0),
            Complex64::new(-0.1, 0.0),
            Complex64::new(0.0, -0.25),
            Complex64::new(0.7071067811865475, -0.35355339059327373),
            Complex64::new(1.0 / 3.0, 2.0 / 3.0),
        ] {
            let s = format_complex(z);
            let v = eval(&parse_amp(&s).unwrap()).unwrap();
            assert!(same(v.re, z.re), "re of {s}: {} vs {}", v.re, z.re);
            assert!(same(v.im, z.im), "im of {s}: {} vs {}", v.im, z.im);
        }
    }

    fn arb_expr() -> impl Strategy<Value = AmpExpr> {
        let leaf = prop_oneof![
            (0.0f64..1000.0).prop_map(AmpExpr::Number),
            Just(AmpExpr::ImagUnit),
        ];
        leaf.prop_recursive(5, 32, 2, |inner| {
            prop_oneof![
                inner.clone().prop_map(|e| AmpExpr::Neg(Box::new(e))),
                inner.clone().prop_map(|e| AmpExpr::Sqrt(Box::new(e))),
                (inner.clone(), inner.clone())
                    .prop_map(|(a, b)| AmpExpr::Add(Box::new(a), Box::new(b))),
                (inner.clone(), inner.clone())
                    .prop_map(|(a, b)| AmpExpr::Sub(Box::new(a), Box::new(b))),
                (inner.clone(), inner.clone())
                    .prop_map(|(a, b)| AmpExpr::Mul(Box::new(a), Box::new(b))),
                (inner.clone(), inner).prop_map(|(a, b)| AmpExpr::Div(Box::new(a), Box::new(b))),
            ]
        })
    }

    proptest! {
        #[test]
        fn pretty_print_reparses_to_identical_tree(tree in arb_expr()) {
            let printed = pretty(&tree);
            let reparsed = parse_amp(&printed).unwrap();
            prop_assert_eq!(&tree, &reparsed);
            // Identical trees evaluate identically, bit for bit.
            match (eval(&tree), eval(&reparsed)) {
                (Ok(a), Ok(b)) => {
                    prop_assert_eq!(a.re.to_bits(), b.re.to_bits());
                    prop_assert_eq!(a.im.to_bits(), b.im.to_bits());
                }
                (Err(a), Err(b)) => prop_assert_eq!(a, b),
                (a, b) => prop_assert!(false, "diverged: {:?} vs {:?}", a, b),
            }
        }

        #[test]
        fn parser_never_panics_on_ascii_soup(src in "[ -~]{0,40}") {
            let _ = parse_amp(&src).map(|t| eval(&t));
        }
    }
}

//! Field expressions: a small grammar whose every parse lowers to a finite
//! trigonometric polynomial.
//!
//! ```text
//! expr    = term { ("+" | "-") term } ;
//! term    = unary { ("*" | "/") unary } ;
//! unary   = "-" unary | "+" unary | power ;
//! power   = atom [ "^" integer ] ;
//! atom    = number | "pi" | "t" | ("sin" | "cos") "(" expr ")" | "(" expr ")" ;
//! number  = digits [ "." digits ] [ ("e" | "E") [ "+" | "-" ] digits ] ;
//! ```
//!
//! The circle coordinate `t` may only appear inside `sin`/`cos`, and only as
//! `k*t + c` with an integer `k`, `|k| <= 64`. Anything else is rejected as
//! non-periodic.

use std::fmt::Write as _;

use thiserror::Error;

use crate::trig::{PeriodicFunction, TrigPoly};

/// Largest harmonic accepted inside `sin`/`cos`.
pub const MAX_HARMONIC: i64 = 64;
/// Largest degree of any intermediate polynomial.
pub const MAX_DEGREE: usize = 1024;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParseError {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("expression is not 2π-periodic at byte {offset}: {message}")]
    NonPeriodic { offset: usize, message: String },
    #[error("harmonic {k} at byte {offset} exceeds the limit {MAX_HARMONIC}")]
    HarmonicOutOfRange { offset: usize, k: i64 },
    #[error("degree {degree} at byte {offset} exceeds the limit {MAX_DEGREE}")]
    DegreeTooLarge { offset: usize, degree: usize },
}

impl ParseError {
    pub fn offset(&self) -> usize {
        match self {
            ParseError::Syntax { offset, .. }
            | ParseError::NonPeriodic { offset, .. }
            | ParseError::HarmonicOutOfRange { offset, .. }
            | ParseError::DegreeTooLarge { offset, .. } => *offset,
        }
    }
}

/// Abstract syntax tree of a field expression.
#[derive(Debug, Clone, PartialEq)]
pub enum FieldExpr {
    Num(f64),
    T,
    Neg(Box<Spanned>),
    Add(Box<Spanned>, Box<Spanned>),
    Sub(Box<Spanned>, Box<Spanned>),
    Mul(Box<Spanned>, Box<Spanned>),
    /// Division by a constant.
    Div(Box<Spanned>, Box<Spanned>),
    Pow(Box<Spanned>, u32),
    Sin(Box<Spanned>),
    Cos(Box<Spanned>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Spanned {
    pub expr: FieldExpr,
    pub offset: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Tok {
    Num(f64),
    Ident(Ident),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    End,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Ident {
    T,
    Pi,
    Sin,
    Cos,
}

fn tokenize(src: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        let tok = match c {
            b'+' => Tok::Plus,
            b'-' => Tok::Minus,
            b'*' => Tok::Star,
            b'/' => Tok::Slash,
            b'^' => Tok::Caret,
            b'(' => Tok::LParen,
            b')' => Tok::RParen,
            b'0'..=b'9' | b'.' => {
                while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                    i += 1;
                }
                if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                    let mut j = i + 1;
                    if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                        j += 1;
                    }
                    if j < bytes.len() && bytes[j].is_ascii_digit() {
                        while j < bytes.len() && bytes[j].is_ascii_digit() {
                            j += 1;
                        }
                        i = j;
                    }
                }
                let text = &src[start..i];
                let v: f64 = text.parse().map_err(|_| ParseError::Syntax {
                    offset: start,
                    message: format!("malformed number `{text}`"),
                })?;
                out.push((Tok::Num(v), start));
                continue;
            }
            c if c.is_ascii_alphabetic() => {
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                let ident = match &src[start..i] {
                    "t" => Ident::T,
                    "pi" => Ident::Pi,
                    "sin" => Ident::Sin,
                    "cos" => Ident::Cos,
                    other => {
                        return Err(ParseError::Syntax {
                            offset: start,
                            message: format!("unknown identifier `{other}`"),
                        })
                    }
                };
                out.push((Tok::Ident(ident), start));
                continue;
            }
            _ => {
                // report the full (possibly multi-byte) character
                let ch = src[start..].chars().next().unwrap_or('?');
                return Err(ParseError::Syntax {
                    offset: start,
                    message: format!("unexpected character `{ch}`"),
                });
            }
        };
        out.push((tok, start));
        i += 1;
    }
    out.push((Tok::End, src.len()));
    Ok(out)
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Tok {
        self.toks[self.pos].0
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> (Tok, usize) {
        let t = self.toks[self.pos];
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn syntax<T>(&self, message: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError::Syntax {
            offset: self.offset(),
            message: message.into(),
        })
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<(), ParseError> {
        if self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            self.syntax(format!("expected {what}"))
        }
    }

    fn expr(&mut self) -> Result<Spanned, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let (op, offset) = match self.peek() {
                Tok::Plus | Tok::Minus => self.bump(),
                _ => return Ok(lhs),
            };
            let rhs = self.term()?;
            let (l, r) = (Box::new(lhs), Box::new(rhs));
            let expr = if op == Tok::Plus {
                FieldExpr::Add(l, r)
            } else {
                FieldExpr::Sub(l, r)
            };
            lhs = Spanned { expr, offset };
        }
    }

    fn term(&mut self) -> Result<Spanned, ParseError> {
        let mut lhs = self.unary()?;
        while matches!(self.peek(), Tok::Star | Tok::Slash) {
            let (tok, offset) = self.bump();
            let rhs = Box::new(self.unary()?);
            let lhs_box = Box::new(lhs);
            lhs = Spanned {
                expr: if tok == Tok::Star {
                    FieldExpr::Mul(lhs_box, rhs)
                } else {
                    FieldExpr::Div(lhs_box, rhs)
                },
                offset,
            };
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Spanned, ParseError> {
        match self.peek() {
            Tok::Minus => {
                let (_, offset) = self.bump();
                let inner = self.unary()?;
                Ok(Spanned {
                    expr: FieldExpr::Neg(Box::new(inner)),
                    offset,
                })
            }
            Tok::Plus => {
                self.bump();
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Spanned, ParseError> {
        let base = self.atom()?;
        if self.peek() != Tok::Caret {
            return Ok(base);
        }
        let (_, offset) = self.bump();
        match self.bump() {
            (Tok::Num(v), at) => {
                if v.fract() != 0.0 || !(0.0..=f64::from(u16::MAX)).contains(&v) {
                    return Err(ParseError::Syntax {
                        offset: at,
                        message: "exponent must be a non-negative integer".into(),
                    });
                }
                Ok(Spanned {
                    expr: FieldExpr::Pow(Box::new(base), v as u32),
                    offset,
                })
            }
            (_, at) => Err(ParseError::Syntax {
                offset: at,
                message: "expected integer exponent".into(),
            }),
        }
    }

    fn atom(&mut self) -> Result<Spanned, ParseError> {
        let offset = self.offset();
        let expr = match self.bump().0 {
            Tok::Num(v) => FieldExpr::Num(v),
            Tok::Ident(Ident::Pi) => FieldExpr::Num(std::f64::consts::PI),
            Tok::Ident(Ident::T) => FieldExpr::T,
            Tok::Ident(f @ (Ident::Sin | Ident::Cos)) => {
                self.expect(Tok::LParen, "`(` after function name")?;
                let arg = Box::new(self.expr()?);
                self.expect(Tok::RParen, "`)`")?;
                if f == Ident::Sin {
                    FieldExpr::Sin(arg)
                } else {
                    FieldExpr::Cos(arg)
                }
            }
            Tok::LParen => {
                let inner = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                return Ok(inner);
            }
            Tok::End => {
                return Err(ParseError::Syntax {
                    offset,
                    message: "unexpected end of input".into(),
                })
            }
            _ => {
                return Err(ParseError::Syntax {
                    offset,
                    message: "expected a number, `t`, `pi`, a function or `(`".into(),
                })
            }
        };
        Ok(Spanned { expr, offset })
    }
}

/// Parse text into its syntax tree.
pub fn parse_expr(text: &str) -> Result<Spanned, ParseError> {
    let mut p = Parser {
        toks: tokenize(text)?,
        pos: 0,
    };
    let e = p.expr()?;
    if p.peek() != Tok::End {
        return p.syntax("unexpected trailing input");
    }
    Ok(e)
}

/// Intermediate lowering value: a trig polynomial or an affine function of t.
enum Lowered {
    Poly(TrigPoly),
    Affine { slope: f64, intercept: f64 },
}

impl Lowered {
    fn into_poly(self, offset: usize) -> Result<TrigPoly, ParseError> {
        match self {
            Lowered::Poly(p) => Ok(p),
            Lowered::Affine { slope, intercept } if slope == 0.0 => {
                Ok(TrigPoly::constant(intercept))
            }
            Lowered::Affine { .. } => Err(ParseError::NonPeriodic {
                offset,
                message: "`t` may only appear inside sin(...) or cos(...)".into(),
            }),
        }
    }

    fn constant(&self) -> Option<f64> {
        match self {
            Lowered::Poly(p) if p.degree() == 0 => Some(p.a0()),
            Lowered::Affine { slope, intercept } if *slope == 0.0 => Some(*intercept),
            _ => None,
        }
    }
}

fn check_degree(p: TrigPoly, offset: usize) -> Result<TrigPoly, ParseError> {
    if p.degree() > MAX_DEGREE {
        Err(ParseError::DegreeTooLarge {
            offset,
            degree: p.degree(),
        })
    } else {
        Ok(p)
    }
}

fn lower(e: &Spanned) -> Result<Lowered, ParseError> {
    use FieldExpr::*;
    let at = e.offset;
    Ok(match &e.expr {
        Num(v) => Lowered::Poly(TrigPoly::constant(*v)),
        T => Lowered::Affine {
            slope: 1.0,
            intercept: 0.0,
        },
        Neg(x) => match lower(x)? {
            Lowered::Poly(p) => Lowered::Poly(p.scale(-1.0)),
            Lowered::Affine { slope, intercept } => Lowered::Affine {
                slope: -slope,
                intercept: -intercept,
            },
        },
        Add(a, b) | Sub(a, b) => {
            let sign = if matches!(e.expr, Add(..)) { 1.0 } else { -1.0 };
            match (lower(a)?, lower(b)?) {
                (
                    Lowered::Affine {
                        slope: s1,
                        intercept: c1,
                    },
                    Lowered::Affine {
                        slope: s2,
                        intercept: c2,
                    },
                ) => Lowered::Affine {
                    slope: s1 + sign * s2,
                    intercept: c1 + sign * c2,
                },
                (x, y) => match (x.constant(), y.constant(), &x, &y) {
                    (_, Some(c), Lowered::Affine { slope, intercept }, _) => Lowered::Affine {
                        slope: *slope,
                        intercept: intercept + sign * c,
                    },
                    (Some(c), _, _, Lowered::Affine { slope, intercept }) => Lowered::Affine {
                        slope: sign * slope,
                        intercept: c + sign * intercept,
                    },
                    _ => {
                        let p = x.into_poly(a.offset)?;
                        let q = y.into_poly(b.offset)?;
                        Lowered::Poly(TrigPoly::lincomb(1.0, &p, sign, &q))
                    }
                },
            }
        }
        Mul(a, b) => {
            let (x, y) = (lower(a)?, lower(b)?);
            match (x.constant(), y.constant(), x, y) {
                (Some(c), _, _, Lowered::Affine { slope, intercept })
                | (_, Some(c), Lowered::Affine { slope, intercept }, _) => Lowered::Affine {
                    slope: c * slope,
                    intercept: c * intercept,
                },
                (_, _, x, y) => {
                    let p = x.into_poly(a.offset)?;
                    let q = y.into_poly(b.offset)?;
                    if p.degree() + q.degree() > MAX_DEGREE {
                        return Err(ParseError::DegreeTooLarge {
                            offset: at,
                            degree: p.degree() + q.degree(),
                        });
                    }
                    Lowered::Poly(TrigPoly::multiply(&p, &q))
                }
            }
        }
        Div(a, b) => {
            let c = match lower(b)?.constant() {
                Some(c) if c != 0.0 => c,
                Some(_) => {
                    return Err(ParseError::Syntax {
                        offset: at,
                        message: "division by zero".into(),
                    })
                }
                None => {
                    return Err(ParseError::NonPeriodic {
                        offset: b.offset,
                        message: "divisor must be a constant".into(),
                    })
                }
            };
            match lower(a)? {
                Lowered::Affine { slope, intercept } => Lowered::Affine {
                    slope: slope / c,
                    intercept: intercept / c,
                },
                Lowered::Poly(p) => Lowered::Poly(p.scale(1.0 / c)),
            }
        }
        Pow(base, k) => {
            let p = lower(base)?.into_poly(base.offset)?;
            if p.degree() * (*k as usize) > MAX_DEGREE {
                return Err(ParseError::DegreeTooLarge {
                    offset: at,
                    degree: p.degree() * (*k as usize),
                });
            }
            let mut acc = TrigPoly::constant(1.0);
            for _ in 0..*k {
                acc = TrigPoly::multiply(&acc, &p);
            }
            Lowered::Poly(check_degree(acc, at)?)
        }
        Sin(arg) | Cos(arg) => {
            let (k, phase) = match lower(arg)? {
                Lowered::Affine { slope, intercept } => (slope, intercept),
                Lowered::Poly(p) if p.degree() == 0 => (0.0, p.a0()),
                Lowered::Poly(_) => {
                    return Err(ParseError::NonPeriodic {
                        offset: arg.offset,
                        message: "argument of sin/cos must be of the form k*t + c".into(),
                    })
                }
            };
            if k.fract() != 0.0 || !k.is_finite() {
                return Err(ParseError::NonPeriodic {
                    offset: arg.offset,
                    message: format!("multiplier {k} of t is not an integer"),
                });
            }
            let k = k as i64;
            if k.abs() > MAX_HARMONIC {
                return Err(ParseError::HarmonicOutOfRange {
                    offset: arg.offset,
                    k,
                });
            }
            let m = k.unsigned_abs() as usize;
            let sign = if k < 0 { -1.0 } else { 1.0 };
            // sin(kt + c) = sin(kt)cos c + cos(kt) sin c, with sin(-mt) = -sin(mt)
            let (sc, cc) = phase.sin_cos();
            let p = if matches!(e.expr, Sin(_)) {
                TrigPoly::lincomb(
                    sign * cc,
                    &TrigPoly::sin_term(m, 1.0),
                    sc,
                    &TrigPoly::cos_term(m, 1.0),
                )
            } else {
                TrigPoly::lincomb(
                    cc,
                    &TrigPoly::cos_term(m, 1.0),
                    -sign * sc,
                    &TrigPoly::sin_term(m, 1.0),
                )
            };
            Lowered::Poly(p)
        }
    })
}

/// Parse and lower a field expression.
pub fn parse(text: &str) -> Result<PeriodicFunction, ParseError> {
    parse_trig(text).map(Into::into)
}

/// Parse and lower to a single trigonometric polynomial.
pub fn parse_trig(text: &str) -> Result<TrigPoly, ParseError> {
    let ast = parse_expr(text)?;
    lower(&ast)?.into_poly(ast.offset)
}

/// Render a trigonometric polynomial in the grammar accepted by [`parse`].
pub fn format(p: &TrigPoly) -> String {
    let mut terms: Vec<(f64, String)> = Vec::new();
    if p.a0() != 0.0 {
        terms.push((p.a0(), String::new()));
    }
    for m in 1..=p.degree() {
        let arg = if m == 1 { "t".to_string() } else { format!("{m}*t") };
        if p.cos_coeff(m) != 0.0 {
            terms.push((p.cos_coeff(m), format!("cos({arg})")));
        }
        if p.sin_coeff(m) != 0.0 {
            terms.push((p.sin_coeff(m), format!("sin({arg})")));
        }
    }
    if terms.is_empty() {
        return "0".into();
    }
    let mut out = String::new();
    for (i, (c, atom)) in terms.iter().enumerate() {
        let mag = c.abs();
        if i == 0 {
            if *c < 0.0 {
                out.push('-');
            }
        } else {
            out.push_str(if *c < 0.0 { " - " } else { " + " });
        }
        match (atom.is_empty(), mag == 1.0) {
            (true, _) => write!(out, "{mag}").unwrap(),
            (false, true) => out.push_str(atom),
            (false, false) => write!(out, "{mag}*{atom}").unwrap(),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lowering_examples() {
        let p = parse_trig("1 - cos(2*t)").unwrap();
        assert_eq!(p, TrigPoly::new(1.0, vec![0.0, -1.0], vec![0.0, 0.0]).unwrap());
        let p = parse_trig("sin(t)*sin(t)").unwrap();
        assert!((p.a0() - 0.5).abs() < 1e-15 && (p.cos_coeff(2) + 0.5).abs() < 1e-15);
        let p = parse_trig(" sin ( t ) ^ 2 ").unwrap();
        assert!((p.a0() - 0.5).abs() < 1e-15);
        let p = parse_trig("2*pi").unwrap();
        assert_eq!(p.a0(), 2.0 * std::f64::consts::PI);
    }

    #[test]
    fn argument_forms() {
        let a = parse_trig("sin(3*t)").unwrap();
        let b = parse_trig("sin(t*3)").unwrap();
        let c = parse_trig("sin(2*t + t)").unwrap();
        assert_eq!(a, b);
        assert!(TrigPoly::lincomb(1.0, &a, -1.0, &c).is_negligible(1e-15));
        let neg = parse_trig("sin(-2*t)").unwrap();
        assert_eq!(neg.sin_coeff(2), -1.0);
        let shifted = parse_trig("cos(t + 0.5)").unwrap();
        for i in 0..20 {
            let t = i as f64 * 0.3;
            assert!((shifted.eval(t) - (t + 0.5).cos()).abs() < 1e-14);
        }
        assert_eq!(parse_trig("cos(0)").unwrap(), TrigPoly::constant(1.0));
    }

    #[test]
    fn non_periodic_inputs() {
        for src in ["t + sin(t)", "t", "sin(0.5*t)", "t*sin(t)", "sin(sin(t))", "cos(t)^2 * t"] {
            assert!(
                matches!(parse(src), Err(ParseError::NonPeriodic { .. })),
                "{src} should be non-periodic"
            );
        }
        // t - t is a constant
        assert_eq!(parse_trig("t - t + 1").unwrap(), TrigPoly::constant(1.0));
    }

    #[test]
    fn syntax_errors_carry_offsets() {
        let e = parse("1 + ").unwrap_err();
        assert!(matches!(e, ParseError::Syntax { offset: 4, .. }));
        let e = parse("sin(t").unwrap_err();
        assert!(matches!(e, ParseError::Syntax { offset: 5, .. }));
        let e = parse("1 / t").unwrap_err();
        assert!(matches!(e, ParseError::NonPeriodic { offset: 4, .. }));
        assert!(matches!(parse("sin(t) / 0"), Err(ParseError::Syntax { offset: 7, .. })));
        assert_eq!(parse_trig("sin(2*t)/4").unwrap(), TrigPoly::sin_term(2, 0.25));
        assert_eq!(parse_trig("cos(4*t/2)").unwrap(), TrigPoly::cos_term(2, 1.0));
        let e = parse("tan(t)").unwrap_err();
        assert_eq!(e.offset(), 0);
        let e = parse("cos(t) cos(t)").unwrap_err();
        assert!(matches!(e, ParseError::Syntax { offset: 7, .. }));
        assert!(matches!(parse("sin(65*t)"), Err(ParseError::HarmonicOutOfRange { k: 65, .. })));
        assert!(matches!(parse("cos(64*t)^20"), Err(ParseError::DegreeTooLarge { .. })));
        assert!(parse("").is_err());
        assert!(parse("é").is_err());
    }

    #[test]
    fn format_examples() {
        let p = TrigPoly::new(1.0, vec![0.0, -1.0], vec![0.0, 0.0]).unwrap();
        assert_eq!(format(&p), "1 - cos(2*t)");
        assert_eq!(format(&TrigPoly::zero()), "0");
        assert_eq!(format(&TrigPoly::sin_term(1, 0.5)), "0.5*sin(t)");
        assert_eq!(format(&TrigPoly::cos_term(3, -2.0)), "-2*cos(3*t)");
        for p in [p, TrigPoly::sin_term(1, 0.5), TrigPoly::new(-1e-300, vec![1e300], vec![-3.25]).unwrap()] {
            assert_eq!(parse_trig(&format(&p)).unwrap(), p);
        }
    }
}

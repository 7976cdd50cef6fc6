//! Numeric literals of the config format: decimal numbers combined with `pi`,
//! `+ - * /` and parentheses. A number directly followed by `pi` or `(`
//! multiplies it, so `2pi/3` is accepted.

use std::f64::consts::PI;

pub fn eval(text: &str) -> Result<f64, String> {
    let tokens = tokenize(text)?;
    let mut p = Parser { tokens: &tokens, pos: 0 };
    let v = p.expr()?;
    if p.pos != tokens.len() {
        return Err(format!("unexpected trailing input in `{text}`"));
    }
    if !v.is_finite() {
        return Err(format!("`{text}` is not a finite number"));
    }
    Ok(v)
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Tok {
    Num(f64),
    Pi,
    Op(char),
    Open,
    Close,
}

fn tokenize(s: &str) -> Result<Vec<Tok>, String> {
    let mut out = Vec::new();
    let b = s.as_bytes();
    let mut i = 0;
    while i < b.len() {
        let c = b[i] as char;
        match c {
            ' ' | '\t' => i += 1,
            '+' | '-' | '*' | '/' => {
                out.push(Tok::Op(c));
                i += 1;
            }
            '(' => {
                out.push(Tok::Open);
                i += 1;
            }
            ')' => {
                out.push(Tok::Close);
                i += 1;
            }
            '0'..='9' | '.' => {
                let start = i;
                while i < b.len() && (b[i].is_ascii_digit() || b[i] == b'.') {
                    i += 1;
                }
                // Exponent part, only when digits follow.
                if i < b.len() && (b[i] == b'e' || b[i] == b'E') {
                    let mut j = i + 1;
                    if j < b.len() && (b[j] == b'+' || b[j] == b'-') {
                        j += 1;
                    }
                    if j < b.len() && b[j].is_ascii_digit() {
                        i = j;
                        while i < b.len() && b[i].is_ascii_digit() {
                            i += 1;
                        }
                    }
                }
                let lit = &s[start..i];
                out.push(Tok::Num(lit.parse().map_err(|_| format!("bad number `{lit}`"))?));
            }
            _ if s[i..].starts_with("pi") => {
                out.push(Tok::Pi);
                i += 2;
            }
            _ => return Err(format!("unexpected character `{c}` in `{s}`")),
        }
    }
    Ok(out)
}

struct Parser<'a> {
    tokens: &'a [Tok],
    pos: usize,
}

impl Parser<'_> {
    fn peek(&self) -> Option<Tok> {
        self.tokens.get(self.pos).copied()
    }

    fn expr(&mut self) -> Result<f64, String> {
        let mut v = self.term()?;
        while let Some(Tok::Op(op @ ('+' | '-'))) = self.peek() {
            self.pos += 1;
            let rhs = self.term()?;
            v = if op == '+' { v + rhs } else { v - rhs };
        }
        Ok(v)
    }

    fn term(&mut self) -> Result<f64, String> {
        let mut v = self.unary()?;
        loop {
            match self.peek() {
                Some(Tok::Op(op @ ('*' | '/'))) => {
                    self.pos += 1;
                    let rhs = self.unary()?;
                    v = if op == '*' { v * rhs } else { v / rhs };
                }
                Some(Tok::Pi | Tok::Open) => v *= self.unary()?,
                _ => return Ok(v),
            }
        }
    }

    fn unary(&mut self) -> Result<f64, String> {
        match self.peek() {
            Some(Tok::Op('-')) => {
                self.pos += 1;
                Ok(-self.unary()?)
            }
            Some(Tok::Op('+')) => {
                self.pos += 1;
                self.unary()
            }
            _ => self.atom(),
        }
    }

    fn atom(&mut self) -> Result<f64, String> {
        let t = self.peek().ok_or("expression ends too early")?;
        self.pos += 1;
        match t {
            Tok::Num(v) => Ok(v),
            Tok::Pi => Ok(PI),
            Tok::Open => {
                let v = self.expr()?;
                if self.peek() != Some(Tok::Close) {
                    return Err("missing `)`".into());
                }
                self.pos += 1;
                Ok(v)
            }
            _ => Err(format!("unexpected token {t:?}")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn literals() {
        assert_eq!(eval("42/128").unwrap(), 42.0 / 128.0);
        assert_eq!(eval("2pi").unwrap(), 2.0 * PI);
        assert_eq!(eval("4pi/3").unwrap(), 4.0 * PI / 3.0);
        assert_eq!(eval("-1.5e-3").unwrap(), -1.5e-3);
        assert_eq!(eval("2*(1+3)").unwrap(), 8.0);
        assert_eq!(eval("1e5").unwrap(), 1e5);
        assert_eq!(eval("0.1").unwrap(), 0.1);
        assert!(eval("2 pix").is_err());
        assert!(eval("1/0").is_err());
        assert!(eval("(1").is_err());
    }
}

//! Text grammar for body expressions:
//!
//! ```text
//! body := lp(n=INT, p=REAL|inf) | schatten(m=INT, p=REAL) | ellipsoid(diag=[REAL,...])
//!       | revolution(n=INT) | linimg(matrix=FILE.csv, body) | section(basis=FILE.csv, body)
//!       | project(basis=FILE.csv, body) | fsum(body, ...) | fint(body, ...) | polar(body)
//!       | scale(REAL, body)
//! ```
//!
//! Keywords are case-insensitive. Relative file names resolve against a base directory.

use std::path::{Path, PathBuf};

use super::{BodyExpr, LinearMapRec, SubspaceRec};
use crate::csvio::read_matrix_csv;
use crate::error::{Error, Result};

pub fn parse_body(src: &str) -> Result<BodyExpr> {
    parse_body_in(src, Path::new("."))
}

pub fn parse_body_in(src: &str, base: &Path) -> Result<BodyExpr> {
    let mut p = Parser { s: src.as_bytes(), pos: 0, base: base.to_path_buf() };
    let body = p.body()?;
    p.ws();
    if p.pos != p.s.len() {
        return Err(p.err("trailing input"));
    }
    Ok(body)
}

struct Parser<'a> {
    s: &'a [u8],
    pos: usize,
    base: PathBuf,
}

impl Parser<'_> {
    fn err(&self, msg: &str) -> Error {
        let rest = String::from_utf8_lossy(&self.s[self.pos.min(self.s.len())..]);
        Error::Parse(format!("{msg} at offset {} (near {:?})", self.pos, rest.chars().take(20).collect::<String>()))
    }

    fn ws(&mut self) {
        while self.pos < self.s.len() && self.s[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.ws();
        self.s.get(self.pos).copied()
    }

    fn expect(&mut self, c: u8) -> Result<()> {
        if self.peek() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.err(&format!("expected '{}'", c as char)))
        }
    }

    fn ident(&mut self) -> Result<String> {
        self.ws();
        let start = self.pos;
        while self.pos < self.s.len() && (self.s[self.pos].is_ascii_alphanumeric() || self.s[self.pos] == b'_') {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.err("expected identifier"));
        }
        Ok(String::from_utf8_lossy(&self.s[start..self.pos]).to_ascii_lowercase())
    }

    fn token(&mut self) -> String {
        self.ws();
        let start = self.pos;
        while self.pos < self.s.len() && !matches!(self.s[self.pos], b',' | b')' | b']' | b'(') {
            self.pos += 1;
        }
        String::from_utf8_lossy(&self.s[start..self.pos]).trim().to_string()
    }

    fn real(&mut self) -> Result<f64> {
        let t = self.token();
        match t.to_ascii_lowercase().as_str() {
            "inf" | "infinity" => Ok(f64::INFINITY),
            _ => t.parse::<f64>().map_err(|_| self.err(&format!("bad number {t:?}"))),
        }
    }

    fn int(&mut self) -> Result<usize> {
        let t = self.token();
        t.parse::<usize>().map_err(|_| self.err(&format!("bad integer {t:?}")))
    }

    fn key(&mut self, name: &str) -> Result<()> {
        let k = self.ident()?;
        if k != name {
            return Err(self.err(&format!("expected key '{name}', got '{k}'")));
        }
        self.expect(b'=')
    }

    /// Parse `k1=v1, k2=v2` in any order for the given integer/real keys.
    fn keyed<const N: usize>(&mut self, keys: [&str; N]) -> Result<[f64; N]> {
        let mut out = [f64::NAN; N];
        for i in 0..N {
            if i > 0 {
                self.expect(b',')?;
            }
            let k = self.ident()?;
            self.expect(b'=')?;
            let slot = keys.iter().position(|x| *x == k).ok_or_else(|| self.err(&format!("unexpected key '{k}'")))?;
            if !out[slot].is_nan() {
                return Err(self.err(&format!("duplicate key '{k}'")));
            }
            out[slot] = self.real()?;
        }
        Ok(out)
    }

    fn as_int(&self, v: f64, what: &str) -> Result<usize> {
        if v.fract() != 0.0 || v < 1.0 || !v.is_finite() {
            return Err(self.err(&format!("{what} must be a positive integer")));
        }
        Ok(v as usize)
    }

    fn file(&mut self) -> Result<(nalgebra::DMatrix<f64>, String)> {
        let name = self.token();
        if name.is_empty() {
            return Err(self.err("expected file name"));
        }
        let path = self.base.join(&name);
        Ok((read_matrix_csv(&path)?, name))
    }

    fn list(&mut self) -> Result<Vec<BodyExpr>> {
        let mut out = vec![self.body()?];
        while self.peek() == Some(b',') {
            self.pos += 1;
            out.push(self.body()?);
        }
        Ok(out)
    }

    fn body(&mut self) -> Result<BodyExpr> {
        let name = self.ident()?;
        self.expect(b'(')?;
        let b = match name.as_str() {
            "lp" => {
                let [n, p] = self.keyed(["n", "p"])?;
                BodyExpr::lp(self.as_int(n, "n")?, p)?
            }
            "schatten" => {
                let [m, p] = self.keyed(["m", "p"])?;
                BodyExpr::schatten(self.as_int(m, "m")?, p)?
            }
            "revolution" => {
                self.key("n")?;
                let n = self.int()?;
                BodyExpr::revolution(n)?
            }
            "ellipsoid" => match self.ident()?.as_str() {
                "diag" => {
                    self.expect(b'=')?;
                    self.expect(b'[')?;
                    let mut d = vec![self.real()?];
                    while self.peek() == Some(b',') {
                        self.pos += 1;
                        d.push(self.real()?);
                    }
                    self.expect(b']')?;
                    BodyExpr::ellipsoid_diag(&d)?
                }
                "matrix" => {
                    self.expect(b'=')?;
                    let (m, label) = self.file()?;
                    BodyExpr::ellipsoid(m)?.with_label(label)
                }
                k => return Err(self.err(&format!("unexpected key '{k}'"))),
            },
            "linimg" => {
                self.key("matrix")?;
                let (m, label) = self.file()?;
                self.expect(b',')?;
                let child = self.body()?;
                BodyExpr::linear_image(LinearMapRec::new(m)?, child)?.with_label(label)
            }
            "section" | "project" => {
                self.key("basis")?;
                let (m, label) = self.file()?;
                self.expect(b',')?;
                let child = self.body()?;
                let space = SubspaceRec::new(m)?;
                let b = if name == "section" {
                    BodyExpr::section(space, child)?
                } else {
                    BodyExpr::projection(space, child)?
                };
                b.with_label(label)
            }
            "fsum" => BodyExpr::firey_sum(self.list()?)?,
            "fint" => BodyExpr::firey_intersection(self.list()?)?,
            "polar" => BodyExpr::polar(self.body()?),
            "scale" => {
                let l = self.real()?;
                self.expect(b',')?;
                BodyExpr::scale(l, self.body()?)?
            }
            other => return Err(self.err(&format!("unknown body '{other}'"))),
        };
        self.expect(b')')?;
        Ok(b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_leaves_case_insensitively() {
        let b = parse_body("LP(N=4, P=INF)").unwrap();
        assert_eq!(b.descriptor(), "lp(n=4, p=inf)");
        let b = parse_body("lp(p=1.5, n=3)").unwrap();
        assert_eq!(b.descriptor(), "lp(n=3, p=1.5)");
        assert_eq!(parse_body(" schatten( m=3 , p=1.5 ) ").unwrap().dim(), 9);
        assert_eq!(parse_body("revolution(n=5)").unwrap().dim(), 5);
    }

    #[test]
    fn parses_files() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("t.csv"), "2,0\n0,1\n").unwrap();
        std::fs::write(dir.path().join("e.csv"), "1,0\n0,1\n0,0\n").unwrap();
        let b = parse_body_in("polar(linimg(matrix=t.csv, lp(n=2,p=2)))", dir.path()).unwrap();
        assert!((b.dual_norm(&[2.0, 0.0]).unwrap() - 1.0).abs() < 1e-15);
        let s = parse_body_in("section(basis=e.csv, lp(n=3, p=1))", dir.path()).unwrap();
        assert_eq!(s.dim(), 2);
        assert_eq!(s.descriptor(), "section(basis=e.csv, lp(n=3, p=1))");
    }

    #[test]
    fn rejects_garbage() {
        for bad in ["lp(n=3)", "lp(n=3, p=0.5)", "foo(n=1)", "lp(n=3, p=2) x", "fsum()", "lp(n=2.5, p=2)", "scale(-1, lp(n=2,p=2))"] {
            assert!(parse_body(bad).is_err(), "{bad}");
        }
    }
}

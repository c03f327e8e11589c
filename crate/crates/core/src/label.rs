//! Element labels.
//!
//! Every element of a finite set carries an opaque, hashable label. Canonical
//! sets use the naturals `0..n-1`; constructions produce structured labels
//! (pairs for pullback points, tuples for sections and lists) so that a value
//! records how it was built. The textual form is stable and is what appears
//! in JSON tables and failure witnesses.

use std::fmt;
use std::sync::Arc;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    Nat(u64),
    Name(Arc<str>),
    Pair(Arc<(Label, Label)>),
    Tuple(Arc<[Label]>),
}

impl Label {
    pub fn nat(n: u64) -> Self {
        Label::Nat(n)
    }

    pub fn name(s: impl AsRef<str>) -> Self {
        Label::Name(Arc::from(s.as_ref()))
    }

    pub fn pair(a: Label, b: Label) -> Self {
        Label::Pair(Arc::new((a, b)))
    }

    pub fn tuple(items: impl IntoIterator<Item = Label>) -> Self {
        Label::Tuple(items.into_iter().collect())
    }

    pub fn as_nat(&self) -> Option<u64> {
        match self {
            Label::Nat(n) => Some(*n),
            _ => None,
        }
    }

    pub fn as_pair(&self) -> Option<(&Label, &Label)> {
        match self {
            Label::Pair(p) => Some((&p.0, &p.1)),
            _ => None,
        }
    }

    pub fn as_tuple(&self) -> Option<&[Label]> {
        match self {
            Label::Tuple(t) => Some(t),
            _ => None,
        }
    }

    /// Parse the canonical textual form produced by `Display`.
    pub fn parse(text: &str) -> Result<Label> {
        let mut p = LabelParser {
            src: text.as_bytes(),
            pos: 0,
        };
        p.skip_ws();
        let label = p.label()?;
        p.skip_ws();
        if p.pos != p.src.len() {
            return Err(Error::Invalid(format!(
                "trailing input in label at byte {}: {text:?}",
                p.pos
            )));
        }
        Ok(label)
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::Nat(n) => write!(f, "{n}"),
            Label::Name(s) => write!(f, "{s}"),
            Label::Pair(p) => write!(f, "({},{})", p.0, p.1),
            Label::Tuple(t) => {
                write!(f, "[")?;
                for (i, x) in t.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{x}")?;
                }
                write!(f, "]")
            }
        }
    }
}

impl fmt::Debug for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

struct LabelParser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl LabelParser<'_> {
    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn expect(&mut self, b: u8) -> Result<()> {
        if self.peek() == Some(b) {
            self.pos += 1;
            Ok(())
        } else {
            Err(Error::Invalid(format!(
                "expected {:?} at byte {} of label",
                b as char, self.pos
            )))
        }
    }

    fn label(&mut self) -> Result<Label> {
        self.skip_ws();
        match self.peek() {
            Some(b'(') => {
                self.expect(b'(')?;
                let a = self.label()?;
                self.skip_ws();
                self.expect(b',')?;
                let b = self.label()?;
                self.skip_ws();
                self.expect(b')')?;
                Ok(Label::pair(a, b))
            }
            Some(b'[') => {
                self.expect(b'[')?;
                let mut items = Vec::new();
                self.skip_ws();
                if self.peek() == Some(b']') {
                    self.pos += 1;
                    return Ok(Label::tuple(items));
                }
                loop {
                    items.push(self.label()?);
                    self.skip_ws();
                    match self.peek() {
                        Some(b',') => self.pos += 1,
                        Some(b']') => {
                            self.pos += 1;
                            return Ok(Label::tuple(items));
                        }
                        _ => {
                            return Err(Error::Invalid(format!(
                                "expected ',' or ']' at byte {} of label",
                                self.pos
                            )))
                        }
                    }
                }
            }
            Some(c) if c.is_ascii_digit() => {
                let start = self.pos;
                while matches!(self.peek(), Some(d) if d.is_ascii_digit()) {
                    self.pos += 1;
                }
                let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
                let n = text
                    .parse::<u64>()
                    .map_err(|e| Error::Invalid(format!("bad numeral {text:?}: {e}")))?;
                Ok(Label::Nat(n))
            }
            Some(_) => {
                let start = self.pos;
                while let Some(c) = self.peek() {
                    if matches!(c, b'(' | b')' | b'[' | b']' | b',') || c.is_ascii_whitespace() {
                        break;
                    }
                    self.pos += 1;
                }
                if self.pos == start {
                    return Err(Error::Invalid("empty name in label".into()));
                }
                let text = std::str::from_utf8(&self.src[start..self.pos])
                    .map_err(|e| Error::Invalid(format!("label not utf-8: {e}")))?;
                Ok(Label::name(text))
            }
            None => Err(Error::Invalid("empty label".into())),
        }
    }
}

// Labels serialize as their canonical text, except bare naturals which stay
// JSON numbers so canonical sets read as {"elements":[0,1,2]}.
impl Serialize for Label {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Label::Nat(n) => serializer.serialize_u64(*n),
            other => serializer.serialize_str(&other.to_string()),
        }
    }
}

impl<'de> Deserialize<'de> for Label {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(u64),
            Text(String),
        }
        match Raw::deserialize(deserializer)? {
            Raw::Num(n) => Ok(Label::Nat(n)),
            Raw::Text(s) => Label::parse(&s).map_err(D::Error::custom),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn display_round_trip() {
        let labels = [
            Label::nat(7),
            Label::name("id_0"),
            Label::pair(Label::nat(1), Label::nat(0)),
            Label::tuple([]),
            Label::tuple([Label::nat(2), Label::pair(Label::nat(0), Label::name("x"))]),
            Label::pair(
                Label::pair(Label::nat(3), Label::tuple([Label::nat(1)])),
                Label::nat(0),
            ),
        ];
        for l in labels {
            let text = l.to_string();
            assert_eq!(Label::parse(&text).unwrap(), l, "round trip of {text}");
        }
    }

    #[test]
    fn parse_rejects_trailing() {
        assert!(Label::parse("(1,2) x").is_err());
        assert!(Label::parse("").is_err());
        assert!(Label::parse("[1,").is_err());
    }
}

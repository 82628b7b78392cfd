use std::collections::HashMap;

use num_bigint::BigUint;
use thiserror::Error;

use super::validate::{validate, Diagnostic};
use super::{Attrs, BitWidth, Design, OpKind, Operation, ValueId};

#[derive(Debug, Error, PartialEq)]
pub enum ParseError {
    #[error("{line}:{column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid design: {}", join(.0))]
    Invalid(Vec<Diagnostic>),
}

fn join(diags: &[Diagnostic]) -> String {
    diags
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Value(String),
    Int(BigUint),
    Eq,
    Colon,
    Comma,
    LBracket,
    RBracket,
    LBrace,
    RBrace,
    PlusColon,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Value(s) => format!("`%{s}`"),
            Tok::Int(v) => format!("`{v}`"),
            Tok::Eq => "`=`".into(),
            Tok::Colon => "`:`".into(),
            Tok::Comma => "`,`".into(),
            Tok::LBracket => "`[`".into(),
            Tok::RBracket => "`]`".into(),
            Tok::LBrace => "`{`".into(),
            Tok::RBrace => "`}`".into(),
            Tok::PlusColon => "`+:`".into(),
        }
    }
}

#[derive(Clone, Debug)]
struct Spanned {
    tok: Tok,
    line: usize,
    column: usize,
}

fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || matches!(c, '_' | '.' | '$')
}

fn lex(text: &str) -> Result<Vec<Spanned>, ParseError> {
    let mut toks = Vec::new();
    for (line_no, line) in text.lines().enumerate() {
        let line = match line.find("//") {
            Some(i) => &line[..i],
            None => line,
        };
        let chars: Vec<(usize, char)> = line.char_indices().collect();
        let mut i = 0;
        while i < chars.len() {
            let (start, c) = chars[i];
            let column = line[..start].chars().count() + 1;
            let at = |tok| Spanned {
                tok,
                line: line_no + 1,
                column,
            };
            let take_word = |mut j: usize| {
                while j < chars.len() && is_ident_char(chars[j].1) {
                    j += 1;
                }
                j
            };
            match c {
                c if c.is_whitespace() => i += 1,
                '=' => {
                    toks.push(at(Tok::Eq));
                    i += 1;
                }
                ':' => {
                    toks.push(at(Tok::Colon));
                    i += 1;
                }
                ',' => {
                    toks.push(at(Tok::Comma));
                    i += 1;
                }
                '[' => {
                    toks.push(at(Tok::LBracket));
                    i += 1;
                }
                ']' => {
                    toks.push(at(Tok::RBracket));
                    i += 1;
                }
                '{' => {
                    toks.push(at(Tok::LBrace));
                    i += 1;
                }
                '}' => {
                    toks.push(at(Tok::RBrace));
                    i += 1;
                }
                '+' if chars.get(i + 1).map(|p| p.1) == Some(':') => {
                    toks.push(at(Tok::PlusColon));
                    i += 2;
                }
                '%' => {
                    let end = take_word(i + 1);
                    if end == i + 1 {
                        return Err(syntax(
                            line_no + 1,
                            column,
                            "expected a value name after `%`",
                        ));
                    }
                    let name: String = chars[i + 1..end].iter().map(|p| p.1).collect();
                    toks.push(at(Tok::Value(name)));
                    i = end;
                }
                c if c.is_ascii_digit() => {
                    let mut end = i;
                    while end < chars.len() && chars[end].1.is_ascii_digit() {
                        end += 1;
                    }
                    let digits: String = chars[i..end].iter().map(|p| p.1).collect();
                    let value = digits.parse::<BigUint>().expect("ascii digits");
                    toks.push(at(Tok::Int(value)));
                    i = end;
                }
                c if c.is_ascii_alphabetic() || c == '_' => {
                    let end = take_word(i);
                    let word: String = chars[i..end].iter().map(|p| p.1).collect();
                    toks.push(at(Tok::Ident(word)));
                    i = end;
                }
                other => {
                    return Err(syntax(
                        line_no + 1,
                        column,
                        &format!("unexpected character `{other}`"),
                    ));
                }
            }
        }
    }
    Ok(toks)
}

fn syntax(line: usize, column: usize, message: &str) -> ParseError {
    ParseError::Syntax {
        line,
        column,
        message: message.to_owned(),
    }
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
    end: (usize, usize),
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|s| &s.tok)
    }

    fn error_here(&self, message: &str) -> ParseError {
        match self.toks.get(self.pos) {
            Some(s) => syntax(s.line, s.column, message),
            None => syntax(self.end.0, self.end.1, message),
        }
    }

    fn unexpected(&self, wanted: &str) -> ParseError {
        let found = match self.peek() {
            Some(t) => t.describe(),
            None => "end of input".into(),
        };
        self.error_here(&format!("expected {wanted}, found {found}"))
    }

    fn expect(&mut self, tok: Tok) -> Result<(), ParseError> {
        if self.peek() == Some(&tok) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.unexpected(&tok.describe()))
        }
    }

    fn keyword(&mut self, word: &str) -> Result<(), ParseError> {
        match self.peek() {
            Some(Tok::Ident(w)) if w == word => {
                self.pos += 1;
                Ok(())
            }
            _ => Err(self.unexpected(&format!("`{word}`"))),
        }
    }

    fn ident(&mut self) -> Result<String, ParseError> {
        match self.peek() {
            Some(Tok::Ident(w)) => {
                let w = w.clone();
                self.pos += 1;
                Ok(w)
            }
            _ => Err(self.unexpected("an identifier")),
        }
    }

    fn value(&mut self) -> Result<ValueId, ParseError> {
        match self.peek() {
            Some(Tok::Value(v)) => {
                let v = ValueId::new(v.clone());
                self.pos += 1;
                Ok(v)
            }
            _ => Err(self.unexpected("a value (`%name`)")),
        }
    }

    fn int(&mut self) -> Result<BigUint, ParseError> {
        match self.peek() {
            Some(Tok::Int(v)) => {
                let v = v.clone();
                self.pos += 1;
                Ok(v)
            }
            _ => Err(self.unexpected("an integer")),
        }
    }

    fn small_int(&mut self) -> Result<u32, ParseError> {
        let at = self.pos;
        let v = self.int()?;
        u32::try_from(&v).map_err(|_| {
            self.pos = at;
            self.error_here("integer out of range")
        })
    }

    fn ty(&mut self) -> Result<BitWidth, ParseError> {
        let at = self.pos;
        let word = self.ident()?;
        let width = word
            .strip_prefix('i')
            .filter(|d| !d.is_empty() && d.bytes().all(|b| b.is_ascii_digit()))
            .and_then(|d| d.parse::<u32>().ok());
        match width.and_then(BitWidth::new) {
            Some(w) => Ok(w),
            None => {
                self.pos = at;
                Err(self.error_here(&format!(
                    "expected a type `i1`..`i{}`, found `{word}`",
                    BitWidth::MAX
                )))
            }
        }
    }

    fn value_list(&mut self, min: usize) -> Result<Vec<ValueId>, ParseError> {
        let mut vs = vec![self.value()?];
        while self.peek() == Some(&Tok::Comma) {
            self.pos += 1;
            vs.push(self.value()?);
        }
        if vs.len() < min {
            return Err(self.unexpected("`,`"));
        }
        Ok(vs)
    }

    fn sink(&mut self) -> Result<(Operation, Vec<BitWidth>), ParseError> {
        self.keyword("sink")?;
        let operands = self.value_list(1)?;
        self.expect(Tok::Colon)?;
        let mut types = vec![self.ty()?];
        while self.peek() == Some(&Tok::Comma) {
            self.pos += 1;
            types.push(self.ty()?);
        }
        if types.len() != operands.len() {
            return Err(self.error_here(&format!(
                "sink has {} operand(s) but {} type(s)",
                operands.len(),
                types.len()
            )));
        }
        Ok((Operation::sink(operands), types))
    }

    fn def(&mut self) -> Result<Operation, ParseError> {
        let result = self.value()?;
        self.expect(Tok::Eq)?;
        let mnemonic_at = self.pos;
        let mnemonic = self.ident()?;
        let kind = OpKind::from_mnemonic(&mnemonic)
            .filter(|k| *k != OpKind::Sink)
            .ok_or_else(|| {
                self.pos = mnemonic_at;
                self.error_here(&format!("unknown operation `{mnemonic}`"))
            })?;
        let (operands, attrs) = match kind {
            OpKind::Pin => (vec![], Attrs::None),
            OpKind::Const => (vec![], Attrs::Const(self.int()?)),
            OpKind::Delay => {
                let v = self.value()?;
                self.keyword("by")?;
                (vec![v], Attrs::Delay(self.small_int()?))
            }
            OpKind::Bubble | OpKind::Not => (vec![self.value()?], Attrs::None),
            OpKind::Mux => {
                let vs = self.value_list(3)?;
                if vs.len() != 3 {
                    return Err(self.error_here("mux takes exactly 3 operands"));
                }
                (vs, Attrs::None)
            }
            OpKind::Extract => {
                let v = self.value()?;
                self.expect(Tok::LBracket)?;
                let low = self.small_int()?;
                self.expect(Tok::PlusColon)?;
                let width = self.small_int()?;
                self.expect(Tok::RBracket)?;
                (vec![v], Attrs::Extract { low, width })
            }
            OpKind::Add
            | OpKind::Sub
            | OpKind::Mul
            | OpKind::And
            | OpKind::Or
            | OpKind::Xor
            | OpKind::Concat => (self.value_list(2)?, Attrs::None),
            OpKind::Sink => unreachable!("filtered above"),
        };
        self.expect(Tok::Colon)?;
        let width = self.ty()?;
        Ok(Operation {
            kind,
            result: Some(result),
            operands,
            attrs,
            result_width: Some(width),
        })
    }
}

/// Parses and validates a design in the line-oriented text format.
pub fn parse_design(text: &str) -> Result<Design, ParseError> {
    let toks = lex(text)?;
    let end = {
        let lines: Vec<&str> = text.lines().collect();
        let last = lines.last().map_or(0, |l| l.chars().count());
        (lines.len().max(1), last + 1)
    };
    let mut p = Parser { toks, pos: 0, end };
    p.keyword("design")?;
    let name = p.ident()?;
    p.expect(Tok::LBrace)?;
    let mut design = Design::new(name);
    let mut sink_types = Vec::new();
    loop {
        match p.peek() {
            Some(Tok::RBrace) => {
                p.pos += 1;
                break;
            }
            Some(Tok::Ident(w)) if w == "sink" => {
                let (op, types) = p.sink()?;
                sink_types.push((design.ops.len(), types));
                design.ops.push(op);
            }
            Some(Tok::Value(_)) => {
                let op = p.def()?;
                design.ops.push(op);
            }
            _ => return Err(p.unexpected("a definition, `sink` or `}`")),
        }
    }
    if p.peek().is_some() {
        return Err(p.unexpected("end of input"));
    }

    let mut diags = validate(&design);
    // Sink type annotations are checked here; they are not stored.
    let widths: HashMap<&ValueId, BitWidth> = design
        .ops
        .iter()
        .filter_map(|op| Some((op.result.as_ref()?, op.result_width?)))
        .collect();
    for (sink_no, (idx, types)) in sink_types.iter().enumerate() {
        for (v, ty) in design.ops[*idx].operands.iter().zip(types) {
            if let Some(w) = widths.get(v) {
                if w != ty {
                    diags.push(Diagnostic::WidthMismatch {
                        site: format!("sink#{sink_no}"),
                        expected: w.get(),
                        found: ty.get(),
                    });
                }
            }
        }
    }
    if diags.is_empty() {
        Ok(design)
    } else {
        Err(ParseError::Invalid(diags))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::{bits, print_design};

    #[test]
    fn delay_with_count() {
        let d =
            parse_design("design t {\n %a = pin : i8\n %z = delay %a by 2 : i8\n sink %z : i8\n}")
                .unwrap();
        assert_eq!(d.ops[1], Operation::delay("z", "a", 2, bits(8)));
    }

    #[test]
    fn empty_body_has_no_boundaries() {
        let err = parse_design("design empty { }").unwrap_err();
        let ParseError::Invalid(diags) = err else {
            panic!("expected validation failure, got {err:?}");
        };
        assert_eq!(
            diags,
            vec![
                Diagnostic::MissingBoundary { kind: OpKind::Pin },
                Diagnostic::MissingBoundary { kind: OpKind::Sink }
            ]
        );
        assert!(err_text(&ParseError::Invalid(diags)).contains("no pin"));
    }

    fn err_text(e: &ParseError) -> String {
        e.to_string()
    }

    #[test]
    fn syntax_errors_carry_positions() {
        let err = parse_design("design t {\n  %a = pin : i8\n  %b = frob %a : i8\n}").unwrap_err();
        assert_eq!(
            err,
            ParseError::Syntax {
                line: 3,
                column: 8,
                message: "unknown operation `frob`".into()
            }
        );
        let err = parse_design("design t {\n  %a = pin : u8\n}").unwrap_err();
        assert!(
            matches!(
                err,
                ParseError::Syntax {
                    line: 2,
                    column: 14,
                    ..
                }
            ),
            "{err:?}"
        );
        let err = parse_design("design t { %a = pin : i8").unwrap_err();
        assert!(matches!(err, ParseError::Syntax { .. }), "{err:?}");
    }

    #[test]
    fn comments_and_attributes() {
        let text = "// header\ndesign t { // open\n %a = pin : i8\n %e = extract %a [2 +: 4] : i4 // low nibble-ish\n %c = const 255 : i8\n %m = mux %s, %a, %c : i8\n %s = extract %a[0+:1] : i1\n sink %e, %m : i4, i8\n}\n";
        let d = parse_design(text).unwrap();
        assert_eq!(d.ops.len(), 6);
        assert_eq!(d.ops[1].attrs, Attrs::Extract { low: 2, width: 4 });
        assert_eq!(d.ops[2].attrs, Attrs::Const(BigUint::from(255u32)));
        let again = parse_design(&print_design(&d)).unwrap();
        assert!(again.structurally_eq(&d));
    }

    #[test]
    fn sink_type_annotations_must_match() {
        let err = parse_design("design t { %a = pin : i8 sink %a : i4 }").unwrap_err();
        assert!(
            matches!(err, ParseError::Invalid(ref d) if matches!(d[0], Diagnostic::WidthMismatch { expected: 8, found: 4, .. }))
        );
        let err = parse_design("design t { %a = pin : i8 sink %a : i8, i8 }").unwrap_err();
        assert!(matches!(err, ParseError::Syntax { .. }));
    }

    #[test]
    fn wide_constants_parse() {
        let text = "design w { %a = pin : i100 %c = const 1000000000000000000000000000 : i100 %s = add %a, %c : i100 sink %s : i100 }";
        let d = parse_design(text).unwrap();
        assert_eq!(d.ops.len(), 4);
    }
}

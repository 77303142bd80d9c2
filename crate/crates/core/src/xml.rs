//! Minimal XML tree reader and writer.
//!
//! Covers what storyboard files use: elements, attributes, text, comments,
//! CDATA, processing instructions and a skipped DOCTYPE. Namespaces are not
//! interpreted.
//!
//! [`Mode::Lenient`] accepts the hand-written markup found in historical
//! storyboard files and records each repair as a [`Recovery`]:
//!
//! * a comment with no closing `-->` (or one that runs into another `<!--`)
//!   ends at the next line that starts with a tag;
//! * stray characters between attributes are skipped;
//! * `<` inside a quoted attribute value is taken literally;
//! * an `&` that does not start a known entity is taken literally.

use std::fmt::Write as _;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Element {
    pub name: String,
    pub attrs: Vec<(String, String)>,
    pub children: Vec<Node>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Node {
    Element(Element),
    Text(String),
}

impl Element {
    pub fn new(name: impl Into<String>) -> Self {
        Element {
            name: name.into(),
            ..Default::default()
        }
    }

    pub fn attr(&self, name: &str) -> Option<&str> {
        self.attrs
            .iter()
            .find(|(k, _)| k == name)
            .map(|(_, v)| v.as_str())
    }

    pub fn with_attr(mut self, name: impl Into<String>, value: impl Into<String>) -> Self {
        self.attrs.push((name.into(), value.into()));
        self
    }

    pub fn push_attr(&mut self, name: impl Into<String>, value: impl Into<String>) {
        self.attrs.push((name.into(), value.into()));
    }

    pub fn push_child(&mut self, child: Element) {
        self.children.push(Node::Element(child));
    }

    pub fn elements(&self) -> impl Iterator<Item = &Element> {
        self.children.iter().filter_map(|n| match n {
            Node::Element(e) => Some(e),
            Node::Text(_) => None,
        })
    }

    pub fn text(&self) -> String {
        self.children
            .iter()
            .filter_map(|n| match n {
                Node::Text(t) => Some(t.as_str()),
                Node::Element(_) => None,
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Strict,
    Lenient,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Recovery {
    pub offset: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Document {
    pub root: Element,
    pub recoveries: Vec<Recovery>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("malformed XML at byte {offset}: {message}")]
pub struct XmlError {
    pub offset: usize,
    pub message: String,
}

pub fn parse(input: &[u8], mode: Mode) -> Result<Document, XmlError> {
    let text = std::str::from_utf8(input).map_err(|e| XmlError {
        offset: e.valid_up_to(),
        message: "input is not valid UTF-8".into(),
    })?;
    let (text, base) = match text.strip_prefix('\u{feff}') {
        Some(rest) => (rest, 3),
        None => (text, 0),
    };
    let mut reader = Reader {
        src: text,
        pos: 0,
        base,
        mode,
        recoveries: Vec::new(),
    };
    let root = reader.document()?;
    Ok(Document {
        root,
        recoveries: reader.recoveries,
    })
}

struct Reader<'a> {
    src: &'a str,
    pos: usize,
    base: usize,
    mode: Mode,
    recoveries: Vec<Recovery>,
}

fn is_name_start(c: char) -> bool {
    c.is_alphabetic() || c == '_' || c == ':'
}

fn is_name_char(c: char) -> bool {
    is_name_start(c) || c.is_ascii_digit() || c == '-' || c == '.'
}

impl<'a> Reader<'a> {
    fn rest(&self) -> &'a str {
        &self.src[self.pos..]
    }

    fn err(&self, at: usize, message: impl Into<String>) -> XmlError {
        XmlError {
            offset: at + self.base,
            message: message.into(),
        }
    }

    fn recover(&mut self, at: usize, message: impl Into<String>) {
        self.recoveries.push(Recovery {
            offset: at + self.base,
            message: message.into(),
        });
    }

    fn lenient(&self) -> bool {
        self.mode == Mode::Lenient
    }

    fn peek(&self) -> Option<char> {
        self.rest().chars().next()
    }

    fn skip_ws(&mut self) {
        let trimmed = self.rest().trim_start_matches(|c: char| c.is_ascii_whitespace());
        self.pos = self.src.len() - trimmed.len();
    }

    fn document(&mut self) -> Result<Element, XmlError> {
        let mut root = None;
        loop {
            self.skip_ws();
            if self.pos >= self.src.len() {
                break;
            }
            let rest = self.rest();
            if rest.starts_with("<?") {
                self.skip_pi()?;
            } else if rest.starts_with("<!--") {
                self.skip_comment()?;
            } else if rest.starts_with("<!DOCTYPE") {
                if root.is_some() {
                    return Err(self.err(self.pos, "DOCTYPE after root element"));
                }
                self.skip_doctype()?;
            } else if rest.starts_with('<') && root.is_none() {
                root = Some(self.element()?);
            } else {
                return Err(self.err(self.pos, "unexpected content outside the root element"));
            }
        }
        root.ok_or_else(|| self.err(self.pos, "no root element"))
    }

    fn skip_pi(&mut self) -> Result<(), XmlError> {
        match self.rest().find("?>") {
            Some(i) => {
                self.pos += i + 2;
                Ok(())
            }
            None => Err(self.err(self.pos, "unterminated processing instruction")),
        }
    }

    fn skip_doctype(&mut self) -> Result<(), XmlError> {
        let start = self.pos;
        let mut depth = 0usize;
        for (i, c) in self.rest().char_indices() {
            match c {
                '[' => depth += 1,
                ']' => depth = depth.saturating_sub(1),
                '>' if depth == 0 => {
                    self.pos += i + 1;
                    return Ok(());
                }
                _ => {}
            }
        }
        Err(self.err(start, "unterminated DOCTYPE"))
    }

    fn skip_comment(&mut self) -> Result<(), XmlError> {
        let start = self.pos;
        let body_start = start + 4;
        let body = &self.src[body_start..];
        let close = body.find("-->");
        let nested_open = body.find("<!--");
        let properly_closed = match (close, nested_open) {
            (Some(c), Some(o)) => c < o,
            (Some(_), None) => true,
            _ => false,
        };
        if properly_closed {
            self.pos = body_start + close.expect("checked") + 3;
            return Ok(());
        }
        if !self.lenient() {
            return Err(self.err(start, "unterminated comment"));
        }
        match next_tag_line(body) {
            Some(i) => {
                self.recover(start, "unterminated comment closed before the next tag line");
                self.pos = body_start + i;
                Ok(())
            }
            None => Err(self.err(start, "unterminated comment")),
        }
    }

    fn name(&mut self) -> Result<String, XmlError> {
        let start = self.pos;
        let mut chars = self.rest().char_indices();
        match chars.next() {
            Some((_, c)) if is_name_start(c) => {}
            _ => return Err(self.err(start, "expected a name")),
        }
        let end = chars
            .find(|(_, c)| !is_name_char(*c))
            .map(|(i, _)| i)
            .unwrap_or(self.rest().len());
        self.pos += end;
        Ok(self.src[start..self.pos].to_string())
    }

    /// Parses an element starting at `<`, iteratively so deep nesting cannot
    /// exhaust the stack.
    fn element(&mut self) -> Result<Element, XmlError> {
        let mut stack: Vec<Element> = Vec::new();
        loop {
            // At a `<` that opens a start tag.
            let (el, self_closing) = self.start_tag()?;
            if self_closing {
                match stack.last_mut() {
                    Some(parent) => parent.children.push(Node::Element(el)),
                    None => return Ok(el),
                }
            } else {
                stack.push(el);
            }
            // Content until the next start tag, or close tags that may finish the root.
            loop {
                self.content_text(stack.last_mut().expect("open element"))?;
                let rest = self.rest();
                if rest.is_empty() {
                    let open = &stack.last().expect("open element").name;
                    return Err(self.err(self.pos, format!("missing </{open}>")));
                } else if rest.starts_with("</") {
                    let at = self.pos;
                    self.pos += 2;
                    let name = self.name()?;
                    self.skip_ws();
                    if self.peek() != Some('>') {
                        return Err(self.err(self.pos, "expected `>` in end tag"));
                    }
                    self.pos += 1;
                    let done = stack.pop().expect("open element");
                    if done.name != name {
                        return Err(self.err(
                            at,
                            format!("end tag </{name}> does not match <{}>", done.name),
                        ));
                    }
                    match stack.last_mut() {
                        Some(parent) => parent.children.push(Node::Element(done)),
                        None => return Ok(done),
                    }
                } else if rest.starts_with("<!--") {
                    self.skip_comment()?;
                } else if let Some(body) = rest.strip_prefix("<![CDATA[") {
                    let end = body
                        .find("]]>")
                        .ok_or_else(|| self.err(self.pos, "unterminated CDATA section"))?;
                    let text = body[..end].to_string();
                    push_text(stack.last_mut().expect("open element"), text);
                    self.pos += 9 + end + 3;
                } else if rest.starts_with("<?") {
                    self.skip_pi()?;
                } else if rest.starts_with("<!") {
                    return Err(self.err(self.pos, "unexpected declaration in content"));
                } else {
                    break;
                }
            }
        }
    }

    fn content_text(&mut self, parent: &mut Element) -> Result<(), XmlError> {
        let start = self.pos;
        let end = self.rest().find('<').map(|i| start + i).unwrap_or(self.src.len());
        if end > start {
            let raw = &self.src[start..end];
            if !raw.trim().is_empty() {
                let decoded = self.decode(raw, start)?;
                push_text(parent, decoded);
            }
            self.pos = end;
        }
        Ok(())
    }

    fn start_tag(&mut self) -> Result<(Element, bool), XmlError> {
        debug_assert!(self.rest().starts_with('<'));
        self.pos += 1;
        let mut el = Element::new(self.name()?);
        loop {
            self.skip_ws();
            let rest = self.rest();
            if rest.starts_with("/>") {
                self.pos += 2;
                return Ok((el, true));
            }
            if rest.starts_with('>') {
                self.pos += 1;
                return Ok((el, false));
            }
            match self.peek() {
                None => return Err(self.err(self.pos, format!("unterminated <{}> tag", el.name))),
                Some(c) if is_name_start(c) => {
                    let at = self.pos;
                    let name = self.name()?;
                    self.skip_ws();
                    if self.peek() != Some('=') {
                        return Err(self.err(self.pos, format!("expected `=` after `{name}`")));
                    }
                    self.pos += 1;
                    self.skip_ws();
                    let value = self.attr_value()?;
                    if el.attr(&name).is_some() {
                        return Err(self.err(at, format!("duplicate attribute `{name}`")));
                    }
                    el.attrs.push((name, value));
                }
                Some(c) => {
                    if !self.lenient() {
                        return Err(self.err(self.pos, format!("unexpected `{c}` in tag")));
                    }
                    self.recover(self.pos, format!("skipped stray `{c}` in <{}> tag", el.name));
                    self.pos += c.len_utf8();
                }
            }
        }
    }

    fn attr_value(&mut self) -> Result<String, XmlError> {
        let quote = match self.peek() {
            Some(q @ ('"' | '\'')) => q,
            _ => return Err(self.err(self.pos, "expected quoted attribute value")),
        };
        let start = self.pos + 1;
        let len = self.src[start..]
            .find(quote)
            .ok_or_else(|| self.err(self.pos, "unterminated attribute value"))?;
        let raw = &self.src[start..start + len];
        if let Some(i) = raw.find('<') {
            if !self.lenient() {
                return Err(self.err(start + i, "`<` in attribute value"));
            }
            self.recover(start + i, "accepted literal `<` in attribute value");
        }
        let value = self.decode(raw, start)?;
        self.pos = start + len + 1;
        Ok(value)
    }

    fn decode(&mut self, raw: &str, at: usize) -> Result<String, XmlError> {
        if !raw.contains('&') {
            return Ok(raw.to_string());
        }
        let mut out = String::with_capacity(raw.len());
        let mut rest = raw;
        let mut offset = at;
        while let Some(i) = rest.find('&') {
            out.push_str(&rest[..i]);
            offset += i;
            rest = &rest[i..];
            match decode_entity(rest) {
                Some((c, used)) => {
                    out.push(c);
                    rest = &rest[used..];
                    offset += used;
                }
                None if self.lenient() => {
                    self.recover(offset, "kept bare `&` literally");
                    out.push('&');
                    rest = &rest[1..];
                    offset += 1;
                }
                None => return Err(self.err(offset, "bare `&` is not a valid entity reference")),
            }
        }
        out.push_str(rest);
        Ok(out)
    }
}

fn push_text(parent: &mut Element, text: String) {
    if let Some(Node::Text(prev)) = parent.children.last_mut() {
        prev.push_str(&text);
    } else {
        parent.children.push(Node::Text(text));
    }
}

/// Offset (within `body`) of the first `<` that starts a line and opens or
/// closes a tag.
fn next_tag_line(body: &str) -> Option<usize> {
    let mut line_start = 0;
    for line in body.split_inclusive('\n') {
        let trimmed = line.trim_start_matches([' ', '\t']);
        let indent = line.len() - trimmed.len();
        let mut chars = trimmed.chars();
        if line_start > 0 && chars.next() == Some('<') {
            if let Some(c) = chars.next() {
                if c == '/' || is_name_start(c) {
                    return Some(line_start + indent);
                }
            }
        }
        line_start += line.len();
    }
    None
}

fn decode_entity(s: &str) -> Option<(char, usize)> {
    let end = s.bytes().take(12).position(|b| b == b';')?;
    let name = &s[1..end];
    let c = match name {
        "lt" => '<',
        "gt" => '>',
        "amp" => '&',
        "quot" => '"',
        "apos" => '\'',
        _ => {
            let code = if let Some(hex) = name.strip_prefix("#x") {
                u32::from_str_radix(hex, 16).ok()?
            } else {
                name.strip_prefix('#')?.parse().ok()?
            };
            char::from_u32(code)?
        }
    };
    Some((c, end + 1))
}

pub fn escape_attr(value: &str) -> String {
    let mut out = String::with_capacity(value.len());
    for c in value.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\n' => out.push_str("&#10;"),
            '\r' => out.push_str("&#13;"),
            '\t' => out.push_str("&#9;"),
            c => out.push(c),
        }
    }
    out
}

pub fn escape_text(value: &str) -> String {
    let mut out = String::with_capacity(value.len());
    for c in value.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '\r' => out.push_str("&#13;"),
            c => out.push(c),
        }
    }
    out
}

/// Writes a document with an XML declaration, two-space indentation and LF
/// line endings. Attribute order is preserved as given.
pub fn write_document(root: &Element) -> String {
    let mut out = String::from("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    write_element(&mut out, root, 0);
    out
}

pub fn write_element(out: &mut String, el: &Element, depth: usize) {
    let indent = "  ".repeat(depth);
    let _ = write!(out, "{indent}<{}", el.name);
    for (k, v) in &el.attrs {
        let _ = write!(out, " {k}=\"{}\"", escape_attr(v));
    }
    if el.children.is_empty() {
        out.push_str("/>\n");
        return;
    }
    // Elements holding text are written on one line so the text round-trips exactly.
    if el.children.iter().any(|c| matches!(c, Node::Text(_))) {
        out.push('>');
        for child in &el.children {
            write_compact(out, child);
        }
        let _ = writeln!(out, "</{}>", el.name);
        return;
    }
    out.push_str(">\n");
    for child in el.elements() {
        write_element(out, child, depth + 1);
    }
    let _ = writeln!(out, "{indent}</{}>", el.name);
}

fn write_compact(out: &mut String, node: &Node) {
    match node {
        Node::Text(t) => out.push_str(&escape_text(t)),
        Node::Element(el) => {
            let _ = write!(out, "<{}", el.name);
            for (k, v) in &el.attrs {
                let _ = write!(out, " {k}=\"{}\"", escape_attr(v));
            }
            if el.children.is_empty() {
                out.push_str("/>");
            } else {
                out.push('>');
                for child in &el.children {
                    write_compact(out, child);
                }
                let _ = write!(out, "</{}>", el.name);
            }
        }
    }
}

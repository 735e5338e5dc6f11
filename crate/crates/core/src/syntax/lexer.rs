use super::Span;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Token {
    Ident(String),
    Int(i64),
    LParen,
    RParen,
    LBrace,
    RBrace,
    Comma,
    Colon,
    Semi,
    Dot,
    Bar,
    Plus,
    Minus,
    Star,
    Bang,
    Query,
    Assign,
    EqEq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    /// `(+)` in session types
    OPlus,
    Amp,
    Eof,
}

impl Token {
    pub fn describe(&self) -> String {
        match self {
            Token::Ident(s) => format!("`{s}`"),
            Token::Int(n) => format!("`{n}`"),
            Token::Eof => "end of input".to_string(),
            t => format!("`{}`", t.symbol()),
        }
    }

    fn symbol(&self) -> &'static str {
        match self {
            Token::LParen => "(",
            Token::RParen => ")",
            Token::LBrace => "{",
            Token::RBrace => "}",
            Token::Comma => ",",
            Token::Colon => ":",
            Token::Semi => ";",
            Token::Dot => ".",
            Token::Bar => "|",
            Token::Plus => "+",
            Token::Minus => "-",
            Token::Star => "*",
            Token::Bang => "!",
            Token::Query => "?",
            Token::Assign => "=",
            Token::EqEq => "==",
            Token::Ne => "!=",
            Token::Lt => "<",
            Token::Le => "<=",
            Token::Gt => ">",
            Token::Ge => ">=",
            Token::OPlus => "(+)",
            Token::Amp => "&",
            Token::Ident(_) | Token::Int(_) | Token::Eof => "",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("unexpected character {ch:?}")]
pub struct LexError {
    pub ch: char,
    pub span: Span,
}

pub fn tokenize(src: &str) -> Result<Vec<(Token, Span)>, LexError> {
    let mut out = Vec::new();
    let chars: Vec<(usize, char)> = src.char_indices().collect();
    let mut i = 0;
    let at = |i: usize| chars.get(i).map(|c| c.1);
    let pos = |i: usize| chars.get(i).map(|c| c.0).unwrap_or(src.len());
    while i < chars.len() {
        let (start, c) = chars[i];
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        if c == '/' && at(i + 1) == Some('/') {
            while i < chars.len() && chars[i].1 != '\n' {
                i += 1;
            }
            continue;
        }
        if c.is_alphabetic() {
            let mut j = i;
            while j < chars.len() && (chars[j].1.is_alphanumeric() || chars[j].1 == '_' || chars[j].1 == '\'') {
                j += 1;
            }
            out.push((Token::Ident(src[start..pos(j)].to_string()), Span::new(start, pos(j))));
            i = j;
            continue;
        }
        if c.is_ascii_digit() {
            let mut j = i;
            while j < chars.len() && chars[j].1.is_ascii_digit() {
                j += 1;
            }
            let text = &src[start..pos(j)];
            let n = text.parse().map_err(|_| LexError { ch: c, span: Span::new(start, pos(j)) })?;
            out.push((Token::Int(n), Span::new(start, pos(j))));
            i = j;
            continue;
        }
        let two = |a: char, b: char| c == a && at(i + 1) == Some(b);
        let (tok, len) = if c == '(' && at(i + 1) == Some('+') && at(i + 2) == Some(')') {
            (Token::OPlus, 3)
        } else if two('=', '=') {
            (Token::EqEq, 2)
        } else if two('!', '=') {
            (Token::Ne, 2)
        } else if two('<', '=') {
            (Token::Le, 2)
        } else if two('>', '=') {
            (Token::Ge, 2)
        } else {
            let t = match c {
                '(' => Token::LParen,
                ')' => Token::RParen,
                '{' => Token::LBrace,
                '}' => Token::RBrace,
                ',' => Token::Comma,
                ':' => Token::Colon,
                ';' => Token::Semi,
                '.' | '·' => Token::Dot,
                '|' => Token::Bar,
                '+' => Token::Plus,
                '-' => Token::Minus,
                '*' => Token::Star,
                '!' => Token::Bang,
                '?' => Token::Query,
                '=' => Token::Assign,
                '<' => Token::Lt,
                '>' => Token::Gt,
                '&' => Token::Amp,
                '⊕' => Token::OPlus,
                _ => return Err(LexError { ch: c, span: Span::new(start, start + c.len_utf8()) }),
            };
            (t, 1)
        };
        let end = pos(i + len);
        out.push((tok, Span::new(start, end)));
        i += len;
    }
    out.push((Token::Eof, Span::new(src.len(), src.len())));
    Ok(out)
}

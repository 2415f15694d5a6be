use super::ast::Span;
use super::ParseError;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Number(u128),
    Hex(String),
    Str(String),
    Punct(&'static str),
    Eof,
}

#[derive(Clone, Debug)]
pub struct Token {
    pub tok: Tok,
    pub span: Span,
}

// Longest first so that `>=` wins over `>`.
const PUNCTS: &[&str] = &[
    "=>", "==", "!=", "<=", ">=", "&&", "||", "+=", "-=", "*=", "/=", "++", "--", "**", "<<", ">>",
    "%=", "{", "}", "(", ")", "[", "]", ";", ",", ".", "=", "+", "-", "*", "/", "%", "<", ">", "!",
    "?", ":", "&", "|", "^", "~",
];

pub fn tokenize(src: &str) -> Result<Vec<Token>, ParseError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1u32, 1u32);

    macro_rules! bump {
        () => {{
            if chars[i] == '\n' {
                line += 1;
                col = 1;
            } else {
                col += 1;
            }
            i += 1;
        }};
    }

    'outer: while i < chars.len() {
        let c = chars[i];
        let span = Span { line, col };
        if c.is_whitespace() {
            bump!();
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'/') {
            while i < chars.len() && chars[i] != '\n' {
                bump!();
            }
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'*') {
            bump!();
            bump!();
            while i < chars.len() {
                if chars[i] == '*' && chars.get(i + 1) == Some(&'/') {
                    bump!();
                    bump!();
                    continue 'outer;
                }
                bump!();
            }
            return Err(ParseError::lexical(span, "unterminated block comment"));
        }
        if c.is_ascii_alphabetic() || c == '_' || c == '$' {
            let start = i;
            while i < chars.len()
                && (chars[i].is_ascii_alphanumeric() || chars[i] == '_' || chars[i] == '$')
            {
                bump!();
            }
            let word: String = chars[start..i].iter().collect();
            let pragma = word == "pragma";
            out.push(Token {
                tok: Tok::Ident(word),
                span,
            });
            // Pragma bodies (version ranges) are raw text up to `;`.
            if pragma {
                while i < chars.len() && chars[i] != ';' {
                    bump!();
                }
            }
            continue;
        }
        if c.is_ascii_digit() {
            let start = i;
            if c == '0' && matches!(chars.get(i + 1), Some('x') | Some('X')) {
                bump!();
                bump!();
                while i < chars.len() && chars[i].is_ascii_hexdigit() {
                    bump!();
                }
                let text: String = chars[start + 2..i].iter().collect();
                if text.is_empty() {
                    return Err(ParseError::lexical(span, "empty hex literal"));
                }
                out.push(Token {
                    tok: Tok::Hex(text.to_ascii_lowercase()),
                    span,
                });
                continue;
            }
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '_') {
                bump!();
            }
            let text: String = chars[start..i].iter().filter(|c| **c != '_').collect();
            let value = text.parse::<u128>().map_err(|_| {
                ParseError::lexical(span, format!("numeric literal `{text}` out of range"))
            })?;
            if i < chars.len() && (chars[i].is_ascii_alphabetic() || chars[i] == '.') {
                return Err(ParseError::unsupported(
                    span,
                    "numeric literal suffixes, units and decimals",
                ));
            }
            out.push(Token {
                tok: Tok::Number(value),
                span,
            });
            continue;
        }
        if c == '"' || c == '\'' {
            let quote = c;
            bump!();
            let start = i;
            while i < chars.len() && chars[i] != quote {
                if chars[i] == '\n' {
                    return Err(ParseError::lexical(span, "unterminated string literal"));
                }
                bump!();
            }
            if i >= chars.len() {
                return Err(ParseError::lexical(span, "unterminated string literal"));
            }
            let text: String = chars[start..i].iter().collect();
            bump!();
            out.push(Token {
                tok: Tok::Str(text),
                span,
            });
            continue;
        }
        for p in PUNCTS {
            let n = p.len();
            if i + n <= chars.len() && chars[i..i + n].iter().copied().eq(p.chars()) {
                for _ in 0..n {
                    bump!();
                }
                out.push(Token {
                    tok: Tok::Punct(p),
                    span,
                });
                continue 'outer;
            }
        }
        return Err(ParseError::lexical(
            span,
            format!("unexpected character `{c}`"),
        ));
    }
    out.push(Token {
        tok: Tok::Eof,
        span: Span { line, col },
    });
    Ok(out)
}

use super::QueryError;

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Tok {
    /// Bare word; keywords are recognised by the parser.
    Word(String),
    Quoted(String),
    Number(String),
    Dot,
    Comma,
    Semi,
    Gt,
    LParen,
    RParen,
    LBrace,
    RBrace,
    Eof,
}

impl Tok {
    pub(crate) fn describe(&self) -> String {
        match self {
            Tok::Word(w) => format!("'{w}'"),
            Tok::Quoted(q) => format!("quoted identifier '{q}'"),
            Tok::Number(n) => format!("number {n}"),
            Tok::Dot => "'.'".into(),
            Tok::Comma => "','".into(),
            Tok::Semi => "';'".into(),
            Tok::Gt => "'>'".into(),
            Tok::LParen => "'('".into(),
            Tok::RParen => "')'".into(),
            Tok::LBrace => "'{'".into(),
            Tok::RBrace => "'}'".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Token {
    pub tok: Tok,
    /// Character offset of the first character.
    pub pos: usize,
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || matches!(c, '_' | '-' | '@' | ':' | '/' | '#')
}

pub(crate) fn tokenize(text: &str) -> Result<Vec<Token>, QueryError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let start = i;
        let single = match c {
            '.' if !chars.get(i + 1).is_some_and(|d| d.is_ascii_digit()) => Some(Tok::Dot),
            ',' => Some(Tok::Comma),
            ';' => Some(Tok::Semi),
            '>' => Some(Tok::Gt),
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            '{' => Some(Tok::LBrace),
            '}' => Some(Tok::RBrace),
            _ => None,
        };
        if let Some(tok) = single {
            out.push(Token { tok, pos: start });
            i += 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        if matches!(c, '\'' | '"' | '`') {
            // a backtick opens a quote closed by an apostrophe, as in `Jack'
            let closers: &[char] = match c {
                '`' => &['\'', '`'],
                '\'' => &['\''],
                _ => &['"'],
            };
            let body_start = i + 1;
            let end = (body_start..chars.len()).find(|&j| closers.contains(&chars[j]));
            let Some(end) = end else {
                return Err(QueryError::Syntax {
                    position: start,
                    expected: "closing quote".into(),
                    found: "end of input".into(),
                });
            };
            let body: String = chars[body_start..end].iter().collect();
            if body.trim().is_empty() {
                return Err(QueryError::Syntax {
                    position: start,
                    expected: "identifier".into(),
                    found: "empty quotes".into(),
                });
            }
            out.push(Token {
                tok: Tok::Quoted(body),
                pos: start,
            });
            i = end + 1;
            continue;
        }
        if c.is_ascii_digit()
            || c == '.'
            || ((c == '+' || c == '-')
                && chars
                    .get(i + 1)
                    .is_some_and(|d| d.is_ascii_digit() || *d == '.'))
        {
            let mut j = i + 1;
            while j < chars.len() && (chars[j].is_ascii_digit() || chars[j] == '.') {
                j += 1;
            }
            if j < chars.len() && matches!(chars[j], 'e' | 'E') {
                let mut k = j + 1;
                if k < chars.len() && matches!(chars[k], '+' | '-') {
                    k += 1;
                }
                if k < chars.len() && chars[k].is_ascii_digit() {
                    j = k;
                    while j < chars.len() && chars[j].is_ascii_digit() {
                        j += 1;
                    }
                }
            }
            if j < chars.len() && is_word_char(chars[j]) {
                // an identifier such as 3M or 1-2-3
                while j < chars.len() && (is_word_char(chars[j]) || chars[j] == '.') {
                    j += 1;
                }
                out.push(Token {
                    tok: Tok::Word(chars[i..j].iter().collect()),
                    pos: start,
                });
            } else {
                let text: String = chars[i..j].iter().collect();
                if text.parse::<f64>().is_err() {
                    return Err(QueryError::Syntax {
                        position: start,
                        expected: "number".into(),
                        found: format!("'{text}'"),
                    });
                }
                out.push(Token {
                    tok: Tok::Number(text),
                    pos: start,
                });
            }
            i = j;
            continue;
        }
        if is_word_char(c) {
            let mut j = i + 1;
            while j < chars.len() && is_word_char(chars[j]) {
                j += 1;
            }
            out.push(Token {
                tok: Tok::Word(chars[i..j].iter().collect()),
                pos: start,
            });
            i = j;
            continue;
        }
        return Err(QueryError::Syntax {
            position: start,
            expected: "query text".into(),
            found: format!("'{c}'"),
        });
    }
    out.push(Token {
        tok: Tok::Eof,
        pos: chars.len(),
    });
    Ok(out)
}

//! Hand-rolled lexer. Tokens carry their character offset so parse errors
//! can point at the offending position.

use crate::error::QueryError;

#[derive(Clone, Debug, PartialEq)]
pub enum TokenKind {
    // keywords (matched case-insensitively)
    Match,
    Where,
    Return,
    Distinct,
    Count,
    Order,
    By,
    Limit,
    And,
    Or,
    Not,
    Asc,
    Desc,
    True,
    False,
    // literals and identifiers
    Ident(String),
    Str(String),
    Num(f64),
    // punctuation
    LParen,
    RParen,
    LBracket,
    RBracket,
    LBrace,
    RBrace,
    Comma,
    Colon,
    Dot,
    Star,
    Dash,      // -
    Arrow,     // ->
    LeftArrow, // <-
    Eq,        // =
    Ne,        // <>
    Lt,
    Le,
    Gt,
    Ge,
    Eof,
}

impl TokenKind {
    pub fn describe(&self) -> String {
        match self {
            TokenKind::Ident(s) => format!("identifier '{s}'"),
            TokenKind::Str(_) => "string literal".to_string(),
            TokenKind::Num(n) => format!("number {n}"),
            TokenKind::Eof => "end of input".to_string(),
            other => format!("{other:?}"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Token {
    pub kind: TokenKind,
    /// Character offset into the source text.
    pub pos: usize,
}

fn keyword(word: &str) -> Option<TokenKind> {
    match word.to_ascii_uppercase().as_str() {
        "MATCH" => Some(TokenKind::Match),
        "WHERE" => Some(TokenKind::Where),
        "RETURN" => Some(TokenKind::Return),
        "DISTINCT" => Some(TokenKind::Distinct),
        "COUNT" => Some(TokenKind::Count),
        "ORDER" => Some(TokenKind::Order),
        "BY" => Some(TokenKind::By),
        "LIMIT" => Some(TokenKind::Limit),
        "AND" => Some(TokenKind::And),
        "OR" => Some(TokenKind::Or),
        "NOT" => Some(TokenKind::Not),
        "ASC" => Some(TokenKind::Asc),
        "DESC" => Some(TokenKind::Desc),
        "TRUE" => Some(TokenKind::True),
        "FALSE" => Some(TokenKind::False),
        _ => None,
    }
}

pub fn lex(text: &str) -> Result<Vec<Token>, QueryError> {
    let chars: Vec<char> = text.chars().collect();
    let mut tokens = Vec::new();
    let mut i = 0;

    let err = |pos: usize, expected: &str, found: String| QueryError::SyntaxError {
        position: pos,
        expected: expected.to_string(),
        found,
    };

    while i < chars.len() {
        let c = chars[i];
        let pos = i;
        match c {
            ' ' | '\t' | '\r' | '\n' => {
                i += 1;
            }
            '(' => {
                tokens.push(Token { kind: TokenKind::LParen, pos });
                i += 1;
            }
            ')' => {
                tokens.push(Token { kind: TokenKind::RParen, pos });
                i += 1;
            }
            '[' => {
                tokens.push(Token { kind: TokenKind::LBracket, pos });
                i += 1;
            }
            ']' => {
                tokens.push(Token { kind: TokenKind::RBracket, pos });
                i += 1;
            }
            '{' => {
                tokens.push(Token { kind: TokenKind::LBrace, pos });
                i += 1;
            }
            '}' => {
                tokens.push(Token { kind: TokenKind::RBrace, pos });
                i += 1;
            }
            ',' => {
                tokens.push(Token { kind: TokenKind::Comma, pos });
                i += 1;
            }
            ':' => {
                tokens.push(Token { kind: TokenKind::Colon, pos });
                i += 1;
            }
            '.' => {
                tokens.push(Token { kind: TokenKind::Dot, pos });
                i += 1;
            }
            '*' => {
                tokens.push(Token { kind: TokenKind::Star, pos });
                i += 1;
            }
            '=' => {
                tokens.push(Token { kind: TokenKind::Eq, pos });
                i += 1;
            }
            '-' => {
                if chars.get(i + 1) == Some(&'>') {
                    tokens.push(Token { kind: TokenKind::Arrow, pos });
                    i += 2;
                } else if chars.get(i + 1).is_some_and(|d| d.is_ascii_digit()) {
                    // negative number literal
                    let (num, next) = lex_number(&chars, i)?;
                    tokens.push(Token { kind: TokenKind::Num(num), pos });
                    i = next;
                } else {
                    tokens.push(Token { kind: TokenKind::Dash, pos });
                    i += 1;
                }
            }
            '<' => match chars.get(i + 1) {
                Some('-') => {
                    tokens.push(Token { kind: TokenKind::LeftArrow, pos });
                    i += 2;
                }
                Some('=') => {
                    tokens.push(Token { kind: TokenKind::Le, pos });
                    i += 2;
                }
                Some('>') => {
                    tokens.push(Token { kind: TokenKind::Ne, pos });
                    i += 2;
                }
                _ => {
                    tokens.push(Token { kind: TokenKind::Lt, pos });
                    i += 1;
                }
            },
            '>' => {
                if chars.get(i + 1) == Some(&'=') {
                    tokens.push(Token { kind: TokenKind::Ge, pos });
                    i += 2;
                } else {
                    tokens.push(Token { kind: TokenKind::Gt, pos });
                    i += 1;
                }
            }
            '\'' | '"' => {
                let quote = c;
                let mut s = String::new();
                let mut j = i + 1;
                let mut closed = false;
                while j < chars.len() {
                    let d = chars[j];
                    if d == '\\' {
                        match chars.get(j + 1) {
                            Some(&e) => {
                                s.push(e);
                                j += 2;
                            }
                            None => break,
                        }
                    } else if d == quote {
                        closed = true;
                        j += 1;
                        break;
                    } else {
                        s.push(d);
                        j += 1;
                    }
                }
                if !closed {
                    return Err(err(pos, "closing quote", "end of input".to_string()));
                }
                tokens.push(Token { kind: TokenKind::Str(s), pos });
                i = j;
            }
            d if d.is_ascii_digit() => {
                let (num, next) = lex_number(&chars, i)?;
                tokens.push(Token { kind: TokenKind::Num(num), pos });
                i = next;
            }
            a if a.is_alphabetic() || a == '_' => {
                let mut j = i;
                while j < chars.len() && (chars[j].is_alphanumeric() || chars[j] == '_') {
                    j += 1;
                }
                let word: String = chars[i..j].iter().collect();
                let kind = keyword(&word).unwrap_or(TokenKind::Ident(word));
                tokens.push(Token { kind, pos });
                i = j;
            }
            other => {
                return Err(err(pos, "a token", format!("'{other}'")));
            }
        }
    }
    tokens.push(Token { kind: TokenKind::Eof, pos: chars.len() });
    Ok(tokens)
}

fn lex_number(chars: &[char], start: usize) -> Result<(f64, usize), QueryError> {
    let mut j = start;
    if chars[j] == '-' {
        j += 1;
    }
    while j < chars.len() && chars[j].is_ascii_digit() {
        j += 1;
    }
    if j < chars.len() && chars[j] == '.' && chars.get(j + 1).is_some_and(|d| d.is_ascii_digit()) {
        j += 1;
        while j < chars.len() && chars[j].is_ascii_digit() {
            j += 1;
        }
    }
    let text: String = chars[start..j].iter().collect();
    let num = text.parse::<f64>().map_err(|_| QueryError::SyntaxError {
        position: start,
        expected: "number".to_string(),
        found: text.clone(),
    })?;
    Ok((num, j))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(text: &str) -> Vec<TokenKind> {
        lex(text).unwrap().into_iter().map(|t| t.kind).collect()
    }

    #[test]
    fn lexes_arrows_and_comparisons() {
        assert_eq!(
            kinds("-[]-> <-[]- <= >= <> < >"),
            vec![
                TokenKind::Dash,
                TokenKind::LBracket,
                TokenKind::RBracket,
                TokenKind::Arrow,
                TokenKind::LeftArrow,
                TokenKind::LBracket,
                TokenKind::RBracket,
                TokenKind::Dash,
                TokenKind::Le,
                TokenKind::Ge,
                TokenKind::Ne,
                TokenKind::Lt,
                TokenKind::Gt,
                TokenKind::Eof,
            ]
        );
    }

    #[test]
    fn lexes_strings_with_escapes() {
        assert_eq!(
            kinds(r#"'it\'s' "x""#),
            vec![
                TokenKind::Str("it's".to_string()),
                TokenKind::Str("x".to_string()),
                TokenKind::Eof
            ]
        );
    }

    #[test]
    fn lexes_numbers_including_negative_and_decimal() {
        assert_eq!(
            kinds("3 -2 4.5"),
            vec![
                TokenKind::Num(3.0),
                TokenKind::Num(-2.0),
                TokenKind::Num(4.5),
                TokenKind::Eof
            ]
        );
    }

    #[test]
    fn keywords_are_case_insensitive() {
        assert_eq!(
            kinds("match RETURN Count"),
            vec![TokenKind::Match, TokenKind::Return, TokenKind::Count, TokenKind::Eof]
        );
    }

    #[test]
    fn unterminated_string_errors_with_position() {
        let err = lex("MATCH 'oops").unwrap_err();
        match err {
            QueryError::SyntaxError { position, .. } => assert_eq!(position, 6),
            other => panic!("unexpected error {other:?}"),
        }
    }
}

use crate::transforms::{PriorSpec, Scale, ZeroCellPolicy};

use super::ast::{
    Definition, Expr, ExprKind, Ident, Item, ModelSpec, OptionDecl, StudyDecl, VariableDecl,
};
use super::lexer::{Token, TokenKind};
use super::{Diagnostic, DiagnosticKind, LineIndex, SourceSpan};

pub(crate) const KEYWORDS: &[&str] = &[
    "variable",
    "study",
    "option",
    "probability",
    "difference",
    "real",
    "prior",
    "jeffreys",
    "normal",
    "chain",
    "on",
    "successes",
    "trials",
    "zero_cell",
    "report",
    "half",
    "error",
];

const STATEMENT_STARTS: &[&str] = &["variable", "study", "option"];

struct Parser<'a> {
    tokens: &'a [Token],
    pos: usize,
    lines: &'a LineIndex<'a>,
    diags: Vec<Diagnostic>,
}

type PResult<T> = Result<T, Diagnostic>;

pub(crate) fn parse_tokens(tokens: &[Token], lines: &LineIndex) -> (ModelSpec, Vec<Diagnostic>) {
    let mut p = Parser {
        tokens,
        pos: 0,
        lines,
        diags: Vec::new(),
    };
    let mut spec = ModelSpec::default();
    while !p.at_eof() {
        let before = p.pos;
        match p.statement() {
            Ok(item) => spec.items.push(item),
            Err(d) => {
                p.diags.push(d);
                if p.pos == before {
                    p.pos += 1;
                }
                p.recover();
            }
        }
    }
    (spec, p.diags)
}

impl<'a> Parser<'a> {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos.min(self.tokens.len() - 1)]
    }

    fn at_eof(&self) -> bool {
        self.peek().kind == TokenKind::Eof
    }

    fn bump(&mut self) -> Token {
        let t = self.peek().clone();
        if t.kind != TokenKind::Eof {
            self.pos += 1;
        }
        t
    }

    fn span_of(&self, t: &Token) -> SourceSpan {
        self.lines.span(t.offset, t.len)
    }

    fn span_from(&self, start: usize) -> SourceSpan {
        let end = self.tokens[..self.pos]
            .last()
            .map(|t| t.offset + t.len)
            .unwrap_or(start)
            .max(start);
        self.lines.span(start, end - start)
    }

    fn error_here(&self, expected: &str) -> Diagnostic {
        let t = self.peek();
        Diagnostic::new(
            DiagnosticKind::Syntax,
            self.span_of(t),
            format!("expected {expected}, found {}", t.kind.describe()),
        )
    }

    fn is_keyword(&self, kw: &str) -> bool {
        matches!(&self.peek().kind, TokenKind::Ident(s) if s == kw)
    }

    fn is_statement_start(&self) -> bool {
        STATEMENT_STARTS.iter().any(|k| self.is_keyword(k))
    }

    fn recover(&mut self) {
        while !self.at_eof() && !self.is_statement_start() {
            self.pos += 1;
        }
    }

    fn keyword(&mut self, kw: &str) -> PResult<Token> {
        if self.is_keyword(kw) {
            Ok(self.bump())
        } else {
            Err(self.error_here(&format!("`{kw}`")))
        }
    }

    fn punct(&mut self, kind: TokenKind) -> PResult<Token> {
        if self.peek().kind == kind {
            Ok(self.bump())
        } else {
            Err(self.error_here(&kind.describe()))
        }
    }

    fn ident(&mut self, what: &str) -> PResult<Ident> {
        match &self.peek().kind {
            TokenKind::Ident(name) if KEYWORDS.contains(&name.as_str()) => {
                let t = self.peek();
                Err(Diagnostic::new(
                    DiagnosticKind::Syntax,
                    self.span_of(t),
                    format!("expected {what}, found reserved word `{name}`"),
                ))
            }
            TokenKind::Ident(name) => {
                let name = name.clone();
                let t = self.bump();
                Ok(Ident {
                    name,
                    span: self.span_of(&t),
                })
            }
            _ => Err(self.error_here(what)),
        }
    }

    fn integer(&mut self, what: &str) -> PResult<u64> {
        match &self.peek().kind {
            TokenKind::Number(text) => {
                let text = text.clone();
                let t = self.bump();
                if !text.bytes().all(|b| b.is_ascii_digit()) {
                    return Err(Diagnostic::new(
                        DiagnosticKind::Syntax,
                        self.span_of(&t),
                        format!("{what} must be a whole number, found `{text}`"),
                    ));
                }
                text.parse::<u64>().map_err(|_| {
                    Diagnostic::new(
                        DiagnosticKind::Syntax,
                        self.span_of(&t),
                        format!("{what} `{text}` is too large"),
                    )
                })
            }
            _ => Err(self.error_here(what)),
        }
    }

    fn real(&mut self, what: &str) -> PResult<f64> {
        let start = self.peek().offset;
        let negative = if self.peek().kind == TokenKind::Minus {
            self.bump();
            true
        } else {
            false
        };
        match &self.peek().kind {
            TokenKind::Number(text) => {
                let text = text.clone();
                self.bump();
                let value: f64 = text.parse().map_err(|_| {
                    Diagnostic::new(
                        DiagnosticKind::Syntax,
                        self.span_from(start),
                        format!("cannot read {what} `{text}`"),
                    )
                })?;
                if !value.is_finite() {
                    return Err(Diagnostic::new(
                        DiagnosticKind::Syntax,
                        self.span_from(start),
                        format!("{what} `{text}` is out of range"),
                    ));
                }
                Ok(if negative { -value } else { value })
            }
            _ => Err(self.error_here(what)),
        }
    }

    fn statement(&mut self) -> PResult<Item> {
        if self.is_keyword("variable") {
            self.variable().map(Item::Variable)
        } else if self.is_keyword("study") {
            self.study().map(Item::Study)
        } else if self.is_keyword("option") {
            self.option().map(Item::Option)
        } else {
            Err(self.error_here("`variable`, `study` or `option`"))
        }
    }

    fn variable(&mut self) -> PResult<VariableDecl> {
        let start = self.keyword("variable")?.offset;
        let name = self.ident("a variable name")?;
        self.punct(TokenKind::Colon)?;
        let scale = match &self.peek().kind {
            TokenKind::Ident(s) => match Scale::from_keyword(s) {
                Some(scale) => {
                    self.bump();
                    scale
                }
                None => return Err(self.error_here("`probability`, `difference` or `real`")),
            },
            _ => return Err(self.error_here("`probability`, `difference` or `real`")),
        };
        let definition = match self.peek().kind {
            TokenKind::Equals => {
                self.bump();
                Definition::Expr(self.expr()?)
            }
            TokenKind::LBrace => {
                let open = self.bump().offset;
                self.keyword("prior")?;
                let prior = self.prior()?;
                self.punct(TokenKind::RBrace)?;
                Definition::Prior {
                    prior,
                    span: self.span_from(open),
                }
            }
            TokenKind::Semicolon | TokenKind::Eof => Definition::Default,
            _ if self.is_statement_start() => Definition::Default,
            _ => return Err(self.error_here("`=`, `{` or a new declaration")),
        };
        if self.peek().kind == TokenKind::Semicolon {
            self.bump();
        }
        Ok(VariableDecl {
            name,
            scale,
            definition,
            span: self.span_from(start),
        })
    }

    fn prior(&mut self) -> PResult<PriorSpec> {
        if self.is_keyword("jeffreys") {
            self.bump();
            return Ok(PriorSpec::Jeffreys);
        }
        if self.is_keyword("normal") {
            self.bump();
            self.punct(TokenKind::LParen)?;
            let mean = self.real("a prior mean")?;
            self.punct(TokenKind::Comma)?;
            let variance = self.real("a prior variance")?;
            self.punct(TokenKind::RParen)?;
            return Ok(PriorSpec::Normal { mean, variance });
        }
        Err(self.error_here("`jeffreys` or `normal`"))
    }

    fn expr(&mut self) -> PResult<Expr> {
        let start = self.peek().offset;
        if self.is_keyword("chain") {
            self.bump();
            self.punct(TokenKind::LParen)?;
            let a = self.ident("an argument")?;
            self.punct(TokenKind::Comma)?;
            let b = self.ident("an argument")?;
            self.punct(TokenKind::Comma)?;
            let c = self.ident("an argument")?;
            self.punct(TokenKind::RParen)?;
            return Ok(Expr {
                kind: ExprKind::Chain(a, b, c),
                span: self.span_from(start),
            });
        }
        let a = self.ident("`chain(...)` or `a - b`")?;
        self.punct(TokenKind::Minus)?;
        let b = self.ident("a variable name")?;
        Ok(Expr {
            kind: ExprKind::Minus(a, b),
            span: self.span_from(start),
        })
    }

    fn study(&mut self) -> PResult<StudyDecl> {
        let start = self.keyword("study")?.offset;
        let name = self.ident("a study name")?;
        self.punct(TokenKind::LBrace)?;
        self.keyword("on")?;
        let target = self.ident("a variable name")?;
        self.punct(TokenKind::Semicolon)?;
        self.keyword("successes")?;
        let successes = self.integer("a success count")?;
        self.punct(TokenKind::Semicolon)?;
        self.keyword("trials")?;
        let trials = self.integer("a trial count")?;
        self.punct(TokenKind::Semicolon)?;
        self.punct(TokenKind::RBrace)?;
        Ok(StudyDecl {
            name,
            target,
            successes,
            trials,
            span: self.span_from(start),
        })
    }

    fn option(&mut self) -> PResult<OptionDecl> {
        let start = self.keyword("option")?.offset;
        if self.is_keyword("zero_cell") {
            self.bump();
            self.punct(TokenKind::Equals)?;
            let policy = if self.is_keyword("half") {
                self.bump();
                ZeroCellPolicy::HALF
            } else if self.is_keyword("error") {
                self.bump();
                ZeroCellPolicy::Error
            } else if matches!(self.peek().kind, TokenKind::Number(_) | TokenKind::Minus) {
                ZeroCellPolicy::PseudoCount(self.real("a pseudo-count")?)
            } else {
                return Err(self.error_here("`half`, `error` or a pseudo-count"));
            };
            self.punct(TokenKind::Semicolon)?;
            return Ok(OptionDecl::ZeroCell {
                policy,
                span: self.span_from(start),
            });
        }
        if self.is_keyword("report") {
            self.bump();
            self.punct(TokenKind::Equals)?;
            let mut targets = vec![self.ident("a variable name")?];
            while self.peek().kind == TokenKind::Comma {
                self.bump();
                targets.push(self.ident("a variable name")?);
            }
            self.punct(TokenKind::Semicolon)?;
            return Ok(OptionDecl::Report {
                targets,
                span: self.span_from(start),
            });
        }
        Err(self.error_here("`zero_cell` or `report`"))
    }
}

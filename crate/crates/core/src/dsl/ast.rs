use crate::transforms::{PriorSpec, Scale, ZeroCellPolicy};

use super::SourceSpan;

/// A parsed `.cid` model: declarations in source order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ModelSpec {
    pub items: Vec<Item>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Item {
    Variable(VariableDecl),
    Study(StudyDecl),
    Option(OptionDecl),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Ident {
    pub name: String,
    pub span: SourceSpan,
}

impl Ident {
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            span: SourceSpan::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct VariableDecl {
    pub name: Ident,
    pub scale: Scale,
    pub definition: Definition,
    pub span: SourceSpan,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Definition {
    /// No prior or expression: Jeffreys.
    Default,
    Prior {
        prior: PriorSpec,
        span: SourceSpan,
    },
    Expr(Expr),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Expr {
    pub kind: ExprKind,
    pub span: SourceSpan,
}

#[derive(Clone, Debug, PartialEq)]
pub enum ExprKind {
    /// `chain(mort_given_rep, p_rep, mort_given_norep)`
    Chain(Ident, Ident, Ident),
    /// `a - b`
    Minus(Ident, Ident),
}

#[derive(Clone, Debug, PartialEq)]
pub struct StudyDecl {
    pub name: Ident,
    pub target: Ident,
    pub successes: u64,
    pub trials: u64,
    pub span: SourceSpan,
}

#[derive(Clone, Debug, PartialEq)]
pub enum OptionDecl {
    ZeroCell {
        policy: ZeroCellPolicy,
        span: SourceSpan,
    },
    Report {
        targets: Vec<Ident>,
        span: SourceSpan,
    },
}

impl OptionDecl {
    pub fn span(&self) -> SourceSpan {
        match self {
            OptionDecl::ZeroCell { span, .. } | OptionDecl::Report { span, .. } => *span,
        }
    }
}

impl ModelSpec {
    pub fn variables(&self) -> impl Iterator<Item = &VariableDecl> {
        self.items.iter().filter_map(|i| match i {
            Item::Variable(v) => Some(v),
            _ => None,
        })
    }

    pub fn studies(&self) -> impl Iterator<Item = &StudyDecl> {
        self.items.iter().filter_map(|i| match i {
            Item::Study(s) => Some(s),
            _ => None,
        })
    }

    pub fn options(&self) -> impl Iterator<Item = &OptionDecl> {
        self.items.iter().filter_map(|i| match i {
            Item::Option(o) => Some(o),
            _ => None,
        })
    }
}

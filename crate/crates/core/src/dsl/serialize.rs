use std::fmt::Write;

use crate::transforms::{PriorSpec, ZeroCellPolicy};

use super::ast::{Definition, ExprKind, Item, ModelSpec, OptionDecl};

/// Renders `spec` in canonical form, one declaration per line. Reals use
/// the shortest text that reads back to the same `f64`.
pub fn serialize(spec: &ModelSpec) -> String {
    let mut out = String::new();
    for item in &spec.items {
        match item {
            Item::Variable(v) => {
                write!(out, "variable {} : {}", v.name.name, v.scale.keyword()).unwrap();
                match &v.definition {
                    Definition::Default => {}
                    Definition::Prior { prior, .. } => match prior {
                        PriorSpec::Jeffreys => out.push_str(" { prior jeffreys }"),
                        PriorSpec::Normal { mean, variance } => {
                            write!(out, " {{ prior normal({mean}, {variance}) }}").unwrap()
                        }
                    },
                    Definition::Expr(e) => match &e.kind {
                        ExprKind::Chain(a, b, c) => {
                            write!(out, " = chain({}, {}, {})", a.name, b.name, c.name).unwrap()
                        }
                        ExprKind::Minus(a, b) => write!(out, " = {} - {}", a.name, b.name).unwrap(),
                    },
                }
                out.push('\n');
            }
            Item::Study(s) => writeln!(
                out,
                "study {} {{ on {}; successes {}; trials {}; }}",
                s.name.name, s.target.name, s.successes, s.trials
            )
            .unwrap(),
            Item::Option(OptionDecl::ZeroCell { policy, .. }) => {
                out.push_str("option zero_cell = ");
                match policy {
                    p if *p == ZeroCellPolicy::HALF => out.push_str("half"),
                    ZeroCellPolicy::Error => out.push_str("error"),
                    ZeroCellPolicy::PseudoCount(c) => write!(out, "{c}").unwrap(),
                }
                out.push_str(";\n");
            }
            Item::Option(OptionDecl::Report { targets, .. }) => {
                let names: Vec<&str> = targets.iter().map(|t| t.name.as_str()).collect();
                writeln!(out, "option report = {};", names.join(", ")).unwrap();
            }
        }
    }
    out
}

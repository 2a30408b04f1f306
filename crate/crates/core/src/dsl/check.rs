use std::collections::HashMap;

use crate::functions::FunctionKind;
use crate::gaussian::VariableId;
use crate::model::{CompiledModel, ModelVariable, Role};
use crate::transforms::{
    prior_to_node, summarize_counts, PriorSpec, Scale, StudyArm, ZeroCellPolicy,
};

use super::ast::{Definition, Expr, ExprKind, Ident, ModelSpec, OptionDecl, VariableDecl};
use super::{Diagnostic, DiagnosticKind, SourceSpan};

fn semantic(span: SourceSpan, message: impl Into<String>) -> Diagnostic {
    Diagnostic::new(DiagnosticKind::Semantic, span, message)
}

struct Scope<'a> {
    by_name: HashMap<&'a str, (usize, &'a VariableDecl)>,
}

impl<'a> Scope<'a> {
    fn resolve(
        &self,
        id: &Ident,
        diags: &mut Vec<Diagnostic>,
    ) -> Option<(usize, &'a VariableDecl)> {
        let found = self.by_name.get(id.name.as_str()).copied();
        if found.is_none() {
            diags.push(semantic(id.span, format!("unknown variable `{}`", id.name)));
        }
        found
    }
}

fn expr_args(e: &Expr) -> Vec<&Ident> {
    match &e.kind {
        ExprKind::Chain(a, b, c) => vec![a, b, c],
        ExprKind::Minus(a, b) => vec![a, b],
    }
}

/// The function an expression denotes given its declared output scale.
/// Errors are reported at the expression's span.
fn function_kind(
    decl: &VariableDecl,
    expr: &Expr,
    arg_ids: &[VariableId],
    arg_scales: &[Scale],
) -> Result<FunctionKind, String> {
    let all = |s: Scale| arg_scales.iter().all(|&a| a == s);
    let listed = || {
        arg_ids
            .iter()
            .zip(arg_scales)
            .map(|(i, s)| format!("`{}` is {s}", i.name))
            .collect::<Vec<_>>()
            .join(", ")
    };
    match &expr.kind {
        ExprKind::Chain(..) => {
            if decl.scale != Scale::Probability {
                return Err(format!(
                    "chain(...) yields a probability but `{}` is declared {}",
                    decl.name.name, decl.scale
                ));
            }
            if !all(Scale::Probability) {
                return Err(format!(
                    "chain(...) needs probability arguments; {}",
                    listed()
                ));
            }
            Ok(FunctionKind::Chain {
                mort_given_rep: arg_ids[0].clone(),
                p_rep: arg_ids[1].clone(),
                mort_given_norep: arg_ids[2].clone(),
            })
        }
        ExprKind::Minus(..) => match decl.scale {
            Scale::Difference => {
                if !all(Scale::Probability) {
                    return Err(format!(
                        "a difference-scale `a - b` needs probability arguments; {}",
                        listed()
                    ));
                }
                Ok(FunctionKind::Difference {
                    minuend: arg_ids[0].clone(),
                    subtrahend: arg_ids[1].clone(),
                })
            }
            Scale::Real => {
                if arg_scales[0] != arg_scales[1] {
                    return Err(format!(
                        "a real-scale `a - b` needs arguments on one scale; {}",
                        listed()
                    ));
                }
                Ok(FunctionKind::WorkingDifference {
                    minuend: arg_ids[0].clone(),
                    subtrahend: arg_ids[1].clone(),
                    scale: arg_scales[0],
                })
            }
            Scale::Probability => Err(format!(
                "`a - b` cannot define the probability `{}`; declare it difference or real",
                decl.name.name
            )),
        },
    }
}

/// Everything the checker learns, shared with [`compile`].
struct Resolved {
    variables: Vec<ModelVariable>,
    studies: Vec<(String, StudyArm)>,
    zero_cell: ZeroCellPolicy,
    report: Vec<VariableId>,
}

fn resolve(spec: &ModelSpec) -> (Resolved, Vec<Diagnostic>) {
    let mut diags = Vec::new();

    let mut scope = Scope {
        by_name: HashMap::new(),
    };
    let decls: Vec<&VariableDecl> = spec.variables().collect();
    for (i, d) in decls.iter().enumerate() {
        if d.name.name.contains(':') {
            diags.push(semantic(d.name.span, "identifiers cannot contain `:`"));
        }
        if scope.by_name.contains_key(d.name.name.as_str()) {
            diags.push(semantic(
                d.name.span,
                format!("variable `{}` is declared more than once", d.name.name),
            ));
        } else {
            scope.by_name.insert(d.name.name.as_str(), (i, *d));
        }
    }
    let id_of = |i: usize| VariableId::new(i, decls[i].name.name.clone());

    // Options first: the zero-cell policy decides which study arms are valid.
    let mut zero_cell = None;
    let mut report: Option<Vec<VariableId>> = None;
    for opt in spec.options() {
        match opt {
            OptionDecl::ZeroCell { policy, span } => {
                if zero_cell.is_some() {
                    diags.push(semantic(*span, "option `zero_cell` is set more than once"));
                    continue;
                }
                if let ZeroCellPolicy::PseudoCount(c) = policy {
                    if !(*c > 0.0) || !c.is_finite() {
                        diags.push(semantic(
                            *span,
                            format!("pseudo-count must be positive, got {c}"),
                        ));
                    }
                }
                zero_cell = Some(*policy);
            }
            OptionDecl::Report { targets, span } => {
                if report.is_some() {
                    diags.push(semantic(*span, "option `report` is set more than once"));
                    continue;
                }
                let mut ids: Vec<VariableId> = Vec::new();
                for t in targets {
                    if let Some((i, _)) = scope.resolve(t, &mut diags) {
                        if ids.iter().any(|x| x.index == i) {
                            diags.push(semantic(t.span, format!("`{}` is reported twice", t.name)));
                        } else {
                            ids.push(id_of(i));
                        }
                    }
                }
                report = Some(ids);
            }
        }
    }
    let zero_cell = zero_cell.unwrap_or_default();

    let mut variables = Vec::with_capacity(decls.len());
    let mut deps: Vec<Vec<usize>> = vec![Vec::new(); decls.len()];
    for (i, d) in decls.iter().enumerate() {
        let role = match &d.definition {
            Definition::Default => Some(Role::Prior(PriorSpec::Jeffreys)),
            Definition::Prior { prior, span } => {
                if let Err(e) = prior_to_node(*prior) {
                    diags.push(semantic(*span, e.to_string()));
                }
                Some(Role::Prior(*prior))
            }
            Definition::Expr(expr) => {
                let args = expr_args(expr);
                let resolved: Vec<_> = args.iter().map(|a| scope.resolve(a, &mut diags)).collect();
                if resolved.iter().all(Option::is_some) {
                    let resolved: Vec<_> = resolved.into_iter().flatten().collect();
                    let ids: Vec<VariableId> = resolved.iter().map(|(k, _)| id_of(*k)).collect();
                    let scales: Vec<Scale> = resolved.iter().map(|(_, v)| v.scale).collect();
                    deps[i] = resolved.iter().map(|(k, _)| *k).collect();
                    match function_kind(d, expr, &ids, &scales) {
                        Ok(f) => {
                            let mut seen: Vec<usize> = Vec::new();
                            for (a, (k, _)) in args.iter().zip(&resolved) {
                                if seen.contains(k) {
                                    diags.push(semantic(
                                        a.span,
                                        format!("`{}` appears twice in one expression", a.name),
                                    ));
                                }
                                seen.push(*k);
                            }
                            Some(Role::Function(f))
                        }
                        Err(msg) => {
                            diags.push(semantic(expr.span, msg));
                            None
                        }
                    }
                } else {
                    None
                }
            }
        };
        if let Some(role) = role {
            variables.push(ModelVariable {
                id: id_of(i),
                scale: d.scale,
                role,
            });
        }
    }
    if let Some((k, span)) = find_cycle(&decls, &deps) {
        let expr_span = match &decls[k].definition {
            Definition::Expr(e) => e.span,
            _ => span,
        };
        diags.push(semantic(
            expr_span,
            format!(
                "`{}` depends on itself through function references",
                decls[k].name.name
            ),
        ));
    }

    let mut studies = Vec::new();
    let mut study_names: HashMap<&str, ()> = HashMap::new();
    for s in spec.studies() {
        if s.name.name.contains(':') {
            diags.push(semantic(s.name.span, "identifiers cannot contain `:`"));
        }
        if study_names.insert(s.name.name.as_str(), ()).is_some() {
            diags.push(semantic(
                s.name.span,
                format!("study `{}` is declared more than once", s.name.name),
            ));
        }
        let Some((k, target)) = scope.resolve(&s.target, &mut diags) else {
            continue;
        };
        if target.scale != Scale::Probability {
            diags.push(semantic(
                s.target.span,
                format!(
                    "study `{}` observes `{}`, a {} variable; evidence needs a probability",
                    s.name.name, s.target.name, target.scale
                ),
            ));
            continue;
        }
        if let Err(e) = summarize_counts(s.successes, s.trials, zero_cell) {
            diags.push(semantic(s.span, format!("study `{}`: {e}", s.name.name)));
            continue;
        }
        studies.push((
            s.name.name.clone(),
            StudyArm {
                successes: s.successes,
                trials: s.trials,
                target: id_of(k),
            },
        ));
    }

    (
        Resolved {
            variables,
            studies,
            zero_cell,
            report: report.unwrap_or_default(),
        },
        diags,
    )
}

/// Index of a declaration on a dependency cycle, if any.
fn find_cycle(decls: &[&VariableDecl], deps: &[Vec<usize>]) -> Option<(usize, SourceSpan)> {
    let n = deps.len();
    let mut indegree: Vec<usize> = vec![0; n];
    let mut users: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (j, ds) in deps.iter().enumerate() {
        for &k in ds {
            indegree[j] += 1;
            users[k].push(j);
        }
    }
    let mut stack: Vec<usize> = (0..n).filter(|&j| indegree[j] == 0).collect();
    let mut done = vec![false; n];
    while let Some(k) = stack.pop() {
        done[k] = true;
        for &j in &users[k] {
            indegree[j] -= 1;
            if indegree[j] == 0 {
                stack.push(j);
            }
        }
    }
    // Anything left is on a cycle or downstream of one; walking unfinished
    // dependencies from it must revisit a node, and that node is on a cycle.
    let start = (0..n).find(|&j| !done[j])?;
    let mut visited = vec![false; n];
    let mut cur = start;
    while !visited[cur] {
        visited[cur] = true;
        cur = *deps[cur]
            .iter()
            .find(|&&k| !done[k])
            .expect("unfinished dependency");
    }
    Some((cur, decls[cur].span))
}

/// Semantic diagnostics for an already parsed model.
pub(crate) fn check(spec: &ModelSpec) -> Vec<Diagnostic> {
    let (resolved, mut diags) = resolve(spec);
    if diags.is_empty() {
        if let Err(e) = CompiledModel::new(
            resolved.variables,
            resolved.studies,
            resolved.zero_cell,
            resolved.report,
        ) {
            diags.push(semantic(SourceSpan::default(), e.to_string()));
        }
    }
    diags
}

/// Resolves names and summarises studies into a [`CompiledModel`].
pub fn compile(spec: &ModelSpec) -> Result<CompiledModel, Vec<Diagnostic>> {
    let (resolved, diags) = resolve(spec);
    if !diags.is_empty() {
        return Err(diags);
    }
    CompiledModel::new(
        resolved.variables,
        resolved.studies,
        resolved.zero_cell,
        resolved.report,
    )
    .map_err(|e| vec![semantic(SourceSpan::default(), e.to_string())])
}

use super::{validate, Diagram, GaussNode, GaussianError, VariableId};

/// Reverses the arc `from → to`, leaving the joint distribution unchanged.
///
/// Afterwards both nodes condition on the union of their former parents,
/// and `from` additionally conditions on `to`. Requires that `from → to` is
/// the only directed path between them.
pub fn reverse_arc(
    d: &Diagram,
    from: &VariableId,
    to: &VariableId,
) -> Result<Diagram, GaussianError> {
    let diags = validate(d);
    if !diags.is_empty() {
        return Err(GaussianError::InvalidDiagram(diags));
    }
    let pi = d
        .position(from)
        .ok_or_else(|| GaussianError::UnknownVariable(from.name.clone()))?;
    let pj = d
        .position(to)
        .ok_or_else(|| GaussianError::UnknownVariable(to.name.clone()))?;
    let (ni, nj) = (&d.nodes()[pi], &d.nodes()[pj]);
    if !nj.parents.iter().any(|p| p.index == from.index) {
        return Err(GaussianError::Reversal(format!(
            "no arc `{}` -> `{}`",
            from.name, to.name
        )));
    }
    if has_indirect_path(d, pi, pj) {
        return Err(GaussianError::Reversal(format!(
            "another directed path leads from `{}` to `{}`",
            from.name, to.name
        )));
    }

    let b = nj.coeff(from);
    let (vi, vj) = (ni.cond_var, nj.cond_var);

    // Shared parent set, `to`'s existing parents first.
    let mut shared: Vec<VariableId> = nj
        .parents
        .iter()
        .filter(|p| p.index != from.index)
        .cloned()
        .collect();
    for p in &ni.parents {
        if !shared.iter().any(|q| q.index == p.index) {
            shared.push(p.clone());
        }
    }

    let new_to_coeffs: Vec<f64> = shared
        .iter()
        .map(|k| nj.coeff(k) + b * ni.coeff(k))
        .collect();
    let new_vj = vj + b * b * vi;

    let (back, new_vi) = if new_vj > 0.0 {
        (b * vi / new_vj, vi * vj / new_vj)
    } else {
        (0.0, vi)
    };
    let mut from_parents = shared.clone();
    from_parents.push(to.clone());
    let mut from_coeffs: Vec<f64> = shared
        .iter()
        .zip(&new_to_coeffs)
        .map(|(k, bk)| ni.coeff(k) - back * bk)
        .collect();
    from_coeffs.push(back);

    let new_from = GaussNode {
        id: ni.id.clone(),
        parents: from_parents,
        cond_mean: ni.cond_mean,
        cond_var: new_vi.max(0.0),
        coeffs: from_coeffs,
    };
    let new_to = GaussNode {
        id: nj.id.clone(),
        parents: shared,
        cond_mean: nj.cond_mean,
        cond_var: new_vj,
        coeffs: new_to_coeffs,
    };
    let mut out = d.clone();
    out.nodes_mut()[pi] = new_from;
    out.nodes_mut()[pj] = new_to;
    Ok(out)
}

/// Whether `to` is reachable from `from` other than through the direct arc.
fn has_indirect_path(d: &Diagram, from: usize, to: usize) -> bool {
    let nodes = d.nodes();
    let children = |p: usize| {
        let idx = nodes[p].id.index;
        (0..nodes.len()).filter(move |&c| nodes[c].parents.iter().any(|q| q.index == idx))
    };
    let mut stack: Vec<usize> = children(from).filter(|&c| c != to).collect();
    let mut seen = vec![false; nodes.len()];
    while let Some(p) = stack.pop() {
        if p == to {
            return true;
        }
        if std::mem::replace(&mut seen[p], true) {
            continue;
        }
        stack.extend(children(p));
    }
    false
}

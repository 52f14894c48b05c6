//! Arc-length redistribution of discrete paths in the energy norm `‖·‖_K`.

use alloc::vec::Vec;

use crate::{Mesh, StateVector};

/// Cumulative energy-norm arc length along `nodes`, starting at 0.
pub(crate) fn arc_lengths(mesh: &Mesh, nodes: &[StateVector]) -> Vec<f64> {
    let mut out = Vec::with_capacity(nodes.len());
    let mut s = 0.0;
    out.push(0.0);
    for pair in nodes.windows(2) {
        s += mesh.energy_norm(&pair[1].sub(&pair[0]));
        out.push(s);
    }
    out
}

/// `count ≥ 2` points equally spaced in arc length along the polyline through
/// `nodes`, keeping both end nodes. Returns `None` when the polyline has zero length.
pub(crate) fn redistribute(mesh: &Mesh, nodes: &[StateVector], count: usize) -> Option<Vec<StateVector>> {
    debug_assert!(count >= 2 && nodes.len() >= 2);
    let s = arc_lengths(mesh, nodes);
    let total = *s.last()?;
    if !(total > 0.0) || !total.is_finite() {
        return None;
    }
    let mut out = Vec::with_capacity(count);
    let mut seg = 0;
    for j in 0..count {
        if j == 0 {
            out.push(nodes[0].clone());
            continue;
        }
        if j == count - 1 {
            out.push(nodes[nodes.len() - 1].clone());
            continue;
        }
        let target = total * j as f64 / (count - 1) as f64;
        while seg + 1 < nodes.len() - 1 && s[seg + 1] < target {
            seg += 1;
        }
        let len = s[seg + 1] - s[seg];
        let w = if len > 0.0 { ((target - s[seg]) / len).clamp(0.0, 1.0) } else { 0.0 };
        out.push(StateVector::combine(1.0 - w, &nodes[seg], w, &nodes[seg + 1]));
    }
    Some(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn straight_line_is_evenly_spaced() {
        let mesh = Mesh::interval(1.0, 8).unwrap();
        let b = crate::starts::bump(&mesh);
        let unit = StateVector { u: b.clone(), v: b };
        let nodes: Vec<StateVector> = [0.0, 0.1, 0.15, 0.9, 1.0].iter().map(|&t| unit.scaled(t)).collect();
        let even = redistribute(&mesh, &nodes, 5).unwrap();
        for (j, z) in even.iter().enumerate() {
            assert!(z.max_abs_diff(&unit.scaled(j as f64 / 4.0)) < 1e-12);
        }
        let flat = [unit.clone(), unit.clone()];
        assert!(redistribute(&mesh, &flat, 3).is_none());
    }
}

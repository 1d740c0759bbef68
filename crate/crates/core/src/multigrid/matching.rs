use crate::linalg::C64;
use crate::{Error, Result};

/// Candidates farther than this fraction of `|previous|` never match.
pub const MATCH_RADIUS: f64 = 0.5;

const CONJ_TOL: f64 = 1e-6;

/// For every previous eigenvalue picks a distinct candidate: greedy nearest
/// neighbour, ties broken by smaller `|lambda|`, then smaller imaginary
/// part. Conjugate pairs among the previous values must map to conjugate
/// pairs.
pub fn match_pairs(previous: &[C64], candidates: &[C64]) -> Result<Vec<usize>> {
    if candidates.is_empty() {
        return Err(Error::Matching("no candidate eigenvalues".into()));
    }
    let mut edges: Vec<(f64, usize, usize)> = Vec::new();
    for (i, p) in previous.iter().enumerate() {
        for (j, c) in candidates.iter().enumerate() {
            let d = (p - c).norm();
            if d <= MATCH_RADIUS * p.norm() {
                edges.push((d, i, j));
            }
        }
    }
    edges.sort_by(|a, b| {
        let (ca, cb) = (candidates[a.2], candidates[b.2]);
        a.0.partial_cmp(&b.0)
            .unwrap()
            .then(ca.norm().partial_cmp(&cb.norm()).unwrap())
            .then(ca.im.partial_cmp(&cb.im).unwrap())
            .then(a.1.cmp(&b.1))
    });
    let mut pick = vec![usize::MAX; previous.len()];
    let mut used = vec![false; candidates.len()];
    for (_, i, j) in edges {
        if pick[i] == usize::MAX && !used[j] {
            pick[i] = j;
            used[j] = true;
        }
    }
    if let Some(i) = pick.iter().position(|&p| p == usize::MAX) {
        return Err(Error::Matching(format!(
            "no candidate within {MATCH_RADIUS}|lambda| of {}",
            previous[i]
        )));
    }
    for (i, a) in previous.iter().enumerate() {
        if a.im.abs() <= CONJ_TOL * a.norm() {
            continue;
        }
        for (k, b) in previous.iter().enumerate() {
            if k != i && (b - a.conj()).norm() <= CONJ_TOL * a.norm() {
                let (ci, ck) = (candidates[pick[i]], candidates[pick[k]]);
                if (ck - ci.conj()).norm() > CONJ_TOL * ci.norm() {
                    return Err(Error::Matching(format!(
                        "conjugate pair {a} tracked to non-conjugate values {ci}, {ck}"
                    )));
                }
            }
        }
    }
    Ok(pick)
}
